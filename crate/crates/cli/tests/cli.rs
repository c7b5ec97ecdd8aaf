use std::process::{Command, Output};

fn odds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odds"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = odds(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows split on `sep`, header dropped.
fn rows(text: &str, sep: char) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(sep).map(str::to_string).collect())
        .collect()
}

fn col(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn linear_table_rows() {
    let text = stdout(&["table-fig1", "--n-max", "4"]);
    assert!(text.starts_with("x/n,q,s\n"));
    // header plus 2 + 3 + 4 + 5 fractions
    assert_eq!(text.lines().count(), 15);
    let r = rows(&text, ',');
    assert_eq!(r.len(), 14);
    assert!(r.contains(&vec!["2/4".into(), "0.656".into(), "1.313".into()]));
}

#[test]
fn log_table_rows() {
    let r = rows(&stdout(&["table-fig3"]), ',');
    assert!(r.contains(&vec!["0/4".into(), "0.179".into(), "1.073".into()]));
    let small = rows(&stdout(&["table-fig3", "--n-max", "1"]), ',');
    assert_eq!(small.len(), 2);
    assert_eq!(small[0][2], small[1][2]);
}

#[test]
fn gaussian_curve_shape() {
    let r = rows(
        &stdout(&["curve-gaussian", "--z-min", "-1", "--z-max", "2.5", "--z-step", "0.25"]),
        ',',
    );
    let (z, q, s) = (col(&r, 0), col(&r, 1), col(&r, 2));
    assert!(q.windows(2).all(|w| w[1] >= w[0]), "q not monotone: {q:?}");
    let i0 = z.iter().position(|v| *v == 0.0).unwrap();
    assert!((q[i0] - s[i0] / 2.0).abs() < 1e-6);
    let first_above = z[q.iter().position(|v| *v > 1.0).expect("q exceeds one")];
    assert!(first_above > 0.5 && first_above <= 2.0, "crossing at {first_above}");
    let phi = col(&r, 3);
    assert!((phi[i0] - 0.5).abs() < 1e-15);
}

#[test]
fn seeded_commands_are_byte_identical() {
    let args = [
        "odds-generic",
        "--x",
        "3",
        "--n",
        "4",
        "--mc-samples",
        "20000",
        "--seed",
        "11",
    ];
    assert_eq!(odds(&args).stdout, odds(&args).stdout);
    let sim = [
        "simulate", "--q", "0.6,0.6", "--pi", "0.5,0.5", "--rounds", "500", "--seed", "3",
    ];
    assert_eq!(odds(&sim).stdout, odds(&sim).stdout);
    let other = [
        "simulate", "--q", "0.6,0.6", "--pi", "0.5,0.5", "--rounds", "500", "--seed", "4",
    ];
    assert_ne!(odds(&sim).stdout, odds(&other).stdout);
}

#[test]
fn csv_and_tsv_round_trip() {
    let csv = stdout(&["odds-freq", "--x", "1", "--n", "3"]);
    let tsv = stdout(&["--format", "tsv", "odds-freq", "--x", "1", "--n", "3"]);
    let (a, b) = (rows(&csv, ','), rows(&tsv, '\t'));
    assert_eq!(a, b);
    for cell in &a[0] {
        let v: f64 = cell.parse().unwrap();
        assert_eq!(&v.to_string(), cell, "lossy cell");
    }
    assert_eq!(
        csv.lines().next().unwrap().replace(',', "\t"),
        tsv.lines().next().unwrap()
    );
}

#[test]
fn decision_commands() {
    let h = rows(
        &stdout(&[
            "hedge",
            "--r-event",
            "0.1",
            "--r-complement",
            "-0.05",
            "--q",
            "0.6",
            "--q-prime",
            "0.5",
        ]),
        ',',
    );
    let (l, lp, g) = (
        h[0][0].parse::<f64>().unwrap(),
        h[0][1].parse::<f64>().unwrap(),
        h[0][2].parse::<f64>().unwrap(),
    );
    let on_event = 0.1 + l * (1.0 / 0.6 - 1.0) - lp;
    let on_complement = -0.05 - l + lp * (1.0 / 0.5 - 1.0);
    assert!((on_event - g).abs() < 1e-12 && (on_complement - g).abs() < 1e-12);

    let m = rows(
        &stdout(&[
            "mitigate",
            "--loss",
            "10",
            "--cost",
            "2",
            "--mitigated-loss",
            "1",
            "--q",
            "0.3",
            "--q-prime",
            "0.8",
        ]),
        ',',
    );
    assert_eq!(m[0][0], "true");
}

#[test]
fn exit_codes() {
    assert_eq!(odds(&["odds-freq", "--x", "5", "--n", "2"]).status.code(), Some(2));
    assert_eq!(odds(&["odds-freq", "--x", "1"]).status.code(), Some(2));
    assert_eq!(
        odds(&[
            "hedge",
            "--r-event",
            "0",
            "--r-complement",
            "0",
            "--q",
            "0",
            "--q-prime",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    let starved = odds(&["odds-gaussian", "--z", "1", "--max-evals", "50"]);
    assert_eq!(starved.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&starved.stderr).contains("numeric"));
}

#[test]
fn small_campaign_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("campaign.toml");
    std::fs::write(&cfg, "bias_fit_days = 40\ncampaign_days = 3\nlead_days = [1, 2]\n").unwrap();
    let out = dir.path().join("out");
    let text = stdout(&[
        "--threads",
        "1",
        "campaign",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(text.lines().count(), 3);
    let table = std::fs::read_to_string(out.join("payout_table.csv")).unwrap();
    assert_eq!(table, text);
    let series = std::fs::read_to_string(out.join("payout_series.csv")).unwrap();
    // 3 days x 2 leads x 4 forecasters x 2 utilities
    assert_eq!(series.lines().count(), 1 + 48);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(
        odds(&["campaign", "--config", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}
