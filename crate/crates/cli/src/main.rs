//! `odds`: command-line front end for odds forecasts, the betting game,
//! the decision calculus and forecasting campaigns.
//!
//! Tabular output goes to stdout as CSV (or TSV with `--format tsv`).
//! Exit status is 0 on success, 2 for invalid input and 3 when a numeric
//! method fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use odds_core::decisions::{hedge_investment, mitigate, InvestmentProblem, MitigationProblem};
use odds_core::game::{simulate_wealth, ClientStrategy};
use odds_core::numerics::{normal_cdf, RngStream};
use odds_core::odds::{
    freq_linear_odds, freq_log_odds, gaussian_linear_odds, gaussian_log_odds, generic_linear_odds, generic_log_odds,
    BernoulliPosterior, DirichletPosterior, GaussianPosterior, OddsAssignment, Prior, SimplexSampler, Utility,
};
use odds_core::pipeline::{run_campaign, CampaignConfig, PayoutRow, Totals};
use odds_core::OddsError;

#[derive(Parser, Debug)]
#[command(
    name = "odds",
    version,
    about = "Non-probabilistic odds forecasts and the betting game that verifies them"
)]
struct Cli {
    /// Output delimiter for tabular results.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Tsv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum UtilityArg {
    Linear,
    Log,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PriorKind {
    /// `σ e^{-σ²/2s²}` (chi distribution with two degrees of freedom).
    Chi2,
    /// Half-normal with scale `s`.
    Halfnormal,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Minimax,
    Informed,
    Kelly,
}

#[derive(Args, Debug)]
struct GaussianArgs {
    /// Prior on the standardized spread.
    #[arg(long, value_enum, default_value_t = PriorKind::Chi2)]
    prior: PriorKind,
    #[arg(long, default_value_t = 1.0)]
    prior_scale: f64,
    /// Number of observations behind the sample mean and spread.
    #[arg(long, default_value_t = 1)]
    n_obs: u64,
    #[arg(long, value_enum, default_value_t = UtilityArg::Linear)]
    utility: UtilityArg,
    /// Optimizer tolerance for linear-utility odds.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Cap on quadrature integrand evaluations per odds computation.
    #[arg(long)]
    max_evals: Option<usize>,
}

impl GaussianArgs {
    fn posterior(&self) -> Result<GaussianPosterior, OddsError> {
        let prior = match self.prior {
            PriorKind::Chi2 => Prior::Chi2Dof {
                scale: self.prior_scale,
            },
            PriorKind::Halfnormal => Prior::HalfNormal {
                scale: self.prior_scale,
            },
        };
        GaussianPosterior::standard(self.n_obs, prior)
    }

    /// `(q, q', converged)` at standardized threshold `z`.
    fn odds_at(&self, post: &GaussianPosterior, z: f64) -> Result<(OddsAssignment, bool), OddsError> {
        let mut quad = post.default_quadrature();
        if let Some(m) = self.max_evals {
            quad.max_evaluations = m;
        }
        match self.utility {
            UtilityArg::Linear => gaussian_linear_odds(post, z, &quad, self.tol).map(|r| (r.odds, r.converged)),
            UtilityArg::Log => gaussian_log_odds(post, z, &quad).map(|r| (r.odds, r.converged)),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frequency-model odds after `x` occurrences in `n` trials.
    OddsFreq {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = UtilityArg::Linear)]
        utility: UtilityArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Gaussian-model odds on "value below threshold" at standardized
    /// threshold `z`.
    OddsGaussian {
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        #[command(flatten)]
        gauss: GaussianArgs,
    },
    /// Monte Carlo odds for a Beta(x+1, n-x+1) or Dirichlet posterior.
    OddsGeneric {
        #[arg(long, requires = "n", conflicts_with = "dirichlet")]
        x: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        /// Dirichlet concentrations, comma separated.
        #[arg(long, value_delimiter = ',')]
        dirichlet: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = UtilityArg::Log)]
        utility: UtilityArg,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Frequency-model linear-utility odds for every x/n with n ≤ n_max.
    TableFig1 {
        #[arg(long, default_value_t = 4)]
        n_max: u64,
    },
    /// Frequency-model log-utility odds for every x/n with n ≤ n_max.
    TableFig3 {
        #[arg(long, default_value_t = 4)]
        n_max: u64,
    },
    /// Gaussian-model odds and total odds over a z grid, with Φ(z).
    CurveGaussian {
        #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
        z_min: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        z_max: f64,
        #[arg(long, default_value_t = 0.25)]
        z_step: f64,
        #[command(flatten)]
        gauss: GaussianArgs,
    },
    /// Play repeated rounds of the betting game and summarise the client's
    /// wealth.
    Simulate {
        /// Odds, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        /// Nature's outcome probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        pi: Vec<f64>,
        /// The client's beliefs for informed and Kelly play (default: `--pi`).
        #[arg(long, value_delimiter = ',')]
        client_pi: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Minimax)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1000)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Hedge an investment with bets at the offered odds.
    Hedge {
        /// Investment return when the event occurs.
        #[arg(long, allow_negative_numbers = true)]
        r_event: f64,
        /// Investment return when it does not.
        #[arg(long, allow_negative_numbers = true)]
        r_complement: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        q_prime: f64,
    },
    /// Choose between mitigating action and bets against a loss.
    Mitigate {
        /// Loss if the event occurs and nothing is done.
        #[arg(long)]
        loss: f64,
        /// Cost of the mitigating action.
        #[arg(long)]
        cost: f64,
        /// Loss if the event occurs after mitigation.
        #[arg(long)]
        mitigated_loss: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        q_prime: f64,
    },
    /// Run a forecasting campaign and print the pay-out table.
    Campaign {
        /// TOML configuration; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of scored days.
        #[arg(long)]
        days: Option<usize>,
        /// Override the capped forecaster's odds floor.
        #[arg(long)]
        cap: Option<f64>,
        /// Directory for `payout_table.csv` and `payout_series.csv`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Rows of text cells with a header.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        let sep = match format {
            Format::Csv => ",",
            Format::Tsv => "\t",
        };
        let mut out = self.header.join(sep);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(sep));
            out.push('\n');
        }
        out
    }
}

fn cells<T: ToString>(values: &[T]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

/// Three decimals, rounding half up after removing optimizer noise below
/// 1e-9 so exact ties such as 1.3125 print as 1.313.
fn fmt3(v: f64) -> String {
    let snapped = (v * 1e9).round() / 1e9;
    format!("{:.3}", (snapped * 1e3).round() / 1e3)
}

fn freq_table(n_max: u64, utility: Utility) -> Result<Table, OddsError> {
    if n_max == 0 {
        return Err(OddsError::Input("n_max must be at least 1".into()));
    }
    let mut t = Table::new(&["x/n", "q", "s"]);
    for n in 1..=n_max {
        for x in 0..=n {
            let post = BernoulliPosterior::new(x, n)?;
            let q = match utility {
                Utility::Linear => freq_linear_odds(&post, 1e-12)?,
                Utility::Logarithmic => freq_log_odds(&post),
            };
            t.push(vec![format!("{x}/{n}"), fmt3(q.q()[0]), fmt3(q.excess())]);
        }
    }
    Ok(t)
}

fn z_grid(z_min: f64, z_max: f64, step: f64) -> Result<Vec<f64>, OddsError> {
    if !(step > 0.0) || !(z_max >= z_min) || !z_min.is_finite() || !z_max.is_finite() {
        return Err(OddsError::Input(format!("bad z grid [{z_min}, {z_max}] step {step}")));
    }
    let count = ((z_max - z_min) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| z_min + k as f64 * step).collect())
}

fn check_convergence(converged: bool, what: &str) -> Result<(), OddsError> {
    if converged {
        Ok(())
    } else {
        Err(OddsError::Numeric(format!(
            "{what} did not reach the requested tolerance"
        )))
    }
}

fn totals_cells(t: &Option<Totals>) -> Vec<String> {
    match t {
        Some(t) => [t.frequency, t.gaussian, t.capped]
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect(),
        None => vec![String::new(); 3],
    }
}

fn payout_table(rows: &[PayoutRow]) -> Table {
    let mut t = Table::new(&[
        "lead_days",
        "linear_frequency",
        "linear_gaussian",
        "linear_capped",
        "log_frequency",
        "log_gaussian",
        "log_capped",
    ]);
    for r in rows {
        let mut row = vec![r.lead_days.to_string()];
        row.extend(totals_cells(&r.linear));
        row.extend(totals_cells(&r.log));
        t.push(row);
    }
    t
}

fn run(cli: Cli) -> Result<Table, OddsError> {
    match cli.command {
        Command::OddsFreq { x, n, utility, tol } => {
            let post = BernoulliPosterior::new(x, n)?;
            let q = match utility {
                UtilityArg::Linear => freq_linear_odds(&post, tol)?,
                UtilityArg::Log => freq_log_odds(&post),
            };
            let mut t = Table::new(&["x", "n", "q", "q_prime", "s"]);
            t.push(vec![
                x.to_string(),
                n.to_string(),
                q.q()[0].to_string(),
                q.q()[1].to_string(),
                q.excess().to_string(),
            ]);
            Ok(t)
        }
        Command::OddsGaussian { z, gauss } => {
            let post = gauss.posterior()?;
            let (q, converged) = gauss.odds_at(&post, z)?;
            check_convergence(converged, "Gaussian odds quadrature")?;
            let mut t = Table::new(&["z", "q", "q_prime", "s"]);
            t.push(cells(&[z, q.q()[0], q.q()[1], q.excess()]));
            Ok(t)
        }
        Command::OddsGeneric {
            x,
            n,
            dirichlet,
            utility,
            mc_samples,
            seed,
            tol,
        } => {
            let sampler: Box<dyn SimplexSampler> = match (x, n, dirichlet) {
                (Some(x), Some(n), None) => Box::new(BernoulliPosterior::new(x, n)?),
                (None, None, Some(a)) => Box::new(DirichletPosterior::new(&a)?),
                _ => return Err(OddsError::Input("give either --x and --n, or --dirichlet".into())),
            };
            let rng = RngStream::new(seed);
            let res = match utility {
                UtilityArg::Linear => generic_linear_odds(sampler.as_ref(), mc_samples, &rng, tol)?,
                UtilityArg::Log => generic_log_odds(sampler.as_ref(), mc_samples, &rng)?,
            };
            let mut t = Table::new(&["event", "q", "std_error", "pi_bar"]);
            for i in 0..res.odds.len() {
                t.push(vec![
                    i.to_string(),
                    res.odds.q()[i].to_string(),
                    res.std_errors[i].to_string(),
                    res.pi_bar[i].to_string(),
                ]);
            }
            Ok(t)
        }
        Command::TableFig1 { n_max } => freq_table(n_max, Utility::Linear),
        Command::TableFig3 { n_max } => freq_table(n_max, Utility::Logarithmic),
        Command::CurveGaussian {
            z_min,
            z_max,
            z_step,
            gauss,
        } => {
            let post = gauss.posterior()?;
            let rows: Vec<Vec<String>> = z_grid(z_min, z_max, z_step)?
                .into_par_iter()
                .map(|z| {
                    let (q, converged) = gauss.odds_at(&post, z)?;
                    check_convergence(converged, "Gaussian odds quadrature")?;
                    Ok(cells(&[z, q.q()[0], q.excess(), normal_cdf(z)]))
                })
                .collect::<Result<_, OddsError>>()?;
            let mut t = Table::new(&["z", "q", "s", "phi"]);
            rows.into_iter().for_each(|r| t.push(r));
            Ok(t)
        }
        Command::Simulate {
            q,
            pi,
            client_pi,
            strategy,
            rounds,
            seed,
        } => {
            let odds = OddsAssignment::generic(q)?;
            let beliefs = client_pi.unwrap_or_else(|| pi.clone());
            let strat = match strategy {
                StrategyArg::Minimax => ClientStrategy::Minimax,
                StrategyArg::Informed => ClientStrategy::InformedLinear { pi_true: beliefs },
                StrategyArg::Kelly => ClientStrategy::Kelly { pi_true: beliefs },
            };
            let traj = simulate_wealth(&odds, &strat, &pi, rounds, &RngStream::new(seed))?;
            let (mean, se) = traj.increment_stats();
            let last = *traj.w.last().expect("trajectory includes W_0");
            let ln_last = traj.ln_w.as_ref().and_then(|l| l.last().copied()).unwrap_or(last.ln());
            let mut t = Table::new(&[
                "utility",
                "rounds",
                "final_wealth",
                "ln_final_wealth",
                "mean_increment",
                "std_error",
            ]);
            t.push(vec![
                traj.utility.to_string(),
                rounds.to_string(),
                last.to_string(),
                ln_last.to_string(),
                mean.to_string(),
                se.to_string(),
            ]);
            Ok(t)
        }
        Command::Hedge {
            r_event,
            r_complement,
            q,
            q_prime,
        } => {
            let h = hedge_investment(&InvestmentProblem::new(
                r_event,
                r_complement,
                OddsAssignment::binary(q, q_prime)?,
            )?)?;
            let mut t = Table::new(&["lambda", "lambda_prime", "guaranteed_return"]);
            t.push(cells(&[h.lambda, h.lambda_prime, h.guaranteed_return]));
            Ok(t)
        }
        Command::Mitigate {
            loss,
            cost,
            mitigated_loss,
            q,
            q_prime,
        } => {
            let m = mitigate(&MitigationProblem::new(
                loss,
                cost,
                mitigated_loss,
                OddsAssignment::binary(q, q_prime)?,
            )?)?;
            let mut t = Table::new(&["take_action", "bet_event", "bet_complement", "fixed_loss"]);
            t.push(vec![
                m.take_action.to_string(),
                m.bets.0.to_string(),
                m.bets.1.to_string(),
                m.fixed_loss.to_string(),
            ]);
            Ok(t)
        }
        Command::Campaign {
            config,
            seed,
            days,
            cap,
            out_dir,
        } => {
            let mut cfg = match &config {
                Some(path) => CampaignConfig::from_path(path)?,
                None => CampaignConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = days {
                cfg.campaign_days = d;
            }
            if let Some(c) = cap {
                cfg.engine.cap = c;
            }
            let result = run_campaign(&cfg, &RngStream::new(cfg.seed))?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                result.write_table_csv(std::fs::File::create(dir.join("payout_table.csv"))?)?;
                result.write_bets_csv(std::fs::File::create(dir.join("payout_series.csv"))?)?;
            }
            Ok(payout_table(&result.rows))
        }
    }
}

fn exit_code(e: &OddsError) -> u8 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let format = cli.format;
    match run(cli) {
        Ok(table) => {
            print!("{}", table.render(format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
