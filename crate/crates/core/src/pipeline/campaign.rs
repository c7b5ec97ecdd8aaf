//! Forecasting campaign: every day each forecaster posts odds on the
//! threshold event at each lead time, the challenge client takes one bet
//! per forecaster, and the station record settles it.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bias::{fit_bias_model_to_series, BiasModel};
use super::data::{epoch_hours, EnsembleForecast, StationSeries};
use super::forecast::{
    challenge_probability, odds_from_members, AdjustedEnsemble, Aggregation, ForecastEvent, ForecasterKind,
    ForecasterSettings,
};
use super::spline::CubicSpline;
use super::synthetic::{generate, SyntheticConfig};
use crate::error::{input, OddsError, Result};
use crate::game::KELLY_BET_FLOOR;
use crate::numerics::RngStream;
use crate::odds::{OddsAssignment, Utility};

/// Station and ensemble CSV files to use instead of synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub station: PathBuf,
    pub ensemble: PathBuf,
}

/// Campaign configuration, normally read from TOML. Every field has a
/// default; `campaign.example.toml` at the repository root lists them all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    /// Launches, counted from the first, whose short-range control runs
    /// fit the bias model. The fit may overlap the scored period.
    pub bias_fit_days: usize,
    pub campaign_days: usize,
    pub lead_days: Vec<u32>,
    pub threshold_offset: f64,
    pub aggregation: Aggregation,
    pub utilities: Vec<Utility>,
    pub engine: ForecasterSettings,
    /// Spread of the challenge client's Gaussian; defaults to the fitted
    /// residual std.
    pub challenger_std: Option<f64>,
    pub synthetic: SyntheticConfig,
    pub data: Option<DataFiles>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: 2005,
            bias_fit_days: 365,
            campaign_days: 183,
            lead_days: (1..=10).collect(),
            threshold_offset: -3.0,
            aggregation: Aggregation::DailyMinFrom18Utc,
            utilities: vec![Utility::Linear, Utility::Logarithmic],
            engine: ForecasterSettings {
                tol: 1e-7,
                quad_tolerance: 1e-7,
                ..ForecasterSettings::default()
            },
            challenger_std: None,
            synthetic: SyntheticConfig::default(),
            data: None,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| OddsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        // relative data paths are relative to the config file
        if let (Some(data), Some(dir)) = (cfg.data.as_mut(), path.parent()) {
            data.station = dir.join(&data.station);
            data.ensemble = dir.join(&data.ensemble);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.campaign_days == 0 {
            return Err(OddsError::Config("campaign_days must be positive".into()));
        }
        if self.lead_days.is_empty() || self.lead_days.contains(&0) {
            return Err(OddsError::Config("lead_days must be non-empty and positive".into()));
        }
        if self.utilities.is_empty() {
            return Err(OddsError::Config("at least one utility is required".into()));
        }
        if !(0.0..1.0).contains(&self.engine.cap) {
            return Err(OddsError::Config(format!(
                "cap must lie in [0, 1), got {}",
                self.engine.cap
            )));
        }
        if let Some(s) = self.challenger_std {
            if !(s > 0.0) {
                return Err(OddsError::Config(format!("challenger_std must be positive, got {s}")));
            }
        }
        if !(self.engine.tol > 0.0 && self.engine.quad_tolerance > 0.0) {
            return Err(OddsError::Config("engine tolerances must be positive".into()));
        }
        self.engine.prior.validate()?;
        self.synthetic.validate()
    }
}

/// Station record plus launches, ordered by launch time.
#[derive(Debug, Clone)]
pub struct CampaignData {
    pub station: StationSeries,
    pub forecasts: Vec<EnsembleForecast>,
}

impl CampaignData {
    pub fn load(files: &DataFiles) -> Result<Self> {
        let station = StationSeries::read_csv(std::fs::File::open(&files.station)?)?;
        let forecasts = EnsembleForecast::read_csv(std::fs::File::open(&files.ensemble)?)?;
        Ok(Self { station, forecasts })
    }
}

/// One settled bet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetRecord {
    pub launch: DateTime<Utc>,
    pub lead_days: u32,
    pub forecaster: ForecasterKind,
    pub utility: Utility,
    pub q: f64,
    pub q_prime: f64,
    /// Challenge client's probability of the event.
    pub challenger: f64,
    pub bet_on_event: bool,
    pub event: bool,
    /// Unit-bet pay-out (linear) or log10 wealth growth (logarithmic).
    pub client_payout: f64,
    pub forecaster_payout: f64,
}

/// Total pay-out to the client per forecaster.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub frequency: f64,
    pub gaussian: f64,
    pub probabilistic: f64,
    pub capped: f64,
}

impl Totals {
    pub fn get(&self, kind: ForecasterKind) -> f64 {
        match kind {
            ForecasterKind::Frequency => self.frequency,
            ForecasterKind::Gaussian => self.gaussian,
            ForecasterKind::Probabilistic => self.probabilistic,
            ForecasterKind::Capped => self.capped,
        }
    }

    fn get_mut(&mut self, kind: ForecasterKind) -> &mut f64 {
        match kind {
            ForecasterKind::Frequency => &mut self.frequency,
            ForecasterKind::Gaussian => &mut self.gaussian,
            ForecasterKind::Probabilistic => &mut self.probabilistic,
            ForecasterKind::Capped => &mut self.capped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoutRow {
    pub lead_days: u32,
    pub linear: Option<Totals>,
    pub log: Option<Totals>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub bias: BiasModel,
    pub challenger_std: f64,
    pub days: usize,
    pub rows: Vec<PayoutRow>,
    pub bets: Vec<BetRecord>,
}

/// Plot transform for pay-outs: linear below one, `1 + log10` above.
pub fn plot_transform(x: f64) -> f64 {
    if x < 1.0 {
        x
    } else {
        1.0 + x.log10()
    }
}

/// The challenge client's bet against odds `q` and its result.
///
/// Linear utility: one unit on the event when `q < c`, otherwise on its
/// complement. Logarithmic utility: the whole wealth split in proportion
/// to `(c, 1 - c)`, with the log10 growth as pay-out.
pub fn settle_bet(q: &OddsAssignment, challenger: f64, utility: Utility, event: bool) -> (bool, f64) {
    let (qe, qc) = (q.q()[0], q.q()[1]);
    let bet_on_event = qe < challenger;
    let payout = match utility {
        Utility::Linear => match (bet_on_event, event) {
            (true, true) => 1.0 / qe - 1.0,
            (false, false) => 1.0 / qc - 1.0,
            _ => -1.0,
        },
        Utility::Logarithmic => {
            let p = challenger.clamp(KELLY_BET_FLOOR, 1.0 - KELLY_BET_FLOOR);
            if event {
                (p / qe).log10()
            } else {
                ((1.0 - p) / qc).log10()
            }
        }
    };
    (bet_on_event, payout)
}

/// Generate or load data according to `config` and run the campaign.
pub fn run_campaign(config: &CampaignConfig, rng: &RngStream) -> Result<CampaignResult> {
    config.validate()?;
    let data = match &config.data {
        Some(files) => CampaignData::load(files)?,
        None => {
            let syn = generate(&config.synthetic, config.bias_fit_days.max(config.campaign_days), rng)?;
            CampaignData {
                station: syn.station,
                forecasts: syn.forecasts,
            }
        }
    };
    run_campaign_on(&data, None, config)
}

/// Short-range control runs of the fitting launches, as one series over
/// [`epoch_hours`].
fn control_analysis_series(training: &[EnsembleForecast]) -> Result<CubicSpline> {
    let mut pts: Vec<(f64, f64)> = training
        .iter()
        .flat_map(|f| {
            let t0 = epoch_hours(f.launch);
            f.lead_hours
                .iter()
                .zip(&f.control)
                .filter(|(l, _)| **l < 24.0)
                .map(move |(l, v)| (t0 + l, *v))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let (t, v) = pts.into_iter().unzip();
    CubicSpline::new(t, v)
}

/// Run on given data, scoring the first `campaign_days` launches. Without
/// a bias model, one is fitted to the first `bias_fit_days` launches.
pub fn run_campaign_on(
    data: &CampaignData,
    bias: Option<BiasModel>,
    config: &CampaignConfig,
) -> Result<CampaignResult> {
    config.validate()?;
    let mut forecasts: Vec<&EnsembleForecast> = data.forecasts.iter().collect();
    forecasts.sort_by_key(|f| f.launch);
    let bias = match bias {
        Some(b) => b,
        None => {
            if forecasts.len() < config.bias_fit_days || config.bias_fit_days == 0 {
                return Err(input(format!(
                    "need {} launches to fit the bias model, have {}",
                    config.bias_fit_days,
                    forecasts.len()
                )));
            }
            let fitting: Vec<EnsembleForecast> =
                forecasts[..config.bias_fit_days].iter().map(|f| (*f).clone()).collect();
            fit_bias_model_to_series(&control_analysis_series(&fitting)?, &data.station)?
        }
    };
    if forecasts.len() < config.campaign_days {
        return Err(input(format!(
            "need {} campaign launches, have {}",
            config.campaign_days,
            forecasts.len()
        )));
    }
    let scored = &forecasts[..config.campaign_days];
    let challenger_std = config.challenger_std.unwrap_or(bias.residual_std());
    let station = data.station.spline()?;

    let per_day: Vec<Vec<BetRecord>> = scored
        .par_iter()
        .map(|f| score_launch(f, &bias, &station, challenger_std, config))
        .collect::<Result<_>>()?;
    let bets: Vec<BetRecord> = per_day.into_iter().flatten().collect();

    let rows = config
        .lead_days
        .iter()
        .map(|&lead| {
            let total = |u: Utility| {
                config.utilities.contains(&u).then(|| {
                    let mut t = Totals::default();
                    for b in bets.iter().filter(|b| b.lead_days == lead && b.utility == u) {
                        *t.get_mut(b.forecaster) += b.client_payout;
                    }
                    t
                })
            };
            PayoutRow {
                lead_days: lead,
                linear: total(Utility::Linear),
                log: total(Utility::Logarithmic),
            }
        })
        .collect();
    Ok(CampaignResult {
        bias,
        challenger_std,
        days: scored.len(),
        rows,
        bets,
    })
}

fn score_launch(
    f: &EnsembleForecast,
    bias: &BiasModel,
    station: &CubicSpline,
    challenger_std: f64,
    config: &CampaignConfig,
) -> Result<Vec<BetRecord>> {
    let adj = AdjustedEnsemble::new(f, bias)?;
    let launch_h = epoch_hours(f.launch);
    let mut out = Vec::new();
    for &lead in &config.lead_days {
        let event = ForecastEvent::new(config.threshold_offset, 24.0 * f64::from(lead), config.aggregation)?;
        let threshold = adj.threshold(&event)?;
        let members = adj.member_values(&event)?;
        let c = challenge_probability(challenger_std, adj.control_value(&event)?, threshold);
        let observed = event
            .window(f.launch)
            .into_iter()
            .try_fold(f64::INFINITY, |acc, t| station.eval(launch_h + t).map(|v| acc.min(v)))
            .map_err(|e| OddsError::Ingest(format!("station record does not cover launch {}: {e}", f.launch)))?;
        let occurred = observed < threshold;
        for kind in ForecasterKind::ALL {
            for &utility in &config.utilities {
                let q = odds_from_members(&members, threshold, kind, utility, &config.engine)?;
                let (bet_on_event, payout) = settle_bet(&q, c, utility, occurred);
                out.push(BetRecord {
                    launch: f.launch,
                    lead_days: lead,
                    forecaster: kind,
                    utility,
                    q: q.q()[0],
                    q_prime: q.q()[1],
                    challenger: c,
                    bet_on_event,
                    event: occurred,
                    client_payout: payout,
                    forecaster_payout: -payout,
                });
            }
        }
    }
    Ok(out)
}

impl CampaignResult {
    /// Client and forecaster ledgers cancel bet by bet and in total.
    pub fn zero_sum_holds(&self) -> bool {
        let per_bet = self.bets.iter().all(|b| b.client_payout == -b.forecaster_payout);
        let totals = ForecasterKind::ALL.iter().all(|k| {
            [Utility::Linear, Utility::Logarithmic].iter().all(|u| {
                let sel = || self.bets.iter().filter(|b| b.forecaster == *k && b.utility == *u);
                let client: f64 = sel().map(|b| b.client_payout).sum();
                let forecaster: f64 = sel().map(|b| b.forecaster_payout).sum();
                client == -forecaster || (client.is_nan() && forecaster.is_nan())
            })
        });
        per_bet && totals
    }

    /// Totals in the layout lead, linear (frequency, Gaussian, capped),
    /// logarithmic (frequency, Gaussian, capped).
    pub fn write_table_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "lead_days",
            "linear_frequency",
            "linear_gaussian",
            "linear_capped",
            "log_frequency",
            "log_gaussian",
            "log_capped",
        ])?;
        let cells = |t: &Option<Totals>| -> Vec<String> {
            match t {
                Some(t) => [t.frequency, t.gaussian, t.capped]
                    .iter()
                    .map(|v| format!("{v:.6}"))
                    .collect(),
                None => vec![String::new(); 3],
            }
        };
        for r in &self.rows {
            let mut rec = vec![r.lead_days.to_string()];
            rec.extend(cells(&r.linear));
            rec.extend(cells(&r.log));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-bet pay-out series for plotting.
    pub fn write_bets_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "launch",
            "lead_days",
            "forecaster",
            "utility",
            "q",
            "q_prime",
            "challenger",
            "bet_on_event",
            "event",
            "client_payout",
            "forecaster_payout",
            "plot_payout",
        ])?;
        for b in &self.bets {
            w.write_record([
                b.launch.to_rfc3339_opts(SecondsFormat::Secs, true),
                b.lead_days.to_string(),
                b.forecaster.name().to_string(),
                b.utility.to_string(),
                b.q.to_string(),
                b.q_prime.to_string(),
                b.challenger.to_string(),
                b.bet_on_event.to_string(),
                b.event.to_string(),
                b.client_payout.to_string(),
                b.forecaster_payout.to_string(),
                plot_transform(b.client_payout).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameMatrix;

    #[test]
    fn plot_transform_shape() {
        assert_eq!(plot_transform(0.5), 0.5);
        assert_eq!(plot_transform(-1.0), -1.0);
        assert_eq!(plot_transform(1.0), 1.0);
        assert!((plot_transform(100.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn own_probabilities_give_zero_expectation() {
        for c in [0.01, 0.2, 0.5, 0.93] {
            let q = OddsAssignment::binary(c, 1.0 - c).unwrap();
            let (on_event, win) = settle_bet(&q, c, Utility::Linear, true);
            let (_, lose) = settle_bet(&q, c, Utility::Linear, false);
            assert!(!on_event);
            let expected = c * win + (1.0 - c) * lose;
            assert!(expected.abs() < 1e-12, "c={c}: {expected}");
        }
    }

    #[test]
    fn settled_bets_match_game_matrix() {
        let q = OddsAssignment::binary(0.3, 0.8).unwrap();
        let g = GameMatrix::new(q.clone()).unwrap();
        // client prefers E at c = 0.9 > q
        assert_eq!(settle_bet(&q, 0.9, Utility::Linear, true), (true, g.entry(0, 0)));
        assert_eq!(settle_bet(&q, 0.9, Utility::Linear, false), (true, g.entry(0, 1)));
        assert_eq!(settle_bet(&q, 0.1, Utility::Linear, false), (false, g.entry(1, 1)));
        let (_, lg) = settle_bet(&q, 0.9, Utility::Logarithmic, true);
        assert!((lg - (0.9f64 / 0.3).log10()).abs() < 1e-15);
    }

    #[test]
    fn config_parsing() {
        let cfg = CampaignConfig::from_toml("campaign_days = 5\nlead_days = [1, 2]\nutilities = [\"linear\"]\n[engine]\ncap = 0.2\n[engine.prior]\nkind = \"half_normal\"\nscale = 2.0\n").unwrap();
        assert_eq!(cfg.campaign_days, 5);
        assert_eq!(cfg.engine.cap, 0.2);
        assert_eq!(cfg.engine.prior, crate::odds::Prior::HalfNormal { scale: 2.0 });
        assert!(CampaignConfig::from_toml("bogus = 1").is_err());
        assert!(CampaignConfig::from_toml("lead_days = [0]").is_err());
    }

    #[test]
    fn small_synthetic_campaign() {
        let cfg = CampaignConfig {
            bias_fit_days: 30,
            campaign_days: 4,
            lead_days: vec![1, 3],
            ..CampaignConfig::default()
        };
        let r = run_campaign(&cfg, &RngStream::new(1)).unwrap();
        assert_eq!(r.bets.len(), 4 * 2 * 4 * 2);
        assert!(r.zero_sum_holds());
        assert_eq!(r.rows.len(), 2);
        let again = run_campaign(&cfg, &RngStream::new(1)).unwrap();
        assert_eq!(r.bets, again.bets);
        let mut table = Vec::new();
        r.write_table_csv(&mut table).unwrap();
        let text = String::from_utf8(table).unwrap();
        assert!(text.starts_with(
            "lead_days,linear_frequency,linear_gaussian,linear_capped,log_frequency,log_gaussian,log_capped\n"
        ));
        assert_eq!(text.lines().count(), 3);
    }
}
