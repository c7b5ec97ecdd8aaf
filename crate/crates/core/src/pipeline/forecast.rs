//! Threshold-event odds from an adjusted ensemble, and the challenge
//! client that bets against them.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::bias::BiasModel;
use super::data::{epoch_hours, hour_of_day, EnsembleForecast};
use super::spline::CubicSpline;
use crate::error::{input, Result};
use crate::numerics::{normal_cdf, Quadrature2DSpec};
use crate::odds::{
    freq_linear_odds, freq_log_odds, gaussian_linear_odds, gaussian_log_odds, probabilistic_odds, BernoulliPosterior,
    GaussianPosterior, OddsAssignment, Prior, Utility,
};

/// How the verifying temperature is taken from a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Value at the lead time.
    Instantaneous,
    /// Minimum over the 24 h from 18:00 UTC before the lead time, sampled
    /// hourly. For 00 UTC launches and whole-day leads this is the window
    /// `[lead - 6 h, lead + 18 h]`.
    DailyMinFrom18Utc,
}

/// Event "temperature below the adjusted control at issue time plus
/// `threshold_offset`".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastEvent {
    pub threshold_offset: f64,
    pub lead_hours: f64,
    pub aggregation: Aggregation,
}

impl ForecastEvent {
    pub fn new(threshold_offset: f64, lead_hours: f64, aggregation: Aggregation) -> Result<Self> {
        if !(lead_hours > 0.0 && lead_hours.is_finite()) || !threshold_offset.is_finite() {
            return Err(input(format!(
                "event needs a positive lead time and finite offset, got ({lead_hours}, {threshold_offset})"
            )));
        }
        Ok(Self {
            threshold_offset,
            lead_hours,
            aggregation,
        })
    }

    /// Hourly sample times, relative to launch, at which the verifying
    /// value is taken.
    pub fn window(&self, launch: DateTime<Utc>) -> Vec<f64> {
        match self.aggregation {
            Aggregation::Instantaneous => vec![self.lead_hours],
            Aggregation::DailyMinFrom18Utc => {
                let valid = epoch_hours(launch) + self.lead_hours;
                // last 18 UTC at or before the valid time minus 6 h
                let start = (valid - 6.0 - hour_of_day(valid - 6.0 - 18.0)) - epoch_hours(launch);
                (0..=24).map(|k| start + k as f64).collect()
            }
        }
    }
}

/// Which forecaster produces the odds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    /// Counts of members below threshold, frequency-model odds.
    Frequency,
    /// Member mean and spread, Gaussian-model odds.
    Gaussian,
    /// Gaussian probability used directly as odds.
    Probabilistic,
    /// As `Probabilistic` with a floor on the odds.
    Capped,
}

impl ForecasterKind {
    pub const ALL: [ForecasterKind; 4] = [
        ForecasterKind::Frequency,
        ForecasterKind::Gaussian,
        ForecasterKind::Probabilistic,
        ForecasterKind::Capped,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ForecasterKind::Frequency => "frequency",
            ForecasterKind::Gaussian => "gaussian",
            ForecasterKind::Probabilistic => "probabilistic",
            ForecasterKind::Capped => "capped",
        }
    }
}

/// Engine parameters shared by the forecasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterSettings {
    pub prior: Prior,
    /// Odds floor for the capped forecaster.
    pub cap: f64,
    /// Optimizer tolerance for linear-utility odds.
    pub tol: f64,
    /// Relative tolerance of the Gaussian-model quadrature.
    pub quad_tolerance: f64,
}

impl Default for ForecasterSettings {
    fn default() -> Self {
        Self {
            prior: Prior::default(),
            cap: 0.1,
            tol: 1e-8,
            quad_tolerance: 1e-9,
        }
    }
}

/// Ensemble after splining each member and applying the bias model.
#[derive(Debug, Clone)]
pub struct AdjustedEnsemble {
    launch: DateTime<Utc>,
    launch_hours: f64,
    control: CubicSpline,
    members: Vec<CubicSpline>,
    bias: BiasModel,
}

impl AdjustedEnsemble {
    pub fn new(ens: &EnsembleForecast, bias: &BiasModel) -> Result<Self> {
        let spline = |v: &Vec<f64>| CubicSpline::new(ens.lead_hours.clone(), v.clone());
        Ok(Self {
            launch: ens.launch,
            launch_hours: epoch_hours(ens.launch),
            control: spline(&ens.control)?,
            members: ens.members.iter().map(spline).collect::<Result<_>>()?,
            bias: bias.clone(),
        })
    }

    pub fn launch(&self) -> DateTime<Utc> {
        self.launch
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    fn adjusted(&self, s: &CubicSpline, lead: f64) -> Result<f64> {
        Ok(self.bias.apply(s.eval(lead)?, hour_of_day(self.launch_hours + lead)))
    }

    fn aggregate(&self, s: &CubicSpline, event: &ForecastEvent) -> Result<f64> {
        event
            .window(self.launch)
            .into_iter()
            .try_fold(f64::INFINITY, |acc, t| Ok(acc.min(self.adjusted(s, t)?)))
    }

    /// Adjusted control at lead `hours`.
    pub fn control_at(&self, hours: f64) -> Result<f64> {
        self.adjusted(&self.control, hours)
    }

    /// Event threshold: adjusted control at issue time plus the offset.
    pub fn threshold(&self, event: &ForecastEvent) -> Result<f64> {
        Ok(self.control_at(0.0)? + event.threshold_offset)
    }

    /// Aggregated adjusted control for the event.
    pub fn control_value(&self, event: &ForecastEvent) -> Result<f64> {
        self.aggregate(&self.control, event)
    }

    /// Aggregated adjusted member values for the event.
    pub fn member_values(&self, event: &ForecastEvent) -> Result<Vec<f64>> {
        self.members.iter().map(|m| self.aggregate(m, event)).collect()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Odds on "value below `threshold`" from member values.
pub fn odds_from_members(
    members: &[f64],
    threshold: f64,
    kind: ForecasterKind,
    utility: Utility,
    settings: &ForecasterSettings,
) -> Result<OddsAssignment> {
    if members.len() < 2 {
        return Err(input(format!("need at least 2 members, got {}", members.len())));
    }
    match kind {
        ForecasterKind::Frequency => {
            let x = members.iter().filter(|v| **v < threshold).count() as u64;
            let post = BernoulliPosterior::new(x, members.len() as u64)?;
            match utility {
                Utility::Linear => freq_linear_odds(&post, settings.tol),
                Utility::Logarithmic => Ok(freq_log_odds(&post)),
            }
        }
        ForecasterKind::Gaussian => {
            let post = GaussianPosterior::from_samples(members, settings.prior.clone())?;
            let z = post.standardize(threshold);
            let quad = Quadrature2DSpec {
                rel_tolerance: settings.quad_tolerance,
                ..post.default_quadrature()
            };
            match utility {
                Utility::Linear => Ok(gaussian_linear_odds(&post, z, &quad, settings.tol)?.odds),
                Utility::Logarithmic => Ok(gaussian_log_odds(&post, z, &quad)?.odds),
            }
        }
        ForecasterKind::Probabilistic | ForecasterKind::Capped => {
            let (mean, std) = mean_std(members);
            if !(std > 0.0) {
                return Err(input("members have zero spread; Gaussian probability is undefined"));
            }
            let z = (threshold - mean) / std;
            let floor = if kind == ForecasterKind::Capped {
                settings.cap
            } else {
                0.0
            };
            probabilistic_odds(&[normal_cdf(z), normal_cdf(-z)], floor)
        }
    }
}

/// Odds from one forecaster for `event` on an adjusted ensemble.
pub fn forecaster_odds(
    ens: &AdjustedEnsemble,
    event: &ForecastEvent,
    kind: ForecasterKind,
    utility: Utility,
    settings: &ForecasterSettings,
) -> Result<OddsAssignment> {
    odds_from_members(
        &ens.member_values(event)?,
        ens.threshold(event)?,
        kind,
        utility,
        settings,
    )
}

/// The challenge client's probability of the event: Gaussian around the
/// adjusted control with the bias model's residual spread.
pub fn challenge_client(bias: &BiasModel, control_at_lead: f64, threshold: f64) -> f64 {
    challenge_probability(bias.residual_std(), control_at_lead, threshold)
}

/// [`challenge_client`] with an explicit spread.
pub fn challenge_probability(residual_std: f64, control_at_lead: f64, threshold: f64) -> f64 {
    normal_cdf((threshold - control_at_lead) / residual_std)
}
