//! Odds assignments and the engines that compute them.
//!
//! Odds `q_i ≥ 0` are assigned to `m` mutually exclusive events; a unit bet
//! on event `i` pays `1/q_i - 1` when it occurs and loses the stake
//! otherwise. The engines choose the odds with the smallest excess
//! `s = Σ q_i` such that a client who knows the true probabilities cannot
//! expect to gain: for linear utility the client's expected pay-out is
//! zero, for logarithmic utility the client's expected log-growth is zero.

mod frequency;
mod gaussian;
mod generic;

pub use frequency::{
    freq_linear_constraint_residual, freq_linear_objective, freq_linear_odds, freq_log_odds, BernoulliPosterior,
};
pub use gaussian::{
    gaussian_linear_odds, gaussian_log_odds, GaussianEventPosterior, GaussianLinearOdds, GaussianLogOdds,
    GaussianPosterior, Prior,
};
pub use generic::{
    draw_simplex_samples, generic_linear_odds, generic_log_odds, DirichletPosterior, GenericOdds, PointMassPosterior,
    SimplexSampler,
};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Endpoint guard for searches over the normalized odds `p = q / s`.
pub(crate) const P_EPS: f64 = 1e-9;

/// Client utility the odds are computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    /// Fixed, forced unit bets.
    Linear,
    /// Entire wealth bet every round (Kelly client).
    Logarithmic,
}

impl std::str::FromStr for Utility {
    type Err = crate::OddsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Utility::Linear),
            "log" | "logarithmic" => Ok(Utility::Logarithmic),
            other => Err(input(format!("unknown utility '{other}' (expected linear|log)"))),
        }
    }
}

impl std::fmt::Display for Utility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Utility::Linear => "linear",
            Utility::Logarithmic => "log",
        })
    }
}

/// Which computation produced an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Frequency,
    Gaussian,
    Probabilistic,
    CappedProbabilistic,
    Generic,
}

/// Non-negative odds over a complete set of mutually exclusive events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsAssignment {
    q: Vec<f64>,
    /// `None` for probabilistic odds, which are fair under either utility.
    utility: Option<Utility>,
    provenance: Provenance,
}

impl OddsAssignment {
    pub fn new(q: Vec<f64>, utility: Option<Utility>, provenance: Provenance) -> Result<Self> {
        if q.len() < 2 {
            return Err(input(format!("odds need at least two events, got {}", q.len())));
        }
        if let Some(bad) = q.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(input(format!("odds must be finite and non-negative, got {bad}")));
        }
        Ok(Self { q, utility, provenance })
    }

    /// Arbitrary user-supplied odds.
    pub fn generic(q: Vec<f64>) -> Result<Self> {
        Self::new(q, None, Provenance::Generic)
    }

    /// Binary odds `(q, q')` on an event and its complement.
    pub fn binary(q: f64, q_prime: f64) -> Result<Self> {
        Self::generic(vec![q, q_prime])
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn utility(&self) -> Option<Utility> {
        self.utility
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Total odds `s = Σ q_i`.
    pub fn excess(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Pay-out `P_i = 1/q_i - 1` on a winning unit bet on event `i`.
    pub fn payout(&self, i: usize) -> f64 {
        1.0 / self.q[i] - 1.0
    }

    /// Normalized odds `q_i / s`.
    pub fn normalized(&self) -> Vec<f64> {
        let s = self.excess();
        self.q.iter().map(|v| v / s).collect()
    }
}

/// Check that `v` is a probability vector to within `tol`.
pub fn validate_simplex(v: &[f64], tol: f64) -> Result<()> {
    if v.len() < 2 {
        return Err(input("probability vector needs at least two entries"));
    }
    if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= -tol)) {
        return Err(input(format!("probability entries must be non-negative, got {bad}")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(input(format!("probabilities must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Probabilities used directly as odds, optionally floored.
///
/// A floor of `0.1` caps the pay-out on any event at 9 per unit stake.
pub fn probabilistic_odds(p_hat: &[f64], floor: f64) -> Result<OddsAssignment> {
    validate_simplex(p_hat, 1e-9)?;
    if !(0.0..1.0).contains(&floor) {
        return Err(input(format!("floor must lie in [0, 1), got {floor}")));
    }
    let q = p_hat.iter().map(|p| p.max(0.0).max(floor)).collect();
    let provenance = if floor == 0.0 {
        Provenance::Probabilistic
    } else {
        Provenance::CappedProbabilistic
    };
    OddsAssignment::new(q, None, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capped_probabilities() {
        let o = probabilistic_odds(&[0.01, 0.99], 0.1).unwrap();
        assert_eq!(o.q(), &[0.1, 0.99]);
        assert_eq!(o.provenance(), Provenance::CappedProbabilistic);
        assert!((o.payout(0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn identity_probabilities() {
        let o = probabilistic_odds(&[0.5, 0.5], 0.0).unwrap();
        assert_eq!(o.q(), &[0.5, 0.5]);
        assert_eq!(o.provenance(), Provenance::Probabilistic);
        let o = probabilistic_odds(&[0.3, 0.7], 0.0).unwrap();
        assert!((o.payout(0) - 7.0 / 3.0).abs() < 1e-12);
        assert!((o.payout(1) - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_simplex() {
        assert!(probabilistic_odds(&[0.5, 0.6], 0.0).is_err());
        assert!(probabilistic_odds(&[-0.1, 1.1], 0.0).is_err());
        assert!(probabilistic_odds(&[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn assignment_validation() {
        assert!(OddsAssignment::binary(-0.1, 1.0).is_err());
        assert!(OddsAssignment::binary(f64::NAN, 1.0).is_err());
        assert!(OddsAssignment::generic(vec![1.0]).is_err());
        let o = OddsAssignment::binary(0.5, 0.7).unwrap();
        assert!((o.excess() - 1.2).abs() < 1e-15);
    }

    #[test]
    fn utility_parsing() {
        assert_eq!("linear".parse::<Utility>().unwrap(), Utility::Linear);
        assert_eq!("log".parse::<Utility>().unwrap(), Utility::Logarithmic);
        assert!("quadratic".parse::<Utility>().is_err());
    }
}
