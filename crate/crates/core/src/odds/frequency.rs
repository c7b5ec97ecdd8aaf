//! Odds for a binary event under the frequency model: the event was seen
//! `x` times in `n` independent trials and the prior on its probability is
//! uniform, so the posterior is Beta(x+1, n-x+1).

use serde::{Deserialize, Serialize};

use super::{OddsAssignment, Provenance, Utility, P_EPS};
use crate::error::{input, numeric, Result};
use crate::numerics::{harmonic, minimize_scalar, regularized_incomplete_beta};

/// Bernoulli counts with a uniform prior on the event probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BernoulliPosterior {
    x: u64,
    n: u64,
}

impl BernoulliPosterior {
    pub fn new(x: u64, n: u64) -> Result<Self> {
        if x > n {
            return Err(input(format!("event count x={x} exceeds trial count n={n}")));
        }
        Ok(Self { x, n })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Beta posterior shape parameters `(x+1, n-x+1)`.
    pub fn beta_params(&self) -> (f64, f64) {
        ((self.x + 1) as f64, (self.n - self.x + 1) as f64)
    }

    /// Posterior mean `(x+1)/(n+2)`.
    pub fn mean(&self) -> f64 {
        (self.x + 1) as f64 / (self.n + 2) as f64
    }

    /// The same counts seen from the complementary event.
    pub fn complement(&self) -> Self {
        Self {
            x: self.n - self.x,
            n: self.n,
        }
    }
}

/// Excess `s(p)` required at normalized odds `p = q/(q+q')` so that the
/// informed client's expected pay-out is zero.
///
/// Ratios of incomplete betas are taken in regularized form, which keeps
/// large `n` free of underflow.
pub fn freq_linear_objective(post: &BernoulliPosterior, p: f64) -> Result<f64> {
    let (x, n) = (post.x as f64, post.n as f64);
    let w_lo = (n - x + 1.0) / (n + 2.0);
    let w_hi = (x + 1.0) / (n + 2.0);
    // client backs E' when π < p, E when π > p
    let lo = regularized_incomplete_beta(p, x + 1.0, n - x + 2.0)?;
    let hi = regularized_incomplete_beta(1.0 - p, n - x + 1.0, x + 2.0)?;
    Ok(w_lo * lo / (1.0 - p) + w_hi * hi / p)
}

/// Relative residual of the zero-expected-pay-out constraint at odds `(q, q')`.
pub fn freq_linear_constraint_residual(post: &BernoulliPosterior, q: f64, q_prime: f64) -> Result<f64> {
    let (x, n) = (post.x as f64, post.n as f64);
    let p = q / (q + q_prime);
    let lo = regularized_incomplete_beta(p, x + 1.0, n - x + 2.0)? * (n - x + 1.0) / (n + 2.0);
    let hi = regularized_incomplete_beta(1.0 - p, n - x + 1.0, x + 2.0)? * (x + 1.0) / (n + 2.0);
    Ok(lo / q_prime + hi / q - 1.0)
}

/// Linear-utility odds `(q, q')` for the frequency model.
///
/// Minimises `s(p)` over `p ∈ [ε, 1-ε]` with Brent's method; `tol` is the
/// absolute tolerance on `p`.
pub fn freq_linear_odds(post: &BernoulliPosterior, tol: f64) -> Result<OddsAssignment> {
    if !(tol > 0.0) {
        return Err(input(format!("tolerance must be positive, got {tol}")));
    }
    let mut failure = None;
    let min = minimize_scalar(
        |p| match freq_linear_objective(post, p) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        P_EPS,
        1.0 - P_EPS,
        tol,
    )
    .map_err(|e| match failure.take() {
        Some(inner) => numeric(format!("frequency/linear odds for x={}, n={}: {inner}", post.x, post.n)),
        None => numeric(format!("frequency/linear odds for x={}, n={}: {e}", post.x, post.n)),
    })?;
    let (p, s) = (min.argmin, min.min);
    if !(s.is_finite() && s > 0.0) {
        return Err(numeric(format!(
            "frequency/linear optimizer returned s={s} at p={p} after {} evaluations (x={}, n={})",
            min.evaluations, post.x, post.n
        )));
    }
    OddsAssignment::new(vec![p * s, (1.0 - p) * s], Some(Utility::Linear), Provenance::Frequency)
}

/// Logarithmic-utility odds for the frequency model, in closed form via
/// harmonic numbers.
pub fn freq_log_odds(post: &BernoulliPosterior) -> OddsAssignment {
    let (x, n) = (post.x, post.n);
    let a = (x + 1) as f64;
    let b = (n - x + 1) as f64;
    let total = (n + 2) as f64;
    let psi = a / total * harmonic(x + 1) + b / total * harmonic(n - x + 1) - harmonic(n + 2);
    let q = (a / b).powf(b / total) * psi.exp();
    let q_prime = (b / a).powf(a / total) * psi.exp();
    OddsAssignment::new(vec![q, q_prime], Some(Utility::Logarithmic), Provenance::Frequency)
        .expect("closed-form odds are finite and positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ln_beta;

    /// Composite Simpson rule on [0,1] with many panels; smooth integrands only.
    fn simpson01(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn beta_density(post: &BernoulliPosterior) -> impl Fn(f64) -> f64 {
        let (a, b) = post.beta_params();
        let lb = ln_beta(a, b).unwrap();
        move |t: f64| {
            if t <= 0.0 || t >= 1.0 {
                if (t == 0.0 && a == 1.0) || (t == 1.0 && b == 1.0) {
                    return (-lb).exp();
                }
                return 0.0;
            }
            ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - lb).exp()
        }
    }

    #[test]
    fn objective_matches_direct_expectation() {
        // E[max(π/q, (1-π)/q')] = 1 at the engine odds, computed by splitting at p.
        for (x, n) in [(0, 1), (2, 4), (1, 3), (5, 7)] {
            let post = BernoulliPosterior::new(x, n).unwrap();
            let odds = freq_linear_odds(&post, 1e-10).unwrap();
            let (q, qp) = (odds.q()[0], odds.q()[1]);
            let p = q / (q + qp);
            let dens = beta_density(&post);
            let below = simpson01(|t| (1.0 - t) / qp * dens(t), 0.0, p);
            let above = simpson01(|t| t / q * dens(t), p, 1.0);
            assert!((below + above - 1.0).abs() < 1e-8, "x={x} n={n}: {}", below + above);
        }
    }

    #[test]
    fn published_table_rows() {
        let cases = [((0, 1), 0.556, 1.411), ((2, 4), 0.656, 1.313), ((1, 3), 0.578, 1.336)];
        for ((x, n), q, s) in cases {
            let o = freq_linear_odds(&BernoulliPosterior::new(x, n).unwrap(), 1e-10).unwrap();
            assert!((o.q()[0] - q).abs() <= 0.001, "x={x} n={n} q={}", o.q()[0]);
            assert!((o.excess() - s).abs() <= 0.001, "x={x} n={n} s={}", o.excess());
        }
        let o = freq_linear_odds(&BernoulliPosterior::new(0, 1).unwrap(), 1e-10).unwrap();
        assert!((o.q()[1] - 0.855).abs() <= 0.001);
    }

    #[test]
    fn constraint_holds_at_solution() {
        for (x, n) in [(0, 1), (3, 10), (7, 7), (100, 400)] {
            let post = BernoulliPosterior::new(x, n).unwrap();
            let o = freq_linear_odds(&post, 1e-10).unwrap();
            let r = freq_linear_constraint_residual(&post, o.q()[0], o.q()[1]).unwrap();
            assert!(r.abs() < 1e-10, "x={x} n={n} residual {r}");
        }
    }

    #[test]
    fn linear_symmetry() {
        for n in 1..=12u64 {
            for x in 0..=n {
                let a = freq_linear_odds(&BernoulliPosterior::new(x, n).unwrap(), 1e-10).unwrap();
                let b = freq_linear_odds(&BernoulliPosterior::new(n - x, n).unwrap(), 1e-10).unwrap();
                assert!((a.q()[0] - b.q()[1]).abs() < 1e-7, "x={x} n={n}");
            }
        }
    }

    #[test]
    fn log_closed_form_values() {
        let o = freq_log_odds(&BernoulliPosterior::new(1, 1).unwrap());
        let exact = 2f64.powf(1.0 / 3.0) * (-0.5f64).exp();
        assert!((o.q()[0] - exact).abs() < 1e-14);
        assert!((o.q()[0] - 0.764).abs() < 5e-4);
        assert!((o.excess() - 1.146).abs() < 5e-4);
        let o = freq_log_odds(&BernoulliPosterior::new(0, 2).unwrap());
        assert!((o.q()[0] - 0.277).abs() < 5e-4);
        let o = freq_log_odds(&BernoulliPosterior::new(2, 4).unwrap());
        assert!((o.q()[0] - 0.540).abs() < 5e-4);
        assert!((o.excess() - 1.079).abs() < 5e-4);
    }

    #[test]
    fn log_closed_form_matches_entropy_gap() {
        // q = π̄ e^α with α = E[h(π)] - h(π̄), h(t) = t ln t + (1-t) ln(1-t), by quadrature.
        let h = |t: f64| crate::numerics::xlogx(t) + crate::numerics::xlogx(1.0 - t);
        for (x, n) in [(0, 1), (1, 1), (3, 4), (2, 9)] {
            let post = BernoulliPosterior::new(x, n).unwrap();
            let dens = beta_density(&post);
            let h_bar = simpson01(|t| h(t) * dens(t), 0.0, 1.0);
            let pi_bar = post.mean();
            let alpha = h_bar - h(pi_bar);
            let o = freq_log_odds(&post);
            assert!((o.q()[0] - pi_bar * alpha.exp()).abs() < 1e-9, "x={x} n={n}");
            assert!((o.q()[1] - (1.0 - pi_bar) * alpha.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn log_symmetry_exact() {
        for n in 1..=20u64 {
            for x in 0..=n {
                let a = freq_log_odds(&BernoulliPosterior::new(x, n).unwrap());
                let b = freq_log_odds(&BernoulliPosterior::new(n - x, n).unwrap());
                assert!((a.q()[0] - b.q()[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn invalid_counts() {
        assert!(BernoulliPosterior::new(5, 4).is_err());
        assert!(freq_linear_odds(&BernoulliPosterior::new(1, 2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn bracket_perturbation_stable() {
        let post = BernoulliPosterior::new(2, 4).unwrap();
        let base = minimize_scalar(|p| freq_linear_objective(&post, p).unwrap(), P_EPS, 1.0 - P_EPS, 1e-12).unwrap();
        for (dlo, dhi) in [(1e-3, 0.0), (0.0, -1e-3), (1e-3, -1e-3)] {
            let m = minimize_scalar(
                |p| freq_linear_objective(&post, p).unwrap(),
                P_EPS + dlo,
                1.0 - P_EPS + dhi,
                1e-12,
            )
            .unwrap();
            assert!((m.argmin - base.argmin).abs() < 1e-6);
        }
    }
}
