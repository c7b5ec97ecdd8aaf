//! Odds for threshold events `E = {Z ≤ z}` under a Gaussian model with
//! unknown mean and standard deviation.
//!
//! Everything is computed in standardized units (`μ̂ = 0`, `σ̂ = 1`); odds for
//! a raw threshold `x` are obtained through `z = (x - μ̂)/σ̂`, and any prior
//! scale is read in units of `σ̂`. The location prior is flat, so
//! conditional on `σ` the posterior of `μ` is `N(0, σ²/n)`. The location is
//! integrated in the conditional-standard-deviation coordinate
//! `u = μ √n / σ`, which makes the inner axis the same standard normal for
//! every `σ`, and the event probability is `π = Φ(z/σ - u/√n)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::generic::SimplexSampler;
use super::{OddsAssignment, Provenance, Utility, P_EPS};
use crate::error::{input, numeric, Result};
use crate::numerics::{
    integrate_2d_vec, minimize_scalar, normal_cdf, normal_pdf, normal_quantile, xlogx, Quadrature2DSpec, StreamRng,
};

/// Prior over `(μ, σ)`: flat in `μ` with the given density on `σ`, or a
/// point mass at a single `(μ, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Prior {
    /// χ with two degrees of freedom, `(σ/c²) e^{-σ²/2c²}`. `scale = 1/√2`
    /// gives the `σ e^{-σ²}` variant.
    Chi2Dof { scale: f64 },
    /// Half-normal, `e^{-σ²/2c²}` on `σ > 0`.
    HalfNormal { scale: f64 },
    /// Piecewise-linear density through `(sigma[i], density[i])`, zero outside.
    Tabulated { sigma: Vec<f64>, density: Vec<f64> },
    /// No posterior spread: the model is known exactly.
    PointMass { mu: f64, sigma: f64 },
}

impl Default for Prior {
    fn default() -> Self {
        Prior::Chi2Dof { scale: 1.0 }
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::Chi2Dof { scale } | Prior::HalfNormal { scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(input(format!("prior scale must be positive, got {scale}")));
                }
            }
            Prior::Tabulated { sigma, density } => {
                if sigma.len() < 2 || sigma.len() != density.len() {
                    return Err(input(
                        "tabulated prior needs matching sigma/density arrays of length >= 2",
                    ));
                }
                if sigma.windows(2).any(|w| !(w[1] > w[0])) || sigma[0] < 0.0 {
                    return Err(input(
                        "tabulated prior sigma grid must be non-negative and strictly increasing",
                    ));
                }
                if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) || density.iter().all(|d| *d == 0.0) {
                    return Err(input(
                        "tabulated prior density must be non-negative and not identically zero",
                    ));
                }
            }
            Prior::PointMass { sigma, mu } => {
                if !(*sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                    return Err(input(format!(
                        "point-mass prior needs finite mu and sigma > 0, got ({mu}, {sigma})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log density of the σ prior up to an additive constant.
    pub fn ln_density(&self, sigma: f64) -> f64 {
        match self {
            Prior::Chi2Dof { scale } => sigma.ln() - sigma * sigma / (2.0 * scale * scale),
            Prior::HalfNormal { scale } => -sigma * sigma / (2.0 * scale * scale),
            Prior::Tabulated { sigma: grid, density } => {
                if sigma < grid[0] || sigma > grid[grid.len() - 1] {
                    return f64::NEG_INFINITY;
                }
                let i = grid.partition_point(|g| *g <= sigma).clamp(1, grid.len() - 1);
                let (x0, x1) = (grid[i - 1], grid[i]);
                let t = (sigma - x0) / (x1 - x0);
                (density[i - 1] * (1.0 - t) + density[i] * t).ln()
            }
            Prior::PointMass { .. } => 0.0,
        }
    }

    /// Length scale used to size the default integration box.
    fn sigma_extent(&self) -> f64 {
        match self {
            Prior::Chi2Dof { scale } | Prior::HalfNormal { scale } => *scale,
            Prior::Tabulated { sigma, .. } => sigma[sigma.len() - 1] / 8.0,
            Prior::PointMass { sigma, .. } => *sigma,
        }
    }
}

/// Gaussian summary statistics plus prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    pub mu_hat: f64,
    /// Sample standard deviation with divisor `n`.
    pub sigma_hat: f64,
    pub n_obs: u64,
    pub prior: Prior,
}

impl GaussianPosterior {
    pub fn new(mu_hat: f64, sigma_hat: f64, n_obs: u64, prior: Prior) -> Result<Self> {
        if !(sigma_hat > 0.0 && sigma_hat.is_finite()) || !mu_hat.is_finite() {
            return Err(input(format!(
                "need finite mu_hat and sigma_hat > 0, got ({mu_hat}, {sigma_hat})"
            )));
        }
        if n_obs < 1 {
            return Err(input("n_obs must be at least 1"));
        }
        prior.validate()?;
        Ok(Self {
            mu_hat,
            sigma_hat,
            n_obs,
            prior,
        })
    }

    /// Standardized problem (`μ̂ = 0`, `σ̂ = 1`) with `n_obs` observations.
    pub fn standard(n_obs: u64, prior: Prior) -> Result<Self> {
        Self::new(0.0, 1.0, n_obs, prior)
    }

    /// Summary statistics of `xs` (population standard deviation).
    pub fn from_samples(xs: &[f64], prior: Prior) -> Result<Self> {
        if xs.len() < 2 {
            return Err(input(format!(
                "need at least 2 samples for a Gaussian summary, got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self::new(mean, var.sqrt(), xs.len() as u64, prior)
    }

    /// Standardized threshold `z = (x - μ̂)/σ̂`.
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mu_hat) / self.sigma_hat
    }

    /// Integration box that keeps truncated posterior mass negligible:
    /// 8 standardized units of σ (stretched for wide priors) and 8
    /// conditional standard deviations of μ.
    pub fn default_quadrature(&self) -> Quadrature2DSpec {
        Quadrature2DSpec {
            sigma_truncation: 8.0 * self.prior.sigma_extent().max(1.0),
            mu_halfwidth: 8.0,
            ..Quadrature2DSpec::default()
        }
    }
}

/// Posterior kernel over `(u, σ)` in standardized units.
struct Kernel<'a> {
    n: f64,
    sqrt_n: f64,
    z: f64,
    prior: &'a Prior,
    log_ref: f64,
}

impl<'a> Kernel<'a> {
    fn new(post: &'a GaussianPosterior, z: f64, sigma_max: f64) -> Self {
        let n = post.n_obs as f64;
        let mut k = Kernel {
            n,
            sqrt_n: n.sqrt(),
            z,
            prior: &post.prior,
            log_ref: 0.0,
        };
        let log_ref = (1..=400)
            .map(|i| k.log_weight(sigma_max * i as f64 / 400.0))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        k.log_ref = if log_ref.is_finite() { log_ref } else { 0.0 };
        k
    }

    /// `ln[σ^{1-n} e^{-n/2σ²} prior(σ)]`: the data likelihood after the
    /// change of variables to `u`, times the σ prior.
    fn log_weight(&self, sigma: f64) -> f64 {
        (1.0 - self.n) * sigma.ln() - self.n / (2.0 * sigma * sigma) + self.prior.ln_density(sigma)
    }

    fn weight(&self, sigma: f64) -> f64 {
        (self.log_weight(sigma) - self.log_ref).exp()
    }

    /// Argument of Φ giving the event probability.
    fn t(&self, u: f64, sigma: f64) -> f64 {
        self.z / sigma - u / self.sqrt_n
    }
}

/// Result of [`gaussian_linear_odds`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinearOdds {
    pub odds: OddsAssignment,
    /// Normalized odds `p = q/s` at the optimum.
    pub p: f64,
    /// False if any quadrature along the way ran out of budget.
    pub converged: bool,
}

/// Result of [`gaussian_log_odds`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLogOdds {
    pub odds: OddsAssignment,
    pub pi_bar: f64,
    pub alpha: f64,
    pub converged: bool,
}

fn check_z(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(input(format!("threshold z must be finite, got {z}")))
    }
}

/// Linear-utility odds on `{Z ≤ z}`.
///
/// Minimises over `p` the excess `s(p) = (A(p)/(1-p) + B(p)/p) / C`, where
/// `A` integrates `1-π` over the region `π < p` in which the informed
/// client backs the complement, `B` integrates `π` over `π > p`, and `C` is
/// the posterior normalizer.
pub fn gaussian_linear_odds(
    post: &GaussianPosterior,
    z: f64,
    quad: &Quadrature2DSpec,
    tol: f64,
) -> Result<GaussianLinearOdds> {
    check_z(z)?;
    quad.validate()?;
    if !(tol > 0.0) {
        return Err(input(format!("tolerance must be positive, got {tol}")));
    }
    if let Prior::PointMass { mu, sigma } = post.prior {
        let pi = normal_cdf((z - mu) / sigma);
        let odds = OddsAssignment::new(
            vec![pi, normal_cdf(-(z - mu) / sigma)],
            Some(Utility::Linear),
            Provenance::Gaussian,
        )?;
        return Ok(GaussianLinearOdds {
            odds,
            p: pi,
            converged: true,
        });
    }

    let kernel = Kernel::new(post, z, quad.sigma_truncation);
    let norm = integrate_2d_vec(
        1,
        |u, sigma, out: &mut [f64]| out[0] = kernel.weight(sigma) * normal_pdf(u),
        |_| None,
        quad,
    )?;
    let c = norm.value[0];
    if !(c > 0.0 && c.is_finite()) {
        return Err(numeric(format!(
            "posterior normalizer is {c}; prior has no mass on the integration box"
        )));
    }
    let mut converged = norm.converged;
    let mut failure = None;

    let objective = |p: f64, converged: &mut bool, failure: &mut Option<crate::OddsError>| -> f64 {
        let t_p = match normal_quantile(p) {
            Ok(t) => t,
            Err(e) => {
                failure.get_or_insert(e);
                return f64::NAN;
            }
        };
        let mut last = (f64::NAN, 0.0);
        let res = integrate_2d_vec(
            2,
            |u, sigma, out: &mut [f64]| {
                if sigma != last.0 {
                    last = (sigma, kernel.weight(sigma));
                }
                let w = last.1 * normal_pdf(u);
                let t = kernel.t(u, sigma);
                if t < t_p {
                    out[0] = normal_cdf(-t) * w;
                    out[1] = 0.0;
                } else {
                    out[0] = 0.0;
                    out[1] = normal_cdf(t) * w;
                }
            },
            |sigma| Some(kernel.sqrt_n * (z / sigma - t_p)),
            quad,
        );
        match res {
            Ok(r) => {
                *converged &= r.converged;
                (r.value[0] / (1.0 - p) + r.value[1] / p) / c
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };

    let min = minimize_scalar(|p| objective(p, &mut converged, &mut failure), P_EPS, 1.0 - P_EPS, tol);
    if let Some(e) = failure {
        return Err(e);
    }
    let min = min?;
    let (p, s) = (min.argmin, min.min);
    if !(s.is_finite() && s > 0.0) {
        return Err(numeric(format!(
            "gaussian/linear optimizer returned s={s} at p={p} (z={z})"
        )));
    }
    let odds = OddsAssignment::new(vec![p * s, (1.0 - p) * s], Some(Utility::Linear), Provenance::Gaussian)?;
    Ok(GaussianLinearOdds { odds, p, converged })
}

/// Logarithmic-utility odds on `{Z ≤ z}`: `q = π̄ e^α`, `q' = (1-π̄) e^α`
/// with `α = H̄ - π̄ ln π̄ - (1-π̄) ln(1-π̄)` the expected-entropy gap.
pub fn gaussian_log_odds(post: &GaussianPosterior, z: f64, quad: &Quadrature2DSpec) -> Result<GaussianLogOdds> {
    check_z(z)?;
    quad.validate()?;
    if let Prior::PointMass { mu, sigma } = post.prior {
        let pi = normal_cdf((z - mu) / sigma);
        let odds = OddsAssignment::new(
            vec![pi, normal_cdf(-(z - mu) / sigma)],
            Some(Utility::Logarithmic),
            Provenance::Gaussian,
        )?;
        return Ok(GaussianLogOdds {
            odds,
            pi_bar: pi,
            alpha: 0.0,
            converged: true,
        });
    }
    let kernel = Kernel::new(post, z, quad.sigma_truncation);
    let mut last = (f64::NAN, 0.0);
    let res = integrate_2d_vec(
        4,
        |u, sigma, out: &mut [f64]| {
            if sigma != last.0 {
                last = (sigma, kernel.weight(sigma));
            }
            let w = last.1 * normal_pdf(u);
            let t = kernel.t(u, sigma);
            let (pi, pi_c) = (normal_cdf(t), normal_cdf(-t));
            out[0] = w;
            out[1] = pi * w;
            out[2] = pi_c * w;
            out[3] = (xlogx(pi) + xlogx(pi_c)) * w;
        },
        |_| None,
        quad,
    )?;
    let c = res.value[0];
    if !(c > 0.0 && c.is_finite()) {
        return Err(numeric(format!(
            "posterior normalizer is {c}; prior has no mass on the integration box"
        )));
    }
    let pi_bar = res.value[1] / c;
    let pi_bar_c = res.value[2] / c;
    let h_bar = res.value[3] / c;
    // Jensen: α ≥ 0; clamp quadrature roundoff.
    let alpha = (h_bar - xlogx(pi_bar) - xlogx(pi_bar_c)).max(0.0);
    let odds = OddsAssignment::new(
        vec![pi_bar * alpha.exp(), pi_bar_c * alpha.exp()],
        Some(Utility::Logarithmic),
        Provenance::Gaussian,
    )?;
    Ok(GaussianLogOdds {
        odds,
        pi_bar,
        alpha,
        converged: res.converged,
    })
}

/// Posterior over the event probability `π = Φ((z-μ)/σ)`, sampled as a
/// two-point simplex vector `(π, 1-π)`.
///
/// σ is drawn by inverse CDF from its tabulated marginal, then `μ | σ`
/// exactly from its conditional normal.
#[derive(Debug, Clone)]
pub struct GaussianEventPosterior {
    z: f64,
    sqrt_n: f64,
    point: Option<f64>,
    lo: f64,
    width: f64,
    cdf: Vec<f64>,
}

const SIGMA_TABLE_CELLS: usize = 20_000;

impl GaussianEventPosterior {
    pub fn new(post: &GaussianPosterior, z: f64) -> Result<Self> {
        check_z(z)?;
        if let Prior::PointMass { mu, sigma } = post.prior {
            return Ok(Self {
                z,
                sqrt_n: 1.0,
                point: Some(normal_cdf((z - mu) / sigma)),
                lo: 0.0,
                width: 0.0,
                cdf: Vec::new(),
            });
        }
        let r = post.default_quadrature().sigma_truncation;
        let kernel = Kernel::new(post, z, r);
        let width = r / SIGMA_TABLE_CELLS as f64;
        let mut cdf = Vec::with_capacity(SIGMA_TABLE_CELLS);
        let mut acc = 0.0;
        for i in 0..SIGMA_TABLE_CELLS {
            let w = kernel.weight((i as f64 + 0.5) * width);
            acc += if w.is_finite() { w } else { 0.0 };
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(numeric("σ posterior has no mass on the sampling grid"));
        }
        Ok(Self {
            z,
            sqrt_n: kernel.sqrt_n,
            point: None,
            lo: 0.0,
            width,
            cdf,
        })
    }
}

impl SimplexSampler for GaussianEventPosterior {
    fn dim(&self) -> usize {
        2
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        if let Some(pi) = self.point {
            out[0] = pi;
            out[1] = 1.0 - pi;
            return;
        }
        let total = self.cdf[self.cdf.len() - 1];
        let r = rng.random::<f64>() * total;
        let cell = self.cdf.partition_point(|c| *c <= r).min(self.cdf.len() - 1);
        let sigma = self.lo + (cell as f64 + rng.random::<f64>()) * self.width;
        let u: f64 = rng.sample(StandardNormal);
        let t = self.z / sigma - u / self.sqrt_n;
        out[0] = normal_cdf(t);
        out[1] = normal_cdf(-t);
    }
}
