//! Adaptive Gauss–Kronrod quadrature in one and two dimensions, plus a
//! seeded Monte Carlo alternative for the two-dimensional case.
//!
//! The 2-D domain is the truncated posterior box used by the Gaussian odds
//! engines: `σ ∈ (0, R_σ]` on the outer axis and a standardized location
//! coordinate `μ ∈ [-W, W]` on the inner axis. Integrals may be vector valued
//! so that several integrands sharing a domain (A, B and C, say) are
//! computed in one sweep.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use crate::error::{input, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances and budget for [`integrate_1d`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evaluations: usize,
}

/// Vector-valued quadrature result.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    f(center, buf);
    for k in 0..dim {
        kron[k] = WGK[7] * buf[k];
        gauss[k] = WG[3] * buf[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for x in [center - dx, center + dx] {
            f(x, buf);
            for k in 0..dim {
                kron[k] += WGK[j] * buf[k];
                if j % 2 == 1 {
                    gauss[k] += WG[j / 2] * buf[k];
                }
            }
        }
    }
    let value: Vec<f64> = kron.iter().map(|v| v * half).collect();
    let error = kron.iter().zip(&gauss).map(|(k, g)| ((k - g) * half).abs()).collect();
    Segment { a, b, value, error }
}

/// Adaptive G7/K15 integration of a vector-valued integrand over `[a, b]`.
///
/// `breaks` are interior points where the integrand may be discontinuous;
/// the rule never straddles them. Convergence is judged on the first
/// `checked` components, each against `max(abs_tol, rel_tol · max_j |I_j|)`;
/// remaining components are carried along (used for propagated errors).
#[allow(clippy::too_many_arguments)]
pub fn integrate_1d<F>(
    mut f: F,
    dim: usize,
    checked: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    initial_panels: usize,
    opts: QuadOptions,
) -> QuadResult
where
    F: FnMut(f64, &mut [f64]),
{
    let mut buf = vec![0.0; dim];
    let mut points: Vec<f64> = Vec::with_capacity(initial_panels + breaks.len() + 1);
    let panels = initial_panels.max(1);
    for i in 0..=panels {
        points.push(a + (b - a) * i as f64 / panels as f64);
    }
    points.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut segments: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&mut f, w[0], w[1], dim, &mut buf))
        .collect();
    let mut evaluations = 15 * segments.len();

    loop {
        let mut total = vec![0.0; dim];
        let mut total_err = vec![0.0; dim];
        for s in &segments {
            for k in 0..dim {
                total[k] += s.value[k];
                total_err[k] += s.error[k];
            }
        }
        let scale = total[..checked].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        let worst = total_err[..checked].iter().fold(0.0f64, |m, v| m.max(*v));
        if worst <= target || evaluations + 30 > opts.max_evaluations {
            return QuadResult {
                value: total,
                error: total_err,
                evaluations,
                converged: worst <= target,
            };
        }
        // bisect the segment with the largest checked error
        let (idx, _) = segments
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.error[..checked].iter().fold(0.0f64, |m, v| m.max(*v))))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let seg = segments.swap_remove(idx);
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval can no longer be split in floating point.
            return QuadResult {
                value: total,
                error: total_err,
                evaluations,
                converged: false,
            };
        }
        segments.push(gk15(&mut f, seg.a, mid, dim, &mut buf));
        segments.push(gk15(&mut f, mid, seg.b, dim, &mut buf));
        evaluations += 30;
    }
}

/// Integration method for [`integrate_2d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QuadMethod {
    /// Nested adaptive Gauss–Kronrod.
    Adaptive,
    /// Uniform sampling of the box with `max_evaluations` points.
    MonteCarlo { seed: u64 },
}

/// Truncated integration domain and accuracy target for 2-D integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature2DSpec {
    /// Upper limit `R_σ` of the outer (σ) axis; the lower limit is 0.
    pub sigma_truncation: f64,
    /// Half-width `W` of the inner axis.
    pub mu_halfwidth: f64,
    pub rel_tolerance: f64,
    pub max_evaluations: usize,
    pub method: QuadMethod,
}

impl Default for Quadrature2DSpec {
    fn default() -> Self {
        Self {
            sigma_truncation: 8.0,
            mu_halfwidth: 8.0,
            rel_tolerance: 1e-9,
            max_evaluations: 20_000_000,
            method: QuadMethod::Adaptive,
        }
    }
}

impl Quadrature2DSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_truncation > 0.0) || !self.sigma_truncation.is_finite() {
            return Err(input(format!(
                "sigma_truncation must be > 0, got {}",
                self.sigma_truncation
            )));
        }
        if !(self.mu_halfwidth > 0.0) || !self.mu_halfwidth.is_finite() {
            return Err(input(format!("mu_halfwidth must be > 0, got {}", self.mu_halfwidth)));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(input(format!("rel_tolerance must be > 0, got {}", self.rel_tolerance)));
        }
        if self.max_evaluations == 0 {
            return Err(input("max_evaluations must be positive"));
        }
        Ok(())
    }
}

/// Scalar 2-D integral result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad2DResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// False when the budget ran out before the tolerance was met; the
    /// value is then the best available estimate.
    pub converged: bool,
}

const OUTER_PANELS: usize = 24;
const INNER_PANELS: usize = 2;

/// Integrate `f(μ, σ)` over `σ ∈ (0, R_σ]`, `μ ∈ [-W, W]`.
pub fn integrate_2d<F>(mut f: F, spec: &Quadrature2DSpec) -> Result<Quad2DResult>
where
    F: FnMut(f64, f64) -> f64,
{
    let r = integrate_2d_vec(1, |mu, sigma, out: &mut [f64]| out[0] = f(mu, sigma), |_| None, spec)?;
    Ok(Quad2DResult {
        value: r.value[0],
        error_estimate: r.error[0],
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Vector-valued version of [`integrate_2d`].
///
/// `split(σ)` optionally returns an inner-axis point where the integrand
/// jumps (a region boundary); the inner rule is split there.
pub fn integrate_2d_vec<F, S>(dim: usize, mut f: F, split: S, spec: &Quadrature2DSpec) -> Result<QuadResult>
where
    F: FnMut(f64, f64, &mut [f64]),
    S: Fn(f64) -> Option<f64>,
{
    spec.validate()?;
    let w = spec.mu_halfwidth;
    let r = spec.sigma_truncation;
    match spec.method {
        QuadMethod::MonteCarlo { seed } => {
            let mut rng = RngStream::new(seed).rng();
            let n = spec.max_evaluations;
            let area = 2.0 * w * r;
            let mut buf = vec![0.0; dim];
            let mut sum = vec![0.0; dim];
            let mut sumsq = vec![0.0; dim];
            for _ in 0..n {
                // σ drawn from (0, R]
                let sigma = r * (1.0 - rng.random::<f64>());
                let mu = w * (2.0 * rng.random::<f64>() - 1.0);
                f(mu, sigma, &mut buf);
                for k in 0..dim {
                    sum[k] += buf[k];
                    sumsq[k] += buf[k] * buf[k];
                }
            }
            let nf = n as f64;
            let value: Vec<f64> = sum.iter().map(|s| area * s / nf).collect();
            let error: Vec<f64> = sum
                .iter()
                .zip(&sumsq)
                .map(|(s, ss)| {
                    let mean = s / nf;
                    let var = (ss / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
                    area * (var / nf).sqrt()
                })
                .collect();
            let scale = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let converged = error.iter().all(|e| *e <= spec.rel_tolerance * scale);
            Ok(QuadResult {
                value,
                error,
                evaluations: n,
                converged,
            })
        }
        QuadMethod::Adaptive => {
            let inner_opts = QuadOptions {
                abs_tol: 0.0,
                rel_tol: spec.rel_tolerance * 0.1,
                max_evaluations: (spec.max_evaluations / 200).clamp(600, 30_000),
            };
            let mut inner_evals = 0usize;
            let outer = integrate_1d(
                |sigma, out: &mut [f64]| {
                    let brk: Vec<f64> = split(sigma).into_iter().collect();
                    let res = integrate_1d(
                        |mu, o: &mut [f64]| f(mu, sigma, o),
                        dim,
                        dim,
                        -w,
                        w,
                        &brk,
                        INNER_PANELS,
                        inner_opts,
                    );
                    inner_evals += res.evaluations;
                    out[..dim].copy_from_slice(&res.value);
                    out[dim..].copy_from_slice(&res.error);
                },
                2 * dim,
                dim,
                0.0,
                r,
                &[],
                OUTER_PANELS,
                QuadOptions {
                    abs_tol: 0.0,
                    rel_tol: spec.rel_tolerance * 0.5,
                    max_evaluations: (spec.max_evaluations / 50).max(OUTER_PANELS * 15 + 30),
                },
            );
            let value = outer.value[..dim].to_vec();
            let error: Vec<f64> = (0..dim).map(|k| outer.error[k] + outer.value[dim + k].abs()).collect();
            let scale = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let evaluations = inner_evals;
            let converged = outer.converged
                && error.iter().all(|e| *e <= spec.rel_tolerance * scale)
                && evaluations <= spec.max_evaluations;
            Ok(QuadResult {
                value,
                error,
                evaluations,
                converged,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::normal_pdf;

    #[test]
    fn one_d_polynomial_exact() {
        let r = integrate_1d(
            |x, o: &mut [f64]| o[0] = x.powi(5) - 3.0 * x,
            1,
            1,
            0.0,
            2.0,
            &[],
            1,
            QuadOptions {
                abs_tol: 0.0,
                rel_tol: 1e-12,
                max_evaluations: 10_000,
            },
        );
        assert!((r.value[0] - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn one_d_step_with_break() {
        let r = integrate_1d(
            |x, o: &mut [f64]| o[0] = if x < 0.3 { 1.0 } else { 0.0 },
            1,
            1,
            0.0,
            1.0,
            &[0.3],
            1,
            QuadOptions {
                abs_tol: 0.0,
                rel_tol: 1e-13,
                max_evaluations: 1000,
            },
        );
        assert!((r.value[0] - 0.3).abs() < 1e-14);
        // one panel per side of the break, exact without refinement
        assert_eq!(r.evaluations, 30);
    }

    #[test]
    fn half_plane_normal() {
        let spec = Quadrature2DSpec {
            rel_tolerance: 1e-10,
            ..Default::default()
        };
        let r = integrate_2d(|mu, sigma| normal_pdf(mu) * normal_pdf(sigma), &spec).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9, "{:?}", r);
        assert!(r.converged);
    }

    #[test]
    fn unit_box_area() {
        let spec = Quadrature2DSpec {
            sigma_truncation: 1.0,
            mu_halfwidth: 0.5,
            ..Default::default()
        };
        let r = integrate_2d(|_, _| 1.0, &spec).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        let mc = Quadrature2DSpec {
            method: QuadMethod::MonteCarlo { seed: 3 },
            max_evaluations: 1000,
            ..spec
        };
        let r = integrate_2d(|_, _| 1.0, &mc).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let spec = Quadrature2DSpec {
            rel_tolerance: 1e-15,
            max_evaluations: 1000,
            ..Default::default()
        };
        let r = integrate_2d(|mu, sigma| (mu * sigma * 40.0).sin().abs(), &spec).unwrap();
        assert!(!r.converged);
        assert!(r.value.is_finite());
    }

    #[test]
    fn monte_carlo_deterministic() {
        let spec = Quadrature2DSpec {
            method: QuadMethod::MonteCarlo { seed: 11 },
            max_evaluations: 10_000,
            ..Default::default()
        };
        let f = |mu: f64, sigma: f64| normal_pdf(mu) * normal_pdf(sigma);
        let a = integrate_2d(f, &spec).unwrap();
        let b = integrate_2d(f, &spec).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 0.5).abs() < 5.0 * a.error_estimate);
    }

    #[test]
    fn invalid_spec() {
        let spec = Quadrature2DSpec {
            rel_tolerance: 0.0,
            ..Default::default()
        };
        assert!(integrate_2d(|_, _| 1.0, &spec).is_err());
        let spec = Quadrature2DSpec {
            sigma_truncation: -1.0,
            ..Default::default()
        };
        assert!(integrate_2d(|_, _| 1.0, &spec).is_err());
    }
}
