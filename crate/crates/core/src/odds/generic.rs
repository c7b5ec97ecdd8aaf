//! Monte Carlo odds for an arbitrary posterior over the probability simplex.
//!
//! The posterior is represented by a sampler. All expectations are taken
//! over one fixed sample set, so the linear-utility objective is a
//! deterministic, convex function of the odds (common random numbers).

use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;

use super::frequency::BernoulliPosterior;
use super::{validate_simplex, OddsAssignment, Provenance, Utility, P_EPS};
use crate::error::{input, numeric, Result};
use crate::numerics::{minimize_scalar, xlogx, MeanAccumulator, NeumaierSum, RngStream, StreamRng};

/// Source of posterior draws `π` on the simplex.
pub trait SimplexSampler: Sync {
    /// Number of events `m`.
    fn dim(&self) -> usize;
    /// Write one draw into `out` (length [`dim`](Self::dim)).
    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]);
}

/// Degenerate posterior: `π` is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassPosterior {
    pi: Vec<f64>,
}

impl PointMassPosterior {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        validate_simplex(&pi, 1e-9)?;
        Ok(Self { pi })
    }
}

impl SimplexSampler for PointMassPosterior {
    fn dim(&self) -> usize {
        self.pi.len()
    }

    fn sample_into(&self, _rng: &mut StreamRng, out: &mut [f64]) {
        out.copy_from_slice(&self.pi);
    }
}

/// Dirichlet posterior, e.g. multinomial counts `c_i` under a uniform prior
/// give concentrations `c_i + 1`.
#[derive(Debug, Clone)]
pub struct DirichletPosterior {
    gammas: Vec<Gamma<f64>>,
}

impl DirichletPosterior {
    pub fn new(concentration: &[f64]) -> Result<Self> {
        if concentration.len() < 2 {
            return Err(input("Dirichlet posterior needs at least two concentrations"));
        }
        let gammas = concentration
            .iter()
            .map(|&a| {
                if a > 0.0 && a.is_finite() {
                    Gamma::new(a, 1.0).map_err(|e| input(format!("bad concentration {a}: {e}")))
                } else {
                    Err(input(format!("concentrations must be positive, got {a}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gammas })
    }

    /// Uniform distribution on the `m`-event simplex.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(&vec![1.0; m])
    }
}

impl SimplexSampler for DirichletPosterior {
    fn dim(&self) -> usize {
        self.gammas.len()
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        loop {
            let mut total = 0.0;
            for (o, g) in out.iter_mut().zip(&self.gammas) {
                *o = g.sample(rng);
                total += *o;
            }
            if total > 0.0 {
                out.iter_mut().for_each(|o| *o /= total);
                return;
            }
        }
    }
}

impl SimplexSampler for BernoulliPosterior {
    fn dim(&self) -> usize {
        2
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let (a, b) = self.beta_params();
        let g = Beta::new(a, b).expect("beta parameters are at least 1");
        let pi: f64 = g.sample(rng);
        out[0] = pi;
        out[1] = 1.0 - pi;
    }
}

const CHUNK: usize = 4096;
const SIMPLEX_TOL: f64 = 1e-9;

/// Draw `count` posterior samples as a row-major `count × m` matrix.
///
/// Chunks of draws come from independent substreams, so the result does
/// not depend on the number of worker threads.
pub fn draw_simplex_samples<S: SimplexSampler + ?Sized>(
    sampler: &S,
    count: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    let m = sampler.dim();
    if m < 2 {
        return Err(input(format!("sampler dimension must be at least 2, got {m}")));
    }
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            let mut r = rng.substream(c as u64).rng();
            let mut buf = vec![0.0; len * m];
            for row in buf.chunks_exact_mut(m) {
                sampler.sample_into(&mut r, row);
                validate_simplex(row, SIMPLEX_TOL)
                    .map_err(|e| input(format!("sampler produced an off-simplex point {row:?}: {e}")))?;
            }
            Ok(buf)
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

/// Monte Carlo odds with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericOdds {
    pub odds: OddsAssignment,
    /// Posterior mean `π̄`.
    pub pi_bar: Vec<f64>,
    /// Entropy gap `α` (logarithmic utility only).
    pub alpha: Option<f64>,
    /// Monte Carlo standard error of each `q_i`.
    pub std_errors: Vec<f64>,
    /// Standard error of the informed client's mean gain at the returned odds.
    pub gain_std_error: f64,
}

fn check_samples(mc_samples: usize) -> Result<()> {
    if mc_samples < 1000 {
        return Err(input(format!(
            "need at least 1000 Monte Carlo samples, got {mc_samples}"
        )));
    }
    Ok(())
}

fn column_means(samples: &[f64], m: usize) -> Vec<f64> {
    let k = samples.len() / m;
    (0..m)
        .map(|i| {
            let mut acc = NeumaierSum::default();
            samples.iter().skip(i).step_by(m).for_each(|v| acc.add(*v));
            acc.value() / k as f64
        })
        .collect()
}

/// Logarithmic-utility odds `q_i = π̄_i e^α` with `α = H̄ - Σ π̄_i ln π̄_i`,
/// `H̄` the posterior mean of `Σ π_i ln π_i`.
///
/// Standard errors come from the delta method applied to the joint sample
/// means of `π` and `Σ π_i ln π_i`.
pub fn generic_log_odds<S: SimplexSampler + ?Sized>(
    sampler: &S,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<GenericOdds> {
    check_samples(mc_samples)?;
    let m = sampler.dim();
    let samples = draw_simplex_samples(sampler, mc_samples, rng)?;
    let pi_bar = column_means(&samples, m);
    let h: Vec<f64> = samples
        .chunks_exact(m)
        .map(|row| row.iter().map(|p| xlogx(*p)).sum())
        .collect();
    let mut h_acc = NeumaierSum::default();
    h.iter().for_each(|v| h_acc.add(*v));
    let h_bar = h_acc.value() / mc_samples as f64;
    let alpha = (h_bar - pi_bar.iter().map(|p| xlogx(*p)).sum::<f64>()).max(0.0);
    let scale = alpha.exp();
    let q: Vec<f64> = pi_bar.iter().map(|p| p * scale).collect();

    let ln_bar: Vec<f64> = pi_bar.iter().map(|p| if *p > 0.0 { p.ln() } else { 0.0 }).collect();
    let mut infl = vec![MeanAccumulator::default(); m];
    let mut gain = MeanAccumulator::default();
    for (row, hk) in samples.chunks_exact(m).zip(&h) {
        let d_alpha = hk
            - h_bar
            - row
                .iter()
                .zip(&pi_bar)
                .zip(&ln_bar)
                .map(|((p, pb), l)| l * (p - pb))
                .sum::<f64>();
        for i in 0..m {
            infl[i].push(scale * ((row[i] - pi_bar[i]) + pi_bar[i] * d_alpha));
        }
        gain.push(
            row.iter()
                .zip(&q)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, qi)| p * (p / qi).ln())
                .sum::<f64>(),
        );
    }
    let odds = OddsAssignment::new(q, Some(Utility::Logarithmic), Provenance::Generic)?;
    Ok(GenericOdds {
        odds,
        pi_bar,
        alpha: Some(alpha),
        std_errors: infl.iter().map(MeanAccumulator::std_error).collect(),
        gain_std_error: gain.std_error(),
    })
}

/// Mean over samples of `max_i π_i / p_i`.
fn linear_excess(samples: &[f64], m: usize, p: &[f64]) -> f64 {
    let mut acc = NeumaierSum::default();
    for row in samples.chunks_exact(m) {
        acc.add(row.iter().zip(p).map(|(a, b)| a / b).fold(f64::NEG_INFINITY, f64::max));
    }
    acc.value() / (samples.len() / m) as f64
}

const MAX_SWEEPS: usize = 200;
const BATCHES: usize = 8;

/// Linear-utility odds minimising `s = Σ q_i` subject to the informed
/// client's expected gain `E[max_i π_i/q_i] - 1` being zero.
///
/// The constraint is homogeneous of degree −1 in `q`, so for normalized
/// odds `p` the feasible scale is exactly `s(p) = E[max_i π_i/p_i]`, and the
/// problem reduces to minimising this convex function over the simplex.
/// For `m = 2` this is a Brent search; for `m ≥ 3` it runs pairwise
/// coordinate moves starting from `π̄` until a sweep improves `s` by less
/// than `tol`.
pub fn generic_linear_odds<S: SimplexSampler + ?Sized>(
    sampler: &S,
    mc_samples: usize,
    rng: &RngStream,
    tol: f64,
) -> Result<GenericOdds> {
    check_samples(mc_samples)?;
    if !(tol > 0.0) {
        return Err(input(format!("tolerance must be positive, got {tol}")));
    }
    let m = sampler.dim();
    let samples = draw_simplex_samples(sampler, mc_samples, rng)?;
    let pi_bar = column_means(&samples, m);

    let mut p: Vec<f64> = if m == 2 {
        let min = minimize_scalar(|t| linear_excess(&samples, 2, &[t, 1.0 - t]), P_EPS, 1.0 - P_EPS, tol)?;
        vec![min.argmin, 1.0 - min.argmin]
    } else {
        let floor = P_EPS.max(1e-6 / m as f64);
        let mut p: Vec<f64> = pi_bar.iter().map(|v| v.max(floor)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        let mut best = linear_excess(&samples, m, &p);
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let start = best;
            for i in 0..m {
                for j in (i + 1)..m {
                    let pair = p[i] + p[j];
                    if pair <= 2.0 * floor {
                        continue;
                    }
                    let mut trial = p.clone();
                    let min = minimize_scalar(
                        |t| {
                            trial[i] = t;
                            trial[j] = pair - t;
                            linear_excess(&samples, m, &trial)
                        },
                        floor,
                        pair - floor,
                        tol * pair,
                    )?;
                    if min.min < best {
                        best = min.min;
                        p[i] = min.argmin;
                        p[j] = pair - min.argmin;
                    }
                }
            }
            if start - best < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(numeric(format!(
                "coordinate search did not settle within {MAX_SWEEPS} sweeps (s={best})"
            )));
        }
        p
    };
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);

    let s = linear_excess(&samples, m, &p);
    if !(s.is_finite() && s > 0.0) {
        return Err(numeric(format!("linear excess is {s} at p={p:?}")));
    }
    let q: Vec<f64> = p.iter().map(|v| v * s).collect();

    // Batch means of the scale at the chosen direction.
    let k = mc_samples;
    let mut batches = MeanAccumulator::default();
    for b in 0..BATCHES {
        let (lo, hi) = (b * k / BATCHES, (b + 1) * k / BATCHES);
        batches.push(linear_excess(&samples[lo * m..hi * m], m, &p));
    }
    let s_se = batches.std_error();
    let mut gain = MeanAccumulator::default();
    for row in samples.chunks_exact(m) {
        gain.push(row.iter().zip(&q).map(|(a, b)| a / b).fold(f64::NEG_INFINITY, f64::max) - 1.0);
    }

    let odds = OddsAssignment::new(q, Some(Utility::Linear), Provenance::Generic)?;
    Ok(GenericOdds {
        odds,
        pi_bar,
        alpha: None,
        std_errors: p.iter().map(|v| v * s_se).collect(),
        gain_std_error: gain.std_error(),
    })
}
