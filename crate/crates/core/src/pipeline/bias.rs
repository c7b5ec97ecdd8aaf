//! Twelve-parameter bias correction from model to station temperature:
//! `y = p0(x) + p1(x) cos(2πh/24) + p2(x) sin(2πh/24)` with cubic `p_j`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::{epoch_hours, hour_of_day, StationSeries};
use super::spline::CubicSpline;
use crate::error::{input, numeric, OddsError, Result};

/// Names of the basis columns, in coefficient order.
pub const BASIS_NAMES: [&str; 12] = [
    "1", "x", "x^2", "x^3", "cos", "cos*x", "cos*x^2", "cos*x^3", "sin", "sin*x", "sin*x^2", "sin*x^3",
];

const MIN_SAMPLES: usize = 50;
/// Relative residual norm below which a column counts as dependent.
const RANK_TOL: f64 = 1e-9;

fn basis(x: f64, hour: f64) -> [f64; 12] {
    let w = 2.0 * std::f64::consts::PI * hour / 24.0;
    let (s, c) = w.sin_cos();
    let p = [1.0, x, x * x, x * x * x];
    let mut out = [0.0; 12];
    for k in 0..4 {
        out[k] = p[k];
        out[4 + k] = c * p[k];
        out[8 + k] = s * p[k];
    }
    out
}

/// A paired training sample: model temperature `x`, hour of day, station
/// temperature `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSample {
    pub x: f64,
    pub hour: f64,
    pub y: f64,
}

/// Moments of fit residuals. Kurtosis is excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl ResidualStats {
    pub fn from_residuals(r: &[f64]) -> Self {
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let moment = |k: i32| r.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        let var = moment(2);
        let std = var.sqrt();
        let (skewness, kurtosis) = if var > 0.0 {
            (moment(3) / (var * std), moment(4) / (var * var) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Self {
            mean,
            std,
            skewness,
            kurtosis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    coefficients: [f64; 12],
    stats: ResidualStats,
}

impl BiasModel {
    /// Model with given coefficients and residual spread (for tests and
    /// externally fitted corrections).
    pub fn from_coefficients(coefficients: [f64; 12], residual_std: f64) -> Result<Self> {
        if !(residual_std > 0.0 && residual_std.is_finite()) {
            return Err(input(format!("residual std must be positive, got {residual_std}")));
        }
        Ok(Self {
            coefficients,
            stats: ResidualStats {
                mean: 0.0,
                std: residual_std,
                skewness: 0.0,
                kurtosis: 0.0,
            },
        })
    }

    pub fn coefficients(&self) -> &[f64; 12] {
        &self.coefficients
    }

    pub fn residual_std(&self) -> f64 {
        self.stats.std
    }

    pub fn stats(&self) -> &ResidualStats {
        &self.stats
    }

    /// Station-equivalent temperature for model temperature `x` at `hour`.
    pub fn apply(&self, x: f64, hour: f64) -> f64 {
        basis(x, hour).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }

    pub fn residuals(&self, samples: &[BiasSample]) -> Vec<f64> {
        samples.iter().map(|s| s.y - self.apply(s.x, s.hour)).collect()
    }

    pub fn residual_stats(&self, samples: &[BiasSample]) -> ResidualStats {
        ResidualStats::from_residuals(&self.residuals(samples))
    }
}

/// Least-squares fit of the twelve coefficients.
///
/// Columns are tested for linear dependence in basis order by
/// Gram–Schmidt on unit-normalised columns; if any are dependent the error
/// names them and carries the basic solution with those coefficients zero.
pub fn fit_bias_model(samples: &[BiasSample]) -> Result<BiasModel> {
    if samples.len() < MIN_SAMPLES {
        return Err(input(format!(
            "bias fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|s| !(s.x.is_finite() && s.y.is_finite() && s.hour.is_finite()))
    {
        return Err(input("bias samples must be finite"));
    }
    let rows = samples.len();
    let design: Vec<[f64; 12]> = samples.iter().map(|s| basis(s.x, s.hour)).collect();
    let column = |j: usize| DVector::from_iterator(rows, design.iter().map(|r| r[j]));

    let mut accepted: Vec<usize> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    let mut scales = [0.0; 12];
    let mut deficient = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for j in 0..12 {
        let col = column(j);
        let norm = col.norm();
        if !(norm > 0.0) {
            deficient.push(j);
            continue;
        }
        scales[j] = norm;
        let mut v = col / norm;
        for _ in 0..2 {
            for q in &ortho {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let r = v.norm();
        if r < RANK_TOL {
            deficient.push(j);
        } else {
            ortho.push(v / r);
            accepted.push(j);
        }
    }

    let a = DMatrix::from_fn(rows, accepted.len(), |i, k| {
        design[i][accepted[k]] / scales[accepted[k]]
    });
    let b = DVector::from_iterator(rows, samples.iter().map(|s| s.y));
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| numeric(format!("bias least squares failed: {e}")))?;
    let mut coefficients = [0.0; 12];
    for (k, &j) in accepted.iter().enumerate() {
        coefficients[j] = sol[k] / scales[j];
    }
    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| {
            s.y - basis(s.x, s.hour)
                .iter()
                .zip(&coefficients)
                .map(|(b, c)| b * c)
                .sum::<f64>()
        })
        .collect();
    let stats = ResidualStats::from_residuals(&residuals);

    if !deficient.is_empty() {
        return Err(OddsError::RankDeficient {
            directions: deficient.iter().map(|j| BASIS_NAMES[*j].to_string()).collect(),
            coefficients: coefficients.to_vec(),
            residual_std: stats.std,
        });
    }
    if !(stats.std > 0.0) {
        return Err(numeric("bias fit left zero residual spread"));
    }
    Ok(BiasModel { coefficients, stats })
}

/// Pair each station observation inside the model curve's range with the
/// splined model temperature at that time. The curve is over
/// [`epoch_hours`].
pub fn paired_samples(model: &CubicSpline, station: &StationSeries) -> Vec<BiasSample> {
    let (lo, hi) = model.domain();
    station
        .samples()
        .iter()
        .filter_map(|(t, y)| {
            let h = epoch_hours(*t);
            (h >= lo && h <= hi).then(|| BiasSample {
                x: model.eval(h).expect("inside domain"),
                hour: hour_of_day(h),
                y: *y,
            })
        })
        .collect()
}

/// Fit against a splined model series; the pairs must span at least one
/// diurnal cycle.
pub fn fit_bias_model_to_series(model: &CubicSpline, station: &StationSeries) -> Result<BiasModel> {
    let (lo, hi) = model.domain();
    let covered: Vec<f64> = station
        .samples()
        .iter()
        .map(|(t, _)| epoch_hours(*t))
        .filter(|h| *h >= lo && *h <= hi)
        .collect();
    match (covered.first(), covered.last()) {
        (Some(a), Some(b)) if b - a >= 24.0 => {}
        _ => return Err(input("paired model and station series must span at least 24 hours")),
    }
    fit_bias_model(&paired_samples(model, station))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    const TRUE: [f64; 12] = [
        1.5, 0.9, 0.01, -0.0004, 0.8, 0.05, -0.002, 0.0001, -1.2, 0.03, 0.001, -0.00005,
    ];

    fn synthetic(n: usize, noise: f64, seed: u64) -> Vec<BiasSample> {
        let truth = BiasModel::from_coefficients(TRUE, 1.0).unwrap();
        let mut rng = crate::RngStream::new(seed).rng();
        (0..n)
            .map(|i| {
                let x = -5.0 + 30.0 * rng.random::<f64>();
                let hour = (i % 24) as f64;
                let e: f64 = rng.sample(StandardNormal);
                BiasSample {
                    x,
                    hour,
                    y: truth.apply(x, hour) + noise * e,
                }
            })
            .collect()
    }

    #[test]
    fn recovers_noiseless_coefficients() {
        let fit = match fit_bias_model(&synthetic(2000, 0.0, 1)) {
            Err(OddsError::Numeric(_)) => panic!("noiseless fit should leave roundoff residuals"),
            other => other.unwrap(),
        };
        for (a, b) in fit.coefficients().iter().zip(&TRUE) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn residual_spread_matches_noise() {
        let samples = synthetic(10_000, 1.0, 2);
        let fit = fit_bias_model(&samples).unwrap();
        assert!((fit.residual_std() - 1.0).abs() < 0.1);
        assert!(fit.stats().mean.abs() < 1e-10);
        // re-applying the fitted transform reproduces the stored statistics
        assert_eq!(fit.residual_stats(&samples), *fit.stats());
    }

    #[test]
    fn constant_series_is_rank_deficient() {
        let samples: Vec<BiasSample> = (0..100)
            .map(|i| BiasSample {
                x: 4.0,
                hour: (i % 24) as f64,
                y: 7.5,
            })
            .collect();
        match fit_bias_model(&samples) {
            Err(OddsError::RankDeficient {
                directions,
                coefficients,
                residual_std,
            }) => {
                assert!((coefficients[0] - 7.5).abs() < 1e-12);
                assert!(residual_std < 1e-12);
                for name in ["x", "x^2", "x^3", "cos*x", "sin*x^3"] {
                    assert!(
                        directions.iter().any(|d| d == name),
                        "{name} missing from {directions:?}"
                    );
                }
                assert!(!directions.iter().any(|d| d == "1" || d == "cos" || d == "sin"));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_bias_model(&synthetic(20, 1.0, 3)).is_err());
    }
}
