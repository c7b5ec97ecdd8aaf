//! Synthetic station observations and ensemble forecasts.
//!
//! The true temperature is a seasonal climatology plus a diurnal cycle
//! plus an Ornstein–Uhlenbeck anomaly; the station reads it with
//! autocorrelated local noise. The forecast model lives in its own
//! temperature space (gain, offset and a damped diurnal cycle), so the
//! bias correction has real work to do. Ensemble forecasts share a
//! heavy-tailed error path whose variance grows with lead time, and each
//! member adds its own perturbation scaled down by the under-dispersion
//! factor, so the ensemble spread understates the actual error.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use super::data::{epoch_hours, hour_of_day, EnsembleForecast, StationSeries};
use crate::error::{input, Result};
use crate::numerics::{RngStream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// First launch, at 00 UTC.
    pub start: DateTime<Utc>,
    pub members: usize,
    pub lead_step_hours: f64,
    pub max_lead_hours: f64,
    /// Annual mean temperature and seasonal half-range (°C); coldest in
    /// mid January.
    pub clim_mean: f64,
    pub clim_amplitude: f64,
    /// Diurnal half-range (°C), warmest at 15 UTC.
    pub diurnal_amplitude: f64,
    pub anomaly_std: f64,
    pub anomaly_timescale_hours: f64,
    /// Station noise std and its hour-to-hour autocorrelation.
    pub obs_noise_std: f64,
    pub obs_noise_rho: f64,
    /// Model space: `x = gain·(y - D) + damping·D + offset`, `D` the diurnal term.
    pub model_gain: f64,
    pub model_offset: f64,
    pub model_diurnal_damping: f64,
    /// Error of the control at lead zero.
    pub analysis_error_std: f64,
    /// Saturated forecast error std and its growth timescale.
    pub forecast_error_std: f64,
    pub error_growth_hours: f64,
    /// Step-to-step correlation of forecast errors along the lead axis.
    pub error_rho: f64,
    /// Ensemble spread relative to the actual forecast error; below one
    /// the ensemble is under-dispersive.
    pub under_dispersion: f64,
    /// Degrees of freedom of the Student-t error innovations.
    pub tail_df: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            start: Utc.with_ymd_and_hms(2005, 1, 1, 0, 0, 0).unwrap(),
            members: 10,
            lead_step_hours: 6.0,
            max_lead_hours: 264.0,
            clim_mean: 11.0,
            clim_amplitude: 7.0,
            diurnal_amplitude: 4.0,
            anomaly_std: 3.0,
            anomaly_timescale_hours: 72.0,
            obs_noise_std: 0.3,
            obs_noise_rho: 0.95,
            model_gain: 0.9,
            model_offset: -1.0,
            model_diurnal_damping: 0.6,
            analysis_error_std: 0.5,
            forecast_error_std: 3.5,
            error_growth_hours: 120.0,
            error_rho: 0.97,
            under_dispersion: 0.8,
            tail_df: 6.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lead_step_hours", self.lead_step_hours),
            ("max_lead_hours", self.max_lead_hours),
            ("anomaly_timescale_hours", self.anomaly_timescale_hours),
            ("model_gain", self.model_gain),
            ("error_growth_hours", self.error_growth_hours),
            ("under_dispersion", self.under_dispersion),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(input(format!("synthetic.{name} must be positive, got {v}")));
            }
        }
        if self.members < 2 {
            return Err(input("synthetic.members must be at least 2"));
        }
        if !(self.tail_df > 2.0) {
            return Err(input(format!(
                "synthetic.tail_df must exceed 2 for finite variance, got {}",
                self.tail_df
            )));
        }
        if !(0.0..1.0).contains(&self.obs_noise_rho) || !(0.0..1.0).contains(&self.error_rho) {
            return Err(input("synthetic correlations must lie in [0, 1)"));
        }
        Ok(())
    }

    fn climatology(&self, t: f64) -> f64 {
        let day = t / 24.0 - epoch_hours(Utc.with_ymd_and_hms(2005, 1, 15, 0, 0, 0).unwrap()) / 24.0;
        self.clim_mean - self.clim_amplitude * (2.0 * std::f64::consts::PI * day / 365.25).cos()
    }

    fn diurnal(&self, t: f64) -> f64 {
        self.diurnal_amplitude * (2.0 * std::f64::consts::PI * (hour_of_day(t) - 15.0) / 24.0).cos()
    }

    /// Station-space temperature to model space.
    fn to_model(&self, y: f64, t: f64) -> f64 {
        let d = self.diurnal(t);
        self.model_gain * (y - d) + self.model_diurnal_damping * d + self.model_offset
    }

    fn error_variance(&self, lead: f64) -> f64 {
        let a = self.analysis_error_std * self.analysis_error_std;
        let f = self.forecast_error_std * self.forecast_error_std;
        a + (f - a).max(0.0) * (1.0 - (-lead / self.error_growth_hours).exp())
    }
}

/// Generated station record and daily 00 UTC ensemble launches.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub station: StationSeries,
    pub forecasts: Vec<EnsembleForecast>,
}

fn t_innovation(rng: &mut StreamRng, t: &StudentT<f64>, df: f64) -> f64 {
    t.sample(rng) * ((df - 2.0) / df).sqrt()
}

/// Path along the lead grid with marginal variance `v[k]` and lag-one
/// correlation close to `rho`.
fn error_path(rng: &mut StreamRng, v: &[f64], rho: f64, t: &StudentT<f64>, df: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut e = v[0].sqrt() * t_innovation(rng, t, df);
    out.push(e);
    for k in 1..v.len() {
        let r = rho.min((v[k] / v[k - 1]).sqrt());
        e = r * e + (v[k] - r * r * v[k - 1]).max(0.0).sqrt() * t_innovation(rng, t, df);
        out.push(e);
    }
    out
}

/// Generate `launches` daily launches starting at `config.start`, with the
/// station record covering every forecast window.
pub fn generate(config: &SyntheticConfig, launches: usize, rng: &RngStream) -> Result<SyntheticData> {
    config.validate()?;
    if launches == 0 {
        return Err(input("need at least one launch"));
    }
    let t0 = epoch_hours(config.start);
    let hours = launches * 24 + config.max_lead_hours.ceil() as usize + 48;
    let student = StudentT::new(config.tail_df).map_err(|e| input(format!("bad tail_df: {e}")))?;

    // Truth and station, hourly from t0.
    let mut r = rng.substream(0).rng();
    let phi = (-1.0 / config.anomaly_timescale_hours).exp();
    let mut anomaly = config.anomaly_std * r.sample::<f64, _>(StandardNormal);
    let mut noise = config.obs_noise_std * r.sample::<f64, _>(StandardNormal);
    let mut truth = Vec::with_capacity(hours);
    let mut station = Vec::with_capacity(hours);
    for h in 0..hours {
        let t = t0 + h as f64;
        let y = config.climatology(t) + config.diurnal(t) + anomaly;
        truth.push(y);
        station.push((config.start + Duration::hours(h as i64), y + noise));
        anomaly = phi * anomaly + (1.0 - phi * phi).sqrt() * config.anomaly_std * r.sample::<f64, _>(StandardNormal);
        let rho = config.obs_noise_rho;
        noise = rho * noise + (1.0 - rho * rho).sqrt() * config.obs_noise_std * r.sample::<f64, _>(StandardNormal);
    }

    let steps = (config.max_lead_hours / config.lead_step_hours).floor() as usize;
    let leads: Vec<f64> = (0..=steps).map(|k| k as f64 * config.lead_step_hours).collect();
    let err_var: Vec<f64> = leads.iter().map(|l| config.error_variance(*l)).collect();
    let spread_var: Vec<f64> = err_var
        .iter()
        .map(|v| v * config.under_dispersion * config.under_dispersion)
        .collect();
    let truth_at = |t: f64| -> f64 {
        let i = (t - t0).floor() as usize;
        let f = t - t0 - i as f64;
        truth[i] * (1.0 - f) + truth[(i + 1).min(truth.len() - 1)] * f
    };

    let forecasts = (0..launches)
        .map(|d| {
            let mut r = rng.substream(1 + d as u64).rng();
            let launch_h = t0 + 24.0 * d as f64;
            let common = error_path(&mut r, &err_var, config.error_rho, &student, config.tail_df);
            let to_model = |e: &[f64]| -> Vec<f64> {
                leads
                    .iter()
                    .zip(e)
                    .map(|(l, e)| {
                        let t = launch_h + l;
                        config.to_model(truth_at(t) + e, t)
                    })
                    .collect()
            };
            let control = to_model(&common);
            let members = (0..config.members)
                .map(|_| {
                    let own = error_path(&mut r, &spread_var, config.error_rho, &student, config.tail_df);
                    let e: Vec<f64> = common.iter().zip(&own).map(|(a, b)| a + b).collect();
                    to_model(&e)
                })
                .collect();
            EnsembleForecast::new(config.start + Duration::days(d as i64), leads.clone(), control, members)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticData {
        station: StationSeries::new(station)?,
        forecasts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_reproducibility() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg, 3, &RngStream::new(5)).unwrap();
        let b = generate(&cfg, 3, &RngStream::new(5)).unwrap();
        assert_eq!(a.station, b.station);
        assert_eq!(a.forecasts, b.forecasts);
        assert_eq!(a.forecasts.len(), 3);
        assert_eq!(a.forecasts[0].members.len(), 10);
        assert_eq!(a.forecasts[0].lead_hours.len(), 45);
        let last = a.forecasts[2].launch + Duration::hours(264 + 18);
        assert!(a.station.samples().last().unwrap().0 >= last);
    }

    #[test]
    fn ensemble_is_under_dispersive() {
        let cfg = SyntheticConfig {
            obs_noise_std: 0.0,
            ..SyntheticConfig::default()
        };
        let data = generate(&cfg, 300, &RngStream::new(6)).unwrap();
        let k = 20; // lead 120 h
        let (mut spread, mut err) = (0.0, 0.0);
        for f in &data.forecasts {
            let t = epoch_hours(f.launch) + f.lead_hours[k];
            let obs = data
                .station
                .samples()
                .iter()
                .find(|(s, _)| epoch_hours(*s) == t)
                .unwrap()
                .1;
            let truth = cfg.to_model(obs, t);
            let xs: Vec<f64> = f.members.iter().map(|m| m[k]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            spread += xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            err += (mean - truth).powi(2);
        }
        // population spread u²v·(m-1)/m against mean error v·(1 + u²/m)
        let (u, m) = (cfg.under_dispersion, cfg.members as f64);
        let expected = u * ((m - 1.0) / m / (1.0 + u * u / m)).sqrt();
        let ratio = (spread / err).sqrt();
        assert!(
            (ratio - expected).abs() < 0.08,
            "spread/error ratio {ratio}, expected {expected}"
        );
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SyntheticConfig::default();
        assert!(SyntheticConfig {
            under_dispersion: 0.0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(SyntheticConfig {
            tail_df: 2.0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(SyntheticConfig { members: 1, ..cfg }.validate().is_err());
    }
}
