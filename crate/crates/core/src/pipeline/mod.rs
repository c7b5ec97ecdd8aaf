//! Ensemble temperature forecasts turned into odds and scored against a
//! challenge client.
//!
//! Workflow: ingest station and ensemble series ([`data`]), spline them
//! ([`spline`]), fit the model-to-station bias correction ([`bias`]), post
//! odds from four forecasters on a threshold event ([`forecast`]), and
//! settle the challenge client's bets over a campaign ([`campaign`]).
//! [`synthetic`] generates stand-in data with a known error structure.

pub mod bias;
pub mod campaign;
pub mod data;
pub mod forecast;
pub mod spline;
pub mod synthetic;

pub use bias::{fit_bias_model, fit_bias_model_to_series, paired_samples, BiasModel, BiasSample, ResidualStats};
pub use campaign::{
    plot_transform, run_campaign, run_campaign_on, settle_bet, BetRecord, CampaignConfig, CampaignData, CampaignResult,
    DataFiles, PayoutRow, Totals,
};
pub use data::{epoch_hours, hour_of_day, EnsembleForecast, StationSeries};
pub use forecast::{
    challenge_client, challenge_probability, forecaster_odds, odds_from_members, AdjustedEnsemble, Aggregation,
    ForecastEvent, ForecasterKind, ForecasterSettings,
};
pub use spline::CubicSpline;
pub use synthetic::{generate, SyntheticConfig, SyntheticData};
