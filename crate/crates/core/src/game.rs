//! The Forecaster–Client–Nature betting game.
//!
//! The Forecaster posts odds `q`, the Client bets, Nature picks the outcome.
//! Odds are fixed before any bet is placed and the Forecaster never sees
//! the bets. A unit bet on event `i` returns `G_ij = δ_ij/q_i - 1` when `j`
//! occurs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::numerics::{MeanAccumulator, RngStream, StreamRng};
use crate::odds::{draw_simplex_samples, validate_simplex, OddsAssignment, SimplexSampler, Utility};

const SIMPLEX_TOL: f64 = 1e-9;
/// Floor applied to proportional bets so forced full-wealth bets never ruin.
pub const KELLY_BET_FLOOR: f64 = 1e-12;

/// Pay-out matrix of a unit bet under strictly positive odds.
#[derive(Debug, Clone, PartialEq)]
pub struct GameMatrix {
    odds: OddsAssignment,
}

impl GameMatrix {
    pub fn new(odds: OddsAssignment) -> Result<Self> {
        require_positive(&odds)?;
        Ok(Self { odds })
    }

    pub fn odds(&self) -> &OddsAssignment {
        &self.odds
    }

    pub fn dim(&self) -> usize {
        self.odds.len()
    }

    /// `G_ij`: return of a unit bet on `bet` when `outcome` occurs.
    pub fn entry(&self, bet: usize, outcome: usize) -> f64 {
        if bet == outcome {
            self.odds.payout(bet)
        } else {
            -1.0
        }
    }

    /// Expected return of the mixed bet `p` when Nature plays `pi`.
    pub fn expected(&self, p: &[f64], pi: &[f64]) -> f64 {
        let mut v = 0.0;
        for (i, pi_i) in p.iter().enumerate() {
            for (j, pj) in pi.iter().enumerate() {
                v += pi_i * pj * self.entry(i, j);
            }
        }
        v
    }
}

fn require_positive(q: &OddsAssignment) -> Result<()> {
    if let Some(i) = q.q().iter().position(|v| *v <= 0.0) {
        return Err(input(format!("odds component {i} is zero; pay-out is unbounded")));
    }
    Ok(())
}

fn check_dims(q: &OddsAssignment, v: &[f64], what: &str) -> Result<()> {
    if v.len() != q.len() {
        return Err(input(format!(
            "{what} has {} entries but the odds have {}",
            v.len(),
            q.len()
        )));
    }
    validate_simplex(v, SIMPLEX_TOL).map_err(|e| input(format!("{what}: {e}")))
}

/// The Client's minimax mixed strategy `p*_i = q_i/s` and its guaranteed
/// mean pay-out `V* = 1/s - 1`.
pub fn minimax_strategy(q: &OddsAssignment) -> Result<(Vec<f64>, f64)> {
    require_positive(q)?;
    Ok((q.normalized(), 1.0 / q.excess() - 1.0))
}

/// An informed client's unit bet: the event maximising `π_i/q_i` (lowest
/// index on ties), with its expected pay-out `max_i π_i/q_i - 1`.
pub fn informed_linear_bet(q: &OddsAssignment, pi_true: &[f64]) -> Result<(usize, f64)> {
    check_dims(q, pi_true, "true probabilities")?;
    let mut best = (0, f64::NEG_INFINITY);
    for (i, (p, qi)) in pi_true.iter().zip(q.q()).enumerate() {
        let r = if *qi > 0.0 {
            p / qi
        } else if *p > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if r > best.1 {
            best = (i, r);
        }
    }
    Ok((best.0, best.1 - 1.0))
}

/// Expected log-growth `Σ π_i ln(p_i/q_i)` of proportional bets `p`.
///
/// Returns `-∞` when a bet component is zero on an event with positive
/// probability.
pub fn kelly_growth(q: &OddsAssignment, p_bets: &[f64], pi_true: &[f64]) -> Result<f64> {
    check_dims(q, p_bets, "bets")?;
    check_dims(q, pi_true, "true probabilities")?;
    let mut g = 0.0;
    for ((pi, p), qi) in pi_true.iter().zip(p_bets).zip(q.q()) {
        if *pi <= 0.0 {
            continue;
        }
        if *p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        g += pi * (p / qi).ln();
    }
    Ok(g)
}

/// How the Client bets each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClientStrategy {
    /// Unit bet on an event drawn from `p*` each round.
    Minimax,
    /// Unit bet on `argmax π_i/q_i`.
    InformedLinear { pi_true: Vec<f64> },
    /// Entire wealth split in proportion to `π`.
    Kelly { pi_true: Vec<f64> },
    /// Fixed mixed strategy: a unit bet drawn from `bets` under linear
    /// utility, or proportional full-wealth bets under logarithmic.
    Custom { bets: Vec<f64>, utility: Utility },
}

impl ClientStrategy {
    pub fn utility(&self) -> Utility {
        match self {
            ClientStrategy::Minimax | ClientStrategy::InformedLinear { .. } => Utility::Linear,
            ClientStrategy::Kelly { .. } => Utility::Logarithmic,
            ClientStrategy::Custom { utility, .. } => *utility,
        }
    }
}

/// Client wealth `W_0 = 1, W_1, …, W_n`.
///
/// Under logarithmic utility `ln_w` carries `ln W_k`, which stays finite
/// where `w` itself may underflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrajectory {
    pub w: Vec<f64>,
    pub ln_w: Option<Vec<f64>>,
    pub utility: Utility,
}

impl WealthTrajectory {
    /// Per-round gains: pay-outs under linear utility, log-growth under
    /// logarithmic utility.
    pub fn increments(&self) -> Vec<f64> {
        match &self.ln_w {
            Some(ln_w) => ln_w.windows(2).map(|w| w[1] - w[0]).collect(),
            None => self.w.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }

    /// Mean and standard error of [`increments`](Self::increments).
    pub fn increment_stats(&self) -> (f64, f64) {
        let mut acc = MeanAccumulator::default();
        self.increments().into_iter().for_each(|v| acc.push(v));
        (acc.mean(), acc.std_error())
    }
}

fn draw_index(rng: &mut StreamRng, p: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, v) in p.iter().enumerate() {
        acc += v;
        if r < acc {
            return i;
        }
    }
    p.iter().rposition(|v| *v > 0.0).unwrap_or(p.len() - 1)
}

fn floored(p: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = p.iter().map(|x| x.max(KELLY_BET_FLOOR)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Play `rounds` rounds of the game with Nature drawing outcomes from
/// `pi_nature`.
pub fn simulate_wealth(
    q: &OddsAssignment,
    strat: &ClientStrategy,
    pi_nature: &[f64],
    rounds: usize,
    rng: &RngStream,
) -> Result<WealthTrajectory> {
    if rounds < 1 {
        return Err(input("need at least one round"));
    }
    let game = GameMatrix::new(q.clone())?;
    check_dims(q, pi_nature, "nature's probabilities")?;
    let utility = strat.utility();
    enum Plan {
        Fixed(usize),
        Mixed(Vec<f64>),
        Proportional(Vec<f64>),
    }
    let plan = match strat {
        ClientStrategy::Minimax => Plan::Mixed(minimax_strategy(q)?.0),
        ClientStrategy::InformedLinear { pi_true } => Plan::Fixed(informed_linear_bet(q, pi_true)?.0),
        ClientStrategy::Kelly { pi_true } => {
            check_dims(q, pi_true, "true probabilities")?;
            Plan::Proportional(floored(pi_true))
        }
        ClientStrategy::Custom { bets, utility } => {
            check_dims(q, bets, "bets")?;
            match utility {
                Utility::Linear => Plan::Mixed(bets.clone()),
                Utility::Logarithmic => Plan::Proportional(floored(bets)),
            }
        }
    };

    let mut r = rng.rng();
    let mut w = Vec::with_capacity(rounds + 1);
    let mut ln_w = Vec::with_capacity(if utility == Utility::Logarithmic { rounds + 1 } else { 0 });
    w.push(1.0);
    let mut wealth = 1.0;
    let mut ln_wealth = 0.0;
    for _ in 0..rounds {
        let bet = match &plan {
            Plan::Mixed(p) => Some(draw_index(&mut r, p)),
            Plan::Fixed(i) => Some(*i),
            Plan::Proportional(_) => None,
        };
        let outcome = draw_index(&mut r, pi_nature);
        match (&plan, bet) {
            (Plan::Proportional(p), _) => {
                ln_wealth += (p[outcome] / q.q()[outcome]).ln();
                ln_w.push(ln_wealth);
                wealth = ln_wealth.exp();
            }
            (_, Some(i)) => wealth += game.entry(i, outcome),
            _ => unreachable!(),
        }
        w.push(wealth);
    }
    let ln_w = matches!(plan, Plan::Proportional(_)).then(|| {
        let mut v = Vec::with_capacity(rounds + 1);
        v.push(0.0);
        v.extend(ln_w);
        v
    });
    Ok(WealthTrajectory { w, ln_w, utility })
}

/// Posterior average of the informed client's expected gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleCheck {
    pub mean: f64,
    pub std_error: f64,
}

impl MartingaleCheck {
    /// `|mean| ≤ k·SE`.
    pub fn is_fair(&self, k: f64) -> bool {
        self.mean.abs() <= k * self.std_error
    }

    /// `mean ≥ k·SE` with `mean > 0`: the client profits.
    pub fn client_profits(&self, k: f64) -> bool {
        self.mean > 0.0 && self.mean >= k * self.std_error
    }
}

/// Draw `π` from the posterior and average the fully informed client's
/// expected gain at odds `q`: `V(π,q) = max_i π_i/q_i - 1` (linear) or
/// `G(π,q) = Σ π_i ln(π_i/q_i)` (logarithmic). Fair odds give a mean of
/// zero.
///
/// A zero odds component on an event with posterior mass yields an
/// infinite mean.
pub fn martingale_check<S: SimplexSampler + ?Sized>(
    post: &S,
    q: &OddsAssignment,
    utility: Utility,
    replicates: usize,
    rng: &RngStream,
) -> Result<MartingaleCheck> {
    if replicates < 10_000 {
        return Err(input(format!("need at least 10^4 replicates, got {replicates}")));
    }
    let m = q.len();
    if post.dim() != m {
        return Err(input(format!(
            "posterior has {} events but the odds have {m}",
            post.dim()
        )));
    }
    let samples = draw_simplex_samples(post, replicates, rng)?;
    let mut acc = MeanAccumulator::default();
    for pi in samples.chunks_exact(m) {
        let v = match utility {
            Utility::Linear => {
                pi.iter()
                    .zip(q.q())
                    .map(|(p, qi)| if *p == 0.0 { 0.0 } else { p / qi })
                    .fold(f64::NEG_INFINITY, f64::max)
                    - 1.0
            }
            Utility::Logarithmic => pi
                .iter()
                .zip(q.q())
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, qi)| p * (p / qi).ln())
                .sum(),
        };
        if v == f64::INFINITY {
            return Ok(MartingaleCheck {
                mean: f64::INFINITY,
                std_error: 0.0,
            });
        }
        acc.push(v);
    }
    Ok(MartingaleCheck {
        mean: acc.mean(),
        std_error: acc.std_error(),
    })
}
