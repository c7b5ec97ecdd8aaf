//! Using odds directly for decisions: hedging an investment and choosing
//! whether to mitigate a loss.
//!
//! Both constructions buy bets at the posted odds so that the client's
//! outcome no longer depends on whether the event `E` occurs. The odds are
//! used as posted; they are never normalised into probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::odds::OddsAssignment;

fn binary_positive(odds: &OddsAssignment) -> Result<(f64, f64)> {
    if odds.len() != 2 {
        return Err(input(format!(
            "decision problems need binary odds, got {} events",
            odds.len()
        )));
    }
    let (q, qp) = (odds.q()[0], odds.q()[1]);
    if !(q > 0.0 && qp > 0.0) {
        return Err(input(format!("decision problems need positive odds, got ({q}, {qp})")));
    }
    Ok((q, qp))
}

/// Realised value when stakes `bets = (λ, λ')` ride on `E` and `E'` on top
/// of a base value, at odds `(q, q')`.
fn with_bets(base: f64, bets: (f64, f64), odds: (f64, f64), event: bool) -> f64 {
    let (l, lp) = bets;
    let (q, qp) = odds;
    if event {
        base + l * (1.0 / q - 1.0) - lp
    } else {
        base - l + lp * (1.0 / qp - 1.0)
    }
}

/// An investment returning `R` if `E` occurs and `R'` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestmentProblem {
    pub r_on_event: f64,
    pub r_on_complement: f64,
    pub odds: OddsAssignment,
}

/// Hedge stakes and the outcome-independent return they lock in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hedge {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub guaranteed_return: f64,
}

impl InvestmentProblem {
    pub fn new(r_on_event: f64, r_on_complement: f64, odds: OddsAssignment) -> Result<Self> {
        if !(r_on_event.is_finite() && r_on_complement.is_finite()) {
            return Err(input("investment returns must be finite"));
        }
        binary_positive(&odds)?;
        Ok(Self {
            r_on_event,
            r_on_complement,
            odds,
        })
    }

    /// Realised return with hedge stakes `(λ, λ')` when `E` does or does
    /// not occur.
    pub fn realized(&self, lambda: f64, lambda_prime: f64, event: bool) -> f64 {
        let q = (self.odds.q()[0], self.odds.q()[1]);
        let base = if event { self.r_on_event } else { self.r_on_complement };
        with_bets(base, (lambda, lambda_prime), q, event)
    }
}

/// Bet against the better branch so both outcomes return the same amount.
pub fn hedge_investment(prob: &InvestmentProblem) -> Result<Hedge> {
    let (q, qp) = binary_positive(&prob.odds)?;
    let (r, rp) = (prob.r_on_event, prob.r_on_complement);
    Ok(if r > rp {
        Hedge {
            lambda: 0.0,
            lambda_prime: qp * (r - rp),
            guaranteed_return: (1.0 - qp) * r + qp * rp,
        }
    } else if r < rp {
        Hedge {
            lambda: q * (rp - r),
            lambda_prime: 0.0,
            guaranteed_return: q * r + (1.0 - q) * rp,
        }
    } else {
        Hedge {
            lambda: 0.0,
            lambda_prime: 0.0,
            guaranteed_return: r,
        }
    })
}

/// A loss `L` if `E` occurs, which an action costing `C` reduces: with the
/// action the client loses `M` if `E` occurs and `C` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationProblem {
    pub loss: f64,
    pub action_cost: f64,
    pub mitigated_loss: f64,
    pub odds: OddsAssignment,
}

/// Chosen course of action with hedge stakes `(λ, λ')` and the
/// outcome-independent value (negative for a loss).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mitigation {
    pub take_action: bool,
    pub bets: (f64, f64),
    pub fixed_loss: f64,
}

impl MitigationProblem {
    pub fn new(loss: f64, action_cost: f64, mitigated_loss: f64, odds: OddsAssignment) -> Result<Self> {
        for (name, v) in [("L", loss), ("C", action_cost), ("M", mitigated_loss)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if loss <= mitigated_loss {
            return Err(input(format!(
                "mitigated loss M={mitigated_loss} must be below the loss L={loss}"
            )));
        }
        binary_positive(&odds)?;
        Ok(Self {
            loss,
            action_cost,
            mitigated_loss,
            odds,
        })
    }

    /// Realised value for a decision and stakes when `E` does or does not
    /// occur.
    pub fn realized(&self, take_action: bool, bets: (f64, f64), event: bool) -> f64 {
        let q = (self.odds.q()[0], self.odds.q()[1]);
        let base = match (take_action, event) {
            (false, true) => -self.loss,
            (false, false) => 0.0,
            (true, true) => -self.mitigated_loss,
            (true, false) => -self.action_cost,
        };
        with_bets(base, bets, q, event)
    }
}

/// Hedge both courses of action and pick the one with the smaller fixed
/// loss. Ties keep the status quo.
///
/// Without action the client bets `qL` on `E`, fixing the loss at `qL`.
/// With action and `C ≤ M` it bets `q(M-C)` on `E`, fixing
/// `qM + (1-q)C`; with `M < C` it bets `q'(C-M)` on `E'`, fixing
/// `(1-q')M + q'C`.
pub fn mitigate(prob: &MitigationProblem) -> Result<Mitigation> {
    let (q, qp) = binary_positive(&prob.odds)?;
    let (l, c, m) = (prob.loss, prob.action_cost, prob.mitigated_loss);
    let idle = Mitigation {
        take_action: false,
        bets: (q * l, 0.0),
        fixed_loss: -q * l,
    };
    let act = if c <= m {
        Mitigation {
            take_action: true,
            bets: (q * (m - c), 0.0),
            fixed_loss: -(q * m + (1.0 - q) * c),
        }
    } else {
        Mitigation {
            take_action: true,
            bets: (0.0, qp * (c - m)),
            fixed_loss: -((1.0 - qp) * m + qp * c),
        }
    };
    Ok(if act.fixed_loss > idle.fixed_loss { act } else { idle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn odds(q: f64, qp: f64) -> OddsAssignment {
        OddsAssignment::binary(q, qp).unwrap()
    }

    #[test]
    fn hedge_examples() {
        let p = InvestmentProblem::new(10.0, 0.0, odds(0.5, 0.6)).unwrap();
        let h = hedge_investment(&p).unwrap();
        assert!((h.lambda_prime - 6.0).abs() < 1e-12 && h.lambda == 0.0);
        assert!((h.guaranteed_return - 4.0).abs() < 1e-12);

        let p = InvestmentProblem::new(5.0, 5.0, odds(0.5, 0.6)).unwrap();
        assert_eq!(
            hedge_investment(&p).unwrap(),
            Hedge {
                lambda: 0.0,
                lambda_prime: 0.0,
                guaranteed_return: 5.0
            }
        );

        let p = InvestmentProblem::new(0.0, 10.0, odds(0.556, 0.855)).unwrap();
        let h = hedge_investment(&p).unwrap();
        assert!((h.lambda - 5.56).abs() < 1e-12);
        assert!((h.guaranteed_return - 4.44).abs() < 1e-12);
        for event in [true, false] {
            assert!((p.realized(h.lambda, h.lambda_prime, event) - 4.44).abs() < 1e-12);
        }
    }

    #[test]
    fn mitigation_examples() {
        let p = MitigationProblem::new(100.0, 10.0, 20.0, odds(0.2, 0.9)).unwrap();
        let d = mitigate(&p).unwrap();
        assert!(d.take_action);
        assert!((d.fixed_loss + 12.0).abs() < 1e-12);

        let p = MitigationProblem::new(100.0, 10.0, 20.0, odds(0.05, 0.99)).unwrap();
        let d = mitigate(&p).unwrap();
        assert!(!d.take_action);
        assert!((d.fixed_loss + 5.0).abs() < 1e-12);

        let p = MitigationProblem::new(100.0, 10.0, 5.0, odds(0.2, 0.9)).unwrap();
        let d = mitigate(&p).unwrap();
        assert!(d.take_action);
        assert!((d.fixed_loss + 9.5).abs() < 1e-12);
        assert_eq!(d.bets.0, 0.0);
        assert!((d.bets.1 - 4.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_ill_posed() {
        assert!(MitigationProblem::new(10.0, 1.0, 10.0, odds(0.5, 0.5)).is_err());
        assert!(MitigationProblem::new(10.0, 0.0, 5.0, odds(0.5, 0.5)).is_err());
        assert!(MitigationProblem::new(10.0, 1.0, 5.0, odds(0.0, 1.0)).is_err());
        assert!(InvestmentProblem::new(1.0, 2.0, OddsAssignment::generic(vec![0.3, 0.3, 0.4]).unwrap()).is_err());
    }

    #[test]
    fn equal_cost_and_mitigated_loss() {
        let p = MitigationProblem::new(100.0, 10.0, 10.0, odds(0.3, 0.8)).unwrap();
        let d = mitigate(&p).unwrap();
        assert!(d.take_action);
        assert_eq!(d.bets, (0.0, 0.0));
        assert_eq!(d.fixed_loss, -10.0);
    }

    proptest! {
        #[test]
        fn hedge_is_outcome_independent(r in -100.0f64..100.0, rp in -100.0f64..100.0, q in 0.01f64..1.5, qp in 0.01f64..1.5) {
            let p = InvestmentProblem::new(r, rp, odds(q, qp)).unwrap();
            let h = hedge_investment(&p).unwrap();
            let e = p.realized(h.lambda, h.lambda_prime, true);
            let ep = p.realized(h.lambda, h.lambda_prime, false);
            prop_assert!((e - ep).abs() <= 1e-12 * (1.0 + r.abs().max(rp.abs())));
            prop_assert!((e - h.guaranteed_return).abs() <= 1e-12 * (1.0 + r.abs().max(rp.abs())));
        }

        #[test]
        fn mitigation_is_outcome_independent(
            l in 1.0f64..1000.0, cf in 0.01f64..2.0, mf in 0.01f64..0.99, q in 0.01f64..1.0, qp in 0.01f64..1.0
        ) {
            let p = MitigationProblem::new(l, cf * l, mf * l, odds(q, qp)).unwrap();
            let d = mitigate(&p).unwrap();
            let e = p.realized(d.take_action, d.bets, true);
            let ep = p.realized(d.take_action, d.bets, false);
            prop_assert!((e - ep).abs() <= 1e-12 * l);
            prop_assert!((e - d.fixed_loss).abs() <= 1e-12 * l);
        }

        #[test]
        fn guaranteed_return_is_below_expectation(
            r in -100.0f64..100.0, rp in -100.0f64..100.0, q in 0.05f64..0.95, extra in 0.0f64..0.5, t in 0.0f64..1.0
        ) {
            // s > 1 and π between 1 - q' and q
            let qp = 1.0 - q + extra;
            let p = InvestmentProblem::new(r, rp, odds(q, qp)).unwrap();
            let pi = (1.0 - qp) + t * (q - (1.0 - qp));
            let h = hedge_investment(&p).unwrap();
            prop_assert!(h.guaranteed_return <= pi * r + (1.0 - pi) * rp + 1e-12 * (1.0 + r.abs() + rp.abs()));
        }

        #[test]
        fn inflating_odds_never_helps(
            l in 1.0f64..1000.0, cf in 0.01f64..2.0, mf in 0.01f64..0.99, q in 0.01f64..0.5, qp in 0.01f64..0.5, c in 1.0f64..2.0
        ) {
            let base = mitigate(&MitigationProblem::new(l, cf * l, mf * l, odds(q, qp)).unwrap()).unwrap();
            let scaled = mitigate(&MitigationProblem::new(l, cf * l, mf * l, odds(c * q, c * qp)).unwrap()).unwrap();
            prop_assert!(scaled.fixed_loss <= base.fixed_loss + 1e-12 * l);
        }
    }
}
