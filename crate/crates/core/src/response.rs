//! Step three of the mechanism: each operator-accepted user weighs the
//! offered rate against the markup they would pay and accepts or declines.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::UserBid;
use crate::model::{OperatorOffer, UserOutcome};

/// Per-user taste parameters for the acceptance decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPreference {
    /// Utility gained per kW of charging power.
    pub theta1: f64,
    /// Disutility per SEK of markup payment.
    pub theta2: f64,
    /// Utility of the user's best alternative; offers below it are declined.
    pub outside_option: f64,
}

/// Outcome of one user's evaluation of their offer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceDecision {
    pub user_id: u32,
    pub utility: f64,
    pub accepted: bool,
}

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("no preference supplied for accepted user {0}")]
    MissingPreference(u32),
    #[error("offer covers {offer_users} users but {bids} bids were supplied")]
    LengthMismatch { offer_users: usize, bids: usize },
}

/// Utility of an operator-accepted outcome:
/// `theta1 * rate_kw - theta2 * sum((final - bid) * energy)`.
///
/// The markup sum may be negative when the price cap pushed counters below
/// the bid, in which case the discount raises utility. Only meaningful for
/// accepted users; callers filter rejections.
pub fn utility(outcome: &UserOutcome, bid: &UserBid, rate_kw: f64, pref: &UserPreference) -> f64 {
    pref.theta1 * rate_kw - pref.theta2 * outcome.markup_payment(bid.bid_price)
}

/// Evaluates every operator-accepted user; rejected users emit no decision.
/// Preferences are positional, one per bid.
pub fn decide(
    offer: &OperatorOffer,
    bids: &[UserBid],
    prefs: &[UserPreference],
    rates_kw: &[f64],
) -> Result<Vec<AcceptanceDecision>, ResponseError> {
    if offer.users.len() != bids.len() {
        return Err(ResponseError::LengthMismatch {
            offer_users: offer.users.len(),
            bids: bids.len(),
        });
    }
    let mut decisions = Vec::new();
    for (i, (outcome, bid)) in offer.users.iter().zip(bids).enumerate() {
        let Some(rate_index) = outcome.rate_index else {
            continue;
        };
        let pref = prefs
            .get(i)
            .ok_or(ResponseError::MissingPreference(bid.user_id))?;
        let value = utility(outcome, bid, rates_kw[rate_index], pref);
        decisions.push(AcceptanceDecision {
            user_id: bid.user_id,
            utility: value,
            accepted: value >= pref.outside_option,
        });
    }
    Ok(decisions)
}

/// Draws `count` preferences with both taste parameters uniform on
/// [0.5, 2.0] and a zero outside option.
///
/// Reproducibility contract: user `i` draws from ChaCha8 keyed by `seed`
/// on stream `i`, consuming two raw words mapped to [0, 1) by the top 53
/// bits. Identical (count, seed) always yields identical preferences.
pub fn sample_preferences(count: usize, seed: u64) -> Vec<UserPreference> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            UserPreference {
                theta1: 0.5 + 1.5 * unit_draw(&mut rng),
                theta2: 0.5 + 1.5 * unit_draw(&mut rng),
                outside_option: 0.0,
            }
        })
        .collect()
}

/// Uniform draw on [0, 1) from the top 53 bits of one raw word.
pub(crate) fn unit_draw(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SlotAssignment;
    use std::collections::BTreeSet;

    fn bid(user_id: u32, price: f64) -> UserBid {
        UserBid {
            user_id,
            bid_price: price,
            q_min: 0.0,
            q_max: 100.0,
            acceptable_slots: BTreeSet::from([0]),
        }
    }

    fn outcome_with_markup(user_id: u32, markup_total: f64) -> UserOutcome {
        // One slot of 1 kWh priced bid + markup_total.
        UserOutcome {
            user_id,
            accepted: true,
            rate_index: Some(0),
            slots: vec![SlotAssignment {
                slot: 0,
                at_bid: markup_total == 0.0,
                final_price: 3.0 + markup_total,
                counter_price: if markup_total == 0.0 { 0.0 } else { 3.0 + markup_total },
                energy_kwh: 1.0,
            }],
        }
    }

    #[test]
    fn utility_formula_spot_checks() {
        let pref = |t1, t2| UserPreference {
            theta1: t1,
            theta2: t2,
            outside_option: 0.0,
        };
        let b = bid(0, 3.0);
        let u = outcome_with_markup(0, 10.0);
        assert_eq!(utility(&u, &b, 50.0, &pref(1.0, 1.0)), 40.0);
        let u = outcome_with_markup(0, 12.0);
        assert_eq!(utility(&u, &b, 22.0, &pref(0.5, 1.5)), -7.0);
        let u = outcome_with_markup(0, 0.0);
        for t1 in [0.0, 0.7, 2.0] {
            assert!(utility(&u, &b, 22.0, &pref(t1, 1.9)) >= 0.0);
        }
    }

    #[test]
    fn decisions_follow_the_outside_option_with_inclusive_boundary() {
        let bids = vec![bid(0, 3.0), bid(1, 3.0), bid(2, 3.0)];
        let offer = OperatorOffer {
            users: vec![
                outcome_with_markup(0, 10.0),  // U = 40
                outcome_with_markup(1, 0.0),   // U = 0 with theta1 = 0
                UserOutcome::rejected(2),
            ],
            reference_prices: vec![vec![0.0]],
            objective: 0.0,
        };
        let prefs = vec![
            UserPreference { theta1: 1.0, theta2: 1.0, outside_option: 0.0 },
            UserPreference { theta1: 0.0, theta2: 1.0, outside_option: 0.0 },
            UserPreference { theta1: 1.0, theta2: 1.0, outside_option: 0.0 },
        ];
        let decisions = decide(&offer, &bids, &prefs, &[50.0]).unwrap();
        // Operator-rejected user 2 emits no decision.
        assert_eq!(decisions.len(), 2);
        assert!(decisions[0].accepted);
        // Boundary U = outside option is an accept.
        assert_eq!(decisions[1].utility, 0.0);
        assert!(decisions[1].accepted);
    }

    #[test]
    fn negative_utility_declines() {
        let bids = vec![bid(0, 3.0)];
        let offer = OperatorOffer {
            users: vec![outcome_with_markup(0, 12.0)],
            reference_prices: vec![vec![0.0]],
            objective: 0.0,
        };
        let prefs = vec![UserPreference { theta1: 0.5, theta2: 1.5, outside_option: 0.0 }];
        let decisions = decide(&offer, &bids, &prefs, &[22.0]).unwrap();
        assert_eq!(decisions[0].utility, -7.0);
        assert!(!decisions[0].accepted);
    }

    #[test]
    fn missing_preference_for_accepted_user_errors() {
        let bids = vec![bid(0, 3.0)];
        let offer = OperatorOffer {
            users: vec![outcome_with_markup(0, 1.0)],
            reference_prices: vec![vec![0.0]],
            objective: 0.0,
        };
        assert!(matches!(
            decide(&offer, &bids, &[], &[22.0]),
            Err(ResponseError::MissingPreference(0))
        ));
    }

    #[test]
    fn sampling_is_seed_deterministic_and_in_range() {
        assert!(sample_preferences(0, 9).is_empty());
        let a = sample_preferences(40, 123);
        let b = sample_preferences(40, 123);
        assert_eq!(a, b);
        let c = sample_preferences(40, 124);
        assert_ne!(a, c);
        for p in &a {
            assert!(p.theta1 >= 0.5 && p.theta1 <= 2.0);
            assert!(p.theta2 >= 0.5 && p.theta2 <= 2.0);
            assert_eq!(p.outside_option, 0.0);
        }
    }

    #[test]
    fn increasing_price_sensitivity_never_flips_decline_to_accept() {
        let bids = vec![bid(0, 3.0)];
        let offer = OperatorOffer {
            users: vec![outcome_with_markup(0, 5.0)],
            reference_prices: vec![vec![0.0]],
            objective: 0.0,
        };
        let mut declined_seen = false;
        for step in 0..20 {
            let theta2 = 0.5 + step as f64 * 0.5;
            let prefs = vec![UserPreference { theta1: 0.3, theta2, outside_option: 0.0 }];
            let decision = decide(&offer, &bids, &prefs, &[22.0]).unwrap()[0];
            if declined_seen {
                assert!(!decision.accepted, "decline flipped back to accept");
            }
            declined_seen |= !decision.accepted;
        }
        assert!(declined_seen, "markup of 5 SEK should eventually outweigh theta1 = 0.3");
    }

    #[test]
    fn joint_scaling_of_tastes_preserves_the_decision_at_zero_outside_option() {
        let bids = vec![bid(0, 3.0)];
        for markup in [-2.0, 0.0, 5.0, 12.0] {
            let offer = OperatorOffer {
                users: vec![outcome_with_markup(0, markup)],
                reference_prices: vec![vec![0.0]],
                objective: 0.0,
            };
            for scale in [0.5, 1.0, 3.0] {
                let base = decide(
                    &offer,
                    &bids,
                    &[UserPreference { theta1: 1.0, theta2: 1.0, outside_option: 0.0 }],
                    &[22.0],
                )
                .unwrap()[0];
                let scaled = decide(
                    &offer,
                    &bids,
                    &[UserPreference { theta1: scale, theta2: scale, outside_option: 0.0 }],
                    &[22.0],
                )
                .unwrap()[0];
                assert_eq!(base.accepted, scaled.accepted);
            }
        }
    }
}
