//! The operator's per-user response and its reconstruction from a solved
//! variable assignment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::ProblemInstance;
use crate::model::ModelDescription;
use crate::money;
use crate::solver::Solution;

/// A binary is accepted as integral when within this distance of 0 or 1.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

/// One assigned slot of a served user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub slot: usize,
    /// True when the slot is priced at the user's own bid; false when the
    /// operator countered with a new price.
    pub at_bid: bool,
    /// Price actually charged in this slot, SEK per kWh.
    #[serde(with = "money")]
    pub final_price: f64,
    /// Operator's counter price; zero for at-bid slots.
    #[serde(with = "money")]
    pub counter_price: f64,
    /// Energy delivered in this slot, kWh.
    pub energy_kwh: f64,
}

/// Outcome for a single user: rejection, or a rate plus one contiguous run
/// of priced slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserOutcome {
    pub user_id: u32,
    pub accepted: bool,
    /// Index into the station's rate list; present iff accepted.
    pub rate_index: Option<usize>,
    /// Assigned slots in increasing order.
    pub slots: Vec<SlotAssignment>,
}

impl UserOutcome {
    pub fn rejected(user_id: u32) -> Self {
        Self {
            user_id,
            accepted: false,
            rate_index: None,
            slots: Vec::new(),
        }
    }

    /// First and last assigned slot, when any.
    pub fn slot_range(&self) -> Option<(usize, usize)> {
        match (self.slots.first(), self.slots.last()) {
            (Some(a), Some(b)) => Some((a.slot, b.slot)),
            _ => None,
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.slots.iter().map(|s| s.energy_kwh).sum()
    }

    pub fn at_bid_count(&self) -> usize {
        self.slots.iter().filter(|s| s.at_bid).count()
    }

    pub fn countered_count(&self) -> usize {
        self.slots.iter().filter(|s| !s.at_bid).count()
    }

    /// Total extra payment over the bid across assigned slots, SEK:
    /// `sum (final_price - bid_price) * energy`. Negative when the price cap
    /// pushed counters below the bid.
    pub fn markup_payment(&self, bid_price: f64) -> f64 {
        self.slots
            .iter()
            .map(|s| (s.final_price - bid_price) * s.energy_kwh)
            .sum()
    }
}

/// The operator's full response to one bidding round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorOffer {
    /// One outcome per user, in instance bid order.
    pub users: Vec<UserOutcome>,
    /// Reference price per slot and rate, indexed `[slot][rate]`.
    #[serde(with = "money::matrix")]
    pub reference_prices: Vec<Vec<f64>>,
    /// Operator profit of this offer, SEK.
    #[serde(with = "money")]
    pub objective: f64,
}

impl OperatorOffer {
    /// Total number of assigned slot-rate cells.
    pub fn assigned_cells(&self) -> usize {
        self.users.iter().map(|u| u.slots.len()).sum()
    }

    pub fn at_bid_cells(&self) -> usize {
        self.users.iter().map(|u| u.at_bid_count()).sum()
    }

    pub fn accepted_users(&self) -> usize {
        self.users.iter().filter(|u| u.accepted).count()
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("variable {variable} = {value} deviates from an integer by more than {INTEGRALITY_TOLERANCE}")]
    NonIntegral { variable: String, value: f64 },
    #[error("model has no variable named {0}")]
    MissingVariable(String),
    #[error("solution is inconsistent: {0}")]
    Inconsistent(String),
}

/// Reads a solved assignment back into an [`OperatorOffer`].
///
/// Binaries are rounded at 0.5 after an integrality check over every binary
/// variable. Prices forced by the model are snapped to their exact values:
/// at-bid slots carry the bid price itself and counter prices are clamped at
/// zero. Per-slot energy is the rate's exact energy-per-slot.
pub fn extract_offer(
    model: &ModelDescription,
    solution: &Solution,
    instance: &ProblemInstance,
) -> Result<OperatorOffer, ExtractError> {
    for (var, &value) in model.variables().iter().zip(solution.values()) {
        if var.kind == crate::model::VarKind::Binary
            && (value - value.round()).abs() > INTEGRALITY_TOLERANCE
        {
            return Err(ExtractError::NonIntegral {
                variable: var.name.clone(),
                value,
            });
        }
    }

    let value = |name: String| -> Result<f64, ExtractError> {
        let id = model
            .var(&name)
            .ok_or(ExtractError::MissingVariable(name))?;
        Ok(solution.value(id))
    };
    let binary = |name: String| -> Result<bool, ExtractError> { Ok(value(name)? >= 0.5) };

    let t_count = instance.num_slots();
    let r_count = instance.num_rates();
    let mut users = Vec::with_capacity(instance.num_users());

    for (i, bid) in instance.bids.iter().enumerate() {
        let accepted = binary(format!("a_{i}"))?;
        let mut rate_index = None;
        for r in 0..r_count {
            if binary(format!("y_{i}_{r}"))? {
                if rate_index.replace(r).is_some() {
                    return Err(ExtractError::Inconsistent(format!(
                        "user {i} selects more than one rate"
                    )));
                }
            }
        }
        if accepted != rate_index.is_some() {
            return Err(ExtractError::Inconsistent(format!(
                "user {i}: acceptance flag and rate selection disagree"
            )));
        }

        let mut slots = Vec::new();
        if let Some(r) = rate_index {
            let energy = instance.station.energy_per_slot(r);
            for t in 0..t_count {
                if !binary(format!("z_{i}_{t}_{r}"))? {
                    continue;
                }
                let at_bid = binary(format!("xB_{i}_{t}_{r}"))?;
                let countered = binary(format!("xN_{i}_{t}_{r}"))?;
                if at_bid == countered {
                    return Err(ExtractError::Inconsistent(format!(
                        "user {i} slot {t}: expected exactly one of at-bid/countered"
                    )));
                }
                let (final_price, counter_price) = if at_bid {
                    (bid.bid_price, 0.0)
                } else {
                    let p = value(format!("pN_{i}_{t}_{r}"))?.max(0.0);
                    (p, p)
                };
                slots.push(SlotAssignment {
                    slot: t,
                    at_bid,
                    final_price,
                    counter_price,
                    energy_kwh: energy,
                });
            }
        }
        users.push(UserOutcome {
            user_id: bid.user_id,
            accepted,
            rate_index,
            slots,
        });
    }

    let mut reference_prices = vec![vec![0.0; r_count]; t_count];
    for (t, row) in reference_prices.iter_mut().enumerate() {
        for (r, cell) in row.iter_mut().enumerate() {
            *cell = value(format!("pR_{t}_{r}"))?.max(0.0);
        }
    }

    let objective = offer_objective(&users, instance);

    Ok(OperatorOffer {
        users,
        reference_prices,
        objective,
    })
}

/// Profit of an offer, computed directly from the assigned slots.
pub fn offer_objective(users: &[UserOutcome], instance: &ProblemInstance) -> f64 {
    users
        .iter()
        .filter_map(|u| u.rate_index.map(|r| (u, r)))
        .map(|(u, r)| {
            u.slots
                .iter()
                .map(|s| {
                    (s.final_price - instance.station.rates[r].cost_at(s.slot)) * s.energy_kwh
                })
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PricingPolicy, RateLevel, StationConfig, UserBid};
    use crate::model::build_model;
    use crate::solver::{SolveStatus, Solution};

    fn one_user_instance(num_slots: usize) -> ProblemInstance {
        ProblemInstance {
            bids: vec![UserBid {
                user_id: 7,
                bid_price: 3.0,
                q_min: 11.0,
                q_max: 11.0,
                acceptable_slots: (0..num_slots).collect(),
            }],
            station: StationConfig {
                num_slots,
                slot_minutes: 15,
                slot_capacity: vec![5.5; num_slots],
                rates: vec![RateLevel::constant_cost(22.0, 1.5, 2.0, 1, num_slots)],
            },
            policy: PricingPolicy {
                gamma: 0.0,
                alpha: 2.5,
                epsilon: 0.5,
                price_big_m: 6.0,
            },
        }
    }

    fn assignment(model: &ModelDescription, set: &[(&str, f64)]) -> Solution {
        let mut values = vec![0.0; model.num_variables()];
        for (name, v) in set {
            values[model.var(name).expect(name).index()] = *v;
        }
        let objective = model.objective_value(&values);
        Solution::new(SolveStatus::Optimal, objective, values)
    }

    #[test]
    fn at_bid_assignment_round_trips() {
        let instance = one_user_instance(6);
        let model = build_model(&instance).unwrap();
        let solution = assignment(
            &model,
            &[
                ("a_0", 1.0),
                ("y_0_0", 1.0),
                ("z_0_3_0", 1.0),
                ("z_0_4_0", 1.0),
                ("xB_0_3_0", 1.0),
                ("xB_0_4_0", 1.0),
                ("zs_0_3", 1.0),
                ("ze_0_4", 1.0),
                ("pF_0_3_0", 3.0),
                ("pF_0_4_0", 3.0),
                ("q_0_3", 5.5),
                ("q_0_4", 5.5),
                ("pR_3_0", 3.0),
                ("pR_4_0", 3.0),
            ],
        );
        let offer = extract_offer(&model, &solution, &instance).unwrap();
        let user = &offer.users[0];
        assert!(user.accepted);
        assert_eq!(user.rate_index, Some(0));
        assert_eq!(user.slot_range(), Some((3, 4)));
        assert!(user.slots.iter().all(|s| s.at_bid && s.final_price == 3.0));
        assert_eq!(offer.objective, 2.0 * (3.0 - 1.5) * 5.5);
    }

    #[test]
    fn all_zero_solution_is_a_full_rejection() {
        let instance = one_user_instance(4);
        let model = build_model(&instance).unwrap();
        let solution = assignment(&model, &[]);
        let offer = extract_offer(&model, &solution, &instance).unwrap();
        assert!(!offer.users[0].accepted);
        assert!(offer.users[0].slots.is_empty());
        assert_eq!(offer.objective, 0.0);
    }

    #[test]
    fn fractional_binary_is_an_error() {
        let instance = one_user_instance(4);
        let model = build_model(&instance).unwrap();
        let solution = assignment(&model, &[("a_0", 0.4)]);
        match extract_offer(&model, &solution, &instance) {
            Err(ExtractError::NonIntegral { variable, .. }) => assert_eq!(variable, "a_0"),
            other => panic!("expected NonIntegral, got {other:?}"),
        }
    }

    #[test]
    fn conflicting_flags_are_an_error() {
        let instance = one_user_instance(4);
        let model = build_model(&instance).unwrap();
        // accepted without a rate
        let solution = assignment(&model, &[("a_0", 1.0)]);
        assert!(matches!(
            extract_offer(&model, &solution, &instance),
            Err(ExtractError::Inconsistent(_))
        ));
    }

    #[test]
    fn offer_round_trips_through_json() {
        let offer = OperatorOffer {
            users: vec![
                UserOutcome {
                    user_id: 1,
                    accepted: true,
                    rate_index: Some(0),
                    slots: vec![SlotAssignment {
                        slot: 2,
                        at_bid: false,
                        final_price: 3.75,
                        counter_price: 3.75,
                        energy_kwh: 5.5,
                    }],
                },
                UserOutcome::rejected(2),
            ],
            reference_prices: vec![vec![0.0], vec![0.0], vec![3.5]],
            objective: 12.375,
        };
        let json = serde_json::to_string(&offer).unwrap();
        let back: OperatorOffer = serde_json::from_str(&json).unwrap();
        assert_eq!(back, offer);
    }
}
