//! Domain types for the charging market: user bids, station configuration,
//! pricing policy, and whole-instance validation.
//!
//! All types are plain data and immutable after construction; nothing here
//! holds interior mutability, so values can be shared freely across threads.
//! Construction does not validate — [`validate_instance`] is the single gate
//! every downstream consumer relies on.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::money;

/// One user's submission for the next planning horizon: the price they are
/// willing to pay, the energy range they will accept, and the slots they can
/// attend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserBid {
    pub user_id: u32,
    /// Offered price, SEK per kWh.
    #[serde(with = "money")]
    pub bid_price: f64,
    /// Minimum acceptable energy, kWh.
    pub q_min: f64,
    /// Maximum acceptable energy, kWh.
    pub q_max: f64,
    /// Slot indices (0-based) the user declared acceptable.
    pub acceptable_slots: BTreeSet<usize>,
}

impl UserBid {
    pub fn accepts_slot(&self, slot: usize) -> bool {
        self.acceptable_slots.contains(&slot)
    }
}

/// One charging level offered by the station: its power, per-slot operating
/// cost, counter-offer markup cap, and how many chargers exist at this level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLevel {
    /// Charging power, kW.
    pub rate_kw: f64,
    /// Operating cost per kWh for each slot of the horizon, SEK.
    #[serde(with = "money::vec")]
    pub cost_per_kwh: Vec<f64>,
    /// Cap on the increase of a counter-offer over the user's bid, SEK per kWh.
    #[serde(with = "money")]
    pub max_markup: f64,
    /// Number of chargers available at this level.
    pub charger_count: u32,
}

impl RateLevel {
    /// A rate whose operating cost is the same in every slot.
    pub fn constant_cost(
        rate_kw: f64,
        cost_per_kwh: f64,
        max_markup: f64,
        charger_count: u32,
        num_slots: usize,
    ) -> Self {
        Self {
            rate_kw,
            cost_per_kwh: vec![cost_per_kwh; num_slots],
            max_markup,
            charger_count,
        }
    }

    pub fn cost_at(&self, slot: usize) -> f64 {
        self.cost_per_kwh[slot]
    }

    pub fn max_cost(&self) -> f64 {
        self.cost_per_kwh.iter().copied().fold(0.0, f64::max)
    }
}

/// Energy (kWh) delivered in one slot when charging at `rate`.
pub fn energy_per_slot(rate: &RateLevel, slot_minutes: u32) -> f64 {
    rate.rate_kw * f64::from(slot_minutes) / 60.0
}

/// The station side of an instance: the discretized horizon, per-slot energy
/// capacity, and the rate levels on offer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    /// Number of slots in the planning horizon.
    pub num_slots: usize,
    /// Slot duration in minutes.
    pub slot_minutes: u32,
    /// System-wide energy capacity per slot, kWh.
    pub slot_capacity: Vec<f64>,
    pub rates: Vec<RateLevel>,
}

impl StationConfig {
    /// Energy delivered per slot at rate index `r`.
    pub fn energy_per_slot(&self, r: usize) -> f64 {
        energy_per_slot(&self.rates[r], self.slot_minutes)
    }
}

/// Pricing rules the operator must respect when responding to bids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingPolicy {
    /// Minimum fraction of assigned slot-rate cells that must be priced at
    /// the user's own bid.
    pub gamma: f64,
    /// Maximum final-price-to-cost ratio.
    pub alpha: f64,
    /// Minimum profit margin over cost.
    pub epsilon: f64,
    /// Upper bound on any feasible charging price; the big-M constant of the
    /// reference-price rows.
    #[serde(with = "money")]
    pub price_big_m: f64,
}

/// Everything the operator needs to respond to one bidding round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub bids: Vec<UserBid>,
    pub station: StationConfig,
    pub policy: PricingPolicy,
}

impl ProblemInstance {
    pub fn num_users(&self) -> usize {
        self.bids.len()
    }

    pub fn num_slots(&self) -> usize {
        self.station.num_slots
    }

    pub fn num_rates(&self) -> usize {
        self.station.rates.len()
    }
}

/// A single failed invariant, naming the field and, when user-specific, the
/// user it concerns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceViolation {
    pub user_id: Option<u32>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.user_id {
            Some(u) => write!(f, "{} (user {}): {}", self.field, u, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn violation(field: &str, message: impl Into<String>) -> InstanceViolation {
    InstanceViolation {
        user_id: None,
        field: field.to_string(),
        message: message.into(),
    }
}

fn user_violation(user_id: u32, field: &str, message: impl Into<String>) -> InstanceViolation {
    InstanceViolation {
        user_id: Some(user_id),
        field: field.to_string(),
        message: message.into(),
    }
}

/// Checks every invariant of an instance and returns the full list of
/// violations; an empty list means the instance is well-formed. Never aborts.
///
/// Comparisons are written so that NaN in any numeric field trips a
/// violation rather than passing silently.
pub fn validate_instance(instance: &ProblemInstance) -> Vec<InstanceViolation> {
    let mut out = Vec::new();
    let station = &instance.station;
    let t_count = station.num_slots;

    if t_count < 1 {
        out.push(violation("num_slots", "horizon must have at least one slot"));
    }
    if station.slot_minutes == 0 {
        out.push(violation("slot_minutes", "slot duration must be positive"));
    }
    if station.rates.is_empty() {
        out.push(violation("rates", "station must offer at least one rate"));
    }
    if station.slot_capacity.len() != t_count {
        out.push(violation(
            "slot_capacity",
            format!(
                "expected one capacity per slot ({} slots, {} entries)",
                t_count,
                station.slot_capacity.len()
            ),
        ));
    }
    for (t, &c) in station.slot_capacity.iter().enumerate() {
        if !(c >= 0.0) {
            out.push(violation(
                "slot_capacity",
                format!("capacity at slot {t} must be >= 0, got {c}"),
            ));
        }
    }

    for (r, rate) in station.rates.iter().enumerate() {
        if !(rate.rate_kw > 0.0) {
            out.push(violation(
                "rate_kw",
                format!("rate {r} must have positive power, got {}", rate.rate_kw),
            ));
        }
        if rate.cost_per_kwh.len() != t_count {
            out.push(violation(
                "cost_per_kwh",
                format!(
                    "rate {r} needs one cost per slot ({} slots, {} entries)",
                    t_count,
                    rate.cost_per_kwh.len()
                ),
            ));
        }
        for (t, &c) in rate.cost_per_kwh.iter().enumerate() {
            if !(c > 0.0) {
                out.push(violation(
                    "cost_per_kwh",
                    format!("rate {r} cost at slot {t} must be > 0, got {c}"),
                ));
            }
        }
        if !(rate.max_markup >= 0.0) {
            out.push(violation(
                "max_markup",
                format!("rate {r} markup cap must be >= 0, got {}", rate.max_markup),
            ));
        }
    }

    let policy = &instance.policy;
    if !(policy.gamma >= 0.0 && policy.gamma <= 1.0) {
        out.push(violation(
            "gamma",
            format!("must lie in [0, 1], got {}", policy.gamma),
        ));
    }
    if !(policy.epsilon >= 0.0) {
        out.push(violation(
            "epsilon",
            format!("must be >= 0, got {}", policy.epsilon),
        ));
    }
    if !(policy.alpha >= 1.0 + policy.epsilon) {
        out.push(violation(
            "alpha",
            format!(
                "must be >= 1 + epsilon = {}, got {}",
                1.0 + policy.epsilon,
                policy.alpha
            ),
        ));
    }
    let max_markup = station
        .rates
        .iter()
        .map(|r| r.max_markup)
        .fold(0.0, f64::max);
    let max_cost = station.rates.iter().map(|r| r.max_cost()).fold(0.0, f64::max);
    let max_bid = instance
        .bids
        .iter()
        .map(|b| b.bid_price)
        .fold(0.0, f64::max);
    let big_m_floor = (max_bid + max_markup).max(policy.alpha * max_cost);
    if !(policy.price_big_m >= big_m_floor) {
        out.push(violation(
            "price_big_m",
            format!("must be >= {big_m_floor} for this instance, got {}", policy.price_big_m),
        ));
    }

    let mut seen_ids = BTreeSet::new();
    for bid in &instance.bids {
        if !seen_ids.insert(bid.user_id) {
            out.push(user_violation(bid.user_id, "user_id", "duplicate user id"));
        }
        if !(bid.bid_price > 0.0) {
            out.push(user_violation(
                bid.user_id,
                "bid_price",
                format!("must be > 0, got {}", bid.bid_price),
            ));
        }
        if !(bid.q_min >= 0.0) {
            out.push(user_violation(
                bid.user_id,
                "q_min",
                format!("must be >= 0, got {}", bid.q_min),
            ));
        }
        if !(bid.q_min <= bid.q_max) {
            out.push(user_violation(
                bid.user_id,
                "q_min",
                format!("q_min > q_max for user ({} > {})", bid.q_min, bid.q_max),
            ));
        }
        for &slot in &bid.acceptable_slots {
            if slot >= t_count {
                out.push(user_violation(
                    bid.user_id,
                    "acceptable_slots",
                    format!("slot out of horizon: {slot} >= {t_count}"),
                ));
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_user_instance() -> ProblemInstance {
        let num_slots = 4;
        ProblemInstance {
            bids: vec![
                UserBid {
                    user_id: 0,
                    bid_price: 3.0,
                    q_min: 5.0,
                    q_max: 11.0,
                    acceptable_slots: (0..num_slots).collect(),
                },
                UserBid {
                    user_id: 1,
                    bid_price: 2.5,
                    q_min: 5.0,
                    q_max: 6.0,
                    acceptable_slots: (1..3).collect(),
                },
            ],
            station: StationConfig {
                num_slots,
                slot_minutes: 15,
                slot_capacity: vec![11.0; num_slots],
                rates: vec![RateLevel::constant_cost(22.0, 1.5, 2.0, 2, num_slots)],
            },
            policy: PricingPolicy {
                gamma: 0.5,
                alpha: 2.5,
                epsilon: 0.5,
                price_big_m: 6.0,
            },
        }
    }

    #[test]
    fn energy_per_slot_matches_rate_and_duration() {
        let rate22 = RateLevel::constant_cost(22.0, 1.5, 2.0, 1, 1);
        let rate50 = RateLevel::constant_cost(50.0, 2.0, 2.0, 1, 1);
        let rate100 = RateLevel::constant_cost(100.0, 2.5, 2.0, 1, 1);
        assert_eq!(energy_per_slot(&rate22, 15), 5.5);
        assert_eq!(energy_per_slot(&rate50, 15), 12.5);
        assert_eq!(energy_per_slot(&rate100, 60), 100.0);
    }

    #[test]
    fn energy_per_slot_is_linear_in_both_arguments() {
        for kw in [1.0, 7.3, 22.0, 50.0] {
            for minutes in [5u32, 15, 30] {
                let single = RateLevel::constant_cost(kw, 1.0, 0.0, 1, 1);
                let double = RateLevel::constant_cost(2.0 * kw, 1.0, 0.0, 1, 1);
                assert!(
                    (energy_per_slot(&double, minutes) - 2.0 * energy_per_slot(&single, minutes))
                        .abs()
                        < 1e-12
                );
                assert!(
                    (energy_per_slot(&single, 2 * minutes) - 2.0 * energy_per_slot(&single, minutes))
                        .abs()
                        < 1e-12
                );
            }
        }
    }

    #[test]
    fn well_formed_instance_validates() {
        assert!(validate_instance(&two_user_instance()).is_empty());
    }

    #[test]
    fn inverted_demand_bounds_are_reported() {
        let mut instance = two_user_instance();
        instance.bids[0].q_min = 10.0;
        instance.bids[0].q_max = 5.0;
        let violations = validate_instance(&instance);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].user_id, Some(0));
        assert!(violations[0].message.contains("q_min > q_max"));
    }

    #[test]
    fn slot_outside_horizon_is_reported() {
        let mut instance = two_user_instance();
        instance.bids[1].acceptable_slots.insert(4);
        let violations = validate_instance(&instance);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("slot out of horizon"));
    }

    #[test]
    fn duplicate_user_ids_are_reported() {
        let mut instance = two_user_instance();
        instance.bids[1].user_id = 0;
        let violations = validate_instance(&instance);
        assert!(violations.iter().any(|v| v.message.contains("duplicate")));
    }

    #[test]
    fn undersized_big_m_is_reported() {
        let mut instance = two_user_instance();
        instance.policy.price_big_m = 3.0; // below max bid + markup cap
        let violations = validate_instance(&instance);
        assert!(violations.iter().any(|v| v.field == "price_big_m"));
    }

    #[test]
    fn nan_fields_never_pass() {
        let mut instance = two_user_instance();
        instance.bids[0].bid_price = f64::NAN;
        instance.policy.gamma = f64::NAN;
        let violations = validate_instance(&instance);
        assert!(violations.iter().any(|v| v.field == "bid_price"));
        assert!(violations.iter().any(|v| v.field == "gamma"));
    }

    #[test]
    fn instance_round_trips_through_json() {
        let instance = two_user_instance();
        let json = serde_json::to_string_pretty(&instance).unwrap();
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, instance);
        // Money fields archive as fixed-point strings.
        assert!(json.contains("\"3.000000\""));
    }
}
