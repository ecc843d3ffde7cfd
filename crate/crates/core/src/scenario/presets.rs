//! Named, frozen scenario and sweep configurations.
//!
//! Common defaults: 10 users bidding on a 48-slot horizon of 15-minute
//! slots, demand between 20 and 40 kWh, bids uniform on [2, 4] SEK/kWh,
//! preservation ratios {0.2, 0.4, 0.6, 0.8}, 50 seeds per cell, and one
//! charger per offered rate with per-slot capacity derived from the rate
//! mix. Operating costs are 1.5 / 2.0 / 2.5 SEK/kWh for 22 / 50 / 100 kW,
//! each with a 2 SEK/kWh counter-markup allowance, a price cap of 2.5x
//! cost, and a 0.5 minimum margin.

use crate::domain::{PricingPolicy, StationConfig};
use crate::scenario::{AvailabilityPattern, RateSpec, ScenarioSpec, SweepSpec};

pub const DEFAULT_USER_COUNT: usize = 10;
pub const DEFAULT_NUM_SLOTS: usize = 48;
pub const DEFAULT_SLOT_MINUTES: u32 = 15;
pub const DEFAULT_DEMAND_BOUNDS: (f64, f64) = (20.0, 40.0);
pub const DEFAULT_BID_RANGE: (f64, f64) = (2.0, 4.0);
pub const DEFAULT_GAMMAS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const DEFAULT_SEEDS_PER_CELL: usize = 50;
pub const DEFAULT_BASE_SEED: u64 = 1;

/// The three standard charging levels, one charger each.
pub fn rate_22() -> RateSpec {
    RateSpec { rate_kw: 22.0, cost_per_kwh: 1.5, max_markup: 2.0, charger_count: 1 }
}

pub fn rate_50() -> RateSpec {
    RateSpec { rate_kw: 50.0, cost_per_kwh: 2.0, max_markup: 2.0, charger_count: 1 }
}

pub fn rate_100() -> RateSpec {
    RateSpec { rate_kw: 100.0, cost_per_kwh: 2.5, max_markup: 2.0, charger_count: 1 }
}

/// Stable names accepted by `preset`, in documentation order.
pub fn preset_names() -> &'static [&'static str] {
    &[
        "baseline-single-rate",
        "table2",
        "multi-rate",
        "expanded-bid-range",
        "bid-range-series",
        "heterogeneous-availability",
        "mixed-22-50",
        "large-scale",
        "utility-response",
    ]
}

fn base_scenario(rates: Vec<RateSpec>) -> ScenarioSpec {
    let station = StationConfig {
        num_slots: DEFAULT_NUM_SLOTS,
        slot_minutes: DEFAULT_SLOT_MINUTES,
        slot_capacity: vec![0.0; DEFAULT_NUM_SLOTS],
        rates: rates.iter().map(|r| r.to_level(DEFAULT_NUM_SLOTS)).collect(),
    };
    let mut spec = ScenarioSpec {
        user_count: DEFAULT_USER_COUNT,
        bid_range: DEFAULT_BID_RANGE,
        demand_bounds: DEFAULT_DEMAND_BOUNDS,
        availability_pattern: AvailabilityPattern::FullHorizon,
        station,
        policy: PricingPolicy {
            gamma: DEFAULT_GAMMAS[0],
            alpha: 2.5,
            epsilon: 0.5,
            price_big_m: 0.0,
        },
        auto_capacity: true,
        seed: DEFAULT_BASE_SEED,
    };
    spec.refresh_big_m();
    spec
}

fn base_sweep(rate_configs: Vec<Vec<RateSpec>>) -> SweepSpec {
    SweepSpec {
        base: base_scenario(rate_configs[0].clone()),
        rate_configs,
        gammas: DEFAULT_GAMMAS.to_vec(),
        bid_ranges: vec![DEFAULT_BID_RANGE],
        seeds_per_cell: DEFAULT_SEEDS_PER_CELL,
        utility_overlay: false,
    }
}

/// Looks up a preset by its stable name.
pub fn preset(name: &str) -> Option<SweepSpec> {
    let spec = match name {
        // Single charger at each standard level, swept over the
        // preservation ratio: the 12-cell aggregate table.
        "baseline-single-rate" | "table2" => {
            base_sweep(vec![vec![rate_22()], vec![rate_50()], vec![rate_100()]])
        }
        // One charger of every level serving the same users.
        "multi-rate" => base_sweep(vec![vec![rate_22(), rate_50(), rate_100()]]),
        // Multi-rate station under a much wider bid distribution.
        "expanded-bid-range" => {
            let mut sweep = base_sweep(vec![vec![rate_22(), rate_50(), rate_100()]]);
            sweep.bid_ranges = vec![(1.0, 6.0)];
            sweep.refresh();
            sweep
        }
        // Fixed moderate preservation, sliding the whole bid window.
        "bid-range-series" => {
            let mut sweep = base_sweep(vec![vec![rate_22(), rate_50(), rate_100()]]);
            sweep.gammas = vec![0.4];
            sweep.bid_ranges = vec![(1.0, 3.0), (2.0, 4.0), (3.0, 5.0), (4.0, 6.0)];
            sweep.refresh();
            sweep
        }
        // Five users roam the whole horizon, five are pinned to a 2-hour
        // midday window; single charger at 22 or 50 kW.
        "heterogeneous-availability" => {
            let mut sweep = base_sweep(vec![vec![rate_22()], vec![rate_50()]]);
            sweep.base.availability_pattern = AvailabilityPattern::Split {
                narrow_users: 5,
                window_slots: window_slots_for_two_hours(DEFAULT_SLOT_MINUTES),
            };
            sweep
        }
        // One 22 kW and one 50 kW charger jointly serving the split
        // population.
        "mixed-22-50" => {
            let mut sweep = base_sweep(vec![vec![rate_22(), rate_50()]]);
            sweep.base.availability_pattern = AvailabilityPattern::Split {
                narrow_users: 5,
                window_slots: window_slots_for_two_hours(DEFAULT_SLOT_MINUTES),
            };
            sweep
        }
        // 40 users, 48 slots, all three levels; one frozen seed at the
        // strictest preservation ratio.
        "large-scale" => {
            let mut sweep = base_sweep(vec![vec![rate_22(), rate_50(), rate_100()]]);
            sweep.base.user_count = 40;
            sweep.gammas = vec![0.8];
            sweep.seeds_per_cell = 1;
            sweep
        }
        // Multi-rate, wide bids, moderate preservation, with the utility
        // response step enabled.
        "utility-response" => {
            let mut sweep = base_sweep(vec![vec![rate_22(), rate_50(), rate_100()]]);
            sweep.gammas = vec![0.4];
            sweep.bid_ranges = vec![(1.0, 6.0)];
            sweep.utility_overlay = true;
            sweep.refresh();
            sweep
        }
        _ => return None,
    };
    Some(spec)
}

/// Slots covered by a two-hour window at the given slot length.
pub fn window_slots_for_two_hours(slot_minutes: u32) -> usize {
    (120 / slot_minutes) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_names_resolve_and_validate() {
        for name in preset_names() {
            let sweep = preset(name).unwrap_or_else(|| panic!("missing preset {name}"));
            assert!(sweep.validate().is_empty(), "preset {name} is invalid");
            assert!(!sweep.gammas.is_empty());
            assert!(!sweep.rate_configs.is_empty());
            assert!(!sweep.bid_ranges.is_empty());
        }
        assert!(preset("no-such-preset").is_none());
    }

    #[test]
    fn table2_has_twelve_cells() {
        let sweep = preset("table2").unwrap();
        assert_eq!(sweep.cell_count(), 12);
        assert_eq!(sweep.seeds_per_cell, 50);
    }

    #[test]
    fn two_hour_window_is_eight_quarter_hour_slots() {
        assert_eq!(window_slots_for_two_hours(15), 8);
        assert_eq!(window_slots_for_two_hours(30), 4);
    }

    #[test]
    fn big_m_dominates_every_preset_price() {
        for name in preset_names() {
            let sweep = preset(name).unwrap();
            let spec = &sweep.base;
            let max_cost = spec
                .station
                .rates
                .iter()
                .map(|r| r.max_cost())
                .fold(0.0, f64::max);
            let bid_high = sweep.bid_ranges.iter().map(|r| r.1).fold(0.0, f64::max);
            assert!(spec.policy.price_big_m >= spec.policy.alpha * max_cost);
            assert!(spec.policy.price_big_m >= bid_high + 2.0);
        }
    }
}
