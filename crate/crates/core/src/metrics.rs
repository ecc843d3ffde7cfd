//! Per-scenario performance indicators and their aggregation across seeds.

use serde::{Deserialize, Serialize};

use crate::domain::ProblemInstance;
use crate::model::OperatorOffer;
use crate::response::AcceptanceDecision;

/// Which population the price-dispersion coefficient is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GiniBasis {
    /// Final unit prices of every assigned slot of accepted users.
    #[default]
    PerSlot,
    /// One value per accepted user: the mean of their slot prices.
    PerUser,
}

/// Indicators of a single solved scenario. Price-related indicators are
/// absent (not zero) when no user was accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    /// Operator profit at the optimum, SEK.
    pub operator_profit: f64,
    /// Fraction of users the operator accepted.
    pub acceptance_rate: f64,
    /// Unweighted mean final price over assigned slots, SEK/kWh.
    pub mean_final_price: Option<f64>,
    /// Unweighted mean of (final - bid) over assigned slots, SEK/kWh.
    pub mean_markup: Option<f64>,
    /// Dispersion of final unit prices, in [0, 1).
    pub gini: Option<f64>,
    /// Fraction of operator-accepted users whose utility decision is accept.
    pub post_response_acceptance: Option<f64>,
}

/// Computes all indicators from a verified offer.
pub fn compute_metrics(
    offer: &OperatorOffer,
    instance: &ProblemInstance,
    decisions: Option<&[AcceptanceDecision]>,
    basis: GiniBasis,
) -> ScenarioMetrics {
    let user_count = instance.bids.len();
    let accepted = offer.accepted_users();
    let acceptance_rate = if user_count == 0 {
        0.0
    } else {
        accepted as f64 / user_count as f64
    };

    let mut slot_prices = Vec::new();
    let mut slot_markups = Vec::new();
    let mut user_means = Vec::new();
    for (outcome, bid) in offer.users.iter().zip(&instance.bids) {
        if !outcome.accepted || outcome.slots.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for s in &outcome.slots {
            slot_prices.push(s.final_price);
            slot_markups.push(s.final_price - bid.bid_price);
            sum += s.final_price;
        }
        user_means.push(sum / outcome.slots.len() as f64);
    }

    let mean = |v: &[f64]| {
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };

    let gini_values = match basis {
        GiniBasis::PerSlot => &slot_prices,
        GiniBasis::PerUser => &user_means,
    };

    let post_response_acceptance = decisions.and_then(|d| {
        if d.is_empty() {
            None
        } else {
            Some(d.iter().filter(|x| x.accepted).count() as f64 / d.len() as f64)
        }
    });

    ScenarioMetrics {
        operator_profit: offer.objective,
        acceptance_rate,
        mean_final_price: mean(&slot_prices),
        mean_markup: mean(&slot_markups),
        gini: gini(gini_values),
        post_response_acceptance,
    }
}

/// Gini coefficient of nonnegative values: the mean absolute pairwise
/// difference divided by twice the mean. Returns 0 for a zero mean and
/// `None` for an empty list.
///
/// Computed via the sorted identity
/// `sum_i (2(i+1) - n - 1) * v_(i) / (n^2 * mean)` rather than the
/// quadratic pairwise sum.
pub fn gini(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Some(0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("gini values must not be NaN"));
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (2.0 * (i as f64 + 1.0) - n as f64 - 1.0) * v)
        .sum();
    Some(weighted / (n as f64 * n as f64 * mean))
}

/// Mean, population standard deviation, and the number of seeds that
/// actually contributed (absent values are excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

fn stats<I: Iterator<Item = f64>>(values: I) -> Option<IndicatorStats> {
    let values: Vec<f64> = values.collect();
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(IndicatorStats {
        mean,
        std: variance.sqrt(),
        count: values.len(),
    })
}

/// Cross-seed aggregate of one scenario configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    /// Number of seeds aggregated over.
    pub seeds: usize,
    pub profit: IndicatorStats,
    pub acceptance: IndicatorStats,
    pub final_price: Option<IndicatorStats>,
    pub markup: Option<IndicatorStats>,
    pub gini: Option<IndicatorStats>,
    pub post_response: Option<IndicatorStats>,
}

/// Aggregates per-seed metrics with the population (not sample) standard
/// deviation. Panics on an empty slice; a cell always has at least one seed.
pub fn aggregate(per_seed: &[ScenarioMetrics]) -> AggregateMetrics {
    assert!(!per_seed.is_empty(), "aggregate needs at least one seed");
    AggregateMetrics {
        seeds: per_seed.len(),
        profit: stats(per_seed.iter().map(|m| m.operator_profit)).expect("non-empty"),
        acceptance: stats(per_seed.iter().map(|m| m.acceptance_rate)).expect("non-empty"),
        final_price: stats(per_seed.iter().filter_map(|m| m.mean_final_price)),
        markup: stats(per_seed.iter().filter_map(|m| m.mean_markup)),
        gini: stats(per_seed.iter().filter_map(|m| m.gini)),
        post_response: stats(per_seed.iter().filter_map(|m| m.post_response_acceptance)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PricingPolicy, RateLevel, StationConfig, UserBid};
    use crate::model::{SlotAssignment, UserOutcome};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent reference: the quadratic pairwise-difference form.
    fn gini_pairwise(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for a in values {
            for b in values {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * n * mean)
    }

    #[test]
    fn gini_known_values() {
        assert_eq!(gini(&[3.0, 3.0, 3.0]), Some(0.0));
        assert_eq!(gini(&[5.0]), Some(0.0));
        assert_eq!(gini(&[]), None);
        // Frozen from the pairwise form: sum |vi - vj| = 8 over 2*9*2.
        let g = gini(&[1.0, 2.0, 3.0]).unwrap();
        assert!((g - 8.0 / 36.0).abs() < 1e-12);
        assert!((g - gini_pairwise(&[1.0, 2.0, 3.0])).abs() < 1e-12);
    }

    #[test]
    fn gini_matches_pairwise_form_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(1..30);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let fast = gini(&values).unwrap();
            assert!((fast - gini_pairwise(&values)).abs() < 1e-10);
            assert!((0.0..1.0).contains(&fast));
        }
    }

    #[test]
    fn gini_is_scale_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..20);
            let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
            let base = gini(&values).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| v * 17.5).collect();
            assert!((gini(&scaled).unwrap() - base).abs() < 1e-12);
            values.reverse();
            assert!((gini(&values).unwrap() - base).abs() < 1e-12);
        }
    }

    fn instance(n: usize) -> ProblemInstance {
        ProblemInstance {
            bids: (0..n)
                .map(|i| UserBid {
                    user_id: i as u32,
                    bid_price: 3.0,
                    q_min: 0.0,
                    q_max: 100.0,
                    acceptable_slots: (0..4).collect(),
                })
                .collect(),
            station: StationConfig {
                num_slots: 4,
                slot_minutes: 15,
                slot_capacity: vec![100.0; 4],
                rates: vec![RateLevel::constant_cost(22.0, 1.5, 2.0, 10, 4)],
            },
            policy: PricingPolicy {
                gamma: 0.0,
                alpha: 2.5,
                epsilon: 0.5,
                price_big_m: 6.0,
            },
        }
    }

    fn offer_with(n: usize, accepted: &[usize], price: f64) -> OperatorOffer {
        OperatorOffer {
            users: (0..n)
                .map(|i| {
                    if accepted.contains(&i) {
                        UserOutcome {
                            user_id: i as u32,
                            accepted: true,
                            rate_index: Some(0),
                            slots: vec![SlotAssignment {
                                slot: 0,
                                at_bid: price == 3.0,
                                final_price: price,
                                counter_price: if price == 3.0 { 0.0 } else { price },
                                energy_kwh: 5.5,
                            }],
                        }
                    } else {
                        UserOutcome::rejected(i as u32)
                    }
                })
                .collect(),
            reference_prices: vec![vec![0.0]; 4],
            objective: accepted.len() as f64 * (price - 1.5) * 5.5,
        }
    }

    #[test]
    fn all_rejected_reports_absent_price_indicators() {
        let instance = instance(3);
        let offer = offer_with(3, &[], 3.0);
        let m = compute_metrics(&offer, &instance, None, GiniBasis::PerSlot);
        assert_eq!(m.acceptance_rate, 0.0);
        assert_eq!(m.operator_profit, 0.0);
        assert_eq!(m.mean_final_price, None);
        assert_eq!(m.mean_markup, None);
        assert_eq!(m.gini, None);
    }

    #[test]
    fn acceptance_rate_is_a_simple_ratio() {
        let instance = instance(10);
        let offer = offer_with(10, &[0, 2, 4, 6, 8, 9], 3.0);
        let m = compute_metrics(&offer, &instance, None, GiniBasis::PerSlot);
        assert_eq!(m.acceptance_rate, 0.6);
        // All slots at-bid: zero markup.
        assert_eq!(m.mean_markup, Some(0.0));
        // Ratio times user count recovers an integer count.
        assert_eq!((m.acceptance_rate * 10.0).round(), 6.0);
    }

    #[test]
    fn post_response_fraction_counts_only_operator_accepted() {
        let instance = instance(4);
        let offer = offer_with(4, &[0, 1, 2], 3.0);
        let decisions = vec![
            AcceptanceDecision { user_id: 0, utility: 5.0, accepted: true },
            AcceptanceDecision { user_id: 1, utility: -1.0, accepted: false },
            AcceptanceDecision { user_id: 2, utility: 2.0, accepted: true },
        ];
        let m = compute_metrics(&offer, &instance, Some(&decisions), GiniBasis::PerSlot);
        assert_eq!(m.post_response_acceptance, Some(2.0 / 3.0));
    }

    #[test]
    fn aggregation_uses_population_std_and_skips_absent() {
        let a = ScenarioMetrics {
            operator_profit: 10.0,
            acceptance_rate: 0.6,
            mean_final_price: Some(3.0),
            mean_markup: Some(0.0),
            gini: Some(0.01),
            post_response_acceptance: None,
        };
        let b = ScenarioMetrics {
            operator_profit: 14.0,
            acceptance_rate: 0.6,
            mean_final_price: None,
            mean_markup: None,
            gini: None,
            post_response_acceptance: None,
        };
        let agg = aggregate(&[a, b]);
        assert_eq!(agg.seeds, 2);
        assert_eq!(agg.profit.mean, 12.0);
        assert_eq!(agg.profit.std, 2.0);
        assert_eq!(agg.profit.count, 2);
        assert_eq!(agg.acceptance.mean, 0.6);
        assert_eq!(agg.acceptance.std, 0.0);
        let price = agg.final_price.unwrap();
        assert_eq!(price.count, 1);
        assert_eq!(price.mean, 3.0);
        assert_eq!(price.std, 0.0);
        assert_eq!(agg.post_response, None);
    }

    #[test]
    fn single_seed_has_zero_std() {
        let m = ScenarioMetrics {
            operator_profit: 5.0,
            acceptance_rate: 1.0,
            mean_final_price: Some(3.5),
            mean_markup: Some(0.5),
            gini: Some(0.0),
            post_response_acceptance: Some(1.0),
        };
        let agg = aggregate(&[m]);
        assert_eq!(agg.profit.std, 0.0);
        assert_eq!(agg.final_price.unwrap().std, 0.0);
    }
}
