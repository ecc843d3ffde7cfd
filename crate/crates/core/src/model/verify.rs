//! Independent re-check of an offer against every pricing and scheduling
//! rule, evaluated directly on the offer without touching the solver.

use serde::{Deserialize, Serialize};

use crate::domain::ProblemInstance;
use crate::model::{ConstraintTag, OperatorOffer};

/// Absolute tolerance for continuous comparisons.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

/// One failed check: the rule family it belongs to, where it happened, and
/// the measured-versus-bound pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub tag: String,
    pub user: Option<usize>,
    pub slot: Option<usize>,
    pub rate: Option<usize>,
    pub measured: f64,
    pub bound: f64,
    pub message: String,
}

/// Verification outcome; empty iff the offer satisfies every check.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(
        &mut self,
        tag: ConstraintTag,
        user: Option<usize>,
        slot: Option<usize>,
        rate: Option<usize>,
        measured: f64,
        bound: f64,
        message: impl Into<String>,
    ) {
        self.violations.push(Violation {
            tag: tag.as_str().to_string(),
            user,
            slot,
            rate,
            measured,
            bound,
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_clean() {
            return write!(f, "offer satisfies all checks");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(
                f,
                "  [{}] user={:?} slot={:?} rate={:?} measured={} bound={}: {}",
                v.tag, v.user, v.slot, v.rate, v.measured, v.bound, v.message
            )?;
        }
        Ok(())
    }
}

/// Checks an offer against the full rule catalog. Violations are data, not
/// errors: malformed offers produce a populated report rather than a panic.
pub fn verify_offer(offer: &OperatorOffer, instance: &ProblemInstance) -> ViolationReport {
    let mut report = ViolationReport::default();
    let tol = VERIFY_TOLERANCE;
    let t_count = instance.num_slots();
    let r_count = instance.num_rates();
    let station = &instance.station;
    let policy = &instance.policy;

    if offer.users.len() != instance.bids.len() {
        report.push(
            ConstraintTag::Aux,
            None,
            None,
            None,
            offer.users.len() as f64,
            instance.bids.len() as f64,
            "offer must contain one outcome per user",
        );
        return report;
    }
    if offer.reference_prices.len() != t_count
        || offer.reference_prices.iter().any(|row| row.len() != r_count)
    {
        report.push(
            ConstraintTag::Aux,
            None,
            None,
            None,
            offer.reference_prices.len() as f64,
            t_count as f64,
            "reference price matrix must be slot x rate",
        );
        return report;
    }

    // Per-slot and per-cell aggregates collected on the way.
    let mut slot_energy = vec![0.0; t_count];
    let mut cell_users = vec![0usize; t_count * r_count];
    let mut cell_max_at_bid = vec![0.0f64; t_count * r_count];

    for (i, (user, bid)) in offer.users.iter().zip(&instance.bids).enumerate() {
        if user.user_id != bid.user_id {
            report.push(
                ConstraintTag::Aux,
                Some(i),
                None,
                None,
                f64::from(user.user_id),
                f64::from(bid.user_id),
                "outcome order must match instance bid order",
            );
            continue;
        }

        // Acceptance flag, rate selection, and emptiness must agree (eq2).
        match (user.accepted, user.rate_index) {
            (false, None) => {
                if !user.slots.is_empty() {
                    report.push(
                        ConstraintTag::Eq3,
                        Some(i),
                        None,
                        None,
                        user.slots.len() as f64,
                        0.0,
                        "rejected user may not hold slots",
                    );
                }
                continue;
            }
            (true, Some(r)) if r < r_count => {}
            _ => {
                report.push(
                    ConstraintTag::Eq2,
                    Some(i),
                    None,
                    None,
                    f64::from(user.accepted),
                    1.0,
                    "accepted users need exactly one valid rate, rejected users none",
                );
                continue;
            }
        }
        let r = user.rate_index.expect("checked above");
        let rate = &station.rates[r];
        let per_slot = instance.station.energy_per_slot(r);

        // Contiguity (eq4-eq6): slots must form one unbroken increasing run.
        let runs = count_runs(&user.slots.iter().map(|s| s.slot).collect::<Vec<_>>());
        if runs > 1 {
            report.push(
                ConstraintTag::Eq4,
                Some(i),
                None,
                None,
                runs as f64,
                1.0,
                "assigned slots must form one contiguous window",
            );
        }

        for s in &user.slots {
            let t = s.slot;
            if t >= t_count {
                report.push(
                    ConstraintTag::Eq3,
                    Some(i),
                    Some(t),
                    Some(r),
                    t as f64,
                    (t_count - 1) as f64,
                    "slot outside the horizon",
                );
                continue;
            }
            if !bid.accepts_slot(t) {
                report.push(
                    ConstraintTag::Eq3,
                    Some(i),
                    Some(t),
                    Some(r),
                    t as f64,
                    -1.0,
                    "slot outside the user's declared window",
                );
            }
            let cost = rate.cost_at(t);

            // eq10: energy per assigned slot equals the rate's energy.
            if (s.energy_kwh - per_slot).abs() > tol {
                report.push(
                    ConstraintTag::Eq10,
                    Some(i),
                    Some(t),
                    Some(r),
                    s.energy_kwh,
                    per_slot,
                    "slot energy must equal the rate's energy per slot",
                );
            }

            // eq14/eq15: margin floor and price cap.
            let floor = (1.0 + policy.epsilon) * cost;
            if s.final_price < floor - tol {
                report.push(
                    ConstraintTag::Eq14,
                    Some(i),
                    Some(t),
                    Some(r),
                    s.final_price,
                    floor,
                    "final price below the minimum margin",
                );
            }
            let cap = policy.alpha * cost;
            if s.final_price > cap + tol {
                report.push(
                    ConstraintTag::Eq15,
                    Some(i),
                    Some(t),
                    Some(r),
                    s.final_price,
                    cap,
                    "final price above the price cap",
                );
            }

            if s.at_bid {
                // eq13: at-bid slots are priced exactly at the bid.
                if (s.final_price - bid.bid_price).abs() > tol {
                    report.push(
                        ConstraintTag::Eq13,
                        Some(i),
                        Some(t),
                        Some(r),
                        s.final_price,
                        bid.bid_price,
                        "at-bid slot must carry the bid price exactly",
                    );
                }
                // eq12b with the counter flag off forces a zero counter price.
                if s.counter_price.abs() > tol {
                    report.push(
                        ConstraintTag::Eq12b,
                        Some(i),
                        Some(t),
                        Some(r),
                        s.counter_price,
                        0.0,
                        "at-bid slot must carry no counter price",
                    );
                }
                let cell = t * r_count + r;
                cell_max_at_bid[cell] = cell_max_at_bid[cell].max(bid.bid_price);
            } else {
                // eq13: countered slots are priced at the counter price.
                if (s.final_price - s.counter_price).abs() > tol {
                    report.push(
                        ConstraintTag::Eq13,
                        Some(i),
                        Some(t),
                        Some(r),
                        s.final_price,
                        s.counter_price,
                        "countered slot must carry the counter price",
                    );
                }
                // eq12b: counter price within the markup allowance.
                let counter_cap = bid.bid_price + rate.max_markup;
                if s.counter_price > counter_cap + tol {
                    report.push(
                        ConstraintTag::Eq12b,
                        Some(i),
                        Some(t),
                        Some(r),
                        s.counter_price,
                        counter_cap,
                        "counter price above bid plus markup allowance",
                    );
                }
                // eq17: counter price may not undercut the reference price.
                let reference = offer.reference_prices[t][r];
                if s.counter_price < reference - tol {
                    report.push(
                        ConstraintTag::Eq17,
                        Some(i),
                        Some(t),
                        Some(r),
                        s.counter_price,
                        reference,
                        "counter price below the reference price",
                    );
                }
            }

            slot_energy[t] += s.energy_kwh;
            cell_users[t * r_count + r] += 1;
        }

        // eq7: total energy within the user's demand bounds.
        let total = user.total_energy();
        if total < bid.q_min - tol || total > bid.q_max + tol {
            report.push(
                ConstraintTag::Eq7,
                Some(i),
                None,
                None,
                total,
                if total < bid.q_min { bid.q_min } else { bid.q_max },
                "delivered energy outside the demand bounds",
            );
        }
    }

    // eq8: per-slot capacity.
    for (t, &used) in slot_energy.iter().enumerate() {
        if used > station.slot_capacity[t] + tol {
            report.push(
                ConstraintTag::Eq8,
                None,
                Some(t),
                None,
                used,
                station.slot_capacity[t],
                "slot capacity exceeded",
            );
        }
    }

    // eq9: charger count per slot and rate.
    for t in 0..t_count {
        for r in 0..r_count {
            let used = cell_users[t * r_count + r];
            let limit = station.rates[r].charger_count as usize;
            if used > limit {
                report.push(
                    ConstraintTag::Eq9,
                    None,
                    Some(t),
                    Some(r),
                    used as f64,
                    limit as f64,
                    "more simultaneous users than chargers at this rate",
                );
            }
        }
    }

    // eq16 and reference price domain.
    for t in 0..t_count {
        for r in 0..r_count {
            let reference = offer.reference_prices[t][r];
            let max_at_bid = cell_max_at_bid[t * r_count + r];
            if reference < max_at_bid - tol {
                report.push(
                    ConstraintTag::Eq16,
                    None,
                    Some(t),
                    Some(r),
                    reference,
                    max_at_bid,
                    "reference price below the highest at-bid price in its cell",
                );
            }
            if reference < -tol || reference > policy.price_big_m + tol {
                report.push(
                    ConstraintTag::Aux,
                    None,
                    Some(t),
                    Some(r),
                    reference,
                    policy.price_big_m,
                    "reference price outside its domain",
                );
            }
        }
    }

    // eq18: global bid-preservation share.
    let assigned = offer.assigned_cells() as f64;
    let at_bid = offer.at_bid_cells() as f64;
    if at_bid < policy.gamma * assigned - tol {
        report.push(
            ConstraintTag::Eq18,
            None,
            None,
            None,
            at_bid,
            policy.gamma * assigned,
            "too few slots preserved at the users' own bids",
        );
    }

    report
}

/// Number of maximal consecutive runs in a slot list; also counts breaks on
/// unsorted or duplicated entries.
fn count_runs(slots: &[usize]) -> usize {
    if slots.is_empty() {
        return 0;
    }
    1 + slots
        .windows(2)
        .filter(|w| w[1] != w[0] + 1)
        .count()
}
