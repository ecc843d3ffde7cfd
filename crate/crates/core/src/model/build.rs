//! Translation of a [`ProblemInstance`] into the operator MILP.
//!
//! The objective is stated as `sum E_r * (pF - c * z)`, which equals the
//! bilinear revenue expression on every feasible point because the pricing
//! rows force `pF = 0` wherever `z = 0`. Slot indices outside the horizon
//! act as virtual zero slots in the start/end detection rows.

use thiserror::Error;

use crate::domain::{validate_instance, InstanceViolation, ProblemInstance};
use crate::model::{ConstraintSense, ConstraintTag, ModelDescription, VarId, VarKind};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("instance failed validation with {} violation(s)", .0.len())]
    InvalidInstance(Vec<InstanceViolation>),
}

/// Flat index tables for the variable families of one model build.
struct VarTable {
    accept: Vec<VarId>,       // a_i
    rate: Vec<VarId>,         // y_i_r
    assign: Vec<VarId>,       // z_i_t_r
    start: Vec<VarId>,        // zs_i_t
    end: Vec<VarId>,          // ze_i_t
    at_bid: Vec<VarId>,       // xB_i_t_r
    countered: Vec<VarId>,    // xN_i_t_r
    counter_price: Vec<VarId>, // pN_i_t_r
    final_price: Vec<VarId>,  // pF_i_t_r
    energy: Vec<VarId>,       // q_i_t
    reference: Vec<VarId>,    // pR_t_r
}

pub fn build_model(instance: &ProblemInstance) -> Result<ModelDescription, BuildError> {
    let violations = validate_instance(instance);
    if !violations.is_empty() {
        return Err(BuildError::InvalidInstance(violations));
    }

    let n = instance.num_users();
    let t_count = instance.num_slots();
    let r_count = instance.num_rates();
    let station = &instance.station;
    let policy = &instance.policy;
    let energy: Vec<f64> = (0..r_count).map(|r| station.energy_per_slot(r)).collect();

    let itr = |i: usize, t: usize, r: usize| (i * t_count + t) * r_count + r;
    let it = |i: usize, t: usize| i * t_count + t;
    let ir = |i: usize, r: usize| i * r_count + r;
    let tr = |t: usize, r: usize| t * r_count + r;

    let mut m = ModelDescription::new();
    let bin = |m: &mut ModelDescription, name: String| m.add_variable(name, VarKind::Binary, 0.0, 1.0);
    let vars = VarTable {
        accept: (0..n).map(|i| bin(&mut m, format!("a_{i}"))).collect(),
        rate: (0..n)
            .flat_map(|i| (0..r_count).map(move |r| (i, r)))
            .map(|(i, r)| bin(&mut m, format!("y_{i}_{r}")))
            .collect(),
        assign: all_itr(n, t_count, r_count)
            .map(|(i, t, r)| bin(&mut m, format!("z_{i}_{t}_{r}")))
            .collect(),
        start: all_it(n, t_count)
            .map(|(i, t)| bin(&mut m, format!("zs_{i}_{t}")))
            .collect(),
        end: all_it(n, t_count)
            .map(|(i, t)| bin(&mut m, format!("ze_{i}_{t}")))
            .collect(),
        at_bid: all_itr(n, t_count, r_count)
            .map(|(i, t, r)| bin(&mut m, format!("xB_{i}_{t}_{r}")))
            .collect(),
        countered: all_itr(n, t_count, r_count)
            .map(|(i, t, r)| bin(&mut m, format!("xN_{i}_{t}_{r}")))
            .collect(),
        counter_price: all_itr(n, t_count, r_count)
            .map(|(i, t, r)| {
                m.add_variable(format!("pN_{i}_{t}_{r}"), VarKind::Continuous, 0.0, f64::INFINITY)
            })
            .collect(),
        final_price: all_itr(n, t_count, r_count)
            .map(|(i, t, r)| {
                m.add_variable(format!("pF_{i}_{t}_{r}"), VarKind::Continuous, 0.0, f64::INFINITY)
            })
            .collect(),
        energy: all_it(n, t_count)
            .map(|(i, t)| m.add_variable(format!("q_{i}_{t}"), VarKind::Continuous, 0.0, f64::INFINITY))
            .collect(),
        reference: (0..t_count)
            .flat_map(|t| (0..r_count).map(move |r| (t, r)))
            .map(|(t, r)| {
                m.add_variable(format!("pR_{t}_{r}"), VarKind::Continuous, 0.0, policy.price_big_m)
            })
            .collect(),
    };

    // Objective: sum over (i,t,r) of E_r * pF - E_r * c_{r,t} * z.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        m.add_objective_term(vars.final_price[itr(i, t, r)], energy[r]);
        m.add_objective_term(vars.assign[itr(i, t, r)], -energy[r] * station.rates[r].cost_at(t));
    }

    // eq2: sum_r y_{i,r} = a_i.
    for i in 0..n {
        let mut terms: Vec<(VarId, f64)> = (0..r_count).map(|r| (vars.rate[ir(i, r)], 1.0)).collect();
        terms.push((vars.accept[i], -1.0));
        m.add_constraint(format!("eq2_u{i}"), ConstraintTag::Eq2, terms, ConstraintSense::Equal, 0.0);
    }

    // eq3: sum_r z_{i,t,r} <= A_{i,t} * a_i.
    for (i, t) in all_it(n, t_count) {
        let mut terms: Vec<(VarId, f64)> =
            (0..r_count).map(|r| (vars.assign[itr(i, t, r)], 1.0)).collect();
        if instance.bids[i].accepts_slot(t) {
            terms.push((vars.accept[i], -1.0));
        }
        m.add_constraint(format!("eq3_u{i}_t{t}"), ConstraintTag::Eq3, terms, ConstraintSense::LessEq, 0.0);
    }

    // eq4: at most one start and one end per user.
    for i in 0..n {
        let starts: Vec<_> = (0..t_count).map(|t| (vars.start[it(i, t)], 1.0)).collect();
        let ends: Vec<_> = (0..t_count).map(|t| (vars.end[it(i, t)], 1.0)).collect();
        m.add_constraint(format!("eq4_start_u{i}"), ConstraintTag::Eq4, starts, ConstraintSense::LessEq, 1.0);
        m.add_constraint(format!("eq4_end_u{i}"), ConstraintTag::Eq4, ends, ConstraintSense::LessEq, 1.0);
    }

    // eq5/eq6: start and end detection with virtual zero slots outside the
    // horizon: zs_{i,t} >= z_{i,t,r} - z_{i,t-1,r}, ze_{i,t} >= z_{i,t,r} - z_{i,t+1,r}.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        let mut start_terms = vec![(vars.start[it(i, t)], 1.0), (vars.assign[itr(i, t, r)], -1.0)];
        if t > 0 {
            start_terms.push((vars.assign[itr(i, t - 1, r)], 1.0));
        }
        m.add_constraint(
            format!("eq5_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq5,
            start_terms,
            ConstraintSense::GreaterEq,
            0.0,
        );

        let mut end_terms = vec![(vars.end[it(i, t)], 1.0), (vars.assign[itr(i, t, r)], -1.0)];
        if t + 1 < t_count {
            end_terms.push((vars.assign[itr(i, t + 1, r)], 1.0));
        }
        m.add_constraint(
            format!("eq6_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq6,
            end_terms,
            ConstraintSense::GreaterEq,
            0.0,
        );
    }

    // eq7: Qmin_i * a_i <= sum_t q_{i,t} <= Qmax_i * a_i.
    for i in 0..n {
        let bid = &instance.bids[i];
        let mut lo: Vec<(VarId, f64)> = (0..t_count).map(|t| (vars.energy[it(i, t)], 1.0)).collect();
        lo.push((vars.accept[i], -bid.q_min));
        m.add_constraint(format!("eq7_lo_u{i}"), ConstraintTag::Eq7, lo, ConstraintSense::GreaterEq, 0.0);
        let mut hi: Vec<(VarId, f64)> = (0..t_count).map(|t| (vars.energy[it(i, t)], 1.0)).collect();
        hi.push((vars.accept[i], -bid.q_max));
        m.add_constraint(format!("eq7_hi_u{i}"), ConstraintTag::Eq7, hi, ConstraintSense::LessEq, 0.0);
    }

    // eq8: per-slot system capacity.
    for t in 0..t_count {
        let terms: Vec<_> = (0..n).map(|i| (vars.energy[it(i, t)], 1.0)).collect();
        m.add_constraint(
            format!("eq8_t{t}"),
            ConstraintTag::Eq8,
            terms,
            ConstraintSense::LessEq,
            station.slot_capacity[t],
        );
    }

    // eq9: charger count per slot and rate.
    for t in 0..t_count {
        for r in 0..r_count {
            let terms: Vec<_> = (0..n).map(|i| (vars.assign[itr(i, t, r)], 1.0)).collect();
            m.add_constraint(
                format!("eq9_t{t}_r{r}"),
                ConstraintTag::Eq9,
                terms,
                ConstraintSense::LessEq,
                f64::from(station.rates[r].charger_count),
            );
        }
    }

    // eq10: q_{i,t} = sum_r E_r * z_{i,t,r}.
    for (i, t) in all_it(n, t_count) {
        let mut terms = vec![(vars.energy[it(i, t)], 1.0)];
        for r in 0..r_count {
            terms.push((vars.assign[itr(i, t, r)], -energy[r]));
        }
        m.add_constraint(format!("eq10_u{i}_t{t}"), ConstraintTag::Eq10, terms, ConstraintSense::Equal, 0.0);
    }

    // eq11: z_{i,t,r} <= y_{i,r}; together with eq2 this pins one rate per
    // accepted user.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        m.add_constraint(
            format!("eq11_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq11,
            vec![(vars.assign[itr(i, t, r)], 1.0), (vars.rate[ir(i, r)], -1.0)],
            ConstraintSense::LessEq,
            0.0,
        );
    }

    // eq12: xB + xN = z; eq12b: pN <= (bid + markup) * xN.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        m.add_constraint(
            format!("eq12_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq12,
            vec![
                (vars.at_bid[itr(i, t, r)], 1.0),
                (vars.countered[itr(i, t, r)], 1.0),
                (vars.assign[itr(i, t, r)], -1.0),
            ],
            ConstraintSense::Equal,
            0.0,
        );
        let cap = instance.bids[i].bid_price + station.rates[r].max_markup;
        m.add_constraint(
            format!("eq12b_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq12b,
            vec![
                (vars.counter_price[itr(i, t, r)], 1.0),
                (vars.countered[itr(i, t, r)], -cap),
            ],
            ConstraintSense::LessEq,
            0.0,
        );
    }

    // eq13: pF = bid * xB + pN. Linear because eq12b zeroes pN when xN = 0.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        m.add_constraint(
            format!("eq13_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq13,
            vec![
                (vars.final_price[itr(i, t, r)], 1.0),
                (vars.at_bid[itr(i, t, r)], -instance.bids[i].bid_price),
                (vars.counter_price[itr(i, t, r)], -1.0),
            ],
            ConstraintSense::Equal,
            0.0,
        );
    }

    // eq14: pF >= (1 + epsilon) * c_{r,t} * z; eq15: pF <= alpha * c_{r,t}.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        let cost = station.rates[r].cost_at(t);
        m.add_constraint(
            format!("eq14_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq14,
            vec![
                (vars.final_price[itr(i, t, r)], 1.0),
                (vars.assign[itr(i, t, r)], -(1.0 + policy.epsilon) * cost),
            ],
            ConstraintSense::GreaterEq,
            0.0,
        );
        m.add_constraint(
            format!("eq15_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq15,
            vec![(vars.final_price[itr(i, t, r)], 1.0)],
            ConstraintSense::LessEq,
            policy.alpha * cost,
        );
    }

    // eq16: pR_{t,r} >= bid_i * xB_{i,t,r}.
    for (i, t, r) in all_itr(n, t_count, r_count) {
        m.add_constraint(
            format!("eq16_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq16,
            vec![
                (vars.reference[tr(t, r)], 1.0),
                (vars.at_bid[itr(i, t, r)], -instance.bids[i].bid_price),
            ],
            ConstraintSense::GreaterEq,
            0.0,
        );
    }

    // eq17: pN >= pR - bigM * (1 - xN).
    for (i, t, r) in all_itr(n, t_count, r_count) {
        m.add_constraint(
            format!("eq17_u{i}_t{t}_r{r}"),
            ConstraintTag::Eq17,
            vec![
                (vars.counter_price[itr(i, t, r)], 1.0),
                (vars.reference[tr(t, r)], -1.0),
                (vars.countered[itr(i, t, r)], -policy.price_big_m),
            ],
            ConstraintSense::GreaterEq,
            -policy.price_big_m,
        );
    }

    // eq18: global bid-preservation share.
    let mut share_terms = Vec::with_capacity(2 * n * t_count * r_count);
    for (i, t, r) in all_itr(n, t_count, r_count) {
        share_terms.push((vars.at_bid[itr(i, t, r)], 1.0));
        if policy.gamma != 0.0 {
            share_terms.push((vars.assign[itr(i, t, r)], -policy.gamma));
        }
    }
    m.add_constraint("eq18".into(), ConstraintTag::Eq18, share_terms, ConstraintSense::GreaterEq, 0.0);

    Ok(m)
}

fn all_itr(n: usize, t_count: usize, r_count: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| {
        (0..t_count).flat_map(move |t| (0..r_count).map(move |r| (i, t, r)))
    })
}

fn all_it(n: usize, t_count: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..t_count).map(move |t| (i, t)))
}
