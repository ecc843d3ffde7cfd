//! Brute-force reference solver for tiny instances.
//!
//! Every combinatorial pattern — who is served, at which rate, over which
//! contiguous window, and which assigned cells keep the user's own bid — is
//! enumerated explicitly. For a fixed pattern the optimal prices follow in
//! closed form: a countered cell is priced at `min(bid + markup, alpha*cost)`
//! and is infeasible when that falls below `max((1+epsilon)*cost, reference)`
//! where the reference price of a (slot, rate) cell is the highest bid
//! accepted at-bid there. This path shares no code with the MILP builder or
//! backend, which is what makes it usable as a certification oracle.

use thiserror::Error;

use crate::domain::{validate_instance, InstanceViolation, ProblemInstance};
use crate::model::{OperatorOffer, SlotAssignment, UserOutcome};

/// Maximum number of user x slot x rate assignment cells the oracle accepts.
pub const ORACLE_CELL_BUDGET: usize = 16;

const TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {cells} assignment cells, over the enumeration budget of {budget}")]
    OverBudget { cells: usize, budget: usize },
    #[error("instance failed validation with {} violation(s)", .0.len())]
    InvalidInstance(Vec<InstanceViolation>),
}

/// One possible schedule for a user: a rate and a contiguous slot window.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    rate: usize,
    start: usize,
    len: usize,
}

/// One assigned cell of a complete schedule, with everything pricing needs.
#[derive(Debug, Clone, Copy)]
struct Cell {
    user: usize,
    slot: usize,
    rate: usize,
    bid: f64,
    cost: f64,
    energy: f64,
    floor: f64,
    counter_cap: f64,
    at_bid_ok: bool,
}

/// Finds the profit-maximizing offer by exhaustive enumeration.
pub fn exhaustive_oracle(instance: &ProblemInstance) -> Result<OperatorOffer, OracleError> {
    let violations = validate_instance(instance);
    if !violations.is_empty() {
        return Err(OracleError::InvalidInstance(violations));
    }
    let cells = instance.num_users() * instance.num_slots() * instance.num_rates();
    if cells > ORACLE_CELL_BUDGET {
        return Err(OracleError::OverBudget {
            cells,
            budget: ORACLE_CELL_BUDGET,
        });
    }

    let candidates: Vec<Vec<Option<Candidate>>> = instance
        .bids
        .iter()
        .map(|bid| {
            // Rejection first, then windows in (rate, start, len) order.
            let mut list: Vec<Option<Candidate>> = vec![None];
            for r in 0..instance.num_rates() {
                let energy = instance.station.energy_per_slot(r);
                for start in 0..instance.num_slots() {
                    for len in 1..=(instance.num_slots() - start) {
                        let last = start + len - 1;
                        if !bid.accepts_slot(last) {
                            break;
                        }
                        let total = energy * len as f64;
                        if total > bid.q_max + TOL {
                            break;
                        }
                        if total >= bid.q_min - TOL {
                            list.push(Some(Candidate { rate: r, start, len }));
                        }
                    }
                }
            }
            // Windows not starting at an acceptable slot were still pushed
            // when every covered slot is acceptable; filter the rest here.
            list.retain(|c| match c {
                None => true,
                Some(c) => (c.start..c.start + c.len).all(|t| bid.accepts_slot(t)),
            });
            list
        })
        .collect();

    let mut search = Search {
        instance,
        candidates: &candidates,
        chosen: vec![None; instance.num_users()],
        slot_energy: vec![0.0; instance.num_slots()],
        cell_users: vec![0; instance.num_slots() * instance.num_rates()],
        best: None,
    };
    search.recurse(0);

    let best = search
        .best
        .expect("the all-rejected schedule is always feasible");
    Ok(build_offer(instance, &best))
}

/// The winning pattern: per-user schedule, per-cell pricing.
struct BestPattern {
    objective: f64,
    chosen: Vec<Option<Candidate>>,
    /// Priced cells in deterministic order: (cell, at_bid, price).
    priced: Vec<(Cell, bool, f64)>,
}

struct Search<'a> {
    instance: &'a ProblemInstance,
    candidates: &'a [Vec<Option<Candidate>>],
    chosen: Vec<Option<Candidate>>,
    slot_energy: Vec<f64>,
    cell_users: Vec<usize>,
    best: Option<BestPattern>,
}

impl Search<'_> {
    fn recurse(&mut self, user: usize) {
        if user == self.instance.num_users() {
            self.price_schedule();
            return;
        }
        for idx in 0..self.candidates[user].len() {
            let candidate = self.candidates[user][idx];
            if let Some(c) = candidate {
                if !self.fits(c) {
                    continue;
                }
                self.apply(c, 1.0);
                self.chosen[user] = Some(c);
                self.recurse(user + 1);
                self.apply(c, -1.0);
                self.chosen[user] = None;
            } else {
                self.chosen[user] = None;
                self.recurse(user + 1);
            }
        }
    }

    fn fits(&self, c: Candidate) -> bool {
        let r_count = self.instance.num_rates();
        let energy = self.instance.station.energy_per_slot(c.rate);
        let chargers = self.instance.station.rates[c.rate].charger_count as usize;
        (c.start..c.start + c.len).all(|t| {
            self.cell_users[t * r_count + c.rate] + 1 <= chargers
                && self.slot_energy[t] + energy <= self.instance.station.slot_capacity[t] + TOL
        })
    }

    fn apply(&mut self, c: Candidate, sign: f64) {
        let r_count = self.instance.num_rates();
        let energy = self.instance.station.energy_per_slot(c.rate);
        for t in c.start..c.start + c.len {
            self.slot_energy[t] += sign * energy;
            let users = &mut self.cell_users[t * r_count + c.rate];
            *users = users.wrapping_add_signed(sign as isize);
        }
    }

    /// Enumerates the at-bid/countered split for the current schedule and
    /// keeps the best feasible pricing.
    fn price_schedule(&mut self) {
        let instance = self.instance;
        let policy = &instance.policy;
        let r_count = instance.num_rates();

        let mut cells: Vec<Cell> = Vec::new();
        for (i, chosen) in self.chosen.iter().enumerate() {
            let Some(c) = chosen else { continue };
            let bid = instance.bids[i].bid_price;
            let rate = &instance.station.rates[c.rate];
            let energy = instance.station.energy_per_slot(c.rate);
            for t in c.start..c.start + c.len {
                let cost = rate.cost_at(t);
                let floor = (1.0 + policy.epsilon) * cost;
                let cap = policy.alpha * cost;
                cells.push(Cell {
                    user: i,
                    slot: t,
                    rate: c.rate,
                    bid,
                    cost,
                    energy,
                    floor,
                    counter_cap: (bid + rate.max_markup).min(cap),
                    at_bid_ok: bid >= floor - TOL && bid <= cap + TOL,
                });
            }
        }

        let k = cells.len();
        debug_assert!(k <= ORACLE_CELL_BUDGET);
        let mut reference = vec![0.0f64; instance.num_slots() * r_count];

        'masks: for mask in 0u32..(1u32 << k) {
            let at_bid_count = mask.count_ones() as f64;
            if at_bid_count < policy.gamma * k as f64 - TOL {
                continue;
            }
            for slot in reference.iter_mut() {
                *slot = 0.0;
            }
            for (idx, cell) in cells.iter().enumerate() {
                if mask & (1 << idx) != 0 {
                    if !cell.at_bid_ok {
                        continue 'masks;
                    }
                    let key = cell.slot * r_count + cell.rate;
                    reference[key] = reference[key].max(cell.bid);
                }
            }
            let mut objective = 0.0;
            let mut priced = Vec::with_capacity(k);
            for (idx, cell) in cells.iter().enumerate() {
                let at_bid = mask & (1 << idx) != 0;
                let price = if at_bid {
                    cell.bid
                } else {
                    let lower = cell.floor.max(reference[cell.slot * r_count + cell.rate]);
                    if cell.counter_cap < lower - TOL {
                        continue 'masks;
                    }
                    cell.counter_cap
                };
                objective += cell.energy * (price - cell.cost);
                priced.push((*cell, at_bid, price));
            }
            let improves = match &self.best {
                None => true,
                Some(best) => objective > best.objective + 1e-12,
            };
            if improves {
                self.best = Some(BestPattern {
                    objective,
                    chosen: self.chosen.clone(),
                    priced,
                });
            }
        }
    }
}

fn build_offer(instance: &ProblemInstance, best: &BestPattern) -> OperatorOffer {
    let r_count = instance.num_rates();
    let mut users: Vec<UserOutcome> = instance
        .bids
        .iter()
        .zip(&best.chosen)
        .map(|(bid, chosen)| match chosen {
            None => UserOutcome::rejected(bid.user_id),
            Some(c) => UserOutcome {
                user_id: bid.user_id,
                accepted: true,
                rate_index: Some(c.rate),
                slots: Vec::with_capacity(c.len),
            },
        })
        .collect();

    let mut reference_prices = vec![vec![0.0; r_count]; instance.num_slots()];
    for &(cell, at_bid, price) in &best.priced {
        users[cell.user].slots.push(SlotAssignment {
            slot: cell.slot,
            at_bid,
            final_price: price,
            counter_price: if at_bid { 0.0 } else { price },
            energy_kwh: cell.energy,
        });
        if at_bid {
            let reference = &mut reference_prices[cell.slot][cell.rate];
            *reference = cell.bid.max(*reference);
        }
    }
    for user in &mut users {
        user.slots.sort_by_key(|s| s.slot);
    }

    OperatorOffer {
        users,
        reference_prices,
        objective: best.objective,
    }
}
