//! Axis-grid sweeps: every (rate configuration, bid range, gamma) cell is
//! run over a block of seeds and aggregated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::{aggregate, AggregateMetrics, GiniBasis, ScenarioMetrics};
use crate::scenario::{run_generated, RateSpec, ScenarioError, ScenarioSpec};
use crate::solver::{SolverBackend, SolverOptions};

/// A sweep: one base scenario plus the axes to vary and the seed block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioSpec,
    /// Rate configurations to install in the station, one cell per entry.
    pub rate_configs: Vec<Vec<RateSpec>>,
    /// Preservation ratios to sweep.
    pub gammas: Vec<f64>,
    /// Bid ranges to sweep.
    pub bid_ranges: Vec<(f64, f64)>,
    /// Seeds per cell: `base.seed .. base.seed + seeds_per_cell`.
    pub seeds_per_cell: usize,
    /// Sample preferences and run the user-response step in every cell.
    #[serde(default)]
    pub utility_overlay: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut out = self.base.validate();
        if self.rate_configs.is_empty() {
            out.push("rate_configs: at least one rate configuration required".into());
        }
        if self.gammas.is_empty() {
            out.push("gammas: at least one value required".into());
        }
        if self.bid_ranges.is_empty() {
            out.push("bid_ranges: at least one range required".into());
        }
        if self.seeds_per_cell < 1 {
            out.push("seeds_per_cell: must be at least 1".into());
        }
        for (lo, hi) in &self.bid_ranges {
            if !(lo <= hi) {
                out.push(format!("bid_ranges: low > high ({lo} > {hi})"));
            }
            if !(*lo > 0.0) {
                out.push(format!("bid_ranges: low must be > 0, got {lo}"));
            }
        }
        for (k, config) in self.rate_configs.iter().enumerate() {
            if config.is_empty() {
                out.push(format!("rate_configs[{k}]: must offer at least one rate"));
            }
        }
        for gamma in &self.gammas {
            if !(0.0..=1.0).contains(gamma) {
                out.push(format!("gammas: must lie in [0, 1], got {gamma}"));
            }
        }
        out
    }

    pub fn cell_count(&self) -> usize {
        self.rate_configs.len() * self.bid_ranges.len() * self.gammas.len()
    }

    /// Re-aligns the base scenario with the first entry of every axis.
    pub fn refresh(&mut self) {
        let spec = self.cell_scenario(0, self.gammas[0], self.bid_ranges[0], self.base.seed);
        self.base = spec;
    }

    /// The scenario of the first cell at the base seed; what `run` executes
    /// when handed a sweep preset.
    pub fn single_scenario(&self) -> ScenarioSpec {
        self.cell_scenario(0, self.gammas[0], self.bid_ranges[0], self.base.seed)
    }

    /// Materializes one cell: install the axis values and re-derive the
    /// big-M price bound for that combination.
    pub fn cell_scenario(
        &self,
        rate_config: usize,
        gamma: f64,
        bid_range: (f64, f64),
        seed: u64,
    ) -> ScenarioSpec {
        let mut spec = self.base.clone();
        spec.policy.gamma = gamma;
        spec.bid_range = bid_range;
        spec.seed = seed;
        spec.station.rates = self.rate_configs[rate_config]
            .iter()
            .map(|r| r.to_level(spec.station.num_slots))
            .collect();
        spec.refresh_big_m();
        spec
    }
}

/// How one sweep cell ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum CellOutcome {
    Solved { aggregate: AggregateMetrics },
    /// The operator model had no feasible solution for some seed.
    Infeasible { seed: u64 },
    Failed { seed: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rates: Vec<RateSpec>,
    /// Rate powers joined with '+', e.g. "22" or "22+50".
    pub rate_label: String,
    pub gamma: f64,
    pub bid_range: (f64, f64),
    pub seeds: usize,
    pub outcome: CellOutcome,
}

/// All cells of one sweep, in (rate config, bid range, gamma) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn all_solved(&self) -> bool {
        self.cells
            .iter()
            .all(|c| matches!(c.outcome, CellOutcome::Solved { .. }))
    }
}

pub fn rate_label(rates: &[RateSpec]) -> String {
    rates
        .iter()
        .map(|r| r.rate_kw.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// Runs every cell over its seed block. Cells and seeds execute in
/// parallel; results are reduced in seed order, so the table is
/// deterministic for a fixed backend. A failing seed marks its cell failed
/// without stopping the sweep.
pub fn run_sweep(
    backend: &dyn SolverBackend,
    spec: &SweepSpec,
    solver: &SolverOptions,
    gini_basis: GiniBasis,
) -> SweepTable {
    let mut cells: Vec<(usize, f64, (f64, f64))> = Vec::with_capacity(spec.cell_count());
    for rc in 0..spec.rate_configs.len() {
        for &bid_range in &spec.bid_ranges {
            for &gamma in &spec.gammas {
                cells.push((rc, gamma, bid_range));
            }
        }
    }

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|cell| {
            (0..spec.seeds_per_cell as u64).map(move |k| (cell, spec.base.seed + k))
        })
        .collect();

    let mut results: Vec<(usize, u64, Result<ScenarioMetrics, ScenarioError>)> = jobs
        .into_par_iter()
        .map(|(cell, seed)| {
            let (rc, gamma, bid_range) = cells[cell];
            let scenario = spec.cell_scenario(rc, gamma, bid_range, seed);
            let result = run_generated(backend, &scenario, solver, gini_basis, spec.utility_overlay)
                .map(|(_, outcome)| outcome.metrics);
            (cell, seed, result)
        })
        .collect();
    results.sort_by_key(|(cell, seed, _)| (*cell, *seed));

    let mut table = Vec::with_capacity(cells.len());
    for (cell_idx, &(rc, gamma, bid_range)) in cells.iter().enumerate() {
        let cell_results: Vec<&(usize, u64, Result<ScenarioMetrics, ScenarioError>)> = results
            .iter()
            .filter(|(c, _, _)| *c == cell_idx)
            .collect();
        let failure = cell_results.iter().find(|(_, _, r)| r.is_err());
        let outcome = match failure {
            Some((_, seed, Err(ScenarioError::Infeasible))) => CellOutcome::Infeasible { seed: *seed },
            Some((_, seed, Err(e))) => CellOutcome::Failed {
                seed: *seed,
                message: e.to_string(),
            },
            _ => {
                let metrics: Vec<ScenarioMetrics> = cell_results
                    .iter()
                    .filter_map(|(_, _, r)| r.as_ref().ok().cloned())
                    .collect();
                CellOutcome::Solved {
                    aggregate: aggregate(&metrics),
                }
            }
        };
        table.push(SweepCell {
            rates: spec.rate_configs[rc].clone(),
            rate_label: rate_label(&spec.rate_configs[rc]),
            gamma,
            bid_range,
            seeds: spec.seeds_per_cell,
            outcome,
        });
    }

    SweepTable { cells: table }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PricingPolicy, StationConfig};
    use crate::model::ModelDescription;
    use crate::scenario::AvailabilityPattern;
    use crate::solver::{HighsBackend, SolveError, Solution};

    fn tiny_sweep() -> SweepSpec {
        let num_slots = 4;
        let rate = RateSpec {
            rate_kw: 22.0,
            cost_per_kwh: 1.5,
            max_markup: 2.0,
            charger_count: 1,
        };
        let mut base = ScenarioSpec {
            user_count: 2,
            bid_range: (2.0, 4.0),
            demand_bounds: (5.0, 11.0),
            availability_pattern: AvailabilityPattern::FullHorizon,
            station: StationConfig {
                num_slots,
                slot_minutes: 15,
                slot_capacity: vec![0.0; num_slots],
                rates: vec![rate.to_level(num_slots)],
            },
            policy: PricingPolicy {
                gamma: 0.0,
                alpha: 2.5,
                epsilon: 0.5,
                price_big_m: 0.0,
            },
            auto_capacity: true,
            seed: 11,
        };
        base.refresh_big_m();
        SweepSpec {
            base,
            rate_configs: vec![vec![rate]],
            gammas: vec![0.0, 0.5, 1.0],
            bid_ranges: vec![(2.0, 4.0)],
            seeds_per_cell: 3,
            utility_overlay: false,
        }
    }

    #[test]
    fn sweep_is_deterministic_and_profit_falls_with_gamma() {
        let spec = tiny_sweep();
        let solver = SolverOptions::default();
        let table = run_sweep(&HighsBackend, &spec, &solver, GiniBasis::PerSlot);
        assert_eq!(table.cells.len(), 3);
        assert!(table.all_solved());
        let profits: Vec<f64> = table
            .cells
            .iter()
            .map(|c| match &c.outcome {
                CellOutcome::Solved { aggregate } => aggregate.profit.mean,
                other => panic!("unexpected outcome {other:?}"),
            })
            .collect();
        assert!(profits[0] >= profits[1] - 1e-9);
        assert!(profits[1] >= profits[2] - 1e-9);

        let again = run_sweep(&HighsBackend, &spec, &solver, GiniBasis::PerSlot);
        assert_eq!(table, again);
    }

    #[test]
    fn single_cell_single_seed_has_zero_std() {
        let mut spec = tiny_sweep();
        spec.gammas = vec![0.5];
        spec.seeds_per_cell = 1;
        let table = run_sweep(&HighsBackend, &spec, &SolverOptions::default(), GiniBasis::PerSlot);
        assert_eq!(table.cells.len(), 1);
        match &table.cells[0].outcome {
            CellOutcome::Solved { aggregate } => {
                assert_eq!(aggregate.seeds, 1);
                assert_eq!(aggregate.profit.std, 0.0);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    struct AlwaysInfeasible;

    impl SolverBackend for AlwaysInfeasible {
        fn name(&self) -> &'static str {
            "always-infeasible"
        }

        fn solve(
            &self,
            _model: &ModelDescription,
            _options: &SolverOptions,
        ) -> Result<Solution, SolveError> {
            Ok(Solution::infeasible())
        }
    }

    #[test]
    fn infeasible_cells_are_reported_not_dropped() {
        let mut spec = tiny_sweep();
        spec.gammas = vec![0.5];
        spec.seeds_per_cell = 2;
        let table = run_sweep(&AlwaysInfeasible, &spec, &SolverOptions::default(), GiniBasis::PerSlot);
        assert_eq!(table.cells.len(), 1);
        assert!(matches!(
            table.cells[0].outcome,
            CellOutcome::Infeasible { seed: 11 }
        ));
        assert!(!table.all_solved());
    }
}
