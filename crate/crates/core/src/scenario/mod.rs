//! Seeded scenario generation and the end-to-end market pipeline:
//! generate bids, solve the operator model, verify the offer, simulate the
//! user response, and compute metrics.

pub mod presets;
mod sweep;

pub use sweep::{rate_label, run_sweep, CellOutcome, SweepCell, SweepSpec, SweepTable};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    validate_instance, InstanceViolation, PricingPolicy, ProblemInstance, RateLevel,
    StationConfig, UserBid,
};
use crate::metrics::{compute_metrics, GiniBasis, ScenarioMetrics};
use crate::model::{
    build_model, extract_offer, verify_offer, BuildError, ExtractError, OperatorOffer,
    ViolationReport,
};
use crate::money::round_money;
use crate::response::{decide, sample_preferences, unit_draw, AcceptanceDecision, ResponseError, UserPreference};
use crate::solver::{SolveError, SolveStatus, SolverBackend, SolverOptions};

/// Salt XORed into the scenario seed to derive the preference-sampling seed,
/// keeping taste draws independent of bid draws under the same seed.
pub const PREFERENCE_SEED_SALT: u64 = 0x7072_6566;

/// A rate level with a flat cost, as presets and sweep axes express them;
/// broadcast to a per-slot cost vector at generation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub rate_kw: f64,
    pub cost_per_kwh: f64,
    pub max_markup: f64,
    pub charger_count: u32,
}

impl RateSpec {
    pub fn to_level(self, num_slots: usize) -> RateLevel {
        RateLevel::constant_cost(
            self.rate_kw,
            self.cost_per_kwh,
            self.max_markup,
            self.charger_count,
            num_slots,
        )
    }
}

/// Which slots each user declares acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvailabilityPattern {
    /// Everyone can charge in any slot.
    FullHorizon,
    /// The last `narrow_users` users are restricted to a window of
    /// `window_slots` slots centered in the horizon; the rest keep the full
    /// horizon.
    Split {
        narrow_users: usize,
        window_slots: usize,
    },
}

/// A randomized scenario: everything needed to generate one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub user_count: usize,
    /// Bids are drawn uniformly from this closed range, SEK/kWh.
    pub bid_range: (f64, f64),
    /// (min, max) demand in kWh, identical for every user.
    pub demand_bounds: (f64, f64),
    pub availability_pattern: AvailabilityPattern,
    pub station: StationConfig,
    pub policy: PricingPolicy,
    /// When true, per-slot capacity is derived as the aggregate
    /// charger energy `sum_r M_r * E_r` instead of `station.slot_capacity`.
    #[serde(default = "default_true")]
    pub auto_capacity: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl ScenarioSpec {
    /// Structural checks on the spec itself; instance-level invariants are
    /// re-checked by `validate_instance` after generation.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (bid_lo, bid_hi) = self.bid_range;
        if !(bid_lo <= bid_hi) {
            out.push(format!("bid_range: low > high ({bid_lo} > {bid_hi})"));
        }
        if !(bid_lo > 0.0) {
            out.push(format!("bid_range: low must be > 0, got {bid_lo}"));
        }
        let (q_lo, q_hi) = self.demand_bounds;
        if !(0.0 <= q_lo && q_lo <= q_hi) {
            out.push(format!("demand_bounds: need 0 <= min <= max, got [{q_lo}, {q_hi}]"));
        }
        if let AvailabilityPattern::Split {
            narrow_users,
            window_slots,
        } = self.availability_pattern
        {
            if window_slots > self.station.num_slots {
                out.push(format!(
                    "availability_pattern: window of {window_slots} slots exceeds the {}-slot horizon",
                    self.station.num_slots
                ));
            }
            if narrow_users > self.user_count {
                out.push(format!(
                    "availability_pattern: {narrow_users} narrow users exceed user_count {}",
                    self.user_count
                ));
            }
        }
        out
    }

    /// Station with the capacity rule applied.
    pub fn materialized_station(&self) -> StationConfig {
        let mut station = self.station.clone();
        if self.auto_capacity {
            let aggregate: f64 = (0..station.rates.len())
                .map(|r| station.rates[r].charger_count as f64 * station.energy_per_slot(r))
                .sum();
            station.slot_capacity = vec![aggregate; station.num_slots];
        }
        station
    }

    /// Recomputes the big-M price bound from the current rates and bid
    /// range: `max(alpha * max cost, bid high + max markup) + 1`.
    pub fn refresh_big_m(&mut self) {
        let max_cost = self
            .station
            .rates
            .iter()
            .map(|r| r.max_cost())
            .fold(0.0, f64::max);
        let max_markup = self
            .station
            .rates
            .iter()
            .map(|r| r.max_markup)
            .fold(0.0, f64::max);
        self.policy.price_big_m =
            (self.policy.alpha * max_cost).max(self.bid_range.1 + max_markup) + 1.0;
    }
}

/// Draws the instance a spec describes.
///
/// Reproducibility contract: user `i`'s bid comes from ChaCha8 keyed by
/// `spec.seed` on stream `i`, mapping one raw word to [0, 1) via its top 53
/// bits and rounding the price to six decimals. Identical specs generate
/// identical instances bit for bit.
pub fn generate_instance(spec: &ScenarioSpec) -> ProblemInstance {
    let station = spec.materialized_station();
    let t_count = station.num_slots;
    let (low, high) = spec.bid_range;
    let flexible_users = match spec.availability_pattern {
        AvailabilityPattern::FullHorizon => spec.user_count,
        AvailabilityPattern::Split { narrow_users, .. } => spec.user_count - narrow_users,
    };

    let bids = (0..spec.user_count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let price = round_money(low + (high - low) * unit_draw(&mut rng));
            let acceptable_slots = match spec.availability_pattern {
                AvailabilityPattern::Split { window_slots, .. } if i >= flexible_users => {
                    let start = (t_count - window_slots) / 2;
                    (start..start + window_slots).collect()
                }
                _ => (0..t_count).collect(),
            };
            UserBid {
                user_id: i as u32,
                bid_price: price,
                q_min: spec.demand_bounds.0,
                q_max: spec.demand_bounds.1,
                acceptable_slots,
            }
        })
        .collect();

    ProblemInstance {
        bids,
        station,
        policy: spec.policy,
    }
}

/// Options for one pipeline run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub solver: SolverOptions,
    /// Positional preferences enabling the user-response step.
    pub preferences: Option<Vec<UserPreference>>,
    pub gini_basis: GiniBasis,
}

/// Everything one scenario run produces.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub offer: OperatorOffer,
    pub decisions: Option<Vec<AcceptanceDecision>>,
    pub metrics: ScenarioMetrics,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("instance failed validation with {} violation(s)", .0.len())]
    InvalidInstance(Vec<InstanceViolation>),
    #[error("solver backend error: {0}")]
    Solver(#[from] SolveError),
    #[error("model is infeasible")]
    Infeasible,
    #[error("time limit reached before proving optimality (incumbent: {has_incumbent})")]
    LimitReached { has_incumbent: bool },
    #[error("failed to extract an offer: {0}")]
    Extract(#[from] ExtractError),
    #[error("solved offer failed verification: {0}")]
    Verification(ViolationReport),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

impl From<BuildError> for ScenarioError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::InvalidInstance(v) => ScenarioError::InvalidInstance(v),
        }
    }
}

/// Runs the full pipeline on one instance: build, solve, extract, verify,
/// decide, measure. Verification failure aborts with the report.
pub fn run_scenario(
    backend: &dyn SolverBackend,
    instance: &ProblemInstance,
    options: &RunOptions,
) -> Result<ScenarioOutcome, ScenarioError> {
    let model = build_model(instance)?;
    let solution = backend.solve(&model, &options.solver)?;
    match solution.status() {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(ScenarioError::Infeasible),
        SolveStatus::LimitReached => {
            return Err(ScenarioError::LimitReached {
                has_incumbent: solution.has_assignment(),
            })
        }
    }
    let offer = extract_offer(&model, &solution, instance)?;
    let report = verify_offer(&offer, instance);
    if !report.is_clean() {
        return Err(ScenarioError::Verification(report));
    }
    let decisions = match &options.preferences {
        Some(prefs) => {
            let rates_kw: Vec<f64> = instance.station.rates.iter().map(|r| r.rate_kw).collect();
            Some(decide(&offer, &instance.bids, prefs, &rates_kw)?)
        }
        None => None,
    };
    let metrics = compute_metrics(&offer, instance, decisions.as_deref(), options.gini_basis);
    Ok(ScenarioOutcome {
        offer,
        decisions,
        metrics,
    })
}

/// Generates, validates, and runs one seeded scenario; used by the sweep
/// runner and the CLI `run` command. Preferences are sampled from the
/// derived preference seed when `sample_prefs` is set.
pub fn run_generated(
    backend: &dyn SolverBackend,
    spec: &ScenarioSpec,
    solver: &SolverOptions,
    gini_basis: GiniBasis,
    sample_prefs: bool,
) -> Result<(ProblemInstance, ScenarioOutcome), ScenarioError> {
    let instance = generate_instance(spec);
    let violations = validate_instance(&instance);
    if !violations.is_empty() {
        return Err(ScenarioError::InvalidInstance(violations));
    }
    let preferences = sample_prefs
        .then(|| sample_preferences(spec.user_count, spec.seed ^ PREFERENCE_SEED_SALT));
    let options = RunOptions {
        solver: solver.clone(),
        preferences,
        gini_basis,
    };
    let outcome = run_scenario(backend, &instance, &options)?;
    Ok((instance, outcome))
}
