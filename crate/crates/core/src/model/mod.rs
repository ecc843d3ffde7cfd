//! Solver-agnostic description of the operator's pricing-and-scheduling
//! MILP, plus the builder that produces it from an instance, offer
//! extraction from a solved assignment, and an independent offer verifier.

mod build;
mod offer;
mod verify;

pub use build::{build_model, BuildError};
pub use offer::{extract_offer, ExtractError, OperatorOffer, SlotAssignment, UserOutcome};
pub use verify::{verify_offer, Violation, ViolationReport, VERIFY_TOLERANCE};

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

/// Handle to a declared variable. Only [`ModelDescription::add_variable`]
/// creates these, so every coefficient provably references a declared
/// variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    LessEq,
    Equal,
    GreaterEq,
}

/// Which row family of the operator model a constraint belongs to.
/// Tags are stable identifiers used in violation reports and LP exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintTag {
    /// One rate is selected iff the user is accepted.
    Eq2,
    /// Slots can only be assigned inside the user's declared window.
    Eq3,
    /// At most one charging start and one end per user.
    Eq4,
    /// Start detection against the previous slot.
    Eq5,
    /// End detection against the next slot.
    Eq6,
    /// Delivered energy within the user's demand bounds.
    Eq7,
    /// System-wide per-slot energy capacity.
    Eq8,
    /// Charger count limit per slot and rate.
    Eq9,
    /// Per-slot energy follows from the assigned rate.
    Eq10,
    /// Slot assignments only at the user's selected rate.
    Eq11,
    /// Every assigned slot is either at-bid or countered.
    Eq12,
    /// Counter-price cap: bid plus the rate's markup allowance.
    Eq12b,
    /// Final price composition from bid and counter components.
    Eq13,
    /// Minimum profit margin over cost.
    Eq14,
    /// Price cap as a multiple of cost.
    Eq15,
    /// Reference price dominates every at-bid price in its cell.
    Eq16,
    /// Counter-prices may not undercut the reference price.
    Eq17,
    /// Bid-preservation share over all assigned cells.
    Eq18,
    /// Structural rows not tied to a numbered family.
    Aux,
}

impl ConstraintTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintTag::Eq2 => "eq2",
            ConstraintTag::Eq3 => "eq3",
            ConstraintTag::Eq4 => "eq4",
            ConstraintTag::Eq5 => "eq5",
            ConstraintTag::Eq6 => "eq6",
            ConstraintTag::Eq7 => "eq7",
            ConstraintTag::Eq8 => "eq8",
            ConstraintTag::Eq9 => "eq9",
            ConstraintTag::Eq10 => "eq10",
            ConstraintTag::Eq11 => "eq11",
            ConstraintTag::Eq12 => "eq12",
            ConstraintTag::Eq12b => "eq12b",
            ConstraintTag::Eq13 => "eq13",
            ConstraintTag::Eq14 => "eq14",
            ConstraintTag::Eq15 => "eq15",
            ConstraintTag::Eq16 => "eq16",
            ConstraintTag::Eq17 => "eq17",
            ConstraintTag::Eq18 => "eq18",
            ConstraintTag::Aux => "aux",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One linear row: `sum(coeff * var) sense rhs`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
    pub tag: ConstraintTag,
}

/// A complete mixed-integer linear program: variables with bounds and
/// integrality, tagged linear constraints, and a maximization objective.
#[derive(Debug, Clone, Default)]
pub struct ModelDescription {
    variables: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    objective: Vec<(VarId, f64)>,
    name_index: HashMap<String, VarId>,
}

impl ModelDescription {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable; panics on a duplicate name (a builder bug, not
    /// an input condition).
    pub fn add_variable(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let id = VarId(self.variables.len());
        let previous = self.name_index.insert(name.clone(), id);
        assert!(previous.is_none(), "duplicate variable name {name}");
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        id
    }

    pub fn add_constraint(
        &mut self,
        name: String,
        tag: ConstraintTag,
        terms: Vec<(VarId, f64)>,
        sense: ConstraintSense,
        rhs: f64,
    ) {
        self.constraints.push(LinearConstraint {
            name,
            terms,
            sense,
            rhs,
            tag,
        });
    }

    pub fn add_objective_term(&mut self, var: VarId, coeff: f64) {
        if coeff != 0.0 {
            self.objective.push((var, coeff));
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Objective coefficients (maximization).
    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.name_index.get(name).copied()
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binary(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn num_continuous(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Continuous)
            .count()
    }

    /// Objective value of an assignment given as one value per variable.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|&(id, c)| c * values[id.0])
            .sum()
    }

    /// Writes the model in LP text format, for debugging with external
    /// tools.
    pub fn write_lp(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "Maximize")?;
        write!(w, " obj:")?;
        write_terms(w, self, &self.objective)?;
        writeln!(w)?;
        writeln!(w, "Subject To")?;
        for row in &self.constraints {
            write!(w, " {}:", row.name)?;
            write_terms(w, self, &row.terms)?;
            let sense = match row.sense {
                ConstraintSense::LessEq => "<=",
                ConstraintSense::Equal => "=",
                ConstraintSense::GreaterEq => ">=",
            };
            writeln!(w, " {} {}", sense, row.rhs)?;
        }
        writeln!(w, "Bounds")?;
        for v in &self.variables {
            if v.kind == VarKind::Binary {
                continue;
            }
            if v.upper.is_finite() {
                writeln!(w, " {} <= {} <= {}", v.lower, v.name, v.upper)?;
            } else {
                writeln!(w, " {} >= {}", v.name, v.lower)?;
            }
        }
        writeln!(w, "Binaries")?;
        let mut on_line = 0;
        for v in &self.variables {
            if v.kind != VarKind::Binary {
                continue;
            }
            write!(w, " {}", v.name)?;
            on_line += 1;
            if on_line == 8 {
                writeln!(w)?;
                on_line = 0;
            }
        }
        if on_line > 0 {
            writeln!(w)?;
        }
        writeln!(w, "End")
    }

    pub fn to_lp_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_lp(&mut buf).expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("LP text is ASCII")
    }
}

fn write_terms(w: &mut impl Write, model: &ModelDescription, terms: &[(VarId, f64)]) -> io::Result<()> {
    for (k, &(id, coeff)) in terms.iter().enumerate() {
        let name = model.var_name(id);
        if k == 0 {
            write!(w, " {coeff} {name}")?;
        } else if coeff < 0.0 {
            write!(w, " - {} {name}", -coeff)?;
        } else {
            write!(w, " + {coeff} {name}")?;
        }
        if (k + 1) % 8 == 0 && k + 1 < terms.len() {
            write!(w, "\n  ")?;
        }
    }
    Ok(())
}
