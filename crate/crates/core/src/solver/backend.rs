//! HiGHS adapter: translates a [`ModelDescription`] into a HiGHS problem and
//! maps the result back.

use highs::{HighsModelStatus, RowProblem, Sense};

use crate::model::{ConstraintSense, ModelDescription, VarKind};
use crate::solver::{SolveError, SolveStatus, SolverBackend, SolverOptions, Solution};

pub struct HighsBackend;

impl SolverBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(
        &self,
        model: &ModelDescription,
        options: &SolverOptions,
    ) -> Result<Solution, SolveError> {
        if !(options.time_limit_secs > 0.0) {
            return Err(SolveError::BadTimeLimit(options.time_limit_secs));
        }

        let mut problem = RowProblem::default();
        let mut objective = vec![0.0; model.num_variables()];
        for &(id, coeff) in model.objective() {
            objective[id.index()] += coeff;
        }
        let columns: Vec<highs::Col> = model
            .variables()
            .iter()
            .zip(&objective)
            .map(|(var, &obj)| match var.kind {
                VarKind::Binary => problem.add_integer_column(obj, var.lower..=var.upper),
                VarKind::Continuous => {
                    problem.add_column_with_integrality(obj, var.lower..=var.upper, false)
                }
            })
            .collect();
        for row in model.constraints() {
            let factors: Vec<(highs::Col, f64)> = row
                .terms
                .iter()
                .map(|&(id, coeff)| (columns[id.index()], coeff))
                .collect();
            match row.sense {
                ConstraintSense::LessEq => problem.add_row(..=row.rhs, factors),
                ConstraintSense::GreaterEq => problem.add_row(row.rhs.., factors),
                ConstraintSense::Equal => problem.add_row(row.rhs..=row.rhs, factors),
            }
        }

        let mut highs_model = problem.optimise(Sense::Maximise);
        highs_model.make_quiet();
        highs_model.set_option("time_limit", options.time_limit_secs);
        highs_model.set_option("threads", options.threads as i32);
        if options.threads <= 1 {
            highs_model.set_option("parallel", "off");
        }
        highs_model.set_option("random_seed", options.random_seed as i32);
        highs_model.set_option("mip_rel_gap", 0.0);
        highs_model.set_option("mip_abs_gap", 0.0);
        highs_model.set_option("primal_feasibility_tolerance", options.feasibility_tolerance);
        highs_model.set_option("mip_feasibility_tolerance", options.feasibility_tolerance);

        let solved = highs_model
            .try_solve()
            .map_err(|status| SolveError::Backend(format!("solve returned {status:?}")))?;

        match solved.status() {
            HighsModelStatus::Optimal => {
                let values = solved.get_solution().columns().to_vec();
                let objective = model.objective_value(&values);
                Ok(Solution::new(SolveStatus::Optimal, objective, values))
            }
            HighsModelStatus::Infeasible => Ok(Solution::infeasible()),
            HighsModelStatus::ReachedTimeLimit => {
                // A finite reported gap means an incumbent exists.
                if solved.mip_gap().is_finite() {
                    let values = solved.get_solution().columns().to_vec();
                    let objective = model.objective_value(&values);
                    Ok(Solution::new(SolveStatus::LimitReached, objective, values))
                } else {
                    Ok(Solution::new(SolveStatus::LimitReached, f64::NAN, Vec::new()))
                }
            }
            other => Err(SolveError::Backend(format!(
                "unexpected model status {other:?}"
            ))),
        }
    }
}
