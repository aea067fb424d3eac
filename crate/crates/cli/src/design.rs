use std::path::Path;

use lighttrap_core::{
    design_candidates, design_gaussian_trap, feasible_target_region, verify_design, DesignCandidate,
    DesignProblem, DesignSolution, Error, SigmaRegion, VerificationReport,
};
use serde::Serialize;

use crate::config::{load, to_json, write_all};
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum DesignReport {
    Feasible {
        problem: DesignProblem,
        solution: DesignSolution,
        verification: VerificationReport,
    },
    Infeasible {
        problem: DesignProblem,
        reason: String,
        candidates: Vec<DesignCandidate>,
        /// Band and reachable annuli at unit width; every other width is a
        /// rescaling of it.
        unit_region: SigmaRegion,
    },
}

pub const DESIGN_JSON: &str = "design.json";

pub fn run(config: &Path, out: &Path) -> CliResult<()> {
    let problem: DesignProblem = load(config)?;
    problem.validate()?;
    let path = out.join(DESIGN_JSON);
    match design_gaussian_trap(&problem) {
        Ok(solution) => {
            let verification = verify_design(&solution)?;
            write_all(&[(
                path,
                to_json(&DesignReport::Feasible {
                    problem,
                    solution,
                    verification,
                }),
            )])?;
            println!(
                "design: sigma = {}, b = {}, max deviation {}",
                solution.field.sigma(),
                solution.b,
                verification
                    .max_deviation()
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "n/a".into())
            );
            Ok(())
        }
        Err(Error::Infeasible(reason)) => {
            let candidates = design_candidates(&problem)?;
            let (n_a, n_c) = problem.contrast();
            let unit_region = feasible_target_region(n_a, n_c, &[1.0]).remove(0);
            write_all(&[(
                path,
                to_json(&DesignReport::Infeasible {
                    problem,
                    reason: reason.clone(),
                    candidates,
                    unit_region,
                }),
            )])?;
            Err(CliError::Infeasible(reason))
        }
        Err(e) => Err(e.into()),
    }
}
