//! Reduced-scale self-test of the integrator, fields and orbit analysis.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::path::Path;

use lighttrap_core::{
    design_gaussian_trap, eikonal_rhs, gradient_fd_check, integrate_with_rhs, launch_tangential,
    make_bump_perturbed, make_gaussian, orbit_summary, trapped_band, turning_radii, verify_design,
    AzimuthalWindow, BumpPerturbation, DesignProblem, GaussianRadialField, IndexField, IntegrateOptions,
    RayDerivative, RayState, SwitchableGaussianField, Trajectory,
};
use serde::Serialize;

use crate::config::{to_json, write_all};
use crate::error::{CliError, CliResult};

pub const CHECK_REPORT: &str = "check_report.json";

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Rhs = fn(&RayState, &IndexField) -> lighttrap_core::Result<RayDerivative>;

/// Ray equations with the sign of `t''` flipped, for exercising the
/// null-residual suite.
fn corrupted_rhs(s: &RayState, f: &IndexField) -> lighttrap_core::Result<RayDerivative> {
    let d = eikonal_rhs(s, f)?;
    Ok(RayDerivative { ddt: -d.ddt, ..d })
}

fn reference() -> IndexField {
    make_gaussian(3.8, 1.0, 1.0).expect("reference profile")
}

fn mid_band_launch(field: &IndexField) -> RayState {
    let (lo, hi) = trapped_band(field).expect("reference trap");
    let (r0, _) = turning_radii(field, 0.5 * (lo + hi)).expect("mid-band roots");
    launch_tangential(field, r0, 1.0).expect("launch")
}

fn run_ray(rhs: Rhs, s: &RayState, f: &IndexField, max_tau: f64) -> Result<Trajectory, String> {
    let opts = IntegrateOptions::for_launch(f, s.r).with_max_tau(max_tau);
    integrate_with_rhs(s, f, &opts, rhs).map_err(|e| e.to_string())
}

fn suite(name: &'static str, outcome: Result<String, String>) -> SuiteResult {
    match outcome {
        Ok(detail) => SuiteResult {
            suite: name,
            passed: true,
            detail,
        },
        Err(detail) => SuiteResult {
            suite: name,
            passed: false,
            detail,
        },
    }
}

fn gradients() -> Result<String, String> {
    let base = reference();
    let fields = [
        base.clone(),
        make_gaussian(1.0, 0.0, 1.0).map_err(|e| e.to_string())?,
        make_bump_perturbed(
            &base,
            BumpPerturbation {
                delta_n: 0.1,
                r_p: 1.0,
                s_p: 0.3,
                azimuth: Some(AzimuthalWindow {
                    phi_p: 0.0,
                    width: 0.5,
                }),
            },
        )
        .map_err(|e| e.to_string())?,
        IndexField::Switchable(
            SwitchableGaussianField::new(GaussianRadialField::new(3.8, 1.0, 1.0).unwrap(), 2.0, 3.0)
                .map_err(|e| e.to_string())?,
        ),
    ];
    let mut worst: f64 = 0.0;
    for f in &fields {
        for p in f.sample_grid() {
            worst = worst.max(gradient_fd_check(f, p, 1e-5).map_err(|e| e.to_string())?);
        }
    }
    if worst <= 1e-6 {
        Ok(format!("max relative error {worst:.3e}"))
    } else {
        Err(format!("max relative error {worst:.3e} exceeds 1e-6"))
    }
}

fn null_residual(rhs: Rhs) -> Result<String, String> {
    let f = reference();
    let trapped = mid_band_launch(&f);
    let escaping = launch_tangential(&f, 0.7, 1.0).map_err(|e| e.to_string())?;
    let plunging = RayState {
        dr: -1.0,
        dphi: 0.0,
        ..trapped
    };
    let switchable = IndexField::Switchable(
        SwitchableGaussianField::new(GaussianRadialField::new(3.8, 1.0, 1.0).unwrap(), 20.0, 5.0)
            .map_err(|e| e.to_string())?,
    );
    let cases = [
        (&f, trapped),
        (&f, escaping),
        (&f, plunging),
        (&switchable, trapped),
    ];
    let mut worst: f64 = 0.0;
    for (field, s) in cases {
        let traj = run_ray(rhs, &s, field, 120.0)?;
        worst = worst.max(traj.max_relative_null_residual());
    }
    if worst <= 1e-8 {
        Ok(format!("max relative null residual {worst:.3e}"))
    } else {
        Err(format!("max relative null residual {worst:.3e} exceeds 1e-8"))
    }
}

fn constants(rhs: Rhs) -> Result<String, String> {
    let f = reference();
    let traj = run_ray(rhs, &mid_band_launch(&f), &f, 120.0)?;
    let c0 = traj.first().conserved;
    let drift = traj.samples.iter().fold(0.0f64, |m, p| {
        m.max(((p.conserved.l - c0.l) / c0.l).abs())
            .max(((p.conserved.c - c0.c) / c0.c).abs())
    });
    if drift <= 1e-8 {
        Ok(format!("max relative drift of L and C {drift:.3e}"))
    } else {
        Err(format!("relative drift {drift:.3e} exceeds 1e-8"))
    }
}

fn oracle(rhs: Rhs) -> Result<String, String> {
    let f = reference();
    let (lo, hi) = trapped_band(&f).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for u in [0.2, 0.4, 0.6, 0.8] {
        let (a, z) = turning_radii(&f, lo + u * (hi - lo)).map_err(|e| e.to_string())?;
        let s = launch_tangential(&f, a, 1.0).map_err(|e| e.to_string())?;
        let sum = orbit_summary(&run_ray(rhs, &s, &f, 60.0)?).map_err(|e| e.to_string())?;
        worst = worst
            .max((sum.r_min_obs - a).abs() / a)
            .max((sum.r_max_obs - z).abs() / z);
    }
    if worst <= 1e-5 {
        Ok(format!("max relative turning-radius error {worst:.3e}"))
    } else {
        Err(format!("turning-radius error {worst:.3e} exceeds 1e-5"))
    }
}

fn circular(rhs: Rhs) -> Result<String, String> {
    let f = make_gaussian(1.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let s = launch_tangential(&f, FRAC_1_SQRT_2, 1.0).map_err(|e| e.to_string())?;
    // The angular rate is constant on the circle; a short run sizes the
    // horizon for ten revolutions.
    let mut traj = run_ray(rhs, &s, &f, 40.0)?;
    let per_tau = traj.last().state.phi / traj.last().state.tau;
    if per_tau > 0.0 {
        traj = run_ray(rhs, &s, &f, 10.0 * TAU / per_tau)?;
    }
    let dev = traj.samples.iter().fold(0.0f64, |m, p| {
        m.max((p.state.r - FRAC_1_SQRT_2).abs() / FRAC_1_SQRT_2)
    });
    let turns = traj.last().state.phi / TAU;
    if dev <= 1e-5 && turns >= 9.999 {
        Ok(format!(
            "max relative radius deviation {dev:.3e} over {turns:.2} revolutions"
        ))
    } else {
        Err(format!("radius deviation {dev:.3e} over {turns:.2} revolutions"))
    }
}

fn inverse_design() -> Result<String, String> {
    let sol = design_gaussian_trap(&DesignProblem::new(0.85, 1.2)).map_err(|e| e.to_string())?;
    let rep = verify_design(&sol).map_err(|e| e.to_string())?;
    match rep.max_deviation() {
        Some(d) if d <= 1e-3 => Ok(format!("round-trip deviation {d:.3e}")),
        Some(d) => Err(format!("round-trip deviation {d:.3e} exceeds 1e-3")),
        None => Err(format!(
            "designed orbit not bound: {}",
            rep.classification.as_str()
        )),
    }
}

pub fn suites(inject_fault: bool) -> Vec<SuiteResult> {
    let rhs: Rhs = if inject_fault { corrupted_rhs } else { eikonal_rhs };
    vec![
        suite("gradients", gradients()),
        suite("null residual", null_residual(rhs)),
        suite("constants of motion", constants(rhs)),
        suite("turning-point oracle", oracle(rhs)),
        suite("circular orbit", circular(rhs)),
        suite("inverse design", inverse_design()),
    ]
}

pub fn run(out: &Path, inject_fault: bool) -> CliResult<()> {
    let results = suites(inject_fault);
    write_all(&[(out.join(CHECK_REPORT), to_json(&results))])?;
    for r in &results {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.suite,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{failed} self-test suite(s) failed")))
    }
}
