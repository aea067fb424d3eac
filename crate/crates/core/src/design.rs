//! Inverse design of Gaussian traps for a prescribed annulus.
//!
//! The target turning radii fix two numbers while the profile has three
//! (`n_A`, `n_C`, `σ`) plus the impact invariant `b`. The contrast is pinned
//! to the material limits (`n_A = n_max`, `n_C = n_floor` unless the caller
//! fixes a cladding index), which leaves `σ` as the single unknown of
//! `h(r_min) = h(r_max)`; `b` then follows as `h(r_min)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{conserved_quantities, normalize_null, RayState};
use crate::error::{Error, Result};
use crate::field::{GaussianRadialField, IndexField, DEFAULT_N_FLOOR, DEFAULT_N_MAX_MATERIAL};
use crate::integrator::{integrate_periods, IntegrateOptions, Termination, TurningKind};
use crate::orbit::{
    classify, critical_radii, default_search_radius, orbit_summary, trapped_band, turning_radii,
    Classification,
};
use crate::roots::{bisect, log_grid};

/// Bracketing grid for the width solve.
const SIGMA_GRID_POINTS: usize = 2048;
/// Absolute tolerance on `σ`.
const SIGMA_TOL: f64 = 1e-12;
/// Minimum distance of `b` from either band edge.
pub const MIN_BAND_MARGIN: f64 = 1e-9;

fn default_n_max() -> f64 {
    DEFAULT_N_MAX_MATERIAL
}

fn default_n_floor() -> f64 {
    DEFAULT_N_FLOOR
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignProblem {
    pub r_min_target: f64,
    pub r_max_target: f64,
    #[serde(default = "default_n_max")]
    pub n_max_material: f64,
    #[serde(default = "default_n_floor")]
    pub n_floor: f64,
    /// Fixed cladding index; `None` pins `n_C` to `n_floor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<f64>,
}

impl DesignProblem {
    pub fn new(r_min_target: f64, r_max_target: f64) -> Self {
        DesignProblem {
            r_min_target,
            r_max_target,
            n_max_material: DEFAULT_N_MAX_MATERIAL,
            n_floor: DEFAULT_N_FLOOR,
            n_c: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.r_min_target,
            self.r_max_target,
            self.n_max_material,
            self.n_floor,
        ];
        if !finite.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("design parameters must be finite".into()));
        }
        if !(self.r_min_target > 0.0 && self.r_min_target < self.r_max_target) {
            return Err(Error::Domain(format!(
                "targets need 0 < r_min_target < r_max_target, got {} and {}",
                self.r_min_target, self.r_max_target
            )));
        }
        if !(self.n_floor >= 0.0 && self.n_max_material > self.n_floor) {
            return Err(Error::Domain(format!(
                "need 0 <= n_floor < n_max_material, got {} and {}",
                self.n_floor, self.n_max_material
            )));
        }
        if let Some(n_c) = self.n_c {
            if !(n_c >= self.n_floor && n_c < self.n_max_material) {
                return Err(Error::Domain(format!(
                    "n_c = {n_c} must lie in [n_floor, n_max_material)"
                )));
            }
        }
        Ok(())
    }

    /// `(n_A, n_C)` of every candidate profile.
    pub fn contrast(&self) -> (f64, f64) {
        (self.n_max_material, self.n_c.unwrap_or(self.n_floor))
    }
}

/// Band and margins of a designed orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub b_lo: f64,
    pub b_hi: f64,
    pub margin_lo: f64,
    pub margin_hi: f64,
    pub r_m: f64,
    pub r_v: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub field: GaussianRadialField,
    pub b: f64,
    pub r_min_target: f64,
    pub r_max_target: f64,
    pub feasibility: FeasibilityReport,
}

/// One root of the width equation and why it was kept or rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub sigma: f64,
    pub b: f64,
    pub band: Option<(f64, f64)>,
    pub rejection: Option<String>,
}

fn width_equation(n_a: f64, n_c: f64, r1: f64, r2: f64) -> impl Fn(f64) -> f64 {
    move |sigma: f64| {
        let h = |r: f64| r * (n_c + (n_a - n_c) * (-(r * r) / (sigma * sigma)).exp());
        h(r1) - h(r2)
    }
}

/// Every root of `h_σ(r_min) = h_σ(r_max)` in `[1e-3·r_max, 1e3·r_max]`
/// with the outcome of its feasibility checks.
pub fn design_candidates(problem: &DesignProblem) -> Result<Vec<DesignCandidate>> {
    problem.validate()?;
    let (n_a, n_c) = problem.contrast();
    let (r1, r2) = (problem.r_min_target, problem.r_max_target);
    let f = width_equation(n_a, n_c, r1, r2);
    let grid = log_grid(1e-3 * r2, 1e3 * r2, SIGMA_GRID_POINTS);
    let values: Vec<f64> = grid.iter().map(|&s| f(s)).collect();

    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        let Some(sigma) = bisect(&f, grid[i], grid[i + 1], SIGMA_TOL) else {
            continue;
        };
        out.push(assess(problem, sigma));
    }
    Ok(out)
}

fn assess(problem: &DesignProblem, sigma: f64) -> DesignCandidate {
    let (n_a, n_c) = problem.contrast();
    let (r1, r2) = (problem.r_min_target, problem.r_max_target);
    let reject = |b: f64, band: Option<(f64, f64)>, why: String| DesignCandidate {
        sigma,
        b,
        band,
        rejection: Some(why),
    };
    let gauss = match GaussianRadialField::with_material_bound(n_a, n_c, sigma, problem.n_max_material) {
        Ok(g) => g,
        Err(e) => return reject(f64::NAN, None, e.to_string()),
    };
    let field = IndexField::Gaussian(gauss);
    let (n1, _) = field.radial(r1);
    let b = n1 * r1;
    let crit = match critical_radii(&field, default_search_radius(&field)) {
        Ok(c) => c,
        Err(e) => return reject(b, None, e.to_string()),
    };
    let band = match trapped_band(&field) {
        Ok(band) => band,
        Err(e) => return reject(b, None, e.to_string()),
    };
    if !(r1 < crit.r_m && crit.r_m < r2) {
        return reject(
            b,
            Some(band),
            format!("targets do not bracket the trap maximum r_m = {}", crit.r_m),
        );
    }
    if let Some(r_v) = crit.r_v {
        if r2 >= r_v {
            return reject(
                b,
                Some(band),
                format!("r_max_target lies beyond the valley r_v = {r_v}"),
            );
        }
    }
    if !(b - band.0 > MIN_BAND_MARGIN && band.1 - b > MIN_BAND_MARGIN) {
        return reject(
            b,
            Some(band),
            format!("b = {b} is not strictly inside the band ({}, {})", band.0, band.1),
        );
    }
    DesignCandidate {
        sigma,
        b,
        band: Some(band),
        rejection: None,
    }
}

/// Solves the inverse problem; the first feasible root in increasing `σ`
/// wins.
pub fn design_gaussian_trap(problem: &DesignProblem) -> Result<DesignSolution> {
    let candidates = design_candidates(problem)?;
    let Some(best) = candidates.iter().find(|c| c.rejection.is_none()) else {
        let detail = if candidates.is_empty() {
            format!(
                "no sigma in [{}, {}] satisfies h(r_min_target) = h(r_max_target)",
                1e-3 * problem.r_max_target,
                1e3 * problem.r_max_target
            )
        } else {
            candidates
                .iter()
                .map(|c| {
                    format!(
                        "sigma = {}: {}",
                        c.sigma,
                        c.rejection.as_deref().unwrap_or("accepted")
                    )
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        return Err(Error::Infeasible(detail));
    };
    let (n_a, n_c) = problem.contrast();
    let gauss = GaussianRadialField::with_material_bound(n_a, n_c, best.sigma, problem.n_max_material)?;
    let field = IndexField::Gaussian(gauss);
    let crit = critical_radii(&field, default_search_radius(&field))?;
    let (b_lo, b_hi) = best.band.expect("accepted candidates carry a band");
    Ok(DesignSolution {
        field: gauss,
        b: best.b,
        r_min_target: problem.r_min_target,
        r_max_target: problem.r_max_target,
        feasibility: FeasibilityReport {
            b_lo,
            b_hi,
            margin_lo: best.b - b_lo,
            margin_hi: b_hi - best.b,
            r_m: crit.r_m,
            r_v: crit.r_v,
        },
    })
}

/// Forward check of a design: predicted class and observed turning radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub classification: Classification,
    pub termination: Option<Termination>,
    pub radial_periods: usize,
    pub r_min_obs: Option<f64>,
    pub r_max_obs: Option<f64>,
    pub w_o: Option<f64>,
    pub rel_dev_r_min: Option<f64>,
    pub rel_dev_r_max: Option<f64>,
}

impl VerificationReport {
    pub fn max_deviation(&self) -> Option<f64> {
        Some(self.rel_dev_r_min?.max(self.rel_dev_r_max?))
    }
}

/// Radial periods integrated by [`verify_design`].
pub const VERIFY_PERIODS: usize = 10;

pub fn verify_design(solution: &DesignSolution) -> Result<VerificationReport> {
    verify_orbit(
        &IndexField::Gaussian(solution.field),
        solution.b,
        solution.r_min_target,
        solution.r_max_target,
    )
}

/// Launches at `r_min_target` with impact invariant `b` on any radial static
/// field and integrates at least [`VERIFY_PERIODS`] radial periods.
pub fn verify_orbit(
    field: &IndexField,
    b: f64,
    r_min_target: f64,
    r_max_target: f64,
) -> Result<VerificationReport> {
    let classification = classify(field, b, r_min_target)?;
    let mut report = VerificationReport {
        classification,
        termination: None,
        radial_periods: 0,
        r_min_obs: None,
        r_max_obs: None,
        w_o: None,
        rel_dev_r_min: None,
        rel_dev_r_max: None,
    };
    if !matches!(classification, Classification::Trapped | Classification::Circular) {
        return Ok(report);
    }
    let launch = launch_with_invariant(field, r_min_target, b)?;
    let mut opts = IntegrateOptions::for_launch(field, r_min_target).with_sample_interval(1.0);
    opts.max_tau = initial_horizon(field, r_min_target, r_max_target);
    let traj = integrate_periods(&launch, field, &opts, VERIFY_PERIODS)?;
    if traj.termination == Termination::StepFailure {
        return Err(Error::StepFailure(traj.failure.unwrap_or_default()));
    }
    report.termination = Some(traj.termination);
    report.radial_periods = traj
        .events
        .iter()
        .filter(|e| e.kind == TurningKind::Min)
        .count()
        .saturating_sub(1);
    if let Ok(sum) = orbit_summary(&traj) {
        report.classification = sum.classification;
        report.r_min_obs = Some(sum.r_min_obs);
        report.r_max_obs = Some(sum.r_max_obs);
        report.w_o = Some(sum.w_o);
        report.rel_dev_r_min = Some((sum.r_min_obs - r_min_target).abs() / r_min_target);
        report.rel_dev_r_max = Some((sum.r_max_obs - r_max_target).abs() / r_max_target);
    } else {
        report.classification = match traj.termination {
            Termination::Escaped => Classification::Escaping,
            Termination::PlungedBelowMinR => Classification::Plunging,
            _ => report.classification,
        };
    }
    Ok(report)
}

fn initial_horizon(field: &IndexField, r1: f64, r2: f64) -> f64 {
    // A radial period is a few light-crossing times of the annulus.
    let (n, _) = field.radial(r1);
    (VERIFY_PERIODS as f64 + 2.0) * 4.0 * n * n * (r2 + r1)
}

/// State at radius `r0`, `φ = 0`, moving outward with `|L/C| = b`, in the
/// gauge `t' = 1`.
pub fn launch_with_invariant(field: &IndexField, r0: f64, b: f64) -> Result<RayState> {
    let (n, _) = field.radial(r0);
    let ratio = (b / (n * r0)).clamp(-1.0, 1.0);
    let raw = RayState {
        tau: 0.0,
        r: r0,
        phi: 0.0,
        z: 0.0,
        t: 0.0,
        dr: (1.0 - ratio * ratio).max(0.0).sqrt(),
        dphi: ratio / r0,
        dz: 0.0,
        dt: 1.0,
    };
    let s = normalize_null(&raw, field)?;
    let s = s.rescaled(1.0 / s.dt);
    debug_assert!(conserved_quantities(&s, field).is_ok());
    Ok(s)
}

/// Achievable annuli for one width `σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRegion {
    pub sigma: f64,
    pub field: Option<GaussianRadialField>,
    pub band: Option<(f64, f64)>,
    pub r_m: Option<f64>,
    /// Smallest reachable `r_min` (at `b → b_lo`).
    pub r_min_extreme: Option<f64>,
    /// Largest reachable `r_max`; `None` when unbounded.
    pub r_max_extreme: Option<f64>,
    /// `(r_min, r_max)` pairs sampled across the band.
    pub pairs: Vec<(f64, f64)>,
}

impl SigmaRegion {
    pub fn is_empty(&self) -> bool {
        self.band.is_none()
    }

    /// True when `(r_min, r_max)` is an achievable annulus for this width
    /// within `rel_tol` on `r_max`.
    pub fn contains(&self, r_min: f64, r_max: f64, rel_tol: f64) -> bool {
        let (Some(g), Some(r_m), Some(lo)) = (self.field, self.r_m, self.r_min_extreme) else {
            return false;
        };
        if !(r_min > lo && r_min < r_m) {
            return false;
        }
        let field = IndexField::Gaussian(g);
        let b = field.radial(r_min).0 * r_min;
        match turning_radii(&field, b) {
            Ok((_, partner)) => (partner - r_max).abs() <= rel_tol * r_max,
            Err(_) => false,
        }
    }
}

const REGION_SAMPLES: usize = 33;

/// Charts the annuli reachable under the material limits for each `σ`.
pub fn feasible_target_region(n_max_material: f64, n_floor: f64, sigma_grid: &[f64]) -> Vec<SigmaRegion> {
    sigma_grid
        .iter()
        .map(|&sigma| region_for_sigma(n_max_material, n_floor, sigma))
        .collect()
}

fn region_for_sigma(n_max: f64, n_floor: f64, sigma: f64) -> SigmaRegion {
    let empty = SigmaRegion {
        sigma,
        field: None,
        band: None,
        r_m: None,
        r_min_extreme: None,
        r_max_extreme: None,
        pairs: Vec::new(),
    };
    let Ok(g) = GaussianRadialField::with_material_bound(n_max, n_floor, sigma, n_max) else {
        return empty;
    };
    let field = IndexField::Gaussian(g);
    let Ok(crit) = critical_radii(&field, default_search_radius(&field)) else {
        return SigmaRegion {
            field: Some(g),
            ..empty
        };
    };
    let Ok((b_lo, b_hi)) = trapped_band(&field) else {
        return SigmaRegion {
            field: Some(g),
            ..empty
        };
    };
    let r_min_extreme = if b_lo > 0.0 {
        turning_radii(&field, b_lo * (1.0 + 1e-12)).map(|(a, _)| a).ok()
    } else {
        Some(0.0)
    };
    let pairs = (1..REGION_SAMPLES)
        .filter_map(|i| {
            let b = b_lo + (b_hi - b_lo) * i as f64 / REGION_SAMPLES as f64;
            turning_radii(&field, b).ok()
        })
        .collect();
    SigmaRegion {
        sigma,
        field: Some(g),
        band: Some((b_lo, b_hi)),
        r_m: Some(crit.r_m),
        r_min_extreme,
        r_max_extreme: crit.r_v,
        pairs,
    }
}
