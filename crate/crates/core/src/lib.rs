//! Eikonal ray tracing in gradient-index media and the orbit theory of
//! optical light traps.
//!
//! The crate integrates the relativistic ray equations for an arbitrary
//! refractive-index field `n(r, φ, z, t)`, analyses bound orbits of radial
//! static profiles through the effective radius function `h(r) = n(r)·r`,
//! solves the inverse problem of choosing a Gaussian profile for a target
//! annulus, and measures how index perturbations deform a trap.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod integrator;
pub mod orbit;
pub mod perturb;
pub mod roots;

pub use design::{
    design_candidates, design_gaussian_trap, feasible_target_region, launch_with_invariant, verify_design,
    verify_orbit, DesignCandidate, DesignProblem, DesignSolution, FeasibilityReport, SigmaRegion,
    VerificationReport,
};
pub use dynamics::{
    conserved_quantities, eikonal_rhs, launch_tangential, normalize_null, ConservedSet, RayDerivative,
    RayState,
};
pub use error::{Error, Result};
pub use field::{
    field_eval, gradient_fd_check, make_bump_perturbed, make_gaussian, AzimuthalWindow, BumpField,
    BumpPerturbation, ConstantField, FieldSample, GaussianRadialField, IndexField, SwitchableGaussianField,
};
pub use integrator::{
    integrate, integrate_periods, integrate_with_rhs, IntegrateOptions, Termination, Trajectory,
    TrajectorySample, TurningEvent, TurningKind,
};
pub use orbit::{
    allowed_region, circular_orbit_radius, classify, critical_radii, h_profile, orbit_summary, trapped_band,
    turning_radii, AllowedRegion, Classification, CriticalRadii, OrbitSummary,
};
pub use perturb::{
    orbit_deviation, threshold_scan, DeviationOptions, DeviationReport, ScanEntry, ScanResult, ScanShape,
    SCAN_CSV_HEADER,
};
