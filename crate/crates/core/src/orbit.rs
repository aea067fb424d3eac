//! Orbit theory for radial static fields.
//!
//! With `L = r²φ'` and `C = t'/n²` conserved, the null constraint reduces to
//! `r'² = (C²/r²)·(h(r)² − b²)` where `h(r) = n(r)·r` and `b = L/C`. A ray
//! can only occupy radii with `h(r) >= b`; a local maximum of `h` at `r_m`
//! therefore confines every ray with `h(r_v) < b < h(r_m)` launched in the
//! annulus around it, `r_v` being the valley of `h` beyond `r_m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::IndexField;
use crate::integrator::{default_escape_radius, Termination, Trajectory, TurningKind};
use crate::roots::{bisect, bisect_predicate, log_grid};

/// Points of the log-spaced bracketing grid for critical radii.
pub const CRITICAL_GRID_POINTS: usize = 512;

/// Relative half-width of `w_o` below which an orbit counts as circular.
pub const CIRCULAR_WIDTH_TOL: f64 = 1e-5;

fn require_radial_static(field: &IndexField) -> Result<()> {
    if field.is_radial_static() {
        Ok(())
    } else {
        Err(Error::NotRadialStatic)
    }
}

#[inline]
fn h(field: &IndexField, r: f64) -> f64 {
    field.radial(r).0 * r
}

#[inline]
fn dh_dr(field: &IndexField, r: f64) -> f64 {
    let (n, dn) = field.radial(r);
    n + r * dn
}

fn root_tol(field: &IndexField) -> f64 {
    1e-15 * field.length_scale()
}

/// Effective radius `h(r) = n(r)·r`.
pub fn h_profile(field: &IndexField, r: f64) -> Result<f64> {
    require_radial_static(field)?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    Ok(h(field, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadii {
    /// Local maximum of `h`: the stable circular orbit the trap forms around.
    pub r_m: f64,
    /// Local minimum of `h` beyond `r_m`, absent when `h` keeps falling.
    pub r_v: Option<f64>,
}

/// Default outer limit of the critical-radius search.
pub fn default_search_radius(field: &IndexField) -> f64 {
    20.0 * field.length_scale()
}

pub fn critical_radii(field: &IndexField, r_search_max: f64) -> Result<CriticalRadii> {
    require_radial_static(field)?;
    let r_lo = 1e-3 * field.length_scale();
    if !(r_search_max > r_lo) {
        return Err(Error::Domain(format!(
            "search radius {r_search_max} must exceed {r_lo}"
        )));
    }
    let grid = log_grid(r_lo, r_search_max, CRITICAL_GRID_POINTS);
    let slopes: Vec<f64> = grid.iter().map(|&r| dh_dr(field, r)).collect();
    let tol = root_tol(field);
    let refine = |i: usize| bisect(|r| dh_dr(field, r), grid[i], grid[i + 1], tol);

    let Some(i_m) = (0..grid.len() - 1).find(|&i| slopes[i] > 0.0 && slopes[i + 1] <= 0.0) else {
        return Err(Error::NotFound { r_search_max });
    };
    let r_m = refine(i_m).ok_or(Error::NotFound { r_search_max })?;
    let r_v = (i_m + 1..grid.len() - 1)
        .find(|&i| slopes[i] < 0.0 && slopes[i + 1] >= 0.0)
        .and_then(refine);
    Ok(CriticalRadii { r_m, r_v })
}

/// Radius of the circular orbit, `d(n·r)/dr = 0` at the maximum of `h`.
pub fn circular_orbit_radius(field: &IndexField) -> Result<f64> {
    Ok(critical_radii(field, default_search_radius(field))?.r_m)
}

/// Open interval `(b_lo, b_hi)` of impact invariants that trap.
pub fn trapped_band(field: &IndexField) -> Result<(f64, f64)> {
    let crit = critical_radii(field, default_search_radius(field))?;
    let b_hi = h(field, crit.r_m);
    let b_lo = crit.r_v.map_or(0.0, |r_v| h(field, r_v));
    Ok((b_lo, b_hi))
}

/// Inner and outer roots of `h(r) = b` around the trap maximum.
pub fn turning_radii(field: &IndexField, b: f64) -> Result<(f64, f64)> {
    let crit = critical_radii(field, default_search_radius(field))?;
    let b_hi = h(field, crit.r_m);
    let b_lo = crit.r_v.map_or(0.0, |r_v| h(field, r_v));
    if !(b > b_lo && b <= b_hi * (1.0 + 1e-12)) {
        return Err(Error::OutOfBand { b, b_lo, b_hi });
    }
    let b = b.min(b_hi);
    let g = |r: f64| h(field, r) - b;
    let tol = root_tol(field);
    let out_of_band = Error::OutOfBand { b, b_lo, b_hi };
    let r_min = bisect(g, 0.0, crit.r_m, tol).ok_or(out_of_band.clone())?;
    let upper = match crit.r_v {
        Some(r_v) => r_v,
        None => {
            let mut r = 2.0 * crit.r_m;
            let mut k = 0;
            while g(r) >= 0.0 {
                r *= 2.0;
                k += 1;
                if k > 60 {
                    return Err(out_of_band);
                }
            }
            r
        }
    };
    let r_max = bisect(g, crit.r_m, upper, tol).ok_or(out_of_band)?;
    Ok((r_min, r_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Trapped,
    Escaping,
    Plunging,
    Circular,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Trapped => "Trapped",
            Classification::Escaping => "Escaping",
            Classification::Plunging => "Plunging",
            Classification::Circular => "Circular",
        }
    }
}

/// Connected set of radii with `h(r) >= b` containing a launch radius.
///
/// `None` bounds mean the region reaches the origin (`inner`) or the escape
/// radius (`outer`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllowedRegion {
    pub launch_allowed: bool,
    pub inner: Option<f64>,
    pub outer: Option<f64>,
}

/// Region analysis by marching `h(r) − b` on a grid of spacing
/// `scale/2048` and refining each boundary by bisection.
pub fn allowed_region(field: &IndexField, b: f64, r_launch: f64, escape_r: f64) -> Result<AllowedRegion> {
    require_radial_static(field)?;
    if !(r_launch >= 0.0) {
        return Err(Error::Domain(format!(
            "launch radius must be >= 0, got {r_launch}"
        )));
    }
    let b = b.abs();
    let slack = 1e-12 * b;
    let allowed = |r: f64| h(field, r) - b >= -slack;
    let dr = field.length_scale() / 2048.0;
    let tol = root_tol(field);

    let march_out = |from: f64| -> Option<f64> {
        let mut r = from;
        while r < escape_r {
            let next = (r + dr).min(escape_r);
            if !allowed(next) {
                return Some(bisect_predicate(allowed, r, next, tol));
            }
            r = next;
        }
        None
    };

    if !allowed(r_launch) {
        // Non-physical launch; report where the nearest outward region leads.
        let mut r = r_launch;
        while r < escape_r {
            r = (r + dr).min(escape_r);
            if allowed(r) {
                return Ok(AllowedRegion {
                    launch_allowed: false,
                    inner: Some(r),
                    outer: march_out(r),
                });
            }
        }
        return Ok(AllowedRegion {
            launch_allowed: false,
            inner: None,
            outer: Some(r_launch),
        });
    }

    let outer = march_out(r_launch);
    let mut inner = None;
    let mut r = r_launch;
    while r > 0.0 {
        let next = (r - dr).max(0.0);
        if !allowed(next) {
            inner = Some(bisect_predicate(allowed, r, next, tol));
            break;
        }
        r = next;
    }
    Ok(AllowedRegion {
        launch_allowed: true,
        inner,
        outer,
    })
}

/// Classifies a ray of impact invariant `b` launched at `r_launch` by the
/// region of `h(r) >= b` that contains it.
pub fn classify(field: &IndexField, b: f64, r_launch: f64) -> Result<Classification> {
    require_radial_static(field)?;
    let escape_r = default_escape_radius(field, r_launch);
    if let Ok(crit) = critical_radii(field, default_search_radius(field)) {
        let b_m = h(field, crit.r_m);
        if (b.abs() - b_m).abs() <= 1e-9 * b_m && (r_launch - crit.r_m).abs() <= 1e-4 * crit.r_m {
            return Ok(Classification::Circular);
        }
    }
    let region = allowed_region(field, b, r_launch, escape_r)?;
    if !region.launch_allowed {
        return Ok(if region.inner.is_some() && region.outer.is_none() {
            Classification::Escaping
        } else {
            Classification::Plunging
        });
    }
    Ok(match (region.inner, region.outer) {
        (Some(_), Some(_)) => Classification::Trapped,
        (_, None) => Classification::Escaping,
        (None, Some(_)) => Classification::Plunging,
    })
}

/// Turning-point statistics of an integrated ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub b: f64,
    pub classification: Classification,
    pub r_min_obs: f64,
    pub r_max_obs: f64,
    pub w_o: f64,
    #[serde(rename = "T_r")]
    pub t_r: f64,
    #[serde(rename = "delta_phi_per_T_r")]
    pub delta_phi_per_t_r: f64,
    pub periodicity_residual: f64,
}

pub fn orbit_summary(traj: &Trajectory) -> Result<OrbitSummary> {
    if traj.termination == Termination::StepFailure {
        return Err(Error::StepFailure(
            traj.failure.clone().unwrap_or_else(|| "step failure".into()),
        ));
    }
    let events = &traj.events;
    if events.len() < 3 {
        return Err(Error::InsufficientData { found: events.len() });
    }
    let r_min_obs = events.iter().map(|e| e.r).fold(f64::INFINITY, f64::min);
    let r_max_obs = events.iter().map(|e| e.r).fold(f64::NEG_INFINITY, f64::max);
    let w_o = r_max_obs - r_min_obs;

    let mut periods = Vec::new();
    let mut advances = Vec::new();
    for kind in [TurningKind::Min, TurningKind::Max] {
        let same: Vec<_> = events.iter().filter(|e| e.kind == kind).collect();
        for w in same.windows(2) {
            periods.push(w[1].tau - w[0].tau);
            advances.push(w[1].phi - w[0].phi);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let t_r = mean(&periods);
    let spread = periods.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - periods.iter().cloned().fold(f64::INFINITY, f64::min);

    let classification = match traj.termination {
        Termination::Escaped => Classification::Escaping,
        Termination::PlungedBelowMinR => Classification::Plunging,
        _ if w_o <= CIRCULAR_WIDTH_TOL * r_min_obs => Classification::Circular,
        _ => Classification::Trapped,
    };

    Ok(OrbitSummary {
        b: traj.first().conserved.impact_invariant(),
        classification,
        r_min_obs,
        r_max_obs,
        w_o,
        t_r,
        delta_phi_per_t_r: mean(&advances),
        periodicity_residual: spread / t_r,
    })
}
