//! Ray equations of motion in a refractive-index field.
//!
//! Light follows the null geodesics of the optical metric
//! `ds² = −dt²/n² + dr² + r²dφ² + dz²`, parametrised by an affine parameter
//! `τ`. In these coordinates the Euler–Lagrange equations read
//!
//! ```text
//! r'' = r φ'² + t'² ∂_r n / n³
//! φ'' = (−2 r r' φ' + t'² ∂_φ n / n³) / r²
//! z'' = t'² ∂_z n / n³
//! t'' = t' (t' ∂_t n + 2 (z' ∂_z n + φ' ∂_φ n + r' ∂_r n)) / n
//! ```
//!
//! with the null constraint `t'²/n² = r'² + r²φ'² + z'²` preserved along
//! exact solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{field_eval, FieldSample, IndexField};

/// Smallest radius at which the polar chart is trusted.
pub const DEFAULT_R_FLOOR: f64 = 1e-9;

/// Position `(r, φ, z, t)` and velocity with respect to `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayState {
    #[serde(default)]
    pub tau: f64,
    pub r: f64,
    pub phi: f64,
    pub z: f64,
    pub t: f64,
    pub dr: f64,
    pub dphi: f64,
    pub dz: f64,
    pub dt: f64,
}

impl RayState {
    pub(crate) fn to_array(self) -> [f64; 8] {
        [
            self.r, self.phi, self.z, self.t, self.dr, self.dphi, self.dz, self.dt,
        ]
    }

    pub(crate) fn from_array(tau: f64, y: &[f64; 8]) -> Self {
        RayState {
            tau,
            r: y[0],
            phi: y[1],
            z: y[2],
            t: y[3],
            dr: y[4],
            dphi: y[5],
            dz: y[6],
            dt: y[7],
        }
    }

    /// `√(r'² + r²φ'² + z'²)`.
    pub fn spatial_speed(&self) -> f64 {
        (self.dr * self.dr + (self.r * self.dphi).powi(2) + self.dz * self.dz).sqrt()
    }

    /// Cartesian `(x, y)` of the projected position.
    pub fn xy(&self) -> (f64, f64) {
        (self.r * self.phi.cos(), self.r * self.phi.sin())
    }

    /// Multiplies all four velocity components by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        RayState {
            dr: self.dr * lambda,
            dphi: self.dphi * lambda,
            dz: self.dz * lambda,
            dt: self.dt * lambda,
            ..*self
        }
    }
}

/// `d/dτ` of a [`RayState`]: velocities and accelerations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayDerivative {
    pub dr: f64,
    pub dphi: f64,
    pub dz: f64,
    pub dt: f64,
    pub ddr: f64,
    pub ddphi: f64,
    pub ddz: f64,
    pub ddt: f64,
}

impl RayDerivative {
    pub(crate) fn to_array(self) -> [f64; 8] {
        [
            self.dr, self.dphi, self.dz, self.dt, self.ddr, self.ddphi, self.ddz, self.ddt,
        ]
    }
}

/// Right-hand side given a precomputed field sample at the ray position.
#[inline]
pub fn eikonal_rhs_with_sample(s: &RayState, f: &FieldSample) -> RayDerivative {
    let n = f.n;
    let tt = s.dt * s.dt;
    let k = tt / (n * n * n);
    RayDerivative {
        dr: s.dr,
        dphi: s.dphi,
        dz: s.dz,
        dt: s.dt,
        ddr: s.r * s.dphi * s.dphi + k * f.dn_dr,
        ddphi: (-2.0 * s.r * s.dr * s.dphi + k * f.dn_dphi) / (s.r * s.r),
        ddz: k * f.dn_dz,
        ddt: s.dt * (s.dt * f.dn_dt + 2.0 * (s.dz * f.dn_dz + s.dphi * f.dn_dphi + s.dr * f.dn_dr)) / n,
    }
}

/// Evaluates the ray equations at `state`.
pub fn eikonal_rhs(state: &RayState, field: &IndexField) -> Result<RayDerivative> {
    if !(state.r >= DEFAULT_R_FLOOR) {
        return Err(Error::CoordinateSingularity {
            r: state.r,
            floor: DEFAULT_R_FLOOR,
        });
    }
    let f = field_eval(field, state.r, state.phi, state.z, state.t)?;
    if !(f.n > 0.0) {
        return Err(Error::Domain(format!(
            "index {} is not positive at r = {}",
            f.n, state.r
        )));
    }
    Ok(eikonal_rhs_with_sample(state, &f))
}

/// Constants of motion and the null residual at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    /// `r²φ'`, conserved when `∂_φ n = 0`.
    #[serde(rename = "L")]
    pub l: f64,
    /// `t'/n²`, conserved when `∂_t n = 0`.
    #[serde(rename = "C")]
    pub c: f64,
    /// `z'`, conserved when `∂_z n = 0`.
    #[serde(rename = "pz")]
    pub p_z: f64,
    /// `t'²/n² − (r'² + r²φ'² + z'²)`.
    pub null_residual: f64,
}

impl ConservedSet {
    pub fn from_sample(s: &RayState, f: &FieldSample) -> Self {
        let n2 = f.n * f.n;
        ConservedSet {
            l: s.r * s.r * s.dphi,
            c: s.dt / n2,
            p_z: s.dz,
            null_residual: s.dt * s.dt / n2 - s.spatial_speed().powi(2),
        }
    }

    /// Impact invariant `b = L/C`.
    pub fn impact_invariant(&self) -> f64 {
        self.l / self.c
    }
}

pub fn conserved_quantities(state: &RayState, field: &IndexField) -> Result<ConservedSet> {
    let f = field_eval(field, state.r, state.phi, state.z, state.t)?;
    Ok(ConservedSet::from_sample(state, &f))
}

/// Relative null residual `|N| / (t'²/n²)`.
pub fn relative_null_residual(state: &RayState, f: &FieldSample) -> f64 {
    let c = ConservedSet::from_sample(state, f);
    c.null_residual.abs() / (state.dt * state.dt / (f.n * f.n))
}

/// Resets `t'` so that the state is exactly null, keeping the spatial
/// velocity.
pub fn normalize_null(state: &RayState, field: &IndexField) -> Result<RayState> {
    let speed = state.spatial_speed();
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::DegenerateRay);
    }
    let f = field_eval(field, state.r, state.phi, state.z, state.t)?;
    Ok(RayState {
        dt: f.n * speed,
        ..*state
    })
}

/// Tangential launch at `(r0, 0, 0, 0)` circulating with sign `sense`, in
/// the affine gauge `t' = 1`.
pub fn launch_tangential(field: &IndexField, r0: f64, sense: f64) -> Result<RayState> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("launch radius must be > 0, got {r0}")));
    }
    if sense == 0.0 || !sense.is_finite() {
        return Err(Error::Domain(format!("sense must be +1 or -1, got {sense}")));
    }
    let raw = RayState {
        tau: 0.0,
        r: r0,
        phi: 0.0,
        z: 0.0,
        t: 0.0,
        dr: 0.0,
        dphi: sense.signum() / r0,
        dz: 0.0,
        dt: 1.0,
    };
    let null = normalize_null(&raw, field)?;
    Ok(null.rescaled(1.0 / null.dt))
}
