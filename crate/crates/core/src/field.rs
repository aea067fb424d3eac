//! Refractive-index fields with analytic value-and-gradient evaluation.
//!
//! Every field is immutable after construction and evaluates as a pure
//! function of `(r, φ, z, t)`. Partial derivatives are closed-form; the
//! finite-difference check in [`gradient_fd_check`] exists only to guard
//! them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the index that fabricable materials reach.
pub const DEFAULT_N_MAX_MATERIAL: f64 = 3.8;
/// Lower bound on the cladding index used by the inverse design.
pub const DEFAULT_N_FLOOR: f64 = 1.0;

/// Index value and its four partial derivatives at one event `(r, φ, z, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub n: f64,
    pub dn_dr: f64,
    pub dn_dphi: f64,
    pub dn_dz: f64,
    pub dn_dt: f64,
}

impl FieldSample {
    fn uniform(n: f64) -> Self {
        FieldSample {
            n,
            dn_dr: 0.0,
            dn_dphi: 0.0,
            dn_dz: 0.0,
            dn_dt: 0.0,
        }
    }
}

/// Homogeneous medium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "ConstantSpec")]
pub struct ConstantField {
    n: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantSpec {
    n: f64,
}

impl TryFrom<ConstantSpec> for ConstantField {
    type Error = Error;
    fn try_from(spec: ConstantSpec) -> Result<Self> {
        ConstantField::new(spec.n)
    }
}

impl ConstantField {
    pub fn new(n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!("constant index must be > 0, got {n}")));
        }
        Ok(ConstantField { n })
    }

    pub fn n(&self) -> f64 {
        self.n
    }
}

/// `n(r) = n_C + (n_A − n_C)·exp(−r²/σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianSpec")]
pub struct GaussianRadialField {
    n_a: f64,
    n_c: f64,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianSpec {
    n_a: f64,
    n_c: f64,
    sigma: f64,
}

impl TryFrom<GaussianSpec> for GaussianRadialField {
    type Error = Error;
    fn try_from(spec: GaussianSpec) -> Result<Self> {
        GaussianRadialField::new(spec.n_a, spec.n_c, spec.sigma)
    }
}

impl GaussianRadialField {
    /// Builds the profile under the default material bound of 3.8.
    pub fn new(n_a: f64, n_c: f64, sigma: f64) -> Result<Self> {
        Self::with_material_bound(n_a, n_c, sigma, DEFAULT_N_MAX_MATERIAL)
    }

    pub fn with_material_bound(n_a: f64, n_c: f64, sigma: f64, n_max_material: f64) -> Result<Self> {
        if ![n_a, n_c, sigma, n_max_material].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("Gaussian parameters must be finite".into()));
        }
        if sigma <= 0.0 {
            return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
        }
        if n_c < 0.0 {
            return Err(Error::Constraint(format!("n_c must be >= 0, got {n_c}")));
        }
        if n_a <= n_c {
            return Err(Error::Constraint(format!("n_a ({n_a}) must exceed n_c ({n_c})")));
        }
        if n_a > n_max_material {
            return Err(Error::Constraint(format!(
                "n_a ({n_a}) exceeds the material bound {n_max_material}"
            )));
        }
        Ok(GaussianRadialField { n_a, n_c, sigma })
    }

    pub fn n_a(&self) -> f64 {
        self.n_a
    }

    pub fn n_c(&self) -> f64 {
        self.n_c
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Excess `(n_A − n_C)·exp(−r²/σ²)` and its radial derivative.
    #[inline]
    fn excess(&self, r: f64) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let g = (self.n_a - self.n_c) * (-(r * r) / s2).exp();
        (g, g * (-2.0 * r / s2))
    }

    #[inline]
    fn eval(&self, r: f64) -> FieldSample {
        let (g, dg) = self.excess(r);
        FieldSample {
            n: self.n_c + g,
            dn_dr: dg,
            dn_dphi: 0.0,
            dn_dz: 0.0,
            dn_dt: 0.0,
        }
    }
}

/// Periodic angular window `exp((cos(φ − φ_p) − 1)/w²)`, approximately a
/// Gaussian of width `w` around `φ_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AzimuthalWindow {
    pub phi_p: f64,
    pub width: f64,
}

impl AzimuthalWindow {
    #[inline]
    fn eval(&self, phi: f64) -> (f64, f64) {
        let w2 = self.width * self.width;
        let d = phi - self.phi_p;
        let v = ((d.cos() - 1.0) / w2).exp();
        (v, -d.sin() / w2 * v)
    }
}

/// Gaussian ring bump `Δn·exp(−(r − r_p)²/s_p²)` with an optional
/// azimuthal window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpPerturbation {
    pub delta_n: f64,
    pub r_p: f64,
    pub s_p: f64,
    #[serde(default)]
    pub azimuth: Option<AzimuthalWindow>,
}

impl BumpPerturbation {
    pub fn axisymmetric(delta_n: f64, r_p: f64, s_p: f64) -> Self {
        BumpPerturbation {
            delta_n,
            r_p,
            s_p,
            azimuth: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_n.is_finite() && self.r_p.is_finite() && self.s_p.is_finite()) {
            return Err(Error::Domain("bump parameters must be finite".into()));
        }
        if self.s_p <= 0.0 {
            return Err(Error::Domain(format!("s_p must be > 0, got {}", self.s_p)));
        }
        if let Some(w) = self.azimuth {
            if !(w.phi_p.is_finite() && w.width.is_finite() && w.width > 0.0) {
                return Err(Error::Domain(
                    "azimuthal window needs a finite phi_p and width > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A base field plus one [`BumpPerturbation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BumpSpec", into = "BumpSpec")]
pub struct BumpField {
    base: Box<IndexField>,
    bump: BumpPerturbation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpSpec {
    base: Box<IndexField>,
    delta_n: f64,
    r_p: f64,
    s_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    azimuth: Option<AzimuthalWindow>,
}

impl TryFrom<BumpSpec> for BumpField {
    type Error = Error;
    fn try_from(spec: BumpSpec) -> Result<Self> {
        BumpField::new(
            *spec.base,
            BumpPerturbation {
                delta_n: spec.delta_n,
                r_p: spec.r_p,
                s_p: spec.s_p,
                azimuth: spec.azimuth,
            },
        )
    }
}

impl From<BumpField> for BumpSpec {
    fn from(f: BumpField) -> Self {
        BumpSpec {
            base: f.base,
            delta_n: f.bump.delta_n,
            r_p: f.bump.r_p,
            s_p: f.bump.s_p,
            azimuth: f.bump.azimuth,
        }
    }
}

impl BumpField {
    pub fn new(base: IndexField, bump: BumpPerturbation) -> Result<Self> {
        bump.validate()?;
        let field = BumpField {
            base: Box::new(base),
            bump,
        };
        // Positivity is checked on a dense polar grid covering the bump.
        let r_hi = (field.bump.r_p + 8.0 * field.bump.s_p).max(10.0 * field.base.length_scale());
        let n_r = 2048;
        let n_phi = if bump.azimuth.is_some() { 128 } else { 1 };
        let times = field.base.sample_times();
        let mut n_min = f64::INFINITY;
        for i in 0..=n_r {
            let r = r_hi * i as f64 / n_r as f64;
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                for &t in &times {
                    n_min = n_min.min(field.eval(r, phi, 0.0, t).n);
                }
            }
        }
        if n_min.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Constraint(format!("perturbed index reaches {n_min} <= 0")));
        }
        Ok(field)
    }

    pub fn base(&self) -> &IndexField {
        &self.base
    }

    pub fn perturbation(&self) -> &BumpPerturbation {
        &self.bump
    }

    #[inline]
    fn eval(&self, r: f64, phi: f64, z: f64, t: f64) -> FieldSample {
        let mut s = self.base.eval(r, phi, z, t);
        let p = &self.bump;
        let d = r - p.r_p;
        let s2 = p.s_p * p.s_p;
        let q = (-(d * d) / s2).exp();
        let dq = q * (-2.0 * d / s2);
        match p.azimuth {
            None => {
                s.n += p.delta_n * q;
                s.dn_dr += p.delta_n * dq;
            }
            Some(win) => {
                let (w, dw) = win.eval(phi);
                s.n += p.delta_n * q * w;
                s.dn_dr += p.delta_n * dq * w;
                s.dn_dphi += p.delta_n * q * dw;
            }
        }
        s
    }
}

/// Gaussian trap whose contrast ramps to zero over `[t_off, t_off + tau_ramp]`
/// with a cubic smoothstep, leaving the uniform floor `n_C` afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SwitchableSpec", into = "SwitchableSpec")]
pub struct SwitchableGaussianField {
    base: GaussianRadialField,
    t_off: f64,
    tau_ramp: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchableSpec {
    base: GaussianRadialField,
    t_off: f64,
    tau_ramp: f64,
}

impl TryFrom<SwitchableSpec> for SwitchableGaussianField {
    type Error = Error;
    fn try_from(spec: SwitchableSpec) -> Result<Self> {
        SwitchableGaussianField::new(spec.base, spec.t_off, spec.tau_ramp)
    }
}

impl From<SwitchableGaussianField> for SwitchableSpec {
    fn from(f: SwitchableGaussianField) -> Self {
        SwitchableSpec {
            base: f.base,
            t_off: f.t_off,
            tau_ramp: f.tau_ramp,
        }
    }
}

impl SwitchableGaussianField {
    pub fn new(base: GaussianRadialField, t_off: f64, tau_ramp: f64) -> Result<Self> {
        if !t_off.is_finite() || !(tau_ramp.is_finite() && tau_ramp > 0.0) {
            return Err(Error::Domain(format!(
                "switch needs finite t_off and tau_ramp > 0, got t_off={t_off}, tau_ramp={tau_ramp}"
            )));
        }
        if base.n_c <= 0.0 {
            return Err(Error::Constraint(
                "switchable trap needs n_c > 0 so the released field stays positive".into(),
            ));
        }
        Ok(SwitchableGaussianField {
            base,
            t_off,
            tau_ramp,
        })
    }

    pub fn base(&self) -> &GaussianRadialField {
        &self.base
    }

    pub fn t_off(&self) -> f64 {
        self.t_off
    }

    pub fn tau_ramp(&self) -> f64 {
        self.tau_ramp
    }

    /// Contrast factor `a(t)` and `da/dt`.
    #[inline]
    pub fn amplitude(&self, t: f64) -> (f64, f64) {
        if t <= self.t_off {
            return (1.0, 0.0);
        }
        let s = (t - self.t_off) / self.tau_ramp;
        if s >= 1.0 {
            return (0.0, 0.0);
        }
        let smooth = s * s * (3.0 - 2.0 * s);
        (1.0 - smooth, -6.0 * s * (1.0 - s) / self.tau_ramp)
    }

    #[inline]
    fn eval(&self, r: f64, t: f64) -> FieldSample {
        let (g, dg) = self.base.excess(r);
        let (a, da) = self.amplitude(t);
        FieldSample {
            n: self.base.n_c + a * g,
            dn_dr: a * dg,
            dn_dphi: 0.0,
            dn_dz: 0.0,
            dn_dt: da * g,
        }
    }
}

/// Any refractive-index field the toolkit can trace through.
///
/// Serialized as a JSON object tagged by `"type"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum IndexField {
    Constant(ConstantField),
    Gaussian(GaussianRadialField),
    Bump(BumpField),
    Switchable(SwitchableGaussianField),
}

impl From<GaussianRadialField> for IndexField {
    fn from(g: GaussianRadialField) -> Self {
        IndexField::Gaussian(g)
    }
}

impl IndexField {
    /// Times at which `∂n/∂t` has a kink; steps should not straddle them.
    pub fn time_breakpoints(&self) -> Vec<f64> {
        match self {
            IndexField::Switchable(s) => vec![s.t_off, s.t_off + s.tau_ramp],
            IndexField::Bump(b) => b.base.time_breakpoints(),
            _ => Vec::new(),
        }
    }

    pub fn constant(n: f64) -> Result<Self> {
        Ok(IndexField::Constant(ConstantField::new(n)?))
    }

    /// Evaluation without the domain check; callers guarantee `r >= 0`.
    #[inline]
    pub(crate) fn eval(&self, r: f64, phi: f64, z: f64, t: f64) -> FieldSample {
        match self {
            IndexField::Constant(c) => FieldSample::uniform(c.n),
            IndexField::Gaussian(g) => g.eval(r),
            IndexField::Bump(b) => b.eval(r, phi, z, t),
            IndexField::Switchable(s) => s.eval(r, t),
        }
    }

    /// `n(r)` and `dn/dr` of a radial static field.
    #[inline]
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let s = self.eval(r, 0.0, 0.0, 0.0);
        (s.n, s.dn_dr)
    }

    /// True when `n` depends on `r` alone.
    pub fn is_radial_static(&self) -> bool {
        match self {
            IndexField::Constant(_) | IndexField::Gaussian(_) => true,
            IndexField::Bump(b) => b.bump.azimuth.is_none() && b.base.is_radial_static(),
            IndexField::Switchable(_) => false,
        }
    }

    /// Characteristic radial length: σ for Gaussian profiles, 1 otherwise.
    pub fn length_scale(&self) -> f64 {
        match self {
            IndexField::Constant(_) => 1.0,
            IndexField::Gaussian(g) => g.sigma,
            IndexField::Bump(b) => b.base.length_scale(),
            IndexField::Switchable(s) => s.base.sigma,
        }
    }

    fn sample_times(&self) -> Vec<f64> {
        match self {
            IndexField::Switchable(s) => [-0.5, 0.2, 0.5, 0.8, 1.5]
                .iter()
                .map(|f| s.t_off + f * s.tau_ramp)
                .collect(),
            IndexField::Bump(b) => b.base.sample_times(),
            _ => vec![0.0, 1.0, 2.0, 3.0, 4.0],
        }
    }

    /// Deterministic `(r, φ, z, t)` grid used by the gradient checks:
    /// 64 radii on `[1e-3, 10·scale]`, 8 angles and 5 times.
    pub fn sample_grid(&self) -> Vec<[f64; 4]> {
        let r_hi = 10.0 * self.length_scale();
        let times = self.sample_times();
        let mut grid = Vec::with_capacity(64 * 8 * times.len());
        for i in 0..64 {
            let r = 1e-3 + (r_hi - 1e-3) * i as f64 / 63.0;
            for j in 0..8 {
                let phi = 0.1 + 2.0 * PI * j as f64 / 8.0;
                for &t in &times {
                    grid.push([r, phi, 0.0, t]);
                }
            }
        }
        grid
    }
}

/// Evaluates `n` and its partials at `(r, φ, z, t)`.
pub fn field_eval(field: &IndexField, r: f64, phi: f64, z: f64, t: f64) -> Result<FieldSample> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    Ok(field.eval(r, phi, z, t))
}

pub fn make_gaussian(n_a: f64, n_c: f64, sigma: f64) -> Result<IndexField> {
    Ok(IndexField::Gaussian(GaussianRadialField::new(n_a, n_c, sigma)?))
}

pub fn make_bump_perturbed(base: &IndexField, bump: BumpPerturbation) -> Result<IndexField> {
    Ok(IndexField::Bump(BumpField::new(base.clone(), bump)?))
}

/// Denominator floor: relative error below `1e-6` with this floor is
/// equivalent to `|analytic − fd| <= max(1e-6·|analytic|, 1e-9)`.
const FD_FLOOR: f64 = 1e-3;

/// Largest relative disagreement between the analytic partials and central
/// differences of step `h` at `point = [r, φ, z, t]`.
pub fn gradient_fd_check(field: &IndexField, point: [f64; 4], h: f64) -> Result<f64> {
    let [r, phi, z, t] = point;
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be > 0, got {h}")));
    }
    if r - h < 0.0 {
        return Err(Error::Domain(format!(
            "point r = {r} is not interior for step {h}"
        )));
    }
    let a = field_eval(field, r, phi, z, t)?;
    let central = |p: [f64; 4], q: [f64; 4]| {
        (field.eval(p[0], p[1], p[2], p[3]).n - field.eval(q[0], q[1], q[2], q[3]).n) / (2.0 * h)
    };
    let fd = [
        central([r + h, phi, z, t], [r - h, phi, z, t]),
        central([r, phi + h, z, t], [r, phi - h, z, t]),
        central([r, phi, z + h, t], [r, phi, z - h, t]),
        central([r, phi, z, t + h], [r, phi, z, t - h]),
    ];
    let analytic = [a.dn_dr, a.dn_dphi, a.dn_dz, a.dn_dt];
    Ok(analytic
        .iter()
        .zip(fd.iter())
        .map(|(an, f)| (an - f).abs() / an.abs().max(FD_FLOOR))
        .fold(0.0, f64::max))
}
