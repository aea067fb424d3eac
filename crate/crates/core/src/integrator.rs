//! Adaptive Dormand–Prince 5(4) integration of the ray equations.
//!
//! Step size follows a PI controller on the embedded error estimate. The
//! continuous extension of the pair (fourth order) provides dense output,
//! which is used for uniform sampling, for locating radial turning points
//! (`r' = 0`) and for locating the escape and plunge radii exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{eikonal_rhs, normalize_null, ConservedSet, RayDerivative, RayState, DEFAULT_R_FLOOR};
use crate::error::{Error, Result};
use crate::field::{field_eval, FieldSample, IndexField};
use crate::roots::bisect_predicate;

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller.
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

/// Angular spacing targets for the emitted samples.
const PHI_SUBDIVIDE: f64 = PI / 24.0;
const PHI_FLUSH: f64 = PI / 32.0;

type Vec8 = [f64; 8];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_tau: f64,
    pub escape_r: f64,
    pub min_r: f64,
    pub max_steps: usize,
    pub sample_interval: f64,
}

impl IntegrateOptions {
    /// Defaults for a ray launched at `r_launch`: tight tolerances, escape
    /// radius `max(10·scale, 2·r_launch)` and a plunge guard at `1e-6`.
    pub fn for_launch(field: &IndexField, r_launch: f64) -> Self {
        IntegrateOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_tau: 100.0,
            escape_r: default_escape_radius(field, r_launch),
            min_r: 1e-6,
            max_steps: 2_000_000,
            sample_interval: 0.05,
        }
    }

    pub fn with_max_tau(mut self, max_tau: f64) -> Self {
        self.max_tau = max_tau;
        self
    }

    pub fn with_sample_interval(mut self, interval: f64) -> Self {
        self.sample_interval = interval;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Checks every tolerance and bound; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_tau", self.max_tau),
            ("escape_r", self.escape_r),
            ("min_r", self.min_r),
            ("sample_interval", self.sample_interval),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{key} must be finite and > 0, got {v}")));
            }
        }
        if self.min_r < DEFAULT_R_FLOOR {
            return Err(Error::Domain(format!(
                "min_r must be >= {DEFAULT_R_FLOOR}, got {}",
                self.min_r
            )));
        }
        if self.escape_r <= self.min_r {
            return Err(Error::Domain("escape_r must exceed min_r".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be > 0".into()));
        }
        Ok(())
    }
}

pub fn default_escape_radius(field: &IndexField, r_launch: f64) -> f64 {
    (10.0 * field.length_scale()).max(2.0 * r_launch)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    MaxTau,
    Escaped,
    PlungedBelowMinR,
    StepFailure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub state: RayState,
    pub field: FieldSample,
    pub conserved: ConservedSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurningKind {
    /// Pericentre: `r'` changes from negative to positive.
    Min,
    /// Apocentre: `r'` changes from positive to negative.
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurningEvent {
    pub tau: f64,
    pub r: f64,
    pub phi: f64,
    pub kind: TurningKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub events: Vec<TurningEvent>,
    pub termination: Termination,
    /// Diagnostic for [`Termination::StepFailure`].
    pub failure: Option<String>,
    /// Relative change of `t'` applied by the initial null normalisation.
    pub null_correction: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Largest `|N| / (t'²/n²)` over all samples.
    pub fn max_relative_null_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let scale = s.state.dt * s.state.dt / (s.field.n * s.field.n);
                s.conserved.null_residual.abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Writes the trajectory as CSV with round-trip float formatting.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            let st = &s.state;
            let c = &s.conserved;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                st.tau,
                st.r,
                st.phi,
                st.z,
                st.t,
                st.dr,
                st.dphi,
                st.dz,
                st.dt,
                s.field.n,
                c.l,
                c.c,
                c.p_z,
                c.null_residual
            )?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "tau,r,phi,z,t,dr,dphi,dz,dt,n,L,C,pz,null_residual";

/// Integrates with the ray equations of [`eikonal_rhs`].
pub fn integrate(state0: &RayState, field: &IndexField, opts: &IntegrateOptions) -> Result<Trajectory> {
    integrate_with_rhs(state0, field, opts, eikonal_rhs)
}

/// Horizon beyond which [`integrate_periods`] stops extending.
pub const MAX_PERIOD_HORIZON: f64 = 1e6;

/// Integrates until at least `periods` complete radial periods (inner
/// turnings beyond the first) are recorded, doubling `opts.max_tau` as
/// needed. Stops early if the ray leaves the domain.
pub fn integrate_periods(
    state0: &RayState,
    field: &IndexField,
    opts: &IntegrateOptions,
    periods: usize,
) -> Result<Trajectory> {
    let mut opts = *opts;
    loop {
        let traj = integrate(state0, field, &opts)?;
        let mins = traj.events.iter().filter(|e| e.kind == TurningKind::Min).count();
        if traj.termination != Termination::MaxTau || mins > periods || opts.max_tau >= MAX_PERIOD_HORIZON {
            return Ok(traj);
        }
        opts.max_tau = (2.0 * opts.max_tau).min(MAX_PERIOD_HORIZON);
    }
}

/// Integrates with a caller-supplied right-hand side. Used by the
/// self-check to inject faults; production callers use [`integrate`].
pub fn integrate_with_rhs<F>(
    state0: &RayState,
    field: &IndexField,
    opts: &IntegrateOptions,
    rhs: F,
) -> Result<Trajectory>
where
    F: Fn(&RayState, &IndexField) -> Result<RayDerivative>,
{
    opts.validate()?;
    let start = normalize_null(state0, field)?;
    let null_correction = if state0.dt != 0.0 {
        ((start.dt - state0.dt) / start.dt).abs()
    } else {
        1.0
    };
    let mut run = Run {
        field,
        opts,
        rhs: &rhs,
        tau0: start.tau,
        samples: Vec::new(),
        events: Vec::new(),
        next_grid: 1,
        accepted: 0,
        rejected: 0,
    };
    let (termination, failure) = run.solve(&start)?;
    Ok(Trajectory {
        samples: run.samples,
        events: run.events,
        termination,
        failure,
        null_correction,
        accepted_steps: run.accepted,
        rejected_steps: run.rejected,
    })
}

struct Run<'a, F> {
    field: &'a IndexField,
    opts: &'a IntegrateOptions,
    rhs: &'a F,
    tau0: f64,
    samples: Vec<TrajectorySample>,
    events: Vec<TurningEvent>,
    next_grid: u64,
    accepted: usize,
    rejected: usize,
}

/// Continuous extension of one accepted step.
struct Dense {
    tau: f64,
    h: f64,
    coeff: [Vec8; 5],
}

impl Dense {
    fn at_theta(&self, theta: f64) -> Vec8 {
        let t1 = 1.0 - theta;
        let c = &self.coeff;
        let mut y = [0.0; 8];
        for i in 0..8 {
            y[i] = c[0][i] + theta * (c[1][i] + t1 * (c[2][i] + theta * (c[3][i] + t1 * c[4][i])));
        }
        y
    }

    fn theta_of(&self, tau: f64) -> f64 {
        ((tau - self.tau) / self.h).clamp(0.0, 1.0)
    }
}

enum Stop {
    Escaped,
    Plunged,
}

impl<F> Run<'_, F>
where
    F: Fn(&RayState, &IndexField) -> Result<RayDerivative>,
{
    fn eval(&self, tau: f64, y: &Vec8) -> Option<Vec8> {
        let s = RayState::from_array(tau, y);
        match (self.rhs)(&s, self.field) {
            Ok(d) => {
                let d = d.to_array();
                d.iter().all(|v| v.is_finite()).then_some(d)
            }
            Err(_) => None,
        }
    }

    fn sample(&self, tau: f64, y: &Vec8) -> Result<TrajectorySample> {
        let state = RayState::from_array(tau, y);
        let f = field_eval(self.field, state.r.max(0.0), state.phi, state.z, state.t)?;
        Ok(TrajectorySample {
            state,
            field: f,
            conserved: ConservedSet::from_sample(&state, &f),
        })
    }

    fn push_sample(&mut self, tau: f64, y: &Vec8) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if tau <= last.state.tau {
                return Ok(());
            }
        }
        let s = self.sample(tau, y)?;
        self.samples.push(s);
        Ok(())
    }

    fn norm(&self, y0: &Vec8, y1: &Vec8, v: &Vec8) -> f64 {
        let mut acc = 0.0;
        for i in 0..8 {
            let sk = self.opts.abs_tol + self.opts.rel_tol * y0[i].abs().max(y1[i].abs());
            acc += (v[i] / sk).powi(2);
        }
        (acc / 8.0).sqrt()
    }

    fn initial_step(&self, tau: f64, y0: &Vec8, f0: &Vec8) -> f64 {
        let d0 = self.norm(y0, y0, y0);
        let d1 = self.norm(y0, y0, f0);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.opts.max_tau - tau);
        let mut y1 = [0.0; 8];
        for i in 0..8 {
            y1[i] = y0[i] + h0 * f0[i];
        }
        let Some(f1) = self.eval(tau + h0, &y1) else {
            return h0 * 0.1;
        };
        let mut diff = [0.0; 8];
        for i in 0..8 {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = self.norm(y0, y0, &diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.opts.max_tau - tau)
    }

    fn solve(&mut self, start: &RayState) -> Result<(Termination, Option<String>)> {
        let mut tau = start.tau;
        let mut y = start.to_array();
        self.push_sample(tau, &y)?;

        if y[0] >= self.opts.escape_r {
            return Ok((Termination::Escaped, None));
        }
        if y[0] <= self.opts.min_r {
            return Ok((Termination::PlungedBelowMinR, None));
        }
        let Some(mut k1) = self.eval(tau, &y) else {
            return Ok((
                Termination::StepFailure,
                Some(format!("right-hand side undefined at launch r = {}", y[0])),
            ));
        };

        // A launch with r' = 0 is itself a turning point.
        let mut skip_initial_root = false;
        if y[4] == 0.0 && k1[4] != 0.0 {
            self.events.push(TurningEvent {
                tau,
                r: y[0],
                phi: y[1],
                kind: if k1[4] > 0.0 {
                    TurningKind::Min
                } else {
                    TurningKind::Max
                },
            });
            skip_initial_root = true;
        }

        let breaks = self.field.time_breakpoints();
        let mut h = self.initial_step(tau, &y, &k1);
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;
        let mut steps = 0usize;

        loop {
            if tau >= self.opts.max_tau {
                return Ok((Termination::MaxTau, None));
            }
            if steps >= self.opts.max_steps {
                return Ok((
                    Termination::StepFailure,
                    Some(format!(
                        "max_steps = {} exhausted at tau = {tau}",
                        self.opts.max_steps
                    )),
                ));
            }
            let h_min = 16.0 * f64::EPSILON * tau.abs().max(1.0);
            if h < h_min {
                return Ok((
                    Termination::StepFailure,
                    Some(format!(
                        "step size underflow (h = {h:e}) at tau = {tau}, r = {}",
                        y[0]
                    )),
                ));
            }
            let last_step = tau + h >= self.opts.max_tau;
            if last_step {
                h = self.opts.max_tau - tau;
            }
            steps += 1;

            let Some((y_new, k7, err_vec, k)) = self.attempt(tau, &y, &k1, h) else {
                self.rejected += 1;
                last_rejected = true;
                h *= 0.25;
                continue;
            };
            let err = self.norm(&y, &y_new, &err_vec);
            if !err.is_finite() {
                self.rejected += 1;
                last_rejected = true;
                h *= 0.1;
                continue;
            }

            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                // Land on a ramp kink instead of stepping across it.
                if let Some(theta) = self.breakpoint_inside(&breaks, tau, h, &y, &y_new, &k1, &k, &k7) {
                    h *= theta;
                    continue;
                }
                let mut fac = fac11 / fac_old.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                fac_old = err.max(1e-4);
                last_rejected = false;
                self.accepted += 1;

                let tau_new = if last_step { self.opts.max_tau } else { tau + h };
                let dense = self.dense(tau, h, &y, &y_new, &k1, &k, &k7);
                let skip = skip_initial_root && self.accepted == 1;
                self.locate_turning(&dense, &y, &y_new, skip);

                if let Some((tau_stop, y_stop, stop)) = self.locate_boundary(&dense, &y_new)? {
                    self.emit_samples(&dense, tau_stop, true)?;
                    self.push_sample(tau_stop, &y_stop)?;
                    return Ok((
                        match stop {
                            Stop::Escaped => Termination::Escaped,
                            Stop::Plunged => Termination::PlungedBelowMinR,
                        },
                        None,
                    ));
                }
                self.emit_samples(&dense, tau_new, last_step)?;
                if last_step {
                    self.push_sample(tau_new, &y_new)?;
                }

                tau = tau_new;
                y = y_new;
                k1 = k7;
                h = h_new;
            } else {
                self.rejected += 1;
                last_rejected = true;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            }
        }
    }

    /// One trial step; `None` when a stage leaves the domain of the RHS.
    #[allow(clippy::type_complexity)]
    fn attempt(&self, tau: f64, y: &Vec8, k1: &Vec8, h: f64) -> Option<(Vec8, Vec8, Vec8, [Vec8; 5])> {
        let mut tmp = [0.0; 8];
        for i in 0..8 {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = self.eval(tau + C2 * h, &tmp)?;
        for i in 0..8 {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = self.eval(tau + C3 * h, &tmp)?;
        for i in 0..8 {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = self.eval(tau + C4 * h, &tmp)?;
        for i in 0..8 {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = self.eval(tau + C5 * h, &tmp)?;
        for i in 0..8 {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = self.eval(tau + h, &tmp)?;
        let mut y_new = [0.0; 8];
        for i in 0..8 {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        if !y_new.iter().all(|v| v.is_finite()) {
            return None;
        }
        let k7 = self.eval(tau + h, &y_new)?;
        let mut err = [0.0; 8];
        for i in 0..8 {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        Some((y_new, k7, err, [k2, k3, k4, k5, k6]))
    }

    /// Fraction of the step at which `t` first reaches a breakpoint lying
    /// strictly inside it, if any.
    #[allow(clippy::too_many_arguments)]
    fn breakpoint_inside(
        &self,
        breaks: &[f64],
        tau: f64,
        h: f64,
        y: &Vec8,
        y_new: &Vec8,
        k1: &Vec8,
        k: &[Vec8; 5],
        k7: &Vec8,
    ) -> Option<f64> {
        let (t0, t1) = (y[3].min(y_new[3]), y[3].max(y_new[3]));
        let tb = breaks
            .iter()
            .copied()
            .filter(|&b| {
                let slack = 1e-12 * b.abs().max(1.0);
                b > t0 + slack && b < t1 - slack
            })
            .min_by(|a, b| (a - y[3]).abs().total_cmp(&(b - y[3]).abs()))?;
        let dense = self.dense(tau, h, y, y_new, k1, k, k7);
        let before = |th: f64| (dense.at_theta(th)[3] - tb) * (y[3] - tb) > 0.0;
        let theta = bisect_predicate(before, 0.0, 1.0, 1e-15);
        (theta > 0.0 && theta < 1.0).then_some(theta)
    }

    #[allow(clippy::too_many_arguments)]
    fn dense(&self, tau: f64, h: f64, y: &Vec8, y_new: &Vec8, k1: &Vec8, k: &[Vec8; 5], k7: &Vec8) -> Dense {
        let [_, k3, k4, k5, k6] = k;
        let mut coeff = [[0.0; 8]; 5];
        for i in 0..8 {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            coeff[0][i] = y[i];
            coeff[1][i] = ydiff;
            coeff[2][i] = bspl;
            coeff[3][i] = ydiff - h * k7[i] - bspl;
            coeff[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Dense { tau, h, coeff }
    }

    /// Finds sign changes of `r'` inside the step and refines them on the
    /// interpolant to ~1e-10 in `τ`.
    fn locate_turning(&mut self, dense: &Dense, y0: &Vec8, y1: &Vec8, skip_start: bool) {
        const NODES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let value = |theta: f64| -> f64 {
            if theta == 0.0 {
                y0[4]
            } else if theta == 1.0 {
                y1[4]
            } else {
                dense.at_theta(theta)[4]
            }
        };
        let tol = (1e-11 / dense.h).max(1e-15);
        let mut prev = (0.0, value(0.0));
        for &theta in &NODES[1..] {
            let cur = (theta, value(theta));
            let (pa, pb) = (prev.1 > 0.0, cur.1 > 0.0);
            if pa != pb {
                let edge = bisect_predicate(|th| (value(th) > 0.0) == pa, prev.0, cur.0, tol);
                let theta_root = (edge + tol * 0.5).min(cur.0);
                let tau = dense.tau + theta_root * dense.h;
                let at = dense.at_theta(theta_root);
                // The launch turning point was recorded before the first step.
                let at_start = skip_start && prev.0 == 0.0;
                if !at_start {
                    self.events.push(TurningEvent {
                        tau,
                        r: at[0],
                        phi: at[1],
                        kind: if pa { TurningKind::Max } else { TurningKind::Min },
                    });
                }
            }
            prev = cur;
        }
    }

    /// Checks for escape or plunge crossings inside the step.
    fn locate_boundary(&self, dense: &Dense, y1: &Vec8) -> Result<Option<(f64, Vec8, Stop)>> {
        const NODES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
        let (esc, min_r) = (self.opts.escape_r, self.opts.min_r);
        let mut lo = 0.0;
        for &theta in &NODES {
            let r = if theta == 1.0 {
                y1[0]
            } else {
                dense.at_theta(theta)[0]
            };
            let stop = if r >= esc {
                Some(Stop::Escaped)
            } else if r <= min_r {
                Some(Stop::Plunged)
            } else {
                None
            };
            if let Some(stop) = stop {
                let inside = |th: f64| {
                    let r = dense.at_theta(th)[0];
                    r < esc && r > min_r
                };
                let edge = bisect_predicate(inside, lo, theta, 1e-14);
                // First point at or past the boundary.
                let mut th = theta;
                let mut step = 1e-14;
                while step < theta - edge {
                    if !inside(edge + step) {
                        th = edge + step;
                        break;
                    }
                    step *= 2.0;
                }
                let y = if th == 1.0 { *y1 } else { dense.at_theta(th) };
                return Ok(Some((dense.tau + th * dense.h, y, stop)));
            }
            lo = theta;
        }
        Ok(None)
    }

    /// Emits grid samples in `(dense.tau, tau_end]` plus extra points that
    /// keep successive samples within `π/8` in `φ`.
    fn emit_samples(&mut self, dense: &Dense, tau_end: f64, terminal: bool) -> Result<()> {
        let interval = self.opts.sample_interval;
        let mut taus: Vec<f64> = Vec::new();
        loop {
            let t = self.tau0 + self.next_grid as f64 * interval;
            if t > tau_end || (terminal && t >= tau_end) {
                break;
            }
            if t > dense.tau {
                taus.push(t);
            }
            self.next_grid += 1;
        }
        let phi_start = dense.at_theta(0.0)[1];
        let phi_end = dense.at_theta(dense.theta_of(tau_end))[1];
        let m = ((phi_end - phi_start).abs() / PHI_SUBDIVIDE).ceil() as usize;
        if m > 1 {
            let span = tau_end - dense.tau;
            taus.extend((1..m).map(|j| dense.tau + span * j as f64 / m as f64));
            taus.sort_by(f64::total_cmp);
        }
        for t in taus {
            let y = dense.at_theta(dense.theta_of(t));
            self.push_sample(t, &y)?;
        }
        if !terminal {
            let last_phi = self.samples.last().map(|s| s.state.phi).unwrap_or(phi_start);
            if (phi_end - last_phi).abs() > PHI_FLUSH {
                let y = dense.at_theta(dense.theta_of(tau_end));
                self.push_sample(tau_end, &y)?;
            }
        }
        Ok(())
    }
}
