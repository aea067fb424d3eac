//! Trap robustness under localized index perturbations.
//!
//! A launch state trapped on a base field is integrated on the base and on a
//! perturbed copy over the same horizon, and the two orbit summaries are
//! compared. An orbit counts as "modified entirely" when its class changes
//! or its width moves by more than [`MODIFIED_WIDTH_FRACTION`].

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::RayState;
use crate::error::{Error, Result};
use crate::field::{make_bump_perturbed, AzimuthalWindow, BumpPerturbation, IndexField};
use crate::integrator::{integrate, integrate_periods, IntegrateOptions, Termination, Trajectory};
use crate::orbit::{circular_orbit_radius, orbit_summary, Classification, OrbitSummary};

/// Base radial periods covered by a comparison.
pub const DEVIATION_PERIODS: usize = 20;
/// Relative width change above which an orbit counts as modified entirely.
pub const MODIFIED_WIDTH_FRACTION: f64 = 0.5;
/// Bump width in units of the base length scale when the shape leaves it open.
pub const DEFAULT_BUMP_WIDTH_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationOptions {
    pub periods: usize,
    pub integrator: IntegrateOptions,
}

impl DeviationOptions {
    pub fn for_launch(field: &IndexField, r_launch: f64) -> Self {
        DeviationOptions {
            periods: DEVIATION_PERIODS,
            integrator: IntegrateOptions::for_launch(field, r_launch).with_sample_interval(1.0),
        }
    }
}

/// Perturbed minus base. Width and radii deltas are absent when the
/// perturbed ray left before turning three times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub delta_r_min: Option<f64>,
    pub delta_r_max: Option<f64>,
    pub delta_w_o: Option<f64>,
    pub base_w_o: f64,
    pub base_classification: Classification,
    pub perturbed_classification: Classification,
    pub classification_changed: bool,
    pub escape_tau: Option<f64>,
}

impl DeviationReport {
    pub fn relative_width_change(&self) -> Option<f64> {
        Some(self.delta_w_o? / self.base_w_o)
    }

    pub fn modified_entirely(&self) -> bool {
        self.classification_changed
            || self
                .relative_width_change()
                .is_some_and(|x| x.abs() > MODIFIED_WIDTH_FRACTION)
    }
}

struct BaseRun {
    summary: OrbitSummary,
    horizon: f64,
}

fn run_base(base: &IndexField, launch: &RayState, opts: &DeviationOptions) -> Result<BaseRun> {
    let traj = integrate_periods(launch, base, &opts.integrator, opts.periods)?;
    let summary = orbit_summary(&traj).map_err(|e| match e {
        Error::InsufficientData { .. } => Error::Domain("launch is not trapped on the base field".into()),
        other => other,
    })?;
    if !matches!(
        summary.classification,
        Classification::Trapped | Classification::Circular
    ) {
        return Err(Error::Domain(format!(
            "launch is not trapped on the base field ({})",
            summary.classification.as_str()
        )));
    }
    Ok(BaseRun {
        summary,
        horizon: traj.last().state.tau,
    })
}

fn left_domain(traj: &Trajectory) -> Option<f64> {
    match traj.termination {
        Termination::Escaped | Termination::PlungedBelowMinR => Some(traj.last().state.tau),
        _ => None,
    }
}

fn compare(
    base: &BaseRun,
    perturbed: &IndexField,
    launch: &RayState,
    opts: &DeviationOptions,
) -> Result<DeviationReport> {
    let popts = opts.integrator.with_max_tau(base.horizon);
    let traj = integrate(launch, perturbed, &popts)?;
    let escape_tau = left_domain(&traj);
    let b = &base.summary;
    let (pclass, deltas) = match orbit_summary(&traj) {
        Ok(p) => (
            p.classification,
            Some((
                p.r_min_obs - b.r_min_obs,
                p.r_max_obs - b.r_max_obs,
                p.w_o - b.w_o,
            )),
        ),
        Err(Error::InsufficientData { found }) => match traj.termination {
            Termination::Escaped => (Classification::Escaping, None),
            Termination::PlungedBelowMinR => (Classification::Plunging, None),
            _ => return Err(Error::InsufficientData { found }),
        },
        Err(e) => return Err(e),
    };
    // Circular and trapped are the same regime; only leaving it counts.
    let bound = |c: Classification| matches!(c, Classification::Trapped | Classification::Circular);
    Ok(DeviationReport {
        delta_r_min: deltas.map(|d| d.0),
        delta_r_max: deltas.map(|d| d.1),
        delta_w_o: deltas.map(|d| d.2),
        base_w_o: b.w_o,
        base_classification: b.classification,
        perturbed_classification: pclass,
        classification_changed: bound(b.classification) != bound(pclass),
        escape_tau,
    })
}

/// Integrates `launch` on both fields over at least `opts.periods` base
/// radial periods and reports the change in turning statistics. The launch
/// is null-normalized on each field separately, keeping its direction.
pub fn orbit_deviation(
    base: &IndexField,
    perturbed: &IndexField,
    launch: &RayState,
    opts: &DeviationOptions,
) -> Result<DeviationReport> {
    let run = run_base(base, launch, opts)?;
    compare(&run, perturbed, launch, opts)
}

/// Bump template for a scan; the amplitude comes from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanShape {
    /// Bump center; defaults to the circular-orbit radius of the base.
    #[serde(default)]
    pub r_p: Option<f64>,
    /// Bump width; defaults to `0.2` base length scales.
    #[serde(default)]
    pub s_p: Option<f64>,
    /// Sign applied to every amplitude; `-1` digs a ring depression.
    #[serde(default = "default_polarity")]
    pub polarity: f64,
    /// Angular width of a localized bump whose center is drawn from the seed.
    #[serde(default)]
    pub azimuthal_width: Option<f64>,
}

fn default_polarity() -> f64 {
    -1.0
}

impl Default for ScanShape {
    fn default() -> Self {
        ScanShape {
            r_p: None,
            s_p: None,
            polarity: default_polarity(),
            azimuthal_width: None,
        }
    }
}

impl ScanShape {
    /// Concrete bump of unit amplitude for `base`.
    pub fn resolve(&self, base: &IndexField, seed: u64) -> Result<BumpPerturbation> {
        if !(self.polarity == 1.0 || self.polarity == -1.0) {
            return Err(Error::Domain(format!(
                "polarity must be +1 or -1, got {}",
                self.polarity
            )));
        }
        let r_p = match self.r_p {
            Some(r) => r,
            None => circular_orbit_radius(base)?,
        };
        let s_p = self
            .s_p
            .unwrap_or(DEFAULT_BUMP_WIDTH_FRACTION * base.length_scale());
        let azimuth = self.azimuthal_width.map(|width| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            AzimuthalWindow {
                phi_p: rng.gen_range(0.0..TAU),
                width,
            }
        });
        Ok(BumpPerturbation {
            delta_n: self.polarity,
            r_p,
            s_p,
            azimuth,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub delta_n: f64,
    pub report: Option<DeviationReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub bump: BumpPerturbation,
    pub entries: Vec<ScanEntry>,
    /// Smallest amplitude whose ray leaves the bound regime.
    pub classification_threshold: Option<f64>,
    /// Smallest amplitude whose orbit is modified entirely.
    pub modification_threshold: Option<f64>,
}

pub const SCAN_CSV_HEADER: &str =
    "delta_n,delta_r_min,delta_r_max,delta_w_o,classification_changed,escape_tau";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ScanResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SCAN_CSV_HEADER}")?;
        for e in &self.entries {
            match &e.report {
                Some(r) => writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    e.delta_n,
                    cell(r.delta_r_min),
                    cell(r.delta_r_max),
                    cell(r.delta_w_o),
                    r.classification_changed,
                    cell(r.escape_tau)
                )?,
                None => writeln!(out, "{},,,,,", e.delta_n)?,
            }
        }
        Ok(())
    }
}

/// Minimum number of amplitudes in a scan.
pub const MIN_SCAN_AMPLITUDES: usize = 3;

/// Runs [`orbit_deviation`] for every amplitude of `amplitudes` in parallel.
/// The table keeps the grid order; failures are recorded per entry.
pub fn threshold_scan(
    base: &IndexField,
    launch: &RayState,
    amplitudes: &[f64],
    shape: &ScanShape,
    seed: u64,
    opts: &DeviationOptions,
) -> Result<ScanResult> {
    if amplitudes.len() < MIN_SCAN_AMPLITUDES {
        return Err(Error::Domain(format!(
            "a scan needs at least {MIN_SCAN_AMPLITUDES} amplitudes, got {}",
            amplitudes.len()
        )));
    }
    if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::Domain("amplitudes must be finite and >= 0".into()));
    }
    if amplitudes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain(
            "amplitudes must be sorted in increasing order".into(),
        ));
    }
    let bump = shape.resolve(base, seed)?;
    let run = run_base(base, launch, opts)?;

    let entries: Vec<ScanEntry> = amplitudes
        .par_iter()
        .map(|&a| {
            let outcome = make_bump_perturbed(
                base,
                BumpPerturbation {
                    delta_n: bump.delta_n * a,
                    ..bump
                },
            )
            .and_then(|field| compare(&run, &field, launch, opts));
            match outcome {
                Ok(report) => ScanEntry {
                    delta_n: a,
                    report: Some(report),
                    error: None,
                },
                Err(e) => ScanEntry {
                    delta_n: a,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let first = |pred: &dyn Fn(&DeviationReport) -> bool| {
        entries
            .iter()
            .find(|e| e.report.as_ref().is_some_and(pred))
            .map(|e| e.delta_n)
    };
    let classification_threshold = first(&|r| r.classification_changed);
    let modification_threshold = first(&|r| r.modified_entirely());
    Ok(ScanResult {
        bump,
        entries,
        classification_threshold,
        modification_threshold,
    })
}
