use std::path::Path;

use lighttrap_core::{
    classify, field_eval, integrate, orbit_summary, Classification, Error, IndexField, Termination,
    Trajectory,
};
use serde::Serialize;

use crate::config::{load, output_path, to_json, write_all, SceneConfig};
use crate::error::{CliError, CliResult};
use crate::svg::{extent, Panel, Svg};

/// Orbit summary as written by `trace`. Turning statistics are absent when
/// the ray turned fewer than three times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub classification: Option<Classification>,
    pub termination: Termination,
    pub b: f64,
    pub r_min_obs: Option<f64>,
    pub r_max_obs: Option<f64>,
    pub w_o: Option<f64>,
    #[serde(rename = "T_r")]
    pub t_r: Option<f64>,
    #[serde(rename = "delta_phi_per_T_r")]
    pub delta_phi_per_t_r: Option<f64>,
    pub periodicity_residual: Option<f64>,
    pub turning_events: usize,
    pub max_null_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

pub fn summarize(field: &IndexField, traj: &Trajectory) -> CliResult<TraceSummary> {
    if traj.termination == Termination::StepFailure {
        return Err(CliError::Numerical(
            traj.failure.clone().unwrap_or_else(|| "step failure".into()),
        ));
    }
    let first = traj.first();
    let b = first.conserved.impact_invariant();
    let mut out = TraceSummary {
        classification: None,
        termination: traj.termination,
        b,
        r_min_obs: None,
        r_max_obs: None,
        w_o: None,
        t_r: None,
        delta_phi_per_t_r: None,
        periodicity_residual: None,
        turning_events: traj.events.len(),
        max_null_residual: traj.max_relative_null_residual(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    };
    match orbit_summary(traj) {
        Ok(s) => {
            out.classification = Some(s.classification);
            out.r_min_obs = Some(s.r_min_obs);
            out.r_max_obs = Some(s.r_max_obs);
            out.w_o = Some(s.w_o);
            out.t_r = Some(s.t_r).filter(|v| v.is_finite());
            out.delta_phi_per_t_r = Some(s.delta_phi_per_t_r).filter(|v| v.is_finite());
            out.periodicity_residual = Some(s.periodicity_residual).filter(|v| v.is_finite());
        }
        Err(Error::InsufficientData { .. }) => {
            out.classification = match traj.termination {
                Termination::Escaped => Some(Classification::Escaping),
                Termination::PlungedBelowMinR => Some(Classification::Plunging),
                _ if field.is_radial_static() => classify(field, b, first.state.r).ok(),
                _ => None,
            };
        }
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: SceneConfig = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let launch = cfg.launch.state(&cfg.field)?;
    let opts = cfg.integrator.options()?;
    let traj = integrate(&launch, &cfg.field, &opts)?;
    let summary = summarize(&cfg.field, &traj)?;

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)
        .map_err(|e| CliError::Config(format!("trajectory: {e}")))?;
    let o = &cfg.outputs;
    write_all(&[
        (output_path(out, &o.trajectory_csv, "trajectory.csv"), csv),
        (
            output_path(out, &o.summary_json, "summary.json"),
            to_json(&summary),
        ),
        (
            output_path(out, &o.plot_svg, "trace.svg"),
            plot(&cfg.field, &traj).into_bytes(),
        ),
    ])?;
    println!(
        "trace: {} after {} turning points, tau = {}",
        summary
            .classification
            .map(|c| c.as_str())
            .unwrap_or("unclassified"),
        summary.turning_events,
        traj.last().state.tau
    );
    Ok(())
}

/// Number of shaded index rings behind the path.
pub const INDEX_RINGS: usize = 16;

/// Path in the plane over the index map, with `r'(τ)` and `φ'(τ)` panels.
pub fn plot(field: &IndexField, traj: &Trajectory) -> String {
    let mut svg = Svg::new(960.0, 500.0);
    let r_max = traj.samples.iter().map(|s| s.state.r).fold(0.0, f64::max);
    let half = 1.1 * r_max.max(1e-6);
    let xy = Panel::square((70.0, 50.0, 380.0, 380.0), half);

    let ring_n: Vec<f64> = (0..INDEX_RINGS)
        .map(|i| {
            let r = half * (INDEX_RINGS - i) as f64 / INDEX_RINGS as f64;
            field_eval(field, r, 0.0, 0.0, 0.0)
                .map(|s| s.n)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let (n_lo, n_hi) = extent(ring_n.iter().copied());
    let (cx, cy) = xy.map(0.0, 0.0);
    svg.raw(r#"<g id="index-map">"#);
    for (i, n) in ring_n.iter().enumerate() {
        let r = half * (INDEX_RINGS - i) as f64 / INDEX_RINGS as f64;
        let level = if n_hi > n_lo {
            (n - n_lo) / (n_hi - n_lo)
        } else {
            0.0
        };
        svg.raw(&format!(
            r#"<circle class="ring" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="rgb(40,90,200)" fill-opacity="{:.3}"/>"#,
            r * xy.scale(),
            0.05 + 0.5 * level
        ));
    }
    svg.raw("</g>");
    let path: Vec<(f64, f64)> = traj.samples.iter().map(|s| s.state.xy()).collect();
    xy.polyline(&mut svg, "path", "crimson", &path);
    xy.frame(&mut svg, "ray path over n(r)", "x", "y");

    let tau: Vec<f64> = traj.samples.iter().map(|s| s.state.tau).collect();
    let t_range = extent(tau.iter().copied());
    let series = [
        (
            "r'(tau)",
            "dr",
            traj.samples.iter().map(|s| s.state.dr).collect::<Vec<_>>(),
            50.0,
        ),
        (
            "phi'(tau)",
            "dphi",
            traj.samples.iter().map(|s| s.state.dphi).collect(),
            290.0,
        ),
    ];
    for (title, class, values, top) in series {
        let panel = Panel::new(
            (560.0, top, 360.0, 160.0),
            t_range,
            extent(values.iter().copied()),
        );
        let pts: Vec<(f64, f64)> = tau.iter().copied().zip(values).collect();
        panel.polyline(&mut svg, class, "black", &pts);
        panel.frame(&mut svg, title, "tau", "");
    }
    svg.finish()
}
