use std::path::Path;

use lighttrap_core::{threshold_scan, DeviationOptions, ScanResult};

use crate::config::{load, output_path, to_json, write_all, PerturbConfig};
use crate::error::{CliError, CliResult};
use crate::svg::{extent, Panel, Svg};

pub fn run(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: PerturbConfig = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let launch = cfg.launch.state(&cfg.field)?;
    let opts = DeviationOptions {
        integrator: cfg.integrator.options()?,
        ..DeviationOptions::for_launch(&cfg.field, launch.r)
    };
    let scan = threshold_scan(&cfg.field, &launch, &cfg.amplitudes, &cfg.shape, cfg.seed, &opts)?;

    let mut csv = Vec::new();
    scan.write_csv(&mut csv)
        .map_err(|e| CliError::Config(format!("scan: {e}")))?;
    let o = &cfg.outputs;
    write_all(&[
        (output_path(out, &o.scan_csv, "perturb.csv"), csv),
        (output_path(out, &o.scan_json, "perturb.json"), to_json(&scan)),
        (
            output_path(out, &o.plot_svg, "perturb.svg"),
            plot(&scan).into_bytes(),
        ),
    ])?;
    let show = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
    println!(
        "perturb: {} amplitudes, modified entirely from {}, class change from {}",
        scan.entries.len(),
        show(scan.modification_threshold),
        show(scan.classification_threshold)
    );
    Ok(())
}

/// Relative width change against amplitude; a dashed line marks the first
/// amplitude that modifies the orbit entirely.
fn plot(scan: &ScanResult) -> String {
    let pts: Vec<(f64, f64)> = scan
        .entries
        .iter()
        .filter_map(|e| Some((e.delta_n, e.report?.relative_width_change()?.abs())))
        .collect();
    let mut svg = Svg::new(560.0, 420.0);
    let x = extent(scan.entries.iter().map(|e| e.delta_n));
    let (lo, hi) = extent(pts.iter().map(|p| p.1));
    let panel = Panel::new((80.0, 50.0, 440.0, 290.0), x, (lo.min(0.0), hi.max(0.5)));
    panel.polyline(&mut svg, "deviation", "darkorange", &pts);
    panel.markers(&mut svg, "deviation", "darkorange", &pts);
    if let Some(t) = scan.modification_threshold {
        let (a, top) = panel.map(t, hi.max(0.5));
        let (_, bottom) = panel.map(t, lo.min(0.0));
        svg.raw(&format!(
            r#"<line class="threshold" x1="{a:.2}" y1="{top:.2}" x2="{a:.2}" y2="{bottom:.2}" stroke="gray" stroke-dasharray="4 3"/>"#
        ));
    }
    panel.frame(&mut svg, "orbit width change", "delta n", "|dw_o| / w_o");
    svg.finish()
}
