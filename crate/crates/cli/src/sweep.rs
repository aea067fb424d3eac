use std::fmt::Write as _;
use std::path::Path;

use lighttrap_core::{
    integrate, launch_tangential, trapped_band, turning_radii, Classification, Error, GaussianRadialField,
    IndexField, IntegrateOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load, output_path, write_all, SweepConfig, SweepParameter};
use crate::error::{CliError, CliResult};
use crate::svg::{extent, Panel, Svg};
use crate::trace::summarize;

pub const SWEEP_CSV_HEADER: &str = "n_A,n_C,sigma,b,r_min,r_max,w_o,classification";

/// One grid point. Rows without a bound launch (no trap, or `b` outside the
/// band) carry only the profile and `Escaping`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_a: f64,
    pub n_c: f64,
    pub sigma: f64,
    pub b: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub w_o: Option<f64>,
    pub classification: Option<Classification>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SWEEP_CSV_HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n_a,
            r.n_c,
            r.sigma,
            cell(r.b),
            cell(r.r_min),
            cell(r.r_max),
            cell(r.w_o),
            r.classification.map(|c| c.as_str()).unwrap_or("")
        );
    }
    out
}

fn row(g: GaussianRadialField, b: Option<f64>, opts: &IntegrateOptions) -> CliResult<SweepRow> {
    let field = IndexField::Gaussian(g);
    let unbound = SweepRow {
        n_a: g.n_a(),
        n_c: g.n_c(),
        sigma: g.sigma(),
        b,
        r_min: None,
        r_max: None,
        w_o: None,
        classification: Some(Classification::Escaping),
    };
    let b = match b {
        Some(b) => b,
        None => match trapped_band(&field) {
            Ok((lo, hi)) => 0.5 * (lo + hi),
            Err(Error::NotFound { .. }) => return Ok(unbound),
            Err(e) => return Err(e.into()),
        },
    };
    let r0 = match turning_radii(&field, b) {
        Ok((r0, _)) => r0,
        Err(Error::OutOfBand { .. } | Error::NotFound { .. }) => {
            return Ok(SweepRow {
                b: Some(b),
                ..unbound
            })
        }
        Err(e) => return Err(e.into()),
    };
    let launch = launch_tangential(&field, r0, 1.0)?;
    let s = summarize(&field, &integrate(&launch, &field, opts)?)?;
    Ok(SweepRow {
        b: Some(s.b),
        r_min: s.r_min_obs,
        r_max: s.r_max_obs,
        w_o: s.w_o,
        classification: s.classification,
        ..unbound
    })
}

pub fn compute(cfg: &SweepConfig) -> CliResult<Vec<SweepRow>> {
    if cfg.values.is_empty() {
        return Err(CliError::Config("values: the sweep grid is empty".into()));
    }
    let opts = cfg.integrator.options()?;
    let p = cfg.profile;
    let points: Vec<(GaussianRadialField, Option<f64>)> = cfg
        .values
        .iter()
        .map(|&v| {
            let (n_c, sigma, b) = match cfg.parameter {
                SweepParameter::NC => (v, p.sigma, None),
                SweepParameter::Sigma => (p.n_c, v, None),
                SweepParameter::B => (p.n_c, p.sigma, Some(v)),
            };
            GaussianRadialField::new(p.n_a, n_c, sigma)
                .map(|g| (g, b))
                .map_err(|e| CliError::Config(format!("values: {v}: {e}")))
        })
        .collect::<CliResult<_>>()?;
    points.par_iter().map(|&(g, b)| row(g, b, &opts)).collect()
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: SweepConfig = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let rows = compute(&cfg)?;
    let o = &cfg.outputs;
    write_all(&[
        (
            output_path(out, &o.table_csv, "sweep.csv"),
            to_csv(&rows).into_bytes(),
        ),
        (
            output_path(out, &o.plot_svg, "sweep.svg"),
            plot(&cfg, &rows).into_bytes(),
        ),
    ])?;
    let bound = rows
        .iter()
        .filter(|r| {
            matches!(
                r.classification,
                Some(Classification::Trapped | Classification::Circular)
            )
        })
        .count();
    println!("sweep: {} rows, {bound} bound", rows.len());
    Ok(())
}

fn plot(cfg: &SweepConfig, rows: &[SweepRow]) -> String {
    let name = match cfg.parameter {
        SweepParameter::NC => "n_C",
        SweepParameter::Sigma => "sigma",
        SweepParameter::B => "b",
    };
    let mut svg = Svg::new(900.0, 420.0);
    let x = extent(cfg.values.iter().copied());
    type Column = fn(&SweepRow) -> Option<f64>;
    let series: [(&str, &str, Column, f64); 2] = [
        ("r_min", "r-min", |r| r.r_min, 80.0),
        ("w_o", "w-o", |r| r.w_o, 520.0),
    ];
    for (title, class, get, left) in series {
        let pts: Vec<(f64, f64)> = cfg
            .values
            .iter()
            .zip(rows)
            .filter_map(|(&v, r)| get(r).map(|y| (v, y)))
            .collect();
        let panel = Panel::new((left, 50.0, 330.0, 290.0), x, extent(pts.iter().map(|p| p.1)));
        panel.polyline(&mut svg, class, "steelblue", &pts);
        panel.markers(&mut svg, class, "steelblue", &pts);
        panel.frame(&mut svg, &format!("{title} vs {name}"), name, title);
    }
    svg.finish()
}
