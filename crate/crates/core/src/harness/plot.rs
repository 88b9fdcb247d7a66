//! Static SVG panels: metrics against iterations and function evaluations,
//! and contour/trajectory overlays for two-dimensional problems.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::artifact::RunArtifact;
use crate::error::{Error, Result};
use crate::solver::IterationRecord;

type Series = (String, Vec<(f64, f64)>);

/// One metric: file stem, axis label, extractor and whether to plot log10.
struct Metric {
    stem: &'static str,
    label: &'static str,
    value: fn(&IterationRecord) -> f64,
    log: bool,
}

const METRICS: [Metric; 4] = [
    Metric {
        stem: "f",
        label: "f(x_k)",
        value: |r| r.f_true,
        log: false,
    },
    Metric {
        stem: "grad_norm",
        label: "log10 ||grad f(x_k)||",
        value: |r| r.grad_true_norm,
        log: true,
    },
    Metric {
        stem: "lambda_min",
        label: "lambda_min(hess f(x_k))",
        value: |r| r.lambda_true,
        log: false,
    },
    Metric {
        stem: "step_size",
        label: "log10 alpha_k",
        value: |r| r.alpha_k,
        log: true,
    },
];

fn metric_series(records: &[IterationRecord], m: &Metric, by_fevals: bool) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| {
            let x = if by_fevals { r.fevals as f64 } else { r.k as f64 };
            let v = (m.value)(r);
            let y = if m.log { v.log10() } else { v };
            y.is_finite().then_some((x, y))
        })
        .collect()
}

fn bounds(series: &[Series]) -> Option<((f64, f64), (f64, f64))> {
    let pts = series.iter().flat_map(|s| s.1.iter());
    let mut b: Option<((f64, f64), (f64, f64))> = None;
    for &(x, y) in pts {
        let e = b.get_or_insert(((x, x), (y, y)));
        e.0 = (e.0 .0.min(x), e.0 .1.max(x));
        e.1 = (e.1 .0.min(y), e.1 .1.max(y));
    }
    b.map(|((x0, x1), (y0, y1))| {
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
        (pad(x0, x1), pad(y0, y1))
    })
}

fn draw_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Trace(format!("plot rendering failed: {e:?}"))
}

fn line_panel(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 420)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let ((x0, x1), (y0, y1)) = bounds(series).unwrap_or(((0.0, 1.0), (0.0, 1.0)));
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc(x_label)
            .y_desc(y_label)
            .draw()
            .map_err(draw_err)?;
        for (i, (name, pts)) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(1)))
                .map_err(draw_err)?
                .label(name.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        if series.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(draw_err)?;
        }
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

fn contour_panel(art: &RunArtifact, upto: usize) -> Result<String> {
    let problem = art.config.problem_spec()?;
    let path: Vec<(f64, f64)> = std::iter::once(&art.records[0].x)
        .chain(art.records.iter().take(upto).map(|r| &r.x_next))
        .map(|x| (x[0], x[1]))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (-2.0_f64, 2.0_f64, -1.0_f64, 3.0_f64);
    for &(x, y) in &path {
        if x.is_finite() && y.is_finite() {
            x0 = x0.min(x - 0.1);
            x1 = x1.max(x + 0.1);
            y0 = y0.min(y - 0.1);
            y1 = y1.max(y + 0.1);
        }
    }
    const CELLS: usize = 80;
    let (dx, dy) = ((x1 - x0) / CELLS as f64, (y1 - y0) / CELLS as f64);
    let mut grid = Vec::with_capacity(CELLS * CELLS);
    for i in 0..CELLS {
        for j in 0..CELLS {
            let cx = x0 + (i as f64 + 0.5) * dx;
            let cy = y0 + (j as f64 + 0.5) * dy;
            grid.push((i, j, problem.eval_f(&[cx, cy])));
        }
    }
    let fmin = grid.iter().map(|g| g.2).fold(f64::INFINITY, f64::min);
    let level = |f: f64| (f - fmin + 1e-3).log10();
    let (lmin, lmax) = grid
        .iter()
        .map(|g| level(g.2))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    const BANDS: f64 = 16.0;

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (560, 520)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let title = format!(
            "{} {} seed {}: first {} iterations",
            problem.name, art.summary.method, art.summary.seed, upto
        );
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 16))
            .margin(12)
            .x_label_area_size(32)
            .y_label_area_size(40)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc("x1")
            .y_desc("x2")
            .draw()
            .map_err(draw_err)?;
        chart
            .draw_series(grid.iter().map(|&(i, j, f)| {
                let t = ((level(f) - lmin) / (lmax - lmin).max(1e-12) * BANDS).floor() / BANDS;
                let shade = (255.0 - 150.0 * t) as u8;
                let cx = x0 + i as f64 * dx;
                let cy = y0 + j as f64 * dy;
                Rectangle::new([(cx, cy), (cx + dx, cy + dy)], RGBColor(shade, shade, 255).filled())
            }))
            .map_err(draw_err)?;
        chart
            .draw_series(LineSeries::new(path.iter().copied(), RED.stroke_width(1)))
            .map_err(draw_err)?;
        if let (Some(&s), Some(&e)) = (path.first(), path.last()) {
            chart
                .draw_series([Circle::new(s, 4, BLACK.filled()), Circle::new(e, 4, RED.filled())])
                .map_err(draw_err)?;
        }
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

fn run_label(a: &RunArtifact) -> String {
    format!("{} seed {}", a.summary.method, a.summary.seed)
}

#[derive(Clone, Debug, Default)]
pub struct PlotReport {
    pub files: Vec<PathBuf>,
    pub notices: Vec<String>,
}

/// Renders every panel in memory first, then writes them; a bad artifact
/// therefore leaves no partial output.
pub fn render_all(root: &Path, artifacts: &[RunArtifact]) -> Result<PlotReport> {
    for a in artifacts {
        if a.records.is_empty() {
            return Err(Error::Trace(format!("{}: empty trace", a.dir.display())));
        }
    }
    let mut report = PlotReport::default();
    let mut pending: Vec<(PathBuf, String)> = Vec::new();
    for a in artifacts {
        let dir = a.dir.join("plots");
        for m in &METRICS {
            for (by_fevals, axis) in [(false, "iterations"), (true, "fevals")] {
                let s = vec![(run_label(a), metric_series(&a.records, m, by_fevals))];
                let svg = line_panel(&format!("{} vs {axis}", m.stem), axis, m.label, &s)?;
                pending.push((dir.join(format!("{}_vs_{axis}.svg", m.stem)), svg));
            }
        }
        if a.records[0].x.len() == 2 {
            let n = a.records.len();
            let mut snaps: Vec<usize> = a
                .config
                .report
                .iteration_checkpoints
                .iter()
                .copied()
                .filter(|&c| c < n)
                .collect();
            snaps.push(n);
            for s in snaps {
                pending.push((dir.join(format!("contour_{s}.svg")), contour_panel(a, s)?));
            }
        } else {
            report.notices.push(format!(
                "{}: dimension {} > 2, contour panels skipped",
                a.dir.display(),
                a.records[0].x.len()
            ));
        }
    }
    if artifacts.len() > 1 {
        let dir = root.join("plots");
        for m in &METRICS {
            for (by_fevals, axis) in [(false, "iterations"), (true, "fevals")] {
                let s: Vec<Series> = artifacts
                    .iter()
                    .map(|a| (run_label(a), metric_series(&a.records, m, by_fevals)))
                    .collect();
                let svg = line_panel(&format!("{} vs {axis}", m.stem), axis, m.label, &s)?;
                pending.push((dir.join(format!("overlay_{}_vs_{axis}.svg", m.stem)), svg));
            }
        }
    }
    for (path, svg) in pending {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        report.files.push(path);
    }
    Ok(report)
}
