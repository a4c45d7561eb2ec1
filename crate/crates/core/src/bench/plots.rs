//! Static SVG charts of a report: grouped medians as bars, SNR sweeps as lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::vocal_tract::Param;

use super::report::{ExperimentReport, ReportRow};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Groups along the x axis, each holding one bar per series.
struct BarChart {
    title: String,
    y_label: String,
    groups: Vec<String>,
    series: Vec<String>,
    /// `values[group][series]`
    values: Vec<Vec<Option<f64>>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn y_axis(out: &mut String, y_max: f64) {
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
        WIDTH - MARGIN,
        y = HEIGHT - MARGIN
    );
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = HEIGHT - MARGIN - plot_h * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 4.0,
            y + 4.0,
            v
        );
    }
}

fn legend(out: &mut String, series: &[String]) {
    for (i, s) in series.iter().enumerate() {
        let x = MARGIN + 10.0 + 110.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="30" width="10" height="10" fill="{}"/><text x="{}" y="39">{}</text>"#,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            escape(s)
        );
    }
}

impl BarChart {
    fn to_svg(&self) -> String {
        let mut out = String::new();
        header(&mut out, &self.title, &self.y_label);
        let y_max = self
            .values
            .iter()
            .flatten()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
            .max(1e-12);
        y_axis(&mut out, y_max);
        legend(&mut out, &self.series);
        let plot_w = WIDTH - 2.0 * MARGIN;
        let plot_h = HEIGHT - 2.0 * MARGIN;
        let group_w = plot_w / self.groups.len().max(1) as f64;
        let bar_w = 0.8 * group_w / self.series.len().max(1) as f64;
        for (g, name) in self.groups.iter().enumerate() {
            let x0 = MARGIN + g as f64 * group_w + 0.1 * group_w;
            let _ = writeln!(out, r#"<g class="group" data-name="{}">"#, escape(name));
            for (s, v) in self.values[g].iter().enumerate() {
                if let Some(v) = v {
                    let h = plot_h * v / y_max;
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}</title></rect>"#,
                        x0 + s as f64 * bar_w,
                        HEIGHT - MARGIN - h,
                        bar_w,
                        h,
                        PALETTE[s % PALETTE.len()],
                        v
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text></g>"#,
                x0 + 0.4 * group_w,
                HEIGHT - MARGIN + 16.0,
                escape(name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Medians of `value(row)` keyed by `(group, series)`, keeping first-seen order.
fn grouped<G, S, V>(rows: &[&ReportRow], group: G, series: S, value: V, title: &str, y_label: &str) -> BarChart
where
    G: Fn(&ReportRow) -> Vec<String>,
    S: Fn(&ReportRow) -> String,
    V: Fn(&ReportRow, usize) -> Option<f64>,
{
    let mut groups: Vec<String> = Vec::new();
    let mut series_names: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let s = series(r);
        let si = series_names.iter().position(|x| *x == s).unwrap_or_else(|| {
            series_names.push(s.clone());
            series_names.len() - 1
        });
        for (k, g) in group(r).into_iter().enumerate() {
            let gi = groups.iter().position(|x| *x == g).unwrap_or_else(|| {
                groups.push(g.clone());
                groups.len() - 1
            });
            if let Some(v) = value(r, k).filter(|v| v.is_finite()) {
                cells.entry((gi, si)).or_default().push(v);
            }
        }
    }
    let values = (0..groups.len())
        .map(|g| {
            (0..series_names.len())
                .map(|s| cells.get_mut(&(g, s)).and_then(|v| median(v)))
                .collect()
        })
        .collect();
    BarChart {
        title: title.into(),
        y_label: y_label.into(),
        groups,
        series: series_names,
        values,
    }
}

fn snr_chart(rows: &[&ReportRow]) -> Option<String> {
    let mut by_opt: BTreeMap<String, BTreeMap<i64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        if let (Some(snr), Some(m)) = (r.snr_db(), r.audio_mae) {
            by_opt
                .entry(r.optimizer.clone())
                .or_default()
                .entry((snr * 1000.0).round() as i64)
                .or_default()
                .push(m);
        }
    }
    if by_opt.is_empty() {
        return None;
    }
    let lines: Vec<(String, Vec<(f64, f64)>)> = by_opt
        .into_iter()
        .map(|(o, pts)| {
            let pts = pts
                .into_iter()
                .filter_map(|(k, mut v)| median(&mut v).map(|m| (k as f64 / 1000.0, m)))
                .collect();
            (o, pts)
        })
        .collect();
    let all = lines.iter().flat_map(|(_, p)| p.iter());
    let (x_min, x_max, y_max) = all.fold((f64::INFINITY, f64::NEG_INFINITY, 1e-12f64), |(a, b, c), (x, y)| {
        (a.min(*x), b.max(*x), c.max(*y))
    });
    let span = (x_max - x_min).max(1e-9);
    let (plot_w, plot_h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, "Audio MAE against SNR", "median audio MAE");
    y_axis(&mut out, y_max);
    let names: Vec<String> = lines.iter().map(|(o, _)| o.clone()).collect();
    legend(&mut out, &names);
    for (i, (_, pts)) in lines.iter().enumerate() {
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| {
                format!(
                    "{:.2},{:.2}",
                    MARGIN + plot_w * (x - x_min) / span,
                    HEIGHT - MARGIN - plot_h * y / y_max
                )
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" fill="none" stroke-width="2" stroke="{}" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            path.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">SNR (dB), {x_min} to {x_max}</text>"#,
        WIDTH / 2.0,
        HEIGHT - MARGIN + 30.0
    );
    out.push_str("</svg>\n");
    Some(out)
}

fn param_groups(_: &ReportRow) -> Vec<String> {
    Param::ALL.iter().map(|p| p.short_label().to_owned()).collect()
}

fn param_value(r: &ReportRow, k: usize) -> Option<f64> {
    r.errors.map(|e| e[k])
}

/// Writes the charts that have data and returns their paths.
pub fn render_plots(report: &ExperimentReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(Error::InvalidConfig("report has no rows".into()));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| !r.failed()).collect();
    let with_truth: Vec<&ReportRow> = rows.iter().copied().filter(|r| r.errors.is_some()).collect();

    let mut charts: Vec<(&str, String)> = Vec::new();
    if !with_truth.is_empty() {
        charts.push((
            "errors_by_optimizer.svg",
            grouped(
                &with_truth,
                param_groups,
                |r| r.optimizer.clone(),
                param_value,
                "Parameter error by optimizer",
                "median normalized error",
            )
            .to_svg(),
        ));
        charts.push((
            "errors_by_representation.svg",
            grouped(
                &with_truth,
                param_groups,
                |r| r.representation.clone(),
                param_value,
                "Parameter error by representation",
                "median normalized error",
            )
            .to_svg(),
        ));
    }
    let clean: Vec<&ReportRow> = rows.iter().copied().filter(|r| r.snr_db().is_none()).collect();
    charts.push((
        "audio_mae.svg",
        grouped(
            &clean,
            |r| vec![r.optimizer.clone()],
            |r| r.representation.clone(),
            |r, _| r.audio_mae,
            "Audio MAE by optimizer",
            "median audio MAE",
        )
        .to_svg(),
    ));
    charts.push((
        "timing.svg",
        grouped(
            &rows,
            |r| vec![r.optimizer.clone()],
            |r| r.representation.clone(),
            |r, _| Some(r.elapsed_s),
            "Optimizer wall time",
            "median seconds",
        )
        .to_svg(),
    ));
    if let Some(svg) = snr_chart(&rows) {
        charts.push(("snr.svg", svg));
    }

    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = dir.join(name);
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
