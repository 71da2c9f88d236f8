//! SVG charts computed only from run rows.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{bail, Result};
use clap::ValueEnum;

use crate::rows::{mean, median, RunRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Mean makespan per instance group, one bar series per method.
    MakespanBars,
    /// Median `(ALG - EquiD) / EquiD` in percent, one series per other method.
    RelativeDiff,
    /// Mean EquiD makespan against J, one line per I.
    HelpersCurve,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn first_appearance<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

type GroupKey = (usize, usize, Option<u8>);

fn group_label(&(j, i, level): &GroupKey) -> String {
    match level {
        Some(l) => format!("J={j} I={i} L{l}"),
        None => format!("J={j} I={i}"),
    }
}

/// Grouped values: `values[series][group]`.
struct Bars {
    title: String,
    y_label: String,
    groups: Vec<String>,
    series: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

struct Lines {
    title: String,
    x_label: String,
    y_label: String,
    /// `(name, points)`
    lines: Vec<(String, Vec<(f64, f64)>)>,
}

/// Round axis maximum and tick step covering `[lo, hi]`.
fn axis(lo: f64, hi: f64) -> (f64, f64, f64) {
    let span = (hi - lo).max(1e-9);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn frame(svg: &mut String, title: &str, x_label: &str, y_label: &str, y0: f64, y1: f64, step: f64) {
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect class="background" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(svg, r##"<g class="ticks" stroke="#ddd">"##);
    let mut v = y0;
    while v <= y1 + step * 1e-6 {
        let y = TOP + ph * (1.0 - (v - y0) / (y1 - y0));
        let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}"/>"#, LEFT + pw);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" stroke="none" fill="black">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
        v += step;
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + ph
    );
    let zero = TOP + ph * (1.0 - (0f64.clamp(y0, y1) - y0) / (y1 - y0));
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{LEFT}" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke="black"/>"#,
        LEFT + pw
    );
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn legend(svg: &mut String, names: &[String]) {
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (k, name) in names.iter().enumerate() {
        let y = TOP + 18.0 * k as f64;
        let x = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{y:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            PALETTE[k % PALETTE.len()],
            x + 18.0,
            y + 10.0,
            escape(name)
        );
    }
    let _ = writeln!(svg, "</g>");
}

fn render_bars(b: &Bars) -> String {
    let vals = b.values.iter().flatten().flatten().copied();
    let (lo, hi) = vals.fold((0f64, 0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (y0, y1, step) = axis(lo, if hi == lo { lo + 1.0 } else { hi });
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let y_of = |v: f64| TOP + ph * (1.0 - (v - y0) / (y1 - y0));
    let mut svg = String::new();
    frame(&mut svg, &b.title, "instance group", &b.y_label, y0, y1, step);
    let slot = pw / b.groups.len() as f64;
    let bar = slot * 0.8 / b.series.len().max(1) as f64;
    for (g, name) in b.groups.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text class="group" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + slot * (g as f64 + 0.5),
            TOP + ph + 16.0,
            escape(name)
        );
    }
    for (s, name) in b.series.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<g class="series" data-name="{}" fill="{}">"#,
            escape(name),
            PALETTE[s % PALETTE.len()]
        );
        for (g, v) in b.values[s].iter().enumerate() {
            let Some(v) = *v else { continue };
            let x = LEFT + slot * g as f64 + slot * 0.1 + bar * s as f64;
            let (top, bottom) = (y_of(v.max(0.0)), y_of(v.min(0.0)));
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{top:.1}" width="{bar:.1}" height="{:.1}"><title>{} {}: {v:.3}</title></rect>"#,
                bottom - top,
                escape(name),
                escape(&b.groups[g])
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    legend(&mut svg, &b.series);
    svg.push_str("</svg>\n");
    svg
}

fn render_lines(l: &Lines) -> String {
    let pts = l.lines.iter().flat_map(|(_, p)| p.iter().copied());
    let (xmin, xmax, ymax) = pts.fold((f64::INFINITY, f64::NEG_INFINITY, 0f64), |(a, b, c), (x, y)| {
        (a.min(x), b.max(x), c.max(y))
    });
    let (y0, y1, step) = axis(0.0, if ymax == 0.0 { 1.0 } else { ymax });
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let x_of = |x: f64| {
        if xmax > xmin {
            LEFT + 20.0 + (pw - 40.0) * (x - xmin) / (xmax - xmin)
        } else {
            LEFT + pw / 2.0
        }
    };
    let y_of = |v: f64| TOP + ph * (1.0 - (v - y0) / (y1 - y0));
    let mut svg = String::new();
    frame(&mut svg, &l.title, &l.x_label, &l.y_label, y0, y1, step);
    let xs = first_appearance(l.lines.iter().flat_map(|(_, p)| p.iter().map(|&(x, _)| x.to_bits())));
    for x in xs {
        let x = f64::from_bits(x);
        let _ = writeln!(
            svg,
            r#"<text class="x-tick" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x_of(x),
            TOP + ph + 16.0,
            fmt_tick(x)
        );
    }
    for (k, (name, points)) in l.lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.1},{:.1}", x_of(x), y_of(y))).collect();
        let _ = writeln!(svg, r#"<g class="series" data-name="{}">"#, escape(name));
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (x, y) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(svg, "</g>");
    }
    legend(&mut svg, &l.lines.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}

fn makespan_bars(rows: &[RunRow]) -> Result<String> {
    let groups = first_appearance(rows.iter().map(|r| (r.clients, r.helpers, r.level)));
    let series = first_appearance(rows.iter().map(|r| r.method.clone()));
    let values = series
        .iter()
        .map(|m| {
            groups
                .iter()
                .map(|g| {
                    let v: Vec<f64> = rows
                        .iter()
                        .filter(|r| &r.method == m && (r.clients, r.helpers, r.level) == *g)
                        .filter_map(|r| r.makespan.map(|x| x as f64))
                        .collect();
                    mean(&v)
                })
                .collect()
        })
        .collect();
    Ok(render_bars(&Bars {
        title: "Mean makespan".into(),
        y_label: "makespan (slots)".into(),
        groups: groups.iter().map(group_label).collect(),
        series,
        values,
    }))
}

fn relative_diff(rows: &[RunRow]) -> Result<String> {
    let equid: BTreeMap<&str, u64> = rows
        .iter()
        .filter(|r| r.method == "equid")
        .filter_map(|r| Some((r.instance_id.as_str(), r.makespan?)))
        .collect();
    if equid.is_empty() {
        bail!("relative-diff needs rows with method `equid` and a makespan");
    }
    let groups = first_appearance(rows.iter().map(|r| (r.clients, r.helpers, r.level)));
    let series = first_appearance(rows.iter().filter(|r| r.method != "equid").map(|r| r.method.clone()));
    if series.is_empty() {
        bail!("relative-diff needs at least one method other than `equid`");
    }
    let values = series
        .iter()
        .map(|m| {
            groups
                .iter()
                .map(|g| {
                    let v: Vec<f64> = rows
                        .iter()
                        .filter(|r| &r.method == m && (r.clients, r.helpers, r.level) == *g)
                        .filter_map(|r| {
                            let e = *equid.get(r.instance_id.as_str())?;
                            let m = r.makespan?;
                            (e > 0).then(|| 100.0 * (m as f64 - e as f64) / e as f64)
                        })
                        .collect();
                    median(&v)
                })
                .collect()
        })
        .collect();
    Ok(render_bars(&Bars {
        title: "Relative difference to EquiD (median)".into(),
        y_label: "(ALG - EquiD) / EquiD (%)".into(),
        groups: groups.iter().map(group_label).collect(),
        series,
        values,
    }))
}

fn helpers_curve(rows: &[RunRow]) -> Result<String> {
    let method = if rows.iter().any(|r| r.method == "equid") {
        "equid".to_string()
    } else {
        rows[0].method.clone()
    };
    let mut by_helpers: BTreeMap<usize, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.method == method) {
        if let Some(m) = r.makespan {
            by_helpers.entry(r.helpers).or_default().entry(r.clients).or_default().push(m as f64);
        }
    }
    if by_helpers.is_empty() {
        bail!("helpers-curve found no `{method}` rows with a makespan");
    }
    let lines = by_helpers
        .into_iter()
        .map(|(i, per_j)| {
            let points = per_j.into_iter().map(|(j, v)| (j as f64, mean(&v).expect("non-empty"))).collect();
            (format!("I={i}"), points)
        })
        .collect();
    Ok(render_lines(&Lines {
        title: format!("Mean {method} makespan by number of clients"),
        x_label: "J (clients)".into(),
        y_label: "makespan (slots)".into(),
        lines,
    }))
}

pub fn render(kind: PlotKind, rows: &[RunRow]) -> Result<String> {
    if rows.is_empty() {
        bail!("CSV has no data rows");
    }
    match kind {
        PlotKind::MakespanBars => makespan_bars(rows),
        PlotKind::RelativeDiff => relative_diff(rows),
        PlotKind::HelpersCurve => helpers_curve(rows),
    }
}
