//! Minimal SVG output: class heatmaps with data points overlaid, and line
//! charts with optional ±1 sd bands. Coordinates are printed with fixed
//! precision so identical inputs give identical bytes.

use std::fmt::Write;

use mixup_core::datasets::LabeledDataset;
use mixup_core::oracle::BoundaryGrid;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;

fn color(class: usize) -> &'static str {
    PALETTE[(class.max(1) - 1) % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Affine map from a data rectangle onto the plot area (y grows upward).
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for (value, anchor_x, anchor_y, align) in [
        (frame.x.0, x0, y0 + 16.0, "start"),
        (frame.x.1, x1, y0 + 16.0, "end"),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x:.2}" y="{anchor_y:.2}" font-family="sans-serif" font-size="10" text-anchor="{align}">{value:.3}</text>"#
        );
    }
    for (value, y) in [(frame.y.0, y0), (frame.y.1, y1 + 10.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{value:.3}</text>"#,
            x0 - 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

/// Heatmap of the predicted class on a 2-D grid; opacity grows with the
/// winning probability and undefined cells are grey. Each cell carries its
/// label and winning probability as `data-label` / `data-p`.
pub fn boundary_heatmap(grid: &BoundaryGrid, data: Option<&LabeledDataset>, title: &str) -> String {
    let spec = grid.spec;
    let half = |(lo, hi): (f64, f64), n: usize| {
        if n > 1 {
            0.5 * (hi - lo) / (n - 1) as f64
        } else {
            0.5
        }
    };
    let (hx, hy) = (half(spec.x_range, spec.nx), half(spec.y_range, spec.ny));
    let frame = Frame::new(
        (spec.x_range.0 - hx, spec.x_range.1 + hx),
        (spec.y_range.0 - hy, spec.y_range.1 + hy),
    );
    let mut out = String::new();
    open(&mut out, title);
    let chance = 1.0 / grid.k.max(1) as f64;
    for cell in &grid.cells {
        let (x0, x1) = (frame.px(cell.x - hx), frame.px(cell.x + hx));
        let (y0, y1) = (frame.py(cell.y - hy), frame.py(cell.y + hy));
        let geometry = format!(
            r#"x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}""#,
            x1 - x0,
            y0 - y1
        );
        match &cell.probs {
            Some(p) => {
                let win = p[cell.label - 1];
                let strength = if chance < 1.0 {
                    (win - chance) / (1.0 - chance)
                } else {
                    1.0
                };
                let _ = writeln!(
                    out,
                    r#"<rect {geometry} fill="{}" fill-opacity="{:.3}" data-label="{}" data-p="{win:.4}"/>"#,
                    color(cell.label),
                    0.15 + 0.75 * strength.clamp(0.0, 1.0),
                    cell.label
                );
            }
            None => {
                let _ = writeln!(out, r##"<rect {geometry} fill="#dddddd" data-label="0"/>"##);
            }
        }
    }
    if let Some(ds) = data {
        for i in 0..ds.len() {
            let p = ds.point(i);
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}" stroke="black" stroke-width="0.8" data-label="{}"/>"#,
                frame.px(p[0]),
                frame.py(p[1]),
                color(ds.label(i)),
                ds.label(i)
            );
        }
    }
    axes(&mut out, &frame, "x", "y");
    out.push_str("</svg>\n");
    out
}

pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Half-width of a shaded band around the line.
    pub band: Option<Vec<f64>>,
}

/// Line chart; a series with a single point is drawn as a marker only.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |v: &f64| v.is_finite();
    let xs = series
        .iter()
        .flat_map(|s| s.xs.iter().copied())
        .filter(finite);
    let x_range = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let ys = series.iter().flat_map(|s| {
        let band = s.band.clone().unwrap_or_else(|| vec![0.0; s.ys.len()]);
        s.ys.iter()
            .zip(band)
            .flat_map(|(y, b)| [y - b, y + b])
            .collect::<Vec<_>>()
    });
    let y_range = ys
        .filter(finite)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let sane = |r: (f64, f64)| if r.0.is_finite() { r } else { (0.0, 1.0) };
    let frame = Frame::new(sane(x_range), sane(y_range));

    let mut out = String::new();
    open(&mut out, title);
    for (idx, s) in series.iter().enumerate() {
        let c = color(idx + 1);
        if let Some(band) = &s.band {
            let upper =
                s.xs.iter()
                    .zip(&s.ys)
                    .zip(band)
                    .map(|((x, y), b)| (frame.px(*x), frame.py(y + b)));
            let lower =
                s.xs.iter()
                    .zip(&s.ys)
                    .zip(band)
                    .rev()
                    .map(|((x, y), b)| (frame.px(*x), frame.py(y - b)));
            let pts: Vec<String> = upper
                .chain(lower)
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let pts: Vec<String> =
            s.xs.iter()
                .zip(&s.ys)
                .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
                .collect();
        if pts.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5" data-series="{}"/>"#,
                pts.join(" "),
                escape(&s.name)
            );
        } else {
            for (x, y) in s.xs.iter().zip(&s.ys) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}" data-series="{}"/>"#,
                    frame.px(*x),
                    frame.py(*y),
                    escape(&s.name)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (idx as f64 + 1.0),
            escape(&s.name)
        );
    }
    axes(&mut out, &frame, x_label, y_label);
    out.push_str("</svg>\n");
    out
}

/// Scatter plot with one marker per point, each carrying `data-x`/`data-y`.
pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let range = |vals: Vec<f64>| {
        vals.into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let xr = range(points.iter().map(|p| p.0).collect());
    let yr = range(points.iter().map(|p| p.1).collect());
    let sane = |r: (f64, f64)| if r.0.is_finite() { r } else { (0.0, 1.0) };
    let frame = Frame::new(sane(xr), sane(yr));
    let mut out = String::new();
    open(&mut out, title);
    for (x, y) in points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" data-x="{x}" data-y="{y}"/>"#,
            frame.px(*x),
            frame.py(*y),
            color(1)
        );
    }
    axes(&mut out, &frame, x_label, y_label);
    out.push_str("</svg>\n");
    out
}
