//! Hand-written SVG scatter plot for two-feature audits.

use std::fmt::Write;

use thiserror::Error;

use crate::classifier::LinearModel;
use crate::counterfactual::Counterfactual;
use crate::dataset::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum PlotSkip {
    #[error("plot skipped: data has {0} features, only 2-D data can be plotted")]
    Dimension(usize),
    #[error("plot skipped: dataset is empty")]
    Empty,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 560.0;
const MARGIN: f64 = 56.0;
const LEGEND_WIDTH: f64 = 150.0;

fn group_colour(s: i64) -> &'static str {
    match s {
        0 => "#1f77b4",
        1 => "#d62728",
        _ => "#7f7f7f",
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEGEND_WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    /// Segment of `w·p + b = 0` inside the frame, if any.
    fn clip_boundary(&self, model: &LinearModel) -> Option<((f64, f64), (f64, f64))> {
        let (a, c, b) = (model.weights[0], model.weights[1], model.bias);
        let mut hits: Vec<(f64, f64)> = Vec::new();
        if c != 0.0 {
            for x in [self.x0, self.x1] {
                let y = -(a * x + b) / c;
                if (self.y0..=self.y1).contains(&y) {
                    hits.push((x, y));
                }
            }
        }
        if a != 0.0 {
            for y in [self.y0, self.y1] {
                let x = -(c * y + b) / a;
                if (self.x0..=self.x1).contains(&x) {
                    hits.push((x, y));
                }
            }
        }
        hits.dedup_by(|p, q| (p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        match hits.as_slice() {
            [p, q, ..] => Some((*p, *q)),
            _ => None,
        }
    }
}

fn marker(out: &mut String, y: u8, cx: f64, cy: f64, colour: &str) {
    let r = 4.5;
    if y == 0 {
        // Downward triangle.
        let _ = writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{colour}"/>"#,
            cx - r,
            cy - r,
            cx + r,
            cy - r,
            cx,
            cy + r
        );
    } else {
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
            cx - r * 0.8,
            cy - r * 0.8,
            r * 1.6,
            r * 1.6
        );
    }
}

fn cross(out: &mut String, cx: f64, cy: f64) {
    let r = 4.0;
    let _ = writeln!(
        out,
        r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="black" stroke-width="1.5"/>"#,
        cx - r,
        cy - r,
        cx + r,
        cy + r,
        cx - r,
        cy + r,
        cx + r,
        cy - r
    );
}

/// Points by (sensitive group, label), counterfactuals as crosses joined to
/// their origins by dotted lines, and the model's decision boundary.
pub fn render_svg(
    dataset: &Dataset,
    model: &LinearModel,
    counterfactuals: &[Counterfactual],
) -> Result<String, PlotSkip> {
    let dim = dataset.schema.feature_count();
    if dim != 2 || model.feature_count() != 2 {
        return Err(PlotSkip::Dimension(dim));
    }
    if dataset.is_empty() {
        return Err(PlotSkip::Empty);
    }

    let stars: Vec<&Vec<f64>> = counterfactuals
        .iter()
        .filter_map(|c| c.c_star.as_ref())
        .collect();
    let all = dataset
        .points
        .iter()
        .map(|p| &p.x)
        .chain(stars.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(1e-9);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let frame = Frame { x0, x1, y0, y1 };
    let names = dataset.schema.legitimate_names();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // Axes with five ticks each.
    let (left, right) = (frame.px(x0), frame.px(x1));
    let (bottom, top) = (frame.py(y0), frame.py(y1));
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.1}</text>"#,
            frame.px(xv),
            bottom + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.1}</text>"#,
            left - 6.0,
            frame.py(yv) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 14.0,
        names[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        names[1]
    );

    if let Some(((ax, ay), (bx, by))) = frame.clip_boundary(model) {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#222" stroke-width="1.5" stroke-dasharray="8,4"/>"##,
            frame.px(ax),
            frame.py(ay),
            frame.px(bx),
            frame.py(by)
        );
    }

    for cf in counterfactuals {
        if let Some(c) = &cf.c_star {
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="1,3"/>"##,
                frame.px(cf.origin[0]),
                frame.py(cf.origin[1]),
                frame.px(c[0]),
                frame.py(c[1])
            );
        }
    }

    let audited = dataset.audited;
    let mut groups: Vec<(i64, u8)> = Vec::new();
    for p in &dataset.points {
        let s = p.sensitive[audited];
        marker(
            &mut out,
            p.y,
            frame.px(p.x[0]),
            frame.py(p.x[1]),
            group_colour(s),
        );
        if !groups.contains(&(s, p.y)) {
            groups.push((s, p.y));
        }
    }
    for c in &stars {
        cross(&mut out, frame.px(c[0]), frame.py(c[1]));
    }

    groups.sort_unstable();
    let column = &dataset.audited_column().name;
    let lx = WIDTH - LEGEND_WIDTH + 8.0;
    let mut ly = MARGIN + 8.0;
    for (s, y) in groups {
        marker(&mut out, y, lx + 6.0, ly, group_colour(s));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{column}={s}, y={y}</text>"#,
            lx + 18.0,
            ly + 4.0
        );
        ly += 20.0;
    }
    if !stars.is_empty() {
        cross(&mut out, lx + 6.0, ly);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">counterfactual</text>"#,
            lx + 18.0,
            ly + 4.0
        );
        ly += 20.0;
    }
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="#222" stroke-width="1.5" stroke-dasharray="8,4"/>"##,
        lx,
        lx + 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">boundary</text>"#,
        lx + 18.0,
        ly + 4.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}
