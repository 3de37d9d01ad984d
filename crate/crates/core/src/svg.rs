//! Plain SVG emission for heatmaps, rasters, line charts and scatter plots.
//! Every numeric value drawn here is also written out as CSV or JSON.

use std::fmt::Write as _;

use crate::matrix::Matrix;

const PLOT: f64 = 560.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColorScale {
    /// White at 0 to dark blue at `max`.
    Linear { max: f64 },
    /// log10 between `min` and `max`; zero cells stay white.
    Log { min: f64, max: f64 },
    /// Blue for negative, white at 0, red for positive; saturates at `abs_max`.
    Diverging { abs_max: f64 },
}

impl ColorScale {
    pub fn linear_for(values: &[f64]) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        ColorScale::Linear {
            max: if max > 0.0 { max } else { 1.0 },
        }
    }

    pub fn log_for(values: &[f64]) -> Self {
        let positive = values.iter().copied().filter(|v| *v > 0.0);
        let min = positive.clone().fold(f64::INFINITY, f64::min);
        let max = positive.fold(0.0, f64::max);
        if max > 0.0 {
            ColorScale::Log { min, max }
        } else {
            ColorScale::Log { min: 1.0, max: 1.0 }
        }
    }

    pub fn diverging_for(values: &[f64]) -> Self {
        let m = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        ColorScale::Diverging {
            abs_max: if m > 0.0 { m } else { 1.0 },
        }
    }

    pub fn color(&self, v: f64) -> String {
        const WHITE: [f64; 3] = [255.0, 255.0, 255.0];
        const BLUE: [f64; 3] = [33.0, 72.0, 160.0];
        const RED: [f64; 3] = [190.0, 30.0, 45.0];
        match *self {
            ColorScale::Linear { max } => mix(WHITE, BLUE, (v / max).clamp(0.0, 1.0)),
            ColorScale::Log { min, max } => {
                if v <= 0.0 {
                    return rgb(WHITE);
                }
                let span = (max.log10() - min.log10()).max(1e-12);
                // keep the smallest positive value visibly coloured
                let f = 0.15 + 0.85 * ((v.log10() - min.log10()) / span).clamp(0.0, 1.0);
                mix(WHITE, BLUE, f)
            }
            ColorScale::Diverging { abs_max } => {
                let f = (v / abs_max).clamp(-1.0, 1.0);
                if f < 0.0 {
                    mix(WHITE, BLUE, -f)
                } else {
                    mix(WHITE, RED, f)
                }
            }
        }
    }
}

fn rgb(c: [f64; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0].round() as u8, c[1].round() as u8, c[2].round() as u8)
}

fn mix(a: [f64; 3], b: [f64; 3], f: f64) -> String {
    rgb([
        a[0] + (b[0] - a[0]) * f,
        a[1] + (b[1] - a[1]) * f,
        a[2] + (b[2] - a[2]) * f,
    ])
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(width: f64, height: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    s
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn axis_labels(s: &mut String, x: f64, y: f64, w: f64, h: f64, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        x + w / 2.0,
        y + h + 36.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x - 36.0,
        y + h / 2.0,
        x - 36.0,
        y + h / 2.0,
        escape(y_label)
    );
}

fn colorbar(s: &mut String, x: f64, y: f64, h: f64, scale: &ColorScale, lo: f64, hi: f64) {
    let steps = 50;
    for k in 0..steps {
        let f = k as f64 / (steps - 1) as f64;
        let v = match scale {
            ColorScale::Log { min, max } if *min > 0.0 => 10f64.powf(min.log10() + f * (max.log10() - min.log10())),
            _ => lo + f * (hi - lo),
        };
        let cy = y + h - (k + 1) as f64 * h / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{cy:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            h / steps as f64 + 0.2,
            scale.color(v)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 18.0, y + 10.0, fmt_tick(hi));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 18.0, y + h, fmt_tick(lo));
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Matrix heatmap with row 1 at the top and one-based tick labels.
pub fn heatmap(m: &Matrix<f64>, scale: ColorScale, title: &str, x_label: &str, y_label: &str) -> String {
    let (rows, cols) = (m.rows().max(1), m.cols().max(1));
    let cell_w = PLOT / cols as f64;
    let cell_h = PLOT / rows as f64;
    let mut s = open(PLOT + 2.0 * MARGIN + 60.0, PLOT + 2.0 * MARGIN, title);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m[(r, c)];
            if v == 0.0 && !matches!(scale, ColorScale::Diverging { .. }) {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                MARGIN + c as f64 * cell_w,
                MARGIN + r as f64 * cell_h,
                cell_w,
                cell_h,
                scale.color(v)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let tick_every = (cols as f64 / 10.0).ceil().max(1.0) as usize;
    for c in (0..cols).step_by(tick_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            MARGIN + (c as f64 + 0.5) * cell_w,
            MARGIN + PLOT + 14.0,
            c + 1
        );
    }
    let tick_every = (rows as f64 / 10.0).ceil().max(1.0) as usize;
    for r in (0..rows).step_by(tick_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
            MARGIN - 4.0,
            MARGIN + (r as f64 + 0.5) * cell_h + 4.0,
            r + 1
        );
    }
    axis_labels(&mut s, MARGIN, MARGIN, PLOT, PLOT, x_label, y_label);
    let (lo, hi) = match scale {
        ColorScale::Linear { max } => (0.0, max),
        ColorScale::Log { min, max } => (min, max),
        ColorScale::Diverging { abs_max } => (-abs_max, abs_max),
    };
    colorbar(&mut s, MARGIN + PLOT + 16.0, MARGIN, PLOT, &scale, lo, hi);
    close(s)
}

/// Learner label, grade and per-position deviations.
pub type RasterRow = (String, Option<f64>, Vec<Option<f64>>);

/// One row per learner (already ordered), one column per sequence position.
/// `None` cells (after the learner stopped) are drawn black. A grade strip
/// sits to the left of the raster.
pub fn deviation_raster(rows: &[RasterRow], title: &str) -> String {
    let n_rows = rows.len().max(1);
    let n_cols = rows.iter().map(|r| r.2.len()).max().unwrap_or(1).max(1);
    let cell_w = PLOT / n_cols as f64;
    let cell_h = PLOT / n_rows as f64;
    let scale = ColorScale::Diverging { abs_max: 1.0 };
    let grade_scale = ColorScale::Linear { max: 100.0 };
    let left = MARGIN + 24.0;
    let mut s = open(PLOT + left + MARGIN + 40.0, PLOT + 2.0 * MARGIN, title);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (r, (_, grade, values)) in rows.iter().enumerate() {
        let y = MARGIN + r as f64 * cell_h;
        let fill = grade.map(|g| grade_scale.color(g)).unwrap_or_else(|| "#bbbbbb".into());
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{y:.2}" width="14" height="{cell_h:.2}" fill="{fill}"/>"#,
            left - 20.0
        );
        for c in 0..n_cols {
            let fill = match values.get(c).copied().flatten() {
                Some(v) => scale.color(v),
                None => "#000000".into(),
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="{fill}"/>"#,
                left + c as f64 * cell_w
            );
        }
    }
    let _ = writeln!(s, "</g>");
    axis_labels(&mut s, left, MARGIN, PLOT, PLOT, "sequence position", "learners (descending grade)");
    colorbar(&mut s, left + PLOT + 16.0, MARGIN, PLOT, &scale, -1.0, 1.0);
    close(s)
}

pub struct Series<'a> {
    pub values: &'a [f64],
    pub color: &'a str,
    pub width: f64,
    pub dashed: bool,
    pub opacity: f64,
}

/// Line chart over x = 1..=len with y in [0, 1] and a reference line at 0.5.
pub fn line_chart(series: &[Series<'_>], title: &str, x_label: &str, y_label: &str) -> String {
    let max_len = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let x_of = |i: usize| MARGIN + (i as f64) / (max_len - 1) as f64 * PLOT;
    let y_of = |v: f64| MARGIN + (1.0 - v.clamp(0.0, 1.0)) * PLOT;
    let mut s = open(PLOT + 2.0 * MARGIN, PLOT + 2.0 * MARGIN, title);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="2,3"/>"##,
        y_of(0.5),
        MARGIN + PLOT,
        y_of(0.5)
    );
    for serie in series {
        if serie.values.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for (i, v) in serie.values.iter().enumerate() {
            let _ = write!(pts, "{:.2},{:.2} ", x_of(i), y_of(*v));
        }
        let dash = if serie.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="{}"{dash}/>"#,
            pts.trim_end(),
            serie.color,
            serie.width,
            serie.opacity
        );
    }
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{v:.2}</text>"#,
            MARGIN - 4.0,
            y_of(v) + 4.0
        );
    }
    let tick_every = (max_len as f64 / 10.0).ceil().max(1.0) as usize;
    for i in (0..max_len).step_by(tick_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            x_of(i),
            MARGIN + PLOT + 14.0,
            i + 1
        );
    }
    axis_labels(&mut s, MARGIN, MARGIN, PLOT, PLOT, x_label, y_label);
    close(s)
}

/// (median x, median y, (q25 x, q75 x), (q25 y, q75 y))
pub type ScatterSummary = (f64, f64, (f64, f64), (f64, f64));

pub struct ScatterGroup<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
    pub summary: Option<ScatterSummary>,
}

/// Scatter plot with axes through the origin, plus median and interquartile
/// bars for each group.
pub fn scatter(groups: &[ScatterGroup<'_>], title: &str, x_label: &str, y_label: &str) -> String {
    let all = groups.iter().flat_map(|g| g.points.iter());
    let x_max = all.clone().map(|p| p.0.abs()).fold(0.0, f64::max).max(1e-9) * 1.1;
    let y_max = all.map(|p| p.1.abs()).fold(0.0, f64::max).max(1e-9) * 1.1;
    let x_of = |v: f64| MARGIN + (v / x_max + 1.0) / 2.0 * PLOT;
    let y_of = |v: f64| MARGIN + (1.0 - (v / y_max + 1.0) / 2.0) * PLOT;
    let mut s = open(PLOT + 2.0 * MARGIN + 150.0, PLOT + 2.0 * MARGIN, title);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{MARGIN}" x2="{:.2}" y2="{:.2}" stroke="#888888"/>"##,
        x_of(0.0),
        x_of(0.0),
        MARGIN + PLOT
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888"/>"##,
        y_of(0.0),
        MARGIN + PLOT,
        y_of(0.0)
    );
    for (k, g) in groups.iter().enumerate() {
        for &(x, y) in &g.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.6"/>"#,
                x_of(x),
                y_of(y),
                g.color
            );
        }
        if let Some((mx, my, (x25, x75), (y25, y75))) = g.summary {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2.5"/>"#,
                x_of(x25),
                y_of(my),
                x_of(x75),
                y_of(my),
                g.color
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2.5"/>"#,
                x_of(mx),
                y_of(y25),
                x_of(mx),
                y_of(y75),
                g.color
            );
        }
        let ly = MARGIN + 10.0 + k as f64 * 18.0;
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{ly:.1}" r="5" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            MARGIN + PLOT + 20.0,
            g.color,
            MARGIN + PLOT + 30.0,
            ly + 4.0,
            escape(g.label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="10">±{}</text>"#,
        MARGIN + PLOT - 40.0,
        y_of(0.0) - 4.0,
        fmt_tick(x_max)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="10">±{}</text>"#,
        x_of(0.0) + 4.0,
        MARGIN + 12.0,
        fmt_tick(y_max)
    );
    axis_labels(&mut s, MARGIN, MARGIN, PLOT, PLOT, x_label, y_label);
    close(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors() {
        let lin = ColorScale::Linear { max: 1.0 };
        assert_eq!(lin.color(0.0), "#ffffff");
        assert_eq!(lin.color(1.0), "#2148a0");
        let div = ColorScale::Diverging { abs_max: 2.0 };
        assert_eq!(div.color(0.0), "#ffffff");
        assert_eq!(div.color(-5.0), "#2148a0");
        assert_eq!(div.color(2.0), "#be1e2d");
        assert_eq!(ColorScale::log_for(&[0.0, 0.01, 1.0]).color(0.0), "#ffffff");
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
