//! Static SVG rendering of a sweep: both leakage curves against `s`, with a
//! dashed marker at `log 2`.

use std::fmt::Write;

use super::sweep::{LogBase, SweepRow};
use crate::error::{QldpError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Contiguous runs of finite points.
fn segments(rows: &[SweepRow], pick: fn(&SweepRow) -> f64) -> Vec<Vec<(f64, f64)>> {
    let mut out: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for r in rows {
        let y = pick(r);
        if y.is_finite() {
            out.last_mut().expect("non-empty").push((r.s, y));
        } else if !out.last().expect("non-empty").is_empty() {
            out.push(Vec::new());
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

fn draw_series(svg: &mut String, frame: &Frame, segs: &[Vec<(f64, f64)>], color: &str, dash: &str, lines: bool) {
    for seg in segs {
        if lines && seg.len() > 1 {
            let pts: Vec<String> = seg
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#,
                pts.join(" ")
            );
        } else {
            for &(x, y) in seg {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                    frame.px(x),
                    frame.py(y)
                );
            }
        }
    }
}

/// Renders rows (leakages already in `base`) as an SVG document.
pub fn render_svg(rows: &[SweepRow], base: LogBase) -> Result<String> {
    if rows.is_empty() {
        return Err(QldpError::Config("no rows to plot".into()));
    }
    let upper = segments(rows, |r| r.epsilon_upper);
    let numeric = segments(rows, |r| r.epsilon_numeric);
    let omitted = rows
        .iter()
        .filter(|r| !r.epsilon_upper.is_finite() || !r.epsilon_numeric.is_finite())
        .count();

    let (mut x0, mut x1) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.s), b.max(r.s)));
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y_max = rows
        .iter()
        .flat_map(|r| [r.epsilon_upper, r.epsilon_numeric])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let frame = Frame {
        x0,
        x1,
        y0: 0.0,
        y1: if y_max > 0.0 { 1.05 * y_max } else { 1.0 },
    };
    let lines = rows.len() > 1;
    let unit = base.unit();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (bx0, by0, bx1, by1) = (LEFT, TOP, WIDTH - RIGHT, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{bx0}" y="{by0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        bx1 - bx0,
        by1 - by0
    );
    for i in 0..=TICKS {
        let x = frame.x0 + (frame.x1 - frame.x0) * i as f64 / TICKS as f64;
        let y = frame.y0 + (frame.y1 - frame.y0) * i as f64 / TICKS as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{0:.2}" y1="{by1}" x2="{0:.2}" y2="{1}" stroke="black"/><text x="{0:.2}" y="{2}" text-anchor="middle">{3:.2}</text>"#,
            frame.px(x),
            by1 + 5.0,
            by1 + 20.0,
            x
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{bx0}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="black"/><text x="{2}" y="{3:.2}" text-anchor="end">{4:.2}</text>"#,
            frame.py(y),
            bx0 - 5.0,
            bx0 - 8.0,
            frame.py(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">entanglement entropy s (nats)</text>"#,
        (bx0 + bx1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">leakage ε ({unit})</text>"#,
        (by0 + by1) / 2.0
    );

    let ln2 = std::f64::consts::LN_2;
    if (frame.x0..=frame.x1).contains(&ln2) {
        let x = frame.px(ln2);
        let _ = writeln!(
            svg,
            r##"<line class="threshold" x1="{x:.2}" y1="{by0}" x2="{x:.2}" y2="{by1}" stroke="#888" stroke-dasharray="6 4"/><text x="{:.2}" y="{}" fill="#888">log 2</text>"##,
            x + 4.0,
            by0 + 14.0
        );
    }

    draw_series(&mut svg, &frame, &upper, "#1f77b4", "", lines);
    draw_series(&mut svg, &frame, &numeric, "#d62728", r#" stroke-dasharray="8 4""#, lines);

    let lx = bx1 - 230.0;
    let mut ly = by0 + 20.0;
    let mut legend = vec![
        ("#1f77b4", "ε upper (relaxed bound)".to_string()),
        ("#d62728", "ε numeric (optimiser)".to_string()),
    ];
    if omitted > 0 {
        legend.push(("#888", format!("{omitted} point(s) with ε = ∞ omitted")));
    }
    for (color, label) in legend {
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{}" width="14" height="4" fill="{color}"/><text x="{}" y="{}">{label}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly
        );
        ly += 18.0;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy_energy::RegimeTag;

    fn row(s: f64, e: f64) -> SweepRow {
        SweepRow {
            s,
            tau: None,
            epsilon_upper: e,
            epsilon_numeric: e * 0.9,
            j_max: 0.1,
            j_min_bound: 0.01,
            regime_max: RegimeTag::LowEntanglement,
            regime_min: RegimeTag::LowEntanglement,
            wall_time_ms: 1.0,
            converged: true,
        }
    }

    #[test]
    fn two_curves_and_threshold() {
        let rows: Vec<_> = (0..10).map(|i| row(i as f64 * 0.15, 2.0 - 0.1 * i as f64)).collect();
        let svg = render_svg(&rows, LogBase::Natural).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"class="threshold""#));
        assert!(svg.contains("(nats)"));
        assert!(!svg.contains("omitted"));
    }

    #[test]
    fn single_row_is_a_marker() {
        let svg = render_svg(&[row(0.3, 1.0)], LogBase::Natural).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn infinite_points_are_omitted_and_noted() {
        let rows = vec![
            row(0.2, f64::INFINITY),
            row(0.5, f64::INFINITY),
            row(0.9, 2.0),
            row(1.1, 1.5),
            row(1.3, 1.2),
        ];
        let svg = render_svg(&rows, LogBase::Two).unwrap();
        assert!(svg.contains("2 point(s) with ε = ∞ omitted"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("(bits)"));
        assert!(render_svg(&[], LogBase::Natural).is_err());
    }
}
