//! Minimal line-plot SVG writer.

use std::fmt::Write as _;
use std::path::Path;

use crate::csvio::Table;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub series: Vec<String>,
    pub x_label: String,
    pub y_label: String,
}

impl PlotSpec {
    pub fn new(title: &str, x: &str, series: &[&str]) -> Self {
        Self {
            title: title.into(),
            x: x.into(),
            series: series.iter().map(|s| s.to_string()).collect(),
            x_label: x.into(),
            y_label: series.join(", "),
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders the named columns of `table` as an SVG document.
pub fn render_svg(table: &Table, spec: &PlotSpec) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Config(
            "cannot plot a table without data rows".into(),
        ));
    }
    let xs = table.column(&spec.x)?;
    let ys: Vec<Vec<f64>> = spec
        .series
        .iter()
        .map(|name| table.column(name))
        .collect::<Result<_>>()?;

    let (x0, x1) = range(xs.iter().copied());
    let (y0, y1) = range(ys.iter().flatten().copied());
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    let (bx, by) = (LEFT, TOP + ph);
    let _ = writeln!(
        s,
        r#"<line x1="{bx:.1}" y1="{by:.1}" x2="{:.1}" y2="{by:.1}" stroke="black"/>"#,
        LEFT + pw
    );
    let _ = writeln!(
        s,
        r#"<line x1="{bx:.1}" y1="{by:.1}" x2="{bx:.1}" y2="{TOP:.1}" stroke="black"/>"#
    );
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let px = sx(xv);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{by:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            by + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            by + 18.0,
            tick_label(xv)
        );
        let yv = y0 + f * (y1 - y0);
        let py = sy(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{bx:.1}" y2="{py:.1}" stroke="black"/>"#,
            bx - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            bx - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y_label)
    );
    for (idx, (name, y)) in spec.series.iter().zip(&ys).enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(y)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b)))
            .collect();
        let color = COLORS[idx % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Reads `csv`, renders it and writes `out`. Nothing is written on error.
pub fn emit_plot(csv: &Path, spec: &PlotSpec, out: &Path) -> Result<()> {
    let table = Table::read(csv)?;
    let svg = render_svg(&table, spec)?;
    std::fs::write(out, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[f64; 2]]) -> Table {
        let mut t = Table::new(vec!["t".into(), "V".into()]);
        for r in rows {
            t.push(r.to_vec());
        }
        t
    }

    fn polyline_points(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                let end = start + l[start..].find('"').unwrap();
                l[start..end]
                    .split(' ')
                    .map(|p| {
                        let (a, b) = p.split_once(',').unwrap();
                        (a.parse().unwrap(), b.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_points_make_one_segment() {
        let svg = render_svg(
            &table(&[[0.0, 1.0], [1.0, 2.0]]),
            &PlotSpec::new("x", "t", &["V"]),
        )
        .unwrap();
        let lines = polyline_points(&svg);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 2);
    }

    #[test]
    fn flat_series_is_horizontal_and_centered() {
        let svg = render_svg(
            &table(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]),
            &PlotSpec::new("x", "t", &["V"]),
        )
        .unwrap();
        let pts = &polyline_points(&svg)[0];
        assert!(pts.iter().all(|p| p.1 == pts[0].1));
        assert!((pts[0].1 - (TOP + (HEIGHT - TOP - BOTTOM) / 2.0)).abs() < 0.01);
    }

    #[test]
    fn empty_and_missing_columns_fail() {
        assert!(render_svg(&table(&[]), &PlotSpec::new("x", "t", &["V"])).is_err());
        assert!(matches!(
            render_svg(&table(&[[0.0, 1.0]]), &PlotSpec::new("x", "t", &["W"])),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn output_is_stable() {
        let t = table(&[[0.0, 1.0], [1.0, -2.0], [2.0, 0.5]]);
        let spec = PlotSpec::new("a < b", "t", &["V"]);
        let a = render_svg(&t, &spec).unwrap();
        assert_eq!(a, render_svg(&t, &spec).unwrap());
        assert!(a.contains("a &lt; b"));
    }

    #[test]
    fn emit_plot_writes_nothing_on_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, "t,V\n").unwrap();
        let out = dir.path().join("p.svg");
        assert!(emit_plot(&csv, &PlotSpec::new("x", "t", &["V"]), &out).is_err());
        assert!(!out.exists());
    }
}
