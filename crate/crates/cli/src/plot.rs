//! Metric-vs-sampling-ratio line charts as standalone SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

use crate::report::{read_csv, MetricsRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    KTest,
    SerDb,
    PsnrDb,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::KTest => "k_test",
            Metric::SerDb => "ser_db",
            Metric::PsnrDb => "psnr_db",
        }
    }

    pub fn of(self, row: &MetricsRow) -> f64 {
        match self {
            Metric::KTest => row.k_test,
            Metric::SerDb => row.ser_db,
            Metric::PsnrDb => row.psnr_db,
        }
    }
}

impl FromStr for Metric {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k_test" => Ok(Metric::KTest),
            "ser_db" => Ok(Metric::SerDb),
            "psnr_db" => Ok(Metric::PsnrDb),
            other => bail!("unknown metric {other:?} (expected k_test, ser_db or psnr_db)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub method: String,
    /// `(mean sampling_ratio, mean metric)` per round, in round order.
    pub points: Vec<(f64, f64)>,
}

/// Averages the metric over trials for each (method, round). Non-finite
/// values (diverged rounds, `inf` at exact recovery) are left out of the
/// mean; a round with no finite value is dropped. Methods keep their order
/// of first appearance.
pub fn series(rows: &[MetricsRow], metric: Metric) -> Vec<Series> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(&str, usize), (f64, f64, usize)> = BTreeMap::new();
    for row in rows {
        if !order.contains(&row.method.as_str()) {
            order.push(&row.method);
        }
        let y = metric.of(row);
        if !y.is_finite() {
            continue;
        }
        let g = groups.entry((&row.method, row.round)).or_insert((0.0, 0.0, 0));
        g.0 += row.sampling_ratio;
        g.1 += y;
        g.2 += 1;
    }
    order
        .into_iter()
        .map(|method| Series {
            method: method.to_string(),
            points: groups
                .range((method, 0)..=(method, usize::MAX))
                .map(|(_, &(x, y, n))| (x / n as f64, y / n as f64))
                .collect(),
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(series: &[Series], metric: Metric) -> String {
    let (width, height) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 170.0, 30.0, 60.0);
    let (pw, ph) = (width - left - right, height - top - bottom);

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5e-2, x1 + 0.5e-2);
    }
    if y1 - y0 < 1e-12 * y0.abs().max(1.0) {
        let pad = 0.05 * y0.abs().max(1e-3);
        (y0, y1) = (y0 - pad, y1 + pad);
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{left}" y1="{top}" x2="{left}" y2="{b}" stroke="black"/>"#,
        b = top + ph,
        r = left + pw
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            sx(xv),
            top + ph + 18.0,
            xv
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3e}</text>"#, left - 6.0, sy(yv) + 4.0, yv);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">sampling ratio</text>"#,
        left + pw / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        metric.name()
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&s.method)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_plot(csv_path: impl AsRef<Path>, metric: Metric, out_path: impl AsRef<Path>) -> Result<()> {
    let rows = read_csv(&csv_path)?;
    if rows.is_empty() {
        bail!("{} has no rows", csv_path.as_ref().display());
    }
    let out = out_path.as_ref();
    std::fs::write(out, render_svg(&series(&rows, metric), metric))
        .with_context(|| format!("writing {}", out.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, round: usize, method: &str, ratio: f64, k: f64) -> MetricsRow {
        MetricsRow {
            trial,
            round,
            method: method.into(),
            observed_count: 0,
            sampling_ratio: ratio,
            k_test: k,
            ser_db: 1.0,
            psnr_db: f64::INFINITY,
            wall_ms: 0,
        }
    }

    #[test]
    fn averages_per_method_and_round() {
        let rows = vec![
            row(0, 0, "b", 0.1, 0.4),
            row(0, 1, "b", 0.2, 0.2),
            row(1, 0, "b", 0.1, 0.6),
            row(1, 1, "b", 0.2, f64::NAN),
            row(0, 0, "a", 0.1, 1.0),
        ];
        let s = series(&rows, Metric::KTest);
        assert_eq!(s[0].method, "b");
        assert_eq!(s[0].points, vec![(0.1, 0.5), (0.2, 0.2)]);
        assert_eq!(s[1].points, vec![(0.1, 1.0)]);
        assert!(series(&rows, Metric::PsnrDb).iter().all(|s| s.points.is_empty()));
    }

    #[test]
    fn svg_structure() {
        let one = render_svg(&series(&[row(0, 0, "var", 0.1, 0.3), row(0, 1, "var", 0.2, 0.1)], Metric::KTest), Metric::KTest);
        assert_eq!(one.matches("<polyline").count(), 1);
        let pts = one.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);

        let two = render_svg(
            &series(&[row(0, 0, "var", 0.1, 0.3), row(0, 0, "var+lev", 0.1, 0.2)], Metric::KTest),
            Metric::KTest,
        );
        assert_eq!(two.matches("<polyline").count(), 2);
        assert_eq!(two.matches(r#"class="legend""#).count(), 2);
        assert!(two.contains(">var+lev</text>"));
    }

    #[test]
    fn metric_names() {
        assert_eq!("psnr_db".parse::<Metric>().unwrap(), Metric::PsnrDb);
        assert!("mse".parse::<Metric>().is_err());
    }
}
