//! Dependency-free SVG line charts of mean return ± one standard deviation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::records::{
    read_csv, read_schema, AggregateRecord, RunRecord, AGGREGATE_SCHEMA, RECORDS_SCHEMA,
};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Series {
    pub fn from_records(label: &str, rows: &[RunRecord]) -> Self {
        Series {
            label: label.to_string(),
            x: rows.iter().map(|r| r.timesteps as f64).collect(),
            mean: rows.iter().map(|r| r.eval_return).collect(),
            std: rows.iter().map(|r| r.eval_return_std).collect(),
        }
    }

    pub fn from_aggregate(label: &str, rows: &[AggregateRecord]) -> Self {
        Series {
            label: label.to_string(),
            x: rows.iter().map(|r| r.timesteps as f64).collect(),
            mean: rows.iter().map(|r| r.eval_mean).collect(),
            std: rows.iter().map(|r| r.eval_std).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::Csv(format!("series {:?} has no rows", self.label)));
        }
        if self.mean.len() != self.x.len() || self.std.len() != self.x.len() {
            return Err(Error::Csv(format!("series {:?} has ragged columns", self.label)));
        }
        let all = self.x.iter().chain(&self.mean).chain(&self.std);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Csv(format!("series {:?} has non-finite values", self.label)));
        }
        Ok(())
    }
}

/// Maps data coordinates to SVG coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chart {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Chart {
    pub fn fit(series: &[Series]) -> Self {
        let xs = series.iter().flat_map(|s| s.x.iter().copied());
        let (x_min, x_max) = bounds(xs);
        let ys = series.iter().flat_map(|s| {
            s.mean
                .iter()
                .zip(&s.std)
                .flat_map(|(m, d)| [m - d, m + d])
        });
        let (y_min, y_max) = bounds(ys);
        Chart {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - LEFT - RIGHT)
    }

    pub fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }

    /// SVG units per data unit on the y axis.
    pub fn y_scale(&self) -> f64 {
        (HEIGHT - TOP - BOTTOM) / (self.y_max - self.y_min)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn point(chart: &Chart, x: f64, y: f64) -> String {
    format!("{:.3},{:.3}", chart.x(x), chart.y(y))
}

/// Renders one band and one polyline per series.
pub fn render_svg(series: &[Series], title: &str) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Csv("nothing to plot".into()));
    }
    series.iter().try_for_each(Series::validate)?;
    let chart = Chart::fit(series);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1) = (chart.x(chart.x_min), chart.x(chart.x_max));
    let (y0, y1) = (chart.y(chart.y_min), chart.y(chart.y_max));
    let _ = writeln!(
        svg,
        r#"<path class="axes" d="M{x0:.3},{y1:.3} L{x0:.3},{y0:.3} L{x1:.3},{y0:.3}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = chart.x_min + f * (chart.x_max - chart.x_min);
        let yv = chart.y_min + f * (chart.y_max - chart.y_min);
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            chart.x(xv),
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            chart.y(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">timesteps</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper = (0..s.x.len()).map(|j| point(&chart, s.x[j], s.mean[j] + s.std[j]));
        let lower = (0..s.x.len())
            .rev()
            .map(|j| point(&chart, s.x[j], s.mean[j] - s.std[j]));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = (0..s.x.len()).map(|j| point(&chart, s.x[j], s.mean[j])).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" fill="{color}">{}</text>"#,
            x0 + 10.0,
            TOP + 14.0 + 16.0 * i as f64,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Reads a records or aggregate CSV, choosing columns by its schema line.
pub fn series_from_csv(path: &Path) -> Result<Series> {
    let label = path
        .parent()
        .and_then(Path::file_name)
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let schema = read_schema(path)?;
    match schema.as_str() {
        RECORDS_SCHEMA => Ok(Series::from_records(&label, &read_csv(path, RECORDS_SCHEMA)?)),
        AGGREGATE_SCHEMA => Ok(Series::from_aggregate(&label, &read_csv(path, AGGREGATE_SCHEMA)?)),
        other => Err(Error::Csv(format!(
            "{}: unrecognized schema line {other:?}",
            path.display()
        ))),
    }
}

/// Renders `csv` to `svg`. Nothing is written if the input has no rows.
pub fn plot_csv(csv: &Path, svg: &Path) -> Result<()> {
    let series = series_from_csv(csv)?;
    let text = render_svg(&[series], "mean return ± 1 std")?;
    std::fs::write(svg, text).map_err(|e| Error::io(svg, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(x: &[f64], mean: &[f64], std: &[f64]) -> Series {
        Series {
            label: "s".into(),
            x: x.to_vec(),
            mean: mean.to_vec(),
            std: std.to_vec(),
        }
    }

    fn points(svg: &str, class: &str) -> Vec<(f64, f64)> {
        let tag = format!(r#"class="{class}" points=""#);
        let start = svg.find(&tag).unwrap() + tag.len();
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end]
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn two_rows_give_two_points() {
        let s = series(&[0.0, 10.0], &[1.0, 2.0], &[0.5, 0.5]);
        let svg = render_svg(&[s], "t").unwrap();
        assert_eq!(points(&svg, "mean").len(), 2);
        assert_eq!(points(&svg, "band").len(), 4);
    }

    #[test]
    fn band_height_is_twice_std() {
        let s = series(&[0.0, 5.0, 10.0], &[1.0, 4.0, 3.0], &[0.5, 1.0, 0.25]);
        let chart = Chart::fit(std::slice::from_ref(&s));
        let svg = render_svg(std::slice::from_ref(&s), "t").unwrap();
        let band = points(&svg, "band");
        let n = s.x.len();
        for j in 0..n {
            let upper = band[j].1;
            let lower = band[2 * n - 1 - j].1;
            let expected = 2.0 * s.std[j] * chart.y_scale();
            assert!((lower - upper - expected).abs() < 2e-3, "row {j}");
        }
    }

    #[test]
    fn empty_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("records.csv");
        super::super::records::write_csv::<RunRecord>(&csv, RECORDS_SCHEMA, &[]).unwrap();
        let svg = dir.path().join("out.svg");
        assert!(plot_csv(&csv, &svg).is_err());
        assert!(!svg.exists());
    }

    #[test]
    fn flat_series_still_renders() {
        let s = series(&[3.0], &[7.0], &[0.0]);
        let svg = render_svg(&[s], "t").unwrap();
        assert!(svg.contains("<polyline"));
    }
}
