//! Minimal deterministic SVG line charts.
//!
//! Coordinates are printed with two decimals and nothing time-dependent is
//! emitted, so the same input always renders to the same bytes.

use std::collections::HashMap;
use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum PlotError {
    MissingColumn(String),
    NoData,
    BadValue { line: usize, column: String },
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::MissingColumn(c) => write!(f, "input is missing column `{c}`"),
            PlotError::NoData => write!(f, "input has no data rows"),
            PlotError::BadValue { line, column } => write!(f, "line {line}: non-numeric value in column `{column}`"),
        }
    }
}

impl std::error::Error for PlotError {}

/// Numeric columns of a CSV file, keyed by header name.
#[derive(Debug, Clone, Default)]
pub struct Columns {
    index: HashMap<String, usize>,
    rows: Vec<Vec<String>>,
}

impl Columns {
    pub fn parse(text: &str) -> Result<Self, PlotError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(PlotError::NoData)?;
        let index = header
            .split(',')
            .enumerate()
            .map(|(i, name)| (name.trim().to_string(), i))
            .collect();
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
            .collect();
        Ok(Columns { index, rows })
    }

    /// Values of the named column; booleans read as 0/1.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>, PlotError> {
        let col = *self
            .index
            .get(name)
            .ok_or_else(|| PlotError::MissingColumn(name.to_string()))?;
        if self.rows.is_empty() {
            return Err(PlotError::NoData);
        }
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let bad = || PlotError::BadValue {
                    line: i + 2,
                    column: name.to_string(),
                };
                match row.get(col).map(String::as_str) {
                    Some("true") => Ok(1.0),
                    Some("false") => Ok(0.0),
                    Some(v) => v.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad),
                    None => Err(bad()),
                }
            })
            .collect()
    }
}

/// Linear map from data space onto the plotting area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Axes {
    pub fn fit(points: &[(f64, f64)], y_from_zero: bool) -> Self {
        let span = |vals: &mut dyn Iterator<Item = f64>| {
            vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (mut x_min, mut x_max) = span(&mut points.iter().map(|p| p.0));
        let (mut y_min, mut y_max) = span(&mut points.iter().map(|p| p.1));
        if y_from_zero {
            y_min = y_min.min(0.0);
        }
        if x_max - x_min <= 0.0 {
            x_min -= 1.0;
            x_max += 1.0;
        }
        if y_max - y_min <= 0.0 {
            y_min -= 1.0;
            y_max += 1.0;
        }
        Axes {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    /// Inverse of [`Axes::py`].
    pub fn data_y(&self, py: f64) -> f64 {
        self.y_min + (HEIGHT - MARGIN_BOTTOM - py) / (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) * (self.y_max - self.y_min)
    }
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub y_from_zero: bool,
    /// Draw a marker on every point and label the first and last.
    pub markers: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

impl Chart<'_> {
    pub fn axes(&self) -> Axes {
        Axes::fit(&self.points, self.y_from_zero)
    }

    pub fn render(&self) -> Result<String, PlotError> {
        if self.points.is_empty() {
            return Err(PlotError::NoData);
        }
        let ax = self.axes();
        let mut svg = String::new();
        let w = |svg: &mut String, s: String| svg.push_str(&s);
        w(
            &mut svg,
            format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
            ),
        );
        w(
            &mut svg,
            format!("<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"),
        );
        w(
            &mut svg,
            format!(
                "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
                WIDTH / 2.0,
                escape(self.title)
            ),
        );

        let (left, right) = (ax.px(ax.x_min), ax.px(ax.x_max));
        let (bottom, top) = (ax.py(ax.y_min), ax.py(ax.y_max));
        w(
            &mut svg,
            format!("<path d=\"M{left:.2} {top:.2} L{left:.2} {bottom:.2} L{right:.2} {bottom:.2}\" stroke=\"black\" fill=\"none\"/>\n"),
        );
        for i in 0..=TICKS {
            let f = i as f64 / TICKS as f64;
            let xv = ax.x_min + f * (ax.x_max - ax.x_min);
            let yv = ax.y_min + f * (ax.y_max - ax.y_min);
            let (x, y) = (ax.px(xv), ax.py(yv));
            w(
                &mut svg,
                format!(
                    "<line x1=\"{x:.2}\" y1=\"{bottom:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
                    bottom + 5.0,
                    bottom + 18.0,
                    tick_label(xv)
                ),
            );
            w(
                &mut svg,
                format!(
                    "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{left:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
                    left - 5.0,
                    left - 8.0,
                    y + 4.0,
                    tick_label(yv)
                ),
            );
        }
        w(
            &mut svg,
            format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
                (left + right) / 2.0,
                HEIGHT - 14.0,
                escape(self.x_label)
            ),
        );
        w(
            &mut svg,
            format!(
                "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
                (top + bottom) / 2.0,
                (top + bottom) / 2.0,
                escape(self.y_label)
            ),
        );

        let mut pts = String::new();
        for (i, &(x, y)) in self.points.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            write!(pts, "{:.2},{:.2}", ax.px(x), ax.py(y)).expect("string write");
        }
        w(
            &mut svg,
            format!("<polyline points=\"{pts}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n"),
        );
        if self.markers {
            for &(x, y) in &self.points {
                w(
                    &mut svg,
                    format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f77b4\"/>\n",
                        ax.px(x),
                        ax.py(y)
                    ),
                );
            }
            let labels = [("S", self.points[0]), ("G", self.points[self.points.len() - 1])];
            for (label, (x, y)) in labels {
                w(
                    &mut svg,
                    format!(
                        "<text x=\"{:.2}\" y=\"{:.2}\" font-weight=\"bold\">{label}</text>\n",
                        ax.px(x) + 6.0,
                        ax.py(y) - 6.0
                    ),
                );
            }
        }
        svg.push_str("</svg>\n");
        Ok(svg)
    }
}

/// Points of the last `<polyline>` in an SVG produced by [`Chart::render`].
pub fn polyline_points(svg: &str) -> Vec<(f64, f64)> {
    let Some(start) = svg.rfind("<polyline points=\"") else {
        return Vec::new();
    };
    let rest = &svg[start + "<polyline points=\"".len()..];
    let end = rest.find('"').unwrap_or(rest.len());
    rest[..end]
        .split(' ')
        .filter_map(|p| {
            let (x, y) = p.split_once(',')?;
            Some((x.parse().ok()?, y.parse().ok()?))
        })
        .collect()
}
