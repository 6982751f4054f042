//! CSV and SVG writers. Floats use `Display`, the shortest string that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dynamo_core::Error;

/// Header, rows, and an optional trailing block of sections separated by blank lines.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut t = Self::default();
        t.text.push_str(&header.join(","));
        t.text.push('\n');
        t
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    /// Starts a new section after a blank line.
    pub fn section(&mut self, header: &[&str]) {
        self.text.push('\n');
        self.text.push_str(&header.join(","));
        self.text.push('\n');
    }

    /// `key=value` lines after a blank line.
    pub fn summary(&mut self, pairs: &[(&str, String)]) {
        self.text.push('\n');
        for (k, v) in pairs {
            let _ = writeln!(self.text, "{k}={v}");
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        fs::write(path, &self.text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

pub fn f(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    // Degenerate ranges get a unit span so the mapping stays finite.
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    (x0, x1, y0, y1)
}

/// Line plot (`connect = true`) or scatter plot of the given series.
pub fn svg_plot(series: &[Series], x_label: &str, y_label: &str, connect: bool) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<polyline fill="none" stroke="black" points="{l},{t} {l},{b} {r},{b}"/>"#);
    if y0 < 0.0 && y1 > 0.0 {
        let z = sy(0.0);
        let _ = writeln!(s, r##"<line x1="{l}" y1="{z}" x2="{r}" y2="{z}" stroke="#999" stroke-dasharray="4"/>"##);
    }
    for (k, se) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = se
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| (sx(x), sy(y)))
            .collect();
        if connect {
            let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                coords.join(" "),
                se.label
            );
        } else {
            for (x, y) in pts {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#);
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{x_label} [{x0}, {x1}]</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {})">{y_label} [{y0}, {y1}]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, body: &str) -> Result<(), Error> {
    fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
