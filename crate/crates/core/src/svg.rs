//! Static SVG 1.1 output: square markers for point sets, polylines for CSV
//! series. Output bytes depend only on the input.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::PointSet;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn open(out: &mut String, x: f64, y: f64, w: f64, h: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x} {y} {w} {h}" width="{}" height="{}">"#,
        (w * 4.0).min(1200.0),
        (h * 4.0).min(1200.0)
    );
}

/// One unit square per point, in numerator units with y pointing up.
pub fn points_svg(set: &PointSet) -> String {
    let mut out = String::new();
    let Some([x0, x1, y0, y1]) = set.bounding_box() else {
        open(&mut out, 0.0, 0.0, 0.0, 0.0);
        out.push_str("</svg>\n");
        return out;
    };
    let (w, h) = ((x1 - x0 + 3) as f64, (y1 - y0 + 3) as f64);
    open(&mut out, (x0 - 1) as f64, (-y1 - 1) as f64, w, h);
    let _ = writeln!(out, r##"<g fill="#222">"##);
    for p in set.numerators() {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="0.8" height="0.8"/>"#,
            p.x as f64 - 0.4,
            -p.y as f64 - 0.4
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// CSV with a header row: the first column is the abscissa, every other
/// numeric column becomes one polyline.
pub fn series_svg(csv: &str) -> Result<String> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty CSV"))?
        .split(',')
        .map(str::trim)
        .collect();
    if header.len() < 2 {
        return Err(Error::parse(1, "CSV needs at least two columns"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|t| parse_cell(t.trim()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::parse(i + 2, "non-numeric CSV cell"))?;
        if vals.len() != header.len() {
            return Err(Error::parse(i + 2, "ragged CSV row"));
        }
        rows.push(vals);
    }
    let mut out = String::new();
    if rows.is_empty() {
        open(&mut out, 0.0, 0.0, 0.0, 0.0);
        out.push_str("</svg>\n");
        return Ok(out);
    }
    let (w, h) = (400.0, 300.0);
    let (xmin, xmax) = bounds(rows.iter().map(|r| r[0]));
    let (ymin, ymax) = bounds(rows.iter().flat_map(|r| r[1..].iter().copied()));
    let sx = |x: f64| if xmax > xmin { (x - xmin) / (xmax - xmin) * w } else { w / 2.0 };
    let sy = |y: f64| if ymax > ymin { h - (y - ymin) / (ymax - ymin) * h } else { h / 2.0 };
    open(&mut out, -10.0, -10.0, w + 20.0, h + 20.0);
    for (k, name) in header.iter().enumerate().skip(1) {
        let pts: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.3},{:.3}", sx(r[0]), sy(r[k])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            PALETTE[(k - 1) % PALETTE.len()],
            pts.join(" "),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Numbers or `p/q` rationals.
fn parse_cell(t: &str) -> Option<f64> {
    if let Some((p, q)) = t.split_once('/') {
        let (p, q): (f64, f64) = (p.parse().ok()?, q.parse().ok()?);
        return (q != 0.0).then(|| p / q);
    }
    t.parse().ok().filter(|v: &f64| v.is_finite())
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
