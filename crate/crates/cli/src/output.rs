//! File emission: CSV with a metadata comment and 17 significant digits,
//! single-document JSON, and plain-polyline SVG with axis ticks.

use std::fmt::Write as _;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats a float with 17 significant digits, locale-free.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::from("")
    }
}

/// Builds a CSV document: a `#` metadata line naming the parameters and the
/// tool version, a header row, then the records (empty cells for gaps).
pub fn csv_document(meta: &str, header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# timemap v{VERSION} {meta}");
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(|x| num(x)).unwrap_or_default()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)
}

/// One polyline of an SVG plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Renders polylines with axes and ticks; vertical dashed lines mark the
/// given abscissas (asymptotes). Pure geometry, no external assets.
pub fn svg_plot(
    series: &[Series],
    vlines: &[f64],
    x_label: &str,
    y_label: &str,
    y_cap: Option<f64>,
) -> String {
    let (w, h) = (760.0, 480.0);
    let (ml, mr, mt, mb) = (64.0, 16.0, 16.0, 48.0);
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if let Some(cap) = y_cap {
        ymax = ymax.min(cap);
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    let px = |x: f64| ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    // axes
    let _ = writeln!(
        out,
        r#"<line x1="{ml}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        h - mb,
        w - mr
    );
    let _ = writeln!(out, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{0}" stroke="black"/>"#, h - mb);
    // ticks
    for k in 0..=5 {
        let x = xmin + (xmax - xmin) * k as f64 / 5.0;
        let xp = px(x);
        let _ = writeln!(out, r#"<line x1="{xp}" y1="{0}" x2="{xp}" y2="{1}" stroke="black"/>"#, h - mb, h - mb + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{xp}" y="{0}" font-size="11" text-anchor="middle">{1:.4}</text>"#,
            h - mb + 18.0,
            x
        );
        let y = ymin + (ymax - ymin) * k as f64 / 5.0;
        let yp = py(y);
        let _ = writeln!(out, r#"<line x1="{0}" y1="{yp}" x2="{ml}" y2="{yp}" stroke="black"/>"#, ml - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{0}" y="{1}" font-size="11" text-anchor="end">{y:.4}</text>"#,
            ml - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{0}" y="{1}" font-size="12" text-anchor="middle">{x_label}</text>"#,
        (ml + w - mr) / 2.0,
        h - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {0})">{y_label}</text>"#,
        (mt + h - mb) / 2.0
    );
    for &v in vlines {
        if v.is_finite() && v >= xmin && v <= xmax {
            let xp = px(v);
            let _ = writeln!(
                out,
                r#"<line x1="{xp}" y1="{mt}" x2="{xp}" y2="{0}" stroke="gray" stroke-dasharray="4 3"/>"#,
                h - mb
            );
        }
    }
    for s in series {
        // break the polyline at gaps or capped values
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() && y <= ymax && y >= ymin {
                segments.last_mut().unwrap().push((px(x), py(y)));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| s.len() > 1) {
            let pts: Vec<String> = seg.iter().map(|&(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.4" points="{}"/>"#,
                s.color,
                pts.join(" ")
            );
        }
    }
    // legend
    let mut ly = mt + 14.0;
    for s in series {
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{2}" stroke-width="2"/><text x="{3}" y="{4}" font-size="11">{5}</text>"#,
            w - mr - 120.0,
            w - mr - 96.0,
            s.color,
            w - mr - 90.0,
            ly + 4.0,
            s.label
        );
        ly += 16.0;
    }
    let _ = writeln!(out, "</svg>");
    out
}
