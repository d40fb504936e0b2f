//! Deterministic SVG drawings of approximating curves: a polyline through
//! cell centres for `d = 2`, an orthographic wireframe projection for
//! `d = 3`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Vertex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("rendering supports d = 2 or 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("nothing to draw")]
    Empty,
    #[error("highlight [{0}, {1}] outside the curve")]
    BadHighlight(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Width and height of the drawing in pixels.
    pub size: f64,
    pub stroke: &'static str,
    pub highlight: Option<(usize, usize)>,
    pub highlight_stroke: &'static str,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            size: 512.0,
            stroke: "#1f4e79",
            highlight: None,
            highlight_stroke: "#c0392b",
        }
    }
}

/// Isometric orthographic projection of a 3D grid point.
fn project3(v: &Vertex) -> (f64, f64) {
    let (x, y, z) = (v.0[0] as f64, v.0[1] as f64, v.0[2] as f64);
    ((x - y) * 0.866_025_403_784_438_6, z + (x + y) * 0.5)
}

fn project(v: &Vertex) -> (f64, f64) {
    match v.dim() {
        2 => (v.0[0] as f64, v.0[1] as f64),
        _ => project3(v),
    }
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    let mut s = String::with_capacity(pts.len() * 14);
    for (i, (x, y)) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s
}

/// Renders the vertex sequence, optionally drawing the section `[i, j]` on
/// top of the curve together with its bounding box.
pub fn render_svg(vertices: &[Vertex], opts: &RenderOptions) -> Result<String, RenderError> {
    let first = vertices.first().ok_or(RenderError::Empty)?;
    let d = first.dim();
    if !(2..=3).contains(&d) {
        return Err(RenderError::UnsupportedDimension(d));
    }
    if let Some((i, j)) = opts.highlight {
        if i > j || j >= vertices.len() {
            return Err(RenderError::BadHighlight(i, j));
        }
    }
    let raw: Vec<(f64, f64)> = vertices.iter().map(project).collect();
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &raw {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    let extent = (max_x - min_x).max(max_y - min_y).max(1.0);
    let margin = opts.size * 0.05;
    let scale = (opts.size - 2.0 * margin) / extent;
    let to_px = |(x, y): (f64, f64)| {
        (
            margin + (x - min_x) * scale,
            opts.size - margin - (y - min_y) * scale,
        )
    };
    let pts: Vec<(f64, f64)> = raw.iter().copied().map(to_px).collect();
    let width = (scale * 0.25).clamp(0.5, 4.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
        s = opts.size
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="{}" stroke-width="{width:.2}" stroke-linejoin="round" points="{}"/>"#,
        opts.stroke,
        points_attr(&pts)
    );
    if let Some((i, j)) = opts.highlight {
        if d == 2 {
            let xs = vertices[i..=j].iter().map(|v| v.0[0]);
            let ys = vertices[i..=j].iter().map(|v| v.0[1]);
            let (lx, hx) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
            let (ly, hy) = (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(0));
            let (x0, y0) = to_px((lx as f64 - 0.5, hy as f64 + 0.5));
            let (x1, y1) = to_px((hx as f64 + 0.5, ly as f64 - 0.5));
            let _ = writeln!(
                svg,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.12" stroke="{c}" stroke-dasharray="4 3"/>"#,
                x1 - x0,
                y1 - y0,
                c = opts.highlight_stroke
            );
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="{:.2}" stroke-linejoin="round" points="{}"/>"#,
            opts.highlight_stroke,
            width * 1.8,
            points_attr(&pts[i..=j])
        );
    }
    let (sx, sy) = pts[0];
    let _ = writeln!(
        svg,
        r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="{:.2}" fill="{}"/>"#,
        width * 2.0,
        opts.stroke
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_curve, CurveSpec, Family};

    fn polyline_points(svg: &str, nth: usize) -> usize {
        let line = svg
            .lines()
            .filter(|l| l.starts_with("<polyline"))
            .nth(nth)
            .unwrap();
        let attr = line.split("points=\"").nth(1).unwrap();
        attr.trim_end_matches("\"/>").split(' ').count()
    }

    #[test]
    fn planar_polyline() {
        let vs = build_curve(CurveSpec::new(2, Family::ButzMoore, 3))
            .unwrap()
            .vertices();
        let svg = render_svg(&vs, &RenderOptions::default()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(polyline_points(&svg, 0), 64);
        assert_eq!(svg, render_svg(&vs, &RenderOptions::default()).unwrap());
    }

    #[test]
    fn highlighted_section() {
        let vs = build_curve(CurveSpec::new(2, Family::ButzMoore, 2))
            .unwrap()
            .vertices();
        let opts = RenderOptions {
            highlight: Some((3, 9)),
            ..RenderOptions::default()
        };
        let svg = render_svg(&vs, &opts).unwrap();
        assert_eq!(polyline_points(&svg, 1), 7);
        assert_eq!(svg.matches("<rect").count(), 2);
        let bad = RenderOptions {
            highlight: Some((3, 16)),
            ..RenderOptions::default()
        };
        assert_eq!(render_svg(&vs, &bad), Err(RenderError::BadHighlight(3, 16)));
    }

    #[test]
    fn spatial_projection_and_limits() {
        let vs = build_curve(CurveSpec::new(3, Family::HoOrigin, 2))
            .unwrap()
            .vertices();
        let svg = render_svg(&vs, &RenderOptions::default()).unwrap();
        assert_eq!(polyline_points(&svg, 0), 64);
        let vs4 = build_curve(CurveSpec::new(4, Family::HoOrigin, 1))
            .unwrap()
            .vertices();
        assert_eq!(
            render_svg(&vs4, &RenderOptions::default()),
            Err(RenderError::UnsupportedDimension(4))
        );
        assert_eq!(
            render_svg(&[], &RenderOptions::default()),
            Err(RenderError::Empty)
        );
    }
}
