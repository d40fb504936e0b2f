//! Browser bindings: draw a curve, highlight its worst section and compare
//! two points along it.

use hocurve::analysis::{format_exact, format_truncated, worst_case_bcr};
use hocurve::construction::{build_curve, CurveSpec, Family};
use hocurve::order::compare;
use hocurve::render::{render_svg, RenderOptions};
use hocurve::spatial::{parse_csv_line, CsvLine};
use wasm_bindgen::prelude::*;

/// Largest curve the page will scan for its worst section.
pub const MAX_SCAN_CELLS: usize = 4096;

/// Largest curve the page will draw.
pub const MAX_DRAW_CELLS: usize = 1 << 14;

fn spec(d: usize, k: u32, family: &str) -> Result<CurveSpec, String> {
    let family: Family = family.parse().map_err(|e| format!("{e}"))?;
    let spec = CurveSpec::new(d, family, k);
    spec.check().map_err(|e| e.to_string())?;
    if !(2..=3).contains(&d) {
        return Err(format!("the page draws d = 2 or 3, got {d}"));
    }
    if 1usize << (d * k as usize) > MAX_DRAW_CELLS {
        return Err(format!("more than {MAX_DRAW_CELLS} cells"));
    }
    Ok(spec)
}

/// A highlighted drawing of the worst section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Worst {
    pub svg: String,
    pub start: usize,
    pub end: usize,
    pub exact: String,
    pub decimal: String,
}

pub fn draw(d: usize, k: u32, family: &str) -> Result<String, String> {
    let spec = spec(d, k, family)?;
    let vertices = build_curve(spec).map_err(|e| e.to_string())?.vertices();
    render_svg(&vertices, &RenderOptions::default()).map_err(|e| e.to_string())
}

pub fn worst(d: usize, k: u32, family: &str) -> Result<Worst, String> {
    let spec = spec(d, k, family)?;
    let vertices = build_curve(spec).map_err(|e| e.to_string())?.vertices();
    if vertices.len() > MAX_SCAN_CELLS {
        return Err(format!("scanning is limited to {MAX_SCAN_CELLS} cells"));
    }
    let w = worst_case_bcr(&vertices);
    let opts = RenderOptions {
        highlight: Some(w.range),
        ..RenderOptions::default()
    };
    Ok(Worst {
        svg: render_svg(&vertices, &opts).map_err(|e| e.to_string())?,
        start: w.range.0,
        end: w.range.1,
        exact: format_exact(&w.ratio),
        decimal: format_truncated(&w.ratio, 4),
    })
}

pub fn order(family: &str, p: &str, q: &str) -> Result<i32, String> {
    let family: Family = family.parse().map_err(|e| format!("{e}"))?;
    let parse = |s: &str| match parse_csv_line(s, 1) {
        Ok(CsvLine::Point(p)) => Ok(p),
        Ok(_) => Err(format!("empty point {s:?}")),
        Err(e) => Err(e.to_string()),
    };
    let (p, q) = (parse(p)?, parse(q)?);
    if p.dim() != q.dim() {
        return Err(format!(
            "points have {} and {} coordinates",
            p.dim(),
            q.dim()
        ));
    }
    compare(&p, &q, family).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = curveSvg)]
pub fn curve_svg(d: usize, k: u32, family: &str) -> Result<String, JsError> {
    draw(d, k, family).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = WorstSection)]
pub struct WorstSection(Worst);

#[wasm_bindgen(js_class = WorstSection)]
impl WorstSection {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.0.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn start(&self) -> usize {
        self.0.start
    }

    #[wasm_bindgen(getter)]
    pub fn end(&self) -> usize {
        self.0.end
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> String {
        self.0.exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn decimal(&self) -> String {
        self.0.decimal.clone()
    }
}

#[wasm_bindgen(js_name = worstSection)]
pub fn worst_section(d: usize, k: u32, family: &str) -> Result<WorstSection, JsError> {
    worst(d, k, family)
        .map(WorstSection)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = comparePoints)]
pub fn compare_points(family: &str, p: &str, q: &str) -> Result<i32, JsError> {
    order(family, p, q).map_err(|e| JsError::new(&e))
}
