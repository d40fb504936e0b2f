use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use hocurve::analysis::{
    bcr_series, check_hyperorthogonal, check_wellfolded, format_exact, format_truncated,
    table_report, worst_case_bcr, AnalysisError, Rational,
};
use hocurve::construction::{build_curve, ConstructionError, CurveSpec};
use hocurve::export::{check_self_similar, extend, read_curve, write_curve, ExportError};
use hocurve::fixed::FixedPoint;
use hocurve::geometry::Vertex;
use hocurve::order::{compare, sort_points};
use hocurve::render::{render_svg, RenderOptions};
use hocurve::spatial::{
    block_stats, bulk_load, bulk_load_lexicographic, load_points, parse_csv_line, query_box,
    query_sphere, write_block_tsv, write_points, Block, CsvLine, PointFormat, PointRecord,
    SpatialError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::{Check, Cli, Command, Format, LoadArgs, OrderKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    CheckFailed(String),
    #[error("{0}")]
    Budget(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CheckFailed(_) | CliError::Other(_) => 1,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            AnalysisError::Construction(c) => c.into(),
            other => CliError::Other(other.into()),
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::UnsupportedDimension { .. }
            | ConstructionError::LevelTooLarge { .. } => CliError::Usage(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<SpatialError> for CliError {
    fn from(e: SpatialError) -> Self {
        CliError::Other(e.into())
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        CliError::Other(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { curve, k, out } => {
            let spec = checked_spec(curve.d, curve.family, *k)?;
            let built = build_curve(spec)?;
            let mut sink = output(out.as_deref())?;
            write_curve(&spec, &built.vertices(), &mut sink)?;
            Ok(())
        }
        Command::Verify {
            input,
            d,
            k,
            family,
            checks,
        } => {
            let (spec, vertices) = match (input, d, k) {
                (Some(path), _, _) => {
                    let file = read_curve(BufReader::new(open(path)?))?;
                    (file.spec, file.vertices)
                }
                (None, Some(d), Some(k)) => {
                    let spec = checked_spec(
                        *d,
                        family.unwrap_or(hocurve::construction::Family::HoOrigin),
                        *k,
                    )?;
                    (spec, build_curve(spec)?.vertices())
                }
                _ => return Err(CliError::Usage("give --in FILE or --d and --k".into())),
            };
            verify(&spec, &vertices, checks)
        }
        Command::Bcr { curve, kmax, exact } => {
            let spec = checked_spec(curve.d, curve.family, *kmax)?;
            let report = bcr_series(spec, cli.budget)?;
            let mut out = io::stdout().lock();
            writeln!(out, "k\tratio")?;
            for (level, r) in report.series.iter().enumerate() {
                writeln!(out, "{}\t{}", level + 1, ratio_text(r, *exact))?;
            }
            writeln!(
                out,
                "worst\t{}\t{}..{}",
                ratio_text(&report.worst_ratio, *exact),
                report.range.0,
                report.range.1
            )?;
            Ok(())
        }
        Command::Table {
            d,
            kmax,
            exact,
            tsv,
        } => {
            if let Some(&bad) = d.iter().find(|&&d| d < 2) {
                return Err(CliError::Usage(format!("dimension {bad} is below 2")));
            }
            let level_for = |dim: usize| match kmax {
                Some(k) => Some(*k),
                None if dim <= 6 => Some((12 / dim) as u32),
                None => None,
            };
            let table = table_report(d, level_for, cli.budget)?;
            let text = if *tsv {
                table.to_tsv(*exact)
            } else {
                table.to_text(*exact)
            };
            print!("{text}");
            Ok(())
        }
        Command::Compare { family, p, q } => {
            let p = parse_point_arg(p)?;
            let q = parse_point_arg(q)?;
            if p.dim() != q.dim() {
                return Err(CliError::Usage(format!(
                    "points have {} and {} coordinates",
                    p.dim(),
                    q.dim()
                )));
            }
            let c = compare(&p, &q, *family).map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{c}");
            Ok(())
        }
        Command::Sort {
            family,
            input,
            out,
            format,
        } => sort_file(*family, input, out.as_deref(), *format),
        Command::Bulkload { load, out, stats } => {
            let (_, blocks) = load_blocks(load)?;
            let mut sink = output(out.as_deref())?;
            write_block_tsv(&blocks, &mut sink)?;
            if *stats {
                let s = block_stats(&blocks);
                eprintln!(
                    "blocks {}\tpoints {}\ttotal_volume {}\tmean_volume {}\tmax_volume {}\tmax_ratio {}",
                    s.count, s.points, s.total_volume, s.mean_volume, s.max_volume, s.max_ratio
                );
            }
            Ok(())
        }
        Command::Query {
            load,
            query_box: qbox,
            sphere,
        } => {
            let (points, blocks) = load_blocks(load)?;
            let d = points.first().map_or(0, |p| p.point.dim());
            let hits = match (qbox, sphere) {
                (Some(b), _) => {
                    if b.len() != 2 * d {
                        return Err(CliError::Usage(format!(
                            "--box needs {} values for {d}-dimensional points",
                            2 * d
                        )));
                    }
                    query_box(&blocks, &b[..d], &b[d..])
                }
                (None, Some(s)) => {
                    if s.len() != d + 1 {
                        return Err(CliError::Usage(format!(
                            "--sphere needs {} values for {d}-dimensional points",
                            d + 1
                        )));
                    }
                    if s[d] < 0.0 {
                        return Err(CliError::Usage("radius must be non-negative".into()));
                    }
                    query_sphere(&blocks, &s[..d], s[d])
                }
                (None, None) => return Err(CliError::Usage("give --box or --sphere".into())),
            };
            let mut out = io::stdout().lock();
            for id in hits {
                writeln!(out, "{id}")?;
            }
            Ok(())
        }
        Command::Render {
            curve,
            k,
            out,
            highlight_worst,
            size,
        } => {
            if !(2..=3).contains(&curve.d) {
                return Err(CliError::Usage(format!(
                    "rendering supports d = 2 or 3, got {}",
                    curve.d
                )));
            }
            let spec = checked_spec(curve.d, curve.family, *k)?;
            let vertices = build_curve(spec)?.vertices();
            let highlight = if *highlight_worst {
                if vertices.len() > cli.budget {
                    return Err(AnalysisError::BudgetExceeded {
                        cells: vertices.len(),
                        budget: cli.budget,
                    }
                    .into());
                }
                Some(worst_case_bcr(&vertices).range)
            } else {
                None
            };
            let opts = RenderOptions {
                size: *size,
                highlight,
                ..RenderOptions::default()
            };
            let svg = render_svg(&vertices, &opts).map_err(|e| CliError::Other(e.into()))?;
            let mut sink = output(out.as_deref())?;
            sink.write_all(svg.as_bytes())?;
            sink.flush()?;
            Ok(())
        }
        Command::Random {
            n,
            d,
            seed,
            format,
            out,
        } => {
            if *d == 0 {
                return Err(CliError::Usage("dimension must be at least 1".into()));
            }
            let points = random_points(*n, *d, *seed);
            let sink = output(out.as_deref())?;
            write_points(&points, point_format(*format), sink)?;
            Ok(())
        }
    }
}

fn checked_spec(d: usize, family: hocurve::construction::Family, k: u32) -> Result<CurveSpec> {
    let spec = CurveSpec::new(d, family, k);
    spec.check().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn ratio_text(r: &Rational, exact: bool) -> String {
    if exact {
        format_exact(r)
    } else {
        format_truncated(r, 2)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Other(anyhow::anyhow!("{}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn point_format(f: Format) -> PointFormat {
    match f {
        Format::Csv => PointFormat::Csv,
        Format::Binary => PointFormat::Binary,
    }
}

fn parse_point_arg(text: &str) -> Result<FixedPoint> {
    match parse_csv_line(text, 1) {
        Ok(CsvLine::Point(p)) => Ok(p),
        Ok(_) => Err(CliError::Usage(format!("empty point {text:?}"))),
        Err(e) => Err(CliError::Usage(format!("point {text:?}: {e}"))),
    }
}

pub fn random_points(n: usize, d: usize, seed: u64) -> Vec<PointRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as u64)
        .map(|id| PointRecord {
            id,
            point: FixedPoint::from_raw((0..d).map(|_| rng.gen()).collect()),
        })
        .collect()
}

fn load_blocks(load: &LoadArgs) -> Result<(Vec<PointRecord>, Vec<Block>)> {
    if load.block == 0 {
        return Err(CliError::Usage("--B must be at least 1".into()));
    }
    let points = load_points(open(&load.input)?, point_format(load.format))?;
    let blocks = match load.order {
        OrderKind::Curve => bulk_load(&points, load.block, load.family)?,
        OrderKind::Lex => bulk_load_lexicographic(&points, load.block)?,
    };
    Ok((points, blocks))
}

fn sort_file(
    family: hocurve::construction::Family,
    input: &Path,
    out: Option<&Path>,
    format: Format,
) -> Result<()> {
    let mut sink = output(out)?;
    match format {
        Format::Binary => {
            let points = load_points(open(input)?, PointFormat::Binary)?;
            let raw: Vec<FixedPoint> = points.iter().map(|p| p.point.clone()).collect();
            let order = sort_points(&raw, family).map_err(SpatialError::from)?;
            let sorted: Vec<PointRecord> = order.iter().map(|&i| points[i].clone()).collect();
            write_points(&sorted, PointFormat::Binary, sink)?;
        }
        Format::Csv => {
            let mut text = String::new();
            open(input)?.read_to_string(&mut text)?;
            let mut comments = Vec::new();
            let mut lines = Vec::new();
            let mut points = Vec::new();
            for (i, line) in text.lines().enumerate() {
                match parse_csv_line(line, i + 1)? {
                    CsvLine::Comment => comments.push(line),
                    CsvLine::Blank => {}
                    CsvLine::Point(p) => {
                        if let Some(first) = points.first() {
                            let first: &FixedPoint = first;
                            if first.dim() != p.dim() {
                                return Err(SpatialError::Parse {
                                    line: i + 1,
                                    message: format!(
                                        "expected {} coordinates, found {}",
                                        first.dim(),
                                        p.dim()
                                    ),
                                }
                                .into());
                            }
                        }
                        lines.push(line);
                        points.push(p);
                    }
                }
            }
            let order = sort_points(&points, family).map_err(SpatialError::from)?;
            for c in comments {
                writeln!(sink, "{c}")?;
            }
            for i in order {
                writeln!(sink, "{}", lines[i])?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

fn verify(spec: &CurveSpec, vertices: &[Vertex], checks: &[Check]) -> Result<()> {
    let d = spec.d;
    let mut failures = Vec::new();
    let mut out = io::stdout().lock();
    for check in checks {
        match check {
            Check::Ho => match extend(vertices) {
                Err(e) => failures.push(format!("ho: {e}")),
                Ok(curve) => match check_hyperorthogonal(&curve.edges(), d) {
                    Ok(()) => writeln!(out, "ho: ok")?,
                    Err(w) => failures.push(format!(
                        "ho: window of {} edges starting at edge {} uses {} axes, expected {}",
                        1u64 << w.n,
                        w.start,
                        w.axes,
                        w.n + 1
                    )),
                },
            },
            Check::Wf => match check_wellfolded(vertices, d) {
                Ok(()) => writeln!(out, "wf: ok")?,
                Err(v) => failures.push(format!(
                    "wf: block {} after {} coarsening steps is not a Gray-code image",
                    v.block, v.level
                )),
            },
            Check::Ss => {
                let extended = spec.effective_family().is_hyperorthogonal();
                match check_self_similar(vertices, d, extended) {
                    Ok(blocks) => {
                        writeln!(out, "ss: ok")?;
                        for (i, b) in blocks.iter().enumerate() {
                            let dir = if b.reversed { "reversed" } else { "forward" };
                            writeln!(out, "  block {i}: {} {dir}", b.perm)?;
                        }
                    }
                    Err(e) => failures.push(format!("ss: {e}")),
                }
            }
        }
    }
    out.flush()?;
    if failures.is_empty() {
        Ok(())
    } else {
        let mut err = io::stdout().lock();
        for f in &failures {
            writeln!(err, "{f}")?;
        }
        Err(CliError::CheckFailed(format!(
            "{} check(s) failed",
            failures.len()
        )))
    }
}
