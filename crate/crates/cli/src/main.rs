mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use hocurve::analysis::DEFAULT_SCAN_BUDGET;
use hocurve::construction::Family;

/// Hyperorthogonal well-folded space-filling curves.
#[derive(Debug, Parser)]
#[command(name = "hoc", version)]
pub struct Cli {
    /// Worker threads for parallel scans and sorts (0 = all cores).
    #[arg(long, global = true, env = "HOC_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Largest number of cells an exhaustive range scan may cover.
    #[arg(long, global = true, env = "HOC_BUDGET", default_value_t = DEFAULT_SCAN_BUDGET)]
    pub budget: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Dimension.
    #[arg(long, short = 'd', env = "HOC_D")]
    pub d: usize,

    /// Curve family: ho-origin, ho-face or butz.
    #[arg(long, short = 'f', env = "HOC_FAMILY", default_value = "ho-origin")]
    pub family: Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Hyperorthogonality of every edge window.
    Ho,
    /// Recursive decomposition into Gray-code images.
    Wf,
    /// Decomposition into isometric copies of the coarser curve.
    Ss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderKind {
    Curve,
    Lex,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the level-k curve as a curve file.
    Generate {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, short = 'k')]
        k: u32,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Run structural checks on a curve file or a generated curve.
    Verify {
        #[arg(long = "in", conflicts_with_all = ["d", "k", "family"])]
        input: Option<PathBuf>,
        #[arg(long, short = 'd', requires = "k")]
        d: Option<usize>,
        #[arg(long, short = 'k', requires = "d")]
        k: Option<u32>,
        #[arg(long, short = 'f')]
        family: Option<Family>,
        #[arg(long, value_delimiter = ',', default_values = ["ho", "wf", "ss"])]
        checks: Vec<Check>,
    },
    /// Worst-case box-to-curve ratio per level.
    Bcr {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        kmax: u32,
        /// Print ratios as num/den.
        #[arg(long)]
        exact: bool,
    },
    /// Worst-case ratios and lower bounds for several dimensions.
    Table {
        #[arg(long, short = 'd', value_delimiter = ',', default_values = ["2", "3", "4", "5", "6"])]
        d: Vec<usize>,
        /// Scan this level in every dimension instead of the default.
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        tsv: bool,
    },
    /// Print 1 if p precedes q along the curve, -1 if q precedes p, 0 if equal.
    Compare {
        #[arg(long, short = 'f', env = "HOC_FAMILY", default_value = "ho-origin")]
        family: Family,
        p: String,
        q: String,
    },
    /// Reorder a point file along the curve.
    Sort {
        #[arg(long, short = 'f', env = "HOC_FAMILY", default_value = "ho-origin")]
        family: Family,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Group consecutive points into blocks and print the block table.
    Bulkload {
        #[command(flatten)]
        load: LoadArgs,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        /// Print block statistics to standard error.
        #[arg(long)]
        stats: bool,
    },
    /// Print the ids of blocks whose boxes meet a query region.
    Query {
        #[command(flatten)]
        load: LoadArgs,
        /// Closed box as lo_1,...,lo_d,hi_1,...,hi_d.
        #[arg(
            long = "box",
            value_delimiter = ',',
            allow_hyphen_values = true,
            conflicts_with = "sphere",
            required_unless_present = "sphere"
        )]
        query_box: Option<Vec<f64>>,
        /// Ball as c_1,...,c_d,radius.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sphere: Option<Vec<f64>>,
    },
    /// Draw the curve as SVG (d = 2 or 3).
    Render {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, short = 'k')]
        k: u32,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        /// Overlay the worst section and its bounding box.
        #[arg(long)]
        highlight_worst: bool,
        #[arg(long, default_value_t = 512.0)]
        size: f64,
    },
    /// Write uniformly random points.
    Random {
        #[arg(long, short = 'n')]
        n: usize,
        #[arg(long, short = 'd')]
        d: usize,
        #[arg(long, env = "HOC_SEED")]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Points per block.
    #[arg(long = "B", short = 'B', env = "HOC_BLOCK", default_value_t = 64)]
    pub block: usize,
    #[arg(long, short = 'f', env = "HOC_FAMILY", default_value = "ho-origin")]
    pub family: Family,
    #[arg(long, value_enum, default_value = "curve")]
    pub order: OrderKind,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("hoc: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hoc: {e}");
            ExitCode::from(e.code())
        }
    }
}
