use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use concentra::harness::GRID_POINTS;

#[derive(Debug, Parser)]
#[command(name = "concentra", version, about = "Concentration bounds for exchangeable-pair and size-bias couplings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an analytic bound curve over a threshold grid.
    Bound {
        #[command(subcommand)]
        family: BoundFamily,
    },
    /// Check a bound or coupling identity against exact or sampled tails.
    Validate {
        #[command(subcommand)]
        family: ValidateFamily,
    },
    /// Bound the p-value of an observed statistic computed from data files.
    Test {
        #[command(subcommand)]
        family: TestFamily,
    },
    /// Dump raw coupling draws.
    Simulate {
        #[command(subcommand)]
        family: SimulateFamily,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tail {
    Upper,
    Lower,
}

impl Tail {
    pub fn as_str(self) -> &'static str {
        match self {
            Tail::Upper => "upper",
            Tail::Lower => "lower",
        }
    }

    /// Maps a statistic so that the requested tail becomes an upper tail.
    pub fn orient(self, x: f64) -> f64 {
        match self {
            Tail::Upper => x,
            Tail::Lower => -x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Remainder {
    Printed,
    Derived,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON object of default flag values; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Explicit comma-separated thresholds.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub thresholds: Vec<f64>,
    /// Upper end of the default evenly spaced grid.
    #[arg(long)]
    pub max_threshold: Option<f64>,
    #[arg(long, default_value_t = GRID_POINTS)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Root seed; required for any sampled run.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    #[arg(long, env = "CONCENTRA_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Built-in kernel: mean-pair, product or sign-avg-d3.
    #[arg(long, default_value = "mean-pair")]
    pub kernel: String,
    /// Tabulated kernel JSON; overrides --kernel.
    #[arg(long)]
    pub kernel_file: Option<PathBuf>,
    /// Atoms of the sample distribution.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-1,1")]
    pub atoms: Vec<f64>,
    /// Atom probabilities; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DipsArrayArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Sup bound of the random array, or an override for a file array.
    #[arg(long)]
    pub b: Option<f64>,
    /// Dense array, JSON or binary.
    #[arg(long)]
    pub array_file: Option<PathBuf>,
    /// Seed of the random dense instance.
    #[arg(long, default_value_t = 0)]
    pub array_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub edges1: Option<PathBuf>,
    #[arg(long)]
    pub edges2: Option<PathBuf>,
    /// Vertex count; inferred from the edge lists when absent.
    #[arg(long)]
    pub n: Option<usize>,
    /// Draw two uniform graphs with this many edges instead of reading files.
    #[arg(long)]
    pub random_edges: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
    /// Sup bound override for the centered array.
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PatternArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// First pattern in one-line notation, e.g. "1 3 2"; identity when absent.
    #[arg(long)]
    pub pattern1: Option<String>,
    #[arg(long)]
    pub pattern2: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum BoundFamily {
    /// Degree-d U-statistic vector, optionally with the exact nu1 for a given n.
    Ustat {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Also report the linearity-matrix constants at this sample size.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Double-indexed permutation statistic with sup bound b.
    Dips {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Mann-Whitney-Wilcoxon statistic for two sample sizes.
    Mww {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Edge-overlap statistic of two graphs on n vertices.
    Graph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Joint upper tail of two circular pattern counts.
    Pattern {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        pattern1: Option<String>,
        #[arg(long)]
        pattern2: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Raw bound from a coupling constant and a matrix, or size-bias constants.
    Generic {
        /// Pathwise coupling bound for the exchangeable-pair form.
        #[arg(long)]
        k: Option<f64>,
        /// Linearity matrix, rows separated by `;`, entries by `,`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Use the determinant/trace lower bound on the smallest singular value.
        #[arg(long)]
        lower_bound: bool,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ValidateFamily {
    /// U-statistic vector under coordinate replacement.
    Ustat {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        exact: bool,
        /// Check the linearity and exchangeability identities instead of dominance.
        #[arg(long)]
        identity: bool,
        /// Check the pathwise coupling bound on sampled pairs.
        #[arg(long)]
        pathwise: bool,
        #[arg(long, value_enum, default_value_t = Tail::Upper)]
        tail: Tail,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Random or file-supplied dense array under random transpositions.
    Dips {
        #[command(flatten)]
        array: DipsArrayArgs,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        identity: bool,
        #[arg(long)]
        pathwise: bool,
        /// Remainder used in the linearity identity.
        #[arg(long, value_enum, default_value_t = Remainder::Derived)]
        remainder: Remainder,
        #[arg(long, value_enum, default_value_t = Tail::Upper)]
        tail: Tail,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Mann-Whitney-Wilcoxon statistic.
    Mww {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum, default_value_t = Tail::Upper)]
        tail: Tail,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Edge-overlap statistic.
    Graph {
        #[command(flatten)]
        graphs: GraphArgs,
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum, default_value_t = Tail::Upper)]
        tail: Tail,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Pattern counts under the size-bias window reordering.
    Pattern {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long)]
        exact: bool,
        /// Check the size-bias identity and the moment formulas.
        #[arg(long)]
        identity: bool,
        #[arg(long)]
        pathwise: bool,
        /// Count non-circular windows; moments only, no formula comparison.
        #[arg(long)]
        linear_windows: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum TestFamily {
    /// Two-sample CSV with a group column (x or y) and a value column.
    Mww {
        /// CSV with header `group,value`, groups `x` and `y`.
        #[arg(long)]
        data: PathBuf,
        /// Exact permutation p-value instead of a sampled one.
        #[arg(long)]
        exact: bool,
        /// Skip the permutation p-value.
        #[arg(long)]
        no_permutation: bool,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Two edge lists over a shared vertex set.
    Graph {
        #[arg(long)]
        edges1: PathBuf,
        #[arg(long)]
        edges2: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        no_permutation: bool,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    #[arg(long, env = "CONCENTRA_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum SimulateFamily {
    /// Coordinate-replacement pairs.
    Ustat {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Transposition pairs on a dense array.
    Dips {
        #[command(flatten)]
        array: DipsArrayArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Transposition pairs on the rank-statistic array.
    Mww {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Transposition pairs on the edge-overlap array.
    Graph {
        #[command(flatten)]
        graphs: GraphArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Size-biased pattern count pairs.
    Pattern {
        #[command(flatten)]
        pattern: PatternArgs,
        /// Biasing direction, 1 or 2.
        #[arg(long, default_value_t = 1)]
        direction: usize,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}
