//! Builds the statistic instances described by command-line flags.

use concentra::dips::{DipsArray, EdgeSet};
use concentra::io::{read_dense_array, read_edge_list, read_kernel_json};
use concentra::patterns::{Pattern, PatternPair};
use concentra::rng::stream;
use concentra::ustat::{is_degenerate, kernel_mean, FiniteDistribution, Kernel, UStatModel};
use concentra::Result;

use crate::bad;
use crate::opts::{DipsArrayArgs, GraphArgs, KernelArgs, PatternArgs};

/// Absolute tolerance on `E ψ` for a kernel to count as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-12;

pub struct UStatInstance {
    pub kernel: Kernel,
    pub dist: FiniteDistribution,
    pub model: UStatModel,
    pub degenerate: bool,
}

pub fn ustat(args: &KernelArgs) -> Result<UStatInstance> {
    let kernel = match &args.kernel_file {
        Some(path) => read_kernel_json(path)?,
        None => Kernel::by_name(&args.kernel)?,
    };
    let dist = if args.probs.is_empty() {
        FiniteDistribution::uniform(args.atoms.clone())?
    } else {
        FiniteDistribution::new(args.atoms.clone(), args.probs.clone())?
    };
    let mean = kernel_mean(&kernel, &dist)?;
    if mean.abs() > CENTERING_TOLERANCE {
        return bad(format!(
            "kernel `{}` has mean {mean} under the sample distribution; it must be centered",
            kernel.name()
        ));
    }
    let degenerate = is_degenerate(&kernel, &dist)?;
    let model = UStatModel::new(&kernel, &dist, args.n)?;
    Ok(UStatInstance { kernel, dist, model, degenerate })
}

pub const DEGENERACY_WARNING: &str =
    "first projection vanishes on every atom; the kernel is degenerate and the bound's nondegeneracy hypothesis fails";

pub fn dips_array(args: &DipsArrayArgs) -> Result<DipsArray> {
    match &args.array_file {
        Some(path) => {
            let array = read_dense_array(path)?;
            if let Some(n) = args.n {
                if n != array.n() {
                    return bad(format!("--n {n} disagrees with the array file (n = {})", array.n()));
                }
            }
            match args.b {
                Some(b) => array.with_sup_bound(b),
                None => Ok(array),
            }
        }
        None => {
            let Some(n) = args.n else {
                return bad("--n is required unless --array-file is given");
            };
            DipsArray::random_symmetric(n, args.b.unwrap_or(1.0), &mut stream(args.array_seed))
        }
    }
}

pub fn graphs(args: &GraphArgs) -> Result<(EdgeSet, EdgeSet)> {
    if let Some(m) = args.random_edges {
        let Some(n) = args.n else {
            return bad("--random-edges needs --n");
        };
        let mut rng = stream(args.graph_seed);
        let e1 = EdgeSet::random(n, m, &mut rng)?;
        let e2 = EdgeSet::random(n, m, &mut rng)?;
        return Ok((e1, e2));
    }
    let (Some(p1), Some(p2)) = (&args.edges1, &args.edges2) else {
        return bad("give --edges1 and --edges2, or --random-edges");
    };
    let e1 = read_edge_list(p1, args.n)?;
    let e2 = read_edge_list(p2, args.n)?;
    let n = e1.n().max(e2.n());
    Ok((EdgeSet::new(n, e1.edges())?, EdgeSet::new(n, e2.edges())?))
}

pub fn pattern(text: Option<&str>, m: usize) -> Result<Pattern> {
    let pat = match text {
        Some(s) => s.parse::<Pattern>()?,
        None => Pattern::identity(m)?,
    };
    if pat.m() != m {
        return bad(format!("pattern `{pat}` has length {}, but --m is {m}", pat.m()));
    }
    Ok(pat)
}

pub fn pattern_pair(args: &PatternArgs) -> Result<PatternPair> {
    PatternPair::new(args.n, pattern(args.pattern1.as_deref(), args.m)?, pattern(args.pattern2.as_deref(), args.m)?)
}
