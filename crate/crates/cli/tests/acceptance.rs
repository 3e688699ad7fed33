//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits nonzero if
//! any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use concentra::bounds::{sigma1_lower_bound, smallest_singular_value, SquareMatrix};
use concentra::dips::{
    dips_grid_scale, dips_tail_bound, graph_array, graph_mean, lambda_dips, DipsArray, EdgeSet, RemainderForm,
};
use concentra::harness::{
    dominance_report, empirical_tail, exact_tail, linearity_residual_dips, linearity_residual_ustat,
    size_bias_identity, size_bias_test_functions, MonteCarlo, Param, Verdict,
};
use concentra::patterns::{pattern_mean, pattern_variance, Pattern, PatternPair};
use concentra::perm::Permutations;
use concentra::rng::stream;
use concentra::ustat::{FiniteDistribution, Kernel, UStatModel};
use concentra_cli::instance;
use concentra_cli::opts::{DipsArrayArgs, GridArgs, KernelArgs, McArgs, Tail};
use concentra_cli::validate::{self, array_dominance, mww_dominance};
use concentra_cli::Outcome;
use rand::Rng;

struct Criterion {
    id: u32,
    title: &'static str,
    pass: bool,
    details: Vec<String>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self { id, title, pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.pass &= ok;
        self.details.push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, detail.into()));
    }

    fn note(&mut self, detail: impl Into<String>) {
        self.details.push(format!("info {}", detail.into()));
    }

    fn timed(&mut self, started: Instant, limit: Duration) {
        let took = started.elapsed();
        self.check(took < limit, format!("runtime {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs()));
    }

    fn print(&self) {
        println!("[{}] {}. {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.title);
        for d in &self.details {
            println!("       {d}");
        }
    }
}

fn grid_default() -> GridArgs {
    GridArgs { thresholds: Vec::new(), max_threshold: None, grid_points: 40 }
}

fn mc_args(seed: u64, samples: u64) -> McArgs {
    McArgs { seed: Some(seed), samples, confidence: 0.99, threads: 4 }
}

/// Dense random instance shared with the CLI's default `--array-seed 0`.
fn dense_array(n: usize) -> DipsArray {
    instance::dips_array(&DipsArrayArgs { n: Some(n), b: Some(1.0), array_file: None, array_seed: 0 })
        .expect("random dense array")
}

fn summarize(o: &Outcome) -> String {
    if o.violations.is_empty() {
        format!("{} rows, no violations", o.table.rows.len())
    } else {
        o.violations.join("; ")
    }
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "exact linearity, U-statistics (d=2, n=5, uniform +-1, mean-pair)");
    let started = Instant::now();
    let model = UStatModel::new(&Kernel::mean_pair(), &FiniteDistribution::rademacher(), 5).expect("model");
    match linearity_residual_ustat(&model) {
        Ok(r) => c.check(
            r.max_residual <= 1e-10,
            format!(
                "max residual {:.3e} over {} configurations (tolerance 1e-10)",
                r.max_residual, r.sample_space_size
            ),
        ),
        Err(e) => c.check(false, e.to_string()),
    }
    c.timed(started, Duration::from_secs(5));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "exact linearity with remainder, DIPS (dense random array, n=5)");
    let started = Instant::now();
    let array = dense_array(5);
    match linearity_residual_dips(&array, RemainderForm::Printed) {
        Ok(r) => c.check(
            r.max_residual <= 1e-9,
            format!(
                "printed remainder R1 = -2V1/(n(n-1)): max residual {:.3e} over {} permutations (tolerance 1e-9)",
                r.max_residual, r.sample_space_size
            ),
        ),
        Err(e) => c.check(false, e.to_string()),
    }
    c.timed(started, Duration::from_secs(10));
    match linearity_residual_dips(&array, RemainderForm::Derived) {
        Ok(r) => c.note(format!(
            "sign-corrected remainder R1 = +2V1/(n(n-1)): max residual {:.3e} (not the stated criterion)",
            r.max_residual
        )),
        Err(e) => c.note(e.to_string()),
    }
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "pathwise coupling bounds on 10^6 sampled pairs each");
    let samples = 1_000_000;
    let ustat_cases = [("mean-pair", 20usize), ("sign-avg-d3", 15)];
    for (i, (kernel, n)) in ustat_cases.iter().enumerate() {
        let args = KernelArgs {
            kernel: kernel.to_string(),
            kernel_file: None,
            atoms: vec![-1.0, 1.0],
            probs: Vec::new(),
            n: *n,
        };
        let res = instance::ustat(&args)
            .and_then(|inst| validate::ustat_pathwise(&inst.model, &mc_args(31 + i as u64, samples)));
        match res {
            Ok(o) => c.check(o.violations.is_empty(), format!("ustat {kernel} n={n}: {}", summarize(&o))),
            Err(e) => c.check(false, format!("ustat {kernel}: {e}")),
        }
    }
    match validate::dips_pathwise("dips", &dense_array(10), &mc_args(41, samples)) {
        Ok(o) => c.check(o.violations.is_empty(), format!("dips dense n=10: {}", summarize(&o))),
        Err(e) => c.check(false, format!("dips: {e}")),
    }
    let pair = PatternPair::new(10, Pattern::identity(3).unwrap(), "1 3 2".parse().unwrap()).unwrap();
    match validate::pattern_pathwise(&pair, &mc_args(51, samples)) {
        Ok(o) => c.check(o.violations.is_empty(), format!("patterns m=3 n=10: {}", summarize(&o))),
        Err(e) => c.check(false, format!("patterns: {e}")),
    }
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "singular-value lower bound dominance and nu1 < 2n for DIPS");
    let mut rng = stream(2024);
    let (mut tested, mut bad, mut worst) = (0, 0, f64::NEG_INFINITY);
    while tested < 10_000 {
        let k = rng.random_range(2..=6);
        let entries: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = SquareMatrix::new(k, entries).unwrap();
        if a.determinant().abs() < 1e-8 {
            continue;
        }
        tested += 1;
        let gap = sigma1_lower_bound(&a).unwrap() - smallest_singular_value(&a);
        worst = worst.max(gap);
        if gap > 1e-9 {
            bad += 1;
        }
    }
    c.check(
        bad == 0,
        format!("{tested} random invertible matrices, {bad} violations, max(lower - sigma1) = {worst:.3e}"),
    );
    let failing: Vec<usize> =
        (2..=1000).filter(|&n| 1.0 / smallest_singular_value(&lambda_dips(n).unwrap()) >= 2.0 * n as f64).collect();
    c.check(failing.is_empty(), format!("nu1(lambda_dips(n)) < 2n for n in 2..=1000; failures {failing:?}"));
    c
}

fn exact_pattern_moments(n: usize, pat: &Pattern) -> (f64, f64) {
    let (mut s1, mut s2, mut total) = (0.0, 0.0, 0.0);
    Permutations::for_each(n, |pi| {
        let w = concentra::patterns::pattern_count(pi, pat).unwrap() as f64;
        s1 += w;
        s2 += w * w;
        total += 1.0;
    })
    .unwrap();
    let mean = s1 / total;
    (mean, s2 / total - mean * mean)
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "exact bound dominance (MWW 3+3, DIPS n=6) and pattern moments (m=3, n=7)");
    let started = Instant::now();
    let none = McArgs { seed: None, samples: 100, confidence: 0.99, threads: 1 };
    for tail in [Tail::Upper, Tail::Lower] {
        match mww_dominance(3, 3, true, tail, &grid_default(), &none) {
            Ok(o) => c.check(o.violations.is_empty(), format!("MWW n1=n2=3 {} tail: {}", tail.as_str(), summarize(&o))),
            Err(e) => c.check(false, e.to_string()),
        }
        let array = dense_array(6);
        let upper = dips_grid_scale(1.0, 6).unwrap();
        let res =
            array_dominance("dips", &array, true, tail, &grid_default(), upper, &none, Vec::<Param>::new(), |t| {
                dips_tail_bound(t, 1.0, 6)
            });
        match res {
            Ok(o) => {
                c.check(o.violations.is_empty(), format!("DIPS dense n=6 {} tail: {}", tail.as_str(), summarize(&o)))
            }
            Err(e) => c.check(false, e.to_string()),
        }
    }
    let n = 7;
    let mu = pattern_mean(n, 3).unwrap();
    let mut perms = Permutations::new(3).unwrap();
    while let Some(tau) = perms.next_perm() {
        let pat = Pattern::new(tau.to_vec()).unwrap();
        let (mean, var) = exact_pattern_moments(n, &pat);
        let formula = pattern_variance(n, &pat).unwrap();
        c.check((mean - mu).abs() <= 1e-9, format!("pattern {pat}: exact mean {mean:.12} vs n/m! = {mu:.12}"));
        c.check(
            (var - formula).abs() <= 1e-9,
            format!("pattern {pat}: exact variance {var:.12} vs formula {formula:.12}"),
        );
    }
    c.timed(started, Duration::from_secs(60));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "size-bias identity, n=6, m=3, exhaustive over (pi, beta)");
    let pairs = [("1 2 3", "1 3 2"), ("2 3 1", "3 2 1")];
    for (a, b) in pairs {
        let pair = PatternPair::new(6, a.parse().unwrap(), b.parse().unwrap()).unwrap();
        let mut worst: f64 = 0.0;
        let mut mean_exact = true;
        for direction in 0..2 {
            for f in size_bias_test_functions() {
                let r = size_bias_identity(&pair, direction, &f).expect("enumeration");
                worst = worst.max(r.residual);
                mean_exact &= r.mean == r.mu;
            }
        }
        c.check(
            worst <= 1e-9,
            format!("patterns ({a}), ({b}): max residual {worst:.3e} over 2 directions x 5 functions"),
        );
        c.check(mean_exact, format!("patterns ({a}), ({b}): E W_i equals n/m! = 1 exactly"));
    }
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "Monte Carlo dominance at moderate scale (10^5 samples, confidence 0.99)");
    let limit = Duration::from_secs(120);
    for tail in [Tail::Upper, Tail::Lower] {
        let started = Instant::now();
        let array = dense_array(20);
        let upper = dips_grid_scale(1.0, 20).unwrap();
        let res = array_dominance(
            "dips",
            &array,
            false,
            tail,
            &grid_default(),
            upper,
            &mc_args(7, 100_000),
            Vec::new(),
            |t| dips_tail_bound(t, 1.0, 20),
        );
        match res {
            Ok(o) => {
                c.check(o.violations.is_empty(), format!("DIPS b=1 n=20 {} tail: {}", tail.as_str(), summarize(&o)))
            }
            Err(e) => c.check(false, e.to_string()),
        }
        c.timed(started, limit);

        let started = Instant::now();
        match mww_dominance(25, 25, false, tail, &grid_default(), &mc_args(8, 100_000)) {
            Ok(o) => {
                c.check(o.violations.is_empty(), format!("MWW n1=n2=25 {} tail: {}", tail.as_str(), summarize(&o)))
            }
            Err(e) => c.check(false, e.to_string()),
        }
        c.timed(started, limit);

        let started = Instant::now();
        let mut rng = stream(9);
        let e1 = EdgeSet::random(25, 30, &mut rng).unwrap();
        let e2 = EdgeSet::random(25, 30, &mut rng).unwrap();
        let array = graph_array(&e1, &e2).unwrap();
        let mu = graph_mean(&e1, &e2).unwrap();
        let upper = dips_grid_scale(2.0, 25).unwrap();
        let res = array_dominance(
            "graph",
            &array,
            false,
            tail,
            &grid_default(),
            upper,
            &mc_args(10, 100_000),
            Vec::new(),
            |t| dips_tail_bound(t, 2.0, 25),
        );
        match res {
            Ok(o) => c.check(
                o.violations.is_empty(),
                format!("graph n=25, 30+30 edges (mu {mu:.4}) {} tail: {}", tail.as_str(), summarize(&o)),
            ),
            Err(e) => c.check(false, e.to_string()),
        }
        c.timed(started, limit);
    }
    c
}

fn coin(seed: u64, count: u64, emit: &mut dyn FnMut(f64)) -> concentra::Result<()> {
    let mut rng = stream(seed);
    for _ in 0..count {
        emit(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    Ok(())
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "negative control: bound scaled by 0.01 on a fair coin at t=0.5");
    let hoeffding = |t: f64| (-t * t / 2.0).exp();
    let mc = MonteCarlo::new(88, 100_000).unwrap();
    let frag = empirical_tail(&mc, &[0.5], 0.99, coin).unwrap();
    let scaled = dominance_report(&[0.01 * hoeffding(0.5)], &frag).unwrap();
    c.check(
        scaled.rows[0].violation == Verdict::Yes,
        format!(
            "sampled: ci_low {:.4} vs scaled bound {:.4} -> {}",
            frag.ci_low[0],
            scaled.rows[0].bound,
            scaled.rows[0].violation.as_str()
        ),
    );
    let honest = dominance_report(&[hoeffding(0.5)], &frag).unwrap();
    c.check(!honest.has_violation(), format!("sampled: unscaled bound {:.4} not flagged", hoeffding(0.5)));
    let exact = exact_tail(&[-1.0, 1.0], &[0.5]).unwrap();
    let scaled = dominance_report(&[0.01 * hoeffding(0.5)], &exact).unwrap();
    c.check(scaled.has_violation(), "exact: scaled bound flagged against tail 0.5");
    c
}

fn run_cli(args: &[&str], threads: &str, out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_concentra"))
        .args(args)
        .args(["--threads", threads, "--output"])
        .arg(out)
        .env_remove("CONCENTRA_THREADS")
        .status()
        .map_err(|e| e.to_string())?;
    if !matches!(status.code(), Some(0) | Some(1)) {
        return Err(format!("exit status {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9, "reproducibility: --threads 4 vs --threads 1 give byte-identical CSV");
    let dir = tempfile::tempdir().expect("temp dir");
    let runs: [&[&str]; 8] = [
        &["validate", "dips", "--n", "20", "--b", "1", "--samples", "100000", "--seed", "7"],
        &["validate", "mww", "--n1", "25", "--n2", "25", "--samples", "50000", "--seed", "11", "--tail", "lower"],
        &["validate", "graph", "--n", "25", "--random-edges", "30", "--samples", "50000", "--seed", "12"],
        &["validate", "ustat", "--n", "12", "--samples", "20000", "--seed", "13", "--identity"],
        &["validate", "pattern", "--n", "12", "--samples", "20000", "--seed", "14", "--pathwise"],
        &["simulate", "dips", "--n", "9", "--samples", "20000", "--seed", "15"],
        &["simulate", "pattern", "--n", "10", "--pattern1", "2 1 3", "--samples", "20000", "--seed", "16"],
        &["simulate", "ustat", "--n", "8", "--kernel", "sign-avg-d3", "--samples", "20000", "--seed", "17"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let one = run_cli(args, "1", &dir.path().join(format!("{i}-1.csv")));
        let four = run_cli(args, "4", &dir.path().join(format!("{i}-4.csv")));
        let label = args.join(" ");
        match (one, four) {
            (Ok(a), Ok(b)) => {
                c.check(a == b && !a.is_empty(), format!("{label}: {} bytes, identical={}", a.len(), a == b))
            }
            (Err(e), _) | (_, Err(e)) => c.check(false, format!("{label}: {e}")),
        }
    }
    c
}

fn main() {
    let criteria: [fn() -> Criterion; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = 0;
    for run in criteria {
        let c = run();
        c.print();
        failed += (!c.pass) as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
