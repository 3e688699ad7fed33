//! `validate`: dominance of each bound over exact or sampled tails, the
//! coupling identities, and the pathwise coupling bounds.

use concentra::dips::{
    dips_grid_scale, dips_tail_bound, eta_bn, graph_array, graph_mean, mww_array, mww_tail_bound, phi_bn, DipsArray,
    RemainderForm,
};
use concentra::harness::{
    dips_exact_pairs, dominance_report_with, empirical_tail, enumerate_product_space, exact_permutation_tail,
    exact_tail_weighted, exchangeability_exact, exchangeability_sampled, format_number, linearity_residual_dips,
    linearity_residual_dips_sampled, linearity_residual_ustat, linearity_residual_ustat_sampled,
    mww_exact_distribution, size_bias_identity, size_bias_test_functions, ustat_exact_pairs, Cell,
    ExchangeabilityReport, IdentityReport, Method, MonteCarlo, Param, Table, TailFragment, Verdict,
};
use concentra::patterns::{
    pattern_bound, pattern_constants, pattern_count_linear, pattern_coupling_bound, pattern_mean, pattern_variance,
    pattern_variance_lower_bound, PatternPair,
};
use concentra::perm::{self, Permutations};
use concentra::rng::{child_seed, stream};
use concentra::ustat::{gamma_d, kappa_d, ustat_grid_scale, ustat_tail_bound, UStatModel};
use concentra::Result;
use rand::distr::Distribution;

use crate::bound::require_pattern_len;
use crate::instance::{self, UStatInstance, DEGENERACY_WARNING};
use crate::opts::{GridArgs, McArgs, OutputArgs, Remainder, Tail, ValidateFamily};
use crate::{bad, mc_from, threshold_grid, Outcome};

/// Tolerance on the exact U-statistic linearity residual.
pub const USTAT_LINEARITY_TOL: f64 = 1e-10;
/// Tolerance on the DIPS linearity residual.
pub const DIPS_LINEARITY_TOL: f64 = 1e-9;
/// Tolerance on exact total-variation distances and size-bias residuals.
pub const EXACT_IDENTITY_TOL: f64 = 1e-9;
/// Relative slack on pathwise bounds, for rounding in incremental updates.
pub const PATHWISE_SLACK: f64 = 1e-12;

pub fn run(family: ValidateFamily) -> (OutputArgs, Result<Outcome>) {
    match family {
        ValidateFamily::Ustat { kernel, exact, identity, pathwise, tail, grid, mc, out } => {
            let res = exclusive(identity, pathwise).and_then(|_| {
                let inst = instance::ustat(&kernel)?;
                let mut o = if identity {
                    ustat_identity(&inst.model, exact, &mc)?
                } else if pathwise {
                    ustat_pathwise(&inst.model, &mc)?
                } else {
                    ustat_dominance(&inst, exact, tail, &grid, &mc)?
                };
                o.table = o.table.meta("kernel", inst.kernel.name());
                if inst.degenerate {
                    o.warnings.push(DEGENERACY_WARNING.into());
                    o.table = o.table.meta("degenerate", "true");
                }
                Ok(o)
            });
            (out, res)
        }
        ValidateFamily::Dips { array, exact, identity, pathwise, remainder, tail, grid, mc, out } => {
            let res = exclusive(identity, pathwise).and_then(|_| {
                let a = instance::dips_array(&array)?;
                let mut o = if identity {
                    dips_identity(&a, remainder, exact, &mc)?
                } else if pathwise {
                    dips_pathwise("dips", &a, &mc)?
                } else {
                    let b = a.sup_bound();
                    let n = a.n();
                    let scale = dips_grid_scale(b, n)?.min(dips_cap(&a));
                    let params = dips_params(n, b)?;
                    array_dominance("dips", &a, exact, tail, &grid, scale, &mc, params, |t| dips_tail_bound(t, b, n))?
                };
                o.table = o.table.meta("array", a.kind());
                if array.array_file.is_none() {
                    o.table = o.table.meta("array_seed", array.array_seed);
                }
                Ok(o)
            });
            (out, res)
        }
        ValidateFamily::Mww { n1, n2, exact, tail, grid, mc, out } => {
            (out, mww_dominance(n1, n2, exact, tail, &grid, &mc))
        }
        ValidateFamily::Graph { graphs, exact, tail, grid, mc, out } => {
            let res = instance::graphs(&graphs).and_then(|(e1, e2)| {
                let mut a = graph_array(&e1, &e2)?;
                if let Some(b) = graphs.b {
                    a = a.with_sup_bound(b)?;
                }
                let (n, b) = (a.n(), a.sup_bound());
                let mut params = dips_params(n, b)?;
                params.push(Param::new("edges1", e1.len() as f64));
                params.push(Param::new("edges2", e2.len() as f64));
                params.push(Param::new("mu", graph_mean(&e1, &e2)?));
                let upper = dips_grid_scale(b, n)?.min(dips_cap(&a));
                array_dominance("graph", &a, exact, tail, &grid, upper, &mc, params, |t| dips_tail_bound(t, b, n))
            });
            (out, res)
        }
        ValidateFamily::Pattern { pattern, exact, identity, pathwise, linear_windows, grid, mc, out } => {
            let res = exclusive(identity, pathwise).and_then(|_| {
                let pair = instance::pattern_pair(&pattern)?;
                let mut o = if linear_windows {
                    if pathwise || identity {
                        return bad("--linear-windows only reports exact moments");
                    }
                    pattern_linear_moments(&pair)?
                } else if identity {
                    pattern_identity(&pair)?
                } else if pathwise {
                    pattern_pathwise(&pair, &mc)?
                } else {
                    pattern_dominance(&pair, exact, &grid, &mc)?
                };
                let [p1, p2] = pair.patterns();
                o.table = o.table.meta("pattern1", p1.to_string()).meta("pattern2", p2.to_string());
                Ok(o)
            });
            (out, res)
        }
    }
}

fn exclusive(identity: bool, pathwise: bool) -> Result<()> {
    if identity && pathwise {
        return bad("--identity and --pathwise are separate checks; pick one");
    }
    Ok(())
}

fn dips_params(n: usize, b: f64) -> Result<Vec<Param>> {
    Ok(vec![
        Param::new("n", n as f64),
        Param::new("b", b),
        Param::new("phi", phi_bn(b, n)?),
        Param::new("eta", eta_bn(b, n)?),
    ])
}

/// Merges a tail fragment with the bound and collects violated thresholds.
pub fn dominance(
    family: &str,
    frag: &TailFragment,
    bound: impl Fn(f64) -> Result<f64>,
    mc: Option<&MonteCarlo>,
    params: Vec<Param>,
) -> Result<Outcome> {
    let mut report = dominance_report_with(frag, bound)?.with_family(family).with_params(params);
    if let Some(mc) = mc {
        report = report.with_seed(mc.seed());
    }
    let violations = report
        .rows
        .iter()
        .filter(|r| r.violation == Verdict::Yes)
        .map(|r| {
            let (label, value) = match report.method {
                Method::Exact => ("exact tail", r.empirical),
                Method::MonteCarlo => ("ci_low", r.ci_low),
            };
            format!(
                "{family} threshold {}: {label} {} > bound {}",
                format_number(r.threshold),
                format_number(value),
                format_number(r.bound)
            )
        })
        .collect();
    let mut out = Outcome::new(report.to_table().meta("check", "dominance"));
    out.violations = violations;
    out.threads = mc.map_or(1, |m| m.threads());
    Ok(out)
}

fn with_tail(mut o: Outcome, tail: Tail) -> Outcome {
    o.table = o.table.meta("tail", tail.as_str());
    o
}

/// One row of an identity check table.
pub struct Check {
    pub name: String,
    pub method: Method,
    pub value: f64,
    pub tolerance: f64,
    pub size: u64,
}

impl Check {
    fn residual(name: &str, r: &IdentityReport, tolerance: f64) -> Self {
        Self { name: name.into(), method: r.method, value: r.max_residual, tolerance, size: r.sample_space_size }
    }

    fn distance(name: &str, r: &ExchangeabilityReport, tolerance: f64) -> Self {
        Self {
            name: format!("{name} ({})", r.distance_kind),
            method: r.method,
            value: r.distance,
            tolerance,
            size: r.sample_space_size,
        }
    }
}

pub fn checks_outcome(family: &str, checks: Vec<Check>, params: Vec<Param>) -> Outcome {
    let mut t = Table::new(family, &["check", "method", "value", "tolerance", "sample_space_size", "pass"])
        .meta("check", "identity");
    t.params = params;
    let mut violations = Vec::new();
    for c in checks {
        let pass = c.value <= c.tolerance;
        if !pass {
            violations.push(format!(
                "{family} {}: {} > tolerance {}",
                c.name,
                format_number(c.value),
                format_number(c.tolerance)
            ));
        }
        t.push_row(vec![
            c.name.into(),
            c.method.as_str().into(),
            c.value.into(),
            c.tolerance.into(),
            c.size.into(),
            if pass { "yes" } else { "no" }.into(),
        ]);
    }
    let mut o = Outcome::new(t);
    o.violations = violations;
    o
}

/// Critical Kolmogorov-Smirnov distance for `f(W, W′)` against `f(W′, W)`
/// from `samples` pairs. The two samples come from the same draws, so the
/// independent two-sample value is inflated by `√2`.
pub fn ks_tolerance(confidence: f64, samples: u64) -> f64 {
    let alpha = 1.0 - confidence;
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    std::f64::consts::SQRT_2 * c * (2.0 / samples as f64).sqrt()
}

/// Maximum observed value and exceedance count for one pathwise bound.
pub struct PathwiseRow {
    pub name: String,
    pub bound: f64,
    pub max: f64,
    pub exceed: u64,
}

impl PathwiseRow {
    fn new(name: impl Into<String>, bound: f64) -> Self {
        Self { name: name.into(), bound, max: 0.0, exceed: 0 }
    }

    fn observe(&mut self, x: f64) {
        self.max = self.max.max(x);
        if x > self.bound * (1.0 + PATHWISE_SLACK) {
            self.exceed += 1;
        }
    }
}

/// Runs `chunk(seed, count, rows)` on every Monte Carlo chunk and merges
/// the per-chunk rows in chunk order.
fn pathwise<F>(family: &str, mc: &MonteCarlo, template: &[PathwiseRow], params: Vec<Param>, chunk: F) -> Result<Outcome>
where
    F: Fn(u64, u64, &mut [PathwiseRow]) -> Result<()> + Sync + Send,
{
    let fresh = || -> Vec<PathwiseRow> { template.iter().map(|r| PathwiseRow::new(r.name.clone(), r.bound)).collect() };
    let parts = mc.map_chunks(|seed, count| {
        let mut rows = fresh();
        chunk(seed, count, &mut rows)?;
        Ok(rows)
    })?;
    let mut rows = fresh();
    for part in parts {
        for (acc, r) in rows.iter_mut().zip(part) {
            acc.max = acc.max.max(r.max);
            acc.exceed += r.exceed;
        }
    }
    let mut t = Table::new(family, &["check", "bound", "max_observed", "samples", "violations"])
        .meta("check", "pathwise")
        .meta("seed", mc.seed())
        .meta("samples", mc.samples());
    t.params = params;
    let mut violations = Vec::new();
    for r in &rows {
        if r.exceed > 0 {
            violations.push(format!(
                "{family} {}: {} of {} pairs exceed {}",
                r.name,
                r.exceed,
                mc.samples(),
                format_number(r.bound)
            ));
        }
        t.push_row(vec![r.name.clone().into(), r.bound.into(), r.max.into(), mc.samples().into(), r.exceed.into()]);
    }
    let mut o = Outcome::new(t);
    o.violations = violations;
    o.threads = mc.threads();
    Ok(o)
}

fn ustat_params(model: &UStatModel) -> Result<Vec<Param>> {
    let d = model.d();
    Ok(vec![
        Param::new("n", model.n() as f64),
        Param::new("d", d as f64),
        Param::new("b", model.sup_bound()),
        Param::new("gamma_d", gamma_d(d)?),
        Param::new("kappa_d", kappa_d(d)?),
    ])
}

pub fn ustat_dominance(inst: &UStatInstance, exact: bool, tail: Tail, grid: &GridArgs, mc: &McArgs) -> Result<Outcome> {
    let model = &inst.model;
    let (n, d, b) = (model.n(), model.d(), model.sup_bound());
    // |W_d| <= √n·b
    let cap = (n as f64).sqrt() * b;
    let thresholds = threshold_grid(grid, ustat_grid_scale(b, d)?.min(cap))?;
    let params = ustat_params(model)?;
    let bound = |t| ustat_tail_bound(t, b, d);
    let o = if exact {
        let probs = model.distribution().probabilities();
        let mut values = Vec::new();
        enumerate_product_space(probs.len(), n, |x| {
            let p: f64 = x.iter().map(|&i| probs[i]).product();
            if p > 0.0 {
                values.push((tail.orient(model.w_vector(x)[d - 1]), p));
            }
        })?;
        dominance("ustat", &exact_tail_weighted(&values, &thresholds)?, bound, None, params)?
    } else {
        let sim = mc_from(mc)?;
        let frag = empirical_tail(&sim, &thresholds, mc.confidence, |seed, count, emit| {
            let mut rng = stream(seed);
            let atoms = model.distribution().sampler();
            let mut x = vec![0usize; n];
            for _ in 0..count {
                for slot in x.iter_mut() {
                    *slot = atoms.sample(&mut rng);
                }
                emit(tail.orient(model.w_vector(&x)[d - 1]));
            }
            Ok(())
        })?;
        dominance("ustat", &frag, bound, Some(&sim), params)?
    };
    Ok(with_tail(o, tail))
}

pub fn ustat_identity(model: &UStatModel, exact: bool, mc: &McArgs) -> Result<Outcome> {
    let d = model.d();
    let last = move |w: &[f64], wp: &[f64]| w[d - 1] - wp[d - 1];
    let first = |w: &[f64], _: &[f64]| w[0];
    let mut checks = Vec::new();
    let mut threads = 1;
    if exact {
        checks.push(Check::residual("linearity", &linearity_residual_ustat(model)?, USTAT_LINEARITY_TOL));
        let pairs = ustat_exact_pairs(model)?;
        checks.push(Check::distance(
            "exchangeability f=w_d-w'_d",
            &exchangeability_exact(&pairs, last)?,
            EXACT_IDENTITY_TOL,
        ));
        checks.push(Check::distance(
            "exchangeability f=w_1",
            &exchangeability_exact(&pairs, first)?,
            EXACT_IDENTITY_TOL,
        ));
    } else {
        let sim = mc_from(mc)?;
        threads = sim.threads();
        checks.push(Check::residual("linearity", &linearity_residual_ustat_sampled(model, &sim)?, USTAT_LINEARITY_TOL));
        let tol = ks_tolerance(mc.confidence, sim.samples());
        let chunk = |seed: u64, count: u64, emit: &mut dyn FnMut(&[f64], &[f64])| {
            for s in model.sampler(seed).take(count as usize) {
                emit(&s.w, &s.w_prime);
            }
            Ok(())
        };
        checks.push(Check::distance("exchangeability f=w_d-w'_d", &exchangeability_sampled(&sim, chunk, last)?, tol));
        checks.push(Check::distance("exchangeability f=w_1", &exchangeability_sampled(&sim, chunk, first)?, tol));
    }
    let mut o = checks_outcome("ustat", checks, ustat_params(model)?);
    if !exact {
        o.table = o.table.meta("seed", mc.seed.expect("checked by mc_from")).meta("samples", mc.samples);
    }
    o.threads = threads;
    Ok(o)
}

pub fn ustat_pathwise(model: &UStatModel, mc: &McArgs) -> Result<Outcome> {
    let sim = mc_from(mc)?;
    let (n, d, b) = (model.n(), model.d(), model.sup_bound());
    let mut template = vec![PathwiseRow::new("norm", model.coupling_bound()?)];
    for k in 1..=d {
        template.push(PathwiseRow::new(format!("coordinate {k}"), 2.0 * b * k as f64 / (n as f64).sqrt()));
    }
    pathwise("ustat", &sim, &template, ustat_params(model)?, |seed, count, rows| {
        for s in model.sampler(seed).take(count as usize) {
            let diff: Vec<f64> = s.w.iter().zip(&s.w_prime).map(|(a, b)| a - b).collect();
            rows[0].observe(concentra::bounds::euclidean_norm(&diff));
            for (row, x) in rows[1..].iter_mut().zip(&diff) {
                row.observe(x.abs());
            }
        }
        Ok(())
    })
}

/// Largest attainable `|W₁|` from `|V₁| ≤ b·n(n−1)`.
fn dips_cap(array: &DipsArray) -> f64 {
    let n = array.n() as f64;
    array.sup_bound() * n * (n - 1.0) * n.powf(-1.5)
}

/// Dominance of `W₁ = n^{−3/2}V₁` over a DIPS array, by enumeration of
/// `S_n` or by sampled permutations.
#[allow(clippy::too_many_arguments)]
pub fn array_dominance(
    family: &str,
    array: &DipsArray,
    exact: bool,
    tail: Tail,
    grid: &GridArgs,
    default_upper: f64,
    mc: &McArgs,
    params: Vec<Param>,
    bound: impl Fn(f64) -> Result<f64>,
) -> Result<Outcome> {
    let n = array.n();
    let scale = (n as f64).powf(-1.5);
    let thresholds = threshold_grid(grid, default_upper)?;
    let stat = |pi: &[usize]| tail.orient(array.v1_statistic(pi).expect("valid permutation") * scale);
    let o = if exact {
        dominance(family, &exact_permutation_tail(n, &thresholds, stat)?, bound, None, params)?
    } else {
        let sim = mc_from(mc)?;
        let frag = empirical_tail(&sim, &thresholds, mc.confidence, |seed, count, emit| {
            let mut rng = stream(seed);
            let mut pi = Vec::with_capacity(n);
            for _ in 0..count {
                perm::shuffle_into(&mut pi, n, &mut rng);
                emit(stat(&pi));
            }
            Ok(())
        })?;
        dominance(family, &frag, bound, Some(&sim), params)?
    };
    Ok(with_tail(o, tail))
}

pub fn remainder_form(r: Remainder) -> RemainderForm {
    match r {
        Remainder::Printed => RemainderForm::Printed,
        Remainder::Derived => RemainderForm::Derived,
    }
}

pub fn dips_identity(array: &DipsArray, remainder: Remainder, exact: bool, mc: &McArgs) -> Result<Outcome> {
    let (n, b) = (array.n(), array.sup_bound());
    let form = remainder_form(remainder);
    let first = |w: &[f64], _: &[f64]| w[0];
    let diff = |w: &[f64], wp: &[f64]| w[0] - wp[0];
    let mut checks = Vec::new();
    let mut threads = 1;
    if exact {
        checks.push(Check::residual("linearity", &linearity_residual_dips(array, form)?, DIPS_LINEARITY_TOL));
        let pairs = dips_exact_pairs(array)?;
        checks.push(Check::distance(
            "exchangeability f=w_1",
            &exchangeability_exact(&pairs, first)?,
            EXACT_IDENTITY_TOL,
        ));
        checks.push(Check::distance(
            "exchangeability f=w_1-w'_1",
            &exchangeability_exact(&pairs, diff)?,
            EXACT_IDENTITY_TOL,
        ));
    } else {
        let sim = mc_from(mc)?;
        threads = sim.threads();
        checks.push(Check::residual(
            "linearity",
            &linearity_residual_dips_sampled(array, form, &sim)?,
            DIPS_LINEARITY_TOL,
        ));
        let tol = ks_tolerance(mc.confidence, sim.samples());
        let chunk = |seed: u64, count: u64, emit: &mut dyn FnMut(&[f64], &[f64])| {
            for s in array.sampler(seed)?.take(count as usize) {
                emit(&s.w(n), &s.w_prime(n));
            }
            Ok(())
        };
        checks.push(Check::distance("exchangeability f=w_1", &exchangeability_sampled(&sim, chunk, first)?, tol));
        checks.push(Check::distance("exchangeability f=w_1-w'_1", &exchangeability_sampled(&sim, chunk, diff)?, tol));
    }
    let mut o = checks_outcome("dips", checks, dips_params(n, b)?);
    o.table = o.table.meta(
        "remainder",
        match remainder {
            Remainder::Printed => "printed",
            Remainder::Derived => "derived",
        },
    );
    if !exact {
        o.table = o.table.meta("seed", mc.seed.expect("checked by mc_from")).meta("samples", mc.samples);
    }
    o.threads = threads;
    Ok(o)
}

pub fn dips_pathwise(family: &str, array: &DipsArray, mc: &McArgs) -> Result<Outcome> {
    let sim = mc_from(mc)?;
    let (n, b) = (array.n(), array.sup_bound());
    let nf = n as f64;
    let template = [
        PathwiseRow::new("norm", eta_bn(b, n)?),
        PathwiseRow::new("v1 difference", 8.0 * b * nf + 4.0 * b),
        PathwiseRow::new("v2 difference", 4.0 * b * nf),
    ];
    pathwise(family, &sim, &template, dips_params(n, b)?, |seed, count, rows| {
        for s in array.sampler(seed)?.take(count as usize) {
            let (w, wp) = (s.w(n), s.w_prime(n));
            let d: Vec<f64> = w.iter().zip(&wp).map(|(a, b)| a - b).collect();
            rows[0].observe(concentra::bounds::euclidean_norm(&d));
            rows[1].observe((s.v[0] - s.v_prime[0]).abs());
            rows[2].observe((s.v[1] - s.v_prime[1]).abs());
        }
        Ok(())
    })
}

pub fn mww_dominance(n1: usize, n2: usize, exact: bool, tail: Tail, grid: &GridArgs, mc: &McArgs) -> Result<Outcome> {
    let array = mww_array(n1, n2)?;
    let n = n1 + n2;
    let mut params = dips_params(n, 0.5)?;
    params.insert(0, Param::new("n1", n1 as f64));
    params.insert(1, Param::new("n2", n2 as f64));
    let bound = |t| mww_tail_bound(t, n);
    let scale = (n as f64).powf(-1.5);
    let center = (n1 * n2) as f64 / 2.0;
    let upper = dips_grid_scale(0.5, n)?.min(center * scale);
    if !exact {
        return array_dominance("mww", &array, false, tail, grid, upper, mc, params, bound);
    }
    let thresholds = threshold_grid(grid, upper)?;
    let values: Vec<(f64, f64)> =
        mww_exact_distribution(n1, n2)?.into_iter().map(|(v, p)| (tail.orient((v - center) * scale), p)).collect();
    let mut frag = exact_tail_weighted(&values, &thresholds)?;
    frag.sample_count = concentra::ustat::binomial(n, n1) as u64;
    let o = dominance("mww", &frag, bound, None, params)?;
    Ok(with_tail(o, tail))
}

fn pattern_params(pair: &PatternPair) -> Result<Vec<Param>> {
    let (n, m) = (pair.n(), pair.m());
    Ok(vec![
        Param::new("n", n as f64),
        Param::new("m", m as f64),
        Param::new("mu", pattern_mean(n, m)?),
        Param::new("sigma_lower_bound", pattern_variance_lower_bound(n, m)?.sqrt()),
        Param::new("coupling_bound", pattern_coupling_bound(m)),
    ])
}

/// Dominance for the event that both standardized counts
/// `(W_i − μ)/σ₍₁₎` reach `s`, against the bound at `t = (s, s)`.
pub fn pattern_dominance(pair: &PatternPair, exact: bool, grid: &GridArgs, mc: &McArgs) -> Result<Outcome> {
    let (n, m) = (pair.n(), pair.m());
    require_pattern_len(m)?;
    let consts = pattern_constants(n, m)?;
    let mut params = pattern_params(pair)?;
    params.push(Param::new("k1", consts.k1));
    params.push(Param::new("k2", consts.k2));
    let mu = pattern_mean(n, m)?;
    let sigma = pattern_variance_lower_bound(n, m)?.sqrt();
    let cap = (n as f64 - mu) / sigma;
    let thresholds = threshold_grid(grid, (consts.grid_scale() / std::f64::consts::SQRT_2).min(cap))?;
    let stat = |pi: &[usize]| {
        let w = pair.counts(pi);
        ((w[0] as f64 - mu) / sigma).min((w[1] as f64 - mu) / sigma)
    };
    let bound = |s| pattern_bound(n, m, &[s, s]);
    let mut o = if exact {
        dominance("pattern", &exact_permutation_tail(n, &thresholds, stat)?, bound, None, params)?
    } else {
        let sim = mc_from(mc)?;
        let frag = empirical_tail(&sim, &thresholds, mc.confidence, |seed, count, emit| {
            let mut rng = stream(seed);
            let mut pi = Vec::with_capacity(n);
            for _ in 0..count {
                perm::shuffle_into(&mut pi, n, &mut rng);
                emit(stat(&pi));
            }
            Ok(())
        })?;
        dominance("pattern", &frag, bound, Some(&sim), params)?
    };
    o.table = o.table.meta("event", "both standardized counts >= threshold");
    Ok(o)
}

/// Exact first two moments of both counts over `S_n`.
pub fn exact_pattern_moments(pair: &PatternPair, count: impl Fn(&[usize], usize) -> usize) -> Result<[(f64, f64); 2]> {
    let mut perms = Permutations::new(pair.n())?;
    let (mut s1, mut s2, mut total) = ([0.0; 2], [0.0; 2], 0.0);
    while let Some(pi) = perms.next_perm() {
        total += 1.0;
        for i in 0..2 {
            let c = count(pi, i) as f64;
            s1[i] += c;
            s2[i] += c * c;
        }
    }
    Ok([0, 1].map(|i| {
        let mean = s1[i] / total;
        (mean, s2[i] / total - mean * mean)
    }))
}

pub fn pattern_identity(pair: &PatternPair) -> Result<Outcome> {
    let (n, m) = (pair.n(), pair.m());
    let mu = pattern_mean(n, m)?;
    let size = perm::factorial(n) as u64;
    let mut checks = Vec::new();
    for direction in 0..2 {
        for f in size_bias_test_functions() {
            let r = size_bias_identity(pair, direction, &f)?;
            checks.push(Check {
                name: format!("size-bias i={} f={}", direction + 1, r.function),
                method: Method::Exact,
                value: r.residual,
                tolerance: EXACT_IDENTITY_TOL,
                size: size * n as u64,
            });
        }
    }
    let moments = exact_pattern_moments(pair, |pi, i| pair.counts(pi)[i])?;
    for (i, (mean, var)) in moments.iter().enumerate() {
        let pat = &pair.patterns()[i];
        checks.push(Check {
            name: format!("mean pattern{} ({pat})", i + 1),
            method: Method::Exact,
            value: (mean - mu).abs(),
            tolerance: EXACT_IDENTITY_TOL,
            size,
        });
        checks.push(Check {
            name: format!("variance pattern{} ({pat})", i + 1),
            method: Method::Exact,
            value: (var - pattern_variance(n, pat)?).abs(),
            tolerance: EXACT_IDENTITY_TOL,
            size,
        });
    }
    let mut params = pattern_params(pair)?;
    for (i, (mean, var)) in moments.iter().enumerate() {
        params.push(Param::new(format!("exact_mean{}", i + 1), *mean));
        params.push(Param::new(format!("exact_variance{}", i + 1), *var));
        params.push(Param::new(format!("formula_variance{}", i + 1), pattern_variance(n, &pair.patterns()[i])?));
    }
    Ok(checks_outcome("pattern", checks, params))
}

pub fn pattern_linear_moments(pair: &PatternPair) -> Result<Outcome> {
    let moments =
        exact_pattern_moments(pair, |pi, i| pattern_count_linear(pi, &pair.patterns()[i]).expect("valid permutation"))?;
    let mut t = Table::new("pattern", &["pattern", "windows", "mean", "variance"])
        .meta("check", "moments")
        .meta("note", "non-circular windows; the circular moment formulas do not apply");
    t.params = pattern_params(pair)?;
    for (i, (mean, var)) in moments.iter().enumerate() {
        t.push_row(vec![Cell::Text(pair.patterns()[i].to_string()), "linear".into(), (*mean).into(), (*var).into()]);
    }
    Ok(Outcome::new(t))
}

pub fn pattern_pathwise(pair: &PatternPair, mc: &McArgs) -> Result<Outcome> {
    let sim = mc_from(mc)?;
    let m = pair.m();
    let coord = (2 * m - 1) as f64;
    let template = [
        PathwiseRow::new("coordinate i=1", coord),
        PathwiseRow::new("norm i=1", pattern_coupling_bound(m)),
        PathwiseRow::new("coordinate i=2", coord),
        PathwiseRow::new("norm i=2", pattern_coupling_bound(m)),
    ];
    pathwise("pattern", &sim, &template, pattern_params(pair)?, |seed, count, rows| {
        for direction in 0..2 {
            let s = if direction == 0 { seed } else { child_seed(seed, 1) };
            for draw in pair.sampler(direction, s)?.take(count as usize) {
                let d = [0, 1].map(|j| draw.w_biased[j] as f64 - draw.w[j] as f64);
                rows[2 * direction].observe(d[0].abs().max(d[1].abs()));
                rows[2 * direction + 1].observe(concentra::bounds::euclidean_norm(&d));
            }
        }
        Ok(())
    })
}
