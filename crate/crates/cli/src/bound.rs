//! `bound`: analytic tail curves with every constant echoed.

use concentra::bounds::{
    exch_tail_bound, sigma1_lower_bound, size_bias_tail_bound, smallest_singular_value, ExchBoundParams,
    SizeBiasBoundParams, SquareMatrix,
};
use concentra::dips::{dips_grid_scale, dips_tail_bound, eta_bn, lambda_dips, phi_bn};
use concentra::harness::Table;
use concentra::patterns::{
    pattern_bound, pattern_constants, pattern_coupling_bound, pattern_mean, pattern_variance,
    pattern_variance_lower_bound, sharp_pattern_constants,
};
use concentra::ustat::{gamma_d, kappa_d, lambda_matrix_u, ustat_grid_scale, ustat_tail_bound};
use concentra::{Error, Result};

use crate::opts::{BoundFamily, GridArgs, OutputArgs};
use crate::{bad, instance, threshold_grid, Outcome};

pub fn run(family: BoundFamily) -> (OutputArgs, Result<Outcome>) {
    match family {
        BoundFamily::Ustat { d, b, n, grid, out } => (out, ustat(d, b, n, &grid)),
        BoundFamily::Dips { n, b, grid, out } => (out, dips("dips", n, b, &grid)),
        BoundFamily::Mww { n1, n2, grid, out } => (out, mww(n1, n2, &grid)),
        BoundFamily::Graph { n, b, grid, out } => (out, dips("graph", n, b, &grid)),
        BoundFamily::Pattern { n, m, pattern1, pattern2, grid, out } => {
            (out, pattern(n, m, pattern1.as_deref(), pattern2.as_deref(), &grid))
        }
        BoundFamily::Generic { k, lambda, lower_bound, k1, k2, grid, out } => {
            (out, generic(k, lambda.as_deref(), lower_bound, k1, k2, &grid))
        }
    }
}

fn lambda_params(t: Table, lambda: &SquareMatrix) -> Result<Table> {
    let s = smallest_singular_value(lambda);
    let l = sigma1_lower_bound(lambda)?;
    Ok(t.param("sigma1", s).param("nu1", 1.0 / s).param("sigma1_lower_bound", l))
}

pub fn ustat(d: usize, b: f64, n: Option<usize>, grid: &GridArgs) -> Result<Outcome> {
    let thresholds = threshold_grid(grid, ustat_grid_scale(b, d)?)?;
    let mut columns = vec!["threshold", "bound"];
    let exact = match n {
        Some(n) => {
            let lambda = lambda_matrix_u(d, n)?;
            let k = concentra::ustat::ustat_coupling_bound(b, d, n)?;
            columns.push("bound_exact_nu1");
            Some((n, lambda.clone(), k, ExchBoundParams::from_lambda(k, &lambda)?))
        }
        None => None,
    };
    let mut t = Table::new("ustat", &columns)
        .param("d", d as f64)
        .param("b", b)
        .param("gamma_d", gamma_d(d)?)
        .param("kappa_d", kappa_d(d)?);
    if let Some((n, lambda, k, _)) = &exact {
        t = t.param("n", *n as f64).param("coupling_bound", *k);
        t = lambda_params(t, lambda)?;
    }
    for &x in &thresholds {
        let mut row = vec![x.into(), ustat_tail_bound(x, b, d)?.into()];
        if let Some((_, _, _, params)) = &exact {
            let mut w = vec![0.0; d];
            w[d - 1] = x;
            row.push(exch_tail_bound(&w, params)?.into());
        }
        t.push_row(row);
    }
    Ok(Outcome::new(t))
}

fn dips_table(family: &str, n: usize, b: f64, grid: &GridArgs) -> Result<Table> {
    let thresholds = threshold_grid(grid, dips_grid_scale(b, n)?)?;
    let mut t = Table::new(family, &["threshold", "v1_threshold", "bound"])
        .param("n", n as f64)
        .param("b", b)
        .param("phi", phi_bn(b, n)?)
        .param("eta", eta_bn(b, n)?);
    t = lambda_params(t, &lambda_dips(n)?)?;
    let scale = (n as f64).powf(1.5);
    for &x in &thresholds {
        t.push_row(vec![x.into(), (x * scale).into(), dips_tail_bound(x, b, n)?.into()]);
    }
    Ok(t)
}

pub fn dips(family: &str, n: usize, b: f64, grid: &GridArgs) -> Result<Outcome> {
    Ok(Outcome::new(dips_table(family, n, b, grid)?))
}

pub fn mww(n1: usize, n2: usize, grid: &GridArgs) -> Result<Outcome> {
    if n1 == 0 || n2 == 0 {
        return bad("--n1 and --n2 must be positive");
    }
    let t = dips_table("mww", n1 + n2, 0.5, grid)?.param("n1", n1 as f64).param("n2", n2 as f64);
    Ok(Outcome::new(t))
}

/// Rejects `m < 3` before anything else so the message names the restriction.
pub fn require_pattern_len(m: usize) -> Result<()> {
    if m < 3 {
        return Err(Error::Unsupported(format!(
            "the pattern bound needs m >= 3 (got m = {m}; m! - 2m + 1 must be positive)"
        )));
    }
    Ok(())
}

pub fn pattern(n: Option<usize>, m: usize, p1: Option<&str>, p2: Option<&str>, grid: &GridArgs) -> Result<Outcome> {
    require_pattern_len(m)?;
    let Some(n) = n else {
        return bad("--n is required");
    };
    let params = pattern_constants(n, m)?;
    let sharp = if p1.is_some() || p2.is_some() {
        let (a, b) = (instance::pattern(p1, m)?, instance::pattern(p2, m)?);
        Some((sharp_pattern_constants(n, &a, &b)?, a, b))
    } else {
        None
    };
    let thresholds = threshold_grid(grid, params.grid_scale() / std::f64::consts::SQRT_2)?;
    let mut columns = vec!["threshold", "bound"];
    if sharp.is_some() {
        columns.push("sharp_bound");
    }
    let mut t = Table::new("pattern", &columns)
        .meta("event", "both standardized counts >= threshold")
        .param("n", n as f64)
        .param("m", m as f64)
        .param("mu", pattern_mean(n, m)?)
        .param("sigma_lower_bound", pattern_variance_lower_bound(n, m)?.sqrt())
        .param("coupling_bound", pattern_coupling_bound(m))
        .param("k1", params.k1)
        .param("k2", params.k2);
    if let Some((sp, a, b)) = &sharp {
        t = t
            .meta("pattern1", a.to_string())
            .meta("pattern2", b.to_string())
            .param("sigma1", pattern_variance(n, a)?.sqrt())
            .param("sigma2", pattern_variance(n, b)?.sqrt())
            .param("k1_sharp", sp.k1)
            .param("k2_sharp", sp.k2);
    }
    for &s in &thresholds {
        let mut row = vec![s.into(), pattern_bound(n, m, &[s, s])?.into()];
        if let Some((sp, _, _)) = &sharp {
            row.push(size_bias_tail_bound(&[s, s], sp)?.into());
        }
        t.push_row(row);
    }
    Ok(Outcome::new(t))
}

/// `"a,b;c,d"` to a square matrix.
pub fn parse_matrix(text: &str) -> Result<SquareMatrix> {
    let rows = text
        .split(';')
        .map(|r| {
            r.split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad matrix entry `{}`", x.trim())))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SquareMatrix::from_rows(&rows)
}

pub fn generic(
    k: Option<f64>,
    lambda: Option<&str>,
    lower_bound: bool,
    k1: Option<f64>,
    k2: Option<f64>,
    grid: &GridArgs,
) -> Result<Outcome> {
    match (k, lambda, k1, k2) {
        (Some(k), Some(text), None, None) => {
            let lambda = parse_matrix(text)?;
            let params = if lower_bound {
                ExchBoundParams::from_lambda_lower_bound(k, &lambda)?
            } else {
                ExchBoundParams::from_lambda(k, &lambda)?
            };
            let thresholds = threshold_grid(grid, params.grid_scale())?;
            let mut t = Table::new("generic", &["threshold", "bound"])
                .meta("coupling", "exchangeable-pair")
                .meta("nu1_source", if lower_bound { "lower-bound" } else { "exact" })
                .param("k", k)
                .param("dim", params.dim as f64)
                .param("nu1_used", params.nu1);
            t = lambda_params(t, &lambda)?;
            for &x in &thresholds {
                let mut w = vec![0.0; params.dim];
                w[0] = x;
                t.push_row(vec![x.into(), exch_tail_bound(&w, &params)?.into()]);
            }
            Ok(Outcome::new(t))
        }
        (None, None, Some(k1), Some(k2)) => {
            let params = SizeBiasBoundParams::new(k1, k2)?;
            let thresholds = threshold_grid(grid, params.grid_scale())?;
            let mut t = Table::new("generic", &["threshold", "bound"])
                .meta("coupling", "size-bias")
                .param("k1", k1)
                .param("k2", k2);
            for &x in &thresholds {
                t.push_row(vec![x.into(), size_bias_tail_bound(&[x], &params)?.into()]);
            }
            Ok(Outcome::new(t))
        }
        _ => bad("give either --k with --lambda, or --k1 with --k2"),
    }
}
