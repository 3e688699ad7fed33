//! `test`: observed statistics from data files, the analytic p-value bound
//! at the observed value, and an optional permutation p-value.

use concentra::dips::{
    dips_tail_bound, graph_array, graph_mean, graph_overlap_statistic, mww_array, mww_statistic, mww_tail_bound,
    DipsArray,
};
use concentra::harness::{clopper_pearson, mww_exact_distribution, MonteCarlo, Table};
use concentra::io::{read_edge_list, read_mww_csv};
use concentra::perm::{self, Permutations};
use concentra::rng::stream;
use concentra::Result;

use crate::opts::{McArgs, OutputArgs, TestFamily};
use crate::{mc_from, Outcome};

/// Relative tolerance when comparing permuted statistics with the observed one.
const TIE_TOLERANCE: f64 = 1e-9;

pub fn run(family: TestFamily) -> (OutputArgs, Result<Outcome>) {
    match family {
        TestFamily::Mww { data, exact, no_permutation, mc, out } => {
            let res = read_mww_csv(&data).and_then(|(x, y)| mww_test(&x, &y, exact, no_permutation, &mc));
            (out, res)
        }
        TestFamily::Graph { edges1, edges2, n, b, exact, no_permutation, mc, out } => {
            let res = (|| {
                let e1 = read_edge_list(&edges1, n)?;
                let e2 = read_edge_list(&edges2, n)?;
                let n = e1.n().max(e2.n());
                let e1 = concentra::dips::EdgeSet::new(n, e1.edges())?;
                let e2 = concentra::dips::EdgeSet::new(n, e2.edges())?;
                graph_test(&e1, &e2, b, exact, no_permutation, &mc)
            })();
            (out, res)
        }
    }
}

/// Two-sided permutation p-value `P(|V₁(π)| ≥ |v1_obs|)`.
pub enum PermutationP {
    Exact { p: f64, size: u64 },
    Sampled { p: f64, ci_low: f64, ci_high: f64, mc: MonteCarlo, confidence: f64 },
}

fn at_least(v: f64, observed: f64) -> bool {
    v.abs() >= observed.abs() * (1.0 - TIE_TOLERANCE)
}

fn sampled_p(array: &DipsArray, observed: f64, mc: &McArgs) -> Result<PermutationP> {
    let sim = mc_from(mc)?;
    let n = array.n();
    let hits: u64 = sim
        .map_chunks(|seed, count| {
            let mut rng = stream(seed);
            let mut pi = Vec::with_capacity(n);
            let mut hits = 0u64;
            for _ in 0..count {
                perm::shuffle_into(&mut pi, n, &mut rng);
                hits += at_least(array.v1_statistic(&pi)?, observed) as u64;
            }
            Ok(hits)
        })?
        .into_iter()
        .sum();
    let (lo, hi) = clopper_pearson(hits, sim.samples(), mc.confidence)?;
    Ok(PermutationP::Sampled {
        p: hits as f64 / sim.samples() as f64,
        ci_low: lo,
        ci_high: hi,
        mc: sim,
        confidence: mc.confidence,
    })
}

fn exact_perm_p(array: &DipsArray, observed: f64) -> Result<PermutationP> {
    let mut perms = Permutations::new(array.n())?;
    let (mut hits, mut total) = (0u64, 0u64);
    while let Some(pi) = perms.next_perm() {
        total += 1;
        hits += at_least(array.v1_statistic(pi)?, observed) as u64;
    }
    Ok(PermutationP::Exact { p: hits as f64 / total as f64, size: total })
}

fn finish(mut t: Table, w1: f64, bound: impl Fn(f64) -> Result<f64>, perm: Option<PermutationP>) -> Result<Outcome> {
    let upper = bound(w1.max(0.0))?;
    let lower = bound((-w1).max(0.0))?;
    t.push_row(vec!["w1".into(), w1.into()]);
    t.push_row(vec!["bound_upper_tail".into(), upper.into()]);
    t.push_row(vec!["bound_lower_tail".into(), lower.into()]);
    t.push_row(vec!["bound_two_sided".into(), (2.0 * bound(w1.abs())?).min(1.0).into()]);
    let mut threads = 1;
    match perm {
        None => {}
        Some(PermutationP::Exact { p, size }) => {
            t = t.meta("permutation_method", "exact").meta("permutation_space", size);
            t.push_row(vec!["permutation_p_two_sided".into(), p.into()]);
        }
        Some(PermutationP::Sampled { p, ci_low, ci_high, mc, confidence }) => {
            threads = mc.threads();
            t = t
                .meta("permutation_method", "monte-carlo")
                .meta("seed", mc.seed())
                .meta("samples", mc.samples())
                .meta("confidence", confidence);
            t.push_row(vec!["permutation_p_two_sided".into(), p.into()]);
            t.push_row(vec!["permutation_ci_low".into(), ci_low.into()]);
            t.push_row(vec!["permutation_ci_high".into(), ci_high.into()]);
        }
    }
    let mut o = Outcome::new(t);
    o.threads = threads;
    Ok(o)
}

pub fn mww_test(x: &[f64], y: &[f64], exact: bool, no_permutation: bool, mc: &McArgs) -> Result<Outcome> {
    let (n1, n2) = (x.len(), y.len());
    let n = n1 + n2;
    let v = mww_statistic(x, y)?;
    let center = (n1 * n2) as f64 / 2.0;
    let v1 = v as f64 - center;
    let w1 = v1 * (n as f64).powf(-1.5);
    let perm = if no_permutation {
        None
    } else if exact {
        let p: f64 = mww_exact_distribution(n1, n2)?
            .into_iter()
            .filter(|&(val, _)| at_least(val - center, v1))
            .map(|(_, p)| p)
            .sum();
        Some(PermutationP::Exact { p, size: concentra::ustat::binomial(n, n1) as u64 })
    } else {
        Some(sampled_p(&mww_array(n1, n2)?, v1, mc)?)
    };
    let mut t = Table::new("mww", &["quantity", "value"])
        .meta("check", "p-value")
        .param("n1", n1 as f64)
        .param("n2", n2 as f64)
        .param("b", 0.5);
    t.push_row(vec!["v_mww".into(), v.into()]);
    t.push_row(vec!["v1".into(), v1.into()]);
    finish(t, w1, |s| mww_tail_bound(s, n), perm)
}

pub fn graph_test(
    e1: &concentra::dips::EdgeSet,
    e2: &concentra::dips::EdgeSet,
    b: Option<f64>,
    exact: bool,
    no_permutation: bool,
    mc: &McArgs,
) -> Result<Outcome> {
    let n = e1.n();
    let mut array = graph_array(e1, e2)?;
    if let Some(b) = b {
        array = array.with_sup_bound(b)?;
    }
    let identity = perm::identity(n);
    let overlap = graph_overlap_statistic(e1, e2, &identity)?;
    let mu = graph_mean(e1, e2)?;
    let v1 = overlap as f64 - mu;
    let w1 = v1 * (n as f64).powf(-1.5);
    let perm = if no_permutation {
        None
    } else if exact {
        Some(exact_perm_p(&array, v1)?)
    } else {
        Some(sampled_p(&array, v1, mc)?)
    };
    let b = array.sup_bound();
    let mut t = Table::new("graph", &["quantity", "value"])
        .meta("check", "p-value")
        .param("n", n as f64)
        .param("edges1", e1.len() as f64)
        .param("edges2", e2.len() as f64)
        .param("b", b);
    t.push_row(vec!["overlap".into(), overlap.into()]);
    t.push_row(vec!["mu".into(), mu.into()]);
    t.push_row(vec!["v1".into(), v1.into()]);
    finish(t, w1, |s| dips_tail_bound(s, b, n), perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use concentra::harness::Cell;

    fn mc(seed: Option<u64>) -> McArgs {
        McArgs { seed, samples: 20_000, confidence: 0.99, threads: 1 }
    }

    fn value(o: &Outcome, name: &str) -> f64 {
        let row = o.table.rows.iter().find(|r| r[0] == Cell::Text(name.into())).unwrap();
        match row[1] {
            Cell::Num(x) => x,
            Cell::Int(i) => i as f64,
            _ => panic!(),
        }
    }

    #[test]
    fn separated_samples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [6.0, 7.0, 8.0, 9.0, 10.0];
        let o = mww_test(&x, &y, true, false, &mc(None)).unwrap();
        assert_eq!(value(&o, "v_mww"), 25.0);
        assert_eq!(value(&o, "v1"), 12.5);
        assert!((value(&o, "w1") - 12.5 * 10f64.powf(-1.5)).abs() < 1e-15);
        // Only the two fully separated placements reach |V₁| = 12.5.
        assert!((value(&o, "permutation_p_two_sided") - 2.0 / 252.0).abs() < 1e-15);
        assert!(value(&o, "bound_two_sided") >= value(&o, "permutation_p_two_sided"));
    }

    #[test]
    fn sampled_p_value_covers_exact() {
        let x = [0.3, 1.2, 2.5, 0.1];
        let y = [1.0, 2.0, 3.1];
        let exact = mww_test(&x, &y, true, false, &mc(None)).unwrap();
        let sampled = mww_test(&x, &y, false, false, &mc(Some(3))).unwrap();
        let p = value(&exact, "permutation_p_two_sided");
        assert!(value(&sampled, "permutation_ci_low") <= p && p <= value(&sampled, "permutation_ci_high"));
        assert!(mww_test(&x, &y, false, false, &mc(None)).is_err());
    }

    #[test]
    fn identical_graphs_overlap_fully() {
        let e = concentra::dips::EdgeSet::new(6, &[(0, 1), (1, 2), (2, 3), (4, 5)]).unwrap();
        let o = graph_test(&e, &e, None, true, false, &mc(None)).unwrap();
        assert_eq!(value(&o, "overlap"), 8.0);
        let direct = perm_tail(&e, 8);
        assert!((value(&o, "permutation_p_two_sided") - direct).abs() < 1e-15);
    }

    /// P(|overlap − μ| ≥ |observed − μ|) by a direct loop over S_n.
    fn perm_tail(e: &concentra::dips::EdgeSet, observed: u64) -> f64 {
        let mu = graph_mean(e, e).unwrap();
        let (mut hits, mut total) = (0, 0);
        Permutations::for_each(e.n(), |pi| {
            total += 1;
            let v = graph_overlap_statistic(e, e, pi).unwrap() as f64;
            if (v - mu).abs() >= (observed as f64 - mu).abs() - 1e-12 {
                hits += 1;
            }
        })
        .unwrap();
        hits as f64 / total as f64
    }
}
