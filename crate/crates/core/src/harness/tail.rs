use serde::Serialize;
use statrs::function::beta::inv_beta_reg;

use super::montecarlo::MonteCarlo;
use super::report::Param;
use crate::error::{invalid, Result};

/// Default number of grid thresholds.
pub const GRID_POINTS: usize = 40;
/// Exact tails may exceed the bound by this much before counting as a violation.
pub const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// Outcome of comparing one tail estimate with the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The bound is exceeded (exactly, or by the lower confidence limit).
    Yes,
    No,
    /// Monte Carlo row with no sample in the tail; says nothing about the bound.
    Uninformative,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Uninformative => "uninformative",
        }
    }
}

/// `n` equally spaced thresholds from 0 to `upper`.
pub fn default_grid(upper: f64, points: usize) -> Result<Vec<f64>> {
    if !(upper > 0.0 && upper.is_finite()) || points < 2 {
        return invalid(format!("grid needs a positive upper end and >= 2 points, got {upper}, {points}"));
    }
    let step = upper / (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 * step).collect())
}

pub fn validate_grid(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return invalid("threshold grid is empty");
    }
    if thresholds.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return invalid("thresholds must be finite and nonnegative");
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("thresholds must be strictly increasing");
    }
    Ok(())
}

/// Two-sided Clopper-Pearson interval for `hits` successes in `trials`.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || hits > trials {
        return invalid(format!("need 0 <= hits <= trials and trials > 0, got {hits}/{trials}"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return invalid(format!("confidence must lie in (0, 1), got {confidence}"));
    }
    let alpha = 1.0 - confidence;
    let (k, n) = (hits as f64, trials as f64);
    let low = if hits == 0 { 0.0 } else { inv_beta_reg(k, n - k + 1.0, alpha / 2.0) };
    let high = if hits == trials { 1.0 } else { inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    let p = k / n;
    Ok((low.min(p), high.max(p)))
}

/// Tail probabilities `P(X ≥ t)` on a grid, estimated or exact.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFragment {
    pub thresholds: Vec<f64>,
    pub estimate: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Tail counts for Monte Carlo; empty for exact fragments.
    pub hits: Vec<u64>,
    pub sample_count: u64,
    pub method: Method,
    pub confidence: f64,
}

/// Monte Carlo tail estimate. `chunk(seed, count, emit)` must draw `count`
/// statistic values from a generator seeded with `seed` and pass each to
/// `emit`; chunk hit counts are summed in chunk order.
pub fn empirical_tail<F>(mc: &MonteCarlo, thresholds: &[f64], confidence: f64, chunk: F) -> Result<TailFragment>
where
    F: Fn(u64, u64, &mut dyn FnMut(f64)) -> Result<()> + Sync + Send,
{
    validate_grid(thresholds)?;
    if mc.samples() < 100 {
        return invalid(format!("need at least 100 samples, got {}", mc.samples()));
    }
    if !(confidence > 0.5 && confidence < 1.0) {
        return invalid(format!("confidence must lie in (0.5, 1), got {confidence}"));
    }
    let per_chunk = mc.map_chunks(|seed, count| {
        let mut hits = vec![0u64; thresholds.len()];
        let mut seen = 0u64;
        chunk(seed, count, &mut |x| {
            seen += 1;
            // Thresholds ascend, so the hit set is a prefix.
            let k = thresholds.partition_point(|&t| t <= x);
            for h in &mut hits[..k] {
                *h += 1;
            }
        })?;
        if seen != count {
            return invalid(format!("chunk produced {seen} values, expected {count}"));
        }
        Ok(hits)
    })?;
    let mut hits = vec![0u64; thresholds.len()];
    for h in per_chunk {
        for (acc, v) in hits.iter_mut().zip(h) {
            *acc += v;
        }
    }
    let n = mc.samples();
    let mut estimate = Vec::with_capacity(hits.len());
    let mut ci_low = Vec::with_capacity(hits.len());
    let mut ci_high = Vec::with_capacity(hits.len());
    for &h in &hits {
        let (lo, hi) = clopper_pearson(h, n, confidence)?;
        estimate.push(h as f64 / n as f64);
        ci_low.push(lo);
        ci_high.push(hi);
    }
    Ok(TailFragment {
        thresholds: thresholds.to_vec(),
        estimate,
        ci_low,
        ci_high,
        hits,
        sample_count: n,
        method: Method::MonteCarlo,
        confidence,
    })
}

/// Exact tail of a uniformly weighted finite population of values.
pub fn exact_tail(values: &[f64], thresholds: &[f64]) -> Result<TailFragment> {
    let weighted: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
    exact_tail_weighted(&weighted, thresholds)
}

/// Exact tail of a finite distribution given as `(value, weight)` pairs.
pub fn exact_tail_weighted(values: &[(f64, f64)], thresholds: &[f64]) -> Result<TailFragment> {
    validate_grid(thresholds)?;
    if values.is_empty() {
        return invalid("exact tail needs a nonempty support");
    }
    if values.iter().any(|(v, w)| !v.is_finite() || !(*w >= 0.0)) {
        return invalid("support values must be finite with nonnegative weights");
    }
    let total: f64 = values.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return invalid("weights sum to zero");
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // suffix[i] = total weight of sorted[i..]
    let mut suffix = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix[i] = suffix[i + 1] + sorted[i].1;
    }
    let estimate: Vec<f64> = thresholds.iter().map(|&t| suffix[sorted.partition_point(|p| p.0 < t)] / total).collect();
    Ok(TailFragment {
        thresholds: thresholds.to_vec(),
        ci_low: estimate.clone(),
        ci_high: estimate.clone(),
        estimate,
        hits: Vec::new(),
        sample_count: values.len() as u64,
        method: Method::Exact,
        confidence: 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub threshold: f64,
    pub bound: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub violation: Verdict,
}

/// Analytic bound next to an exact or estimated tail, per threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub family: String,
    pub method: Method,
    pub seed: Option<u64>,
    pub sample_count: u64,
    pub confidence: f64,
    pub params: Vec<Param>,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn violations(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.violation == Verdict::Yes).map(|r| r.threshold).collect()
    }

    pub fn has_violation(&self) -> bool {
        self.rows.iter().any(|r| r.violation == Verdict::Yes)
    }

    pub fn with_family(mut self, family: impl Into<String>) -> Self {
        self.family = family.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_params(mut self, params: Vec<Param>) -> Self {
        self.params = params;
        self
    }
}

/// Merges per-threshold bound values with a tail fragment and flags
/// violations: `ci_low > bound` for Monte Carlo, `tail > bound + 1e−12`
/// for exact fragments.
pub fn dominance_report(bounds: &[f64], tail: &TailFragment) -> Result<TailReport> {
    if bounds.len() != tail.thresholds.len() {
        return invalid(format!("bound grid has {} points, tail grid has {}", bounds.len(), tail.thresholds.len()));
    }
    if bounds.iter().any(|b| !(*b >= 0.0 && *b <= 1.0)) {
        return invalid("bound values must lie in [0, 1]");
    }
    let rows = (0..bounds.len())
        .map(|i| {
            let bound = bounds[i];
            let violation = match tail.method {
                Method::Exact => {
                    if tail.estimate[i] > bound + EXACT_SLACK {
                        Verdict::Yes
                    } else {
                        Verdict::No
                    }
                }
                Method::MonteCarlo => {
                    if tail.ci_low[i] > bound {
                        Verdict::Yes
                    } else if tail.hits[i] == 0 {
                        Verdict::Uninformative
                    } else {
                        Verdict::No
                    }
                }
            };
            TailRow {
                threshold: tail.thresholds[i],
                bound,
                empirical: tail.estimate[i],
                ci_low: tail.ci_low[i],
                ci_high: tail.ci_high[i],
                violation,
            }
        })
        .collect();
    Ok(TailReport {
        family: String::new(),
        method: tail.method,
        seed: None,
        sample_count: tail.sample_count,
        confidence: tail.confidence,
        params: Vec::new(),
        rows,
    })
}

/// [`dominance_report`] with the bound given as a function of the threshold.
pub fn dominance_report_with(tail: &TailFragment, bound: impl Fn(f64) -> Result<f64>) -> Result<TailReport> {
    let values = tail.thresholds.iter().map(|&t| bound(t)).collect::<Result<Vec<_>>>()?;
    dominance_report(&values, tail)
}
