//! Validation engine: exact enumeration oracles, chunked Monte Carlo tail
//! estimates with Clopper-Pearson intervals, coupling-identity residuals and
//! bound-dominance reports.

mod enumerate;
mod identity;
mod montecarlo;
mod report;
mod tail;

pub use enumerate::{enumerate_product_space, exact_permutation_tail, mww_exact_distribution, MAX_PRODUCT_SPACE};
pub use identity::{
    dips_exact_pairs, exchangeability_exact, exchangeability_sampled, linearity_residual_dips,
    linearity_residual_dips_sampled, linearity_residual_ustat, linearity_residual_ustat_sampled, size_bias_identity,
    size_bias_test_functions, ustat_exact_pairs, ExchangeabilityReport, IdentityReport, SizeBiasIdentity, TestFunction,
    WeightedPair,
};
pub use montecarlo::{MonteCarlo, DEFAULT_CHUNK_SIZE};
pub use report::{format_number, Cell, Param, Table};
pub use tail::{
    clopper_pearson, default_grid, dominance_report, dominance_report_with, empirical_tail, exact_tail,
    exact_tail_weighted, validate_grid, Method, TailFragment, TailReport, TailRow, Verdict, EXACT_SLACK, GRID_POINTS,
};
