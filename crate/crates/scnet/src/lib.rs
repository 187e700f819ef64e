//! Supply chain network reachability analysis.
//!
//! Builds tiered dependency graphs from firm/edge tables, measures how well
//! manufacturers keep reaching their terminal suppliers as units are removed
//! (randomly or by attack priority), and locates convergence, breakdown, and
//! fragmentation thresholds across four scales of aggregation.

pub mod attack;
pub mod centrality;
pub mod cli;
pub mod error;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod powerlaw;
pub mod reach;
pub mod scale;
pub mod synth;
pub mod thresholds;

pub use attack::{
    make_attack_order, run_ensemble, run_removal, AttackPlan, AttackStrategy, Band,
    EnsembleResult, ExperimentConfig, GridSpec, MetricCurve,
};
pub use centrality::{
    aggregate_centrality, degree_stats, molloy_reed_fc, pagerank, unit_employees,
    CentralityScores, DegreeStats, MolloyReed, PageRankConfig, PageRankVariant,
};
pub use error::{Error, Result};
pub use graph::{FirmAttrs, NodeId, SupplyGraph};
pub use io::{census, ingest, CensusSummary, RunManifest};
pub use pipeline::{
    breakdown_report, convergence_report, fragmentation_report, full_report, BreakdownReport,
    ConvergenceReport, FragmentationReport, FullReport, ReportConfig,
};
pub use powerlaw::{fit_discrete, hurwitz_zeta, sample_discrete, PowerLawFit};
pub use reach::{compute_metrics, compute_metrics_by_id, Metrics, ReachabilityBaseline};
pub use scale::{aggregate, impute_attributes, ImputedAttrs, Scale, ScaleMapping};
pub use synth::{gen_configuration_powerlaw, gen_er, gen_supply_chain, GeneratedGraph, SupplyGenParams};
pub use thresholds::{
    breakdown_threshold, convergence_from_curves, fragmentation_ensemble,
    fragmentation_threshold, uniform_distance, Breakdown, Convergence, Fragmentation,
    FragmentationEnsemble, TierCurve, CONVERGENCE_EPSILON,
};
