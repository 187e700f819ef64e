//! Report assembly: tier-convergence sweeps, breakdown thresholds at the
//! standard limits, fragmentation ensembles per scale, and the bundled
//! full report the CLI serializes.

use serde::{Deserialize, Serialize};

use crate::attack::{run_ensemble, AttackStrategy, EnsembleResult, ExperimentConfig, GridSpec};
use crate::centrality::{degree_stats, molloy_reed_fc, DegreeStats, MolloyReed, PageRankConfig};
use crate::error::Result;
use crate::graph::SupplyGraph;
use crate::io::{census, CensusSummary};
use crate::scale::{aggregate, impute_subset, AttrNeeds, Scale};
use crate::thresholds::{
    breakdown_threshold, convergence_from_curves, fragmentation_ensemble, Breakdown, Convergence,
    FragmentationEnsemble, TierCurve, CONVERGENCE_EPSILON,
};

/// Standard breakdown limits: severe (ATSR < 20%) and near-total (< 1%).
pub const DEFAULT_LIMITS: [f64; 2] = [0.20, 0.01];

/// Derive an independent sub-seed from the master seed and a purpose tag
/// (splitmix64 finalizer, so nearby tags decorrelate fully).
pub fn sub_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const TAG_ATTACK: u64 = 1;
const TAG_FRAG: u64 = 2;
const TAG_IMPUTE: u64 = 3;

fn scale_idx(scale: Scale) -> u64 {
    Scale::ALL.iter().position(|&s| s == scale).unwrap() as u64
}

fn strategy_idx(strategy: AttackStrategy) -> u64 {
    AttackStrategy::ALL
        .iter()
        .position(|&s| s == strategy)
        .unwrap() as u64
}

fn tag(kind: u64, scale: Scale, strategy: Option<AttackStrategy>, tier: u32) -> u64 {
    (kind << 32)
        | (scale_idx(scale) << 16)
        | (strategy.map_or(0xff, strategy_idx) << 8)
        | tier as u64
}

/// Settings for report assembly. `realizations: None` uses the per-experiment
/// default; everything else has a fixed default via [`ReportConfig::new`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfig {
    pub tier_max: u32,
    pub epsilon: f64,
    pub limits: Vec<f64>,
    pub scales: Vec<Scale>,
    pub strategies: Vec<AttackStrategy>,
    pub realizations: Option<u32>,
    pub fragmentation_realizations: u32,
    pub master_seed: u64,
    pub max_grid_points: usize,
    pub pagerank: PageRankConfig,
}

impl ReportConfig {
    pub fn new(master_seed: u64) -> ReportConfig {
        ReportConfig {
            tier_max: 10,
            epsilon: CONVERGENCE_EPSILON,
            limits: DEFAULT_LIMITS.to_vec(),
            scales: Scale::ALL.to_vec(),
            strategies: AttackStrategy::ALL.to_vec(),
            realizations: None,
            fragmentation_realizations: 100,
            master_seed,
            max_grid_points: GridSpec::DEFAULT_MAX_POINTS,
            pagerank: PageRankConfig::default(),
        }
    }

    fn experiment(&self, scale: Scale, strategy: AttackStrategy, tier: u32) -> ExperimentConfig {
        // The seed deliberately ignores the tier depth: two depths that
        // truncate to the same graph then run the same orders and produce
        // exactly equal curves, so the convergence scan sees a true zero.
        let mut cfg = ExperimentConfig::new(
            scale,
            strategy,
            tier,
            sub_seed(self.master_seed, tag(TAG_ATTACK, scale, Some(strategy), 0)),
        );
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        cfg.max_grid_points = self.max_grid_points;
        cfg.pagerank = self.pagerank;
        cfg
    }
}

/// Ensembles for one (scale, strategy) at every tier depth 1..=tier_max.
pub fn run_tier_sweep(
    graph: &SupplyGraph,
    scale: Scale,
    strategy: AttackStrategy,
    config: &ReportConfig,
) -> Result<Vec<EnsembleResult>> {
    (1..=config.tier_max)
        .map(|t| run_ensemble(graph, &config.experiment(scale, strategy, t)))
        .collect()
}

fn tier_curves(ensembles: &[EnsembleResult]) -> Vec<TierCurve> {
    ensembles
        .iter()
        .map(|e| TierCurve {
            tier: e.tier_count,
            fraction: e.grid.clone(),
            atsr: e.atsr.mean.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub scale: Scale,
    pub strategy: AttackStrategy,
    pub convergence: Convergence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tier_max: u32,
    pub epsilon: f64,
    pub entries: Vec<ConvergenceEntry>,
}

/// Tier-depth sweep per (scale, strategy): how many tiers the curves need
/// before adding more stops changing the mean ATSR curve.
pub fn convergence_report(graph: &SupplyGraph, config: &ReportConfig) -> Result<ConvergenceReport> {
    let mut entries = Vec::new();
    for &scale in &config.scales {
        for &strategy in &config.strategies {
            let ensembles = run_tier_sweep(graph, scale, strategy, config)?;
            let convergence = convergence_from_curves(&tier_curves(&ensembles), config.epsilon)?;
            entries.push(ConvergenceEntry {
                scale,
                strategy,
                convergence,
            });
        }
    }
    Ok(ConvergenceReport {
        tier_max: config.tier_max,
        epsilon: config.epsilon,
        entries,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakdownEntry {
    pub scale: Scale,
    pub strategy: AttackStrategy,
    pub thresholds: Vec<Breakdown>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub tier_count: u32,
    pub limits: Vec<f64>,
    pub entries: Vec<BreakdownEntry>,
}

fn breakdown_entry(ensemble: &EnsembleResult, limits: &[f64]) -> BreakdownEntry {
    BreakdownEntry {
        scale: ensemble.scale,
        strategy: ensemble.strategy,
        thresholds: limits
            .iter()
            .map(|&limit| breakdown_threshold(&ensemble.grid, &ensemble.atsr.mean, limit))
            .collect(),
    }
}

/// Breakdown thresholds at the configured limits from full-depth ensembles.
pub fn breakdown_report(graph: &SupplyGraph, config: &ReportConfig) -> Result<BreakdownReport> {
    let mut entries = Vec::new();
    for &scale in &config.scales {
        for &strategy in &config.strategies {
            let ensemble =
                run_ensemble(graph, &config.experiment(scale, strategy, config.tier_max))?;
            entries.push(breakdown_entry(&ensemble, &config.limits));
        }
    }
    Ok(BreakdownReport {
        tier_count: config.tier_max,
        limits: config.limits.clone(),
        entries,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationEntry {
    pub scale: Scale,
    pub unit_count: usize,
    pub ensemble: FragmentationEnsemble,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationReport {
    pub tier_count: u32,
    pub entries: Vec<FragmentationEntry>,
}

/// Random-order fragmentation thresholds per scale on the full-depth graph.
pub fn fragmentation_report(
    graph: &SupplyGraph,
    config: &ReportConfig,
) -> Result<FragmentationReport> {
    let truncated = graph.truncate_to_tiers(config.tier_max)?;
    let mut entries = Vec::new();
    for &scale in &config.scales {
        let needs = AttrNeeds::for_experiment(scale, false);
        let imp_seed = sub_seed(config.master_seed, tag(TAG_IMPUTE, scale, None, 0));
        let imputed = impute_subset(&truncated, imp_seed, needs)?;
        let mapping = aggregate(&truncated, scale, &imputed);
        let ensemble = fragmentation_ensemble(
            &truncated,
            &mapping,
            config.fragmentation_realizations,
            sub_seed(config.master_seed, tag(TAG_FRAG, scale, None, 0)),
        )?;
        entries.push(FragmentationEntry {
            scale,
            unit_count: mapping.unit_count(),
            ensemble,
        });
    }
    Ok(FragmentationReport {
        tier_count: config.tier_max,
        entries,
    })
}

/// Everything the `report` command emits: input census, degree structure,
/// and the three threshold tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullReport {
    pub config: ReportConfig,
    pub census: CensusSummary,
    pub degrees: DegreeStats,
    pub molloy_reed: MolloyReed,
    pub convergence: ConvergenceReport,
    pub breakdown: BreakdownReport,
    pub fragmentation: FragmentationReport,
}

/// Assemble the full report. The tier sweep is run once per (scale,
/// strategy); its deepest ensemble doubles as the breakdown input, so the
/// breakdown table is always consistent with the convergence reference curve.
pub fn full_report(graph: &SupplyGraph, config: &ReportConfig) -> Result<FullReport> {
    let stats = degree_stats(graph)?;
    let molloy_reed = molloy_reed_fc(&stats);
    let mut conv_entries = Vec::new();
    let mut break_entries = Vec::new();
    for &scale in &config.scales {
        for &strategy in &config.strategies {
            let ensembles = run_tier_sweep(graph, scale, strategy, config)?;
            let convergence = convergence_from_curves(&tier_curves(&ensembles), config.epsilon)?;
            conv_entries.push(ConvergenceEntry {
                scale,
                strategy,
                convergence,
            });
            let deepest = ensembles.last().expect("tier_max >= 1");
            break_entries.push(breakdown_entry(deepest, &config.limits));
        }
    }
    Ok(FullReport {
        census: census(graph),
        degrees: stats,
        molloy_reed,
        convergence: ConvergenceReport {
            tier_max: config.tier_max,
            epsilon: config.epsilon,
            entries: conv_entries,
        },
        breakdown: BreakdownReport {
            tier_count: config.tier_max,
            limits: config.limits.clone(),
            entries: break_entries,
        },
        fragmentation: fragmentation_report(graph, config)?,
        config: config.clone(),
    })
}
