//! Removal orders, removal sweeps, and ensemble aggregation.
//!
//! The sweep engine runs the removal order backwards: starting from the empty
//! graph it re-adds units and propagates, per node, a bitmask of the MSFs that
//! can reach it. Masks only ever grow along the additive sweep, so the total
//! propagation work is bounded and the full 200-point metric curve costs far
//! less than re-running reachability from scratch at every grid point. The
//! direct per-grid-point path ([`crate::reach::compute_metrics`]) stays as the
//! simple reference implementation and the two are cross-checked in tests.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{aggregate_centrality, pagerank, unit_employees, PageRankConfig, PageRankVariant};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SupplyGraph};
use crate::reach::ReachabilityBaseline;
use crate::scale::{aggregate, impute_subset, AttrNeeds, Scale, ScaleMapping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackStrategy {
    Random,
    PageRank,
    PageRankTranspose,
    Employees,
}

impl AttackStrategy {
    pub const ALL: [AttackStrategy; 4] = [
        AttackStrategy::Random,
        AttackStrategy::PageRank,
        AttackStrategy::PageRankTranspose,
        AttackStrategy::Employees,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackStrategy::Random => "random",
            AttackStrategy::PageRank => "pagerank",
            AttackStrategy::PageRankTranspose => "pagerank-transpose",
            AttackStrategy::Employees => "employees",
        }
    }

    pub fn pagerank_variant(self) -> Option<PageRankVariant> {
        match self {
            AttackStrategy::PageRank => Some(PageRankVariant::PageRank),
            AttackStrategy::PageRankTranspose => Some(PageRankVariant::PageRankTranspose),
            _ => None,
        }
    }
}

impl std::str::FromStr for AttackStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<AttackStrategy> {
        match s {
            "random" => Ok(AttackStrategy::Random),
            "pagerank" => Ok(AttackStrategy::PageRank),
            "pagerank-transpose" => Ok(AttackStrategy::PageRankTranspose),
            "employees" => Ok(AttackStrategy::Employees),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A removal order over the units of one scale mapping.
#[derive(Debug, Clone)]
pub struct AttackPlan {
    pub scale: Scale,
    pub strategy: AttackStrategy,
    /// Unit indices into the mapping, first removed first.
    pub order: Vec<u32>,
    pub seed: u64,
    pub imputation_seed: Option<u64>,
}

/// Build a removal order. RANDOM is a uniform permutation; value-based
/// strategies sort descending with seeded shuffles inside tie groups.
pub fn make_attack_order(
    mapping: &ScaleMapping,
    strategy: AttackStrategy,
    values: Option<&[f64]>,
    seed: u64,
) -> Result<AttackPlan> {
    let units = mapping.unit_count() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = match strategy {
        AttackStrategy::Random => {
            let mut order: Vec<u32> = (0..units).collect();
            order.shuffle(&mut rng);
            order
        }
        _ => {
            let values = values.ok_or_else(|| Error::MissingUnitValue {
                unit: "<all>".to_string(),
                what: "ranking",
            })?;
            if values.len() != units as usize {
                return Err(Error::InvalidParameter(format!(
                    "expected {units} unit values, got {}",
                    values.len()
                )));
            }
            if let Some(i) = values.iter().position(|v| v.is_nan()) {
                return Err(Error::MissingUnitValue {
                    unit: mapping.unit_name(i as u32).to_string(),
                    what: "ranking",
                });
            }
            let mut order: Vec<u32> = (0..units).collect();
            order.sort_by(|&a, &b| {
                values[b as usize]
                    .partial_cmp(&values[a as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            // seeded shuffle within each group of equal values
            let mut start = 0;
            while start < order.len() {
                let v = values[order[start] as usize];
                let mut end = start + 1;
                while end < order.len() && values[order[end] as usize] == v {
                    end += 1;
                }
                if end - start > 1 {
                    order[start..end].shuffle(&mut rng);
                }
                start = end;
            }
            order
        }
    };
    Ok(AttackPlan {
        scale: mapping.scale,
        strategy,
        order,
        seed,
        imputation_seed: mapping.imputation_seed,
    })
}

/// Where along the sweep metrics are evaluated.
#[derive(Debug, Clone)]
pub enum GridSpec {
    /// Every removal when the unit count is small (<= 500), otherwise about
    /// `max_points` evenly spaced removal counts including both endpoints.
    Auto { max_points: usize },
    /// Explicit fraction-of-units-remaining values, descending from 1.0.
    Fractions(Vec<f64>),
}

impl GridSpec {
    pub const DEFAULT_MAX_POINTS: usize = 201;

    /// Resolve to fraction-remaining values for a mapping with `units` units.
    pub fn fractions(&self, units: usize) -> Vec<f64> {
        match self {
            GridSpec::Fractions(f) => f.clone(),
            GridSpec::Auto { max_points } => {
                let u = units.max(1);
                if u <= 500 {
                    (0..=u).map(|c| (u - c) as f64 / u as f64).collect()
                } else {
                    let p = (*max_points).max(2);
                    let mut counts: Vec<usize> = (0..p)
                        .map(|i| (i as f64 * u as f64 / (p - 1) as f64).round() as usize)
                        .collect();
                    counts.dedup();
                    counts
                        .into_iter()
                        .map(|c| (u - c.min(u)) as f64 / u as f64)
                        .collect()
                }
            }
        }
    }
}

/// Reachability statistics along one removal sweep, on a descending
/// fraction-of-units-remaining grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub fraction_units_remaining: Vec<f64>,
    pub fraction_firms_remaining: Vec<f64>,
    pub atsr: Vec<f64>,
    pub stsr: Vec<f64>,
    pub altsr: Vec<f64>,
    pub scfr: Vec<f64>,
}

impl MetricCurve {
    pub fn len(&self) -> usize {
        self.fraction_units_remaining.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fraction_units_remaining.is_empty()
    }

    pub fn is_monotone_non_increasing(&self) -> bool {
        let ok = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        ok(&self.atsr) && ok(&self.stsr) && ok(&self.altsr)
    }
}

/// Shared per-(graph, baseline) state for the sweep engine.
struct SweepContext {
    words: usize,
    /// Per-node mask of MSF indices whose baseline contains the node.
    baseline_membership: Vec<u64>,
    /// MSF bit index per node (u32::MAX for non-evaluated nodes).
    msf_bit: Vec<u32>,
    baseline_size: Vec<u32>,
}

impl SweepContext {
    fn new(graph: &SupplyGraph, baseline: &ReachabilityBaseline) -> Result<SweepContext> {
        let msfs = baseline.evaluated_msfs().len();
        if msfs == 0 {
            return Err(Error::NoEvaluableMsfs);
        }
        let n = graph.node_count();
        let words = msfs.div_ceil(64);
        let mut baseline_membership = vec![0u64; n * words];
        let mut msf_bit = vec![u32::MAX; n];
        let mut baseline_size = vec![0u32; msfs];
        for (i, &m) in baseline.evaluated_msfs().iter().enumerate() {
            msf_bit[m as usize] = i as u32;
            let targets = baseline.baseline_of(i);
            baseline_size[i] = targets.len() as u32;
            for &t in targets {
                baseline_membership[t as usize * words + i / 64] |= 1u64 << (i % 64);
            }
        }
        Ok(SweepContext {
            words,
            baseline_membership,
            msf_bit,
            baseline_size,
        })
    }
}

struct SweepState<'a> {
    ctx: &'a SweepContext,
    graph: &'a SupplyGraph,
    survivor: Vec<bool>,
    mask: Vec<u64>,
    numerator: Vec<u32>,
    some_count: usize,
    all_count: usize,
    surviving_firms: usize,
    stack: Vec<NodeId>,
    on_stack: Vec<bool>,
}

impl<'a> SweepState<'a> {
    fn new(ctx: &'a SweepContext, graph: &'a SupplyGraph) -> SweepState<'a> {
        let n = graph.node_count();
        SweepState {
            ctx,
            graph,
            survivor: vec![false; n],
            mask: vec![0u64; n * ctx.words],
            numerator: vec![0u32; ctx.baseline_size.len()],
            some_count: 0,
            all_count: 0,
            surviving_firms: 0,
            stack: Vec::new(),
            on_stack: vec![false; n],
        }
    }

    #[inline]
    fn record_hits(&mut self, node: usize, gained: &[u64]) {
        let w = self.ctx.words;
        let membership = &self.ctx.baseline_membership[node * w..node * w + w];
        for (wi, (&g, &b)) in gained.iter().zip(membership.iter()).enumerate() {
            let mut d = g & b;
            while d != 0 {
                let m = wi * 64 + d.trailing_zeros() as usize;
                d &= d - 1;
                self.numerator[m] += 1;
                if self.numerator[m] == 1 {
                    self.some_count += 1;
                }
                if self.numerator[m] == self.ctx.baseline_size[m] {
                    self.all_count += 1;
                }
            }
        }
    }

    fn add_node(&mut self, v: NodeId) {
        let w = self.ctx.words;
        let vi = v as usize;
        self.survivor[vi] = true;
        self.surviving_firms += 1;

        let mut gather = vec![0u64; w];
        for &u in self.graph.customers(v) {
            if u != v && self.survivor[u as usize] {
                let row = &self.mask[u as usize * w..u as usize * w + w];
                for (g, &m) in gather.iter_mut().zip(row.iter()) {
                    *g |= m;
                }
                if self.ctx.msf_bit[u as usize] != u32::MAX {
                    let b = self.ctx.msf_bit[u as usize] as usize;
                    gather[b / 64] |= 1u64 << (b % 64);
                }
            }
        }
        // Masks hold >=1-edge reachability only; an MSF's own bit is OR'd in
        // at the source when its edges are walked, never stored at the MSF
        // itself. That way an MSF inside a sink cycle is credited for itself
        // exactly when the cycle is actually restored.
        self.record_hits(vi, &gather);
        self.mask[vi * w..vi * w + w].copy_from_slice(&gather);
        if gather.iter().any(|&x| x != 0) || self.ctx.msf_bit[vi] != u32::MAX {
            self.push(v);
            self.propagate();
        }
    }

    #[inline]
    fn push(&mut self, v: NodeId) {
        if !self.on_stack[v as usize] {
            self.on_stack[v as usize] = true;
            self.stack.push(v);
        }
    }

    fn propagate(&mut self) {
        let w = self.ctx.words;
        let graph = self.graph;
        let mut gained = vec![0u64; w];
        let mut src = vec![0u64; w];
        while let Some(u) = self.stack.pop() {
            self.on_stack[u as usize] = false;
            let src_base = u as usize * w;
            src.copy_from_slice(&self.mask[src_base..src_base + w]);
            if self.ctx.msf_bit[u as usize] != u32::MAX {
                let b = self.ctx.msf_bit[u as usize] as usize;
                src[b / 64] |= 1u64 << (b % 64);
            }
            for &t in graph.suppliers(u) {
                let ti = t as usize;
                if ti == u as usize || !self.survivor[ti] {
                    continue;
                }
                let mut any = false;
                for wi in 0..w {
                    let d = src[wi] & !self.mask[ti * w + wi];
                    gained[wi] = d;
                    if d != 0 {
                        self.mask[ti * w + wi] |= d;
                        any = true;
                    }
                }
                if any {
                    self.record_hits(ti, &gained);
                    self.push(t);
                }
            }
        }
    }

    fn snapshot(&self) -> (f64, f64, f64) {
        let m_count = self.ctx.baseline_size.len();
        let mut sum_r = 0.0f64;
        for (i, &num) in self.numerator.iter().enumerate() {
            sum_r += num as f64 / self.ctx.baseline_size[i] as f64;
        }
        (
            sum_r / m_count as f64,
            self.some_count as f64 / m_count as f64,
            self.all_count as f64 / m_count as f64,
        )
    }
}

/// Execute one removal sweep and evaluate the metrics on the grid.
pub fn run_removal(
    graph: &SupplyGraph,
    mapping: &ScaleMapping,
    baseline: &ReachabilityBaseline,
    plan: &AttackPlan,
    grid: &GridSpec,
) -> Result<MetricCurve> {
    let ctx = SweepContext::new(graph, baseline)?;
    run_removal_with_ctx(graph, mapping, &ctx, plan, grid)
}

fn run_removal_with_ctx(
    graph: &SupplyGraph,
    mapping: &ScaleMapping,
    ctx: &SweepContext,
    plan: &AttackPlan,
    grid: &GridSpec,
) -> Result<MetricCurve> {
    let units = mapping.unit_count();
    if plan.order.len() != units {
        return Err(Error::InvalidParameter(format!(
            "plan orders {} units but mapping has {units}",
            plan.order.len()
        )));
    }
    let fractions = grid.fractions(units);
    // Target removal counts, aligned to the fraction grid (descending
    // fraction => ascending removal count).
    let counts: Vec<usize> = fractions
        .iter()
        .map(|f| (((1.0 - f) * units as f64).round() as usize).min(units))
        .collect();
    if fractions.is_empty() {
        return Err(Error::InvalidParameter("empty metric grid".into()));
    }
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "metric grid must descend from 1.0".into(),
        ));
    }

    let total_firms: usize = (0..units as u32).map(|u| mapping.members(u).len()).sum();
    let mut state = SweepState::new(ctx, graph);

    let len = fractions.len();
    let mut atsr = vec![0.0; len];
    let mut stsr = vec![0.0; len];
    let mut altsr = vec![0.0; len];
    let mut firms = vec![0.0; len];

    // Additive sweep: walk the removal order backwards, so grid entries are
    // filled from the largest removal count down.
    let mut gi = len; // index one past the next entry to fill (entries are ascending in count)
    let mut removed_units = units;
    let mut record = |state: &SweepState, removed_units: usize, gi: &mut usize| {
        while *gi > 0 && counts[*gi - 1] == removed_units {
            let (a, s, l) = state.snapshot();
            let j = *gi - 1;
            atsr[j] = a;
            stsr[j] = s;
            altsr[j] = l;
            firms[j] = if total_firms == 0 {
                0.0
            } else {
                state.surviving_firms as f64 / total_firms as f64
            };
            *gi -= 1;
        }
    };

    record(&state, removed_units, &mut gi);
    for &unit in plan.order.iter().rev() {
        for &v in mapping.members(unit) {
            state.add_node(v);
        }
        removed_units -= 1;
        record(&state, removed_units, &mut gi);
    }
    debug_assert_eq!(gi, 0, "every grid entry should have been recorded");

    let scfr = atsr.iter().map(|a| 1.0 - a).collect();
    Ok(MetricCurve {
        fraction_units_remaining: fractions,
        fraction_firms_remaining: firms,
        atsr,
        stsr,
        altsr,
        scfr,
    })
}

/// Pointwise mean and nearest-rank percentile band over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub p2_5: Vec<f64>,
    pub p97_5: Vec<f64>,
}

impl Band {
    fn from_samples(samples: &[Vec<f64>]) -> Band {
        let n = samples.len();
        let len = samples[0].len();
        let mut mean = vec![0.0; len];
        let mut p2_5 = vec![0.0; len];
        let mut p97_5 = vec![0.0; len];
        let mut column = vec![0.0; n];
        for j in 0..len {
            let mut sum = 0.0;
            for (r, s) in samples.iter().enumerate() {
                column[r] = s[j];
                sum += s[j];
            }
            mean[j] = sum / n as f64;
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            p2_5[j] = column[nearest_rank(0.025, n)];
            p97_5[j] = column[nearest_rank(0.975, n)];
        }
        Band { mean, p2_5, p97_5 }
    }
}

/// Nearest-rank percentile index (0-based) for probability `p` in `n` samples.
fn nearest_rank(p: f64, n: usize) -> usize {
    let rank = (p * n as f64).ceil() as usize;
    rank.clamp(1, n) - 1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub tier_count: u32,
    pub scale: Scale,
    pub strategy: AttackStrategy,
    pub realizations: u32,
    pub master_seed: u64,
    pub max_grid_points: usize,
    pub pagerank: PageRankConfig,
}

impl ExperimentConfig {
    pub fn new(scale: Scale, strategy: AttackStrategy, tier_count: u32, master_seed: u64) -> Self {
        ExperimentConfig {
            tier_count,
            scale,
            strategy,
            realizations: Self::default_realizations(scale, strategy),
            master_seed,
            max_grid_points: GridSpec::DEFAULT_MAX_POINTS,
            pagerank: PageRankConfig::default(),
        }
    }

    /// 24 where industry imputation drives the variation (centrality attacks
    /// at industry-bearing scales), 100 otherwise.
    pub fn default_realizations(scale: Scale, strategy: AttackStrategy) -> u32 {
        if strategy.pagerank_variant().is_some() && scale.uses_industry() {
            24
        } else {
            100
        }
    }
}

/// An ensemble of removal sweeps with percentile bands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub scale: Scale,
    pub strategy: AttackStrategy,
    pub tier_count: u32,
    pub realization_count: u32,
    pub master_seed: u64,
    /// Shared fraction-of-units-remaining grid, descending from 1.0.
    pub grid: Vec<f64>,
    /// Mean fraction of firms remaining per grid point.
    pub firms_remaining_mean: Vec<f64>,
    pub atsr: Band,
    pub stsr: Band,
    pub altsr: Band,
    pub scfr: Band,
}

impl EnsembleResult {
    /// Trapezoidal area under the mean ATSR curve over fraction remaining.
    pub fn atsr_auc(&self) -> f64 {
        let x = &self.grid;
        let y = &self.atsr.mean;
        let mut area = 0.0;
        for i in 1..x.len() {
            area += (x[i - 1] - x[i]) * 0.5 * (y[i - 1] + y[i]);
        }
        area
    }
}

/// Run a full ensemble: truncate to the configured tier depth, derive
/// per-realization seeds from the master seed, re-impute attributes where the
/// scale or strategy needs them, and aggregate pointwise bands.
///
/// Deterministic for a given (graph, config) regardless of worker count:
/// results are reduced by realization index, never by arrival order.
pub fn run_ensemble(graph: &SupplyGraph, config: &ExperimentConfig) -> Result<EnsembleResult> {
    if config.realizations == 0 {
        return Err(Error::InvalidParameter("realizations must be >= 1".into()));
    }
    let truncated = graph.truncate_to_tiers(config.tier_count)?;
    run_ensemble_on_truncated(&truncated, config)
}

/// Ensemble over an already-truncated graph (tier census of `graph` must
/// match `config.tier_count` semantics; used by the tier-convergence sweep to
/// avoid re-truncating).
pub fn run_ensemble_on_truncated(
    truncated: &SupplyGraph,
    config: &ExperimentConfig,
) -> Result<EnsembleResult> {
    let baseline = ReachabilityBaseline::compute(truncated)?;
    let ctx = SweepContext::new(truncated, &baseline)?;
    let scores = match config.strategy.pagerank_variant() {
        Some(variant) => Some(pagerank(truncated, variant, config.pagerank)?),
        None => None,
    };
    let needs = AttrNeeds::for_experiment(config.scale, config.strategy == AttackStrategy::Employees);

    let seeds = |r: u32| -> (u64, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
        rng.set_stream(1 + r as u64);
        (rng.next_u64(), rng.next_u64())
    };

    // The shared grid comes from the first realization's unit count; coarse
    // scales can have slightly different unit sets across imputation draws,
    // so later realizations evaluate at the nearest removal count for each
    // shared fraction.
    let build_mapping = |r: u32| -> Result<(ScaleMapping, u64, u64)> {
        let (imp_seed, order_seed) = seeds(r);
        let imp = impute_subset(truncated, imp_seed, needs)?;
        Ok((aggregate(truncated, config.scale, &imp), imp_seed, order_seed))
    };

    let (mapping0, _, _) = build_mapping(0)?;
    let grid = GridSpec::Auto {
        max_points: config.max_grid_points,
    };
    let fractions = grid.fractions(mapping0.unit_count());
    let shared_grid = GridSpec::Fractions(fractions.clone());

    let one_realization = |r: u32| -> Result<MetricCurve> {
        let (mapping, _imp_seed, order_seed) = build_mapping(r)?;
        let values: Option<Vec<f64>> = match config.strategy {
            AttackStrategy::Random => None,
            AttackStrategy::PageRank | AttackStrategy::PageRankTranspose => Some(
                aggregate_centrality(scores.as_ref().expect("scores computed"), &mapping),
            ),
            AttackStrategy::Employees => {
                let (imp_seed2, _) = seeds(r);
                let imp = impute_subset(truncated, imp_seed2, needs)?;
                Some(
                    unit_employees(truncated, &mapping, &imp)?
                        .into_iter()
                        .map(|e| e as f64)
                        .collect(),
                )
            }
        };
        let plan = make_attack_order(&mapping, config.strategy, values.as_deref(), order_seed)?;
        run_removal_with_ctx(truncated, &mapping, &ctx, &plan, &shared_grid)
    };

    let curves: Vec<MetricCurve> = (0..config.realizations)
        .into_par_iter()
        .map(one_realization)
        .collect::<Result<Vec<_>>>()?;

    let collect = |f: fn(&MetricCurve) -> &Vec<f64>| -> Vec<Vec<f64>> {
        curves.iter().map(|c| f(c).clone()).collect()
    };
    let atsr = Band::from_samples(&collect(|c| &c.atsr));
    let stsr = Band::from_samples(&collect(|c| &c.stsr));
    let altsr = Band::from_samples(&collect(|c| &c.altsr));
    let scfr = Band::from_samples(&collect(|c| &c.scfr));
    let n = curves.len() as f64;
    let firms_remaining_mean: Vec<f64> = (0..fractions.len())
        .map(|j| curves.iter().map(|c| c.fraction_firms_remaining[j]).sum::<f64>() / n)
        .collect();

    Ok(EnsembleResult {
        scale: config.scale,
        strategy: config.strategy,
        tier_count: config.tier_count,
        realization_count: config.realizations,
        master_seed: config.master_seed,
        grid: fractions,
        firms_remaining_mean,
        atsr,
        stsr,
        altsr,
        scfr,
    })
}
