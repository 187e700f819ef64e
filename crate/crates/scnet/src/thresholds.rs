//! Curve comparison and threshold detection: tier convergence, reachability
//! breakdown, and structural fragmentation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SupplyGraph};
use crate::scale::ScaleMapping;

/// Step of the comparison grid used by [`uniform_distance`].
pub const DISTANCE_GRID_STEP: f64 = 0.005;

/// Default tolerance for declaring two tier curves equivalent.
pub const CONVERGENCE_EPSILON: f64 = 0.05;

/// Linear interpolation of a curve sampled at descending `x`, clamped to the
/// first/last value outside the sampled range.
fn interp(x: &[f64], y: &[f64], q: f64) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    if q >= x[0] {
        return y[0];
    }
    let last = x.len() - 1;
    if q <= x[last] {
        return y[last];
    }
    // first index with x[i] <= q
    let i = x.partition_point(|&v| v > q);
    let (x1, x0) = (x[i], x[i - 1]);
    let (y1, y0) = (y[i], y[i - 1]);
    if x0 == x1 {
        return y1;
    }
    y1 + (y0 - y1) * (q - x1) / (x0 - x1)
}

/// Sup-norm distance between two curves over fraction-remaining in [0, 1],
/// evaluated on a shared 0.005-step grid with linear interpolation.
pub fn uniform_distance(ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    assert!(!ax.is_empty() && !bx.is_empty(), "curves must be non-empty");
    let steps = (1.0 / DISTANCE_GRID_STEP).round() as usize;
    let mut max_d = 0.0f64;
    for i in 0..=steps {
        let q = i as f64 * DISTANCE_GRID_STEP;
        let d = (interp(ax, ay, q) - interp(bx, by, q)).abs();
        if d > max_d {
            max_d = d;
        }
    }
    max_d
}

/// One tier-depth's mean ATSR curve for convergence analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TierCurve {
    pub tier: u32,
    /// Fraction of units remaining, descending from 1.0.
    pub fraction: Vec<f64>,
    pub atsr: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Convergence {
    /// Smallest tier depth whose curve is within epsilon of the reference;
    /// falls back to the reference depth itself when nothing shallower
    /// qualifies (see `unconverged`).
    pub recommended: u32,
    /// No depth below the reference came within epsilon.
    pub unconverged: bool,
    pub reference_tier: u32,
    pub epsilon: f64,
    /// (tier, uniform distance to the reference curve), ascending by tier.
    pub distances: Vec<(u32, f64)>,
}

/// Find the smallest tier depth whose curve is uniformly within `epsilon` of
/// the deepest curve supplied.
pub fn convergence_from_curves(curves: &[TierCurve], epsilon: f64) -> Result<Convergence> {
    if curves.len() < 2 {
        return Err(Error::InvalidParameter(
            "convergence needs at least two tier curves".into(),
        ));
    }
    let reference = curves
        .iter()
        .max_by_key(|c| c.tier)
        .expect("non-empty curves");
    let mut distances: Vec<(u32, f64)> = curves
        .iter()
        .filter(|c| c.tier != reference.tier)
        .map(|c| {
            (
                c.tier,
                uniform_distance(&c.fraction, &c.atsr, &reference.fraction, &reference.atsr),
            )
        })
        .collect();
    distances.sort_by_key(|&(t, _)| t);
    // The reference trivially matches itself; only a strictly shallower
    // depth counts as "converged".
    let below = distances
        .iter()
        .find(|&&(_, d)| d <= epsilon)
        .map(|&(t, _)| t);
    Ok(Convergence {
        recommended: below.unwrap_or(reference.tier),
        unconverged: below.is_none(),
        reference_tier: reference.tier,
        epsilon,
        distances,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Breakdown {
    /// Largest fraction-of-units-remaining on the grid where the curve is
    /// already below the limit; 0.0 when the limit is never crossed.
    pub remaining: f64,
    pub affected: f64,
    pub limit: f64,
    pub limit_not_reached: bool,
}

/// Locate where a (descending-fraction, non-increasing) metric curve first
/// drops below `limit`. Resolution is the curve's own grid.
pub fn breakdown_threshold(fraction: &[f64], metric: &[f64], limit: f64) -> Breakdown {
    assert_eq!(fraction.len(), metric.len());
    let threshold = fraction
        .iter()
        .zip(metric.iter())
        .find(|&(_, &m)| m < limit)
        .map(|(&f, _)| f);
    let remaining = threshold.unwrap_or(0.0);
    Breakdown {
        remaining,
        affected: 1.0 - remaining,
        limit,
        limit_not_reached: threshold.is_none(),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Fragmentation {
    /// Fraction of units remaining when 2E/N first drops below 1 on the
    /// undirected simplification, `None` if the graph never fragments before
    /// it is fully removed (possible only for the empty removal order).
    pub threshold: Option<f64>,
    /// The intact graph already satisfies 2E/N < 1.
    pub pre_fragmented: bool,
}

/// Sweep a unit removal order and find where the surviving undirected
/// simplification falls below mean degree 1 (the connectivity rule of thumb
/// for sparse random graphs).
pub fn fragmentation_threshold(
    graph: &SupplyGraph,
    mapping: &ScaleMapping,
    order: &[u32],
) -> Result<Fragmentation> {
    let units = mapping.unit_count();
    if order.len() != units {
        return Err(Error::InvalidParameter(format!(
            "order covers {} units but mapping has {units}",
            order.len()
        )));
    }
    let n = graph.node_count();
    // undirected simple adjacency
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let simple = graph.undirected_simple_edges();
    for &(a, b) in &simple {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let mut edges = simple.len();
    let mut nodes: usize = (0..units as u32).map(|u| mapping.members(u).len()).sum();
    let mut removed = vec![false; n];
    // Units cover a subset of nodes when the mapping was built from finite
    // tiers only; nodes outside every unit never leave, so exclude them from
    // the survivor counts entirely.
    let mut in_scope = vec![false; n];
    for u in 0..units as u32 {
        for &v in mapping.members(u) {
            in_scope[v as usize] = true;
        }
    }
    if in_scope.iter().any(|&b| !b) {
        // Count only in-scope nodes and edges between them.
        edges = simple
            .iter()
            .filter(|&&(a, b)| in_scope[a as usize] && in_scope[b as usize])
            .count();
    }

    let fragmented = |edges: usize, nodes: usize| nodes == 0 || 2 * edges < nodes;
    if fragmented(edges, nodes) {
        return Ok(Fragmentation {
            threshold: Some(1.0),
            pre_fragmented: true,
        });
    }
    for (k, &u) in order.iter().enumerate() {
        for &v in mapping.members(u) {
            for &w in &adj[v as usize] {
                if in_scope[w as usize] && !removed[w as usize] {
                    edges -= 1;
                }
            }
            removed[v as usize] = true;
            nodes -= 1;
        }
        if fragmented(edges, nodes) {
            return Ok(Fragmentation {
                threshold: Some((units - k - 1) as f64 / units as f64),
                pre_fragmented: false,
            });
        }
    }
    Ok(Fragmentation {
        threshold: None,
        pre_fragmented: false,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationEnsemble {
    /// Per-realization thresholds, in realization order.
    pub thresholds: Vec<f64>,
    pub mean: f64,
    pub p2_5: f64,
    pub p97_5: f64,
    pub pre_fragmented: bool,
    pub realization_count: u32,
    pub master_seed: u64,
}

/// Fragmentation under uniformly random unit removal orders.
pub fn fragmentation_ensemble(
    graph: &SupplyGraph,
    mapping: &ScaleMapping,
    realizations: u32,
    master_seed: u64,
) -> Result<FragmentationEnsemble> {
    if realizations == 0 {
        return Err(Error::InvalidParameter("realizations must be >= 1".into()));
    }
    let units = mapping.unit_count() as u32;
    let mut thresholds = Vec::with_capacity(realizations as usize);
    let mut pre_fragmented = false;
    for r in 0..realizations {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(1 + r as u64);
        let mut order: Vec<u32> = (0..units).collect();
        order.shuffle(&mut rng);
        let frag = fragmentation_threshold(graph, mapping, &order)?;
        pre_fragmented |= frag.pre_fragmented;
        // A full sweep always ends at N = 0, which counts as fragmented, so
        // the threshold is always defined here.
        thresholds.push(frag.threshold.expect("full sweep fragments"));
    }
    let mean = thresholds.iter().sum::<f64>() / thresholds.len() as f64;
    let mut sorted = thresholds.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = |p: f64| {
        let r = (p * sorted.len() as f64).ceil() as usize;
        sorted[r.clamp(1, sorted.len()) - 1]
    };
    Ok(FragmentationEnsemble {
        p2_5: rank(0.025),
        p97_5: rank(0.975),
        thresholds,
        mean,
        pre_fragmented,
        realization_count: realizations,
        master_seed,
    })
}
