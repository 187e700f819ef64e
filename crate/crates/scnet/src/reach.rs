//! Reachability baselines and the ATSR/STSR/ALTSR metrics.

use crate::error::{Error, Result};
use crate::graph::{NodeId, SupplyGraph};

/// Per-MSF baseline terminal-supplier sets, computed on an intact graph.
///
/// `baseline(m)` is the set of terminal suppliers reachable from `m` along at
/// least one dependency edge (an isolated MSF that is its own TS therefore has
/// an empty baseline and is excluded from evaluation).
#[derive(Debug, Clone)]
pub struct ReachabilityBaseline {
    evaluated: Vec<NodeId>,
    baseline: Vec<Vec<NodeId>>,
    skipped: Vec<NodeId>,
}

impl ReachabilityBaseline {
    pub fn compute(graph: &SupplyGraph) -> Result<ReachabilityBaseline> {
        let n = graph.node_count();
        let mut evaluated = Vec::new();
        let mut baseline = Vec::new();
        let mut skipped = Vec::new();
        let mut visited = vec![u32::MAX; n];

        for (epoch, &m) in graph.msf_nodes().iter().enumerate() {
            let epoch = epoch as u32;
            // BFS over >=1-edge paths: seed with m's suppliers, not m itself.
            let mut queue: Vec<NodeId> = Vec::new();
            for &w in graph.suppliers(m) {
                if visited[w as usize] != epoch {
                    visited[w as usize] = epoch;
                    queue.push(w);
                }
            }
            let mut head = 0;
            let mut hits: Vec<NodeId> = Vec::new();
            while head < queue.len() {
                let v = queue[head];
                head += 1;
                if graph.is_terminal_supplier(v) {
                    hits.push(v);
                }
                for &w in graph.suppliers(v) {
                    if visited[w as usize] != epoch {
                        visited[w as usize] = epoch;
                        queue.push(w);
                    }
                }
            }
            if hits.is_empty() {
                log::warn!(
                    "MSF {} has no reachable terminal suppliers; excluded from evaluation",
                    graph.firm_id(m)
                );
                skipped.push(m);
            } else {
                hits.sort_unstable();
                evaluated.push(m);
                baseline.push(hits);
            }
        }

        Ok(ReachabilityBaseline {
            evaluated,
            baseline,
            skipped,
        })
    }

    pub fn evaluated_msfs(&self) -> &[NodeId] {
        &self.evaluated
    }

    pub fn baseline_of(&self, idx: usize) -> &[NodeId] {
        &self.baseline[idx]
    }

    pub fn skipped_msfs(&self) -> &[NodeId] {
        &self.skipped
    }

    pub fn is_empty(&self) -> bool {
        self.evaluated.is_empty()
    }
}

/// Reachability statistics after a removal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Mean over evaluated MSFs of the fraction of baseline TSs reachable.
    pub atsr: f64,
    /// Fraction of evaluated MSFs with at least one baseline TS reachable.
    pub stsr: f64,
    /// Fraction of evaluated MSFs with every baseline TS reachable.
    pub altsr: f64,
    /// Supply chain failure rate, 1 - ATSR.
    pub scfr: f64,
}

/// Evaluate ATSR/STSR/ALTSR on the surviving induced subgraph.
///
/// A removed MSF contributes r(m) = 0 and stays in the average: the metric
/// measures system-level supply capability, not survivor-conditional
/// capability.
pub fn compute_metrics(
    graph: &SupplyGraph,
    removed: &[bool],
    baseline: &ReachabilityBaseline,
) -> Result<Metrics> {
    if baseline.is_empty() {
        return Err(Error::NoEvaluableMsfs);
    }
    assert_eq!(removed.len(), graph.node_count());

    let n = graph.node_count();
    let mut visited = vec![u32::MAX; n];
    let mut in_baseline = vec![u32::MAX; n];
    let mut queue: Vec<NodeId> = Vec::new();

    let m_count = baseline.evaluated.len();
    let mut sum_r = 0.0f64;
    let mut some = 0usize;
    let mut all = 0usize;

    for (i, &m) in baseline.evaluated.iter().enumerate() {
        let epoch = i as u32;
        if removed[m as usize] {
            continue;
        }
        let targets = baseline.baseline_of(i);
        for &t in targets {
            in_baseline[t as usize] = epoch;
        }
        let want = targets.len();
        let mut found = 0usize;

        queue.clear();
        for &w in graph.suppliers(m) {
            if !removed[w as usize] && visited[w as usize] != epoch {
                visited[w as usize] = epoch;
                queue.push(w);
            }
        }
        let mut head = 0;
        while head < queue.len() && found < want {
            let v = queue[head];
            head += 1;
            if in_baseline[v as usize] == epoch {
                found += 1;
            }
            for &w in graph.suppliers(v) {
                if !removed[w as usize] && visited[w as usize] != epoch {
                    visited[w as usize] = epoch;
                    queue.push(w);
                }
            }
        }

        sum_r += found as f64 / want as f64;
        if found > 0 {
            some += 1;
        }
        if found == want {
            all += 1;
        }
    }

    let atsr = sum_r / m_count as f64;
    Ok(Metrics {
        atsr,
        stsr: some as f64 / m_count as f64,
        altsr: all as f64 / m_count as f64,
        scfr: 1.0 - atsr,
    })
}

/// Convenience wrapper taking removed firm ids.
pub fn compute_metrics_by_id(
    graph: &SupplyGraph,
    removed_ids: &[&str],
    baseline: &ReachabilityBaseline,
) -> Result<Metrics> {
    let mut removed = vec![false; graph.node_count()];
    for id in removed_ids {
        let v = graph
            .node(id)
            .ok_or_else(|| Error::UnknownFirm(id.to_string()))?;
        removed[v as usize] = true;
    }
    compute_metrics(graph, &removed, baseline)
}
