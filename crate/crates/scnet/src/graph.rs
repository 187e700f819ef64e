//! Directed supply-chain dependency graph.
//!
//! Edges are stored customer -> supplier ("depends on"), so reachability from
//! the medical supply firms (MSFs, tier 0) toward terminal suppliers (TSs) is
//! a forward traversal. Self-loops and duplicate edges are kept in storage for
//! census purposes but excluded from tiering, reachability, and degrees.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Per-firm attributes. `None` stands for UNKNOWN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmAttrs {
    pub firm_id: String,
    pub name: Option<String>,
    pub country: Option<String>,
    pub industry: Option<String>,
    pub employees: Option<u64>,
    pub is_msf: bool,
}

impl FirmAttrs {
    pub fn new(firm_id: impl Into<String>) -> Self {
        FirmAttrs {
            firm_id: firm_id.into(),
            name: None,
            country: None,
            industry: None,
            employees: None,
            is_msf: false,
        }
    }

    pub fn msf(firm_id: impl Into<String>) -> Self {
        FirmAttrs {
            is_msf: true,
            ..FirmAttrs::new(firm_id)
        }
    }

    fn is_all_unknown(&self) -> bool {
        self.name.is_none()
            && self.country.is_none()
            && self.industry.is_none()
            && self.employees.is_none()
            && !self.is_msf
    }
}

/// Compressed sparse row adjacency. Rows are sorted by target id, which keeps
/// iteration (and therefore floating-point accumulation) order deterministic.
#[derive(Debug, Clone)]
pub struct Csr {
    offsets: Vec<u32>,
    targets: Vec<NodeId>,
}

impl Csr {
    fn from_pairs(n: usize, pairs: &[(NodeId, NodeId)]) -> Csr {
        let mut offsets = vec![0u32; n + 1];
        for &(s, _) in pairs {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut targets = vec![0u32; pairs.len()];
        let mut cursor = offsets.clone();
        for &(s, t) in pairs {
            targets[cursor[s as usize] as usize] = t;
            cursor[s as usize] += 1;
        }
        Csr { offsets, targets }
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let lo = self.offsets[v as usize] as usize;
        let hi = self.offsets[v as usize + 1] as usize;
        &self.targets[lo..hi]
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }
}

/// The directed dependency graph plus derived structure (MSF set, TS set,
/// tiers). Immutable after construction; all queries are read-only.
#[derive(Debug, Clone)]
pub struct SupplyGraph {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    attrs: Vec<FirmAttrs>,
    /// Deduplicated stored edges, self-loops included, sorted.
    edges: Vec<(NodeId, NodeId)>,
    /// Analytic adjacency: self-loops excluded.
    out: Csr,
    rin: Csr,
    msf: Vec<NodeId>,
    ts: Vec<NodeId>,
    ts_mask: Vec<bool>,
    tier: Vec<Option<u32>>,
}

impl SupplyGraph {
    /// Build a graph from node and edge records. Edge endpoints missing from
    /// `nodes` are auto-created with all-UNKNOWN attributes. Errors on an
    /// empty edge set and on duplicate firm ids with conflicting attributes.
    pub fn build(nodes: Vec<FirmAttrs>, edges: Vec<(String, String)>) -> Result<SupplyGraph> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Self::build_impl(nodes, edges)
    }

    /// Like [`SupplyGraph::build`] but permits an empty edge set. Degenerate
    /// edgeless graphs come up in generators (e.g. G(n, 0)) and unit fixtures.
    pub fn build_lenient(nodes: Vec<FirmAttrs>, edges: Vec<(String, String)>) -> Result<SupplyGraph> {
        if nodes.is_empty() && edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Self::build_impl(nodes, edges)
    }

    fn build_impl(nodes: Vec<FirmAttrs>, edges: Vec<(String, String)>) -> Result<SupplyGraph> {
        let mut ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, NodeId> = HashMap::new();
        let mut attrs: Vec<FirmAttrs> = Vec::new();

        for rec in nodes {
            match index.get(&rec.firm_id) {
                Some(&v) => {
                    let prev = &attrs[v as usize];
                    if *prev != rec {
                        // A record that merely fills in what an earlier
                        // auto-created stub left unknown is not a conflict.
                        if prev.is_all_unknown() {
                            attrs[v as usize] = rec;
                        } else {
                            return Err(Error::ConflictingAttrs(rec.firm_id));
                        }
                    }
                }
                None => {
                    let v = ids.len() as NodeId;
                    ids.push(rec.firm_id.clone());
                    index.insert(rec.firm_id.clone(), v);
                    attrs.push(rec);
                }
            }
        }

        let mut pair_ids: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len());
        for (c, s) in edges {
            let ci = Self::intern(&mut ids, &mut index, &mut attrs, c);
            let si = Self::intern(&mut ids, &mut index, &mut attrs, s);
            pair_ids.push((ci, si));
        }
        pair_ids.sort_unstable();
        pair_ids.dedup();

        let n = ids.len();
        let analytic: Vec<(NodeId, NodeId)> =
            pair_ids.iter().copied().filter(|&(c, s)| c != s).collect();
        let out = Csr::from_pairs(n, &analytic);
        let mut rev: Vec<(NodeId, NodeId)> = analytic.iter().map(|&(c, s)| (s, c)).collect();
        rev.sort_unstable();
        let rin = Csr::from_pairs(n, &rev);

        let msf: Vec<NodeId> = (0..n as NodeId)
            .filter(|&v| attrs[v as usize].is_msf)
            .collect();

        let ts = sink_scc_members(n, &out);
        let mut ts_mask = vec![false; n];
        for &v in &ts {
            ts_mask[v as usize] = true;
        }

        let tier = bfs_tiers(n, &out, &msf);

        Ok(SupplyGraph {
            ids,
            index,
            attrs,
            edges: pair_ids,
            out,
            rin,
            msf,
            ts,
            ts_mask,
            tier,
        })
    }

    fn intern(
        ids: &mut Vec<String>,
        index: &mut HashMap<String, NodeId>,
        attrs: &mut Vec<FirmAttrs>,
        id: String,
    ) -> NodeId {
        if let Some(&v) = index.get(&id) {
            return v;
        }
        let v = ids.len() as NodeId;
        ids.push(id.clone());
        attrs.push(FirmAttrs::new(id.clone()));
        index.insert(id, v);
        v
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Stored (deduplicated) edge count, self-loops included.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn firm_id(&self, v: NodeId) -> &str {
        &self.ids[v as usize]
    }

    pub fn attrs(&self, v: NodeId) -> &FirmAttrs {
        &self.attrs[v as usize]
    }

    pub fn node(&self, firm_id: &str) -> Option<NodeId> {
        self.index.get(firm_id).copied()
    }

    pub fn msf_nodes(&self) -> &[NodeId] {
        &self.msf
    }

    /// Terminal suppliers: the union of all sink SCCs of the condensation.
    pub fn terminal_suppliers(&self) -> &[NodeId] {
        &self.ts
    }

    pub fn is_terminal_supplier(&self, v: NodeId) -> bool {
        self.ts_mask[v as usize]
    }

    /// Shortest dependency distance from the MSF set; `None` = unreachable.
    pub fn tier(&self, v: NodeId) -> Option<u32> {
        self.tier[v as usize]
    }

    pub fn tiers(&self) -> &[Option<u32>] {
        &self.tier
    }

    pub fn max_finite_tier(&self) -> Option<u32> {
        self.tier.iter().flatten().copied().max()
    }

    pub fn finite_tier_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as NodeId).filter(|&v| self.tier[v as usize].is_some())
    }

    /// Analytic out-neighbors (suppliers), self-loops excluded.
    #[inline]
    pub fn suppliers(&self, v: NodeId) -> &[NodeId] {
        self.out.neighbors(v)
    }

    /// Analytic in-neighbors (customers), self-loops excluded.
    #[inline]
    pub fn customers(&self, v: NodeId) -> &[NodeId] {
        self.rin.neighbors(v)
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out.degree(v)
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.rin.degree(v)
    }

    /// Induced subgraph on nodes with tier <= k; derived structure (TS set,
    /// tiers) is recomputed on the truncation. k = 0 is rejected.
    pub fn truncate_to_tiers(&self, k: u32) -> Result<SupplyGraph> {
        if k == 0 {
            return Err(Error::ZeroTierTruncation);
        }
        let keep: Vec<bool> = self
            .tier
            .iter()
            .map(|t| matches!(t, Some(t) if *t <= k))
            .collect();
        let nodes: Vec<FirmAttrs> = (0..self.node_count())
            .filter(|&v| keep[v])
            .map(|v| self.attrs[v].clone())
            .collect();
        let edges: Vec<(String, String)> = self
            .edges
            .iter()
            .filter(|&&(c, s)| keep[c as usize] && keep[s as usize])
            .map(|&(c, s)| (self.ids[c as usize].clone(), self.ids[s as usize].clone()))
            .collect();
        SupplyGraph::build_lenient(nodes, edges)
    }

    /// Edge-reversed copy of the graph (same nodes and attributes).
    pub fn reverse(&self) -> SupplyGraph {
        let nodes = self.attrs.clone();
        let edges: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(c, s)| (self.ids[s as usize].clone(), self.ids[c as usize].clone()))
            .collect();
        SupplyGraph::build_lenient(nodes, edges).expect("reversal preserves validity")
    }

    /// Undirected simplification: duplicate/reciprocal edges collapsed,
    /// self-loops dropped. Returned pairs satisfy a < b.
    pub fn undirected_simple_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut und: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| a != b)
            .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        und.sort_unstable();
        und.dedup();
        und
    }

    /// Firm counts per tier plus the number of unreachable nodes.
    pub fn tier_census(&self) -> (Vec<(u32, usize)>, usize) {
        let mut counts: std::collections::BTreeMap<u32, usize> = Default::default();
        let mut unreachable = 0usize;
        for t in &self.tier {
            match t {
                Some(t) => *counts.entry(*t).or_default() += 1,
                None => unreachable += 1,
            }
        }
        (counts.into_iter().collect(), unreachable)
    }
}

/// Multi-source BFS from the MSF set along dependency edges.
fn bfs_tiers(n: usize, out: &Csr, msf: &[NodeId]) -> Vec<Option<u32>> {
    let mut tier: Vec<Option<u32>> = vec![None; n];
    let mut queue: std::collections::VecDeque<NodeId> = Default::default();
    for &m in msf {
        tier[m as usize] = Some(0);
        queue.push_back(m);
    }
    while let Some(v) = queue.pop_front() {
        let next = tier[v as usize].unwrap() + 1;
        for &w in out.neighbors(v) {
            if tier[w as usize].is_none() {
                tier[w as usize] = Some(next);
                queue.push_back(w);
            }
        }
    }
    tier
}

/// Iterative Tarjan SCC returning members of all sink components (no edges
/// leaving the component). A singleton with no out-edges counts.
fn sink_scc_members(n: usize, out: &Csr) -> Vec<NodeId> {
    const NONE: u32 = u32::MAX;
    let mut idx = vec![NONE; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut counter = 0u32;
    let mut ncomp = 0u32;

    // (node, next-edge cursor)
    let mut call: Vec<(NodeId, usize)> = Vec::new();

    for root in 0..n as NodeId {
        if idx[root as usize] != NONE {
            continue;
        }
        call.push((root, 0));
        idx[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            let nbrs = out.neighbors(v);
            if *cursor < nbrs.len() {
                let w = nbrs[*cursor];
                *cursor += 1;
                if idx[w as usize] == NONE {
                    idx[w as usize] = counter;
                    low[w as usize] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(idx[w as usize]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p as usize] = low[p as usize].min(low[v as usize]);
                }
                if low[v as usize] == idx[v as usize] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w as usize] = false;
                        comp[w as usize] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }

    let mut is_sink = vec![true; ncomp as usize];
    for v in 0..n as NodeId {
        for &w in out.neighbors(v) {
            if comp[v as usize] != comp[w as usize] {
                is_sink[comp[v as usize] as usize] = false;
            }
        }
    }
    (0..n as NodeId)
        .filter(|&v| is_sink[comp[v as usize] as usize])
        .collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Fixture T1: MSFs M1, M2; edges M1->A, M2->B, A->C, A->D, B->D, B->E.
    pub fn t1() -> SupplyGraph {
        let nodes = vec![
            FirmAttrs::msf("M1"),
            FirmAttrs::msf("M2"),
            FirmAttrs::new("A"),
            FirmAttrs::new("B"),
            FirmAttrs::new("C"),
            FirmAttrs::new("D"),
            FirmAttrs::new("E"),
        ];
        let edges = pairs(&[
            ("M1", "A"),
            ("M2", "B"),
            ("A", "C"),
            ("A", "D"),
            ("B", "D"),
            ("B", "E"),
        ]);
        SupplyGraph::build(nodes, edges).unwrap()
    }

    /// Fixture T2: MSF M1; edges M1->A, A->B, B->C, C->B (sink 2-cycle).
    pub fn t2() -> SupplyGraph {
        let nodes = vec![FirmAttrs::msf("M1")];
        let edges = pairs(&[("M1", "A"), ("A", "B"), ("B", "C"), ("C", "B")]);
        SupplyGraph::build(nodes, edges).unwrap()
    }

    pub fn pairs(e: &[(&str, &str)]) -> Vec<(String, String)> {
        e.iter()
            .map(|&(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    pub fn names(g: &SupplyGraph, nodes: &[NodeId]) -> Vec<String> {
        let mut v: Vec<String> = nodes.iter().map(|&n| g.firm_id(n).to_string()).collect();
        v.sort();
        v
    }
}
