//! PageRank on the dependency graph and its transpose, score aggregation to
//! coarser scales, and degree statistics for the percolation criteria.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SupplyGraph};
use crate::powerlaw;
use crate::scale::{ImputedAttrs, ScaleMapping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PageRankVariant {
    /// Walk along dependency edges: central firms are those most relied on by
    /// their customers (lower-tier suppliers score high).
    PageRank,
    /// Walk along reversed edges: central firms are those most relied on by
    /// their suppliers.
    PageRankTranspose,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CentralityScores {
    pub variant: PageRankVariant,
    /// Per-node scores, summing to 1.
    pub scores: Vec<f64>,
    pub damping: f64,
    pub iterations_used: u32,
    pub converged: bool,
}

/// Power iteration with uniform teleportation; dangling-node mass is
/// redistributed uniformly. Converged when the L1 change drops below `tol`.
pub fn pagerank(
    graph: &SupplyGraph,
    variant: PageRankVariant,
    config: PageRankConfig,
) -> Result<CentralityScores> {
    if !(config.damping > 0.0 && config.damping < 1.0) {
        return Err(Error::InvalidDamping(config.damping));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }

    // "In-neighbors" and out-degrees of the walked graph.
    let in_neighbors = |v: NodeId| -> &[NodeId] {
        match variant {
            PageRankVariant::PageRank => graph.customers(v),
            PageRankVariant::PageRankTranspose => graph.suppliers(v),
        }
    };
    let walk_out_degree = |v: NodeId| -> usize {
        match variant {
            PageRankVariant::PageRank => graph.out_degree(v),
            PageRankVariant::PageRankTranspose => graph.in_degree(v),
        }
    };

    let d = config.damping;
    let nf = n as f64;
    let inv_out: Vec<f64> = (0..n as NodeId)
        .map(|v| {
            let deg = walk_out_degree(v);
            if deg == 0 {
                0.0
            } else {
                1.0 / deg as f64
            }
        })
        .collect();
    let dangling: Vec<NodeId> = (0..n as NodeId).filter(|&v| walk_out_degree(v) == 0).collect();

    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0f64; n];
    let mut iterations_used = 0;
    let mut converged = false;

    for it in 1..=config.max_iter {
        let dangling_mass: f64 = dangling.iter().map(|&v| x[v as usize]).sum();
        let base = (1.0 - d) / nf + d * dangling_mass / nf;
        for v in 0..n as NodeId {
            let mut acc = 0.0;
            for &u in in_neighbors(v) {
                acc += x[u as usize] * inv_out[u as usize];
            }
            next[v as usize] = base + d * acc;
        }
        let delta: f64 = x
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut x, &mut next);
        iterations_used = it;
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "pagerank did not converge within {} iterations",
            config.max_iter
        );
    }

    Ok(CentralityScores {
        variant,
        scores: x,
        damping: d,
        iterations_used,
        converged,
    })
}

/// Unit score = sum of member firm scores. Conserves total mass.
pub fn aggregate_centrality(scores: &CentralityScores, mapping: &ScaleMapping) -> Vec<f64> {
    (0..mapping.unit_count() as u32)
        .map(|u| {
            mapping
                .members(u)
                .iter()
                .map(|&v| scores.scores[v as usize])
                .sum()
        })
        .collect()
}

/// Unit size = sum of member employee counts (the extensive measure).
pub fn unit_employees(
    graph: &SupplyGraph,
    mapping: &ScaleMapping,
    imputed: &ImputedAttrs,
) -> Result<Vec<u64>> {
    let _ = graph;
    (0..mapping.unit_count() as u32)
        .map(|u| {
            mapping
                .members(u)
                .iter()
                .map(|&v| {
                    imputed.employees_of[v as usize].ok_or_else(|| Error::MissingUnitValue {
                        unit: mapping.unit_name(u).to_string(),
                        what: "employee",
                    })
                })
                .sum()
        })
        .collect()
}

/// Degree statistics on the undirected simplification (self-loops dropped,
/// reciprocal and duplicate edges collapsed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeStats {
    pub mean_degree: f64,
    pub second_moment: f64,
    /// κ = <k²> / <k>.
    pub kappa: f64,
    /// Fitted tail exponent of the total-degree distribution, when fittable.
    pub gamma: Option<f64>,
    pub xmin: Option<u64>,
    pub ks_distance: Option<f64>,
    /// The fit uses total (undirected) degree.
    pub degree_kind: String,
}

pub fn degree_stats(graph: &SupplyGraph) -> Result<DegreeStats> {
    let n = graph.node_count();
    let mut deg = vec![0u64; n];
    for (a, b) in graph.undirected_simple_edges() {
        deg[a as usize] += 1;
        deg[b as usize] += 1;
    }
    let positive = deg.iter().filter(|&&d| d >= 1).count();
    if positive < 10 {
        return Err(Error::TooFewDegrees {
            needed: 10,
            got: positive,
        });
    }
    let nf = n as f64;
    let mean_degree = deg.iter().map(|&d| d as f64).sum::<f64>() / nf;
    let second_moment = deg.iter().map(|&d| (d as f64) * (d as f64)).sum::<f64>() / nf;
    let kappa = if mean_degree > 0.0 {
        second_moment / mean_degree
    } else {
        0.0
    };
    let fit = powerlaw::fit_discrete(&deg);
    Ok(DegreeStats {
        mean_degree,
        second_moment,
        kappa,
        gamma: fit.map(|f| f.gamma),
        xmin: fit.map(|f| f.xmin),
        ks_distance: fit.map(|f| f.ks_distance),
        degree_kind: "total".into(),
    })
}

/// Molloy-Reed critical fraction for random removal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MolloyReed {
    /// f_c = 1 - 1/(κ - 1) when κ > 2; 0 otherwise (no giant component).
    pub critical_fraction: f64,
    /// Set when κ <= 1: the intact graph is already below the ER limit.
    pub subcritical: bool,
}

pub fn molloy_reed_fc(stats: &DegreeStats) -> MolloyReed {
    let kappa = stats.kappa;
    if kappa <= 1.0 {
        return MolloyReed {
            critical_fraction: 0.0,
            subcritical: true,
        };
    }
    let critical_fraction = if kappa > 2.0 { 1.0 - 1.0 / (kappa - 1.0) } else { 0.0 };
    MolloyReed {
        critical_fraction,
        subcritical: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::FirmAttrs;
    use crate::scale::{aggregate, impute_attributes, Scale};

    fn graph_from(edges: &[(&str, &str)]) -> SupplyGraph {
        SupplyGraph::build(vec![], pairs(edges)).unwrap()
    }

    #[test]
    fn three_cycle_uniform() {
        let g = graph_from(&[("a", "b"), ("b", "c"), ("c", "a")]);
        let s = pagerank(&g, PageRankVariant::PageRank, PageRankConfig::default()).unwrap();
        for v in 0..3 {
            assert!((s.scores[v] - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn star_with_dangling_hub_closed_form() {
        let g = graph_from(&[("a", "h"), ("b", "h"), ("c", "h")]);
        let s = pagerank(&g, PageRankVariant::PageRank, PageRankConfig::default()).unwrap();
        let h = g.node("h").unwrap() as usize;
        // Fixed point of: leaf = 0.15/4 + 0.85 h/4, hub = 0.15/4 + 0.85(3*leaf + h/4).
        let hub_expect = 0.8875 / 1.6375;
        let leaf_expect = (1.0 - hub_expect) / 3.0;
        assert!((s.scores[h] - hub_expect).abs() < 1e-6);
        for id in ["a", "b", "c"] {
            let v = g.node(id).unwrap() as usize;
            assert!((s.scores[v] - leaf_expect).abs() < 1e-6);
        }
    }

    #[test]
    fn path_rank_order_flips_under_transpose() {
        let g = graph_from(&[("a", "b")]);
        let a = g.node("a").unwrap() as usize;
        let b = g.node("b").unwrap() as usize;
        let fwd = pagerank(&g, PageRankVariant::PageRank, PageRankConfig::default()).unwrap();
        assert!(fwd.scores[b] > fwd.scores[a]);
        let rev = pagerank(&g, PageRankVariant::PageRankTranspose, PageRankConfig::default()).unwrap();
        assert!(rev.scores[a] > rev.scores[b]);
    }

    #[test]
    fn invalid_damping_rejected() {
        let g = graph_from(&[("a", "b")]);
        for damping in [0.0, 1.0, -0.3, 1.7] {
            let cfg = PageRankConfig {
                damping,
                ..Default::default()
            };
            assert!(matches!(
                pagerank(&g, PageRankVariant::PageRank, cfg),
                Err(Error::InvalidDamping(_))
            ));
        }
    }

    #[test]
    fn transpose_duality_exact() {
        let g = t1();
        let r = g.reverse();
        let a = pagerank(&g, PageRankVariant::PageRankTranspose, PageRankConfig::default()).unwrap();
        let b = pagerank(&r, PageRankVariant::PageRank, PageRankConfig::default()).unwrap();
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn aggregation_conserves_mass() {
        let mut nodes = vec![FirmAttrs::msf("m")];
        nodes[0].country = Some("US".into());
        nodes[0].industry = Some("5047".into());
        nodes[0].employees = Some(1);
        for i in 0..6 {
            let mut a = FirmAttrs::new(format!("f{i}"));
            a.country = Some(if i % 2 == 0 { "US" } else { "CN" }.into());
            a.industry = Some("3841".into());
            a.employees = Some(1);
            nodes.push(a);
        }
        let edges: Vec<(String, String)> =
            (0..6).map(|i| ("m".to_string(), format!("f{i}"))).collect();
        let g = SupplyGraph::build(nodes, edges).unwrap();
        let s = pagerank(&g, PageRankVariant::PageRank, PageRankConfig::default()).unwrap();
        let imp = impute_attributes(&g, 0).unwrap();
        for scale in Scale::ALL {
            let m = aggregate(&g, scale, &imp);
            let agg = aggregate_centrality(&s, &m);
            let total: f64 = agg.iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "scale {scale}: total {total}");
        }
    }

    #[test]
    fn unit_employee_sums() {
        let firm = |id: &str, employees: u64, msf: bool| {
            let mut a = if msf { FirmAttrs::msf(id) } else { FirmAttrs::new(id) };
            a.employees = Some(employees);
            a.country = Some("US".into());
            a.industry = Some("5047".into());
            a
        };
        let nodes = vec![firm("m", 1, true), firm("f1", 10, false), firm("f2", 5, false)];
        let g = SupplyGraph::build(nodes, pairs(&[("m", "f1"), ("m", "f2")])).unwrap();
        let imp = impute_attributes(&g, 0).unwrap();
        // All firms in one country unit: sum of members.
        let m = aggregate(&g, Scale::Country, &imp);
        assert_eq!(unit_employees(&g, &m, &imp).unwrap(), vec![16]);
        // Singleton units pass through.
        let m = aggregate(&g, Scale::Firm, &imp);
        let mut e = unit_employees(&g, &m, &imp).unwrap();
        e.sort_unstable();
        assert_eq!(e, vec![1, 5, 10]);
    }

    #[test]
    fn degree_stats_k4_regular() {
        // K4: every node has undirected degree 3.
        let g = graph_from(&[
            ("a", "b"),
            ("a", "c"),
            ("a", "d"),
            ("b", "c"),
            ("b", "d"),
            ("c", "d"),
            // pad to reach the 10-node precondition with a 3-regular prism
            ("p0", "p1"),
            ("p1", "p2"),
            ("p2", "p0"),
            ("q0", "q1"),
            ("q1", "q2"),
            ("q2", "q0"),
            ("p0", "q0"),
            ("p1", "q1"),
            ("p2", "q2"),
        ]);
        let s = degree_stats(&g).unwrap();
        assert!((s.mean_degree - 3.0).abs() < 1e-12);
        assert!((s.second_moment - 9.0).abs() < 1e-12);
        assert!((s.kappa - 3.0).abs() < 1e-12);
        assert!(s.gamma.is_none(), "constant degrees should not be fitted");
    }

    #[test]
    fn degree_stats_too_few_nodes() {
        let g = graph_from(&[("a", "b"), ("b", "c")]);
        assert!(matches!(
            degree_stats(&g),
            Err(Error::TooFewDegrees { .. })
        ));
    }

    #[test]
    fn molloy_reed_values() {
        let mk = |kappa: f64| DegreeStats {
            mean_degree: 1.0,
            second_moment: kappa,
            kappa,
            gamma: None,
            xmin: None,
            ks_distance: None,
            degree_kind: "total".into(),
        };
        assert_eq!(molloy_reed_fc(&mk(3.0)).critical_fraction, 0.5);
        assert_eq!(molloy_reed_fc(&mk(2.0)).critical_fraction, 0.0);
        assert!((molloy_reed_fc(&mk(101.0)).critical_fraction - 0.99).abs() < 1e-12);
        let sub = molloy_reed_fc(&mk(0.9));
        assert!(sub.subcritical && sub.critical_fraction == 0.0);
        // monotone in kappa above 2
        let mut prev = 0.0;
        for k in [2.1, 2.5, 3.0, 5.0, 10.0, 100.0] {
            let fc = molloy_reed_fc(&mk(k)).critical_fraction;
            assert!(fc >= prev);
            prev = fc;
        }
    }

    #[test]
    fn scores_sum_to_one_on_random_graphs() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = rng.random_range(2..30);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.random_bool(0.15) {
                        edges.push((format!("n{a}"), format!("n{b}")));
                    }
                }
            }
            if edges.is_empty() {
                edges.push(("n0".to_string(), "n1".to_string()));
            }
            let g = SupplyGraph::build(vec![], edges).unwrap();
            for variant in [PageRankVariant::PageRank, PageRankVariant::PageRankTranspose] {
                let s = pagerank(&g, variant, PageRankConfig::default()).unwrap();
                let total: f64 = s.scores.iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "trial {trial}: sum {total}");
                assert!(s.scores.iter().all(|&x| x > 0.0));
            }
        }
    }
}
