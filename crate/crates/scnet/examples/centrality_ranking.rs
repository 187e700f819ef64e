//! PageRank the dependency network and show the most relied-on firms, plus
//! the degree statistics driving the percolation criteria.

use scnet::centrality::{degree_stats, molloy_reed_fc, pagerank, PageRankConfig, PageRankVariant};
use scnet::synth::SupplyGenParams;
use scnet::gen_supply_chain;

fn main() {
    let mut params = SupplyGenParams::default();
    params.msf_count = 40;
    params.seed = 11;
    let graph = gen_supply_chain(&params).unwrap().graph;

    let scores = pagerank(&graph, PageRankVariant::PageRank, PageRankConfig::default()).unwrap();
    let mut ranked: Vec<(usize, f64)> = scores.scores.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("top 10 by pagerank (iterations: {}):", scores.iterations_used);
    for (v, s) in ranked.iter().take(10) {
        println!("  {}  {s:.6}", graph.firm_id(*v as u32));
    }

    let stats = degree_stats(&graph).unwrap();
    let mr = molloy_reed_fc(&stats);
    println!("\nmean degree {:.3}, kappa {:.3}", stats.mean_degree, stats.kappa);
    if let Some(gamma) = stats.gamma {
        println!("degree tail exponent {gamma:.3} (xmin {})", stats.xmin.unwrap());
    }
    println!("random-removal critical fraction {:.3}", mr.critical_fraction);
}
