//! Breakdown thresholds (where mean ATSR falls below 20% / 1%) and the
//! fragmentation threshold (where average degree drops below 1).

use scnet::pipeline::{breakdown_report, fragmentation_report};
use scnet::synth::SupplyGenParams;
use scnet::{gen_supply_chain, AttackStrategy, ReportConfig, Scale};

fn main() {
    let mut params = SupplyGenParams::default();
    params.msf_count = 40;
    params.seed = 9;
    let graph = gen_supply_chain(&params).unwrap().graph;

    let mut config = ReportConfig::new(77);
    config.scales = vec![Scale::Firm];
    config.strategies = vec![AttackStrategy::Random, AttackStrategy::PageRank];
    config.realizations = Some(10);
    config.fragmentation_realizations = 30;

    let breakdown = breakdown_report(&graph, &config).unwrap();
    for entry in &breakdown.entries {
        for b in &entry.thresholds {
            println!(
                "{} / {} @ limit {:.2}: remaining {:.3}, affected {:.3}{}",
                entry.scale,
                entry.strategy,
                b.limit,
                b.remaining,
                b.affected,
                if b.limit_not_reached { " (limit not reached)" } else { "" }
            );
        }
    }

    let fragmentation = fragmentation_report(&graph, &config).unwrap();
    for entry in &fragmentation.entries {
        let e = &entry.ensemble;
        println!(
            "{} fragmentation: mean remaining {:.3} [{:.3}, {:.3}] over {} orders",
            entry.scale, e.mean, e.p2_5, e.p97_5, e.realization_count
        );
    }
}
