//! How many tiers of supplier data are enough? Sweep tier depths and report
//! when the mean ATSR curve stops moving.

use scnet::pipeline::convergence_report;
use scnet::synth::SupplyGenParams;
use scnet::{gen_supply_chain, AttackStrategy, ReportConfig, Scale};

fn main() {
    let mut params = SupplyGenParams::default();
    params.msf_count = 40;
    params.tier_count = 6;
    params.seed = 5;
    let graph = gen_supply_chain(&params).unwrap().graph;

    let mut config = ReportConfig::new(123);
    config.tier_max = 8;
    config.scales = vec![Scale::Firm];
    config.strategies = vec![AttackStrategy::Random];
    config.realizations = Some(10);

    let report = convergence_report(&graph, &config).unwrap();
    for entry in &report.entries {
        let c = &entry.convergence;
        println!(
            "{} / {}: recommended {} tiers (reference {})",
            entry.scale, entry.strategy, c.recommended, c.reference_tier
        );
        for (tier, distance) in &c.distances {
            println!("  depth {tier}: uniform distance {distance:.4}");
        }
    }
}
