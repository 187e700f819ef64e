//! Generate a synthetic supply network and print its census and tier table.

use scnet::synth::SupplyGenParams;
use scnet::{census, gen_supply_chain};

fn main() {
    let mut params = SupplyGenParams::default();
    params.msf_count = 40;
    params.seed = 7;
    let generated = gen_supply_chain(&params).unwrap();
    let summary = census(&generated.graph);

    println!("nodes: {}", summary.nodes);
    println!("edges: {}", summary.edges);
    println!("msfs: {}", summary.msfs);
    println!("terminal suppliers: {}", summary.terminal_suppliers);
    println!(
        "missing industry/country/employees: {}/{}/{}",
        summary.missing_industry, summary.missing_country, summary.missing_employees
    );
    println!("\ntier,firms");
    for (tier, count) in &summary.tiers {
        println!("{tier},{count}");
    }
}
