//! Scale mappings (firm / country-industry / industry / country) and
//! imputation of missing attributes.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SupplyGraph};

/// Unit of analysis. Removing a unit removes all member firms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Firm,
    CountryIndustry,
    Industry,
    Country,
}

impl Scale {
    pub const ALL: [Scale; 4] = [
        Scale::Firm,
        Scale::CountryIndustry,
        Scale::Industry,
        Scale::Country,
    ];

    pub fn uses_industry(self) -> bool {
        matches!(self, Scale::Industry | Scale::CountryIndustry)
    }

    pub fn uses_country(self) -> bool {
        matches!(self, Scale::Country | Scale::CountryIndustry)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Firm => "firm",
            Scale::CountryIndustry => "country-industry",
            Scale::Industry => "industry",
            Scale::Country => "country",
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scale> {
        match s {
            "firm" => Ok(Scale::Firm),
            "country-industry" => Ok(Scale::CountryIndustry),
            "industry" => Ok(Scale::Industry),
            "country" => Ok(Scale::Country),
            other => Err(Error::InvalidParameter(format!("unknown scale `{other}`"))),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully imputed attributes: known values pass through, UNKNOWNs are drawn
/// from the empirical distribution of known values. Deterministic given seed.
#[derive(Debug, Clone)]
pub struct ImputedAttrs {
    pub industry_of: Vec<Option<String>>,
    pub country_of: Vec<Option<String>>,
    pub employees_of: Vec<Option<u64>>,
    pub seed: u64,
    pub imputed_industries: usize,
    pub imputed_countries: usize,
    pub imputed_employees: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct AttrNeeds {
    pub industry: bool,
    pub country: bool,
    pub employees: bool,
}

impl AttrNeeds {
    pub const ALL: AttrNeeds = AttrNeeds {
        industry: true,
        country: true,
        employees: true,
    };

    pub fn for_experiment(scale: Scale, employees: bool) -> AttrNeeds {
        AttrNeeds {
            industry: scale.uses_industry(),
            country: scale.uses_country(),
            employees,
        }
    }
}

/// Impute every UNKNOWN industry, country, and employee count by drawing with
/// replacement from the multiset of known values of the same attribute.
pub fn impute_attributes(graph: &SupplyGraph, seed: u64) -> Result<ImputedAttrs> {
    impute_subset(graph, seed, AttrNeeds::ALL)
}

/// Imputation restricted to the attributes an experiment actually touches.
/// Unneeded attributes pass through as-is (possibly still UNKNOWN).
pub(crate) fn impute_subset(graph: &SupplyGraph, seed: u64, needs: AttrNeeds) -> Result<ImputedAttrs> {
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut industry_of: Vec<Option<String>> = Vec::with_capacity(n);
    let mut country_of: Vec<Option<String>> = Vec::with_capacity(n);
    let mut employees_of: Vec<Option<u64>> = Vec::with_capacity(n);
    for v in 0..n as NodeId {
        let a = graph.attrs(v);
        industry_of.push(a.industry.clone());
        country_of.push(a.country.clone());
        employees_of.push(a.employees);
    }

    let mut imputed_industries = 0;
    let mut imputed_countries = 0;
    let mut imputed_employees = 0;

    // Fixed pass order (industry, country, employees) keeps RNG consumption,
    // and therefore the draw, deterministic for a given seed.
    if needs.industry {
        imputed_industries = fill(&mut industry_of, &mut rng, "industry")?;
    }
    if needs.country {
        imputed_countries = fill(&mut country_of, &mut rng, "country")?;
        if imputed_countries > 0 {
            // The data model expects countries to be present; imputing them is
            // the same empirical-distribution rule applied for symmetry.
            log::warn!("imputed {imputed_countries} missing countries from the empirical distribution");
        }
    }
    if needs.employees {
        imputed_employees = fill(&mut employees_of, &mut rng, "employees")?;
    }

    Ok(ImputedAttrs {
        industry_of,
        country_of,
        employees_of,
        seed,
        imputed_industries,
        imputed_countries,
        imputed_employees,
    })
}

fn fill<T: Clone>(
    values: &mut [Option<T>],
    rng: &mut ChaCha8Rng,
    attribute: &'static str,
) -> Result<usize> {
    let missing: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_none()).collect();
    if missing.is_empty() {
        return Ok(0);
    }
    let known: Vec<T> = values.iter().flatten().cloned().collect();
    if known.is_empty() {
        return Err(Error::NoKnownValues { attribute });
    }
    for i in &missing {
        let pick = rng.random_range(0..known.len());
        values[*i] = Some(known[pick].clone());
    }
    Ok(missing.len())
}

/// Assignment of finite-tier firms to aggregate units at a scale.
#[derive(Debug, Clone)]
pub struct ScaleMapping {
    pub scale: Scale,
    unit_names: Vec<String>,
    unit_of: Vec<Option<u32>>,
    members: Vec<Vec<NodeId>>,
    pub imputation_seed: Option<u64>,
}

impl ScaleMapping {
    pub fn unit_count(&self) -> usize {
        self.unit_names.len()
    }

    pub fn unit_name(&self, unit: u32) -> &str {
        &self.unit_names[unit as usize]
    }

    pub fn unit_names(&self) -> &[String] {
        &self.unit_names
    }

    pub fn unit_of(&self, v: NodeId) -> Option<u32> {
        self.unit_of[v as usize]
    }

    pub fn members(&self, unit: u32) -> &[NodeId] {
        &self.members[unit as usize]
    }

    pub fn mapped_firm_count(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Identity mapping over every node of the graph, tiered or not. Used by
    /// percolation-style analyses on generator output where reachability
    /// tiering is not the object of study.
    pub fn all_firms(graph: &SupplyGraph) -> ScaleMapping {
        let n = graph.node_count();
        let unit_names: Vec<String> = (0..n as NodeId)
            .map(|v| graph.firm_id(v).to_string())
            .collect();
        ScaleMapping {
            scale: Scale::Firm,
            unit_names,
            unit_of: (0..n as u32).map(Some).collect(),
            members: (0..n as NodeId).map(|v| vec![v]).collect(),
            imputation_seed: None,
        }
    }
}

/// Group the finite-tier firms of `graph` into units at `scale`.
pub fn aggregate(graph: &SupplyGraph, scale: Scale, imputed: &ImputedAttrs) -> ScaleMapping {
    let n = graph.node_count();
    let mut keys: Vec<Option<String>> = vec![None; n];
    for v in graph.finite_tier_nodes() {
        let i = v as usize;
        let key = match scale {
            Scale::Firm => graph.firm_id(v).to_string(),
            Scale::Industry => expect_attr(&imputed.industry_of[i], graph, v, "industry"),
            Scale::Country => expect_attr(&imputed.country_of[i], graph, v, "country"),
            Scale::CountryIndustry => format!(
                "{}-{}",
                expect_attr(&imputed.country_of[i], graph, v, "country"),
                expect_attr(&imputed.industry_of[i], graph, v, "industry")
            ),
        };
        keys[i] = Some(key);
    }

    // BTreeMap gives deterministic unit numbering independent of node order.
    let mut by_key: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
    for v in graph.finite_tier_nodes() {
        by_key
            .entry(keys[v as usize].take().unwrap())
            .or_default()
            .push(v);
    }

    let mut unit_names = Vec::with_capacity(by_key.len());
    let mut members = Vec::with_capacity(by_key.len());
    let mut unit_of: Vec<Option<u32>> = vec![None; n];
    for (name, mut m) in by_key {
        let u = unit_names.len() as u32;
        m.sort_unstable();
        for &v in &m {
            unit_of[v as usize] = Some(u);
        }
        unit_names.push(name);
        members.push(m);
    }

    ScaleMapping {
        scale,
        unit_names,
        unit_of,
        members,
        imputation_seed: Some(imputed.seed),
    }
}

fn expect_attr(value: &Option<String>, graph: &SupplyGraph, v: NodeId, what: &str) -> String {
    value.clone().unwrap_or_else(|| {
        panic!(
            "firm {} has no {what} after imputation; impute the attributes this scale needs",
            graph.firm_id(v)
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::pairs;
    use crate::graph::FirmAttrs;

    fn firm(id: &str, country: &str, sic: &str) -> FirmAttrs {
        let mut a = FirmAttrs::new(id);
        a.country = Some(country.into());
        a.industry = Some(sic.into());
        a.employees = Some(1);
        a
    }

    fn three_firm_graph() -> SupplyGraph {
        let mut m = firm("f1", "US", "5047");
        m.is_msf = true;
        let nodes = vec![m, firm("f2", "US", "5047"), firm("f3", "CN", "3841")];
        SupplyGraph::build(nodes, pairs(&[("f1", "f2"), ("f2", "f3")])).unwrap()
    }

    #[test]
    fn country_industry_grouping() {
        let g = three_firm_graph();
        let imp = impute_attributes(&g, 0).unwrap();
        let m = aggregate(&g, Scale::CountryIndustry, &imp);
        assert_eq!(m.unit_count(), 2);
        let us = m.unit_names().iter().position(|n| n == "US-5047").unwrap();
        let cn = m.unit_names().iter().position(|n| n == "CN-3841").unwrap();
        assert_eq!(m.members(us as u32).len(), 2);
        assert_eq!(m.members(cn as u32).len(), 1);
    }

    #[test]
    fn country_grouping() {
        let g = three_firm_graph();
        let imp = impute_attributes(&g, 0).unwrap();
        let m = aggregate(&g, Scale::Country, &imp);
        let mut names = m.unit_names().to_vec();
        names.sort();
        assert_eq!(names, ["CN", "US"]);
    }

    #[test]
    fn firm_scale_is_identity() {
        let g = three_firm_graph();
        let imp = impute_attributes(&g, 0).unwrap();
        let m = aggregate(&g, Scale::Firm, &imp);
        assert_eq!(m.unit_count(), 3);
        assert!(m.members(0).len() == 1 && m.members(1).len() == 1 && m.members(2).len() == 1);
    }

    #[test]
    fn partition_property() {
        let g = three_firm_graph();
        let imp = impute_attributes(&g, 1).unwrap();
        for scale in Scale::ALL {
            let m = aggregate(&g, scale, &imp);
            let finite = g.finite_tier_nodes().count();
            assert_eq!(m.mapped_firm_count(), finite, "scale {scale}");
            for v in g.finite_tier_nodes() {
                let u = m.unit_of(v).expect("finite-tier firm must be mapped");
                assert!(m.members(u).contains(&v));
            }
        }
    }

    #[test]
    fn imputation_deterministic() {
        let mut nodes = vec![firm("a", "US", "5047")];
        nodes[0].is_msf = true;
        for i in 0..20 {
            nodes.push(FirmAttrs::new(format!("n{i}")));
        }
        let edges: Vec<(String, String)> =
            (0..20).map(|i| ("a".to_string(), format!("n{i}"))).collect();
        let mut nodes2 = nodes.clone();
        nodes2[1].industry = Some("9999".into());
        nodes2[1].country = Some("DE".into());
        nodes2[1].employees = Some(10);
        let g = SupplyGraph::build(nodes2, edges).unwrap();
        let a = impute_attributes(&g, 42).unwrap();
        let b = impute_attributes(&g, 42).unwrap();
        assert_eq!(a.industry_of, b.industry_of);
        assert_eq!(a.country_of, b.country_of);
        assert_eq!(a.employees_of, b.employees_of);
    }

    #[test]
    fn degenerate_distribution_is_constant() {
        let mut root = firm("a", "US", "7777");
        root.is_msf = true;
        root.employees = Some(3);
        let nodes = vec![root, FirmAttrs::new("b"), FirmAttrs::new("c")];
        let g = SupplyGraph::build(nodes, pairs(&[("a", "b"), ("a", "c")])).unwrap();
        let imp = impute_attributes(&g, 7).unwrap();
        for v in 0..g.node_count() {
            assert_eq!(imp.industry_of[v].as_deref(), Some("7777"));
            assert_eq!(imp.employees_of[v], Some(3));
        }
    }

    #[test]
    fn no_known_values_is_error() {
        let nodes = vec![FirmAttrs::msf("a"), FirmAttrs::new("b")];
        let g = SupplyGraph::build(nodes, pairs(&[("a", "b")])).unwrap();
        let err = impute_attributes(&g, 0).unwrap_err();
        assert!(matches!(err, Error::NoKnownValues { .. }));
    }

    #[test]
    fn imputation_marginals_follow_empirical_distribution() {
        // Known industries {X, X, Y}; a large batch of missing draws should
        // follow the 2:1 empirical proportions. Chi-square GOF at alpha=0.01
        // with 1 df: critical value 6.635.
        let n_missing = 10_000;
        let mut nodes = vec![firm("k1", "US", "X"), firm("k2", "US", "X"), firm("k3", "US", "Y")];
        nodes[0].is_msf = true;
        for i in 0..n_missing {
            let mut a = FirmAttrs::new(format!("m{i}"));
            a.country = Some("US".into());
            a.employees = Some(1);
            nodes.push(a);
        }
        for k in &mut nodes[..3] {
            k.employees = Some(1);
        }
        let edges: Vec<(String, String)> = (0..n_missing)
            .map(|i| ("k1".to_string(), format!("m{i}")))
            .collect();
        let g = SupplyGraph::build(nodes, edges).unwrap();
        let imp = impute_attributes(&g, 123).unwrap();
        let drawn_x = (0..g.node_count())
            .filter(|&v| g.attrs(v as NodeId).industry.is_none())
            .filter(|&v| imp.industry_of[v].as_deref() == Some("X"))
            .count() as f64;
        let n = n_missing as f64;
        let expect_x = n * 2.0 / 3.0;
        let expect_y = n / 3.0;
        let drawn_y = n - drawn_x;
        let chi2 = (drawn_x - expect_x).powi(2) / expect_x + (drawn_y - expect_y).powi(2) / expect_y;
        assert!(chi2 < 6.635, "chi-square {chi2} exceeds 0.01 critical value");
    }

    #[test]
    fn country_industry_refines_coarser_scales() {
        let g = three_firm_graph();
        let imp = impute_attributes(&g, 5).unwrap();
        let fine = aggregate(&g, Scale::CountryIndustry, &imp);
        for coarse_scale in [Scale::Country, Scale::Industry] {
            let coarse = aggregate(&g, coarse_scale, &imp);
            // Same fine unit => same coarse unit.
            let mut fine_to_coarse: std::collections::HashMap<u32, u32> = Default::default();
            for v in g.finite_tier_nodes() {
                let f = fine.unit_of(v).unwrap();
                let c = coarse.unit_of(v).unwrap();
                assert_eq!(*fine_to_coarse.entry(f).or_insert(c), c);
            }
        }
    }
}
