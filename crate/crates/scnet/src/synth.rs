//! Synthetic graph generators: tiered supply-chain-like networks, Erdős–Rényi
//! graphs, and configuration-model power-law graphs.

use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Poisson};

use crate::error::{Error, Result};
use crate::graph::{FirmAttrs, SupplyGraph};
use crate::powerlaw::sample_discrete;

#[derive(Debug, Clone)]
pub struct SupplyGenParams {
    pub msf_count: usize,
    /// Number of tiers including tier 0; nodes are created in rounds 0..tier_count.
    pub tier_count: u32,
    /// Mean supplier links drawn per firm (each firm draws at least one).
    pub mean_new_suppliers_per_firm: f64,
    /// Preferential attachment strength: existing suppliers are chosen with
    /// probability proportional to (customers + 1)^exponent.
    pub attachment_exponent: f64,
    /// Probability a supplier link reuses an existing next-tier node instead
    /// of creating a new one, tying branches together into a DAG.
    pub cross_tier_edge_prob: f64,
    /// Per-edge probability of adding the reciprocal edge, creating cycles.
    pub loop_injection_prob: f64,
    pub country_pool: Vec<String>,
    pub industry_pool: Vec<String>,
    /// ln-space mean and standard deviation of the employee count.
    pub employee_log_mean: f64,
    pub employee_log_sigma: f64,
    pub missing_industry_rate: f64,
    pub missing_employee_rate: f64,
    pub seed: u64,
}

impl Default for SupplyGenParams {
    /// Calibrated to realistic shape statistics: ~45k firms, ~115k edges,
    /// ~0.6% MSFs, 95% employee coverage, about a third of industry codes
    /// missing.
    fn default() -> Self {
        SupplyGenParams {
            msf_count: 260,
            tier_count: 10,
            mean_new_suppliers_per_firm: 5.2,
            attachment_exponent: 1.0,
            cross_tier_edge_prob: 0.69,
            loop_injection_prob: 0.005,
            country_pool: ["US", "CN", "DE", "JP", "GB", "FR", "IT", "KR", "TW", "MX", "CA", "IN"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            industry_pool: [
                "2834", "2836", "3559", "3674", "3714", "3721", "3812", "3825", "3827", "3829",
                "3841", "3843", "3845", "3851", "3861", "5047", "5065", "5122", "8071", "8731",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            employee_log_mean: 3.0,
            employee_log_sigma: 1.5,
            missing_industry_rate: 0.33,
            missing_employee_rate: 0.05,
            seed: 0,
        }
    }
}

impl SupplyGenParams {
    fn validate(&self) -> Result<()> {
        let rates = [
            ("cross_tier_edge_prob", self.cross_tier_edge_prob),
            ("loop_injection_prob", self.loop_injection_prob),
            ("missing_industry_rate", self.missing_industry_rate),
            ("missing_employee_rate", self.missing_employee_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("{name} must be in [0,1]")));
            }
        }
        if self.msf_count < 1 {
            return Err(Error::InvalidParameter("msf_count must be >= 1".into()));
        }
        if self.tier_count < 1 {
            return Err(Error::InvalidParameter("tier_count must be >= 1".into()));
        }
        if self.country_pool.is_empty() || self.industry_pool.is_empty() {
            return Err(Error::InvalidParameter("attribute pools must be non-empty".into()));
        }
        if self.mean_new_suppliers_per_firm <= 0.0 {
            return Err(Error::InvalidParameter(
                "mean_new_suppliers_per_firm must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A generated graph plus the pre-masking ground truth, so imputation
/// experiments can measure how well they recover the true distributions.
#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: SupplyGraph,
    /// True attribute per node, before missingness was applied.
    pub true_industry: Vec<String>,
    pub true_country: Vec<String>,
    pub true_employees: Vec<u64>,
}

/// Fenwick tree over per-node weights, for O(log n) weighted sampling with
/// mutable weights.
struct WeightedPicker {
    tree: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedPicker {
    fn new() -> WeightedPicker {
        WeightedPicker {
            tree: Vec::new(),
            weights: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    fn push(&mut self, w: f64) {
        let i = self.weights.len();
        self.weights.push(0.0);
        self.tree.push(0.0);
        self.update(i, w);
    }

    fn update(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        self.weights[i] = w;
        let mut j = i + 1;
        while j <= self.tree.len() {
            self.tree[j - 1] += delta;
            j += j & j.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut sum = 0.0;
        let mut j = self.tree.len();
        while j > 0 {
            sum += self.tree[j - 1];
            j -= j & j.wrapping_neg();
        }
        sum
    }

    /// Index with cumulative weight bracketing `target` in [0, total).
    fn pick(&self, mut target: f64) -> usize {
        let mut pos = 0usize;
        let mut step = self.tree.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.tree.len() && self.tree[next - 1] <= target {
                target -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(self.weights.len() - 1)
    }
}

fn node_id(i: usize) -> String {
    format!("S{i:06}")
}

/// Grow a tiered supply network from MSF seeds. Construction guarantees:
/// with `loop_injection_prob = 0` the graph is acyclic and every node's tier
/// equals its creation round, because every dependency edge points from a
/// round-t firm to a round-(t+1) firm.
pub fn gen_supply_chain(params: &SupplyGenParams) -> Result<GeneratedGraph> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let poisson = Poisson::new(params.mean_new_suppliers_per_firm)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut node_total = params.msf_count;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut current: Vec<usize> = (0..params.msf_count).collect();

    for _round in 1..params.tier_count {
        // Next-tier nodes plus their attachment weights (customers + 1)^alpha.
        let mut next: Vec<usize> = Vec::new();
        let mut customers: Vec<usize> = Vec::new();
        let mut picker = WeightedPicker::new();
        let mut chosen: Vec<usize> = Vec::new();
        for &u in &current {
            let links = (poisson.sample(&mut rng) as usize).max(1);
            chosen.clear();
            for _ in 0..links {
                let reuse = picker.len() > 0 && rng.random_bool(params.cross_tier_edge_prob);
                let w_local = if reuse {
                    // retry a few times so one firm rarely wastes draws on a
                    // supplier it already has
                    let mut pick = picker.pick(rng.random::<f64>() * picker.total());
                    let mut tries = 0;
                    while chosen.contains(&pick) && tries < 8 {
                        pick = picker.pick(rng.random::<f64>() * picker.total());
                        tries += 1;
                    }
                    if chosen.contains(&pick) {
                        continue;
                    }
                    pick
                } else {
                    next.push(node_total);
                    customers.push(0);
                    picker.push(1.0);
                    node_total += 1;
                    next.len() - 1
                };
                chosen.push(w_local);
                edges.push((u, next[w_local]));
                customers[w_local] += 1;
                picker.update(
                    w_local,
                    ((customers[w_local] + 1) as f64).powf(params.attachment_exponent),
                );
            }
        }
        if next.is_empty() {
            break;
        }
        current = next;
    }

    if params.loop_injection_prob > 0.0 {
        let forward = edges.len();
        for i in 0..forward {
            if rng.random_bool(params.loop_injection_prob) {
                let (a, b) = edges[i];
                edges.push((b, a));
            }
        }
    }

    // Attributes: ground truth first, then masking.
    let employee_dist = LogNormal::new(params.employee_log_mean, params.employee_log_sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut true_industry = Vec::with_capacity(node_total);
    let mut true_country = Vec::with_capacity(node_total);
    let mut true_employees = Vec::with_capacity(node_total);
    let mut nodes = Vec::with_capacity(node_total);
    for i in 0..node_total {
        let industry = params.industry_pool[rng.random_range(0..params.industry_pool.len())].clone();
        let country = params.country_pool[rng.random_range(0..params.country_pool.len())].clone();
        let employees = (employee_dist.sample(&mut rng).round() as u64).max(1);
        let mut a = FirmAttrs::new(node_id(i));
        a.is_msf = i < params.msf_count;
        a.country = Some(country.clone());
        a.industry = (!rng.random_bool(params.missing_industry_rate)).then(|| industry.clone());
        a.employees = (!rng.random_bool(params.missing_employee_rate)).then_some(employees);
        nodes.push(a);
        true_industry.push(industry);
        true_country.push(country);
        true_employees.push(employees);
    }

    let edge_ids: Vec<(String, String)> = edges
        .into_iter()
        .map(|(a, b)| (node_id(a), node_id(b)))
        .collect();
    let graph = SupplyGraph::build(nodes, edge_ids)?;
    Ok(GeneratedGraph {
        graph,
        true_industry,
        true_country,
        true_employees,
    })
}

/// Undirected G(n, p) with p = mean_degree/(n-1), stored with low-index ->
/// high-index orientation; 1% of nodes (at least one) are designated MSFs so
/// the full pipeline runs.
pub fn gen_er(n: usize, mean_degree: f64, seed: u64) -> Result<SupplyGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter("gen_er needs n >= 2".into()));
    }
    if mean_degree < 0.0 || mean_degree > (n - 1) as f64 {
        return Err(Error::InvalidParameter(
            "mean_degree must be in [0, n-1]".into(),
        ));
    }
    let p = mean_degree / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut edges: Vec<(String, String)> = Vec::new();
    if p > 0.0 {
        // Geometric skips over the n(n-1)/2 ordered pairs (a < b).
        let total: u64 = (n as u64) * (n as u64 - 1) / 2;
        let ln_q = (1.0 - p).ln();
        let mut idx: u64 = 0;
        loop {
            let u: f64 = rng.random();
            let skip = if p >= 1.0 {
                0
            } else {
                ((1.0 - u).ln() / ln_q).floor() as u64
            };
            idx = match idx.checked_add(skip) {
                Some(i) if i < total => i,
                _ => break,
            };
            // Unrank pair index to (a, b) with a < b.
            let a = pair_row(idx, n as u64);
            let offset = idx - row_start(a, n as u64);
            let b = a + 1 + offset;
            edges.push((node_id(a as usize), node_id(b as usize)));
            idx += 1;
            if idx >= total {
                break;
            }
        }
    }

    let msf_count = (n / 100).max(1);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let msfs: std::collections::HashSet<usize> = ids[..msf_count].iter().copied().collect();
    let nodes: Vec<FirmAttrs> = (0..n)
        .map(|i| {
            let mut a = FirmAttrs::new(node_id(i));
            a.is_msf = msfs.contains(&i);
            a
        })
        .collect();
    SupplyGraph::build_lenient(nodes, edges)
}

/// First pair index of row `a` in the a < b enumeration over n nodes.
fn row_start(a: u64, n: u64) -> u64 {
    // sum_{i<a} (n - 1 - i) = a*(n-1) - a*(a-1)/2
    a * (n - 1) - (a * a - a) / 2
}

/// Row (smaller endpoint) containing pair index `idx`.
fn pair_row(idx: u64, n: u64) -> u64 {
    let mut lo = 0u64;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if row_start(mid, n) <= idx {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Configuration-model graph with degrees drawn from a discrete power law
/// p(k) ∝ k^-gamma for k >= kmin; stubs are paired uniformly and self-loops /
/// multi-edges discarded.
pub fn gen_configuration_powerlaw(
    n: usize,
    gamma: f64,
    kmin: u64,
    seed: u64,
) -> Result<SupplyGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter("need n >= 2".into()));
    }
    if gamma <= 1.0 || kmin < 1 {
        return Err(Error::InvalidParameter("need gamma > 1 and kmin >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degrees: Vec<u64> = (0..n).map(|_| sample_discrete(&mut rng, gamma, kmin)).collect();
    if degrees.iter().sum::<u64>() % 2 == 1 {
        log::info!("odd stub total; resampling one degree");
        loop {
            let i = rng.random_range(0..n);
            let d = sample_discrete(&mut rng, gamma, kmin);
            if (degrees[i] + d) % 2 == 1 {
                degrees[i] = d;
                break;
            }
        }
    }

    let mut stubs: Vec<u32> = Vec::new();
    for (i, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(i as u32, d as usize));
    }
    stubs.shuffle(&mut rng);
    let mut edges: Vec<(String, String)> = Vec::new();
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b {
            // duplicate orientations are deduplicated by the builder; collapse
            // both directions here so reciprocal pairs don't survive as 2-cycles
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            edges.push((node_id(lo as usize), node_id(hi as usize)));
        }
    }

    let msf_count = (n / 100).max(1);
    let nodes: Vec<FirmAttrs> = (0..n)
        .map(|i| {
            let mut a = FirmAttrs::new(node_id(i));
            a.is_msf = i < msf_count;
            a
        })
        .collect();
    SupplyGraph::build_lenient(nodes, edges)
}
