//! Discrete power-law fitting (maximum likelihood with KS-based xmin
//! selection) and exact sampling from the zeta distribution.

use rand::Rng;

/// Hurwitz zeta ζ(s, a) = Σ_{k>=0} (a + k)^-s for s > 1, a >= 1.
///
/// Euler-Maclaurin: direct sum of the first N terms plus tail corrections.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a >= 1.0);
    const N: usize = 24;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (a + k as f64).powf(-s);
    }
    let m = a + N as f64;
    sum += m.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * m.powf(-s);
    sum += s * m.powf(-s - 1.0) / 12.0;
    sum -= s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * m.powf(-s - 5.0) / 30240.0;
    sum
}

/// Result of a discrete power-law tail fit p(x) ∝ x^-gamma for x >= xmin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub xmin: u64,
    pub ks_distance: f64,
    pub tail_size: usize,
}

const GAMMA_LO: f64 = 1.001;
const GAMMA_HI: f64 = 16.0;

/// Discrete MLE of gamma for the tail x >= xmin.
fn mle_gamma(tail: &[u64], xmin: u64) -> f64 {
    let n = tail.len() as f64;
    let sum_log: f64 = tail.iter().map(|&x| (x as f64).ln()).sum();
    // Maximize  -n ln ζ(γ, xmin) - γ Σ ln x  by golden-section search.
    let neg_ll = |g: f64| n * hurwitz_zeta(g, xmin as f64).ln() + g * sum_log;
    golden_min(neg_ll, GAMMA_LO, GAMMA_HI, 1e-7)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Kolmogorov-Smirnov distance between the empirical tail CDF and the fitted
/// discrete power law.
fn ks_distance(sorted_tail: &[u64], xmin: u64, gamma: f64) -> f64 {
    let n = sorted_tail.len() as f64;
    let z_min = hurwitz_zeta(gamma, xmin as f64);
    let mut max_d = 0.0f64;
    let mut i = 0usize;
    while i < sorted_tail.len() {
        let x = sorted_tail[i];
        let mut j = i;
        while j < sorted_tail.len() && sorted_tail[j] == x {
            j += 1;
        }
        // Both step functions jump at observed values: compare P(X <= x)
        // against the empirical CDF after the jump, and P(X <= x - 1) (the
        // model's supremum over the flat stretch left of x) against the
        // empirical CDF before it.
        let ecdf = j as f64 / n;
        let ecdf_before = i as f64 / n;
        let cdf = 1.0 - hurwitz_zeta(gamma, (x + 1) as f64) / z_min;
        let cdf_left = 1.0 - hurwitz_zeta(gamma, x as f64) / z_min;
        max_d = max_d.max((ecdf - cdf).abs()).max((ecdf_before - cdf_left).abs());
        i = j;
    }
    max_d
}

/// Fit a discrete power law to `values`, choosing xmin to minimize the KS
/// distance over candidate xmins (the distinct observed values).
///
/// Returns `None` for degenerate inputs: fewer than `MIN_TAIL` positive
/// values, or an all-equal degree sequence.
pub fn fit_discrete(values: &[u64]) -> Option<PowerLawFit> {
    const MIN_TAIL: usize = 10;
    let mut xs: Vec<u64> = values.iter().copied().filter(|&x| x >= 1).collect();
    if xs.len() < MIN_TAIL {
        return None;
    }
    xs.sort_unstable();
    if xs.first() == xs.last() {
        return None; // constant sequence carries no slope information
    }

    let mut candidates: Vec<u64> = xs.clone();
    candidates.dedup();
    // The largest values leave too small a tail to fit.
    let mut best: Option<PowerLawFit> = None;
    for &xmin in &candidates {
        let start = xs.partition_point(|&x| x < xmin);
        let tail = &xs[start..];
        if tail.len() < MIN_TAIL || tail.first() == tail.last() {
            continue;
        }
        let gamma = mle_gamma(tail, xmin);
        let ks = ks_distance(tail, xmin, gamma);
        if best.map_or(true, |b| ks < b.ks_distance) {
            best = Some(PowerLawFit {
                gamma,
                xmin,
                ks_distance: ks,
                tail_size: tail.len(),
            });
        }
    }
    best
}

/// Exact sample from the zeta distribution p(x) ∝ x^-gamma, x >= xmin, by
/// inverting the CCDF with bracketing plus bisection.
pub fn sample_discrete<R: Rng + ?Sized>(rng: &mut R, gamma: f64, xmin: u64) -> u64 {
    let z_min = hurwitz_zeta(gamma, xmin as f64);
    let u: f64 = rng.random();
    // Find smallest x with P(X >= x + 1) <= u, i.e. ccdf(x + 1) <= u.
    let ccdf = |x: u64| hurwitz_zeta(gamma, x as f64) / z_min;
    let mut hi = xmin + 1;
    while ccdf(hi) > u {
        hi = hi.saturating_mul(2);
        if hi > 1 << 40 {
            break;
        }
    }
    let mut lo = xmin; // ccdf(lo + 1) > u possibly false only if hi==xmin+1
    if ccdf(lo + 1) <= u {
        return xmin;
    }
    // Invariant: ccdf(lo + 1) > u >= ccdf(hi + 1) region; bisect on x.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ccdf(mid + 1) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
