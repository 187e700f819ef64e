//! Sample a discrete power law and recover its exponent by maximum
//! likelihood with KS-based tail selection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scnet::{fit_discrete, sample_discrete};

fn main() {
    let gamma = 2.5;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sample: Vec<u64> = (0..20_000).map(|_| sample_discrete(&mut rng, gamma, 1)).collect();

    let fit = fit_discrete(&sample).unwrap();
    println!("true gamma {gamma}");
    println!(
        "fitted gamma {:.4} (xmin {}, tail {} values, KS {:.4})",
        fit.gamma, fit.xmin, fit.tail_size, fit.ks_distance
    );
}
