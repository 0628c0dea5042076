//! Seeded random networks for property tests and oracle cross-checks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::highsnr::high_snr_scaling;
use crate::network::LayeredNetwork;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gain<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.05..1.0)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Symmetric diamond with up to `max_nodes` relays. The eavesdropper gain
/// is drawn on the same range as the relay gains, so both the silent and the
/// transmitting regimes appear.
pub fn random_diamond<R: Rng>(rng: &mut R, max_nodes: usize) -> LayeredNetwork {
    let n = rng.gen_range(1..=max_nodes);
    let (h_s, h_t, h_e) = (gain(rng), gain(rng), gain(rng));
    let p_s = log_uniform(rng, 0.1, 1e3);
    let power = log_uniform(rng, 0.1, 1e3);
    let sigma2 = rng.gen_range(0.5..2.0);
    LayeredNetwork::diamond(n, h_s, h_t, h_e, p_s, power, sigma2).expect("sampled diamond is valid")
}

/// ECGAL network with `1..=max_layers` layers of `1..=max_nodes` relays and
/// a uniformly chosen snooped layer.
pub fn random_ecgal<R: Rng>(rng: &mut R, max_layers: usize, max_nodes: usize) -> LayeredNetwork {
    let l = rng.gen_range(1..=max_layers);
    let n = rng.gen_range(1..=max_nodes);
    let h_s = gain(rng);
    let hops: Vec<f64> = (1..l).map(|_| gain(rng)).collect();
    let (h_t, h_e) = (gain(rng), gain(rng));
    let m = rng.gen_range(1..=l);
    let p_s = log_uniform(rng, 0.1, 1e3);
    let power = log_uniform(rng, 0.1, 1e3);
    let sigma2 = rng.gen_range(0.5..2.0);
    LayeredNetwork::ecgal(n, h_s, hops, h_t, h_e, m, p_s, power, sigma2)
        .expect("sampled network is valid")
}

/// ECGAL network inside the δ-high-SNR regime, with `L·δ < 1`. Redraws
/// until the regime holds; high powers make that quick.
pub fn random_highsnr_ecgal<R: Rng>(
    rng: &mut R,
    max_layers: usize,
    max_nodes: usize,
    delta: f64,
) -> LayeredNetwork {
    loop {
        let l = rng.gen_range(1..=max_layers);
        if l as f64 * delta >= 1.0 {
            continue;
        }
        let n = rng.gen_range(1..=max_nodes);
        let h_s = rng.gen_range(0.2..1.0);
        let hops: Vec<f64> = (1..l).map(|_| rng.gen_range(0.2..1.0)).collect();
        let h_t = rng.gen_range(0.05..1.0);
        let h_e = rng.gen_range(0.0..1.0) * h_t;
        let m = rng.gen_range(1..=l);
        let p_s = log_uniform(rng, 1e3, 1e7);
        let power = log_uniform(rng, 1e3, 1e6);
        let sigma2 = rng.gen_range(0.5..2.0);
        let net = LayeredNetwork::ecgal(n, h_s, hops, h_t, h_e, m, p_s, power, sigma2)
            .expect("sampled network is valid");
        if high_snr_scaling(&net, delta).is_ok() {
            return net;
        }
    }
}
