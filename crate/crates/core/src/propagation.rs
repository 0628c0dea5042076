//! Exact signal and noise power propagation through the relay layers.
//!
//! Inside one layer every relay receives the same superposition from the
//! previous layer plus its own receiver noise. Tracking the source amplitude
//! `a` and the power `c` of the accumulated (already forwarded) noise of that
//! common part is therefore enough: relaying with scaling row `β` and out gain
//! `g` maps `(a, c)` to `(g·Σβ·a, g²·((Σβ)²·c + Σβ²·σ²))`.

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::LayeredNetwork;
use crate::scaling::ScalingVector;

/// Common part of what every relay in one layer receives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Front {
    /// Source amplitude.
    pub a: f64,
    /// Accumulated forwarded-noise power.
    pub c: f64,
}

impl Front {
    pub fn source(net: &LayeredNetwork) -> Self {
        Front { a: net.h_s, c: 0.0 }
    }

    pub fn signal(&self, p_s: f64) -> f64 {
        p_s * self.a * self.a
    }

    pub fn rx(&self, net: &LayeredNetwork) -> f64 {
        self.signal(net.p_s) + self.c + net.sigma2
    }

    pub fn advance(&self, gain: f64, row: &[f64], sigma2: f64) -> Front {
        let (s, q) = sums(row);
        self.advance_sums(gain, s, q, sigma2)
    }

    pub fn advance_sums(&self, gain: f64, s: f64, q: f64, sigma2: f64) -> Front {
        let g2 = gain * gain;
        Front {
            a: gain * s * self.a,
            c: g2 * (s * s * self.c + q * sigma2),
        }
    }
}

pub(crate) fn sums(row: &[f64]) -> (f64, f64) {
    row.iter().fold((0.0, 0.0), |(s, q), &b| (s + b, q + b * b))
}

/// Received powers at one point of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerPower {
    pub signal: f64,
    pub noise: f64,
    /// `signal + noise + σ²`.
    pub rx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlow {
    /// Input of each relay layer, first to last.
    pub layers: Vec<LayerPower>,
    pub destination: LayerPower,
}

impl PowerFlow {
    pub fn input_snr(&self, layer: usize) -> f64 {
        let p = &self.layers[layer];
        p.signal / (p.rx - p.signal)
    }
}

fn layer_power(front: &Front, net: &LayeredNetwork) -> LayerPower {
    let signal = front.signal(net.p_s);
    LayerPower {
        signal,
        noise: front.c,
        rx: signal + front.c + net.sigma2,
    }
}

pub fn propagate(net: &LayeredNetwork, beta: &ScalingVector) -> Result<PowerFlow> {
    beta.check_shape(net)?;
    let mut front = Front::source(net);
    let mut layers = Vec::with_capacity(net.layers());
    for (l, row) in beta.rows().iter().enumerate() {
        layers.push(layer_power(&front, net));
        front = front.advance(net.out_gain(l), row, net.sigma2);
    }
    Ok(PowerFlow {
        layers,
        destination: layer_power(&front, net),
    })
}

/// Which relays of the snooped layer the eavesdropper overhears.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SnoopSet(Vec<bool>);

impl SnoopSet {
    pub fn all(nodes: usize) -> Self {
        SnoopSet(vec![true; nodes])
    }

    pub fn none(nodes: usize) -> Self {
        SnoopSet(vec![false; nodes])
    }

    /// Node `i` (0-based) is snooped when bit `i` of `mask` is set.
    pub fn from_mask(mask: u64, nodes: usize) -> Self {
        SnoopSet((0..nodes).map(|i| i < 64 && mask >> i & 1 == 1).collect())
    }

    /// 1-based node indices, as they appear in configs.
    pub fn from_indices(indices: &[usize], nodes: usize) -> Result<Self> {
        let mut set = vec![false; nodes];
        for &i in indices {
            if i == 0 || i > nodes {
                return Err(AncError::InvalidSnoop(format!(
                    "node {} outside 1..={}",
                    i, nodes
                )));
            }
            set[i - 1] = true;
        }
        Ok(SnoopSet(set))
    }

    pub fn mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |m, (i, _)| m | 1 << i)
    }

    /// Node 1 is the least significant (rightmost) digit.
    pub fn mask_string(&self) -> String {
        self.0
            .iter()
            .rev()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0[node]
    }

    pub fn is_all(&self) -> bool {
        self.0.iter().all(|&b| b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub snr_t: f64,
    pub snr_e: f64,
    pub r_t: f64,
    pub r_e: f64,
    pub r_s: f64,
}

/// `½·log₂(1 + snr)` in bits/s/Hz.
pub fn capacity(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

impl RateReport {
    pub fn from_snr(snr_t: f64, snr_e: f64) -> Self {
        let r_t = capacity(snr_t);
        let r_e = capacity(snr_e);
        RateReport {
            snr_t,
            snr_e,
            r_t,
            r_e,
            r_s: if r_t > r_e { r_t - r_e } else { 0.0 },
        }
    }
}

/// Destination and eavesdropper SNRs for per-layer rows, no bound checks.
pub(crate) fn snr_pair(net: &LayeredNetwork, rows: &[Vec<f64>], snoop: &SnoopSet) -> (f64, f64) {
    let m = net.snooped_index();
    let mut front = Front::source(net);
    let mut snr_e = 0.0;
    for (l, row) in rows.iter().enumerate() {
        if l == m {
            snr_e = eve_snr(net, &front, row, snoop);
        }
        front = front.advance(net.out_gain(l), row, net.sigma2);
    }
    let snr_t = front.signal(net.p_s) / (front.c + net.sigma2);
    (snr_t, snr_e)
}

pub(crate) fn eve_snr(net: &LayeredNetwork, front: &Front, row: &[f64], snoop: &SnoopSet) -> f64 {
    let (mut w, mut w2) = (0.0, 0.0);
    for (n, &b) in row.iter().enumerate() {
        if snoop.contains(n) {
            let x = net.eve_gain(n) * b;
            w += x;
            w2 += x * x;
        }
    }
    let signal = net.p_s * (w * front.a).powi(2);
    let noise = w * w * front.c + w2 * net.sigma2;
    signal / (noise + net.sigma2)
}

fn check_snoop(net: &LayeredNetwork, snoop: &SnoopSet) -> Result<()> {
    let n_m = net.nodes(net.snooped_index());
    if snoop.len() != n_m {
        return Err(AncError::InvalidSnoop(format!(
            "snoop set covers {} relays, snooped layer has {}",
            snoop.len(),
            n_m
        )));
    }
    Ok(())
}

pub fn rates(net: &LayeredNetwork, beta: &ScalingVector, snoop: &SnoopSet) -> Result<RateReport> {
    beta.check_shape(net)?;
    check_snoop(net, snoop)?;
    let (snr_t, snr_e) = snr_pair(net, beta.rows(), snoop);
    Ok(RateReport::from_snr(snr_t, snr_e))
}

/// Path-sum ("modified") channel gains: the coefficient of the source symbol
/// and of every relay's receiver noise at the destination and the eavesdropper.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedGains {
    pub h_st: f64,
    /// `h_lt[l][j]`: relay `j` of layer `l` to the destination.
    pub h_lt: Vec<Vec<f64>>,
    pub h_se: f64,
    /// Layers `0..=M-1` only; deeper layers never reach the eavesdropper.
    pub h_le: Vec<Vec<f64>>,
}

/// Sums over paths computed backwards from the sink: the gain from relay `j`
/// of layer `l` is `β_lj · g_l · Σ_k (gain from relay k of layer l+1)`.
pub fn modified_gains(
    net: &LayeredNetwork,
    beta: &ScalingVector,
    snoop: &SnoopSet,
) -> Result<ModifiedGains> {
    beta.check_shape(net)?;
    check_snoop(net, snoop)?;
    let rows = beta.rows();
    let layers = net.layers();

    let mut h_lt = vec![Vec::new(); layers];
    let mut downstream = 1.0;
    for l in (0..layers).rev() {
        let g = net.out_gain(l);
        h_lt[l] = rows[l].iter().map(|b| b * g * downstream).collect();
        downstream = h_lt[l].iter().sum();
    }
    let h_st = net.h_s * downstream;

    let m = net.snooped_index();
    let mut h_le = vec![Vec::new(); m + 1];
    h_le[m] = rows[m]
        .iter()
        .enumerate()
        .map(|(n, b)| {
            if snoop.contains(n) {
                b * net.eve_gain(n)
            } else {
                0.0
            }
        })
        .collect();
    let mut downstream = h_le[m].iter().sum::<f64>();
    for l in (0..m).rev() {
        let g = net.out_gain(l);
        h_le[l] = rows[l].iter().map(|b| b * g * downstream).collect();
        downstream = h_le[l].iter().sum();
    }
    let h_se = net.h_s * downstream;

    Ok(ModifiedGains {
        h_st,
        h_lt,
        h_se,
        h_le,
    })
}

impl ModifiedGains {
    pub fn rates(&self, net: &LayeredNetwork) -> RateReport {
        let sq = |rows: &[Vec<f64>]| rows.iter().flatten().map(|x| x * x).sum::<f64>();
        let snr = net.source_snr();
        let snr_t = snr * self.h_st * self.h_st / (1.0 + sq(&self.h_lt));
        let snr_e = snr * self.h_se * self.h_se / (1.0 + sq(&self.h_le));
        RateReport::from_snr(snr_t, snr_e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::EveGains;
    use crate::scaling::beta_max_vector;
    use approx::assert_relative_eq;

    fn example1() -> LayeredNetwork {
        let mut net = LayeredNetwork::diamond(3, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        net.h_e = EveGains::PerNode(vec![0.2, 0.6, 0.4]);
        net
    }

    #[test]
    fn zero_scaling_kills_signal() {
        let net =
            LayeredNetwork::ecgal(2, 0.7, vec![0.5, 0.4], 0.3, 0.1, 2, 10.0, 10.0, 1.0).unwrap();
        let beta = ScalingVector::new(&net, vec![vec![0.0; 2]; 3]).unwrap();
        let flow = propagate(&net, &beta).unwrap();
        assert_eq!(flow.layers[1].signal, 0.0);
        assert_eq!(flow.destination.signal, 0.0);
        assert_eq!(flow.destination.noise, 0.0);
        assert_eq!(flow.destination.rx, net.sigma2);
        let r = rates(&net, &beta, &SnoopSet::all(2)).unwrap();
        assert_eq!(r.r_s, 0.0);
    }

    #[test]
    fn single_relay_chain() {
        let net = LayeredNetwork::diamond(1, 0.8, 0.5, 0.2, 3.0, 2.0, 1.0).unwrap();
        let beta = ScalingVector::new(&net, vec![vec![0.6]]).unwrap();
        let flow = propagate(&net, &beta).unwrap();
        assert_relative_eq!(
            flow.destination.signal,
            3.0 * 0.64 * 0.36 * 0.25,
            max_relative = 1e-15
        );
        assert_relative_eq!(flow.destination.noise, 0.36 * 0.25, max_relative = 1e-15);
    }

    #[test]
    fn example1_optimum_power_flow() {
        // Only relay 1 forwards: signal P_s h_s² β² h_t², noise σ² β² h_t².
        let net = example1();
        let b = (5.0f64 / 2.8).sqrt();
        let beta = ScalingVector::new(&net, vec![vec![b, 0.0, 0.0]]).unwrap();
        let flow = propagate(&net, &beta).unwrap();
        assert_relative_eq!(flow.layers[0].rx, 2.8, max_relative = 1e-15);
        assert_relative_eq!(
            flow.destination.signal,
            1.8 * b * b * 0.09,
            max_relative = 1e-14
        );
        assert_relative_eq!(flow.destination.noise, b * b * 0.09, max_relative = 1e-14);
        let tx = b * b * flow.layers[0].rx;
        assert_relative_eq!(tx, 5.0, max_relative = 1e-14);
    }

    #[test]
    fn example1_eavesdropper_rates() {
        let net = example1();
        let b1 = (5.0f64 / 2.8).sqrt();
        let case1 = ScalingVector::new(&net, vec![vec![b1, 0.0, 0.0]]).unwrap();
        let r = rates(&net, &case1, &SnoopSet::all(3)).unwrap();
        assert!((r.r_e - 0.081749).abs() < 1e-6, "{}", r.r_e);

        let case2 = ScalingVector::new(&net, vec![vec![b1, 0.0, 0.7298]]).unwrap();
        let r = rates(&net, &case2, &SnoopSet::from_indices(&[2, 3], 3).unwrap()).unwrap();
        assert!((r.r_e - 0.095368).abs() < 1e-5, "{}", r.r_e);
    }

    #[test]
    fn empty_snoop_set_leaves_full_rate() {
        let net = example1();
        let beta = beta_max_vector(&net).unwrap();
        let r = rates(&net, &beta, &SnoopSet::none(3)).unwrap();
        assert_eq!(r.snr_e, 0.0);
        assert_eq!(r.r_s, r.r_t);
    }

    #[test]
    fn identical_channels_give_zero_secrecy() {
        let net = LayeredNetwork::diamond(3, 0.5, 0.4, 0.4, 7.0, 3.0, 1.0).unwrap();
        let beta = beta_max_vector(&net).unwrap();
        let r = rates(&net, &beta, &SnoopSet::all(3)).unwrap();
        assert_eq!(r.snr_t, r.snr_e);
        assert_eq!(r.r_s, 0.0);
    }

    #[test]
    fn snoop_set_mask_layout() {
        let s = SnoopSet::from_indices(&[2, 3], 3).unwrap();
        assert_eq!(s.mask(), 0b110);
        assert_eq!(s.mask_string(), "110");
        assert_eq!(SnoopSet::from_mask(0b110, 3), s);
        assert!(SnoopSet::from_indices(&[4], 3).is_err());
    }

    #[test]
    fn mismatched_snoop_set_rejected() {
        let net = example1();
        let beta = beta_max_vector(&net).unwrap();
        assert!(rates(&net, &beta, &SnoopSet::all(2)).is_err());
    }

    #[test]
    fn path_gains_match_propagation_on_a_three_layer_net() {
        let net =
            LayeredNetwork::ecgal(2, 0.7, vec![0.5, 0.9], 0.3, 0.25, 2, 10.0, 4.0, 0.7).unwrap();
        let beta = ScalingVector::build(&net, |_, bounds| {
            bounds
                .iter()
                .enumerate()
                .map(|(i, b)| b * (0.4 + 0.3 * i as f64))
                .collect()
        })
        .unwrap();
        let snoop = SnoopSet::from_indices(&[1], 2).unwrap();
        let direct = rates(&net, &beta, &snoop).unwrap();
        let paths = modified_gains(&net, &beta, &snoop).unwrap().rates(&net);
        assert_relative_eq!(direct.snr_t, paths.snr_t, max_relative = 1e-12);
        assert_relative_eq!(direct.snr_e, paths.snr_e, max_relative = 1e-12);
    }
}
