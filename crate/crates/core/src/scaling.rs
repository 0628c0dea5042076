//! Per-relay amplification factors and their power-constraint bounds.
//!
//! A relay may scale its input by at most `β_max = sqrt(P / P_rx)`, where
//! `P_rx` is its total received power. That power depends on how the layers
//! in front of it amplify, so bounds are always built front to back from the
//! factors actually chosen upstream.

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::LayeredNetwork;
use crate::propagation::Front;

/// Relative slack on `β ≤ β_max`, absorbing rounding in `sqrt(P / P_rx)`.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingVector {
    beta: Vec<Vec<f64>>,
    beta_max: Vec<Vec<f64>>,
}

impl ScalingVector {
    /// Validates `beta` against the bounds it induces.
    pub fn new(net: &LayeredNetwork, beta: Vec<Vec<f64>>) -> Result<Self> {
        net.validate()?;
        if beta.len() != net.layers() {
            return Err(AncError::InvalidNetwork(format!(
                "scaling vector has {} layers, network has {}",
                beta.len(),
                net.layers()
            )));
        }
        let mut front = Front::source(net);
        let mut beta_max = Vec::with_capacity(beta.len());
        for (l, row) in beta.iter().enumerate() {
            if row.len() != net.nodes(l) {
                return Err(AncError::InvalidNetwork(format!(
                    "scaling row {} has {} entries, layer has {} relays",
                    l + 1,
                    row.len(),
                    net.nodes(l)
                )));
            }
            let bounds = layer_bounds(net, l, &front);
            for (n, (&b, &bm)) in row.iter().zip(&bounds).enumerate() {
                if !(b >= 0.0) || b > bm * (1.0 + BOUND_SLACK) {
                    return Err(AncError::BetaOutOfBounds {
                        layer: l + 1,
                        node: n + 1,
                        beta: b,
                        beta_max: bm,
                    });
                }
            }
            front = front.advance(net.out_gain(l), row, net.sigma2);
            beta_max.push(bounds);
        }
        Ok(ScalingVector { beta, beta_max })
    }

    /// Builds the vector layer by layer: `choose(layer, bounds)` returns the
    /// row for `layer` given the bounds induced by the rows already chosen.
    /// Entries are clamped into `[0, bound]`.
    pub fn build<F>(net: &LayeredNetwork, mut choose: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        net.validate()?;
        let mut front = Front::source(net);
        let mut beta = Vec::with_capacity(net.layers());
        let mut beta_max = Vec::with_capacity(net.layers());
        for l in 0..net.layers() {
            let bounds = layer_bounds(net, l, &front);
            let row = choose(l, &bounds);
            if row.len() != bounds.len() {
                return Err(AncError::InvalidNetwork(format!(
                    "scaling row {} has {} entries, layer has {} relays",
                    l + 1,
                    row.len(),
                    bounds.len()
                )));
            }
            let row: Vec<f64> = row
                .iter()
                .zip(&bounds)
                .map(|(b, bm)| b.clamp(0.0, *bm))
                .collect();
            front = front.advance(net.out_gain(l), &row, net.sigma2);
            beta.push(row);
            beta_max.push(bounds);
        }
        Ok(ScalingVector { beta, beta_max })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn bounds(&self) -> &[Vec<f64>] {
        &self.beta_max
    }

    pub fn get(&self, layer: usize, node: usize) -> f64 {
        self.beta[layer][node]
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.beta.iter().flatten().copied().collect()
    }

    pub(crate) fn check_shape(&self, net: &LayeredNetwork) -> Result<()> {
        let ok = self.beta.len() == net.layers()
            && self
                .beta
                .iter()
                .enumerate()
                .all(|(l, r)| r.len() == net.nodes(l));
        if ok {
            Ok(())
        } else {
            Err(AncError::InvalidNetwork(
                "scaling vector shape does not match the network".into(),
            ))
        }
    }

    /// Transmit power `β²·P_rx` of every relay.
    pub fn transmit_powers(&self, net: &LayeredNetwork) -> Vec<Vec<f64>> {
        let mut front = Front::source(net);
        self.beta
            .iter()
            .enumerate()
            .map(|(l, row)| {
                let rx = front.rx(net);
                front = front.advance(net.out_gain(l), row, net.sigma2);
                row.iter().map(|b| b * b * rx).collect()
            })
            .collect()
    }
}

pub(crate) fn layer_bounds(net: &LayeredNetwork, layer: usize, front: &Front) -> Vec<f64> {
    let rx = front.rx(net);
    (0..net.nodes(layer))
        .map(|n| (net.node_power(layer, n) / rx).sqrt())
        .collect()
}

/// Every relay at its largest feasible factor, bounds computed front to back.
pub fn beta_max_vector(net: &LayeredNetwork) -> Result<ScalingVector> {
    ScalingVector::build(net, |_, bounds| bounds.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diamond_bound_matches_example1() {
        let net = LayeredNetwork::diamond(3, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        let b = beta_max_vector(&net).unwrap();
        for &x in &b.rows()[0] {
            assert!((x - 1.3363).abs() < 1e-4);
            assert_relative_eq!(x, (5.0f64 / 2.8).sqrt(), max_relative = 1e-15);
        }
    }

    #[test]
    fn silent_source_leaves_noise_only() {
        let net = LayeredNetwork::diamond(2, 0.9, 0.3, 0.2, 0.0, 5.0, 1.0).unwrap();
        let b = beta_max_vector(&net).unwrap();
        assert_relative_eq!(b.get(0, 0).powi(2), 5.0, max_relative = 1e-15);
    }

    #[test]
    fn fig5a_bounds_by_hand() {
        // Layer 1: P_rx = P_s h_s² + σ².
        // Layer 2: P_rx = P_s h_s² (2β₁ h₁)² + σ² 2β₁² h₁² + σ².
        let net = LayeredNetwork::ecgal(2, 0.689, vec![0.603], 0.203, 0.031, 2, 500.0, 500.0, 1.0)
            .unwrap();
        let b = beta_max_vector(&net).unwrap();
        let rx1 = 500.0 * 0.689f64.powi(2) + 1.0;
        let b1 = (500.0 / rx1).sqrt();
        let rx2 = 500.0 * 0.689f64.powi(2) * (2.0 * b1 * 0.603).powi(2)
            + 2.0 * b1 * b1 * 0.603f64.powi(2)
            + 1.0;
        let b2 = (500.0 / rx2).sqrt();
        assert_relative_eq!(b.get(0, 1), b1, max_relative = 1e-14);
        assert_relative_eq!(b.get(1, 0), b2, max_relative = 1e-14);
        assert_relative_eq!(b.get(0, 0), 1.4483311063630322, max_relative = 1e-14);
        assert_relative_eq!(b.get(1, 1), 0.8294871274138639, max_relative = 1e-14);
    }

    #[test]
    fn all_max_transmits_exactly_at_cap() {
        let net =
            LayeredNetwork::ecgal(3, 0.4, vec![0.8, 0.2], 0.6, 0.3, 1, 20.0, 7.0, 0.5).unwrap();
        let b = beta_max_vector(&net).unwrap();
        for row in b.transmit_powers(&net) {
            for p in row {
                assert_relative_eq!(p, 7.0, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn out_of_bound_factor_rejected() {
        let net = LayeredNetwork::diamond(2, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        let err = ScalingVector::new(&net, vec![vec![1.0, 1.4]]).unwrap_err();
        assert!(matches!(
            err,
            AncError::BetaOutOfBounds {
                layer: 1,
                node: 2,
                ..
            }
        ));
        assert!(ScalingVector::new(&net, vec![vec![-0.1, 0.0]]).is_err());
        assert!(ScalingVector::new(&net, vec![vec![0.1]]).is_err());
    }

    #[test]
    fn build_clamps_into_box() {
        let net = LayeredNetwork::diamond(2, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        let b = ScalingVector::build(&net, |_, _| vec![10.0, -1.0]).unwrap();
        assert_eq!(b.get(0, 0), b.bounds()[0][0]);
        assert_eq!(b.get(0, 1), 0.0);
    }
}
