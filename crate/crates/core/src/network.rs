//! Layered relay network description.
//!
//! The source feeds layer 1 through `h_s`, layer `l` feeds layer `l + 1`
//! through `hops[l - 1]`, and the last layer feeds the destination through
//! `h_t`. One gain per hop: every node of a layer sees the same channel to
//! every node of the next layer. The eavesdropper overhears the snooped layer
//! `M` (1-based) through `h_e`, either a single gain or one gain per node.
//!
//! Layer indices in vectors are 0-based; `snooped_layer` is the 1-based `M`.

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};

/// Eavesdropper channel from the snooped layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EveGains {
    Uniform(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredNetwork {
    pub nodes_per_layer: Vec<usize>,
    pub h_s: f64,
    /// `hops[i]` is the gain from layer `i + 1` to layer `i + 2`.
    pub hops: Vec<f64>,
    pub h_t: f64,
    pub h_e: EveGains,
    pub snooped_layer: usize,
    pub p_s: f64,
    pub power: f64,
    /// Optional per-node power caps, overriding `power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_power: Option<Vec<Vec<f64>>>,
    pub sigma2: f64,
}

impl LayeredNetwork {
    /// ECGAL network with `n` relays in each of `hops.len() + 1` layers.
    #[allow(clippy::too_many_arguments)]
    pub fn ecgal(
        n: usize,
        h_s: f64,
        hops: Vec<f64>,
        h_t: f64,
        h_e: f64,
        snooped_layer: usize,
        p_s: f64,
        power: f64,
        sigma2: f64,
    ) -> Result<Self> {
        let net = LayeredNetwork {
            nodes_per_layer: vec![n; hops.len() + 1],
            h_s,
            hops,
            h_t,
            h_e: EveGains::Uniform(h_e),
            snooped_layer,
            p_s,
            power,
            node_power: None,
            sigma2,
        };
        net.validate()?;
        Ok(net)
    }

    /// Single-layer (diamond) network with a common eavesdropper gain.
    pub fn diamond(
        n: usize,
        h_s: f64,
        h_t: f64,
        h_e: f64,
        p_s: f64,
        power: f64,
        sigma2: f64,
    ) -> Result<Self> {
        Self::ecgal(n, h_s, Vec::new(), h_t, h_e, 1, p_s, power, sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(AncError::InvalidNetwork(msg));
        let layers = self.nodes_per_layer.len();
        if layers == 0 {
            return invalid("at least one relay layer is required".into());
        }
        if let Some(l) = self.nodes_per_layer.iter().position(|&n| n == 0) {
            return invalid(format!("layer {} has no relays", l + 1));
        }
        if self.hops.len() + 1 != layers {
            return invalid(format!(
                "{} layers need {} inter-layer gains, got {}",
                layers,
                layers - 1,
                self.hops.len()
            ));
        }
        if self.snooped_layer == 0 || self.snooped_layer > layers {
            return invalid(format!(
                "snooped layer {} outside 1..={}",
                self.snooped_layer, layers
            ));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return invalid(format!(
                "noise variance must be positive, got {}",
                self.sigma2
            ));
        }
        if !(self.p_s >= 0.0) || !self.p_s.is_finite() {
            return invalid(format!(
                "source power must be nonnegative, got {}",
                self.p_s
            ));
        }
        if !(self.power >= 0.0) || !self.power.is_finite() {
            return invalid(format!(
                "relay power must be nonnegative, got {}",
                self.power
            ));
        }
        let gains = std::iter::once(self.h_s)
            .chain(self.hops.iter().copied())
            .chain(std::iter::once(self.h_t));
        for g in gains {
            if !g.is_finite() {
                return invalid(format!("channel gain {} is not finite", g));
            }
        }
        let n_m = self.nodes_per_layer[self.snooped_layer - 1];
        match &self.h_e {
            EveGains::Uniform(g) if !g.is_finite() => {
                return invalid("eavesdropper gain is not finite".into())
            }
            EveGains::PerNode(gs) => {
                if gs.len() != n_m {
                    return invalid(format!(
                        "snooped layer has {} relays but {} eavesdropper gains were given",
                        n_m,
                        gs.len()
                    ));
                }
                if gs.iter().any(|g| !g.is_finite()) {
                    return invalid("eavesdropper gain is not finite".into());
                }
            }
            _ => {}
        }
        if let Some(rows) = &self.node_power {
            if rows.len() != layers {
                return invalid(format!(
                    "node_power has {} rows, expected {}",
                    rows.len(),
                    layers
                ));
            }
            for (l, (row, &n)) in rows.iter().zip(&self.nodes_per_layer).enumerate() {
                if row.len() != n {
                    return invalid(format!(
                        "node_power row {} has {} entries, expected {}",
                        l + 1,
                        row.len(),
                        n
                    ));
                }
                if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return invalid(format!(
                        "node_power row {} has a negative or non-finite entry",
                        l + 1
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.nodes_per_layer.len()
    }

    pub fn nodes(&self, layer: usize) -> usize {
        self.nodes_per_layer[layer]
    }

    /// 0-based index of the snooped layer.
    pub fn snooped_index(&self) -> usize {
        self.snooped_layer - 1
    }

    /// Gain leaving `layer` towards the next layer or the destination.
    pub fn out_gain(&self, layer: usize) -> f64 {
        if layer + 1 < self.layers() {
            self.hops[layer]
        } else {
            self.h_t
        }
    }

    /// Gain arriving at `layer` from the source or the previous layer.
    pub fn in_gain(&self, layer: usize) -> f64 {
        if layer == 0 {
            self.h_s
        } else {
            self.hops[layer - 1]
        }
    }

    pub fn eve_gain(&self, node: usize) -> f64 {
        match &self.h_e {
            EveGains::Uniform(g) => *g,
            EveGains::PerNode(gs) => gs[node],
        }
    }

    pub fn node_power(&self, layer: usize, node: usize) -> f64 {
        match &self.node_power {
            Some(rows) => rows[layer][node],
            None => self.power,
        }
    }

    pub fn source_snr(&self) -> f64 {
        self.p_s / self.sigma2
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes_per_layer.iter().sum()
    }

    pub fn with_source_power(&self, p_s: f64) -> Self {
        LayeredNetwork {
            p_s,
            ..self.clone()
        }
    }

    pub fn uniform_nodes(&self) -> Option<usize> {
        let n = self.nodes_per_layer[0];
        self.nodes_per_layer.iter().all(|&m| m == n).then_some(n)
    }

    pub fn uniform_power(&self) -> Option<f64> {
        match &self.node_power {
            None => Some(self.power),
            Some(rows) => {
                let p = rows[0][0];
                rows.iter().flatten().all(|&q| q == p).then_some(p)
            }
        }
    }

    pub fn scalar_eve_gain(&self) -> Option<f64> {
        match &self.h_e {
            EveGains::Uniform(g) => Some(*g),
            EveGains::PerNode(gs) => {
                let g = gs[0];
                gs.iter().all(|&x| x == g).then_some(g)
            }
        }
    }

    /// Common node count, power and eavesdropper gain, or why the network is
    /// outside the symmetric class the closed forms cover.
    pub fn ecgal_params(&self, what: &'static str) -> Result<(usize, f64, f64)> {
        self.validate()?;
        let not = |reason: &str| AncError::NotEcgal {
            what,
            reason: reason.to_string(),
        };
        let n = self
            .uniform_nodes()
            .ok_or_else(|| not("node counts differ between layers"))?;
        let p = self
            .uniform_power()
            .ok_or_else(|| not("relay power caps differ"))?;
        let h_e = self
            .scalar_eve_gain()
            .ok_or_else(|| not("eavesdropper gains differ between snooped relays"))?;
        Ok((n, p, h_e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5a() -> LayeredNetwork {
        LayeredNetwork::ecgal(2, 0.689, vec![0.603], 0.203, 0.031, 2, 500.0, 500.0, 1.0).unwrap()
    }

    #[test]
    fn gains_by_layer() {
        let net = fig5a();
        assert_eq!(net.layers(), 2);
        assert_eq!(net.in_gain(0), 0.689);
        assert_eq!(net.out_gain(0), 0.603);
        assert_eq!(net.in_gain(1), 0.603);
        assert_eq!(net.out_gain(1), 0.203);
        assert_eq!(net.snooped_index(), 1);
    }

    #[test]
    fn rejects_bad_noise() {
        let err = LayeredNetwork::diamond(2, 0.5, 0.5, 0.1, 1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, AncError::InvalidNetwork(_)));
        assert!(LayeredNetwork::diamond(2, 0.5, 0.5, 0.1, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn rejects_snooped_layer_out_of_range() {
        assert!(LayeredNetwork::ecgal(2, 0.5, vec![0.4], 0.3, 0.1, 3, 1.0, 1.0, 1.0).is_err());
        assert!(LayeredNetwork::ecgal(2, 0.5, vec![0.4], 0.3, 0.1, 0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_negative_powers() {
        assert!(LayeredNetwork::diamond(2, 0.5, 0.5, 0.1, -1.0, 1.0, 1.0).is_err());
        let mut net = fig5a();
        net.node_power = Some(vec![vec![1.0, 1.0], vec![1.0, -2.0]]);
        assert!(net.validate().is_err());
    }

    #[test]
    fn per_node_eve_gains_must_match_layer() {
        let mut net = LayeredNetwork::diamond(3, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        net.h_e = EveGains::PerNode(vec![0.2, 0.6]);
        assert!(net.validate().is_err());
        net.h_e = EveGains::PerNode(vec![0.2, 0.6, 0.4]);
        net.validate().unwrap();
        assert_eq!(net.eve_gain(1), 0.6);
        assert!(net.scalar_eve_gain().is_none());
        assert!(matches!(
            net.ecgal_params("test"),
            Err(AncError::NotEcgal { .. })
        ));
    }

    #[test]
    fn heterogeneous_layers_are_valid_but_not_ecgal() {
        let mut net = fig5a();
        net.nodes_per_layer = vec![2, 3];
        net.validate().unwrap();
        assert!(net.uniform_nodes().is_none());
        assert!(net.ecgal_params("test").is_err());
    }
}
