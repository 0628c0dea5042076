//! Interchangeable ways of choosing the relay scaling vector, looked up by
//! name.

use std::sync::Arc;

use crate::diamond::diamond_opt;
use crate::error::{AncError, Result};
use crate::highsnr::high_snr_scaling;
use crate::layered::optimal_scaling;
use crate::network::LayeredNetwork;
use crate::oracle::{maximize_secrecy, SearchConfig};
use crate::propagation::{rates, RateReport, SnoopSet};
use crate::scaling::{beta_max_vector, ScalingVector};

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    /// Name of the strategy that produced the vector (for `auto`, the one it
    /// delegated to).
    pub strategy: &'static str,
    pub beta: Vec<Vec<f64>>,
    pub rate: RateReport,
}

impl StrategyOutcome {
    fn from_vector(
        strategy: &'static str,
        net: &LayeredNetwork,
        beta: ScalingVector,
        snoop: &SnoopSet,
    ) -> Result<Self> {
        let rate = rates(net, &beta, snoop)?;
        Ok(StrategyOutcome {
            strategy,
            beta: beta.rows().to_vec(),
            rate,
        })
    }
}

pub trait ScalingStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome>;
}

fn whole_layer(net: &LayeredNetwork, snoop: &SnoopSet, what: &str) -> Result<()> {
    if snoop.len() == net.nodes(net.snooped_index()) && snoop.is_all() {
        Ok(())
    } else {
        Err(AncError::InvalidSnoop(format!(
            "{} assumes the whole snooped layer is overheard",
            what
        )))
    }
}

pub struct Diamond;

impl ScalingStrategy for Diamond {
    fn name(&self) -> &'static str {
        "diamond"
    }
    fn describe(&self) -> &'static str {
        "closed-form common factor for a symmetric single-layer network"
    }
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome> {
        whole_layer(net, snoop, self.name())?;
        let sol = diamond_opt(net)?;
        StrategyOutcome::from_vector(self.name(), net, sol.beta, snoop)
    }
}

pub struct Layered;

impl ScalingStrategy for Layered {
    fn name(&self) -> &'static str {
        "layered"
    }
    fn describe(&self) -> &'static str {
        "closed-form scaling for ECGAL layered networks"
    }
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome> {
        whole_layer(net, snoop, self.name())?;
        let sol = optimal_scaling(net)?;
        StrategyOutcome::from_vector(self.name(), net, sol.beta, snoop)
    }
}

pub struct AllMax;

impl ScalingStrategy for AllMax {
    fn name(&self) -> &'static str {
        "all-max"
    }
    fn describe(&self) -> &'static str {
        "every relay at full transmit power"
    }
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome> {
        StrategyOutcome::from_vector(self.name(), net, beta_max_vector(net)?, snoop)
    }
}

pub struct HighSnr {
    pub delta: f64,
}

impl ScalingStrategy for HighSnr {
    fn name(&self) -> &'static str {
        "high-snr"
    }
    fn describe(&self) -> &'static str {
        "delta-scaled factors for the high-SNR regime"
    }
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome> {
        StrategyOutcome::from_vector(self.name(), net, high_snr_scaling(net, self.delta)?, snoop)
    }
}

pub struct Oracle {
    pub config: SearchConfig,
}

impl ScalingStrategy for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn describe(&self) -> &'static str {
        "multi-start box-constrained search over all factors"
    }
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome> {
        let r = maximize_secrecy(net, snoop, &self.config)?;
        Ok(StrategyOutcome {
            strategy: self.name(),
            beta: r.beta,
            rate: r.rate,
        })
    }
}

/// Closed form when the network and snoop set allow one, oracle otherwise.
pub struct Auto {
    pub oracle: Oracle,
}

impl ScalingStrategy for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }
    fn describe(&self) -> &'static str {
        "diamond or layered closed form when applicable, else the oracle"
    }
    fn solve(&self, net: &LayeredNetwork, snoop: &SnoopSet) -> Result<StrategyOutcome> {
        let closed = net.ecgal_params("auto").is_ok() && whole_layer(net, snoop, "auto").is_ok();
        match (closed, net.layers()) {
            (true, 1) => Diamond.solve(net, snoop),
            (true, _) => Layered.solve(net, snoop),
            _ => self.oracle.solve(net, snoop),
        }
    }
}

#[derive(Clone, Default)]
pub struct StrategyRegistry {
    entries: Vec<Arc<dyn ScalingStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `auto`, `diamond`, `layered`, `all-max`, `high-snr` (at `delta`) and
    /// `oracle`.
    pub fn with_defaults(config: SearchConfig, delta: f64) -> Self {
        let mut r = Self::new();
        r.register(Arc::new(Auto {
            oracle: Oracle {
                config: config.clone(),
            },
        }));
        r.register(Arc::new(Diamond));
        r.register(Arc::new(Layered));
        r.register(Arc::new(AllMax));
        r.register(Arc::new(HighSnr { delta }));
        r.register(Arc::new(Oracle { config }));
        r
    }

    /// Adds a strategy, replacing any registered under the same name.
    pub fn register(&mut self, s: Arc<dyn ScalingStrategy>) {
        self.entries.retain(|e| e.name() != s.name());
        self.entries.push(s);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ScalingStrategy>> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .cloned()
            .ok_or_else(|| AncError::UnknownStrategy {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::EveGains;

    fn registry() -> StrategyRegistry {
        StrategyRegistry::with_defaults(SearchConfig::default(), 0.005)
    }

    #[test]
    fn default_names() {
        assert_eq!(
            registry().names(),
            ["auto", "diamond", "layered", "all-max", "high-snr", "oracle"]
        );
    }

    #[test]
    fn unknown_name_lists_available() {
        let err = registry().get("simplex").err().unwrap();
        assert!(err.to_string().contains("all-max"));
    }

    #[test]
    fn auto_delegates() {
        let r = registry();
        let auto = r.get("auto").unwrap();
        let d = LayeredNetwork::diamond(2, 0.5, 0.6, 0.2, 10.0, 10.0, 1.0).unwrap();
        assert_eq!(
            auto.solve(&d, &SnoopSet::all(2)).unwrap().strategy,
            "diamond"
        );
        let l = LayeredNetwork::ecgal(2, 0.5, vec![0.6], 0.6, 0.2, 1, 10.0, 10.0, 1.0).unwrap();
        assert_eq!(
            auto.solve(&l, &SnoopSet::all(2)).unwrap().strategy,
            "layered"
        );
        let mut e = LayeredNetwork::diamond(3, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        e.h_e = EveGains::PerNode(vec![0.2, 0.6, 0.4]);
        assert_eq!(
            auto.solve(&e, &SnoopSet::all(3)).unwrap().strategy,
            "oracle"
        );
    }

    #[test]
    fn closed_forms_reject_partial_snoop() {
        let d = LayeredNetwork::diamond(2, 0.5, 0.6, 0.2, 10.0, 10.0, 1.0).unwrap();
        let partial = SnoopSet::from_mask(1, 2);
        assert!(Diamond.solve(&d, &partial).is_err());
        assert!(AllMax.solve(&d, &partial).is_ok());
    }

    #[test]
    fn register_replaces_by_name() {
        let mut r = registry();
        r.register(Arc::new(HighSnr { delta: 0.0 }));
        assert_eq!(r.names().len(), 6);
        assert_eq!(r.names().last(), Some(&"high-snr"));
    }
}
