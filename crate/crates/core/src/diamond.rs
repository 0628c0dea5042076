//! Single relay layer between source and destination.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::LayeredNetwork;
use crate::oracle::{maximize_secrecy, SearchConfig};
use crate::propagation::{rates, RateReport, SnoopSet};
use crate::scaling::{beta_max_vector, ScalingVector};

/// Relative tolerance when comparing `β_glb²` against `β_max²`.
pub const CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiamondSolution {
    /// Common factor of all relays.
    pub beta_opt: f64,
    /// Unclipped interior stationary point; `None` without an eavesdropper.
    pub beta_glb: Option<f64>,
    pub beta_max: f64,
    pub clipped: bool,
    /// `h_e = 0`: the rate only grows with `β`, so every relay runs at max.
    pub no_eavesdropper: bool,
    pub beta: ScalingVector,
    pub rate: RateReport,
}

/// `β_glb² = 1 / (N·|h_t·h_e|·sqrt(1 + N·P_s·h_s²/σ²))`.
pub fn diamond_beta_glb_sq(n: usize, h_s: f64, h_t: f64, h_e: f64, source_snr: f64) -> f64 {
    let n = n as f64;
    1.0 / (n * (h_t * h_e).abs() * (1.0 + n * source_snr * h_s * h_s).sqrt())
}

/// Globally optimal common scaling of a symmetric diamond.
pub fn diamond_opt(net: &LayeredNetwork) -> Result<DiamondSolution> {
    let (n, _, h_e) = net.ecgal_params("diamond closed form")?;
    if net.layers() != 1 {
        return Err(AncError::NotEcgal {
            what: "diamond closed form",
            reason: format!("{} relay layers, expected 1", net.layers()),
        });
    }
    let beta_max = beta_max_vector(net)?.get(0, 0);
    let snoop = SnoopSet::all(n);

    let (beta_opt, beta_glb, clipped, no_eavesdropper) = if h_e == 0.0 {
        (beta_max, None, true, true)
    } else {
        let glb_sq = diamond_beta_glb_sq(n, net.h_s, net.h_t, h_e, net.source_snr());
        let glb = glb_sq.sqrt();
        if net.h_t.abs() > h_e.abs() {
            let max_sq = beta_max * beta_max;
            if glb_sq >= max_sq * (1.0 - CLIP_TOL) {
                (beta_max, Some(glb), true, false)
            } else {
                (glb, Some(glb), false, false)
            }
        } else {
            (0.0, Some(glb), false, false)
        }
    };
    let beta = ScalingVector::new(net, vec![vec![beta_opt; n]])?;
    let rate = rates(net, &beta, &snoop)?;
    Ok(DiamondSolution {
        beta_opt,
        beta_glb,
        beta_max,
        clipped,
        no_eavesdropper,
        beta,
        rate,
    })
}

/// Eavesdropper SNR when it overhears `k` relays of a symmetric diamond that
/// all use `beta` (default: `β_max`).
pub fn snr_e_by_k(net: &LayeredNetwork, k: usize, beta: Option<f64>) -> Result<f64> {
    let (n, _, h_e) = net.ecgal_params("snr_e_by_k")?;
    if net.layers() != 1 {
        return Err(AncError::NotEcgal {
            what: "snr_e_by_k",
            reason: format!("{} relay layers, expected 1", net.layers()),
        });
    }
    if k > n {
        return Err(AncError::InvalidSnoop(format!(
            "cannot snoop {} of {} relays",
            k, n
        )));
    }
    let b = match beta {
        Some(b) => b,
        None => beta_max_vector(net)?.get(0, 0),
    };
    let k = k as f64;
    let x = b * b * h_e * h_e;
    Ok(net.source_snr() * net.h_s * net.h_s * k * k * x / (1.0 + k * x))
}

/// How the eavesdropper and the relays interact when the eavesdropper picks a
/// subset of the snooped layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnoopPolicy {
    /// For each subset the relays play their secrecy-optimal scaling, then
    /// the eavesdropper keeps the subset that leaves it the highest rate.
    SecrecyMax,
}

pub const MAX_SUBSET_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetOutcome {
    pub snoop: SnoopSet,
    pub beta: Vec<Vec<f64>>,
    pub rate: RateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetAnalysis {
    pub outcomes: Vec<SubsetOutcome>,
    /// Index into `outcomes` of the eavesdropper's choice.
    pub best: usize,
    /// Symmetric layers: one representative subset per size.
    pub by_size: bool,
}

impl SubsetAnalysis {
    pub fn best(&self) -> &SubsetOutcome {
        &self.outcomes[self.best]
    }

    pub fn find(&self, snoop: &SnoopSet) -> Option<&SubsetOutcome> {
        self.outcomes.iter().find(|o| &o.snoop == snoop)
    }
}

/// Enumerates the eavesdropper's nonempty subsets of the snooped layer,
/// solving the relays' problem for each with the oracle. Symmetric layers
/// only need one subset per size.
pub fn best_snoop_subset(
    net: &LayeredNetwork,
    policy: SnoopPolicy,
    cfg: &SearchConfig,
) -> Result<SubsetAnalysis> {
    let SnoopPolicy::SecrecyMax = policy;
    net.validate()?;
    let n = net.nodes(net.snooped_index());
    let by_size = net.ecgal_params("subset analysis").is_ok();
    if !by_size && n > MAX_SUBSET_NODES {
        return Err(AncError::TooManyNodes {
            nodes: n,
            max: MAX_SUBSET_NODES,
        });
    }
    let masks: Vec<u64> = if by_size {
        (1..=n)
            .map(|k| if k == 64 { u64::MAX } else { (1u64 << k) - 1 })
            .collect()
    } else {
        (1..1u64 << n).collect()
    };
    let outcomes = masks
        .into_par_iter()
        .map(|mask| {
            let snoop = SnoopSet::from_mask(mask, n);
            let r = maximize_secrecy(net, &snoop, cfg)?;
            Ok(SubsetOutcome {
                snoop,
                beta: r.beta,
                rate: r.rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.rate.r_e > outcomes[best].rate.r_e {
            best = i;
        }
    }
    Ok(SubsetAnalysis {
        outcomes,
        best,
        by_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weaker_destination_shuts_relays_off() {
        let net = LayeredNetwork::diamond(3, 0.5, 0.2, 0.3, 10.0, 10.0, 1.0).unwrap();
        let sol = diamond_opt(&net).unwrap();
        assert_eq!(sol.beta_opt, 0.0);
        assert_eq!(sol.rate.r_s, 0.0);
    }

    #[test]
    fn tie_resolves_to_zero() {
        let net = LayeredNetwork::diamond(2, 0.5, 0.3, 0.3, 10.0, 10.0, 1.0).unwrap();
        let sol = diamond_opt(&net).unwrap();
        assert_eq!(sol.beta_opt, 0.0);
        assert_eq!(sol.rate.r_s, 0.0);
    }

    #[test]
    fn glb_collapses_without_source() {
        let g = diamond_beta_glb_sq(1, 0.7, 0.5, 0.2, 0.0);
        assert_relative_eq!(g, 1.0 / (0.5 * 0.2), max_relative = 1e-15);
    }

    #[test]
    fn no_eavesdropper_runs_at_max() {
        let net = LayeredNetwork::diamond(3, 0.5, 0.4, 0.0, 10.0, 10.0, 1.0).unwrap();
        let sol = diamond_opt(&net).unwrap();
        assert!(sol.no_eavesdropper);
        assert_eq!(sol.beta_glb, None);
        assert_eq!(sol.beta_opt, sol.beta_max);
        assert_eq!(sol.rate.r_s, sol.rate.r_t);
    }

    #[test]
    fn fig4_closed_form_against_fine_grid() {
        // Common-β oracle: 1e-4 grid over [0, β_max], golden refinement.
        let net = LayeredNetwork::diamond(3, 0.278, 0.379, 0.073, 10.0, 10.0, 1.0).unwrap();
        let sol = diamond_opt(&net).unwrap();
        let rs = |b: f64| {
            let v = ScalingVector::new(&net, vec![vec![b; 3]]).unwrap();
            rates(&net, &v, &SnoopSet::all(3)).unwrap().r_s
        };
        let bmax = sol.beta_max;
        let steps = (bmax / 1e-4).floor() as usize;
        let (mut best_b, mut best_v) = (0.0, f64::NEG_INFINITY);
        for i in 0..=steps {
            let b = (i as f64 * 1e-4).min(bmax);
            let v = rs(b);
            if v > best_v {
                best_b = b;
                best_v = v;
            }
        }
        let (mut lo, mut hi) = ((best_b - 1e-4).max(0.0), (best_b + 1e-4).min(bmax));
        while hi - lo > 1e-12 {
            let m1 = lo + (hi - lo) * 0.381966;
            let m2 = hi - (hi - lo) * 0.381966;
            if rs(m1) < rs(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let grid_b = 0.5 * (lo + hi);
        assert!(
            (sol.beta_opt - grid_b).abs() < 1e-4,
            "{} vs {}",
            sol.beta_opt,
            grid_b
        );
        assert!(sol.rate.r_s >= best_v - 1e-12);
    }

    #[test]
    fn snr_e_k_zero_and_monotone() {
        let net = LayeredNetwork::diamond(5, 0.278, 0.379, 0.073, 10.0, 10.0, 1.0).unwrap();
        assert_eq!(snr_e_by_k(&net, 0, None).unwrap(), 0.0);
        let v: Vec<f64> = (0..=5)
            .map(|k| snr_e_by_k(&net, k, None).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert!(snr_e_by_k(&net, 6, None).is_err());
    }

    #[test]
    fn snr_e_k_matches_rate_evaluation() {
        let net = LayeredNetwork::diamond(4, 0.4, 0.5, 0.3, 8.0, 6.0, 1.0).unwrap();
        let beta = beta_max_vector(&net).unwrap();
        for k in 1..=4usize {
            let snoop = SnoopSet::from_mask((1 << k) - 1, 4);
            let r = rates(&net, &beta, &snoop).unwrap();
            assert_relative_eq!(
                r.snr_e,
                snr_e_by_k(&net, k, None).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn multi_layer_rejected() {
        let net = LayeredNetwork::ecgal(2, 0.5, vec![0.5], 0.4, 0.1, 1, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(diamond_opt(&net), Err(AncError::NotEcgal { .. })));
        assert!(snr_e_by_k(&net, 1, None).is_err());
    }
}
