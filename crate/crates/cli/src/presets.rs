//! Bundled experiment configurations.

use anc_core::{EveGains, LayeredNetwork};

use crate::config::{DeltaSpec, ExperimentConfig, Mode, Scale, SweepSpec};

pub const PRESETS: [&str; 4] = ["example1", "fig4", "fig5a", "fig5b"];

fn base(mode: Mode, network: LayeredNetwork) -> ExperimentConfig {
    ExperimentConfig {
        mode: Some(mode),
        network,
        strategy: None,
        snooped: None,
        sweep: None,
        delta: None,
        output: None,
        seed: None,
        oracle: None,
    }
}

fn fig5(h_s: f64, h_1: f64, h_t: f64, h_e: f64) -> ExperimentConfig {
    let net = LayeredNetwork::ecgal(2, h_s, vec![h_1], h_t, h_e, 2, 1e6, 500.0, 1.0)
        .expect("preset network");
    let mut cfg = base(Mode::Sweep, net);
    cfg.sweep = Some(SweepSpec {
        variable: "P_s".into(),
        from: 1.0,
        to: 1e6,
        points: 61,
        scale: Scale::Log,
    });
    cfg.delta = Some(DeltaSpec::One(0.005));
    cfg
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    match name {
        "example1" => {
            let mut net =
                LayeredNetwork::diamond(3, 0.6, 0.3, 0.0, 5.0, 5.0, 1.0).expect("preset network");
            net.h_e = EveGains::PerNode(vec![0.2, 0.6, 0.4]);
            Some(base(Mode::Subset, net))
        }
        "fig4" => {
            let net = LayeredNetwork::diamond(3, 0.278, 0.379, 0.073, 10.0, 10.0, 1.0)
                .expect("preset network");
            Some(base(Mode::Solve, net))
        }
        "fig5a" => Some(fig5(0.689, 0.603, 0.203, 0.031)),
        "fig5b" => Some(fig5(0.260, 0.925, 0.113, 0.012)),
        _ => None,
    }
}
