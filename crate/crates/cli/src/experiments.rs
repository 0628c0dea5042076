//! One function per CLI mode, each producing a CSV table and a short
//! console summary.

use anc_core::diamond::{best_snoop_subset, SnoopPolicy};
use anc_core::highsnr::{achievable_highsnr, cutset_bound, high_snr_report};
use anc_core::strategy::{AllMax, ScalingStrategy, StrategyRegistry};
use anc_core::{AncError, LayeredNetwork, SnoopSet};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;
use crate::format::{beta_cells, beta_headers, sig9, Table};

/// Relative step change below which a sweep curve counts as flat.
pub const PLATEAU_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
}

fn registry(cfg: &ExperimentConfig) -> StrategyRegistry {
    let delta = cfg.delta.as_ref().map(|d| d.values()[0]).unwrap_or(0.0);
    StrategyRegistry::with_defaults(cfg.search_config(), delta)
}

fn strategy_name(cfg: &ExperimentConfig) -> &str {
    cfg.strategy.as_deref().unwrap_or("auto")
}

fn snoop_set(cfg: &ExperimentConfig) -> Result<SnoopSet, CliError> {
    let n = cfg.network.nodes(cfg.network.snooped_index());
    match &cfg.snooped {
        None => Ok(SnoopSet::all(n)),
        Some(ix) => {
            SnoopSet::from_indices(ix, n).map_err(|e| CliError::Config(format!("`snooped`: {}", e)))
        }
    }
}

pub fn run(cfg: &ExperimentConfig, mode: Mode) -> Result<Outcome, CliError> {
    cfg.check(mode)?;
    cfg.network.validate()?;
    match mode {
        Mode::Solve => solve(cfg),
        Mode::Subset => subset(cfg),
        Mode::Sweep => sweep(cfg).map(|s| s.outcome),
        Mode::Highsnr => highsnr(cfg),
    }
}

pub fn solve(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let strategy = registry(cfg).get(strategy_name(cfg))?;
    let snoop = snoop_set(cfg)?;
    let out = strategy.solve(&cfg.network, &snoop)?;
    let mut header = beta_headers(&cfg.network.nodes_per_layer);
    header.extend(["snr_t", "snr_e", "r_t", "r_e", "r_s"].map(String::from));
    let mut table = Table::new(header);
    let r = out.rate;
    table.push(
        beta_cells(&out.beta)
            .chain([r.snr_t, r.snr_e, r.r_t, r.r_e, r.r_s].map(sig9))
            .collect(),
    );
    Ok(Outcome {
        table,
        summary: vec![format!(
            "strategy {}: snooped {} -> R_t = {}, R_e = {}, R_s = {}",
            out.strategy,
            snoop.mask_string(),
            sig9(r.r_t),
            sig9(r.r_e),
            sig9(r.r_s)
        )],
    })
}

pub fn subset(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let analysis = best_snoop_subset(&cfg.network, SnoopPolicy::SecrecyMax, &cfg.search_config())?;
    let mut header: Vec<String> = ["subset_bitmask", "r_e", "r_s"].map(String::from).to_vec();
    header.extend(beta_headers(&cfg.network.nodes_per_layer));
    let mut table = Table::new(header);
    for o in &analysis.outcomes {
        let mut row = vec![o.snoop.mask_string(), sig9(o.rate.r_e), sig9(o.rate.r_s)];
        row.extend(beta_cells(&o.beta));
        table.push(row);
    }
    let best = analysis.best();
    let mut summary = vec![format!(
        "eavesdropper's best subset {} -> R_e = {}, R_s = {}",
        best.snoop.mask_string(),
        sig9(best.rate.r_e),
        sig9(best.rate.r_s)
    )];
    if analysis.by_size {
        summary.push("symmetric layer: one subset per size".into());
    }
    Ok(Outcome { table, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub p_s: f64,
    pub r_s_opt: f64,
    pub r_s_allmax: f64,
    pub c_cut: f64,
    pub gap: f64,
    /// δ-scaled rate, `None` where the regime fails.
    pub r_s_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub index: usize,
    pub p_s: f64,
    pub rate: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub points: Vec<SweepPoint>,
    pub delta: Option<f64>,
    pub allmax_plateau: Option<Plateau>,
    pub delta_plateau: Option<Plateau>,
    pub opt_plateau: Option<Plateau>,
    pub outcome: Outcome,
}

/// Last index whose step change is within `PLATEAU_TOL` relative.
pub fn plateau_index(r: &[f64]) -> Option<usize> {
    (1..r.len())
        .rev()
        .find(|&i| (r[i] - r[i - 1]).abs() <= PLATEAU_TOL * r[i].abs())
}

fn plateau(p_s: &[f64], r: &[f64], c_cut: f64) -> Option<Plateau> {
    plateau_index(r).map(|i| Plateau {
        index: i,
        p_s: p_s[i],
        rate: r[i],
        gap: c_cut - r[i],
    })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepRun, CliError> {
    cfg.check(Mode::Sweep)?;
    let spec = cfg.sweep.as_ref().expect("checked");
    let strategy = registry(cfg).get(strategy_name(cfg))?;
    let delta = cfg.delta.as_ref().map(|d| d.values()[0]);
    let c_cut = cutset_bound(&cfg.network)?;
    let n = cfg.network.nodes(cfg.network.snooped_index());
    let eval = |p_s: f64| -> Result<SweepPoint, CliError> {
        let net: LayeredNetwork = cfg.network.with_source_power(p_s);
        let snoop = SnoopSet::all(n);
        let opt = strategy.solve(&net, &snoop)?.rate.r_s;
        let all = AllMax.solve(&net, &snoop)?.rate.r_s;
        let r_s_delta = match delta.map(|d| achievable_highsnr(&net, d)) {
            None | Some(Err(AncError::RegimeViolation { .. })) => None,
            Some(Ok(r)) => Some(r.r_s),
            Some(Err(e)) => return Err(e.into()),
        };
        Ok(SweepPoint {
            p_s,
            r_s_opt: opt,
            r_s_allmax: all,
            c_cut,
            gap: c_cut - all,
            r_s_delta,
        })
    };
    let points = spec
        .values()
        .into_par_iter()
        .map(eval)
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(["P_s", "r_s_opt", "r_s_allmax", "c_cut", "gap"]);
    for p in &points {
        table.push(
            [p.p_s, p.r_s_opt, p.r_s_allmax, p.c_cut, p.gap]
                .map(sig9)
                .to_vec(),
        );
    }
    let ps: Vec<f64> = points.iter().map(|p| p.p_s).collect();
    let all: Vec<f64> = points.iter().map(|p| p.r_s_allmax).collect();
    let opt: Vec<f64> = points.iter().map(|p| p.r_s_opt).collect();
    let (dps, dr): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.r_s_delta.map(|r| (p.p_s, r)))
        .unzip();
    let allmax_plateau = plateau(&ps, &all, c_cut);
    let opt_plateau = plateau(&ps, &opt, c_cut);
    let delta_plateau = plateau(&dps, &dr, c_cut);

    let describe = |label: &str, p: Option<Plateau>| match p {
        Some(p) => format!(
            "{} curve: plateau at P_s = {}, R_s = {}, gap to cutset = {}",
            label,
            sig9(p.p_s),
            sig9(p.rate),
            sig9(p.gap)
        ),
        None => format!("{} curve: no plateau within the sweep", label),
    };
    let mut summary = vec![
        format!("cutset bound C_cut = {}", sig9(c_cut)),
        describe("all-max", allmax_plateau),
    ];
    if let Some(d) = delta {
        summary.push(describe(
            &format!("delta-scaled (delta = {})", d),
            delta_plateau,
        ));
        summary.push(format!(
            "delta-scaled curve in regime at {} of {} points",
            dr.len(),
            points.len()
        ));
    }
    summary.push(describe(
        &format!("optimal ({})", strategy.name()),
        opt_plateau,
    ));
    Ok(SweepRun {
        points,
        delta,
        allmax_plateau,
        delta_plateau,
        opt_plateau,
        outcome: Outcome { table, summary },
    })
}

pub fn highsnr(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.check(Mode::Highsnr)?;
    let deltas = cfg.delta.as_ref().expect("checked").values();
    let reports = deltas
        .iter()
        .map(|&d| high_snr_report(&cfg.network, d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(["delta", "c_cut", "r_s_delta", "actual_gap", "gap_bound"]);
    let mut summary = Vec::new();
    for r in &reports {
        table.push(
            [r.delta, r.c_cut, r.r_s_delta, r.actual_gap, r.gap_bound]
                .map(sig9)
                .to_vec(),
        );
        summary.push(format!(
            "delta = {}: gap {} <= bound {}; noise power {} <= {}",
            r.delta,
            sig9(r.actual_gap),
            sig9(r.gap_bound),
            sig9(r.noise_power),
            sig9(r.noise_bound)
        ));
    }
    Ok(Outcome { table, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_picks_last_flat_step() {
        assert_eq!(plateau_index(&[1.0, 2.0, 2.5, 2.5, 2.50001, 2.7]), Some(4));
        assert_eq!(plateau_index(&[1.0, 2.0, 3.0]), None);
        assert_eq!(plateau_index(&[]), None);
    }
}
