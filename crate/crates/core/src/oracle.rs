//! Brute-force secrecy-rate maximizer used as ground truth for the closed
//! forms.
//!
//! The search runs over fractions `t ∈ [0, 1]^{ΣN}` with `β = t · β_max`,
//! where each bound comes from the factors already chosen upstream. That box
//! is exactly the feasible set, so projection is a clamp. A coarse grid
//! (small problems only) and random points seed a multi-start projected
//! cyclic coordinate ascent with golden-section line searches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::LayeredNetwork;
use crate::propagation::{capacity, eve_snr, snr_pair, Front, RateReport, SnoopSet};
use crate::scaling::layer_bounds;

/// Largest dimension the exhaustive grid scan is attempted for.
pub const GRID_MAX_DIM: usize = 8;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Grid spacing as a fraction of each node's `β_max`.
    pub grid_step: f64,
    /// Cap on grid evaluations; the per-axis resolution is lowered to fit.
    pub grid_budget: usize,
    pub restarts: usize,
    /// Stop a start once a full cycle improves the objective by less.
    pub refine_tol: f64,
    /// Coordinate cycles per start.
    pub max_iters: usize,
    /// Starts whose optima differ by more than this are reported as
    /// disagreeing.
    pub agree_tol: f64,
    /// Search `[-β_max, β_max]` instead of `[0, β_max]`.
    pub signed: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_step: 1e-2,
            grid_budget: 200_000,
            restarts: 64,
            refine_tol: 1e-10,
            max_iters: 500,
            agree_tol: 1e-6,
            signed: false,
            seed: 0x5eed,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SearchConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AncError::InvalidNetwork(format!("search config: {}", m)));
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return bad("grid_step must be in (0, 1]");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.refine_tol >= 0.0) || !(self.agree_tol >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDiagnostics {
    pub dimension: usize,
    /// Grid points per axis, when the grid scan ran.
    pub grid_points_per_axis: Option<usize>,
    pub starts: usize,
    pub evaluations: u64,
    /// Starts that finished within `agree_tol` of the best objective.
    pub agreeing_starts: usize,
    /// Some converged start settled on a clearly worse stationary point.
    pub multimodal: bool,
    /// The winning start reached coordinate-wise stationarity within
    /// `max_iters` cycles.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Per-layer factors; negative only for signed searches.
    pub beta: Vec<Vec<f64>>,
    pub bounds: Vec<Vec<f64>>,
    pub rate: RateReport,
    /// `r_t - r_e` before clamping; the quantity actually maximized.
    pub objective: f64,
    pub diagnostics: OracleDiagnostics,
}

impl OracleResult {
    pub fn flatten(&self) -> Vec<f64> {
        self.beta.iter().flatten().copied().collect()
    }
}

/// Secrecy objective over box fractions, allocation free.
struct Problem<'a> {
    net: &'a LayeredNetwork,
    snoop: &'a SnoopSet,
    offsets: Vec<usize>,
    dim: usize,
    lo: f64,
}

impl<'a> Problem<'a> {
    fn new(net: &'a LayeredNetwork, snoop: &'a SnoopSet, signed: bool) -> Self {
        let mut offsets = Vec::with_capacity(net.layers() + 1);
        let mut acc = 0;
        for l in 0..net.layers() {
            offsets.push(acc);
            acc += net.nodes(l);
        }
        offsets.push(acc);
        Problem {
            net,
            snoop,
            offsets,
            dim: acc,
            lo: if signed { -1.0 } else { 0.0 },
        }
    }

    fn eval(&self, t: &[f64], row: &mut Vec<f64>) -> f64 {
        let net = self.net;
        let m = net.snooped_index();
        let mut front = Front::source(net);
        let mut snr_e = 0.0;
        for l in 0..net.layers() {
            let rx = front.rx(net);
            row.clear();
            for (n, &ti) in t[self.offsets[l]..self.offsets[l + 1]].iter().enumerate() {
                row.push(ti * (net.node_power(l, n) / rx).sqrt());
            }
            if l == m {
                snr_e = eve_snr(net, &front, row, self.snoop);
            }
            front = front.advance(net.out_gain(l), row, net.sigma2);
        }
        let snr_t = front.signal(net.p_s) / (front.c + net.sigma2);
        capacity(snr_t) - capacity(snr_e)
    }

    /// Factors and bounds for box fractions `t`.
    fn to_rows(&self, t: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut front = Front::source(self.net);
        let mut rows = Vec::with_capacity(self.net.layers());
        let mut bounds = Vec::with_capacity(self.net.layers());
        for l in 0..self.net.layers() {
            let bm = layer_bounds(self.net, l, &front);
            let row: Vec<f64> = t[self.offsets[l]..self.offsets[l + 1]]
                .iter()
                .zip(&bm)
                .map(|(ti, b)| ti * b)
                .collect();
            front = front.advance(self.net.out_gain(l), &row, self.net.sigma2);
            rows.push(row);
            bounds.push(bm);
        }
        (rows, bounds)
    }
}

struct Ascent {
    t: Vec<f64>,
    value: f64,
    evaluations: u64,
    converged: bool,
}

struct Evaluator<'p, 'a> {
    problem: &'p Problem<'a>,
    row: Vec<f64>,
    trial: Vec<f64>,
    count: u64,
}

impl<'p, 'a> Evaluator<'p, 'a> {
    fn new(problem: &'p Problem<'a>) -> Self {
        Evaluator {
            problem,
            row: Vec::new(),
            trial: Vec::new(),
            count: 0,
        }
    }

    fn at(&mut self, t: &[f64]) -> f64 {
        self.count += 1;
        self.problem.eval(t, &mut self.row)
    }

    /// Objective at `base + s·dir`, clamped into the box.
    fn along(&mut self, base: &[f64], dir: &[f64], s: f64) -> f64 {
        let lo = self.problem.lo;
        self.trial.clear();
        self.trial.extend(
            base.iter()
                .zip(dir)
                .map(|(b, d)| (b + s * d).clamp(lo, 1.0)),
        );
        self.count += 1;
        self.problem.eval(&self.trial, &mut self.row)
    }

    /// Maximizes `s ↦ f(base + s·dir)` on `[a, b]`: a uniform scan picks the
    /// best bracket, golden section refines it.
    fn line_max(&mut self, base: &[f64], dir: &[f64], a: f64, b: f64) -> (f64, f64) {
        const SCAN: usize = 8;
        let h = (b - a) / SCAN as f64;
        let (mut best_s, mut best_v) = (a, f64::NEG_INFINITY);
        for k in 0..=SCAN {
            let s = a + h * k as f64;
            let v = self.along(base, dir, s);
            if v > best_v {
                best_s = s;
                best_v = v;
            }
        }
        let (mut lo, mut hi) = ((best_s - h).max(a), (best_s + h).min(b));
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut f1 = self.along(base, dir, x1);
        let mut f2 = self.along(base, dir, x2);
        while hi - lo > 1e-10 * (1.0 + (b - a).abs()) {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + GOLDEN * (hi - lo);
                f2 = self.along(base, dir, x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - GOLDEN * (hi - lo);
                f1 = self.along(base, dir, x1);
            }
        }
        for (s, v) in [(x1, f1), (x2, f2)] {
            if v > best_v {
                best_s = s;
                best_v = v;
            }
        }
        (best_s, best_v)
    }
}

fn ascend(problem: &Problem, start: Vec<f64>, cfg: &SearchConfig) -> Ascent {
    let mut ev = Evaluator::new(problem);
    let lo = problem.lo;
    let mut t = start;
    let mut value = ev.at(&t);
    let mut converged = false;
    let mut unit = vec![0.0; problem.dim];
    for _ in 0..cfg.max_iters {
        let cycle_start = t.clone();
        let cycle_value = value;
        for i in 0..problem.dim {
            unit[i] = 1.0;
            let (s, v) = ev.line_max(&t, &unit, lo - t[i], 1.0 - t[i]);
            unit[i] = 0.0;
            if v > value {
                t[i] = (t[i] + s).clamp(lo, 1.0);
                value = v;
            }
        }
        // Pattern move along the cycle's net displacement.
        let dir: Vec<f64> = t.iter().zip(&cycle_start).map(|(a, b)| a - b).collect();
        let reach = dir
            .iter()
            .zip(&t)
            .filter(|(d, _)| d.abs() > 0.0)
            .map(|(d, x)| {
                if *d > 0.0 {
                    (1.0 - x) / d
                } else {
                    (lo - x) / d
                }
            })
            .fold(f64::INFINITY, f64::min);
        if reach.is_finite() && reach > 0.0 {
            let (s, v) = ev.line_max(&t, &dir, 0.0, reach);
            if v > value {
                for (x, d) in t.iter_mut().zip(&dir) {
                    *x = (*x + s * d).clamp(lo, 1.0);
                }
                value = v;
            }
        }
        if value - cycle_value <= cfg.refine_tol {
            converged = true;
            break;
        }
    }
    Ascent {
        t,
        value,
        evaluations: ev.count,
        converged,
    }
}

fn grid_axis_points(dim: usize, cfg: &SearchConfig) -> Option<usize> {
    if dim == 0 || dim > GRID_MAX_DIM {
        return None;
    }
    let by_step = (1.0 / cfg.grid_step).round() as usize + 1;
    let by_budget = (cfg.grid_budget as f64).powf(1.0 / dim as f64).floor() as usize;
    Some(by_step.min(by_budget).max(2))
}

/// Best `keep` grid points, best first.
fn grid_scan(problem: &Problem, k: usize, keep: usize) -> (Vec<(f64, Vec<f64>)>, u64) {
    let dim = problem.dim;
    let lo = problem.lo;
    let step = (1.0 - lo) / (k - 1) as f64;
    let total = k.pow(dim as u32);
    let mut ev = Evaluator::new(problem);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(keep + 1);
    let mut t = vec![lo; dim];
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let v = ev.at(&t);
        if best.len() < keep || v > best[best.len() - 1].0 {
            let pos = best.iter().position(|(b, _)| v > *b).unwrap_or(best.len());
            best.insert(pos, (v, t.clone()));
            best.truncate(keep);
        }
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < k {
                t[d] = lo + step * idx[d] as f64;
                break;
            }
            idx[d] = 0;
            t[d] = lo;
        }
    }
    (best, ev.count)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Maximizes the secrecy rate over the feasible box.
pub fn maximize_secrecy(
    net: &LayeredNetwork,
    snoop: &SnoopSet,
    cfg: &SearchConfig,
) -> Result<OracleResult> {
    net.validate()?;
    cfg.validate()?;
    if snoop.len() != net.nodes(net.snooped_index()) {
        return Err(AncError::InvalidSnoop(format!(
            "snoop set covers {} relays, snooped layer has {}",
            snoop.len(),
            net.nodes(net.snooped_index())
        )));
    }
    let problem = Problem::new(net, snoop, cfg.signed);
    let dim = problem.dim;

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.restarts + 2);
    let mut evaluations = 0;
    let grid_k = grid_axis_points(dim, cfg);
    if let Some(k) = grid_k {
        let (best, count) = grid_scan(&problem, k, 4.min(cfg.restarts));
        evaluations += count;
        starts.extend(best.into_iter().map(|(_, t)| t));
    }
    starts.push(vec![1.0; dim]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.restarts.max(2) {
        starts.push((0..dim).map(|_| rng.gen_range(problem.lo..=1.0)).collect());
    }

    let runs: Vec<Ascent> = starts
        .into_par_iter()
        .map(|s| ascend(&problem, s, cfg))
        .collect();
    evaluations += runs.iter().map(|r| r.evaluations).sum::<u64>();

    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        let b = &runs[best];
        if r.value > b.value || (r.value == b.value && lex_less(&r.t, &b.t)) {
            best = i;
        }
    }
    let winner = &runs[best];
    let agreeing_starts = runs
        .iter()
        .filter(|r| winner.value - r.value <= cfg.agree_tol)
        .count();
    let multimodal = runs
        .iter()
        .any(|r| r.converged && winner.value - r.value > cfg.agree_tol);

    let (beta, bounds) = problem.to_rows(&winner.t);
    let (snr_t, snr_e) = snr_pair(net, &beta, snoop);
    Ok(OracleResult {
        beta,
        bounds,
        rate: RateReport::from_snr(snr_t, snr_e),
        objective: winner.value,
        diagnostics: OracleDiagnostics {
            dimension: dim,
            grid_points_per_axis: grid_k,
            starts: runs.len(),
            evaluations,
            agreeing_starts,
            multimodal,
            converged: winner.converged,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub closed_form_r_s: f64,
    pub oracle_r_s: f64,
    pub rate_deviation: f64,
    /// Largest `|β_closed - β_oracle|` over all relays.
    pub max_beta_deviation: f64,
    pub pass: bool,
}

/// Absolute or relative, whichever is larger.
pub const VERIFY_TOL: f64 = 1e-4;

/// Runs the closed form (diamond for one layer, layered otherwise) and the
/// oracle on the same network with the whole snooped layer overheard.
pub fn verify_against_closed_form(
    net: &LayeredNetwork,
    cfg: &SearchConfig,
) -> Result<Verification> {
    let (n, _, _) = net.ecgal_params("closed-form verification")?;
    let (closed_beta, closed_rate) = if net.layers() == 1 {
        let sol = crate::diamond::diamond_opt(net)?;
        (sol.beta, sol.rate)
    } else {
        let sol = crate::layered::optimal_scaling(net)?;
        (sol.beta, sol.rate)
    };
    let oracle = maximize_secrecy(net, &SnoopSet::all(n), cfg)?;
    let rate_deviation = (closed_rate.r_s - oracle.rate.r_s).abs();
    let max_beta_deviation = closed_beta
        .flatten()
        .iter()
        .zip(oracle.flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Verification {
        closed_form_r_s: closed_rate.r_s,
        oracle_r_s: oracle.rate.r_s,
        rate_deviation,
        max_beta_deviation,
        pass: rate_deviation <= VERIFY_TOL.max(VERIFY_TOL * oracle.rate.r_s.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::EveGains;

    fn example1() -> LayeredNetwork {
        let mut net = LayeredNetwork::diamond(3, 0.6, 0.3, 0.2, 5.0, 5.0, 1.0).unwrap();
        net.h_e = EveGains::PerNode(vec![0.2, 0.6, 0.4]);
        net
    }

    #[test]
    fn example1_case1_optimum() {
        let r = maximize_secrecy(&example1(), &SnoopSet::all(3), &SearchConfig::default()).unwrap();
        let b = r.flatten();
        assert!((b[0] - 1.3363).abs() < 1e-3, "{:?}", b);
        assert!(b[1].abs() < 1e-3 && b[2].abs() < 1e-3, "{:?}", b);
        assert!((r.rate.r_e - 0.081749).abs() < 1e-4, "{}", r.rate.r_e);
    }

    #[test]
    fn example1_case2_optimum() {
        let snoop = SnoopSet::from_indices(&[2, 3], 3).unwrap();
        let r = maximize_secrecy(&example1(), &snoop, &SearchConfig::default()).unwrap();
        let b = r.flatten();
        assert!((b[0] - 1.3363).abs() < 1e-3, "{:?}", b);
        assert!(b[1].abs() < 1e-3, "{:?}", b);
        assert!((b[2] - 0.7298).abs() < 1e-3, "{:?}", b);
        assert!((r.rate.r_e - 0.095368).abs() < 1e-4, "{}", r.rate.r_e);
        assert!(r.diagnostics.converged);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let net =
            LayeredNetwork::ecgal(2, 0.7, vec![0.5, 0.9], 0.3, 0.25, 2, 10.0, 4.0, 0.7).unwrap();
        let cfg = SearchConfig {
            restarts: 8,
            ..SearchConfig::with_seed(42)
        };
        let a = maximize_secrecy(&net, &SnoopSet::all(2), &cfg).unwrap();
        let b = maximize_secrecy(&net, &SnoopSet::all(2), &cfg).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn iterates_stay_in_box() {
        let net = LayeredNetwork::ecgal(2, 0.7, vec![0.5], 0.8, 0.1, 1, 50.0, 4.0, 1.0).unwrap();
        let r = maximize_secrecy(&net, &SnoopSet::all(2), &SearchConfig::default()).unwrap();
        for (row, bounds) in r.beta.iter().zip(&r.bounds) {
            for (b, bm) in row.iter().zip(bounds) {
                assert!(*b >= 0.0 && b <= bm);
            }
        }
    }

    #[test]
    fn ascent_never_decreases() {
        let net = LayeredNetwork::ecgal(2, 0.6, vec![0.4], 0.5, 0.2, 2, 30.0, 10.0, 1.0).unwrap();
        let snoop = SnoopSet::all(2);
        let problem = Problem::new(&net, &snoop, false);
        let cfg = SearchConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let start: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let v0 = problem.eval(&start, &mut Vec::new());
            let end = ascend(&problem, start, &cfg);
            assert!(end.value >= v0);
        }
    }

    #[test]
    fn bad_config_rejected() {
        let net = example1();
        let cfg = SearchConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(maximize_secrecy(&net, &SnoopSet::all(3), &cfg).is_err());
        let cfg = SearchConfig {
            grid_step: 0.0,
            ..Default::default()
        };
        assert!(maximize_secrecy(&net, &SnoopSet::all(3), &cfg).is_err());
    }

    #[test]
    fn grid_resolution_respects_budget() {
        let cfg = SearchConfig::default();
        assert_eq!(grid_axis_points(1, &cfg), Some(101));
        assert_eq!(grid_axis_points(3, &cfg), Some(58));
        assert_eq!(grid_axis_points(9, &cfg), None);
    }
}
