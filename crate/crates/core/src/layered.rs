//! Optimal scaling for ECGAL layered networks.
//!
//! Layers behind the snooped layer `M` transmit at full power (they only
//! shape the destination SNR), layers in front of it also run at full power,
//! and the `N` relays of layer `M` share one factor that solves a quadratic
//! in `β_M²`.
//!
//! With the other layers fixed, the destination and eavesdropper SNRs are
//! linear-fractional in `S² = (Σβ_M)²` and `Q = Σβ_M²`:
//!
//! ```text
//! SNR_t = p·A·S²·h_M² / (B·S²·h_M² + C·Q·h_M² + D)
//! SNR_e = p·E·S²·h_e² / (F·S²·h_e² + Q·h_e² + 1)
//! ```
//!
//! with `p = P_s/σ²`, `A = αE`, `B = λE + μF`, `C = μ`, `D = ν`. `E` and `F`
//! are the source amplitude² and forwarded noise (in units of σ²) arriving
//! at layer `M`. The downstream compounds are recovered by probing the exact
//! destination SNR at three layer-`M` configurations.

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::LayeredNetwork;
use crate::propagation::{rates, snr_pair, Front, RateReport, SnoopSet};
use crate::scaling::{layer_bounds, ScalingVector};

/// Relative tolerance when comparing `β_glb²` against `β_max²`.
pub const CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub nodes: usize,
    pub h_m: f64,
    pub h_e: f64,
    /// `P_s / σ²`.
    pub source_snr: f64,
    pub e: f64,
    pub f: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Quadratic `cal_a·x² + cal_b·x + cal_c = 0` in `x = β_M²` whose
    /// positive root is the interior optimum.
    pub cal_a: f64,
    pub cal_b: f64,
    pub cal_c: f64,
}

impl CoefficientSet {
    fn complete(mut self) -> Self {
        let n = self.nodes as f64;
        let (hm2, he2, p) = (self.h_m * self.h_m, self.h_e * self.h_e, self.source_snr);
        let nf1 = n * self.f + 1.0;
        // N·B + C and N·(p·A + B) + C
        let w = n * self.b + self.c;
        let w_sig = w + n * p * self.a;
        self.cal_a = n
            * n
            * hm2
            * he2
            * (he2 * self.alpha * self.nu * nf1 * (nf1 + n * p * self.e) - hm2 * w * w_sig);
        self.cal_b = 2.0 * n * self.nu * hm2 * he2 * (self.alpha * nf1 - w);
        self.cal_c = self.nu * (hm2 * self.alpha - he2 * self.nu);
        self
    }

    /// `h_M²·α − h_e²·ν`; the snooped layer transmits only when positive.
    pub fn sign_condition(&self) -> f64 {
        self.h_m * self.h_m * self.alpha - self.h_e * self.h_e * self.nu
    }

    pub fn snr_t(&self, s2: f64, q: f64) -> f64 {
        let hm2 = self.h_m * self.h_m;
        self.source_snr * self.a * s2 * hm2 / (self.b * s2 * hm2 + self.c * q * hm2 + self.d)
    }

    pub fn snr_e(&self, s2: f64, q: f64) -> f64 {
        let he2 = self.h_e * self.h_e;
        self.source_snr * self.e * s2 * he2 / (self.f * s2 * he2 + q * he2 + 1.0)
    }

    /// `½·log₂((1+SNR_t)/(1+SNR_e))` with every layer-`M` relay at `beta`.
    pub fn objective(&self, beta: f64) -> f64 {
        let n = self.nodes as f64;
        let x = beta * beta;
        let (s2, q) = (n * n * x, n * x);
        let t = self.snr_t(s2, q);
        let e = self.snr_e(s2, q);
        0.5 * ((1.0 + t) / (1.0 + e)).log2()
    }
}

/// Rows for the whole network: `upstream` as given, `row_m` for the snooped
/// layer, every later layer at its bound given the actual rows in front.
fn assemble(net: &LayeredNetwork, upstream: &[Vec<f64>], row_m: &[f64]) -> Vec<Vec<f64>> {
    let m = upstream.len();
    let mut front = Front::source(net);
    let mut rows = Vec::with_capacity(net.layers());
    for l in 0..net.layers() {
        let row = if let Some(r) = upstream.get(l) {
            r.clone()
        } else if l == m {
            row_m.to_vec()
        } else {
            layer_bounds(net, l, &front)
        };
        front = front.advance(net.out_gain(l), &row, net.sigma2);
        rows.push(row);
    }
    rows
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if !(d.abs() > 1e-14 * scale.powi(3)) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = rhs[r];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

/// Reduced-form constants of the layer-`M` subproblem for the given upstream
/// rows (layers `1..M-1`), with every downstream layer at full power.
pub fn extract_coefficients(net: &LayeredNetwork, upstream: &[Vec<f64>]) -> Result<CoefficientSet> {
    let (n, _, h_e) = net.ecgal_params("layered closed form")?;
    let m = net.snooped_index();
    if upstream.len() != m {
        return Err(AncError::InvalidNetwork(format!(
            "expected {} upstream rows, got {}",
            m,
            upstream.len()
        )));
    }
    let mut front = Front::source(net);
    for (l, row) in upstream.iter().enumerate() {
        let bounds = layer_bounds(net, l, &front);
        if row.len() != n {
            return Err(AncError::InvalidNetwork(format!(
                "upstream row {} has {} entries",
                l + 1,
                row.len()
            )));
        }
        for (k, (&b, &bm)) in row.iter().zip(&bounds).enumerate() {
            if !(b >= 0.0) || b > bm * (1.0 + crate::scaling::BOUND_SLACK) {
                return Err(AncError::BetaOutOfBounds {
                    layer: l + 1,
                    node: k + 1,
                    beta: b,
                    beta_max: bm,
                });
            }
        }
        front = front.advance(net.out_gain(l), row, net.sigma2);
    }
    let e = front.a * front.a;
    let f = front.c / net.sigma2;
    let h_m = net.out_gain(m);
    let p = net.source_snr();
    let alpha: f64 = (m + 1..net.layers())
        .map(|i| {
            let root_sum: f64 = (0..n).map(|k| net.node_power(i, k).sqrt()).sum();
            root_sum * root_sum * net.out_gain(i).powi(2)
        })
        .product();

    let (lambda, mu, nu) = if m + 1 == net.layers() {
        (0.0, 1.0, 1.0)
    } else {
        probe_downstream(net, upstream, &front, n, e, f, alpha, h_m)?
    };
    let a = alpha * e;
    Ok(CoefficientSet {
        nodes: n,
        h_m,
        h_e,
        source_snr: p,
        e,
        f,
        alpha,
        lambda,
        mu,
        nu,
        a,
        b: lambda * e + mu * f,
        c: mu,
        d: nu,
        cal_a: 0.0,
        cal_b: 0.0,
        cal_c: 0.0,
    }
    .complete())
}

/// Solves `1/SNR_t = b' + c'·Q/S² + d'/S²` from three probes of layer `M`.
/// A single-relay layer makes `Q/S²` constant, so probing runs on a copy
/// with layer `M` widened to two relays; the downstream compounds do not
/// depend on that width.
#[allow(clippy::too_many_arguments)]
fn probe_downstream(
    net: &LayeredNetwork,
    upstream: &[Vec<f64>],
    front: &Front,
    n: usize,
    e: f64,
    f: f64,
    alpha: f64,
    h_m: f64,
) -> Result<(f64, f64, f64)> {
    let p = net.source_snr();
    if !(e > 0.0 && p > 0.0 && alpha > 0.0 && h_m != 0.0) {
        return Err(AncError::Degenerate(
            "no source signal reaches the destination; downstream compounds are undefined".into(),
        ));
    }
    let m = net.snooped_index();
    let width = n.max(2);
    let mut probe_net = net.clone();
    probe_net.nodes_per_layer[m] = width;
    probe_net.h_e = crate::network::EveGains::Uniform(0.0);
    if let Some(rows) = &mut probe_net.node_power {
        rows[m] = vec![rows[m][0]; width];
    }
    let top = layer_bounds(&probe_net, m, front)[0];
    let mut one_hot = vec![0.0; width];
    one_hot[0] = top;
    let probes = [vec![0.5 * top; width], vec![top; width], one_hot];
    let snoop = SnoopSet::none(width);
    let mut mat = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (r, row_m) in probes.iter().enumerate() {
        let rows = assemble(&probe_net, upstream, row_m);
        let (snr_t, _) = snr_pair(&probe_net, &rows, &snoop);
        if !(snr_t > 0.0) || !snr_t.is_finite() {
            return Err(AncError::Degenerate(
                "probe produced no destination signal".into(),
            ));
        }
        let (s, q) = crate::propagation::sums(row_m);
        mat[r] = [1.0, q / (s * s), 1.0 / (s * s)];
        rhs[r] = 1.0 / snr_t;
    }
    let [b1, c1, d1] =
        solve3(mat, rhs).ok_or_else(|| AncError::Degenerate("singular probe system".into()))?;
    let a = alpha * e;
    let b = b1 * p * a;
    let mu = c1 * p * a;
    let nu = d1 * p * a * h_m * h_m;
    Ok(((b - mu * f) / e, mu, nu))
}

/// Which case produced the snooped layer's factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootBranch {
    /// Interior stationary point below `β_max`.
    Interior,
    /// Stationary point at or beyond `β_max`.
    Clipped,
    /// `h_M²α − h_e²ν ≤ 0`: the layer stays silent.
    Zero,
    /// `h_e = 0`.
    NoEavesdropper,
    /// No positive stationary maximum; the objective rises up to `β_max`.
    Increasing,
    /// No signal reaches the destination; every factor gives zero rate.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnoopedLayerBeta {
    pub beta: f64,
    pub beta_glb: Option<f64>,
    pub branch: RootBranch,
    /// `cal_a > 0` with `cal_c < 0`; the layer stays silent.
    pub opposite_signs: bool,
    /// `cal_c > 0` but `cal_a ≥ 0`, contrary to the expected sign chain.
    pub sign_anomaly: bool,
}

/// Common optimal factor of the snooped layer.
pub fn snooped_layer_factor(coeffs: &CoefficientSet, beta_m_max: f64) -> SnoopedLayerBeta {
    let (ca, cb, cc) = (coeffs.cal_a, coeffs.cal_b, coeffs.cal_c);
    let opposite_signs = ca > 0.0 && cc < 0.0;
    let sign_anomaly = cc > 0.0 && ca >= 0.0;
    let done = |beta, beta_glb, branch| SnoopedLayerBeta {
        beta,
        beta_glb,
        branch,
        opposite_signs,
        sign_anomaly,
    };
    if coeffs.h_e == 0.0 {
        return done(beta_m_max, None, RootBranch::NoEavesdropper);
    }
    if !(coeffs.sign_condition() > 0.0) {
        return done(0.0, None, RootBranch::Zero);
    }
    let disc = cb * cb - 4.0 * ca * cc;
    let denom = -cb + disc.max(0.0).sqrt();
    if !(disc >= 0.0) || !(denom > 0.0) {
        return done(beta_m_max, None, RootBranch::Increasing);
    }
    let glb = (2.0 * cc / denom).sqrt();
    if glb * glb >= beta_m_max * beta_m_max * (1.0 - CLIP_TOL) {
        return done(beta_m_max, Some(glb), RootBranch::Clipped);
    }
    if ca > 0.0 && coeffs.objective(beta_m_max) > coeffs.objective(glb) {
        // Local maximum followed by a local minimum; the bound wins.
        return done(beta_m_max, Some(glb), RootBranch::Increasing);
    }
    done(glb, Some(glb), RootBranch::Interior)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredSolution {
    pub beta: ScalingVector,
    pub rate: RateReport,
    pub layer: SnoopedLayerBeta,
    pub beta_m_max: f64,
    /// `None` when the network is degenerate or has no eavesdropper.
    pub coefficients: Option<CoefficientSet>,
}

/// Upstream layers at full power, `row_m` on the snooped layer (clamped to
/// its bounds) and every downstream layer at full power.
pub fn scaling_with_snooped_row(net: &LayeredNetwork, row_m: &[f64]) -> Result<ScalingVector> {
    let m = net.snooped_index();
    ScalingVector::build(net, |l, bounds| {
        if l == m {
            row_m.to_vec()
        } else {
            bounds.to_vec()
        }
    })
}

/// Network-wide optimal scaling for an ECGAL network.
pub fn optimal_scaling(net: &LayeredNetwork) -> Result<LayeredSolution> {
    let (n, _, h_e) = net.ecgal_params("layered closed form")?;
    let m = net.snooped_index();
    let mut front = Front::source(net);
    let mut upstream = Vec::with_capacity(m);
    for l in 0..m {
        let row = layer_bounds(net, l, &front);
        front = front.advance(net.out_gain(l), &row, net.sigma2);
        upstream.push(row);
    }
    let beta_m_max = layer_bounds(net, m, &front)[0];

    let (layer, coefficients) = if h_e == 0.0 {
        let layer = SnoopedLayerBeta {
            beta: beta_m_max,
            beta_glb: None,
            branch: RootBranch::NoEavesdropper,
            opposite_signs: false,
            sign_anomaly: false,
        };
        (layer, None)
    } else {
        match extract_coefficients(net, &upstream) {
            Ok(c) => (snooped_layer_factor(&c, beta_m_max), Some(c)),
            Err(AncError::Degenerate(_)) => {
                let layer = SnoopedLayerBeta {
                    beta: beta_m_max,
                    beta_glb: None,
                    branch: RootBranch::Degenerate,
                    opposite_signs: false,
                    sign_anomaly: false,
                };
                (layer, None)
            }
            Err(e) => return Err(e),
        }
    };
    let beta = scaling_with_snooped_row(net, &vec![layer.beta; n])?;
    let rate = rates(net, &beta, &SnoopSet::all(n))?;
    Ok(LayeredSolution {
        beta,
        rate,
        layer,
        beta_m_max,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::diamond_opt;
    use approx::assert_relative_eq;

    fn fig5a() -> LayeredNetwork {
        LayeredNetwork::ecgal(2, 0.689, vec![0.603], 0.203, 0.031, 2, 500.0, 500.0, 1.0).unwrap()
    }

    #[test]
    fn diamond_coefficients_are_exact() {
        let net = LayeredNetwork::diamond(3, 0.4, 0.5, 0.2, 6.0, 4.0, 1.5).unwrap();
        let c = extract_coefficients(&net, &[]).unwrap();
        assert_eq!(c.f, 0.0);
        assert_eq!((c.alpha, c.lambda, c.mu, c.nu), (1.0, 0.0, 1.0, 1.0));
        assert_relative_eq!(c.e, 0.16, max_relative = 1e-15);
        assert_eq!(c.a, c.alpha * c.e);
        assert_eq!(c.cal_b, 0.0);
    }

    #[test]
    fn silent_branch() {
        let net = LayeredNetwork::ecgal(2, 0.7, vec![0.5], 0.2, 0.6, 2, 50.0, 10.0, 1.0).unwrap();
        let sol = optimal_scaling(&net).unwrap();
        assert_eq!(sol.layer.branch, RootBranch::Zero);
        assert_eq!(sol.layer.beta, 0.0);
        assert_eq!(sol.rate.r_s, 0.0);
    }

    #[test]
    fn single_layer_matches_diamond() {
        let net = LayeredNetwork::diamond(3, 0.278, 0.379, 0.073, 10.0, 10.0, 1.0).unwrap();
        let a = optimal_scaling(&net).unwrap();
        let b = diamond_opt(&net).unwrap();
        assert_relative_eq!(a.layer.beta, b.beta_opt, max_relative = 1e-14);
        assert_relative_eq!(a.rate.r_s, b.rate.r_s, max_relative = 1e-13);
    }

    #[test]
    fn reconstruction_on_fig5a_hand_check() {
        // Layer 1 at max; layer 2 probed by hand at β_M = 0.3 on both relays.
        let net = LayeredNetwork::ecgal(2, 0.689, vec![0.603], 0.203, 0.031, 1, 500.0, 500.0, 1.0)
            .unwrap();
        let c = extract_coefficients(&net, &[]).unwrap();
        let beta = scaling_with_snooped_row(&net, &[0.3, 0.3]).unwrap();
        let direct = rates(&net, &beta, &SnoopSet::all(2)).unwrap();
        let (s2, q) = (0.36, 0.18);
        assert_relative_eq!(c.snr_t(s2, q), direct.snr_t, max_relative = 1e-10);
        assert_relative_eq!(c.snr_e(s2, q), direct.snr_e, max_relative = 1e-12);
        // One downstream layer of N relays at power P: α = N²P h_t².
        assert_relative_eq!(
            c.alpha,
            4.0 * 500.0 * 0.203f64.powi(2),
            max_relative = 1e-15
        );
        assert_relative_eq!(c.mu, c.alpha + 1.0, max_relative = 1e-9);
        assert_relative_eq!(c.lambda, 500.0, max_relative = 1e-9);
        assert_relative_eq!(
            c.nu,
            2.0 * 500.0 * 0.203f64.powi(2) + 1.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn fig5a_solution_shape() {
        let net = fig5a();
        let sol = optimal_scaling(&net).unwrap();
        let rows = sol.beta.rows();
        assert_eq!(rows[0], sol.beta.bounds()[0]);
        assert_eq!(rows[1][0], rows[1][1]);
        assert!(sol.rate.r_s > 0.0);
        assert!(!sol.layer.sign_anomaly);
    }

    #[test]
    fn clipping_branch_with_tiny_eavesdropper() {
        let net = LayeredNetwork::ecgal(2, 0.6, vec![0.7], 0.8, 1e-6, 1, 5.0, 5.0, 1.0).unwrap();
        let sol = optimal_scaling(&net).unwrap();
        assert_eq!(sol.layer.branch, RootBranch::Clipped);
        assert_eq!(sol.beta.rows(), sol.beta.bounds());
    }

    #[test]
    fn no_eavesdropper_all_max() {
        let net =
            LayeredNetwork::ecgal(3, 0.6, vec![0.7, 0.5], 0.8, 0.0, 2, 5.0, 5.0, 1.0).unwrap();
        let sol = optimal_scaling(&net).unwrap();
        assert_eq!(sol.layer.branch, RootBranch::NoEavesdropper);
        assert_eq!(sol.beta.rows(), sol.beta.bounds());
    }

    #[test]
    fn silent_source_is_degenerate_but_valid() {
        let net = LayeredNetwork::ecgal(2, 0.6, vec![0.7], 0.8, 0.1, 1, 0.0, 5.0, 1.0).unwrap();
        assert!(matches!(
            extract_coefficients(&net, &[]),
            Err(AncError::Degenerate(_))
        ));
        let sol = optimal_scaling(&net).unwrap();
        assert_eq!(sol.layer.branch, RootBranch::Degenerate);
        assert_eq!(sol.rate.r_s, 0.0);
    }

    #[test]
    fn heterogeneous_layers_rejected() {
        let mut net = fig5a();
        net.nodes_per_layer = vec![2, 3];
        assert!(matches!(
            optimal_scaling(&net),
            Err(AncError::NotEcgal { .. })
        ));
    }

    #[test]
    fn wrong_upstream_length_rejected() {
        let net = fig5a();
        assert!(extract_coefficients(&net, &[]).is_err());
    }
}
