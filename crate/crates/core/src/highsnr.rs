//! δ-scaled amplification in the high-SNR regime and the constant gap to
//! the cutset bound.
//!
//! A network is in the δ-high-SNR regime when every relay layer's input SNR
//! is at least `1/δ`. Each relay of layer `i` then uses
//! `β_i² = P / ((1+δ)·P_{R_i,max})`, the maximal received signal power being
//! `P_s·h_s²` for the first layer and `N²·P·h_{i-1}²` afterwards. Every layer
//! forwards signal power `P/(1+δ)^i`, so the destination sees
//! `N²·P·h_t²/(1+δ)^L` of source signal.

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::LayeredNetwork;
use crate::propagation::{capacity, Front, RateReport};
use crate::scaling::ScalingVector;

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(AncError::InvalidDelta(delta))
    }
}

/// `P_{R_i,max}` of every layer.
fn max_received_signal(net: &LayeredNetwork, n: usize, p: f64) -> Vec<f64> {
    let n = n as f64;
    (0..net.layers())
        .map(|l| {
            if l == 0 {
                net.p_s * net.h_s * net.h_s
            } else {
                n * n * p * net.out_gain(l - 1).powi(2)
            }
        })
        .collect()
}

/// δ-scaled factors, checking the regime layer by layer. At `δ = 0` the
/// regime check is skipped and factors are capped at `β_max`, which is the
/// all-max vector.
pub fn high_snr_scaling(net: &LayeredNetwork, delta: f64) -> Result<ScalingVector> {
    check_delta(delta)?;
    let (n, p, _) = net.ecgal_params("high-SNR scaling")?;
    let peak = max_received_signal(net, n, p);
    if delta > 0.0 {
        let mut front = Front::source(net);
        for (l, &pr) in peak.iter().enumerate() {
            let snr = front.signal(net.p_s) / (front.c + net.sigma2);
            if !(snr * delta >= 1.0) {
                return Err(AncError::RegimeViolation {
                    layer: l + 1,
                    snr,
                    required: 1.0 / delta,
                });
            }
            let b = (p / ((1.0 + delta) * pr)).sqrt();
            front = front.advance(net.out_gain(l), &vec![b; n], net.sigma2);
        }
    }
    // Inside the regime the factors never exceed their bounds; the clamp in
    // `build` only absorbs rounding (and caps the δ = 0 limit).
    ScalingVector::build(net, |l, _| {
        let b = if peak[l] > 0.0 {
            (p / ((1.0 + delta) * peak[l])).sqrt()
        } else {
            f64::INFINITY
        };
        vec![b; n]
    })
}

/// Upper bound on the secrecy capacity: the last cut to the destination
/// minus the same cut to the eavesdropper, clamped at zero.
pub fn cutset_bound(net: &LayeredNetwork) -> Result<f64> {
    let (n, p, h_e) = net.ecgal_params("cutset bound")?;
    let n2p = (n * n) as f64 * p;
    let c = capacity(n2p * net.h_t * net.h_t / net.sigma2) - capacity(n2p * h_e * h_e / net.sigma2);
    Ok(c.max(0.0))
}

/// Signal and noise power reaching the destination and the eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighSnrPowers {
    pub signal_t: f64,
    pub noise_t: f64,
    pub signal_e: f64,
    pub noise_e: f64,
}

/// Closed products over layers for a common factor per layer. Noise injected
/// at layer `i` reaches the next layer through `N` independent relays and is
/// then forwarded coherently.
pub fn highsnr_powers(net: &LayeredNetwork, beta: &ScalingVector) -> Result<HighSnrPowers> {
    let (n, _, h_e) = net.ecgal_params("high-SNR powers")?;
    beta.check_shape(net)?;
    let nf = n as f64;
    let m = net.snooped_index();
    let b2: Vec<f64> = beta.rows().iter().map(|r| r[0] * r[0]).collect();
    let coherent = |l: usize, h: f64| nf * nf * b2[l] * h * h;
    let incoherent = |l: usize, h: f64| nf * b2[l] * h * h;

    let mut signal_t = net.p_s * net.h_s * net.h_s;
    let mut noise_t = 0.0;
    let (mut signal_e, mut noise_e) = (0.0, 0.0);
    for l in 0..net.layers() {
        if l == m {
            signal_e = signal_t * coherent(l, h_e);
            noise_e = noise_t * coherent(l, h_e) + net.sigma2 * incoherent(l, h_e);
        }
        let h = net.out_gain(l);
        signal_t *= coherent(l, h);
        noise_t = noise_t * coherent(l, h) + net.sigma2 * incoherent(l, h);
    }
    Ok(HighSnrPowers {
        signal_t,
        noise_t,
        signal_e,
        noise_e,
    })
}

/// Rates under δ-scaling, from the closed power products.
pub fn achievable_highsnr(net: &LayeredNetwork, delta: f64) -> Result<RateReport> {
    let beta = high_snr_scaling(net, delta)?;
    let pw = highsnr_powers(net, &beta)?;
    Ok(RateReport::from_snr(
        pw.signal_t / (pw.noise_t + net.sigma2),
        pw.signal_e / (pw.noise_e + net.sigma2),
    ))
}

/// `½·log₂[(1/(1−Lδ))·(1+Lδ·N·P·h_t²/σ²)/(1+Lδ·N·P·h_e²/σ²)]`, clamped at
/// zero. Requires `Lδ < 1`.
pub fn gap_bound(net: &LayeredNetwork, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (n, p, h_e) = net.ecgal_params("gap bound")?;
    let ld = net.layers() as f64 * delta;
    if ld >= 1.0 {
        return Err(AncError::VacuousGapBound(ld));
    }
    let np = n as f64 * p / net.sigma2;
    let ratio = (1.0 + ld * np * net.h_t * net.h_t) / ((1.0 - ld) * (1.0 + ld * np * h_e * h_e));
    Ok((0.5 * ratio.log2()).max(0.0))
}

/// `N·P·h_t²·[1 − (1+δ)^{−L}]`, bounding the noise power reaching the
/// destination under δ-scaling.
pub fn noise_bound(net: &LayeredNetwork, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (n, p, _) = net.ecgal_params("noise bound")?;
    Ok(n as f64 * p * net.h_t * net.h_t * (1.0 - (1.0 + delta).powi(-(net.layers() as i32))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighSnrReport {
    pub delta: f64,
    pub c_cut: f64,
    pub r_s_delta: f64,
    /// `c_cut − r_s_delta`.
    pub actual_gap: f64,
    pub gap_bound: f64,
    pub noise_bound: f64,
    /// Exact noise power reaching the destination.
    pub noise_power: f64,
}

pub fn high_snr_report(net: &LayeredNetwork, delta: f64) -> Result<HighSnrReport> {
    let beta = high_snr_scaling(net, delta)?;
    let pw = highsnr_powers(net, &beta)?;
    let rate = RateReport::from_snr(
        pw.signal_t / (pw.noise_t + net.sigma2),
        pw.signal_e / (pw.noise_e + net.sigma2),
    );
    let c_cut = cutset_bound(net)?;
    Ok(HighSnrReport {
        delta,
        c_cut,
        r_s_delta: rate.r_s,
        actual_gap: c_cut - rate.r_s,
        gap_bound: gap_bound(net, delta)?,
        noise_bound: noise_bound(net, delta)?,
        noise_power: pw.noise_t,
    })
}
