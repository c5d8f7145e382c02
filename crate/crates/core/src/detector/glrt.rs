//! GLRT detector, observation synthesis and Monte Carlo calibration.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::SensingLinks;
use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse, CMat, CVec, C64};
use crate::optimizer::{transmit_signal, SensingParams, Symbols};
use crate::precoding::{PowerAllocation, PrecoderSet};
use crate::rng::{complex_normal, complex_normal_vec, rng_for};

use super::clutter::ClutterModel;

/// Per-slot, per-receive-AP target responses: column `t` of `v[ι][r]` is
/// `E_{t,r} s_t[ι] = b_r (h_tᴴ s_t[ι])`.
#[derive(Debug, Clone)]
pub struct SignalModel {
    pub v: Vec<Vec<CMat>>,
}

impl SignalModel {
    pub fn build(
        links: SensingLinks<'_>,
        theta: &CVec,
        pre: &PrecoderSet,
        power: &PowerAllocation,
        symbols: &Symbols,
    ) -> Result<Self> {
        if symbols.x.iter().any(|x| x.len() != pre.num_beams()) {
            return Err(Error::Dimension("symbol length differs from beam count".into()));
        }
        let hs = links.cascaded(theta)?;
        let v = symbols
            .x
            .iter()
            .map(|x| {
                let gains: Vec<C64> = hs.iter().enumerate().map(|(t, h)| h.dotc(&transmit_signal(pre, x, power, t))).collect();
                links
                    .b
                    .iter()
                    .map(|b| CMat::from_fn(b.len(), gains.len(), |i, t| b[i] * gains[t]))
                    .collect()
            })
            .collect();
        Ok(Self { v })
    }

    pub fn slots(&self) -> usize {
        self.v.len()
    }

    pub fn num_rx(&self) -> usize {
        self.v.first().map_or(0, |s| s.len())
    }

    pub fn num_tx(&self) -> usize {
        self.v.first().and_then(|s| s.first()).map_or(0, |m| m.ncols())
    }

    pub fn antennas(&self) -> usize {
        self.v.first().and_then(|s| s.first()).map_or(0, |m| m.nrows())
    }

    /// Full `MR × TR` matrix of slot `ι`, with `ξ` ordered as `t·R + r`.
    pub fn dense(&self, slot: usize) -> CMat {
        let (m, t_n, r_n) = (self.antennas(), self.num_tx(), self.num_rx());
        let mut out = CMat::zeros(m * r_n, t_n * r_n);
        for r in 0..r_n {
            for t in 0..t_n {
                out.view_mut((r * m, t * r_n + r), (m, 1)).copy_from(&self.v[slot][r].column(t));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SensingObservation {
    /// `y[ι][r]`.
    pub y: Vec<Vec<CVec>>,
    /// Drawn RCS coefficients (`t·R + r` order) when the target is present.
    pub xi: Option<CVec>,
    pub clutter: Vec<Vec<CVec>>,
    pub noise: Vec<Vec<CVec>>,
    pub target_present: bool,
}

/// Generator of sensing observations under either hypothesis.
#[derive(Debug, Clone, Copy)]
pub struct ObservationModel<'a> {
    pub truth: &'a SignalModel,
    pub params: &'a SensingParams,
    pub clutter: &'a ClutterModel,
}

impl ObservationModel<'_> {
    /// Swerling-I: one `ξ` for all slots; clutter and noise are fresh per slot.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, target_present: bool) -> SensingObservation {
        let (t_n, r_n) = (self.truth.num_tx(), self.truth.num_rx());
        let m = self.truth.antennas();
        let xi = target_present.then(|| {
            CVec::from_fn(t_n * r_n, |k, _| complex_normal(rng, self.params.rcs_var[(k / r_n, k % r_n)]))
        });
        let mut y = Vec::with_capacity(self.truth.slots());
        let mut clutter = Vec::with_capacity(self.truth.slots());
        let mut noise = Vec::with_capacity(self.truth.slots());
        for slot in &self.truth.v {
            let mut ys = Vec::with_capacity(r_n);
            let mut zs = Vec::with_capacity(r_n);
            let mut ns = Vec::with_capacity(r_n);
            for (r, vr) in slot.iter().enumerate() {
                let z = self.clutter.sample(rng, r);
                let n = complex_normal_vec(rng, m, self.params.noise);
                let mut yr = &z + &n;
                if let Some(xi) = &xi {
                    let coeffs = CVec::from_fn(t_n, |t, _| xi[t * r_n + r]);
                    yr += vr * coeffs;
                }
                ys.push(yr);
                zs.push(z);
                ns.push(n);
            }
            y.push(ys);
            clutter.push(zs);
            noise.push(ns);
        }
        SensingObservation { y, xi, clutter, noise, target_present }
    }
}

/// Block-diagonal GLRT matrices, one `M×M` block per slot and receive AP.
#[derive(Debug, Clone)]
pub struct GlrtDetector {
    /// `Ξ[ι]` blocks.
    pub xi_inv: Vec<Vec<CMat>>,
    /// `T[ι]` blocks.
    pub t: Vec<Vec<CMat>>,
    pub clutter_aware: bool,
    pub noise: f64,
}

pub fn build_detector(
    los: &SignalModel,
    params: &SensingParams,
    clutter: &ClutterModel,
    clutter_aware: bool,
) -> Result<GlrtDetector> {
    let (t_n, r_n, m) = (los.num_tx(), los.num_rx(), los.antennas());
    if params.rcs_var.shape() != (t_n, r_n) || clutter.num_rx() != r_n {
        return Err(Error::Dimension("detector inputs disagree on AP counts".into()));
    }
    if !(params.noise > 0.0) {
        return Err(Error::InvalidConfig("sensing noise must be positive".into()));
    }
    let sigma2 = params.noise;
    let eye = CMat::identity(m, m);
    let mut xi_inv = Vec::with_capacity(los.slots());
    let mut t_all = Vec::with_capacity(los.slots());
    for slot in &los.v {
        let mut xs = Vec::with_capacity(r_n);
        let mut ts = Vec::with_capacity(r_n);
        for (r, vr) in slot.iter().enumerate() {
            let mut rr = CMat::zeros(m, m);
            for t in 0..t_n {
                let col = vr.column(t);
                rr += &col * col.adjoint() * C64::from(params.rcs_var[(t, r)]);
            }
            let xi = hpd_inverse(&(rr + &eye * C64::from(sigma2)))?;
            let mut t_mat = -&xi;
            let u = &clutter.basis[r];
            if clutter_aware && u.ncols() > 0 {
                let xu = &xi * u;
                let inner = hpd_inverse(&u.ad_mul(&xu)).map_err(|_| Error::Singular("UᴴΞU".into()))?;
                t_mat += &xu * inner * xu.adjoint();
                t_mat += (&eye - u * u.adjoint()).unscale(sigma2);
            } else {
                t_mat += eye.unscale(sigma2);
            }
            xs.push(xi);
            ts.push((&t_mat + t_mat.adjoint()).scale(0.5));
        }
        xi_inv.push(xs);
        t_all.push(ts);
    }
    Ok(GlrtDetector { xi_inv, t: t_all, clutter_aware, noise: sigma2 })
}

/// `Σ_ι y[ι]ᴴ T[ι] y[ι]` (real part).
pub fn glrt_statistic(det: &GlrtDetector, obs: &SensingObservation) -> f64 {
    det.t
        .iter()
        .zip(&obs.y)
        .flat_map(|(ts, ys)| ts.iter().zip(ys))
        .map(|(t, y)| y.dotc(&(t * y)).re)
        .sum()
}

/// Threshold from null statistics: the `⌈(1−pfa)n⌉`-th smallest value.
pub fn threshold_from_null(stats: &mut [f64], pfa: f64) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::InvalidConfig("no null trials".into()));
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidConfig("pfa must lie in (0, 1)".into()));
    }
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    let k = (((1.0 - pfa) * n as f64).ceil() as usize).clamp(1, n);
    Ok(stats[k - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub trials: usize,
    /// Fewer than `10/pfa` trials: the tail quantile is poorly resolved.
    pub underpowered: bool,
}

fn statistics(det: &GlrtDetector, model: &ObservationModel<'_>, present: bool, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, &[i as u64]);
            glrt_statistic(det, &model.sample(&mut rng, present))
        })
        .collect()
}

pub fn calibrate_threshold(
    det: &GlrtDetector,
    model: &ObservationModel<'_>,
    pfa: f64,
    trials: usize,
    seed: u64,
) -> Result<Calibration> {
    let mut stats = statistics(det, model, false, trials, seed);
    let threshold = threshold_from_null(&mut stats, pfa)?;
    let underpowered = (trials as f64) < 10.0 / pfa;
    if underpowered {
        log::debug!("{trials} null trials are fewer than 10/pfa = {:.0}", 10.0 / pfa);
    }
    Ok(Calibration { threshold, trials, underpowered })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEstimate {
    pub pd: f64,
    pub stderr: f64,
    pub detections: usize,
    pub trials: usize,
}

impl DetectionEstimate {
    pub fn from_counts(detections: usize, trials: usize) -> Self {
        let pd = if trials == 0 { 0.0 } else { detections as f64 / trials as f64 };
        let stderr = if trials == 0 { 0.0 } else { (pd * (1.0 - pd) / trials as f64).sqrt() };
        Self { pd, stderr, detections, trials }
    }
}

/// Fraction of trials whose statistic exceeds `threshold`.
pub fn detection_probability(
    det: &GlrtDetector,
    model: &ObservationModel<'_>,
    threshold: f64,
    target_present: bool,
    trials: usize,
    seed: u64,
) -> DetectionEstimate {
    let hits = statistics(det, model, target_present, trials, seed).into_iter().filter(|s| *s > threshold).count();
    DetectionEstimate::from_counts(hits, trials)
}
