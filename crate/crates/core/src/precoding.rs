//! Centralized RZF communication precoders, the null-space sensing precoder
//! and the downlink SINR they induce.


use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, RVec, C64};

/// Singular values below this fraction of the largest are treated as zero in
/// the communication-span projector.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Minimum relative norm of the projected sensing direction.
pub const NULLSPACE_FLOOR: f64 = 1e-12;

/// Unit-norm stacked beams `f_1 … f_L` and the UE channel matrix they serve.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    /// Stacked beams of length `M·T`; the sensing beam, when present, is last.
    pub beams: Vec<CVec>,
    /// `G = [g_1 … g_K]`.
    pub g: CMat,
    pub lambda: f64,
    pub antennas: usize,
    pub num_tx: usize,
    pub has_sensing: bool,
}

impl PrecoderSet {
    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn num_ue(&self) -> usize {
        self.g.ncols()
    }

    /// Per-AP block `f_{l,t}`.
    pub fn block(&self, l: usize, t: usize) -> CVec {
        self.beams[l].rows(t * self.antennas, self.antennas).into_owned()
    }

    /// `F_t = [f_{1,t} … f_{L,t}]` (M×L).
    pub fn ap_matrix(&self, t: usize) -> CMat {
        CMat::from_fn(self.antennas, self.num_beams(), |i, l| self.beams[l][t * self.antennas + i])
    }

    /// `‖f_{l,t}‖²` for every beam of AP `t`.
    pub fn block_norms_sq(&self, t: usize) -> Vec<f64> {
        (0..self.num_beams())
            .map(|l| self.beams[l].rows(t * self.antennas, self.antennas).norm_squared())
            .collect()
    }

    /// `|g_kᴴ f_l|` as a K×L table.
    pub fn effective_gains(&self) -> Vec<Vec<f64>> {
        (0..self.num_ue())
            .map(|k| {
                let gk = self.g.column(k);
                self.beams.iter().map(|f| gk.dotc(f).norm()).collect()
            })
            .collect()
    }

    /// Downlink SINR of UE `k`.
    pub fn sinr(&self, k: usize, power: &PowerAllocation, noise: f64) -> f64 {
        let gk = self.g.column(k);
        let mut desired = 0.0;
        let mut interference = 0.0;
        for (l, f) in self.beams.iter().enumerate() {
            let p = gk.dotc(f).norm_sqr() * power.power(l);
            if l == k {
                desired = p;
            } else {
                interference += p;
            }
        }
        desired / (interference + noise)
    }

    pub fn spectral_efficiency(&self, k: usize, power: &PowerAllocation, noise: f64) -> f64 {
        (1.0 + self.sinr(k, power, noise)).log2()
    }

    /// Per-AP transmit power `Σ_l ‖f_{l,t}‖² ρ_l`.
    pub fn ap_power(&self, t: usize, power: &PowerAllocation) -> f64 {
        self.block_norms_sq(t)
            .iter()
            .enumerate()
            .map(|(l, n)| n * power.power(l))
            .sum()
    }
}

/// Square roots of the per-beam powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub sqrt: RVec,
}

impl PowerAllocation {
    pub fn from_sqrt(sqrt: RVec) -> Result<Self> {
        if sqrt.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidConfig("√ρ entries must be non-negative".into()));
        }
        Ok(Self { sqrt })
    }

    pub fn zeros(n: usize) -> Self {
        Self { sqrt: RVec::zeros(n) }
    }

    pub fn power(&self, l: usize) -> f64 {
        self.sqrt[l] * self.sqrt[l]
    }

    pub fn powers(&self) -> RVec {
        self.sqrt.map(|v| v * v)
    }

    pub fn len(&self) -> usize {
        self.sqrt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sqrt.is_empty()
    }
}

/// Unit-modulus RIS phase shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub theta: CVec,
}

impl RisConfig {
    pub fn new(theta: CVec) -> Result<Self> {
        if theta.iter().any(|t| (t.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidConfig("RIS phase shifts must have unit modulus".into()));
        }
        Ok(Self { theta })
    }

    pub fn ones(n: usize) -> Self {
        Self { theta: CVec::from_element(n, C64::new(1.0, 0.0)) }
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self { theta: CVec::from_iterator(phases.len(), phases.iter().map(|p| C64::from_polar(1.0, *p))) }
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.theta.iter().map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// `λ = K σ_k² / Σ_t P_t`.
pub fn default_lambda(num_ue: usize, ue_noise: f64, total_power: f64) -> f64 {
    num_ue as f64 * ue_noise / total_power
}

/// `f_k ∝ (Σ_i g_i g_iᴴ + λI)⁻¹ g_k`, computed through the push-through
/// identity `(GGᴴ + λI)⁻¹G = G(GᴴG + λI)⁻¹`.
pub fn rzf_precoders(g: &CMat, lambda: f64) -> Result<Vec<CVec>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig("regularization must be non-negative".into()));
    }
    let k = g.ncols();
    let gram = g.ad_mul(g) + CMat::identity(k, k) * C64::from(lambda);
    let sv = gram.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smax > 0.0) || smin <= 1e-13 * smax {
        return Err(Error::Singular("GᴴG + λI is singular".into()));
    }
    let inv = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("GᴴG + λI is singular".into()))?
        .inverse();
    let w = g * inv;
    (0..k)
        .map(|j| {
            let col = w.column(j).into_owned();
            let n = col.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Singular(format!("RZF beam {j} vanished")));
            }
            Ok(col.unscale(n))
        })
        .collect()
}

/// Orthonormal basis of the column span of `G` (singular values above the cutoff).
pub fn comm_span_basis(g: &CMat) -> CMat {
    if g.ncols() == 0 || g.nrows() == 0 {
        return CMat::zeros(g.nrows(), 0);
    }
    let svd = g.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMat::zeros(g.nrows(), 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > PINV_CUTOFF * smax)
        .collect();
    CMat::from_fn(g.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Projects onto the orthogonal complement of `basis` (two passes).
pub fn project_out(basis: &CMat, v: &CVec) -> CVec {
    if basis.ncols() == 0 {
        return v.clone();
    }
    let once = v - basis * basis.ad_mul(v);
    &once - basis * basis.ad_mul(&once)
}

/// `f_L = normalize((I − G(GᴴG)†Gᴴ) h̄)`.
pub fn sensing_precoder(g: &CMat, hbar: &CVec) -> Result<CVec> {
    if g.nrows() != hbar.len() {
        return Err(Error::Dimension(format!("G has {} rows, h̄ has {}", g.nrows(), hbar.len())));
    }
    let basis = comm_span_basis(g);
    let p = project_out(&basis, hbar);
    let n = p.norm();
    if !(n > NULLSPACE_FLOOR * hbar.norm()) {
        return Err(Error::SensingInCommSpan);
    }
    Ok(p.unscale(n))
}

/// Builds the L = K(+1) beams for a given RIS configuration.
pub fn build_precoders(
    channels: &ChannelSet,
    ris: &RisConfig,
    lambda: f64,
    with_sensing: bool,
) -> Result<PrecoderSet> {
    let g = channels.ue_matrix();
    let mut beams = rzf_precoders(&g, lambda)?;
    if with_sensing {
        let hbar = crate::linalg::vstack(&channels.sensing_los().cascaded(&ris.theta)?);
        beams.push(sensing_precoder(&g, &hbar)?);
    }
    Ok(PrecoderSet {
        beams,
        g,
        lambda,
        antennas: channels.antennas(),
        num_tx: channels.num_tx(),
        has_sensing: with_sensing,
    })
}
