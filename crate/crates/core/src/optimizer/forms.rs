//! The SCNR objective and its two quadratic reformulations.

use rand::Rng;

use crate::channel::{two_way, SensingLinks};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigh_desc, kron, spectral_norm, CMat, CVec, RMat, C64};
use crate::precoding::{PowerAllocation, PrecoderSet};
use crate::rng::unit_phase;

/// Radar-side model parameters shared by the optimizer and the detector.
#[derive(Debug, Clone)]
pub struct SensingParams {
    /// `δ²_{t,r}` as a T×R table.
    pub rcs_var: RMat,
    /// `δ_z²`.
    pub clutter_power: f64,
    /// `σ²` at the receive APs.
    pub noise: f64,
}

impl SensingParams {
    pub fn uniform(num_tx: usize, num_rx: usize, rcs_var: f64, clutter_power: f64, noise: f64) -> Self {
        Self { rcs_var: RMat::from_element(num_tx, num_rx, rcs_var), clutter_power, noise }
    }

    pub fn scaled_rcs(&self, factor: f64) -> Self {
        Self { rcs_var: self.rcs_var.scale(factor), ..self.clone() }
    }
}

/// Per-slot symbol vectors `x[ι] = (x_1[ι], …, x_L[ι])`; `X[ι] = diag(x[ι])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbols {
    pub x: Vec<CVec>,
}

impl Symbols {
    /// Unit-modulus symbols with independent uniform phases.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, beams: usize, slots: usize) -> Self {
        Self { x: (0..slots).map(|_| CVec::from_fn(beams, |_, _| unit_phase(rng))).collect() }
    }

    pub fn slots(&self) -> usize {
        self.x.len()
    }

    pub fn beams(&self) -> usize {
        self.x.first().map_or(0, |v| v.len())
    }

    /// Keeps the first `beams` streams of every slot.
    pub fn truncated(&self, beams: usize) -> Self {
        Self { x: self.x.iter().map(|v| v.rows(0, beams.min(v.len())).into_owned()).collect() }
    }
}

/// Transmit signal of AP `t` in slot `ι`: `s_t[ι] = F_t X[ι] ρ`.
pub fn transmit_signal(pre: &PrecoderSet, x: &CVec, power: &PowerAllocation, t: usize) -> CVec {
    let mut s = CVec::zeros(pre.antennas);
    for l in 0..pre.num_beams() {
        s += pre.block(l, t) * (x[l] * power.sqrt[l]);
    }
    s
}

/// Everything the three SCNR evaluations need besides `ρ`, `θ` and `F`.
#[derive(Debug, Clone, Copy)]
pub struct ScnrForms<'a> {
    pub links: SensingLinks<'a>,
    pub params: &'a SensingParams,
    pub symbols: &'a Symbols,
}

impl<'a> ScnrForms<'a> {
    pub fn new(links: SensingLinks<'a>, params: &'a SensingParams, symbols: &'a Symbols) -> Self {
        Self { links, params, symbols }
    }

    fn num_tx(&self) -> usize {
        self.links.h.len()
    }

    fn num_rx(&self) -> usize {
        self.links.b.len()
    }

    fn antennas(&self) -> usize {
        self.links.b.first().map_or(0, |b| b.len())
    }

    /// `R τ M (σ² + δ_z²)`.
    pub fn normalizer(&self) -> f64 {
        (self.num_rx() * self.symbols.slots() * self.antennas()) as f64 * (self.params.noise + self.params.clutter_power)
    }

    fn check(&self, pre: &PrecoderSet) -> Result<()> {
        let (t, r) = self.params.rcs_var.shape();
        if t != self.num_tx() || r != self.num_rx() {
            return Err(Error::Dimension(format!("RCS table is {t}×{r}")));
        }
        if pre.num_tx != self.num_tx() || pre.antennas != self.antennas() {
            return Err(Error::Dimension("precoders do not match the sensing links".into()));
        }
        if self.symbols.x.iter().any(|x| x.len() != pre.num_beams()) {
            return Err(Error::Dimension("symbol length differs from beam count".into()));
        }
        Ok(())
    }

    /// SCNR evaluated directly from the two-way channels.
    pub fn scnr_eval(&self, pre: &PrecoderSet, power: &PowerAllocation, theta: &CVec) -> Result<f64> {
        self.check(pre)?;
        let hs = self.links.cascaded(theta)?;
        let mut acc = 0.0;
        for x in &self.symbols.x {
            for (a, h) in hs.iter().enumerate() {
                let s = transmit_signal(pre, x, power, a);
                for (r, b) in self.links.b.iter().enumerate() {
                    let e = two_way(b, h)?;
                    acc += self.params.rcs_var[(a, r)] * (&e * &s).norm_squared();
                }
            }
        }
        Ok(acc / self.normalizer())
    }

    /// `A` such that SCNR = ρᵀRe(A)ρ for fixed `θ` and `F`.
    pub fn build_a(&self, pre: &PrecoderSet, theta: &CVec) -> Result<CMat> {
        self.check(pre)?;
        let l = pre.num_beams();
        let hs = self.links.cascaded(theta)?;
        let mut a_mat = CMat::zeros(l, l);
        for x in &self.symbols.x {
            let xd = CMat::from_diagonal(x);
            for (a, h) in hs.iter().enumerate() {
                let fx = pre.ap_matrix(a) * &xd;
                for (r, b) in self.links.b.iter().enumerate() {
                    let efx = two_way(b, h)? * &fx;
                    a_mat += efx.ad_mul(&efx) * C64::from(self.params.rcs_var[(a, r)]);
                }
            }
        }
        Ok(a_mat.unscale(self.normalizer()))
    }

    /// `Q` such that SCNR = θᴴQθ for fixed `ρ` and `F`.
    pub fn build_q(&self, pre: &PrecoderSet, power: &PowerAllocation) -> Result<CMat> {
        self.check(pre)?;
        let n = self.links.c.len();
        let cct = (self.links.c * self.links.c.adjoint()).transpose();
        let mut q = CMat::zeros(n, n);
        for x in &self.symbols.x {
            for (a, h_mat) in self.links.h.iter().enumerate() {
                let u = h_mat * transmit_signal(pre, x, power, a);
                let uu = &u * u.adjoint();
                let weight: f64 = self
                    .links
                    .b
                    .iter()
                    .enumerate()
                    .map(|(r, b)| self.params.rcs_var[(a, r)] * b.norm_squared())
                    .sum();
                q += cct.component_mul(&uu) * C64::from(weight);
            }
        }
        Ok(q.unscale(self.normalizer()))
    }
}

/// `vecᴴ(diag x)(A⊗B)vec(diag x)` and `xᴴ(A⊙B)x`.
pub fn diag_lift_quadratic_forms(x: &CVec, a: &CMat, b: &CMat) -> Result<(C64, C64)> {
    let n = x.len();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(Error::Dimension(format!("x has {n}, A is {:?}, B is {:?}", a.shape(), b.shape())));
    }
    let mut v = CVec::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = x[i];
    }
    let lhs = v.dotc(&(kron(a, b) * &v));
    let rhs = x.dotc(&(a.component_mul(b) * x));
    Ok((lhs, rhs))
}

/// `Q = Q⁺ + Q⁻` from the eigendecomposition.
#[derive(Debug, Clone)]
pub struct PsdSplit {
    pub plus: CMat,
    pub minus: CMat,
    /// Most negative eigenvalue assigned to `Q⁻` (0 when `Q⁻ = 0`).
    pub min_negative: f64,
}

impl PsdSplit {
    pub fn has_negative_part(&self) -> bool {
        self.min_negative < 0.0
    }

    /// Lower bound `2Re(θ₀ᴴQ⁺θ) + θᴴQ⁻θ − θ₀ᴴQ⁺θ₀`, tight at `θ = θ₀`.
    pub fn minorizer(&self, theta: &CVec, theta0: &CVec) -> f64 {
        let p0 = &self.plus * theta0;
        2.0 * p0.dotc(theta).re + theta.dotc(&(&self.minus * theta)).re - theta0.dotc(&p0).re
    }
}

/// Eigenvalues within `±1e-10·‖Q‖` count as non-negative.
pub fn psd_split(q: &CMat) -> PsdSplit {
    let n = q.nrows();
    let tol = 1e-10 * spectral_norm(q);
    let (vals, vecs) = hermitian_eigh_desc(q);
    let mut plus = CMat::zeros(n, n);
    let mut minus = CMat::zeros(n, n);
    let mut min_negative: f64 = 0.0;
    for (i, &lam) in vals.iter().enumerate() {
        let v = vecs.column(i);
        let p = &v * v.adjoint() * C64::from(lam);
        if lam >= -tol {
            plus += p;
        } else {
            minus += p;
            min_negative = min_negative.min(lam);
        }
    }
    PsdSplit { plus: (&plus + plus.adjoint()).scale(0.5), minus: (&minus + minus.adjoint()).scale(0.5), min_negative }
}
