//! Local-scattering clutter covariance, its dominant subspace, and sampling.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigh_desc, CMat, CVec, C64};
use crate::rng::complex_normal_vec;
use crate::scenario::{local_angles, steering_vector, AngleDirection, ScenarioRealization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClutterConfig {
    /// Fraction of `tr(R_r)` the clutter subspace must capture.
    pub energy_fraction: f64,
    /// Standard deviation of the Gaussian angular density of each cluster.
    pub spread_deg: f64,
    /// Cluster centers are all pairs of these offsets from the target direction.
    pub azimuth_offsets_deg: Vec<f64>,
    pub elevation_offsets_deg: Vec<f64>,
    /// Gauss–Hermite nodes per angular dimension.
    pub quadrature_nodes: usize,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            energy_fraction: 0.99,
            spread_deg: 5.0,
            azimuth_offsets_deg: vec![-20.0, 20.0],
            elevation_offsets_deg: vec![-10.0, 0.0, 10.0],
            quadrature_nodes: 24,
        }
    }
}

impl ClutterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.energy_fraction > 0.0 && self.energy_fraction <= 1.0) {
            return Err(Error::InvalidConfig("energy_fraction must lie in (0, 1]".into()));
        }
        if !(self.spread_deg >= 0.0) || self.quadrature_nodes == 0 {
            return Err(Error::InvalidConfig("clutter spread and node count must be valid".into()));
        }
        if self.azimuth_offsets_deg.is_empty() || self.elevation_offsets_deg.is_empty() {
            return Err(Error::InvalidConfig("at least one clutter cluster is required".into()));
        }
        Ok(())
    }

    pub fn cluster_offsets(&self) -> Vec<(f64, f64)> {
        self.azimuth_offsets_deg
            .iter()
            .flat_map(|a| self.elevation_offsets_deg.iter().map(move |e| (a.to_radians(), e.to_radians())))
            .collect()
    }
}

/// Nodes and weights for `E[f(X)]`, `X ~ N(0, 1)` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::<f64>::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `R = M · Σ_c E[a(ω)a(ω)ᴴ] / tr(·)` with Gaussian angles around each cluster center.
pub fn local_scattering_covariance(
    center: &AngleDirection,
    offsets: &[(f64, f64)],
    spread: f64,
    m: usize,
    nodes: usize,
) -> Result<CMat> {
    let (x, w) = if spread > 0.0 { gauss_hermite(nodes) } else { (vec![0.0], vec![1.0]) };
    let mut r = CMat::zeros(m, m);
    for (da, de) in offsets {
        for (xa, wa) in x.iter().zip(&w) {
            for (xe, we) in x.iter().zip(&w) {
                let dir = AngleDirection::new(center.azimuth + da + spread * xa, center.elevation + de + spread * xe);
                let a = steering_vector(&dir, m)?;
                r += (&a * a.adjoint()) * C64::from(wa * we);
            }
        }
    }
    let tr = r.trace().re;
    Ok(r * C64::from(m as f64 / tr))
}

/// Top eigenvectors capturing `energy_fraction` of the trace, capped at the numerical rank.
pub fn clutter_subspace(r: &CMat, energy_fraction: f64) -> (CMat, Vec<f64>) {
    let (vals, vecs) = hermitian_eigh_desc(r);
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let rank = vals.iter().filter(|v| **v > 1e-10 * lmax).count();
    let mut cum = 0.0;
    let mut dim = 0;
    for v in vals.iter() {
        if cum >= energy_fraction * total * (1.0 - 1e-12) {
            break;
        }
        cum += v.max(0.0);
        dim += 1;
    }
    let dim = dim.min(rank);
    (vecs.columns(0, dim).into_owned(), vals.iter().take(dim).cloned().collect())
}

/// Per-receive-AP clutter statistics.
#[derive(Debug, Clone)]
pub struct ClutterModel {
    pub covariance: Vec<CMat>,
    pub basis: Vec<CMat>,
    /// `√δ_z² · V √Λ` restricted to non-negligible eigenvalues.
    factors: Vec<CMat>,
    pub clutter_power: f64,
}

impl ClutterModel {
    pub fn from_covariances(covariance: Vec<CMat>, energy_fraction: f64, clutter_power: f64) -> Self {
        let mut basis = Vec::new();
        let mut factors = Vec::new();
        for r in &covariance {
            basis.push(clutter_subspace(r, energy_fraction).0);
            let (vals, vecs) = hermitian_eigh_desc(r);
            let lmax = vals.iter().cloned().fold(0.0, f64::max);
            let keep = vals.iter().filter(|v| **v > 1e-14 * lmax).count();
            let mut f = vecs.columns(0, keep).into_owned();
            for (j, mut col) in f.column_iter_mut().enumerate() {
                col *= C64::from((vals[j] * clutter_power).sqrt());
            }
            factors.push(f);
        }
        Self { covariance, basis, factors, clutter_power }
    }

    /// Clutter around the target direction seen from each receive AP.
    pub fn for_scenario(scen: &ScenarioRealization, cfg: &ClutterConfig, m: usize, clutter_power: f64) -> Result<Self> {
        cfg.validate()?;
        let offsets = cfg.cluster_offsets();
        let cov = scen
            .rx
            .iter()
            .map(|rx| {
                let center = local_angles(rx, &scen.target, scen.facing(rx))?;
                local_scattering_covariance(&center, &offsets, cfg.spread_deg.to_radians(), m, cfg.quadrature_nodes)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_covariances(cov, cfg.energy_fraction, clutter_power))
    }

    /// No clutter at all: zero power and an empty subspace.
    pub fn none(num_rx: usize, m: usize) -> Self {
        Self {
            covariance: vec![CMat::zeros(m, m); num_rx],
            basis: vec![CMat::zeros(m, 0); num_rx],
            factors: vec![CMat::zeros(m, 0); num_rx],
            clutter_power: 0.0,
        }
    }

    pub fn num_rx(&self) -> usize {
        self.covariance.len()
    }

    pub fn subspace_dims(&self) -> Vec<usize> {
        self.basis.iter().map(|u| u.ncols()).collect()
    }

    /// One draw of `z_r ~ CN(0, δ_z² R_r)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, r: usize) -> CVec {
        let f = &self.factors[r];
        if f.ncols() == 0 {
            return CVec::zeros(f.nrows());
        }
        f * complex_normal_vec(rng, f.ncols(), 1.0)
    }
}
