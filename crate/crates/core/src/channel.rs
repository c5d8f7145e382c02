//! Clustered mmWave channel synthesis for every link in the network.
//!
//! Each channel is a LoS term plus `√(1/C) Σ α_n a(ω_n)` over `C` scattering
//! clusters, with `α_n ~ CN(0, β_n²)` and cluster angles uniform within a box
//! around the LoS direction. UE channels carry no LoS term.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::rng::{complex_normal, rng_for, stream, SimRng};
use crate::scenario::{
    local_angles, pathloss_umi, steering_vector, wrap_angle, AngleDirection, ScenarioConfig,
    ScenarioRealization,
};

/// Cluster counts and angular spreads for the four link classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    /// Target → receive AP clusters (C₁).
    pub c1: usize,
    /// RIS → target clusters (C₂).
    pub c2: usize,
    /// Transmit AP → UE clusters (C₃).
    pub c3: usize,
    /// Transmit AP → RIS clusters (C₄).
    pub c4: usize,
    pub spread_az_deg: f64,
    pub spread_el_deg: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { c1: 2, c2: 2, c3: 2, c4: 2, spread_az_deg: 10.0, spread_el_deg: 10.0 }
    }
}

impl ClusterConfig {
    pub fn los_only() -> Self {
        Self { c1: 0, c2: 0, c3: 0, c4: 0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spread_az_deg >= 0.0 && self.spread_el_deg >= 0.0) {
            return Err(Error::InvalidConfig("angular spreads must be non-negative".into()));
        }
        Ok(())
    }
}

/// Cluster angles uniform in `[center ± spread]` per coordinate.
pub fn sample_cluster_angles<R: Rng + ?Sized>(
    rng: &mut R,
    center: &AngleDirection,
    spread_az: f64,
    spread_el: f64,
    count: usize,
) -> Vec<AngleDirection> {
    let draw = |rng: &mut R, s: f64| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
    (0..count)
        .map(|_| {
            let daz = draw(rng, spread_az);
            let del = draw(rng, spread_el);
            AngleDirection::new(wrap_angle(center.azimuth + daz), center.elevation + del)
        })
        .collect()
}

/// All channels of one coherence block, with their LoS parts kept separately.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// `b_r`, target → receive AP `r` (length M).
    pub b: Vec<CVec>,
    pub b_los: Vec<CVec>,
    /// `c`, RIS → target (length N).
    pub c: CVec,
    pub c_los: CVec,
    /// `g[k][t]`, transmit AP `t` → UE `k` (length M, NLoS only).
    pub g: Vec<Vec<CVec>>,
    /// `H_t`, transmit AP `t` → RIS (N×M).
    pub h: Vec<CMat>,
    pub h_los: Vec<CMat>,
    /// LoS gains β²₀,r, β²₀ and β²₀,t.
    pub gain_rx: Vec<f64>,
    pub gain_tg: f64,
    pub gain_tx: Vec<f64>,
}

impl ChannelSet {
    pub fn num_tx(&self) -> usize {
        self.h.len()
    }

    pub fn num_rx(&self) -> usize {
        self.b.len()
    }

    pub fn num_ue(&self) -> usize {
        self.g.len()
    }

    pub fn antennas(&self) -> usize {
        self.b.first().map_or(0, |v| v.len())
    }

    pub fn ris_elements(&self) -> usize {
        self.c.len()
    }

    /// Stacked UE channel `g_k = [g_k,1; …; g_k,T]` (length MT).
    pub fn stacked_ue(&self, k: usize) -> CVec {
        crate::linalg::vstack(&self.g[k])
    }

    /// `G = [g_1 … g_K]` (MT×K).
    pub fn ue_matrix(&self) -> CMat {
        let cols: Vec<CVec> = (0..self.num_ue()).map(|k| self.stacked_ue(k)).collect();
        CMat::from_columns(&cols)
    }

    /// Sensing links as seen by the optimizer and detector (LoS parts only).
    pub fn sensing_los(&self) -> SensingLinks<'_> {
        SensingLinks { b: &self.b_los, c: &self.c_los, h: &self.h_los }
    }

    /// Sensing links as they physically are (LoS + clusters).
    pub fn sensing_true(&self) -> SensingLinks<'_> {
        SensingLinks { b: &self.b, c: &self.c, h: &self.h }
    }

    /// Dumps every channel coefficient as `name,i,j,re,im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "name,i,j,re,im")?;
        let vec_rows = |f: &mut dyn Write, name: &str, idx: usize, v: &CVec| -> std::io::Result<()> {
            for (j, z) in v.iter().enumerate() {
                writeln!(f, "{name},{idx},{j},{:.17e},{:.17e}", z.re, z.im)?;
            }
            Ok(())
        };
        for (r, v) in self.b.iter().enumerate() {
            vec_rows(&mut f, "b", r, v)?;
        }
        vec_rows(&mut f, "c", 0, &self.c)?;
        for (k, row) in self.g.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                vec_rows(&mut f, "g", k * self.num_tx() + t, v)?;
            }
        }
        for (t, m) in self.h.iter().enumerate() {
            let flat = CVec::from_column_slice(m.as_slice());
            vec_rows(&mut f, "H", t, &flat)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Borrowed view of the three sensing channels (`b_r`, `c`, `H_t`).
#[derive(Debug, Clone, Copy)]
pub struct SensingLinks<'a> {
    pub b: &'a [CVec],
    pub c: &'a CVec,
    pub h: &'a [CMat],
}

impl SensingLinks<'_> {
    /// `h_t = H_tᴴ Θ c` for every transmit AP.
    pub fn cascaded(&self, theta: &CVec) -> Result<Vec<CVec>> {
        self.h.iter().map(|h| cascaded_channel(h, theta, self.c)).collect()
    }
}

/// `h_t = H_tᴴ diag(θ) c`.
pub fn cascaded_channel(h_t: &CMat, theta: &CVec, c: &CVec) -> Result<CVec> {
    if h_t.nrows() != theta.len() || theta.len() != c.len() {
        return Err(Error::Dimension(format!(
            "H is {}×{}, θ has {}, c has {}",
            h_t.nrows(),
            h_t.ncols(),
            theta.len(),
            c.len()
        )));
    }
    let theta_c = theta.component_mul(c);
    Ok(h_t.ad_mul(&theta_c))
}

/// Two-way channel `E_{t,r} = b_r h_tᴴ`.
pub fn two_way(b_r: &CVec, h_t: &CVec) -> Result<CMat> {
    if b_r.len() != h_t.len() {
        return Err(Error::Dimension(format!("b has {}, h has {}", b_r.len(), h_t.len())));
    }
    Ok(b_r * h_t.adjoint())
}

fn nlos_vector(
    rng: &mut SimRng,
    center: &AngleDirection,
    spreads: (f64, f64),
    count: usize,
    variance: f64,
    len: usize,
) -> Result<CVec> {
    let mut acc = CVec::zeros(len);
    if count == 0 {
        return Ok(acc);
    }
    let angles = sample_cluster_angles(rng, center, spreads.0, spreads.1, count);
    let scale = (1.0 / count as f64).sqrt();
    for w in &angles {
        let alpha = complex_normal(rng, variance);
        acc += steering_vector(w, len)? * (alpha * scale);
    }
    Ok(acc)
}

pub fn synthesize_channels(
    scen: &ScenarioRealization,
    cfg: &ScenarioConfig,
    clusters: &ClusterConfig,
    seed: u64,
) -> Result<ChannelSet> {
    cfg.validate()?;
    clusters.validate()?;
    let (m, n, fc) = (cfg.antennas, cfg.ris_elements, cfg.carrier_hz);
    let spreads = (clusters.spread_az_deg.to_radians(), clusters.spread_el_deg.to_radians());
    let mut rng = rng_for(seed, &[stream::CHANNEL]);

    let ris_facing = scen.facing(&scen.ris);

    // target → receive APs
    let mut b = Vec::with_capacity(scen.rx.len());
    let mut b_los = Vec::with_capacity(scen.rx.len());
    let mut gain_rx = Vec::with_capacity(scen.rx.len());
    for rx in &scen.rx {
        let w0 = local_angles(rx, &scen.target, scen.facing(rx))?;
        let d = rx.distance(&scen.target);
        let g0 = pathloss_umi(d, true, fc)?;
        let los = steering_vector(&w0, m)? * C64::from(g0.sqrt());
        let nlos = nlos_vector(&mut rng, &w0, spreads, clusters.c1, pathloss_umi(d, false, fc)?, m)?;
        b.push(&los + nlos);
        b_los.push(los);
        gain_rx.push(g0);
    }

    // RIS → target
    let w0 = local_angles(&scen.ris, &scen.target, ris_facing)?;
    let d = scen.ris.distance(&scen.target);
    let gain_tg = pathloss_umi(d, true, fc)?;
    let c_los = steering_vector(&w0, n)? * C64::from(gain_tg.sqrt());
    let c = &c_los + nlos_vector(&mut rng, &w0, spreads, clusters.c2, pathloss_umi(d, false, fc)?, n)?;

    // transmit APs → UEs
    let mut g = vec![Vec::with_capacity(scen.tx.len()); scen.ue.len()];
    for (k, ue) in scen.ue.iter().enumerate() {
        for tx in &scen.tx {
            let w0 = local_angles(tx, ue, scen.facing(tx))?;
            let var = pathloss_umi(tx.distance(ue), false, fc)?;
            g[k].push(nlos_vector(&mut rng, &w0, spreads, clusters.c3, var, m)?);
        }
    }

    // transmit APs → RIS
    let mut h = Vec::with_capacity(scen.tx.len());
    let mut h_los = Vec::with_capacity(scen.tx.len());
    let mut gain_tx = Vec::with_capacity(scen.tx.len());
    for tx in &scen.tx {
        let w_ris = local_angles(&scen.ris, tx, ris_facing)?;
        let w_tx = local_angles(tx, &scen.ris, scen.facing(tx))?;
        let d = tx.distance(&scen.ris);
        let g0 = pathloss_umi(d, true, fc)?;
        let los = steering_vector(&w_ris, n)? * steering_vector(&w_tx, m)?.transpose() * C64::from(g0.sqrt());
        let mut nlos = CMat::zeros(n, m);
        if clusters.c4 > 0 {
            let var = pathloss_umi(d, false, fc)?;
            let ris_side = sample_cluster_angles(&mut rng, &w_ris, spreads.0, spreads.1, clusters.c4);
            let tx_side = sample_cluster_angles(&mut rng, &w_tx, spreads.0, spreads.1, clusters.c4);
            let scale = (1.0 / clusters.c4 as f64).sqrt();
            for (wr, wt) in ris_side.iter().zip(&tx_side) {
                let alpha = complex_normal(&mut rng, var);
                nlos += steering_vector(wr, n)? * steering_vector(wt, m)?.transpose() * (alpha * scale);
            }
        }
        h.push(&los + nlos);
        h_los.push(los);
        gain_tx.push(g0);
    }

    Ok(ChannelSet { b, b_los, c, c_los, g, h, h_los, gain_rx, gain_tg, gain_tx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::sample_scenario;

    fn desk_channels(clusters: &ClusterConfig, seed: u64) -> (ScenarioRealization, ChannelSet) {
        let cfg = ScenarioConfig::desk();
        let scen = sample_scenario(&cfg, seed).unwrap();
        let ch = synthesize_channels(&scen, &cfg, clusters, seed).unwrap();
        (scen, ch)
    }

    #[test]
    fn zero_spread_returns_center() {
        let mut rng = rng_for(3, &[]);
        let c = AngleDirection::new(0.3, -0.2);
        let v = sample_cluster_angles(&mut rng, &c, 0.0, 0.0, 5);
        assert!(v.iter().all(|w| *w == c));
    }

    #[test]
    fn cluster_angles_within_ten_degrees() {
        let mut rng = rng_for(4, &[]);
        let c = AngleDirection::new(0.1, 0.05);
        let s = 10f64.to_radians();
        for w in sample_cluster_angles(&mut rng, &c, s, s, 2) {
            assert!((w.azimuth - c.azimuth).abs() <= s + 1e-15);
            assert!((w.elevation - c.elevation).abs() <= s + 1e-15);
        }
    }

    /// Kolmogorov–Smirnov statistic of samples against U[lo, hi].
    fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, x)| {
                let f = (x - lo) / (hi - lo);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn cluster_angles_pass_ks_uniformity() {
        let mut rng = rng_for(5, &[]);
        let c = AngleDirection::new(0.2, 0.1);
        let s = 10f64.to_radians();
        let draws = sample_cluster_angles(&mut rng, &c, s, s, 100_000);
        let az: Vec<f64> = draws.iter().map(|w| w.azimuth).collect();
        let el: Vec<f64> = draws.iter().map(|w| w.elevation).collect();
        // 1% critical value ≈ 1.628/√n
        let crit = 1.628 / (100_000f64).sqrt();
        assert!(ks_uniform(az, c.azimuth - s, c.azimuth + s) < crit);
        assert!(ks_uniform(el, c.elevation - s, c.elevation + s) < crit);
    }

    #[test]
    fn los_only_limit() {
        let (_, ch) = desk_channels(&ClusterConfig::los_only(), 9);
        assert!(ch.b.iter().zip(&ch.b_los).all(|(a, b)| a == b));
        assert_eq!(ch.c, ch.c_los);
        assert!(ch.h.iter().zip(&ch.h_los).all(|(a, b)| a == b));
        assert!(ch.g.iter().flatten().all(|g| g.iter().all(|z| *z == C64::new(0.0, 0.0))));
    }

    #[test]
    fn los_parts_are_gain_scaled_steering_terms() {
        let cfg = ScenarioConfig::desk();
        let (scen, ch) = desk_channels(&ClusterConfig::default(), 10);
        for (r, rx) in scen.rx.iter().enumerate() {
            let w = local_angles(rx, &scen.target, scen.facing(rx)).unwrap();
            let a = steering_vector(&w, cfg.antennas).unwrap() * C64::from(ch.gain_rx[r].sqrt());
            assert_eq!(a, ch.b_los[r]);
        }
        // rank-one LoS dyad
        for h in &ch.h_los {
            let sv = h.clone().svd(false, false).singular_values;
            assert!(sv[1] < 1e-12 * sv[0]);
        }
    }

    #[test]
    fn nlos_second_moment_matches_cluster_power() {
        // E‖b − b̄‖² = M·(1/C)Σβ_n² = M·β²_NLoS
        let cfg = ScenarioConfig::desk();
        let scen = sample_scenario(&cfg, 1).unwrap();
        let clusters = ClusterConfig::default();
        let d = scen.rx[0].distance(&scen.target);
        let beta = pathloss_umi(d, false, cfg.carrier_hz).unwrap();
        let trials = 10_000;
        let mut acc = 0.0;
        for s in 0..trials {
            let ch = synthesize_channels(&scen, &cfg, &clusters, 1000 + s).unwrap();
            acc += (&ch.b[0] - &ch.b_los[0]).norm_squared();
        }
        let emp = acc / trials as f64;
        let expect = cfg.antennas as f64 * beta;
        assert!((emp / expect - 1.0).abs() < 0.03, "{emp} vs {expect}");
    }

    #[test]
    fn cluster_gains_uncorrelated() {
        let mut rng = rng_for(12, &[]);
        let n = 20_000;
        let mut cross = C64::new(0.0, 0.0);
        for _ in 0..n {
            let a = complex_normal(&mut rng, 1.0);
            let b = complex_normal(&mut rng, 1.0);
            cross += a * b.conj();
        }
        assert!((cross / n as f64).norm() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn cascaded_and_two_way() {
        let (_, ch) = desk_channels(&ClusterConfig::default(), 13);
        let theta = CVec::from_element(ch.ris_elements(), C64::new(1.0, 0.0));
        let h = cascaded_channel(&ch.h[0], &theta, &ch.c).unwrap();
        assert_eq!(h.len(), ch.antennas());
        let e = two_way(&ch.b[0], &h).unwrap();
        let sv = e.clone().svd(false, false).singular_values;
        let mut s: Vec<f64> = sv.iter().cloned().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[1] < 1e-12 * s[0]);
        let fro = e.norm();
        assert!((fro - ch.b[0].norm() * h.norm()).abs() <= 1e-12 * fro);
        assert!(cascaded_channel(&ch.h[0], &CVec::zeros(3), &ch.c).is_err());
    }

    #[test]
    fn single_element_cascade_is_scalar_reduction() {
        let h = CMat::from_row_slice(1, 4, &[C64::new(1.0, 1.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.0), C64::new(0.5, 0.0)]);
        let c = CVec::from_element(1, C64::new(2.0, -1.0));
        let theta = CVec::from_element(1, C64::new(1.0, 0.0));
        let out = cascaded_channel(&h, &theta, &c).unwrap();
        for j in 0..4 {
            assert!((out[j] - h[(0, j)].conj() * c[0]).norm() < 1e-15);
        }
    }

    #[test]
    fn csv_dump_has_every_coefficient() {
        let (_, ch) = desk_channels(&ClusterConfig::default(), 14);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ch.csv");
        ch.write_csv(&p).unwrap();
        let lines = std::fs::read_to_string(&p).unwrap().lines().count();
        let m = ch.antennas();
        let n = ch.ris_elements();
        let expect = 1 + ch.num_rx() * m + n + ch.num_ue() * ch.num_tx() * m + ch.num_tx() * n * m;
        assert_eq!(lines, expect);
    }
}
