//! Network geometry, array steering vectors and UMi path loss.
//!
//! Angle convention: azimuth `ψ = atan2(Δy, Δx)` and elevation
//! `φ = atan2(Δz, √(Δx²+Δy²))` in a frame whose broadside is `+x`. Every AP
//! and the RIS face the centroid of the deployment (in the horizontal plane),
//! so link angles are taken relative to that facing direction.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CVec};
use crate::rng::{rng_for, stream};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// Direction `ω = [ψ, φ]` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleDirection {
    pub azimuth: f64,
    pub elevation: f64,
}

impl AngleDirection {
    pub const fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    pub fn from_degrees(az: f64, el: f64) -> Self {
        Self::new(az.to_radians(), el.to_radians())
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let y = a.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Axis-aligned rectangle in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x: [x0, x1], y: [y0, y1] }
    }

    fn is_valid(&self) -> bool {
        self.x[0].is_finite()
            && self.x[1].is_finite()
            && self.y[0].is_finite()
            && self.y[1].is_finite()
            && self.x[0] <= self.x[1]
            && self.y[0] <= self.y[1]
    }

    pub fn contains(&self, p: &Position3D) -> bool {
        p.x >= self.x[0] && p.x <= self.x[1] && p.y >= self.y[0] && p.y <= self.y[1]
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, z: f64) -> Position3D {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        Position3D::new(
            self.x[0] + u * (self.x[1] - self.x[0]),
            self.y[0] + v * (self.y[1] - self.y[0]),
            z,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_ue: usize,
    /// Antennas per AP; must be a perfect square.
    pub antennas: usize,
    pub ris_elements: usize,
    /// Coherence slots τ used for sensing.
    pub slots: usize,
    pub tx_box: Rect,
    pub ue_box: Rect,
    pub rx_box: Rect,
    pub tx_height: f64,
    pub rx_height: f64,
    pub ue_height: f64,
    pub ris_position: Position3D,
    pub target_position: Position3D,
    pub ap_power_dbw: f64,
    pub bandwidth_hz: f64,
    pub ue_noise_dbw: f64,
    pub sensing_noise_dbw: f64,
    pub sinr_target_db: f64,
    pub carrier_hz: f64,
}

impl ScenarioConfig {
    /// The full-size deployment: five transmit APs, two receive APs, 6×6
    /// arrays, five UEs and a 64-element RIS.
    pub fn paper() -> Self {
        let bandwidth_hz: f64 = 1e6;
        let noise = -204.0 + 10.0 * bandwidth_hz.log10();
        Self {
            num_tx: 5,
            num_rx: 2,
            num_ue: 5,
            antennas: 36,
            ris_elements: 64,
            slots: 5,
            tx_box: Rect::new(0.0, 50.0, 5.0, 30.0),
            ue_box: Rect::new(55.0, 65.0, 0.0, 5.0),
            rx_box: Rect::new(110.0, 140.0, 10.0, 20.0),
            tx_height: 10.0,
            rx_height: 10.0,
            ue_height: 1.0,
            ris_position: Position3D::new(80.0, 30.0, 15.0),
            target_position: Position3D::new(100.0, 13.0, 3.0),
            ap_power_dbw: 2.0,
            bandwidth_hz,
            ue_noise_dbw: noise,
            sensing_noise_dbw: noise,
            sinr_target_db: 3.0,
            carrier_hz: 28e9,
        }
    }

    /// Reduced arrays (4×4 APs, 16-element RIS) for quick runs.
    pub fn desk() -> Self {
        Self {
            antennas: 16,
            ris_elements: 16,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_tx == 0 || self.num_rx == 0 || self.num_ue == 0 {
            return bad("T, R and K must be at least 1");
        }
        if self.ris_elements == 0 || self.slots == 0 {
            return bad("N and τ must be at least 1");
        }
        if array_side(self.antennas).is_none() {
            return Err(Error::NonSquareArray(self.antennas));
        }
        for (name, r) in [("tx_box", &self.tx_box), ("ue_box", &self.ue_box), ("rx_box", &self.rx_box)] {
            if !r.is_valid() {
                return bad(&format!("{name} is empty or malformed"));
            }
        }
        for h in [self.tx_height, self.rx_height, self.ue_height, self.ris_position.z, self.target_position.z] {
            if !(h >= 0.0) {
                return bad("heights must be non-negative");
            }
        }
        if !self.ap_power_dbw.is_finite() {
            return bad("power budget must be finite");
        }
        if !self.sinr_target_db.is_finite() {
            return bad("SINR target must be finite");
        }
        if !(self.carrier_hz > 0.0) {
            return bad("carrier must be positive");
        }
        Ok(())
    }

    pub fn ap_power_w(&self) -> f64 {
        crate::linalg::db_to_lin(self.ap_power_dbw)
    }

    pub fn ue_noise_w(&self) -> f64 {
        crate::linalg::db_to_lin(self.ue_noise_dbw)
    }

    pub fn sensing_noise_w(&self) -> f64 {
        crate::linalg::db_to_lin(self.sensing_noise_dbw)
    }

    pub fn sinr_target(&self) -> f64 {
        crate::linalg::db_to_lin(self.sinr_target_db)
    }
}

/// Positions of every node for one random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRealization {
    pub tx: Vec<Position3D>,
    pub rx: Vec<Position3D>,
    pub ue: Vec<Position3D>,
    pub ris: Position3D,
    pub target: Position3D,
}

impl ScenarioRealization {
    /// Horizontal centroid of all nodes; arrays face this point.
    pub fn centroid(&self) -> (f64, f64) {
        let pts: Vec<&Position3D> = self
            .tx
            .iter()
            .chain(&self.rx)
            .chain(&self.ue)
            .chain([&self.ris, &self.target])
            .collect();
        let n = pts.len() as f64;
        (
            pts.iter().map(|p| p.x).sum::<f64>() / n,
            pts.iter().map(|p| p.y).sum::<f64>() / n,
        )
    }

    /// Azimuth of the broadside of an array located at `p`.
    pub fn facing(&self, p: &Position3D) -> f64 {
        let (cx, cy) = self.centroid();
        let (dx, dy) = (cx - p.x, cy - p.y);
        if dx == 0.0 && dy == 0.0 {
            0.0
        } else {
            dy.atan2(dx)
        }
    }
}

pub fn sample_scenario(config: &ScenarioConfig, seed: u64) -> Result<ScenarioRealization> {
    config.validate()?;
    let mut rng = rng_for(seed, &[stream::SCENARIO]);
    let tx = (0..config.num_tx).map(|_| config.tx_box.sample(&mut rng, config.tx_height)).collect();
    let rx = (0..config.num_rx).map(|_| config.rx_box.sample(&mut rng, config.rx_height)).collect();
    let ue = (0..config.num_ue).map(|_| config.ue_box.sample(&mut rng, config.ue_height)).collect();
    Ok(ScenarioRealization {
        tx,
        rx,
        ue,
        ris: config.ris_position,
        target: config.target_position,
    })
}

/// Global-frame direction from `from` towards `to`.
pub fn los_angles(from: &Position3D, to: &Position3D) -> Result<AngleDirection> {
    let (dx, dy, dz) = (to.x - from.x, to.y - from.y, to.z - from.z);
    if dx == 0.0 && dy == 0.0 && dz == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let horiz = dx.hypot(dy);
    let azimuth = if horiz == 0.0 { 0.0 } else { dy.atan2(dx) };
    Ok(AngleDirection::new(azimuth, dz.atan2(horiz)))
}

/// Direction from `from` to `to` expressed in the frame of an array whose
/// broadside points at azimuth `facing`.
pub fn local_angles(from: &Position3D, to: &Position3D, facing: f64) -> Result<AngleDirection> {
    let g = los_angles(from, to)?;
    Ok(AngleDirection::new(wrap_angle(g.azimuth - facing), g.elevation))
}

/// Side length of a square array, if `m` is a perfect square.
pub fn array_side(m: usize) -> Option<usize> {
    if m == 0 {
        return None;
    }
    let s = (m as f64).sqrt().round() as usize;
    (s * s == m).then_some(s)
}

/// Half-wavelength uniform planar array response.
///
/// Entry `m_h + √M·m_v` equals `exp(−jπ(m_h sinψ cosφ + m_v sinφ))`
/// (column-major over `(m_h, m_v)`).
pub fn steering_vector(w: &AngleDirection, m: usize) -> Result<CVec> {
    let side = array_side(m).ok_or(Error::NonSquareArray(m))?;
    let u = w.azimuth.sin() * w.elevation.cos();
    let v = w.elevation.sin();
    Ok(CVec::from_fn(m, |idx, _| {
        let mh = (idx % side) as f64;
        let mv = (idx / side) as f64;
        cis(-PI * (mh * u + mv * v))
    }))
}

/// 3GPP UMi street-canyon path loss as a linear power gain.
///
/// LoS uses `32.4 + 21 log10(d) + 20 log10(f_GHz)` (below the breakpoint,
/// which lies beyond a kilometre at mmWave for AP heights used here); NLoS
/// uses `max(PL_LoS, 22.4 + 35.3 log10(d) + 21.3 log10(f_GHz))` with a 1.5 m
/// terminal height.
pub fn pathloss_umi(distance: f64, is_los: bool, carrier_hz: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::NonPositiveDistance(distance));
    }
    let f_ghz = carrier_hz / 1e9;
    let los = 32.4 + 21.0 * distance.log10() + 20.0 * f_ghz.log10();
    let pl = if is_los {
        los
    } else {
        let nlos = 22.4 + 35.3 * distance.log10() + 21.3 * f_ghz.log10();
        los.max(nlos)
    };
    Ok(10f64.powf(-pl / 10.0))
}

/// Wavelength at the configured carrier.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}
