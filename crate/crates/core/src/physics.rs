//! Free-space link-budget engine.
//!
//! Path loss follows the Friis free-space form, noise is thermal `kTB`, and
//! every UAV transmits on the same carrier so non-serving UAVs interfere.
//! Users associate to the strongest received UAV and are covered when the
//! 3D distance to it is within that UAV's communication range. Covered users
//! of one UAV split its bandwidth equally.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;
use thiserror::Error;

use crate::rng::SplitMix64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

pub const DEFAULT_CARRIER_HZ: f64 = 2.4e9;
pub const DEFAULT_BANDWIDTH_HZ: f64 = 2.0e7;
pub const DEFAULT_TEMPERATURE_K: f64 = 290.0;
pub const DEFAULT_ALTITUDE_M: f64 = 100.0;
pub const DEFAULT_MAX_TX_POWER_DBM: f64 = 20.0;
pub const DEFAULT_AREA_M: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("domain error: {0}")]
    Domain(String),
}

fn domain(msg: impl Into<String>) -> PhysicsError {
    PhysicsError::Domain(msg.into())
}

pub type Result<T> = std::result::Result<T, PhysicsError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTerminal {
    pub id: u32,
    pub position: Position3D,
}

/// A UAV slot. `tx_power_dbm = -inf` models a switched-off transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavNode {
    pub id: u32,
    pub position: Position3D,
    pub tx_power_dbm: f64,
    pub comm_range_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub temperature_k: f64,
    pub boltzmann_j_per_k: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_freq_hz: DEFAULT_CARRIER_HZ,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            temperature_k: DEFAULT_TEMPERATURE_K,
            boltzmann_j_per_k: BOLTZMANN,
        }
    }
}

impl ChannelParams {
    pub fn noise_power_dbm(&self) -> Result<f64> {
        noise_power_dbm(self.bandwidth_hz, self.temperature_k, self.boltzmann_j_per_k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Default for Area {
    fn default() -> Self {
        Self { width: DEFAULT_AREA_M, height: DEFAULT_AREA_M }
    }
}

impl Area {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width / 2.0, self.height / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub area_m: Area,
    pub users: Vec<UserTerminal>,
    pub uavs: Vec<UavNode>,
    pub channel: ChannelParams,
    pub max_tx_power_dbm: f64,
}

impl NetworkScenario {
    /// One UAV at the area center, default channel, 100 m altitude, 20 dBm.
    pub fn single_uav(users: Vec<UserTerminal>, comm_range_m: f64) -> Self {
        let area = Area::default();
        let (cx, cy) = area.center();
        Self {
            area_m: area,
            users,
            uavs: vec![UavNode {
                id: 0,
                position: Position3D::new(cx, cy, DEFAULT_ALTITUDE_M),
                tx_power_dbm: DEFAULT_MAX_TX_POWER_DBM,
                comm_range_m,
            }],
            channel: ChannelParams::default(),
            max_tx_power_dbm: DEFAULT_MAX_TX_POWER_DBM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.area_m;
        if !(a.width > 0.0 && a.height > 0.0 && a.width.is_finite() && a.height.is_finite()) {
            return Err(domain("area dimensions must be positive and finite"));
        }
        let c = &self.channel;
        for (name, v) in [
            ("carrier_freq_hz", c.carrier_freq_hz),
            ("bandwidth_hz", c.bandwidth_hz),
            ("temperature_k", c.temperature_k),
            ("boltzmann_j_per_k", c.boltzmann_j_per_k),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("channel.{name} must be positive and finite")));
            }
        }
        if !self.max_tx_power_dbm.is_finite() {
            return Err(domain("max_tx_power_dbm must be finite"));
        }
        if self.users.is_empty() {
            return Err(domain("scenario has no users"));
        }
        if self.uavs.is_empty() {
            return Err(domain("scenario has no UAV slots"));
        }
        let mut ids = HashSet::new();
        for u in &self.users {
            if !ids.insert(u.id) {
                return Err(domain(format!("duplicate user id {}", u.id)));
            }
            if !u.position.is_finite() || u.position.z != 0.0 {
                return Err(domain(format!("user {} must have finite coordinates and z = 0", u.id)));
            }
            if !a.contains(u.position.x, u.position.y) {
                return Err(domain(format!("user {} lies outside the area", u.id)));
            }
        }
        let mut ids = HashSet::new();
        for v in &self.uavs {
            if !ids.insert(v.id) {
                return Err(domain(format!("duplicate UAV id {}", v.id)));
            }
            if !v.position.is_finite() || v.position.z <= 0.0 {
                return Err(domain(format!("UAV {} must have finite coordinates and z > 0", v.id)));
            }
            if v.tx_power_dbm.is_nan() || v.tx_power_dbm > self.max_tx_power_dbm {
                return Err(domain(format!("UAV {} transmit power exceeds the cap", v.id)));
            }
            if !(v.comm_range_m >= 0.0) {
                return Err(domain(format!("UAV {} communication range must be non-negative", v.id)));
            }
        }
        Ok(())
    }

    /// Altitude of the first UAV slot, used as the deployment altitude.
    pub fn altitude_m(&self) -> f64 {
        self.uavs.first().map_or(DEFAULT_ALTITUDE_M, |u| u.position.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub coverage_ratio: f64,
    pub sum_rate_bps: f64,
    pub per_user_rate_bps: Vec<f64>,
    pub per_user_sinr_db: Vec<f64>,
    pub covered_flags: Vec<bool>,
    /// Index into `scenario.uavs` of each user's serving UAV.
    pub serving_uav: Vec<usize>,
    pub allocated_bandwidth_hz: Vec<f64>,
}

pub fn fspl_db(distance_m: f64, freq_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !(freq_hz > 0.0) {
        return Err(domain(format!(
            "fspl needs positive distance and frequency, got {distance_m} m, {freq_hz} Hz"
        )));
    }
    Ok(20.0 * distance_m.log10() + 20.0 * freq_hz.log10() + 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10())
}

/// Thermal noise `kTB` in dBm.
pub fn noise_power_dbm(bandwidth_hz: f64, temperature_k: f64, boltzmann: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0 && temperature_k > 0.0 && boltzmann > 0.0) {
        return Err(domain("noise power inputs must be positive"));
    }
    Ok(10.0 * (boltzmann * temperature_k * bandwidth_hz / 1e-3).log10())
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn received_power_dbm(uav: &UavNode, at: &Position3D, channel: &ChannelParams) -> Result<f64> {
    Ok(uav.tx_power_dbm - fspl_db(uav.position.distance(at), channel.carrier_freq_hz)?)
}

pub fn sinr_db(
    user: &UserTerminal,
    serving: &UavNode,
    interferers: &[UavNode],
    channel: &ChannelParams,
) -> Result<f64> {
    let signal = dbm_to_mw(received_power_dbm(serving, &user.position, channel)?);
    let mut denom = dbm_to_mw(channel.noise_power_dbm()?);
    for i in interferers {
        denom += dbm_to_mw(received_power_dbm(i, &user.position, channel)?);
    }
    Ok(mw_to_dbm(signal / denom))
}

/// Shannon capacity `B log2(1 + SINR)`.
pub fn link_rate_bps(sinr_db: f64, allocated_bandwidth_hz: f64) -> Result<f64> {
    if !(allocated_bandwidth_hz >= 0.0) {
        return Err(domain("allocated bandwidth must be non-negative"));
    }
    if allocated_bandwidth_hz == 0.0 {
        return Ok(0.0);
    }
    Ok(allocated_bandwidth_hz * (1.0 + 10f64.powf(sinr_db / 10.0)).log2())
}

pub fn evaluate_scenario(scenario: &NetworkScenario) -> Result<NetworkMetrics> {
    if scenario.users.is_empty() {
        return Err(domain("cannot evaluate a scenario without users"));
    }
    scenario.validate()?;
    let ch = &scenario.channel;
    let noise_mw = dbm_to_mw(ch.noise_power_dbm()?);
    let n_users = scenario.users.len();

    let mut serving_uav = Vec::with_capacity(n_users);
    let mut rx_mw = Vec::with_capacity(n_users);
    let mut covered_flags = Vec::with_capacity(n_users);
    for user in &scenario.users {
        let powers = scenario
            .uavs
            .iter()
            .map(|v| received_power_dbm(v, &user.position, ch).map(dbm_to_mw))
            .collect::<Result<Vec<_>>>()?;
        // strongest received power, then nearest, then lowest index
        let mut best = 0;
        for j in 1..powers.len() {
            let closer = scenario.uavs[j].position.distance(&user.position)
                < scenario.uavs[best].position.distance(&user.position);
            if powers[j] > powers[best] || (powers[j] == powers[best] && closer) {
                best = j;
            }
        }
        let serving = &scenario.uavs[best];
        covered_flags.push(serving.position.distance(&user.position) <= serving.comm_range_m);
        serving_uav.push(best);
        rx_mw.push(powers);
    }

    let mut load = vec![0usize; scenario.uavs.len()];
    for (u, &s) in serving_uav.iter().enumerate() {
        if covered_flags[u] {
            load[s] += 1;
        }
    }

    let mut per_user_rate_bps = Vec::with_capacity(n_users);
    let mut per_user_sinr_db = Vec::with_capacity(n_users);
    let mut allocated_bandwidth_hz = Vec::with_capacity(n_users);
    for u in 0..n_users {
        let s = serving_uav[u];
        let interference: f64 = rx_mw[u].iter().enumerate().filter(|&(j, _)| j != s).map(|(_, p)| p).sum();
        let sinr = mw_to_dbm(rx_mw[u][s] / (noise_mw + interference));
        let bw = if covered_flags[u] { ch.bandwidth_hz / load[s] as f64 } else { 0.0 };
        per_user_sinr_db.push(sinr);
        allocated_bandwidth_hz.push(bw);
        per_user_rate_bps.push(link_rate_bps(sinr, bw)?);
    }

    let covered = covered_flags.iter().filter(|&&c| c).count();
    Ok(NetworkMetrics {
        coverage_ratio: covered as f64 / n_users as f64,
        sum_rate_bps: per_user_rate_bps.iter().sum(),
        per_user_rate_bps,
        per_user_sinr_db,
        covered_flags,
        serving_uav,
        allocated_bandwidth_hz,
    })
}

/// Users placed uniformly on `[0, width) x [0, height)`: two splitmix64 draws
/// per user, x then y, in id order.
pub fn generate_users(seed: u64, count: usize, area: Area) -> Result<Vec<UserTerminal>> {
    if count == 0 {
        return Err(domain("user count must be at least 1"));
    }
    let mut rng = SplitMix64::new(seed);
    Ok((0..count)
        .map(|id| {
            let x = rng.next_f64() * area.width;
            let y = rng.next_f64() * area.height;
            UserTerminal { id: id as u32, position: Position3D::new(x, y, 0.0) }
        })
        .collect())
}
