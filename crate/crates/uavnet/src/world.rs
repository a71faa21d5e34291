//! Geometric state of all entities, nearest-station association, and the
//! sum-rate objective.
//!
//! Stations are indexed on one combined axis: UAVs first (0..n_uavs), then
//! ground stations. Association is a pure argmin over horizontal distance;
//! altitude enters only through path loss.

use rand::Rng;

use crate::channel::{
    a2g_mean_pl_db, rate_bps, sinr_linear, terrestrial_pl_db, EnvParams, FadingMode, LinkBudget,
};
use crate::error::{Error, Result};

/// Horizontal distance floor for terrestrial links so a UE sitting exactly
/// on a ground station keeps a finite path loss.
const GBS_MIN_DISTANCE_M: f64 = 1.0;

/// Transmit powers per station class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxPowers {
    pub uav_dbm: f64,
    pub gbs_dbm: f64,
}

impl Default for TxPowers {
    fn default() -> Self {
        Self {
            uav_dbm: 37.0,
            gbs_dbm: 40.0,
        }
    }
}

/// Positions of every entity at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub ue_positions: Vec<(f64, f64)>,
    /// UAV positions at the shared altitude `altitude_m`.
    pub uav_positions: Vec<(f64, f64)>,
    pub gbs_positions: Vec<(f64, f64)>,
    pub altitude_m: f64,
    pub area: (f64, f64),
    pub time_index: u64,
}

impl WorldState {
    pub fn n_stations(&self) -> usize {
        self.uav_positions.len() + self.gbs_positions.len()
    }

    /// Position of a station on the combined UAV-then-GBS index.
    pub fn station_position(&self, idx: usize) -> (f64, f64) {
        if idx < self.uav_positions.len() {
            self.uav_positions[idx]
        } else {
            self.gbs_positions[idx - self.uav_positions.len()]
        }
    }

    pub fn station_is_uav(&self, idx: usize) -> bool {
        idx < self.uav_positions.len()
    }
}

/// Per-UE serving-station choice on the combined index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    pub serving: Vec<usize>,
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

pub fn horizontal_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    dist2(a, b).sqrt()
}

/// Map every UE to its nearest station by horizontal distance; ties go to
/// the lowest combined index (UAVs order before ground stations).
pub fn associate(state: &WorldState) -> Result<Association> {
    let n_stations = state.n_stations();
    if n_stations == 0 {
        return Err(Error::Config("no base stations in the world".into()));
    }
    let serving = state
        .ue_positions
        .iter()
        .map(|&ue| {
            let mut best = 0usize;
            let mut best_d2 = dist2(ue, state.station_position(0));
            for s in 1..n_stations {
                let d2 = dist2(ue, state.station_position(s));
                if d2 < best_d2 {
                    best = s;
                    best_d2 = d2;
                }
            }
            best
        })
        .collect();
    Ok(Association { serving })
}

fn path_loss_db(state: &WorldState, ue: (f64, f64), station: usize, env: &EnvParams) -> Result<f64> {
    let pos = state.station_position(station);
    let r = horizontal_distance(ue, pos);
    if state.station_is_uav(station) {
        a2g_mean_pl_db(r, state.altitude_m, env)
    } else {
        terrestrial_pl_db(r.max(GBS_MIN_DISTANCE_M), env)
    }
}

fn fading_gain<R: Rng>(mode: FadingMode, rng: &mut R) -> f64 {
    match mode {
        FadingMode::Deterministic => 1.0,
        // Unit-mean exponential power gain.
        FadingMode::Rayleigh => -(1.0 - rng.gen::<f64>()).ln(),
    }
}

/// Sum of all UEs' Shannon rates under the given association.
///
/// For every UE the serving station provides the signal and every other
/// station interferes. Fading draws (Rayleigh mode only) are consumed in UE
/// order, serving link first, then interferers in combined-index order, so
/// a seeded run is reproducible.
pub fn sum_rate<R: Rng>(
    state: &WorldState,
    assoc: &Association,
    env: &EnvParams,
    powers: TxPowers,
    fading: FadingMode,
    rng: &mut R,
) -> Result<f64> {
    if assoc.serving.len() != state.ue_positions.len() {
        return Err(Error::Domain(format!(
            "association covers {} UEs but the world has {}",
            assoc.serving.len(),
            state.ue_positions.len()
        )));
    }
    let n_stations = state.n_stations();
    let mut total = 0.0;
    for (i, &ue) in state.ue_positions.iter().enumerate() {
        let serving = assoc.serving[i];
        if serving >= n_stations {
            return Err(Error::Domain(format!(
                "UE {i} served by station {serving}, world has {n_stations}"
            )));
        }
        let tx_dbm = |s: usize| {
            if state.station_is_uav(s) {
                powers.uav_dbm
            } else {
                powers.gbs_dbm
            }
        };
        let serving_pl = path_loss_db(state, ue, serving, env)?;
        let signal = LinkBudget {
            tx_power_dbm: tx_dbm(serving),
            path_loss_db: serving_pl,
            fading_linear: fading_gain(fading, rng),
        };
        let mut interferers = Vec::with_capacity(n_stations - 1);
        for s in 0..n_stations {
            if s == serving {
                continue;
            }
            interferers.push(LinkBudget {
                tx_power_dbm: tx_dbm(s),
                path_loss_db: path_loss_db(state, ue, s, env)?,
                fading_linear: fading_gain(fading, rng),
            });
        }
        if let Some(pl_max) = env.pl_max_db {
            if serving_pl > pl_max {
                continue; // out of coverage, zero rate
            }
        }
        let sinr = sinr_linear(&signal, &interferers, env.noise_dbm);
        total += rate_bps(sinr, env.bandwidth_hz)?;
    }
    Ok(total)
}
