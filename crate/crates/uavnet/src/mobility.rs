//! Ground-user trajectories: a per-step random walk inside per-UE home
//! regions, plus the three-phase scenario (uniform over the whole area,
//! concentrated in Section 1, uniform again).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Axis-aligned rectangle, inclusive on all edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn from_area(area: (f64, f64)) -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            x1: area.0,
            y1: area.1,
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.x0 && p.0 <= self.x1 && p.1 >= self.y0 && p.1 <= self.y1
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        (
            self.x0 + rng.gen::<f64>() * (self.x1 - self.x0),
            self.y0 + rng.gen::<f64>() * (self.y1 - self.y0),
        )
    }
}

/// Scenario parameters for the walk and the two phase transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub ue_step_m: f64,
    pub area: (f64, f64),
    /// (t1, t2): concentration begins at t1, dispersal at t2.
    pub phase_boundaries: (u64, u64),
    /// Fraction of UEs relocated into Section 1 at t1.
    pub concentrate_fraction: f64,
    pub section1: Rect,
}

impl MobilityConfig {
    pub fn validate(&self, horizon: u64) -> Result<()> {
        let (t1, t2) = self.phase_boundaries;
        if !(t1 > 0 && t1 < t2 && t2 < horizon) {
            return Err(Error::Config(format!(
                "phase boundaries must satisfy 0 < t1 < t2 < T, got t1={t1}, t2={t2}, T={horizon}"
            )));
        }
        if !(0.0..=1.0).contains(&self.concentrate_fraction) {
            return Err(Error::Config(format!(
                "concentrate_fraction must be in [0,1], got {}",
                self.concentrate_fraction
            )));
        }
        let area = Rect::from_area(self.area);
        if !(area.contains((self.section1.x0, self.section1.y0))
            && area.contains((self.section1.x1, self.section1.y1)))
        {
            return Err(Error::Config("section1 must lie inside the area".into()));
        }
        Ok(())
    }
}

/// UE positions plus the region currently constraining each UE's walk.
#[derive(Debug, Clone, PartialEq)]
pub struct UePopulation {
    pub positions: Vec<(f64, f64)>,
    pub home_regions: Vec<Rect>,
}

/// The five moves: right, left, forward, backward, stay.
const MOVES: [(f64, f64); 5] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.0, 0.0)];

/// Sample `n_ues` positions uniformly over the area; home regions start as
/// the whole area.
pub fn init_population(n_ues: usize, area: (f64, f64), rng: &mut ChaCha8Rng) -> Result<UePopulation> {
    if n_ues == 0 {
        return Err(Error::Config("population must have at least one UE".into()));
    }
    let region = Rect::from_area(area);
    let positions = (0..n_ues).map(|_| region.sample(rng)).collect();
    Ok(UePopulation {
        positions,
        home_regions: vec![region; n_ues],
    })
}

/// Advance the population by one time instant.
///
/// Ordinary instants: every UE draws one of the five moves uniformly and
/// displaces by `ue_step_m`; a draw that would leave the UE's home region is
/// resampled (staying still is always legal, so this terminates). At t1 the
/// chosen fraction of UEs is relocated uniformly into Section 1, which
/// becomes their home region; at t2 every UE redistributes uniformly over
/// the whole area. Relocation replaces the walk for the affected UEs on
/// those instants.
pub fn step_population(pop: &mut UePopulation, cfg: &MobilityConfig, t: u64, rng: &mut ChaCha8Rng) {
    let (t1, t2) = cfg.phase_boundaries;
    if t == t2 {
        let region = Rect::from_area(cfg.area);
        for i in 0..pop.positions.len() {
            pop.home_regions[i] = region;
            pop.positions[i] = region.sample(rng);
        }
        return;
    }
    if t == t1 {
        let n = pop.positions.len();
        let k = (cfg.concentrate_fraction * n as f64).round() as usize;
        let chosen = rand::seq::index::sample(rng, n, k.min(n));
        let mut relocated = vec![false; n];
        for i in chosen {
            relocated[i] = true;
            pop.home_regions[i] = cfg.section1;
            pop.positions[i] = cfg.section1.sample(rng);
        }
        for i in 0..n {
            if !relocated[i] {
                walk_one(&mut pop.positions[i], pop.home_regions[i], cfg.ue_step_m, rng);
            }
        }
        return;
    }
    for i in 0..pop.positions.len() {
        walk_one(&mut pop.positions[i], pop.home_regions[i], cfg.ue_step_m, rng);
    }
}

fn walk_one(pos: &mut (f64, f64), home: Rect, step: f64, rng: &mut ChaCha8Rng) {
    loop {
        let (dx, dy) = MOVES[rng.gen_range(0..MOVES.len())];
        let candidate = (pos.0 + dx * step, pos.1 + dy * step);
        if home.contains(candidate) {
            *pos = candidate;
            return;
        }
    }
}
