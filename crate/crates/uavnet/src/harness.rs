//! Episode and time-step orchestration: observe, act sequentially, reward,
//! store, learn, sync. Also frozen-policy evaluation with per-decision wall
//! clock for the timing comparison.
//!
//! Every source of randomness is a separate stream of one seeded ChaCha
//! generator, so UE trajectories are identical across policies evaluated on
//! the same seed and whole runs are bit-reproducible.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{EnvParams, FadingMode};
use crate::dqn::{
    save_checkpoint, select_action, sync_target, td_targets, train_step, DqnHyperparams,
    QNetwork, ReplayBuffer, Transition,
};
use crate::error::{Error, Result};
use crate::mobility::{init_population, step_population, MobilityConfig, Rect, UePopulation};
use crate::policies::{apply_action, policy_step, Action, PolicyContext, PolicyKind};
use crate::record::{EpisodeStats, StepRow, StepSink};
use crate::world::{associate, sum_rate, TxPowers, WorldState};

pub const REWARD_UP: f64 = 1.0;
pub const REWARD_SAME: f64 = -0.2;
pub const REWARD_DOWN: f64 = -1.0;

// Stream ids for the per-purpose RNGs derived from the run seed.
const STREAM_UE_INIT: u64 = 1;
const STREAM_EXPLORATION: u64 = 2;
const STREAM_REPLAY: u64 = 3;
const STREAM_FADING: u64 = 4;
const STREAM_POLICY: u64 = 5;
const STREAM_NET_INIT_BASE: u64 = 0x100;
const STREAM_MOBILITY_BASE: u64 = 0x10000;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvParams,
    pub powers: TxPowers,
    pub area: (f64, f64),
    pub altitude_m: f64,
    pub n_ues: usize,
    pub n_uavs: usize,
    pub gbs_positions: Vec<(f64, f64)>,
    /// Time instants per episode (T).
    pub steps_per_episode: u64,
    pub episodes: u64,
    pub hyper: DqnHyperparams,
    pub ue_step_m: f64,
    pub phase_t1: u64,
    pub phase_t2: u64,
    pub concentrate_fraction: f64,
    pub section1: Rect,
    pub seed: u64,
    pub fading: FadingMode,
    pub uav_step_m: f64,
    pub init_grid_resolution: usize,
    /// Replay the same seeded UE trajectory every episode (the default) or
    /// re-randomize it per episode.
    pub replay_ue_trajectory: bool,
}

impl RunConfig {
    pub fn mobility_config(&self) -> MobilityConfig {
        MobilityConfig {
            ue_step_m: self.ue_step_m,
            area: self.area,
            phase_boundaries: (self.phase_t1, self.phase_t2),
            concentrate_fraction: self.concentrate_fraction,
            section1: self.section1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.hyper.validate()?;
        if self.steps_per_episode == 0 {
            return Err(Error::Config("steps_per_episode must be >= 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if self.n_uavs == 0 {
            return Err(Error::Config("n_uavs must be >= 1".into()));
        }
        if self.n_ues == 0 {
            return Err(Error::Config("n_ues must be >= 1".into()));
        }
        if !(self.area.0 > 0.0 && self.area.1 > 0.0) {
            return Err(Error::Config(format!("area must be positive, got {:?}", self.area)));
        }
        if !(self.altitude_m > 0.0) {
            return Err(Error::Config(format!(
                "altitude_m must be positive, got {}",
                self.altitude_m
            )));
        }
        if !(self.uav_step_m > 0.0) {
            return Err(Error::Config(format!(
                "uav_step_m must be positive, got {}",
                self.uav_step_m
            )));
        }
        if self.init_grid_resolution < 2 {
            return Err(Error::Config(format!(
                "init_grid_resolution must be >= 2 per axis, got {}",
                self.init_grid_resolution
            )));
        }
        for &(x, y) in &self.gbs_positions {
            if !(0.0..=self.area.0).contains(&x) || !(0.0..=self.area.1).contains(&y) {
                return Err(Error::Config(format!(
                    "ground station ({x}, {y}) outside the area"
                )));
            }
        }
        self.mobility_config().validate(self.steps_per_episode)?;
        Ok(())
    }

    fn policy_context(&self) -> PolicyContext<'_> {
        PolicyContext {
            env: &self.env,
            powers: self.powers,
            uav_step_m: self.uav_step_m,
        }
    }
}

/// Sign of the sum-rate change, compared after rounding both values to
/// 1e-9 relative so re-association float churn cannot break ties.
pub fn reward(prev_sum_rate: f64, new_sum_rate: f64) -> f64 {
    if format!("{prev_sum_rate:.9e}") == format!("{new_sum_rate:.9e}") {
        REWARD_SAME
    } else if new_sum_rate > prev_sum_rate {
        REWARD_UP
    } else {
        REWARD_DOWN
    }
}

/// The seeded initial world: UE layout, searched UAV start positions, and
/// the combined t=0 state.
#[derive(Debug, Clone)]
pub struct WorldSetup {
    pub initial_ues: UePopulation,
    pub initial_uavs: Vec<(f64, f64)>,
    pub state0: WorldState,
}

/// Sample the fixed UE layout and grid-search the UAV start positions.
pub fn prepare_world(cfg: &RunConfig) -> Result<WorldSetup> {
    cfg.validate()?;
    let mut init_rng = stream_rng(cfg.seed, STREAM_UE_INIT);
    let initial_ues = init_population(cfg.n_ues, cfg.area, &mut init_rng)?;
    let empty = WorldState {
        ue_positions: initial_ues.positions.clone(),
        uav_positions: Vec::new(),
        gbs_positions: cfg.gbs_positions.clone(),
        altitude_m: cfg.altitude_m,
        area: cfg.area,
        time_index: 0,
    };
    let initial_uavs = initial_uav_positions(
        &empty,
        &cfg.env,
        cfg.powers,
        cfg.n_uavs,
        cfg.init_grid_resolution,
    )?;
    let mut state0 = empty;
    state0.uav_positions = initial_uavs.clone();
    Ok(WorldSetup {
        initial_ues,
        initial_uavs,
        state0,
    })
}

/// Greedy sequential placement over a grid_resolution^2 lattice, maximizing
/// the deterministic sum rate, followed by one refinement pass that
/// re-optimizes each UAV with the others fixed.
///
/// Candidates coinciding with another station are skipped: the association
/// tie rule is a determinism device, and a placement whose value exists
/// only on the exact tie point is not a position any 1-step-per-instant
/// policy can hold.
pub fn initial_uav_positions(
    state0: &WorldState,
    env: &EnvParams,
    powers: TxPowers,
    n_uavs: usize,
    grid_resolution: usize,
) -> Result<Vec<(f64, f64)>> {
    if grid_resolution < 2 {
        return Err(Error::Config(format!(
            "grid resolution must be >= 2 per axis, got {grid_resolution}"
        )));
    }
    let lattice_axis = |extent: f64| -> Vec<f64> {
        (0..grid_resolution)
            .map(|i| extent * i as f64 / (grid_resolution - 1) as f64)
            .collect()
    };
    let xs = lattice_axis(state0.area.0);
    let ys = lattice_axis(state0.area.1);

    let mut work = state0.clone();
    let mut placed: Vec<(f64, f64)> = Vec::with_capacity(n_uavs);
    let mut score_rng = ChaCha8Rng::seed_from_u64(0);
    let mut best_at = |work: &mut WorldState, placed: &[(f64, f64)], slot: usize| -> Result<(f64, f64)> {
        let coincides = |p: (f64, f64), placed: &[(f64, f64)], slot: usize| {
            state0.gbs_positions.iter().any(|&g| g == p)
                || placed
                    .iter()
                    .enumerate()
                    .any(|(k, &q)| k != slot && q == p)
        };
        let mut best_pos = None;
        let mut best_rate = f64::NEG_INFINITY;
        for &x in &xs {
            for &y in &ys {
                if coincides((x, y), placed, slot) {
                    continue;
                }
                work.uav_positions.clear();
                work.uav_positions.extend_from_slice(placed);
                if slot < placed.len() {
                    work.uav_positions[slot] = (x, y);
                } else {
                    work.uav_positions.push((x, y));
                }
                let assoc = associate(work)?;
                let rate = sum_rate(
                    work,
                    &assoc,
                    env,
                    powers,
                    FadingMode::Deterministic,
                    &mut score_rng,
                )?;
                if rate > best_rate {
                    best_rate = rate;
                    best_pos = Some((x, y));
                }
            }
        }
        best_pos.ok_or_else(|| {
            Error::Config("no lattice candidate clear of existing stations".into())
        })
    };

    for j in 0..n_uavs {
        let pos = best_at(&mut work, &placed, j)?;
        placed.push(pos);
    }
    for j in 0..n_uavs {
        placed[j] = best_at(&mut work, &placed, j)?;
    }
    Ok(placed)
}

/// Everything a finished training run produces besides the step rows the
/// sink already received.
#[derive(Debug)]
pub struct TrainOutcome {
    pub nets: Vec<QNetwork>,
    pub episodes: Vec<EpisodeStats>,
    pub initial_uav_positions: Vec<(f64, f64)>,
    pub gradient_steps: u64,
    pub transitions_stored: u64,
    pub clamp_count: u64,
}

/// Train per-UAV agents per the run config, streaming one row per agent per
/// time step into `sink`. Networks are initialized from the run seed.
pub fn train(cfg: &RunConfig, sink: &mut dyn StepSink, abort_dir: Option<&Path>) -> Result<TrainOutcome> {
    let nets = (0..cfg.n_uavs)
        .map(|j| QNetwork::init(&mut stream_rng(cfg.seed, STREAM_NET_INIT_BASE + j as u64)))
        .collect();
    train_with_nets(cfg, nets, sink, abort_dir)
}

/// Same as [`train`] but starting from caller-provided networks.
pub fn train_with_nets(
    cfg: &RunConfig,
    mut nets: Vec<QNetwork>,
    sink: &mut dyn StepSink,
    abort_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let setup = prepare_world(cfg)?;
    if nets.len() != cfg.n_uavs {
        return Err(Error::Config(format!(
            "{} networks for {} UAVs",
            nets.len(),
            cfg.n_uavs
        )));
    }
    let mob_cfg = cfg.mobility_config();
    let mut targets: Vec<QNetwork> = nets.iter().map(sync_target).collect();
    let mut buffers: Vec<ReplayBuffer> = (0..cfg.n_uavs)
        .map(|_| ReplayBuffer::new(cfg.hyper.capacity))
        .collect();
    let mut agent_steps = vec![0u64; cfg.n_uavs];

    let mut explore_rng = stream_rng(cfg.seed, STREAM_EXPLORATION);
    let mut replay_rng = stream_rng(cfg.seed, STREAM_REPLAY);
    let mut fading_rng = stream_rng(cfg.seed, STREAM_FADING);

    let mut episodes = Vec::with_capacity(cfg.episodes as usize);
    let mut gradient_steps = 0u64;
    let mut transitions_stored = 0u64;
    let mut clamp_count = 0u64;

    for episode in 0..cfg.episodes {
        let mob_stream = if cfg.replay_ue_trajectory {
            STREAM_MOBILITY_BASE
        } else {
            STREAM_MOBILITY_BASE + episode
        };
        let mut mob_rng = stream_rng(cfg.seed, mob_stream);
        let mut pop = setup.initial_ues.clone();
        let mut state = setup.state0.clone();

        let mut rate_sum = 0.0;
        let mut reward_sum = 0.0;
        for t in 0..cfg.steps_per_episode {
            step_population(&mut pop, &mob_cfg, t, &mut mob_rng);
            state.ue_positions.clone_from(&pop.positions);
            state.time_index = t;

            let assoc = associate(&state)?;
            let mut prev_rate = sum_rate(
                &state,
                &assoc,
                &cfg.env,
                cfg.powers,
                cfg.fading,
                &mut fading_rng,
            )?;

            for j in 0..cfg.n_uavs {
                let (x, y) = state.uav_positions[j];
                let obs = [x / cfg.area.0, y / cfg.area.1];
                let q = nets[j].forward(obs)?;
                let action_idx = select_action(&q, cfg.hyper.epsilon, &mut explore_rng);
                let action = Action::from_index(action_idx)?;
                let (next_pos, clamped) =
                    apply_action((x, y), action, cfg.uav_step_m, cfg.area);
                if clamped {
                    clamp_count += 1;
                }
                state.uav_positions[j] = next_pos;

                let assoc = associate(&state)?;
                let new_rate = sum_rate(
                    &state,
                    &assoc,
                    &cfg.env,
                    cfg.powers,
                    cfg.fading,
                    &mut fading_rng,
                )?;
                let r = reward(prev_rate, new_rate);
                let next_obs = [next_pos.0 / cfg.area.0, next_pos.1 / cfg.area.1];
                buffers[j].push(Transition {
                    state: obs,
                    action: action_idx,
                    reward: r,
                    next_state: next_obs,
                });
                transitions_stored += 1;

                match buffers[j].sample(cfg.hyper.batch_size, &mut replay_rng) {
                    Ok(batch) => {
                        let ys = td_targets(&batch, &targets[j], cfg.hyper.discount)?;
                        if let Err(err) =
                            train_step(&mut nets[j], &batch, &ys, cfg.hyper.learning_rate)
                        {
                            if let Some(dir) = abort_dir {
                                for (i, net) in nets.iter().enumerate() {
                                    let _ = save_checkpoint(
                                        net,
                                        &dir.join(format!("qnet_agent{i}_abort.txt")),
                                    );
                                }
                            }
                            return Err(Error::Training(format!(
                                "episode {episode}, t {t}, agent {j}: {err}"
                            )));
                        }
                        gradient_steps += 1;
                    }
                    Err(Error::NotReady { .. }) => {}
                    Err(other) => return Err(other),
                }

                agent_steps[j] += 1;
                if agent_steps[j] % cfg.hyper.target_sync == 0 {
                    targets[j] = sync_target(&nets[j]);
                }

                let (dx, dy) = action.delta();
                sink.push(&StepRow {
                    episode,
                    t,
                    policy: PolicyKind::Dqn.name().to_string(),
                    sum_rate_bps: new_rate,
                    agent: j,
                    reward: r,
                    action_dx: dx as i32,
                    action_dy: dy as i32,
                    uav_x: next_pos.0,
                    uav_y: next_pos.1,
                })?;
                reward_sum += r;
                prev_rate = new_rate;
            }
            rate_sum += prev_rate;
        }
        episodes.push(EpisodeStats {
            episode,
            policy: PolicyKind::Dqn.name().to_string(),
            mean_sum_rate_bps: rate_sum / cfg.steps_per_episode as f64,
            total_reward: reward_sum,
        });
    }

    Ok(TrainOutcome {
        nets,
        episodes,
        initial_uav_positions: setup.initial_uavs,
        gradient_steps,
        transitions_stored,
        clamp_count,
    })
}

/// Result of one frozen-policy episode.
#[derive(Debug)]
pub struct EvalOutcome {
    pub rows: Vec<StepRow>,
    pub episode: EpisodeStats,
    /// Mean wall clock of one policy decision (all agents), in seconds.
    /// Excluded from byte-determinism guarantees.
    pub mean_decision_seconds: f64,
    /// UE positions the policies responded to: (t, ue_index, x, y).
    pub trajectory: Vec<(u64, usize, f64, f64)>,
    pub initial_state: WorldState,
    pub final_state: WorldState,
    pub clamp_count: u64,
}

/// Run one frozen episode (no exploration, no learning) of the given policy
/// over the seeded UE trajectory shared by every policy at this seed.
pub fn evaluate(
    cfg: &RunConfig,
    kind: PolicyKind,
    nets: Option<&[QNetwork]>,
) -> Result<EvalOutcome> {
    if (kind == PolicyKind::Dqn) != nets.is_some() {
        return Err(Error::Config(
            "networks must be provided exactly when evaluating the dqn policy".into(),
        ));
    }
    let setup = prepare_world(cfg)?;
    let mob_cfg = cfg.mobility_config();
    let mut mob_rng = stream_rng(cfg.seed, STREAM_MOBILITY_BASE);
    let mut fading_rng = stream_rng(cfg.seed, STREAM_FADING);
    let mut policy_rng = stream_rng(cfg.seed, STREAM_POLICY);

    let mut pop = setup.initial_ues.clone();
    let mut state = setup.state0.clone();
    let initial_state = state.clone();
    let ctx = cfg.policy_context();

    let mut rows = Vec::new();
    let mut trajectory = Vec::new();
    let mut rate_sum = 0.0;
    let mut reward_sum = 0.0;
    let mut decision_total = 0.0f64;
    let mut clamp_count = 0u64;

    for t in 0..cfg.steps_per_episode {
        step_population(&mut pop, &mob_cfg, t, &mut mob_rng);
        state.ue_positions.clone_from(&pop.positions);
        state.time_index = t;
        for (i, &(x, y)) in pop.positions.iter().enumerate() {
            trajectory.push((t, i, x, y));
        }

        let assoc = associate(&state)?;
        let mut prev_rate = sum_rate(
            &state,
            &assoc,
            &cfg.env,
            cfg.powers,
            cfg.fading,
            &mut fading_rng,
        )?;

        let started = Instant::now();
        let actions = policy_step(kind, &state, nets, &ctx, &mut policy_rng)?;
        decision_total += started.elapsed().as_secs_f64();

        for (j, &action) in actions.iter().enumerate() {
            let (next_pos, clamped) = apply_action(
                state.uav_positions[j],
                action,
                cfg.uav_step_m,
                cfg.area,
            );
            if clamped {
                clamp_count += 1;
            }
            state.uav_positions[j] = next_pos;
            let assoc = associate(&state)?;
            let new_rate = sum_rate(
                &state,
                &assoc,
                &cfg.env,
                cfg.powers,
                cfg.fading,
                &mut fading_rng,
            )?;
            let r = reward(prev_rate, new_rate);
            let (dx, dy) = action.delta();
            rows.push(StepRow {
                episode: 0,
                t,
                policy: kind.name().to_string(),
                sum_rate_bps: new_rate,
                agent: j,
                reward: r,
                action_dx: dx as i32,
                action_dy: dy as i32,
                uav_x: next_pos.0,
                uav_y: next_pos.1,
            });
            reward_sum += r;
            prev_rate = new_rate;
        }
        rate_sum += prev_rate;
    }

    Ok(EvalOutcome {
        rows,
        episode: EpisodeStats {
            episode: 0,
            policy: kind.name().to_string(),
            mean_sum_rate_bps: rate_sum / cfg.steps_per_episode as f64,
            total_reward: reward_sum,
        },
        mean_decision_seconds: decision_total / cfg.steps_per_episode as f64,
        trajectory,
        initial_state,
        final_state: state,
        clamp_count,
    })
}
