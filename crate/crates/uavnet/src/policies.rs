//! Movement policies: one interface mapping a world snapshot to one action
//! per UAV, implemented by the trained DQN (greedy at evaluation), a fixed
//! baseline, k-means centroid tracking, and one-step joint exhaustive
//! search. All policies obey the same kinematics: one axis-aligned step of
//! `uav_step_m` per instant, clamped at the area boundary.

use rand::Rng;

use crate::channel::{EnvParams, FadingMode};
use crate::dqn::{select_action, QNetwork};
use crate::error::{Error, Result};
use crate::world::{associate, horizontal_distance, sum_rate, TxPowers, WorldState};

/// The five movement actions; the index order matches the Q-network's
/// output neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// (+1, 0)
    East,
    /// (-1, 0)
    West,
    /// (0, +1)
    North,
    /// (0, -1)
    South,
    /// (0, 0)
    Still,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::East,
        Action::West,
        Action::North,
        Action::South,
        Action::Still,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|a| *a == self).unwrap()
    }

    pub fn from_index(i: usize) -> Result<Action> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("action index {i} out of range")))
    }

    /// Unit direction, scaled by the step size when applied.
    pub fn delta(self) -> (f64, f64) {
        match self {
            Action::East => (1.0, 0.0),
            Action::West => (-1.0, 0.0),
            Action::North => (0.0, 1.0),
            Action::South => (0.0, -1.0),
            Action::Still => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Dqn,
    Fixed,
    KMeans,
    Exhaustive,
}

impl PolicyKind {
    /// Fixed reporting order: dqn, exhaustive, kmeans, fixed.
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Dqn,
        PolicyKind::Exhaustive,
        PolicyKind::KMeans,
        PolicyKind::Fixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Dqn => "dqn",
            PolicyKind::Fixed => "fixed",
            PolicyKind::KMeans => "kmeans",
            PolicyKind::Exhaustive => "exhaustive",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "dqn" => Ok(PolicyKind::Dqn),
            "fixed" => Ok(PolicyKind::Fixed),
            "kmeans" => Ok(PolicyKind::KMeans),
            "exhaustive" => Ok(PolicyKind::Exhaustive),
            other => Err(Error::Config(format!(
                "unknown policy {other:?} (expected dqn, fixed, kmeans, or exhaustive)"
            ))),
        }
    }
}

/// Radio constants the scoring policies need.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub env: &'a EnvParams,
    pub powers: TxPowers,
    pub uav_step_m: f64,
}

/// Apply an action with boundary clamping: an axis whose step would leave
/// the area contributes zero displacement. Returns the new position and
/// whether any axis was clamped.
pub fn apply_action(
    pos: (f64, f64),
    action: Action,
    step_m: f64,
    area: (f64, f64),
) -> ((f64, f64), bool) {
    let (dx, dy) = action.delta();
    let mut out = pos;
    let mut clamped = false;
    let nx = pos.0 + dx * step_m;
    if (0.0..=area.0).contains(&nx) {
        out.0 = nx;
    } else if dx != 0.0 {
        clamped = true;
    }
    let ny = pos.1 + dy * step_m;
    if (0.0..=area.1).contains(&ny) {
        out.1 = ny;
    } else if dy != 0.0 {
        clamped = true;
    }
    (out, clamped)
}

/// One action per UAV from the given snapshot.
///
/// dqn: per-agent greedy argmax of its network at its own normalized
/// position. fixed: stay still. kmeans: one step toward the assigned
/// cluster centroid. exhaustive: the joint action tuple over all 5^|Q|
/// combinations maximizing the deterministic sum rate after re-association,
/// ties resolved to the lexicographically first tuple.
pub fn policy_step<R: Rng>(
    kind: PolicyKind,
    state: &WorldState,
    nets: Option<&[QNetwork]>,
    ctx: &PolicyContext,
    rng: &mut R,
) -> Result<Vec<Action>> {
    let n_uavs = state.uav_positions.len();
    match kind {
        PolicyKind::Dqn => {
            let nets = nets.ok_or_else(|| {
                Error::Config("dqn policy requires one network per UAV".into())
            })?;
            if nets.len() != n_uavs {
                return Err(Error::Config(format!(
                    "{} networks for {} UAVs",
                    nets.len(),
                    n_uavs
                )));
            }
            let mut actions = Vec::with_capacity(n_uavs);
            for (j, net) in nets.iter().enumerate() {
                let (x, y) = state.uav_positions[j];
                let q = net.forward([x / state.area.0, y / state.area.1])?;
                actions.push(Action::from_index(select_action(&q, 0.0, rng))?);
            }
            Ok(actions)
        }
        PolicyKind::Fixed => Ok(vec![Action::Still; n_uavs]),
        PolicyKind::KMeans => {
            if nets.is_some() {
                return Err(Error::Config("kmeans policy takes no networks".into()));
            }
            let centroids = kmeans_centroids(&state.ue_positions, n_uavs, rng, 100)?;
            let assignment = assign_uavs_to_centroids(&state.uav_positions, &centroids);
            let actions = state
                .uav_positions
                .iter()
                .enumerate()
                .map(|(j, &pos)| {
                    let target = centroids[assignment[j]];
                    let mut best = Action::ALL[0];
                    let mut best_d = f64::INFINITY;
                    for a in Action::ALL {
                        let (next, _) = apply_action(pos, a, ctx.uav_step_m, state.area);
                        let d = horizontal_distance(next, target);
                        if d < best_d {
                            best_d = d;
                            best = a;
                        }
                    }
                    best
                })
                .collect();
            Ok(actions)
        }
        PolicyKind::Exhaustive => {
            if nets.is_some() {
                return Err(Error::Config("exhaustive policy takes no networks".into()));
            }
            let combos = 5usize.pow(n_uavs as u32);
            let mut best_actions = vec![Action::Still; n_uavs];
            let mut best_rate = f64::NEG_INFINITY;
            let mut candidate = state.clone();
            for code in 0..combos {
                // Agent 0 owns the most significant digit so scan order is
                // lexicographic over tuples.
                let mut c = code;
                let mut actions = vec![Action::Still; n_uavs];
                for j in (0..n_uavs).rev() {
                    actions[j] = Action::from_index(c % 5)?;
                    c /= 5;
                }
                for j in 0..n_uavs {
                    let (next, _) = apply_action(
                        state.uav_positions[j],
                        actions[j],
                        ctx.uav_step_m,
                        state.area,
                    );
                    candidate.uav_positions[j] = next;
                }
                let assoc = associate(&candidate)?;
                let rate = sum_rate(
                    &candidate,
                    &assoc,
                    ctx.env,
                    ctx.powers,
                    FadingMode::Deterministic,
                    rng,
                )?;
                if rate > best_rate {
                    best_rate = rate;
                    best_actions = actions;
                }
            }
            Ok(best_actions)
        }
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Lloyd's algorithm from k distinct seeded points; empty clusters are
/// re-seeded to the point farthest from its current centroid. Runs to an
/// assignment fixpoint or `max_iters`.
pub fn kmeans_centroids<R: Rng>(
    points: &[(f64, f64)],
    k: usize,
    rng: &mut R,
    max_iters: usize,
) -> Result<Vec<(f64, f64)>> {
    if k == 0 {
        return Err(Error::Config("cluster count must be >= 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Config("k-means needs at least one point".into()));
    }
    let mut centroids: Vec<(f64, f64)> = Vec::with_capacity(k);
    for i in rand::seq::index::sample(rng, points.len(), points.len()) {
        let p = points[i];
        if !centroids.contains(&p) {
            centroids.push(p);
            if centroids.len() == k {
                break;
            }
        }
    }
    if centroids.len() < k {
        return Err(Error::Degenerate(format!(
            "{} distinct points cannot seed {k} clusters",
            centroids.len()
        )));
    }

    let assign = |centroids: &[(f64, f64)]| -> Vec<usize> {
        points
            .iter()
            .map(|&p| {
                let mut best = 0;
                let mut best_d = dist2(p, centroids[0]);
                for (c, &cent) in centroids.iter().enumerate().skip(1) {
                    let d = dist2(p, cent);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let mut assignment = assign(&centroids);
    for _ in 0..max_iters {
        // Means per cluster; empty clusters grab the farthest point.
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (&p, &c) in points.iter().zip(&assignment) {
            sums[c].0 += p.0;
            sums[c].1 += p.1;
            sums[c].2 += 1;
        }
        for c in 0..k {
            if sums[c].2 > 0 {
                centroids[c] = (sums[c].0 / sums[c].2 as f64, sums[c].1 / sums[c].2 as f64);
            } else {
                let (far_idx, _) = points
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (i, dist2(p, centroids[assignment[i]])))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                centroids[c] = points[far_idx];
            }
        }
        let next = assign(&centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(centroids)
}

/// Match UAVs to centroids minimizing the total assignment distance:
/// exact permutation search for small fleets, greedy beyond that.
pub fn assign_uavs_to_centroids(
    uavs: &[(f64, f64)],
    centroids: &[(f64, f64)],
) -> Vec<usize> {
    let n = uavs.len().min(centroids.len());
    if n == 0 {
        return Vec::new();
    }
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best_perm = perm.clone();
        let mut best_cost = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let cost: f64 = (0..n)
                .map(|i| horizontal_distance(uavs[i], centroids[p[i]]))
                .sum();
            if cost < best_cost {
                best_cost = cost;
                best_perm = p.to_vec();
            }
        });
        best_perm
    } else {
        let mut taken = vec![false; n];
        (0..n)
            .map(|i| {
                let (c, _) = centroids
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| !taken[*c])
                    .map(|(c, &cent)| (c, dist2(uavs[i], cent)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                taken[c] = true;
                c
            })
            .collect()
    }
}

fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(env: &EnvParams) -> PolicyContext<'_> {
        PolicyContext {
            env,
            powers: TxPowers::default(),
            uav_step_m: 1.0,
        }
    }

    fn world(ues: Vec<(f64, f64)>, uavs: Vec<(f64, f64)>) -> WorldState {
        WorldState {
            ue_positions: ues,
            uav_positions: uavs,
            gbs_positions: vec![],
            altitude_m: 100.0,
            area: (1000.0, 1000.0),
            time_index: 0,
        }
    }

    #[test]
    fn action_index_round_trip() {
        for a in Action::ALL {
            assert_eq!(Action::from_index(a.index()).unwrap(), a);
        }
        assert_eq!(Action::ALL[0].delta(), (1.0, 0.0));
        assert_eq!(Action::ALL[4].delta(), (0.0, 0.0));
        assert!(Action::from_index(5).is_err());
    }

    #[test]
    fn apply_action_clamps_axis_to_zero_displacement() {
        let area = (10.0, 10.0);
        let ((x, y), clamped) = apply_action((0.0, 5.0), Action::West, 1.0, area);
        assert_eq!((x, y), (0.0, 5.0));
        assert!(clamped);
        let ((x, y), clamped) = apply_action((9.5, 5.0), Action::East, 1.0, area);
        assert_eq!((x, y), (9.5, 5.0), "must not snap to boundary");
        assert!(clamped);
        let ((x, y), clamped) = apply_action((5.0, 5.0), Action::North, 1.0, area);
        assert_eq!((x, y), (5.0, 6.0));
        assert!(!clamped);
    }

    #[test]
    fn fixed_policy_stays_still() {
        let env = EnvParams::urban();
        let w = world(vec![(1.0, 2.0)], vec![(3.0, 4.0), (5.0, 6.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actions = policy_step(PolicyKind::Fixed, &w, None, &ctx(&env), &mut rng).unwrap();
        assert_eq!(actions, vec![Action::Still, Action::Still]);
    }

    #[test]
    fn exhaustive_moves_toward_lone_ue() {
        let env = EnvParams::urban();
        // UE 10 m east of the single UAV.
        let w = world(vec![(510.0, 500.0)], vec![(500.0, 500.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actions = policy_step(PolicyKind::Exhaustive, &w, None, &ctx(&env), &mut rng).unwrap();
        assert_eq!(actions, vec![Action::East]);
    }

    #[test]
    fn dqn_policy_is_the_greedy_argmax() {
        let env = EnvParams::urban();
        let w = world(vec![(100.0, 100.0)], vec![(200.0, 300.0), (700.0, 800.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nets: Vec<QNetwork> = (0..2)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(50 + i);
                QNetwork::init(&mut r)
            })
            .collect();
        let actions =
            policy_step(PolicyKind::Dqn, &w, Some(&nets), &ctx(&env), &mut rng).unwrap();
        for (j, net) in nets.iter().enumerate() {
            let (x, y) = w.uav_positions[j];
            let q = net.forward([x / 1000.0, y / 1000.0]).unwrap();
            let argmax = (0..5).max_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap();
            assert_eq!(actions[j].index(), argmax);
        }
        // Network count must match the fleet.
        assert!(policy_step(PolicyKind::Dqn, &w, Some(&nets[..1]), &ctx(&env), &mut rng).is_err());
        assert!(policy_step(PolicyKind::Dqn, &w, None, &ctx(&env), &mut rng).is_err());
    }

    #[test]
    fn kmeans_single_cluster_of_identical_points() {
        let pts = vec![(7.0, 9.0); 12];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = kmeans_centroids(&pts, 1, &mut rng, 50).unwrap();
        assert_eq!(c, vec![(7.0, 9.0)]);
        // Two clusters cannot be seeded from one distinct point.
        assert!(matches!(
            kmeans_centroids(&pts, 2, &mut rng, 50),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn kmeans_separates_two_tight_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pts = Vec::new();
        for _ in 0..6 {
            pts.push((100.0 + rng.gen::<f64>() * 10.0, 100.0 + rng.gen::<f64>() * 10.0));
        }
        for _ in 0..6 {
            pts.push((900.0 + rng.gen::<f64>() * 10.0, 900.0 + rng.gen::<f64>() * 10.0));
        }
        let c = kmeans_centroids(&pts, 2, &mut rng, 100).unwrap();
        let in_low = |p: (f64, f64)| p.0 >= 100.0 && p.0 <= 110.0 && p.1 >= 100.0 && p.1 <= 110.0;
        let in_high = |p: (f64, f64)| p.0 >= 900.0 && p.0 <= 910.0 && p.1 >= 900.0 && p.1 <= 910.0;
        assert!(
            (in_low(c[0]) && in_high(c[1])) || (in_low(c[1]) && in_high(c[0])),
            "centroids {c:?} not one per group"
        );
    }

    #[test]
    fn kmeans_does_not_worsen_within_cluster_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen::<f64>() * 1000.0, rng.gen::<f64>() * 1000.0))
            .collect();
        let wcss = |cents: &[(f64, f64)]| -> f64 {
            pts.iter()
                .map(|&p| {
                    cents
                        .iter()
                        .map(|&c| dist2(p, c))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum()
        };
        // Reproduce the seeding draw to get the initial centroids.
        let mut seed_rng = ChaCha8Rng::seed_from_u64(7);
        let mut initial: Vec<(f64, f64)> = Vec::new();
        for i in rand::seq::index::sample(&mut seed_rng, pts.len(), pts.len()) {
            if !initial.contains(&pts[i]) {
                initial.push(pts[i]);
                if initial.len() == 3 {
                    break;
                }
            }
        }
        let mut run_rng = ChaCha8Rng::seed_from_u64(7);
        let finals = kmeans_centroids(&pts, 3, &mut run_rng, 100).unwrap();
        assert!(wcss(&finals) <= wcss(&initial) + 1e-9);
    }

    #[test]
    fn uav_assignment_is_optimal_for_small_fleets() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=6usize {
            let uavs: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen::<f64>() * 100.0, rng.gen::<f64>() * 100.0))
                .collect();
            let cents: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen::<f64>() * 100.0, rng.gen::<f64>() * 100.0))
                .collect();
            let got = assign_uavs_to_centroids(&uavs, &cents);
            let got_cost: f64 = (0..n)
                .map(|i| horizontal_distance(uavs[i], cents[got[i]]))
                .sum();
            // Independent exhaustive enumeration.
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                let c: f64 = (0..n)
                    .map(|i| horizontal_distance(uavs[i], cents[p[i]]))
                    .sum();
                if c < best {
                    best = c;
                }
            });
            assert!((got_cost - best).abs() < 1e-9, "n={n}: {got_cost} vs {best}");
        }
    }

    #[test]
    fn kmeans_policy_steps_toward_assigned_centroid() {
        let env = EnvParams::urban();
        // Two far groups, two UAVs slightly off the groups.
        let mut ues = vec![];
        for i in 0..5 {
            ues.push((100.0 + i as f64, 100.0));
            ues.push((900.0 + i as f64, 900.0));
        }
        let w = world(ues, vec![(150.0, 100.0), (850.0, 900.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let actions = policy_step(PolicyKind::KMeans, &w, None, &ctx(&env), &mut rng).unwrap();
        // UAV 0 sits east of its centroid (~102,100): move west.
        assert_eq!(actions[0], Action::West);
        // UAV 1 sits west of its centroid (~902,900): move east.
        assert_eq!(actions[1], Action::East);
    }

    #[test]
    fn exhaustive_dominates_every_policy_one_step() {
        let env = EnvParams::urban();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for trial in 0..10 {
            let n_uavs = 1 + (trial % 2);
            let w = WorldState {
                ue_positions: (0..15)
                    .map(|_| (rng.gen::<f64>() * 1000.0, rng.gen::<f64>() * 1000.0))
                    .collect(),
                uav_positions: (0..n_uavs)
                    .map(|_| (rng.gen::<f64>() * 1000.0, rng.gen::<f64>() * 1000.0))
                    .collect(),
                gbs_positions: vec![(500.0, 500.0)],
                altitude_m: 100.0,
                area: (1000.0, 1000.0),
                time_index: 0,
            };
            let c = ctx(&env);
            let post_rate = |actions: &[Action]| -> f64 {
                let mut cand = w.clone();
                for (j, &a) in actions.iter().enumerate() {
                    let (next, _) = apply_action(cand.uav_positions[j], a, 1.0, w.area);
                    cand.uav_positions[j] = next;
                }
                let assoc = associate(&cand).unwrap();
                let mut r = ChaCha8Rng::seed_from_u64(0);
                sum_rate(&cand, &assoc, &env, c.powers, FadingMode::Deterministic, &mut r)
                    .unwrap()
            };
            let nets: Vec<QNetwork> = (0..n_uavs)
                .map(|i| {
                    let mut r = ChaCha8Rng::seed_from_u64(300 + i as u64);
                    QNetwork::init(&mut r)
                })
                .collect();
            let ex = policy_step(PolicyKind::Exhaustive, &w, None, &c, &mut rng).unwrap();
            let ex_rate = post_rate(&ex);
            for kind in [PolicyKind::Fixed, PolicyKind::KMeans, PolicyKind::Dqn] {
                let nets_arg = (kind == PolicyKind::Dqn).then_some(nets.as_slice());
                let acts = policy_step(kind, &w, nets_arg, &c, &mut rng).unwrap();
                assert!(
                    ex_rate >= post_rate(&acts) - 1e-9,
                    "{} beat exhaustive on trial {trial}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn deterministic_policies_repeat_exactly() {
        let env = EnvParams::urban();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = world(
            (0..20)
                .map(|_| (rng.gen::<f64>() * 1000.0, rng.gen::<f64>() * 1000.0))
                .collect(),
            vec![(250.0, 250.0), (750.0, 750.0)],
        );
        let c = ctx(&env);
        for kind in [PolicyKind::Fixed, PolicyKind::Exhaustive, PolicyKind::KMeans] {
            let mut r1 = ChaCha8Rng::seed_from_u64(12);
            let mut r2 = ChaCha8Rng::seed_from_u64(12);
            assert_eq!(
                policy_step(kind, &w, None, &c, &mut r1).unwrap(),
                policy_step(kind, &w, None, &c, &mut r2).unwrap()
            );
        }
    }
}
