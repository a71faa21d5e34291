// Temporary diagnostic probe. Deleted before delivery.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavnet::channel::FadingMode;
use uavnet::config::desk_preset;
use uavnet::harness::{initial_uav_positions, prepare_world};
use uavnet::mobility::step_population;
use uavnet::world::{associate, sum_rate, WorldState};

fn rate_of(state: &WorldState, cfg: &uavnet::harness::RunConfig) -> f64 {
    let assoc = associate(state).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    sum_rate(state, &assoc, &cfg.env, cfg.powers, FadingMode::Deterministic, &mut rng).unwrap()
}

#[test]
fn probe_training_dynamics() {
    use uavnet::harness::{evaluate, train_with_nets};
    use uavnet::policies::PolicyKind;
    use uavnet::record::NullSink;
    let mut cfg = desk_preset();
    cfg.seed = 1;
    let mut nets: Vec<_> = (0..cfg.n_uavs)
        .map(|j| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(0x100 + j as u64);
            uavnet::dqn::QNetwork::init(&mut r)
        })
        .collect();
    let mut chunk_cfg = cfg.clone();
    chunk_cfg.episodes = 100;
    for chunk in 0..20 {
        let out = train_with_nets(&chunk_cfg, nets.clone(), &mut NullSink, None).unwrap();
        nets = out.nets;
        let eval = evaluate(&cfg, PolicyKind::Dqn, Some(&nets)).unwrap();
        let q_mag: f64 = nets
            .iter()
            .map(|n| {
                let q = n.forward([0.5, 0.5]).unwrap();
                q.iter().map(|v| v.abs()).fold(0.0, f64::max)
            })
            .sum::<f64>()
            / nets.len() as f64;
        // Greedy action at the two start positions.
        let a0 = {
            let q = nets[0].forward([0.5, 0.5]).unwrap();
            (0..5).max_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap()
        };
        println!(
            "after {:4} eps: eval {:.4e}  max|Q(0.5,0.5)| {:7.3}  argmax0 {}",
            (chunk + 1) * 100,
            eval.episode.mean_sum_rate_bps,
            q_mag,
            a0
        );
    }
}

#[test]
fn probe_best_static_sink() {
    // Value of "walk to sink P, then stay" per agent, over a sink grid.
    let cfg = desk_preset();
    let setup = prepare_world(&cfg).unwrap();
    let mob_cfg = cfg.mobility_config();
    let mut pop = setup.initial_ues.clone();
    let mut mob_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    mob_rng.set_stream(0x10000);
    let mut layouts = Vec::new();
    for t in 0..cfg.steps_per_episode {
        step_population(&mut pop, &mob_cfg, t, &mut mob_rng);
        layouts.push(pop.positions.clone());
    }
    let value_of = |sinks: [(f64, f64); 2]| -> f64 {
        let mut world = setup.state0.clone();
        let mut pos = setup.initial_uavs.clone();
        let mut total = 0.0;
        for layout in &layouts {
            world.ue_positions = layout.clone();
            for (j, p) in pos.iter_mut().enumerate() {
                let t = sinks[j];
                // One axis-aligned 1 m step toward the sink, x before y.
                if (p.0 - t.0).abs() >= 0.5 {
                    p.0 += (t.0 - p.0).signum();
                } else if (p.1 - t.1).abs() >= 0.5 {
                    p.1 += (t.1 - p.1).signum();
                }
            }
            world.uav_positions = pos.clone();
            total += rate_of(&world, &cfg);
        }
        total / layouts.len() as f64
    };
    let fixed = value_of([setup.initial_uavs[0], setup.initial_uavs[1]]);
    println!("fixed-equivalent: {fixed:.6e}");
    // Agent 1 pinned at start; sweep agent 0's sink on a 6x6 grid.
    let mut best = (f64::NEG_INFINITY, (0.0, 0.0));
    for ix in 0..6 {
        for iy in 0..6 {
            let p = (ix as f64 * 200.0, iy as f64 * 200.0);
            let v = value_of([p, setup.initial_uavs[1]]);
            if v > best.0 {
                best = (v, p);
            }
        }
    }
    println!("best agent0 sink {:?}: {:.6e}", best.1, best.0);
    // Sweep agent 1's sink with agent 0 at its best.
    let mut best1 = (f64::NEG_INFINITY, (0.0, 0.0));
    for ix in 0..6 {
        for iy in 0..6 {
            let p = (ix as f64 * 200.0, iy as f64 * 200.0);
            let v = value_of([best.1, p]);
            if v > best1.0 {
                best1 = (v, p);
            }
        }
    }
    println!("best agent1 sink {:?}: {:.6e}", best1.1, best1.0);
}

#[test]
fn probe_fine_sink_sweep() {
    let cfg = desk_preset();
    let setup = prepare_world(&cfg).unwrap();
    let mob_cfg = cfg.mobility_config();
    let mut pop = setup.initial_ues.clone();
    let mut mob_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    mob_rng.set_stream(0x10000);
    let mut layouts = Vec::new();
    for t in 0..cfg.steps_per_episode {
        step_population(&mut pop, &mob_cfg, t, &mut mob_rng);
        layouts.push(pop.positions.clone());
    }
    let value_of = |sinks: [(f64, f64); 2]| -> f64 {
        let mut world = setup.state0.clone();
        let mut pos = setup.initial_uavs.clone();
        let mut total = 0.0;
        for layout in &layouts {
            world.ue_positions = layout.clone();
            for (j, p) in pos.iter_mut().enumerate() {
                let t = sinks[j];
                if (p.0 - t.0).abs() >= 0.5 {
                    p.0 += (t.0 - p.0).signum();
                } else if (p.1 - t.1).abs() >= 0.5 {
                    p.1 += (t.1 - p.1).signum();
                }
            }
            world.uav_positions = pos.clone();
            total += rate_of(&world, &cfg);
        }
        total / layouts.len() as f64
    };
    let s0 = setup.initial_uavs[0];
    let s1 = setup.initial_uavs[1];
    let fixed = value_of([s0, s1]);
    println!("fixed: {fixed:.6e}");
    let mut best = (fixed, s0, s1);
    for dx0 in [-100.0, -50.0, -25.0, 0.0, 25.0, 50.0] {
        for dy0 in [-100.0, -50.0, -25.0, 0.0, 25.0, 50.0] {
            for dx1 in [-50.0, 0.0, 50.0] {
                for dy1 in [-50.0, 0.0] {
                    let p0 = (s0.0 + dx0, s0.1 + dy0);
                    let p1 = ((s1.0 + dx1).max(0.0), (s1.1 + dy1).min(1000.0));
                    let v = value_of([p0, p1]);
                    if v > best.0 {
                        best = (v, p0, p1);
                    }
                }
            }
        }
    }
    println!(
        "best near-start sinks: {:?} {:?} -> {:.6e} ({:+.3}% vs fixed)",
        best.1,
        best.2,
        best.0,
        (best.0 / fixed - 1.0) * 100.0
    );
}

#[test]
fn probe_headroom() {
    let cfg = desk_preset(); // seed 1
    let setup = prepare_world(&cfg).unwrap();
    let mob_cfg = cfg.mobility_config();
    println!("initial uavs: {:?}", setup.initial_uavs);

    // Roll the UE trajectory, capture layouts at each t.
    let mut pop = setup.initial_ues.clone();
    let mut mob_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    mob_rng.set_stream(0x10000);
    let mut layouts = Vec::new();
    for t in 0..cfg.steps_per_episode {
        step_population(&mut pop, &mob_cfg, t, &mut mob_rng);
        layouts.push(pop.positions.clone());
    }

    // Phase-2 optimal placement (search on the t=100 layout).
    let mut phase2_world = setup.state0.clone();
    phase2_world.ue_positions = layouts[100].clone();
    phase2_world.uav_positions.clear();
    let phase2_opt =
        initial_uav_positions(&phase2_world, &cfg.env, cfg.powers, cfg.n_uavs, 25).unwrap();
    println!("phase2-optimal uavs: {phase2_opt:?}");

    // Policy A: stand at the t0 optimum (fixed).
    // Policy B: walk from t0 optimum toward the phase-2 optimum at 1 m/step
    //           (axis-aligned: x first then y), stand there.
    // Policy C: teleport-stand at phase-2 optimum all episode (upper bound
    //           for migration value, kinematically infeasible).
    let mut world = setup.state0.clone();
    let mut total = [0.0f64; 3];
    let mut pos_b = setup.initial_uavs.clone();
    for (t, layout) in layouts.iter().enumerate() {
        world.ue_positions = layout.clone();

        world.uav_positions = setup.initial_uavs.clone();
        total[0] += rate_of(&world, &cfg);

        for (j, p) in pos_b.iter_mut().enumerate() {
            let target = phase2_opt[j];
            if (p.0 - target.0).abs() >= 0.5 {
                p.0 += (target.0 - p.0).signum();
            } else if (p.1 - target.1).abs() >= 0.5 {
                p.1 += (target.1 - p.1).signum();
            }
        }
        world.uav_positions = pos_b.clone();
        total[1] += rate_of(&world, &cfg);

        world.uav_positions = phase2_opt.clone();
        total[2] += rate_of(&world, &cfg);

        if t == 0 || t == 65 || t == 100 || t == 133 || t == 199 {
            println!(
                "t={t}: fixed {:.4e}  migrate {:.4e}  phase2-stand {:.4e}",
                total[0], total[1], total[2]
            );
        }
    }
    let t_n = layouts.len() as f64;
    println!("mean fixed        {:.6e}", total[0] / t_n);
    println!("mean migrate      {:.6e}", total[1] / t_n);
    println!("mean phase2-stand {:.6e}", total[2] / t_n);
}
