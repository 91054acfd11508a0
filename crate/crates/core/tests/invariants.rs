//! Property tests over the public API, one block per module.

use std::collections::HashSet;

use proptest::prelude::*;
use vsr_core::bayesopt::{bo_learn, BoConfig, SampleArchive};
use vsr_core::controller::{forward, uniform_params, BrainParams, ControllerSpec, ACTUATION_MAX, ACTUATION_MIN};
use vsr_core::evolution::{tournament_select, Individual};
use vsr_core::morphology::{mutate_body, random_body, BodyGrid, GRID, MAX_VOXELS, MIN_VOXELS};
use vsr_core::physics::{assemble, SimConfig, Terrain, SENSOR_LEN};
use vsr_core::seeding::stream;
use vsr_core::strategies::{select_init_candidates, Learner, Provenance, SelectionConfig, StrategyId};
use vsr_core::tasks::{TaskEnv, TaskId};

fn changed_cells(a: &BodyGrid, b: &BodyGrid) -> usize {
    (0..GRID).flat_map(|r| (0..GRID).map(move |c| (r, c))).filter(|&(r, c)| a.get(r, c) != b.get(r, c)).count()
}

fn population(seed: u64, n: usize, samples: usize, dim: usize) -> Vec<Individual> {
    let mut rng = stream(seed, &[]);
    (0..n)
        .map(|i| {
            let mut archive = SampleArchive::new();
            for s in 0..samples {
                archive.push(uniform_params(dim, -1.0, 1.0, &mut rng), (i * 31 + s * 7) as f64 % 11.0);
            }
            Individual::from_archive(random_body(&mut rng), None, archive, None, i as u64)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bodies_stay_valid_under_mutation(seed in any::<u64>(), rounds in 1usize..30) {
        let mut rng = stream(seed, &[]);
        let mut body = random_body(&mut rng);
        prop_assert!(body.is_valid_polyomino());
        for _ in 0..rounds {
            let child = mutate_body(&body, &mut rng).unwrap();
            prop_assert!(child.is_valid_polyomino());
            prop_assert!((MIN_VOXELS..=MAX_VOXELS).contains(&child.voxel_count()));
            prop_assert!((1..=3).contains(&changed_cells(&body, &child)));
            body = child;
        }
    }

    #[test]
    fn controller_output_is_bounded(seed in any::<u64>(), scale in 0.0f64..1e3, input in -1e3f64..1e3) {
        let spec = ControllerSpec::default();
        let mut rng = stream(seed, &[]);
        let theta = uniform_params(spec.param_count(), -scale, scale, &mut rng);
        let x: Vec<f64> = uniform_params(SENSOR_LEN, -1.0, 1.0, &mut rng).iter().map(|v| v * input).collect();
        let y = forward(&spec, &theta, &x).unwrap();
        prop_assert!(y > ACTUATION_MIN && y < ACTUATION_MAX);
        prop_assert_eq!(y.to_bits(), forward(&spec, &theta, &x).unwrap().to_bits());
    }

    #[test]
    fn physics_steps_are_deterministic_and_clamped(seed in any::<u64>(), targets in prop::collection::vec(prop_oneof![-10.0f64..10.0, Just(f64::NAN), Just(f64::INFINITY)], 25)) {
        let cfg = SimConfig::default();
        let terrain = Terrain::flat(0.0, -50.0, 50.0);
        let body = random_body(&mut stream(seed, &[]));
        let mut a = assemble(&body, &cfg, &terrain, 0.0).unwrap();
        let act = &targets[..a.voxel_count()];
        for _ in 0..20 {
            let mut b = a.clone();
            a.step(act, &cfg, &terrain, None).unwrap();
            b.step(act, &cfg, &terrain, None).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.voxels.iter().all(|v| (ACTUATION_MIN..=ACTUATION_MAX).contains(&v.scale)));
        }
        prop_assert!(a.observe(None, true).as_slice().len() == SENSOR_LEN * a.voxel_count());
    }

    #[test]
    fn social_candidates_have_the_fixed_budget(seed in any::<u64>(), n0 in 1usize..6, teachers in 6usize..10) {
        let dim = 4;
        let prev = population(seed, teachers, 8, dim);
        let body = random_body(&mut stream(seed, &[1]));
        let learner = Learner { body: &body, parent: Some(0), genotype: None };
        let cfg = SelectionConfig { n0, dim, bounds: (-2.0, 2.0) };
        for strategy in StrategyId::ALL.into_iter().filter(|s| s.is_social()) {
            let cands = select_init_candidates(strategy, learner, &prev, &cfg, &mut stream(seed, &[2])).unwrap();
            prop_assert_eq!(cands.len(), n0);
            let sources: Vec<usize> = cands
                .iter()
                .map(|c| match c.source {
                    Provenance::Teacher { teacher, .. } => teacher,
                    other => panic!("{strategy}: unexpected source {other:?}"),
                })
                .collect();
            let distinct: HashSet<usize> = sources.iter().copied().collect();
            match strategy {
                StrategyId::Parent | StrategyId::BestOne | StrategyId::SimilarOne | StrategyId::RandomOne => {
                    prop_assert_eq!(distinct.len(), 1)
                }
                _ => prop_assert_eq!(distinct.len(), n0),
            }
            let again = select_init_candidates(strategy, learner, &prev, &cfg, &mut stream(seed, &[2])).unwrap();
            prop_assert_eq!(cands, again);
        }
        let genotype = BrainParams::zeros(dim);
        let il = Learner { body: &body, parent: Some(0), genotype: Some(&genotype) };
        prop_assert_eq!(select_init_candidates(StrategyId::Il, il, &prev, &cfg, &mut stream(seed, &[2])).unwrap().len(), 1);
    }

    #[test]
    fn learning_spends_exactly_the_budget(seed in any::<u64>(), n_init in 1usize..5, extra in 0usize..6) {
        let cfg = BoConfig { n_final: n_init + extra, restarts: 2, max_iter: 15, ..Default::default() };
        let mut calls = 0;
        let objective = |x: &BrainParams| {
            calls += 1;
            Ok::<f64, ()>(-x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>())
        };
        let mut rng = stream(seed, &[]);
        let init: Vec<BrainParams> = (0..n_init).map(|_| uniform_params(3, -1.0, 1.0, &mut rng)).collect();
        let archive = bo_learn(objective, &init, &cfg, &mut rng).unwrap();
        prop_assert_eq!(calls, cfg.n_final);
        prop_assert_eq!(archive.len(), cfg.n_final);
        prop_assert!(archive.best_so_far().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn tournaments_pick_a_contestant(q in prop::collection::vec(-10.0f64..10.0, 1..30), seed in any::<u64>(), k in 1usize..30) {
        let k = k.min(q.len());
        let i = tournament_select(&q, k, &mut stream(seed, &[]));
        prop_assert!(i < q.len());
        let full = tournament_select(&q, q.len(), &mut stream(seed, &[]));
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(q[full], best);
        prop_assert_eq!(full, q.iter().position(|&v| v == best).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn episodes_are_pure(seed in any::<u64>(), task in prop::sample::select(TaskId::ALL.to_vec()), episode in any::<u64>()) {
        let mut env = TaskEnv::new(task);
        env.params.episode_steps = 40;
        let mut rng = stream(seed, &[]);
        let body = random_body(&mut rng);
        let theta = uniform_params(env.controller.param_count(), -1.0, 1.0, &mut rng);
        let a = env.run_episode(&body, &theta, episode).unwrap();
        let b = env.run_episode(&body, &theta, episode).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.quality.is_finite());
        if task.has_payload() && !a.carried {
            prop_assert!(a.quality <= 0.0);
        }
        if !task.has_payload() {
            prop_assert!(a.payload_start.is_none() && !a.carried);
        }
    }
}
