use ragc::detect::{f1_score, BBox};
use ragc::env::{
    rollout_fixed_power, EnvConfig, Environment, RadarEnv, SceneData, ThresholdEnv,
};
use ragc::radar::{ChirpParams, ObjectClass};
use ragc::scene::{generate_scene, CountRange, SceneConfig};

fn scene(peds: usize, vehicles: usize, clutter: usize, seed: u64, frames: usize) -> SceneData {
    let cfg = SceneConfig {
        num_frames: frames,
        pedestrians: CountRange::fixed(peds),
        vehicles: CountRange::fixed(vehicles),
        clutter_points: clutter,
        rng_seed: seed,
        ..SceneConfig::default()
    };
    let s = generate_scene(&cfg, &ChirpParams::default()).unwrap();
    SceneData::from_scene(format!("s{seed}"), &s)
}

fn env_config(len: usize) -> EnvConfig {
    EnvConfig {
        episode_length: len,
        state_height: 32,
        state_width: 32,
        ..EnvConfig::default()
    }
}

#[test]
fn empty_scene_rewards_are_one_minus_action() {
    let mut env = RadarEnv::new(
        env_config(12),
        ChirpParams::default(),
        vec![scene(0, 0, 50, 3, 12)],
        7,
    )
    .unwrap();
    let s0 = env.reset().unwrap();
    assert!(s0.data().iter().all(|v| (0.0..=1.0).contains(v)));
    let actions = [-1.0, -0.5, 0.0, 0.3, 1.0, 0.9, -0.2, 0.7, 0.1, -0.9, 0.5, 0.25];
    for (i, &a) in actions.iter().enumerate() {
        let r = env.step(a).unwrap();
        let norm = (a + 1.0) / 2.0;
        assert_eq!(r.info.num_targets, 0);
        assert_eq!(r.reward, 1.0 - norm, "step {i}");
        assert_eq!(r.done, i == actions.len() - 1);
    }
    assert!(env.step(0.0).is_err());
}

#[test]
fn reward_arithmetic_for_mixed_detections() {
    let gt = vec![
        BBox::new((10, 12), (40, 44), 1.0, ObjectClass::Vehicle),
        BBox::new((80, 81), (70, 72), 1.0, ObjectClass::Pedestrian),
    ];
    let dets = vec![
        BBox::new((10, 12), (40, 44), 0.9, ObjectClass::Vehicle),
        BBox::new((150, 151), (20, 22), 0.8, ObjectClass::Vehicle),
    ];
    let s = f1_score(&dets, &gt, 0.5, true);
    assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (1, 1, 1));
    let (_, norm) = EnvConfig::default().action_to_power(0.0);
    assert_eq!(s.f1 - norm, 0.0);
}

#[test]
fn next_state_uses_the_chosen_power() {
    let data = scene(0, 2, 0, 11, 6);
    let mut lo = RadarEnv::new(env_config(5), ChirpParams::default(), vec![data.clone()], 1).unwrap();
    let mut hi = RadarEnv::new(env_config(5), ChirpParams::default(), vec![data], 1).unwrap();
    let a = lo.reset().unwrap();
    let b = hi.reset().unwrap();
    assert_eq!(a, b);
    let rl = lo.step(-1.0).unwrap();
    let rh = hi.step(1.0).unwrap();
    // same scored frame and power, so same reward up to the action cost
    assert_eq!(rl.info.f1, rh.info.f1);
    assert_eq!(rl.info.scored_power_db, 15.0);
    let sum = |t: &ragc::tensor::Tensor| t.data().iter().sum::<f64>();
    assert!(sum(&rh.next_state) > sum(&rl.next_state));
    let rl2 = lo.step(0.0).unwrap();
    let rh2 = hi.step(0.0).unwrap();
    assert_eq!(rl2.info.scored_power_db, 0.0);
    assert_eq!(rh2.info.scored_power_db, 30.0);
}

#[test]
fn episodes_are_reproducible_and_round_robin() {
    let scenes = vec![scene(1, 1, 40, 1, 8), scene(2, 0, 40, 2, 8)];
    let run = || {
        let mut env = RadarEnv::new(env_config(8), ChirpParams::default(), scenes.clone(), 5).unwrap();
        let mut order = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..3 {
            env.reset().unwrap();
            order.push(env.current_scene().unwrap());
            for k in 0..8 {
                rewards.push(env.step((k as f64 / 4.0) - 1.0).unwrap().reward);
            }
        }
        (order, rewards)
    };
    let (o1, r1) = run();
    let (o2, r2) = run();
    assert_eq!(o1, vec![0, 1, 0]);
    assert_eq!(o1, o2);
    assert_eq!(r1, r2);
}

#[test]
fn higher_power_never_hurts_on_clean_scene() {
    let data = scene(0, 1, 0, 21, 10);
    let env = RadarEnv::new(env_config(10), ChirpParams::default(), vec![data], 2).unwrap();
    let low = rollout_fixed_power(&env, 0, 0.0, 0).unwrap();
    let high = rollout_fixed_power(&env, 0, 30.0, 0).unwrap();
    for (h, l) in high.f1.iter().zip(&low.f1) {
        assert!(h >= l, "{h} < {l}");
    }
    assert!(high.f1.iter().sum::<f64>() >= 0.9 * high.f1.len() as f64);
    assert!(rollout_fixed_power(&env, 0, 31.0, 0).is_err());
}

#[test]
fn missing_scene_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = SceneData::load("x", &dir.path().join("a.csv"), &dir.path().join("b.csv"), 10);
    assert!(matches!(err, Err(ragc::Error::Data(_))));
}

#[test]
fn threshold_env_rewards() {
    let mut env = ThresholdEnv::new([1, 4, 4], 3, 0.5, 0).unwrap();
    env.reset().unwrap();
    env.step(0.0).unwrap();
    let r = env.step(-1.0).unwrap();
    assert_eq!((r.info.f1, r.reward), (1.0, 1.0));
    let r = env.step(0.2).unwrap();
    assert_eq!(r.info.f1, 0.0);
    assert!((r.reward + 0.6).abs() < 1e-12);
    assert!(r.done);
}
