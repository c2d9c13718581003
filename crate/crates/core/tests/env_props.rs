mod common;

use imp_core::belief::propagate;
use imp_core::envs::{Action, EnvConfig, ImpEnv, ModelSet};
use imp_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env(config: EnvConfig) -> ImpEnv {
    let models = if config.family.is_struct() {
        common::struct_models()
    } else {
        common::owf_models()
    };
    ImpEnv::new(config, models).unwrap()
}

fn random_actions(rng: &mut ChaCha8Rng, n: usize) -> Vec<Action> {
    (0..n)
        .map(|_| Action::try_from(rng.random_range(0..3u8)).unwrap())
        .collect()
}

#[test]
fn vector_sizes_follow_the_layout() {
    let cases = [
        (EnvConfig::struct_uc(3, 2), 31, 94),
        (EnvConfig::struct_c(3, 2), 111, 3 * 30 + 3 + 80 + 1),
        (EnvConfig::struct_c(5, 4), 111, 5 * 30 + 5 + 80 + 1),
        (EnvConfig::owf(1), 61, 181),
        (EnvConfig::owf(2), 61, 361),
    ];
    for (config, obs, state) in cases {
        let mut e = env(config);
        let o = e.reset(0).unwrap();
        assert_eq!(o.len(), e.n_agents());
        assert!(o.iter().all(|v| v.len() == obs));
        assert_eq!(e.obs_dim(), obs);
        assert_eq!(e.state().len(), state);
        assert_eq!(e.state_dim(), state);
        assert_eq!(*o[0].last().unwrap(), 0.0);
        let r = e.step(&vec![Action::DoNothing; e.n_agents()]).unwrap();
        let h = e.config().horizon as f64;
        assert_eq!(*r.observations[0].last().unwrap(), 1.0 / h);
        assert_eq!(*r.state.last().unwrap(), 1.0 / h);
    }
}

#[test]
fn repair_restarts_from_the_intact_belief() {
    let mut e = env(EnvConfig::struct_uc(3, 2));
    e.reset(4).unwrap();
    for _ in 0..6 {
        e.step(&[Action::DoNothing; 3]).unwrap();
    }
    let r = e.step(&[Action::Repair, Action::Inspect, Action::DoNothing]).unwrap();
    let m = e.models().for_component(0);
    let expected = propagate(&m.initial_belief(), m, 0).unwrap();
    assert_eq!(e.beliefs()[0], expected);
    assert_eq!(e.deterioration_rates(), &[1, 7, 7]);
    assert_eq!(r.info.repair, -20.0);
    assert_eq!(r.info.inspection, -1.0);
    assert_eq!(r.info.repair + r.info.inspection, -21.0);
    assert_eq!(r.info.campaign, 0.0);
}

#[test]
fn correlated_repair_resets_every_factor_row() {
    let mut e = env(EnvConfig::struct_c(3, 2));
    e.reset(1).unwrap();
    for _ in 0..5 {
        e.step(&[Action::Inspect; 3]).unwrap();
    }
    e.step(&[Action::Repair, Action::DoNothing, Action::DoNothing]).unwrap();
    let m = e.models().for_component(0);
    let expected = propagate(&m.initial_belief(), m, 0).unwrap();
    let cb = e.correlation_belief().unwrap();
    for k in 0..cb.n_alpha() {
        let row = cb.conditional_row(0, k);
        for (a, b) in row.iter().zip(expected.probs()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    let alpha_sum: f64 = cb.alpha_probs().iter().sum();
    assert!((alpha_sum - 1.0).abs() <= 1e-12);
}

#[test]
fn wind_farm_agents_pay_their_own_class() {
    let mut e = env(EnvConfig::owf(2));
    e.reset(0).unwrap();
    assert_eq!(
        (e.agent_component(0), e.agent_component(1), e.agent_component(3)),
        (0, 1, 4)
    );
    let r = e
        .step(&[Action::Inspect, Action::DoNothing, Action::DoNothing, Action::DoNothing])
        .unwrap();
    assert_eq!(r.info.inspection, -1.0);
    let r = e
        .step(&[Action::DoNothing, Action::Inspect, Action::DoNothing, Action::DoNothing])
        .unwrap();
    assert_eq!(r.info.inspection, -4.0);
    let r = e
        .step(&[Action::Repair, Action::Repair, Action::DoNothing, Action::DoNothing])
        .unwrap();
    assert_eq!(r.info.repair, -40.0);
}

#[test]
fn campaign_cost_is_charged_once_for_any_activity() {
    let mut e = env(EnvConfig::struct_uc(3, 2).with_campaign_cost(true));
    e.reset(9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    while !e.is_done() {
        let acts = random_actions(&mut rng, 3);
        let r = e.step(&acts).unwrap();
        let active = acts.iter().any(|&a| a != Action::DoNothing);
        assert_eq!(r.info.campaign, if active { -5.0 } else { 0.0 });
        let n_ins = acts.iter().filter(|&&a| a == Action::Inspect).count() as f64;
        assert!((r.info.inspection + 0.2 * n_ins).abs() < 1e-12);
    }
}

#[test]
fn reward_is_the_sum_of_its_parts() {
    let configs = [
        EnvConfig::struct_uc(4, 2),
        EnvConfig::struct_c(3, 2),
        EnvConfig::owf(2).with_campaign_cost(true),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for config in configs {
        let mut e = env(config);
        e.reset(3).unwrap();
        while !e.is_done() {
            let acts = random_actions(&mut rng, e.n_agents());
            let r = e.step(&acts).unwrap();
            let i = &r.info;
            assert!((i.risk + i.inspection + i.repair + i.campaign - r.reward).abs() <= 1e-9);
            assert!(i.risk <= 0.0 && (0.0..=1.0).contains(&i.p_sys));
            for b in e.beliefs() {
                assert!((b.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
            for (a, d) in acts.iter().zip(&i.detections) {
                assert_eq!(*a == Action::Inspect, d.is_some());
            }
        }
    }
}

#[test]
fn doing_nothing_is_deterministic() {
    let run = |seed| {
        let mut e = env(EnvConfig::struct_c(3, 2));
        e.reset(seed).unwrap();
        let mut rewards = Vec::new();
        while !e.is_done() {
            rewards.push(e.step(&[Action::DoNothing; 3]).unwrap().reward);
        }
        rewards
    };
    let a = run(1);
    assert_eq!(a.len(), 30);
    assert_eq!(a, run(2));
}

#[test]
fn same_seed_gives_identical_trajectories() {
    let run = |seed| {
        let mut e = env(EnvConfig::owf(2));
        e.reset(seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut trace = Vec::new();
        while !e.is_done() {
            let r = e.step(&random_actions(&mut rng, 4)).unwrap();
            trace.push((r.info, r.state));
        }
        trace
    };
    assert_eq!(run(12), run(12));
    assert_ne!(run(12), run(13));
}

#[test]
fn invalid_steps_are_rejected_without_side_effects() {
    let mut e = env(EnvConfig::struct_uc(3, 2));
    assert!(matches!(e.step(&[Action::DoNothing; 3]), Err(Error::EpisodeDone)));
    e.reset(0).unwrap();
    e.step(&[Action::Inspect; 3]).unwrap();
    let before = (e.beliefs().to_vec(), e.time());
    assert!(matches!(
        e.step(&[Action::DoNothing; 2]),
        Err(Error::IllegalAction { .. })
    ));
    assert!(matches!(
        e.step_codes(&[0, 3, 0]),
        Err(Error::IllegalAction { agent: 1, .. })
    ));
    assert_eq!((e.beliefs().to_vec(), e.time()), before);
    while !e.is_done() {
        e.step(&[Action::DoNothing; 3]).unwrap();
    }
    assert!(matches!(e.step(&[Action::DoNothing; 3]), Err(Error::EpisodeDone)));
    e.reset(0).unwrap();
    assert_eq!(e.time(), 0);
}

#[test]
fn mismatched_models_are_refused() {
    let owf: ModelSet = common::owf_models();
    assert!(ImpEnv::new(EnvConfig::struct_uc(3, 2), owf).is_err());
    let mut config = EnvConfig::struct_uc(3, 2);
    config.k_comp = Some(4);
    assert!(ImpEnv::new(config, common::struct_models()).is_err());
}
