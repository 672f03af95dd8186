mod common;

use common::{random_mlp, rng, small_agent};
use megc::agent::Checkpoint;
use megc::baselines::fra_policy;
use megc::env::{project_action, unproject_action, EnvConfig, MegcEnv, Normalizer, RawAction, PROJECTION_EPS};
use megc::harness::{eval_slots, evaluate, Policy};
use megc::latency::Action;
use megc::nn::Mlp;
use megc::system::{backhaul_rate, offload_rate, ChannelState, SystemParams};
use proptest::prelude::*;

const N0: f64 = 1e-13;

fn raw_strategy() -> impl Strategy<Value = [f64; 7]> {
    prop::array::uniform7(-30.0f64..30.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rate_grows_with_power_and_gain(
        alpha in 0.0f64..=1.0,
        p in 0.0f64..50.0,
        dp in 0.0f64..10.0,
        h in 1e-10f64..1e-5,
        dh in 0.0f64..1e-5,
    ) {
        let base = offload_rate(alpha, 4e8, p, h, N0).unwrap();
        prop_assert!(base.is_finite() && base >= 0.0);
        prop_assert!(offload_rate(alpha, 4e8, p + dp, h, N0).unwrap() >= base);
        prop_assert!(offload_rate(alpha, 4e8, p, h + dh, N0).unwrap() >= base);
    }

    #[test]
    fn rate_grows_with_bandwidth_share(c in 1e-6f64..1e3, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        // c is the full-band SNR p*h/(B*N0)
        let h = c * 4e8 * N0 / 15.0;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r_lo = offload_rate(lo, 4e8, 15.0, h, N0).unwrap();
        let r_hi = offload_rate(hi, 4e8, 15.0, h, N0).unwrap();
        prop_assert!(r_hi >= r_lo * (1.0 - 1e-15), "{r_hi} < {r_lo}");
    }

    #[test]
    fn backhaul_is_offload_at_scaled_power(
        alpha in 0.0f64..=1.0,
        share in 0.0f64..=1.0,
        total in 0.0f64..50.0,
        h in 1e-10f64..1e-5,
    ) {
        prop_assert_eq!(
            backhaul_rate(alpha, 4e8, share, total, h, N0).unwrap(),
            offload_rate(alpha, 4e8, share * total, h, N0).unwrap()
        );
    }

    #[test]
    fn projection_is_feasible_and_clamped(raw in raw_strategy()) {
        let a = project_action(&RawAction(raw));
        prop_assert!(a.max_violation() <= 1e-9, "{a:?}");
        for v in a.to_array() {
            let lo = PROJECTION_EPS * (1.0 - 1e-12);
            prop_assert!((lo..=1.0 - lo).contains(&v), "{v}");
        }
    }

    #[test]
    fn reprojection_is_idempotent(raw in prop::array::uniform7(-8.0f64..8.0)) {
        let a = project_action(&RawAction(raw));
        let back = unproject_action(&a).expect("interior action inverts");
        let again = project_action(&back);
        for (x, y) in a.to_array().iter().zip(again.to_array()) {
            prop_assert!((x - y).abs() <= 1e-9, "{a:?} vs {again:?}");
        }
    }

    #[test]
    fn action_flattening_round_trips(raw in raw_strategy()) {
        let a = project_action(&RawAction(raw));
        prop_assert_eq!(Action::from_array(a.to_array()), a);
    }

    #[test]
    fn normalization_round_trips(
        h in prop::array::uniform4(1e-10f64..1e-5),
        d_comp in 1e6f64..8e6,
        d_ve in 1e6f64..8e6,
    ) {
        let n = Normalizer::new(&SystemParams::paper_defaults());
        let (ch, dc, dv) = n.denormalize(&n.normalize(&ChannelState::from_array(h), d_comp, d_ve));
        for (x, y) in ch.as_array().iter().zip(h) {
            prop_assert!((x - y).abs() <= 1e-12 * y);
        }
        prop_assert!((dc - d_comp).abs() <= 1e-12 * d_comp);
        prop_assert!((dv - d_ve).abs() <= 1e-12 * d_ve);
    }

    #[test]
    fn lower_latency_means_higher_reward(a in 0.0f64..60.0, b in 0.0f64..60.0) {
        let c = EnvConfig::default();
        if a < b {
            prop_assert!(c.reward(a) > c.reward(b));
        }
        prop_assert!(c.reward(a) < 0.0 || a == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mlp_parameters_survive_serialisation(seed in any::<u64>()) {
        let net = random_mlp(&mut rng(seed));
        let text = serde_json::to_string(&net).unwrap();
        let back: Mlp = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.params().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                        net.params().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back, net);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(seed in any::<u64>()) {
        let agent = small_agent(seed);
        let ckpt = Checkpoint::new(agent, 7);
        let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, ckpt);
    }
}

#[test]
fn episode_rewards_account_for_evaluated_latency() {
    let p = SystemParams::paper_defaults();
    let config = EnvConfig::default();
    let mut env = MegcEnv::new(p.clone(), config.clone()).unwrap();
    env.reset(77);
    let action = fra_policy();
    let mut sum = 0.0;
    let mut steps = 0;
    loop {
        let out = env.step(&action).unwrap();
        sum += -out.reward * config.l_scale;
        steps += 1;
        if out.done {
            break;
        }
    }
    assert_eq!(steps, p.t_horizon);
    let report = evaluate(&Policy::Fra(action), &eval_slots(&p, &config, 77, steps), &p, 77, None).unwrap();
    let from_rewards = sum / steps as f64;
    assert!((from_rewards - report.mean_slot_total()).abs() <= 1e-12 * from_rewards);
}

#[test]
fn environment_is_determined_by_seed_and_actions() {
    let p = SystemParams::paper_defaults();
    let run = || {
        let mut env = MegcEnv::new(p.clone(), EnvConfig::default()).unwrap();
        let mut states = vec![env.reset(5)];
        let mut r = rng(3);
        for _ in 0..p.t_horizon {
            let out = env.step(&megc::baselines::rra_policy(&mut r)).unwrap();
            states.push(out.next);
        }
        states
    };
    assert_eq!(run(), run());
}
