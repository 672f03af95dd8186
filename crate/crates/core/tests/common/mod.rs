//! Helpers shared by the integration test targets. Each target uses a
//! different subset.
#![allow(dead_code)]

use std::f64::consts::LN_2;

use megc::agent::{AgentConfig, Batch, DdpgAgent, TargetUpdate};
use megc::env::{project_action, RawAction, State, Transition, STATE_DIM};
use megc::latency::Action;
use megc::nn::{Activation, Mlp};
use megc::system::{sample_channel, ChannelState, Fading, SystemParams, TaskArrivals};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Straight-line transcription of the slot model, written without any of
/// the crate's latency or rate helpers. Returns the twelve breakdown
/// entries in `LatencyBreakdown` field order.
pub fn reference_breakdown(a: &Action, h: &ChannelState, t: &TaskArrivals, p: &SystemParams) -> [f64; 12] {
    let rate = |share: f64, bw: f64, power: f64, gain: f64| {
        if share == 0.0 || power == 0.0 {
            0.0
        } else {
            share * bw * (power * gain / (share * bw * p.n0)).ln_1p() / LN_2
        }
    };
    let div = |num: f64, den: f64| {
        if num == 0.0 {
            0.0
        } else if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    };

    let r_comp_up = rate(a.alpha_comp_off, p.b_off, p.p_comp, h.h_comp_off);
    let r_ve_up = rate(a.alpha_ve_off, p.b_off, p.p_ve, h.h_ve_off);
    let r_aigc_down = rate(a.alpha_aigc_back, p.b_back, a.beta * p.p_es, h.h_aigc_back);
    let r_ve_down = rate(a.alpha_ve_back, p.b_back, (1.0 - a.beta) * p.p_es, h.h_ve_back);

    let comp_off = div(a.lambda * t.d_comp, r_comp_up);
    let comp_local = (1.0 - a.lambda) * p.chi * t.d_comp / p.f_comp;
    let comp_es = div(a.lambda * p.chi * t.d_comp, a.omega_comp * p.f_es);
    let comp_total = if comp_local > comp_off + comp_es { comp_local } else { comp_off + comp_es };

    let aigc_es = div(p.xi * p.chi * t.d_aigc_out + p.zeta, a.omega_aigc * p.f_es);
    let aigc_back = div(t.d_aigc_out, r_aigc_down);
    let aigc_total = aigc_es + aigc_back;

    let d_ve_out = p.psi * t.d_ve;
    let ve_off = div(t.d_ve, r_ve_up);
    let ve_es = div(p.xi * p.chi * d_ve_out + p.zeta, a.omega_ve * p.f_es);
    let ve_back = div(d_ve_out, r_ve_down);
    let ve_total = ve_off + ve_es + ve_back;

    [
        comp_local,
        comp_off,
        comp_es,
        comp_total,
        aigc_es,
        aigc_back,
        aigc_total,
        ve_off,
        ve_es,
        ve_back,
        ve_total,
        comp_total + aigc_total + ve_total,
    ]
}

/// Uniform `[lo, hi]` Mbit draw in bits.
fn mbits<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi) * 1e6
}

/// A random feasible slot input: a Rician-faded channel, random tasks and a
/// random interior action (half from the projection, half from uniform
/// splits), so every latency is finite.
pub fn random_slot_input<R: Rng>(rng: &mut R, p: &SystemParams) -> (Action, ChannelState, TaskArrivals) {
    let channel = sample_channel(p, Fading::Rician { k: 3.0 }, rng);
    let tasks = TaskArrivals::new(mbits(rng, 1.0, 8.0), mbits(rng, 1.0, 8.0), mbits(rng, 2.0, 16.0), p.psi);
    let action = if rng.gen_bool(0.5) {
        let mut raw = [0.0; RawAction::DIM];
        for x in raw.iter_mut() {
            *x = 3.0 * rng.sample::<f64, _>(StandardNormal);
        }
        project_action(&RawAction(raw))
    } else {
        let w: [f64; 3] = [rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0)];
        let s = w[0] + w[1] + w[2];
        Action::from_free(
            rng.gen_range(0.01..0.99),
            rng.gen_range(0.01..0.99),
            rng.gen_range(0.01..0.99),
            rng.gen(),
            [w[0] / s, w[1] / s, 1.0 - w[0] / s - w[1] / s],
        )
    };
    (action, channel, tasks)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut work = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = work[i];
            work[i] = orig + h;
            let up = f(&work);
            work[i] = orig - h;
            let down = f(&work);
            work[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error of two gradient vectors in the Euclidean norm.
pub fn grad_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn random_activation<R: Rng>(rng: &mut R) -> Activation {
    match rng.gen_range(0..3) {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        _ => Activation::Identity,
    }
}

/// A randomly shaped network with 1 to 3 hidden layers of at most 64 units.
pub fn random_mlp<R: Rng>(rng: &mut R) -> Mlp {
    let depth = rng.gen_range(1..=3);
    let mut sizes = vec![rng.gen_range(1..=8)];
    for _ in 0..depth {
        sizes.push(rng.gen_range(1..=64));
    }
    sizes.push(rng.gen_range(1..=4));
    let mut net = Mlp::new(&sizes, random_activation(rng), random_activation(rng)).unwrap();
    net.init_uniform(rng, 1.0);
    net
}

/// Agent with small networks suitable for finite-difference checks.
pub fn small_agent(seed: u64) -> DdpgAgent {
    let config = AgentConfig {
        actor_hidden: vec![16, 16],
        critic_hidden: vec![24, 24],
        actor_final_scale: 1.0,
        target_update: TargetUpdate::PerStep,
        ..AgentConfig::default()
    };
    DdpgAgent::new(config, &mut rng(seed)).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R) -> State {
    let mut features = [0.0; STATE_DIM];
    for f in features.iter_mut() {
        *f = rng.gen_range(0.0..1.5);
    }
    State { features, t: 1 }
}

/// A batch of random transitions with projected actions and rewards in the
/// environment's range.
pub fn random_batch<R: Rng>(rng: &mut R, n: usize) -> Batch {
    let transitions: Vec<Transition> = (0..n)
        .map(|_| {
            let mut raw = [0.0; RawAction::DIM];
            for x in raw.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            Transition {
                state: random_state(rng),
                action: project_action(&RawAction(raw)),
                reward: -rng.gen_range(0.05..6.0),
                next_state: random_state(rng),
                terminal: false,
            }
        })
        .collect();
    Batch::from_transitions(&transitions)
}
