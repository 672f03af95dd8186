mod common;

use common::{random_slot_input, reference_breakdown, rel_err, rng};
use megc::baselines::{balanced_offload_ratio, oracle_grid};
use megc::latency::{comp_latency, slot_latency, slot_rates, Action, LatencyBreakdown};
use megc::system::{SystemParams, TaskArrivals};
use proptest::prelude::*;
use rand::Rng;

fn fields(b: &LatencyBreakdown) -> [f64; 12] {
    [
        b.comp_local,
        b.comp_off,
        b.comp_es,
        b.comp_total,
        b.aigc_es,
        b.aigc_back,
        b.aigc_total,
        b.ve_off,
        b.ve_es,
        b.ve_back,
        b.ve_total,
        b.slot_total,
    ]
}

#[test]
fn matches_straight_line_transcription_on_random_inputs() {
    let p = SystemParams::paper_defaults();
    let mut r = rng(11);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (a, h, t) = random_slot_input(&mut r, &p);
        let got = fields(&slot_latency(&a, &h, &t, &p));
        let want = reference_breakdown(&a, &h, &t, &p);
        for (g, w) in got.iter().zip(want) {
            assert!(g.is_finite() && *g >= 0.0);
            worst = worst.max(rel_err(*g, w));
        }
    }
    assert!(worst <= 1e-12, "worst relative error {worst:e}");
}

#[test]
fn balanced_offload_ratio_beats_a_dense_grid() {
    let p = SystemParams::paper_defaults();
    let t = TaskArrivals::new(4e6, 4e6, 8e6, p.psi);
    let h = p.mean_channel();
    let base = Action::from_free(0.5, 0.5, 0.5, 0.0, [1.0 / 3.0; 3]);
    let r_off = slot_rates(&base, &h, &p)[0];
    let at = |lambda: f64| comp_latency(&Action { lambda, ..base }, &t, r_off, &p).total;

    // bisection on the sign of local - (offload + server)
    let gap = |lambda: f64| {
        let c = comp_latency(&Action { lambda, ..base }, &t, r_off, &p);
        c.local - (c.off + c.es)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisected = 0.5 * (lo + hi);
    let closed = balanced_offload_ratio(&h, &t, &p, &base);
    assert!((bisected - closed).abs() < 1e-12, "{bisected} vs {closed}");

    let best_grid = (0..=10_000).map(|k| at(k as f64 / 10_000.0)).fold(f64::INFINITY, f64::min);
    assert!(at(bisected) <= best_grid, "{} > {best_grid}", at(bisected));
}

#[test]
fn symmetric_action_equals_oracle_point_evaluation() {
    let p = SystemParams::paper_defaults();
    let t = TaskArrivals::new(4e6, 4e6, 8e6, p.psi);
    let h = p.mean_channel();
    let a = Action::from_free(0.5, 0.5, 0.5, 0.5, [1.0 / 3.0; 3]);
    let direct = slot_latency(&a, &h, &t, &p).slot_total;
    assert!(direct.is_finite() && direct > 0.0);
    assert!(rel_err(direct, reference_breakdown(&a, &h, &t, &p)[11]) < 1e-14);
    // a grid of spacing 1/6 contains the symmetric point
    let grid = oracle_grid(&h, &t, &p, 1.0 / 6.0).unwrap();
    assert!(grid.slot_total <= direct);
}

#[test]
fn starved_generation_share_is_infinite() {
    let p = SystemParams::paper_defaults();
    let t = TaskArrivals::new(4e6, 4e6, 8e6, p.psi);
    let a = Action::from_free(0.5, 0.5, 0.5, 0.5, [0.5, 0.0, 0.5]);
    assert_eq!(slot_latency(&a, &p.mean_channel(), &t, &p).slot_total, f64::INFINITY);
}

fn arb_input() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn overlap_never_exceeds_serial_time(seed in arb_input()) {
        let p = SystemParams::paper_defaults();
        let (a, h, t) = random_slot_input(&mut rng(seed), &p);
        let b = slot_latency(&a, &h, &t, &p);
        prop_assert!(b.comp_total <= b.comp_local + b.comp_off + b.comp_es);
        prop_assert_eq!(b.comp_total, b.comp_local.max(b.comp_off + b.comp_es));
        prop_assert_eq!(b.slot_total, b.comp_total + b.aigc_total + b.ve_total);
        for v in fields(&b) {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn more_compute_share_never_hurts(seed in arb_input(), user in 0usize..3, frac in 0.0f64..1.0) {
        let p = SystemParams::paper_defaults();
        let mut r = rng(seed);
        let (a, h, t) = random_slot_input(&mut r, &p);
        let mut w = a.omega();
        // move part of the next user's share to `user`; the third share is untouched
        let donor = (user + 1) % 3;
        let moved = frac * (w[donor] - 1e-3).max(0.0);
        w[user] += moved;
        w[donor] -= moved;
        let before = slot_latency(&a, &h, &t, &p);
        let after_action = Action { omega_comp: w[0], omega_aigc: w[1], omega_ve: w[2], ..a };
        let after = slot_latency(&after_action, &h, &t, &p);
        let user_total = |b: &LatencyBreakdown| [b.comp_total, b.aigc_total, b.ve_total][user];
        prop_assert!(user_total(&after) <= user_total(&before) * (1.0 + 1e-15));
    }

    #[test]
    fn scaling_data_and_cpus_together_keeps_compute_times(seed in arb_input(), k in 0.1f64..10.0) {
        let p = SystemParams::paper_defaults();
        let mut r = rng(seed);
        let (a, _, t) = random_slot_input(&mut r, &p);
        let scaled = SystemParams { f_comp: p.f_comp * k, f_es: p.f_es * k, ..p.clone() };
        let tk = TaskArrivals::new(t.d_comp * k, t.d_ve, t.d_aigc_out, p.psi);
        let rate: f64 = r.gen_range(1e6..1e8);
        let c1 = comp_latency(&a, &t, rate, &p);
        let c2 = comp_latency(&a, &tk, rate, &scaled);
        prop_assert!(rel_err(c1.local, c2.local) < 1e-14);
        prop_assert!(rel_err(c1.es, c2.es) < 1e-14);
    }
}
