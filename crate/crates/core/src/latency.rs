//! Per-user latency pipelines and the per-slot objective.
//!
//! Starved resources (a zero rate or zero compute share facing positive
//! work) produce `f64::INFINITY` rather than a NaN or a panic, so that
//! infeasible corners of the action space simply compare as worst.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{shannon_rate, ChannelState, SystemParams, TaskArrivals};

/// Tolerance for the equality constraints on bandwidth and compute shares.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// One slot's complete decision: two bandwidth splits, the server power
/// split, the computing user's offload ratio and the server compute split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub alpha_comp_off: f64,
    pub alpha_ve_off: f64,
    pub alpha_aigc_back: f64,
    pub alpha_ve_back: f64,
    pub beta: f64,
    pub lambda: f64,
    pub omega_comp: f64,
    pub omega_aigc: f64,
    pub omega_ve: f64,
}

impl Action {
    pub const DIM: usize = 9;

    /// Builds a feasible action from its free coordinates; the second member
    /// of each bandwidth pair is the complement of the first.
    pub fn from_free(alpha_off: f64, alpha_back: f64, beta: f64, lambda: f64, omega: [f64; 3]) -> Self {
        Self {
            alpha_comp_off: alpha_off,
            alpha_ve_off: 1.0 - alpha_off,
            alpha_aigc_back: alpha_back,
            alpha_ve_back: 1.0 - alpha_back,
            beta,
            lambda,
            omega_comp: omega[0],
            omega_aigc: omega[1],
            omega_ve: omega[2],
        }
    }

    /// Decision vector in the order (alpha x4, beta, lambda, omega x3).
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.alpha_comp_off,
            self.alpha_ve_off,
            self.alpha_aigc_back,
            self.alpha_ve_back,
            self.beta,
            self.lambda,
            self.omega_comp,
            self.omega_aigc,
            self.omega_ve,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        Self {
            alpha_comp_off: a[0],
            alpha_ve_off: a[1],
            alpha_aigc_back: a[2],
            alpha_ve_back: a[3],
            beta: a[4],
            lambda: a[5],
            omega_comp: a[6],
            omega_aigc: a[7],
            omega_ve: a[8],
        }
    }

    pub fn omega(&self) -> [f64; 3] {
        [self.omega_comp, self.omega_aigc, self.omega_ve]
    }

    /// Largest violation of any box or sum constraint.
    pub fn max_violation(&self) -> f64 {
        let box_violation = self
            .to_array()
            .iter()
            .map(|&v| if v.is_nan() { f64::INFINITY } else { (-v).max(v - 1.0).max(0.0) })
            .fold(0.0, f64::max);
        let sums = [
            (self.alpha_comp_off + self.alpha_ve_off - 1.0).abs(),
            (self.alpha_aigc_back + self.alpha_ve_back - 1.0).abs(),
            (self.omega_comp + self.omega_aigc + self.omega_ve - 1.0).abs(),
        ];
        sums.iter().copied().fold(box_violation, f64::max)
    }

    pub fn is_feasible(&self) -> bool {
        self.max_violation() <= SUM_TOLERANCE
    }

    pub fn validate(&self) -> Result<()> {
        let names = [
            "alpha_comp_off",
            "alpha_ve_off",
            "alpha_aigc_back",
            "alpha_ve_back",
            "beta",
            "lambda",
            "omega_comp",
            "omega_aigc",
            "omega_ve",
        ];
        for (name, v) in names.iter().zip(self.to_array()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(*name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if (self.alpha_comp_off + self.alpha_ve_off - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation("alpha_off", "offload shares must sum to 1"));
        }
        if (self.alpha_aigc_back + self.alpha_ve_back - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation("alpha_back", "backhaul shares must sum to 1"));
        }
        if (self.omega_comp + self.omega_aigc + self.omega_ve - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation("omega", "compute shares must sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompLatency {
    pub local: f64,
    pub off: f64,
    pub es: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AigcLatency {
    pub es: f64,
    pub back: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeLatency {
    pub off: f64,
    pub es: f64,
    pub back: f64,
    pub total: f64,
}

/// Every latency term of one slot, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub comp_local: f64,
    pub comp_off: f64,
    pub comp_es: f64,
    pub comp_total: f64,
    pub aigc_es: f64,
    pub aigc_back: f64,
    pub aigc_total: f64,
    pub ve_off: f64,
    pub ve_es: f64,
    pub ve_back: f64,
    pub ve_total: f64,
    pub slot_total: f64,
}

/// `work / capacity`, with zero work costing nothing and positive work on
/// zero capacity costing forever.
#[inline]
fn service_time(work: f64, capacity: f64) -> f64 {
    if work == 0.0 {
        0.0
    } else if capacity == 0.0 {
        f64::INFINITY
    } else {
        work / capacity
    }
}

/// Partial local computing and partial offloading run in parallel; the
/// slower branch decides.
pub fn comp_latency(action: &Action, tasks: &TaskArrivals, r_off: f64, params: &SystemParams) -> CompLatency {
    debug_assert!(r_off >= 0.0);
    let lambda = action.lambda;
    let d = tasks.d_comp;
    let off = service_time(lambda * d, r_off);
    let local = (1.0 - lambda) * params.chi * d / params.f_comp;
    let es = service_time(lambda * params.chi * d, action.omega_comp * params.f_es);
    CompLatency {
        local,
        off,
        es,
        total: local.max(off + es),
    }
}

/// Generation at the server followed by the download of the result; the
/// request upload is negligible.
pub fn aigc_latency(action: &Action, tasks: &TaskArrivals, r_back: f64, params: &SystemParams) -> AigcLatency {
    debug_assert!(r_back >= 0.0);
    let work = params.xi * params.chi * tasks.d_aigc_out + params.zeta;
    let es = service_time(work, action.omega_aigc * params.f_es);
    let back = service_time(tasks.d_aigc_out, r_back);
    AigcLatency {
        es,
        back,
        total: es + back,
    }
}

/// Upload, enhancement at the server, download of the enhanced output.
pub fn ve_latency(
    action: &Action,
    tasks: &TaskArrivals,
    r_off: f64,
    r_back: f64,
    params: &SystemParams,
) -> VeLatency {
    let off = service_time(tasks.d_ve, r_off);
    let work = params.xi * params.chi * tasks.d_ve_out + params.zeta;
    let es = service_time(work, action.omega_ve * params.f_es);
    let back = service_time(tasks.d_ve_out, r_back);
    VeLatency {
        off,
        es,
        back,
        total: off + es + back,
    }
}

/// The four link rates of one slot, in bits/s: (comp up, VE up, AIGC down, VE down).
pub fn slot_rates(action: &Action, channel: &ChannelState, params: &SystemParams) -> [f64; 4] {
    [
        shannon_rate(action.alpha_comp_off, params.b_off, params.p_comp, channel.h_comp_off, params.n0),
        shannon_rate(action.alpha_ve_off, params.b_off, params.p_ve, channel.h_ve_off, params.n0),
        shannon_rate(
            action.alpha_aigc_back,
            params.b_back,
            action.beta * params.p_es,
            channel.h_aigc_back,
            params.n0,
        ),
        shannon_rate(
            action.alpha_ve_back,
            params.b_back,
            (1.0 - action.beta) * params.p_es,
            channel.h_ve_back,
            params.n0,
        ),
    ]
}

/// Total latency of all three users in one slot. The computing user's
/// result download is treated as free.
pub fn slot_latency(
    action: &Action,
    channel: &ChannelState,
    tasks: &TaskArrivals,
    params: &SystemParams,
) -> LatencyBreakdown {
    debug_assert!(action.is_feasible(), "infeasible action {action:?}");
    let [r_comp_off, r_ve_off, r_aigc_back, r_ve_back] = slot_rates(action, channel, params);
    let comp = comp_latency(action, tasks, r_comp_off, params);
    let aigc = aigc_latency(action, tasks, r_aigc_back, params);
    let ve = ve_latency(action, tasks, r_ve_off, r_ve_back, params);
    LatencyBreakdown {
        comp_local: comp.local,
        comp_off: comp.off,
        comp_es: comp.es,
        comp_total: comp.total,
        aigc_es: aigc.es,
        aigc_back: aigc.back,
        aigc_total: aigc.total,
        ve_off: ve.off,
        ve_es: ve.es,
        ve_back: ve.back,
        ve_total: ve.total,
        slot_total: comp.total + aigc.total + ve.total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tasks() -> TaskArrivals {
        TaskArrivals::new(4e6, 3e6, 8e6, 2.0)
    }

    fn symmetric() -> Action {
        Action::from_free(0.5, 0.5, 0.5, 0.5, [1.0 / 3.0; 3])
    }

    #[test]
    fn all_local_computing() {
        let p = SystemParams::paper_defaults();
        let a = Action {
            lambda: 0.0,
            ..symmetric()
        };
        let c = comp_latency(&a, &tasks(), 1e7, &p);
        assert_eq!(c.off, 0.0);
        assert_eq!(c.es, 0.0);
        assert_eq!(c.total, p.chi * 4e6 / p.f_comp);
    }

    #[test]
    fn all_offloaded_computing() {
        let p = SystemParams::paper_defaults();
        let a = Action {
            lambda: 1.0,
            ..symmetric()
        };
        let r = 2.5e7;
        let c = comp_latency(&a, &tasks(), r, &p);
        assert_eq!(c.local, 0.0);
        let expected = 4e6 / r + p.chi * 4e6 / (a.omega_comp * p.f_es);
        assert!((c.total - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn offloading_with_zero_rate_is_infinite() {
        let p = SystemParams::paper_defaults();
        let c = comp_latency(&symmetric(), &tasks(), 0.0, &p);
        assert_eq!(c.off, f64::INFINITY);
        assert_eq!(c.total, f64::INFINITY);
    }

    #[test]
    fn generation_floor_without_output() {
        let p = SystemParams::paper_defaults();
        let t = TaskArrivals {
            d_aigc_out: 0.0,
            ..tasks()
        };
        let a = symmetric();
        let g = aigc_latency(&a, &t, 1e7, &p);
        assert_eq!(g.es, p.zeta / (a.omega_aigc * p.f_es));
        assert_eq!(g.back, 0.0);
    }

    #[test]
    fn generation_starvation() {
        let p = SystemParams::paper_defaults();
        let a = Action::from_free(0.5, 0.5, 0.5, 0.5, [0.5, 0.0, 0.5]);
        assert_eq!(aigc_latency(&a, &tasks(), 1e7, &p).es, f64::INFINITY);
        let h = p.mean_channel();
        assert_eq!(slot_latency(&a, &h, &tasks(), &p).slot_total, f64::INFINITY);
    }

    #[test]
    fn enhancement_and_generation_share_a_cost_form() {
        let p = SystemParams {
            psi: 1.0,
            ..SystemParams::paper_defaults()
        };
        let t = TaskArrivals::new(4e6, 5e6, 5e6, 1.0);
        let a = Action::from_free(0.5, 0.5, 0.5, 0.5, [0.2, 0.4, 0.4]);
        let g = aigc_latency(&a, &t, 1e7, &p);
        let v = ve_latency(&a, &t, 1e7, 1e7, &p);
        assert_eq!(g.es, v.es);
    }

    #[test]
    fn enhancement_is_compute_bound_with_fast_links() {
        let p = SystemParams::paper_defaults();
        let a = Action::from_free(0.5, 0.5, 0.5, 0.5, [0.0, 0.0, 1.0]);
        let v = ve_latency(&a, &tasks(), 1e300, 1e300, &p);
        assert!((v.total - v.es).abs() <= 1e-12 * v.es);
    }

    #[test]
    fn breakdown_identities_hold() {
        let p = SystemParams::paper_defaults();
        let b = slot_latency(&symmetric(), &p.mean_channel(), &tasks(), &p);
        assert_eq!(b.comp_total, b.comp_local.max(b.comp_off + b.comp_es));
        assert_eq!(b.aigc_total, b.aigc_es + b.aigc_back);
        assert_eq!(b.ve_total, b.ve_off + b.ve_es + b.ve_back);
        assert_eq!(b.slot_total, b.comp_total + b.aigc_total + b.ve_total);
        assert!(b.slot_total.is_finite() && b.slot_total > 0.0);
    }

    #[test]
    fn local_and_server_terms_are_scale_invariant() {
        let p = SystemParams::paper_defaults();
        let scaled = SystemParams {
            f_comp: p.f_comp * 4.0,
            f_es: p.f_es * 4.0,
            ..p.clone()
        };
        let t = tasks();
        let t4 = TaskArrivals { d_comp: t.d_comp * 4.0, ..t };
        let a = symmetric();
        let c = comp_latency(&a, &t, 1e7, &p);
        let c4 = comp_latency(&a, &t4, 1e7, &scaled);
        assert!((c.local - c4.local).abs() <= 1e-15 * c.local);
        assert!((c.es - c4.es).abs() <= 1e-15 * c.es);
    }

    #[test]
    fn validate_rejects_bad_sums() {
        let mut a = symmetric();
        a.validate().unwrap();
        a.omega_ve = 0.5;
        assert!(matches!(a.validate(), Err(Error::Validation { field, .. }) if field == "omega"));
    }
}
