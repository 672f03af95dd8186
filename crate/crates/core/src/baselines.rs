//! Comparison policies: a fixed allocation, a uniformly random feasible
//! allocation, and a per-slot grid oracle that knows the full slot.

use rand::Rng;

use crate::error::{Error, Result};
use crate::latency::{comp_latency, slot_latency, slot_rates, Action};
use crate::system::{ChannelState, SystemParams, TaskArrivals};

/// The symmetric point of the feasible set: every pair split evenly,
/// half the packet offloaded, compute shared in thirds.
pub fn fra_policy() -> Action {
    Action::from_free(0.5, 0.5, 0.5, 0.5, [1.0 / 3.0; 3])
}

/// A uniformly random feasible action: uniform pair splits, uniform power
/// share and offload ratio, and a flat Dirichlet compute split.
pub fn rra_policy<R: Rng + ?Sized>(rng: &mut R) -> Action {
    let alpha_off: f64 = rng.gen();
    let alpha_back: f64 = rng.gen();
    let beta: f64 = rng.gen();
    let lambda: f64 = rng.gen();
    let e = [(); 3].map(|_| -(1.0 - rng.gen::<f64>()).ln());
    let sum = e[0] + e[1] + e[2];
    let omega = [e[0] / sum, e[1] / sum, 1.0 - e[0] / sum - e[1] / sum];
    Action::from_free(alpha_off, alpha_back, beta, lambda, omega)
}

/// Best action found for one slot and its latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub action: Action,
    pub slot_total: f64,
    /// Latency of the best grid point before refinement.
    pub grid_total: f64,
}

fn grid_steps(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::validation("resolution", format!("must lie in (0, 0.5], got {resolution}")));
    }
    Ok((1.0 / resolution - 1e-9).ceil() as usize)
}

/// Per-slot minimiser over the product grid of (offload split, backhaul
/// split, power share, compute simplex) with spacing at most `resolution`,
/// followed by coordinate-wise golden-section refinement around the best
/// grid point. The offload ratio is not gridded: for given shares the
/// computing user's latency is minimised exactly by
/// [`balanced_offload_ratio`].
///
/// The objective separates into a computing/offload block, a backhaul
/// block and two server-compute terms, so the grid minimum is found from
/// per-block tables instead of enumerating the product; the result is the
/// same minimum. Ties go to the lexicographically smallest grid index.
pub fn oracle_per_slot(
    channel: &ChannelState,
    tasks: &TaskArrivals,
    params: &SystemParams,
    resolution: f64,
) -> Result<OracleResult> {
    let n = grid_steps(resolution)?;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let [best, offloading] = grid_argmin(channel, tasks, params, &grid);
    let total = |a: &Action| slot_latency(a, channel, tasks, params).slot_total;
    let grid_total = total(&best);
    let mut result = OracleResult {
        action: best,
        slot_total: grid_total,
        grid_total,
    };
    // Polishing from the all-local corner cannot start offloading, which
    // needs the offload split and the compute share to move together.
    for start in [best, offloading] {
        let action = polish(start, channel, tasks, params, 1.0 / n as f64);
        let value = total(&action);
        if value < result.slot_total {
            result.action = action;
            result.slot_total = value;
        }
    }
    Ok(result)
}

/// Grid minimiser without refinement.
pub fn oracle_grid(
    channel: &ChannelState,
    tasks: &TaskArrivals,
    params: &SystemParams,
    resolution: f64,
) -> Result<OracleResult> {
    let n = grid_steps(resolution)?;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let [action, _] = grid_argmin(channel, tasks, params, &grid);
    let total = slot_latency(&action, channel, tasks, params).slot_total;
    Ok(OracleResult {
        action,
        slot_total: total,
        grid_total: total,
    })
}

fn server_time(work: f64, share: f64, f_es: f64) -> f64 {
    if share == 0.0 {
        f64::INFINITY
    } else {
        work / (share * f_es)
    }
}

/// Returns the grid minimiser and the best grid point that offloads part
/// of the computing packet (positive offload split and compute share).
fn grid_argmin(channel: &ChannelState, tasks: &TaskArrivals, params: &SystemParams, grid: &[f64]) -> [Action; 2] {
    let m = grid.len();
    let n = m - 1;
    let probe = |alpha_off: f64, alpha_back: f64, beta: f64| {
        Action::from_free(alpha_off, alpha_back, beta, 0.0, [1.0, 0.0, 0.0])
    };

    // computing user plus the enhancement upload, both driven by the offload
    // split; the offload ratio is solved exactly for each cell
    let mut off_block = vec![(f64::INFINITY, 0.0); m * m];
    for (i, &a_off) in grid.iter().enumerate() {
        let rates = slot_rates(&probe(a_off, 0.5, 0.5), channel, params);
        let ve_off = if rates[1] == 0.0 { f64::INFINITY } else { tasks.d_ve / rates[1] };
        for (a, &w) in grid.iter().enumerate() {
            let mut act = Action::from_free(a_off, 0.5, 0.5, 0.0, [w, 1.0 - w, 0.0]);
            act.lambda = balanced_offload_ratio(channel, tasks, params, &act);
            let c = comp_latency(&act, tasks, rates[0], params).total;
            off_block[i * m + a] = (c + ve_off, act.lambda);
        }
    }

    // both downloads, driven by the backhaul split and the power share
    let mut back_best = (f64::INFINITY, 0usize, 0usize);
    for (j, &a_back) in grid.iter().enumerate() {
        for (k, &beta) in grid.iter().enumerate() {
            let rates = slot_rates(&probe(0.5, a_back, beta), channel, params);
            let aigc = if rates[2] == 0.0 { f64::INFINITY } else { tasks.d_aigc_out / rates[2] };
            let ve = if rates[3] == 0.0 { f64::INFINITY } else { tasks.d_ve_out / rates[3] };
            if aigc + ve < back_best.0 {
                back_best = (aigc + ve, j, k);
            }
        }
    }

    let aigc_work = params.xi * params.chi * tasks.d_aigc_out + params.zeta;
    let ve_work = params.xi * params.chi * tasks.d_ve_out + params.zeta;
    let mut best = (f64::INFINITY, 0usize, 0usize, 0usize);
    let mut offloading = (f64::INFINITY, 1usize, 1usize, 0usize);
    for i in 0..m {
        for a in 0..=n {
            let (front, _) = off_block[i * m + a];
            for b in 0..=(n - a) {
                let c = n - a - b;
                let total = front
                    + server_time(aigc_work, grid[b], params.f_es)
                    + server_time(ve_work, grid[c], params.f_es);
                if total < best.0 {
                    best = (total, i, a, b);
                }
                if i > 0 && a > 0 && total < offloading.0 {
                    offloading = (total, i, a, b);
                }
            }
        }
    }

    let (_, j, k) = back_best;
    [best, offloading].map(|(_, i, a, b)| {
        let lambda = off_block[i * m + a].1;
        let (w_comp, w_aigc) = (grid[a], grid[b]);
        Action::from_free(grid[i], grid[j], grid[k], lambda, [w_comp, w_aigc, 1.0 - w_comp - w_aigc])
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimises `f` on `[lo, hi]` by golden-section search; returns the best
/// abscissa seen, including `start`.
fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, start: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = (f(start), start);
    for _ in 0..80 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    for (v, x) in [(fc, c), (fd, d)] {
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}

/// Offload ratio that equalises the local and offloaded branches of the
/// computing user's latency, which minimises their maximum.
pub fn balanced_offload_ratio(channel: &ChannelState, tasks: &TaskArrivals, params: &SystemParams, action: &Action) -> f64 {
    let local = params.chi * tasks.d_comp / params.f_comp;
    let rate = slot_rates(action, channel, params)[0];
    if rate == 0.0 || action.omega_comp == 0.0 {
        return 0.0;
    }
    let remote = tasks.d_comp / rate + params.chi * tasks.d_comp / (action.omega_comp * params.f_es);
    local / (local + remote)
}

/// Coordinate-wise refinement within one grid step of the start point. The
/// offload ratio is not a search coordinate: it is re-balanced after every
/// move, since coordinate search stalls on the kink of the max otherwise.
fn polish(start: Action, channel: &ChannelState, tasks: &TaskArrivals, params: &SystemParams, step: f64) -> Action {
    let build = |x: &[f64; 5]| {
        let omega = [x[3], x[4], 1.0 - x[3] - x[4]];
        if omega[2] < 0.0 {
            return None;
        }
        let mut a = Action::from_free(x[0], x[1], x[2], 0.0, omega);
        a.lambda = balanced_offload_ratio(channel, tasks, params, &a);
        Some(a)
    };
    let eval = |x: &[f64; 5]| {
        build(x).map_or(f64::INFINITY, |a| slot_latency(&a, channel, tasks, params).slot_total)
    };
    let mut x = [
        start.alpha_comp_off,
        start.alpha_aigc_back,
        start.beta,
        start.omega_comp,
        start.omega_aigc,
    ];
    let mut value = eval(&x);
    for _ in 0..200 {
        let before = value;
        for idx in 0..3 {
            let lo = (x[idx] - step).max(0.0);
            let hi = (x[idx] + step).min(1.0);
            let probe = |v: f64| {
                let mut y = x;
                y[idx] = v;
                eval(&y)
            };
            let v = golden_section(probe, lo, hi, x[idx]);
            let mut y = x;
            y[idx] = v;
            let fy = eval(&y);
            if fy < value {
                x = y;
                value = fy;
            }
        }
        // mass transfers between pairs of compute shares
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let omega = [x[3], x[4], 1.0 - x[3] - x[4]];
            let lo = -(omega[p].min(step));
            let hi = omega[q].min(step);
            let shifted = |t: f64| {
                let mut w = omega;
                w[p] += t;
                w[q] -= t;
                let mut y = x;
                y[3] = w[0];
                y[4] = w[1];
                y
            };
            let t = golden_section(|t| eval(&shifted(t)), lo, hi, 0.0);
            let y = shifted(t);
            let fy = eval(&y);
            if fy < value {
                x = y;
                value = fy;
            }
        }
        let improved = before - value > 1e-13 * value.abs();
        if !improved {
            break;
        }
    }
    build(&x).unwrap_or(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fra_is_feasible_and_constant() {
        let a = fra_policy();
        assert!(a.is_feasible());
        assert_eq!(a, fra_policy());
    }

    #[test]
    fn rra_is_feasible_and_reproducible() {
        let mut r1 = ChaCha8Rng::seed_from_u64(4);
        let mut r2 = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let a = rra_policy(&mut r1);
            assert!(a.max_violation() <= 1e-9, "{a:?}");
            assert_eq!(a, rra_policy(&mut r2));
        }
    }

    #[test]
    fn rejects_bad_resolution() {
        let p = SystemParams::paper_defaults();
        let t = TaskArrivals::new(4e6, 4e6, 8e6, p.psi);
        assert!(oracle_per_slot(&p.mean_channel(), &t, &p, 0.0).is_err());
        assert!(oracle_per_slot(&p.mean_channel(), &t, &p, 0.6).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 0.9);
        assert!((x - 0.3).abs() < 1e-6);
    }
}
