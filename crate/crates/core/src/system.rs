//! Physical parameters, per-slot channel realisation and the FDMA rate
//! equations shared by the offloading and backhaul stages.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits per megabit; the only place data volumes change unit.
pub const BITS_PER_MBIT: f64 = 1e6;

/// Converts a power spectral density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// An inclusive `[lo, hi]` range expressed in megabits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbitRange {
    pub lo: f64,
    pub hi: f64,
}

impl MbitRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Integer bit bounds, rounded to the nearest bit.
    pub fn bit_bounds(&self) -> (u64, u64) {
        (
            (self.lo * BITS_PER_MBIT).round() as u64,
            (self.hi * BITS_PER_MBIT).round() as u64,
        )
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi) {
            return Err(Error::validation(
                field,
                format!("range must satisfy 0 < lo <= hi, got [{}, {}]", self.lo, self.hi),
            ));
        }
        Ok(())
    }
}

/// Every physical constant of the three-user system. All quantities are in
/// SI units (Hz, W, W/Hz, cycles/s, bits) except the data-volume ranges,
/// which stay in megabits until sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub b_off: f64,
    pub b_back: f64,
    pub p_comp: f64,
    pub p_ve: f64,
    pub p_es: f64,
    pub n0: f64,
    pub f_comp: f64,
    pub f_es: f64,
    pub chi: f64,
    pub xi: f64,
    pub zeta: f64,
    pub psi: f64,
    pub dist_comp: f64,
    pub dist_aigc: f64,
    pub dist_ve: f64,
    pub ref_gain_db: f64,
    pub pathloss_exp: f64,
    pub d_comp_mean_mbits: f64,
    pub d_comp_range_mbits: MbitRange,
    pub d_ve_range_mbits: MbitRange,
    pub d_gen_range_mbits: MbitRange,
    pub t_horizon: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::paper_defaults()
    }
}

impl SystemParams {
    /// The evaluation setup: 400 MHz per stage, 15 W everywhere,
    /// -100 dBm/Hz noise, users at 100/120/80 m, and the GPT-4 generation
    /// coefficients. Compute constants not fixed by the setup use the crate
    /// defaults documented in the book.
    pub fn paper_defaults() -> Self {
        Self {
            b_off: 400e6,
            b_back: 400e6,
            p_comp: 15.0,
            p_ve: 15.0,
            p_es: 15.0,
            n0: dbm_per_hz_to_watts(-100.0),
            f_comp: 1e9,
            f_es: 2e10,
            chi: 500.0,
            xi: 9.97e-14,
            zeta: 5.73,
            psi: 2.0,
            dist_comp: 100.0,
            dist_aigc: 120.0,
            dist_ve: 80.0,
            ref_gain_db: -30.0,
            pathloss_exp: 2.0,
            d_comp_mean_mbits: 4.5,
            d_comp_range_mbits: MbitRange::new(1.0, 8.0),
            d_ve_range_mbits: MbitRange::new(1.0, 8.0),
            d_gen_range_mbits: MbitRange::new(2.0, 16.0),
            t_horizon: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("b_off", self.b_off),
            ("b_back", self.b_back),
            ("p_comp", self.p_comp),
            ("p_ve", self.p_ve),
            ("p_es", self.p_es),
            ("n0", self.n0),
            ("f_comp", self.f_comp),
            ("f_es", self.f_es),
            ("chi", self.chi),
            ("dist_comp", self.dist_comp),
            ("dist_aigc", self.dist_aigc),
            ("dist_ve", self.dist_ve),
            ("d_comp_mean_mbits", self.d_comp_mean_mbits),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("xi", self.xi), ("zeta", self.zeta), ("ref_gain_db", self.ref_gain_db)] {
            if !v.is_finite() || (name != "ref_gain_db" && v < 0.0) {
                return Err(Error::validation(name, format!("invalid value {v}")));
            }
        }
        if !(self.psi.is_finite() && self.psi >= 1.0) {
            return Err(Error::validation("psi", format!("must be >= 1, got {}", self.psi)));
        }
        if !(self.pathloss_exp.is_finite() && self.pathloss_exp >= 0.0) {
            return Err(Error::validation(
                "pathloss_exp",
                format!("must be >= 0, got {}", self.pathloss_exp),
            ));
        }
        if self.t_horizon == 0 {
            return Err(Error::validation("t_horizon", "must be >= 1"));
        }
        self.d_comp_range_mbits.validate("d_comp_range_mbits")?;
        self.d_ve_range_mbits.validate("d_ve_range_mbits")?;
        self.d_gen_range_mbits.validate("d_gen_range_mbits")?;
        Ok(())
    }

    /// Linear gain at the 1 m reference distance.
    pub fn ref_gain(&self) -> f64 {
        10f64.powf(self.ref_gain_db / 10.0)
    }

    /// Deterministic path-loss gain at distance `d` metres.
    pub fn path_gain(&self, d: f64) -> f64 {
        self.ref_gain() * d.powf(-self.pathloss_exp)
    }

    /// Fading-free gains in [`ChannelState`] order.
    pub fn mean_channel(&self) -> ChannelState {
        ChannelState {
            h_comp_off: self.path_gain(self.dist_comp),
            h_ve_off: self.path_gain(self.dist_ve),
            h_aigc_back: self.path_gain(self.dist_aigc),
            h_ve_back: self.path_gain(self.dist_ve),
        }
    }
}

/// Line-of-sight power gains of the four links active in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub h_comp_off: f64,
    pub h_ve_off: f64,
    pub h_aigc_back: f64,
    pub h_ve_back: f64,
}

impl ChannelState {
    pub fn as_array(&self) -> [f64; 4] {
        [self.h_comp_off, self.h_ve_off, self.h_aigc_back, self.h_ve_back]
    }

    pub fn from_array(h: [f64; 4]) -> Self {
        Self {
            h_comp_off: h[0],
            h_ve_off: h[1],
            h_aigc_back: h[2],
            h_ve_back: h[3],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|h| h.is_finite() && *h > 0.0)
    }
}

/// Data volumes of one slot, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskArrivals {
    /// Computation packet of the computing user.
    pub d_comp: f64,
    /// Raw input uploaded by the enhancement user.
    pub d_ve: f64,
    /// Expected volume of generated content returned to the generation user.
    pub d_aigc_out: f64,
    /// Enhanced output returned to the enhancement user, `psi * d_ve`.
    pub d_ve_out: f64,
}

impl TaskArrivals {
    pub fn new(d_comp: f64, d_ve: f64, d_aigc_out: f64, psi: f64) -> Self {
        Self {
            d_comp,
            d_ve,
            d_aigc_out,
            d_ve_out: psi * d_ve,
        }
    }

    pub fn is_valid(&self, psi: f64) -> bool {
        [self.d_comp, self.d_ve, self.d_aigc_out]
            .iter()
            .all(|d| d.is_finite() && *d > 0.0)
            && self.d_ve_out == psi * self.d_ve
    }
}

/// Small-scale fading applied on top of path loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fading {
    #[default]
    None,
    /// Unit-mean Rician power gain with line-of-sight factor `k`.
    Rician { k: f64 },
}

impl Fading {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Fading::None => 1.0,
            Fading::Rician { k } => {
                let los = (k / (k + 1.0)).sqrt();
                let scatter = (1.0 / (2.0 * (k + 1.0))).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let (re, im) = (los + scatter * re, scatter * im);
                // a zero draw has probability zero but would break the gain invariant
                (re * re + im * im).max(f64::MIN_POSITIVE)
            }
        }
    }
}

/// Draws the per-slot channel: path loss times an independent fade per link.
pub fn sample_channel<R: Rng + ?Sized>(params: &SystemParams, fading: Fading, rng: &mut R) -> ChannelState {
    let mean = params.mean_channel();
    ChannelState {
        h_comp_off: mean.h_comp_off * fading.sample(rng),
        h_ve_off: mean.h_ve_off * fading.sample(rng),
        h_aigc_back: mean.h_aigc_back * fading.sample(rng),
        h_ve_back: mean.h_ve_back * fading.sample(rng),
    }
}

/// `alpha * B * log2(1 + p*h / (alpha*B*N0))`, with the alpha -> 0 limit
/// defined as zero. Inputs are assumed valid.
#[inline]
pub(crate) fn shannon_rate(alpha: f64, bandwidth: f64, tx_power: f64, gain: f64, n0: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let band = alpha * bandwidth;
    band * (tx_power * gain / (band * n0)).ln_1p() / std::f64::consts::LN_2
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::validation(name, format!("must be >= 0, got {v}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v <= 0.0 {
        return Err(Error::validation(name, format!("must be > 0, got {v}")));
    }
    Ok(())
}

fn check_ratio(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::validation(name, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Uplink rate of a user holding bandwidth share `alpha`, in bits/s.
pub fn offload_rate(alpha: f64, bandwidth: f64, tx_power: f64, gain: f64, n0: f64) -> Result<f64> {
    check_ratio("alpha", alpha)?;
    check_positive("bandwidth", bandwidth)?;
    check_nonneg("tx_power", tx_power)?;
    check_nonneg("gain", gain)?;
    check_positive("n0", n0)?;
    Ok(shannon_rate(alpha, bandwidth, tx_power, gain, n0))
}

/// Downlink rate when the server spends `power_share` of `total_power` on
/// this user; identical to [`offload_rate`] at power `power_share * total_power`.
pub fn backhaul_rate(
    alpha: f64,
    bandwidth: f64,
    power_share: f64,
    total_power: f64,
    gain: f64,
    n0: f64,
) -> Result<f64> {
    check_ratio("power_share", power_share)?;
    check_nonneg("total_power", total_power)?;
    offload_rate(alpha, bandwidth, power_share * total_power, gain, n0)
}
