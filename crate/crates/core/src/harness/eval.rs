use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{greedy_action, DdpgAgent};
use crate::baselines::{oracle_per_slot, rra_policy};
use crate::env::{EnvConfig, Normalizer, Slot};
use crate::error::{Error, Result};
use crate::latency::{slot_latency, Action};
use crate::system::SystemParams;

/// Stream id of the random baseline's generator within the evaluation seed.
const RRA_STREAM: u64 = 7;

/// Which allocation rule to evaluate.
#[derive(Debug, Clone)]
pub enum Policy {
    Lara(Box<DdpgAgent>),
    Fra(Action),
    Rra,
    Oracle { resolution: f64 },
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::Lara(_) => "lara",
            Policy::Fra(_) => "fra",
            Policy::Rra => "rra",
            Policy::Oracle { .. } => "oracle",
        }
    }
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Lara,
    Fra,
    Rra,
    Oracle,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lara" => Ok(PolicyKind::Lara),
            "fra" => Ok(PolicyKind::Fra),
            "rra" => Ok(PolicyKind::Rra),
            "oracle" => Ok(PolicyKind::Oracle),
            other => Err(Error::UnknownPolicy(other.to_owned())),
        }
    }
}

/// One evaluated slot: what was seen, what was chosen, what it cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub h_comp_off: f64,
    pub h_ve_off: f64,
    pub h_aigc_back: f64,
    pub h_ve_back: f64,
    pub d_comp: f64,
    pub d_ve: f64,
    pub d_aigc_out: f64,
    pub alpha_comp_off: f64,
    pub alpha_ve_off: f64,
    pub alpha_aigc_back: f64,
    pub alpha_ve_back: f64,
    pub beta: f64,
    pub lambda: f64,
    pub omega_comp: f64,
    pub omega_aigc: f64,
    pub omega_ve: f64,
    pub lat_comp: f64,
    pub lat_aigc: f64,
    pub lat_ve: f64,
    pub total: f64,
}

/// Per-user and total mean latency of one policy over a slot set.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub policy: String,
    pub seed: Option<u64>,
    pub lat_comp: f64,
    pub lat_aigc: f64,
    pub lat_ve: f64,
    pub total: f64,
    pub records: Vec<SlotRecord>,
}

/// The shared evaluation slots: every policy in a comparison sees exactly
/// this sequence.
pub fn eval_slots(params: &SystemParams, env: &EnvConfig, seed: u64, count: usize) -> Vec<Slot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Slot::sample(&mut rng, params, env)).collect()
}

/// Evaluates `policy` on each slot. The random baseline draws from a stream
/// of `eval_seed`, so its sequence is reproducible.
pub fn evaluate(
    policy: &Policy,
    slots: &[Slot],
    params: &SystemParams,
    eval_seed: u64,
    seed: Option<u64>,
) -> Result<LatencyReport> {
    let normalizer = Normalizer::new(params);
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
    rng.set_stream(RRA_STREAM);
    let mut records = Vec::with_capacity(slots.len());
    for (i, slot) in slots.iter().enumerate() {
        let action = match policy {
            Policy::Lara(agent) => greedy_action(agent, &normalizer.observe(slot, i + 1)),
            Policy::Fra(a) => *a,
            Policy::Rra => rra_policy(&mut rng),
            Policy::Oracle { resolution } => oracle_per_slot(&slot.channel, &slot.tasks, params, *resolution)?.action,
        };
        let b = slot_latency(&action, &slot.channel, &slot.tasks, params);
        let a = action.to_array();
        records.push(SlotRecord {
            slot: i,
            h_comp_off: slot.channel.h_comp_off,
            h_ve_off: slot.channel.h_ve_off,
            h_aigc_back: slot.channel.h_aigc_back,
            h_ve_back: slot.channel.h_ve_back,
            d_comp: slot.tasks.d_comp,
            d_ve: slot.tasks.d_ve,
            d_aigc_out: slot.tasks.d_aigc_out,
            alpha_comp_off: a[0],
            alpha_ve_off: a[1],
            alpha_aigc_back: a[2],
            alpha_ve_back: a[3],
            beta: a[4],
            lambda: a[5],
            omega_comp: a[6],
            omega_aigc: a[7],
            omega_ve: a[8],
            lat_comp: b.comp_total,
            lat_aigc: b.aigc_total,
            lat_ve: b.ve_total,
            total: b.slot_total,
        });
    }
    Ok(LatencyReport::from_records(policy.label(), seed, records))
}

impl LatencyReport {
    pub fn from_records(policy: &str, seed: Option<u64>, records: Vec<SlotRecord>) -> Self {
        let n = records.len().max(1) as f64;
        let mean = |f: fn(&SlotRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let lat_comp = mean(|r| r.lat_comp);
        let lat_aigc = mean(|r| r.lat_aigc);
        let lat_ve = mean(|r| r.lat_ve);
        Self {
            policy: policy.to_owned(),
            seed,
            lat_comp,
            lat_aigc,
            lat_ve,
            total: lat_comp + lat_aigc + lat_ve,
            records,
        }
    }

    /// Mean of the per-slot totals (equal to `total` up to rounding).
    pub fn mean_slot_total(&self) -> f64 {
        self.records.iter().map(|r| r.total).sum::<f64>() / self.records.len().max(1) as f64
    }
}
