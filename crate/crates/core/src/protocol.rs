//! Frame-level simulation of QoS admission followed by slotted random access.
//!
//! Each admitted user holds one packet. In every slot the users still holding
//! a packet transmit independently with the scheme's probability; a slot with
//! exactly one transmitter delivers that user's packet, two or more collide,
//! none is idle. The frame ends once every packet is delivered.
//!
//! The number of transmitters in a slot is drawn as `Binomial(pool, p)` and
//! the transmitting subset uniformly at random, which has the same law as
//! independent per-user coin flips.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelStreams};
use crate::config::{AdmissionMode, EnergyCosts, EnergyModel, Scheme};
use crate::rng::{Component, SeedTree, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotOutcome {
    Idle,
    Success(u32),
    Collision(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub outcome: SlotOutcome,
    /// Users holding a packet at the start of the slot.
    pub remaining: u32,
    /// Per-user transmission probability used in the slot.
    pub p: f64,
    pub transmitters: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTrace {
    pub scheme: Scheme,
    pub k_admitted: u32,
    pub slots: Vec<SlotRecord>,
    pub total_slots: u64,
    pub total_transmissions: u64,
    /// Σ over slots of users holding a packet without transmitting.
    pub waiting_user_slots: u64,
    /// Transmissions per user, indexed by position in the admitted set.
    pub user_transmissions: Vec<u64>,
    /// Slots each user spent holding its packet, success slot included.
    pub user_holding_slots: Vec<u64>,
}

impl FrameTrace {
    fn empty(scheme: Scheme) -> Self {
        FrameTrace {
            scheme,
            k_admitted: 0,
            slots: Vec::new(),
            total_slots: 0,
            total_transmissions: 0,
            waiting_user_slots: 0,
            user_transmissions: Vec::new(),
            user_holding_slots: Vec::new(),
        }
    }

    pub fn successes(&self) -> u64 {
        self.slots.iter().filter(|s| matches!(s.outcome, SlotOutcome::Success(_))).count() as u64
    }

    /// Energy of each user under `model`.
    pub fn per_user_energy(&self, model: &EnergyModel) -> Vec<f64> {
        self.user_transmissions
            .iter()
            .zip(&self.user_holding_slots)
            .map(|(&tx, &held)| match model {
                EnergyModel::Unit => tx as f64,
                EnergyModel::Realistic(c) => user_energy_uj(c, tx, held, self.scheme),
            })
            .collect()
    }
}

fn user_energy_uj(c: &EnergyCosts, tx: u64, held: u64, scheme: Scheme) -> f64 {
    let waiting = if scheme == Scheme::Optimal { 0 } else { held - tx };
    c.tx_uj * tx as f64 + c.ack_uj + c.idle_uj * waiting as f64
}

/// Probability used by `scheme` with `remaining` of `initial` users left.
pub fn transmission_probability(scheme: Scheme, initial: u32, remaining: u32) -> f64 {
    match scheme {
        Scheme::Ftp => 1.0 / f64::from(initial),
        Scheme::Atp => 1.0 / f64::from(remaining),
        Scheme::Optimal => 1.0,
    }
}

/// Simulates one frame with `k` admitted users.
pub fn run_frame<R: Rng + ?Sized>(scheme: Scheme, k: u32, rng: &mut R) -> FrameTrace {
    if k == 0 {
        return FrameTrace::empty(scheme);
    }
    let n = k as usize;
    let mut trace = FrameTrace {
        scheme,
        k_admitted: k,
        slots: Vec::with_capacity(n * 3),
        total_slots: 0,
        total_transmissions: 0,
        waiting_user_slots: 0,
        user_transmissions: vec![0; n],
        user_holding_slots: vec![0; n],
    };
    if scheme == Scheme::Optimal {
        // Central scheduling: one user per slot, no contention.
        for u in 0..k {
            trace.slots.push(SlotRecord {
                outcome: SlotOutcome::Success(u),
                remaining: k - u,
                p: 1.0,
                transmitters: 1,
            });
            trace.user_transmissions[u as usize] = 1;
            trace.user_holding_slots[u as usize] = u64::from(u) + 1;
        }
        trace.total_slots = u64::from(k);
        trace.total_transmissions = u64::from(k);
        return trace;
    }

    let mut pool: Vec<u32> = (0..k).collect();
    let mut slot: u64 = 0;
    while !pool.is_empty() {
        let remaining = pool.len() as u32;
        let p = transmission_probability(scheme, k, remaining);
        let m = if p >= 1.0 {
            remaining
        } else {
            Binomial::new(u64::from(remaining), p).expect("p in (0, 1)").sample(rng) as u32
        };
        for i in 0..m as usize {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
            trace.user_transmissions[pool[i] as usize] += 1;
        }
        trace.total_transmissions += u64::from(m);
        trace.waiting_user_slots += u64::from(remaining - m);
        let outcome = match m {
            0 => SlotOutcome::Idle,
            1 => {
                let user = pool.swap_remove(0);
                trace.user_holding_slots[user as usize] = slot + 1;
                SlotOutcome::Success(user)
            }
            _ => SlotOutcome::Collision(m),
        };
        trace.slots.push(SlotRecord { outcome, remaining, p, transmitters: m });
        slot += 1;
    }
    trace.total_slots = slot;
    trace
}

/// Energy of a whole frame under `model`: transmissions in unit mode,
/// `e_tx·tx + e_ack·successes + e_idle·waiting` in μJ otherwise.
pub fn account_energy(trace: &FrameTrace, model: &EnergyModel) -> f64 {
    match model {
        EnergyModel::Unit => trace.total_transmissions as f64,
        EnergyModel::Realistic(c) => {
            let waiting = if trace.scheme == Scheme::Optimal { 0 } else { trace.waiting_user_slots };
            c.tx_uj * trace.total_transmissions as f64
                + c.ack_uj * trace.successes() as f64
                + c.idle_uj * waiting as f64
        }
    }
}

/// Result of QoS admission for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    /// Indices (among the provisioned users) of admitted users.
    pub admitted: Vec<u32>,
    /// SNR estimate the decision was based on, per provisioned user.
    pub snr_estimates: Vec<f64>,
}

impl Admission {
    pub fn k(&self) -> u32 {
        self.admitted.len() as u32
    }
}

/// Admits user `i` iff its SNR estimate exceeds `gamma_qos`. Every user draws
/// its channel from its own streams under `tree`.
pub fn admit_users(
    n_total: usize,
    gamma_qos: f64,
    mode: AdmissionMode,
    channel: &ChannelModel,
    tree: &SeedTree,
) -> Admission {
    let mut admitted = Vec::new();
    let mut snr_estimates = Vec::with_capacity(n_total);
    for user in 0..n_total as u64 {
        let mut streams = ChannelStreams::new(tree, user);
        let estimate = match mode {
            AdmissionMode::Instantaneous => channel.draw(&mut streams).gamma,
            AdmissionMode::Averaged { draws } => {
                (0..draws).map(|_| channel.draw(&mut streams).gamma).sum::<f64>() / f64::from(draws)
            }
        };
        if estimate > gamma_qos {
            admitted.push(user as u32);
        }
        snr_estimates.push(estimate);
    }
    Admission { admitted, snr_estimates }
}

/// Where the active users of each frame come from.
#[derive(Debug, Clone)]
pub enum Population<'a> {
    /// Exactly `k` active users every frame.
    Active(u32),
    /// Channels are re-drawn every frame and users pass QoS admission.
    Admission { n_total: usize, gamma_qos: f64, mode: AdmissionMode, channel: &'a ChannelModel },
}

#[derive(Debug, Clone)]
pub struct BatchSpec<'a> {
    pub scheme: Scheme,
    pub energy_model: EnergyModel,
    pub trials: usize,
    pub population: Population<'a>,
}

/// Per-frame summary, one CSV row of the trial dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub scheme: Scheme,
    pub k_admitted: u32,
    pub total_slots: u64,
    pub total_transmissions: u64,
    pub energy_units: f64,
    pub energy_uj: f64,
}

/// Mean and standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStdErr {
    pub mean: f64,
    pub std_err: f64,
}

impl MeanStdErr {
    pub fn from_samples(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        if n == 0 {
            return MeanStdErr { mean: f64::NAN, std_err: f64::NAN };
        }
        let mean = sum / n as f64;
        if n == 1 {
            return MeanStdErr { mean, std_err: 0.0 };
        }
        let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        MeanStdErr { mean, std_err: sd / (n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub n_trials: usize,
    pub scheme: Scheme,
    pub mean_k: f64,
    pub delay: MeanStdErr,
    /// Energy in the configured model's unit.
    pub energy: MeanStdErr,
    pub energy_units: MeanStdErr,
    pub energy_uj: MeanStdErr,
    pub transmissions: MeanStdErr,
}

impl AggregateStats {
    pub fn mean_delay(&self) -> f64 {
        self.delay.mean
    }
    pub fn mean_energy(&self) -> f64 {
        self.energy.mean
    }
    pub fn mean_transmissions(&self) -> f64 {
        self.transmissions.mean
    }

    pub fn from_records(records: &[TrialRecord], scheme: Scheme, model: &EnergyModel) -> Self {
        let it = records.iter();
        let energy_units = MeanStdErr::from_samples(it.clone().map(|r| r.energy_units));
        let energy_uj = MeanStdErr::from_samples(it.clone().map(|r| r.energy_uj));
        AggregateStats {
            n_trials: records.len(),
            scheme,
            mean_k: records.iter().map(|r| f64::from(r.k_admitted)).sum::<f64>() / records.len().max(1) as f64,
            delay: MeanStdErr::from_samples(it.clone().map(|r| r.total_slots as f64)),
            energy: match model {
                EnergyModel::Unit => energy_units,
                EnergyModel::Realistic(_) => energy_uj,
            },
            energy_units,
            energy_uj,
            transmissions: MeanStdErr::from_samples(it.map(|r| r.total_transmissions as f64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub stats: AggregateStats,
    pub trials: Vec<TrialRecord>,
}

/// Runs one frame for trial `trial` with the streams derived from `tree`.
pub fn run_trial(spec: &BatchSpec<'_>, tree: &SeedTree, trial: u64) -> TrialRecord {
    let k = match &spec.population {
        Population::Active(k) => *k,
        Population::Admission { n_total, gamma_qos, mode, channel } => {
            admit_users(*n_total, *gamma_qos, *mode, channel, &tree.named("admission").child(trial)).k()
        }
    };
    let mut rng: SimRng = tree.stream(trial, Component::Access);
    let trace = run_frame(spec.scheme, k, &mut rng);
    let costs = spec.energy_model.costs();
    TrialRecord {
        trial_id: trial,
        scheme: spec.scheme,
        k_admitted: k,
        total_slots: trace.total_slots,
        total_transmissions: trace.total_transmissions,
        energy_units: account_energy(&trace, &EnergyModel::Unit),
        energy_uj: account_energy(&trace, &EnergyModel::Realistic(costs)),
    }
}

/// Runs `spec.trials` independent frames in parallel. The result depends only
/// on `(spec, seed)`, not on the number of worker threads.
pub fn run_batch(spec: &BatchSpec<'_>, seed: u64) -> BatchResult {
    run_batch_with_tree(spec, &SeedTree::new(seed))
}

pub fn run_batch_with_tree(spec: &BatchSpec<'_>, tree: &SeedTree) -> BatchResult {
    let trials: Vec<TrialRecord> = (0..spec.trials as u64).into_par_iter().map(|t| run_trial(spec, tree, t)).collect();
    let stats = AggregateStats::from_records(&trials, spec.scheme, &spec.energy_model);
    BatchResult { stats, trials }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{delay_atp, delay_ftp, energy_atp, energy_ftp};
    use proptest::prelude::*;

    fn rng(seed: u64) -> SimRng {
        SeedTree::new(seed).stream(0, Component::Access)
    }

    #[test]
    fn single_user_and_empty_frames() {
        for scheme in Scheme::ALL {
            let t = run_frame(scheme, 1, &mut rng(1));
            assert_eq!(t.total_slots, 1);
            assert_eq!(t.total_transmissions, 1);
            assert_eq!(t.slots[0].outcome, SlotOutcome::Success(0));
            assert_eq!(account_energy(&t, &EnergyModel::Unit), 1.0);
            assert_eq!(account_energy(&t, &EnergyModel::Realistic(EnergyCosts::default())), 1320.0);
            let e = run_frame(scheme, 0, &mut rng(1));
            assert_eq!(e.total_slots, 0);
            assert!(e.slots.is_empty());
        }
    }

    #[test]
    fn optimal_realistic_energy() {
        let t = run_frame(Scheme::Optimal, 7, &mut rng(2));
        assert_eq!(t.total_slots, 7);
        assert_eq!(t.total_transmissions, 7);
        assert_eq!(account_energy(&t, &EnergyModel::Realistic(EnergyCosts::default())), 7.0 * 1320.0);
    }

    #[test]
    fn probabilities_follow_scheme() {
        let t = run_frame(Scheme::Atp, 12, &mut rng(3));
        assert!(t.slots.iter().all(|s| s.p == 1.0 / f64::from(s.remaining)));
        let t = run_frame(Scheme::Ftp, 12, &mut rng(3));
        assert!(t.slots.iter().all(|s| s.p == 1.0 / 12.0));
    }

    #[test]
    fn per_user_energy_sums_to_frame_energy() {
        let model = EnergyModel::Realistic(EnergyCosts::default());
        for scheme in Scheme::ALL {
            let t = run_frame(scheme, 9, &mut rng(4));
            let total: f64 = t.per_user_energy(&model).iter().sum();
            assert!((total - account_energy(&t, &model)).abs() < 1e-9);
            let units: f64 = t.per_user_energy(&EnergyModel::Unit).iter().sum();
            assert_eq!(units, t.total_transmissions as f64);
        }
    }

    #[test]
    fn simulated_means_match_series() {
        for (scheme, delay, energy) in
            [(Scheme::Ftp, delay_ftp(10), energy_ftp(10)), (Scheme::Atp, delay_atp(10), energy_atp(10))]
        {
            let spec =
                BatchSpec { scheme, energy_model: EnergyModel::Unit, trials: 5000, population: Population::Active(10) };
            let s = run_batch(&spec, 11).stats;
            assert!((s.mean_delay() / delay - 1.0).abs() < 0.02, "{scheme}: {}", s.mean_delay());
            assert!((s.mean_energy() / energy - 1.0).abs() < 0.02, "{scheme}: {}", s.mean_energy());
        }
    }

    #[test]
    fn batch_is_deterministic_and_thread_independent() {
        let spec = BatchSpec {
            scheme: Scheme::Ftp,
            energy_model: EnergyModel::Unit,
            trials: 300,
            population: Population::Active(6),
        };
        let a = run_batch(&spec, 5);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_batch(&spec, 5));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn frame_conservation(k in 0u32..60, seed in 0u64..1000, s in 0usize..3) {
            let scheme = Scheme::ALL[s];
            let t = run_frame(scheme, k, &mut rng(seed));
            let mut seen = vec![false; k as usize];
            let mut tx = 0u64;
            for slot in &t.slots {
                tx += u64::from(slot.transmitters);
                match slot.outcome {
                    SlotOutcome::Success(u) => {
                        prop_assert!(!seen[u as usize]);
                        seen[u as usize] = true;
                        prop_assert_eq!(slot.transmitters, 1);
                    }
                    SlotOutcome::Collision(m) => prop_assert!(m >= 2 && m == slot.transmitters),
                    SlotOutcome::Idle => prop_assert_eq!(slot.transmitters, 0),
                }
            }
            prop_assert!(seen.iter().all(|&x| x));
            prop_assert_eq!(t.successes(), u64::from(k));
            prop_assert_eq!(tx, t.total_transmissions);
            prop_assert!(t.total_transmissions >= u64::from(k));
            prop_assert!(t.total_slots >= u64::from(k));
            prop_assert_eq!(t.total_slots, t.slots.len() as u64);
            if scheme == Scheme::Optimal {
                prop_assert_eq!(t.total_transmissions, u64::from(k));
            }
        }
    }
}
