//! Exact stochastic simulation of delayed reaction networks.
//!
//! Two engines sample the same law. [`simulate_ssa`] runs the plain direct
//! method on an augmented network, where delays have been compiled into
//! extra species and the process is an ordinary Markov jump chain.
//! [`simulate_delayed_direct`] keeps the original network and a queue of
//! pending completions instead: firing a delayed reaction applies the
//! consumed part immediately, samples the delay from its phase-type
//! distribution, and schedules the produced part. Their distributional
//! equivalence is a tested claim, and the pair serves as a cross-check for
//! everything downstream.

use crate::augment::{augment_network, AugmentedNetwork, AugmentError};
use crate::netmodel::{propensity, Delay, ModelError, Network, Realization};
use crate::phasetype::{PhaseType, PhaseTypeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Hard cap on any species count; beyond this the simulation aborts
/// rather than risk `i64` arithmetic overflow in propensities.
const STATE_CAP: i64 = 1 << 62;

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("initial state must have {expected} entries, got {got}")]
    StateDimension { expected: usize, got: usize },
    #[error("initial state entries must be nonnegative")]
    NegativeState,
    #[error("horizon must be positive and finite")]
    BadHorizon,
    #[error("species count exceeded 2^62 at time {t:.6}; aborting before overflow")]
    Overflow { t: f64 },
    #[error("burn-in must be nonnegative and smaller than the horizon")]
    BadBurnIn,
    #[error("no trajectories given")]
    EmptyEnsemble,
    #[error("trajectories disagree in species count or horizon")]
    MixedEnsemble,
    #[error("projection index {index} out of range for {n} species")]
    BadProjection { index: usize, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Phase(#[from] PhaseTypeError),
}

/// Piecewise-constant sample path. Row 0 is the initial state at time 0;
/// each later row is the post-jump state of one event.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Event times, starting with 0.
    pub times: Vec<f64>,
    /// Row-major states, `times.len() * n_species` entries.
    pub states: Vec<i64>,
    pub n_species: usize,
    /// Firings per channel. The augmented engine has one channel per
    /// augmented reaction; the delay-queue engine has one channel per
    /// reaction plus one completion channel per delayed reaction.
    pub event_counts: Vec<u64>,
    pub seed: u64,
    pub horizon: f64,
    /// `(reaction index, sampled delay)` pairs, delay-queue engine only.
    pub delay_samples: Vec<(usize, f64)>,
}

impl Trajectory {
    pub fn state_at(&self, idx: usize) -> &[i64] {
        &self.states[idx * self.n_species..(idx + 1) * self.n_species]
    }

    pub fn final_state(&self) -> &[i64] {
        self.state_at(self.times.len() - 1)
    }

    pub fn events(&self) -> u64 {
        self.event_counts.iter().sum()
    }
}

/// Which sampler produces the paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Direct method on the augmented (delay-compiled) network.
    Augmented,
    /// Delay-queue method on the original network.
    Direct,
}

/// Time-averaged ensemble statistics past a burn-in window.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    /// Per-species stationary mean estimate.
    pub mean: Vec<f64>,
    /// Per-species stationary variance estimate.
    pub variance: Vec<f64>,
    /// Between-replica standard error of `mean`.
    pub standard_error: Vec<f64>,
    /// Between-replica standard error of `variance`.
    pub variance_standard_error: Vec<f64>,
    /// Averaging window per replica (horizon minus burn-in).
    pub window: f64,
    pub replicas: usize,
}

/// First 20% of the horizon, the default stationarity burn-in.
pub fn default_burn_in(horizon: f64) -> f64 {
    0.2 * horizon
}

fn check_horizon(t_end: f64) -> Result<(), SimulateError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimulateError::BadHorizon);
    }
    Ok(())
}

fn unit_exponential<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return -u.ln();
        }
    }
}

/// Picks a channel proportional to its propensity; the caller guarantees
/// `total > 0`. Roundoff in the cumulative scan falls back to the last
/// positive channel.
fn pick_channel<R: Rng>(rng: &mut R, props: &[f64], total: f64) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &p) in props.iter().enumerate() {
        if p > 0.0 {
            last_positive = k;
            acc += p;
            if target < acc {
                return k;
            }
        }
    }
    last_positive
}

fn apply_change(state: &mut [i64], change: &[i64], t: f64) -> Result<(), SimulateError> {
    for (x, &dx) in state.iter_mut().zip(change) {
        *x += dx;
        debug_assert!(*x >= 0, "propensity guard must prevent negative counts");
        if *x > STATE_CAP {
            return Err(SimulateError::Overflow { t });
        }
    }
    Ok(())
}

fn push_state(times: &mut Vec<f64>, states: &mut Vec<i64>, t: f64, state: &[i64]) {
    times.push(t);
    states.extend_from_slice(state);
}

/// Direct-method sampler on an augmented network. `x0` may cover either
/// the base species only (delay phases start empty) or the full augmented
/// state.
pub fn simulate_ssa(
    aug: &AugmentedNetwork,
    x0: &[i64],
    t_end: f64,
    seed: u64,
) -> Result<Trajectory, SimulateError> {
    check_horizon(t_end)?;
    let n = aug.n_total();
    let mut state: Vec<i64> = if x0.len() == n {
        x0.to_vec()
    } else if x0.len() == aug.n_base {
        let mut s = x0.to_vec();
        s.resize(n, 0);
        s
    } else {
        return Err(SimulateError::StateDimension { expected: n, got: x0.len() });
    };
    if state.iter().any(|&x| x < 0) {
        return Err(SimulateError::NegativeState);
    }

    let changes: Vec<Vec<i64>> = aug
        .network
        .reactions
        .iter()
        .map(|r| r.net_change(n).iter().copied().collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::new();
    let mut states = Vec::new();
    push_state(&mut times, &mut states, 0.0, &state);
    let mut event_counts = vec![0u64; changes.len()];
    let mut t = 0.0;

    loop {
        let props = propensity(&aug.network, &state)?;
        let total: f64 = props.sum();
        if total <= 0.0 {
            break;
        }
        t += unit_exponential(&mut rng) / total;
        if t > t_end {
            break;
        }
        let k = pick_channel(&mut rng, props.as_slice(), total);
        apply_change(&mut state, &changes[k], t)?;
        event_counts[k] += 1;
        push_state(&mut times, &mut states, t, &state);
    }

    Ok(Trajectory {
        times,
        states,
        n_species: n,
        event_counts,
        seed,
        horizon: t_end,
        delay_samples: Vec::new(),
    })
}

struct DirectChannel {
    /// State change applied the moment the reaction fires.
    fire: Vec<i64>,
    /// Delay data for delayed reactions.
    delayed: Option<DirectDelay>,
}

struct DirectDelay {
    ph: PhaseType,
    /// State change applied when the pending completion lands.
    complete: Vec<i64>,
    /// Completion channel index in `event_counts`.
    channel: usize,
}

fn direct_channels(net: &Network) -> Result<Vec<DirectChannel>, SimulateError> {
    let d = net.n_species();
    let mut channels = Vec::with_capacity(net.reactions.len());
    let mut completion_channel = net.reactions.len();
    for r in &net.reactions {
        match &r.delay {
            None => channels.push(DirectChannel {
                fire: r.net_change(d).iter().copied().collect(),
                delayed: None,
            }),
            Some(Delay { realization, .. }) => {
                let ph = r.delay.as_ref().unwrap().phase_type()?;
                let (f1, f2, g) = r.catalytic_split();
                // Consumed part now, produced part at completion; the
                // absorbing mode also parks the catalytic factor.
                let (removed, released) = match realization {
                    Realization::NonAbsorbing => (f2.clone(), g.clone()),
                    Realization::Absorbing => (
                        crate::netmodel::multiset_sum(&f1, &f2),
                        crate::netmodel::multiset_sum(&f1, &g),
                    ),
                };
                let mut fire = vec![0i64; d];
                for &(s, c) in &removed {
                    fire[s] -= c as i64;
                }
                let mut complete = vec![0i64; d];
                for &(s, c) in &released {
                    complete[s] += c as i64;
                }
                channels.push(DirectChannel {
                    fire,
                    delayed: Some(DirectDelay { ph, complete, channel: completion_channel }),
                });
                completion_channel += 1;
            }
        }
    }
    Ok(channels)
}

/// Pending completion, ordered by time with insertion order breaking ties.
struct Pending {
    time: f64,
    seq: u64,
    reaction: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we need the earliest
        // completion (smallest time, then smallest sequence) on top.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Delay-queue sampler on the original network. Firing a delayed reaction
/// removes its consumed species immediately, draws the delay from the
/// phase-type distribution, and schedules the produced species; pending
/// completions still in the queue at the horizon are dropped.
pub fn simulate_delayed_direct(
    net: &Network,
    x0: &[i64],
    t_end: f64,
    seed: u64,
) -> Result<Trajectory, SimulateError> {
    check_horizon(t_end)?;
    let d = net.n_species();
    if x0.len() != d {
        return Err(SimulateError::StateDimension { expected: d, got: x0.len() });
    }
    if x0.iter().any(|&x| x < 0) {
        return Err(SimulateError::NegativeState);
    }
    let channels = direct_channels(net)?;
    let n_delayed = channels.iter().filter(|c| c.delayed.is_some()).count();

    let mut state = x0.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::new();
    let mut states = Vec::new();
    push_state(&mut times, &mut states, 0.0, &state);
    let mut event_counts = vec![0u64; channels.len() + n_delayed];
    let mut delay_samples = Vec::new();
    let mut queue: BinaryHeap<Pending> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut t = 0.0;

    loop {
        let props = propensity(net, &state)?;
        let total: f64 = props.sum();
        let t_fire = if total > 0.0 {
            t + unit_exponential(&mut rng) / total
        } else {
            f64::INFINITY
        };
        let t_complete = queue.peek().map_or(f64::INFINITY, |p| p.time);

        if t_complete <= t_fire {
            // A completion lands first; the discarded exponential is
            // harmless by memorylessness since the clock restarts below.
            if t_complete > t_end {
                break;
            }
            let pending = queue.pop().expect("peeked completion");
            t = pending.time;
            let delayed = channels[pending.reaction]
                .delayed
                .as_ref()
                .expect("completion for delayed channel");
            apply_change(&mut state, &delayed.complete, t)?;
            event_counts[delayed.channel] += 1;
            push_state(&mut times, &mut states, t, &state);
        } else {
            if t_fire > t_end {
                break;
            }
            t = t_fire;
            let k = pick_channel(&mut rng, props.as_slice(), total);
            apply_change(&mut state, &channels[k].fire, t)?;
            event_counts[k] += 1;
            if let Some(delayed) = &channels[k].delayed {
                let tau = crate::phasetype::sample_delay(&delayed.ph, &mut rng);
                delay_samples.push((k, tau));
                queue.push(Pending { time: t + tau, seq, reaction: k });
                seq += 1;
            }
            push_state(&mut times, &mut states, t, &state);
        }
    }

    Ok(Trajectory {
        times,
        states,
        n_species: d,
        event_counts,
        seed,
        horizon: t_end,
        delay_samples,
    })
}

/// Runs independent replicas in parallel with seeds `base_seed + i`.
pub fn run_replicas<F>(
    replicas: usize,
    base_seed: u64,
    run: F,
) -> Result<Vec<Trajectory>, SimulateError>
where
    F: Fn(u64) -> Result<Trajectory, SimulateError> + Sync,
{
    if replicas == 0 {
        return Err(SimulateError::EmptyEnsemble);
    }
    (0..replicas)
        .into_par_iter()
        .map(|i| run(base_seed.wrapping_add(i as u64)))
        .collect()
}

/// Replica ensemble through either engine. The augmented engine compiles
/// the network once and returns trajectories over the augmented species;
/// project onto the base species when comparing across engines.
pub fn ensemble(
    net: &Network,
    engine: Engine,
    x0: &[i64],
    t_end: f64,
    base_seed: u64,
    replicas: usize,
) -> Result<Vec<Trajectory>, SimulateError> {
    match engine {
        Engine::Augmented => {
            let aug = augment_network(net)?;
            run_replicas(replicas, base_seed, |s| simulate_ssa(&aug, x0, t_end, s))
        }
        Engine::Direct => {
            run_replicas(replicas, base_seed, |s| simulate_delayed_direct(net, x0, t_end, s))
        }
    }
}

/// Exact time averages of one replica past the burn-in: returns
/// `(mean, second moment)` per projected species.
fn time_average(
    run: &Trajectory,
    burn_in: f64,
    projection: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let window = run.horizon - burn_in;
    let mut mean = vec![0.0; projection.len()];
    let mut second = vec![0.0; projection.len()];
    let n_rows = run.times.len();
    for row in 0..n_rows {
        let seg_start = run.times[row].max(burn_in);
        let seg_end = if row + 1 < n_rows { run.times[row + 1] } else { run.horizon };
        let seg_end = seg_end.min(run.horizon);
        if seg_end <= seg_start {
            continue;
        }
        let w = seg_end - seg_start;
        let state = run.state_at(row);
        for (j, &s) in projection.iter().enumerate() {
            let x = state[s] as f64;
            mean[j] += w * x;
            second[j] += w * x * x;
        }
    }
    for j in 0..projection.len() {
        mean[j] /= window;
        second[j] /= window;
    }
    (mean, second)
}

/// Pools per-replica time averages: means and variances are averaged
/// across replicas, standard errors come from the between-replica spread.
pub fn ensemble_stats(
    runs: &[Trajectory],
    burn_in: f64,
    projection: Option<&[usize]>,
) -> Result<EnsembleStats, SimulateError> {
    let first = runs.first().ok_or(SimulateError::EmptyEnsemble)?;
    if !(burn_in >= 0.0 && burn_in < first.horizon) {
        return Err(SimulateError::BadBurnIn);
    }
    if runs
        .iter()
        .any(|r| r.n_species != first.n_species || r.horizon != first.horizon)
    {
        return Err(SimulateError::MixedEnsemble);
    }
    let all: Vec<usize>;
    let projection = match projection {
        Some(p) => {
            if let Some(&bad) = p.iter().find(|&&i| i >= first.n_species) {
                return Err(SimulateError::BadProjection { index: bad, n: first.n_species });
            }
            p
        }
        None => {
            all = (0..first.n_species).collect();
            &all
        }
    };

    let per_run: Vec<(Vec<f64>, Vec<f64>)> = runs
        .iter()
        .map(|r| time_average(r, burn_in, projection))
        .collect();
    let n = projection.len();
    let r = runs.len() as f64;
    let mut mean = vec![0.0; n];
    let mut variance = vec![0.0; n];
    for (m, q) in &per_run {
        for j in 0..n {
            mean[j] += m[j] / r;
            variance[j] += (q[j] - m[j] * m[j]) / r;
        }
    }
    let mut standard_error = vec![0.0; n];
    let mut variance_standard_error = vec![0.0; n];
    if runs.len() > 1 {
        for (m, q) in &per_run {
            for j in 0..n {
                let v = q[j] - m[j] * m[j];
                standard_error[j] += (m[j] - mean[j]).powi(2);
                variance_standard_error[j] += (v - variance[j]).powi(2);
            }
        }
        for j in 0..n {
            standard_error[j] = (standard_error[j] / (r - 1.0) / r).sqrt();
            variance_standard_error[j] = (variance_standard_error[j] / (r - 1.0) / r).sqrt();
        }
    }
    Ok(EnsembleStats {
        mean,
        variance,
        standard_error,
        variance_standard_error,
        window: first.horizon - burn_in,
        replicas: runs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_network;

    fn birth_death(k: f64, gamma: f64) -> Network {
        parse_network(&format!(
            "[species] X\n[reaction] 0 -> X rate={k}\n[reaction] X -> 0 rate={gamma}\n"
        ))
        .unwrap()
    }

    fn delayed_birth_death() -> Network {
        parse_network(
            "[species] X\n\
             [reaction] 0 -> X rate=3.0 delay={kind=erlang shape=2 rate=4.0}\n\
             [reaction] X -> 0 rate=1.0\n",
        )
        .unwrap()
    }

    #[test]
    fn fixed_seed_reproduces_the_event_log() {
        let net = delayed_birth_death();
        let aug = augment_network(&net).unwrap();
        let a = simulate_ssa(&aug, &[0], 50.0, 7).unwrap();
        let b = simulate_ssa(&aug, &[0], 50.0, 7).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
        assert_eq!(a.event_counts, b.event_counts);
        let c = simulate_ssa(&aug, &[0], 50.0, 8).unwrap();
        assert_ne!(a.times, c.times);

        let d1 = simulate_delayed_direct(&net, &[0], 50.0, 7).unwrap();
        let d2 = simulate_delayed_direct(&net, &[0], 50.0, 7).unwrap();
        assert_eq!(d1.times, d2.times);
        assert_eq!(d1.states, d2.states);
        assert_eq!(d1.delay_samples, d2.delay_samples);
    }

    #[test]
    fn zero_propensity_state_stays_put() {
        let net = parse_network("[species] X\n[reaction] X -> 0 rate=1.0\n").unwrap();
        let aug = augment_network(&net).unwrap();
        let run = simulate_ssa(&aug, &[0], 10.0, 1).unwrap();
        assert_eq!(run.times, vec![0.0]);
        assert_eq!(run.states, vec![0]);
        assert_eq!(run.events(), 0);
    }

    #[test]
    fn event_counts_reconstruct_the_final_state() {
        let net = parse_network(
            "[species] A B\n\
             [reaction] 0 -> A rate=4.0\n\
             [reaction] A -> B rate=2.0\n\
             [reaction] B -> 0 rate=1.0\n",
        )
        .unwrap();
        let aug = augment_network(&net).unwrap();
        let run = simulate_ssa(&aug, &[0, 0], 200.0, 11).unwrap();
        let mut expect = vec![0i64, 0];
        for (k, r) in aug.network.reactions.iter().enumerate() {
            let change = r.net_change(2);
            for s in 0..2 {
                expect[s] += change[s] * run.event_counts[k] as i64;
            }
        }
        assert_eq!(run.final_state(), expect.as_slice());
        assert!(run.times.windows(2).all(|w| w[0] < w[1]));
        assert!(run.states.iter().all(|&x| x >= 0));
    }

    #[test]
    fn direct_engine_event_counts_reconstruct_the_final_state() {
        let net = delayed_birth_death();
        let run = simulate_delayed_direct(&net, &[0], 300.0, 5).unwrap();
        // Channels: fire(birth), fire(death), completion(birth).
        assert_eq!(run.event_counts.len(), 3);
        let fired = run.event_counts[0] as i64;
        let died = run.event_counts[1] as i64;
        let completed = run.event_counts[2] as i64;
        // Birth adds X only at completion; death removes immediately.
        assert_eq!(run.final_state()[0], completed - died);
        // Every completion was scheduled by a firing.
        assert!(completed <= fired);
        assert_eq!(run.delay_samples.len(), fired as usize);
        assert!(run.states.iter().all(|&x| x >= 0));
    }

    #[test]
    fn birth_death_time_average_matches_poisson_law() {
        let net = birth_death(10.0, 1.0);
        let runs = ensemble(&net, Engine::Augmented, &[0], 800.0, 42, 8).unwrap();
        let stats = ensemble_stats(&runs, default_burn_in(800.0), None).unwrap();
        // Stationary law is Poisson(10): mean and variance both 10.
        assert!(
            (stats.mean[0] - 10.0).abs() <= 3.0 * stats.standard_error[0],
            "mean {} +- {}",
            stats.mean[0],
            stats.standard_error[0]
        );
        assert!(
            (stats.variance[0] - 10.0).abs() <= 4.0 * stats.variance_standard_error[0],
            "variance {} +- {}",
            stats.variance[0],
            stats.variance_standard_error[0]
        );
        assert!(stats.standard_error[0] > 0.0);
    }

    #[test]
    fn engines_agree_on_a_delayed_network() {
        let net = delayed_birth_death();
        let horizon = 600.0;
        let burn = default_burn_in(horizon);
        let aug_runs = ensemble(&net, Engine::Augmented, &[0], horizon, 101, 8).unwrap();
        let dir_runs = ensemble(&net, Engine::Direct, &[0], horizon, 901, 8).unwrap();
        let a = ensemble_stats(&aug_runs, burn, Some(&[0])).unwrap();
        let d = ensemble_stats(&dir_runs, burn, Some(&[0])).unwrap();
        let se = (a.standard_error[0].powi(2) + d.standard_error[0].powi(2)).sqrt();
        assert!(
            (a.mean[0] - d.mean[0]).abs() <= 3.0 * se,
            "augmented {} vs direct {} (se {se})",
            a.mean[0],
            d.mean[0]
        );
        // Throughput of the delayed birth is still 3 per unit time.
        assert!((a.mean[0] - 3.0).abs() <= 4.0 * a.standard_error[0]);
    }

    #[test]
    fn logged_delay_samples_follow_the_phase_type_law() {
        let net = parse_network(
            "[species] X\n\
             [reaction] 0 -> X rate=50.0 delay={kind=erlang shape=3 rate=2.0}\n\
             [reaction] X -> 0 rate=1.0\n",
        )
        .unwrap();
        let run = simulate_delayed_direct(&net, &[0], 100.0, 3).unwrap();
        let mut taus: Vec<f64> = run.delay_samples.iter().map(|&(_, t)| t).collect();
        assert!(taus.len() > 2000);
        taus.sort_by(f64::total_cmp);
        let ph = crate::phasetype::erlang(3, 2.0).unwrap();
        let n = taus.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &tau) in taus.iter().enumerate() {
            let f = crate::phasetype::ph_cdf(&ph, tau).unwrap();
            ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        // 1% critical value of the one-sample KS statistic.
        assert!(ks < 1.6276 / n.sqrt(), "KS {ks} with n {n}");
    }

    #[test]
    fn ensemble_stats_integrate_exactly() {
        let traj = Trajectory {
            times: vec![0.0, 1.0, 3.0],
            states: vec![0, 2, 5],
            n_species: 1,
            event_counts: vec![2],
            seed: 0,
            horizon: 4.0,
            delay_samples: Vec::new(),
        };
        let stats = ensemble_stats(std::slice::from_ref(&traj), 0.0, None).unwrap();
        // mean = (0*1 + 2*2 + 5*1) / 4, second moment = (0 + 4*2 + 25) / 4.
        assert!((stats.mean[0] - 9.0 / 4.0).abs() < 1e-12);
        assert!((stats.variance[0] - (33.0 / 4.0 - 81.0 / 16.0)).abs() < 1e-12);

        // Burn-in clips the first segment.
        let stats = ensemble_stats(std::slice::from_ref(&traj), 2.0, None).unwrap();
        assert!((stats.mean[0] - 3.5).abs() < 1e-12);

        // A constant trajectory has zero variance.
        let flat = Trajectory {
            times: vec![0.0],
            states: vec![7],
            n_species: 1,
            event_counts: vec![],
            seed: 0,
            horizon: 4.0,
            delay_samples: Vec::new(),
        };
        let stats = ensemble_stats(std::slice::from_ref(&flat), 0.0, None).unwrap();
        assert_eq!(stats.mean[0], 7.0);
        assert_eq!(stats.variance[0], 0.0);
    }

    #[test]
    fn replica_seeds_are_consecutive_and_independent() {
        let net = birth_death(5.0, 1.0);
        let runs = ensemble(&net, Engine::Augmented, &[0], 30.0, 100, 4).unwrap();
        assert_eq!(runs.len(), 4);
        for (i, run) in runs.iter().enumerate() {
            assert_eq!(run.seed, 100 + i as u64);
        }
        assert_ne!(runs[0].times, runs[1].times);
    }

    #[test]
    fn absorbing_delay_parks_the_catalyst() {
        // E + S -> E + P with an absorbing delay removes the enzyme for
        // the whole conversion; with one enzyme no two conversions overlap.
        let net = parse_network(
            "[species] E S P\n\
             [reaction] E + S -> E + P rate=10.0 \
             delay={kind=erlang shape=2 rate=1.0 realization=absorbing}\n",
        )
        .unwrap();
        let run = simulate_delayed_direct(&net, &[1, 40, 0], 2000.0, 9).unwrap();
        for row in 0..run.times.len() {
            let e = run.state_at(row)[0];
            assert!(e == 0 || e == 1);
        }
        // Conservation: E + pending = 1, S + P + pending = 40.
        let fin = run.final_state();
        let pending = 1 - fin[0];
        assert_eq!(fin[1] + fin[2] + pending, 40);

        // Non-absorbing keeps the enzyme available during conversions.
        let net = parse_network(
            "[species] E S P\n\
             [reaction] E + S -> E + P rate=10.0 delay={kind=erlang shape=2 rate=1.0}\n",
        )
        .unwrap();
        let run = simulate_delayed_direct(&net, &[1, 40, 0], 2000.0, 9).unwrap();
        for row in 0..run.times.len() {
            assert_eq!(run.state_at(row)[0], 1);
        }
    }

    #[test]
    fn overflow_guard_trips_before_wrapping() {
        let net = parse_network("[species] X\n[reaction] 0 -> X rate=1000.0\n").unwrap();
        let aug = augment_network(&net).unwrap();
        let near_cap = 1i64 << 62;
        let err = simulate_ssa(&aug, &[near_cap], 10.0, 1).unwrap_err();
        assert!(matches!(err, SimulateError::Overflow { .. }));
    }

    #[test]
    fn input_validation() {
        let net = birth_death(1.0, 1.0);
        let aug = augment_network(&net).unwrap();
        assert!(matches!(
            simulate_ssa(&aug, &[0, 0, 0], 10.0, 1),
            Err(SimulateError::StateDimension { .. })
        ));
        assert!(matches!(
            simulate_ssa(&aug, &[-1], 10.0, 1),
            Err(SimulateError::NegativeState)
        ));
        assert!(matches!(
            simulate_ssa(&aug, &[0], 0.0, 1),
            Err(SimulateError::BadHorizon)
        ));
        let run = simulate_ssa(&aug, &[0], 10.0, 1).unwrap();
        assert!(matches!(
            ensemble_stats(std::slice::from_ref(&run), 10.0, None),
            Err(SimulateError::BadBurnIn)
        ));
        assert!(matches!(
            ensemble_stats(std::slice::from_ref(&run), 1.0, Some(&[5])),
            Err(SimulateError::BadProjection { .. })
        ));
        assert!(matches!(
            ensemble_stats(&[], 1.0, None),
            Err(SimulateError::EmptyEnsemble)
        ));
        assert!(matches!(
            run_replicas(0, 1, |s| simulate_ssa(&aug, &[0], 10.0, s)),
            Err(SimulateError::EmptyEnsemble)
        ));
    }
}
