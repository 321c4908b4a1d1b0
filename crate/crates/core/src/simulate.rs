//! Seeded Monte Carlo estimation of the time-average age.
//!
//! The simulator works at cycle granularity. Per state, service and residual
//! interarrival times are exponential, so after a delivery the wait for the
//! next accepted packet is again exponential with the arrival rate in force;
//! blocked arrivals never need to be materialized. Each cycle draws the
//! service time `S_j`, the idle wait `Z_j`, and one state transition (the
//! chain advances when a packet enters service).
//!
//! The age trajectory is the exact sawtooth of that event sequence, taking
//! age 0 at the first service entry: during a service the age keeps growing,
//! at a delivery it drops to the delivered packet's system time `S_j`, and it
//! grows at unit slope in between. The estimate is total area divided by
//! total elapsed time, `sum(A_j) / sum(Y_j)`.
//!
//! Randomness comes from ChaCha8 with one counter stream per replication
//! (stream id = replication index), so a result is a pure function of the
//! config and runs are reproducible draw for draw. Exponentials use the
//! inverse CDF `-ln(1 - u) / rate`. Replications execute in parallel and are
//! reduced in replication order, so the output does not depend on thread
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::Scenario;
use crate::chain::TransitionMatrix;
use crate::{Error, Result, Scalar, State};

/// How the modulation state is chosen at the start of a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// One draw from the stationary distribution (the default; avoids
    /// burn-in bias).
    #[default]
    Stationary,
    /// Start in a fixed state.
    Fixed(State),
}

/// A complete description of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub scenario: Scenario<T>,
    pub transition: TransitionMatrix<T>,
    pub initial_state: InitialState,
    pub num_cycles: u64,
    pub seed: u64,
    pub replications: u32,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(
        scenario: Scenario<T>,
        transition: TransitionMatrix<T>,
        num_cycles: u64,
        seed: u64,
        replications: u32,
    ) -> Result<Self> {
        if num_cycles < 1 {
            return Err(Error::TooFewCycles {
                min: 1,
                got: num_cycles,
            });
        }
        if replications < 1 {
            return Err(Error::NoReplications);
        }
        Ok(Self {
            scenario,
            transition,
            initial_state: InitialState::Stationary,
            num_cycles,
            seed,
            replications,
        })
    }

    pub fn with_initial_state(mut self, initial_state: InitialState) -> Self {
        self.initial_state = initial_state;
        self
    }
}

/// One replication's estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication<T> {
    pub delta_hat: T,
    pub cycles: u64,
    pub sim_time: T,
}

/// Aggregated simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    /// Mean of the per-replication estimates.
    pub delta_hat: T,
    /// Sample standard deviation across replications divided by sqrt(R);
    /// zero when there is a single replication.
    pub std_error: T,
    pub cycles_total: u64,
    /// Total simulated time, i.e. the sum of all generated cycle lengths.
    pub sim_time_total: T,
    pub per_replication: Vec<Replication<T>>,
}

/// One generated cycle: end time `t`, service time, idle wait, and the state
/// the cycle ran in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord<T> {
    pub t: T,
    pub service: T,
    pub idle: T,
    pub state: State,
}

/// Derives a decorrelated seed for indexed runs (parameter sweeps,
/// acceptance grids) from a base seed. SplitMix64 finalizer.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Cycle generator for one replication: an iterator over `(S_j, Z_j, state_j)`.
struct CycleStream<'a, T> {
    rng: ChaCha8Rng,
    scenario: &'a Scenario<T>,
    transition: &'a TransitionMatrix<T>,
    state: State,
}

impl<'a, T: Scalar> CycleStream<'a, T> {
    fn new(cfg: &'a SimConfig<T>, replication: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::from(replication));
        let state = match cfg.initial_state {
            InitialState::Fixed(s) => s,
            InitialState::Stationary => {
                let pi = cfg.transition.stationary_distribution();
                pi.sample(uniform::<T>(&mut rng))
            }
        };
        Self {
            rng,
            scenario: &cfg.scenario,
            transition: &cfg.transition,
            state,
        }
    }

    fn next_cycle(&mut self) -> (T, T, State) {
        let state = self.state;
        let service = exp_draw(&mut self.rng, self.scenario.service_rate(state));
        let idle = exp_draw(&mut self.rng, self.scenario.arrival_rate(state));
        // the next packet enters service now; that is when the chain moves
        self.state = self
            .transition
            .next_state(state, uniform::<T>(&mut self.rng));
        (service, idle, state)
    }
}

fn uniform<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::from_f64(rng.random::<f64>()).unwrap()
}

/// Inverse-CDF exponential draw; the complement is taken in f64 before the
/// cast so `ln` never sees zero.
fn exp_draw<T: Scalar>(rng: &mut ChaCha8Rng, rate: T) -> T {
    let w = T::from_f64(1.0 - rng.random::<f64>()).unwrap();
    -(w.ln()) / rate
}

fn half<T: Scalar>() -> T {
    let two = T::one() + T::one();
    T::one() / two
}

enum Partition {
    Sawtooth,
    Trapezoid,
}

fn run_replication<T: Scalar>(
    cfg: &SimConfig<T>,
    replication: u32,
    partition: &Partition,
) -> Replication<T> {
    let mut stream = CycleStream::new(cfg, replication);
    let half = half::<T>();
    let mut area = T::zero();
    let mut area_time = T::zero();
    let mut total_time = T::zero();
    // age at the current cycle's service entry; 0 at the first entry
    let mut age_at_entry = T::zero();
    // previous cycle's length, pending its trapezoid (needs the next S)
    let mut pending_y: Option<T> = None;

    for _ in 0..cfg.num_cycles {
        let (s, z, _) = stream.next_cycle();
        let y = s + z;
        match partition {
            Partition::Sawtooth => {
                // grows from age_at_entry during the service, resets to s at
                // the delivery, grows again until the next entry
                area = area + age_at_entry * s + half * s * s + s * z + half * z * z;
                area_time = area_time + y;
                age_at_entry = y;
            }
            Partition::Trapezoid => {
                // Q_j = Y_j^2 / 2 + Y_j * S_{j+1}
                if let Some(py) = pending_y {
                    area = area + half * py * py + py * s;
                    area_time = area_time + py;
                }
                pending_y = Some(y);
            }
        }
        total_time = total_time + y;
    }

    Replication {
        delta_hat: area / area_time,
        cycles: cfg.num_cycles,
        sim_time: total_time,
    }
}

fn run<T: Scalar>(cfg: &SimConfig<T>, partition: Partition) -> SimResult<T> {
    let reps: Vec<Replication<T>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, r, &partition))
        .collect();

    let count = T::from_u32(cfg.replications).unwrap();
    let mean = reps.iter().fold(T::zero(), |acc, r| acc + r.delta_hat) / count;
    let std_error = if cfg.replications > 1 {
        let ss = reps.iter().fold(T::zero(), |acc, r| {
            let d = r.delta_hat - mean;
            acc + d * d
        });
        (ss / (count - T::one()) / count).sqrt()
    } else {
        T::zero()
    };
    let sim_time_total = reps.iter().fold(T::zero(), |acc, r| acc + r.sim_time);

    SimResult {
        delta_hat: mean,
        std_error,
        cycles_total: cfg.num_cycles * u64::from(cfg.replications),
        sim_time_total,
        per_replication: reps,
    }
}

/// Estimates the time-average age from the exact sawtooth area of the
/// generated trajectory.
pub fn simulate_cycles<T: Scalar>(cfg: &SimConfig<T>) -> SimResult<T> {
    run(cfg, Partition::Sawtooth)
}

/// Same trajectory generation, but the area is accumulated with the
/// per-cycle trapezoids `Q_j = Y_j^2/2 + Y_j * S_{j+1}`. The lookahead on the
/// next service time means the last generated cycle contributes no trapezoid,
/// so at least two cycles are required. Both partitions tile the same
/// trajectory up to boundary terms and agree as the cycle count grows.
pub fn simulate_area_trapezoid_partition<T: Scalar>(cfg: &SimConfig<T>) -> Result<SimResult<T>> {
    if cfg.num_cycles < 2 {
        return Err(Error::TooFewCycles {
            min: 2,
            got: cfg.num_cycles,
        });
    }
    Ok(run(cfg, Partition::Trapezoid))
}

/// Materializes the first `max_cycles` cycles of replication 0's sample
/// path: `(T_j, S_j, Z_j, state_j)` with `T_j = T_{j-1} + S_j + Z_j`.
pub fn trajectory<T: Scalar>(cfg: &SimConfig<T>, max_cycles: u64) -> Vec<CycleRecord<T>> {
    let mut stream = CycleStream::new(cfg, 0);
    let mut t = T::zero();
    (0..max_cycles)
        .map(|_| {
            let (service, idle, state) = stream.next_cycle();
            t = t + service + idle;
            CycleRecord {
                t,
                service,
                idle,
                state,
            }
        })
        .collect()
}
