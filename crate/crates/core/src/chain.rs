//! The two-state Gilbert-Elliot Markov chain.
//!
//! The chain has a *bad* state `b` and a *good* state `g`; `p` is the
//! probability of moving `b -> g` and `q` of moving `g -> b`. It is
//! event-triggered: the state advances exactly once per update cycle, at the
//! instant a packet enters service.
//!
//! Everything here is an immutable value and every operation is a pure
//! function; randomness enters only through explicit uniform inputs, so the
//! module is trivially thread-safe and replayable.

use crate::{as_f64, Error, Result, Scalar};

/// Modulation state: `Bad` is the slow state, `Good` the fast one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Bad,
    Good,
}

/// Transition matrix `[[1-p, p], [q, 1-q]]` of the two-state chain.
///
/// `p` and `q` may each take any value in `[0, 1]`, but `p = q = 0` is
/// rejected: without it the chain has the unique stationary distribution
/// `(q/(p+q), p/(p+q))`. The closed `[0, 1]` range (rather than the open
/// interval) lets limit points such as `(1, 0)` be evaluated directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix<T> {
    p: T,
    q: T,
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn new(p: T, q: T) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        if p + q <= T::zero() {
            return Err(Error::NoStationaryDistribution);
        }
        Ok(Self { p, q })
    }

    /// Probability of switching `Bad -> Good` when a packet enters service.
    pub fn p(&self) -> T {
        self.p
    }

    /// Probability of switching `Good -> Bad` when a packet enters service.
    pub fn q(&self) -> T {
        self.q
    }

    /// Stationary distribution `(pi_b, pi_g) = (q/(p+q), p/(p+q))`.
    ///
    /// `pi_g` is computed as `1 - pi_b` so the two always sum to one exactly.
    pub fn stationary_distribution(&self) -> StationaryDist<T> {
        let pi_b = self.q / (self.p + self.q);
        StationaryDist {
            pi_b,
            pi_g: T::one() - pi_b,
        }
    }

    /// Advances the chain one step using the uniform draw `u` in `[0, 1)`.
    ///
    /// From `Bad` the chain moves to `Good` iff `u < p`; from `Good` it moves
    /// to `Bad` iff `u < q`. Deterministic given `u`.
    pub fn next_state(&self, from: State, u: T) -> State {
        match from {
            State::Bad => {
                if u < self.p {
                    State::Good
                } else {
                    State::Bad
                }
            }
            State::Good => {
                if u < self.q {
                    State::Bad
                } else {
                    State::Good
                }
            }
        }
    }
}

/// Long-run fraction of update cycles spent in each state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDist<T> {
    pi_b: T,
    pi_g: T,
}

impl<T: Scalar> StationaryDist<T> {
    pub fn pi_b(&self) -> T {
        self.pi_b
    }

    pub fn pi_g(&self) -> T {
        self.pi_g
    }

    /// Draws a state from the distribution using the uniform `u` in `[0, 1)`.
    pub fn sample(&self, u: T) -> State {
        if u < self.pi_b {
            State::Bad
        } else {
            State::Good
        }
    }
}

/// Per-state operating costs and the average budget.
///
/// The good (fast) state is at least as expensive as the bad one:
/// `0 <= c_b <= c_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel<T> {
    c_b: T,
    c_g: T,
    budget: T,
}

impl<T: Scalar> CostModel<T> {
    pub fn new(c_b: T, c_g: T, budget: T) -> Result<Self> {
        if !(c_b.is_finite() && c_g.is_finite()) || c_b < T::zero() || c_b > c_g {
            return Err(Error::InvalidCosts {
                c_b: as_f64(c_b),
                c_g: as_f64(c_g),
            });
        }
        if !budget.is_finite() {
            return Err(Error::NonFiniteBudget {
                budget: as_f64(budget),
            });
        }
        Ok(Self { c_b, c_g, budget })
    }

    pub fn c_b(&self) -> T {
        self.c_b
    }

    pub fn c_g(&self) -> T {
        self.c_g
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    /// Long-run cost per unit time of running the chain:
    /// `pi_b * c_b + pi_g * c_g`.
    pub fn average_cost(&self, matrix: &TransitionMatrix<T>) -> T {
        let pi = matrix.stationary_distribution();
        pi.pi_b() * self.c_b + pi.pi_g() * self.c_g
    }
}

fn check_probability<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    if value.is_finite() && value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            name,
            value: as_f64(value),
        })
    }
}
