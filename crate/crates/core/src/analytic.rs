//! Closed-form time-average age.
//!
//! Cycles are indexed by successful packets: cycle `j` runs from the entry of
//! packet `j` into service to the entry of packet `j+1`, so its length is
//! `Y_j = S_j + Z_j` (service time plus idle wait). Because the modulation
//! chain is stationary and ergodic, the time-average age reduces to a ratio
//! of per-state expectations,
//!
//! ```text
//! delta = (q E[Q_b] + p E[Q_g]) / (q E[Y_b] + p E[Y_g]),
//! ```
//!
//! where `Q` is the area under the age curve attributed to a cycle and the
//! `b`/`g` subscripts condition on the state the cycle runs in. The two
//! scenarios differ only in which side of the cycle the chain modulates:
//!
//! - GE service: `S` is `Exp(mu_b)` or `Exp(mu_g)` by state, `Z ~ Exp(lambda)`,
//!   and `E[Q_s] = E[(S_s+Z)^2]/2 + E[Y_s] * E[next service | state s]`.
//! - GE arrival: `S ~ Exp(mu)`, `Z` is `Exp(lambda_b)` or `Exp(lambda_g)`, and
//!   `E[Q_s] = E[(S+Z_s)^2]/2 + E[S]^2 + E[S] E[Z_s]`.
//!
//! Cross terms expand by independence: `E[(X+Z)^2] = E[X^2] + 2E[X]E[Z] + E[Z^2]`.
//! Numerator and denominator are evaluated separately; nothing is simplified
//! symbolically.

use crate::chain::TransitionMatrix;
use crate::{as_f64, Error, Result, Scalar, State};

/// First and second moment of an exponential distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpMoments<T> {
    pub mean: T,
    pub second_moment: T,
}

/// Moments of `Exp(rate)`: `(1/rate, 2/rate^2)`.
pub fn exp_moments<T: Scalar>(rate: T) -> Result<ExpMoments<T>> {
    check_rate("rate", rate)?;
    Ok(moments(rate))
}

fn moments<T: Scalar>(rate: T) -> ExpMoments<T> {
    let mean = rate.recip();
    ExpMoments {
        mean,
        second_moment: two::<T>() * mean * mean,
    }
}

fn two<T: Scalar>() -> T {
    T::one() + T::one()
}

fn half<T: Scalar>() -> T {
    T::one() / two::<T>()
}

fn check_rate<T: Scalar>(name: &'static str, rate: T) -> Result<()> {
    if rate.is_finite() && rate > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidRate {
            name,
            value: as_f64(rate),
        })
    }
}

/// Gilbert-Elliot service: Poisson arrivals with rate `lambda`, exponential
/// service with rate `mu_b` in the bad state and `mu_g > mu_b` in the good
/// state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEServiceScenario<T> {
    lambda: T,
    mu_b: T,
    mu_g: T,
}

impl<T: Scalar> GEServiceScenario<T> {
    pub fn new(lambda: T, mu_b: T, mu_g: T) -> Result<Self> {
        let s = Self::new_allowing_equal(lambda, mu_b, mu_g)?;
        if mu_g <= mu_b {
            return Err(Error::RateOrdering {
                fast_name: "mu_g",
                fast: as_f64(mu_g),
                slow_name: "mu_b",
                slow: as_f64(mu_b),
            });
        }
        Ok(s)
    }

    /// Test-support constructor that permits `mu_b = mu_g`, where the model
    /// collapses to a single-state system. Positivity is still enforced.
    pub fn new_allowing_equal(lambda: T, mu_b: T, mu_g: T) -> Result<Self> {
        check_rate("lambda", lambda)?;
        check_rate("mu_b", mu_b)?;
        check_rate("mu_g", mu_g)?;
        if mu_g < mu_b {
            return Err(Error::RateOrdering {
                fast_name: "mu_g",
                fast: as_f64(mu_g),
                slow_name: "mu_b",
                slow: as_f64(mu_b),
            });
        }
        Ok(Self { lambda, mu_b, mu_g })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn mu_b(&self) -> T {
        self.mu_b
    }

    pub fn mu_g(&self) -> T {
        self.mu_g
    }
}

/// Gilbert-Elliot arrival: exponential service with rate `mu`, exponential
/// interarrivals with rate `lambda_b` in the bad state and `lambda_g >
/// lambda_b` in the good state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEArrivalScenario<T> {
    mu: T,
    lambda_b: T,
    lambda_g: T,
}

impl<T: Scalar> GEArrivalScenario<T> {
    pub fn new(mu: T, lambda_b: T, lambda_g: T) -> Result<Self> {
        let s = Self::new_allowing_equal(mu, lambda_b, lambda_g)?;
        if lambda_g <= lambda_b {
            return Err(Error::RateOrdering {
                fast_name: "lambda_g",
                fast: as_f64(lambda_g),
                slow_name: "lambda_b",
                slow: as_f64(lambda_b),
            });
        }
        Ok(s)
    }

    /// Test-support constructor that permits `lambda_b = lambda_g`.
    pub fn new_allowing_equal(mu: T, lambda_b: T, lambda_g: T) -> Result<Self> {
        check_rate("mu", mu)?;
        check_rate("lambda_b", lambda_b)?;
        check_rate("lambda_g", lambda_g)?;
        if lambda_g < lambda_b {
            return Err(Error::RateOrdering {
                fast_name: "lambda_g",
                fast: as_f64(lambda_g),
                slow_name: "lambda_b",
                slow: as_f64(lambda_b),
            });
        }
        Ok(Self {
            mu,
            lambda_b,
            lambda_g,
        })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn lambda_b(&self) -> T {
        self.lambda_b
    }

    pub fn lambda_g(&self) -> T {
        self.lambda_g
    }
}

/// Either modulation scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario<T> {
    Service(GEServiceScenario<T>),
    Arrival(GEArrivalScenario<T>),
}

impl<T: Scalar> Scenario<T> {
    /// Service rate in force while `state` holds.
    pub fn service_rate(&self, state: State) -> T {
        match self {
            Scenario::Service(s) => match state {
                State::Bad => s.mu_b,
                State::Good => s.mu_g,
            },
            Scenario::Arrival(s) => s.mu,
        }
    }

    /// Arrival rate in force while `state` holds.
    pub fn arrival_rate(&self, state: State) -> T {
        match self {
            Scenario::Service(s) => s.lambda,
            Scenario::Arrival(s) => match state {
                State::Bad => s.lambda_b,
                State::Good => s.lambda_g,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Service(_) => "ge-service",
            Scenario::Arrival(_) => "ge-arrival",
        }
    }
}

/// The expectations behind a time-average age, exposed so each term can be
/// checked on its own, plus the resulting age `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeBreakdown<T> {
    /// `E[Q_b]`: expected per-cycle age area given the bad state.
    pub eq_b: T,
    /// `E[Q_g]`: expected per-cycle age area given the good state.
    pub eq_g: T,
    /// `E[Y_b]`: expected cycle length given the bad state.
    pub ey_b: T,
    /// `E[Y_g]`: expected cycle length given the good state.
    pub ey_g: T,
    /// Time-average age `(q EQ_b + p EQ_g) / (q EY_b + p EY_g)`.
    pub delta: T,
}

fn combine<T: Scalar>(
    matrix: &TransitionMatrix<T>,
    eq_b: T,
    eq_g: T,
    ey_b: T,
    ey_g: T,
) -> AgeBreakdown<T> {
    let (p, q) = (matrix.p(), matrix.q());
    AgeBreakdown {
        eq_b,
        eq_g,
        ey_b,
        ey_g,
        delta: (q * eq_b + p * eq_g) / (q * ey_b + p * ey_g),
    }
}

/// Time-average age under Gilbert-Elliot service times.
pub fn age_ge_service<T: Scalar>(
    scenario: &GEServiceScenario<T>,
    matrix: &TransitionMatrix<T>,
) -> AgeBreakdown<T> {
    let (p, q) = (matrix.p(), matrix.q());
    let one = T::one();
    let s_b = moments(scenario.mu_b);
    let s_g = moments(scenario.mu_g);
    let z = moments(scenario.lambda);

    let ey_b = s_b.mean + z.mean;
    let ey_g = s_g.mean + z.mean;

    // expected service time of the next packet, conditioned on this cycle's state
    let next_service_from_b = p * s_g.mean + (one - p) * s_b.mean;
    let next_service_from_g = q * s_b.mean + (one - q) * s_g.mean;

    let eq_b = half::<T>() * sum_square(s_b, z) + ey_b * next_service_from_b;
    let eq_g = half::<T>() * sum_square(s_g, z) + ey_g * next_service_from_g;

    combine(matrix, eq_b, eq_g, ey_b, ey_g)
}

/// Time-average age under Gilbert-Elliot interarrival times.
pub fn age_ge_arrival<T: Scalar>(
    scenario: &GEArrivalScenario<T>,
    matrix: &TransitionMatrix<T>,
) -> AgeBreakdown<T> {
    let s = moments(scenario.mu);
    let z_b = moments(scenario.lambda_b);
    let z_g = moments(scenario.lambda_g);

    let ey_b = s.mean + z_b.mean;
    let ey_g = s.mean + z_g.mean;

    let eq_b = half::<T>() * sum_square(s, z_b) + s.mean * s.mean + s.mean * z_b.mean;
    let eq_g = half::<T>() * sum_square(s, z_g) + s.mean * s.mean + s.mean * z_g.mean;

    combine(matrix, eq_b, eq_g, ey_b, ey_g)
}

/// `E[(X + Z)^2]` for independent `X` and `Z`.
fn sum_square<T: Scalar>(x: ExpMoments<T>, z: ExpMoments<T>) -> T {
    x.second_moment + two::<T>() * x.mean * z.mean + z.second_moment
}

/// Dispatches to the matching closed form.
pub fn age<T: Scalar>(scenario: &Scenario<T>, matrix: &TransitionMatrix<T>) -> AgeBreakdown<T> {
    match scenario {
        Scenario::Service(s) => age_ge_service(s, matrix),
        Scenario::Arrival(s) => age_ge_arrival(s, matrix),
    }
}

/// Time-average age of the single-state system (no modulation):
/// `1/lambda + 2/mu - 1/(lambda + mu)`.
pub fn age_single_state<T: Scalar>(lambda: T, mu: T) -> Result<T> {
    check_rate("lambda", lambda)?;
    check_rate("mu", mu)?;
    Ok(lambda.recip() + two::<T>() * mu.recip() - (lambda + mu).recip())
}

/// Age restricted to the budget line `q = alpha * p`:
/// `(alpha EQ_b + EQ_g) / (alpha EY_b + EY_g)`.
///
/// Requires `0 < p <= min(1, 1/alpha)` so that both probabilities stay in
/// `(0, 1]`. Equals the full formula evaluated at `(p, alpha * p)`.
pub fn age_on_line<T: Scalar>(scenario: &Scenario<T>, alpha: T, p: T) -> Result<T> {
    if !(alpha.is_finite() && alpha > T::zero()) {
        return Err(Error::InvalidAlpha {
            value: as_f64(alpha),
        });
    }
    let p_max = T::one().min(alpha.recip());
    if !(p > T::zero() && p <= p_max) {
        return Err(Error::LineParameterOutOfRange {
            p: as_f64(p),
            max: as_f64(p_max),
        });
    }
    let q = (alpha * p).min(T::one());
    let b = age(scenario, &TransitionMatrix::new(p, q)?);
    Ok((alpha * b.eq_b + b.eq_g) / (alpha * b.ey_b + b.ey_g))
}
