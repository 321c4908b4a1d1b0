//! Age-optimal transition matrices.
//!
//! In both scenarios the age decreases monotonically in `p` and increases
//! monotonically in `q`, so without a budget the infimum sits at the open
//! corner `p -> 1, q -> 0`; it is reported as the epsilon-adjusted point
//! `(1 - eps, eps)` with `attained = false`.
//!
//! With a binding budget `c_b < c < c_g` the optimum lies on the line
//! `q = alpha * p`, `alpha = (c_g - c)/(c - c_b)`, where the average cost
//! equals the budget exactly. Under service modulation the line-restricted
//! age still decreases in `p`, so the corner `p = min(1, 1/alpha)` is
//! optimal (epsilon-adjusted off the closed boundary). Under arrival
//! modulation the age depends on `(p, q)` only through `q/(p+q)`, which is
//! constant on the line: every line point is optimal and the canonical
//! corner is returned with `constant_along_line = true`.

use crate::analytic::{self, GEServiceScenario, Scenario};
use crate::chain::{CostModel, TransitionMatrix};
use crate::{as_f64, Error, Result, Scalar};

/// Where a budget sits relative to the per-state costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility<T> {
    /// `c >= c_g`: every transition matrix is affordable.
    Unconstrained,
    /// `c_b < c < c_g`: optimal matrices exhaust the budget along
    /// `q = alpha * p`.
    Binding { alpha: T },
    /// `c <= c_b`: no transition matrix meets the budget.
    Infeasible,
}

impl<T: Scalar> Feasibility<T> {
    pub fn alpha(&self) -> Option<T> {
        match self {
            Feasibility::Binding { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Feasibility::Unconstrained => "unconstrained",
            Feasibility::Binding { .. } => "binding",
            Feasibility::Infeasible => "infeasible",
        }
    }
}

/// An optimal transition matrix and how it was reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimResult<T> {
    pub p_star: T,
    pub q_star: T,
    /// Age at `(p_star, q_star)`.
    pub delta_star: T,
    /// True when the reported point itself achieves the optimal value;
    /// false when the optimum is an open-boundary supremum only approached
    /// within epsilon.
    pub attained: bool,
    /// Arrival scenario under a binding budget: the whole line `q = alpha*p`
    /// gives the same age.
    pub constant_along_line: bool,
    /// `alpha = 1`, where the two budget-corner branches coincide.
    pub tie: bool,
    /// Slope of the binding budget line, when one is active.
    pub alpha: Option<T>,
}

/// Classifies a budget against the per-state costs.
pub fn classify<T: Scalar>(cost: &CostModel<T>) -> Feasibility<T> {
    if cost.budget() >= cost.c_g() {
        Feasibility::Unconstrained
    } else if cost.budget() <= cost.c_b() {
        Feasibility::Infeasible
    } else {
        Feasibility::Binding {
            alpha: (cost.c_g() - cost.budget()) / (cost.budget() - cost.c_b()),
        }
    }
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    let half = T::one() / (T::one() + T::one());
    if epsilon > T::zero() && epsilon < half {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon {
            value: as_f64(epsilon),
        })
    }
}

/// Best transition matrix with no budget: the epsilon-adjusted corner
/// `(1 - eps, eps)`.
pub fn optimal_unconstrained<T: Scalar>(
    scenario: &Scenario<T>,
    epsilon: T,
) -> Result<OptimResult<T>> {
    check_epsilon(epsilon)?;
    let p_star = T::one() - epsilon;
    let q_star = epsilon;
    let matrix = TransitionMatrix::new(p_star, q_star)?;
    Ok(OptimResult {
        p_star,
        q_star,
        delta_star: analytic::age(scenario, &matrix).delta,
        attained: false,
        constant_along_line: false,
        tie: false,
        alpha: None,
    })
}

/// Best transition matrix under an average-cost budget.
///
/// Delegates to [`optimal_unconstrained`] when the budget covers `c_g`, and
/// fails with [`Error::InfeasibleBudget`] when it cannot even cover `c_b`.
/// Otherwise returns the corner of the budget line: `p = min(1, 1/alpha)`
/// scaled by `1 - eps`, `q = alpha * p`.
pub fn optimal_constrained<T: Scalar>(
    scenario: &Scenario<T>,
    cost: &CostModel<T>,
    epsilon: T,
) -> Result<OptimResult<T>> {
    match classify(cost) {
        Feasibility::Unconstrained => optimal_unconstrained(scenario, epsilon),
        Feasibility::Infeasible => Err(Error::InfeasibleBudget {
            budget: as_f64(cost.budget()),
            c_b: as_f64(cost.c_b()),
        }),
        Feasibility::Binding { alpha } => {
            check_epsilon(epsilon)?;
            let one = T::one();
            let p_star = one.min(alpha.recip()) * (one - epsilon);
            let q_star = (alpha * p_star).min(one);
            let matrix = TransitionMatrix::new(p_star, q_star)?;
            let constant_along_line = matches!(scenario, Scenario::Arrival(_));
            Ok(OptimResult {
                p_star,
                q_star,
                delta_star: analytic::age(scenario, &matrix).delta,
                attained: constant_along_line,
                constant_along_line,
                tie: alpha == one && matches!(scenario, Scenario::Service(_)),
                alpha: Some(alpha),
            })
        }
    }
}

/// Numerator of `d(delta)/dp` under service modulation, up to the positive
/// factor `q`:
///
/// ```text
/// (E[Y_b] E[Y_g^2] - E[Y_g] E[Y_b^2]) / 2
///   + E[Y_b] (E[S_g] - E[S_b]) ((1-q) E[Y_g] + q E[Y_b])
/// ```
///
/// Strictly negative for every valid scenario and `q` in `(0, 1)`, which is
/// what makes the age monotonically decreasing in `p`. It does not depend
/// on `p`.
pub fn lemma1_sign_condition<T: Scalar>(scenario: &GEServiceScenario<T>, q: T) -> T {
    let one = T::one();
    let two = one + one;
    let half = one / two;

    let s_b = scenario.mu_b().recip();
    let s_g = scenario.mu_g().recip();
    let z = scenario.lambda().recip();

    let ey_b = s_b + z;
    let ey_g = s_g + z;
    // E[(S + Z)^2] by independence
    let ey2_b = two * s_b * s_b + two * s_b * z + two * z * z;
    let ey2_g = two * s_g * s_g + two * s_g * z + two * z * z;

    half * (ey_b * ey2_g - ey_g * ey2_b) + ey_b * (s_g - s_b) * ((one - q) * ey_g + q * ey_b)
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T> {
    pub p: T,
    pub q: T,
    pub delta: T,
}

/// Which monotonicity direction an adjacent pair violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Age failed to strictly decrease when `p` grew at fixed `q`.
    DecreaseInP,
    /// Age failed to strictly increase when `q` grew at fixed `p`.
    IncreaseInQ,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation<T> {
    pub kind: ViolationKind,
    pub from: GridPoint<T>,
    pub to: GridPoint<T>,
}

/// All evaluated points plus every adjacent pair that broke monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport<T> {
    pub points: Vec<GridPoint<T>>,
    pub violations: Vec<MonotonicityViolation<T>>,
}

impl<T> MonotonicityReport<T> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the age on a uniform open-interval grid
/// (`i / (n+1)` for `i = 1..=n` on both axes) and reports every adjacent
/// pair where the age fails to strictly decrease in `p` (at fixed `q`) or to
/// strictly increase in `q` (at fixed `p`).
pub fn verify_monotonicity<T: Scalar>(
    scenario: &Scenario<T>,
    grid_resolution: usize,
) -> Result<MonotonicityReport<T>> {
    if grid_resolution < 3 {
        return Err(Error::GridTooSmall {
            got: grid_resolution,
        });
    }
    let n = grid_resolution;
    let denom = T::from_usize(n + 1).unwrap();
    let values: Vec<T> = (1..=n).map(|i| T::from_usize(i).unwrap() / denom).collect();

    // row-major over q, then p, so points[qi * n + pi]
    let mut points = Vec::with_capacity(n * n);
    for &q in &values {
        for &p in &values {
            let matrix = TransitionMatrix::new(p, q).expect("interior grid point");
            points.push(GridPoint {
                p,
                q,
                delta: analytic::age(scenario, &matrix).delta,
            });
        }
    }

    let mut violations = Vec::new();
    for qi in 0..n {
        for pi in 0..n - 1 {
            let from = points[qi * n + pi];
            let to = points[qi * n + pi + 1];
            if to.delta >= from.delta {
                violations.push(MonotonicityViolation {
                    kind: ViolationKind::DecreaseInP,
                    from,
                    to,
                });
            }
        }
    }
    for pi in 0..n {
        for qi in 0..n - 1 {
            let from = points[qi * n + pi];
            let to = points[(qi + 1) * n + pi];
            if to.delta <= from.delta {
                violations.push(MonotonicityViolation {
                    kind: ViolationKind::IncreaseInQ,
                    from,
                    to,
                });
            }
        }
    }

    Ok(MonotonicityReport { points, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{age_ge_arrival, age_ge_service, GEArrivalScenario};
    use approx::assert_relative_eq;

    fn service() -> Scenario<f64> {
        Scenario::Service(GEServiceScenario::new(1.0, 0.1, 1.0).unwrap())
    }

    fn arrival() -> Scenario<f64> {
        Scenario::Arrival(GEArrivalScenario::new(1.0, 0.1, 1.0).unwrap())
    }

    fn cost(c_b: f64, c_g: f64, budget: f64) -> CostModel<f64> {
        CostModel::new(c_b, c_g, budget).unwrap()
    }

    #[test]
    fn classify_examples() {
        match classify(&cost(1.0, 2.0, 1.8)) {
            Feasibility::Binding { alpha } => assert_relative_eq!(alpha, 0.25, epsilon = 1e-15),
            other => panic!("expected binding, got {other:?}"),
        }
        match classify(&cost(1.0, 2.0, 1.2)) {
            Feasibility::Binding { alpha } => assert_relative_eq!(alpha, 4.0, max_relative = 1e-14),
            other => panic!("expected binding, got {other:?}"),
        }
        assert_eq!(classify(&cost(1.0, 2.0, 3.0)), Feasibility::Unconstrained);
        // boundaries sit with the adjacent closed regimes
        assert_eq!(classify(&cost(1.0, 2.0, 2.0)), Feasibility::Unconstrained);
        assert_eq!(classify(&cost(1.0, 2.0, 1.0)), Feasibility::Infeasible);
        assert_eq!(classify(&cost(1.0, 2.0, 0.5)), Feasibility::Infeasible);
    }

    #[test]
    fn unconstrained_approaches_good_only_age() {
        for scenario in [service(), arrival()] {
            let r = optimal_unconstrained(&scenario, 1e-6).unwrap();
            assert!((r.delta_star - 2.5).abs() < 1e-4, "{}", r.delta_star);
            assert_eq!(r.p_star, 1.0 - 1e-6);
            assert_eq!(r.q_star, 1e-6);
            assert!(!r.attained);
            assert!(r.alpha.is_none());
        }
    }

    #[test]
    fn unconstrained_is_monotone_in_epsilon() {
        for scenario in [service(), arrival()] {
            let coarse = optimal_unconstrained(&scenario, 1e-3).unwrap();
            let fine = optimal_unconstrained(&scenario, 1e-6).unwrap();
            assert!(coarse.delta_star >= fine.delta_star);
        }
    }

    #[test]
    fn epsilon_is_validated() {
        assert!(matches!(
            optimal_unconstrained(&service(), 0.0),
            Err(Error::InvalidEpsilon { .. })
        ));
        assert!(matches!(
            optimal_unconstrained(&service(), 0.5),
            Err(Error::InvalidEpsilon { .. })
        ));
    }

    #[test]
    fn constrained_corner_small_alpha() {
        let eps = 1e-6;
        let r = optimal_constrained(&service(), &cost(1.0, 2.0, 1.8), eps).unwrap();
        assert_relative_eq!(r.alpha.unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(r.p_star, 1.0 - eps, epsilon = 1e-15);
        assert_relative_eq!(r.q_star, 0.25 * (1.0 - eps), epsilon = 1e-15);
        assert!(!r.constant_along_line && !r.attained && !r.tie);
        // the reported point exhausts the budget
        let achieved =
            cost(1.0, 2.0, 1.8).average_cost(&TransitionMatrix::new(r.p_star, r.q_star).unwrap());
        assert_relative_eq!(achieved, 1.8, epsilon = 1e-9);
    }

    #[test]
    fn constrained_corner_large_alpha() {
        let eps = 1e-6;
        let r = optimal_constrained(&service(), &cost(1.0, 2.0, 1.2), eps).unwrap();
        assert_relative_eq!(r.alpha.unwrap(), 4.0, max_relative = 1e-14);
        assert_relative_eq!(r.p_star, 0.25 * (1.0 - eps), max_relative = 1e-14);
        assert_relative_eq!(r.q_star, 1.0 - eps, max_relative = 1e-14);
        let achieved =
            cost(1.0, 2.0, 1.2).average_cost(&TransitionMatrix::new(r.p_star, r.q_star).unwrap());
        assert_relative_eq!(achieved, 1.2, epsilon = 1e-9);
    }

    #[test]
    fn constrained_arrival_line_is_flat() {
        let r = optimal_constrained(&arrival(), &cost(1.0, 2.0, 1.5), 1e-6).unwrap();
        assert!(r.constant_along_line);
        assert!(r.attained);
        let alpha = r.alpha.unwrap();
        assert_relative_eq!(alpha, 1.0, epsilon = 1e-15);
        let Scenario::Arrival(s) = arrival() else {
            unreachable!()
        };
        let at = |p: f64, q: f64| age_ge_arrival(&s, &TransitionMatrix::new(p, q).unwrap()).delta;
        assert_relative_eq!(at(0.3, 0.3), at(0.9, 0.9), max_relative = 1e-12);
        assert_relative_eq!(r.delta_star, at(0.5, 0.5), max_relative = 1e-12);
    }

    #[test]
    fn constrained_service_alpha_one_is_a_tie() {
        let r = optimal_constrained(&service(), &cost(1.0, 2.0, 1.5), 1e-6).unwrap();
        assert!(r.tie);
        assert_relative_eq!(r.p_star, 1.0 - 1e-6, epsilon = 1e-15);
        assert_relative_eq!(r.q_star, 1.0 - 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn constrained_delegates_when_budget_is_loose() {
        let r = optimal_constrained(&service(), &cost(1.0, 2.0, 5.0), 1e-6).unwrap();
        let u = optimal_unconstrained(&service(), 1e-6).unwrap();
        assert_eq!(r, u);
    }

    #[test]
    fn constrained_rejects_hopeless_budget() {
        assert!(matches!(
            optimal_constrained(&service(), &cost(1.0, 2.0, 0.5), 1e-6),
            Err(Error::InfeasibleBudget { .. })
        ));
        assert!(matches!(
            optimal_constrained(&service(), &cost(1.0, 2.0, 1.0), 1e-6),
            Err(Error::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn constraint_holds_to_tolerance_along_alpha_sweep() {
        for alpha_budget in [1.1, 1.25, 1.5, 1.75, 1.9] {
            let cm = cost(1.0, 2.0, alpha_budget);
            let r = optimal_constrained(&service(), &cm, 1e-6).unwrap();
            let alpha = r.alpha.unwrap();
            assert!((r.q_star - alpha * r.p_star).abs() <= 1e-12);
            let achieved = cm.average_cost(&TransitionMatrix::new(r.p_star, r.q_star).unwrap());
            assert!((achieved - cm.budget()).abs() <= 1e-9);
        }
    }

    /// On the budget line the service-scenario age keeps falling as p grows,
    /// which is why the corner is optimal.
    #[test]
    fn service_line_age_is_non_increasing_in_p() {
        let scenario = service();
        for alpha in [0.25, 1.0, 4.0] {
            let p_max = 1.0f64.min(1.0 / alpha);
            let mut previous = f64::INFINITY;
            for i in 1..=50 {
                let p = p_max * i as f64 / 50.0;
                let delta = crate::analytic::age_on_line(&scenario, alpha, p).unwrap();
                assert!(
                    delta <= previous,
                    "alpha={alpha}, p={p}: {delta} rose from {previous}"
                );
                previous = delta;
            }
        }
    }

    #[test]
    fn sign_condition_hand_value() {
        // lambda=1, mu_b=0.1, mu_g=1, q=0.5:
        //   (11*6 - 2*222)/2 + 11*(1 - 10)*(0.5*2 + 0.5*11) = -189 - 643.5
        let Scenario::Service(s) = service() else {
            unreachable!()
        };
        assert_relative_eq!(lemma1_sign_condition(&s, 0.5), -832.5, max_relative = 1e-13);
        assert!(lemma1_sign_condition(&s, 0.01) < 0.0);
        assert!(lemma1_sign_condition(&s, 0.99) < 0.0);
    }

    /// The leading term E[Y_b]E[Y_g^2] - E[Y_g]E[Y_b^2] is negative on its
    /// own whenever mu_g > mu_b.
    #[test]
    fn leading_term_is_negative_on_log_grid() {
        let grid: Vec<f64> = (0..8)
            .map(|i| 10f64.powf(-2.0 + i as f64 * 4.0 / 7.0))
            .collect();
        for &lambda in &grid {
            for &mu_b in &grid {
                for &mu_g in &grid {
                    if mu_g <= mu_b {
                        continue;
                    }
                    let (sb, sg, z) = (1.0 / mu_b, 1.0 / mu_g, 1.0 / lambda);
                    let (ey_b, ey_g) = (sb + z, sg + z);
                    let ey2_b = 2.0 * (sb * sb + sb * z + z * z);
                    let ey2_g = 2.0 * (sg * sg + sg * z + z * z);
                    assert!(
                        ey_b * ey2_g - ey_g * ey2_b < 0.0,
                        "lambda={lambda} mu_b={mu_b} mu_g={mu_g}"
                    );
                }
            }
        }
    }

    #[test]
    fn monotonicity_grid_is_clean_for_both_scenarios() {
        for scenario in [service(), arrival()] {
            let report = verify_monotonicity(&scenario, 9).unwrap();
            assert_eq!(report.points.len(), 81);
            assert!(report.is_clean(), "violations: {:?}", report.violations);
        }
    }

    #[test]
    fn monotonicity_report_lists_every_grid_point() {
        let report = verify_monotonicity(&service(), 3).unwrap();
        assert_eq!(report.points.len(), 9);
        let expected = [0.25, 0.5, 0.75];
        for (i, point) in report.points.iter().enumerate() {
            assert_relative_eq!(point.p, expected[i % 3], epsilon = 1e-15);
            assert_relative_eq!(point.q, expected[i / 3], epsilon = 1e-15);
            let m = TransitionMatrix::new(point.p, point.q).unwrap();
            let Scenario::Service(s) = service() else {
                unreachable!()
            };
            assert_eq!(point.delta, age_ge_service(&s, &m).delta);
        }
    }

    #[test]
    fn monotonicity_rejects_tiny_grids() {
        assert!(matches!(
            verify_monotonicity(&service(), 2),
            Err(Error::GridTooSmall { got: 2 })
        ));
    }
}
