//! The generic fixed-point engine behind both perturbation solvers.
//!
//! Given Phi(x) = Phi(0) + D_0 Phi(x) + N(x), a right inverse R of the
//! linearization with ||R|| <= L, a nonlinearity bound
//! ||N(x) - N(y)|| <= N ||x - y|| (||x|| + ||y||) on the ball of radius r_0,
//! and the smallness ||Phi(0)|| <= r / (2L) with r < min(r_0, 1/(2NL)),
//! the map A(x) = -R(Phi(0) + N(x)) contracts on the closed ball of radius
//! r and the unique fixed point solves Phi(x) = 0 inside the ball of radius
//! 2 L ||Phi(0)||.

use crate::error::{KummerError, Result};

/// Minimal vector-space interface for iterates.
pub trait VectorOps: Clone {
    fn axpy_assign(&mut self, alpha: f64, other: &Self);
    fn scale_assign(&mut self, alpha: f64);
}

impl VectorOps for f64 {
    fn axpy_assign(&mut self, alpha: f64, other: &Self) {
        *self += alpha * other;
    }
    fn scale_assign(&mut self, alpha: f64) {
        *self *= alpha;
    }
}

impl VectorOps for crate::grid::GridField {
    fn axpy_assign(&mut self, alpha: f64, other: &Self) {
        self.axpy(alpha, other);
    }
    fn scale_assign(&mut self, alpha: f64) {
        self.scale(alpha);
    }
}

/// The data of one fixed-point problem.
pub struct BanachProblem<'a, X: VectorOps, Y: VectorOps> {
    /// Phi(0), an element of the codomain.
    pub phi0: Y,
    /// Right inverse of the linearization.
    pub apply_r: Box<dyn Fn(&Y) -> Result<X> + 'a>,
    /// The nonlinearity N(x) = Phi(x) - Phi(0) - D_0 Phi(x).
    pub nonlinearity: Box<dyn Fn(&X) -> Result<Y> + 'a>,
    /// Bound L on ||R||.
    pub l_bound: f64,
    /// Lipschitz constant N of the nonlinearity.
    pub n_bound: f64,
    /// Ball radius r_0 on which the nonlinearity bound holds.
    pub r0: f64,
    pub norm_x: Box<dyn Fn(&X) -> f64 + 'a>,
    pub norm_y: Box<dyn Fn(&Y) -> f64 + 'a>,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TraceStep {
    pub iter: usize,
    pub step_norm: f64,
    pub x_norm: f64,
    pub contraction: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SmallnessReport {
    pub phi0_norm: f64,
    /// r = 2 L ||Phi(0)||.
    pub r: f64,
    /// min(r_0, 1/(2 N L)).
    pub r_limit: f64,
    /// The contraction bound 4 N L^2 ||Phi(0)||; must be < 1.
    pub contraction_bound: f64,
}

pub struct BanachSolution<X> {
    pub x: X,
    pub trace: Vec<TraceStep>,
    pub smallness: SmallnessReport,
    /// Largest observed step-to-step contraction factor.
    pub observed_contraction: f64,
}

/// Check the smallness precondition without iterating.
pub fn smallness_report<X: VectorOps, Y: VectorOps>(p: &BanachProblem<X, Y>) -> SmallnessReport {
    let phi0_norm = (p.norm_y)(&p.phi0);
    let r = 2.0 * p.l_bound * phi0_norm;
    let r_limit = p.r0.min(1.0 / (2.0 * p.n_bound * p.l_bound));
    SmallnessReport { phi0_norm, r, r_limit, contraction_bound: 4.0 * p.n_bound * p.l_bound * p.l_bound * phi0_norm }
}

/// Iterate A(x) = -R(Phi(0) + N(x)) from x0 (default: one engine step from
/// zero, i.e. -R Phi(0)) until the step norm drops below tol.
pub fn banach_iterate<X: VectorOps, Y: VectorOps>(
    p: &BanachProblem<X, Y>,
    x0: Option<X>,
    tol: f64,
    max_iter: usize,
) -> Result<BanachSolution<X>> {
    let smallness = smallness_report(p);
    if smallness.r >= smallness.r_limit {
        return Err(KummerError::Smallness {
            msg: format!(
                "2 L ||Phi(0)|| = {:.6e} must be < min(r0, 1/(2NL)) = {:.6e} (margin {:.3e})",
                smallness.r,
                smallness.r_limit,
                smallness.r - smallness.r_limit
            ),
        });
    }
    let ball = smallness.r;
    let mut x = match x0 {
        Some(x0) => {
            if (p.norm_x)(&x0) > ball {
                return Err(KummerError::Smallness {
                    msg: format!("starting point outside the ball of radius {ball:.6e}"),
                });
            }
            x0
        }
        None => {
            // -R Phi(0): the first engine step from zero.
            let mut x = (p.apply_r)(&p.phi0)?;
            x.scale_assign(-1.0);
            x
        }
    };
    let mut trace = Vec::new();
    let mut prev_step = f64::NAN;
    let mut observed = 0.0f64;
    for iter in 0..max_iter {
        // y = Phi(0) + N(x); x_next = -R y.
        let mut y = (p.nonlinearity)(&x)?;
        y.axpy_assign(1.0, &p.phi0);
        let mut x_next = (p.apply_r)(&y)?;
        x_next.scale_assign(-1.0);
        let mut diff = x_next.clone();
        diff.axpy_assign(-1.0, &x);
        let step = (p.norm_x)(&diff);
        let x_norm = (p.norm_x)(&x_next);
        let contraction = if prev_step.is_finite() && prev_step > 0.0 { step / prev_step } else { f64::NAN };
        if contraction.is_finite() {
            observed = observed.max(contraction);
        }
        trace.push(TraceStep { iter, step_norm: step, x_norm, contraction });
        if x_norm > ball * (1.0 + 1e-9) {
            return Err(KummerError::NonConvergence {
                what: "banach iteration",
                msg: format!("iterate exited the ball: ||x|| = {x_norm:.6e} > r = {ball:.6e} at iter {iter}"),
            });
        }
        x = x_next;
        if step <= tol {
            return Ok(BanachSolution { x, trace, smallness, observed_contraction: observed });
        }
        prev_step = step;
    }
    Err(KummerError::NonConvergence {
        what: "banach iteration",
        msg: format!(
            "max_iter = {max_iter} reached, last step {:.6e} (trace length {})",
            trace.last().map(|t| t.step_norm).unwrap_or(f64::NAN),
            trace.len()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::KummerError;

    fn toy_problem<'a>(c: f64) -> BanachProblem<'a, f64, f64> {
        // Phi(x) = -c + x + x^2: R = id, L = 1, N(x) = x^2 with constant 1.
        BanachProblem {
            phi0: -c,
            apply_r: Box::new(|y: &f64| Ok(*y)),
            nonlinearity: Box::new(|x: &f64| Ok(x * x)),
            l_bound: 1.0,
            n_bound: 1.0,
            r0: 0.45,
            norm_x: Box::new(|x: &f64| x.abs()),
            norm_y: Box::new(|y: &f64| y.abs()),
        }
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        // N = 0: x = -R Phi(0) immediately.
        let p = BanachProblem {
            phi0: -0.3f64,
            apply_r: Box::new(|y: &f64| Ok(2.0 * y)),
            nonlinearity: Box::new(|_: &f64| Ok(0.0)),
            l_bound: 2.0,
            n_bound: 1e-12,
            r0: 10.0,
            norm_x: Box::new(|x: &f64| x.abs()),
            norm_y: Box::new(|y: &f64| y.abs()),
        };
        let sol = banach_iterate(&p, None, 1e-14, 10).unwrap();
        assert_eq!(sol.x, 0.6);
        assert_eq!(sol.trace.len(), 1);
    }

    #[test]
    fn quadratic_toy_reaches_the_root() {
        // x* = (-1 + sqrt(1.4))/2, the root of x^2 + x - 0.1 selected by the
        // contraction from 0. Quadratic-formula oracle, frozen.
        let oracle = (-1.0 + 1.4f64.sqrt()) / 2.0;
        let sol = banach_iterate(&toy_problem(0.1), None, 1e-15, 200).unwrap();
        assert!((sol.x - oracle).abs() < 1e-12, "x = {}, oracle = {oracle}", sol.x);
        assert!((sol.x - 0.091_607_978_309_961_62).abs() < 1e-12);
        // Observed contraction stays below the a-priori bound 4 N L^2 ||Phi(0)||.
        assert!(sol.observed_contraction < sol.smallness.contraction_bound + 1e-9);
        assert!(sol.smallness.contraction_bound < 1.0);
    }

    #[test]
    fn smallness_violation_is_refused() {
        // c = 1: 2 L ||Phi(0)|| = 2 > 1/(2NL) = 1/2.
        match banach_iterate(&toy_problem(1.0), None, 1e-14, 100) {
            Err(KummerError::Smallness { msg }) => {
                assert!(msg.contains("2 L ||Phi(0)||"), "{msg}");
            }
            other => panic!("expected smallness refusal, got {:?}", other.map(|s| s.x)),
        }
    }

    #[test]
    fn divergent_iteration_reports_ball_exit() {
        // A mis-stated nonlinearity constant lets the smallness test pass
        // while the true map expands: the engine reports the ball exit
        // instead of looping.
        let p = BanachProblem::<f64, f64> {
            phi0: -0.2,
            apply_r: Box::new(|y: &f64| Ok(*y)),
            nonlinearity: Box::new(|x: &f64| Ok(-40.0 * x * x)),
            l_bound: 1.0,
            n_bound: 0.1,
            r0: 10.0,
            norm_x: Box::new(|x: &f64| x.abs()),
            norm_y: Box::new(|y: &f64| y.abs()),
        };
        match banach_iterate(&p, None, 1e-14, 100) {
            Err(KummerError::NonConvergence { msg, .. }) => assert!(msg.contains("exited the ball"), "{msg}"),
            other => panic!("expected ball exit, got {:?}", other.map(|s| s.x)),
        }
    }

    #[test]
    fn uniqueness_from_different_starts() {
        let p = toy_problem(0.1);
        let ball = smallness_report(&p).r;
        let a = banach_iterate(&toy_problem(0.1), Some(0.9 * ball), 1e-15, 300).unwrap();
        let b = banach_iterate(&toy_problem(0.1), Some(-0.9 * ball), 1e-15, 300).unwrap();
        assert!((a.x - b.x).abs() < 2e-15);
    }
}
