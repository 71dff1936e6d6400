//! The pointwise matrix map behind the triple perturbation: solve
//! (Q A^T + A Q + A Q A^T)_0 = S for trace-free symmetric A, Newton branch
//! from A = 0, valid for Q near the identity.

use nalgebra::{Matrix3, SMatrix, SVector};

use crate::error::{KummerError, Result};

/// Trace-free part M - (1/3) tr(M) id.
pub fn trace_free(m: &Matrix3<f64>) -> Matrix3<f64> {
    m - Matrix3::identity() * (m.trace() / 3.0)
}

/// Basis of the 5-dimensional space of trace-free symmetric 3x3 matrices.
fn sym0_basis() -> [Matrix3<f64>; 5] {
    [
        Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0),
        Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0),
    ]
}

fn to_coords(m: &Matrix3<f64>) -> SVector<f64, 5> {
    // Coordinates in the (non-orthonormal) basis above: diagonal entries
    // m11 = c1, m22 = -c1 + c2, m33 = -c2; off-diagonals direct.
    SVector::<f64, 5>::new(m[(0, 0)], -m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)])
}

fn from_coords(c: &SVector<f64, 5>) -> Matrix3<f64> {
    let basis = sym0_basis();
    let mut m = Matrix3::zeros();
    for i in 0..5 {
        m += basis[i] * c[i];
    }
    m
}

fn frobenius(m: &Matrix3<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// G(A) = (Q A + A Q + A Q A)_0 - S for symmetric A.
fn residual(q: &Matrix3<f64>, a: &Matrix3<f64>, s: &Matrix3<f64>) -> Matrix3<f64> {
    trace_free(&(q * a.transpose() + a * q + a * q * a.transpose())) - s
}

/// Options for the Newton solve.
#[derive(Debug, Clone, Copy)]
pub struct MatrixFOptions {
    /// Admissibility threshold on |Q - id|_max.
    pub sigma: f64,
    /// Bound on |S|_F (the local-invertibility radius used here).
    pub s_radius: f64,
    /// Trust region on |A|_F.
    pub trust_radius: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MatrixFOptions {
    fn default() -> Self {
        MatrixFOptions { sigma: 0.1, s_radius: 0.35, trust_radius: 1.0, tol: 1e-14, max_iter: 60 }
    }
}

/// Solve (Q A^T + A Q + A Q A^T)_0 = S for A in Sym_0(3), the Newton branch
/// from A = 0. Q must be symmetric positive definite with |Q - id| < sigma
/// and S trace-free symmetric within the radius.
pub fn matrix_f_solve(q: &Matrix3<f64>, s: &Matrix3<f64>, opts: &MatrixFOptions) -> Result<Matrix3<f64>> {
    if (q - q.transpose()).abs().max() > 1e-12 {
        return Err(KummerError::domain("matrix_F_solve", "Q must be symmetric"));
    }
    if (q - Matrix3::identity()).abs().max() >= opts.sigma {
        return Err(KummerError::domain(
            "matrix_F_solve",
            format!("|Q - id| = {} exceeds the admissibility threshold {}", (q - Matrix3::identity()).abs().max(), opts.sigma),
        ));
    }
    if (s - s.transpose()).abs().max() > 1e-12 || s.trace().abs() > 1e-10 * (1.0 + frobenius(s)) {
        return Err(KummerError::domain("matrix_F_solve", "S must be trace-free symmetric"));
    }
    if frobenius(s) > opts.s_radius {
        return Err(KummerError::domain(
            "matrix_F_solve",
            format!("|S|_F = {} exceeds the local-invertibility radius {}", frobenius(s), opts.s_radius),
        ));
    }
    let basis = sym0_basis();
    let mut a = Matrix3::zeros();
    let mut res = residual(q, &a, s);
    let mut res_norm = frobenius(&res);
    for _ in 0..opts.max_iter {
        if res_norm <= opts.tol {
            return Ok(a);
        }
        // Linearization DG(A)[B] = (Q B + B Q + B Q A + A Q B)_0 on the
        // 5-dimensional coordinate space.
        let mut jac = SMatrix::<f64, 5, 5>::zeros();
        for (j, b) in basis.iter().enumerate() {
            let img = trace_free(&(q * b.transpose() + b * q + b * q * a.transpose() + a * q * b.transpose()));
            jac.set_column(j, &to_coords(&img));
        }
        let rhs = -to_coords(&res);
        let step_coords = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| KummerError::NonConvergence { what: "matrix_F newton", msg: "singular Jacobian".into() })?;
        let step = from_coords(&step_coords);
        // Step halving against the residual norm and the trust region.
        let mut lambda = 1.0;
        loop {
            let cand = a + step * lambda;
            if frobenius(&cand) > opts.trust_radius {
                lambda *= 0.5;
                if lambda < 1e-8 {
                    return Err(KummerError::NonConvergence {
                        what: "matrix_F newton",
                        msg: "left the trust region".into(),
                    });
                }
                continue;
            }
            let cand_res = residual(q, &cand, s);
            let cand_norm = frobenius(&cand_res);
            if cand_norm < res_norm || lambda < 1e-8 {
                a = cand;
                res = cand_res;
                res_norm = cand_norm;
                break;
            }
            lambda *= 0.5;
        }
        if res_norm > 1e8 {
            return Err(KummerError::NonConvergence { what: "matrix_F newton", msg: "residual blow-up".into() });
        }
    }
    if res_norm <= opts.tol {
        Ok(a)
    } else {
        Err(KummerError::NonConvergence {
            what: "matrix_F newton",
            msg: format!("residual {res_norm:.3e} after {} iterations", opts.max_iter),
        })
    }
}
