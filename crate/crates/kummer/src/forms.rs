//! Constant linear algebra of 2-forms on R^4 = C^2.
//!
//! The coefficient basis order for 2-forms is a global constant of the
//! library:
//!
//! ```text
//! index:  0          1          2          3          4          5
//! form:   dx1^dx2    dx1^dx3    dx1^dx4    dx2^dx3    dx2^dx4    dx3^dx4
//! ```
//!
//! Orientation is dx1^dx2^dx3^dx4, and the complex structure is the standard
//! one of z1 = x1 + i x2, z2 = x3 + i x4. Wedge and Hodge-star tables below
//! are consistent with that orientation.

use nalgebra::{Matrix2, Matrix4, Matrix6, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A 2-form at a point, stored in the fixed basis order above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoForm {
    pub coeffs: [f64; 6],
}

/// Index pairs (a, b) with a < b for the 6 basis 2-forms.
pub const BASIS_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl TwoForm {
    pub const ZERO: TwoForm = TwoForm { coeffs: [0.0; 6] };

    pub fn new(coeffs: [f64; 6]) -> Self {
        TwoForm { coeffs }
    }

    /// The flat Kahler form omega_0 = dx1^dx2 + dx3^dx4.
    pub fn flat_kahler() -> Self {
        TwoForm::new([1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    }

    /// Re(dz1^dz2) = dx1^dx3 - dx2^dx4.
    pub fn re_omega() -> Self {
        TwoForm::new([0.0, 1.0, 0.0, 0.0, -1.0, 0.0])
    }

    /// Im(dz1^dz2) = dx1^dx4 + dx2^dx3.
    pub fn im_omega() -> Self {
        TwoForm::new([0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
    }

    /// Wedge of two 2-forms divided by dx1^dx2^dx3^dx4.
    pub fn wedge(&self, other: &TwoForm) -> f64 {
        let a = &self.coeffs;
        let b = &other.coeffs;
        a[0] * b[5] + a[5] * b[0] - (a[1] * b[4] + a[4] * b[1]) + (a[2] * b[3] + a[3] * b[2])
    }

    /// Euclidean Hodge star (the star of the identity metric with the fixed
    /// orientation): *dx12 = dx34, *dx13 = -dx24, *dx14 = dx23.
    pub fn euclidean_star(&self) -> TwoForm {
        let c = &self.coeffs;
        TwoForm::new([c[5], -c[4], c[3], c[2], -c[1], c[0]])
    }

    /// The antisymmetric 4x4 coefficient matrix omega_{ab}.
    pub fn as_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (k, &(a, b)) in BASIS_PAIRS.iter().enumerate() {
            m[(a, b)] = self.coeffs[k];
            m[(b, a)] = -self.coeffs[k];
        }
        m
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> TwoForm {
        let mut c = [0.0; 6];
        for (k, &(a, b)) in BASIS_PAIRS.iter().enumerate() {
            c[k] = m[(a, b)];
        }
        TwoForm::new(c)
    }

    /// Interior product with a vector: (i_X w)_b = X^a w_{ab}.
    pub fn contract(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.as_matrix().transpose() * x
    }

    pub fn scale(&self, s: f64) -> TwoForm {
        let mut c = self.coeffs;
        for v in &mut c {
            *v *= s;
        }
        TwoForm::new(c)
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        let mut c = self.coeffs;
        for (v, o) in c.iter_mut().zip(other.coeffs.iter()) {
            *v += o;
        }
        TwoForm::new(c)
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The standard integrable complex structure J0 as a 4x4 matrix (column b
/// holds J applied to the b-th coordinate vector): J d1 = d2, J d3 = d4.
pub fn complex_structure_j0() -> Matrix4<f64> {
    Matrix4::new(
        0.0, -1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0,
    )
}

/// Metric of a real (1,1)-form with respect to J0: g(X, Y) = w(X, J0 Y).
/// For genuinely (1,1) input the result is symmetric.
pub fn metric_from_kahler_form(omega: &TwoForm) -> Matrix4<f64> {
    omega.as_matrix() * complex_structure_j0()
}

/// Real 2-form of a Hermitian 2x2 matrix H: w = i H_{jk} dz^j ^ dz~^k.
///
/// With H11, H22 real and H12 = a + ib the coefficient vector is
/// (2 H11, -2b, 2a, -2a, -2b, 2 H22); this is exactly the set of real
/// (1,1)-forms for J0.
pub fn two_form_from_hermitian(h: &Matrix2<Complex64>) -> TwoForm {
    let h11 = h[(0, 0)].re;
    let h22 = h[(1, 1)].re;
    let a = h[(0, 1)].re;
    let b = h[(0, 1)].im;
    TwoForm::new([2.0 * h11, -2.0 * b, 2.0 * a, -2.0 * a, -2.0 * b, 2.0 * h22])
}

/// The 6x6 wedge pairing W_{ij} = (e_i ^ e_j) / dx1234. Symmetric of
/// signature (3,3); W is its own inverse.
pub fn wedge_pairing() -> Matrix6<f64> {
    let mut w = Matrix6::zeros();
    let basis: Vec<TwoForm> = (0..6)
        .map(|i| {
            let mut c = [0.0; 6];
            c[i] = 1.0;
            TwoForm::new(c)
        })
        .collect();
    for i in 0..6 {
        for j in 0..6 {
            w[(i, j)] = basis[i].wedge(&basis[j]);
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_forms_have_spec_coefficients() {
        assert_eq!(TwoForm::flat_kahler().coeffs, [1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(TwoForm::re_omega().coeffs, [0.0, 1.0, 0.0, 0.0, -1.0, 0.0]);
        assert_eq!(TwoForm::im_omega().coeffs, [0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn wedge_table_of_flat_triple_is_exact() {
        let w0 = TwoForm::flat_kahler();
        let re = TwoForm::re_omega();
        let im = TwoForm::im_omega();
        // All squares equal 2 dx1234, all mixed wedges vanish. Exact.
        assert_eq!(w0.wedge(&w0), 2.0);
        assert_eq!(re.wedge(&re), 2.0);
        assert_eq!(im.wedge(&im), 2.0);
        assert_eq!(w0.wedge(&re), 0.0);
        assert_eq!(w0.wedge(&im), 0.0);
        assert_eq!(re.wedge(&im), 0.0);
    }

    #[test]
    fn euclidean_star_squares_to_identity_and_fixes_flat_triple() {
        for i in 0..6 {
            let mut c = [0.0; 6];
            c[i] = 1.0;
            let f = TwoForm::new(c);
            assert_eq!(f.euclidean_star().euclidean_star().coeffs, f.coeffs);
        }
        for f in [TwoForm::flat_kahler(), TwoForm::re_omega(), TwoForm::im_omega()] {
            assert_eq!(f.euclidean_star().coeffs, f.coeffs);
        }
    }

    #[test]
    fn flat_kahler_metric_is_identity() {
        let g = metric_from_kahler_form(&TwoForm::flat_kahler());
        assert_relative_eq!(g, Matrix4::identity(), epsilon = 0.0);
    }

    #[test]
    fn wedge_pairing_is_an_involution() {
        let w = wedge_pairing();
        assert_relative_eq!(w * w, Matrix6::identity(), epsilon = 0.0);
    }

    #[test]
    fn hermitian_half_identity_gives_flat_form() {
        let h = Matrix2::from_diagonal_element(Complex64::new(0.5, 0.0));
        assert_eq!(two_form_from_hermitian(&h).coeffs, TwoForm::flat_kahler().coeffs);
    }
}
