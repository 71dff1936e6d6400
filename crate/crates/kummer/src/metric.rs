//! Pointwise metric data and the induced operations on 2-forms.

use nalgebra::{Matrix4, Matrix6, Vector6};

use crate::error::{KummerError, Result};
use crate::forms::{wedge_pairing, TwoForm, BASIS_PAIRS};

/// A Riemannian metric at a point: symmetric 4x4 coefficients in real chart
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAtPoint {
    pub g: Matrix4<f64>,
}

impl MetricAtPoint {
    pub fn new(g: Matrix4<f64>) -> Self {
        MetricAtPoint { g }
    }

    pub fn identity() -> Self {
        MetricAtPoint { g: Matrix4::identity() }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g.clone().cholesky().is_some()
    }

    pub fn require_positive_definite(&self, context: &str) -> Result<()> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(KummerError::Definiteness { msg: format!("metric not positive definite ({context})") })
        }
    }

    pub fn inverse(&self) -> Result<Matrix4<f64>> {
        self.g
            .try_inverse()
            .ok_or_else(|| KummerError::Definiteness { msg: "metric is singular".to_string() })
    }

    pub fn sqrt_det(&self) -> f64 {
        self.g.determinant().max(0.0).sqrt()
    }

    /// Gram matrix of the induced inner product on 2-forms in the fixed basis:
    /// <e_ab, e_cd>_g = g^{ac} g^{bd} - g^{ad} g^{bc}.
    pub fn two_form_gram(&self) -> Result<Matrix6<f64>> {
        let gi = self.inverse()?;
        let mut m = Matrix6::zeros();
        for (i, &(a, b)) in BASIS_PAIRS.iter().enumerate() {
            for (j, &(c, d)) in BASIS_PAIRS.iter().enumerate() {
                m[(i, j)] = gi[(a, c)] * gi[(b, d)] - gi[(a, d)] * gi[(b, c)];
            }
        }
        Ok(m)
    }

    /// Hodge star on 2-forms as a 6x6 matrix: alpha ^ (*beta) = <alpha, beta>_g dV_g
    /// gives *beta = sqrt(det g) * W^{-1} G2 beta with W the wedge pairing (W^{-1} = W).
    pub fn star_matrix(&self) -> Result<Matrix6<f64>> {
        Ok(wedge_pairing() * self.two_form_gram()? * self.sqrt_det())
    }

    pub fn star(&self, eta: &TwoForm) -> Result<TwoForm> {
        let s = self.star_matrix()?;
        let v = s * Vector6::from_column_slice(&eta.coeffs);
        Ok(TwoForm::new([v[0], v[1], v[2], v[3], v[4], v[5]]))
    }

    /// Pointwise norm of a 2-form: |eta|_g^2 = <eta, eta>_g.
    pub fn two_form_norm(&self, eta: &TwoForm) -> Result<f64> {
        let g2 = self.two_form_gram()?;
        let v = Vector6::from_column_slice(&eta.coeffs);
        Ok((v.transpose() * g2 * v)[0].max(0.0).sqrt())
    }

    pub fn max_abs_diff(&self, other: &MetricAtPoint) -> f64 {
        (self.g - other.g).abs().max()
    }
}

/// Self-dual / anti-self-dual split of a 2-form with respect to g:
/// eta_pm = (eta +- *eta)/2.
pub fn sd_asd_split(g: &MetricAtPoint, eta: &TwoForm) -> Result<(TwoForm, TwoForm)> {
    let star = g.star(eta)?;
    let plus = eta.add(&star).scale(0.5);
    let minus = eta.sub(&star).scale(0.5);
    Ok((plus, minus))
}
