//! Pointwise algebra of definite triples: intersection matrix Q, associated
//! volume and unit-determinant normalization, the induced metric, SU(2)
//! checks, conversions between the Kahler data and the triple picture, and
//! SO(3) rotations of triples (column convention).

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{KummerError, Result};
use crate::forms::{TwoForm, BASIS_PAIRS};
use crate::metric::MetricAtPoint;

/// Three 2-forms at a point, as a column triple, together with the reference
/// volume coefficient mu_0 (relative to dx1^dx2^dx3^dx4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleOfTwoForms {
    pub components: [TwoForm; 3],
    pub reference_volume: f64,
}

impl TripleOfTwoForms {
    pub fn new(components: [TwoForm; 3]) -> Self {
        TripleOfTwoForms { components, reference_volume: 1.0 }
    }

    pub fn with_reference_volume(components: [TwoForm; 3], mu0: f64) -> Self {
        TripleOfTwoForms { components, reference_volume: mu0 }
    }

    pub fn flat() -> Self {
        TripleOfTwoForms::new([TwoForm::flat_kahler(), TwoForm::re_omega(), TwoForm::im_omega()])
    }

    pub fn scale(&self, lambda: f64) -> Self {
        TripleOfTwoForms {
            components: [
                self.components[0].scale(lambda),
                self.components[1].scale(lambda),
                self.components[2].scale(lambda),
            ],
            reference_volume: self.reference_volume,
        }
    }

    /// Linear combination e . triple (row vector times the column triple).
    pub fn combine(&self, e: &Vector3<f64>) -> TwoForm {
        let mut out = TwoForm::ZERO;
        for i in 0..3 {
            out = out.add(&self.components[i].scale(e[i]));
        }
        out
    }
}

/// Q_ij = (w_i ^ w_j) / (2 mu_0). Symmetric by commutativity of 2-form wedges.
pub fn intersection_matrix(t: &TripleOfTwoForms) -> Result<Matrix3<f64>> {
    if t.reference_volume == 0.0 {
        return Err(KummerError::Definiteness { msg: "reference volume mu_0 = 0".into() });
    }
    let mut q = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            q[(i, j)] = 0.5 * t.components[i].wedge(&t.components[j]) / t.reference_volume;
        }
    }
    Ok(q)
}

/// (mu_w, Q_w): associated volume coefficient (det Q)^{1/3} mu_0 and the
/// unit-determinant normalization (det Q)^{-1/3} Q. Both independent of mu_0.
pub fn associated_volume_and_q(t: &TripleOfTwoForms) -> Result<(f64, Matrix3<f64>)> {
    let q = intersection_matrix(t)?;
    if q.clone().cholesky().is_none() {
        return Err(KummerError::Definiteness { msg: "not a definite triple (Q not positive definite)".into() });
    }
    let det = q.determinant();
    let scale = det.cbrt();
    Ok((scale * t.reference_volume, q / scale))
}

/// Deviation of a triple from an SU(2)-structure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Su2Check {
    /// max |Q_w - id| measured spectrally (largest absolute eigenvalue of the
    /// symmetric difference); zero iff SU(2)-structure, and invariant under
    /// SO(3) rotations of the triple.
    pub deviation: f64,
    /// |mu_w - (1/6) tr(w ^ w^T)| / mu_w; meaningful for SU(2)-structures.
    pub volume_identity_defect: f64,
}

pub fn su2_check(t: &TripleOfTwoForms) -> Result<Su2Check> {
    let (mu, qw) = associated_volume_and_q(t)?;
    let deviation = (qw - Matrix3::identity())
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut trace = 0.0;
    for i in 0..3 {
        trace += t.components[i].wedge(&t.components[i]) * t.reference_volume;
    }
    let mu_from_trace = trace / (6.0 * t.reference_volume);
    let volume_identity_defect = (mu - mu_from_trace).abs() / mu.abs().max(1e-300);
    Ok(Su2Check { deviation, volume_identity_defect })
}

fn wedge_two_one_forms(a: &Vector4<f64>, b: &Vector4<f64>) -> TwoForm {
    let mut c = [0.0; 6];
    for (k, &(p, q)) in BASIS_PAIRS.iter().enumerate() {
        c[k] = a[p] * b[q] - a[q] * b[p];
    }
    TwoForm::new(c)
}

/// The unique metric with span(w) = Lambda^+ and dV = mu_w.
///
/// Realized by normalizing the triple to e_i ^ e_j = 2 delta_ij mu_w
/// (Cholesky of Q_w) and contracting:
/// g(X, Y) mu_w = (1/6) eps_ijk (i_X e_i) ^ (i_Y e_j) ^ e_k.
pub fn triple_to_metric(t: &TripleOfTwoForms) -> Result<MetricAtPoint> {
    let (mu, qw) = associated_volume_and_q(t)?;
    let chol = qw
        .cholesky()
        .ok_or_else(|| KummerError::Definiteness { msg: "not a definite triple".into() })?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| KummerError::Definiteness { msg: "degenerate normalization".into() })?;
    // e = L^{-1} w satisfies (1/2) e ^ e^T = id mu_w.
    let mut e = [TwoForm::ZERO; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i] = e[i].add(&t.components[j].scale(l_inv[(i, j)]));
        }
    }
    const EPS_IJK: [(usize, usize, usize, f64); 6] = [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (2, 1, 0, -1.0),
        (1, 0, 2, -1.0),
    ];
    let mut g = Matrix4::zeros();
    let basis = [
        Vector4::new(1.0, 0.0, 0.0, 0.0),
        Vector4::new(0.0, 1.0, 0.0, 0.0),
        Vector4::new(0.0, 0.0, 1.0, 0.0),
        Vector4::new(0.0, 0.0, 0.0, 1.0),
    ];
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for &(i, j, k, sign) in EPS_IJK.iter() {
                let alpha = e[i].contract(&basis[a]);
                let beta = e[j].contract(&basis[b]);
                s += sign * wedge_two_one_forms(&alpha, &beta).wedge(&e[k]);
            }
            g[(a, b)] = s / 6.0;
        }
    }
    // The contraction is homogeneous of degree 3 in e while the metric scales
    // with the square root of the volume scale: divide by mu_w.
    let g = g / mu;
    let g = MetricAtPoint::new((g + g.transpose()) * 0.5);
    g.require_positive_definite("triple_to_metric")?;
    // Contract checks: each component self-dual for g, volume form = mu_w.
    let sqrt_det = g.sqrt_det();
    if (sqrt_det - mu).abs() > 1e-8 * mu.abs().max(1.0) {
        return Err(KummerError::Definiteness {
            msg: format!("volume mismatch in triple_to_metric: sqrt(det g) = {sqrt_det}, mu_w = {mu}"),
        });
    }
    for i in 0..3 {
        let star = g.star(&t.components[i])?;
        if star.sub(&t.components[i]).max_abs() > 1e-8 * t.components[i].max_abs().max(1.0) {
            return Err(KummerError::Definiteness {
                msg: format!("component {i} not self-dual for the reconstructed metric"),
            });
        }
    }
    Ok(g)
}

/// Ricci-flat Kahler data -> hyper-Kahler triple (omega, Re Omega, Im Omega).
pub fn cy_to_hk(omega: TwoForm, omega_re: TwoForm, omega_im: TwoForm) -> TripleOfTwoForms {
    TripleOfTwoForms::new([omega, omega_re, omega_im])
}

/// SO(3) matrix mapping e_1 to e along the geodesic arc (Rodrigues); at
/// e = -e_1 the rotation by pi about e_2 is chosen.
pub fn rotation_to_direction(e: &Vector3<f64>) -> Result<Matrix3<f64>> {
    if (e.norm() - 1.0).abs() > 1e-10 {
        return Err(KummerError::config(format!("direction must be unit length, |e| = {}", e.norm())));
    }
    let e1 = Vector3::new(1.0, 0.0, 0.0);
    let c = e1.dot(e);
    if (c - 1.0).abs() < 1e-14 {
        return Ok(Matrix3::identity());
    }
    if (c + 1.0).abs() < 1e-14 {
        // Rotation by pi about e_2.
        return Ok(Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0));
    }
    let k = e1.cross(e);
    let kx = Matrix3::new(0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0);
    Ok(Matrix3::identity() + kx + kx * kx / (1.0 + c))
}

/// Matrix action A^e . t of the rotation taking e_1 to e (column convention).
pub fn rotate_triple(e: &Vector3<f64>, t: &TripleOfTwoForms) -> Result<TripleOfTwoForms> {
    let a = rotation_to_direction(e)?;
    Ok(apply_matrix(&a, t))
}

/// Apply an arbitrary 3x3 matrix to a column triple.
pub fn apply_matrix(a: &Matrix3<f64>, t: &TripleOfTwoForms) -> TripleOfTwoForms {
    let mut out = [TwoForm::ZERO; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] = out[i].add(&t.components[j].scale(a[(i, j)]));
        }
    }
    TripleOfTwoForms { components: out, reference_volume: t.reference_volume }
}

/// SU(2)-structure -> Kahler pair in the direction e: (omega_e, Omega_e) with
/// omega_e = e . w and Omega_e = (f2 . w) + i (f3 . w) for the rotated frame
/// (f1, f2, f3) = A^e (e_1, e_2, e_3).
pub fn hk_to_cy(t: &TripleOfTwoForms, e: &Vector3<f64>) -> Result<(TwoForm, (TwoForm, TwoForm))> {
    let check = su2_check(t)?;
    if check.deviation > 1e-6 {
        return Err(KummerError::Definiteness {
            msg: format!("hk_to_cy needs an SU(2)-structure (deviation {:.3e})", check.deviation),
        });
    }
    let a = rotation_to_direction(e)?;
    let f1 = a * Vector3::new(1.0, 0.0, 0.0);
    let f2 = a * Vector3::new(0.0, 1.0, 0.0);
    let f3 = a * Vector3::new(0.0, 0.0, 1.0);
    Ok((t.combine(&f1), (t.combine(&f2), t.combine(&f3))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_triple_q_is_identity() {
        let t = TripleOfTwoForms::flat();
        let q = intersection_matrix(&t).unwrap();
        assert_relative_eq!(q, Matrix3::identity(), epsilon = 0.0);
        let (mu, qw) = associated_volume_and_q(&t).unwrap();
        assert_eq!(mu, 1.0);
        assert_relative_eq!(qw, Matrix3::identity(), epsilon = 0.0);
    }

    #[test]
    fn lambda_scaled_triple() {
        let l = 1.7;
        let t = TripleOfTwoForms::flat().scale(l);
        let q = intersection_matrix(&t).unwrap();
        assert_relative_eq!(q, Matrix3::identity() * l * l, epsilon = 1e-14);
        let (mu, qw) = associated_volume_and_q(&t).unwrap();
        assert_relative_eq!(mu, l * l, epsilon = 1e-14);
        assert_relative_eq!(qw, Matrix3::identity(), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_example_from_wedge_table() {
        // (w0, w0, Re Omega): Q11 = Q22 = Q12 = 1, Q33 = 1, Q13 = Q23 = 0.
        let t = TripleOfTwoForms::new([TwoForm::flat_kahler(), TwoForm::flat_kahler(), TwoForm::re_omega()]);
        let q = intersection_matrix(&t).unwrap();
        let expected = Matrix3::new(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(q, expected, epsilon = 0.0);
        // Not definite: Q is singular.
        assert!(associated_volume_and_q(&t).is_err());
    }

    fn random_definite_triple(seed: u64) -> TripleOfTwoForms {
        // Deterministic pseudo-random small perturbation of the flat triple.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let base = TripleOfTwoForms::flat();
        let mut comps = base.components;
        for c in comps.iter_mut() {
            let mut coeffs = c.coeffs;
            for v in coeffs.iter_mut() {
                *v += 0.25 * next();
            }
            *c = TwoForm::new(coeffs);
        }
        TripleOfTwoForms::new(comps)
    }

    #[test]
    fn unit_determinant_normalization_oracle() {
        for seed in 0..50u64 {
            let t = random_definite_triple(seed);
            if let Ok((_, qw)) = associated_volume_and_q(&t) {
                // Determinant oracle.
                assert_relative_eq!(qw.determinant(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn outputs_independent_of_reference_volume() {
        let mut t = random_definite_triple(7);
        let (mu1, qw1) = associated_volume_and_q(&t).unwrap();
        t.reference_volume = 10.0;
        let (mu2, qw2) = associated_volume_and_q(&t).unwrap();
        assert_relative_eq!(mu1, mu2, epsilon = 1e-12);
        assert_relative_eq!(qw1, qw2, epsilon = 1e-12);
        let g1 = triple_to_metric(&random_definite_triple(7)).unwrap();
        let g2 = triple_to_metric(&t).unwrap();
        assert!((g1.g - g2.g).abs().max() < 1e-10);
    }

    #[test]
    fn flat_triple_metric_is_identity() {
        let g = triple_to_metric(&TripleOfTwoForms::flat()).unwrap();
        assert!((g.g - Matrix4::identity()).abs().max() < 1e-14);
    }

    #[test]
    fn scaled_triple_gives_scaled_metric() {
        // Conformal invariance of Lambda^+ with dV scaling lambda^2 forces
        // g_{lambda w} = lambda g_w. Direct recomputation oracle.
        let t = random_definite_triple(3);
        let l = 2.3;
        let g = triple_to_metric(&t).unwrap();
        let gl = triple_to_metric(&t.scale(l)).unwrap();
        assert!((gl.g - g.g * l).abs().max() < 1e-9, "defect {}", (gl.g - g.g * l).abs().max());
    }

    #[test]
    fn reconstructed_star_fixes_the_span() {
        // The design contract: span(e) is the +1 eigenspace of the star of the
        // output metric, and the wedge-complement is the -1 eigenspace.
        let t = random_definite_triple(11);
        let g = triple_to_metric(&t).unwrap();
        for i in 0..3 {
            let star = g.star(&t.components[i]).unwrap();
            assert!(star.sub(&t.components[i]).max_abs() < 1e-9);
        }
        // A 2-form g-orthogonal to the whole span maps to minus itself:
        // project the probe with the 3x3 Gram system of the components.
        let probe = TwoForm::new([1.0, 0.4, -0.3, 0.2, 0.7, -0.9]);
        let gram6 = g.two_form_gram().unwrap();
        let vs: Vec<nalgebra::Vector6<f64>> =
            t.components.iter().map(|c| nalgebra::Vector6::from_column_slice(&c.coeffs)).collect();
        let ve = nalgebra::Vector6::from_column_slice(&probe.coeffs);
        let gm = Matrix3::from_fn(|i, j| (vs[i].transpose() * gram6 * vs[j])[0]);
        let b = Vector3::from_fn(|i, _| (vs[i].transpose() * gram6 * ve)[0]);
        let c = gm.lu().solve(&b).unwrap();
        let mut eta = probe;
        for i in 0..3 {
            eta = eta.sub(&t.components[i].scale(c[i]));
        }
        let star_eta = g.star(&eta).unwrap();
        assert!(star_eta.add(&eta).max_abs() < 1e-8, "ASD complement defect");
    }

    #[test]
    fn su2_checks() {
        let flat = TripleOfTwoForms::flat();
        let c = su2_check(&flat).unwrap();
        assert_eq!(c.deviation, 0.0);
        assert!(c.volume_identity_defect < 1e-14);
        // A constructed non-hyper-Kahler definite triple has positive deviation.
        let t = TripleOfTwoForms::new([
            TwoForm::flat_kahler().scale(1.3),
            TwoForm::re_omega(),
            TwoForm::im_omega(),
        ]);
        assert!(su2_check(&t).unwrap().deviation > 0.1);
    }

    #[test]
    fn rotations() {
        let t = TripleOfTwoForms::flat();
        // e = e_1: unchanged.
        let r = rotate_triple(&Vector3::new(1.0, 0.0, 0.0), &t).unwrap();
        assert_eq!(r.components, t.components);
        // e = e_2: Rodrigues oracle, rotation about e_3 by pi/2:
        // A = [[0,-1,0],[1,0,0],[0,0,1]].
        let a = rotation_to_direction(&Vector3::new(0.0, 1.0, 0.0)).unwrap();
        let oracle = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(a, oracle, epsilon = 1e-14);
        let r2 = rotate_triple(&Vector3::new(0.0, 1.0, 0.0), &t).unwrap();
        // First component becomes -Re Omega, second becomes omega_0.
        assert_eq!(r2.components[0].coeffs, TwoForm::re_omega().scale(-1.0).coeffs);
        assert_eq!(r2.components[1].coeffs, TwoForm::flat_kahler().coeffs);
        // Antipodal tie-break: rotation by pi about e_2.
        let am = rotation_to_direction(&Vector3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(am, Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0), epsilon = 0.0);
        // Non-unit e errors.
        assert!(rotate_triple(&Vector3::new(0.0, 2.0, 0.0), &t).is_err());
    }

    #[test]
    fn q_equivariance_under_rotations() {
        let t = random_definite_triple(5);
        let q = intersection_matrix(&t).unwrap();
        for k in 0..100 {
            let theta = 0.0613 * (k as f64 + 1.0);
            let phi = 1.7 * (k as f64 + 0.3);
            let e = Vector3::new(theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin());
            let a = rotation_to_direction(&e).unwrap();
            let rt = apply_matrix(&a, &t);
            let qr = intersection_matrix(&rt).unwrap();
            let expected = a * q * a.transpose();
            assert!((qr - expected).abs().max() < 1e-13, "defect {}", (qr - expected).abs().max());
            // su2_check deviation is invariant under rotations.
            let d0 = su2_check(&t).unwrap().deviation;
            let d1 = su2_check(&rt).unwrap().deviation;
            assert!((d0 - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn cy_hk_round_trip_and_volume_identity() {
        let flat = TripleOfTwoForms::flat();
        // Round trip with e_1 is the identity.
        let (w, (re, im)) = hk_to_cy(&flat, &Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(w.coeffs, TwoForm::flat_kahler().coeffs);
        assert_eq!(re.coeffs, TwoForm::re_omega().coeffs);
        assert_eq!(im.coeffs, TwoForm::im_omega().coeffs);
        let back = cy_to_hk(w, re, im);
        assert_eq!(back.components, flat.components);
        // e = e_2 on the flat triple: omega_e = Re Omega, and the rotated
        // complex pair satisfies omega_e^2 = (1/2) Omega_e ^ conj(Omega_e).
        let (we, (re2, im2)) = hk_to_cy(&flat, &Vector3::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(we.coeffs, TwoForm::re_omega().coeffs);
        let lhs = we.wedge(&we);
        // Omega ^ conj(Omega) = (re + i im) ^ (re - i im) = re^2 + im^2.
        let rhs = 0.5 * (re2.wedge(&re2) + im2.wedge(&im2));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-13);
        // Sphere-sampled: omega_e ^ omega_e = 2 mu_w for every unit e.
        for k in 0..25 {
            let theta = 0.41 * k as f64;
            let phi = 0.77 * k as f64 + 0.1;
            let e = Vector3::new(theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin());
            let we = flat.combine(&e);
            assert_relative_eq!(we.wedge(&we), 2.0, epsilon = 1e-13);
        }
        // Non-unit direction errors.
        assert!(hk_to_cy(&flat, &Vector3::new(0.5, 0.0, 0.0)).is_err());
    }
}
