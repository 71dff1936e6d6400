//! Flat Kahler and hyper-Kahler reference data on R^4 = C^2, the torus
//! T^4 = R^4/Lambda, and the orbifold T^4/Z_2 with its 16 fixed points.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{KummerError, Result};
use crate::forms::TwoForm;
use crate::metric::MetricAtPoint;

/// A flat metric on T^4 = R^4/Lambda: gram matrix in lattice coordinates plus
/// the lattice basis (columns generate Lambda).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatMetricSpec {
    pub gram: [[f64; 4]; 4],
    pub lattice: [[f64; 4]; 4],
}

impl FlatMetricSpec {
    /// The default lattice Z^4 with the Euclidean gram matrix.
    pub fn standard() -> Self {
        let id = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        FlatMetricSpec { gram: id, lattice: id }
    }

    pub fn gram_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.gram[i][j])
    }

    pub fn lattice_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.lattice[i][j])
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gram_matrix();
        if (g - g.transpose()).abs().max() > 1e-12 {
            return Err(KummerError::config("gram matrix must be symmetric"));
        }
        if g.cholesky().is_none() {
            return Err(KummerError::Definiteness { msg: "gram matrix must be positive definite".into() });
        }
        if self.lattice_matrix().try_inverse().is_none() {
            return Err(KummerError::config("lattice basis must be invertible"));
        }
        Ok(())
    }

    /// Length of a vector given in lattice coordinates.
    pub fn norm(&self, v: &Vector4<f64>) -> f64 {
        (v.transpose() * self.gram_matrix() * v)[0].max(0.0).sqrt()
    }
}

/// A point of the orbifold T^4/Z_2, reduced to the fundamental domain
/// [0,1)^4 in lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbifoldPoint {
    pub rep: [f64; 4],
    pub is_singular: bool,
    /// Index in 1..=16 of the singular class, when singular.
    pub singular_index: Option<u8>,
}

/// Reduce a coordinate to [0,1) with ties at the boundary resolved toward 0.
fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// The 16 half-lattice representatives, ordered by binary expansion of the
/// coordinates (index 1 = origin, index 16 = (1/2,1/2,1/2,1/2)).
pub fn singular_representatives() -> [[f64; 4]; 16] {
    let mut out = [[0.0; 4]; 16];
    for (k, rep) in out.iter_mut().enumerate() {
        for a in 0..4 {
            rep[a] = if (k >> a) & 1 == 1 { 0.5 } else { 0.0 };
        }
    }
    out
}

impl OrbifoldPoint {
    /// Classify a point of R^4 (lattice coordinates): reduce to [0,1)^4 and
    /// detect the 16 singular classes (all coordinates = 0 mod 1/2).
    pub fn classify(x: [f64; 4], tol: f64) -> OrbifoldPoint {
        let rep = [reduce_unit(x[0]), reduce_unit(x[1]), reduce_unit(x[2]), reduce_unit(x[3])];
        let mut idx = 0usize;
        let mut singular = true;
        for a in 0..4 {
            let half = (rep[a] * 2.0).round() / 2.0;
            if (rep[a] - half).abs() > tol {
                singular = false;
                break;
            }
            if (half - 0.5).abs() < 0.25 {
                idx |= 1 << a;
            }
        }
        OrbifoldPoint {
            rep,
            is_singular: singular,
            singular_index: if singular { Some((idx + 1) as u8) } else { None },
        }
    }
}

/// Flat Kahler data at a point: g0 = id, omega_0, and (Re Omega, Im Omega)
/// for Omega = dz1 ^ dz2. All constant in the point.
pub fn flat_kahler_data(_point: [f64; 4]) -> (MetricAtPoint, TwoForm, (TwoForm, TwoForm)) {
    (MetricAtPoint::identity(), TwoForm::flat_kahler(), (TwoForm::re_omega(), TwoForm::im_omega()))
}

/// The flat hyper-Kahler triple (omega_0, Re Omega, Im Omega).
pub fn flat_triple() -> [TwoForm; 3] {
    [TwoForm::flat_kahler(), TwoForm::re_omega(), TwoForm::im_omega()]
}

/// Gram-metric distance from x (lattice coordinates) to the singular set:
/// min over the 16 half-lattice classes and lattice translates.
pub fn dist_to_singular_set(x: &OrbifoldPoint, spec: &FlatMetricSpec) -> Result<f64> {
    spec.validate()?;
    let reps = singular_representatives();
    let p = Vector4::new(x.rep[0], x.rep[1], x.rep[2], x.rep[3]);
    let mut best = f64::INFINITY;
    // rep coordinates lie in [0,1)^4 and singular representatives in [0,1/2]^4.
    // The translate range needed grows with the anisotropy of the gram matrix;
    // sqrt(cond) bounds how far a gram-nearest translate can sit in coordinates.
    let eigs = x_gram_eigen_bounds(spec);
    let range = ((eigs.1 / eigs.0).sqrt().ceil() as i32).max(1);
    for rep in reps.iter() {
        let c = Vector4::new(rep[0], rep[1], rep[2], rep[3]);
        for n0 in -range..=range {
            for n1 in -range..=range {
                for n2 in -range..=range {
                    for n3 in -range..=range {
                        let n = Vector4::new(n0 as f64, n1 as f64, n2 as f64, n3 as f64);
                        let d = spec.norm(&(p - c - n));
                        if d < best {
                            best = d;
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

fn x_gram_eigen_bounds(spec: &FlatMetricSpec) -> (f64, f64) {
    let eig = spec.gram_matrix().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in eig.eigenvalues.iter() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    (lo.max(1e-300), hi)
}

/// Dimension of the moduli space of flat metrics on T^4: n(n+1)/2 = 10.
pub fn flat_moduli_dim() -> usize {
    10
}

/// Parity kind for Z_2 checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// One sample of a coefficient field at a pair of points (x, -x).
///
/// `valence` is the number of (covariant plus contravariant) coordinate
/// indices of the sampled tensor: the pullback of each coordinate (co)frame
/// element under x -> -x contributes one sign, so a geometric parity `kind`
/// requires coeffs(-x) = (-1)^valence * (+-1) * coeffs(x).
#[derive(Debug, Clone)]
pub struct ParitySample {
    pub x: [f64; 4],
    pub value_at_x: Vec<f64>,
    pub value_at_neg_x: Vec<f64>,
}

/// Check whether sampled coefficients define an even or odd field. Returns the
/// maximal violation.
pub fn z2_parity_check(samples: &[ParitySample], valence: usize, kind: Parity) -> Result<(bool, f64)> {
    if samples.is_empty() {
        return Err(KummerError::config("parity check needs at least one sample pair"));
    }
    let sign = match kind {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    } * if valence % 2 == 0 { 1.0 } else { -1.0 };
    let mut violation = 0.0f64;
    for s in samples {
        if s.value_at_x.len() != s.value_at_neg_x.len() {
            return Err(KummerError::config("unpaired samples: value lengths differ"));
        }
        for (v, w) in s.value_at_x.iter().zip(s.value_at_neg_x.iter()) {
            violation = violation.max((w - sign * v).abs());
        }
    }
    Ok((violation <= 1e-12, violation))
}

/// Build parity sample pairs from a raw list of (point, value) samples;
/// errors when some point lacks its mirror.
pub fn pair_samples(points: &[[f64; 4]], values: &[Vec<f64>], tol: f64) -> Result<Vec<ParitySample>> {
    if points.len() != values.len() {
        return Err(KummerError::config("points/values length mismatch"));
    }
    let mut pairs = Vec::new();
    let mut used = vec![false; points.len()];
    for i in 0..points.len() {
        if used[i] {
            continue;
        }
        let neg = [-points[i][0], -points[i][1], -points[i][2], -points[i][3]];
        let mut found = None;
        for j in 0..points.len() {
            if i != j && !used[j] {
                let d: f64 = (0..4).map(|a| (points[j][a] - neg[a]).powi(2)).sum();
                if d.sqrt() <= tol {
                    found = Some(j);
                    break;
                }
            }
        }
        let j = found.ok_or_else(|| KummerError::config(format!("unpaired sample at {:?}", points[i])))?;
        used[i] = true;
        used[j] = true;
        pairs.push(ParitySample {
            x: points[i],
            value_at_x: values[i].clone(),
            value_at_neg_x: values[j].clone(),
        });
    }
    Ok(pairs)
}
