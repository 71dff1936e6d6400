//! Periodic grids on T^4 = [0,1)^4: scalar/1-form/2-form fields, the Z_2
//! projection, second-order central-difference exterior calculus, the
//! three-point Laplacian with its Fourier inverse, and the Dirac operator
//! D = d* + d^+ with its per-mode kernel rank.
//!
//! Grid fields are stored site-major: index = ((i0 n + i1) n + i2) n + i3,
//! with `comps` values per site. The flat metric is the identity of the
//! gram-orthonormalized chart; flat tori with a general gram matrix reduce to
//! it by the linear chart change used everywhere else in the crate.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{KummerError, Result};
use crate::forms::BASIS_PAIRS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub n: usize,
    pub comps: usize,
    pub data: Vec<f64>,
}

pub const MIN_GRID: usize = 8;

pub fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(KummerError::config(format!("grid too coarse: N = {n} < {MIN_GRID} per axis")));
    }
    Ok(())
}

impl GridField {
    pub fn zeros(n: usize, comps: usize) -> Self {
        GridField { n, comps, data: vec![0.0; n * n * n * n * comps] }
    }

    pub fn sites(&self) -> usize {
        self.n * self.n * self.n * self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn site(&self, i: [usize; 4]) -> usize {
        ((i[0] * self.n + i[1]) * self.n + i[2]) * self.n + i[3]
    }

    #[inline]
    pub fn at(&self, i: [usize; 4], c: usize) -> f64 {
        self.data[self.site(i) * self.comps + c]
    }

    #[inline]
    pub fn at_mut(&mut self, i: [usize; 4], c: usize) -> &mut f64 {
        let s = self.site(i) * self.comps;
        &mut self.data[s + c]
    }

    pub fn coords(&self, i: [usize; 4]) -> [f64; 4] {
        let h = self.h();
        [i[0] as f64 * h, i[1] as f64 * h, i[2] as f64 * h, i[3] as f64 * h]
    }

    pub fn index_iter(&self) -> impl Iterator<Item = [usize; 4]> {
        let n = self.n;
        (0..n).flat_map(move |i0| {
            (0..n).flat_map(move |i1| (0..n).flat_map(move |i2| (0..n).map(move |i3| [i0, i1, i2, i3])))
        })
    }

    pub fn fill_with(&mut self, f: impl Fn([f64; 4]) -> Vec<f64>) {
        let idx: Vec<[usize; 4]> = self.index_iter().collect();
        for i in idx {
            let v = f(self.coords(i));
            for c in 0..self.comps {
                *self.at_mut(i, c) = v[c];
            }
        }
    }

    pub fn linf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Grid L^2 norm with measure h^4 per site.
    pub fn l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &GridField) -> f64 {
        let h4 = self.h().powi(4);
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum::<f64>() * h4
    }

    pub fn axpy(&mut self, alpha: f64, x: &GridField) {
        for (d, s) in self.data.iter_mut().zip(x.data.iter()) {
            *d += alpha * s;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for d in self.data.iter_mut() {
            *d *= alpha;
        }
    }

    pub fn mean(&self, c: usize) -> f64 {
        let mut s = 0.0;
        for site in 0..self.sites() {
            s += self.data[site * self.comps + c];
        }
        s / self.sites() as f64
    }

    /// Mirror site of -x.
    fn neg_site(&self, i: [usize; 4]) -> [usize; 4] {
        let n = self.n;
        [(n - i[0]) % n, (n - i[1]) % n, (n - i[2]) % n, (n - i[3]) % n]
    }

    /// Z_2 projection. `sign = +1` keeps even coefficient functions (scalars,
    /// 2-form coefficients of geometrically even forms); `sign = -1` keeps odd
    /// coefficients (1-form coefficients of geometrically even 1-forms, since
    /// each coordinate coframe element is odd).
    pub fn z2_project(&self, sign: f64) -> GridField {
        let mut out = GridField::zeros(self.n, self.comps);
        let idx: Vec<[usize; 4]> = self.index_iter().collect();
        for i in idx {
            let j = self.neg_site(i);
            for c in 0..self.comps {
                *out.at_mut(i, c) = 0.5 * (self.at(i, c) + sign * self.at(j, c));
            }
        }
        out
    }
}

#[inline]
fn wrap(i: usize, d: i64, n: usize) -> usize {
    (((i as i64 + d) % n as i64 + n as i64) % n as i64) as usize
}

/// Central difference along an axis of one component.
pub fn diff_central(f: &GridField, c: usize, axis: usize) -> GridField {
    let n = f.n;
    let inv2h = 0.5 * n as f64;
    let mut out = GridField::zeros(n, 1);
    let idx: Vec<[usize; 4]> = f.index_iter().collect();
    for i in idx {
        let mut ip = i;
        ip[axis] = wrap(i[axis], 1, n);
        let mut im = i;
        im[axis] = wrap(i[axis], -1, n);
        *out.at_mut(i, 0) = (f.at(ip, c) - f.at(im, c)) * inv2h;
    }
    out
}

/// Exterior derivative of a scalar: (df)_a = central difference along a.
pub fn d_scalar(f: &GridField) -> GridField {
    assert_eq!(f.comps, 1);
    let mut out = GridField::zeros(f.n, 4);
    for a in 0..4 {
        let da = diff_central(f, 0, a);
        for s in 0..f.sites() {
            out.data[s * 4 + a] = da.data[s];
        }
    }
    out
}

/// Exterior derivative of a 1-form: (da)_{pq} = d_p a_q - d_q a_p, in the
/// 6-component 2-form basis.
pub fn d_one_form(a: &GridField) -> GridField {
    assert_eq!(a.comps, 4);
    let n = a.n;
    let mut out = GridField::zeros(n, 6);
    // d_p a_q for all (p,q).
    let mut grads = Vec::with_capacity(16);
    for p in 0..4 {
        for q in 0..4 {
            grads.push(diff_central(a, q, p));
        }
    }
    for (k, &(p, q)) in BASIS_PAIRS.iter().enumerate() {
        let dpq = &grads[p * 4 + q];
        let dqp = &grads[q * 4 + p];
        for s in 0..a.sites() {
            out.data[s * 6 + k] = dpq.data[s] - dqp.data[s];
        }
    }
    out
}

/// Codifferential on 1-forms (flat metric): d* a = - sum_a d_a a_a.
pub fn dstar_one_form(a: &GridField) -> GridField {
    assert_eq!(a.comps, 4);
    let mut out = GridField::zeros(a.n, 1);
    for ax in 0..4 {
        let da = diff_central(a, ax, ax);
        for s in 0..a.sites() {
            out.data[s] -= da.data[s];
        }
    }
    out
}

/// Codifferential on 2-forms (flat metric): (d* F)_b = - sum_a d_a F_{ab}.
pub fn dstar_two_form(f: &GridField) -> GridField {
    assert_eq!(f.comps, 6);
    let mut out = GridField::zeros(f.n, 4);
    for (k, &(p, q)) in BASIS_PAIRS.iter().enumerate() {
        // F_{pq} = coeff k; F_{qp} = -coeff k.
        let dp = diff_central(f, k, p);
        let dq = diff_central(f, k, q);
        for s in 0..f.sites() {
            // contribution to (d*F)_q: -d_p F_{pq}
            out.data[s * 4 + q] -= dp.data[s];
            // contribution to (d*F)_p: -d_q F_{qp} = +d_q F_{pq}
            out.data[s * 4 + p] += dq.data[s];
        }
    }
    out
}

/// Pointwise Euclidean self-dual / anti-self-dual projections of a 2-form
/// field: F_pm = (F +- *F)/2 with the constant star table.
pub fn sd_projection(f: &GridField, sign: f64) -> GridField {
    assert_eq!(f.comps, 6);
    let mut out = GridField::zeros(f.n, 6);
    for s in 0..f.sites() {
        let c = &f.data[s * 6..s * 6 + 6];
        let star = [c[5], -c[4], c[3], c[2], -c[1], c[0]];
        for k in 0..6 {
            out.data[s * 6 + k] = 0.5 * (c[k] + sign * star[k]);
        }
    }
    out
}

pub fn d_plus(a: &GridField) -> GridField {
    sd_projection(&d_one_form(a), 1.0)
}

pub fn d_minus(a: &GridField) -> GridField {
    sd_projection(&d_one_form(a), -1.0)
}

/// The Dirac operator D a = (d* a, d^+ a).
pub struct DiracImage {
    pub dstar: GridField,
    pub dplus: GridField,
}

pub fn dirac(a: &GridField) -> DiracImage {
    DiracImage { dstar: dstar_one_form(a), dplus: d_plus(a) }
}

/// Bundle of the exterior operators of a 1-form field on the flat grid.
pub struct ExteriorOps {
    pub dstar: GridField,
    pub dplus: GridField,
    pub dminus: GridField,
}

/// (d* a, d+ a, d- a, D a) on a periodic grid; N < 8 per axis is a config
/// error.
pub fn grid_exterior_ops(a: &GridField) -> Result<ExteriorOps> {
    check_grid(a.n)?;
    if a.comps != 4 {
        return Err(KummerError::config(format!("expected a 1-form field (4 components), got {}", a.comps)));
    }
    Ok(ExteriorOps { dstar: dstar_one_form(a), dplus: d_plus(a), dminus: d_minus(a) })
}

/// Three-point discrete Laplacian with nonnegative spectrum:
/// (Delta f)(x) = - sum_a (f(x+h e_a) - 2 f(x) + f(x-h e_a)) / h^2,
/// applied to every component.
pub fn laplacian_3pt(f: &GridField) -> GridField {
    let n = f.n;
    let inv_h2 = (n * n) as f64;
    let mut out = GridField::zeros(n, f.comps);
    let idx: Vec<[usize; 4]> = f.index_iter().collect();
    for i in idx {
        for c in 0..f.comps {
            let mut acc = 0.0;
            for a in 0..4 {
                let mut ip = i;
                ip[a] = wrap(i[a], 1, n);
                let mut im = i;
                im[a] = wrap(i[a], -1, n);
                acc += f.at(ip, c) - 2.0 * f.at(i, c) + f.at(im, c);
            }
            *out.at_mut(i, c) = -acc * inv_h2;
        }
    }
    out
}

/// In-place 4-d complex FFT over every axis (forward for `inverse = false`).
/// The inverse is normalized so that ifft(fft(x)) = x.
pub fn fft4(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    // Axis strides for index = ((i0 n + i1) n + i2) n + i3.
    let strides = [n * n * n, n * n, n, 1];
    for axis in 0..4 {
        let stride = strides[axis];
        let outer = n * n * n;
        // Enumerate line starts: all indices with axis coordinate = 0.
        let mut starts = Vec::with_capacity(outer);
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    let mut idx4 = [0usize; 4];
                    let others: Vec<usize> = (0..4).filter(|&a| a != axis).collect();
                    idx4[others[0]] = i0;
                    idx4[others[1]] = i1;
                    idx4[others[2]] = i2;
                    idx4[axis] = 0;
                    starts.push(((idx4[0] * n + idx4[1]) * n + idx4[2]) * n + idx4[3]);
                }
            }
        }
        for start in starts {
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, l) in line.iter().enumerate() {
                data[start + j * stride] = *l;
            }
        }
    }
    if inverse {
        let norm = 1.0 / (n * n * n * n) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

/// Eigenvalue of the three-point Laplacian at mode k:
/// 4 N^2 sum_a sin^2(pi k_a / N).
pub fn laplacian_symbol(n: usize, k: [usize; 4]) -> f64 {
    let mut s = 0.0;
    for &ka in &k {
        let t = (std::f64::consts::PI * ka as f64 / n as f64).sin();
        s += t * t;
    }
    4.0 * (n * n) as f64 * s
}

/// Solve the three-point Poisson problem Delta f = rhs on the mean-zero
/// subspace by Fourier diagonalization (exact for the discrete operator).
/// The rhs mean is projected out; the result has zero mean.
pub fn poisson_solve_flat(rhs: &GridField) -> Result<GridField> {
    check_grid(rhs.n)?;
    let n = rhs.n;
    let mut out = GridField::zeros(n, rhs.comps);
    for c in 0..rhs.comps {
        let mut buf: Vec<Complex64> = (0..rhs.sites())
            .map(|s| Complex64::new(rhs.data[s * rhs.comps + c], 0.0))
            .collect();
        fft4(&mut buf, n, false);
        let mut pos = 0usize;
        for k0 in 0..n {
            for k1 in 0..n {
                for k2 in 0..n {
                    for k3 in 0..n {
                        let lam = laplacian_symbol(n, [k0, k1, k2, k3]);
                        if lam == 0.0 {
                            buf[pos] = Complex64::new(0.0, 0.0);
                        } else {
                            buf[pos] /= lam;
                        }
                        pos += 1;
                    }
                }
            }
        }
        fft4(&mut buf, n, true);
        for s in 0..rhs.sites() {
            out.data[s * rhs.comps + c] = buf[s].re;
        }
    }
    Ok(out)
}

/// Central-difference frequency of mode k: N sin(2 pi k / N).
fn central_frequency(n: usize, k: usize) -> f64 {
    (n as f64) * (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin()
}

/// The per-mode symbol matrix of D = d* + d^+ at real frequency xi (the i
/// factored out): rows are d* and the three self-dual components of d a.
pub fn dirac_symbol(xi: [f64; 4]) -> nalgebra::Matrix4<f64> {
    nalgebra::Matrix4::new(
        -xi[0], -xi[1], -xi[2], -xi[3], //
        -xi[1], xi[0], -xi[3], xi[2], //
        -xi[2], xi[3], xi[0], -xi[1], //
        -xi[3], -xi[2], xi[1], xi[0],
    )
}

/// Kernel dimension of the Dirac operator on the resolved frequency range.
///
/// Central differences annihilate every Nyquist mode (k_a in {0, N/2} with
/// some k_a = N/2), so the rank computation runs over the resolved modes
/// (all |k~_a| < N/2), where the symbol is the continuum one at frequency
/// N sin(2 pi k_a / N). On the full field space the kernel is the constant
/// coframe span (dimension 4); on the Z_2-even subspace (odd coefficient
/// functions) the constants are excluded and the kernel is trivial.
pub fn dirac_kernel_dimension(n: usize, z2_even: bool) -> Result<usize> {
    check_grid(n)?;
    let mut dim = 0usize;
    for k0 in 0..n {
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    let k = [k0, k1, k2, k3];
                    if k.iter().any(|&ka| 2 * ka == n) {
                        continue; // Nyquist: unresolved by central differences
                    }
                    if k == [0, 0, 0, 0] {
                        // Constant 1-forms: coefficient functions are even, so
                        // they are excluded from the Z_2-even (odd-coefficient)
                        // subspace.
                        if !z2_even {
                            dim += 4;
                        }
                        continue;
                    }
                    let xi = [
                        central_frequency(n, k0),
                        central_frequency(n, k1),
                        central_frequency(n, k2),
                        central_frequency(n, k3),
                    ];
                    let m = dirac_symbol(xi);
                    let rank = m.svd(false, false).rank(1e-9 * n as f64);
                    dim += 4 - rank;
                }
            }
        }
    }
    Ok(dim)
}
