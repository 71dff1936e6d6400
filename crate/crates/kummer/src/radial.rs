//! Radial reduction of the scalar Laplacian on U(2)-invariant functions of
//! the Eguchi-Hanson and grafted charts, solved as a two-point boundary
//! problem (regular at the bolt, decaying at the outer radius), and the
//! measured weighted inverse bounds behind the uniform-invertibility claims.
//!
//! For a radial Kahler potential phi the Laplacian on radial functions is
//!
//! ```text
//! Delta f = -(1/J) d/dr ( a(r) f'(r) ),   a = 2 psi' r^3,  J = 4 psi' (psi' + u psi'') r^3
//! ```
//!
//! (flat: a = J = r^3; Eguchi-Hanson: a = r w, J = r^3). Discretized in
//! conservative flux form on a log-radial grid and solved by the Thomas
//! algorithm.

use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::eh::EguchiHansonProfile;
use crate::error::{KummerError, Result};
use crate::gluing::GraftedRadialPotential;
use crate::weights::WeightFunction;

/// Which radial metric the reduction runs on.
#[derive(Debug, Clone, Copy)]
pub enum RadialProfile {
    Flat,
    Eh { s: f64 },
    Grafted { eps: f64, profile: CutoffProfile },
}

impl RadialProfile {
    /// (a, J) coefficients at radius r.
    fn coefficients(&self, r: f64) -> Result<(f64, f64)> {
        match *self {
            RadialProfile::Flat => Ok((r * r * r, r * r * r)),
            RadialProfile::Eh { s } => {
                let p = EguchiHansonProfile::new(s)?;
                let d1 = p.potential(r, 1)?;
                let d2 = p.potential(r, 2)?;
                radial_coefficients(r, d1, d2)
            }
            RadialProfile::Grafted { eps, profile } => {
                let p = GraftedRadialPotential::new(eps, profile)?;
                radial_coefficients(r, p.eval(r, 1)?, p.eval(r, 2)?)
            }
        }
    }
}

fn radial_coefficients(r: f64, d1: f64, d2: f64) -> Result<(f64, f64)> {
    let psi1 = d1 / (2.0 * r);
    let psi2 = (r * d2 - d1) / (4.0 * r * r * r);
    let u = r * r;
    let det = psi1 * (psi1 + u * psi2);
    if psi1 <= 0.0 || det <= 0.0 {
        return Err(KummerError::Definiteness { msg: format!("radial metric degenerate at r = {r}") });
    }
    Ok((2.0 * psi1 * r * r * r, 4.0 * det * r * r * r))
}

/// Result of one radial solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// sup rho^{-delta} |f| / sup rho^{-delta+2} |rhs|.
    pub inverse_bound: f64,
}

/// Solve Delta f = rhs on [r_min, r_max] (zero flux at the inner end, f = 0
/// at the outer end) and measure the weighted inverse bound for the given
/// weight and rate delta.
pub fn radial_reduced_solve(
    profile: &RadialProfile,
    rhs: &dyn Fn(f64) -> f64,
    weight: &WeightFunction,
    delta: f64,
    r_min: f64,
    r_max: f64,
    nodes: usize,
) -> Result<RadialSolution> {
    let w = |r: f64| weight.eval(r).unwrap_or(f64::NAN);
    radial_solve_with_weight(profile, rhs, &w, delta, r_min, r_max, nodes)
}

/// Like `radial_reduced_solve` with the weight given as a plain evaluator.
pub fn radial_solve_with_weight(
    profile: &RadialProfile,
    rhs: &dyn Fn(f64) -> f64,
    weight: &dyn Fn(f64) -> f64,
    delta: f64,
    r_min: f64,
    r_max: f64,
    nodes: usize,
) -> Result<RadialSolution> {
    let sol = solve_once(profile, rhs, weight, delta, r_min, r_max, nodes)?;
    let fine = solve_once(profile, rhs, weight, delta, r_min, r_max, 2 * nodes)?;
    let rel = (sol.inverse_bound - fine.inverse_bound).abs() / fine.inverse_bound.max(1e-300);
    if rel > 0.02 {
        return Err(KummerError::Refinement {
            msg: format!(
                "radial boundary layer unresolved: bound moved {:.2}% under refinement ({} -> {} nodes)",
                rel * 100.0,
                nodes,
                2 * nodes
            ),
        });
    }
    Ok(fine)
}

fn solve_once(
    profile: &RadialProfile,
    rhs: &dyn Fn(f64) -> f64,
    weight: &dyn Fn(f64) -> f64,
    delta: f64,
    r_min: f64,
    r_max: f64,
    nodes: usize,
) -> Result<RadialSolution> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(KummerError::config("radial domain must satisfy 0 < r_min < r_max"));
    }
    let m = nodes.max(16);
    let dt = (r_max / r_min).ln() / m as f64;
    let radii: Vec<f64> = (0..=m).map(|i| r_min * (dt * i as f64).exp()).collect();
    // Unknowns f_0 .. f_{m-1}; f_m = 0 (outer Dirichlet). Flux form in
    // t = ln r: -(1/(J r)) d/dt ( (a/r) df/dt ) = rhs.
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        let r = radii[i];
        let (_, j_here) = profile.coefficients(r)?;
        // Half-node coefficients a/r at r_{i +- 1/2} (geometric means).
        let c_plus = {
            let rh = (radii[i] * radii[i + 1]).sqrt();
            let (a, _) = profile.coefficients(rh)?;
            a / rh
        };
        let c_minus = if i == 0 {
            0.0 // zero flux: the regular solution at the bolt carries none
        } else {
            let rh = (radii[i - 1] * radii[i]).sqrt();
            let (a, _) = profile.coefficients(rh)?;
            a / rh
        };
        let scale = 1.0 / (j_here * r * dt * dt);
        diag[i] = (c_plus + c_minus) * scale;
        if i > 0 {
            lower[i] = -c_minus * scale;
        }
        if i + 1 < m {
            upper[i] = -c_plus * scale;
        }
        // i + 1 == m couples to the Dirichlet value f_m = 0: nothing to add.
        b[i] = rhs(r);
    }
    // Thomas algorithm.
    let mut c_star = vec![0.0; m];
    let mut d_star = vec![0.0; m];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = b[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - lower[i] * c_star[i - 1];
        if denom.abs() < 1e-300 {
            return Err(KummerError::NonConvergence { what: "radial tridiagonal solve", msg: "zero pivot".into() });
        }
        c_star[i] = upper[i] / denom;
        d_star[i] = (b[i] - lower[i] * d_star[i - 1]) / denom;
    }
    let mut f = vec![0.0; m + 1];
    f[m - 1] = d_star[m - 1];
    for i in (0..m - 1).rev() {
        f[i] = d_star[i] - c_star[i] * f[i + 1];
    }
    f[m] = 0.0;
    // Weighted bound.
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (i, &r) in radii.iter().enumerate() {
        let rho = weight(r);
        if !rho.is_finite() {
            return Err(KummerError::domain("radial weighted bound", format!("weight undefined at r = {r}")));
        }
        num = num.max(rho.powf(-delta) * f[i].abs());
        den = den.max(rho.powf(-delta + 2.0) * rhs(r).abs());
    }
    if den == 0.0 {
        return Err(KummerError::FitRejected { msg: "zero rhs in radial inverse bound".into() });
    }
    Ok(RadialSolution { values: f, radii, inverse_bound: num / den })
}

/// Apply the discrete radial operator to samples of a function (used by the
/// identity checks).
pub fn radial_apply(profile: &RadialProfile, f: &dyn Fn(f64) -> f64, r: f64, h: f64) -> Result<f64> {
    // -(1/J) d/dr (a f') with central differences at the half nodes.
    let (a_p, _) = profile.coefficients(r + 0.5 * h)?;
    let (a_m, _) = profile.coefficients(r - 0.5 * h)?;
    let (_, j) = profile.coefficients(r)?;
    let fp = (f(r + h) - f(r)) / h;
    let fm = (f(r) - f(r - h)) / h;
    Ok(-(a_p * fp - a_m * fm) / (h * j))
}

/// Which problem the sweep measures (they differ in the admissible rates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InversePblm {
    /// Scalar Laplacian: delta in (-2, 0).
    Scalar,
    /// The triple linearization: delta in (-1, 0).
    HyperKahler,
}

pub fn admissible_delta(problem: InversePblm, delta: f64) -> Result<()> {
    let (lo, hi) = match problem {
        InversePblm::Scalar => (-2.0, 0.0),
        InversePblm::HyperKahler => (-1.0, 0.0),
    };
    if !(delta > lo && delta < hi) {
        return Err(KummerError::config(format!(
            "delta = {delta} outside the admissible interval ({lo}, {hi}) for {problem:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseSweepRow {
    pub eps: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseSweep {
    pub problem: InversePblm,
    pub delta: f64,
    pub rows: Vec<InverseSweepRow>,
    pub max_over_min: f64,
}

/// The chart weight of the radial sweep: the eps-floored radius
/// (eps below eps, a smoothstep rise on [eps, 2 eps], the radius beyond,
/// reaching 1 at the outer end of the unit chart). Shape-consistent across
/// the sweep, unlike the capped torus weight whose zones collide for the
/// larger sweep values.
fn sweep_weight(eps: f64, r: f64) -> f64 {
    if r <= eps {
        eps
    } else if r < 2.0 * eps {
        eps + crate::cutoff::smoothstep5((r - eps) / eps, 0) * (r - eps)
    } else {
        r.min(1.0)
    }
}

/// Measured inverse bounds of the radial reduction across a gluing-parameter
/// sweep, with rhs = rho^{delta - 2} (the saturating decay class).
pub fn uniform_inverse_sweep(problem: InversePblm, eps_list: &[f64], delta: f64) -> Result<InverseSweep> {
    admissible_delta(problem, delta)?;
    let mut rows = Vec::new();
    for &eps in eps_list {
        if !(eps > 0.0 && eps < 0.2) {
            return Err(KummerError::config(format!("sweep eps = {eps} outside (0, 0.2)")));
        }
        let profile = RadialProfile::Grafted { eps, profile: CutoffProfile::quintic() };
        let rhs = move |r: f64| sweep_weight(eps, r).powf(delta - 2.0);
        let sol = radial_solve_with_weight(&profile, &rhs, &|r| sweep_weight(eps, r), delta, 1e-4, 1.0, 1600)?;
        rows.push(InverseSweepRow { eps, bound: sol.inverse_bound });
    }
    let max = rows.iter().map(|r| r.bound).fold(0.0f64, f64::max);
    let min = rows.iter().map(|r| r.bound).fold(f64::INFINITY, f64::min);
    Ok(InverseSweep { problem, delta, rows, max_over_min: max / min })
}
