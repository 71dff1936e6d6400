//! Cutoff profiles for the gluing: chi = 1 on [0,1], 0 on [2,inf), monotone,
//! with derivative bounds c_chi(k) carried alongside.
//!
//! The concrete default is the degree-5 smoothstep on [1,2]:
//! chi(x) = 1 - S(x-1) with S(t) = 6t^5 - 15t^4 + 10t^3, which gives
//! c_chi(1) = 15/8 analytically.

use serde::{Deserialize, Serialize};

use crate::error::{KummerError, Result};

/// Which interpolation polynomial the profile uses on [1,2].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    /// Quintic smoothstep (C^2 at the seams), c_chi(1) = 15/8.
    Quintic,
    /// Septic smoothstep S(t) = 35t^4 - 84t^5 + 70t^6 - 20t^7 (C^3 at the
    /// seams), used as the alternative admissible profile.
    Septic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
}

/// c_chi(1) for the default profile; this is the C_1 constant used by the
/// weight functions.
pub const C1_BOUND: f64 = 15.0 / 8.0;

/// The raw quintic smoothstep on [0,1] (0 -> 0, 1 -> 1, C^2 at the ends),
/// shared with the weight-function interpolation zones.
pub(crate) fn smoothstep5(t: f64, k: usize) -> f64 {
    if t <= 0.0 {
        return if k == 0 { 0.0 } else { 0.0 };
    }
    if t >= 1.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    smoothstep_quintic(t, k)
}

fn smoothstep_quintic(t: f64, k: usize) -> f64 {
    match k {
        0 => t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
        1 => 30.0 * t * t * (t - 1.0) * (t - 1.0),
        2 => 60.0 * t * (2.0 * t - 1.0) * (t - 1.0),
        3 => 360.0 * t * t - 360.0 * t + 60.0,
        _ => unreachable!(),
    }
}

fn smoothstep_septic(t: f64, k: usize) -> f64 {
    match k {
        0 => t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))),
        1 => 140.0 * t * t * t * (1.0 - t) * (1.0 - t) * (1.0 - t),
        2 => 420.0 * t * t * (1.0 - t) * (1.0 - t) * (1.0 - 2.0 * t),
        3 => 840.0 * t * (1.0 - t) * (1.0 - 5.0 * t + 5.0 * t * t),
        _ => unreachable!(),
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile { kind: CutoffKind::Quintic }
    }
}

impl CutoffProfile {
    pub fn quintic() -> Self {
        CutoffProfile { kind: CutoffKind::Quintic }
    }

    pub fn septic() -> Self {
        CutoffProfile { kind: CutoffKind::Septic }
    }

    /// d^k/dx^k of chi at x >= 0, k <= 3.
    pub fn eval(&self, x: f64, k: usize) -> Result<f64> {
        if k > 3 {
            return Err(KummerError::domain("cutoff_eval", format!("derivative order {k} > 3")));
        }
        if x <= 1.0 {
            return Ok(if k == 0 { 1.0 } else { 0.0 });
        }
        if x >= 2.0 {
            return Ok(0.0);
        }
        let t = x - 1.0;
        let s = match self.kind {
            CutoffKind::Quintic => smoothstep_quintic(t, k),
            CutoffKind::Septic => smoothstep_septic(t, k),
        };
        Ok(if k == 0 { 1.0 - s } else { -s })
    }

    /// Derivative bounds c_chi(k), k <= 3, for this profile.
    pub fn c_chi(&self, k: usize) -> f64 {
        match (self.kind, k) {
            (_, 0) => 1.0,
            (CutoffKind::Quintic, 1) => 15.0 / 8.0,
            (CutoffKind::Quintic, 2) => 10.0 / 3.0f64.sqrt(),
            (CutoffKind::Quintic, 3) => 60.0,
            (CutoffKind::Septic, 1) => 35.0 / 16.0,
            (CutoffKind::Septic, 2) => 84.0 * 5.0f64.sqrt() / 25.0,
            (CutoffKind::Septic, 3) => 52.5,
            _ => f64::INFINITY,
        }
    }
}

/// d^k/dx^k of chi_sigma = chi(sigma x); bounded by c_chi(k) sigma^k.
pub fn cutoff_eval(profile: &CutoffProfile, sigma: f64, x: f64, k: usize) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(KummerError::config(format!("cutoff scale sigma = {sigma} must be > 0")));
    }
    Ok(profile.eval(sigma * x, k)? * sigma.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plateau_values() {
        let p = CutoffProfile::quintic();
        assert_eq!(cutoff_eval(&p, 1.0, 0.5, 0).unwrap(), 1.0);
        assert_eq!(cutoff_eval(&p, 1.0, 3.0, 0).unwrap(), 0.0);
        assert_eq!(cutoff_eval(&p, 1.0, 0.5, 1).unwrap(), 0.0);
    }

    #[test]
    fn chain_rule_example() {
        // (sigma=2, x=0.75, k=1) -> 2 chi'(1.5) = -2 S'(0.5) = -15/4.
        let p = CutoffProfile::quintic();
        assert_relative_eq!(cutoff_eval(&p, 2.0, 0.75, 1).unwrap(), -3.75, epsilon = 1e-15);
    }

    #[test]
    fn monotone_and_bounded_derivatives() {
        for p in [CutoffProfile::quintic(), CutoffProfile::septic()] {
            let mut prev = 1.0;
            for i in 0..=400 {
                let x = 0.5 + 2.0 * i as f64 / 400.0;
                let v = p.eval(x, 0).unwrap();
                assert!(v <= prev + 1e-15, "not monotone at {x}");
                assert!((0.0..=1.0).contains(&v));
                prev = v;
                let d1 = p.eval(x, 1).unwrap().abs();
                assert!(d1 <= p.c_chi(1) + 1e-12, "|chi'|({x}) = {d1} exceeds bound");
            }
        }
    }

    #[test]
    fn quintic_c1_is_15_over_8() {
        let p = CutoffProfile::quintic();
        // Max of |chi'| attained at x = 1.5.
        assert_relative_eq!(p.eval(1.5, 1).unwrap().abs(), C1_BOUND, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for p in [CutoffProfile::quintic(), CutoffProfile::septic()] {
            for k in 1..=3usize {
                for &x in &[1.1, 1.37, 1.62, 1.9] {
                    let fd = (p.eval(x + h, k - 1).unwrap() - p.eval(x - h, k - 1).unwrap()) / (2.0 * h);
                    assert_relative_eq!(fd, p.eval(x, k).unwrap(), max_relative = 1e-6, epsilon = 1e-6);
                }
            }
        }
    }
}
