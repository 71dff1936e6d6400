//! The three weight functions of the construction, as functions of the
//! relevant chart distance:
//!
//! * `RhoTilde0` on the Eguchi-Hanson chart: 1 on [0,1], the distance itself
//!   beyond 2, values in [1, inf).
//! * `Rho0` on the orbifold: the distance to the singular set below 1/8,
//!   1 beyond 1/5, values in (0, 1].
//! * `RhoEps` on the resolved space: eps below eps, the distance on
//!   [2 eps, 1/8], 1 beyond 1/5, values in [eps, 1].
//!
//! Interpolation zones use the same quintic smoothstep as the cutoff, which
//! keeps |grad| within C_1 on [eps, 2 eps] (and [1,2]) and within 35 C_1 / 3
//! on [1/8, 1/5].

use serde::{Deserialize, Serialize};

use crate::cutoff::smoothstep5;
use crate::error::{KummerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightFunction {
    RhoTilde0,
    Rho0,
    RhoEps { eps: f64 },
}

impl WeightFunction {
    pub fn rho_eps(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 / 16.0) {
            return Err(KummerError::config(format!(
                "rho_eps needs 0 < eps < 1/16 so the linear zone [2 eps, 1/8] is nonempty; got {eps}"
            )));
        }
        Ok(WeightFunction::RhoEps { eps })
    }

    /// Like `rho_eps` but tolerating gluing parameters past the strict zone
    /// regime (up to 0.15): when 2 eps >= 1/8 the middle zone is empty and the
    /// weight degenerates to a single smooth monotone rise from eps on
    /// [0, eps] to 1 on [1/5, inf). Used by the inverse-bound sweeps whose
    /// largest eps sits outside the strict regime.
    pub fn rho_eps_relaxed(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.15) {
            return Err(KummerError::config(format!("rho_eps_relaxed needs 0 < eps < 0.15; got {eps}")));
        }
        Ok(WeightFunction::RhoEps { eps })
    }

    fn eps_zones_collide(eps: f64) -> bool {
        2.0 * eps >= 1.0 / 8.0
    }

    /// Evaluate at the relevant nonnegative chart distance.
    pub fn eval(&self, d: f64) -> Result<f64> {
        if d < 0.0 {
            return Err(KummerError::domain("weight_eval", format!("distance {d} < 0")));
        }
        Ok(match *self {
            WeightFunction::RhoTilde0 => {
                if d <= 1.0 {
                    1.0
                } else if d >= 2.0 {
                    d
                } else {
                    let t = d - 1.0;
                    1.0 + smoothstep5(t, 0) * (d - 1.0)
                }
            }
            WeightFunction::Rho0 => rho0_eval(d),
            WeightFunction::RhoEps { eps } => {
                if Self::eps_zones_collide(eps) {
                    // Collapsed regime: one smooth rise from eps to 1.
                    if d <= eps {
                        eps
                    } else if d >= OUTER_HI {
                        1.0
                    } else {
                        let t = (d - eps) / (OUTER_HI - eps);
                        eps + smoothstep5(t, 0) * (1.0 - eps)
                    }
                } else if d <= eps {
                    eps
                } else if d < 2.0 * eps {
                    let t = (d - eps) / eps;
                    eps + smoothstep5(t, 0) * (d - eps)
                } else if d <= 1.0 / 8.0 {
                    d
                } else {
                    rho0_eval(d)
                }
            }
        })
    }

    /// First derivative with respect to the distance (used by the Lipschitz
    /// bound checks).
    pub fn eval_deriv(&self, d: f64) -> Result<f64> {
        if d < 0.0 {
            return Err(KummerError::domain("weight_eval", format!("distance {d} < 0")));
        }
        Ok(match *self {
            WeightFunction::RhoTilde0 => {
                if d <= 1.0 {
                    0.0
                } else if d >= 2.0 {
                    1.0
                } else {
                    let t = d - 1.0;
                    smoothstep5(t, 1) * (d - 1.0) + smoothstep5(t, 0)
                }
            }
            WeightFunction::Rho0 => rho0_deriv(d),
            WeightFunction::RhoEps { eps } => {
                if Self::eps_zones_collide(eps) {
                    if d <= eps || d >= OUTER_HI {
                        0.0
                    } else {
                        let t = (d - eps) / (OUTER_HI - eps);
                        smoothstep5(t, 1) * (1.0 - eps) / (OUTER_HI - eps)
                    }
                } else if d <= eps {
                    0.0
                } else if d < 2.0 * eps {
                    let t = (d - eps) / eps;
                    smoothstep5(t, 1) * (d - eps) / eps + smoothstep5(t, 0)
                } else if d <= 1.0 / 8.0 {
                    1.0
                } else {
                    rho0_deriv(d)
                }
            }
        })
    }

    pub fn range(&self) -> (f64, f64) {
        match *self {
            WeightFunction::RhoTilde0 => (1.0, f64::INFINITY),
            WeightFunction::Rho0 => (0.0, 1.0),
            WeightFunction::RhoEps { eps } => (eps, 1.0),
        }
    }
}

const OUTER_LO: f64 = 1.0 / 8.0;
const OUTER_HI: f64 = 1.0 / 5.0;

fn rho0_eval(d: f64) -> f64 {
    if d <= OUTER_LO {
        d
    } else if d >= OUTER_HI {
        1.0
    } else {
        let t = (d - OUTER_LO) / (OUTER_HI - OUTER_LO);
        d + smoothstep5(t, 0) * (1.0 - d)
    }
}

fn rho0_deriv(d: f64) -> f64 {
    if d <= OUTER_LO {
        1.0
    } else if d >= OUTER_HI {
        0.0
    } else {
        let t = (d - OUTER_LO) / (OUTER_HI - OUTER_LO);
        1.0 + smoothstep5(t, 1) * (1.0 - d) / (OUTER_HI - OUTER_LO) - smoothstep5(t, 0)
    }
}

/// Evaluate a weight function at a chart distance.
pub fn weight_eval(w: &WeightFunction, d: f64) -> Result<f64> {
    w.eval(d)
}
