//! Finite-difference curvature of a metric field given as a closure.
//!
//! Central stencils at steps h and h/2 with Richardson extrapolation; the
//! closed-form potentials elsewhere in the crate keep the metric evaluations
//! noise-free, so the extrapolated Ricci of a Ricci-flat metric sits well
//! below 1e-5 relative to |Rm|.

use nalgebra::Matrix4;

use crate::error::{KummerError, Result};

pub type MetricField<'a> = &'a dyn Fn([f64; 4]) -> Result<Matrix4<f64>>;

fn shift(x: [f64; 4], a: usize, d: f64) -> [f64; 4] {
    let mut y = x;
    y[a] += d;
    y
}

struct Jet {
    g: Matrix4<f64>,
    dg: [Matrix4<f64>; 4],
    d2g: [[Matrix4<f64>; 4]; 4],
}

fn metric_jet(f: MetricField, x: [f64; 4], h: f64) -> Result<Jet> {
    let g = f(x)?;
    let mut plus = [Matrix4::zeros(); 4];
    let mut minus = [Matrix4::zeros(); 4];
    for a in 0..4 {
        plus[a] = f(shift(x, a, h))?;
        minus[a] = f(shift(x, a, -h))?;
    }
    let mut dg = [Matrix4::zeros(); 4];
    for a in 0..4 {
        dg[a] = (plus[a] - minus[a]) / (2.0 * h);
    }
    let mut d2g = [[Matrix4::zeros(); 4]; 4];
    for a in 0..4 {
        d2g[a][a] = (plus[a] - g * 2.0 + minus[a]) / (h * h);
    }
    for a in 0..4 {
        for b in (a + 1)..4 {
            let pp = f(shift(shift(x, a, h), b, h))?;
            let pm = f(shift(shift(x, a, h), b, -h))?;
            let mp = f(shift(shift(x, a, -h), b, h))?;
            let mm = f(shift(shift(x, a, -h), b, -h))?;
            let m = (pp - pm - mp + mm) / (4.0 * h * h);
            d2g[a][b] = m;
            d2g[b][a] = m;
        }
    }
    Ok(Jet { g, dg, d2g })
}

/// Curvature tensors assembled from one finite-difference jet.
pub struct CurvatureAtPoint {
    pub ricci: Matrix4<f64>,
    /// |Ric|_g (fully traced with the metric).
    pub ricci_norm: f64,
    /// |Rm|_g.
    pub riemann_norm: f64,
}

fn curvature_from_jet(jet: &Jet) -> Result<CurvatureAtPoint> {
    let gi = jet
        .g
        .try_inverse()
        .ok_or_else(|| KummerError::Definiteness { msg: "singular metric in curvature stencil".into() })?;
    // dgi_a = -gi dg_a gi
    let mut dgi = [Matrix4::zeros(); 4];
    for a in 0..4 {
        dgi[a] = -gi * jet.dg[a] * gi;
    }
    // Christoffel symbols Gamma^k_{ij} and their coordinate derivatives.
    let mut gamma = [[[0.0f64; 4]; 4]; 4]; // [k][i][j]
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for l in 0..4 {
                    s += gi[(k, l)] * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    let mut dgamma = [[[[0.0f64; 4]; 4]; 4]; 4]; // [a][k][i][j]
    for a in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        s += dgi[a][(k, l)] * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)])
                            + gi[(k, l)]
                                * (jet.d2g[a][i][(j, l)] + jet.d2g[a][j][(i, l)] - jet.d2g[a][l][(i, j)]);
                    }
                    dgamma[a][k][i][j] = 0.5 * s;
                }
            }
        }
    }
    // R^l_{kij} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
    //           + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}
    let mut riem = [[[[0.0f64; 4]; 4]; 4]; 4]; // [l][k][i][j]
    for l in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = dgamma[i][l][j][k] - dgamma[j][l][i][k];
                    for m in 0..4 {
                        s += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
                    }
                    riem[l][k][i][j] = s;
                }
            }
        }
    }
    // Ric_{jk} = R^i_{k i j}
    let mut ricci = Matrix4::zeros();
    for j in 0..4 {
        for k in 0..4 {
            let mut s = 0.0;
            for i in 0..4 {
                s += riem[i][k][i][j];
            }
            ricci[(j, k)] = s;
        }
    }
    // Norms with respect to g.
    let mut ric_norm2 = 0.0;
    for j in 0..4 {
        for k in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    ric_norm2 += gi[(j, a)] * gi[(k, b)] * ricci[(j, k)] * ricci[(a, b)];
                }
            }
        }
    }
    // Lower the first index: R_{lkij} = g_{lm} R^m_{kij}, then contract fully.
    let mut rlow = [[[[0.0f64; 4]; 4]; 4]; 4];
    for l in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for m in 0..4 {
                        s += jet.g[(l, m)] * riem[m][k][i][j];
                    }
                    rlow[l][k][i][j] = s;
                }
            }
        }
    }
    // Raise indices one at a time, then contract fully.
    let raise = |t: &[[[[f64; 4]; 4]; 4]; 4], slot: usize| {
        let mut out = [[[[0.0f64; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let mut s = 0.0;
                        for m in 0..4 {
                            let v = match slot {
                                0 => t[m][b][c][d] * gi[(a, m)],
                                1 => t[a][m][c][d] * gi[(b, m)],
                                2 => t[a][b][m][d] * gi[(c, m)],
                                _ => t[a][b][c][m] * gi[(d, m)],
                            };
                            s += v;
                        }
                        out[a][b][c][d] = s;
                    }
                }
            }
        }
        out
    };
    let rup = raise(&raise(&raise(&raise(&rlow, 0), 1), 2), 3);
    let mut rm_norm2 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    rm_norm2 += rup[a][b][c][d] * rlow[a][b][c][d];
                }
            }
        }
    }
    Ok(CurvatureAtPoint {
        ricci,
        ricci_norm: ric_norm2.max(0.0).sqrt(),
        riemann_norm: rm_norm2.max(0.0).sqrt(),
    })
}

/// Ricci tensor by central differences at steps h and h/2 with Richardson
/// extrapolation of the Ricci entries. The Riemann norm is taken from the
/// finer step (it is only used as a normalization scale).
pub fn ricci_richardson(f: MetricField, x: [f64; 4], h: f64) -> Result<CurvatureAtPoint> {
    let coarse = curvature_from_jet(&metric_jet(f, x, h)?)?;
    let fine = curvature_from_jet(&metric_jet(f, x, 0.5 * h)?)?;
    let ricci = (fine.ricci * 4.0 - coarse.ricci) / 3.0;
    // Cascade sanity: the extrapolated value should not exceed both stencil
    // values by a wide margin; if it does the step sizes straddle a feature.
    let scale = coarse.ricci.abs().max().max(fine.ricci.abs().max());
    if ricci.abs().max() > 1.5 * scale.max(1e-300) && scale > 1e-13 {
        return Err(KummerError::NonConvergence {
            what: "ricci step-size cascade",
            msg: format!("extrapolated {:.3e} vs stencils {:.3e}", ricci.abs().max(), scale),
        });
    }
    // Norm of the extrapolated Ricci with respect to g at x.
    let g = f(x)?;
    let gi = g
        .try_inverse()
        .ok_or_else(|| KummerError::Definiteness { msg: "singular metric".into() })?;
    let mut ric_norm2 = 0.0;
    for j in 0..4 {
        for k in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    ric_norm2 += gi[(j, a)] * gi[(k, b)] * ricci[(j, k)] * ricci[(a, b)];
                }
            }
        }
    }
    Ok(CurvatureAtPoint {
        ricci,
        ricci_norm: ric_norm2.max(0.0).sqrt(),
        riemann_norm: fine.riemann_norm,
    })
}

/// Ricci in a base-point-normalized linear frame: with g(x0) = L L^T the
/// field y -> L^{-1} g(x0 + L^{-T} y) L^{-T} is the pullback under the linear
/// chart change that makes the metric the identity at y = 0, so `h` is a
/// geodesic-scale step and the stencil conditioning no longer degrades where
/// the raw chart collapses (near the bolt). Curvature norms are invariant
/// under the change.
pub fn ricci_richardson_normalized(f: MetricField, x: [f64; 4], h: f64) -> Result<CurvatureAtPoint> {
    let g0 = f(x)?;
    let chol = g0
        .cholesky()
        .ok_or_else(|| KummerError::Definiteness { msg: "metric not positive definite at stencil center".into() })?;
    let l = chol.l();
    let linv_t = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| KummerError::Definiteness { msg: "degenerate Cholesky factor".into() })?;
    let linv = linv_t.transpose();
    let field = move |y: [f64; 4]| -> Result<Matrix4<f64>> {
        let dx = linv_t * nalgebra::Vector4::new(y[0], y[1], y[2], y[3]);
        let p = [x[0] + dx[0], x[1] + dx[1], x[2] + dx[2], x[3] + dx[3]];
        Ok(linv * f(p)? * linv_t)
    };
    ricci_richardson(&field, [0.0; 4], h)
}
