//! Weighted Holder norm evaluation on sampled tensor fields.
//!
//! The reported norm is
//!
//! ```text
//! sum_{j <= k} sup rho^{-delta+j} |jet_j|_g
//!   + sup_pairs min(rho_x, rho_y)^{-delta+k+alpha} |jet_k(x) - jet_k(y)|_g / d(x,y)^alpha
//! ```
//!
//! over the given samples and admissible pairs. It is a lower bound of the
//! true norm, monotone under sample refinement. The seminorm difference is a
//! chart-coefficient comparison (not parallel transport); each pair carries
//! the substitution error budget O(d^2 |Rm|).

use serde::{Deserialize, Serialize};

use crate::error::{KummerError, Result};
use crate::metric::MetricAtPoint;
use crate::weights::WeightFunction;

/// A (p,q)-tensor value by coordinate coefficients (4^{p+q} entries,
/// contravariant slots first, row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    pub up: usize,
    pub down: usize,
    pub coeffs: Vec<f64>,
}

impl TensorValue {
    pub fn scalar(v: f64) -> Self {
        TensorValue { up: 0, down: 0, coeffs: vec![v] }
    }

    pub fn slots(&self) -> usize {
        self.up + self.down
    }

    pub fn check(&self) -> Result<()> {
        if self.coeffs.len() != 4usize.pow(self.slots() as u32) {
            return Err(KummerError::config(format!(
                "tensor with {} slots needs {} coefficients, got {}",
                self.slots(),
                4usize.pow(self.slots() as u32),
                self.coeffs.len()
            )));
        }
        Ok(())
    }

    fn sub(&self, other: &TensorValue) -> TensorValue {
        let coeffs = self.coeffs.iter().zip(other.coeffs.iter()).map(|(a, b)| a - b).collect();
        TensorValue { up: self.up, down: self.down, coeffs }
    }

    /// Pointwise norm with respect to g: contravariant slots contract with g,
    /// covariant slots with g^{-1}.
    pub fn norm(&self, g: &MetricAtPoint) -> Result<f64> {
        self.check()?;
        let slots = self.slots();
        if slots == 0 {
            return Ok(self.coeffs[0].abs());
        }
        let gi = g.inverse()?;
        let total = self.coeffs.len();
        let mut acc = 0.0;
        for i in 0..total {
            for j in 0..total {
                let mut weight = 1.0;
                let (mut ii, mut jj) = (i, j);
                // Decode indices slot by slot (last slot varies fastest).
                for s in (0..slots).rev() {
                    let a = ii % 4;
                    let b = jj % 4;
                    ii /= 4;
                    jj /= 4;
                    weight *= if s < self.up { g.g[(a, b)] } else { gi[(a, b)] };
                    if weight == 0.0 {
                        break;
                    }
                }
                acc += weight * self.coeffs[i] * self.coeffs[j];
            }
        }
        Ok(acc.max(0.0).sqrt())
    }
}

/// One sample point of a tensor field: weight value, metric, and covariant
/// derivative jets 0..=k (jet j has j extra covariant slots).
#[derive(Debug, Clone)]
pub struct NormSample {
    pub point: [f64; 4],
    pub weight: f64,
    pub metric: MetricAtPoint,
    pub jets: Vec<TensorValue>,
}

/// An admissible sample pair with its chart distance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplePair {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct SampledField {
    pub samples: Vec<NormSample>,
    pub pairs: Vec<SamplePair>,
    /// Curvature bound used for the per-pair transport error budget.
    pub rm_bound: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub k: usize,
    pub alpha: f64,
    pub delta: f64,
    pub weight: WeightFunction,
    pub valence: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    /// Sum of the weighted C^0 parts plus the seminorm.
    pub total: f64,
    /// sup rho^{-delta+j} |jet_j| for each j <= k.
    pub c0_parts: Vec<f64>,
    pub seminorm: f64,
    /// Set when the pair list is empty at order k: the seminorm is reported
    /// as 0 and is not a lower bound of the Holder part.
    pub empty_pair_warning: bool,
    /// max over pairs of d^2 rm_bound: the recorded substitution error of the
    /// coefficient comparison in place of parallel transport.
    pub transport_error_budget: f64,
}

pub fn weighted_holder_norm(spec: &WeightedNormSpec, field: &SampledField) -> Result<NormReport> {
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(KummerError::config(format!("alpha = {} outside (0,1)", spec.alpha)));
    }
    if field.samples.is_empty() {
        return Err(KummerError::config("no samples"));
    }
    let mut c0_parts = vec![0.0f64; spec.k + 1];
    for s in &field.samples {
        if s.jets.len() < spec.k + 1 {
            return Err(KummerError::config(format!("sample at {:?} lacks jets to order {}", s.point, spec.k)));
        }
        for j in 0..=spec.k {
            let jet = &s.jets[j];
            if jet.up != spec.valence.0 || jet.down != spec.valence.1 + j {
                return Err(KummerError::config(format!(
                    "jet {j} valence mismatch: expected ({}, {}), got ({}, {})",
                    spec.valence.0,
                    spec.valence.1 + j,
                    jet.up,
                    jet.down
                )));
            }
            let v = jet.norm(&s.metric)?;
            c0_parts[j] = c0_parts[j].max(s.weight.powf(-spec.delta + j as f64) * v);
        }
    }
    let mut seminorm = 0.0f64;
    let mut budget = 0.0f64;
    for p in &field.pairs {
        let (a, b) = (&field.samples[p.i], &field.samples[p.j]);
        if p.distance <= 0.0 {
            continue;
        }
        // Deterministic choice: measure the difference with the metric at the
        // smaller-weight point.
        let (gm, wmin) = if a.weight <= b.weight { (&a.metric, a.weight) } else { (&b.metric, b.weight) };
        let diff = a.jets[spec.k].sub(&b.jets[spec.k]);
        let v = diff.norm(gm)?;
        let term = wmin.powf(-spec.delta + spec.k as f64 + spec.alpha) * v / p.distance.powf(spec.alpha);
        seminorm = seminorm.max(term);
        budget = budget.max(p.distance * p.distance * field.rm_bound);
    }
    let empty_pair_warning = field.pairs.is_empty();
    Ok(NormReport {
        total: c0_parts.iter().sum::<f64>() + seminorm,
        c0_parts,
        seminorm,
        empty_pair_warning,
        transport_error_budget: budget,
    })
}

/// Build the admissible pair list: all sample pairs with chart distance at
/// most min(inj_proxy, 0.1), the injectivity proxy being half the distance to
/// the chart boundary supplied per point.
pub fn admissible_pairs(
    points: &[[f64; 4]],
    distance: &dyn Fn([f64; 4], [f64; 4]) -> Result<f64>,
    inj_proxy: &dyn Fn([f64; 4]) -> f64,
) -> Result<Vec<SamplePair>> {
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = distance(points[i], points[j])?;
            let cap = inj_proxy(points[i]).min(inj_proxy(points[j])).min(0.1);
            if d > 0.0 && d <= cap {
                pairs.push(SamplePair { i, j, distance: d });
            }
        }
    }
    Ok(pairs)
}

/// Build a scalar sampled field (flat metric) from columnar rows: the value
/// columns hold the jets in order (value, then 4 gradient entries, then 16
/// Hessian entries, as far as `k` requires).
pub fn scalar_field_from_rows(rows: &[crate::io::SampleRow], k: usize, rm_bound: f64) -> Result<SampledField> {
    let mut samples = Vec::with_capacity(rows.len());
    let mut need = 0usize;
    for j in 0..=k {
        need += 4usize.pow(j as u32);
    }
    for r in rows {
        if r.values.len() < need {
            return Err(KummerError::config(format!(
                "row at {:?} has {} value columns; order {k} needs {need}",
                r.point,
                r.values.len()
            )));
        }
        let mut jets = Vec::with_capacity(k + 1);
        let mut off = 0usize;
        for j in 0..=k {
            let len = 4usize.pow(j as u32);
            jets.push(TensorValue { up: 0, down: j, coeffs: r.values[off..off + len].to_vec() });
            off += len;
        }
        samples.push(NormSample { point: r.point, weight: r.weight, metric: MetricAtPoint::identity(), jets });
    }
    Ok(SampledField { samples, pairs: vec![], rm_bound })
}

/// Metric length of the straight chart segment from x to y, composite Simpson
/// with 16 intervals.
pub fn chart_distance(
    metric: &dyn Fn([f64; 4]) -> Result<MetricAtPoint>,
    x: [f64; 4],
    y: [f64; 4],
    chart_bound: f64,
) -> Result<f64> {
    let mut d = [0.0; 4];
    for a in 0..4 {
        d[a] = y[a] - x[a];
    }
    let e: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if e > chart_bound {
        return Err(KummerError::domain("chart_distance", format!("segment of length {e} exits the chart (bound {chart_bound})")));
    }
    const INTERVALS: usize = 16;
    let speed = |t: f64| -> Result<f64> {
        let p = [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2], x[3] + t * d[3]];
        let g = metric(p)?;
        let mut q = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                q += g.g[(a, b)] * d[a] * d[b];
            }
        }
        Ok(q.max(0.0).sqrt())
    };
    let h = 1.0 / INTERVALS as f64;
    let mut acc = speed(0.0)? + speed(1.0)?;
    for i in 1..INTERVALS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * speed(i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Scalar product-estimate check: verifies
/// ||f g||_{C^0_{delta-l}} <= eps^{delta-l} ||f||_{C^0_{delta-l}} ||g||_{C^0_{delta-l}}
/// on shared samples (weights in [eps, 1]) and reports the measured constant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProductEstimate {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// lhs / rhs: the measured C_2 analogue.
    pub measured_c2: f64,
}

pub fn product_estimate_check(
    f_values: &[f64],
    g_values: &[f64],
    weights: &[f64],
    delta: f64,
    l: f64,
    eps: f64,
) -> Result<ProductEstimate> {
    if delta >= l {
        return Err(KummerError::config(format!("product estimate needs delta < l (got delta = {delta}, l = {l})")));
    }
    if f_values.len() != g_values.len() || f_values.len() != weights.len() || f_values.is_empty() {
        return Err(KummerError::config("product estimate needs equal, nonempty sample arrays"));
    }
    let exp = -(delta - l);
    let sup = |vals: &[f64]| -> f64 {
        vals.iter().zip(weights.iter()).map(|(v, w)| w.powf(exp) * v.abs()).fold(0.0, f64::max)
    };
    let lhs = f_values
        .iter()
        .zip(g_values.iter())
        .zip(weights.iter())
        .map(|((f, g), w)| w.powf(exp) * (f * g).abs())
        .fold(0.0, f64::max);
    let rhs = eps.powf(delta - l) * sup(f_values) * sup(g_values);
    Ok(ProductEstimate { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12), measured_c2: lhs / rhs.max(1e-300) })
}
