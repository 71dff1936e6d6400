//! Cutoff interpolation of the Eguchi-Hanson data with the flat background:
//! the grafted form omega_eps and triple on the resolved orbifold, the Ricci
//! potential of the grafted form, region bookkeeping, partial smoothings, and
//! the degeneration schedule.
//!
//! Chart conventions: around a resolved singular point the construction works
//! in gram-orthonormal coordinates y (lift to the torus, translate the
//! singular point to 0, orthonormalize with the Cholesky factor of the gram
//! matrix); r = |y|. Regions split at r = eps^{1/2} and 2 eps^{1/2}:
//!
//! * inner:   omega = omega_{EH, eps^2}        (r <= eps^{1/2})
//! * annulus: omega = i del delbar phi~_eps    (eps^{1/2} <= r <= 2 eps^{1/2})
//! * outer:   omega = omega_0                  (r >= 2 eps^{1/2})
//!
//! with phi~_eps = chi_eps phi_{EH,eps^2} + (1 - chi_eps) phi_0 and
//! chi_eps = chi(r / eps^{1/2}).

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::cutoff::CutoffProfile;
use crate::eh::{complexify, hermitian_from_radial, EguchiHansonProfile};
use crate::error::{KummerError, Result};
use crate::flat::{singular_representatives, FlatMetricSpec};
use crate::forms::{metric_from_kahler_form, two_form_from_hermitian, TwoForm};
use crate::metric::MetricAtPoint;
use crate::triple::{rotation_to_direction, TripleOfTwoForms};

/// Region of a point relative to the nearest resolved bubble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Inner,
    Annulus,
    Outer,
}

pub fn classify_region(eps: f64, r: f64) -> Region {
    let s = eps.sqrt();
    if r <= s {
        Region::Inner
    } else if r <= 2.0 * s {
        Region::Annulus
    } else {
        Region::Outer
    }
}

/// A chart point of the grafted construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraftedFieldPoint {
    pub region: Region,
    /// Gram-orthonormal chart coordinates relative to the nearest singular point.
    pub chart: [f64; 4],
    pub nearest_singular_index: u8,
}

/// Chartwise gluing parameter bound: the interpolation and the positivity of
/// the glued form only need eps in (0, 1).
pub fn check_chart_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KummerError::config(format!("gluing parameter eps = {eps} must lie in (0, 1)")));
    }
    Ok(())
}

/// Which pre-glued potential: hat interpolates phi_{EH,1} with phi_0 at radius
/// ~ eps^{-1/2}; tilde interpolates phi_{EH,eps^2} with phi_0 at ~ eps^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreglueVariant {
    Hat,
    Tilde,
}

fn binomial(n: usize, k: usize) -> f64 {
    match (n, k) {
        (_, 0) => 1.0,
        (n, k) if k == n => 1.0,
        (2, 1) => 2.0,
        (3, 1) | (3, 2) => 3.0,
        _ => 0.0,
    }
}

/// d^k/dr^k of the pre-glued potential, k <= 3.
pub fn preglue_potential(
    profile: &CutoffProfile,
    eps: f64,
    r: f64,
    variant: PreglueVariant,
    k: usize,
) -> Result<f64> {
    check_chart_eps(eps)?;
    if r <= 0.0 {
        return Err(KummerError::domain("preglue_potential", format!("radius {r} must be > 0")));
    }
    if k > 3 {
        return Err(KummerError::domain("preglue_potential", format!("derivative order {k} > 3")));
    }
    let (s, sigma) = match variant {
        // chi_{eps^{1/2}} = chi(eps^{1/2} |.|), bubble scale 1.
        PreglueVariant::Hat => (1.0, eps.sqrt()),
        // chi_eps = chi(|.| / eps^{1/2}), bubble scale eps^2.
        PreglueVariant::Tilde => (eps * eps, 1.0 / eps.sqrt()),
    };
    let eh = EguchiHansonProfile::new(s)?;
    let flat = EguchiHansonProfile::new(0.0)?;
    // phi = chi (phi_EH - phi_0) + phi_0, differentiated with Leibniz.
    let mut out = flat.potential(r, k)?;
    for j in 0..=k {
        let chi_j = profile.eval(sigma * r, j)? * sigma.powi(j as i32);
        let diff = eh.potential(r, k - j)? - flat.potential(r, k - j)?;
        out += binomial(k, j) * chi_j * diff;
    }
    Ok(out)
}

/// The grafted radial potential phi~_eps with evaluators through order 3.
#[derive(Debug, Clone, Copy)]
pub struct GraftedRadialPotential {
    pub eps: f64,
    pub profile: CutoffProfile,
}

impl GraftedRadialPotential {
    pub fn new(eps: f64, profile: CutoffProfile) -> Result<Self> {
        check_chart_eps(eps)?;
        Ok(GraftedRadialPotential { eps, profile })
    }

    pub fn eval(&self, r: f64, k: usize) -> Result<f64> {
        preglue_potential(&self.profile, self.eps, r, PreglueVariant::Tilde, k)
    }

    /// Complex Hessian determinant of the potential at radius r; equals 1/4
    /// exactly on the inner and outer regions.
    pub fn hessian_det(&self, r: f64) -> Result<f64> {
        let d1 = self.eval(r, 1)?;
        let d2 = self.eval(r, 2)?;
        let psi1 = d1 / (2.0 * r);
        let psi2 = (r * d2 - d1) / (4.0 * r * r * r);
        let u = r * r;
        Ok(psi1 * (psi1 + u * psi2))
    }
}

/// The grafted Kahler form at a chart point (region dispatch).
pub fn grafted_form(eps: f64, p: &GraftedFieldPoint, profile: &CutoffProfile) -> Result<TwoForm> {
    check_chart_eps(eps)?;
    let z = complexify(p.chart);
    let r2: f64 = p.chart.iter().map(|v| v * v).sum();
    let r = r2.sqrt();
    if r == 0.0 {
        return Err(KummerError::domain("grafted_form", "chart origin reached (unresolved singular fiber)"));
    }
    match classify_region(eps, r) {
        Region::Inner => crate::eh::eh_kahler_form(eps * eps, z),
        Region::Outer => Ok(TwoForm::flat_kahler()),
        Region::Annulus => {
            let pot = GraftedRadialPotential::new(eps, *profile)?;
            let h = hermitian_from_radial(z, pot.eval(r, 1)?, pot.eval(r, 2)?);
            Ok(two_form_from_hermitian(&h))
        }
    }
}

/// Metric of the grafted form; definiteness is asserted.
pub fn grafted_metric(eps: f64, chart: [f64; 4], profile: &CutoffProfile) -> Result<MetricAtPoint> {
    let r = chart.iter().map(|v| v * v).sum::<f64>().sqrt();
    let p = GraftedFieldPoint { region: classify_region(eps, r), chart, nearest_singular_index: 1 };
    let w = grafted_form(eps, &p, profile)?;
    let g = MetricAtPoint::new(metric_from_kahler_form(&w));
    g.require_positive_definite("grafted_metric")?;
    Ok(g)
}

pub fn grafted_metric_field(eps: f64, profile: CutoffProfile) -> impl Fn([f64; 4]) -> Result<Matrix4<f64>> {
    move |x: [f64; 4]| Ok(grafted_metric(eps, x, &profile)?.g)
}

/// Ratio of dV between Omega ^ conj(Omega) and 2 omega^2, fixed so the
/// potential vanishes where the form is exactly Calabi-Yau. With
/// Omega = dz1 ^ dz2 unnormalized: Omega ^ conj(Omega) = 4 dx1234 while
/// omega_0^2 = 2 dx1234, hence the constant 2 below.
pub const OMEGA_VOLUME_RATIO: f64 = 2.0;

/// The Ricci potential phi_eps = log(Omega ^ conj(Omega) / (2 omega_eps^2)) at
/// chart radius r. Identically zero on the inner and outer regions; bounded
/// by O(eps^2) on the annulus.
pub fn ricci_potential(eps: f64, r: f64, profile: &CutoffProfile) -> Result<f64> {
    check_chart_eps(eps)?;
    if r <= 0.0 {
        return Err(KummerError::domain("ricci_potential", "radius must be > 0"));
    }
    match classify_region(eps, r) {
        // The complex Hessian determinant of both the EH and flat potentials
        // is identically 1/4, so the potential vanishes there exactly.
        Region::Inner | Region::Outer => Ok(0.0),
        Region::Annulus => {
            let det = GraftedRadialPotential::new(eps, *profile)?.hessian_det(r)?;
            if det <= 0.0 {
                return Err(KummerError::Definiteness {
                    msg: format!("omega_eps^2 <= 0 at annulus radius {r}"),
                });
            }
            // omega^2 / mu_0 = 8 det H and Omega ^ conj(Omega) / mu_0 = 4.
            Ok(-(4.0 * det).ln())
        }
    }
}

/// dV_{g_eps} / dV_{g_0} at chart radius r (equals 4 det H of the grafted
/// potential; 1 + O(eps^2) outside the inner region).
pub fn volume_ratio(eps: f64, r: f64, profile: &CutoffProfile) -> Result<f64> {
    if r >= 2.0 * eps.sqrt() {
        return Ok(1.0);
    }
    Ok(4.0 * GraftedRadialPotential::new(eps, *profile)?.hessian_det(r)?)
}

/// Configuration of a partial smoothing: flat gram data f, resolved subset
/// I of the 16 singular classes, per-bubble scales and directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSmoothingConfig {
    #[serde(flatten)]
    pub flat: FlatMetricSpec,
    /// Resolved singular indices, subset of 1..=16.
    #[serde(rename = "I")]
    pub smoothed: Vec<u8>,
    /// eps_i per resolved index.
    pub eps: BTreeMap<u8, f64>,
    /// Bubble direction e_i in S^2 per resolved index.
    pub e: BTreeMap<u8, [f64; 3]>,
}

impl PartialSmoothingConfig {
    /// Total parameter count of the family: 10 + 3 |I|.
    pub fn parameter_count(&self) -> usize {
        10 + 3 * self.smoothed.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.flat.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for &i in &self.smoothed {
            if !(1..=16).contains(&i) {
                return Err(KummerError::config(format!("singular index {i} outside 1..=16")));
            }
            if !seen.insert(i) {
                return Err(KummerError::config(format!("singular index {i} repeated")));
            }
            let eps = *self
                .eps
                .get(&i)
                .ok_or_else(|| KummerError::config(format!("missing eps for index {i}")))?;
            // Stacked smallness: 3 eps^{1/2} < 1/2 (bubbles fit in the torus),
            // 2 eps^{1/2} < 3/25 (weight-function zones mesh), eps < 1.
            if !(eps > 0.0 && eps < 1.0) {
                return Err(KummerError::config(format!("eps_{i} = {eps} outside (0,1)")));
            }
            if 3.0 * eps.sqrt() >= 0.5 {
                return Err(KummerError::config(format!("eps_{i} = {eps}: 3 eps^(1/2) must be < 1/2")));
            }
            if 2.0 * eps.sqrt() >= 3.0 / 25.0 {
                return Err(KummerError::config(format!("eps_{i} = {eps}: 2 eps^(1/2) must be < 3/25")));
            }
            let e = self
                .e
                .get(&i)
                .ok_or_else(|| KummerError::config(format!("missing direction for index {i}")))?;
            let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
            if (n - 1.0).abs() > 1e-10 {
                return Err(KummerError::config(format!("direction e_{i} not unit length (|e| = {n})")));
            }
        }
        Ok(())
    }
}

/// Read a schedule file: a JSON list of nested partial-smoothing configs.
pub fn schedule_from_json(text: &str) -> Result<Vec<PartialSmoothingConfig>> {
    let configs: Vec<PartialSmoothingConfig> = serde_json::from_str(text)?;
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

/// Locate the nearest singular class of a lattice-coordinate point and return
/// the gram-orthonormal chart displacement (Remark-identification transition:
/// lift, translate the singular point to 0, orthonormalize).
pub fn nearest_singular_chart(x: [f64; 4], spec: &FlatMetricSpec) -> Result<(u8, [f64; 4])> {
    let reps = singular_representatives();
    let gram = spec.gram_matrix();
    let chol = gram
        .cholesky()
        .ok_or_else(|| KummerError::Definiteness { msg: "gram matrix not positive definite".into() })?;
    let lt = chol.l().transpose();
    let p = Vector4::new(x[0], x[1], x[2], x[3]);
    let mut best: Option<(f64, u8, Vector4<f64>)> = None;
    for (k, rep) in reps.iter().enumerate() {
        let c = Vector4::new(rep[0], rep[1], rep[2], rep[3]);
        for n0 in -1..=1i32 {
            for n1 in -1..=1i32 {
                for n2 in -1..=1i32 {
                    for n3 in -1..=1i32 {
                        let n = Vector4::new(n0 as f64, n1 as f64, n2 as f64, n3 as f64);
                        let d = p - c - n;
                        let y = lt * d;
                        let dist = y.norm();
                        if best.as_ref().map_or(true, |(b, _, _)| dist < *b) {
                            best = Some((dist, (k + 1) as u8, y));
                        }
                    }
                }
            }
        }
    }
    let (_, idx, y) = best.unwrap();
    Ok((idx, [y[0], y[1], y[2], y[3]]))
}

/// The grafted triple of a partial smoothing at a torus point (lattice
/// coordinates). Resolved bubbles carry the rotated Eguchi-Hanson triple,
/// everything else the flat orbifold triple. The returned forms live in the
/// gram-orthonormal chart of the nearest singular point.
pub fn grafted_triple(
    config: &PartialSmoothingConfig,
    x: [f64; 4],
    profile: &CutoffProfile,
) -> Result<TripleOfTwoForms> {
    config.validate()?;
    let (idx, chart) = nearest_singular_chart(x, &config.flat)?;
    if !config.smoothed.contains(&idx) {
        return Ok(TripleOfTwoForms::flat());
    }
    let eps = config.eps[&idx];
    let e = config.e[&idx];
    grafted_triple_in_chart(eps, chart, &Vector3::new(e[0], e[1], e[2]), profile)
}

/// Single-bubble version in chart coordinates: A^e applied to the grafted
/// (omega~_eps, Re Omega, Im Omega).
pub fn grafted_triple_in_chart(
    eps: f64,
    chart: [f64; 4],
    e: &Vector3<f64>,
    profile: &CutoffProfile,
) -> Result<TripleOfTwoForms> {
    let r = chart.iter().map(|v| v * v).sum::<f64>().sqrt();
    let p = GraftedFieldPoint { region: classify_region(eps, r), chart, nearest_singular_index: 1 };
    let w = grafted_form(eps, &p, profile)?;
    let t = TripleOfTwoForms::new([w, TwoForm::re_omega(), TwoForm::im_omega()]);
    let a = rotation_to_direction(e)?;
    Ok(crate::triple::apply_matrix(&a, &t))
}

/// Max |Ric_{g_eps}| over chart sample points (finite differences with
/// Richardson extrapolation); zero outside the annulus to FD tolerance.
pub fn grafted_ricci_check(eps: f64, samples: &[[f64; 4]], profile: CutoffProfile) -> Result<f64> {
    check_chart_eps(eps)?;
    let field = grafted_metric_field(eps, profile);
    let s = eps * eps;
    let mut worst = 0.0f64;
    for &x in samples {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= 0.0 {
            return Err(KummerError::domain("grafted_ricci_check", "chart origin"));
        }
        let u = r * r;
        let h = 0.008 * u / (s * s + u * u).sqrt().sqrt();
        let c = crate::curvature::ricci_richardson_normalized(&field, x, h)?;
        worst = worst.max(c.ricci_norm);
    }
    Ok(worst)
}

/// Integral of the grafted form over the bolt 2-cycle. The bolt lies in the
/// inner region where omega_eps = omega_{EH, eps^2} for every admissible
/// cutoff (chi = 1 on [0,1]), so this pairing is the cutoff-independence
/// proxy for the cohomology class.
pub fn bolt_integral(eps: f64, profile: &CutoffProfile) -> Result<f64> {
    check_chart_eps(eps)?;
    if profile.eval(1.0, 0)? != 1.0 {
        return Err(KummerError::config("cutoff profile must be identically 1 on [0,1]"));
    }
    Ok(crate::eh::bolt_geometry(eps * eps)?.volume)
}

/// Per-bubble row of a degeneration stage report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BubbleRow {
    pub index: u8,
    pub eps: f64,
    /// pi eps^2 (bolt volume at scale s = eps^2).
    pub volume: f64,
    /// eps / 2 (curvature radius of the bolt at scale s = eps^2).
    pub diameter: f64,
}

pub fn bubble_row(index: u8, eps: f64) -> BubbleRow {
    BubbleRow { index, eps, volume: std::f64::consts::PI * eps * eps, diameter: 0.5 * eps }
}

/// One stage of a degeneration schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub resolved: Vec<u8>,
    pub parameter_count: usize,
    pub bubbles: Vec<BubbleRow>,
    /// sup over resolved bubbles and annulus samples of |Q_w - id|.
    pub sup_q_deviation: f64,
    /// sup over the shared sample set of |g_stage - g_limit| (the limit being
    /// the flat orbifold metric).
    pub gh_distortion: f64,
}

/// Run a degeneration schedule over strictly nested configurations sharing
/// the flat parameter. Stages may be evaluated independently; reports are
/// ordered by stage index.
pub fn degeneration_schedule(configs: &[PartialSmoothingConfig], profile: &CutoffProfile) -> Result<Vec<StageReport>> {
    if configs.is_empty() {
        return Err(KummerError::config("empty degeneration schedule"));
    }
    for c in configs {
        c.validate()?;
        if c.flat != configs[0].flat {
            return Err(KummerError::config("degeneration stages must share the flat parameter f"));
        }
    }
    for w in configs.windows(2) {
        let a: std::collections::BTreeSet<u8> = w[0].smoothed.iter().copied().collect();
        let b: std::collections::BTreeSet<u8> = w[1].smoothed.iter().copied().collect();
        if !(b.is_subset(&a) && b.len() < a.len()) {
            return Err(KummerError::config("stages must be strictly nested (I_0 > I_1 > ...)"));
        }
    }
    let mut out = Vec::with_capacity(configs.len());
    for (stage, c) in configs.iter().enumerate() {
        let mut bubbles = Vec::new();
        let mut sup_q = 0.0f64;
        let mut distortion = 0.0f64;
        for &i in &c.smoothed {
            let eps = c.eps[&i];
            bubbles.push(bubble_row(i, eps));
            // Q deviation sampled across the annulus of this bubble.
            for k in 0..24 {
                let r = eps.sqrt() * (1.0 + k as f64 / 23.0);
                let chart = [r, 0.0, 0.0, 0.0];
                let e = c.e[&i];
                let t = grafted_triple_in_chart(eps, chart, &Vector3::new(e[0], e[1], e[2]), profile)?;
                let dev = crate::triple::su2_check(&t)?.deviation;
                sup_q = sup_q.max(dev);
            }
            // GH distortion proxy on a fixed radial sample set shared by all
            // stages: |g_eps - g_0| decays to zero with the bubble scale.
            for k in 1..=16 {
                let r = 0.02 * k as f64;
                let g = grafted_metric(eps, [r, 0.0, 0.0, 0.0], profile)?;
                distortion = distortion.max((g.g - Matrix4::identity()).abs().max());
            }
        }
        out.push(StageReport {
            stage,
            resolved: c.smoothed.clone(),
            parameter_count: c.parameter_count(),
            bubbles,
            sup_q_deviation: sup_q,
            gh_distortion: distortion,
        });
    }
    Ok(out)
}
