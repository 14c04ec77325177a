//! Theoretical moduli W_{μ,K}, the fixed-point modulus series, the closed-form
//! Hölder constant, empirical Hölder seminorms and certificate assembly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operators::{Averaging, ScalarField};
use crate::pairs::{pair_max, ScanMode};
use crate::radius::{
    check_radius_bounds, exhaustion, fit_lipschitz, iterate_modulus, rho_inf, validate_admissible, validate_parameters,
    GateInputs, Modulus, ParameterGate, RadiusBounds, RadiusField,
};
use crate::space::{probe_annular_decay, probe_doubling, PointId, ProbeConfig, Space};

/// Shape of W: `C ρ_K^{−δ} ω̂(t)^δ` or `C ρ_K^{−δ} t^{γδ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WKind {
    AdCont { hat: Modulus },
    AdHolder { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalModulus {
    #[serde(flatten)]
    pub kind: WKind,
    #[serde(rename = "C")]
    pub c: f64,
    pub rho_k: f64,
    pub delta: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1], got {delta}")))
    }
}

impl TheoreticalModulus {
    pub fn new(kind: WKind, c: f64, rho_k: f64, delta: f64) -> Result<TheoreticalModulus> {
        if !(rho_k > 0.0) {
            return Err(invalid(format!("rho_K must be positive, got {rho_k}")));
        }
        check_delta(delta)?;
        if let WKind::AdHolder { gamma } = kind {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
            }
        }
        Ok(TheoreticalModulus { kind, c, rho_k, delta })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let g = match &self.kind {
            WKind::AdCont { hat } => hat.eval(t).powf(self.delta),
            WKind::AdHolder { gamma } => t.powf(gamma * self.delta),
        };
        self.c * self.rho_k.powf(-self.delta) * g
    }
}

pub fn theoretical_modulus(kind: WKind, rho_k: f64, c: f64, delta: f64) -> Result<TheoreticalModulus> {
    TheoreticalModulus::new(kind, c, rho_k, delta)
}

/// The family j ↦ W_{μ,K_j}.
pub trait ModulusFamily {
    fn member(&self, j: usize) -> Result<TheoreticalModulus>;
}

/// Members built from the radius lower bound ρ_{K_j} ≥ λ(1−ε)^{jβ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticFamily {
    pub kind: WKind,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub beta: f64,
}

impl AnalyticFamily {
    pub fn rho_floor(&self, j: usize) -> f64 {
        self.lambda * (1.0 - self.epsilon).powf(j as f64 * self.beta)
    }
}

impl ModulusFamily for AnalyticFamily {
    fn member(&self, j: usize) -> Result<TheoreticalModulus> {
        TheoreticalModulus::new(self.kind.clone(), self.c, self.rho_floor(j), self.delta)
    }
}

/// Explicitly supplied members; a missing index is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFamily {
    pub members: BTreeMap<usize, TheoreticalModulus>,
}

impl ModulusFamily for TabulatedFamily {
    fn member(&self, j: usize) -> Result<TheoreticalModulus> {
        self.members.get(&j).cloned().ok_or_else(|| invalid(format!("modulus family has no member for K_{j}")))
    }
}

/// How ω̂^{(j)}(t) is produced inside the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HatIterates {
    /// Composition of a concrete ω̂ (bounded by diam Ω).
    Exact { hat: Modulus },
    /// The majorant L^j t of the Lipschitz case, without the diameter cap.
    LipschitzBound {
        #[serde(rename = "L")]
        l: f64,
    },
}

impl HatIterates {
    pub fn iterate(&self, j: usize, t: f64) -> Result<f64> {
        match self {
            HatIterates::Exact { hat } => iterate_modulus(hat, j, t.min(hat.domain())),
            HatIterates::LipschitzBound { l } => Ok(l.powi(j as i32) * t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInputs {
    pub alpha: f64,
    pub norm_u: f64,
    pub j_cap: usize,
    pub iterates: HatIterates,
    /// diam Ω, used to bound the tail when the terms are not exactly geometric.
    pub diam: f64,
}

/// Sum of the first `n` terms |α|^j W_{K_{m+j}}(ω̂^{(j)}(t)) of the series.
pub(crate) fn partial_series(
    m: usize,
    n: usize,
    t: f64,
    alpha: f64,
    family: &dyn ModulusFamily,
    iterates: &HatIterates,
) -> Result<f64> {
    let mut sum = 0.0;
    for j in 0..n {
        let w = family.member(m + j)?;
        sum += alpha.abs().powi(j as i32) * w.eval(iterates.iterate(j, t)?);
    }
    Ok(sum)
}

/// (1 − α)‖u‖_∞ Σ_j |α|^j W_{K_{m+j}}(ω̂^{(j)}(t)): `j_cap` terms summed
/// directly plus a closed-form bound on the remainder.
///
/// With the Hölder family and the Lipschitz majorant the terms are exactly
/// geometric and the remainder is summed exactly; otherwise each remaining
/// term is bounded by its value at diam Ω.
pub fn fixed_point_modulus(m: usize, t: f64, family: &AnalyticFamily, inputs: &SeriesInputs) -> Result<f64> {
    if inputs.j_cap < 1 {
        return Err(invalid("j_cap must be at least 1"));
    }
    if t < 0.0 {
        return Err(invalid(format!("t must be nonnegative, got {t}")));
    }
    let a = inputs.alpha.abs();
    let decay = (1.0 - family.epsilon).powf(-family.beta * family.delta);
    let head = partial_series(m, inputs.j_cap, t, inputs.alpha, family, &inputs.iterates)?;
    let j = inputs.j_cap;
    let tail = if a == 0.0 || t == 0.0 {
        0.0
    } else {
        match (&family.kind, &inputs.iterates) {
            (WKind::AdHolder { gamma }, HatIterates::LipschitzBound { l }) => {
                let ratio = a * decay * l.powf(gamma * family.delta);
                if ratio >= 1.0 {
                    return Err(Error::Divergent { ratio });
                }
                let first = a.powi(j as i32) * family.member(m + j)?.eval(inputs.iterates.iterate(j, t)?);
                first / (1.0 - ratio)
            }
            _ => {
                let ratio = a * decay;
                if ratio >= 1.0 {
                    return Err(Error::Divergent { ratio });
                }
                a.powi(j as i32) * family.member(m + j)?.eval(inputs.diam) / (1.0 - ratio)
            }
        }
    };
    Ok((1.0 - inputs.alpha) * inputs.norm_u * (head + tail))
}

/// C(1−α)‖u‖_∞ λ^{−δ}(1−ε)^{−mβδ} / (1 − L^δ|α|(1−ε)^{−βδ}).
pub fn holder_constant_main(gate: &ParameterGate, m: usize, norm_u: f64, c: f64) -> Result<f64> {
    if !gate.pass {
        return Err(Error::GateFailed(gate.failed_conditions.join("; ")));
    }
    let GateInputs { alpha, l, epsilon, beta, lambda, delta, .. } = gate.inputs;
    let ratio = l.powf(delta) * alpha.abs() * (1.0 - epsilon).powf(-beta * delta);
    Ok(c * (1.0 - alpha) * norm_u * lambda.powf(-delta) * (1.0 - epsilon).powf(-(m as f64) * beta * delta)
        / (1.0 - ratio))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHolder {
    pub value: f64,
    pub mode: ScanMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// max over pairs x ≠ y of K of |u(x) − u(y)| / d(x, y)^δ.
pub fn empirical_holder(
    space: &Space,
    u: &ScalarField,
    set: &[PointId],
    delta: f64,
    seed: u64,
) -> Result<EmpiricalHolder> {
    check_delta(delta)?;
    if set.len() < 2 {
        return Ok(EmpiricalHolder {
            value: 0.0,
            mode: ScanMode::Exact,
            note: Some("fewer than two points; seminorm undefined, reported as 0".into()),
        });
    }
    let (value, mode) = pair_max(space.execution(), set, seed, |x, y| {
        let d = space.dist(x, y);
        let du = (u.value(x) - u.value(y)).abs();
        if delta == 1.0 {
            du / d
        } else {
            du / d.powf(delta)
        }
    });
    Ok(EmpiricalHolder { value, mode, note: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantSource {
    Analytic,
    Probed,
    Supplied,
}

/// Safety factor applied to probed D_δ and D_μ.
pub const PROBE_SAFETY: f64 = 1.1;

/// Structural constants and the instantiated C = max{4 L D_δ, 2^δ D_μ² D_δ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D_delta")]
    pub d_delta: f64,
    #[serde(rename = "D_mu")]
    pub d_mu: f64,
    pub source: ConstantSource,
    #[serde(rename = "L")]
    pub l: f64,
    pub delta: f64,
    /// 4 L D_δ, the printed Lipschitz-branch constant.
    pub c_lipschitz_branch: f64,
    /// 2^δ D_μ² D_δ, the continuous-branch constant.
    pub c_continuous_branch: f64,
    /// 2 D_δ (L + 1)^δ, the constant the Lipschitz-branch argument produces.
    pub c_lipschitz_proof_form: f64,
}

impl StructuralConstants {
    pub fn new(d_delta: f64, d_mu: f64, l: f64, delta: f64, source: ConstantSource) -> StructuralConstants {
        let lip = 4.0 * l * d_delta;
        let cont = 2f64.powf(delta) * d_mu * d_mu * d_delta;
        StructuralConstants {
            c: lip.max(cont),
            d_delta,
            d_mu,
            source,
            l,
            delta,
            c_lipschitz_branch: lip,
            c_continuous_branch: cont,
            c_lipschitz_proof_form: 2.0 * d_delta * (l + 1.0).powf(delta),
        }
    }

    /// Analytic constants on built-in spaces, otherwise probes times [`PROBE_SAFETY`].
    pub fn for_space(space: &Space, l: f64, delta: f64, probe: &ProbeConfig) -> Result<StructuralConstants> {
        if let Some(a) = space.analytic() {
            return Ok(StructuralConstants::new(a.d_delta, a.d_mu, l, delta, ConstantSource::Analytic));
        }
        let dd = probe_annular_decay(space, delta, probe)?.estimate * PROBE_SAFETY;
        let dm = probe_doubling(space, probe) * PROBE_SAFETY;
        Ok(StructuralConstants::new(dd, dm, l, delta, ConstantSource::Probed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyInputs {
    pub alpha: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
    pub m: usize,
    /// Residual tolerance for accepting `u` as a fixed point.
    pub tolerance: f64,
    /// Overrides the fitted Lipschitz constant of ρ.
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificatePath {
    /// Closed-form constant of the fixed-point series.
    Series,
    /// α = 0: u = M u, bounded directly by ‖u‖_∞ W_{μ,K_m}.
    MeanValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub gate: ParameterGate,
    pub m: usize,
    pub delta: f64,
    pub theoretical_constant: Option<f64>,
    pub empirical_constant: f64,
    pub empirical_mode: ScanMode,
    pub pass: bool,
    pub constants: StructuralConstants,
    pub path: CertificatePath,
    pub lipschitz_source: String,
    pub residual: f64,
    pub norm_u: f64,
    pub k_m_size: usize,
    pub rho_k_m: f64,
    pub admissible: bool,
    pub radius_bounds_pass: bool,
    pub failed_conditions: Vec<String>,
}

/// Assemble a Hölder certificate for a fixed point `u` of T_α on K_m.
///
/// `pass` requires the parameter gate, admissibility of ρ, the pointwise
/// radius bounds and `empirical ≤ theoretical`.
pub fn certify(
    space: &Space,
    rho: &RadiusField,
    u: &ScalarField,
    inputs: &CertifyInputs,
    constants: impl FnOnce(f64) -> Result<StructuralConstants>,
) -> Result<RegularityCertificate> {
    let CertifyInputs { alpha, epsilon, beta, lambda, delta, m, tolerance, seed, .. } = *inputs;
    if alpha == 1.0 {
        return Err(Error::OutOfScope("α = 1 admits no regularity certificate; the solver may still run".into()));
    }
    check_delta(delta)?;
    if u.len() != space.len() {
        return Err(invalid("field does not match the space"));
    }
    let ops = Averaging::new(space, rho)?;
    let residual = ops.residual(u, alpha);
    if !(residual <= tolerance) {
        return Err(Error::NotFixedPoint { residual, tolerance });
    }
    let (l, lipschitz_source) = match inputs.l {
        Some(l) => (l, "supplied".to_string()),
        None => {
            let mut r = rho.clone();
            let fit = fit_lipschitz(space, &mut r, seed)?;
            (fit.reported, format!("fit (raw {})", fit.raw))
        }
    };
    let constants = constants(l)?;
    let gate = validate_parameters(GateInputs { alpha, l, epsilon, beta, lambda, ell: space.ell()?, delta });
    let admissible = validate_admissible(space, rho)?.pass;
    let radius_bounds_pass = check_radius_bounds(space, rho, RadiusBounds { lambda, beta, epsilon })?.pass;
    let k_m = exhaustion(space, epsilon, m)?;
    let rho_k_m = rho_inf(rho, &k_m);
    let norm_u = u.sup_norm();
    let empirical = empirical_holder(space, u, &k_m, delta, seed)?;
    let (path, theoretical) = if alpha == 0.0 {
        let t = (rho_k_m.is_finite() && rho_k_m > 0.0).then(|| constants.c * norm_u * rho_k_m.powf(-delta));
        (CertificatePath::MeanValue, t)
    } else {
        (CertificatePath::Series, holder_constant_main(&gate, m, norm_u, constants.c).ok())
    };
    let mut failed: Vec<String> = gate.failed_conditions.clone();
    if !admissible {
        failed.push("ρ admissible".into());
    }
    if !radius_bounds_pass {
        failed.push("λ·dist^β ≤ ρ ≤ ε·dist".into());
    }
    let dominated = theoretical.is_some_and(|t| empirical.value <= t);
    if !dominated {
        failed.push("empirical ≤ theoretical".into());
    }
    Ok(RegularityCertificate {
        pass: failed.is_empty(),
        gate,
        m,
        delta,
        theoretical_constant: theoretical,
        empirical_constant: empirical.value,
        empirical_mode: empirical.mode,
        constants,
        path,
        lipschitz_source,
        residual,
        norm_u,
        k_m_size: k_m.len(),
        rho_k_m,
        admissible,
        radius_bounds_pass,
        failed_conditions: failed,
    })
}
