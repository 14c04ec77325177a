//! Parameter gates for the equicontinuity and Hölder regularity results.

use serde::{Deserialize, Serialize};

/// Relative guard used for strict inequalities, so exact ties fail on
/// every side of a comparison regardless of rounding.
pub const STRICT_GUARD: f64 = 1e-12;

/// `a < b` with a relative safety margin; `b = +∞` always holds for finite `a`.
pub fn strictly_less(a: f64, b: f64) -> bool {
    if b == f64::INFINITY {
        return a.is_finite();
    }
    a < b - STRICT_GUARD * b.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Condition {
    fn new(name: &str, holds: bool, lhs: f64, rhs: f64) -> Condition {
        Condition { name: name.to_string(), holds, lhs, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub pass: bool,
    pub conditions: Vec<Condition>,
    pub failed_conditions: Vec<String>,
    pub beta_max: f64,
}

impl GateVerdict {
    fn from_conditions(conditions: Vec<Condition>, beta_max: f64) -> GateVerdict {
        let failed_conditions: Vec<String> = conditions.iter().filter(|c| !c.holds).map(|c| c.name.clone()).collect();
        GateVerdict { pass: failed_conditions.is_empty(), conditions, failed_conditions, beta_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateInputs {
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub lambda: f64,
    /// ℓ(Ω), the largest distance to the boundary.
    pub ell: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGate {
    #[serde(flatten)]
    pub inputs: GateInputs,
    pub pass: bool,
    pub conditions: Vec<Condition>,
    pub failed_conditions: Vec<String>,
    pub beta_max: f64,
    pub lambda_max: f64,
    /// L^δ |α| (1−ε)^{−βδ}, the ratio of the fixed-point series.
    pub series_ratio: f64,
    /// Gate with L replaced by 1 (equicontinuity of the iterates).
    pub equicontinuity: GateVerdict,
}

/// log(1/(k|α|)) / log(1/(1−ε)); +∞ at α = 0.
pub fn beta_upper(k_alpha: f64, epsilon: f64) -> f64 {
    if k_alpha == 0.0 {
        return f64::INFINITY;
    }
    (-k_alpha.ln()) / (-(-epsilon).ln_1p())
}

fn delta_condition(delta: f64) -> Condition {
    Condition::new("0 < δ ≤ 1", delta > 0.0 && delta <= 1.0, delta, 1.0)
}

/// |α| < 1, 0 < ε < 1 − |α|, 1 ≤ β < log(1/|α|)/log(1/(1−ε)).
pub fn equicontinuity_conditions(alpha: f64, epsilon: f64, beta: f64) -> GateVerdict {
    let a = alpha.abs();
    let beta_max = beta_upper(a, epsilon);
    let eps_ok = epsilon > 0.0 && strictly_less(epsilon, 1.0 - a);
    let conditions = vec![
        Condition::new("|α| < 1", strictly_less(a, 1.0), a, 1.0),
        Condition::new("0 < ε < 1 − |α|", eps_ok, epsilon, 1.0 - a),
        Condition::new("1 ≤ β", beta >= 1.0, beta, 1.0),
        Condition::new("β < log(1/|α|)/log(1/(1−ε))", eps_ok && strictly_less(beta, beta_max), beta, beta_max),
    ];
    GateVerdict::from_conditions(conditions, beta_max)
}

/// Evaluates every condition of the Hölder regularity gate and the
/// equicontinuity gate as a separate verdict.
pub fn validate_parameters(inputs: GateInputs) -> ParameterGate {
    let GateInputs { alpha, l, epsilon, beta, lambda, ell, delta } = inputs;
    let a = alpha.abs();
    let la = l * a;
    let beta_max = beta_upper(la, epsilon);
    let lambda_max = ell.powf(1.0 - beta) * epsilon;
    let eps_ok = epsilon > 0.0 && strictly_less(epsilon, 1.0 - la);
    let conditions = vec![
        Condition::new("L ≥ 1", l >= 1.0, l, 1.0),
        Condition::new("|α| < 1/L", strictly_less(a, 1.0 / l), a, 1.0 / l),
        Condition::new("0 < ε < 1 − L|α|", eps_ok, epsilon, 1.0 - la),
        Condition::new("1 ≤ β", beta >= 1.0, beta, 1.0),
        Condition::new("β < log(1/(L|α|))/log(1/(1−ε))", eps_ok && strictly_less(beta, beta_max), beta, beta_max),
        Condition::new("0 < λ ≤ ℓ(Ω)^(1−β)·ε", lambda > 0.0 && lambda <= lambda_max, lambda, lambda_max),
        delta_condition(delta),
    ];
    let verdict = GateVerdict::from_conditions(conditions, beta_max);
    ParameterGate {
        inputs,
        pass: verdict.pass,
        conditions: verdict.conditions,
        failed_conditions: verdict.failed_conditions,
        beta_max,
        lambda_max,
        series_ratio: l.powf(delta) * a * (1.0 - epsilon).powf(-beta * delta),
        equicontinuity: equicontinuity_conditions(alpha, epsilon, beta),
    }
}
