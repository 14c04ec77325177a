//! Fixed-point iteration for T_α u = u with Dirichlet data, the iterate
//! modulus bound and the root-test equicontinuity gate.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operators::{empirical_modulus, Averaging, ScalarField};
use crate::radius::{
    equicontinuity_conditions, exhaustion, validate_admissible, Condition, GateVerdict, Modulus, RadiusField,
};
use crate::regularity::{partial_series, HatIterates, ModulusFamily};
use crate::space::{PointId, Space};

fn default_snapshot_epsilon() -> f64 {
    0.5
}

fn default_snapshot_m() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Snapshot cadence for the iterate modulus on K_m; 0 disables snapshots.
    #[serde(default)]
    pub record_every: usize,
    #[serde(default = "default_snapshot_epsilon")]
    pub snapshot_epsilon: f64,
    #[serde(default = "default_snapshot_m")]
    pub snapshot_m: usize,
}

impl SolveConfig {
    pub fn new(alpha: f64, tolerance: f64, max_iterations: usize) -> SolveConfig {
        SolveConfig {
            alpha,
            tolerance,
            max_iterations,
            record_every: 0,
            snapshot_epsilon: default_snapshot_epsilon(),
            snapshot_m: default_snapshot_m(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(invalid("alpha must be finite"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusSnapshot {
    pub iteration: usize,
    pub m: usize,
    pub modulus: Modulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// Singleton-ball points take the value of their nearest boundary point,
    /// the rest the mean of the boundary data.
    Collar,
    Supplied,
}

/// Everything in a solve except the field itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub alpha: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub modulus_snapshots: Vec<ModulusSnapshot>,
    pub initial_guess: InitialGuess,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub field: ScalarField,
    pub stats: SolveStats,
}

/// Boundary data as `(point, value)` rows covering every boundary point exactly once.
pub fn check_boundary_data(space: &Space, data: &[(PointId, f64)]) -> Result<Vec<f64>> {
    let mut values = vec![f64::NAN; space.len()];
    let mut seen = vec![false; space.len()];
    for &(x, v) in data {
        if x >= space.len() {
            return Err(Error::UnknownPoint(x));
        }
        if !space.is_boundary(x) {
            return Err(invalid(format!("point id {} is not a boundary point", space.label(x))));
        }
        if !v.is_finite() {
            return Err(invalid(format!("boundary value at point id {} is not finite", space.label(x))));
        }
        if std::mem::replace(&mut seen[x], true) {
            return Err(invalid(format!("duplicate boundary value for point id {}", space.label(x))));
        }
        values[x] = v;
    }
    if let Some(&b) = space.boundary().iter().find(|&&b| !seen[b]) {
        return Err(invalid(format!("missing boundary value for point id {}", space.label(b))));
    }
    Ok(values)
}

/// Read `id,value` boundary rows.
pub fn read_boundary_csv<R: Read>(space: &Space, reader: R) -> Result<Vec<(PointId, f64)>> {
    let rows = crate::io::read_point_rows(space, reader, "value")?;
    check_boundary_data(space, &rows)?;
    Ok(rows)
}

fn collar_guess(ops: &Averaging<'_>, boundary_values: &[f64]) -> Vec<f64> {
    let space = ops.space();
    let b = space.boundary();
    let mean = b.iter().map(|&x| boundary_values[x]).sum::<f64>() / b.len() as f64;
    (0..space.len())
        .map(|x| {
            if space.is_boundary(x) {
                boundary_values[x]
            } else if ops.members(x).len() == 1 {
                let mut best = (f64::INFINITY, usize::MAX);
                for &y in b {
                    let d = space.dist(x, y);
                    if d < best.0 {
                        best = (d, y);
                    }
                }
                boundary_values[best.1]
            } else {
                mean
            }
        })
        .collect()
}

/// Synchronous iteration u_{n+1} = T_α u_n with boundary values held fixed.
///
/// Stops at the first iterate whose residual ‖T_α u − u‖ on the interior is
/// within tolerance; that iterate is returned. Otherwise the last iterate is
/// returned with its residual recomputed.
pub fn solve_dirichlet(
    space: &Space,
    rho: &RadiusField,
    boundary: &[(PointId, f64)],
    config: &SolveConfig,
    initial: Option<&ScalarField>,
) -> Result<SolveReport> {
    config.validate()?;
    let adm = validate_admissible(space, rho)?;
    if !adm.pass {
        let v = &adm.violations[0];
        return Err(Error::NotAdmissible(format!(
            "{} violating points, first at id {}: {}",
            adm.violations.len(),
            v.id,
            v.reason
        )));
    }
    let bvals = check_boundary_data(space, boundary)?;
    let ops = Averaging::new(space, rho)?;
    let (mut cur, initial_guess) = match initial {
        Some(u0) => {
            if u0.len() != space.len() || !u0.is_finite() {
                return Err(invalid("initial field must be finite with one value per point"));
            }
            let mut v = u0.values().to_vec();
            for &b in space.boundary() {
                v[b] = bvals[b];
            }
            (v, InitialGuess::Supplied)
        }
        None => (collar_guess(&ops, &bvals), InitialGuess::Collar),
    };
    let k_snap = if config.record_every > 0 {
        exhaustion(space, config.snapshot_epsilon, config.snapshot_m)?
    } else {
        Vec::new()
    };
    let interior = space.interior();
    let mut next = vec![0.0; space.len()];
    let mut history = Vec::new();
    let mut snapshots = Vec::new();
    let alpha = config.alpha;
    for it in 0..config.max_iterations {
        if config.record_every > 0 && it % config.record_every == 0 {
            let (modulus, _) = empirical_modulus(space, &ScalarField::new(cur.clone()), &k_snap, 0)?;
            snapshots.push(ModulusSnapshot { iteration: it, m: config.snapshot_m, modulus });
        }
        ops.apply_t_into(&cur, alpha, &mut next);
        let res = crate::par::max(ops.execution(), interior.len(), 0.0, |k| {
            let x = interior[k];
            (next[x] - cur[x]).abs()
        });
        history.push(res);
        if res <= config.tolerance {
            return Ok(SolveReport {
                field: ScalarField::new(cur),
                stats: SolveStats {
                    alpha,
                    iterations_used: it,
                    converged: true,
                    final_residual: res,
                    residual_history: history,
                    modulus_snapshots: snapshots,
                    initial_guess,
                },
            });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let final_residual = ops.residual_raw(&cur, alpha);
    Ok(SolveReport {
        field: ScalarField::new(cur),
        stats: SolveStats {
            alpha,
            iterations_used: config.max_iterations,
            converged: final_residual <= config.tolerance,
            final_residual,
            residual_history: history,
            modulus_snapshots: snapshots,
            initial_guess,
        },
    })
}

/// Inputs of the iterated modulus bound.
pub struct IterateBoundInputs<'a> {
    pub alpha: f64,
    /// ω_{u,K_{m+n}}.
    pub u_modulus: &'a Modulus,
    pub norm_u: f64,
    pub family: &'a dyn ModulusFamily,
    pub iterates: &'a HatIterates,
}

/// |α|^n ω_{u,K_{m+n}}(ω̂^{(n)}(t)) + (1 − α)‖u‖_∞ Σ_{j<n} |α|^j W_{K_{m+j}}(ω̂^{(j)}(t)).
pub fn iterate_modulus_bound(m: usize, n: usize, t: f64, inputs: &IterateBoundInputs<'_>) -> Result<f64> {
    let alpha = inputs.alpha;
    if alpha.abs() > 1.0 {
        return Err(invalid(format!("|alpha| must be at most 1, got {alpha}")));
    }
    let lead = alpha.abs().powi(n as i32) * inputs.u_modulus.eval(inputs.iterates.iterate(n, t)?);
    let sum = partial_series(m, n, t, alpha, inputs.family, inputs.iterates)?;
    Ok(lead + (1.0 - alpha) * inputs.norm_u * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootTest {
    /// |α| · max over j ∈ [j_max/2, j_max) of W_{j+1}(diam)/W_j(diam).
    pub margin: f64,
    /// |α| · max over j ∈ [j_max/2, j_max] of W_j(diam)^{1/j}.
    pub root_surrogate: f64,
    pub pass: bool,
}

/// Finite-j surrogate for |α| limsup_j W_{μ,K_j}(diam Ω)^{1/j}.
///
/// The j-th root carries the prefactor C ρ^{−δ} ω̂(diam)^δ to the power 1/j,
/// which decays too slowly to be negligible at j ≈ 40. The margin therefore
/// uses the consecutive ratio over the upper half of the range, which has the
/// same limit and is exact for geometric families. The root form is reported
/// alongside it.
pub fn root_test_margin(alpha: f64, family: &dyn ModulusFamily, diam: f64, j_max: usize) -> Result<RootTest> {
    if j_max < 4 {
        return Err(invalid("j_max must be at least 4"));
    }
    let a = alpha.abs();
    let w: Vec<f64> = (0..=j_max).map(|j| family.member(j).map(|m| m.eval(diam))).collect::<Result<_>>()?;
    let lo = j_max / 2;
    let ratio = (lo..j_max).map(|j| w[j + 1] / w[j]).fold(0.0, f64::max);
    let root = (lo.max(1)..=j_max).map(|j| w[j].powf(1.0 / j as f64)).fold(0.0, f64::max);
    let margin = if a == 0.0 { 0.0 } else { a * ratio };
    Ok(RootTest {
        margin,
        root_surrogate: if a == 0.0 { 0.0 } else { a * root },
        pass: crate::radius::strictly_less(margin, 1.0),
    })
}

/// |α| < 1, 0 < ε < 1 − |α| and 1 ≤ β < log(1/|α|)/log(1/(1−ε)), with δ ∈ (0, 1].
pub fn equicontinuity_gate(alpha: f64, epsilon: f64, beta: f64, delta: f64) -> GateVerdict {
    let mut v = equicontinuity_conditions(alpha, epsilon, beta);
    let ok = delta > 0.0 && delta <= 1.0;
    v.conditions.push(Condition { name: "0 < δ ≤ 1".into(), holds: ok, lhs: delta, rhs: 1.0 });
    if !ok {
        v.failed_conditions.push("0 < δ ≤ 1".into());
        v.pass = false;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::{AnalyticFamily, WKind};
    use crate::space::{interval_grid, square_grid};

    fn boundary_of(space: &Space, g: impl Fn(&[f64]) -> f64) -> Vec<(PointId, f64)> {
        space.boundary().iter().map(|&b| (b, g(space.coords(b).unwrap()))).collect()
    }

    #[test]
    fn linear_is_fixed_at_iteration_zero() {
        let s = interval_grid(257);
        let rho = RadiusField::proportional(&s, 0.4).unwrap();
        let lin = ScalarField::from_fn(&s, |x| s.coords(x).unwrap()[0]);
        for alpha in [-0.2, 0.0, 0.3, 0.9] {
            let cfg = SolveConfig::new(alpha, 1e-12, 10);
            let rep = solve_dirichlet(&s, &rho, &boundary_of(&s, |c| c[0]), &cfg, Some(&lin)).unwrap();
            assert!(rep.stats.converged);
            assert_eq!(rep.stats.iterations_used, 0);
            assert_eq!(rep.field, lin);
        }
    }

    #[test]
    fn constants_converge_immediately() {
        let s = square_grid(17);
        let rho = RadiusField::proportional(&s, 0.4).unwrap();
        let rep = solve_dirichlet(&s, &rho, &boundary_of(&s, |_| 2.5), &SolveConfig::new(0.3, 1e-12, 5), None).unwrap();
        assert_eq!(rep.stats.final_residual, 0.0);
        assert!(rep.field.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn refuses_bad_inputs() {
        let s = interval_grid(33);
        let rho = RadiusField::proportional(&s, 2.0).unwrap();
        let b = boundary_of(&s, |c| c[0]);
        let cfg = SolveConfig::new(0.0, 1e-10, 10);
        assert!(matches!(solve_dirichlet(&s, &rho, &b, &cfg, None), Err(Error::NotAdmissible(_))));
        let ok = RadiusField::proportional(&s, 0.4).unwrap();
        assert!(solve_dirichlet(&s, &ok, &[(0, f64::NAN), (32, 1.0)], &cfg, None).is_err());
        assert!(solve_dirichlet(&s, &ok, &[(0, 0.0)], &cfg, None).is_err());
        assert!(solve_dirichlet(&s, &ok, &b, &SolveConfig::new(0.0, 0.0, 10), None).is_err());
    }

    #[test]
    fn root_test_examples() {
        let hat = Modulus::identity(1.0);
        let fam =
            AnalyticFamily { kind: WKind::AdCont { hat }, c: 8.0, delta: 1.0, lambda: 0.4, epsilon: 0.5, beta: 1.0 };
        assert_eq!(root_test_margin(0.0, &fam, 1.0, 40).unwrap().margin, 0.0);
        let r = root_test_margin(0.3, &fam, 1.0, 40).unwrap();
        assert!((r.margin - 0.6).abs() < 1e-12 && r.pass);
        let r = root_test_margin(0.6, &fam, 1.0, 40).unwrap();
        assert!((r.margin - 1.2).abs() < 1e-12 && !r.pass);
        assert!(root_test_margin(0.3, &fam, 1.0, 3).is_err());
    }

    #[test]
    fn gate_examples() {
        assert!(equicontinuity_gate(0.3, 0.5, 1.0, 1.0).pass);
        assert!(!equicontinuity_gate(0.3, 0.8, 1.0, 1.0).pass);
        assert!(equicontinuity_gate(0.0, 0.9, 4.0, 0.5).pass);
    }

    #[test]
    fn iterate_bound_examples() {
        let hat = Modulus::identity(1.0);
        let fam = AnalyticFamily {
            kind: WKind::AdCont { hat: hat.clone() },
            c: 8.0,
            delta: 1.0,
            lambda: 0.4,
            epsilon: 0.5,
            beta: 1.0,
        };
        let it = HatIterates::Exact { hat };
        let um = Modulus::lipschitz(1.0, 1.0).unwrap();
        let t = 0.05;
        let inputs = |alpha| IterateBoundInputs { alpha, u_modulus: &um, norm_u: 1.0, family: &fam, iterates: &it };
        assert_eq!(iterate_modulus_bound(2, 0, t, &inputs(0.3)).unwrap(), um.eval(t));
        let w2 = fam.member(2).unwrap().eval(t);
        assert_eq!(iterate_modulus_bound(2, 1, t, &inputs(0.0)).unwrap(), w2);
        let n = 4;
        let mut oracle = 0.3f64.powi(4) * t;
        let mut sum = 0.0;
        for j in 0..n {
            sum += 0.3f64.powi(j) * fam.member(2 + j as usize).unwrap().eval(t);
        }
        oracle += 0.7 * sum;
        let got = iterate_modulus_bound(2, n as usize, t, &inputs(0.3)).unwrap();
        assert!((got - oracle).abs() < 1e-12 * oracle);
    }
}
