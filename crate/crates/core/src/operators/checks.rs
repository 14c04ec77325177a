//! Checkers for the ball-mean, symmetric-difference, mid-range and
//! iteration inequalities. Each returns a record with both sides and the slack.

use serde::{Deserialize, Serialize};

use super::{symdiff_measure, Averaging, ScalarField};
use crate::error::{invalid, Result};
use crate::pairs::{pair_scatter, ScanMode};
use crate::radius::Modulus;
use crate::space::{Ball, PointId, Space};

/// Absolute tolerance for inequalities that hold exactly in real arithmetic.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative means violated before tolerance.
    pub slack: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(lhs: f64, rhs: f64) -> CheckRecord {
        let slack = rhs - lhs;
        CheckRecord { lhs, rhs, slack, pass: slack >= -ROUNDING_SLACK, branch: None, note: None }
    }

    pub fn branch(mut self, name: &str) -> CheckRecord {
        self.branch = Some(name.to_string());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> CheckRecord {
        self.note = Some(note.into());
        self
    }
}

fn ball_mean(space: &Space, u: &ScalarField, members: &[PointId]) -> f64 {
    let mass: f64 = members.iter().map(|&y| space.weight(y)).sum();
    let s: f64 = members.iter().map(|&y| space.weight(y) * u.value(y)).sum();
    s / mass
}

/// |mean_{B1} u − mean_{B2} u| ≤ 2‖u‖_∞ μ(B1 △ B2) / max{μ(B1), μ(B2)}.
pub fn check_mean_stability(space: &Space, u: &ScalarField, b1: &Ball, b2: &Ball) -> Result<CheckRecord> {
    if b1.members.is_empty() || b2.members.is_empty() {
        return Err(invalid("balls must be nonempty"));
    }
    let lhs = (ball_mean(space, u, &b1.members) - ball_mean(space, u, &b2.members)).abs();
    let a: Vec<u32> = b1.members.iter().map(|&p| p as u32).collect();
    let b: Vec<u32> = b2.members.iter().map(|&p| p as u32).collect();
    let ratio = symdiff_measure(space, &a, &b) / space.measure(&b1.members).max(space.measure(&b2.members));
    Ok(CheckRecord::new(lhs, 2.0 * u.sup_norm() * ratio))
}

/// |M^n u(x) − M^n u(y)| ≤ 2‖u‖_∞ μ(B_x △ B_y)/max{μ(B_x), μ(B_y)} for n = 1..=n_max,
/// one record per (pair, n) in pair-major order.
pub fn check_iterated_mean(
    ops: &Averaging<'_>,
    u: &ScalarField,
    pairs: &[(PointId, PointId)],
    n_max: usize,
) -> Vec<CheckRecord> {
    let norm = u.sup_norm();
    let mut iterates = Vec::with_capacity(n_max);
    let mut v = u.clone();
    for _ in 0..n_max {
        v = ops.apply_t(&v, 0.0);
        iterates.push(v.clone());
    }
    pairs
        .iter()
        .flat_map(|&(x, y)| {
            let rhs = 2.0 * norm * ops.symdiff_ratio(x, y);
            iterates
                .iter()
                .enumerate()
                .map(move |(k, m)| {
                    CheckRecord::new((m.value(x) - m.value(y)).abs(), rhs).branch(&format!("n={}", k + 1))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Constants for the two symmetric-difference bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymdiffConstants {
    #[serde(rename = "L")]
    pub l: f64,
    pub d_delta: f64,
    pub delta: f64,
    pub rho_k: f64,
    pub d_mu: f64,
    /// ω̂_ρ for the continuous branch; the branch is skipped when absent.
    #[serde(default)]
    pub hat: Option<Modulus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymdiffCheck {
    pub ratio: f64,
    pub distance: f64,
    /// Distance slack `2h` added before evaluating the bounds.
    pub slack_distance: f64,
    pub lipschitz: CheckRecord,
    pub continuous: Option<CheckRecord>,
}

/// ratio(x, y) ≤ 4 L D_δ ((d + 2h)/ρ_K)^δ and ratio(x, y) ≤ 2^δ D_μ² D_δ (ω̂(d + 2h)/ρ_K)^δ.
pub fn check_symdiff_bounds(ops: &Averaging<'_>, x: PointId, y: PointId, c: &SymdiffConstants) -> Result<SymdiffCheck> {
    if !(c.rho_k > 0.0) {
        return Err(invalid(format!("rho_K must be positive, got {}", c.rho_k)));
    }
    let space = ops.space();
    let ratio = ops.symdiff_ratio(x, y);
    let distance = space.dist(x, y);
    let slack_distance = 2.0 * space.resolution();
    let d = distance + slack_distance;
    let lipschitz = CheckRecord::new(ratio, 4.0 * c.l * c.d_delta * (d / c.rho_k).powf(c.delta)).branch("lipschitz");
    let continuous = c.hat.as_ref().map(|hat| {
        let cc = 2f64.powf(c.delta) * c.d_mu * c.d_mu * c.d_delta;
        CheckRecord::new(ratio, cc * (hat.eval(d) / c.rho_k).powf(c.delta)).branch("continuous")
    });
    Ok(SymdiffCheck { ratio, distance, slack_distance, lipschitz, continuous })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPair {
    /// max over s ∈ B_x of dist(s, B_y).
    pub sup_inf_xy: f64,
    /// max over t ∈ B_y of dist(t, B_x).
    pub sup_inf_yx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    pub skipped: bool,
    pub gaps: Option<GapPair>,
    /// Required: (g1 + g2)/2 ≤ ω̂(d) + 2h.
    pub symmetrized: Option<CheckRecord>,
    /// Informational one-sided bounds in the printed and transposed orientation.
    pub one_sided: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn sup_inf(space: &Space, a: &[u32], b: &[u32]) -> f64 {
    a.iter()
        .map(|&s| b.iter().map(|&t| space.dist(s as usize, t as usize)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Exhaustive sup-inf gaps between B_x and B_y with the mid-range geometry checks.
pub fn hausdorff_gaps(ops: &Averaging<'_>, x: PointId, y: PointId, hat: &Modulus) -> GapCheck {
    let space = ops.space();
    if !space.is_geodesic() {
        return GapCheck {
            skipped: true,
            gaps: None,
            symmetrized: None,
            one_sided: Vec::new(),
            note: Some("space is not flagged geodesic; check skipped".into()),
        };
    }
    let (bx, by) = (ops.members(x), ops.members(y));
    let g = GapPair { sup_inf_xy: sup_inf(space, bx, by), sup_inf_yx: sup_inf(space, by, bx) };
    let d = space.dist(x, y);
    let slack = 2.0 * space.resolution();
    let (rx, ry) = (ops.radius(x), ops.radius(y));
    let plus = (d + rx - ry).max(0.0) + slack;
    let minus = (d + ry - rx).max(0.0) + slack;
    let symmetrized = CheckRecord::new(0.5 * (g.sup_inf_xy + g.sup_inf_yx), hat.eval(d) + slack).branch("symmetrized");
    let one_sided = vec![
        CheckRecord::new(g.sup_inf_yx, plus).branch("printed: yx vs d+ρ(x)−ρ(y)"),
        CheckRecord::new(g.sup_inf_xy, minus).branch("printed: xy vs d+ρ(y)−ρ(x)"),
        CheckRecord::new(g.sup_inf_xy, plus).branch("transposed: xy vs d+ρ(x)−ρ(y)"),
        CheckRecord::new(g.sup_inf_yx, minus).branch("transposed: yx vs d+ρ(y)−ρ(x)"),
    ];
    GapCheck { skipped: false, gaps: Some(g), symmetrized: Some(symmetrized), one_sided, note: None }
}

/// Least concave majorant of `(d(x, y), |u(x) − u(y)|)` over pairs of `set`.
pub fn empirical_modulus(space: &Space, u: &ScalarField, set: &[PointId], seed: u64) -> Result<(Modulus, ScanMode)> {
    let diam = space.diameter();
    let (scatter, mode) =
        pair_scatter(space.execution(), set, seed, |x, y| Some((space.dist(x, y), (u.value(x) - u.value(y)).abs())));
    Ok((Modulus::concave_majorant(&scatter, diam)?, mode))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TModulusCheck {
    pub pass: bool,
    pub min_slack: f64,
    /// `(t, record)` at the sampled pair distances.
    pub records: Vec<(f64, CheckRecord)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

const T_SAMPLES: usize = 256;

/// ω_{T_α u, K}(t) ≤ |α| ω_{u, K̃}(ω̂(t)) + (1 − α) ‖u‖_∞ W(t) at the pair distances of K.
pub fn check_t_modulus(
    ops: &Averaging<'_>,
    u: &ScalarField,
    alpha: f64,
    k: &[PointId],
    w: &(dyn Fn(f64) -> f64 + Sync),
    hat: &Modulus,
    seed: u64,
) -> Result<TModulusCheck> {
    let space = ops.space();
    let tu = ops.apply_t(u, alpha);
    let (lhs_mod, _) = empirical_modulus(space, &tu, k, seed)?;
    let mut mask = vec![false; space.len()];
    for &x in k {
        for &y in ops.members(x) {
            mask[y as usize] = true;
        }
    }
    let hull: Vec<usize> = (0..space.len()).filter(|&y| mask[y]).collect();
    let (rhs_mod, _) = empirical_modulus(space, u, &hull, seed)?;
    let (scatter, _) = pair_scatter(space.execution(), k, seed, |x, y| Some((space.dist(x, y), 0.0)));
    let ts: Vec<f64> = if scatter.len() <= T_SAMPLES {
        scatter.iter().map(|p| p.0).collect()
    } else {
        (0..T_SAMPLES).map(|i| scatter[i * (scatter.len() - 1) / (T_SAMPLES - 1)].0).collect()
    };
    let norm = u.sup_norm();
    let records: Vec<(f64, CheckRecord)> = ts
        .into_iter()
        .map(|t| {
            let rhs = alpha.abs() * rhs_mod.eval(hat.eval(t)) + (1.0 - alpha) * norm * w(t);
            (t, CheckRecord::new(lhs_mod.eval(t), rhs))
        })
        .collect();
    let min_slack = records.iter().map(|r| r.1.slack).fold(f64::INFINITY, f64::min);
    Ok(TModulusCheck {
        pass: records.iter().all(|r| r.1.pass),
        min_slack,
        records,
        note: (alpha.abs() > 1.0).then(|| "|α| > 1 lies outside the hypotheses of this bound".to_string()),
    })
}
