//! Admissible radius functions, their moduli of continuity, the exhaustion
//! `K_m`, hulls of point sets and the parameter gates.

mod gate;
mod modulus;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pairs::{pair_max, pair_scatter, ScanMode};
use crate::space::{PointId, Space};

pub use gate::{
    beta_upper, equicontinuity_conditions, strictly_less, validate_parameters, Condition, GateInputs, GateVerdict,
    ParameterGate, STRICT_GUARD,
};
pub use modulus::{hat_modulus, iterate_modulus, Modulus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzFit {
    pub raw: f64,
    /// `max(raw, 1)`, the value used downstream.
    pub reported: f64,
    pub mode: ScanMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub gamma: f64,
    pub coefficient: f64,
    pub mode: ScanMode,
}

/// Per-point radius values with fitted regularity metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusField {
    values: Vec<f64>,
    lipschitz: Option<LipschitzFit>,
    holder: Vec<HolderFit>,
}

impl RadiusField {
    pub fn new(values: Vec<f64>) -> RadiusField {
        RadiusField { values, lipschitz: None, holder: Vec::new() }
    }

    /// ρ(x) = f(x, dist(x, ∂Ω)).
    pub fn from_boundary_distance(space: &Space, f: impl Fn(PointId, f64) -> f64) -> Result<RadiusField> {
        let d = space.boundary_distances()?;
        Ok(RadiusField::new((0..space.len()).map(|x| f(x, d[x])).collect()))
    }

    /// ρ(x) = factor · dist(x, ∂Ω).
    pub fn proportional(space: &Space, factor: f64) -> Result<RadiusField> {
        RadiusField::from_boundary_distance(space, |_, d| factor * d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: PointId) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lipschitz(&self) -> Option<&LipschitzFit> {
        self.lipschitz.as_ref()
    }

    pub fn holder_fits(&self) -> &[HolderFit] {
        &self.holder
    }

    /// Read `id,rho` rows; every point of `space` must appear exactly once.
    pub fn read_csv<R: Read>(space: &Space, reader: R) -> Result<RadiusField> {
        Ok(RadiusField::new(crate::io::read_point_values(space, reader, "rho")?))
    }

    pub fn load_csv(space: &Space, path: impl AsRef<Path>) -> Result<RadiusField> {
        RadiusField::read_csv(space, std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, space: &Space, writer: W) -> Result<()> {
        crate::io::write_point_values(space, &self.values, writer, "rho")
    }
}

fn check_len(space: &Space, rho: &RadiusField) -> Result<()> {
    if rho.len() != space.len() {
        return Err(invalid(format!("radius field has {} values for {} points", rho.len(), space.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusViolation {
    pub id: i64,
    pub rho: f64,
    pub dist_to_boundary: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub violations: Vec<RadiusViolation>,
    /// Components of the interior under the ball-overlap graph (informational).
    pub overlap_components: usize,
}

/// 0 < ρ ≤ dist(·, ∂Ω) on the interior and ρ = 0 on the boundary.
pub fn validate_admissible(space: &Space, rho: &RadiusField) -> Result<AdmissibilityReport> {
    check_len(space, rho)?;
    let dist = space.boundary_distances()?;
    let mut violations = Vec::new();
    for (x, &d) in dist.iter().enumerate() {
        let r = rho.value(x);
        let reason = if !r.is_finite() {
            Some("radius is not finite")
        } else if space.is_boundary(x) {
            (r != 0.0).then_some("boundary radius must be zero")
        } else if !(r > 0.0) {
            Some("interior radius must be positive")
        } else if r > d {
            Some("radius exceeds the distance to the boundary")
        } else {
            None
        };
        if let Some(reason) = reason {
            violations.push(RadiusViolation { id: space.label(x), rho: r, dist_to_boundary: d, reason: reason.into() });
        }
    }
    let overlap_components = if violations.is_empty() { overlap_components(space, rho) } else { 0 };
    Ok(AdmissibilityReport { pass: violations.is_empty(), violations, overlap_components })
}

fn overlap_components(space: &Space, rho: &RadiusField) -> usize {
    let n = space.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &x in space.interior() {
        for y in space.ball_members(x, rho.value(x)) {
            let (a, b) = (find(&mut parent, x), find(&mut parent, y));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut roots: Vec<usize> = space.interior().iter().map(|&x| find(&mut parent, x)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

fn ratio_checked(space: &Space, rho: &RadiusField, x: usize, y: usize, gamma: f64) -> f64 {
    let d = space.dist(x, y);
    let dv = (rho.value(x) - rho.value(y)).abs();
    if d == 0.0 {
        return if dv == 0.0 { 0.0 } else { f64::NAN };
    }
    if gamma == 1.0 {
        dv / d
    } else {
        dv / d.powf(gamma)
    }
}

/// max |ρ(x) − ρ(y)| / d(x, y) over all pairs (sampled above the exact limit).
/// The fit is stored on the field.
pub fn fit_lipschitz(space: &Space, rho: &mut RadiusField, seed: u64) -> Result<LipschitzFit> {
    check_len(space, rho)?;
    if space.len() < 2 {
        return Err(invalid("a Lipschitz fit needs at least two points"));
    }
    let all: Vec<usize> = (0..space.len()).collect();
    let (raw, mode) = pair_max(space.execution(), &all, seed, |x, y| ratio_checked(space, rho, x, y, 1.0));
    if raw.is_nan() {
        return Err(invalid("radius field differs between points at distance zero"));
    }
    let fit = LipschitzFit { raw, reported: raw.max(1.0), mode };
    rho.lipschitz = Some(fit);
    Ok(fit)
}

/// max |ρ(x) − ρ(y)| / d(x, y)^γ; the fit is appended to the field.
pub fn fit_holder(space: &Space, rho: &mut RadiusField, gamma: f64, seed: u64) -> Result<HolderFit> {
    check_len(space, rho)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let all: Vec<usize> = (0..space.len()).collect();
    let (c, mode) = pair_max(space.execution(), &all, seed, |x, y| ratio_checked(space, rho, x, y, gamma));
    if c.is_nan() {
        return Err(invalid("radius field differs between points at distance zero"));
    }
    let fit = HolderFit { gamma, coefficient: c, mode };
    rho.holder.push(fit);
    Ok(fit)
}

/// Concave majorant of the scatter `(d(x,y), |ρ(x) − ρ(y)|)`, capped at diam Ω.
pub fn fit_modulus(space: &Space, rho: &RadiusField, seed: u64) -> Result<Modulus> {
    check_len(space, rho)?;
    let all: Vec<usize> = (0..space.len()).collect();
    let (scatter, _) = pair_scatter(space.execution(), &all, seed, |x, y| {
        Some((space.dist(x, y), (rho.value(x) - rho.value(y)).abs()))
    });
    let diam = space.diameter();
    Ok(Modulus::concave_majorant(&scatter, diam)?.capped(diam))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub lambda: f64,
    pub beta: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub id: i64,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusBoundsReport {
    pub pass: bool,
    pub parameters_ok: bool,
    pub lambda_window_ok: bool,
    pub lambda_max: f64,
    pub violations: Vec<BoundViolation>,
}

/// λ·dist^β ≤ ρ ≤ ε·dist on every interior point, plus the parameter window
/// β ≥ 1, 0 < ε < 1, 0 < λ ≤ ℓ(Ω)^{1−β}·ε (recorded, the scan still runs).
pub fn check_radius_bounds(space: &Space, rho: &RadiusField, b: RadiusBounds) -> Result<RadiusBoundsReport> {
    check_len(space, rho)?;
    let dist = space.boundary_distances()?;
    let ell = space.ell()?;
    let lambda_max = ell.powf(1.0 - b.beta) * b.epsilon;
    let parameters_ok = b.beta >= 1.0 && b.epsilon > 0.0 && b.epsilon < 1.0;
    let lambda_window_ok = b.lambda > 0.0 && b.lambda <= lambda_max;
    let violations: Vec<BoundViolation> = space
        .interior()
        .iter()
        .filter_map(|&x| {
            let d = dist[x];
            let lower = b.lambda * if b.beta == 1.0 { d } else { d.powf(b.beta) };
            let upper = b.epsilon * d;
            let r = rho.value(x);
            (!(lower <= r && r <= upper)).then(|| BoundViolation { id: space.label(x), rho: r, lower, upper })
        })
        .collect();
    Ok(RadiusBoundsReport {
        pass: parameters_ok && lambda_window_ok && violations.is_empty(),
        parameters_ok,
        lambda_window_ok,
        lambda_max,
        violations,
    })
}

/// K_m = {x interior : dist(x, ∂Ω) ≥ (1−ε)^m}, sorted; possibly empty.
pub fn exhaustion(space: &Space, epsilon: f64, m: usize) -> Result<Vec<PointId>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if m < 1 {
        return Err(invalid("exhaustion index m must be at least 1"));
    }
    let threshold = (1.0 - epsilon).powi(m as i32);
    let dist = space.boundary_distances()?;
    Ok(space.interior().iter().copied().filter(|&x| dist[x] >= threshold).collect())
}

/// Union of the balls B̄(x, ρ(x)) over x ∈ G, sorted.
pub fn hull(space: &Space, rho: &RadiusField, set: &[PointId]) -> Result<Vec<PointId>> {
    check_len(space, rho)?;
    let mut mask = vec![false; space.len()];
    for &x in set {
        if x >= space.len() {
            return Err(Error::UnknownPoint(x));
        }
        for y in space.ball_members(x, rho.value(x)) {
            mask[y] = true;
        }
    }
    Ok((0..space.len()).filter(|&y| mask[y]).collect())
}

/// ρ_G = inf over G of ρ (+∞ on the empty set).
pub fn rho_inf(rho: &RadiusField, set: &[PointId]) -> f64 {
    set.iter().map(|&x| rho.value(x)).fold(f64::INFINITY, f64::min)
}
