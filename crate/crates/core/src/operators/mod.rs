//! The averaging operators M, S and T_α over the balls B_x = B̄(x, ρ(x)),
//! and checkers for the inequalities they satisfy.

mod checks;

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Result};
use crate::par::{self, Execution};
use crate::radius::RadiusField;
use crate::space::{PointId, Space};

pub use checks::{
    check_iterated_mean, check_mean_stability, check_symdiff_bounds, check_t_modulus, empirical_modulus,
    hausdorff_gaps, CheckRecord, GapCheck, GapPair, SymdiffCheck, SymdiffConstants, TModulusCheck,
};

/// A real value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> ScalarField {
        ScalarField { values }
    }

    pub fn constant(n: usize, c: f64) -> ScalarField {
        ScalarField { values: vec![c; n] }
    }

    pub fn from_fn(space: &Space, f: impl Fn(PointId) -> f64) -> ScalarField {
        ScalarField { values: (0..space.len()).map(f).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
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

    /// ‖u‖_∞ over every point.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn read_csv<R: Read>(space: &Space, reader: R) -> Result<ScalarField> {
        let values = crate::io::read_point_values(space, reader, "value")?;
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("field value for point id {} is not finite", space.label(x))));
        }
        Ok(ScalarField::new(values))
    }

    pub fn load_csv(space: &Space, path: impl AsRef<Path>) -> Result<ScalarField> {
        ScalarField::read_csv(space, std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, space: &Space, writer: W) -> Result<()> {
        crate::io::write_point_values(space, &self.values, writer, "value")
    }
}

/// Ball family `B_x` of a radius field, precomputed once in CSR form
/// together with the ball measures.
#[derive(Debug, Clone)]
pub struct Averaging<'a> {
    space: &'a Space,
    radii: Vec<f64>,
    offsets: Vec<usize>,
    members: Vec<u32>,
    masses: Vec<f64>,
    execution: Execution,
}

impl<'a> Averaging<'a> {
    pub fn new(space: &'a Space, rho: &RadiusField) -> Result<Averaging<'a>> {
        Averaging::with_execution(space, rho, space.execution())
    }

    pub fn with_execution(space: &'a Space, rho: &RadiusField, execution: Execution) -> Result<Averaging<'a>> {
        if rho.len() != space.len() {
            return Err(invalid(format!("radius field has {} values for {} points", rho.len(), space.len())));
        }
        if u32::try_from(space.len()).is_err() {
            return Err(invalid("spaces beyond u32::MAX points are not supported"));
        }
        if let Some(x) = rho.values().iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(invalid(format!("radius at point id {} must be finite and nonnegative", space.label(x))));
        }
        let balls: Vec<Vec<u32>> = par::map(execution, space.len(), |x| {
            space.ball_members(x, rho.value(x)).into_iter().map(|y| y as u32).collect()
        });
        let mut offsets = Vec::with_capacity(space.len() + 1);
        offsets.push(0);
        for b in &balls {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        let members: Vec<u32> = balls.into_iter().flatten().collect();
        let mut ops =
            Averaging { space, radii: rho.values().to_vec(), offsets, members, masses: Vec::new(), execution };
        ops.masses = (0..space.len()).map(|x| ops.members(x).iter().map(|&y| space.weight(y as usize)).sum()).collect();
        Ok(ops)
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.execution = execution;
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn space(&self) -> &'a Space {
        self.space
    }

    pub fn radius(&self, x: PointId) -> f64 {
        self.radii[x]
    }

    /// Sorted members of B_x.
    pub fn members(&self, x: PointId) -> &[u32] {
        &self.members[self.offsets[x]..self.offsets[x + 1]]
    }

    pub fn ball(&self, x: PointId) -> Vec<PointId> {
        self.members(x).iter().map(|&y| y as usize).collect()
    }

    /// μ(B_x).
    pub fn mass(&self, x: PointId) -> f64 {
        self.masses[x]
    }

    /// Total number of stored ball memberships.
    pub fn stored_members(&self) -> usize {
        self.members.len()
    }

    fn mean_increment(&self, u: &[f64], x: PointId) -> f64 {
        let ux = u[x];
        let s: f64 = self.members(x).iter().map(|&y| self.space.weight(y as usize) * (u[y as usize] - ux)).sum();
        s / self.masses[x]
    }

    fn extremes(&self, u: &[f64], x: PointId) -> (f64, f64) {
        self.members(x).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            let v = u[y as usize];
            (lo.min(v), hi.max(v))
        })
    }

    /// Weighted mean of u over B_x, accumulated relative to u(x) so that
    /// constants are reproduced exactly.
    pub fn mean(&self, u: &ScalarField, x: PointId) -> f64 {
        u.values[x] + self.mean_increment(&u.values, x)
    }

    /// (max + min)/2 of u over B_x.
    pub fn midrange(&self, u: &ScalarField, x: PointId) -> f64 {
        let (lo, hi) = self.extremes(&u.values, x);
        0.5 * (lo + hi)
    }

    pub fn t(&self, u: &ScalarField, x: PointId, alpha: f64) -> f64 {
        self.t_raw(&u.values, x, alpha)
    }

    fn t_raw(&self, u: &[f64], x: PointId, alpha: f64) -> f64 {
        let ux = u[x];
        if alpha == 0.0 {
            return ux + self.mean_increment(u, x);
        }
        let (lo, hi) = self.extremes(u, x);
        let s = 0.5 * (lo + hi);
        if alpha == 1.0 {
            return s;
        }
        ux + (alpha * (s - ux) + (1.0 - alpha) * self.mean_increment(u, x))
    }

    /// T_α u on the interior, boundary values copied.
    pub fn apply_t(&self, u: &ScalarField, alpha: f64) -> ScalarField {
        let mut out = vec![0.0; u.len()];
        self.apply_t_into(&u.values, alpha, &mut out);
        ScalarField::new(out)
    }

    pub(crate) fn apply_t_into(&self, u: &[f64], alpha: f64, out: &mut [f64]) {
        let space = self.space;
        par::fill(self.execution, out, |x, slot| {
            *slot = if space.is_boundary(x) { u[x] } else { self.t_raw(u, x, alpha) };
        });
    }

    /// max over the interior of |T_α u(x) − u(x)|.
    pub fn residual(&self, u: &ScalarField, alpha: f64) -> f64 {
        self.residual_raw(&u.values, alpha)
    }

    pub(crate) fn residual_raw(&self, u: &[f64], alpha: f64) -> f64 {
        let interior = self.space.interior();
        par::max(self.execution, interior.len(), 0.0, |k| {
            let x = interior[k];
            (self.t_raw(u, x, alpha) - u[x]).abs()
        })
    }

    /// μ(B_x △ B_y) / max{μ(B_x), μ(B_y)}.
    pub fn symdiff_ratio(&self, x: PointId, y: PointId) -> f64 {
        let sym = symdiff_measure(self.space, self.members(x), self.members(y));
        sym / self.masses[x].max(self.masses[y])
    }
}

/// μ(A △ B) for sorted member lists, summed in merge order.
pub(crate) fn symdiff_measure(space: &Space, a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) if p == q => {
                i += 1;
                j += 1;
            }
            (Some(&p), Some(&q)) if p < q => {
                acc += space.weight(p as usize);
                i += 1;
            }
            (Some(_), Some(&q)) => {
                acc += space.weight(q as usize);
                j += 1;
            }
            (Some(&p), None) => {
                acc += space.weight(p as usize);
                i += 1;
            }
            (None, Some(&q)) => {
                acc += space.weight(q as usize);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    acc
}

fn single_ball(space: &Space, rho: &RadiusField, x: PointId) -> Result<Vec<PointId>> {
    if rho.len() != space.len() {
        return Err(invalid("radius field does not match the space"));
    }
    Ok(space.ball(x, rho.value(x))?.members)
}

/// M u(x), evaluated on the single ball B_x.
pub fn eval_mean(space: &Space, rho: &RadiusField, u: &ScalarField, x: PointId) -> Result<f64> {
    let ball = single_ball(space, rho, x)?;
    let ux = u.value(x);
    let mass: f64 = ball.iter().map(|&y| space.weight(y)).sum();
    let s: f64 = ball.iter().map(|&y| space.weight(y) * (u.value(y) - ux)).sum();
    Ok(ux + s / mass)
}

/// S u(x), evaluated on the single ball B_x.
pub fn eval_midrange(space: &Space, rho: &RadiusField, u: &ScalarField, x: PointId) -> Result<f64> {
    let ball = single_ball(space, rho, x)?;
    let (lo, hi) =
        ball.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(u.value(y)), hi.max(u.value(y))));
    Ok(0.5 * (lo + hi))
}

/// T_α u(x) = α S u(x) + (1 − α) M u(x).
pub fn eval_t(space: &Space, rho: &RadiusField, u: &ScalarField, x: PointId, alpha: f64) -> Result<f64> {
    let m = eval_mean(space, rho, u, x)?;
    if alpha == 0.0 {
        return Ok(m);
    }
    let s = eval_midrange(space, rho, u, x)?;
    if alpha == 1.0 {
        return Ok(s);
    }
    let ux = u.value(x);
    Ok(ux + (alpha * (s - ux) + (1.0 - alpha) * (m - ux)))
}

pub fn apply_t(space: &Space, rho: &RadiusField, u: &ScalarField, alpha: f64) -> Result<ScalarField> {
    Ok(Averaging::new(space, rho)?.apply_t(u, alpha))
}

pub fn residual(space: &Space, rho: &RadiusField, u: &ScalarField, alpha: f64) -> Result<f64> {
    Ok(Averaging::new(space, rho)?.residual(u, alpha))
}

pub fn symdiff_ratio(space: &Space, rho: &RadiusField, x: PointId, y: PointId) -> Result<f64> {
    let (a, b) = (single_ball(space, rho, x)?, single_ball(space, rho, y)?);
    let (a32, b32): (Vec<u32>, Vec<u32>) =
        (a.iter().map(|&p| p as u32).collect(), b.iter().map(|&p| p as u32).collect());
    let ma: f64 = a.iter().map(|&p| space.weight(p)).sum();
    let mb: f64 = b.iter().map(|&p| space.weight(p)).sum();
    Ok(symdiff_measure(space, &a32, &b32) / ma.max(mb))
}
