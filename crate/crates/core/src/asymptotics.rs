//! Small-radius expansions of M, S and T_α on lattice balls, compared with
//! the Laplacian, the normalized ∞-Laplacian and their α-combination.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::par::{self, Execution};

type Value = fn(&[f64]) -> f64;
type Vector = fn(&[f64]) -> Vec<f64>;

/// Closed-form test function with gradient and row-major Hessian.
#[derive(Clone, Copy)]
pub struct SmoothTestFunction {
    pub name: &'static str,
    /// Smallest dimension the formula makes sense in.
    pub min_dim: usize,
    pub value: Value,
    pub gradient: Vector,
    pub hessian: Vector,
}

impl std::fmt::Debug for SmoothTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothTestFunction").field("name", &self.name).finish()
    }
}

fn unit(n: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = scale;
    v
}

fn diag(n: usize, d: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = d(i);
    }
    h
}

const CATALOG: &[SmoothTestFunction] = &[
    SmoothTestFunction {
        name: "sq_norm",
        min_dim: 1,
        value: |x| x.iter().map(|v| v * v).sum(),
        gradient: |x| x.iter().map(|v| 2.0 * v).collect(),
        hessian: |x| diag(x.len(), |_| 2.0),
    },
    SmoothTestFunction {
        name: "x1_sq",
        min_dim: 1,
        value: |x| x[0] * x[0],
        gradient: |x| unit(x.len(), 0, 2.0 * x[0]),
        hessian: |x| diag(x.len(), |i| if i == 0 { 2.0 } else { 0.0 }),
    },
    SmoothTestFunction {
        name: "linear",
        min_dim: 1,
        value: |x| x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum(),
        gradient: |x| (1..=x.len()).map(|i| i as f64).collect(),
        hessian: |x| vec![0.0; x.len() * x.len()],
    },
    SmoothTestFunction {
        name: "saddle",
        min_dim: 2,
        value: |x| x[0] * x[0] - x[1] * x[1],
        gradient: |x| {
            let mut g = vec![0.0; x.len()];
            g[0] = 2.0 * x[0];
            g[1] = -2.0 * x[1];
            g
        },
        hessian: |x| diag(x.len(), |i| [2.0, -2.0].get(i).copied().unwrap_or(0.0)),
    },
    SmoothTestFunction {
        name: "cubic_harmonic",
        min_dim: 2,
        value: |x| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1],
        gradient: |x| {
            let mut g = vec![0.0; x.len()];
            g[0] = 3.0 * x[0] * x[0] - 3.0 * x[1] * x[1];
            g[1] = -6.0 * x[0] * x[1];
            g
        },
        hessian: |x| {
            let n = x.len();
            let mut h = vec![0.0; n * n];
            h[0] = 6.0 * x[0];
            h[1] = -6.0 * x[1];
            h[n] = -6.0 * x[1];
            h[n + 1] = -6.0 * x[0];
            h
        },
    },
    SmoothTestFunction {
        name: "log_norm",
        min_dim: 1,
        value: |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>().ln(),
        gradient: |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            x.iter().map(|v| v / r2).collect()
        },
        hessian: |x| {
            let n = x.len();
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let mut h = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let d = if i == j { 1.0 } else { 0.0 };
                    h[i * n + j] = d / r2 - 2.0 * x[i] * x[j] / (r2 * r2);
                }
            }
            h
        },
    },
    SmoothTestFunction {
        name: "exp_x1",
        min_dim: 1,
        value: |x| x[0].exp(),
        gradient: |x| unit(x.len(), 0, x[0].exp()),
        hessian: |x| diag(x.len(), |i| if i == 0 { x[0].exp() } else { 0.0 }),
    },
];

pub fn catalog() -> &'static [SmoothTestFunction] {
    CATALOG
}

pub fn lookup(name: &str) -> Result<SmoothTestFunction> {
    CATALOG.iter().copied().find(|f| f.name == name).ok_or_else(|| {
        let names: Vec<_> = CATALOG.iter().map(|f| f.name).collect();
        invalid(format!("unknown test function {name:?}; known: {}", names.join(", ")))
    })
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-6;

impl SmoothTestFunction {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() < self.min_dim {
            return Err(invalid(format!("{} needs dimension at least {}", self.name, self.min_dim)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point must be finite"));
        }
        Ok(())
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let h = (self.hessian)(x);
        (0..n).map(|i| h[i * n + i]).sum()
    }

    /// Σ u_i u_j u_ij.
    pub fn infinity_laplacian(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let g = (self.gradient)(x);
        let h = (self.hessian)(x);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i] * g[j] * h[i * n + j];
            }
        }
        s
    }

    pub fn gradient_norm_sq(&self, x: &[f64]) -> f64 {
        (self.gradient)(x).iter().map(|v| v * v).sum()
    }

    /// Largest relative discrepancy between the closed-form derivatives and
    /// central differences of step `FD_STEP`, measured against max(1, |exact|).
    pub fn derivative_error(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let n = x.len();
        let g = (self.gradient)(x);
        let h = (self.hessian)(x);
        let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);
        let mut worst: f64 = 0.0;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for i in 0..n {
            xp[i] = x[i] + FD_STEP;
            xm[i] = x[i] - FD_STEP;
            let fd = ((self.value)(&xp) - (self.value)(&xm)) / (2.0 * FD_STEP);
            worst = worst.max(rel(fd, g[i]));
            let (gp, gm) = ((self.gradient)(&xp), (self.gradient)(&xm));
            for j in 0..n {
                worst = worst.max(rel((gp[j] - gm[j]) / (2.0 * FD_STEP), h[j * n + i]));
            }
            xp[i] = x[i];
            xm[i] = x[i];
        }
        Ok(worst)
    }

    pub fn check_derivatives(&self, x: &[f64]) -> Result<()> {
        let e = self.derivative_error(x)?;
        if e < FD_TOLERANCE {
            Ok(())
        } else {
            Err(invalid(format!("{}: derivatives disagree with finite differences (relative error {e:e})", self.name)))
        }
    }
}

/// α = (p − 2)/(p + n), with p = ∞ giving 1.
pub fn alpha_from_p(p: f64, n: usize) -> Result<f64> {
    if p.is_nan() || p <= 1.0 {
        return Err(invalid(format!("p must exceed 1, got {p}")));
    }
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if p.is_infinite() {
        return Ok(1.0);
    }
    Ok((p - 2.0) / (p + n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMode {
    Mean,
    Midrange,
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Strictly decreasing radii.
    pub radii: Vec<f64>,
    /// Lattice spacing; defaults to the finest spacing that keeps the largest
    /// ball near `LATTICE_BUDGET` points, and never coarser than min radius / 16.
    pub h: Option<f64>,
    /// Optional domain box, one [lo, hi] per coordinate, for the margin check.
    pub bounds: Option<Vec<[f64; 2]>>,
}

impl ExpansionConfig {
    pub fn new(radii: Vec<f64>) -> ExpansionConfig {
        ExpansionConfig { radii, h: None, bounds: None }
    }
}

pub const LATTICE_BUDGET: f64 = 4e6;

pub fn default_radii() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub function: String,
    pub point: Vec<f64>,
    pub mode: ExpansionMode,
    pub p: Option<f64>,
    pub alpha: f64,
    pub h: f64,
    pub radii: Vec<f64>,
    pub quotients: Vec<f64>,
    pub extrapolated: f64,
    pub predicted: f64,
    /// Relative to |predicted|, or absolute when the prediction is 0.
    pub error: f64,
    pub relative: bool,
    /// h / ρ_min, the scale of the lattice error in sup and inf.
    pub discretization_floor: f64,
}

struct BallStats {
    mean_excess: f64,
    mid_excess: f64,
}

/// Lattice ball {x + h k : h²|k|² ≤ ρ²}; values are taken relative to f(x).
fn lattice_ball(f: &SmoothTestFunction, x: &[f64], rho: f64, h: f64) -> BallStats {
    let n = x.len();
    let fx = (f.value)(x);
    let r2 = (rho / h).powi(2) * (1.0 + 1e-12);
    let mut k = vec![0i64; n];
    let mut y = x.to_vec();
    let (mut sum, mut count, mut hi, mut lo) = (0.0, 0u64, f64::NEG_INFINITY, f64::INFINITY);
    fn walk(d: usize, left: f64, k: &mut [i64], y: &mut [f64], x: &[f64], h: f64, visit: &mut dyn FnMut(&[f64])) {
        if d == k.len() {
            visit(y);
            return;
        }
        let kmax = left.sqrt().floor() as i64;
        for kd in -kmax..=kmax {
            k[d] = kd;
            y[d] = x[d] + h * kd as f64;
            walk(d + 1, left - (kd * kd) as f64, k, y, x, h, visit);
        }
        y[d] = x[d];
    }
    walk(0, r2, &mut k, &mut y, x, h, &mut |p| {
        let v = (f.value)(p) - fx;
        sum += v;
        count += 1;
        hi = hi.max(v);
        lo = lo.min(v);
    });
    BallStats { mean_excess: sum / count as f64, mid_excess: 0.5 * (hi + lo) }
}

/// Polynomial extrapolation in s = ρ² to s = 0 through all the samples
/// (Richardson with orders 2, 4, 6, … for any radius sequence).
pub fn richardson(radii: &[f64], values: &[f64]) -> Result<f64> {
    if radii.is_empty() || radii.len() != values.len() {
        return Err(invalid("richardson needs matching, nonempty radii and values"));
    }
    let s: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let mut p = values.to_vec();
    for k in 1..p.len() {
        for i in (k..p.len()).rev() {
            p[i] = (s[i - k] * p[i] - s[i] * p[i - 1]) / (s[i - k] - s[i]);
        }
    }
    Ok(p[p.len() - 1])
}

struct Prepared {
    h: f64,
    radii: Vec<f64>,
}

fn prepare(f: &SmoothTestFunction, x: &[f64], cfg: &ExpansionConfig) -> Result<Prepared> {
    f.check_dim(x)?;
    f.check_derivatives(x)?;
    let radii = cfg.radii.clone();
    if radii.is_empty() {
        return Err(invalid("at least one radius is required"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii must be positive and strictly decreasing"));
    }
    let rmin = radii[radii.len() - 1];
    let side = LATTICE_BUDGET.powf(1.0 / x.len() as f64);
    let h = cfg.h.unwrap_or_else(|| (rmin / 16.0).min(2.0 * radii[0] / side));
    if !(h > 0.0) || h > rmin / 16.0 * (1.0 + 1e-12) {
        return Err(invalid(format!("lattice spacing {h} exceeds min radius / 16")));
    }
    if let Some(b) = &cfg.bounds {
        if b.len() != x.len() {
            return Err(invalid("bounds must give one interval per coordinate"));
        }
        let margin = b.iter().zip(x).map(|(iv, &xi)| (xi - iv[0]).min(iv[1] - xi)).fold(f64::INFINITY, f64::min);
        if margin < radii[0] {
            return Err(invalid(format!(
                "point is {margin} from the domain edge, less than the largest radius {}",
                radii[0]
            )));
        }
    }
    let size = (2.0 * radii[0] / h + 1.0).powi(x.len() as i32);
    if size > 5e7 {
        return Err(invalid(format!(
            "largest lattice ball has about {size:.0} points; use fewer dimensions or larger h"
        )));
    }
    Ok(Prepared { h, radii })
}

fn predicted_parts(f: &SmoothTestFunction, x: &[f64], need_gradient: bool) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mean = f.laplacian(x) / (2.0 * (n + 2.0));
    if !need_gradient {
        return Ok((mean, f64::NAN));
    }
    let g2 = f.gradient_norm_sq(x);
    if g2.sqrt() <= 1e-8 {
        return Err(invalid(format!(
            "{}: gradient vanishes at the point; the midrange expansion needs ∇f ≠ 0",
            f.name
        )));
    }
    Ok((mean, f.infinity_laplacian(x) / (2.0 * g2)))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    f: &SmoothTestFunction,
    x: &[f64],
    mode: ExpansionMode,
    p: Option<f64>,
    alpha: f64,
    prep: Prepared,
    quotients: Vec<f64>,
    predicted: f64,
) -> Result<ExpansionResult> {
    let extrapolated = richardson(&prep.radii, &quotients)?;
    let relative = predicted.abs() > 1e-12;
    let error = if relative { (extrapolated - predicted).abs() / predicted.abs() } else { extrapolated.abs() };
    let discretization_floor = prep.h / prep.radii[prep.radii.len() - 1];
    Ok(ExpansionResult {
        function: f.name.to_string(),
        point: x.to_vec(),
        mode,
        p,
        alpha,
        h: prep.h,
        radii: prep.radii,
        quotients,
        extrapolated,
        predicted,
        error,
        relative,
        discretization_floor,
    })
}

fn ball_stats(f: &SmoothTestFunction, x: &[f64], prep: &Prepared, exec: Execution) -> Vec<BallStats> {
    par::map(exec, prep.radii.len(), |i| lattice_ball(f, x, prep.radii[i], prep.h))
}

/// (M_ρ f(x) − f(x))/ρ² against Δf(x)/(2(n + 2)).
pub fn expansion_mean(f: &SmoothTestFunction, x: &[f64], cfg: &ExpansionConfig) -> Result<ExpansionResult> {
    let prep = prepare(f, x, cfg)?;
    let (pred, _) = predicted_parts(f, x, false)?;
    let q = ball_stats(f, x, &prep, Execution::default())
        .iter()
        .zip(&prep.radii)
        .map(|(b, r)| b.mean_excess / (r * r))
        .collect();
    finish(f, x, ExpansionMode::Mean, None, 0.0, prep, q, pred)
}

/// (S_ρ f(x) − f(x))/ρ² against Δ_∞f(x)/(2|∇f(x)|²).
pub fn expansion_midrange(f: &SmoothTestFunction, x: &[f64], cfg: &ExpansionConfig) -> Result<ExpansionResult> {
    let prep = prepare(f, x, cfg)?;
    let (_, pred) = predicted_parts(f, x, true)?;
    let q = ball_stats(f, x, &prep, Execution::default())
        .iter()
        .zip(&prep.radii)
        .map(|(b, r)| b.mid_excess / (r * r))
        .collect();
    finish(f, x, ExpansionMode::Midrange, None, 1.0, prep, q, pred)
}

/// α·(midrange quotient) + (1 − α)·(mean quotient) with α = (p − 2)/(p + n).
pub fn expansion_p(f: &SmoothTestFunction, x: &[f64], p: f64, cfg: &ExpansionConfig) -> Result<ExpansionResult> {
    let alpha = alpha_from_p(p, x.len())?;
    let prep = prepare(f, x, cfg)?;
    let (pm, ps) = predicted_parts(f, x, alpha != 0.0)?;
    let stats = ball_stats(f, x, &prep, Execution::default());
    let q = stats
        .iter()
        .zip(&prep.radii)
        .map(|(b, r)| {
            let qm = b.mean_excess / (r * r);
            if alpha == 0.0 {
                qm
            } else {
                alpha * (b.mid_excess / (r * r)) + (1.0 - alpha) * qm
            }
        })
        .collect();
    let pred = if alpha == 0.0 { pm } else { alpha * ps + (1.0 - alpha) * pm };
    finish(f, x, ExpansionMode::P, Some(p), alpha, prep, q, pred)
}
