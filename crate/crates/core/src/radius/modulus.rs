//! Concave piecewise-linear moduli of continuity and the normalized radius
//! modulus ω̂ with its iterates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Concave, nondecreasing, piecewise-linear ω on `[0, t_last]` with ω(0) = 0,
/// extended by the constant `ω(t_last)` to the right.
///
/// Serialized as the breakpoint array `[[t, ω(t)], ...]`; slopes are
/// recomputed on load, so a round trip reproduces every evaluation bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Modulus {
    t: Vec<f64>,
    v: Vec<f64>,
    slopes: Vec<f64>,
}

const CONCAVITY_TOL: f64 = 1e-9;

impl Modulus {
    pub fn from_breakpoints(points: Vec<(f64, f64)>) -> Result<Modulus> {
        if points.is_empty() || points[0] != (0.0, 0.0) {
            return Err(invalid("a modulus must start at (0, 0)"));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(invalid("modulus breakpoints must be finite"));
        }
        let (t, v): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if t.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("modulus abscissae must be strictly increasing"));
        }
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("a modulus must be nondecreasing"));
        }
        let slopes: Vec<f64> = (0..t.len() - 1).map(|k| (v[k + 1] - v[k]) / (t[k + 1] - t[k])).collect();
        if slopes.windows(2).any(|s| s[1] > s[0] * (1.0 + CONCAVITY_TOL) + CONCAVITY_TOL) {
            return Err(invalid("a modulus must be concave (nonincreasing slopes)"));
        }
        Ok(Modulus { t, v, slopes })
    }

    /// Zero modulus on `[0, diam]`.
    pub fn zero(diam: f64) -> Modulus {
        Modulus::from_breakpoints(vec![(0.0, 0.0), (diam, 0.0)]).expect("zero modulus")
    }

    pub fn identity(diam: f64) -> Modulus {
        Modulus::from_breakpoints(vec![(0.0, 0.0), (diam, diam)]).expect("identity modulus")
    }

    /// `t ↦ min{l·t, diam}`. The kink is placed so that the stored slope never
    /// exceeds `l` in floating point, hence `eval(t) ≤ l·t` holds exactly.
    pub fn lipschitz(l: f64, diam: f64) -> Result<Modulus> {
        if !(l > 0.0 && l.is_finite() && diam > 0.0 && diam.is_finite()) {
            return Err(invalid(format!("lipschitz modulus needs l > 0 and diam > 0, got {l}, {diam}")));
        }
        if l <= 1.0 {
            return Modulus::from_breakpoints(vec![(0.0, 0.0), (diam, l * diam)]);
        }
        let mut kink = diam / l;
        while diam / kink > l {
            kink = kink.next_up();
        }
        Modulus::from_breakpoints(vec![(0.0, 0.0), (kink, diam), (diam, diam)])
    }

    /// Least concave majorant of a scatter of `(t, v)` samples with `t ∈ [0, diam]`,
    /// flat at the largest sample value up to `diam`.
    pub fn concave_majorant(samples: &[(f64, f64)], diam: f64) -> Result<Modulus> {
        if !(diam > 0.0) {
            return Err(invalid("concave majorant needs a positive domain"));
        }
        if let Some(p) = samples.iter().find(|p| !(p.0 >= 0.0) || !p.1.is_finite() || (p.0 == 0.0 && p.1 > 0.0)) {
            return Err(invalid(format!("sample ({}, {}) cannot be majorized by a modulus vanishing at 0", p.0, p.1)));
        }
        let vmax = samples.iter().map(|p| p.1).fold(0.0, f64::max);
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(samples.len() + 2);
        pts.push((0.0, 0.0));
        pts.extend(samples.iter().copied().filter(|p| p.0 > 0.0 && p.0 < diam));
        pts.push((diam, vmax));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for p in pts {
            if let Some(last) = hull.last() {
                if last.0 == p.0 {
                    hull.pop();
                }
            }
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        // Everything after the first maximum is flat.
        if let Some(k) = hull.iter().position(|p| p.1 >= vmax) {
            hull.truncate(k + 1);
            if hull[k].0 < diam {
                hull.push((diam, vmax));
            }
        }
        hull[0] = (0.0, 0.0);
        Modulus::from_breakpoints(hull)
    }

    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        self.t.iter().copied().zip(self.v.iter().copied()).collect()
    }

    /// Right end of the breakpoint domain.
    pub fn domain(&self) -> f64 {
        *self.t.last().expect("nonempty")
    }

    pub fn sup(&self) -> f64 {
        *self.v.last().expect("nonempty")
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let n = self.t.len();
        if t >= self.t[n - 1] {
            return self.v[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t) - 1;
        (self.v[k] + self.slopes[k] * (t - self.t[k])).min(self.v[k + 1])
    }

    /// `min{ω, cap}`; concavity is preserved.
    pub fn capped(&self, cap: f64) -> Modulus {
        if self.sup() <= cap {
            return self.clone();
        }
        let mut pts = Vec::new();
        for k in 0..self.t.len() {
            if self.v[k] < cap {
                pts.push((self.t[k], self.v[k]));
                continue;
            }
            let (t0, v0) = (self.t[k - 1], self.v[k - 1]);
            let cross = (t0 + (cap - v0) / self.slopes[k - 1]).clamp(t0, self.t[k]);
            if cross > t0 {
                pts.push((cross, cap));
            } else {
                pts.last_mut().expect("k ≥ 1").1 = cap;
            }
            break;
        }
        if pts.last().expect("nonempty").0 < self.domain() {
            pts.push((self.domain(), cap));
        }
        Modulus::from_breakpoints(pts).expect("capping keeps a valid modulus")
    }

    /// ω(t) ≤ t at every breakpoint (hence everywhere).
    pub fn is_subidentity(&self) -> bool {
        self.t.iter().zip(&self.v).all(|(t, v)| v <= t)
    }
}

impl TryFrom<Vec<[f64; 2]>> for Modulus {
    type Error = crate::error::Error;
    fn try_from(points: Vec<[f64; 2]>) -> Result<Modulus> {
        Modulus::from_breakpoints(points.into_iter().map(|p| (p[0], p[1])).collect())
    }
}

impl From<Modulus> for Vec<[f64; 2]> {
    fn from(m: Modulus) -> Self {
        m.t.into_iter().zip(m.v).map(|(t, v)| [t, v]).collect()
    }
}

/// ω̂: the identity when ω(t) ≤ t, otherwise `(diam/ω(diam))·ω`, on `[0, diam]`.
pub fn hat_modulus(omega: &Modulus, diam: f64) -> Result<Modulus> {
    if !(diam > 0.0) {
        return Err(invalid("diameter must be positive"));
    }
    let at_diam = omega.eval(diam);
    if at_diam > diam {
        return Err(invalid(format!("modulus exceeds the diameter: ω(diam) = {at_diam} > {diam}; cap it first")));
    }
    let restricted: Vec<(f64, f64)> =
        omega.breakpoints().into_iter().filter(|p| p.0 < diam).chain(std::iter::once((diam, at_diam))).collect();
    if restricted.iter().all(|p| p.1 <= p.0) {
        return Ok(Modulus::identity(diam));
    }
    let scale = diam / at_diam;
    let n = restricted.len();
    let pts = restricted
        .into_iter()
        .enumerate()
        .map(|(k, (t, v))| if k + 1 == n { (t, diam) } else { (t, (scale * v).min(diam)) })
        .collect();
    Modulus::from_breakpoints(pts)
}

/// ω̂^{(n)}(t), with ω̂^{(0)}(t) = t.
pub fn iterate_modulus(hat: &Modulus, n: usize, t: f64) -> Result<f64> {
    let diam = hat.domain();
    if !(0.0..=diam).contains(&t) {
        return Err(invalid(format!("t = {t} lies outside [0, {diam}]")));
    }
    let mut s = t;
    for _ in 0..n {
        s = hat.eval(s);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_modulus() -> Modulus {
        let pts = (0..=64).map(|k| {
            let t = (k * k) as f64 / 4096.0;
            (t, (k as f64) / 64.0)
        });
        Modulus::from_breakpoints(pts.collect()).unwrap()
    }

    #[test]
    fn hat_examples() {
        let half = Modulus::from_breakpoints(vec![(0.0, 0.0), (1.0, 0.5)]).unwrap();
        assert_eq!(hat_modulus(&half, 1.0).unwrap(), Modulus::identity(1.0));
        let two = Modulus::lipschitz(2.0, 1.0).unwrap();
        let hat = hat_modulus(&two, 1.0).unwrap();
        assert!((hat.eval(0.3) - 0.6).abs() < 1e-15);
        assert_eq!(hat.eval(0.7), 1.0);
        let sq = hat_modulus(&sqrt_modulus(), 1.0).unwrap();
        assert_eq!(sq.eval(0.25), 0.5);
        let big = Modulus::from_breakpoints(vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert!(hat_modulus(&big, 1.0).is_err());
    }

    #[test]
    fn iterate_examples() {
        let hat = hat_modulus(&Modulus::lipschitz(2.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(iterate_modulus(&hat, 0, 0.1).unwrap(), 0.1);
        assert!((iterate_modulus(&hat, 2, 0.1).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(iterate_modulus(&hat, 5, 0.1).unwrap(), 1.0);
        assert!(iterate_modulus(&hat, 1, 1.5).is_err());
    }

    #[test]
    fn majorant_is_concave_and_above() {
        let samples = vec![(0.1, 0.05), (0.2, 0.3), (0.5, 0.35), (0.7, 0.2), (0.9, 0.36)];
        let m = Modulus::concave_majorant(&samples, 1.0).unwrap();
        for &(t, v) in &samples {
            assert!(m.eval(t) >= v);
        }
        assert_eq!(m.eval(1.0), 0.36);
        assert_eq!(m.breakpoints()[1], (0.2, 0.3));
    }

    #[test]
    fn capping() {
        let m = Modulus::from_breakpoints(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
        let c = m.capped(1.5);
        assert_eq!(c.breakpoints(), vec![(0.0, 0.0), (0.75, 1.5), (2.0, 1.5)]);
        assert_eq!(c.eval(0.5), 1.0);
    }

    #[test]
    fn serde_round_trip() {
        let m = sqrt_modulus();
        let s = serde_json::to_string(&m).unwrap();
        let back: Modulus = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Modulus>("[[0,0],[1,2],[2,5]]").is_err());
    }
}
