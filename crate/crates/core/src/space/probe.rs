//! Seeded estimators for the doubling constant, the δ-annular decay constant
//! and the ring-continuity jump of a discrete space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{euclid, MetricKind, PointId, Space};
use crate::error::{invalid, Result};
use crate::par;

/// Sampling window for the probes. Unset radii are derived from the space:
/// `r_min = 16·h`, `width_min = 2·h`, `r_max = ℓ(Ω)` (or half the diameter
/// when the boundary is empty), with `h` the resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub r_min: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub width_min: Option<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { samples: 4000, seed: 0, r_min: None, r_max: None, width_min: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub r_min: f64,
    pub r_max: f64,
    pub width_min: f64,
}

impl ProbeConfig {
    pub fn window(&self, space: &Space) -> Window {
        let h = space.resolution();
        let r_max = self.r_max.unwrap_or_else(|| space.ell().unwrap_or_else(|_| space.diameter() / 2.0));
        Window { r_min: self.r_min.unwrap_or(16.0 * h), r_max, width_min: self.width_min.unwrap_or(2.0 * h) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnularDecayEntry {
    pub delta: f64,
    pub estimate: f64,
    pub samples_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceProbeReport {
    pub doubling_estimate: f64,
    pub annular_decay: Vec<AnnularDecayEntry>,
    pub ring_jump: f64,
    pub geodesic_defect: Option<f64>,
    pub window: Window,
    pub samples: usize,
    pub seed: u64,
}

/// Sorted distance profile of one center with cumulative weights.
struct Profile {
    dists: Vec<f64>,
    cum: Vec<f64>,
    distinct: Vec<f64>,
}

impl Profile {
    fn new(space: &Space, x: PointId) -> Profile {
        let mut pairs: Vec<(f64, usize)> = (0..space.len()).map(|y| (space.dist(x, y), y)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cum = Vec::with_capacity(pairs.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for &(_, y) in &pairs {
            acc += space.weight(y);
            cum.push(acc);
        }
        let dists: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut distinct = dists.clone();
        distinct.dedup();
        Profile { dists, cum, distinct }
    }

    /// μ(B(x, r)) for the closed ball.
    fn mass(&self, r: f64) -> f64 {
        self.cum[self.dists.partition_point(|&d| d <= r)]
    }

    /// Midpoint of the distance gap containing `r`; same ball, canonical radius.
    fn snap(&self, r: f64, resolution: f64) -> f64 {
        let k = self.distinct.partition_point(|&d| d <= r);
        if k >= self.distinct.len() {
            self.distinct[self.distinct.len() - 1] + resolution / 2.0
        } else {
            0.5 * (self.distinct[k - 1] + self.distinct[k])
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1], got {delta}")))
    }
}

/// Estimate of D_δ: the max over sampled annuli of
/// μ(B(x,R) \ B(x,r)) / (((R−r)/R)^δ μ(B(x,R))), clamped below at 1.
///
/// Both radii are snapped to the middle of their distance gap so that the
/// ratio describes the annulus actually realized by the point set; annuli
/// thinner than `width_min` after snapping are skipped.
pub fn probe_annular_decay(space: &Space, delta: f64, cfg: &ProbeConfig) -> Result<AnnularDecayEntry> {
    check_delta(delta)?;
    let w = cfg.window(space);
    let h = space.resolution();
    let lo = w.r_min + w.width_min;
    if space.len() < 2 || !(lo < w.r_max) {
        return Ok(AnnularDecayEntry { delta, estimate: 1.0, samples_used: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params: Vec<(usize, f64, f64)> = (0..cfg.samples)
        .map(|_| {
            let x = rng.gen_range(0..space.len());
            let big = rng.gen_range(lo..=w.r_max);
            let width = (rng.gen_range(w.width_min.ln()..=(big - w.r_min).ln())).exp();
            (x, big - width, big)
        })
        .collect();
    let ratios = par::map(space.execution(), params.len(), |k| {
        let (x, r, big) = params[k];
        let prof = Profile::new(space, x);
        let (rs, bs) = (prof.snap(r, h), prof.snap(big, h));
        if bs - rs < w.width_min {
            return None;
        }
        let outer = prof.mass(big);
        let annulus = outer - prof.mass(r);
        Some(annulus / (((bs - rs) / bs).powf(delta) * outer))
    });
    let used = ratios.iter().flatten().count();
    let estimate = ratios.into_iter().flatten().fold(1.0, par::nan_max);
    Ok(AnnularDecayEntry { delta, estimate, samples_used: used })
}

/// Estimate of D_μ: max over sampled (x, r), r ∈ [min(r_min, r_max/4), r_max/2],
/// of μ(B(x,2r))/μ(B(x,r)).
pub fn probe_doubling(space: &Space, cfg: &ProbeConfig) -> f64 {
    if space.len() < 2 {
        return 1.0;
    }
    let w = cfg.window(space);
    let hi = w.r_max / 2.0;
    let lo = w.r_min.min(hi / 2.0);
    if !(lo > 0.0 && lo < hi) {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x646f_7562_6c65);
    let params: Vec<(usize, f64)> =
        (0..cfg.samples).map(|_| (rng.gen_range(0..space.len()), rng.gen_range(lo..=hi))).collect();
    let ratios = par::map(space.execution(), params.len(), |k| {
        let (x, r) = params[k];
        let prof = Profile::new(space, x);
        prof.mass(2.0 * r) / prof.mass(r)
    });
    ratios.into_iter().fold(1.0, par::nan_max)
}

/// Max over consecutive radii of (μ(B(x,r_{k+1})) − μ(B(x,r_k))) / μ(B(x,r_{k+1})).
pub fn probe_ring_continuity(space: &Space, x: PointId, radii: &[f64]) -> Result<f64> {
    if x >= space.len() {
        return Err(crate::error::Error::UnknownPoint(x));
    }
    if radii.iter().any(|&r| !(r >= 0.0)) {
        return Err(invalid("radii must be nonnegative"));
    }
    if radii.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(invalid("radii must be strictly increasing"));
    }
    let prof = Profile::new(space, x);
    Ok(ring_jump_of(&prof, radii))
}

fn ring_jump_of(prof: &Profile, radii: &[f64]) -> f64 {
    radii
        .windows(2)
        .map(|p| {
            let (a, b) = (prof.mass(p[0]), prof.mass(p[1]));
            (b - a) / b
        })
        .fold(0.0, f64::max)
}

const RING_CENTERS: usize = 16;

/// Full probe report: doubling, annular decay for each δ, ring jump and geodesic defect.
pub fn probe_space(space: &Space, deltas: &[f64], cfg: &ProbeConfig) -> Result<SpaceProbeReport> {
    let annular_decay = deltas.iter().map(|&d| probe_annular_decay(space, d, cfg)).collect::<Result<Vec<_>>>()?;
    let w = cfg.window(space);
    let h = space.resolution();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7269_6e67);
    let ring_jump = if space.len() < 2 || !(w.r_min < w.r_max) {
        0.0
    } else {
        let step = h / 2.0;
        let count = ((w.r_max - w.r_min) / step).floor() as usize + 1;
        let radii: Vec<f64> = (0..count).map(|k| w.r_min + k as f64 * step).collect();
        let centers: Vec<usize> = (0..RING_CENTERS).map(|_| rng.gen_range(0..space.len())).collect();
        par::map(space.execution(), centers.len(), |k| ring_jump_of(&Profile::new(space, centers[k]), &radii))
            .into_iter()
            .fold(0.0, f64::max)
    };
    let geodesic_defect = match space.metric_kind() {
        MetricKind::Euclidean => Some(0.0),
        MetricKind::Graph if space.has_coords() && space.len() >= 2 => {
            let pairs: Vec<(usize, usize)> =
                (0..cfg.samples).map(|_| (rng.gen_range(0..space.len()), rng.gen_range(0..space.len()))).collect();
            Some(pairs.iter().fold(0.0, |acc: f64, &(i, j)| {
                let d = space.dist(i, j);
                let straight = euclid(space.coords(i).unwrap(), space.coords(j).unwrap());
                if d.is_finite() {
                    acc.max(d - straight)
                } else {
                    acc
                }
            }))
        }
        _ => None,
    };
    Ok(SpaceProbeReport {
        doubling_estimate: probe_doubling(space, cfg),
        annular_decay,
        ring_jump,
        geodesic_defect,
        window: w,
        samples: cfg.samples,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{interval_grid, square_grid, MetricData, SpaceParts};

    #[test]
    fn annular_decay_grids() {
        let cfg = ProbeConfig { samples: 4000, seed: 3, ..Default::default() };
        let d1 = probe_annular_decay(&interval_grid(257), 1.0, &cfg).unwrap();
        assert!(d1.estimate >= 1.0 && d1.estimate <= 1.1, "{d1:?}");
        assert!(d1.samples_used > 500);
        let d2 = probe_annular_decay(&square_grid(65), 1.0, &cfg).unwrap();
        assert!(d2.estimate >= 2.0 && d2.estimate <= 2.2, "{d2:?}");
        assert!(probe_annular_decay(&interval_grid(9), 0.0, &cfg).is_err());
    }

    #[test]
    fn doubling_grids() {
        let cfg = ProbeConfig { samples: 500, seed: 1, ..Default::default() };
        let d1 = probe_doubling(&interval_grid(257), &cfg);
        assert!((d1 - 2.0).abs() < 0.15, "{d1}");
        let d2 = probe_doubling(&square_grid(65), &cfg);
        assert!((d2 - 4.0).abs() < 0.5, "{d2}");
        let single = Space::new(SpaceParts {
            labels: vec![0],
            dim: 1,
            coords: vec![0.0],
            weights: vec![1.0],
            boundary: vec![true],
            metric: MetricData::Euclidean,
            geodesic: true,
        })
        .unwrap();
        assert_eq!(probe_doubling(&single, &cfg), 1.0);
    }

    #[test]
    fn ring_continuity_sweeps() {
        let s = interval_grid(101);
        assert_eq!(probe_ring_continuity(&s, 50, &[0.0, 0.001, 0.005]).unwrap(), 0.0);
        assert!(probe_ring_continuity(&s, 50, &[0.1, 0.05]).is_err());
        let sweep = |n: usize| {
            let s = interval_grid(n);
            let h = 1.0 / (n - 1) as f64;
            let radii: Vec<f64> = (0..200).map(|k| 0.1 + k as f64 * h / 4.0).collect();
            probe_ring_continuity(&s, (n - 1) / 2, &radii).unwrap()
        };
        let (a, b) = (sweep(129), sweep(257));
        // The first new shell past r = 0.1 dominates: two atoms over 2k + 1.
        let k = (0.1f64 * 128.0).floor() + 1.0;
        assert!((a - 2.0 / (2.0 * k + 1.0)).abs() < 1e-12, "{a}");
        assert!((0.4..=0.6).contains(&(b / a)), "{a} {b}");
    }
}
