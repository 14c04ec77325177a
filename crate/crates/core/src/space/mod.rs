//! Finite weighted metric measure spaces: distances, closed balls, measures,
//! boundary distances and probes of the structural constants.

mod builtin;
mod io;
mod probe;

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};

pub use builtin::{disk_grid, interval_grid, lattice_graph, path_graph, square_grid};
pub use io::{load_space, read_space, write_space, SpaceFile, SpacePointRecord};
pub use probe::{
    probe_annular_decay, probe_doubling, probe_ring_continuity, probe_space, AnnularDecayEntry, ProbeConfig,
    SpaceProbeReport,
};

/// Internal point index in `0..space.len()`.
pub type PointId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Graph,
    Matrix,
}

/// Structural constants known in closed form for the built-in generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConstants {
    pub dimension: usize,
    /// Annular decay constant; valid for every δ ∈ (0, 1].
    pub d_delta: f64,
    pub d_mu: f64,
}

impl AnalyticConstants {
    pub fn lebesgue(dimension: usize) -> Self {
        AnalyticConstants { dimension, d_delta: dimension as f64, d_mu: 2f64.powi(dimension as i32) }
    }
}

/// Metric description handed to [`Space::new`].
#[derive(Debug, Clone)]
pub enum MetricData {
    Euclidean,
    /// Undirected edges `(i, j, w)` over internal indices.
    Graph(Vec<(usize, usize, f64)>),
    /// Row-major `n × n` distance matrix.
    Matrix(Vec<f64>),
}

/// Raw parts of a space before validation.
#[derive(Debug, Clone)]
pub struct SpaceParts {
    pub labels: Vec<i64>,
    pub dim: usize,
    /// Row-major coordinates, `labels.len() * dim` values, or empty.
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub boundary: Vec<bool>,
    pub metric: MetricData,
    pub geodesic: bool,
}

#[derive(Debug)]
enum Metric {
    Euclidean,
    Graph { adjacency: Vec<Vec<(usize, f64)>>, rows: Vec<OnceLock<Vec<f64>>> },
    Matrix(Vec<f64>),
}

#[derive(Debug)]
struct Slab {
    order: Vec<usize>,
    keys: Vec<f64>,
}

#[derive(Debug)]
pub struct Space {
    labels: Vec<i64>,
    index: HashMap<i64, usize>,
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    boundary_mask: Vec<bool>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    metric: Metric,
    geodesic: bool,
    analytic: Option<AnalyticConstants>,
    execution: Execution,
    resolution: OnceLock<f64>,
    diameter: OnceLock<f64>,
    boundary_dist: OnceLock<Vec<f64>>,
    slab: OnceLock<Slab>,
}

/// Closed ball `{y : d(center, y) ≤ radius}` with members sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
    pub members: Vec<PointId>,
}

const TRIANGLE_FULL_SCAN: usize = 200;
const TRIANGLE_SAMPLES: usize = 100_000;

impl Space {
    pub fn new(parts: SpaceParts) -> Result<Space> {
        let n = parts.labels.len();
        if n == 0 {
            return Err(Error::Input("no points".into()));
        }
        if parts.weights.len() != n || parts.boundary.len() != n {
            return Err(invalid("weights and boundary flags must have one entry per point"));
        }
        if !parts.coords.is_empty() && parts.coords.len() != n * parts.dim {
            return Err(invalid("coordinate array does not match point count and dimension"));
        }
        let mut index = HashMap::with_capacity(n);
        for (k, &label) in parts.labels.iter().enumerate() {
            if index.insert(label, k).is_some() {
                return Err(Error::Input(format!("point record {k}: duplicate id {label}")));
            }
        }
        for (k, &w) in parts.weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Input(format!(
                    "point record {k} (id {}): weight must be positive and finite, got {w}",
                    parts.labels[k]
                )));
            }
        }
        if let Some(k) = parts.coords.iter().position(|c| !c.is_finite()) {
            let p = k / parts.dim.max(1);
            return Err(Error::Input(format!("point record {p} (id {}): non-finite coordinate", parts.labels[p])));
        }
        let metric = match parts.metric {
            MetricData::Euclidean => {
                if parts.coords.is_empty() || parts.dim == 0 {
                    return Err(Error::Input("euclidean metric requires coordinates".into()));
                }
                Metric::Euclidean
            }
            MetricData::Graph(edges) => {
                let mut adjacency = vec![Vec::new(); n];
                for (k, &(i, j, w)) in edges.iter().enumerate() {
                    if i >= n || j >= n {
                        return Err(Error::Input(format!("edge record {k}: unknown endpoint")));
                    }
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(Error::Input(format!(
                            "edge record {k}: weight must be positive and finite, got {w}"
                        )));
                    }
                    if i == j {
                        return Err(Error::Input(format!("edge record {k}: self loop")));
                    }
                    adjacency[i].push((j, w));
                    adjacency[j].push((i, w));
                }
                for list in &mut adjacency {
                    list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                }
                Metric::Graph { adjacency, rows: (0..n).map(|_| OnceLock::new()).collect() }
            }
            MetricData::Matrix(d) => {
                validate_matrix(&d, n, &parts.labels)?;
                Metric::Matrix(d)
            }
        };
        let boundary: Vec<usize> = (0..n).filter(|&k| parts.boundary[k]).collect();
        let interior: Vec<usize> = (0..n).filter(|&k| !parts.boundary[k]).collect();
        let space = Space {
            labels: parts.labels,
            index,
            dim: parts.dim,
            coords: parts.coords,
            weights: parts.weights,
            boundary_mask: parts.boundary,
            boundary,
            interior,
            metric,
            geodesic: parts.geodesic,
            analytic: None,
            execution: Execution::default(),
            resolution: OnceLock::new(),
            diameter: OnceLock::new(),
            boundary_dist: OnceLock::new(),
            slab: OnceLock::new(),
        };
        if matches!(space.metric, Metric::Euclidean) {
            space.reject_duplicate_coords()?;
        }
        if matches!(space.metric, Metric::Matrix(_)) {
            space.check_triangle()?;
        }
        Ok(space)
    }

    pub(crate) fn with_known(self, resolution: f64, diameter: f64) -> Space {
        let _ = self.resolution.set(resolution);
        let _ = self.diameter.set(diameter);
        self
    }

    pub fn with_analytic(mut self, constants: AnalyticConstants) -> Space {
        self.analytic = Some(constants);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Space {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn metric_kind(&self) -> MetricKind {
        match self.metric {
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::Graph { .. } => MetricKind::Graph,
            Metric::Matrix(_) => MetricKind::Matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self, x: PointId) -> Option<&[f64]> {
        if self.coords.is_empty() {
            None
        } else {
            Some(&self.coords[x * self.dim..(x + 1) * self.dim])
        }
    }

    pub fn has_coords(&self) -> bool {
        !self.coords.is_empty()
    }

    pub fn weight(&self, x: PointId) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self, x: PointId) -> i64 {
        self.labels[x]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Internal index for an external point id.
    pub fn lookup(&self, label: i64) -> Option<PointId> {
        self.index.get(&label).copied()
    }

    pub fn is_boundary(&self, x: PointId) -> bool {
        self.boundary_mask[x]
    }

    pub fn boundary(&self) -> &[PointId] {
        &self.boundary
    }

    pub fn interior(&self) -> &[PointId] {
        &self.interior
    }

    pub fn is_geodesic(&self) -> bool {
        self.geodesic
    }

    pub fn analytic(&self) -> Option<&AnalyticConstants> {
        self.analytic.as_ref()
    }

    pub(crate) fn edges(&self) -> Vec<(usize, usize, f64)> {
        match &self.metric {
            Metric::Graph { adjacency, .. } => adjacency
                .iter()
                .enumerate()
                .flat_map(|(i, list)| list.iter().filter(move |&&(j, _)| i < j).map(move |&(j, w)| (i, j, w)))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn matrix(&self) -> Option<&[f64]> {
        match &self.metric {
            Metric::Matrix(d) => Some(d),
            _ => None,
        }
    }

    fn check_id(&self, x: PointId) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(x))
        }
    }

    /// Checked distance.
    pub fn distance(&self, i: PointId, j: PointId) -> Result<f64> {
        self.check_id(i)?;
        self.check_id(j)?;
        let d = self.dist(i, j);
        if d.is_infinite() {
            return Err(Error::Disconnected(i, j));
        }
        Ok(d)
    }

    /// Unchecked distance; `f64::INFINITY` for disconnected graph pairs.
    pub fn dist(&self, i: PointId, j: PointId) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.metric {
            Metric::Euclidean => {
                let a = &self.coords[i * self.dim..(i + 1) * self.dim];
                let b = &self.coords[j * self.dim..(j + 1) * self.dim];
                euclid(a, b)
            }
            Metric::Graph { .. } => {
                // Canonical orientation keeps d(i,j) = d(j,i) bit-exact.
                let (s, t) = if i < j { (i, j) } else { (j, i) };
                self.graph_row(s)[t]
            }
            Metric::Matrix(d) => d[i * self.len() + j],
        }
    }

    fn graph_row(&self, s: usize) -> &[f64] {
        match &self.metric {
            Metric::Graph { adjacency, rows } => rows[s].get_or_init(|| dijkstra(adjacency, s)),
            _ => unreachable!("graph row requested on a non-graph metric"),
        }
    }

    pub fn ball(&self, x: PointId, r: f64) -> Result<Ball> {
        self.check_id(x)?;
        if !(r >= 0.0) {
            return Err(invalid(format!("ball radius must be nonnegative, got {r}")));
        }
        Ok(Ball { center: x, radius: r, members: self.ball_members(x, r) })
    }

    /// Sorted members of the closed ball; `r` must be nonnegative.
    pub fn ball_members(&self, x: PointId, r: f64) -> Vec<PointId> {
        if r == 0.0 {
            return vec![x];
        }
        match &self.metric {
            Metric::Euclidean => {
                let slab = self.slab.get_or_init(|| self.build_slab());
                let c0 = self.coords[x * self.dim];
                let pad = 1e-9 * (r + c0.abs());
                let lo = slab.keys.partition_point(|&k| k < c0 - r - pad);
                let hi = slab.keys.partition_point(|&k| k <= c0 + r + pad);
                let mut out: Vec<usize> =
                    slab.order[lo..hi].iter().copied().filter(|&y| self.dist(x, y) <= r).collect();
                out.sort_unstable();
                out
            }
            _ => (0..self.len()).filter(|&y| self.dist(x, y) <= r).collect(),
        }
    }

    fn build_slab(&self) -> Slab {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.coords[a * self.dim].total_cmp(&self.coords[b * self.dim]).then(a.cmp(&b)));
        let keys = order.iter().map(|&k| self.coords[k * self.dim]).collect();
        Slab { order, keys }
    }

    /// Sum of weights over `set`, accumulated in the given order.
    pub fn measure(&self, set: &[PointId]) -> f64 {
        set.iter().map(|&k| self.weights[k]).sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Distances from every point to the boundary (cached).
    pub fn boundary_distances(&self) -> Result<&[f64]> {
        if self.boundary.is_empty() {
            return Err(Error::Config("space has an empty boundary".into()));
        }
        Ok(self.boundary_dist.get_or_init(|| {
            par::map(self.execution, self.len(), |x| {
                if self.boundary_mask[x] {
                    0.0
                } else {
                    self.boundary.iter().map(|&b| self.dist(x, b)).fold(f64::INFINITY, f64::min)
                }
            })
        }))
    }

    pub fn dist_to_boundary(&self, x: PointId) -> Result<f64> {
        self.check_id(x)?;
        Ok(self.boundary_distances()?[x])
    }

    /// ℓ(G) = max over `set` of the boundary distance.
    pub fn largest_boundary_distance(&self, set: &[PointId]) -> Result<f64> {
        let d = self.boundary_distances()?;
        Ok(set.iter().map(|&x| d[x]).fold(0.0, f64::max))
    }

    /// ℓ(Ω).
    pub fn ell(&self) -> Result<f64> {
        self.largest_boundary_distance(&self.interior)
    }

    /// Smallest positive inter-point distance.
    pub fn resolution(&self) -> f64 {
        *self.resolution.get_or_init(|| match &self.metric {
            Metric::Graph { adjacency, .. } => {
                adjacency.iter().flatten().map(|&(_, w)| w).fold(f64::INFINITY, f64::min)
            }
            _ => {
                let n = self.len();
                par::map(self.execution, n, |i| {
                    (i + 1..n).map(|j| self.dist(i, j)).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min)
                })
                .into_iter()
                .fold(f64::INFINITY, f64::min)
            }
        })
    }

    /// Largest finite distance between two points.
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            let n = self.len();
            par::max(self.execution, n, 0.0, |i| {
                (i + 1..n).map(|j| self.dist(i, j)).filter(|d| d.is_finite()).fold(0.0, f64::max)
            })
        })
    }

    fn reject_duplicate_coords(&self) -> Result<()> {
        let slab = self.slab.get_or_init(|| self.build_slab());
        // Duplicates share the first coordinate, so only equal-key runs need scanning.
        let mut start = 0;
        while start < slab.order.len() {
            let mut end = start + 1;
            while end < slab.order.len() && slab.keys[end] == slab.keys[start] {
                end += 1;
            }
            for a in start..end {
                for b in a + 1..end {
                    let (i, j) = (slab.order[a], slab.order[b]);
                    if self.dist(i, j) == 0.0 {
                        let k = i.max(j);
                        return Err(Error::Input(format!(
                            "point record {k} (id {}): duplicates the coordinates of id {}",
                            self.labels[k],
                            self.labels[i.min(j)]
                        )));
                    }
                }
            }
            start = end;
        }
        Ok(())
    }

    fn check_triangle(&self) -> Result<()> {
        let n = self.len();
        let violated = |i: usize, j: usize, k: usize| self.dist(i, k) > self.dist(i, j) + self.dist(j, k);
        let report = |i: usize, j: usize, k: usize| {
            Error::Input(format!(
                "matrix row {i} (id {}): triangle inequality fails for ids {}, {}, {}",
                self.labels[i], self.labels[i], self.labels[j], self.labels[k]
            ))
        };
        if n <= TRIANGLE_FULL_SCAN {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if violated(i, j, k) {
                            return Err(report(i, j, k));
                        }
                    }
                }
            }
        } else {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7472_6961_6e67_6c65);
            for _ in 0..TRIANGLE_SAMPLES {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if violated(i, j, k) {
                    return Err(report(i, j, k));
                }
            }
        }
        Ok(())
    }
}

fn validate_matrix(d: &[f64], n: usize, labels: &[i64]) -> Result<()> {
    if d.len() != n * n {
        return Err(Error::Input(format!("matrix must be {n} x {n}, got {} entries", d.len())));
    }
    for i in 0..n {
        for j in 0..n {
            let v = d[i * n + j];
            let bad = |what: &str| Error::Input(format!("matrix row {i} (id {}), column {j}: {what}", labels[i]));
            if !v.is_finite() || v < 0.0 {
                return Err(bad("entries must be finite and nonnegative"));
            }
            if i == j && v != 0.0 {
                return Err(bad("diagonal must be zero"));
            }
            if i != j && v == 0.0 {
                return Err(bad("distinct points at distance zero"));
            }
            if v != d[j * n + i] {
                return Err(bad("matrix is not symmetric"));
            }
        }
    }
    Ok(())
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adjacency[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Space {
        Space::new(SpaceParts {
            labels: vec![0, 1, 2],
            dim: 0,
            coords: vec![],
            weights: vec![1.0; 3],
            boundary: vec![true, false, true],
            metric: MetricData::Graph(vec![(0, 1, 1.0), (1, 2, 1.0)]),
            geodesic: true,
        })
        .unwrap()
    }

    #[test]
    fn path_graph_distance() {
        let s = abc();
        assert_eq!(s.distance(0, 2).unwrap(), 2.0);
        assert_eq!(s.distance(1, 1).unwrap(), 0.0);
        assert!(matches!(s.distance(0, 7), Err(Error::UnknownPoint(7))));
    }

    #[test]
    fn disconnected_pair_errors() {
        let s = Space::new(SpaceParts {
            labels: vec![0, 1],
            dim: 0,
            coords: vec![],
            weights: vec![1.0; 2],
            boundary: vec![true, false],
            metric: MetricData::Graph(vec![]),
            geodesic: true,
        })
        .unwrap();
        assert!(matches!(s.distance(0, 1), Err(Error::Disconnected(0, 1))));
    }

    #[test]
    fn ball_semantics() {
        let s = interval_grid(101);
        let b = s.ball(50, 0.1).unwrap();
        assert_eq!(b.members.len(), 21);
        assert_eq!(b.members.first(), Some(&40));
        assert!((s.measure(&b.members) - 0.21).abs() < 1e-12);
        assert_eq!(s.ball(50, 0.0).unwrap().members, vec![50]);
        assert_eq!(s.ball(3, 5.0).unwrap().members.len(), 101);
        assert!(s.ball(3, -1.0).is_err());
        assert_eq!(s.measure(&[]), 0.0);
    }

    #[test]
    fn boundary_distances_1d() {
        let s = interval_grid(11);
        assert_eq!(s.dist_to_boundary(0).unwrap(), 0.0);
        assert!((s.dist_to_boundary(3).unwrap() - 0.3).abs() < 1e-15);
        assert!((s.ell().unwrap() - 0.5).abs() < 1e-15);
        let grid = interval_grid(5);
        assert_eq!(grid.distance(0, 3).unwrap(), 0.75);
    }

    #[test]
    fn matrix_loader_rejects_garbage() {
        let mk = |d: Vec<f64>| {
            Space::new(SpaceParts {
                labels: vec![10, 11, 12],
                dim: 0,
                coords: vec![],
                weights: vec![1.0; 3],
                boundary: vec![true, false, false],
                metric: MetricData::Matrix(d),
                geodesic: false,
            })
        };
        assert!(mk(vec![0., 1., 2., 1., 0., 1., 2., 1., 0.]).is_ok());
        let asym = mk(vec![0., 1., 2., 1.5, 0., 1., 2., 1., 0.]).unwrap_err();
        assert!(asym.to_string().contains("not symmetric"));
        let tri = mk(vec![0., 1., 5., 1., 0., 1., 5., 1., 0.]).unwrap_err();
        assert!(tri.to_string().contains("triangle"));
        assert!(mk(vec![0., 0., 2., 0., 0., 1., 2., 1., 0.]).is_err());
    }

    #[test]
    fn empty_space_rejected() {
        let err = Space::new(SpaceParts {
            labels: vec![],
            dim: 1,
            coords: vec![],
            weights: vec![],
            boundary: vec![],
            metric: MetricData::Euclidean,
            geodesic: true,
        })
        .unwrap_err();
        assert!(err.to_string().contains("no points"));
    }

    #[test]
    fn resolution_and_diameter() {
        let s = Space::new(SpaceParts {
            labels: vec![0, 1, 2],
            dim: 1,
            coords: vec![0.0, 0.25, 1.0],
            weights: vec![1.0; 3],
            boundary: vec![true, false, true],
            metric: MetricData::Euclidean,
            geodesic: true,
        })
        .unwrap();
        assert_eq!(s.resolution(), 0.25);
        assert_eq!(s.diameter(), 1.0);
        assert_eq!(abc().resolution(), 1.0);
        assert_eq!(abc().diameter(), 2.0);
    }
}
