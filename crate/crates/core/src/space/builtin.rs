//! Built-in spaces with Lebesgue-cell weights and analytic constants.

use super::{AnalyticConstants, MetricData, Space, SpaceParts};

fn build(parts: SpaceParts) -> Space {
    Space::new(parts).expect("built-in space parts are valid by construction")
}

fn check_n(n: usize, min: usize) {
    assert!(n >= min, "built-in grid needs at least {min} points per side, got {n}");
}

/// Uniform grid on [0, 1] with `n` points, weight h, boundary {0, 1}.
pub fn interval_grid(n: usize) -> Space {
    check_n(n, 3);
    let h = 1.0 / (n - 1) as f64;
    let coords: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    build(SpaceParts {
        labels: (0..n as i64).collect(),
        dim: 1,
        coords,
        weights: vec![h; n],
        boundary: (0..n).map(|k| k == 0 || k == n - 1).collect(),
        metric: MetricData::Euclidean,
        geodesic: true,
    })
    .with_known(h, 1.0)
    .with_analytic(AnalyticConstants::lebesgue(1))
}

/// `n × n` grid on [0, 1]², point `i * n + j` at `(i h, j h)`, weight h².
pub fn square_grid(n: usize) -> Space {
    check_n(n, 3);
    let h = 1.0 / (n - 1) as f64;
    let mut coords = Vec::with_capacity(2 * n * n);
    let mut boundary = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            coords.push(i as f64 / (n - 1) as f64);
            coords.push(j as f64 / (n - 1) as f64);
            boundary.push(i == 0 || j == 0 || i == n - 1 || j == n - 1);
        }
    }
    build(SpaceParts {
        labels: (0..(n * n) as i64).collect(),
        dim: 2,
        coords,
        weights: vec![h * h; n * n],
        boundary,
        metric: MetricData::Euclidean,
        geodesic: true,
    })
    .with_known(h, std::f64::consts::SQRT_2)
    .with_analytic(AnalyticConstants::lebesgue(2))
}

/// Lattice points of spacing h = 2/(n−1) inside the closed unit disk.
/// A point is on the boundary when one of its four lattice neighbours is outside.
pub fn disk_grid(n: usize) -> Space {
    check_n(n, 5);
    let h = 2.0 / (n - 1) as f64;
    let pos = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    let inside = |i: isize, j: isize| {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            return false;
        }
        let (x, y) = (pos(i as usize), pos(j as usize));
        x * x + y * y <= 1.0 + 1e-12
    };
    let mut coords = Vec::new();
    let mut boundary = Vec::new();
    for i in 0..n as isize {
        for j in 0..n as isize {
            if !inside(i, j) {
                continue;
            }
            coords.push(pos(i as usize));
            coords.push(pos(j as usize));
            let edge = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(a, b)| !inside(i + a, j + b));
            boundary.push(edge);
        }
    }
    let count = boundary.len();
    build(SpaceParts {
        labels: (0..count as i64).collect(),
        dim: 2,
        coords,
        weights: vec![h * h; count],
        boundary,
        metric: MetricData::Euclidean,
        geodesic: true,
    })
    .with_known(h, 2.0)
    .with_analytic(AnalyticConstants::lebesgue(2))
}

/// Path graph with `n` nodes and edges of length `spacing`; endpoints form the boundary.
pub fn path_graph(n: usize, spacing: f64) -> Space {
    check_n(n, 3);
    assert!(spacing > 0.0, "path spacing must be positive");
    build(SpaceParts {
        labels: (0..n as i64).collect(),
        dim: 1,
        coords: (0..n).map(|k| k as f64 * spacing).collect(),
        weights: vec![spacing; n],
        boundary: (0..n).map(|k| k == 0 || k == n - 1).collect(),
        metric: MetricData::Graph((0..n - 1).map(|k| (k, k + 1, spacing)).collect()),
        geodesic: true,
    })
    .with_known(spacing, (n - 1) as f64 * spacing)
    .with_analytic(AnalyticConstants::lebesgue(1))
}

/// Four-neighbour lattice graph on [0, 1]² with edge length h = 1/(n−1).
pub fn lattice_graph(n: usize) -> Space {
    check_n(n, 3);
    let h = 1.0 / (n - 1) as f64;
    let mut coords = Vec::with_capacity(2 * n * n);
    let mut boundary = Vec::with_capacity(n * n);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            coords.push(i as f64 / (n - 1) as f64);
            coords.push(j as f64 / (n - 1) as f64);
            boundary.push(i == 0 || j == 0 || i == n - 1 || j == n - 1);
            let k = i * n + j;
            if i + 1 < n {
                edges.push((k, k + n, h));
            }
            if j + 1 < n {
                edges.push((k, k + 1, h));
            }
        }
    }
    build(SpaceParts {
        labels: (0..(n * n) as i64).collect(),
        dim: 2,
        coords,
        weights: vec![h * h; n * n],
        boundary,
        metric: MetricData::Graph(edges),
        geodesic: true,
    })
    .with_known(h, 2.0)
    .with_analytic(AnalyticConstants::lebesgue(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_shapes() {
        let s = square_grid(5);
        assert_eq!(s.len(), 25);
        assert_eq!(s.boundary().len(), 16);
        assert_eq!(s.coords(7).unwrap(), &[0.25, 0.5]);
        let d = disk_grid(9);
        assert!(d.interior().len() > 10);
        assert!(d.boundary().iter().all(|&b| {
            let c = d.coords(b).unwrap();
            (c[0] * c[0] + c[1] * c[1]).sqrt() > 1.0 - 0.25 - 1e-12
        }));
        let g = lattice_graph(5);
        assert_eq!(g.distance(0, 24).unwrap(), 2.0);
        let p = path_graph(4, 0.5);
        assert_eq!(p.distance(0, 3).unwrap(), 1.5);
    }
}
