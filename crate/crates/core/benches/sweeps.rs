use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use harmonious::operators::{Averaging, ScalarField};
use harmonious::pairs::pair_max;
use harmonious::radius::RadiusField;
use harmonious::space::square_grid;
use harmonious::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_t");
    for n in [65, 129] {
        let s = square_grid(n);
        let rho = RadiusField::proportional(&s, 0.4).unwrap();
        let u = ScalarField::from_fn(&s, |x| {
            let p = s.coords(x).unwrap();
            p[0] * p[0] - p[1] * p[1]
        });
        for (name, exec) in MODES {
            let ops = Averaging::with_execution(&s, &rho, exec).unwrap();
            g.bench_with_input(BenchmarkId::new(name, n), &u, |b, u| b.iter(|| ops.apply_t(black_box(u), 0.3)));
        }
    }
    g.finish();
}

fn construction(c: &mut Criterion) {
    let mut g = c.benchmark_group("balls");
    g.sample_size(10);
    let s = square_grid(65);
    let rho = RadiusField::proportional(&s, 0.4).unwrap();
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| Averaging::with_execution(&s, &rho, exec).unwrap().stored_members()));
    }
    g.finish();
}

fn pairs(c: &mut Criterion) {
    let mut g = c.benchmark_group("pair_max");
    g.sample_size(10);
    let s = square_grid(65);
    let set: Vec<usize> = (0..s.len()).step_by(2).collect();
    let u: Vec<f64> = (0..s.len()).map(|x| (x as f64 * 0.37).sin()).collect();
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| pair_max(exec, &set, 0, |x, y| (u[x] - u[y]).abs() / s.dist(x, y)).0));
    }
    g.finish();
}

criterion_group!(benches, sweep, construction, pairs);
criterion_main!(benches);
