use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use harmonious::asymptotics::{self, ExpansionConfig, ExpansionResult};
use harmonious::operators::ScalarField;
use harmonious::radius::{
    check_radius_bounds, fit_lipschitz, validate_admissible, validate_parameters, AdmissibilityReport, GateInputs,
    LipschitzFit, ParameterGate, RadiusBounds, RadiusBoundsReport, RadiusField,
};
use harmonious::regularity::{certify, CertifyInputs, StructuralConstants};
use harmonious::solver::{read_boundary_csv, solve_dirichlet, SolveConfig, SolveStats};
use harmonious::space::{
    disk_grid, interval_grid, lattice_graph, path_graph, probe_space, square_grid, AnalyticConstants, ProbeConfig,
    Space, SpaceProbeReport,
};
use harmonious::Error;
use serde::Serialize;

use crate::args::{
    AsymptoticsArgs, CertifyArgs, Command, GateArgs, Grid, Mode, ProbeArgs, RadiusArgs, RunManifest, SolveArgs,
    SpaceArgs, ValidateArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Serialize)]
struct Output<'a, T: Serialize> {
    manifest: &'a RunManifest,
    report: T,
}

struct Ctx<'a> {
    manifest: &'a RunManifest,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.manifest.seed
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.manifest.out.join(name)
    }

    fn json<T: Serialize>(&self, name: &str, report: T) -> Result<()> {
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, &Output { manifest: self.manifest, report })?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn field(&self, name: &str, space: &Space, field: &ScalarField) -> Result<()> {
        let path = self.path(name);
        let w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        field.write_csv(space, w)?;
        Ok(())
    }
}

pub fn execute(manifest: &RunManifest) -> Result<u8> {
    fs::create_dir_all(&manifest.out).with_context(|| format!("creating {}", manifest.out.display()))?;
    let ctx = Ctx { manifest };
    ctx.json("manifest.json", ())?;
    match &manifest.command {
        Command::Probe(a) => probe(&ctx, a),
        Command::Validate(a) => validate(&ctx, a),
        Command::Solve(a) => solve(&ctx, a),
        Command::Certify(a) => certify_cmd(&ctx, a),
        Command::Asymptotics(a) => asymptotics_cmd(&ctx, a),
    }
}

fn load_space(a: &SpaceArgs) -> Result<Space> {
    if let Some(p) = &a.space {
        return harmonious::space::load_space(p).with_context(|| format!("loading space {}", p.display()));
    }
    let grid = a.grid.context("either --space or --grid is required")?;
    let min = if grid == Grid::Disk { 5 } else { 3 };
    if a.n < min {
        return Err(Error::InvalidArgument(format!("--n must be at least {min} for this grid, got {}", a.n)).into());
    }
    Ok(match grid {
        Grid::Interval => interval_grid(a.n),
        Grid::Square => square_grid(a.n),
        Grid::Disk => disk_grid(a.n),
        Grid::Path => path_graph(a.n, 1.0 / (a.n - 1) as f64),
        Grid::Lattice => lattice_graph(a.n),
    })
}

fn load_radius(space: &Space, a: &RadiusArgs) -> Result<RadiusField> {
    match &a.rho {
        Some(p) => RadiusField::load_csv(space, p).with_context(|| format!("loading radius {}", p.display())),
        None => Ok(RadiusField::proportional(space, a.rho_factor)?),
    }
}

#[derive(Serialize)]
struct ProbeOutput {
    points: usize,
    analytic: Option<AnalyticConstants>,
    probe: SpaceProbeReport,
}

fn probe(ctx: &Ctx<'_>, a: &ProbeArgs) -> Result<u8> {
    let space = load_space(&a.space)?;
    let cfg = ProbeConfig { samples: a.samples, seed: ctx.seed(), ..ProbeConfig::default() };
    let probe = probe_space(&space, &a.deltas, &cfg)?;
    println!("doubling ≈ {}", probe.doubling_estimate);
    for e in &probe.annular_decay {
        println!("annular decay δ={} ≈ {} ({} samples)", e.delta, e.estimate, e.samples_used);
    }
    ctx.json("probe.json", ProbeOutput { points: space.len(), analytic: space.analytic().copied(), probe })?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Validation {
    pass: bool,
    lipschitz: Option<LipschitzFit>,
    admissibility: AdmissibilityReport,
    radius_bounds: RadiusBoundsReport,
    gate: ParameterGate,
}

fn run_validation(space: &Space, rho: &RadiusField, g: &GateArgs, seed: u64) -> Result<Validation> {
    let admissibility = validate_admissible(space, rho)?;
    let (l, lipschitz) = match g.l {
        Some(l) => (l, None),
        None => {
            let mut r = rho.clone();
            let fit = fit_lipschitz(space, &mut r, seed)?;
            (fit.reported, Some(fit))
        }
    };
    let gate = validate_parameters(GateInputs {
        alpha: g.alpha,
        l,
        epsilon: g.epsilon,
        beta: g.beta,
        lambda: g.lambda,
        ell: space.ell()?,
        delta: g.delta,
    });
    let radius_bounds =
        check_radius_bounds(space, rho, RadiusBounds { lambda: g.lambda, beta: g.beta, epsilon: g.epsilon })?;
    Ok(Validation {
        pass: admissibility.pass && gate.pass && radius_bounds.pass,
        lipschitz,
        admissibility,
        radius_bounds,
        gate,
    })
}

fn report_validation(v: &Validation) {
    for c in &v.gate.failed_conditions {
        eprintln!("failed: {c}");
    }
    for p in v.admissibility.violations.iter().take(10) {
        eprintln!("inadmissible radius at point id {}: ρ = {} ({})", p.id, p.rho, p.reason);
    }
    for p in v.radius_bounds.violations.iter().take(10) {
        eprintln!("radius bound violated at point id {}: ρ = {} outside [{}, {}]", p.id, p.rho, p.lower, p.upper);
    }
}

fn validate(ctx: &Ctx<'_>, a: &ValidateArgs) -> Result<u8> {
    let space = load_space(&a.space)?;
    let rho = load_radius(&space, &a.radius)?;
    let v = run_validation(&space, &rho, &a.gate, ctx.seed())?;
    report_validation(&v);
    println!("validation {}", if v.pass { "passed" } else { "failed" });
    let code = if v.pass { EXIT_OK } else { EXIT_FAILED };
    ctx.json("validate.json", v)?;
    Ok(code)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    config: &'a SolveConfig,
    forced: bool,
    validation: Option<Validation>,
    stats: SolveStats,
}

fn solve(ctx: &Ctx<'_>, a: &SolveArgs) -> Result<u8> {
    let space = load_space(&a.space)?;
    let rho = load_radius(&space, &a.radius)?;
    let config = match &a.config {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let c: SolveConfig =
                serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", p.display()))?;
            c
        }
        None => SolveConfig {
            alpha: a.alpha.context("--alpha is required without --config")?,
            tolerance: a.tolerance,
            max_iterations: a.max_iterations,
            record_every: a.record_every,
            ..SolveConfig::new(0.0, 1.0, 1)
        },
    };
    let boundary = match (&a.boundary, &a.boundary_fn) {
        (Some(p), _) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_boundary_csv(&space, BufReader::new(f)).with_context(|| format!("reading boundary {}", p.display()))?
        }
        (None, Some(g)) => {
            ensure!(space.has_coords(), "--boundary-fn needs a space with coordinates");
            space.boundary().iter().map(|&b| (b, g.eval(space.coords(b).expect("coordinates present")))).collect()
        }
        (None, None) => bail!("either --boundary or --boundary-fn is required"),
    };
    let initial = match &a.initial {
        Some(p) => {
            Some(ScalarField::load_csv(&space, p).with_context(|| format!("loading initial field {}", p.display()))?)
        }
        None => None,
    };
    let adm = validate_admissible(&space, &rho)?;
    if !adm.pass {
        for p in adm.violations.iter().take(10) {
            eprintln!("inadmissible radius at point id {}: ρ = {} ({})", p.id, p.rho, p.reason);
        }
        return Err(Error::NotAdmissible(format!("{} points violate admissibility", adm.violations.len())).into());
    }
    let validation = match (a.epsilon, a.lambda) {
        (Some(epsilon), Some(lambda)) => {
            let g = GateArgs { alpha: config.alpha, epsilon, beta: a.beta, lambda, delta: a.delta, l: a.l };
            Some(run_validation(&space, &rho, &g, ctx.seed())?)
        }
        (None, None) => None,
        _ => bail!("--epsilon and --lambda must be given together"),
    };
    if let Some(v) = validation.as_ref().filter(|v| !v.pass) {
        report_validation(v);
        if !a.force {
            eprintln!("hypotheses failed; rerun with --force to solve anyway");
            ctx.json("validate.json", v)?;
            return Ok(EXIT_FAILED);
        }
    }
    let report = solve_dirichlet(&space, &rho, &boundary, &config, initial.as_ref())?;
    ctx.field("field.csv", &space, &report.field)?;
    let stats = report.stats;
    let converged = stats.converged;
    println!(
        "{} after {} iterations, residual {:e}",
        if converged { "converged" } else { "not converged" },
        stats.iterations_used,
        stats.final_residual
    );
    ctx.json("solve_report.json", SolveOutput { config: &config, forced: a.force, validation, stats })?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn certify_cmd(ctx: &Ctx<'_>, a: &CertifyArgs) -> Result<u8> {
    let space = load_space(&a.space)?;
    let rho = load_radius(&space, &a.radius)?;
    let u = ScalarField::load_csv(&space, &a.field).with_context(|| format!("loading field {}", a.field.display()))?;
    let g = &a.gate;
    let inputs = CertifyInputs {
        alpha: g.alpha,
        epsilon: g.epsilon,
        beta: g.beta,
        lambda: g.lambda,
        delta: g.delta,
        m: a.m,
        tolerance: a.tolerance,
        l: g.l,
        seed: ctx.seed(),
    };
    let probe = ProbeConfig { seed: ctx.seed(), ..ProbeConfig::default() };
    let cert = certify(&space, &rho, &u, &inputs, |l| StructuralConstants::for_space(&space, l, g.delta, &probe))?;
    for c in &cert.failed_conditions {
        eprintln!("failed: {c}");
    }
    match cert.theoretical_constant {
        Some(t) => println!("empirical {} vs theoretical {}", cert.empirical_constant, t),
        None => println!("empirical {}, no theoretical constant", cert.empirical_constant),
    }
    let code = if cert.pass { EXIT_OK } else { EXIT_FAILED };
    ctx.json("certificate.json", cert)?;
    Ok(code)
}

fn write_quotients(path: &Path, r: &ExpansionResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["radius", "quotient"])?;
    for (rho, q) in r.radii.iter().zip(&r.quotients) {
        w.write_record([rho.to_string(), q.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn asymptotics_cmd(ctx: &Ctx<'_>, a: &AsymptoticsArgs) -> Result<u8> {
    let f = asymptotics::lookup(&a.function)?;
    if let Some(n) = a.n {
        if n != a.x.len() {
            return Err(Error::InvalidArgument(format!(
                "--n {n} does not match a point with {} coordinates",
                a.x.len()
            ))
            .into());
        }
    }
    let cfg = ExpansionConfig { radii: a.radii.clone(), h: a.h, bounds: None };
    let r = match a.mode {
        Mode::Mean => asymptotics::expansion_mean(&f, &a.x, &cfg)?,
        Mode::Midrange => asymptotics::expansion_midrange(&f, &a.x, &cfg)?,
        Mode::P => {
            let p = a.p.ok_or_else(|| Error::InvalidArgument("--mode p needs --p".into()))?;
            asymptotics::expansion_p(&f, &a.x, p, &cfg)?
        }
    };
    println!("predicted {} extrapolated {} error {:e}", r.predicted, r.extrapolated, r.error);
    write_quotients(&ctx.path("quotients.csv"), &r)?;
    ctx.json("summary.json", r)?;
    Ok(EXIT_OK)
}
