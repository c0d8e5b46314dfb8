use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maxwell_mg::mesh::{
    build_topology, generate_mesh, read_mesh, refine_toward_edge, refine_uniform, write_mesh,
};
use maxwell_mg::mesh::{AxisLine, DomainKind, DomainSpec};
use maxwell_mg::report::{
    compare_reference, run_experiment, ConvergenceReport, ExperimentConfig, ReferenceSummary,
};
use maxwell_mg::Error;

#[derive(Parser)]
#[command(
    name = "maxwell-mg",
    version,
    about = "Maxwell eigenvalues with edge elements and multigrid inverse iteration"
)]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, refine or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Run an experiment and write its report.
    Solve(SolveArgs),
    /// Recompute errors and rates of a stored report.
    Rates(RatesArgs),
    /// Compare a stored report against reference eigenvalues.
    Check(CheckArgs),
}

#[derive(Subcommand)]
enum MeshCommand {
    Generate {
        #[arg(long, value_parser = parse_domain)]
        domain: DomainKind,
        #[arg(long)]
        resolution: usize,
        /// Slab thickness.
        #[arg(long)]
        thickness: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    Refine {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Refine toward the segment `x0,y0,z0:x1,y1,z1` instead of uniformly.
        #[arg(long, value_parser = parse_segment)]
        toward_edge: Option<AxisLine>,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
    },
    Inspect {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the coarse eigensolver.
    #[arg(long)]
    seed: Option<u64>,
    /// Add the per-level direct eigenvalues.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct RatesArgs {
    /// A `report.json` written by `solve`.
    #[arg(long)]
    report: PathBuf,
    /// Configuration whose references replace the stored ones.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the updated CSV; printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    report: PathBuf,
    /// Configuration with the references; the stored one when absent.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Numerical(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Parse { .. }
            | Error::UnknownDomainKind(_)
            | Error::InvalidDomainParameter { .. }
            | Error::InvalidResolution(_)
            | Error::InvalidMaterial { .. }
            | Error::MissingMaterial(_)
            | Error::InvalidScheme(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` is a failed check.
fn run(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Mesh(m) => mesh(m).map(|_| true),
        Command::Solve(args) => solve(args, cli.quiet),
        Command::Rates(args) => rates(args).map(|_| true),
        Command::Check(args) => check(args),
    }
}

fn mesh(cmd: &MeshCommand) -> Result<(), Failure> {
    match cmd {
        MeshCommand::Generate {
            domain,
            resolution,
            thickness,
            out,
        } => {
            let mut spec = DomainSpec::new(*domain);
            if let Some(t) = thickness {
                spec = spec.with_parameter("thickness", *t);
            }
            let mesh = generate_mesh(&spec, *resolution)?;
            write_mesh(&mesh, out)?;
            print_mesh_summary(&mesh);
        }
        MeshCommand::Refine {
            input,
            out,
            toward_edge,
            ratio,
        } => {
            let mesh = read_mesh(input)?;
            let fine = match toward_edge {
                Some(axis) => refine_toward_edge(&mesh, axis, *ratio)?,
                None => refine_uniform(&mesh)?,
            };
            write_mesh(&fine, out)?;
            print_mesh_summary(&fine);
        }
        MeshCommand::Inspect { input } => {
            let mesh = read_mesh(input)?;
            mesh.check_invariants()?;
            print_mesh_summary(&mesh);
        }
    }
    Ok(())
}

fn print_mesh_summary(mesh: &maxwell_mg::mesh::Mesh) {
    let topo = build_topology(mesh);
    println!("dimension            {}", mesh.dim());
    println!("vertices             {}", mesh.num_vertices());
    println!("cells                {}", mesh.num_cells());
    println!("edges                {}", topo.num_edges());
    println!("free edges           {}", topo.num_free_edges());
    println!("free vertices        {}", topo.num_free_vertices());
    println!("boundary components  {}", mesh.boundary_components());
    println!("mesh size            {:.6}", mesh.mesh_size());
    println!("volume               {:.6}", mesh.total_volume());
}

fn solve(args: &SolveArgs, quiet: bool) -> Result<bool, Failure> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.coarse.seed = seed;
    }
    if args.oracle {
        cfg.oracle.enabled = true;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = Some(out.clone());
    }
    let dir = cfg.output_dir();
    let mut progress = |line: &str| {
        if !quiet {
            eprintln!("{line}");
        }
    };
    let report = match run_experiment(&cfg, &mut progress) {
        Ok(r) => r,
        Err(e) => {
            e.partial.write_outputs(&dir)?;
            eprintln!("partial report written to {}", dir.display());
            return Err(Failure::Numerical(e.to_string()));
        }
    };
    report.write_outputs(&dir)?;
    if !quiet {
        print_table(&report);
    }
    let summary = compare_reference(&report, &cfg.references);
    print_summary(&summary);
    Ok(summary.passed())
}

fn load_config(
    path: Option<&Path>,
    report: &ConvergenceReport,
) -> Result<ExperimentConfig, Failure> {
    Ok(match path {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => report.metadata.config.clone(),
    })
}

fn rates(args: &RatesArgs) -> Result<(), Failure> {
    let mut report = ConvergenceReport::read_json(&args.report)?;
    let cfg = load_config(args.config.as_deref(), &report)?;
    report.recompute_rates(&cfg);
    match &args.out {
        Some(path) => report.write_csv(std::fs::File::create(path).map_err(Error::from)?)?,
        None => print_table(&report),
    }
    Ok(())
}

fn check(args: &CheckArgs) -> Result<bool, Failure> {
    let report = ConvergenceReport::read_json(&args.report)?;
    let cfg = load_config(args.config.as_deref(), &report)?;
    if let Some(f) = &report.failure {
        eprintln!("report is partial: {f}");
    }
    let summary = compare_reference(&report, &cfg.references);
    print_summary(&summary);
    Ok(summary.passed() && report.failure.is_none())
}

fn print_table(report: &ConvergenceReport) {
    let opt = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$}"));
    println!(
        "{:>3} {:>5} {:>8} {:>14} {:>14} {:>11} {:>6}",
        "k", "level", "dof", "scheme", "direct", "error", "R"
    );
    for r in &report.rows {
        println!(
            "{:>3} {:>5} {:>8} {:>14.6} {:>14} {:>11} {:>6}",
            r.k,
            r.level,
            r.dof,
            r.lambda_scheme,
            opt(r.lambda_direct, 6),
            r.error.map_or("-".to_string(), |e| format!("{e:.3e}")),
            opt(r.rate, 2)
        );
    }
}

fn print_summary(summary: &ReferenceSummary) {
    for v in &summary.verdicts {
        println!(
            "{} k={} value={} reference={} error={} tol={} {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.k,
            v.value.map_or("-".into(), |x| format!("{x:.6}")),
            v.reference,
            v.relative_error.map_or("-".into(), |e| format!("{e:.3e}")),
            v.tolerance,
            v.source
        );
    }
}

fn parse_domain(s: &str) -> Result<DomainKind, String> {
    match s {
        "unit_cube" | "cube" => Ok(DomainKind::UnitCube),
        "thick_l" => Ok(DomainKind::ThickL),
        "slab" => Ok(DomainKind::Slab),
        "cube_cavity" | "cavity" => Ok(DomainKind::CubeCavity),
        "unit_square_2d" | "square" => Ok(DomainKind::UnitSquare2D),
        other => Err(Error::UnknownDomainKind(other.into()).to_string()),
    }
}

fn parse_segment(s: &str) -> Result<AxisLine, String> {
    let point = |p: &str| -> Result<[f64; 3], String> {
        let v: Vec<f64> = p
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        <[f64; 3]>::try_from(v).map_err(|_| format!("`{p}` is not a 3D point"))
    };
    let (a, b) = s.split_once(':').ok_or("expected `x0,y0,z0:x1,y1,z1`")?;
    Ok(AxisLine {
        start: point(a)?,
        end: point(b)?,
    })
}
