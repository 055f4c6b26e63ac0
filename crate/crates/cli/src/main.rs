//! `metrograph`: spectra of metrized-graph models, convergence studies, and
//! the exact-identity selftest.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use metrograph::convergence::{
    run_schedule_with_jobs, Convention, ConvergenceReport, MeasureSelection,
};
use metrograph::graph::{parse_document, parse_measure_document};
use metrograph::kernel::{eigen_phi, kernel_table};
use metrograph::laplacian::{eigen_mu, kirchhoff_matrix};
use metrograph::measure::{dx_model_measure, voronoi_discretize};
use metrograph::model::build_model;
use metrograph::selftest::{
    all_passed, first_failure, format_table, run_selftest, SelftestConfig,
};
use metrograph::{Error, MeasureSpec, MetrizedGraph, SpectralResult};

#[derive(Parser)]
#[command(name = "metrograph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete eigenproblem on one model and write the spectrum.
    Spectrum(SpectrumArgs),
    /// Run a model schedule and report scaled-eigenvalue convergence.
    Converge(ConvergeArgs),
    /// Run the exact-identity suites over the built-in graph corpus.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Built-in graph name (interval|circle|star3|theta) or a JSON path.
    #[arg(long)]
    graph: String,
    /// `dx`, `embedded`, or a measure JSON path.
    #[arg(long, default_value = "dx")]
    measure: String,
    /// Discretization convention: dxN or voronoi.
    #[arg(long, default_value = "dxN")]
    convention: String,
    /// Target vertex count.
    #[arg(long)]
    n: usize,
    /// Number of eigenvalue clusters.
    #[arg(short, default_value_t = 4)]
    k: usize,
    /// `q` for the Kirchhoff eigenproblem, `phi` for the integral operator.
    #[arg(long, default_value = "q")]
    operator: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    graph: String,
    #[arg(long, default_value = "dx")]
    measure: String,
    #[arg(long, default_value = "dxN")]
    convention: String,
    /// Comma-separated model sizes, strictly increasing.
    #[arg(long)]
    schedule: String,
    /// Eigenvalue index `i` or inclusive range `i..j` (1-based).
    #[arg(long, default_value = "1")]
    index: String,
    /// Worker threads for schedule points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SelftestArgs {
    /// Random trials per identity suite.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Largest model size used by the suites.
    #[arg(long, default_value_t = 200)]
    max_n: usize,
    /// Replace every suite tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixture: corrupt one Kirchhoff weight to force a failure.
    #[arg(long, hide = true)]
    inject_perturbation: bool,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (grep -q, head, ...).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Validation problems exit 2; failures inside the numerics exit 1.
fn classify(e: &Error) -> u8 {
    match e {
        Error::NoConvergence
        | Error::NotPositiveDefinite(_)
        | Error::NoRoots(_)
        | Error::DeflationDegenerate
        | Error::NotMuOrthogonal(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Selftest(args) => cmd_selftest(args),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("METROGRAPH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

struct LoadedGraph {
    graph: Arc<MetrizedGraph<f64>>,
    embedded_measure: Option<MeasureSpec<f64>>,
    /// Identifier used in artifact names.
    id: String,
}

fn load_graph_arg(arg: &str) -> Result<LoadedGraph, Error> {
    if let Some(graph) = MetrizedGraph::<f64>::builtin(arg) {
        return Ok(LoadedGraph {
            graph: Arc::new(graph),
            embedded_measure: None,
            id: arg.to_string(),
        });
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path)?;
    let (graph, measure) = parse_document::<f64>(&text)?;
    let id = graph
        .name()
        .map(str::to_string)
        .or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "graph".into());
    Ok(LoadedGraph {
        graph: Arc::new(graph),
        embedded_measure: measure,
        id,
    })
}

fn load_measure_arg(
    arg: &str,
    loaded: &LoadedGraph,
) -> Result<MeasureSelection<f64>, Error> {
    match arg {
        "dx" => Ok(MeasureSelection::Lebesgue),
        "embedded" => match &loaded.embedded_measure {
            Some(spec) => Ok(MeasureSelection::Custom {
                id: "embedded".into(),
                spec: spec.clone(),
            }),
            None => Err(Error::Config(
                "--measure embedded given but the graph document declares no measure".into(),
            )),
        },
        path => {
            let text = std::fs::read_to_string(path)?;
            let spec = parse_measure_document::<f64>(&text, &loaded.graph)?;
            let id = Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "measure".into());
            Ok(MeasureSelection::Custom { id, spec })
        }
    }
}

fn parse_schedule(arg: &str) -> Result<Vec<usize>, Error> {
    let schedule: Vec<usize> = arg
        .split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad schedule entry {part:?}")))
        })
        .collect::<Result<_, _>>()?;
    if schedule.is_empty() {
        return Err(Error::Config("schedule is empty".into()));
    }
    Ok(schedule)
}

fn parse_index_range(arg: &str) -> Result<(usize, usize), Error> {
    let parse_one = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("bad index {s:?}")))
    };
    let (lo, hi) = match arg.split_once("..") {
        Some((a, b)) => (parse_one(a)?, parse_one(b)?),
        None => {
            let i = parse_one(arg)?;
            (i, i)
        }
    };
    if lo == 0 || hi < lo {
        return Err(Error::Config(format!("index range {arg:?} is empty")));
    }
    Ok((lo, hi))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<ExitCode, Error> {
    let convention = Convention::parse(&args.convention)?;
    let loaded = load_graph_arg(&args.graph)?;
    let measure = load_measure_arg(&args.measure, &loaded)?;
    if convention == Convention::DxN && !matches!(measure, MeasureSelection::Lebesgue) {
        return Err(Error::Config(
            "convention dxN is defined for the Lebesgue measure".into(),
        ));
    }
    if args.operator != "q" && args.operator != "phi" {
        return Err(Error::Config(format!(
            "unknown operator {:?}; expected q or phi",
            args.operator
        )));
    }

    let spec = match &measure {
        MeasureSelection::Lebesgue => MeasureSpec::lebesgue(&loaded.graph)?,
        MeasureSelection::Custom { spec, .. } => spec.clone(),
    };
    let model = Arc::new(build_model(
        &loaded.graph,
        args.n,
        &spec.breakpoints(&loaded.graph),
    )?);
    let mu = match convention {
        Convention::DxN => dx_model_measure(&model),
        Convention::Voronoi => voronoi_discretize(&spec, &model)?,
    };
    let q = kirchhoff_matrix(&model);
    let laplacian_spectrum = eigen_mu(&q, &mu, args.k)?;

    let config = json!({
        "command": "spectrum",
        "graph": args.graph,
        "measure": args.measure,
        "convention": convention.as_str(),
        "n": args.n,
        "k": args.k,
        "operator": args.operator,
        "seed": args.seed,
    });

    let (result, phi_view): (&SpectralResult<f64>, Option<SpectralResult<f64>>) =
        if args.operator == "phi" {
            let table = kernel_table(&model, &mu)?;
            let phi = eigen_phi(&table, &mu, args.k)?;
            println!("integral-operator spectrum (N = {})", model.n());
            println!("{:>3}  {:>14}  {:>14}  {:>4}", "i", "alpha", "1/(N lambda)", "d");
            for (i, (cp, cq)) in phi
                .clusters
                .iter()
                .zip(laplacian_spectrum.clusters.iter())
                .enumerate()
            {
                println!(
                    "{:>3}  {:>14.9}  {:>14.9}  {:>4}",
                    i + 1,
                    cp.lambda,
                    1.0 / cq.scaled,
                    cp.multiplicity
                );
            }
            (&laplacian_spectrum, Some(phi))
        } else {
            println!("laplacian spectrum (N = {})", model.n());
            println!("{:>3}  {:>14}  {:>14}  {:>4}", "i", "lambda", "N lambda", "d");
            for (i, c) in laplacian_spectrum.clusters.iter().enumerate() {
                println!(
                    "{:>3}  {:>14.9}  {:>14.9}  {:>4}",
                    i + 1,
                    c.lambda,
                    c.scaled,
                    c.multiplicity
                );
            }
            (&laplacian_spectrum, None)
        };

    let mut artifact = match &phi_view {
        Some(phi) => phi.to_json(),
        None => result.to_json(),
    };
    artifact["config"] = config;
    let dir = out_dir(args.out);
    let name = format!(
        "spectrum_{}_{}_n{}_{}.json",
        loaded.id,
        convention.as_str(),
        args.n,
        args.operator
    );
    let path = write_artifact(&dir, &name, &serde_json::to_string_pretty(&artifact)?)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_converge(args: ConvergeArgs) -> Result<ExitCode, Error> {
    let convention = Convention::parse(&args.convention)?;
    let loaded = load_graph_arg(&args.graph)?;
    let measure = load_measure_arg(&args.measure, &loaded)?;
    let schedule = parse_schedule(&args.schedule)?;
    let (index_lo, index_hi) = parse_index_range(&args.index)?;
    let dir = out_dir(args.out);

    for index in index_lo..=index_hi {
        let report = run_schedule_with_jobs(
            &loaded.graph,
            &measure,
            index,
            &schedule,
            convention,
            args.jobs.max(1),
        )?;
        print_converge_summary(&report);

        let config = json!({
            "command": "converge",
            "graph": args.graph,
            "measure": args.measure,
            "convention": convention.as_str(),
            "schedule": schedule,
            "index": index,
            "jobs": args.jobs,
            "seed": args.seed,
        });
        let mut artifact = report.to_json();
        artifact["config"] = config.clone();
        let stem = format!("converge_{}_{}_i{}", loaded.id, convention.as_str(), index);
        let json_path = write_artifact(
            &dir,
            &format!("{stem}.json"),
            &serde_json::to_string_pretty(&artifact)?,
        )?;
        let header = format!("# config: {config}\n");
        write_artifact(&dir, &format!("{stem}.csv"), &(header.clone() + &report.to_csv()))?;
        write_artifact(
            &dir,
            &format!("{stem}_plot.csv"),
            &(header + &report.to_plot_csv()),
        )?;
        println!("wrote {} (+ .csv, _plot.csv)", json_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_converge_summary(report: &ConvergenceReport<f64>) {
    println!(
        "graph {} measure {} convention {} index {}",
        report.graph_id,
        report.measure_id,
        report.convention.as_str(),
        report.index
    );
    println!(
        "{:>6}  {:>12}  {:>4}  {:>12}",
        "N", "N lambda", "d", "sup distance"
    );
    for r in &report.records {
        let sup = r
            .sup_distance
            .map(|d| format!("{d:.6}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>6}  {:>12.6}  {:>4}  {:>12}",
            r.n,
            r.scaled,
            r.merged_multiplicity.unwrap_or(r.multiplicity),
            sup
        );
    }
    for (n, why) in &report.skipped {
        println!("   n_target {n}: skipped ({why})");
    }
    if let Some(reference) = &report.reference {
        let last_err = report
            .records
            .last()
            .map(|r| (reference.lambda - r.scaled).abs());
        println!(
            "limit {} ({}), last error {}",
            reference.lambda,
            reference.provenance.as_str(),
            last_err.map(|e| format!("{e:.3e}")).unwrap_or_default()
        );
    }
    if let Some(rate) = &report.rate {
        println!("fitted rate p = {:.4} (r^2 = {:.4})", rate.p, rate.r_squared);
    }
    if let Some(monotone) = &report.monotone {
        match monotone.first_violation {
            None => println!("monotone increase: yes"),
            Some(i) => println!("monotone increase: no (first violation at record {i})"),
        }
    }
    if let Some(n0) = report.stabilization_n0 {
        println!("multiplicity stable from N = {n0}");
    }
}

fn cmd_selftest(args: SelftestArgs) -> Result<ExitCode, Error> {
    let config = SelftestConfig {
        trials: args.trials,
        max_n: args.max_n,
        seed: args.seed,
        tolerance_override: args.tol,
        inject_weight_perturbation: args.inject_perturbation,
    };
    let outcomes = run_selftest::<f64>(&config)?;
    print!("{}", format_table(&outcomes));
    if all_passed(&outcomes) {
        println!("all identity suites passed");
        Ok(ExitCode::SUCCESS)
    } else {
        let failing = first_failure(&outcomes).expect("failure present");
        eprintln!("identity suite failed: {}", failing.name);
        Ok(ExitCode::from(1))
    }
}
