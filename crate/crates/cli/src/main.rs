use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use edgeindex::bloch::bulk_gaps;
use edgeindex::current::{boundary_current, current_report};
use edgeindex::experiments::svg::{heat_map, spectrum_strip};
use edgeindex::experiments::{
    run_suite_with_jobs, site_csv, BulkConfig, CurrentConfig, DomainConfig, IndexConfig, SuiteConfig, SCHEMA_VERSION,
};
use edgeindex::index::{bloch_chern_model, prepare, theta_report, CrossingMap};
use edgeindex::spectral::{default_min_width, detect_gaps, eigenvalues, gap_filling_ratio, make_smoothstep, GapReport};
use edgeindex::{Error, Result};

#[derive(Parser)]
#[command(name = "edgeindex", version, about = "Coarse edge indices of magnetic lattice Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Results directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Window radius around each crossing.
    #[arg(long, global = true)]
    window: Option<f64>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Torus spectrum, bulk gaps and Bloch Chern numbers.
    Bulk,
    /// Gap filling of a domain against its bulk torus.
    Domain,
    /// Windowed relative index at every crossing of a cut with the boundary.
    Index,
    /// Boundary current compared with the windowed index.
    Current,
    /// Run a scenario suite: gapfill, index, cobordism, two-boundary, shifts, decay, all.
    Suite { name: String },
}

fn read_config<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    let path = path.ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json(dir: &Path, file: &str, command: &str, body: Value) -> Result<()> {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    fs::write(dir.join(file), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

fn spectrum_csv(values: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, e) in values.iter().enumerate() {
        out.push_str(&format!("{i},{e:.12e}\n"));
    }
    out
}

fn cmd_bulk(cli: &Cli) -> Result<bool> {
    let cfg: BulkConfig = read_config(cli.config.as_deref())?;
    let torus = cfg.validate()?;
    let spec = eigenvalues(&cfg.model.hamiltonian(&torus)?)?;
    let gaps = detect_gaps(&spec, default_min_width(&spec));
    let chern = bloch_chern_model(&cfg.model, cfg.k_grid())?;
    fs::create_dir_all(&cli.out)?;
    fs::write(cli.out.join("spectrum.csv"), spectrum_csv(&spec))?;
    fs::write(cli.out.join("spectrum.svg"), spectrum_strip(&spec, &gaps.gaps, &format!("torus spectrum, flux {}", cfg.model.flux)))?;
    write_json(&cli.out, "chern.json", "bulk", json!({ "chern": chern, "torus_gaps": gaps, "bloch_gaps": bulk_gaps(&cfg.model) }))?;
    println!("flux {}: per_band {:?} cumulative {:?}, {} torus gaps", cfg.model.flux, chern.per_band, chern.cumulative, gaps.gaps.len());
    Ok(true)
}

fn cmd_domain(cli: &Cli) -> Result<bool> {
    let cfg: DomainConfig = read_config(cli.config.as_deref())?;
    let (domain, torus) = cfg.validate()?;
    let bulk = eigenvalues(&cfg.model.hamiltonian(&torus)?)?;
    let mut report = detect_gaps(&bulk, default_min_width(&bulk));
    let spec = eigenvalues(&cfg.model.hamiltonian(&domain)?)?;
    let mut fill = Vec::with_capacity(report.gaps.len());
    for g in &report.gaps {
        let single = GapReport { gaps: vec![*g], min_width: report.min_width, fill_fraction: vec![] };
        fill.push(gap_filling_ratio(&single, &spec, cfg.resolution * g.width())?[0]);
    }
    report.fill_fraction = fill.clone();
    fs::create_dir_all(&cli.out)?;
    fs::write(cli.out.join("spectrum.csv"), spectrum_csv(&spec))?;
    fs::write(cli.out.join("domain.csv"), domain.to_csv())?;
    fs::write(cli.out.join("spectrum.svg"), spectrum_strip(&spec, &report.gaps, &format!("{} spectrum, bulk gaps shaded", domain.shape.name())))?;
    write_json(&cli.out, "domain.json", "domain", json!({ "sites": domain.len(), "resolution": cfg.resolution, "bulk": report }))?;
    println!("{} sites, fill per gap {:?}", domain.len(), fill);
    Ok(true)
}

fn index_config(cli: &Cli) -> Result<IndexConfig> {
    let mut cfg: IndexConfig = read_config(cli.config.as_deref())?;
    if cli.window.is_some() {
        cfg.window = cli.window;
    }
    if let Some(t) = cli.tolerance {
        cfg.tolerance = t;
    }
    Ok(cfg)
}

fn cmd_index(cli: &Cli) -> Result<bool> {
    let cfg = index_config(cli)?;
    let (domain, partition) = cfg.validate()?;
    let prep = prepare(&domain, &cfg.model, cfg.gap_index, None)?;
    let report = theta_report(&prep, &partition, &cfg.params())?;
    let mut ok = report.total_trace.abs() <= 1e-9;
    if let Some(expected) = &cfg.expected {
        ok &= expected.len() == report.crossings.len();
        for (c, e) in report.crossings.iter().zip(expected) {
            ok &= c.rounded == *e && c.residual <= cfg.tolerance;
        }
    }
    fs::create_dir_all(&cli.out)?;
    write_json(&cli.out, "index.json", "index", json!({ "passed": ok, "report": report }))?;
    for c in &report.crossings {
        println!("crossing {} at ({}, {}) {:?}: {:+.6} -> {:+}", c.id, c.anchor.x, c.anchor.y, c.tag, c.value, c.rounded);
    }
    println!("theta {:+.6}, total trace {:.2e}", report.theta, report.total_trace);
    Ok(ok)
}

fn cmd_current(cli: &Cli) -> Result<bool> {
    let cfg: CurrentConfig = index_config(cli)?;
    let (domain, partition) = cfg.validate()?;
    let prep = prepare(&domain, &cfg.model, cfg.gap_index, None)?;
    let params = cfg.params();
    let (current, index) = if cfg.identity_projection {
        let phi = make_smoothstep((prep.gap.lo, prep.gap.hi), cfg.kind)?;
        let map = CrossingMap::detect(&domain, &partition);
        let windows = map.windows(&domain, params.window);
        let cur = boundary_current(&domain, &prep.ed, &phi, &vec![1.0; domain.len()], &map, &windows)?;
        (cur, vec![0.0; map.len()])
    } else {
        let index = theta_report(&prep, &partition, &params)?;
        (current_report(&prep, &partition, &params)?, index.crossings.iter().map(|c| c.value).collect())
    };
    let mut ok = current.trace_total.abs() <= 1e-9 && current.crossings.len() == index.len();
    for (c, v) in current.crossings.iter().zip(&index) {
        ok &= (c.value - v).abs() <= cfg.tolerance;
    }
    fs::create_dir_all(&cli.out)?;
    fs::write(cli.out.join("current_density.csv"), site_csv(&domain, &current.density))?;
    fs::write(cli.out.join("current_density.svg"), heat_map(&domain, &current.density, "current density"))?;
    write_json(&cli.out, "current.json", "current", json!({ "passed": ok, "index": index, "report": current }))?;
    for (c, v) in current.crossings.iter().zip(&index) {
        println!("crossing {} at ({}, {}): current {:+.6}, index {:+.6}", c.id, c.anchor.x, c.anchor.y, c.value, v);
    }
    Ok(ok)
}

fn cmd_suite(cli: &Cli, name: &str) -> Result<bool> {
    let mut cfg: SuiteConfig = match &cli.config {
        Some(p) => read_config(Some(p))?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.window.is_some() {
        cfg.window = cli.window;
    }
    if cli.tolerance.is_some() {
        cfg.tolerance = cli.tolerance;
    }
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_suite_with_jobs(name, &cfg, jobs)?;
    report.write(&cli.out)?;
    for s in &report.scenarios {
        let status = match (&s.skipped, s.passed) {
            (Some(_), _) => "SKIP",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        println!("{status} {}", s.name);
        for a in s.assertions.iter().filter(|a| !a.passed) {
            println!("     {}: observed {:.6e}, expected {:.6e} (tol {:.1e})", a.name, a.observed, a.expected, a.tolerance);
        }
    }
    println!("suite {name}: {}", if report.passed { "passed" } else { "failed" });
    Ok(report.passed)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Bulk => cmd_bulk(cli),
        Command::Domain => cmd_domain(cli),
        Command::Index => cmd_index(cli),
        Command::Current => cmd_current(cli),
        Command::Suite { name } => cmd_suite(cli, name),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(5),
        Err(e) => {
            if let Error::Inadmissible(rep) = &e {
                let written = fs::create_dir_all(&cli.out)
                    .map_err(Error::from)
                    .and_then(|_| write_json(&cli.out, "admissibility.json", "index", json!({ "admissibility": rep })));
                if let Err(w) = written {
                    eprintln!("error: {w}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
