use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gauge_peps::archive::Archive;
use gauge_peps::config::LoadedConfig;
use gauge_peps::pipeline;
use gauge_peps::report::{CheckRecord, Report};
use gauge_peps::suites::{self, Context, SUITES};
use gauge_peps::{CliError, CliResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "gauge-peps", version, about = "Build and certify gauge-invariant PEPS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write vertex, link and unified tensors (or fermionic operators) as archives.
    Build(Common),
    /// Run check suites, or check archives.
    Check {
        #[command(flatten)]
        common: Common,
        /// Archive to check instead of (or besides) the suites.
        #[arg(long)]
        archive: Vec<PathBuf>,
    },
    /// Contract the configured lattice and check its invariance.
    Contract(Common),
    /// Summarize the reports in `--out`.
    Report(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated suites.
    #[arg(long, value_delimiter = ',')]
    suite: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces every upper-bound tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

struct Session {
    loaded: LoadedConfig,
    seed: Option<u64>,
}

impl Session {
    fn open(common: &Common) -> CliResult<Self> {
        let mut loaded = match &common.config {
            Some(path) => LoadedConfig::load(path)?,
            None => LoadedConfig::defaults(),
        };
        if let Some(t) = common.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage(format!("--tolerance must be positive, got {t}")));
            }
            let tol = &mut loaded.config.tolerances;
            tol.local = t;
            tol.global = t;
            tol.exact = t;
        }
        let seed = common.seed.or(loaded.config.seed);
        Ok(Self { loaded, seed })
    }

    fn seed(&self, what: &str) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::Usage(format!("{what} draws random numbers; pass --seed or set `seed` in the config")))
    }

    fn report(&self, suite: &str, checks: Vec<CheckRecord>) -> Report {
        Report::new(suite, self.seed, self.loaded.hash.clone(), checks)
    }
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn emit(report: &Report, out: Option<&Path>) -> CliResult<bool> {
    for check in &report.checks {
        println!("{}", check.line());
    }
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report.passed)
}

fn build(common: &Common) -> CliResult<bool> {
    let session = Session::open(common)?;
    let model = session.loaded.config.model()?;
    let seed = if pipeline::needs_rng(&model) { session.seed("build")? } else { session.seed.unwrap_or(0) };
    let dir = out_dir(common);
    std::fs::create_dir_all(&dir)?;
    for (name, archive) in pipeline::build_archives(&model, &mut ChaCha8Rng::seed_from_u64(seed))? {
        let path = dir.join(name);
        archive.write(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

fn selected_suites(common: &Common, session: &Session, archives: bool) -> CliResult<Vec<String>> {
    let names: Vec<String> = match &common.suite {
        Some(list) => {
            let names: Vec<String> = list.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if names.is_empty() {
                return Err(CliError::Usage("--suite selects no suite".into()));
            }
            names
        }
        None if archives => Vec::new(),
        None if !session.loaded.config.suites.is_empty() => session.loaded.config.suites.clone(),
        None => vec!["model".into()],
    };
    if let Some(bad) = names.iter().find(|n| !SUITES.contains(&n.as_str())) {
        return Err(CliError::Usage(format!("unknown suite `{bad}`; known suites: {}", SUITES.join(", "))));
    }
    Ok(names)
}

fn check(common: &Common, archives: &[PathBuf]) -> CliResult<bool> {
    let session = Session::open(common)?;
    let names = selected_suites(common, &session, !archives.is_empty())?;
    let seed = session.seed("check")?;
    let ctx = Context::new(&session.loaded.config, seed);
    let out = common.out.as_deref();
    let mut passed = true;
    for path in archives {
        let archive = Archive::read(path)?;
        let elements = suites::check_elements(archive.group, &ctx, "archive");
        let checks = archive.checks(&elements, ctx.tolerances.local, ctx.tolerances.global)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("archive");
        passed &= emit(&session.report(&format!("archive-{stem}"), checks), out)?;
    }
    for name in &names {
        let checks = suites::run(name, &ctx)?;
        passed &= emit(&session.report(name, checks), out)?;
    }
    Ok(passed)
}

fn contract(common: &Common) -> CliResult<bool> {
    let session = Session::open(common)?;
    let model = session.loaded.config.model()?;
    let seed = session.seed("contract")?;
    let (layout, state) = pipeline::contract(&model, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let dir = out_dir(common);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("state.txt");
    Archive::state(model.geometry, &layout, &state).write(&path)?;
    println!("wrote {} (dimension {})", path.display(), state.dim());
    let ctx = Context::new(&session.loaded.config, seed);
    let elements = suites::check_elements(model.group, &ctx, "contract");
    let checks = pipeline::state_checks(&layout, &state, &elements, ctx.tolerances.global)?;
    emit(&session.report("contract", checks), Some(&dir))
}

fn report(common: &Common) -> CliResult<bool> {
    let dir = common.out.clone().ok_or_else(|| CliError::Usage("report needs --out <dir>".into()))?;
    let reports = Report::collect(&dir)?;
    if reports.is_empty() {
        return Err(CliError::Usage(format!("no reports in {}", dir.display())));
    }
    let mut passed = true;
    for r in &reports {
        let failed = r.checks.iter().filter(|c| !c.pass).count();
        println!("{} {}: {} checks, {failed} failed", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.checks.len());
        for c in r.checks.iter().filter(|c| !c.pass) {
            println!("  {}", c.line());
        }
        passed &= r.passed;
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Build(c) => build(c),
        Command::Check { common, archive } => check(common, archive),
        Command::Contract(c) => contract(c),
        Command::Report(c) => report(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
