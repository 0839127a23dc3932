//! Batch front end: design, similarity sweeps, initializer runs, metrics and audits.

mod files;
mod verify;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specoex::cdsolver::{check_feasibility, filter_step, FilterSolver, SolverOptions};
use specoex::initializer::{initialize, InitMethod, InitOptions};
use specoex::metrics::{ccf_metrics, esd, metric_bundle, par, pd_curve, to_db};
use specoex::objective::{relative_phases, sinr};
use specoex::oracle::OracleConfig;
use specoex::pipeline::{run_design, sweep_epsilon, StartSpec, WARM_LABEL};
use specoex::scenario::config::parse_alphabet;
use specoex::scenario::{Alphabet, CovarianceSet, Scenario, ScenarioConfig};
use specoex::C64;

use files::{num, to_pairs, write_csv, ResultFile, StartRecord};

/// Error carrying the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const INFEASIBLE: u8 = 2;
    pub const VERIFICATION: u8 = 3;
    pub const CONFIG: u8 = 4;

    pub fn config(e: impl Display) -> Self {
        Failure { code: Self::CONFIG, message: e.to_string() }
    }

    fn other(e: impl Display) -> Self {
        Failure { code: 1, message: e.to_string() }
    }

    /// Classify a library error by its cause.
    fn from_lib(e: specoex::Error) -> Self {
        use specoex::Error as E;
        match e {
            E::InvalidScenario(_) | E::Config(_) => Self::config(e),
            E::Infeasible(_) | E::EmptyFeasibleSet => Failure { code: Self::INFEASIBLE, message: e.to_string() },
            other => Self::other(other),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::other(format!("{e:#}"))
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "specoex", version, about = "Radar code and receive filter design under spectral coexistence constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-start design; writes result.json, trajectory.csv, esd.csv and ccf.csv.
    Design(DesignArgs),
    /// Best design over a grid of similarity levels with warm starts; writes sweep.csv.
    SweepEpsilon(SweepArgs),
    /// Run one initializer only.
    InitOnly(InitArgs),
    /// Recompute figures of merit for a stored result.
    Metrics(MetricsArgs),
    /// Audit a stored result against brute-force references.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override the phase alphabet: `continuous` or an alphabet size.
    #[arg(long)]
    alphabet: Option<String>,
    /// Override the similarity level.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed recorded with the result and used by `verify` to sample coordinates.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Direct,
    Cg,
}

#[derive(Args)]
struct SolverArgs {
    /// Stop when the objective changes by at most this much per iteration.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "direct")]
    filter_solver: SolverKind,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            filter_solver: match self.filter_solver {
                SolverKind::Direct => FilterSolver::Direct,
                SolverKind::Cg => FilterSolver::cg(),
            },
            audit: false,
        }
    }
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated starts: reference, hivam, hivac, file:<path>.
    #[arg(long, default_value = "hivam,hivac,reference")]
    starts: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "hivam,hivac,reference")]
    starts: String,
    /// `start:step:stop` or a comma-separated list of similarity levels.
    #[arg(long)]
    grid: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hivam,
    Hivac,
}

#[derive(Args)]
struct InitArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Penalty weight; defaults to the method's own.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    result: PathBuf,
    /// Output directory; defaults to the directory of the result file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// False-alarm probability for the detection curve.
    #[arg(long, default_value_t = 1e-4)]
    pfa: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    result: PathBuf,
    /// Number of coordinates checked against brute force.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Sampling seed; defaults to the one stored in the result.
    #[arg(long)]
    seed: Option<u64>,
}

const ESD_POINTS: usize = 4096;

fn threads() -> CliResult<Option<usize>> {
    match std::env::var("SPECOEX_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|t| *t > 0)
            .map(Some)
            .ok_or_else(|| Failure::config(format!("SPECOEX_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn load_config(args: &ScenarioArgs) -> CliResult<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&args.scenario)
        .map_err(|e| Failure::config(format!("{}: {e}", args.scenario.display())))?;
    if let Some(a) = &args.alphabet {
        cfg.alphabet = parse_alphabet(a).map_err(Failure::config)?;
    }
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }
    Ok(cfg)
}

fn prepare(cfg: &ScenarioConfig) -> CliResult<(Scenario, CovarianceSet)> {
    let s = cfg.resolve().map_err(Failure::config)?;
    let c = CovarianceSet::build(&s).map_err(Failure::from_lib)?;
    Ok((s, c))
}

fn make_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))
}

fn parse_starts(list: &str) -> CliResult<Vec<StartSpec>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(path) = item.strip_prefix("file:") {
            let code = files::load_start_code(Path::new(path)).map_err(|e| Failure::config(format!("{e:#}")))?;
            out.push(StartSpec::Code { label: item.to_string(), code });
        } else if item.eq_ignore_ascii_case(WARM_LABEL) {
            return Err(Failure::config("`warm` starts are added automatically by sweep-epsilon"));
        } else {
            out.push(StartSpec::parse(item).ok_or_else(|| Failure::config(format!("unknown start `{item}`")))?);
        }
    }
    if out.is_empty() {
        return Err(Failure::config("at least one start is required"));
    }
    Ok(out)
}

/// Parse `a:step:b` (inclusive) or `x,y,z`.
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::config(format!("invalid grid `{spec}`"));
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let [a, step, b] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        // Rounded to 12 decimals so that 0:0.1:2 yields 0.3 rather than 0.30000000000000004.
        (0..=count).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        spec.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?
    };
    if values.is_empty() || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::config(format!("grid `{spec}` must be non-empty and strictly ascending")));
    }
    Ok(values)
}

fn write_spectral_tables(dir: &Path, code: &nalgebra::DVector<C64>, filter: &nalgebra::DVector<C64>) -> CliResult<()> {
    let sp = esd(code, ESD_POINTS);
    write_csv(
        &dir.join("esd.csv"),
        &["f", "esd_db"],
        sp.freqs.iter().zip(&sp.esd).map(|(f, e)| vec![num(*f), num(to_db(*e))]),
    )?;
    let ccf = ccf_metrics(code, filter);
    write_csv(
        &dir.join("ccf.csv"),
        &["lag", "mag_db"],
        ccf.lags.iter().zip(&ccf.mag_db).map(|(l, m)| vec![l.to_string(), num(*m)]),
    )?;
    Ok(())
}

fn design(args: &DesignArgs) -> CliResult<()> {
    let cfg = load_config(&args.scenario)?;
    let (s, c) = prepare(&cfg)?;
    let starts = parse_starts(&args.starts)?;
    make_out_dir(&args.scenario.out)?;
    let out = run_design(&s, &c, &starts, &args.solver.options(), threads()?).map_err(Failure::from_lib)?;
    let best = out.best_report();
    let label = out.results[out.best].label.clone();
    let per_start = out
        .results
        .iter()
        .map(|r| match &r.outcome {
            Ok(rep) => StartRecord { label: r.label.clone(), chi: Some(rep.chi()), iterations: Some(rep.iterations), error: None },
            Err(e) => StartRecord { label: r.label.clone(), chi: None, iterations: None, error: Some(e.clone()) },
        })
        .collect();
    let result = ResultFile {
        kind: "design".into(),
        scenario: cfg.clone(),
        seed: args.scenario.seed,
        best_start: label.clone(),
        chi: best.chi(),
        chi_db: to_db(best.chi()),
        power: best.state.power,
        phases: best.state.phases.clone(),
        code: to_pairs(&best.code),
        filter: to_pairs(&best.state.filter),
        iterations: best.iterations,
        converged: best.converged,
        energy: best.feasibility.energy,
        band_energies: best.feasibility.band_energies.clone(),
        caps: c.caps.clone(),
        band_slacks: best.feasibility.band_slacks.clone(),
        par: par(&best.code),
        per_start,
        trajectory: best.chi_trajectory.clone(),
    };
    let dir = &args.scenario.out;
    result.save(&dir.join("result.json"))?;
    write_csv(
        &dir.join("trajectory.csv"),
        &["iter", "chi"],
        best.chi_trajectory.iter().enumerate().map(|(k, x)| vec![k.to_string(), num(*x)]),
    )?;
    write_spectral_tables(dir, &best.code, &best.state.filter)?;
    for r in &out.results {
        match &r.outcome {
            Ok(rep) => println!("start {:<12} chi {:.6e} ({:.3} dB), {} iterations", r.label, rep.chi(), to_db(rep.chi()), rep.iterations),
            Err(e) => println!("start {:<12} failed: {e}", r.label),
        }
    }
    println!("best start {label}: chi {:.6e} ({:.3} dB), written to {}", best.chi(), to_db(best.chi()), dir.display());
    Ok(())
}

#[derive(Serialize)]
struct SweepRecord {
    epsilon: f64,
    chi_best: f64,
    best_start: String,
    per_start: Vec<(String, Option<f64>)>,
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let mut cfg = load_config(&args.scenario)?;
    let mut grid = parse_grid(&args.grid)?;
    if cfg.alphabet == Alphabet::Continuous && grid.iter().any(|&e| e >= 2.0) {
        eprintln!("note: epsilon >= 2 is not defined for the continuous alphabet and is skipped");
        grid.retain(|&e| e < 2.0);
        if grid.is_empty() {
            return Err(Failure::config("no usable similarity levels in the grid"));
        }
    }
    cfg.epsilon = grid[0];
    let (s, c) = prepare(&cfg)?;
    let starts = parse_starts(&args.starts)?;
    make_out_dir(&args.scenario.out)?;
    let rows = sweep_epsilon(&s, &c, &grid, &starts, &args.solver.options(), threads()?).map_err(Failure::from_lib)?;
    let mut labels: Vec<String> = starts.iter().map(|s| s.label()).collect();
    labels.push(WARM_LABEL.into());
    let mut header = vec!["epsilon".to_string(), "chi_best".to_string()];
    header.extend(labels.iter().map(|l| format!("chi_{l}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &args.scenario.out.join("sweep.csv"),
        &header,
        rows.iter().map(|r| {
            let mut row = vec![num(r.epsilon), num(r.chi_best)];
            for l in &labels {
                let v = r.per_start.iter().find(|(name, _)| name == l).and_then(|(_, v)| *v);
                row.push(v.map(num).unwrap_or_default());
            }
            row
        }),
    )?;
    let records: Vec<SweepRecord> = rows
        .iter()
        .map(|r| SweepRecord { epsilon: r.epsilon, chi_best: r.chi_best, best_start: r.best_label.clone(), per_start: r.per_start.clone() })
        .collect();
    let text = serde_json::to_string_pretty(&records).map_err(Failure::other)?;
    std::fs::write(args.scenario.out.join("sweep.json"), text + "\n").map_err(Failure::other)?;
    for r in &rows {
        println!("epsilon {:<6} chi {:.6e} ({:.3} dB) from {}", r.epsilon, r.chi_best, to_db(r.chi_best), r.best_label);
    }
    Ok(())
}

fn init_only(args: &InitArgs) -> CliResult<()> {
    let cfg = load_config(&args.scenario)?;
    let (s, c) = prepare(&cfg)?;
    make_out_dir(&args.scenario.out)?;
    let method = match args.method {
        MethodArg::Hivam => InitMethod::Hivam,
        MethodArg::Hivac => InitMethod::Hivac,
    };
    let mut options = InitOptions::for_method(method);
    if let Some(b) = args.beta {
        options.beta = b;
    }
    let rep = initialize(method, &s, &c, &options).map_err(Failure::from_lib)?;
    let fs = filter_step(&rep.code, &s, &c, FilterSolver::Direct).map_err(Failure::from_lib)?;
    let chi = sinr(&rep.code, &fs.filter, &s, &c).map_err(Failure::from_lib)?;
    let domain = s.phase_domain().map_err(Failure::config)?;
    let feas = check_feasibility(&rep.code, &s, &c, &domain);
    let power = rep.code.norm_squared();
    let result = ResultFile {
        kind: method.name().into(),
        scenario: cfg.clone(),
        seed: args.scenario.seed,
        best_start: method.name().into(),
        chi,
        chi_db: to_db(chi),
        power,
        phases: relative_phases(&rep.code, &s.reference).iter().map(|p| domain.project(*p)).collect(),
        code: to_pairs(&rep.code),
        filter: to_pairs(&fs.filter),
        iterations: rep.iterations,
        converged: rep.converged,
        energy: feas.energy,
        band_energies: feas.band_energies.clone(),
        caps: c.caps.clone(),
        band_slacks: feas.band_slacks.clone(),
        par: par(&rep.code),
        per_start: vec![StartRecord { label: method.name().into(), chi: Some(chi), iterations: Some(rep.iterations), error: None }],
        trajectory: rep.f_trajectory.clone(),
    };
    let dir = &args.scenario.out;
    result.save(&dir.join("result.json"))?;
    write_csv(
        &dir.join("trajectory.csv"),
        &["iter", "f"],
        rep.f_trajectory.iter().enumerate().map(|(k, x)| vec![k.to_string(), num(*x)]),
    )?;
    write_spectral_tables(dir, &rep.code, &fs.filter)?;
    println!(
        "{}: {} iterations, penalized objective {:.6e}, chi {:.6e} ({:.3} dB) after rescaling",
        method.name(),
        rep.iterations,
        rep.f_trajectory.last().copied().unwrap_or(f64::NAN),
        chi,
        to_db(chi)
    );
    Ok(())
}

#[derive(Serialize)]
struct MetricsFile {
    sinr: f64,
    sinr_db: f64,
    energy: f64,
    par: f64,
    psl_db: f64,
    isl_db: f64,
    band_energies: Vec<f64>,
    band_energies_quadrature: Vec<f64>,
    caps: Vec<f64>,
    pfa: f64,
}

fn metrics(args: &MetricsArgs) -> CliResult<()> {
    let result = ResultFile::load(&args.result).map_err(|e| Failure::config(format!("{e:#}")))?;
    let (s, c) = prepare(&result.scenario)?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.result.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    make_out_dir(&dir)?;
    if !(args.pfa > 0.0 && args.pfa < 1.0) {
        return Err(Failure::config("pfa must lie in (0, 1)"));
    }
    let code = result.code();
    let filter = result.filter();
    if code.len() != s.n || filter.len() != s.n {
        return Err(Failure::config(format!("result vectors do not have length {}", s.n)));
    }
    let m = metric_bundle(&code, &filter, &s, &c).map_err(Failure::from_lib)?;
    write_spectral_tables(&dir, &code, &filter)?;
    let grid: Vec<f64> = (0..=100).map(|k| -30.0 + 0.5 * k as f64).collect();
    write_csv(
        &dir.join("pd.csv"),
        &["target_db", "pd"],
        pd_curve(m.sinr, args.pfa, &grid).into_iter().map(|(db, pd)| vec![num(db), num(pd)]),
    )?;
    let file = MetricsFile {
        sinr: m.sinr,
        sinr_db: m.sinr_db,
        energy: m.energy,
        par: m.par,
        psl_db: m.psl_db,
        isl_db: m.isl_db,
        band_energies: m.band_energies.clone(),
        band_energies_quadrature: m.band_energies_quadrature.clone(),
        caps: m.caps.clone(),
        pfa: args.pfa,
    };
    let text = serde_json::to_string_pretty(&file).map_err(Failure::other)?;
    std::fs::write(dir.join("metrics.json"), text + "\n").map_err(Failure::other)?;
    println!("SINR {:.6e} ({:.3} dB)", m.sinr, m.sinr_db);
    println!("energy {:.6e}, PAR {:.12}", m.energy, m.par);
    println!("PSL {:.3} dB, ISL {:.3} dB", m.psl_db, m.isl_db);
    for (k, ((e, q), cap)) in m.band_energies.iter().zip(&m.band_energies_quadrature).zip(&m.caps).enumerate() {
        println!("band {k}: energy {e:.6e} (quadrature {q:.6e}), cap {cap:.6e} ({:.3} dB below)", to_db(*cap) - to_db(*e));
    }
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> CliResult<()> {
    let result = ResultFile::load(&args.result).map_err(|e| Failure::config(format!("{e:#}")))?;
    let oracle = OracleConfig { seed: args.seed.unwrap_or(result.seed), ..OracleConfig::default() };
    let checks = verify::run(&result, args.samples, &oracle)?;
    let mut failed = 0;
    for c in &checks {
        failed += !c.pass as usize;
        println!("{} {:<32} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if failed > 0 {
        return Err(Failure { code: Failure::VERIFICATION, message: format!("{failed} of {} checks failed", checks.len()) });
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Design(a) => design(a),
        Command::SweepEpsilon(a) => sweep(a),
        Command::InitOnly(a) => init_only(a),
        Command::Metrics(a) => metrics(a),
        Command::Verify(a) => verify_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
