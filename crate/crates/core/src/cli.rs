//! Command-line front end.
//!
//! Exit codes: 0 success or pass, 1 validation or simulation failure,
//! 2 usage error (bad flags, unknown scenario, rejected parameters),
//! 3 I/O or parse error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};
use crate::hybrid::{write_arc_csv, write_arc_json, HybridArc, SolverConfig, TimeScale};
use crate::scenarios::{
    build_nesmr, build_ptpsg, BuiltScenario, GameSpec, Overrides, ScenarioSpec,
};
use crate::stability::{
    verify_certificate, BoundReport, CertificateReport, SampleSpec, TheoremConstants,
};
use crate::switching::{
    adt_bound, bu_adt_bound, load_signal, save_signal, validate_bu_aat, validate_bu_adt, AatParams,
    AdtParams, GeneratorPolicy, ModeSelection, SwitchTrigger, ValidationReport,
};
use crate::util::{dist, fmt_f64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pt-hybrid",
    version,
    about = "Prescribed-time switching systems: simulate, validate, bound"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write trajectory, signal, bound and manifest files.
    Run(RunArgs),
    /// Check a signal file against the blow-up dwell-time (and activation-time) class.
    ValidateSignal(ValidateArgs),
    /// Emit blow-up dwell-time bound curves as `delta,k,bound`.
    Bounds(BoundsArgs),
    /// Sample-check a scenario's Lyapunov certificate.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long = "T")]
    pub t_scale: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long = "tau-d")]
    pub tau_d: Option<f64>,
    #[arg(long = "tau-a")]
    pub tau_a: Option<f64>,
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long = "t0-budget")]
    pub t0: Option<f64>,
}

impl ParamArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            t_scale: self.t_scale,
            k: self.k,
            mu0: self.mu0,
            tau_d: self.tau_d,
            tau_a: self.tau_a,
            n0: self.n0,
            t0: self.t0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// consensus, intermittent, nesmr or ptpsg.
    #[arg(long, conflicts_with = "spec")]
    pub scenario: Option<String>,
    /// Scenario JSON document, or a manifest written by `run`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Original,
    Dilated,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Consecutive seeds to run, each into `seed-<n>/` when more than one.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, value_enum, default_value_t = Figure::None)]
    pub figure: Figure,
    #[arg(long, env = "PT_HYBRID_OUT", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Rk45)]
    pub solver: SolverArg,
    /// Relative and absolute tolerance (rk45).
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Dilated step (rk4).
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::Original)]
    pub scale: ScaleArg,
    /// End of the run as a fraction of the terminal time (0.999, or 0.99 for fig6).
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Signal CSV; the JSON sidecar with the same stem must exist.
    pub path: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long = "T", default_value_t = 10.0)]
    pub t_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu0: f64,
    #[arg(long = "tau-d", default_value_t = 1.0)]
    pub tau_d: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n0: f64,
    #[arg(long = "k", value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0])]
    pub ks: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Directory for `bounds.csv`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse(_) => EXIT_IO,
        Error::UnknownScenario(_)
        | Error::InvalidParams(_)
        | Error::Build(_)
        | Error::InvalidDwell { .. }
        | Error::Domain(_)
        | Error::InfeasiblePolicy(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::ValidateSignal(a) => cmd_validate_signal(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn load_spec(args: &ScenarioArgs) -> Result<ScenarioSpec> {
    let mut spec = match (&args.scenario, &args.spec) {
        (Some(name), None) => ScenarioSpec::by_name(name)?,
        (None, Some(path)) => {
            let v: serde_json::Value = serde_json::from_reader(File::open(path)?)?;
            let doc = v.get("spec").cloned().unwrap_or(v);
            serde_json::from_value(doc)?
        }
        _ => {
            return Err(Error::InvalidParams(
                "give exactly one of --scenario or --spec".into(),
            ))
        }
    };
    spec.apply(&args.params.overrides())?;
    Ok(spec)
}

fn solver(a: &RunArgs) -> Result<SolverConfig> {
    let cfg = match a.solver {
        SolverArg::Rk45 => SolverConfig::rk45(a.tol),
        SolverArg::Rk4 => SolverConfig::rk4(a.step),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Prints a report line; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(
        path,
    )?)))
}

/// Rows `t,s,j,q,error` with the error measured on the first `dim` coordinates.
fn write_error_csv(path: &Path, arc: &HybridArc, target: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "s", "j", "q", "error"])?;
    for (j, q, smp) in arc.iter() {
        w.write_record([
            fmt_f64(arc.original_time(smp.time)?),
            fmt_f64(arc.dilated_time(smp.time)?),
            j.to_string(),
            q.to_string(),
            fmt_f64(dist(&smp.x[..target.len()], target)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundsDocument<'a> {
    scenario: &'a str,
    bound: &'a BoundReport,
    constants: &'a TheoremConstants,
    diagnostics: &'a [String],
}

#[derive(Serialize)]
struct Manifest<'a> {
    toolkit: &'static str,
    version: &'static str,
    command: &'static str,
    scenario: &'a str,
    spec: &'a ScenarioSpec,
    seed: u64,
    policy: &'a GeneratorPolicy,
    solver: &'a SolverConfig,
    scale: TimeScale,
    horizon: f64,
    figure: Figure,
    files: Vec<String>,
    /// Flags that reproduce this directory from `spec.json` (or this manifest).
    rerun: Vec<String>,
}

fn policy(seed: u64) -> GeneratorPolicy {
    GeneratorPolicy {
        seed,
        selection: ModeSelection::Uniform,
        trigger: SwitchTrigger::Randomized,
    }
}

fn simulate_in(
    b: &BuiltScenario,
    g: &crate::switching::GeneratedSignal,
    x0: &[f64],
    horizon: f64,
    scale: TimeScale,
    cfg: SolverConfig,
) -> Result<HybridArc> {
    let end = match scale {
        TimeScale::Original => horizon,
        TimeScale::Dilated => b.params.dilate(horizon)?,
    };
    b.simulate(&g.schedule, x0, end, scale, cfg)
}

/// Curves `nesmr` and `ptpsg` under one signal, error on the player actions.
fn write_fig6(
    path: &Path,
    spec: &GameSpec,
    seed: u64,
    horizon_frac: f64,
    scale: TimeScale,
    cfg: SolverConfig,
) -> Result<()> {
    let nes = build_nesmr(spec)?;
    let psg = build_ptpsg(spec)?;
    let horizon = horizon_frac * nes.params.terminal_time();
    let g = nes.generate(&policy(seed), horizon)?;
    let x0 = nes.initial_state(seed);
    let a = simulate_in(&nes, &g, &x0, horizon, scale, cfg)?;
    let c = simulate_in(&psg, &g, &x0[..psg.target.len()], horizon, scale, cfg)?;
    let mut w = csv_writer(path)?;
    w.write_record(["curve", "t", "s", "j", "error"])?;
    for (name, arc) in [("nesmr", &a), ("ptpsg", &c)] {
        for (j, _, smp) in arc.iter() {
            w.write_record([
                name.to_string(),
                fmt_f64(arc.original_time(smp.time)?),
                fmt_f64(arc.dilated_time(smp.time)?),
                j.to_string(),
                fmt_f64(dist(&smp.x[..psg.target.len()], &psg.target)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_one(a: &RunArgs, spec: &ScenarioSpec, seed: u64, dir: &Path) -> Result<bool> {
    fs::create_dir_all(dir)?;
    let b = spec.build()?;
    let cfg = solver(a)?;
    let scale = match a.scale {
        ScaleArg::Original => TimeScale::Original,
        ScaleArg::Dilated => TimeScale::Dilated,
    };
    let frac = a.horizon.unwrap_or(if a.figure == Figure::Fig6 {
        0.99
    } else {
        0.999
    });
    if !(frac > 0.0 && frac < 1.0 - b.params.eps_term) {
        return Err(Error::InvalidParams(format!(
            "horizon fraction must lie in (0, 1 - {}), got {frac}",
            b.params.eps_term
        )));
    }
    let horizon = frac * b.params.terminal_time();
    let pol = policy(seed);
    let g = b.generate(&pol, horizon)?;
    let x0 = b.initial_state(seed);
    let arc = simulate_in(&b, &g, &x0, horizon, scale, cfg)?;
    let report = b.check_bound(&arc)?;

    let mut files = vec![
        "trajectory.csv".to_string(),
        "trajectory.json".into(),
        "signal.csv".into(),
        "signal.json".into(),
        "error.csv".into(),
        "bounds.json".into(),
        "spec.json".into(),
    ];
    write_arc_csv(
        &arc,
        BufWriter::new(File::create(dir.join("trajectory.csv"))?),
    )?;
    write_arc_json(
        &arc,
        BufWriter::new(File::create(dir.join("trajectory.json"))?),
    )?;
    save_signal(&g.signal, &dir.join("signal.csv"))?;
    write_error_csv(&dir.join("error.csv"), &arc, &b.target)?;
    write_json(
        &dir.join("bounds.json"),
        &BoundsDocument {
            scenario: &b.name,
            bound: &report,
            constants: &b.constants,
            diagnostics: &b.diagnostics,
        },
    )?;
    write_json(&dir.join("spec.json"), spec)?;
    match a.figure {
        Figure::Fig2 => {
            let adt = b.adt;
            write_bounds_csv(
                BufWriter::new(File::create(dir.join("fig2.csv"))?),
                b.params.t_scale,
                b.params.mu0,
                &adt,
                &[1.0, 2.0, 3.0, 4.0],
                200,
            )?;
            files.push("fig2.csv".into());
        }
        Figure::Fig6 => {
            let game = match spec {
                ScenarioSpec::Nesmr(s) | ScenarioSpec::Ptpsg(s) => s,
                _ => {
                    return Err(Error::InvalidParams(
                        "fig6 needs the nesmr or ptpsg scenario".into(),
                    ))
                }
            };
            write_fig6(&dir.join("fig6.csv"), game, seed, frac, scale, cfg)?;
            files.push("fig6.csv".into());
        }
        _ => {}
    }
    files.push("manifest.json".into());
    let mut rerun = vec![
        "run".to_string(),
        "--spec".into(),
        "spec.json".into(),
        "--seed".into(),
        seed.to_string(),
        "--solver".into(),
        match a.solver {
            SolverArg::Rk4 => "rk4".into(),
            SolverArg::Rk45 => "rk45".into(),
        },
        "--tol".into(),
        a.tol.to_string(),
        "--step".into(),
        a.step.to_string(),
        "--scale".into(),
        match a.scale {
            ScaleArg::Original => "original".into(),
            ScaleArg::Dilated => "dilated".into(),
        },
        "--horizon".into(),
        frac.to_string(),
    ];
    if a.figure != Figure::None {
        rerun.push("--figure".into());
        rerun.push(format!("{:?}", a.figure).to_lowercase());
    }
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            toolkit: "pt-hybrid",
            version: env!("CARGO_PKG_VERSION"),
            command: "run",
            scenario: &b.name,
            spec,
            seed,
            policy: &pol,
            solver: &cfg,
            scale,
            horizon,
            figure: a.figure,
            files,
            rerun,
        },
    )?;
    eprintln!(
        "{} seed {seed}: {} jumps, bound ratio {:.4} ({})",
        b.name,
        arc.jump_count(),
        report.max_ratio,
        if report.pass { "pass" } else { "FAIL" }
    );
    Ok(report.pass)
}

pub fn cmd_run(a: &RunArgs) -> Result<i32> {
    let spec = load_spec(&a.scenario)?;
    if a.seeds == 0 || a.jobs == 0 {
        return Err(Error::InvalidParams(
            "--seeds and --jobs must be positive".into(),
        ));
    }
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let dir_for = |s: u64| {
        if a.seeds == 1 {
            a.out.clone()
        } else {
            a.out.join(format!("seed-{s}"))
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let results: Vec<Result<bool>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_one(a, &spec, s, &dir_for(s)))
            .collect()
    });
    let mut all = true;
    for r in results {
        all &= r?;
    }
    Ok(if all { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct SignalReport {
    pass: bool,
    switches: usize,
    bu_adt: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    bu_aat: Option<ValidationReport>,
}

pub fn cmd_validate_signal(a: &ValidateArgs) -> Result<i32> {
    let p = &a.params;
    let params = BlowUpParams::new(
        p.t_scale.unwrap_or(10.0),
        p.k.unwrap_or(1.0),
        p.mu0.unwrap_or(1.0),
    )?;
    let (Some(tau_d), Some(n0)) = (p.tau_d, p.n0) else {
        return Err(Error::InvalidParams(
            "validate-signal needs --tau-d and --n0".into(),
        ));
    };
    let adt = AdtParams::new(tau_d, n0)?;
    let aat = p
        .tau_a
        .map(|ta| AatParams::new(ta, p.t0.unwrap_or(0.0)))
        .transpose()?;
    let signal = load_signal(&a.path).map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(
            io.kind(),
            format!("{}: {io}", a.path.display()),
        )),
        other => other,
    })?;
    let bu_adt = validate_bu_adt(&signal, &params, &adt)?;
    let bu_aat = aat
        .map(|x| validate_bu_aat(&signal, &params, &x))
        .transpose()?;
    let report = SignalReport {
        pass: bu_adt.pass && bu_aat.is_none_or(|r| r.pass),
        switches: signal.switch_count(),
        bu_adt,
        bu_aat,
    };
    let text = serde_json::to_string_pretty(&report)?;
    emit(&text)?;
    if let Some(path) = &a.out {
        fs::write(path, format!("{text}\n"))?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

/// Bound versus `Δ = t2 − t1` with `t1 = 0` for each order, then the classical line as `k = adt`.
pub fn write_bounds_csv<W: Write>(
    out: W,
    t_scale: f64,
    mu0: f64,
    adt: &AdtParams,
    ks: &[f64],
    grid: usize,
) -> Result<()> {
    let grid = grid.max(2);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "k", "bound"])?;
    let mut longest = 0.0f64;
    for &k in ks {
        let p = BlowUpParams::new(t_scale, k, mu0)?;
        let end = p.t_max();
        longest = longest.max(end);
        for i in 0..grid {
            let d = end * i as f64 / (grid - 1) as f64;
            w.write_record([
                fmt_f64(d),
                k.to_string(),
                fmt_f64(bu_adt_bound(&p, adt, 0.0, d)?),
            ])?;
        }
    }
    for i in 0..grid {
        let d = longest * i as f64 / (grid - 1) as f64;
        w.write_record([
            fmt_f64(d),
            "adt".to_string(),
            fmt_f64(adt_bound(adt, 0.0, d)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bounds(a: &BoundsArgs) -> Result<i32> {
    let adt = AdtParams::new(a.tau_d, a.n0)?;
    if a.ks.is_empty() {
        return Err(Error::InvalidParams("need at least one k".into()));
    }
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let f = BufWriter::new(File::create(dir.join("bounds.csv"))?);
            write_bounds_csv(f, a.t_scale, a.mu0, &adt, &a.ks, a.grid)?;
        }
        None => {
            let mut buf = Vec::new();
            write_bounds_csv(&mut buf, a.t_scale, a.mu0, &adt, &a.ks, a.grid)?;
            emit(String::from_utf8_lossy(&buf).trim_end())?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let spec = load_spec(&a.scenario)?;
    let b = spec.build()?;
    let mut s = SampleSpec::new(a.samples, a.radius, b.adt.tau_d, b.adt.n0);
    s.seed = a.seed;
    let mut report: CertificateReport = verify_certificate(&b.certificate, b.system.as_ref(), &s)?;
    report.constants = Some(b.constants.summary());
    let text = serde_json::to_string_pretty(&report)?;
    emit(&text)?;
    if let Some(path) = &a.out {
        fs::write(path, format!("{text}\n"))?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scenario_is_usage() {
        let dir = tempfile::tempdir().unwrap();
        let code = main_with_args([
            "pt-hybrid",
            "run",
            "--scenario",
            "nope",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert_eq!(main_with_args(["pt-hybrid", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn bounds_rows_start_at_n0() {
        let mut buf = Vec::new();
        let adt = AdtParams::new(1.0, 2.5).unwrap();
        write_bounds_csv(&mut buf, 10.0, 1.0, &adt, &[1.0, 2.0], 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "delta,k,bound");
        assert_eq!(rows.len(), 1 + 3 * 5);
        for r in [rows[1], rows[6], rows[11]] {
            assert!(r.ends_with(&fmt_f64(2.5)), "{r}");
        }
        assert!(rows[11].contains(",adt,"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_IO);
        assert_eq!(exit_code(&Error::UnknownScenario("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::StepFailure { time: 1.0 }), EXIT_FAIL);
    }
}
