//! Command-line front end. Each subcommand is a `cmd_*` function returning the
//! paths it wrote, so tests can drive it without spawning a process.

use crate::analysis::{convergence_study, measured_error, yorke_check, yorke_json};
use crate::discretizer::{iterate, StepSize};
use crate::error::Error;
use crate::halanay::{
    admissibility_threshold, admissible_steps, fit_transfer_constants, solve_eta, write_sweep_csv,
    FitOptions, HalanayProblem, TransferConstants,
};
use crate::model::{HistoryFn, ProblemSpec};
use crate::output::{fmt_float, line_plot_svg, Series};
use crate::reference::solve_reference;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Overflow { .. }
            | Error::NonFinite { .. }
            | Error::NoConvergence { .. }
            | Error::Fit { .. } => CliError::Numeric(e.to_string()),
            Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "delay-pca",
    version,
    about = "Piecewise-constant-argument discretization of linear delay equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the difference scheme and write the trajectory.
    Simulate(RunArgs),
    /// Compare the scheme against the reference solver.
    Compare(RunArgs),
    /// Tabulate admissible step sizes for stability transfer.
    Sweep(RunArgs),
    /// Check Yorke's stability condition.
    Yorke(RunArgs),
    /// Solve η = α - β e^{η q}.
    HalanayRoot(RootArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem description (JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Horizon T.
    #[arg(long = "T", default_value_t = 20.0)]
    pub horizon: f64,
    /// Steps per delay bound, h = q/k.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Comma-separated ascending k values (compare, sweep).
    #[arg(long = "k-list", value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    /// Reference solver step.
    #[arg(long = "fine-step", default_value_t = 1.0 / 256.0)]
    pub fine_step: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Transfer constants (JSON with K, sigma, M0).
    #[arg(long)]
    pub constants: Option<PathBuf>,
    /// Fit transfer constants from reference solutions.
    #[arg(long)]
    pub fit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RootArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub q: f64,
}

impl RunArgs {
    pub fn new(problem: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            problem: problem.into(),
            horizon: 20.0,
            k: 4,
            k_list: None,
            fine_step: 1.0 / 256.0,
            out: out.into(),
            plot: false,
            constants: None,
            fit: false,
        }
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "T must be positive, got {}",
                self.horizon
            )));
        }
        if self.k == 0 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if !(self.fine_step > 0.0) {
            return Err(CliError::Config("fine step must be positive".into()));
        }
        if let Some(list) = &self.k_list {
            if list.is_empty() || list[0] == 0 || list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config(
                    "k list must be positive and strictly ascending".into(),
                ));
            }
        }
        Ok(())
    }

    fn load(&self) -> CliResult<ProblemSpec> {
        self.validate()?;
        let spec = ProblemSpec::from_path(&self.problem).map_err(|e| {
            CliError::Config(format!("cannot load {}: {e}", self.problem.display()))
        })?;
        ensure_writable(&self.out)?;
        Ok(spec)
    }
}

/// Creates the directory if needed and probes it with a scratch file.
fn ensure_writable(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")
        .map_err(|e| CliError::Io(format!("{} is not writable: {e}", dir.display())))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    let s = s
        .split('_')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("_");
    if s.is_empty() {
        "problem".into()
    } else {
        s
    }
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> CliResult<()> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Trajectory CSV `n,t,z,A_n,k_n`, plus `t,z_h` on a plot grid of spacing h/5 and an
/// SVG when plotting.
pub fn cmd_simulate(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    let spec = args.load()?;
    let step = StepSize::new(spec.q(), args.k)?;
    let traj = iterate(&spec, step, step.steps_to(args.horizon).max(1))?;
    let base = format!("{}_k{}", slug(&spec.label), args.k);
    let csv = args.out.join(format!("{base}_trajectory.csv"));
    write_file(&csv, |w| traj.write_csv(w))?;
    let mut written = vec![csv];

    let spacing = step.h() / 5.0;
    let end = traj.horizon();
    let m = (end / spacing).round() as usize;
    let ext = traj.extension();
    let mut curve = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let t = (i as f64 * spacing).min(end);
        curve.push((t, ext.eval(t)?));
    }
    let ext_csv = args.out.join(format!("{base}_extension.csv"));
    write_file(&ext_csv, |w| {
        writeln!(w, "t,z_h")?;
        for (t, z) in &curve {
            writeln!(w, "{},{}", fmt_float(*t), fmt_float(*z))?;
        }
        Ok(())
    })?;
    written.push(ext_csv);

    if args.plot {
        let title = format!("{}, h={}", spec.label, step.h());
        let svg = line_plot_svg(
            &title,
            "t",
            "z_h(t)",
            &[Series::new("z_h", "#1f77b4", curve)],
        );
        let path = args.out.join(format!("{base}.svg"));
        write_file(&path, |w| w.write_all(svg.as_bytes()))?;
        written.push(path);
    }
    Ok(written)
}

/// Error table against the reference solver for `k` (or every entry of `--k-list`).
pub fn cmd_compare(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    let spec = args.load()?;
    let ks = args.k_list.clone().unwrap_or_else(|| vec![args.k]);
    let study = convergence_study(&spec, args.horizon, &ks, args.fine_step)?;
    let base = slug(&spec.label);
    let path = args.out.join(format!("{base}_convergence.csv"));
    write_file(&path, |w| study.write_csv(w))?;
    let mut written = vec![path];

    let sol = solve_reference(&spec, args.horizon, args.fine_step)?;
    for row in &study.rows {
        println!(
            "k={} h={} measured={} bound={} dominated={}",
            row.k,
            fmt_float(row.h),
            fmt_float(row.measured),
            fmt_float(row.bound),
            row.dominated
        );
        let step = StepSize::new(spec.q(), row.k)?;
        let traj = iterate(&spec, step, step.steps_to(args.horizon).max(1))?;
        let report = measured_error(&sol, traj.extension(), args.horizon, 10, study.oracle_tol)?;
        let grid = args.out.join(format!("{base}_k{}_errors.csv", row.k));
        write_file(&grid, |w| report.write_csv(w))?;
        written.push(grid);

        if args.plot {
            let spacing = step.h() / 5.0;
            let m = (args.horizon / spacing).round() as usize;
            let ext = traj.extension();
            let mut oracle = Vec::with_capacity(m + 1);
            let mut pca = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let t = (i as f64 * spacing).min(args.horizon);
                oracle.push((t, sol.eval(t)?));
                pca.push((t, ext.eval(t)?));
            }
            let title = format!("{}, h={}", spec.label, step.h());
            let svg = line_plot_svg(
                &title,
                "t",
                "x(t)",
                &[
                    Series::new("reference", "#d62728", oracle),
                    Series::new("z_h", "#1f77b4", pca),
                ],
            );
            let path = args.out.join(format!("{base}_k{}_compare.svg", row.k));
            write_file(&path, |w| w.write_all(svg.as_bytes()))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Admissibility table `k,h,K1,admissible,eta` for `k = 1 ..= k_max`, where `k_max`
/// is the largest of `--k` and `--k-list`.
pub fn cmd_sweep(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    let spec = args.load()?;
    let tc = match (&args.constants, args.fit) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            TransferConstants::from_json_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        (None, true) => {
            let sol = solve_reference(&spec, args.horizon, args.fine_step)?;
            let norm = spec.phi.norm().max(1.0);
            let q = spec.q();
            let trials = [
                HistoryFn::constant(-norm, q)?,
                HistoryFn::poly(vec![norm, norm / q], q)?,
            ];
            fit_transfer_constants(&sol, &trials, FitOptions::default())?
        }
        (None, false) => {
            return Err(CliError::Config(
                "sweep needs transfer constants: pass --constants <file> or --fit".into(),
            ))
        }
    };
    let k_max = args
        .k_list
        .as_ref()
        .and_then(|l| l.last().copied())
        .unwrap_or(0)
        .max(args.k);
    let rows = admissible_steps(&spec, &tc, k_max)?;
    let path = args.out.join(format!("{}_sweep.csv", slug(&spec.label)));
    write_file(&path, |w| write_sweep_csv(&rows, w))?;
    println!(
        "K={} sigma={} M0={}",
        fmt_float(tc.k),
        fmt_float(tc.sigma),
        fmt_float(tc.m0)
    );
    match admissibility_threshold(&rows) {
        Some(k) => println!("admissible for all k >= {k} (k <= {k_max})"),
        None => println!("no admissible threshold up to k = {k_max}"),
    }
    Ok(vec![path])
}

/// Yorke verdict JSON.
pub fn cmd_yorke(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    let spec = args.load()?;
    let report = yorke_check(&spec.a, spec.q());
    let json = yorke_json(&report)?;
    let path = args.out.join(format!("{}_yorke.json", slug(&spec.label)));
    write_file(&path, |w| writeln!(w, "{json}"))?;
    println!("{json}");
    Ok(vec![path])
}

pub fn cmd_halanay_root(args: &RootArgs) -> CliResult<f64> {
    let p = HalanayProblem::new(args.alpha, args.beta, args.q)?;
    let eta = solve_eta(&p)?;
    println!("{}", fmt_float(eta));
    Ok(eta)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(|_| ()),
        Command::Compare(a) => cmd_compare(a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
        Command::Yorke(a) => cmd_yorke(a).map(|_| ()),
        Command::HalanayRoot(a) => cmd_halanay_root(a).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Overflow { step: 3 }).exit_code(), 2);
        assert_eq!(
            CliError::from(Error::Precondition("x".into())).exit_code(),
            1
        );
        let io = std::io::Error::other("x");
        assert_eq!(CliError::from(Error::Io(io)).exit_code(), 3);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "delay-pca",
            "compare",
            "--problem",
            "p.json",
            "--T",
            "10",
            "--k-list",
            "2,4,8",
            "--fine-step",
            "0.001",
            "--out",
            "o",
            "--plot",
        ])
        .unwrap();
        match cli.command {
            Command::Compare(a) => {
                assert_eq!(a.horizon, 10.0);
                assert_eq!(a.k_list, Some(vec![2, 4, 8]));
                assert!(a.plot);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["delay-pca", "simulate"]).is_err());
    }

    #[test]
    fn labels_become_file_stems() {
        assert_eq!(slug("a = 1 + sin(t)/3"), "a_1_sin_t_3");
        assert_eq!(slug("***"), "problem");
    }
}
