use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use noisy_clifford::clifford_moments as cm;
use noisy_clifford::dense_ops::{self, DenseOperator, Picture, QuantumChannel};
use noisy_clifford::experiments::{self as ex, ExperimentConfig, FitOptions};
use noisy_clifford::magic_capacity::magic_capacity;
use noisy_clifford::nonlocal_magic::apep_single_copy;
use noisy_clifford::pauli_clifford::random_clifford;
use noisy_clifford::scrambling::{aotoc_exact, haar_avg_aotoc_infinite, task_rng, Bipartition, CliffordSandwich};
use noisy_clifford::Error;

mod selftest;

const DEFAULT_OUT: &str = "noisy-clifford-out";
const EXIT_USAGE: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "noisy-clifford", version, about = "Scrambling and nonlocal magic of noisy Clifford circuits")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for result files and the manifest.
    #[arg(long, global = true, env = "NOISY_CLIFFORD_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum NoiseKind {
    Rz,
    GeneralAxis,
    Depolarizing,
    KrausFile,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Gate {
    Identity,
    CliffordS,
    CliffordH,
    T,
}

#[derive(Args, Debug, Clone, Serialize)]
struct NoiseArgs {
    /// Single-qubit noise model.
    #[arg(long, value_enum, default_value = "rz")]
    noise: NoiseKind,
    /// Rotation angle in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    /// Polar angle of the rotation axis (general-axis).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    /// Azimuth of the rotation axis (general-axis).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi: f64,
    /// Depolarizing strength in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Kraus operators in the operator text format (kraus-file).
    #[arg(long)]
    kraus_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct KArg {
    /// Number of noisy qubits.
    #[arg(long, default_value_t = 1)]
    k: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// A-OTOC of one noisy circuit with a random Clifford.
    Aotoc {
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        k: KArg,
        #[arg(long = "L", default_value_t = 4)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// APEP of one noisy circuit with a random Clifford (unitary noise).
    Apep {
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        k: KArg,
        #[arg(long = "L", default_value_t = 4)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Clifford-averaged A-OTOC; L → ∞ unless --L is given.
    AvgAotoc {
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        k: KArg,
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Clifford-averaged APEP; L → ∞ unless --L is given.
    AvgApep {
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        k: KArg,
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Haar-averaged A-OTOC in the L → ∞ limit.
    HaarAvg {
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        k: KArg,
    },
    /// Magic capacity of a single-qubit gate or channel.
    Capacity {
        /// Named gate; overrides the noise options.
        #[arg(long, value_enum)]
        gate: Option<Gate>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// APEP-versus-capacity sweep, joint fit and bootstrap.
    SweepFit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_unitaries: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        resamples: Option<usize>,
    },
    /// Variance of per-Clifford APEP and A-OTOC against L.
    Typicality {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "both")]
        which: Which,
        #[arg(long)]
        l_min: Option<usize>,
        #[arg(long)]
        l_max: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        n_c: Option<usize>,
    },
    /// Oracle-equivalence checks; nonzero exit on any failure.
    Selftest,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Which {
    Apep,
    Aotoc,
    Both,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::CapExceeded { .. } => (EXIT_CAP, "cap_exceeded"),
            Error::Numerical(_) => (EXIT_NUMERICAL, "numerical"),
            Error::InvalidArgument(_) | Error::DimensionMismatch(_) | Error::Parse(_) => (EXIT_USAGE, "invalid_argument"),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => (1, "io"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        kind: "invalid_argument",
        message: msg.into(),
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// `x` to 12 significant digits, trailing zeros trimmed.
fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn build_noise(n: &NoiseArgs) -> Outcome<QuantumChannel> {
    let ch = match n.noise {
        NoiseKind::Rz => QuantumChannel::unitary(dense_ops::rz(n.theta))?,
        NoiseKind::GeneralAxis => QuantumChannel::unitary(dense_ops::axis_rotation(n.theta, n.gamma, n.phi))?,
        NoiseKind::Depolarizing => {
            if !(0.0..=1.0).contains(&n.p) {
                return Err(usage(format!("--p must lie in [0, 1], got {}", n.p)));
            }
            QuantumChannel::depolarizing(n.p)?
        }
        NoiseKind::KrausFile => {
            let path = n.kraus_file.as_ref().ok_or_else(|| usage("--kraus-file is required for kraus-file noise"))?;
            QuantumChannel::from_text(&std::fs::read_to_string(path)?, Picture::Schrodinger)?
        }
    };
    if ch.dim() != 2 {
        return Err(usage("noise must act on a single qubit"));
    }
    Ok(ch)
}

fn noise_unitary(n: &NoiseArgs) -> Outcome<DenseOperator> {
    build_noise(n)?
        .as_unitary()
        .ok_or_else(|| usage("APEP needs unitary noise (one Kraus operator)"))
}

fn gate_channel(g: Gate) -> Outcome<QuantumChannel> {
    let u = match g {
        Gate::Identity => DenseOperator::identity(&[2]),
        Gate::CliffordS => dense_ops::s_gate(),
        Gate::CliffordH => dense_ops::hadamard(),
        Gate::T => dense_ops::t_gate(),
    };
    Ok(QuantumChannel::unitary(u)?)
}

fn even_l(l: usize) -> Outcome<()> {
    if l == 0 || l % 2 != 0 {
        return Err(usage(format!("--L must be a positive even number for the symmetric cut, got {l}")));
    }
    Ok(())
}

struct Run {
    out: Option<PathBuf>,
    files: Vec<String>,
}

impl Run {
    fn dir(&self) -> Outcome<&Path> {
        let d = self.out.as_deref().unwrap_or(Path::new(DEFAULT_OUT));
        std::fs::create_dir_all(d)?;
        Ok(d)
    }

    fn path(&mut self, name: &str) -> Outcome<PathBuf> {
        let p = self.dir()?.join(name);
        self.files.push(name.to_string());
        Ok(p)
    }
}

fn scalar(run: &mut Run, name: &str, value: f64, extra: Value) -> Outcome<Value> {
    println!("{}", fmt12(value));
    if run.out.is_some() {
        let p = run.path("result.json")?;
        std::fs::write(p, serde_json::to_string_pretty(&json!({ "quantity": name, "value": value, "details": extra }))?)?;
    }
    Ok(json!({ "quantity": name, "value": value }))
}

fn load_config(path: &Option<PathBuf>) -> Outcome<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    })
}

fn execute(cmd: &Command, run: &mut Run) -> Outcome<Value> {
    match cmd {
        Command::Aotoc { noise, k, l, seed } => {
            let ch = build_noise(noise)?;
            let c = random_clifford(*l, &mut task_rng(*seed, 0))?;
            let omega = CliffordSandwich::new(&c, &ch, k.k)?.to_channel()?;
            let v = aotoc_exact(&omega, &Bipartition::halves(*l)?)?;
            scalar(run, "aotoc", v, json!({ "noise": noise, "k": k.k, "L": l, "seed": seed, "clifford": c.to_text() }))
        }
        Command::Apep { noise, k, l, seed } => {
            let u = noise_unitary(noise)?;
            let c = random_clifford(*l, &mut task_rng(*seed, 0))?;
            let v = apep_single_copy(&c, &u, k.k, *l, &Bipartition::halves(*l)?)?;
            scalar(run, "apep", v, json!({ "noise": noise, "k": k.k, "L": l, "seed": seed, "clifford": c.to_text() }))
        }
        Command::AvgAotoc { noise, k, l } => {
            let ch = build_noise(noise)?;
            let v = match l {
                Some(l) => {
                    even_l(*l)?;
                    cm::avg_aotoc_finite_l(&ch, k.k, *l)?
                }
                None => cm::avg_aotoc_infinite(&ch, k.k)?,
            };
            scalar(run, "avg_aotoc", v, json!({ "noise": noise, "k": k.k, "L": l }))
        }
        Command::AvgApep { noise, k, l } => {
            let u = noise_unitary(noise)?;
            let v = match l {
                Some(l) => {
                    even_l(*l)?;
                    cm::avg_apep_finite_l(&u, k.k, *l)?
                }
                None => cm::avg_apep_infinite(&u, k.k)?,
            };
            scalar(run, "avg_apep", v, json!({ "noise": noise, "k": k.k, "L": l }))
        }
        Command::HaarAvg { noise, k } => {
            let ch = build_noise(noise)?;
            let v = haar_avg_aotoc_infinite(&ch.natural_representation(), k.k)?;
            scalar(run, "haar_avg_aotoc", v, json!({ "noise": noise, "k": k.k }))
        }
        Command::Capacity { gate, noise } => {
            let ch = match gate {
                Some(g) => gate_channel(*g)?,
                None => build_noise(noise)?,
            };
            let cap = magic_capacity(&ch)?;
            scalar(run, "magic_capacity", cap.value, serde_json::to_value(&cap)?)
        }
        Command::SweepFit {
            config,
            seed,
            n_unitaries,
            k_max,
            resamples,
        } => {
            let mut cfg = load_config(config)?;
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if let Some(n) = n_unitaries {
                cfg.sweep.n_unitaries = *n;
            }
            if let Some(k) = k_max {
                cfg.sweep.k_max = *k;
            }
            if let Some(r) = resamples {
                cfg.fit.bootstrap_resamples = *r;
            }
            let rows = ex::sweep_apep_vs_capacity(&cfg.sweep, cfg.seed)?;
            let opts = FitOptions::from(&cfg.fit);
            let fit = ex::bootstrap_fit(&rows, cfg.fit.bootstrap_resamples, cfg.seed, &opts)?;
            ex::write_sweep_csv(&run.path(ex::SWEEP_CSV)?, &rows)?;
            ex::write_fit_json(&run.path(ex::FIT_JSON)?, &fit)?;
            ex::write_bootstrap_csv(&run.path(ex::BOOTSTRAP_CSV)?, &fit)?;
            ex::write_plot_csv(&run.path("plot_sweep.csv")?, &ex::output::sweep_plot(&rows, Some(&fit), 101))?;
            println!(
                "a = {} ± {} (95% CI [{}, {}])",
                fmt12(fit.a),
                fmt12(fit.a_stderr),
                fmt12(fit.a_ci95.0),
                fmt12(fit.a_ci95.1)
            );
            println!(
                "b = {} ± {} (95% CI [{}, {}])",
                fmt12(fit.b),
                fmt12(fit.b_stderr),
                fmt12(fit.b_ci95.0),
                fmt12(fit.b_ci95.1)
            );
            Ok(json!({ "config": cfg, "a": fit.a, "b": fit.b, "rss": fit.rss }))
        }
        Command::Typicality {
            config,
            seed,
            which,
            l_min,
            l_max,
            k_max,
            n_c,
        } => {
            let mut cfg = load_config(config)?;
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            let overrides = |lo: &mut usize, hi: &mut usize, k: &mut usize, c: &mut usize| {
                if let Some(v) = l_min {
                    *lo = *v;
                }
                if let Some(v) = l_max {
                    *hi = *v;
                }
                if let Some(v) = k_max {
                    *k = *v;
                }
                if let Some(v) = n_c {
                    *c = *v;
                }
            };
            let a = &mut cfg.typicality_apep;
            overrides(&mut a.l_min, &mut a.l_max, &mut a.k_max, &mut a.n_c);
            let o = &mut cfg.typicality_aotoc;
            overrides(&mut o.l_min, &mut o.l_max, &mut o.k_max, &mut o.n_c);
            let mut summary = json!({ "config": cfg });
            let report = |name: &str, recs: &[ex::TypicalityRecord], run: &mut Run| -> Outcome<Value> {
                ex::write_typicality_csv(&run.path(&format!("typicality_{name}.csv"))?, recs)?;
                ex::write_plot_csv(&run.path(&format!("plot_typicality_{name}.csv"))?, &ex::output::typicality_plot(recs))?;
                let mut trends = Vec::new();
                let ks: std::collections::BTreeSet<usize> = recs.iter().map(|r| r.k).collect();
                for k in ks {
                    let sel: Vec<_> = recs.iter().filter(|r| r.k == k).collect();
                    let x: Vec<f64> = sel.iter().map(|r| r.l as f64).collect();
                    let y: Vec<f64> = sel.iter().map(|r| r.mean_variance).collect();
                    if x.len() >= 2 {
                        let t = ex::exact_spearman_test(&x, &y)?;
                        println!("{name} k={k}: spearman rho = {}, one-sided p = {}", fmt12(t.rho), fmt12(t.p_negative));
                        trends.push(json!({ "k": k, "rho": t.rho, "p": t.p_negative }));
                    }
                }
                Ok(Value::Array(trends))
            };
            if *which != Which::Aotoc {
                let recs = ex::typicality_apep(&cfg.typicality_apep, cfg.seed)?;
                summary["apep_trend"] = report("apep", &recs, run)?;
            }
            if *which != Which::Apep {
                let recs = ex::typicality_aotoc(&cfg.typicality_aotoc, cfg.seed)?;
                summary["aotoc_trend"] = report("aotoc", &recs, run)?;
            }
            Ok(summary)
        }
        Command::Selftest => {
            let results = selftest::run_all();
            let mut failed = 0;
            for (name, outcome) in &results {
                match outcome {
                    Ok(()) => println!("PASS {name}"),
                    Err(msg) => {
                        failed += 1;
                        println!("FAIL {name}: {msg}");
                    }
                }
            }
            if failed > 0 {
                return Err(Failure {
                    code: 1,
                    kind: "selftest",
                    message: format!("{failed} of {} checks failed", results.len()),
                });
            }
            Ok(json!({ "checks": results.len() }))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Aotoc { .. } => "aotoc",
        Command::Apep { .. } => "apep",
        Command::AvgAotoc { .. } => "avg-aotoc",
        Command::AvgApep { .. } => "avg-apep",
        Command::HaarAvg { .. } => "haar-avg",
        Command::Capacity { .. } => "capacity",
        Command::SweepFit { .. } => "sweep-fit",
        Command::Typicality { .. } => "typicality",
        Command::Selftest => "selftest",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", json!({ "error": "invalid_argument", "message": e.to_string() }));
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let start = Instant::now();
    let mut run = Run {
        out: cli.out.clone(),
        files: Vec::new(),
    };
    match execute(&cli.command, &mut run) {
        Ok(summary) => {
            if run.out.is_some() || !run.files.is_empty() {
                let manifest = json!({
                    "command": command_name(&cli.command),
                    "argv": std::env::args().collect::<Vec<_>>(),
                    "version": env!("CARGO_PKG_VERSION"),
                    "threads": cli.threads,
                    "wall_time_s": start.elapsed().as_secs_f64(),
                    "files": run.files,
                    "summary": summary,
                });
                let written = run
                    .dir()
                    .and_then(|d| Ok(std::fs::write(d.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?));
                if let Err(f) = written {
                    eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
                    return ExitCode::from(f.code);
                }
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fmt12;

    #[test]
    fn formatting() {
        assert_eq!(fmt12(0.5), "0.5");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(std::f64::consts::SQRT_2), "1.41421356237");
        assert_eq!(fmt12(-2.5e-8), "-2.50000000000e-8");
    }
}
