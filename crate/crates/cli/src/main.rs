//! `bogolab`: command-line front end for the bogolab-core experiments.

mod model_spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bogolab_core::bogoliubov::{diagonalize, enumerate_targets, quadratic_form};
use bogolab_core::fock::hamiltonian::build_hn;
use bogolab_core::fock::lanczos::{eig_lowest, EigenOptions};
use bogolab_core::harness::{
    compare_spectra, convergence_fit, multi_condensate, thm1_scan, thm2_check, thm3_check, HarnessOptions, Probe,
};
use bogolab_core::hartree::{find_minimizers, solve_stationary, HartreeState, MultistartOptions, ScfOptions};
use bogolab_core::io;
use bogolab_core::linalg::{CVector, C64};
use bogolab_core::model::{check_assumption_c0, ModeProblem};
use bogolab_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use model_spec::{load_model, ModelError};

#[derive(Parser, Debug)]
#[command(name = "bogolab", version, about = "Hartree, Bogoliubov and exact N-body spectra of finite-mode boson models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the symmetries of a model and report its invariants.
    Validate {
        /// Model file or inline builder (dimer:t=..,U=.. | ring:L=..,t=..,vhat=a;b;.. | random:seed=..,d=..,strength=..)
        model: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Hartree minimizers, or one stationary state with --init-mode.
    Hartree {
        #[command(flatten)]
        common: Common,
        /// Report every minimizer instead of the first.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bogoliubov spectrum at the selected state.
    Bog {
        #[command(flatten)]
        common: Common,
        /// Number of quadratic-Hamiltonian levels to list.
        #[arg(long, default_value_t = 10)]
        levels: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lowest eigenvalues of the N-body Hamiltonian.
    Exact {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 6)]
        k: usize,
        /// Also write the Hamiltonian in Matrix Market format.
        #[arg(long)]
        mtx: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact excitations against Bogoliubov levels.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        lmax: usize,
        /// Write PREFIX_l<l>.dat gap series for gnuplot.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Norm of the residual operator on fixed probe vectors.
    Thm1 {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// vacuum | fock:n1,n2,.. | bog:k (repeatable)
        #[arg(long = "probe", default_value = "fock:1")]
        probes: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Count exact levels in the window around a Bogoliubov level.
    Thm2 {
        #[command(flatten)]
        common: Common,
        /// 1-based Bogoliubov level index.
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "ccal", default_value_t = 10.0)]
        c_cal: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Localize exact eigenvectors and apply the Bogoliubov Hamiltonian.
    Thm3 {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Several degenerate minimizers: union spectrum, overlaps, splitting.
    Multi {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        lmax: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Model file or inline builder
    #[arg(long)]
    model: String,
    /// Condensate from a HartreeState JSON file.
    #[arg(long, conflicts_with = "init_mode")]
    state: Option<PathBuf>,
    /// Solve for the stationary state grown from this mode instead of the minimizer.
    #[arg(long)]
    init_mode: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol_degenerate: f64,
    #[arg(long, default_value_t = 1e-11)]
    eig_tol: f64,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Usage(m) => Failure::Usage(m),
            ModelError::Domain(e) => Failure::Domain(e),
        }
    }
}

type Outcome = Result<(), Failure>;

impl OutArgs {
    fn format(&self, default: Format) -> Format {
        if let Some(f) = self.format {
            return f;
        }
        match self.out.as_deref().and_then(Path::extension).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            _ => default,
        }
    }

    fn emit(&self, text: &str) -> Outcome {
        write_text(self.out.as_deref(), text)
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
            if !text.ends_with('\n') {
                let _ = out.write_all(b"\n");
            }
            Ok(())
        }
    }
}

fn json_only(out: &OutArgs) -> Outcome {
    if out.format(Format::Json) == Format::Csv {
        return Err(Failure::Usage("this command writes JSON only".into()));
    }
    Ok(())
}

impl Common {
    fn harness(&self) -> HarnessOptions {
        HarnessOptions {
            eig: EigenOptions { seed: self.seed, tol: self.eig_tol, ..Default::default() },
            tol_degenerate: self.tol_degenerate,
            ..Default::default()
        }
    }

    fn multistart(&self) -> MultistartOptions {
        MultistartOptions { n_starts: self.starts, seed: self.seed, ..Default::default() }
    }

    fn check(&self) -> Outcome {
        if !(self.tol_degenerate > 0.0) || !(self.eig_tol > 0.0) {
            return Err(Failure::Usage("tolerances must be positive".into()));
        }
        if self.starts == 0 {
            return Err(Failure::Usage("--starts must be at least 1".into()));
        }
        Ok(())
    }

    fn problem(&self) -> Result<ModeProblem, Failure> {
        self.check()?;
        Ok(load_model(&self.model)?)
    }

    fn state(&self, problem: &ModeProblem) -> Result<HartreeState, Failure> {
        if let Some(path) = &self.state {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let st = io::state_from_json(&text)?;
            if st.c.len() != problem.d() {
                return Err(Error::DimensionMismatch { expected: problem.d(), got: st.c.len() }.into());
            }
            return Ok(st);
        }
        if let Some(k) = self.init_mode {
            if k >= problem.d() {
                return Err(Failure::Usage(format!("--init-mode {k} outside 0..{}", problem.d())));
            }
            let mut init = CVector::zeros(problem.d());
            init[k] = C64::from(1.0);
            return Ok(solve_stationary(problem, &init, &ScfOptions::default())?);
        }
        Ok(find_minimizers(problem, &self.multistart())?.remove(0))
    }

    fn config(&self) -> serde_json::Value {
        json!({
            "model": self.model,
            "state": self.state.as_ref().map(|p| p.display().to_string()),
            "init_mode": self.init_mode,
            "seed": self.seed,
            "starts": self.starts,
            "tol_degenerate": self.tol_degenerate,
            "eig_tol": self.eig_tol,
        })
    }
}

fn check_n_list(ns: &[usize]) -> Outcome {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--N must be strictly increasing".into()));
    }
    Ok(())
}

fn parse_probe(s: &str) -> Result<Probe, Failure> {
    let bad = || Failure::Usage(format!("bad probe '{s}' (vacuum | fock:n1,n2,.. | bog:k)"));
    if s == "vacuum" {
        return Ok(Probe::Vacuum);
    }
    if let Some(rest) = s.strip_prefix("fock:") {
        let occ: Vec<u32> = rest.split(',').map(|x| x.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        return Ok(Probe::Fock(occ));
    }
    if let Some(rest) = s.strip_prefix("bog:") {
        return Ok(Probe::Bogoliubov(rest.parse().map_err(|_| bad())?));
    }
    Err(bad())
}

fn print_config(command: &str, mut config: serde_json::Value, extra: serde_json::Value) {
    config["command"] = json!(command);
    if let (Some(c), Some(e)) = (config.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            c.insert(k.clone(), v.clone());
        }
    }
    eprintln!("config: {config}");
}

fn out_config(out: &OutArgs) -> serde_json::Value {
    json!({ "out": out.out.as_ref().map(|p| p.display().to_string()) })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { model, out } => {
            print_config("validate", json!({ "model": model }), out_config(&out));
            json_only(&out)?;
            let p = load_model(&model)?;
            let c0 = match check_assumption_c0(&p) {
                Ok(v) => json!(v),
                Err(Error::MissingW2) => serde_json::Value::Null,
                Err(e) => return Err(e.into()),
            };
            let report = json!({
                "valid": true,
                "d": p.d(),
                "shift": p.shift(),
                "has_W2": p.interaction_sq().is_some(),
                "c0": c0,
            });
            out.emit(&serde_json::to_string_pretty(&report).expect("serializes"))
        }
        Command::Hartree { common, all, out } => {
            print_config("hartree", common.config(), json!({ "all": all, "out": out_config(&out)["out"] }));
            json_only(&out)?;
            let p = common.problem()?;
            if all && common.state.is_none() && common.init_mode.is_none() {
                let mins = find_minimizers(&p, &common.multistart())?;
                return out.emit(&io::states_to_json(&mins));
            }
            let st = common.state(&p)?;
            out.emit(&io::state_to_json(&st))
        }
        Command::Bog { common, levels, out } => {
            print_config("bog", common.config(), json!({ "levels": levels, "out": out_config(&out)["out"] }));
            json_only(&out)?;
            let p = common.problem()?;
            let st = common.state(&p)?;
            let spec = diagonalize(&quadratic_form(&p, &st)?, common.tol_degenerate);
            let lv = match enumerate_targets(&spec, levels) {
                Ok(l) => Some(l.into_iter().map(|x| x.value).collect()),
                Err(_) => None,
            };
            out.emit(&io::SpectrumFile::new(&spec, lv).to_json())
        }
        Command::Exact { common, n, k, mtx, out } => {
            print_config(
                "exact",
                common.config(),
                json!({ "N": n, "k": k, "mtx": mtx.as_ref().map(|p| p.display().to_string()), "out": out_config(&out)["out"] }),
            );
            json_only(&out)?;
            if k == 0 {
                return Err(Failure::Usage("--k must be at least 1".into()));
            }
            let p = common.problem()?;
            let (basis, h) = build_hn(&p, n)?;
            if let Some(path) = &mtx {
                write_text(Some(path), &h.to_matrix_market())?;
            }
            let r = eig_lowest(&h, k.min(basis.len()), &common.harness().eig)?;
            let st = common.state(&p)?;
            let shift = n as f64 * st.energy;
            let report = json!({
                "N": n,
                "dim": basis.len(),
                "values": r.values,
                "hartree_energy": st.energy,
                "excitations": r.values.iter().map(|v| v - shift).collect::<Vec<f64>>(),
            });
            out.emit(&serde_json::to_string_pretty(&report).expect("serializes"))
        }
        Command::Compare { common, n_list, lmax, gnuplot, out } => {
            print_config(
                "compare",
                common.config(),
                json!({ "N": n_list, "lmax": lmax, "gnuplot": gnuplot.as_ref().map(|p| p.display().to_string()), "out": out_config(&out)["out"] }),
            );
            check_n_list(&n_list)?;
            let p = common.problem()?;
            let st = common.state(&p)?;
            let rep = compare_spectra(&p, &st, &n_list, lmax, &common.harness())?;
            if let Some(prefix) = &gnuplot {
                for l in 1..=lmax {
                    let path = PathBuf::from(format!("{}_l{l}.dat", prefix.display()));
                    write_text(Some(&path), &io::gap_series(&rep, l))?;
                }
            }
            match out.format(Format::Csv) {
                Format::Csv => out.emit(&io::comparison_to_csv(&rep)),
                Format::Json => {
                    let fits = convergence_fit(&rep).unwrap_or_default();
                    out.emit(&io::to_json_pretty(&json!({ "report": rep, "fits": fits })))
                }
            }
        }
        Command::Thm1 { common, n_list, probes, out } => {
            print_config("thm1", common.config(), json!({ "N": n_list, "probes": probes, "out": out_config(&out)["out"] }));
            check_n_list(&n_list)?;
            let probes: Vec<Probe> = probes.iter().map(|s| parse_probe(s)).collect::<Result<_, _>>()?;
            let p = common.problem()?;
            let st = common.state(&p)?;
            let scan = thm1_scan(&p, &st, &n_list, &probes, &common.harness())?;
            match out.format(Format::Csv) {
                Format::Csv => out.emit(&io::thm1_to_csv(&scan)),
                Format::Json => out.emit(&io::to_json_pretty(&scan)),
            }
        }
        Command::Thm2 { common, level, m, n, c_cal, out } => {
            print_config(
                "thm2",
                common.config(),
                json!({ "level": level, "m": m, "N": n, "c_cal": c_cal, "out": out_config(&out)["out"] }),
            );
            json_only(&out)?;
            if !(c_cal > 0.0) {
                return Err(Failure::Usage("--ccal must be positive".into()));
            }
            let p = common.problem()?;
            let st = common.state(&p)?;
            let check = thm2_check(&p, &st, level, m, n, c_cal, &common.harness())?;
            out.emit(&io::to_json_pretty(&check))
        }
        Command::Thm3 { common, n_list, level, out } => {
            print_config("thm3", common.config(), json!({ "N": n_list, "level": level, "out": out_config(&out)["out"] }));
            check_n_list(&n_list)?;
            let p = common.problem()?;
            let st = common.state(&p)?;
            let rep = thm3_check(&p, &st, &n_list, level, &common.harness())?;
            match out.format(Format::Csv) {
                Format::Csv => out.emit(&io::thm3_to_csv(&rep)),
                Format::Json => out.emit(&io::to_json_pretty(&rep)),
            }
        }
        Command::Multi { common, n_list, lmax, out } => {
            print_config("multi", common.config(), json!({ "N": n_list, "lmax": lmax, "out": out_config(&out)["out"] }));
            check_n_list(&n_list)?;
            let p = common.problem()?;
            let rep = multi_condensate(&p, &n_list, lmax, &common.multistart(), &common.harness())?;
            match out.format(Format::Json) {
                Format::Csv => out.emit(&io::comparison_to_csv(&rep.comparison)),
                Format::Json => out.emit(&io::to_json_pretty(&rep)),
            }
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("BOGOLAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("BOGOLAB_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("BOGOLAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    eprintln!("threads: {n}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("usage error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
