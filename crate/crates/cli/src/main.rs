use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use motzkin_core::groundstate::build_ground_state;
use motzkin_core::hamiltonian::{
    diagonalize_low_with, generate_tuned_angles, residual_with_cap, EigenOptions, DEFAULT_DIM_CAP,
};
use motzkin_core::schmidt::profile;
use motzkin_core::sweep::{self, Model, SweepPlan};
use motzkin_core::{fmt_f64, ChainSpec, Deformation, Error, Result};

const RESIDUAL_LIMIT: f64 = 1e-10;
const DEFAULT_THETA_FIRST: f64 = 0.7;

#[derive(Parser)]
#[command(
    name = "motzkin",
    version,
    about = "Area-weighted colored Motzkin spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Half-chain entanglement entropy S_n (nats unless --base2)
    Entropy {
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        base2: bool,
    },
    /// Schmidt coefficients of the half-chain cut as CSV rows m,logM,p
    SchmidtTable {
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        n: usize,
    },
    /// Check that the explicit ground state is annihilated and is the unique zero mode
    Verify {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Tuned random angle set as CSV rows junction,phi,psi,theta
    Angles {
        #[arg(long = "two-n")]
        two_n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_THETA_FIRST)]
        theta_first: f64,
        /// Print the full chain spec as TOML instead
        #[arg(long)]
        toml: bool,
    },
    /// Run a parameter sweep plan and write the entropy CSV
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan's `out`; stdout when neither is given
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the plan's `jobs`
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Least-squares scaling fit of a sweep CSV, one row per (s, t)
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// linear, sqrt, log, constant, or `all` (every model, best first)
        #[arg(long)]
        model: String,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Write the ground state as a list of walks with log-weights
    DumpGs {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Params {
    #[arg(long)]
    s: u32,
    #[arg(long)]
    t: f64,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long = "two-n")]
    two_n: usize,
    #[arg(long, default_value_t = 1)]
    s: u32,
    #[arg(long, required_unless_present = "angles_seed", conflicts_with = "angles_seed")]
    t: Option<f64>,
    /// Use a tuned random angle set (single color) instead of a uniform t
    #[arg(long)]
    angles_seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_THETA_FIRST, requires = "angles_seed")]
    theta_first: f64,
}

impl ChainArgs {
    fn spec(&self) -> Result<ChainSpec> {
        match (self.t, self.angles_seed) {
            (Some(t), _) => ChainSpec::uniform(self.two_n, self.s, t),
            (None, Some(seed)) => {
                if self.s != 1 {
                    return Err(Error::InvalidSpec(
                        "angle deformations are single-color; drop --s".into(),
                    ));
                }
                generate_tuned_angles(self.two_n, seed, self.theta_first)
            }
            (None, None) => unreachable!("clap requires --t or --angles-seed"),
        }
    }
}

fn dim_cap() -> Result<usize> {
    match std::env::var("MOTZKIN_DIM_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("MOTZKIN_DIM_CAP = {v:?} is not a positive integer"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Ok(false) means the command ran but its check failed.
fn run(command: Command, out: &mut impl Write) -> Result<bool> {
    match command {
        Command::Entropy { params, n, base2 } => {
            let p = profile(n, params.s, params.t)?;
            let value = if base2 { p.entropy_bits() } else { p.entropy() };
            writeln!(out, "{}", fmt_f64(value))?;
        }
        Command::SchmidtTable { params, n } => {
            let p = profile(n, params.s, params.t)?;
            writeln!(out, "m,logM,p")?;
            for (m, (lm, pm)) in p.log_m.iter().zip(p.p()).enumerate() {
                writeln!(out, "{m},{},{}", fmt_f64(*lm), fmt_f64(pm))?;
            }
        }
        Command::Verify { chain } => {
            let spec = chain.spec()?;
            let cap = dim_cap()?;
            let state = build_ground_state(&spec)?.to_dense_state_with_cap(cap)?;
            let res = residual_with_cap(&spec, &state, cap)?;
            let opts = EigenOptions {
                dim_cap: cap,
                ..EigenOptions::default()
            };
            let report = diagonalize_low_with(&spec, 2, &opts)?;
            eprintln!("{}", motzkin_core::SpectrumReport::CSV_HEADER);
            eprintln!("{}", report.to_csv_row());
            let res_ok = res < RESIDUAL_LIMIT;
            let null_ok = report.unique_zero_mode();
            writeln!(
                out,
                "residual<1e-10 {}; null_dim={} {}",
                pass(res_ok),
                report.null_dim,
                pass(null_ok)
            )?;
            return Ok(res_ok && null_ok);
        }
        Command::Angles {
            two_n,
            seed,
            theta_first,
            toml,
        } => {
            let spec = generate_tuned_angles(two_n, seed, theta_first)?;
            if toml {
                write!(out, "{}", spec.to_toml()?)?;
            } else if let Deformation::Angles(a) = &spec.deformation {
                writeln!(out, "junction,phi,psi,theta")?;
                for p in 0..a.junctions() {
                    writeln!(
                        out,
                        "{p},{},{},{}",
                        fmt_f64(a.phi[p]),
                        fmt_f64(a.psi[p]),
                        fmt_f64(a.theta[p])
                    )?;
                }
            }
        }
        Command::Sweep {
            plan,
            out: out_path,
            jobs,
        } => {
            let mut plan = SweepPlan::from_file(&plan)?;
            if let Some(j) = jobs {
                plan.jobs = j;
            }
            plan.validate()?;
            let result = sweep::run_sweep(&plan)?;
            let failed = result.rows.iter().filter(|r| !r.is_ok()).count();
            match out_path.or(plan.out) {
                Some(path) => sweep::write_csv_atomic(&result.rows, &path)?,
                None => sweep::write_rows(&result.rows, &mut *out)?,
            }
            if failed > 0 {
                eprintln!("{failed} rows failed");
                return Ok(false);
            }
        }
        Command::Fit {
            input,
            model,
            n_min,
            n_max,
        } => {
            let models: Vec<Model> = match model.as_str() {
                "all" => Model::ALL.to_vec(),
                m => vec![m.parse()?],
            };
            let rows = sweep::read_csv(&input)?;
            let mut points: Vec<(u32, f64)> = Vec::new();
            for r in &rows {
                if !points.contains(&(r.s, r.t)) {
                    points.push((r.s, r.t));
                }
            }
            let (lo, hi) = (n_min.unwrap_or(0), n_max.unwrap_or(usize::MAX));
            writeln!(out, "s,t,model,coefficient,intercept,residual,n_min,n_max")?;
            for (s, t) in points {
                let subset = sweep::select(&rows, s, t, lo, hi);
                let mut fits = models
                    .iter()
                    .map(|&m| sweep::fit_scaling(&subset, m))
                    .collect::<Result<Vec<_>>>()?;
                fits.sort_by(|a, b| a.residual.total_cmp(&b.residual));
                for f in fits {
                    writeln!(
                        out,
                        "{s},{},{},{},{},{},{},{}",
                        fmt_f64(t),
                        f.model,
                        fmt_f64(f.coefficient),
                        fmt_f64(f.intercept),
                        fmt_f64(f.residual),
                        f.n_range.0,
                        f.n_range.1
                    )?;
                }
            }
        }
        Command::DumpGs { chain, out: path } => {
            let spec = chain.spec()?;
            let text = build_ground_state(&spec)?.dump()?;
            fs::write(&path, text)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let outcome = run(cli.command, &mut out);
    let _ = out.flush();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
