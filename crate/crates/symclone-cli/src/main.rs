//! Command-line front end for the symclone library: closed-form tables,
//! invariant verification, single clone runs, optimizer recovery, and
//! Monte Carlo twirls, with reproducible machine-readable reports.

mod report;
mod stateparse;
mod verify;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use symclone::channel::{random_cptp_channel, twirl_mc};
use symclone::cloner::{analytics, one_site_restriction, optimal_cloner};
use symclone::linalg::matrix::{outer, vec_norm};
use symclone::linalg::random::{random_pure_state_from, Seed};
use symclone::merit::{fidelity_at, optimize_channel, OptimizeOptions};
use symclone::sym::{tensor_power_coords, CloneSpec};
use symclone::C64;

use report::{
    matrix_rows, render, CloneRow, ConfigEcho, Format, OptimizeRow, Report, ResultRow, TableRow,
    TwirlRow, SCHEMA,
};

#[derive(Parser)]
#[command(
    name = "symclone",
    version,
    about = "Optimal symmetric cloner construction, evaluation, and recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Levels per system
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Input copies
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Output copies
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Tolerance applied by checks
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Seed behind every random draw
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest product-space dimension any step may materialize
    #[arg(long, default_value_t = 4096)]
    max_dim: usize,
    /// Output format (CSV is available for `table` only)
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the rendered report to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report real wall time instead of 0 (makes output non-reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form fidelity table over a range of specs
    Table {
        #[command(flatten)]
        common: Common,
        /// Upper end of the input-copy range (inclusive); defaults to --n
        #[arg(long)]
        n_max: Option<usize>,
        /// Upper end of the output-copy range (inclusive); defaults to --m
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Run the named invariant checks against the constructed cloner
    Verify {
        #[command(flatten)]
        common: Common,
        /// Test hook: scale one Kraus operator by 1.01 before checking
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Clone a pure state and report the outputs
    Clone {
        #[command(flatten)]
        common: Common,
        /// Input state as comma-separated complex entries, e.g. "0.6,0.8i"
        #[arg(long)]
        state: String,
    },
    /// Recover the optimal value by projected gradient ascent
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Iteration cap
        #[arg(long)]
        max_iters: Option<usize>,
        /// Gradient step (default: reciprocal of the largest eigenvalue)
        #[arg(long)]
        step: Option<f64>,
    },
    /// Monte Carlo twirl of the cloner, or of a random channel
    Twirl {
        #[command(flatten)]
        common: Common,
        /// Twirl a random channel instead of the optimal cloner
        #[arg(long)]
        random_channel: bool,
    },
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::Table { common, .. }
            | Cmd::Verify { common, .. }
            | Cmd::Clone { common, .. }
            | Cmd::Optimize { common, .. }
            | Cmd::Twirl { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Cmd::Table { .. } => "table",
            Cmd::Verify { .. } => "verify",
            Cmd::Clone { .. } => "clone",
            Cmd::Optimize { .. } => "optimize",
            Cmd::Twirl { .. } => "twirl",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    let started = Instant::now();
    let command = cli.command.name();
    let common = cli.command.common();
    let format = common.format;
    let out_path = common.out.clone();
    let timing = common.timing;

    let outcome = validate(&cli.command).and_then(|()| execute(&cli.command));
    let (config, results, failures) = match outcome {
        Ok(parts) => parts,
        Err(message) => {
            eprintln!("error: {message}");
            return 2;
        }
    };

    let report = Report {
        schema: SCHEMA,
        command,
        config,
        results,
        failures,
        elapsed_ms: if timing { started.elapsed().as_millis() as u64 } else { 0 },
    };
    let rendered = render(&report, format);
    if let Some(path) = out_path {
        if let Err(err) = std::fs::write(&path, rendered) {
            eprintln!("error: cannot write {}: {err}", path.display());
            return 2;
        }
    } else {
        print!("{rendered}");
    }
    if report.failures.is_empty() { 0 } else { 1 }
}

fn validate(cmd: &Cmd) -> Result<(), String> {
    let common = cmd.common();
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(format!("tol must be a positive number, got {}", common.tol));
    }
    if common.samples == 0 {
        return Err("samples must be at least 1".into());
    }
    if common.format == Format::Csv && !matches!(cmd, Cmd::Table { .. }) {
        return Err("CSV output exists only for the table command".into());
    }
    Ok(())
}

type Executed = (ConfigEcho, Vec<ResultRow>, Vec<String>);

fn execute(cmd: &Cmd) -> Result<Executed, String> {
    let mut config = echo(cmd.common());
    match cmd {
        Cmd::Table { common, n_max, m_max } => {
            config.n_max = Some(n_max.unwrap_or(common.n));
            config.m_max = Some(m_max.unwrap_or(common.m));
            let rows = cmd_table(common, *n_max, *m_max)?;
            Ok((config, rows, Vec::new()))
        }
        Cmd::Verify { common, inject_fault } => {
            config.inject_fault = *inject_fault;
            let spec = spec_of(common)?;
            let verification = verify::run_checks(
                &spec,
                common.tol,
                common.samples,
                common.seed,
                common.max_dim,
                *inject_fault,
            )
            .map_err(|e| e.to_string())?;
            let rows = verification.rows.into_iter().map(ResultRow::Check).collect();
            Ok((config, rows, verification.failures))
        }
        Cmd::Clone { common, state } => {
            config.state = Some(state.clone());
            let row = cmd_clone(common, state)?;
            Ok((config, vec![ResultRow::Clone(Box::new(row))], Vec::new()))
        }
        Cmd::Optimize { common, max_iters, step } => {
            config.max_iters = *max_iters;
            config.step = *step;
            let (row, converged) = cmd_optimize(common, *max_iters, *step)?;
            let failures =
                if converged { Vec::new() } else { vec!["convergence".to_string()] };
            Ok((config, vec![ResultRow::Optimize(row)], failures))
        }
        Cmd::Twirl { common, random_channel } => {
            config.random_channel = *random_channel;
            let row = cmd_twirl(common, *random_channel)?;
            Ok((config, vec![ResultRow::Twirl(row)], Vec::new()))
        }
    }
}

fn echo(common: &Common) -> ConfigEcho {
    ConfigEcho {
        d: common.d,
        n: common.n,
        m: common.m,
        n_max: None,
        m_max: None,
        tol: common.tol,
        samples: common.samples,
        seed: common.seed,
        max_dim: common.max_dim,
        format: common.format.name(),
        state: None,
        max_iters: None,
        step: None,
        random_channel: false,
        inject_fault: false,
    }
}

fn spec_of(common: &Common) -> Result<CloneSpec, String> {
    CloneSpec::new(common.d, common.n, common.m).map_err(|e| e.to_string())
}

fn ratio_string(r: Ratio<i64>) -> (String, f64) {
    (r.to_string(), *r.numer() as f64 / *r.denom() as f64)
}

fn cmd_table(
    common: &Common,
    n_max: Option<usize>,
    m_max: Option<usize>,
) -> Result<Vec<ResultRow>, String> {
    let n_hi = n_max.unwrap_or(common.n);
    let m_hi = m_max.unwrap_or(common.m);
    if n_hi < common.n {
        return Err(format!("--n-max {n_hi} is below --n {}", common.n));
    }
    if m_hi < common.m {
        return Err(format!("--m-max {m_hi} is below --m {}", common.m));
    }
    let mut rows = Vec::new();
    for n in common.n..=n_hi {
        for m in common.m.max(n)..=m_hi {
            let spec = CloneSpec::new(common.d, n, m).map_err(|e| e.to_string())?;
            let a = analytics(&spec).map_err(|e| e.to_string())?;
            let (global, global_dec) = ratio_string(a.global_fidelity);
            let (cow, cow_dec) = ratio_string(a.black_cow);
            let (single, single_dec) = ratio_string(a.single_clone_fidelity);
            rows.push(ResultRow::Table(TableRow {
                d: common.d,
                n,
                m,
                global_fidelity: global,
                black_cow: cow,
                single_clone_fidelity: single,
                global_fidelity_decimal: global_dec,
                black_cow_decimal: cow_dec,
                single_clone_fidelity_decimal: single_dec,
            }));
        }
    }
    if rows.is_empty() {
        return Err("the requested ranges contain no valid spec (need N <= M)".into());
    }
    Ok(rows)
}

fn cmd_clone(common: &Common, state: &str) -> Result<CloneRow, String> {
    let spec = spec_of(common)?;
    let raw = stateparse::parse_state(state)?;
    if raw.len() != common.d {
        return Err(format!(
            "state has {} entries but systems have {} levels",
            raw.len(),
            common.d
        ));
    }
    let norm = vec_norm(&raw);
    if !(norm.is_finite() && norm > 0.0) {
        return Err("state vector must have positive finite norm".into());
    }
    let phi: Vec<C64> = raw.iter().map(|z| z / norm).collect();
    let t = optimal_cloner(&spec, common.max_dim).map_err(|e| e.to_string())?;
    let p = tensor_power_coords(&phi, spec.inputs()).map_err(|e| e.to_string())?;
    let out = t.apply_matrix(&outer(&p, &p));
    let single = one_site_restriction(&out, spec.levels(), spec.outputs(), common.max_dim)
        .map_err(|e| e.to_string())?;
    let fidelity = fidelity_at(&t.choi(), &spec, &phi).map_err(|e| e.to_string())?;
    Ok(CloneRow {
        input_norm: norm,
        renormalized: (norm - 1.0).abs() > 1e-12,
        state: phi.iter().map(|z| [z.re, z.im]).collect(),
        fidelity,
        output_symmetric: matrix_rows(&out),
        single_clone: matrix_rows(&single),
    })
}

fn cmd_optimize(
    common: &Common,
    max_iters: Option<usize>,
    step: Option<f64>,
) -> Result<(OptimizeRow, bool), String> {
    let spec = spec_of(common)?;
    let mut opts = OptimizeOptions::default();
    if let Some(iters) = max_iters {
        if iters == 0 {
            return Err("--max-iters must be at least 1".into());
        }
        opts.max_iters = iters;
    }
    opts.step = step;
    opts.tol = common.tol;
    opts.seed = Seed(common.seed);
    opts.max_dim = common.max_dim;
    let result = optimize_channel(&spec, &opts).map_err(|e| e.to_string())?;
    Ok((
        OptimizeRow {
            best_value: result.best_value,
            gap_to_closed_form: result.gap_to_closed_form,
            choi_distance_to_optimal: result.choi_distance_to_optimal,
            iterations: result.iterations,
            converged: result.converged,
            final_residual: result.final_dykstra_residual,
        },
        result.converged,
    ))
}

fn cmd_twirl(common: &Common, random_channel: bool) -> Result<TwirlRow, String> {
    let spec = spec_of(common)?;
    let t = optimal_cloner(&spec, common.max_dim).map_err(|e| e.to_string())?;
    let (source, channel) = if random_channel {
        let ch = random_cptp_channel(
            spec.input_sym_dim(),
            spec.output_sym_dim(),
            3,
            &mut Seed(common.seed).stream(u64::MAX - 1),
        )
        .map_err(|e| e.to_string())?;
        ("random-channel", ch)
    } else {
        ("optimal-cloner", t.clone())
    };
    let twirled = twirl_mc(&channel, &spec, common.samples, Seed(common.seed), common.max_dim)
        .map_err(|e| e.to_string())?;
    let mut mean = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let probes = 20;
    for j in 0..probes {
        let phi = random_pure_state_from(
            spec.levels(),
            &mut Seed(common.seed).stream(u64::MAX - 2 - j as u64),
        );
        let f = fidelity_at(&twirled, &spec, &phi).map_err(|e| e.to_string())?;
        mean += f;
        lo = lo.min(f);
        hi = hi.max(f);
    }
    Ok(TwirlRow {
        samples: common.samples,
        source,
        choi_distance_to_source: twirled.distance(&channel.choi()),
        choi_distance_to_optimal: twirled.distance(&t.choi()),
        fidelity_mean: mean / probes as f64,
        fidelity_spread: hi - lo,
    })
}
