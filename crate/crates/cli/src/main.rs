//! `hjsafe` command line: solve, query, simulate and slice.
//!
//! Results go to stdout as `key=value` lines, diagnostics to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjsafe::io::{parse_config, read_field, slice_to_csv, trace_to_csv, write_field, FieldHeader};
use hjsafe::safe_set::{dimension_index, extract_slice, safe_volume_fraction};
use hjsafe::sim::{run, trajectory_payoff};
use hjsafe::solver::solve_with_observer;
use hjsafe::{
    gradient_at, is_safe, safety_filter, value_at, Error, RelativeState, SafetyFilterConfig, Scenario, ScenarioConfig, SimContext,
    ValueField, STATE_NAMES,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_INSTABILITY: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_IO: u8 = 5;
const EXIT_DOMAIN: u8 = 6;

#[derive(Parser)]
#[command(name = "hjsafe", version, about = "Reachability-based safety for an ego car between two human drivers")]
struct Cli {
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, env = "HJ_WORKERS", default_value_t = 0, global = true)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the invariance game and write the value field.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Value, gradient, safety flag and filtered control at one state.
    Query {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        state: String,
        /// Nominal ego acceleration passed to the filter.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        nominal: f64,
        #[command(flatten)]
        margin: Margin,
    },
    /// Closed-loop simulation from the configured initial states.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: PathBuf,
        /// Trace CSV; with several initial states the index is appended to the file stem.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured initial states.
        #[arg(long)]
        state: Option<String>,
    },
    /// Two-dimensional cut through a field as CSV.
    Slice {
        #[arg(long)]
        field: PathBuf,
        /// `name=value`, repeatable, e.g. `--fix v_g2=0`.
        #[arg(long = "fix")]
        fix: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the configuration with every default filled in.
    Config {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Margin {
    /// Value threshold for the safe flag and filter activation.
    #[arg(long, allow_negative_numbers = true)]
    margin: Option<f64>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invalid { .. } | Error::Config(_) | Error::EmptyTrace => EXIT_CONFIG,
            Error::Instability { .. } => EXIT_INSTABILITY,
            Error::OutOfDomain { .. } => EXIT_DOMAIN,
            Error::Format(_) | Error::Io(_) => EXIT_IO,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type Outcome = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
        eprintln!("warning: could not size the worker pool: {e}");
    }
    let result = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, &out),
        Command::Query { field, state, nominal, margin } => cmd_query(&field, &state, nominal, margin.margin),
        Command::Simulate { config, field, out, state } => cmd_simulate(&config, &field, &out, state.as_deref()),
        Command::Slice { field, fix, out } => cmd_slice(&field, &fix, &out),
        Command::Config { config } => load_config(&config).map(|c| {
            println!("{}", c.to_json_pretty());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn load_field(path: &Path) -> std::result::Result<(FieldHeader, ValueField), Failure> {
    read_field(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn parse_state(text: &str, dim: usize) -> std::result::Result<Vec<f64>, Failure> {
    let z = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| fail(EXIT_CONFIG, format!("--state: {e}")))?;
    if z.len() != dim {
        return Err(fail(EXIT_CONFIG, format!("--state: expected {dim} comma-separated values, got {}", z.len())));
    }
    Ok(z)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_solve(config: &Path, out: &Path) -> Outcome {
    let cfg = load_config(config)?;
    let model = cfg.model();
    // fail before a long solve rather than after it
    fs::File::create(out).map_err(|e| fail(EXIT_IO, format!("{}: {e}", out.display())))?;
    let mut last_print = 0.0;
    let outcome = solve_with_observer(&cfg.grid, &cfg.constraint_box, model, cfg.bounds, cfg.solver, &mut |r, _, _| {
        if r.tau - last_print >= 1.0 {
            eprintln!("tau={:.2} iteration={} max_change_rate={:.3e}", r.tau, r.iteration, r.max_change / r.dt);
            last_print = r.tau;
        }
    })?;
    let field = &outcome.field;
    let header = FieldHeader::new(
        field,
        cfg.scenario_hash(),
        outcome.converged,
        model.tag(),
        cfg.bounds,
        cfg.constraint_box,
    );
    write_field(out, &header, field).map_err(|e| fail(EXIT_IO, format!("{}: {e}", out.display())))?;
    let scenario = match cfg.scenario {
        Scenario::TwoCar => "two_car",
        Scenario::ThreeCar => "three_car",
    };
    println!("scenario={scenario}");
    println!("model={}", model.tag());
    println!("scenario_hash={}", header.scenario_hash);
    println!("nodes={}", cfg.grid.len());
    println!("iterations={}", field.iterations);
    println!("tau={}", field.tau);
    println!("converged={}", outcome.converged);
    println!("safe_fraction={}", safe_volume_fraction(field, 0.0));
    println!("max_value={}", field.max_value());
    println!("field={}", out.display());
    Ok(if outcome.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_query(field_path: &Path, state: &str, nominal: f64, margin: Option<f64>) -> Outcome {
    let (header, field) = load_field(field_path)?;
    let z = parse_state(state, field.dim())?;
    let filter = SafetyFilterConfig { activation_margin: margin.unwrap_or(0.0), ..SafetyFilterConfig::default() };
    let value = value_at(&field, &z)?;
    let gradient = gradient_at(&field, &z)?.to_array();
    let safe = is_safe(&field, &z, filter.activation_margin)?;
    let control = safety_filter(&field, &z, nominal, &filter, &header.bounds)?;
    println!("value={value}");
    println!("gradient={}", fmt_list(&gradient[..field.dim()]));
    println!("safe={safe}");
    println!("filtered_control={control}");
    Ok(0)
}

fn indexed_path(out: &Path, i: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{i}"),
    };
    out.with_file_name(name)
}

fn cmd_simulate(config: &Path, field_path: &Path, out: &Path, state: Option<&str>) -> Outcome {
    let cfg = load_config(config)?;
    let (header, field) = load_field(field_path)?;
    if header.scenario_hash != cfg.scenario_hash() {
        return Err(fail(
            EXIT_CONFIG,
            format!("field {} was solved for a different scenario (hash {})", field_path.display(), header.scenario_hash),
        ));
    }
    let starts = match state {
        Some(s) => vec![parse_state(s, cfg.dim())?],
        None => cfg.simulation.initial_states.clone(),
    };
    if starts.is_empty() {
        return Err(fail(EXIT_CONFIG, "simulation.initial_states: nothing to simulate"));
    }
    let ctx = SimContext {
        dim: cfg.dim(),
        field: Some(&field),
        filter: cfg.filter,
        bounds: cfg.bounds,
        idm: cfg.idm,
        rule: cfg.reaction_rule,
        constraint: cfg.constraint_box,
    };
    let mut any_violation = false;
    for (i, z0) in starts.iter().enumerate() {
        let z0 = RelativeState::from_coords(z0)?;
        let trace = run(&z0, &cfg.simulation.behaviors, &ctx, cfg.simulation.dt, cfg.simulation.horizon)?;
        let path = if starts.len() == 1 { out.to_path_buf() } else { indexed_path(out, i) };
        fs::write(&path, trace_to_csv(&trace)).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
        let payoff = trajectory_payoff(&trace, &cfg.constraint_box)?;
        let prefix = if starts.len() == 1 { String::new() } else { format!("run{i}.") };
        println!("{prefix}initial_state={}", fmt_list(&z0.to_array()[..cfg.dim()]));
        println!("{prefix}violation={}", trace.violated());
        match trace.first_violation {
            Some(t) => println!("{prefix}first_violation={t}"),
            None => println!("{prefix}first_violation=none"),
        }
        println!("{prefix}left_domain={}", trace.left_domain);
        println!("{prefix}steps={}", trace.steps());
        println!("{prefix}payoff={payoff}");
        println!("{prefix}trace={}", path.display());
        any_violation |= trace.violated();
    }
    if starts.len() > 1 {
        println!("violation={any_violation}");
    }
    Ok(0)
}

fn cmd_slice(field_path: &Path, fix: &[String], out: &Path) -> Outcome {
    let (_, field) = load_field(field_path)?;
    let dim = field.dim();
    let mut fixed = Vec::with_capacity(fix.len());
    for item in fix {
        let (name, value) =
            item.split_once('=').ok_or_else(|| fail(EXIT_CONFIG, format!("--fix '{item}': expected name=value")))?;
        let d = dimension_index(name.trim(), dim)?;
        let v: f64 = value.trim().parse().map_err(|e| fail(EXIT_CONFIG, format!("--fix '{item}': {e}")))?;
        fixed.push((d, v));
    }
    let free: Vec<usize> = (0..dim).filter(|d| !fixed.iter().any(|(f, _)| f == d)).collect();
    if free.len() != 2 {
        return Err(fail(
            EXIT_CONFIG,
            format!("--fix must leave exactly two of {} free, {} left", STATE_NAMES[..dim].join(", "), free.len()),
        ));
    }
    let slice = extract_slice(&field, &fixed, [free[0], free[1]])?;
    fs::write(out, slice_to_csv(&slice)).map_err(|e| fail(EXIT_IO, format!("{}: {e}", out.display())))?;
    let [x, y] = slice.axis_names();
    println!("x_axis={x}");
    println!("y_axis={y}");
    println!("columns={}", slice.x_axis.len());
    println!("rows={}", slice.y_axis.len());
    println!("slice={}", out.display());
    Ok(0)
}
