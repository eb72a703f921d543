//! Command-line interface wiring the whole toolkit together: simulation,
//! the counter-machine reduction, SMT-LIB2/CHC emission, inductiveness
//! checking, invariant synthesis, refutation, and certificate verification.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use qflia_core::checker::{
    self, solver, Backend, BoundedCfg, CheckError, CheckReport, ImplicationOutcome, SolverCmd,
};
use qflia_core::formula::{
    parse_formula_with_vars, print_formula, to_tight_dnf, Dnf, Formula, Int,
};
use qflia_core::minsky::MinskyMachine;
use qflia_core::refuter::{
    self, CtiCertificate, RefutationOutcome, RefuterError, SystemKind,
};
use qflia_core::synthesizer::{self, SynthesizerError};
use qflia_core::systems::{
    build_prog, build_product, encode_ts, trace_to_jsonl, ProgramIR, State, PROG_VARS,
    PRODUCT_VARS,
};

const EXIT_DOMAIN_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_COUNTERMODEL: u8 = 3;
const EXIT_NOT_OVERAPPROXIMATION: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;
const EXIT_SOLVER_FAILURE: u8 = 6;

#[derive(Parser)]
#[command(
    name = "qflia",
    version,
    about = "Counter machines, their product with a squaring program, and QFLIA inductive invariants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Smt,
    Bounded,
    Both,
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Decision backend for the three inductiveness conditions
    #[arg(long, value_enum, default_value_t = BackendKind::Smt)]
    backend: BackendKind,

    /// Solver command line reading SMT-LIB2 on stdin (default: autodetect
    /// z3 or the Node shim in tools/; QFLIA_SOLVER overrides)
    #[arg(long)]
    solver: Option<String>,

    /// Per-query solver timeout in seconds
    #[arg(long, default_value_t = 10)]
    timeout: u64,

    /// Box radius for the bounded backend
    #[arg(long, default_value_t = 8)]
    bound: Int,
}

#[derive(Subcommand)]
enum Command {
    /// Run the squaring program (or its product with a machine); prints the
    /// trace as JSON lines, one state per line
    Simulate {
        /// Initial value of x (must be positive)
        #[arg(long)]
        x: Int,
        /// Step budget
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Counter machine to run in lockstep (.mm file)
        #[arg(long)]
        machine: Option<PathBuf>,
    },
    /// Build the product transition system and print its QFLIA encoding
    Reduce {
        #[arg(long)]
        machine: PathBuf,
    },
    /// Emit the three SMT-LIB2 inductiveness queries for a candidate
    EmitSmt2 {
        /// Product machine; without it the standalone program is encoded
        #[arg(long)]
        machine: Option<PathBuf>,
        /// Candidate invariant (formula file)
        #[arg(long)]
        candidate: PathBuf,
        /// Write initiation.smt2, consecution.smt2, safety.smt2 here
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Emit a constrained-Horn-clause (HORN) encoding of invariant existence
    EmitChc {
        /// Product machine; without it the standalone program is encoded
        #[arg(long)]
        machine: Option<PathBuf>,
    },
    /// Check initiation, consecution, and safety for a candidate invariant
    CheckInv {
        /// Product machine; without it the candidate is checked on the
        /// standalone program
        #[arg(long)]
        machine: Option<PathBuf>,
        #[arg(long)]
        candidate: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Synthesize the explicit invariant for a halting machine and check it
    SynthInv {
        #[arg(long)]
        machine: PathBuf,
        /// Halting-time search budget
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Refute a candidate invariant, emitting a replayable certificate
    RefuteInv {
        /// Product machine (exactly one of --machine / --warmup)
        #[arg(long)]
        machine: Option<PathBuf>,
        /// Refute against the standalone squaring program instead
        #[arg(long)]
        warmup: bool,
        #[arg(long)]
        candidate: PathBuf,
        /// Machine-step budget for the argument
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
    },
    /// Zero-input showcase: refute a trivial r-cube candidate on the
    /// standalone program
    WarmupDemo {
        /// Number of cubes in the trivial candidate
        #[arg(long, default_value_t = 1)]
        cubes: usize,
    },
    /// Re-validate a refutation report produced by refute-inv
    VerifyCert {
        /// JSON report file
        #[arg(long)]
        report: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Domain(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN_ERROR,
            CliError::Solver(_) => EXIT_SOLVER_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Solver(m) => m,
        }
    }
}

fn domain(err: impl std::fmt::Display) -> CliError {
    CliError::Domain(err.to_string())
}

fn check_to_cli(err: CheckError) -> CliError {
    match err {
        CheckError::SolverUnavailable { .. }
        | CheckError::SolverTimeout { .. }
        | CheckError::ModelParseError(_) => CliError::Solver(err.to_string()),
        other => CliError::Domain(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Simulate { x, steps, machine } => simulate(cli, *x, *steps, machine.as_deref()),
        Command::Reduce { machine } => reduce(cli, machine),
        Command::EmitSmt2 {
            machine,
            candidate,
            out_dir,
        } => emit_smt2(cli, machine.as_deref(), candidate, out_dir.as_deref()),
        Command::EmitChc { machine } => emit_chc(cli, machine.as_deref()),
        Command::CheckInv {
            machine,
            candidate,
            backend,
        } => check_inv(cli, machine.as_deref(), candidate, backend),
        Command::SynthInv {
            machine,
            cap,
            backend,
        } => synth_inv(cli, machine, *cap, backend),
        Command::RefuteInv {
            machine,
            warmup,
            candidate,
            cap,
        } => refute_inv(cli, machine.as_deref(), *warmup, candidate, *cap),
        Command::WarmupDemo { cubes } => warmup_demo(cli, *cubes),
        Command::VerifyCert { report } => verify_cert(cli, report),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_machine(path: &Path) -> Result<MinskyMachine, CliError> {
    let text = read_file(path)?;
    MinskyMachine::parse(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn var_set(vars: &[&str]) -> BTreeSet<String> {
    vars.iter().map(|v| (*v).to_owned()).collect()
}

fn load_candidate(path: &Path, vars: &[&str]) -> Result<Formula, CliError> {
    let text = read_file(path)?;
    parse_formula_with_vars(&text, &var_set(vars))
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn resolve_backend(args: &BackendArgs) -> Result<Backend, CliError> {
    let bounded = || BoundedCfg::with_bound(args.bound);
    let smt = || -> Result<SolverCmd, CliError> {
        let cmd = match &args.solver {
            Some(line) => SolverCmd::from_command_line(line)
                .ok_or_else(|| CliError::Usage("--solver command line is empty".to_owned()))?,
            None => solver::discover().ok_or_else(|| {
                CliError::Solver(
                    "no SMT solver found: install z3, set QFLIA_SOLVER, or run `npm install` \
                     in tools/ (or use --backend bounded)"
                        .to_owned(),
                )
            })?,
        };
        Ok(cmd.with_timeout(Duration::from_secs(args.timeout)))
    };
    Ok(match args.backend {
        BackendKind::Smt => Backend::Smt(smt()?),
        BackendKind::Bounded => Backend::Bounded(bounded()),
        BackendKind::Both => Backend::Both(smt()?, bounded()),
    })
}

fn backend_config_json(args: &BackendArgs, backend: &Backend) -> Value {
    let solver_cmd = match backend {
        Backend::Smt(cmd) | Backend::Both(cmd, _) => Value::String(cmd.display()),
        Backend::Bounded(_) => Value::Null,
    };
    json!({
        "backend": format!("{:?}", args.backend).to_lowercase(),
        "solver": solver_cmd,
        "timeout_secs": args.timeout,
        "bound": int_json(args.bound),
    })
}

/// Report skeleton shared by every subcommand.
fn report_value(command: &str, config: Value) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("tool".to_owned(), json!("qflia"));
    map.insert("version".to_owned(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("command".to_owned(), json!(command));
    map.insert("config".to_owned(), config);
    map
}

fn int_json(v: Int) -> Value {
    match i64::try_from(v) {
        Ok(v) => json!(v),
        Err(_) => json!(v.to_string()), // out of i64 range: stringify
    }
}

fn state_json(vars: &[&str], state: &State) -> Value {
    let mut map = Map::new();
    for (v, value) in vars.iter().zip(state.values()) {
        map.insert((*v).to_owned(), int_json(*value));
    }
    Value::Object(map)
}

fn state_text(vars: &[&str], state: &State) -> String {
    let fields: Vec<String> = vars
        .iter()
        .zip(state.values())
        .map(|(v, x)| format!("{v}={x}"))
        .collect();
    format!("({})", fields.join(", "))
}

fn write_output(cli: &Cli, content: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Domain(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            if !content.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn emit_report(cli: &Cli, report: &Map<String, Value>, text: String) -> Result<(), CliError> {
    match cli.format {
        Format::Json => {
            let rendered = serde_json::to_string_pretty(&Value::Object(report.clone()))
                .expect("report serialization");
            write_output(cli, &rendered)
        }
        Format::Text => write_output(cli, &text),
    }
}

fn simulate(cli: &Cli, x: Int, steps: usize, machine: Option<&Path>) -> Result<u8, CliError> {
    let ir = match machine {
        Some(path) => build_product(&load_machine(path)?),
        None => build_prog(),
    };
    let trace = ir.reachable(x, steps).map_err(domain)?;
    write_output(cli, &trace_to_jsonl(&ir, &trace))?;
    Ok(0)
}

fn reduce(cli: &Cli, machine: &Path) -> Result<u8, CliError> {
    let m = load_machine(machine)?;
    let ir = build_product(&m);
    let ts = encode_ts(&ir);
    let mut report = report_value(
        "reduce",
        json!({ "machine": machine.display().to_string() }),
    );
    report.insert("vars".to_owned(), json!(ts.vars));
    report.insert("init".to_owned(), json!(print_formula(&ts.init)));
    report.insert("tr".to_owned(), json!(print_formula(&ts.tr)));
    report.insert("prop".to_owned(), json!(print_formula(&ts.prop)));
    let text = format!(
        "vars: {}\ninit: {}\ntr: {}\nprop: {}\n",
        ts.vars.join(" "),
        print_formula(&ts.init),
        print_formula(&ts.tr),
        print_formula(&ts.prop),
    );
    emit_report(cli, &report, text)?;
    Ok(0)
}

fn system_for(machine: Option<&Path>) -> Result<(ProgramIR, &'static [&'static str]), CliError> {
    Ok(match machine {
        Some(path) => (build_product(&load_machine(path)?), &PRODUCT_VARS[..]),
        None => (build_prog(), &PROG_VARS[..]),
    })
}

fn emit_smt2(
    cli: &Cli,
    machine: Option<&Path>,
    candidate: &Path,
    out_dir: Option<&Path>,
) -> Result<u8, CliError> {
    let (ir, vars) = system_for(machine)?;
    let inv = load_candidate(candidate, vars)?;
    let queries = checker::emit_smt2(&encode_ts(&ir), &inv).map_err(domain)?;
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Domain(format!("{}: {e}", dir.display())))?;
            for (name, doc) in [
                ("initiation.smt2", &queries.initiation),
                ("consecution.smt2", &queries.consecution),
                ("safety.smt2", &queries.safety),
            ] {
                let path = dir.join(name);
                std::fs::write(&path, doc)
                    .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
        }
        None => {
            let banner = |tag| format!("; ---- {tag} query ----\n");
            let combined = format!(
                "{}{}{}{}{}{}",
                banner("initiation"),
                queries.initiation,
                banner("consecution"),
                queries.consecution,
                banner("safety"),
                queries.safety
            );
            write_output(cli, &combined)?;
        }
    }
    Ok(0)
}

fn emit_chc(cli: &Cli, machine: Option<&Path>) -> Result<u8, CliError> {
    let (ir, _) = system_for(machine)?;
    write_output(cli, &checker::emit_chc(&encode_ts(&ir)))?;
    Ok(0)
}

fn verdicts_json(report: &CheckReport) -> Value {
    let one = |v: &checker::CheckVerdict| {
        let (result, detail) = match &v.outcome {
            ImplicationOutcome::Valid => ("valid", Value::Null),
            ImplicationOutcome::Countermodel(m) => {
                let mut map = Map::new();
                for (var, value) in m {
                    map.insert(var.clone(), int_json(*value));
                }
                ("countermodel", Value::Object(map))
            }
            ImplicationOutcome::Unknown(reason) => ("unknown", json!(reason)),
        };
        json!({
            "condition": v.condition.to_string(),
            "result": result,
            "detail": detail,
        })
    };
    Value::Array(report.verdicts().iter().map(|v| one(v)).collect())
}

fn verdicts_text(report: &CheckReport) -> String {
    let mut out = String::new();
    for v in report.verdicts() {
        let line = match &v.outcome {
            ImplicationOutcome::Valid => format!("{}: valid", v.condition),
            ImplicationOutcome::Countermodel(m) => {
                let fields: Vec<String> = m.iter().map(|(k, x)| format!("{k}={x}")).collect();
                format!("{}: countermodel {{{}}}", v.condition, fields.join(", "))
            }
            ImplicationOutcome::Unknown(reason) => format!("{}: unknown ({reason})", v.condition),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(if report.inductive() {
        "inductive: yes\n"
    } else {
        "inductive: no\n"
    });
    out
}

fn check_exit_code(report: &CheckReport) -> u8 {
    if report.inductive() {
        0
    } else if report
        .verdicts()
        .iter()
        .any(|v| v.outcome.is_countermodel())
    {
        EXIT_COUNTERMODEL
    } else {
        EXIT_INCONCLUSIVE
    }
}

fn check_inv(
    cli: &Cli,
    machine: Option<&Path>,
    candidate: &Path,
    backend_args: &BackendArgs,
) -> Result<u8, CliError> {
    let (ir, vars) = system_for(machine)?;
    let inv = load_candidate(candidate, vars)?;
    let backend = resolve_backend(backend_args)?;
    let check = checker::check_inductive(&encode_ts(&ir), &inv, &backend).map_err(check_to_cli)?;
    let mut report = report_value(
        "check-inv",
        json!({
            "machine": machine.map(|p| p.display().to_string()),
            "candidate": candidate.display().to_string(),
            "backend": backend_config_json(backend_args, &backend),
        }),
    );
    report.insert("candidate".to_owned(), json!(print_formula(&inv)));
    report.insert("verdicts".to_owned(), verdicts_json(&check));
    report.insert("inductive".to_owned(), json!(check.inductive()));
    emit_report(cli, &report, verdicts_text(&check))?;
    Ok(check_exit_code(&check))
}

fn synth_inv(
    cli: &Cli,
    machine: &Path,
    cap: usize,
    backend_args: &BackendArgs,
) -> Result<u8, CliError> {
    let m = load_machine(machine)?;
    let backend = resolve_backend(backend_args)?;
    let config = json!({
        "machine": machine.display().to_string(),
        "cap": cap,
        "backend": backend_config_json(backend_args, &backend),
    });
    match synthesizer::synthesize(&m, cap, &backend) {
        Ok(result) => {
            let mut report = report_value("synth-inv", config);
            report.insert("halting_time".to_owned(), json!(result.k));
            report.insert(
                "invariant".to_owned(),
                json!(print_formula(&result.invariant)),
            );
            report.insert("verdicts".to_owned(), verdicts_json(&result.report));
            report.insert("inductive".to_owned(), json!(result.report.inductive()));
            let text = format!(
                "halting time k = {}\ninvariant: {}\n{}",
                result.k,
                print_formula(&result.invariant),
                verdicts_text(&result.report)
            );
            emit_report(cli, &report, text)?;
            Ok(check_exit_code(&result.report))
        }
        Err(SynthesizerError::DoesNotHaltWithin { cap }) => {
            let mut report = report_value("synth-inv", config);
            report.insert("outcome".to_owned(), json!("does-not-halt-within-cap"));
            report.insert("cap".to_owned(), json!(cap));
            emit_report(
                cli,
                &report,
                format!("machine did not halt within {cap} steps; nothing to synthesize\n"),
            )?;
            Ok(EXIT_INCONCLUSIVE)
        }
        Err(SynthesizerError::Check(e)) => Err(check_to_cli(e)),
        Err(e) => Err(domain(e)),
    }
}

fn certificate_json(cert: &CtiCertificate, vars: &[&str]) -> Value {
    json!({
        "system": match cert.system {
            SystemKind::Warmup => "warmup",
            SystemKind::Product => "product",
        },
        "r": cert.r,
        "t": cert.t,
        "cube_index": cert.cube_index,
        "n": int_json(cert.n),
        "m": int_json(cert.m),
        "v1": state_json(vars, &cert.v1),
        "v2": state_json(vars, &cert.v2),
        "midpoint": state_json(vars, &cert.midpoint),
        "trace": cert.trace.iter().map(|s| state_json(vars, s)).collect::<Vec<_>>(),
        "violation": state_json(vars, &cert.violation),
        "predicted_y2": int_json(cert.predicted_y2),
    })
}

fn certificate_text(cert: &CtiCertificate, vars: &[&str]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "counterexample to induction (r = {} cube{}, cube #{})\n",
        cert.r,
        if cert.r == 1 { "" } else { "s" },
        cert.cube_index
    ));
    if let Some(t) = cert.t {
        out.push_str(&format!("step index t = {t}\n"));
    }
    out.push_str(&format!(
        "v1 (n = {}): {}\nv2 (m = {}): {}\n",
        cert.n,
        state_text(vars, &cert.v1),
        cert.m,
        state_text(vars, &cert.v2)
    ));
    out.push_str(&format!(
        "midpoint:    {}\n",
        state_text(vars, &cert.midpoint)
    ));
    out.push_str("replay:\n");
    for state in &cert.trace {
        out.push_str(&format!("  {}\n", state_text(vars, state)));
    }
    out.push_str(&format!(
        "violation: y2 = {} but 2*y1 = {} (predicted y2 = {})\n",
        cert.violation.values()[5],
        2 * cert.violation.values()[4],
        cert.predicted_y2
    ));
    out
}

fn refutation_payload(
    outcome: &RefutationOutcome,
    vars: &[&str],
    report: &mut Map<String, Value>,
) -> (String, u8) {
    match outcome {
        RefutationOutcome::Cti(cert) => {
            report.insert("outcome".to_owned(), json!("cti"));
            report.insert("certificate".to_owned(), certificate_json(cert, vars));
            (certificate_text(cert, vars), 0)
        }
        RefutationOutcome::NotAnOverapproximation { witness } => {
            report.insert("outcome".to_owned(), json!("not-an-overapproximation"));
            report.insert("witness".to_owned(), state_json(vars, witness));
            (
                format!(
                    "candidate is not an overapproximation of the reachable states\n\
                     reachable witness: {}\n",
                    state_text(vars, witness)
                ),
                EXIT_NOT_OVERAPPROXIMATION,
            )
        }
        RefutationOutcome::Inconclusive { reason } => {
            report.insert("outcome".to_owned(), json!("inconclusive"));
            report.insert("reason".to_owned(), json!(reason));
            (format!("inconclusive: {reason}\n"), EXIT_INCONCLUSIVE)
        }
    }
}

fn refuter_to_cli(err: RefuterError) -> CliError {
    CliError::Domain(err.to_string())
}

fn refute_inv(
    cli: &Cli,
    machine: Option<&Path>,
    warmup: bool,
    candidate: &Path,
    cap: usize,
) -> Result<u8, CliError> {
    let (outcome, vars, machine_text, candidate_text) = match (machine, warmup) {
        (Some(path), false) => {
            let m = load_machine(path)?;
            let inv = load_candidate(candidate, &PRODUCT_VARS)?;
            let dnf = to_tight_dnf(&inv).map_err(domain)?;
            let outcome = refuter::refute_product(&dnf, &m, cap).map_err(refuter_to_cli)?;
            (outcome, &PRODUCT_VARS[..], Some(m.to_text()), print_formula(&inv))
        }
        (None, true) => {
            let inv = load_candidate(candidate, &PROG_VARS)?;
            let dnf = to_tight_dnf(&inv).map_err(domain)?;
            let outcome = refuter::refute_warmup(&dnf).map_err(refuter_to_cli)?;
            (outcome, &PROG_VARS[..], None, print_formula(&inv))
        }
        _ => {
            return Err(CliError::Usage(
                "refute-inv needs exactly one of --machine FILE or --warmup".to_owned(),
            ))
        }
    };
    let mut report = report_value(
        "refute-inv",
        json!({
            "machine": machine.map(|p| p.display().to_string()),
            "warmup": warmup,
            "candidate_path": candidate.display().to_string(),
            "cap": cap,
        }),
    );
    report.insert("candidate".to_owned(), json!(candidate_text));
    if let Some(text) = machine_text {
        report.insert("machine".to_owned(), json!(text));
    }
    let (text, code) = refutation_payload(&outcome, vars, &mut report);
    emit_report(cli, &report, text)?;
    Ok(code)
}

fn warmup_demo(cli: &Cli, cubes: usize) -> Result<u8, CliError> {
    if cubes == 0 {
        return Err(CliError::Usage("--cubes must be at least 1".to_owned()));
    }
    let candidate = Formula::Or(vec![Formula::True; cubes]);
    let dnf = to_tight_dnf(&candidate).map_err(domain)?;
    let outcome = refuter::refute_warmup(&dnf).map_err(refuter_to_cli)?;
    let mut report = report_value("warmup-demo", json!({ "cubes": cubes }));
    report.insert("candidate".to_owned(), json!(print_formula(&candidate)));
    let (text, code) = refutation_payload(&outcome, &PROG_VARS, &mut report);
    emit_report(cli, &report, text)?;
    Ok(code)
}

fn json_state(value: &Value, vars: &[&str]) -> Result<State, CliError> {
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Domain("state must be a JSON object".to_owned()))?;
    let mut out = Vec::with_capacity(vars.len());
    for v in vars {
        let field = obj
            .get(*v)
            .and_then(Value::as_i64)
            .ok_or_else(|| CliError::Domain(format!("state lacks integer field `{v}`")))?;
        out.push(field as Int);
    }
    Ok(State(out))
}

fn verify_cert(cli: &Cli, report_path: &Path) -> Result<u8, CliError> {
    let raw = read_file(report_path)?;
    let report: Value = serde_json::from_str(&raw)
        .map_err(|e| CliError::Domain(format!("{}: {e}", report_path.display())))?;
    let field = |name: &str| -> Result<&Value, CliError> {
        report
            .get(name)
            .ok_or_else(|| CliError::Domain(format!("report lacks `{name}`")))
    };
    let outcome = field("outcome")?.as_str().unwrap_or_default();
    let candidate_text = field("candidate")?
        .as_str()
        .ok_or_else(|| CliError::Domain("`candidate` must be a string".to_owned()))?;

    let machine = match report.get("machine").and_then(Value::as_str) {
        Some(text) => Some(MinskyMachine::parse(text).map_err(domain)?),
        None => None,
    };
    let vars: &[&str] = if machine.is_some() {
        &PRODUCT_VARS
    } else {
        &PROG_VARS
    };
    let inv = parse_formula_with_vars(candidate_text, &var_set(vars)).map_err(domain)?;
    let dnf = to_tight_dnf(&inv).map_err(domain)?;

    match outcome {
        "cti" => {
            let cert_value = field("certificate")?;
            let cert = parse_certificate(cert_value, vars)?;
            refuter::validate_certificate(&cert, &dnf, machine.as_ref())
                .map_err(|e| CliError::Domain(e.to_string()))?;
            write_output(cli, "certificate valid: replay confirms the violation\n")?;
            Ok(0)
        }
        "not-an-overapproximation" => {
            let witness = json_state(field("witness")?, vars)?;
            verify_witness(&dnf, &inv, machine.as_ref(), &witness)?;
            write_output(cli, "witness valid: reachable and falsifies the candidate\n")?;
            Ok(0)
        }
        other => Err(CliError::Domain(format!(
            "nothing to verify for outcome `{other}`"
        ))),
    }
}

fn parse_certificate(value: &Value, vars: &[&str]) -> Result<CtiCertificate, CliError> {
    let get = |name: &str| -> Result<&Value, CliError> {
        value
            .get(name)
            .ok_or_else(|| CliError::Domain(format!("certificate lacks `{name}`")))
    };
    let as_usize = |name: &str| -> Result<usize, CliError> {
        get(name)?
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| CliError::Domain(format!("`{name}` must be a non-negative integer")))
    };
    let as_int = |name: &str| -> Result<Int, CliError> {
        get(name)?
            .as_i64()
            .map(Int::from)
            .ok_or_else(|| CliError::Domain(format!("`{name}` must be an integer")))
    };
    let system = match get("system")?.as_str() {
        Some("warmup") => SystemKind::Warmup,
        Some("product") => SystemKind::Product,
        _ => return Err(CliError::Domain("unknown certificate system".to_owned())),
    };
    let trace = get("trace")?
        .as_array()
        .ok_or_else(|| CliError::Domain("`trace` must be an array".to_owned()))?
        .iter()
        .map(|s| json_state(s, vars))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CtiCertificate {
        system,
        r: as_usize("r")?,
        t: match get("t")? {
            Value::Null => None,
            v => Some(v.as_u64().ok_or_else(|| {
                CliError::Domain("`t` must be a non-negative integer or null".to_owned())
            })? as usize),
        },
        cube_index: as_usize("cube_index")?,
        n: as_int("n")?,
        m: as_int("m")?,
        v1: json_state(get("v1")?, vars)?,
        v2: json_state(get("v2")?, vars)?,
        midpoint: json_state(get("midpoint")?, vars)?,
        trace,
        violation: json_state(get("violation")?, vars)?,
        predicted_y2: as_int("predicted_y2")?,
    })
}

/// A witness must be honestly reachable and falsify the candidate.
fn verify_witness(
    dnf: &Dnf,
    inv: &Formula,
    machine: Option<&MinskyMachine>,
    witness: &State,
) -> Result<(), CliError> {
    let (ir, steps) = match machine {
        Some(m) => (build_product(m), refuter::choose_t(dnf.r())),
        None => {
            let x = witness.values()[1];
            (build_prog(), usize::try_from(x).map_err(|_| {
                CliError::Domain("witness has a non-positive x".to_owned())
            })?)
        }
    };
    let x = witness.values()[1];
    let trace = ir.reachable(x, steps).map_err(domain)?;
    if trace.get(steps) != Some(witness) {
        return Err(CliError::Domain(
            "witness is not the simulated state at the expected step".to_owned(),
        ));
    }
    match ir.eval_state(inv, witness) {
        Ok(false) => Ok(()),
        Ok(true) => Err(CliError::Domain(
            "witness satisfies the candidate; nothing refuted".to_owned(),
        )),
        Err(e) => Err(domain(e)),
    }
}
