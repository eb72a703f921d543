//! One-shot client for an external SMT-LIB2 solver process. Each query gets
//! a private process; the script goes to stdin and the response is read back
//! from stdout under a deadline.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::formula::Int;
use crate::sexpr::{self, Sexpr};

use super::{CheckError, Model};

pub const DEFAULT_SOLVER_TIMEOUT: Duration = Duration::from_secs(10);

/// Solver command line, e.g. `["z3", "-in"]`; the process must read
/// SMT-LIB2 from stdin and answer on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCmd {
    pub argv: Vec<String>,
    pub timeout: Duration,
}

impl SolverCmd {
    pub fn new(argv: Vec<String>) -> Self {
        SolverCmd {
            argv,
            timeout: DEFAULT_SOLVER_TIMEOUT,
        }
    }

    /// Splits a command line on whitespace (no quoting).
    pub fn from_command_line(line: &str) -> Option<Self> {
        let argv: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if argv.is_empty() {
            None
        } else {
            Some(Self::new(argv))
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn display(&self) -> String {
        self.argv.join(" ")
    }
}

/// Finds a usable SMT solver: the `QFLIA_SOLVER` command line if set, then
/// `z3` on the PATH, then the bundled Node-based Z3 shim in `tools/`.
pub fn discover() -> Option<SolverCmd> {
    if let Ok(line) = std::env::var("QFLIA_SOLVER") {
        return SolverCmd::from_command_line(&line);
    }
    if probe("z3", &["--version"]) {
        return Some(SolverCmd::new(vec!["z3".to_owned(), "-in".to_owned()]));
    }
    if probe("node", &["--version"]) {
        let mut dirs: Vec<std::path::PathBuf> = Vec::new();
        if let Ok(d) = std::env::var("QFLIA_TOOLS_DIR") {
            dirs.push(d.into());
        }
        dirs.extend(["tools", "../tools", "../../tools"].map(Into::into));
        for dir in dirs {
            let script = dir.join("z3wasm.js");
            if script.exists() && dir.join("node_modules").join("z3-solver").exists() {
                return Some(SolverCmd::new(vec![
                    "node".to_owned(),
                    script.to_string_lossy().into_owned(),
                ]));
            }
        }
    }
    None
}

fn probe(cmd: &str, args: &[&str]) -> bool {
    Command::new(cmd)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SolverResponse {
    pub status: SatStatus,
    /// Integer assignments extracted from `(define-fun v () Int ...)` models.
    pub model: Model,
    pub raw: String,
}

/// Runs one script in a fresh solver process and parses the response.
pub fn run_query(cmd: &SolverCmd, script: &str) -> Result<SolverResponse, CheckError> {
    let raw = run_process(cmd, script)?;
    parse_response(&raw)
}

fn run_process(cmd: &SolverCmd, script: &str) -> Result<String, CheckError> {
    let unavailable = |message: String| CheckError::SolverUnavailable {
        command: cmd.display(),
        message,
    };
    let (program, args) = cmd
        .argv
        .split_first()
        .ok_or_else(|| unavailable("empty solver command".to_owned()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| unavailable(e.to_string()))?;

    let mut stdin = child.stdin.take().expect("stdin was piped");
    let script_owned = script.to_owned();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(script_owned.as_bytes());
        // closing stdin signals end of script
    });
    let mut stdout = child.stdout.take().expect("stdout was piped");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        out
    });

    let deadline = Instant::now() + cmd.timeout;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    let _ = writer.join();
                    let _ = reader.join();
                    return Err(CheckError::SolverTimeout {
                        budget: cmd.timeout,
                    });
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(unavailable(e.to_string())),
        }
    }
    let _ = writer.join();
    reader
        .join()
        .map_err(|_| unavailable("failed to capture solver output".to_owned()))
}

fn parse_response(raw: &str) -> Result<SolverResponse, CheckError> {
    let mut status = None;
    let mut rest_offset = 0;
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        offset += line.len();
        let word = line.trim();
        let found = match word {
            "sat" => Some(SatStatus::Sat),
            "unsat" => Some(SatStatus::Unsat),
            "unknown" => Some(SatStatus::Unknown),
            _ => None,
        };
        if let Some(s) = found {
            status = Some(s);
            rest_offset = offset;
            break;
        }
    }
    let status = status.ok_or_else(|| {
        CheckError::ModelParseError(format!(
            "no sat/unsat/unknown in solver output: {:?}",
            raw.lines().take(3).collect::<Vec<_>>()
        ))
    })?;
    let mut model = Model::new();
    if status == SatStatus::Sat {
        let body = &raw[rest_offset..];
        let exprs = sexpr::parse_all(body)
            .map_err(|e| CheckError::ModelParseError(format!("bad model text: {e}")))?;
        for e in &exprs {
            collect_model(e, &mut model)?;
        }
    }
    Ok(SolverResponse {
        status,
        model,
        raw: raw.to_owned(),
    })
}

fn collect_model(expr: &Sexpr, model: &mut Model) -> Result<(), CheckError> {
    let Sexpr::List(items, _) = expr else {
        return Ok(());
    };
    match items.first().and_then(Sexpr::as_sym) {
        Some("define-fun") => {
            let [_, name, Sexpr::List(params, _), sort, value] = items.as_slice() else {
                return Ok(());
            };
            let (Some(name), true, Some("Int")) = (name.as_sym(), params.is_empty(), sort.as_sym())
            else {
                return Ok(()); // non-constant or non-integer definition
            };
            let value = parse_int_value(value).ok_or_else(|| {
                CheckError::ModelParseError(format!("unsupported model value for `{name}`"))
            })?;
            model.insert(name.to_owned(), value);
        }
        Some("model") => {
            // older solvers wrap the definitions in `(model ...)`
            for item in items.iter().skip(1) {
                collect_model(item, model)?;
            }
        }
        // anonymous wrapper list: every item is a definition
        None => {
            for item in items {
                collect_model(item, model)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Accepts both `-5` and `(- 5)` renderings of negative integers.
fn parse_int_value(expr: &Sexpr) -> Option<Int> {
    match expr {
        Sexpr::Int(v, _) => Some(*v),
        Sexpr::List(items, _) => match items.as_slice() {
            [Sexpr::Sym(op, _), Sexpr::Int(v, _)] if op == "-" => v.checked_neg(),
            _ => None,
        },
        Sexpr::Sym(..) => None,
    }
}
