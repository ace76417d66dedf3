//! `rcm`: command-line front end for case-based reasoning models.

mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcm_core::authority::{decide_with_authority, StatusTable};
use rcm_core::oracle::{self, ModelParams};
use rcm_core::reasoning::{explain, synthesize_solutions};
use rcm_core::{decide, Concern, LoadError, Model, ReasoningError};
use serde::Serialize;
use sha2::{Digest, Sha256};

use report::{ConsistencyOutput, ExplainOutput, TraceReport};

const OK: u8 = 0;
const SEMANTIC: u8 = 1;
const USAGE: u8 = 2;
const IO: u8 = 3;
const INCONSISTENT: u8 = 10;
const AMBIGUOUS: u8 = 11;
const NO_DECISION: u8 = 12;

#[derive(Parser)]
#[command(
    name = "rcm",
    version,
    about = "Precedent-based classification with hierarchical factors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Model file in the rcm text format.
    model: PathBuf,
    /// Emit JSON instead of plain text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a model parses and is semantically valid.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Report priority-order consistency per concern.
    Consistency {
        #[command(flatten)]
        input: Input,
        /// Restrict to one concern, e.g. `p` or `0/1`.
        #[arg(long)]
        concern: Option<String>,
    },
    /// Run the decision process for an undecided state.
    Decide {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        case: String,
        /// Cite only binding precedents that are neither overruled nor per incuriam.
        #[arg(long)]
        authority: bool,
        /// Also synthesize the solutions supported by the precedents.
        #[arg(long)]
        solutions: bool,
    },
    /// Show why each precedent is or is not cited for one concern.
    Explain {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        case: String,
        #[arg(long)]
        concern: String,
        #[arg(long)]
        authority: bool,
    },
    /// Print the canonical form of a model.
    Fmt {
        model: PathBuf,
        /// Exit 1 if the file is not already canonical.
        #[arg(long, conflicts_with = "write")]
        check: bool,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    #[command(hide = true, subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Print a random model.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        courts: bool,
    },
    /// Compare the engine with brute-force enumeration on a model.
    Check { model: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { input } => validate(&input),
        Command::Consistency { input, concern } => consistency(&input, concern.as_deref()),
        Command::Decide {
            input,
            case,
            authority,
            solutions,
        } => run_decide(&input, &case, authority, solutions),
        Command::Explain {
            input,
            case,
            concern,
            authority,
        } => run_explain(&input, &case, &concern, authority),
        Command::Fmt {
            model,
            check,
            write,
        } => fmt(&model, check, write),
        Command::Oracle(cmd) => run_oracle(cmd),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let _ = writeln!(io::stderr(), "error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(IO, format!("{}: {e}", path.display())))
}

fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn load_error(path: &Path, e: &LoadError) -> Failure {
    let code = if e.is_parse() { USAGE } else { SEMANTIC };
    Failure::new(code, format!("{}: [{}] {e}", path.display(), e.code()))
}

fn load(input: &Input) -> Result<(Model, String), Failure> {
    let text = read(&input.model)?;
    let model = Model::parse(&text).map_err(|e| load_error(&input.model, &e))?;
    Ok((model, digest(&text)))
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) {
    let out = if json {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        s
    } else {
        text(value)
    };
    let _ = io::stdout().write_all(out.as_bytes());
}

#[derive(Serialize)]
struct Diagnostic {
    valid: bool,
    code: Option<&'static str>,
    message: Option<String>,
    line: Option<usize>,
    col: Option<usize>,
}

fn validate(input: &Input) -> Outcome {
    let text = read(&input.model)?;
    let (diag, code) = match Model::parse(&text) {
        Ok(_) => (
            Diagnostic {
                valid: true,
                code: None,
                message: None,
                line: None,
                col: None,
            },
            OK,
        ),
        Err(e) => {
            let pos = match &e {
                LoadError::Parse(p) => Some(p.pos()),
                _ => None,
            };
            (
                Diagnostic {
                    valid: false,
                    code: Some(e.code()),
                    message: Some(e.to_string()),
                    line: pos.map(|p| p.line),
                    col: pos.map(|p| p.col),
                },
                if e.is_parse() { USAGE } else { SEMANTIC },
            )
        }
    };
    if input.json {
        emit(true, &diag, |_| String::new());
    } else if diag.valid {
        println!("valid");
    } else {
        let loc = match (diag.line, diag.col) {
            (Some(l), Some(c)) => format!(":{l}:{c}"),
            _ => String::new(),
        };
        eprintln!(
            "{}{loc}: error[{}]: {}",
            input.model.display(),
            diag.code.unwrap_or_default(),
            diag.message.as_deref().unwrap_or_default()
        );
    }
    Ok(code)
}

fn parse_concern(model: &Model, raw: &str) -> Result<Concern, Failure> {
    let head = raw
        .split('/')
        .next()
        .unwrap_or_default()
        .trim_end_matches('\'');
    let concern = match head {
        "0" | "1" => Concern::Top,
        name => Concern::Intermediate(name.into()),
    };
    if model.hierarchy().concerns().any(|c| c == &concern) {
        Ok(concern)
    } else {
        Err(Failure::new(USAGE, format!("unknown concern `{raw}`")))
    }
}

fn consistency(input: &Input, concern: Option<&str>) -> Outcome {
    let (model, digest) = load(input)?;
    let h = model.hierarchy();
    let concerns: Vec<Concern> = match concern {
        Some(raw) => vec![parse_concern(&model, raw)?],
        None => h.concerns().cloned().collect(),
    };
    let cb = model
        .classifier
        .casebase()
        .map_err(|e| Failure::new(SEMANTIC, e.to_string()))?;
    let filter = concern.map(|_| &concerns[0]);
    let report = cb.consistency(h, filter);
    let out = ConsistencyOutput::new(digest, &report, &concerns);
    emit(input.json, &out, ConsistencyOutput::text);
    Ok(if report.is_consistent() {
        OK
    } else {
        INCONSISTENT
    })
}

fn reasoning_failure(e: ReasoningError) -> Failure {
    match e {
        ReasoningError::UnknownState(_) | ReasoningError::AlreadyDecided(_) => {
            Failure::new(USAGE, e.to_string())
        }
        other => Failure::new(SEMANTIC, other.to_string()),
    }
}

fn authority_failure(e: rcm_core::AuthorityError) -> Failure {
    match e {
        rcm_core::AuthorityError::Reasoning(r) => reasoning_failure(r),
        other => Failure::new(SEMANTIC, other.to_string()),
    }
}

fn statuses_for(model: &Model, case: &str) -> Option<StatusTable> {
    let courts = model.courts.as_ref()?;
    let as_of = model.classifier.state(case).and_then(|s| s.time);
    StatusTable::compute(&model.classifier, courts, as_of).ok()
}

fn run_decide(input: &Input, case: &str, authority: bool, solutions: bool) -> Outcome {
    let (model, digest) = load(input)?;
    let (trace, table) = if authority {
        let courts = model
            .courts
            .as_ref()
            .ok_or_else(|| Failure::new(SEMANTIC, "--authority requires a courts block"))?;
        let (trace, table) =
            decide_with_authority(&model.classifier, courts, case).map_err(authority_failure)?;
        (trace, Some(table))
    } else {
        let trace = decide(&model.classifier, case).map_err(reasoning_failure)?;
        (trace, statuses_for(&model, case))
    };
    let synthesized = if solutions && trace.top().len() == 1 {
        Some(synthesize_solutions(&model.classifier, &trace).map_err(reasoning_failure)?)
    } else {
        None
    };
    let report = TraceReport::new(
        digest,
        &trace,
        synthesized.as_deref(),
        table.as_ref().map(|t| (t, authority)),
    );
    emit(input.json, &report, TraceReport::text);
    Ok(match trace.top().len() {
        1 => OK,
        0 => NO_DECISION,
        _ => AMBIGUOUS,
    })
}

fn run_explain(input: &Input, case: &str, raw: &str, authority: bool) -> Outcome {
    let (model, digest) = load(input)?;
    let concern = parse_concern(&model, raw)?;
    let explanation = if authority {
        let courts = model
            .courts
            .as_ref()
            .ok_or_else(|| Failure::new(SEMANTIC, "--authority requires a courts block"))?;
        let filter = rcm_core::authority::BindingFilter::new(&model.classifier, courts, case)
            .map_err(authority_failure)?;
        explain(&model.classifier, case, &concern, &|s, c| {
            filter.accepts(s, c)
        })
    } else {
        explain(&model.classifier, case, &concern, &|_, _| true)
    }
    .map_err(reasoning_failure)?;
    let out = ExplainOutput::new(digest, case, &explanation);
    emit(input.json, &out, ExplainOutput::text);
    Ok(OK)
}

fn fmt(path: &Path, check: bool, write: bool) -> Outcome {
    let text = read(path)?;
    let doc = rcm_core::parse(&text).map_err(|e| load_error(path, &LoadError::Parse(e)))?;
    let canonical = doc.to_text();
    if check {
        if canonical == text {
            return Ok(OK);
        }
        eprintln!("{}: not in canonical form", path.display());
        return Ok(SEMANTIC);
    }
    if write {
        fs::write(path, &canonical)
            .map_err(|e| Failure::new(IO, format!("{}: {e}", path.display())))?;
    } else {
        let _ = io::stdout().write_all(canonical.as_bytes());
    }
    Ok(OK)
}

fn run_oracle(cmd: OracleCommand) -> Outcome {
    match cmd {
        OracleCommand::Generate { seed, courts } => {
            let params = ModelParams {
                courts,
                ..ModelParams::default()
            };
            let model = oracle::random_model(seed, params);
            print!("{}", model.to_text());
            Ok(OK)
        }
        OracleCommand::Check { model: path } => {
            let text = read(&path)?;
            let model = Model::parse(&text).map_err(|e| load_error(&path, &e))?;
            oracle_check(&model)
        }
    }
}

fn oracle_check(model: &Model) -> Outcome {
    let h = model.hierarchy();
    let c = &model.classifier;
    let cb = c
        .casebase()
        .map_err(|e| Failure::new(SEMANTIC, e.to_string()))?;
    let mut agree = true;
    for concern in h.concerns() {
        let engine = cb.consistency(h, Some(concern)).is_consistent();
        let brute = oracle::brute_consistency(h, &cb, concern)
            .map_err(|e| Failure::new(SEMANTIC, e.to_string()))?;
        println!("consistency {concern}: engine {engine} oracle {brute}");
        agree &= engine == brute;
    }
    for s in c.states().iter().filter(|s| !s.is_decided()) {
        let trace = decide(c, &s.id).map_err(reasoning_failure)?;
        let engine: std::collections::BTreeSet<_> = if trace.top().len() == 1 {
            synthesize_solutions(c, &trace)
                .map_err(reasoning_failure)?
                .into_iter()
                .flat_map(|p| p.solutions)
                .collect()
        } else {
            Default::default()
        };
        let brute = oracle::filtered_solutions(c, &trace)
            .map_err(|e| Failure::new(SEMANTIC, e.to_string()))?;
        println!(
            "solutions {}: engine {} oracle {}",
            s.id,
            engine.len(),
            brute.len()
        );
        agree &= engine == brute;
    }
    println!("{}", if agree { "agree" } else { "disagree" });
    Ok(if agree { OK } else { SEMANTIC })
}
