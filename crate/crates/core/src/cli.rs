//! Command-line front end.
//!
//! Exit codes: 0 success or "true", 1 "false" or a failed check, 2 usage or
//! input error, 3 budget refusal.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::budget::Budgets;
use crate::digraph::{scaled_matrix, SandpileDigraph};
use crate::error::Error;
use crate::json::{self, format_vector, int_value, vec_value};
use crate::lattice::{class_audit, recurrent_representative, same_class};
use crate::matrix::{validate_toppling, IntMatrix, RateVector, ToppleMatrix};
use crate::parking::{
    enumerate_parking_for, is_dhar_allowed, is_parking_bruteforce, is_parking_greedy, is_r_allowed,
    omega_size, parking_counterexample, parking_to_recurrent, GreedyOutcome, TieBreak,
};
use crate::sandpile::{
    avalanche, enumerate_recurrent, is_recurrent, is_stable, stabilize, stabilized, Configuration,
    StableBox, TopplePolicy,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FALSE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "toppling",
    version,
    about = "Parking functions and recurrent configurations of integer toppling matrices"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Matrix file: {"n": N, "rows": [[...], ...]}
    #[arg(long, global = true, value_name = "PATH")]
    matrix: Option<PathBuf>,
    /// Rate vector, e.g. "2,1" (defaults to the column sums of the adjugate)
    #[arg(long, global = true, value_name = "A,B,...")]
    rate: Option<String>,
    #[arg(long, global = true, value_name = "N", default_value_t = Budgets::default().omega)]
    budget_omega: u64,
    #[arg(long, global = true, value_name = "N", default_value_t = Budgets::default().stable_box)]
    budget_box: u64,
    #[arg(long, global = true, value_name = "N", default_value_t = Budgets::default().topples)]
    budget_topples: u64,
    /// Seed for every randomized choice
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Include witnesses (peeling sequences, failing vectors, toppling records)
    #[arg(long, global = true)]
    witness: bool,
    /// Write the digraph in DOT format to this file
    #[arg(long, global = true, value_name = "PATH")]
    dot: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the toppling-matrix conditions and print certificates
    Validate,
    /// List every principal minor
    Minors,
    /// Parking functions
    Parking {
        #[command(subcommand)]
        action: ParkingAction,
    },
    /// Recurrent configurations
    Recurrent {
        #[command(subcommand)]
        action: RecurrentAction,
    },
    /// Verify that u -> d - u maps parking functions onto recurrent configurations
    Bijection,
    /// Lattice classes
    Classes {
        #[command(subcommand)]
        action: ClassAction,
    },
    /// Stabilize a configuration and print the toppling record
    Stabilize {
        #[arg(allow_hyphen_values = true)]
        u: String,
        #[arg(long, value_enum, default_value_t = PolicyArg::Lowest)]
        policy: PolicyArg,
    },
    /// Apply the avalanche operator at a vertex (1-based) to a stable configuration
    Avalanche {
        #[arg(allow_hyphen_values = true)]
        u: String,
        vertex: usize,
    },
    /// Build the sink digraph and check the arborescence count
    Digraph,
    /// Run the built-in battery of checks
    Selftest,
}

#[derive(Debug, Subcommand)]
enum ParkingAction {
    Test {
        #[arg(allow_hyphen_values = true)]
        f: String,
    },
    Enumerate,
}

#[derive(Debug, Subcommand)]
enum RecurrentAction {
    Test {
        #[arg(allow_hyphen_values = true)]
        u: String,
    },
    Enumerate,
    /// Compare recurrence with the r-allowed and subset-allowed tests
    Allowed {
        #[arg(allow_hyphen_values = true)]
        u: String,
    },
}

#[derive(Debug, Subcommand)]
enum ClassAction {
    /// Decide whether two vectors differ by an element of the row lattice
    Same {
        #[arg(allow_hyphen_values = true)]
        v: String,
        #[arg(allow_hyphen_values = true)]
        w: String,
    },
    /// The recurrent configuration in the class of a vector
    Representative {
        #[arg(allow_hyphen_values = true)]
        v: String,
    },
    /// Cross-check parking functions, recurrent configurations and classes
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Lowest,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_path: Option<PathBuf>,
    pub rate: Option<Vec<BigInt>>,
    pub budgets: Budgets,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub witness: bool,
    pub dot_path: Option<PathBuf>,
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } | Error::ToppleCapExceeded { .. } => {
                Failure::Budget(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

struct Report {
    ok: bool,
    text: String,
    json: Value,
}

type CmdResult = Result<Report, Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: rendered,
                }
            } else {
                Outcome {
                    code,
                    stdout: rendered,
                    stderr: String::new(),
                }
            };
        }
    };
    let format = if cli.global.json {
        OutputFormat::Json
    } else {
        OutputFormat::Text
    };
    let result = config_from(&cli.global).and_then(|config| dispatch(&cli.command, &config));
    match result {
        Ok(report) => Outcome {
            code: if report.ok { EXIT_OK } else { EXIT_FALSE },
            stdout: match format {
                OutputFormat::Text => report.text,
                OutputFormat::Json => pretty(&report.json),
            },
            stderr: String::new(),
        },
        Err(failure) => {
            let (code, message) = match failure {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Budget(m) => (EXIT_BUDGET, m),
            };
            Outcome {
                code,
                stdout: match format {
                    OutputFormat::Text => String::new(),
                    OutputFormat::Json => pretty(&json!({ "error": message })),
                },
                stderr: format!("error: {message}\n"),
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

fn config_from(args: &GlobalArgs) -> Result<RunConfig, Failure> {
    let rate = args.rate.as_deref().map(parse_vector).transpose()?;
    for (name, value) in [
        ("--budget-omega", args.budget_omega),
        ("--budget-box", args.budget_box),
        ("--budget-topples", args.budget_topples),
    ] {
        if value == 0 {
            return Err(Failure::Usage(format!("{name} must be positive")));
        }
    }
    Ok(RunConfig {
        input_path: args.matrix.clone(),
        rate,
        budgets: Budgets {
            omega: args.budget_omega,
            stable_box: args.budget_box,
            topples: args.budget_topples,
            ..Budgets::default()
        },
        seed: args.seed,
        output_format: if args.json {
            OutputFormat::Json
        } else {
            OutputFormat::Text
        },
        witness: args.witness,
        dot_path: args.dot.clone(),
    })
}

/// Parses "1,3", "[1,3]" or "(1,3)".
fn parse_vector(text: &str) -> Result<Vec<BigInt>, Failure> {
    let inner = text
        .trim()
        .trim_start_matches(['[', '('])
        .trim_end_matches([']', ')']);
    inner
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<BigInt>()
                .map_err(|_| Failure::Usage(format!("not an integer vector: {text:?}")))
        })
        .collect()
}

fn parse_configuration(text: &str) -> Result<Configuration, Failure> {
    Ok(Configuration::new(parse_vector(text)?)?)
}

#[derive(Debug, Deserialize)]
struct MatrixFile {
    n: usize,
    #[serde(deserialize_with = "json::de_int_rows")]
    rows: Vec<Vec<BigInt>>,
}

/// Reads and shape-checks a matrix file.
pub fn load_matrix(path: &Path) -> Result<IntMatrix, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: MatrixFile =
        serde_json::from_str(&text).map_err(|e| format!("malformed matrix JSON: {e}"))?;
    if file.rows.len() != file.n {
        return Err(format!(
            "matrix declares n = {} but has {} rows",
            file.n,
            file.rows.len()
        ));
    }
    IntMatrix::from_rows(file.rows).map_err(|e| e.to_string())
}

fn raw_matrix(config: &RunConfig) -> Result<IntMatrix, Failure> {
    let path = config
        .input_path
        .as_deref()
        .ok_or_else(|| Failure::Usage("--matrix is required".into()))?;
    load_matrix(path).map_err(Failure::Usage)
}

fn topple_matrix(config: &RunConfig) -> Result<ToppleMatrix, Failure> {
    Ok(ToppleMatrix::new(raw_matrix(config)?)?)
}

fn rate_for(config: &RunConfig, matrix: &ToppleMatrix) -> Result<RateVector, Failure> {
    match &config.rate {
        Some(r) => Ok(RateVector::new(matrix, r.clone())?),
        None => Ok(matrix.canonical_rate()),
    }
}

fn dispatch(command: &Command, config: &RunConfig) -> CmdResult {
    match command {
        Command::Validate => cmd_validate(config),
        Command::Minors => cmd_minors(config),
        Command::Parking { action } => cmd_parking(config, action),
        Command::Recurrent { action } => cmd_recurrent(config, action),
        Command::Bijection => cmd_bijection(config),
        Command::Classes { action } => cmd_classes(config, action),
        Command::Stabilize { u, policy } => cmd_stabilize(config, u, *policy),
        Command::Avalanche { u, vertex } => cmd_avalanche(config, u, *vertex),
        Command::Digraph => cmd_digraph(config),
        Command::Selftest => cmd_selftest(config),
    }
}

fn cmd_validate(config: &RunConfig) -> CmdResult {
    let matrix = raw_matrix(config)?;
    let report = validate_toppling(&matrix);
    let mut text = String::new();
    writeln!(text, "toppling: {}", report.is_toppling).unwrap();
    writeln!(text, "det: {}", report.det).unwrap();
    let mut value = serde_json::to_value(&report).expect("report serializes");
    if let Some(r) = &report.row_certificate {
        writeln!(
            text,
            "row certificate r: {} (rΔ = {})",
            format_vector(r.rates()),
            format_vector(r.load())
        )
        .unwrap();
    }
    if let Some(h) = &report.column_certificate {
        writeln!(text, "column certificate h: {}", format_vector(h)).unwrap();
    }
    if report.is_toppling {
        let d: Vec<BigInt> = (0..matrix.dim())
            .map(|i| matrix.get(i, i) - BigInt::one())
            .collect();
        writeln!(text, "d: {}", format_vector(&d)).unwrap();
        value["d"] = vec_value(&d);
    }
    for v in &report.violations {
        writeln!(text, "violation: {v}").unwrap();
    }
    Ok(Report {
        ok: report.is_toppling,
        text,
        json: value,
    })
}

fn cmd_minors(config: &RunConfig) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let n = matrix.dim();
    if n > config.budgets.subset_dim {
        return Err(Error::BudgetExceeded {
            what: "subset scan (dimension)",
            size: BigInt::from(n),
            budget: config.budgets.subset_dim as u64,
        }
        .into());
    }
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut all_positive = true;
    for mask in 1u64..1 << n {
        let subset: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let minor = matrix.principal_minor(&subset)?;
        all_positive &= minor > BigInt::from(0);
        let one_based: Vec<usize> = subset.iter().map(|i| i + 1).collect();
        writeln!(text, "{one_based:?}: {minor}").unwrap();
        rows.push(json!({ "subset": one_based, "minor": int_value(&minor) }));
    }
    writeln!(text, "all positive: {all_positive}").unwrap();
    Ok(Report {
        ok: all_positive,
        text,
        json: json!({ "minors": rows, "all_positive": all_positive }),
    })
}

fn outcome_text(outcome: &GreedyOutcome) -> String {
    match outcome {
        GreedyOutcome::Parked { sequence } => {
            let seq: Vec<String> = sequence.iter().map(|v| (v + 1).to_string()).collect();
            format!("sequence: {}", seq.join(" "))
        }
        GreedyOutcome::Stalled { step, remaining } => format!(
            "stalled at step {step} with remaining multiset {}",
            format_vector(remaining.as_slice())
        ),
    }
}

fn cmd_parking(config: &RunConfig, action: &ParkingAction) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let rate = rate_for(config, &matrix)?;
    let budgets = &config.budgets;
    match action {
        ParkingAction::Test { f } => {
            let f = parse_configuration(f)?;
            let outcome = is_parking_greedy(&matrix, &rate, &f, TieBreak::Lowest, budgets)?;
            let parked = outcome.is_parked();
            let mut text = format!("parking: {parked}\n{}\n", outcome_text(&outcome));
            let mut value = json!({
                "f": f,
                "rate": vec_value(rate.rates()),
                "parking": parked,
                "witness": outcome,
            });
            if config.witness {
                let chi = parking_counterexample(&matrix, &rate, &f, budgets)?;
                match &chi {
                    Some(chi) => writeln!(
                        text,
                        "failing characteristic vector: {}",
                        format_vector(chi.as_slice())
                    )
                    .unwrap(),
                    None => text.push_str("no failing characteristic vector\n"),
                }
                value["failing_chi"] = json!(chi);
            }
            Ok(Report {
                ok: parked,
                text,
                json: value,
            })
        }
        ParkingAction::Enumerate => {
            let set = enumerate_parking_for(&matrix, &rate, budgets)?;
            let mut report = set_report(&matrix, "parking_functions", &set);
            if config.witness {
                let mut sequences = Vec::new();
                for f in &set {
                    let outcome = is_parking_greedy(&matrix, &rate, f, TieBreak::Lowest, budgets)?;
                    writeln!(report.text, "{f} {}", outcome_text(&outcome)).unwrap();
                    sequences.push(json!(outcome));
                }
                report.json["witnesses"] = Value::Array(sequences);
            }
            Ok(report)
        }
    }
}

fn set_report(matrix: &ToppleMatrix, key: &str, set: &[Configuration]) -> Report {
    let det = matrix.determinant();
    let matches = &BigInt::from(set.len()) == det;
    let mut text = String::new();
    for v in set {
        writeln!(text, "{v}").unwrap();
    }
    writeln!(text, "count: {}", set.len()).unwrap();
    writeln!(text, "det: {det}").unwrap();
    writeln!(text, "count == det: {matches}").unwrap();
    Report {
        ok: matches,
        text,
        json: json!({
            key: set,
            "count": set.len(),
            "det": int_value(det),
            "count_equals_det": matches,
        }),
    }
}

fn cmd_recurrent(config: &RunConfig, action: &RecurrentAction) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let rate = rate_for(config, &matrix)?;
    let budgets = &config.budgets;
    match action {
        RecurrentAction::Test { u } => {
            let u = parse_configuration(u)?;
            let recurrent = is_recurrent(&matrix, &rate, &u, budgets)?;
            let mut text = format!("recurrent: {recurrent}\n");
            let mut value = json!({
                "u": u,
                "rate": vec_value(rate.rates()),
                "recurrent": recurrent,
            });
            if config.witness && is_stable(&matrix, &u)? {
                let loaded: Vec<BigInt> = u
                    .as_slice()
                    .iter()
                    .zip(rate.load())
                    .map(|(a, c)| a + c)
                    .collect();
                let loaded = Configuration::new(loaded)?;
                let (end, record) =
                    stabilize(&matrix, &loaded, TopplePolicy::LowestIndex, budgets)?;
                writeln!(text, "u + rΔ = {loaded} stabilizes to {end}").unwrap();
                writeln!(text, "representation: {:?}", record.representation()).unwrap();
                value["witness"] = json!({ "loaded": loaded, "stable": end, "record": record });
            }
            Ok(Report {
                ok: recurrent,
                text,
                json: value,
            })
        }
        RecurrentAction::Enumerate => {
            let set = enumerate_recurrent(&matrix, &rate, budgets)?;
            Ok(set_report(&matrix, "recurrent_configurations", &set))
        }
        RecurrentAction::Allowed { u } => {
            let u = parse_configuration(u)?;
            let stable = is_stable(&matrix, &u)?;
            let recurrent = is_recurrent(&matrix, &rate, &u, budgets)?;
            let r_allowed = is_r_allowed(&matrix, &rate, &u, budgets)?;
            let dhar = is_dhar_allowed(&matrix, &u, budgets)?;
            let consistent = recurrent == (stable && r_allowed);
            let text = format!(
                "stable: {stable}\nrecurrent: {recurrent}\nr-allowed: {r_allowed}\nsubset-allowed: {dhar}\n"
            );
            Ok(Report {
                ok: consistent,
                text,
                json: json!({
                    "u": u,
                    "stable": stable,
                    "recurrent": recurrent,
                    "r_allowed": r_allowed,
                    "subset_allowed": dhar,
                }),
            })
        }
    }
}

fn cmd_bijection(config: &RunConfig) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let rate = rate_for(config, &matrix)?;
    let parking = enumerate_parking_for(&matrix, &rate, &config.budgets)?;
    let recurrent = enumerate_recurrent(&matrix, &rate, &config.budgets)?;
    let images = parking
        .iter()
        .map(|f| parking_to_recurrent(&matrix, f))
        .collect::<crate::Result<Vec<_>>>()?;
    let image_set: BTreeSet<&Configuration> = images.iter().collect();
    let recurrent_set: BTreeSet<&Configuration> = recurrent.iter().collect();
    let ok = image_set == recurrent_set && image_set.len() == parking.len();
    let mut text = String::new();
    for (f, u) in parking.iter().zip(&images) {
        writeln!(text, "{f} -> {u}").unwrap();
    }
    if ok {
        writeln!(text, "bijection verified: {} pairs", parking.len()).unwrap();
    } else {
        writeln!(
            text,
            "bijection failed: {} parking functions, {} recurrent configurations",
            parking.len(),
            recurrent.len()
        )
        .unwrap();
    }
    let pairs: Vec<Value> = parking
        .iter()
        .zip(&images)
        .map(|(f, u)| json!({ "parking": f, "recurrent": u }))
        .collect();
    Ok(Report {
        ok,
        text,
        json: json!({ "pairs": pairs, "verified": ok }),
    })
}

fn cmd_classes(config: &RunConfig, action: &ClassAction) -> CmdResult {
    let matrix = topple_matrix(config)?;
    match action {
        ClassAction::Same { v, w } => {
            let v = parse_vector(v)?;
            let w = parse_vector(w)?;
            let witness = same_class(&matrix, &v, &w)?;
            let mut text = format!("same class: {}\n", witness.is_some());
            if let Some(x) = &witness {
                writeln!(text, "x: {} (v − w = xΔ)", format_vector(x)).unwrap();
            }
            Ok(Report {
                ok: witness.is_some(),
                text,
                json: json!({
                    "same_class": witness.is_some(),
                    "x": witness.as_deref().map(vec_value),
                }),
            })
        }
        ClassAction::Representative { v } => {
            let rate = rate_for(config, &matrix)?;
            let v = parse_vector(v)?;
            let u = recurrent_representative(&matrix, &rate, &v, &config.budgets)?;
            Ok(Report {
                ok: true,
                text: format!("representative: {u}\n"),
                json: json!({ "v": vec_value(&v), "representative": u }),
            })
        }
        ClassAction::Audit => {
            let report = class_audit(&matrix, &config.budgets)?;
            let mut text = format!(
                "det: {}\nparking functions: {}\nrecurrent configurations: {}\n",
                report.det, report.parking_count, report.recurrent_count
            );
            for v in &report.violations {
                writeln!(text, "violation: {v}").unwrap();
            }
            writeln!(text, "audit passed: {}", report.passed()).unwrap();
            Ok(Report {
                ok: report.passed(),
                text,
                json: serde_json::to_value(&report).expect("report serializes"),
            })
        }
    }
}

fn cmd_stabilize(config: &RunConfig, u: &str, policy: PolicyArg) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let u = parse_configuration(u)?;
    let policy = match policy {
        PolicyArg::Lowest => TopplePolicy::LowestIndex,
        PolicyArg::Random => TopplePolicy::Random { seed: config.seed },
    };
    let (stable, record) = stabilize(&matrix, &u, policy, &config.budgets)?;
    let seq: Vec<String> = record
        .sequence()
        .iter()
        .map(|v| (v + 1).to_string())
        .collect();
    let text = format!(
        "stable: {stable}\nrepresentation: {:?}\nsequence: {}\n",
        record.representation(),
        seq.join(" ")
    );
    Ok(Report {
        ok: true,
        text,
        json: json!({ "start": u, "stable": stable, "record": record }),
    })
}

fn cmd_avalanche(config: &RunConfig, u: &str, vertex: usize) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let u = parse_configuration(u)?;
    if vertex == 0 || vertex > matrix.dim() {
        return Err(Failure::Usage(format!(
            "vertex {vertex} is out of range 1..={}",
            matrix.dim()
        )));
    }
    let out = avalanche(&matrix, &u, vertex - 1, &config.budgets)?;
    Ok(Report {
        ok: true,
        text: format!("{out}\n"),
        json: json!({ "start": u, "vertex": vertex, "result": out }),
    })
}

fn cmd_digraph(config: &RunConfig) -> CmdResult {
    let matrix = topple_matrix(config)?;
    let rate = rate_for(config, &matrix)?;
    let graph = SandpileDigraph::build(&matrix, &rate);
    let dot = graph.to_dot();
    if let Some(path) = &config.dot_path {
        std::fs::write(path, &dot)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let expected: BigInt = rate.rates().iter().product::<BigInt>() * matrix.determinant();
    let scaled_det = scaled_matrix(&matrix, &rate).determinant();
    let count = match graph.count_arborescences(0, &config.budgets) {
        Ok(c) => Some(c),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let ok = scaled_det == expected && count.as_ref().is_none_or(|c| c == &expected);
    let mut value = serde_json::to_value(&graph).expect("digraph serializes");
    value["arborescences"] = count.as_ref().map(int_value).unwrap_or(Value::Null);
    value["expected"] = int_value(&expected);
    let text = if config.dot_path.is_some() {
        let mut t = format!("edges: {}\n", graph.total_edges());
        match &count {
            Some(c) => writeln!(t, "arborescences toward 0: {c}").unwrap(),
            None => t.push_str("arborescences toward 0: not counted (over budget)\n"),
        }
        writeln!(t, "(∏ r_i)·det Δ: {expected}").unwrap();
        t
    } else {
        dot
    };
    Ok(Report {
        ok,
        text,
        json: value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Check {
    name: &'static str,
    status: Status,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), Error>) -> Check {
    match f() {
        Ok((true, detail)) => Check {
            name,
            status: Status::Pass,
            detail,
        },
        Ok((false, detail)) => Check {
            name,
            status: Status::Fail,
            detail,
        },
        Err(e @ Error::BudgetExceeded { .. }) => Check {
            name,
            status: Status::Skip,
            detail: e.to_string(),
        },
        Err(e) => Check {
            name,
            status: Status::Fail,
            detail: e.to_string(),
        },
    }
}

fn example_matrix() -> ToppleMatrix {
    ToppleMatrix::from_i64_rows(&[[2, -1], [-3, 4]]).expect("example is a toppling matrix")
}

fn configs(list: &[[i64; 2]]) -> Vec<Configuration> {
    list.iter()
        .map(|v| Configuration::from_i64(v).expect("nonnegative"))
        .collect()
}

fn cmd_selftest(config: &RunConfig) -> CmdResult {
    let budgets = &config.budgets;
    let example = example_matrix();
    let example_rate = RateVector::from_i64(&example, &[2, 1]).expect("valid rate");
    let mut checks = vec![
        check("golden parking set", || {
            let got = enumerate_parking_for(&example, &example_rate, budgets)?;
            let want = configs(&[[0, 0], [0, 1], [0, 2], [1, 0], [1, 1]]);
            Ok((got == want, format!("{} functions", got.len())))
        }),
        check("golden recurrent set", || {
            let got = enumerate_recurrent(&example, &example_rate, budgets)?;
            let want = configs(&[[0, 2], [0, 3], [1, 1], [1, 2], [1, 3]]);
            Ok((got == want, format!("{} configurations", got.len())))
        }),
        check("golden arborescence count", || {
            let d = SandpileDigraph::build(&example, &example_rate);
            let c = d.count_arborescences(0, budgets)?;
            Ok((c == BigInt::from(10), format!("{c} arborescences")))
        }),
    ];
    let matrix = match &config.input_path {
        Some(_) => topple_matrix(config)?,
        None => example,
    };
    checks.extend(matrix_battery(&matrix, config));

    let ok = checks.iter().all(|c| c.status != Status::Fail);
    let mut text = String::new();
    for c in &checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        writeln!(text, "{tag} {}: {}", c.name, c.detail).unwrap();
    }
    writeln!(text, "selftest passed: {ok}").unwrap();
    let rows: Vec<Value> = checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "status": match c.status { Status::Pass => "pass", Status::Fail => "fail", Status::Skip => "skip" },
                "detail": c.detail,
            })
        })
        .collect();
    Ok(Report {
        ok,
        text,
        json: json!({ "checks": rows, "passed": ok }),
    })
}

fn random_configuration(matrix: &ToppleMatrix, rng: &mut ChaCha8Rng, scale: u64) -> Configuration {
    let v = (0..matrix.dim())
        .map(|i| {
            let cap = matrix
                .diagonal(i)
                .to_u64()
                .unwrap_or(u64::MAX / 8)
                .saturating_mul(scale);
            BigInt::from(rng.gen_range(0..cap.max(1)))
        })
        .collect();
    Configuration::new(v).expect("nonnegative")
}

/// Checks of the counting theorem and its supporting identities on one matrix.
fn matrix_battery(matrix: &ToppleMatrix, config: &RunConfig) -> Vec<Check> {
    let budgets = &config.budgets;
    let n = matrix.dim();
    let canonical = matrix.canonical_rate();
    let det = matrix.determinant().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();

    out.push(check("counting theorem", || {
        let p = enumerate_parking_for(matrix, &canonical, budgets)?;
        let r = enumerate_recurrent(matrix, &canonical, budgets)?;
        let ok = BigInt::from(p.len()) == det && BigInt::from(r.len()) == det;
        Ok((
            ok,
            format!("|P| = {}, |R| = {}, det = {det}", p.len(), r.len()),
        ))
    }));
    out.push(check("bijection d - f", || {
        let p = enumerate_parking_for(matrix, &canonical, budgets)?;
        let r: BTreeSet<Configuration> = enumerate_recurrent(matrix, &canonical, budgets)?
            .into_iter()
            .collect();
        let images = p
            .iter()
            .map(|f| parking_to_recurrent(matrix, f))
            .collect::<crate::Result<BTreeSet<_>>>()?;
        Ok((
            images == r && images.len() == p.len(),
            format!("{} pairs", p.len()),
        ))
    }));
    out.push(check("oracle equivalence", || {
        let size = omega_size(&canonical);
        if size > BigInt::from(budgets.omega) {
            return Err(Error::BudgetExceeded {
                what: "characteristic-vector set",
                size,
                budget: budgets.omega,
            });
        }
        let ties = [
            TieBreak::Lowest,
            TieBreak::Highest,
            TieBreak::Random { seed: config.seed },
        ];
        let mut tested = 0usize;
        for f in StableBox::new(matrix, budgets)?.iter() {
            let oracle = is_parking_bruteforce(matrix, &canonical, &f, budgets)?;
            for tie in ties {
                if is_parking_greedy(matrix, &canonical, &f, tie, budgets)?.is_parked() != oracle {
                    return Ok((false, format!("disagreement at {f}")));
                }
            }
            tested += 1;
        }
        Ok((true, format!("{tested} candidates, 3 tie-breaks")))
    }));
    out.push(check("rate independence", || {
        let shifted = canonical
            .rates()
            .iter()
            .zip(matrix.adjugate().row(0))
            .map(|(c, a)| c + a)
            .collect();
        let alternative = matrix.rate_vector(shifted)?;
        let rates = [canonical.clone(), canonical.scaled(2), alternative];
        let p0 = enumerate_parking_for(matrix, &rates[0], budgets)?;
        let r0 = enumerate_recurrent(matrix, &rates[0], budgets)?;
        for rate in &rates[1..] {
            if enumerate_parking_for(matrix, rate, budgets)? != p0
                || enumerate_recurrent(matrix, rate, budgets)? != r0
            {
                return Ok((
                    false,
                    format!("sets differ for r = {}", format_vector(rate.rates())),
                ));
            }
        }
        Ok((true, "3 rate vectors".into()))
    }));
    let samples: Vec<Configuration> = (0..10)
        .map(|_| random_configuration(matrix, &mut rng, 4))
        .collect();
    let order_seeds: Vec<u64> = (0..5).map(|_| rng.gen()).collect();
    out.push(check("confluence", || {
        for u in &samples {
            let (s0, rec0) = stabilize(matrix, u, TopplePolicy::LowestIndex, budgets)?;
            for &seed in &order_seeds {
                let (s, rec) = stabilize(matrix, u, TopplePolicy::Random { seed }, budgets)?;
                if s != s0 || rec.representation() != rec0.representation() {
                    return Ok((false, format!("order dependence from {u}")));
                }
            }
        }
        Ok((
            true,
            format!(
                "{} configurations, {} orders",
                samples.len(),
                order_seeds.len() + 1
            ),
        ))
    }));
    let stable_samples: Vec<Configuration> = (0..10)
        .map(|_| random_configuration(matrix, &mut rng, 1))
        .collect();
    out.push(check("avalanche operators commute", || {
        for u in &stable_samples {
            for i in 0..n {
                for j in i + 1..n {
                    let a = avalanche(matrix, &avalanche(matrix, u, i, budgets)?, j, budgets)?;
                    let b = avalanche(matrix, &avalanche(matrix, u, j, budgets)?, i, budgets)?;
                    if a != b {
                        return Ok((false, format!("A_{} and A_{} differ at {u}", i + 1, j + 1)));
                    }
                }
            }
        }
        Ok((
            true,
            format!("{} stable configurations", stable_samples.len()),
        ))
    }));
    out.push(check("matrix-tree identity", || {
        let graph = SandpileDigraph::build(matrix, &canonical);
        let count = graph.count_arborescences(0, budgets)?;
        let expected = canonical.rates().iter().product::<BigInt>() * &det;
        Ok((
            count == expected,
            format!("{count} arborescences, expected {expected}"),
        ))
    }));
    out.push(check("class audit", || {
        let report = class_audit(matrix, budgets)?;
        let detail = if report.passed() {
            format!("{} classes", report.det)
        } else {
            report.violations.join("; ")
        };
        Ok((report.passed(), detail))
    }));
    let vectors: Vec<Vec<BigInt>> = (0..10)
        .map(|_| {
            (0..n)
                .map(|_| BigInt::from(rng.gen_range(-10i64..=10)))
                .collect()
        })
        .collect();
    out.push(check("recurrent representatives", || {
        for v in &vectors {
            let u = recurrent_representative(matrix, &canonical, v, budgets)?;
            if !is_recurrent(matrix, &canonical, &u, budgets)?
                || same_class(matrix, v, u.as_slice())?.is_none()
            {
                return Ok((
                    false,
                    format!("bad representative for {}", format_vector(v)),
                ));
            }
        }
        Ok((true, format!("{} vectors", vectors.len())))
    }));
    out.push(check("allowed characterization", || {
        let mut tested = 0usize;
        for u in StableBox::new(matrix, budgets)?.iter() {
            let stable_ok = stabilized(matrix, &u, budgets)? == u;
            if !stable_ok
                || is_r_allowed(matrix, &canonical, &u, budgets)?
                    != is_recurrent(matrix, &canonical, &u, budgets)?
            {
                return Ok((false, format!("mismatch at {u}")));
            }
            tested += 1;
        }
        Ok((true, format!("{tested} stable configurations")))
    }));
    out
}
