//! Command-line front end: `construct`, `verify` and `benchmark`.

pub mod benchmark;
pub mod gauss_legendre;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cubature::{check_distinct, RuleDocument};
use crate::error::{CubatureError, Result};
use crate::function_space::{vandermonde, FunctionSpace, SpaceKind};
use crate::geometry::{Domain, DomainSpec, WeightFunction, WeightSpec};
use crate::ls_cubature::{exactness_residual, LsConfig};
use crate::moments::{compute_moments, MomentMode, MomentVector, DEFAULT_QMC_SAMPLES};
use crate::pipeline::{construct, ConstructionConfig};
use crate::sequences::{SequenceKind, DEFAULT_REJECTION_CAP};
use crate::steinitz::SteinitzConfig;
use benchmark::{run_benchmark, BenchmarkSpec, TestFunction, REFERENCE_QMC_SAMPLES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_CONSTRUCTION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "poscub", version, about = "Positive interpolatory cubature rules")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a rule and write it as JSON.
    Construct {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Rule JSON destination (stdout if omitted).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Also export the nodes and weights as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Check a rule file for exactness, positivity, interiority and size.
    Verify {
        /// Rule JSON file.
        rule: PathBuf,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Compare constructed rules with Gauss-Legendre rules over a degree range.
    Benchmark {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Lowest degree (the highest is `--degree`).
        #[arg(long)]
        min_degree: Option<u32>,
        /// Test function (repeatable): product, radial-sin.
        #[arg(long = "function")]
        functions: Vec<TestFunction>,
        /// Samples for QMC reference integrals.
        #[arg(long)]
        reference_samples: Option<usize>,
        /// CSV destination (stdout if omitted).
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
}

/// Problem description flags; each overrides the matching config key.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// JSON config: either a bare domain or a full config document.
    #[arg(long, value_name = "FILE")]
    pub domain_config: Option<PathBuf>,
    /// algebraic or trigonometric.
    #[arg(long)]
    pub space: Option<SpaceKind>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// bisection or halton.
    #[arg(long)]
    pub sequence: Option<SequenceKind>,
    /// auto, analytic or qmc.
    #[arg(long)]
    pub moments: Option<MomentMode>,
    #[arg(long)]
    pub qmc_samples: Option<usize>,
    /// Largest number of sequence points tried by the least-squares stage.
    #[arg(long)]
    pub seed_cap: Option<usize>,
    /// Use the weight function ||x||^P.
    #[arg(long, value_name = "P")]
    pub weight_power: Option<f64>,
}

/// JSON config document. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Option<DomainSpec>,
    pub weight: Option<WeightSpec>,
    pub space: Option<SpaceKind>,
    pub degree: Option<u32>,
    pub min_degree: Option<u32>,
    pub functions: Option<Vec<TestFunction>>,
    pub sequence: Option<SequenceKind>,
    pub moments: Option<MomentMode>,
    pub qmc_samples: Option<usize>,
    pub rejection_cap: Option<usize>,
    pub ls: LsConfig,
    pub steinitz: SteinitzConfig,
}

impl RunConfig {
    /// Parses a config document; an object with a `type` key is a bare domain.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CubatureError::Schema(e.to_string()))?;
        if value.get("type").is_some() {
            let domain = serde_json::from_value(value).map_err(|e| CubatureError::Schema(e.to_string()))?;
            Ok(RunConfig {
                domain: Some(domain),
                ..Default::default()
            })
        } else {
            serde_json::from_value(value).map_err(|e| CubatureError::Schema(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Applies command-line overrides.
    pub fn apply(&mut self, args: &ProblemArgs) {
        if let Some(s) = args.space {
            self.space = Some(s);
        }
        if let Some(m) = args.degree {
            self.degree = Some(m);
        }
        if let Some(s) = args.sequence {
            self.sequence = Some(s);
        }
        if let Some(m) = args.moments {
            self.moments = Some(m);
        }
        if let Some(n) = args.qmc_samples {
            self.qmc_samples = Some(n);
        }
        if let Some(n) = args.seed_cap {
            self.ls.n_cap = Some(n);
        }
        if let Some(p) = args.weight_power {
            self.weight = Some(WeightSpec::RadialPower { p });
        }
    }

    pub fn construction(&self) -> ConstructionConfig {
        ConstructionConfig {
            sequence: self.sequence,
            moments: self.moments.unwrap_or_default(),
            qmc_samples: self.qmc_samples.unwrap_or(DEFAULT_QMC_SAMPLES),
            rejection_cap: self.rejection_cap.unwrap_or(DEFAULT_REJECTION_CAP),
            ls: self.ls,
            steinitz: self.steinitz,
        }
    }

    pub fn build_domain(&self) -> Result<Domain> {
        self.domain
            .as_ref()
            .ok_or_else(|| CubatureError::InvalidArgument("no domain given (use --domain-config)".into()))?
            .build()
    }

    pub fn build_weight(&self) -> WeightFunction {
        self.weight.as_ref().map(WeightSpec::build).unwrap_or(WeightFunction::One)
    }
}

fn load_config(args: &ProblemArgs) -> Result<RunConfig> {
    let mut config = match &args.domain_config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(args);
    Ok(config)
}

/// Errors that stem from the request rather than from the construction.
fn is_config_error(e: &CubatureError) -> bool {
    matches!(
        e,
        CubatureError::InvalidArgument(_)
            | CubatureError::DimensionMismatch { .. }
            | CubatureError::HaltonDimension(..)
            | CubatureError::MomentsUnsupported
            | CubatureError::Unsupported(_)
            | CubatureError::Schema(_)
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the check could not run.
    pub passed: Option<bool>,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: Option<bool>, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Checks a rule document without requiring it to be a valid rule.
///
/// `moments` must belong to `space`. Without a domain the interiority check is
/// skipped.
pub fn verify_document(
    doc: &RuleDocument,
    domain: Option<&Domain>,
    space: &FunctionSpace,
    moments: &MomentVector,
) -> VerifyReport {
    let mut report = VerifyReport::default();
    let n = doc.nodes.len();
    let shape_ok = n > 0
        && n == doc.weights.len()
        && doc.nodes.iter().all(|x| x.len() == doc.dimension)
        && doc.dimension == space.dimension()
        && doc.nodes.iter().flatten().chain(&doc.weights).all(|v| v.is_finite());
    report.push(
        "shape",
        Some(shape_ok),
        format!(
            "{n} nodes, {} weights, dimension {} (space dimension {})",
            doc.weights.len(),
            doc.dimension,
            space.dimension()
        ),
    );
    let min_w = doc.weights.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(
        "positivity",
        Some(min_w > 0.0),
        format!("smallest weight {min_w:e}"),
    );
    match domain {
        Some(domain) if shape_ok => {
            let outside = doc.nodes.iter().filter(|x| !domain.contains(x)).count();
            report.push("interiority", Some(outside == 0), format!("{outside} nodes outside the domain"));
        }
        _ => report.push("interiority", None, "no domain or malformed nodes".into()),
    }
    report.push(
        "node-count",
        Some(n <= space.size()),
        format!("N = {n}, K = {}", space.size()),
    );
    if shape_ok {
        let distinct = check_distinct(&doc.nodes);
        report.push(
            "distinctness",
            Some(distinct.is_ok()),
            distinct.err().map(|e| e.to_string()).unwrap_or_else(|| "nodes are distinct".into()),
        );
        match vandermonde(space, &doc.nodes) {
            Ok(phi) => {
                let residual = exactness_residual(&phi.matrix, &doc.weights, moments.values());
                let tol = moments.residual_tolerance();
                report.push(
                    "exactness",
                    Some(residual <= tol),
                    format!("residual {residual:e}, tolerance {tol:e}"),
                );
            }
            Err(e) => report.push("exactness", Some(false), e.to_string()),
        }
    } else {
        report.push("distinctness", None, "malformed rule".into());
        report.push("exactness", None, "malformed rule".into());
    }
    report
}

/// A failed command: message and exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: format!("configuration error: {e}"),
        }
    }

    fn construction(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CONSTRUCTION,
            message: format!("construction failed: {e}"),
        }
    }

    fn classify(e: CubatureError) -> Self {
        if is_config_error(&e) {
            Self::config(e)
        } else {
            Self::construction(e)
        }
    }
}

fn build_space(config: &RunConfig, degree: u32, dimension: usize) -> std::result::Result<FunctionSpace, Failure> {
    FunctionSpace::from_descriptor(config.space.unwrap_or(SpaceKind::Algebraic), dimension, degree)
        .map_err(Failure::config)
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

pub fn cmd_construct(
    problem: &ProblemArgs,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let config = load_config(problem).map_err(Failure::config)?;
    let domain = config.build_domain().map_err(Failure::config)?;
    let weight = config.build_weight();
    let degree = config
        .degree
        .ok_or_else(|| Failure::config("no degree given (use --degree)"))?;
    let space = build_space(&config, degree, domain.dimension())?;
    let built = construct(&domain, &weight, &space, &config.construction()).map_err(Failure::classify)?;
    let trace = built.trace.report();
    if out.is_some() {
        print!("{trace}");
    } else {
        eprint!("{trace}");
    }
    let doc = built.cubature.to_document();
    let report = verify_document(&doc, Some(&domain), &space, &built.moments);
    if !report.passed() {
        return Err(Failure::construction(format!("rule fails verification:\n{report}")));
    }
    let json = built.cubature.to_json().map_err(Failure::construction)?;
    write_output(out, &(json + "\n")).map_err(Failure::construction)?;
    if let Some(path) = csv {
        let file = fs::File::create(path).map_err(Failure::construction)?;
        built.cubature.write_csv(io::BufWriter::new(file)).map_err(Failure::construction)?;
    }
    Ok(())
}

pub fn cmd_verify(rule: &Path, problem: &ProblemArgs) -> std::result::Result<VerifyReport, Failure> {
    let text = fs::read_to_string(rule).map_err(Failure::config)?;
    let doc: RuleDocument = serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", rule.display())))?;
    let mut config = match &problem.domain_config {
        Some(path) => RunConfig::load(path).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    // the rule file supplies defaults for the space and the moment provider
    if let Some(desc) = &doc.space {
        config.space.get_or_insert(desc.kind);
        if let Some(m) = desc.degree {
            config.degree.get_or_insert(m);
        }
    }
    if doc.moment_provenance.as_deref() == Some("qmc") && config.moments.is_none() {
        config.moments = Some(MomentMode::Qmc);
        config.qmc_samples = config.qmc_samples.or(doc.qmc_samples);
    }
    config.apply(problem);
    let domain = match &config.domain {
        Some(spec) => Some(spec.build().map_err(Failure::config)?),
        None => None,
    };
    let degree = config
        .degree
        .ok_or_else(|| Failure::config("no degree given and none recorded in the rule"))?;
    let space = build_space(&config, degree, doc.dimension)?;
    let weight = config.build_weight();
    let moments = match &domain {
        Some(d) => compute_moments(
            &space,
            d,
            &weight,
            config.moments.unwrap_or_default(),
            config.qmc_samples.unwrap_or(DEFAULT_QMC_SAMPLES),
        )
        .map_err(Failure::classify)?,
        None => return Err(Failure::config("verification needs a domain (use --domain-config)")),
    };
    Ok(verify_document(&doc, domain.as_ref(), &space, &moments))
}

pub fn cmd_benchmark(
    problem: &ProblemArgs,
    min_degree: Option<u32>,
    functions: &[TestFunction],
    reference_samples: Option<usize>,
    csv: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let config = load_config(problem).map_err(Failure::config)?;
    let domain = config.build_domain().map_err(Failure::config)?;
    let weight = config.build_weight();
    let max = config
        .degree
        .ok_or_else(|| Failure::config("no maximal degree given (use --degree)"))?;
    let min = min_degree.or(config.min_degree).unwrap_or(0);
    if min > max {
        return Err(Failure::config(format!("degree range {min}..={max} is empty")));
    }
    let functions = if !functions.is_empty() {
        functions.to_vec()
    } else {
        config.functions.clone().unwrap_or_else(|| TestFunction::ALL.to_vec())
    };
    let spec = BenchmarkSpec {
        space: config.space.unwrap_or(SpaceKind::Algebraic),
        degrees: min..=max,
        functions,
        construction: config.construction(),
        reference_samples: reference_samples.unwrap_or(REFERENCE_QMC_SAMPLES),
    };
    let report = run_benchmark(&domain, &weight, &spec).map_err(Failure::classify)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(Failure::construction)?;
    write_output(csv, &String::from_utf8_lossy(&buf)).map_err(Failure::construction)?;
    if report.rows.iter().all(|r| r.nodes.is_none()) {
        return Err(Failure::construction("no degree produced a rule"));
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Construct { problem, out, csv } => cmd_construct(problem, out.as_deref(), csv.as_deref()),
        Command::Verify { rule, problem } => match cmd_verify(rule, problem) {
            Ok(report) => {
                print!("{report}");
                if report.passed() {
                    Ok(())
                } else {
                    Err(Failure {
                        code: EXIT_VERIFICATION,
                        message: "verification failed".into(),
                    })
                }
            }
            Err(f) => Err(f),
        },
        Command::Benchmark {
            problem,
            min_degree,
            functions,
            reference_samples,
            csv,
        } => cmd_benchmark(problem, *min_degree, functions, *reference_samples, csv.as_deref()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("poscub: {}", f.message);
            f.code
        }
    }
}
