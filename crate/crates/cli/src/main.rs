//! `ptrdp`: private median and mean estimates from a data file, Monte Carlo
//! coverage runs and privacy audits.
//!
//! Exit status: 0 on a released value, 3 on no reply, 2 on invalid flags or a
//! failed precondition, 1 on I/O and parse errors.

mod ingest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ingest::{ingest, IngestError, InputFormat};
use ptrdp_core::estimators::{CheckMode, MomOptions, MOM_ETA_CONSTANT};
use ptrdp_core::simlab::audit::{self, presets, presets::Preset, presets::PresetAudit};
use ptrdp_core::simlab::{run_coverage, CoverageConfig, DistributionSpec, EstimatorKind, EstimatorSetup};
use ptrdp_core::{
    dp_median, dp_mom, dp_mom_density, Confidence, DpEstimateReport, MedianProfile, MomentProfile, NoiseSource,
    PrivacyBudget, ReleaseOutcome, Sample,
};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "ptrdp", version, about = "Differentially private median and mean estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct PrivacyArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    /// Failure probability of the accuracy guarantee.
    #[arg(long)]
    tau: f64,
}

#[derive(Args)]
struct InputArgs {
    /// CSV with a `value` column (or a single column), or JSON-lines of numbers.
    #[arg(long)]
    input: PathBuf,
    /// Overrides detection from the file extension.
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
}

#[derive(Args)]
struct OutputArgs {
    /// Seed for all randomness; drawn from the OS and reported when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Write the document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long)]
    sigma: f64,
    /// Cube root of the third absolute central moment.
    #[arg(long)]
    rho: f64,
    /// Number of blocks.
    #[arg(long = "K")]
    k: usize,
    #[arg(long, default_value_t = MOM_ETA_CONSTANT)]
    eta_constant: f64,
    /// Whether `n >= c (rho/sigma)^6 K` aborts the run or is only reported.
    #[arg(long, value_enum, default_value = "enforce")]
    moment_check: MomentCheck,
    /// Permute the data before blocking.
    #[arg(long)]
    shuffle_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MomentCheck {
    Enforce,
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Normal,
    StudentT,
    Pareto,
    Lognormal,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Median,
    Mom,
    MomDensity,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditPreset {
    /// Laplace mechanism on a clamped sum, `[0,0,0,0]` vs `[1,0,0,0]`.
    LaplaceSum,
    /// Gaussian PTR median on data near the no-reply threshold.
    PtrGaussian,
    /// Laplace PTR median on the same neighbors.
    PtrLaplace,
}

#[derive(Subcommand)]
enum Command {
    /// Private left median.
    #[command(allow_negative_numbers = true)]
    Median {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        input: InputArgs,
        /// Half-width of the interval around the median where the density is at least L.
        #[arg(long)]
        r: f64,
        /// Density lower bound on [median - r, median + r].
        #[arg(long = "L")]
        l: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Private median of means under three finite moments.
    #[command(allow_negative_numbers = true)]
    Mean {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        moments: MomentArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Private median of means for data with a density (n must be a multiple of K).
    #[command(allow_negative_numbers = true)]
    MeanDensity {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        moments: MomentArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Coverage and no-reply rates over repeated synthetic samples.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// normal: mu,sigma; student-t: nu,loc,scale; pareto: alpha,x_m; lognormal: mu,sigma.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        family_params: Vec<f64>,
        #[arg(long, value_enum)]
        estimator: EstimatorArg,
        #[arg(long)]
        n: usize,
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, value_enum, default_value = "enforce")]
        moment_check: MomentCheck,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical privacy-loss audit on a shipped neighbor preset.
    #[command(allow_negative_numbers = true)]
    Audit {
        #[arg(long, value_enum)]
        preset: AuditPreset,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

enum Failure {
    /// Bad flag values or an unmet precondition.
    Usage(ptrdp_core::Error),
    Input(IngestError),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) | Failure::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(e) if e.is_precondition() => "precondition",
            Failure::Usage(_) => "invalid_parameter",
            Failure::Input(_) => "input",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(e) => e.to_string(),
            Failure::Input(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
        }
    }
}

impl From<ptrdp_core::Error> for Failure {
    fn from(e: ptrdp_core::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::Input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

#[derive(Serialize)]
struct EstimateDoc<'a> {
    schema_version: u32,
    command: &'a str,
    result: ReleaseOutcome,
    eta: f64,
    #[serde(rename = "C")]
    c: f64,
    bound: f64,
    bound_terms: ptrdp_core::BoundTerms,
    preconditions: &'a [ptrdp_core::PreconditionCheck],
    epsilon: f64,
    delta: f64,
    tau: f64,
    n: usize,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    schema_version: u32,
    command: &'a str,
    error: ErrorBody,
}

fn budget(p: &PrivacyArgs) -> Result<(PrivacyBudget, Confidence), Failure> {
    Ok((PrivacyBudget::new(p.epsilon, p.delta)?, Confidence::new(p.tau)?))
}

fn check_mode(m: MomentCheck) -> CheckMode {
    match m {
        MomentCheck::Enforce => CheckMode::Enforce,
        MomentCheck::Report => CheckMode::Report,
    }
}

fn mom_options(m: &MomentArgs) -> Result<MomOptions, Failure> {
    if m.k == 0 {
        return Err(ptrdp_core::Error::InvalidParameter {
            name: "K",
            reason: "must be >= 1".into(),
        }
        .into());
    }
    if !(m.eta_constant.is_finite() && m.eta_constant > 0.0) {
        return Err(ptrdp_core::Error::InvalidParameter {
            name: "eta_constant",
            reason: format!("must be finite and > 0, got {}", m.eta_constant),
        }
        .into());
    }
    Ok(MomOptions {
        eta_constant: m.eta_constant,
        shuffle_seed: m.shuffle_seed,
        moment_condition: check_mode(m.moment_check),
    })
}

fn load(input: &InputArgs) -> Result<Sample, Failure> {
    let format = input.input_format.unwrap_or_else(|| InputFormat::from_path(&input.input));
    Ok(ingest(&input.input, format)?)
}

fn emit(out: &OutputArgs, body: &str) -> Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn estimate_body(doc: &EstimateDoc, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(doc),
        OutputFormat::Csv => {
            let result = match doc.result {
                ReleaseOutcome::Value(v) => v.to_string(),
                ReleaseOutcome::NoReply => "no_reply".into(),
            };
            format!(
                "result,eta,C,bound,n,K,seed\n{result},{},{},{},{},{},{}\n",
                doc.eta,
                doc.c,
                csv_number(doc.bound),
                doc.n,
                doc.k.map(|k| k.to_string()).unwrap_or_default(),
                doc.seed
            )
        }
    }
}

fn finish_estimate(
    command: &str,
    report: DpEstimateReport,
    privacy: &PrivacyArgs,
    n: usize,
    k: Option<usize>,
    seed: u64,
    output: &OutputArgs,
) -> Result<ExitCode, Failure> {
    let doc = EstimateDoc {
        schema_version: SCHEMA_VERSION,
        command,
        result: report.outcome,
        eta: report.eta_used,
        c: report.c_used,
        bound: report.theoretical_bound,
        bound_terms: report.bound_terms,
        preconditions: &report.precondition_checks,
        epsilon: privacy.epsilon,
        delta: privacy.delta,
        tau: privacy.tau,
        n,
        k,
        seed,
    };
    emit(output, &estimate_body(&doc, output.format))?;
    Ok(match report.outcome {
        ReleaseOutcome::Value(_) => ExitCode::SUCCESS,
        ReleaseOutcome::NoReply => ExitCode::from(3),
    })
}

fn family_spec(family: FamilyArg, p: &[f64]) -> Result<DistributionSpec, Failure> {
    let want = match family {
        FamilyArg::StudentT => 3,
        _ => 2,
    };
    if p.len() != want {
        return Err(ptrdp_core::Error::UnsupportedFamilyParameters(format!(
            "expected {want} comma-separated family parameters, got {}",
            p.len()
        ))
        .into());
    }
    Ok(match family {
        FamilyArg::Normal => DistributionSpec::normal(p[0], p[1])?,
        FamilyArg::StudentT => DistributionSpec::student_t(p[0], p[1], p[2])?,
        FamilyArg::Pareto => DistributionSpec::centered_pareto(p[0], p[1])?,
        FamilyArg::Lognormal => DistributionSpec::lognormal(p[0], p[1])?,
    })
}

#[derive(Serialize)]
struct AuditDoc<'a> {
    schema_version: u32,
    command: &'a str,
    preset: &'a str,
    /// Privacy level the mechanism is proven to satisfy, `(epsilon, delta)`.
    guarantee: (f64, f64),
    report: &'a audit::AuditReport,
}

fn run_audit(preset: AuditPreset, epsilon: f64, delta: f64, trials: usize, seed: u64, output: &OutputArgs) -> Result<ExitCode, Failure> {
    let budget = PrivacyBudget::new(epsilon, delta)?;
    let preset = match preset {
        AuditPreset::LaplaceSum => Preset::LaplaceSum,
        AuditPreset::PtrGaussian => Preset::PtrGaussian,
        AuditPreset::PtrLaplace => Preset::PtrLaplace,
    };
    let PresetAudit { guarantee, report, .. } = presets::run_preset(preset, budget, trials, seed)?;
    let name = preset.name();
    let body = match output.format {
        OutputFormat::Json => to_json(&AuditDoc {
            schema_version: SCHEMA_VERSION,
            command: "audit",
            preset: name,
            guarantee,
            report: &report,
        }),
        OutputFormat::Csv => {
            let mut s = String::from("bin,count_x,count_x_prime\n");
            for (i, (a, b)) in report.counts_x.iter().zip(&report.counts_x_prime).enumerate() {
                let label = if i + 1 == report.counts_x.len() { "no_reply".to_string() } else { i.to_string() };
                s.push_str(&format!("{label},{a},{b}\n"));
            }
            s.push_str(&format!("epsilon_hat,{},\n", report.epsilon_hat));
            s
        }
    };
    emit(output, &body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulateDoc<'a> {
    schema_version: u32,
    command: &'a str,
    report: &'a ptrdp_core::simlab::ExperimentReport,
}

fn run(command: &Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Median {
            privacy,
            input,
            r,
            l,
            output,
        } => {
            let (budget, conf) = budget(privacy)?;
            let profile = MedianProfile::new(*r, *l)?;
            let seed = output.seed.unwrap_or_else(rand::random);
            let s = load(input)?;
            let report = dp_median(&s, profile, budget, conf, &mut NoiseSource::new(seed, 0))?;
            finish_estimate("median", report, privacy, s.len(), None, seed, output)
        }
        Command::Mean {
            privacy,
            input,
            moments,
            output,
        }
        | Command::MeanDensity {
            privacy,
            input,
            moments,
            output,
        } => {
            let density = matches!(command, Command::MeanDensity { .. });
            let (budget, conf) = budget(privacy)?;
            let profile = MomentProfile::new(0.0, moments.sigma, moments.rho)?;
            let opts = mom_options(moments)?;
            let seed = output.seed.unwrap_or_else(rand::random);
            let s = load(input)?;
            let mut noise = NoiseSource::new(seed, 0);
            let (name, report) = if density {
                ("mean-density", dp_mom_density(&s, profile, moments.k, budget, conf, &opts, &mut noise)?)
            } else {
                ("mean", dp_mom(&s, profile, moments.k, budget, conf, &opts, &mut noise)?)
            };
            finish_estimate(name, report, privacy, s.len(), Some(moments.k), seed, output)
        }
        Command::Simulate {
            privacy,
            family,
            family_params,
            estimator,
            n,
            k,
            trials,
            moment_check,
            output,
        } => {
            let (budget, conf) = budget(privacy)?;
            let spec = family_spec(*family, family_params)?;
            let kind = match estimator {
                EstimatorArg::Median => EstimatorKind::Median,
                EstimatorArg::Mom => EstimatorKind::Mom,
                EstimatorArg::MomDensity => EstimatorKind::MomDensity,
            };
            let mut setup = EstimatorSetup::new(kind, *k, budget, conf);
            setup.mom.moment_condition = check_mode(*moment_check);
            let seed = output.seed.unwrap_or_else(rand::random);
            let report = run_coverage(&spec, &CoverageConfig::new(setup, *n, *trials, seed))?;
            let body = match output.format {
                OutputFormat::Json => to_json(&SimulateDoc {
                    schema_version: SCHEMA_VERSION,
                    command: "simulate",
                    report: &report,
                }),
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
            };
            emit(output, &body)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit {
            preset,
            epsilon,
            delta,
            trials,
            output,
        } => {
            let seed = output.seed.unwrap_or_else(rand::random);
            run_audit(*preset, *epsilon, *delta, *trials, seed, output)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Median { .. } => "median",
        Command::Mean { .. } => "mean",
        Command::MeanDensity { .. } => "mean-density",
        Command::Simulate { .. } => "simulate",
        Command::Audit { .. } => "audit",
    }
}

fn output_of(c: &Command) -> &OutputArgs {
    match c {
        Command::Median { output, .. }
        | Command::Mean { output, .. }
        | Command::MeanDensity { output, .. }
        | Command::Simulate { output, .. }
        | Command::Audit { output, .. } => output,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => code,
        Err(failure) => {
            let message = failure.message();
            eprintln!("ptrdp: {message}");
            let doc = ErrorDoc {
                schema_version: SCHEMA_VERSION,
                command: command_name(&cli.command),
                error: ErrorBody {
                    kind: failure.kind(),
                    message,
                },
            };
            let out = output_of(&cli.command);
            if matches!(out.format, OutputFormat::Json) {
                // Best effort: the failure may itself be an unwritable --out.
                let _ = emit(out, &to_json(&doc));
            }
            ExitCode::from(failure.code())
        }
    }
}
