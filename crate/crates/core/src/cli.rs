//! `mz-absorber` command-line surface.
//!
//! Settings come from built-in defaults, then an optional `--config` file of
//! `key = value` lines, then command-line flags. Config keys match the
//! [`ExperimentSpec`] field names, with the scenario fields flattened:
//!
//! ```text
//! model = coherent-fixed
//! fixed_theta = 0.785398163397
//! weight_a2 = 0.5
//! weight_b2 = 0.5
//! blocked_in_a = none
//! blocked_in_b = upper
//! n_trials = 1000000
//! seed = 42
//! output_format = json
//! output_path = out.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{discriminate, sweep_theta, DiscriminationReport, SweepRow};
use crate::error::{Error, Result};
use crate::interferometer::Arm;
use crate::monte_carlo::{run_trials, TrialSummary, RNG_ALGORITHM};
use crate::scenario::{AnalyticResult, Model, ScenarioConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_TRIALS: u64 = 1_000_000;
const DEFAULT_POINTS: usize = 360;
const DEFAULT_CONFIDENCE: f64 = 0.99;
const SIG_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "mz-absorber",
    version,
    about = "Superposed-absorber Mach-Zehnder simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble detector-D probability of a model.
    Analytic(ScenarioArgs),
    /// Monte Carlo click counts.
    Simulate(ScenarioArgs),
    /// Detector-D probability across theta in [0, 2pi).
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Decide between collapse (1/8) and persistence (3/8) from observed counts.
    Discriminate {
        #[arg(long)]
        clicks: u64,
        /// Number of photons fired.
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List the available models.
    Models {
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub model: Option<String>,
    /// Fixed phase for coherent-fixed, in radians.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::config(
                "output_format",
                format!("`{s}` is neither csv nor json"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub n_trials: u64,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

const CONFIG_KEYS: [&str; 10] = [
    "model",
    "fixed_theta",
    "weight_a2",
    "weight_b2",
    "blocked_in_a",
    "blocked_in_b",
    "n_trials",
    "seed",
    "output_format",
    "output_path",
];

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", i + 1), "expected `key = value`"))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown configuration key"));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_arm(key: &str, value: &str) -> Result<Option<Arm>> {
    match value {
        "none" => Ok(None),
        "upper" => Ok(Some(Arm::Upper)),
        "lower" => Ok(Some(Arm::Lower)),
        _ => Err(Error::config(
            key,
            format!("`{value}` is not one of none, upper, lower"),
        )),
    }
}

impl ExperimentSpec {
    /// Defaults, then the config file, then flags; validated before return.
    pub fn resolve(args: &ScenarioArgs, default_format: OutputFormat) -> Result<Self> {
        let mut kv = match &args.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        let mut set = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(key.to_string(), v);
            }
        };
        set("model", args.model.clone());
        set("fixed_theta", args.theta.map(|t| t.to_string()));
        set("n_trials", args.trials.map(|n| n.to_string()));
        set("seed", args.seed.map(|s| s.to_string()));
        set(
            "output_format",
            args.output.format.map(|f| format!("{f:?}").to_lowercase()),
        );
        set(
            "output_path",
            args.output.out.as_ref().map(|p| p.display().to_string()),
        );

        let get = |key: &str| kv.get(key).map(String::as_str);
        let model: Model = get("model")
            .ok_or_else(|| Error::config("model", "no model given"))?
            .parse()?;
        let mut scenario = ScenarioConfig::new(model);
        if let Some(v) = get("fixed_theta") {
            scenario.fixed_theta = Some(parse_value("fixed_theta", v)?);
        }
        if let Some(v) = get("weight_a2") {
            scenario.weight_a2 = parse_value("weight_a2", v)?;
            if get("weight_b2").is_none() {
                scenario.weight_b2 = 1.0 - scenario.weight_a2;
            }
        }
        if let Some(v) = get("weight_b2") {
            scenario.weight_b2 = parse_value("weight_b2", v)?;
            if get("weight_a2").is_none() {
                scenario.weight_a2 = 1.0 - scenario.weight_b2;
            }
        }
        if let Some(v) = get("blocked_in_a") {
            scenario.geometry.blocked_in_a = parse_arm("blocked_in_a", v)?;
        }
        if let Some(v) = get("blocked_in_b") {
            scenario.geometry.blocked_in_b = parse_arm("blocked_in_b", v)?;
        }
        scenario.validate()?;

        let n_trials = match get("n_trials") {
            Some(v) => parse_value("n_trials", v)?,
            None => DEFAULT_TRIALS,
        };
        if n_trials == 0 {
            return Err(Error::config("n_trials", "at least one trial is required"));
        }
        Ok(Self {
            scenario,
            n_trials,
            seed: get("seed")
                .map(|v| parse_value("seed", v))
                .transpose()?
                .unwrap_or(0),
            output_format: get("output_format")
                .map(str::parse)
                .transpose()?
                .unwrap_or(default_format),
            output_path: get("output_path").map(PathBuf::from),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    fn new(model: Option<Model>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            model,
            rng: None,
            seed: None,
        }
    }

    fn with_rng(mut self, seed: u64) -> Self {
        self.rng = Some(RNG_ALGORITHM.to_string());
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOutput {
    pub result: AnalyticResult,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub summary: TrialSummary,
    pub analytic_reference: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub model: ScenarioConfig,
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminateOutput {
    pub report: DiscriminationReport,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub id: String,
    pub description: String,
}

/// Fixed or scientific notation with [`SIG_DIGITS`] significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:?}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (SIG_DIGITS as i32 - 1 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = SIG_DIGITS - 1)
    }
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output records serialize");
    s.push('\n');
    s
}

pub fn cmd_analytic(spec: &ExperimentSpec) -> Result<AnalyticOutput> {
    Ok(AnalyticOutput {
        result: spec.scenario.analytic()?,
        provenance: Provenance::new(Some(spec.scenario.model)),
    })
}

pub fn cmd_simulate(spec: &ExperimentSpec) -> Result<SimulateOutput> {
    let summary = run_trials(&spec.scenario, spec.n_trials, spec.seed)?;
    Ok(SimulateOutput {
        analytic_reference: spec.scenario.analytic()?.probability,
        summary,
        provenance: Provenance::new(Some(spec.scenario.model)).with_rng(spec.seed),
    })
}

pub fn cmd_sweep(spec: &ExperimentSpec, points: usize) -> Result<SweepOutput> {
    Ok(SweepOutput {
        model: spec.scenario,
        rows: sweep_theta(&spec.scenario, points)?,
        provenance: Provenance::new(Some(spec.scenario.model)),
    })
}

pub fn cmd_discriminate(clicks: u64, n: u64, confidence: f64) -> Result<DiscriminateOutput> {
    Ok(DiscriminateOutput {
        report: discriminate(clicks, n, confidence)?,
        provenance: Provenance::new(None),
    })
}

pub fn models() -> Vec<ModelEntry> {
    Model::ALL
        .iter()
        .map(|m| ModelEntry {
            id: m.id().to_string(),
            description: m.description().to_string(),
        })
        .collect()
}

/// Rendered command output and where it should go (`None` is stdout).
pub struct Rendered {
    pub text: String,
    pub path: Option<PathBuf>,
}

pub fn render(cli: &Cli) -> Result<Rendered> {
    let (text, path) = match &cli.command {
        Command::Analytic(args) => {
            let spec = ExperimentSpec::resolve(args, OutputFormat::Json)?;
            let out = cmd_analytic(&spec)?;
            let text = match spec.output_format {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => csv(
                    &["model", "probability", "method"],
                    [vec![
                        out.result.model.model.to_string(),
                        format_number(out.result.probability),
                        serde_json::to_value(out.result.method)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                    ]],
                ),
            };
            (text, spec.output_path)
        }
        Command::Simulate(args) => {
            let spec = ExperimentSpec::resolve(args, OutputFormat::Json)?;
            let out = cmd_simulate(&spec)?;
            let s = &out.summary;
            let text = match spec.output_format {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => csv(
                    &[
                        "model",
                        "n_trials",
                        "clicks_d",
                        "clicks_c",
                        "absorbed",
                        "estimate_d",
                        "std_err_d",
                        "seed",
                        "analytic_reference",
                    ],
                    [vec![
                        s.model.model.to_string(),
                        s.n_trials.to_string(),
                        s.clicks_d.to_string(),
                        s.clicks_c.to_string(),
                        s.absorbed.to_string(),
                        format_number(s.estimate_d),
                        format_number(s.std_err_d),
                        s.seed.to_string(),
                        format_number(out.analytic_reference),
                    ]],
                ),
            };
            (text, spec.output_path)
        }
        Command::Sweep { scenario, points } => {
            let spec = ExperimentSpec::resolve(scenario, OutputFormat::Csv)?;
            let out = cmd_sweep(&spec, points.unwrap_or(DEFAULT_POINTS))?;
            let text = match spec.output_format {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => csv(
                    &["theta", "probability"],
                    out.rows
                        .iter()
                        .map(|r| vec![format_number(r.theta), format_number(r.probability)]),
                ),
            };
            (text, spec.output_path)
        }
        Command::Discriminate {
            clicks,
            trials,
            confidence,
            output,
        } => {
            let out = cmd_discriminate(*clicks, *trials, *confidence)?;
            let r = &out.report;
            let text = match output.format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => csv(
                    &[
                        "clicks",
                        "n",
                        "p0",
                        "p1",
                        "log_likelihood_ratio",
                        "wilson_lo",
                        "wilson_hi",
                        "confidence",
                        "verdict",
                        "confound_theta",
                        "confound_probability",
                        "caveat",
                    ],
                    [vec![
                        r.clicks.to_string(),
                        r.n.to_string(),
                        format_number(r.p0),
                        format_number(r.p1),
                        format_number(r.log_likelihood_ratio),
                        format_number(r.wilson_interval.lo),
                        format_number(r.wilson_interval.hi),
                        format_number(r.confidence),
                        serde_json::to_value(r.verdict)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                        format_number(r.confound.theta),
                        format_number(r.confound.probability),
                        r.confound.caveat.clone(),
                    ]],
                ),
            };
            (text, output.out.clone())
        }
        Command::Models { output } => {
            let entries = models();
            let text = match output.format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Json => json(&entries),
                OutputFormat::Csv => csv(
                    &["model", "description"],
                    entries
                        .iter()
                        .map(|e| vec![e.id.clone(), e.description.clone()]),
                ),
            };
            (text, output.out.clone())
        }
    };
    Ok(Rendered { text, path })
}

fn write_output(rendered: &Rendered) -> Result<()> {
    match &rendered.path {
        Some(path) => write_file(path, &rendered.text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(rendered.text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Run the command and map failures onto exit codes.
pub fn execute(cli: &Cli) -> i32 {
    match render(cli).and_then(|r| write_output(&r)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_IO
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::DeviceGeometry;

    fn args(model: &str) -> ScenarioArgs {
        ScenarioArgs {
            model: Some(model.to_string()),
            ..Default::default()
        }
    }

    #[test]
    fn config_file_parsing() {
        let kv =
            parse_config("# comment\nmodel = coherent-fixed\n\nfixed_theta = 0.5 # trailing\n")
                .unwrap();
        assert_eq!(kv["model"], "coherent-fixed");
        assert_eq!(kv["fixed_theta"], "0.5");
        let err = parse_config("colour = blue").unwrap_err();
        assert!(err.to_string().contains("colour"));
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("mz-absorber-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.conf");
        fs::write(
            &path,
            "model = collapsed\nn_trials = 10\nseed = 5\nweight_a2 = 0.25\n",
        )
        .unwrap();
        let a = ScenarioArgs {
            config: Some(path.clone()),
            seed: Some(9),
            ..Default::default()
        };
        let spec = ExperimentSpec::resolve(&a, OutputFormat::Json).unwrap();
        assert_eq!(spec.n_trials, 10);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.scenario.weight_b2, 0.75);
        let a = ScenarioArgs {
            model: Some("blocked-both".into()),
            ..a
        };
        let spec = ExperimentSpec::resolve(&a, OutputFormat::Json).unwrap();
        assert_eq!(spec.scenario.geometry, DeviceGeometry::BLOCKED_BOTH);
        fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn resolve_errors_name_the_key() {
        let err =
            ExperimentSpec::resolve(&ScenarioArgs::default(), OutputFormat::Json).unwrap_err();
        assert!(err.to_string().contains("`model`"));
        let err = ExperimentSpec::resolve(&args("coherent-fixed"), OutputFormat::Json).unwrap_err();
        assert!(err.to_string().contains("`fixed_theta`"));
        let a = ScenarioArgs {
            trials: Some(0),
            ..args("collapsed")
        };
        let err = ExperimentSpec::resolve(&a, OutputFormat::Json).unwrap_err();
        assert!(err.to_string().contains("`n_trials`"));
        let err = ExperimentSpec::resolve(&args("cat"), OutputFormat::Json).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.125), "0.125000000000");
        assert_eq!(format_number(0.021446609406726238), "0.0214466094067");
        assert_eq!(format_number(3.0), "3.00000000000");
        assert_eq!(format_number(1.5e-20), "1.50000000000e-20");
        assert_eq!(format_number(0.0), "0.0");
    }

    #[test]
    fn text_columns_have_no_commas() {
        for m in models() {
            assert!(!m.description.contains(','), "{}", m.id);
        }
        let r = cmd_discriminate(125, 1000, 0.99).unwrap();
        assert!(!r.report.confound.caveat.contains(','));
    }
}
