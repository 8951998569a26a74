//! Command-line front end: load tabular data, run screening / selection /
//! cross-validated selection / simulation / benchmarks, emit JSON and text
//! tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod data;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use siri::bench::{
    format_screening, format_table, run_table, screening_proportion, ScreenMethod, ScreeningConfig,
    SelectMethod,
};
use siri::cv::{cv_select, Measure};
use siri::select::{
    alpha_grid, default_budget, siri as run_siri, sis_star, HyperParams, SelectionState,
    ThresholdPair, ThresholdSpec,
};
use siri::sim::{generate, PredictorLaw, ScenarioId, ScenarioSpec};
use siri::Dataset;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<siri::Error> for CliError {
    fn from(e: siri::Error) -> Self {
        match e {
            siri::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            siri::Error::EmptySample | siri::Error::UnknownClass(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "siri", version, about = "Variable selection via sliced inverse regression")]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with one header row; all cells numeric.
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Slice count for continuous responses.
    #[arg(long, default_value_t = 5)]
    slices: usize,
    /// Treat the response as class labels (one slice per distinct value).
    #[arg(long)]
    discrete: bool,
    /// Quantile-normalize predictor columns before any statistics.
    #[arg(long)]
    qnorm: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Rank predictors by the marginal augmented statistic.
    Screen {
        #[command(flatten)]
        data: DataArgs,
        /// How many top variables to keep (default floor(n / ln n)).
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Stepwise selection with fixed hyperparameters.
    Select {
        #[command(flatten)]
        data: DataArgs,
        /// Direction count for the homoscedastic step (0 skips it).
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Significance level for both threshold grids
        /// (default 1 - 0.1/p).
        #[arg(long)]
        alpha: Option<f64>,
        /// Fixed addition threshold overriding --alpha (scaled statistic).
        #[arg(long, requires = "nu_d")]
        nu_a: Option<f64>,
        /// Fixed deletion threshold overriding --alpha.
        #[arg(long, requires = "nu_a")]
        nu_d: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Cross-validated hyperparameter selection, then a final selection.
    CvSelect {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated q grid.
        #[arg(long, default_value = "0,1,2,3,4")]
        q_grid: String,
        /// Comma-separated alpha grid (default: the five-point 1 - c/p grid).
        #[arg(long)]
        alpha_grid: Option<String>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// ce (classification error) or ae (mean absolute error).
        #[arg(long, default_value = "ce")]
        measure: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Draw a dataset from a generative scenario.
    Simulate {
        /// Scenario id: 0.1..0.3, 1.1..1.3, 2.1..2.6.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        p: usize,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Draw predictors from Uniform(-2,2) instead of the Gaussian design.
        #[arg(long)]
        uniform: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Truth sidecar path (default: <out>.truth.json).
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Monte-Carlo FP/FN tables or screening proportions.
    Bench {
        /// table (FP/FN) or screening.
        #[arg(long, default_value = "table")]
        kind: String,
        /// Comma-separated scenario ids.
        #[arg(long)]
        scenarios: String,
        /// Comma-separated methods: siri-ce, siri-ae, fixed.
        #[arg(long, default_value = "siri-ae")]
        methods: String,
        /// q for the fixed method.
        #[arg(long, default_value_t = 0)]
        q: usize,
        /// alpha for the fixed method (default 1 - 0.1/p).
        #[arg(long)]
        alpha: Option<f64>,
        /// Screening ranking methods: sis-star, iterative, correlation.
        #[arg(long, default_value = "iterative")]
        screen_methods: String,
        #[arg(long, default_value_t = 50)]
        r: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        p: usize,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own message; keep usage failures on exit 1.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(t) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("warning: thread pool already initialized");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_data(args: &DataArgs) -> Result<Dataset, CliError> {
    let data = data::load_csv(&args.input, &args.response)?;
    if args.qnorm {
        data::quantile_normalize(&data)
    } else {
        Ok(data)
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e))),
        None => {
            println!("{}", text);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct NamedIndex {
    index: usize,
    name: String,
}

fn named(data: &Dataset, indices: &[usize]) -> Vec<NamedIndex> {
    indices
        .iter()
        .map(|&j| NamedIndex { index: j, name: data.name(j).to_string() })
        .collect()
}

#[derive(Serialize)]
struct ScreenRow {
    index: usize,
    name: String,
    scaled: f64,
    p_value: f64,
    failed: bool,
}

#[derive(Serialize)]
struct ScreenOutput {
    command: &'static str,
    n: usize,
    p: usize,
    slices: usize,
    budget: usize,
    ranking: Vec<ScreenRow>,
}

#[derive(Serialize)]
struct SelectOutput {
    command: &'static str,
    n: usize,
    p: usize,
    hyper: HyperParams,
    selected: Vec<NamedIndex>,
    screened: Vec<usize>,
    trace: Vec<siri::select::TraceEvent>,
}

#[derive(Serialize)]
struct CvSelectOutput {
    command: &'static str,
    n: usize,
    p: usize,
    cv: siri::cv::CvReport,
    chosen_q: usize,
    chosen_alpha: f64,
    selected: Vec<NamedIndex>,
    screened: Vec<usize>,
    trace: Vec<siri::select::TraceEvent>,
}

#[derive(Serialize)]
struct TruthSidecar {
    scenario: String,
    n: usize,
    p: usize,
    rho: f64,
    sigma: f64,
    law: PredictorLaw,
    seed: u64,
    truth: Vec<NamedIndex>,
}

fn parse_measure(s: &str) -> Result<Measure, CliError> {
    match s {
        "ce" => Ok(Measure::Ce),
        "ae" => Ok(Measure::Ae),
        other => Err(CliError::Usage(format!("unknown measure {:?} (want ce or ae)", other))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| CliError::Usage(format!("bad {} entry {:?}", what, t)))
        })
        .collect()
}

fn scenario_spec(
    id_str: &str,
    n: Option<usize>,
    p: usize,
    rho: Option<f64>,
    sigma: Option<f64>,
    uniform: bool,
    seed: u64,
) -> Result<ScenarioSpec, CliError> {
    let id: ScenarioId = id_str
        .parse()
        .map_err(|e: siri::Error| CliError::Usage(e.to_string()))?;
    let mut spec = ScenarioSpec::with_defaults(id, p, seed);
    if let Some(n) = n {
        spec.n = n;
    }
    if let Some(r) = rho {
        spec.rho = r;
    }
    if let Some(s) = sigma {
        spec.sigma = s;
    }
    if uniform {
        spec.law = PredictorLaw::Uniform;
    }
    Ok(spec)
}

fn build_hyper(
    data: &Dataset,
    slices: usize,
    discrete: bool,
    q: usize,
    alpha: Option<f64>,
    fixed: Option<ThresholdPair>,
    budget: Option<usize>,
) -> HyperParams {
    let alpha = alpha.unwrap_or_else(|| alpha_grid(data.p())[2]);
    let mut hyper = HyperParams::with_alpha(q, alpha);
    hyper.slices = slices;
    hyper.discrete_response = discrete;
    hyper.budget = budget;
    if let Some(pair) = fixed {
        hyper.hom_thresholds = ThresholdSpec::Fixed(pair);
        hyper.aug_thresholds = ThresholdSpec::Fixed(pair);
    }
    hyper
}

fn state_outputs(state: &SelectionState) -> (Vec<usize>, Vec<siri::select::TraceEvent>) {
    (state.screened.clone(), state.trace.clone())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Screen { data: args, budget } => {
            let data = load_data(&args)?;
            let scheme = if args.discrete {
                siri::slicing::build_slices_discrete(&data.response().to_vec())?
            } else {
                siri::slicing::build_slices(&data.response().to_vec(), args.slices)?
            };
            let b = budget.unwrap_or_else(|| default_budget(data.n(), data.p()));
            let scores = sis_star(&data, &scheme, b)?;
            let ranking = scores
                .iter()
                .map(|s| ScreenRow {
                    index: s.index,
                    name: data.name(s.index).to_string(),
                    scaled: s.scaled,
                    p_value: s.p_value,
                    failed: s.failed,
                })
                .collect();
            emit_json(
                &ScreenOutput {
                    command: "screen",
                    n: data.n(),
                    p: data.p(),
                    slices: scheme.h(),
                    budget: b,
                    ranking,
                },
                args.out.as_deref(),
            )
        }
        Command::Select { data: args, q, alpha, nu_a, nu_d, budget } => {
            let data = load_data(&args)?;
            let fixed = match (nu_a, nu_d) {
                (Some(a), Some(d)) => Some(ThresholdPair { nu_a: a, nu_d: d }),
                _ => None,
            };
            let hyper = build_hyper(&data, args.slices, args.discrete, q, alpha, fixed, budget);
            let state = run_siri(&data, &hyper)?;
            let (screened, trace) = state_outputs(&state);
            emit_json(
                &SelectOutput {
                    command: "select",
                    n: data.n(),
                    p: data.p(),
                    hyper,
                    selected: named(&data, &state.selected),
                    screened,
                    trace,
                },
                args.out.as_deref(),
            )
        }
        Command::CvSelect { data: args, q_grid, alpha_grid: ag, folds, measure, seed, budget } => {
            let data = load_data(&args)?;
            let qs: Vec<usize> = parse_list(&q_grid, "q grid")?;
            let alphas: Vec<f64> = match ag {
                Some(s) => parse_list(&s, "alpha grid")?,
                None => alpha_grid(data.p()).to_vec(),
            };
            let measure = parse_measure(&measure)?;
            let mut base = HyperParams::with_alpha(0, 0.999);
            base.slices = args.slices;
            base.discrete_response = args.discrete;
            base.budget = budget;
            let (hyper, report, state) =
                cv_select(&data, &qs, &alphas, &base, folds, measure, seed)?;
            let (screened, trace) = state_outputs(&state);
            emit_json(
                &CvSelectOutput {
                    command: "cv-select",
                    n: data.n(),
                    p: data.p(),
                    cv: report,
                    chosen_q: hyper.q,
                    chosen_alpha: match hyper.aug_thresholds {
                        ThresholdSpec::Alpha(a) => a,
                        ThresholdSpec::Fixed(_) => f64::NAN,
                    },
                    selected: named(&data, &state.selected),
                    screened,
                    trace,
                },
                args.out.as_deref(),
            )
        }
        Command::Simulate { scenario, n, p, rho, sigma, uniform, seed, out, truth_out } => {
            let spec = scenario_spec(&scenario, n, p, rho, sigma, uniform, seed)?;
            let (data, truth) = generate(&spec)?;
            data::write_csv(&data, "y", &out)?;
            let sidecar_path = truth_out.unwrap_or_else(|| {
                let mut s = out.as_os_str().to_owned();
                s.push(".truth.json");
                PathBuf::from(s)
            });
            emit_json(
                &TruthSidecar {
                    scenario: spec.id.to_string(),
                    n: spec.n,
                    p: spec.p,
                    rho: spec.rho,
                    sigma: spec.sigma,
                    law: spec.law,
                    seed: spec.seed,
                    truth: named(&data, &truth),
                },
                Some(&sidecar_path),
            )
        }
        Command::Bench {
            kind,
            scenarios,
            methods,
            q,
            alpha,
            screen_methods,
            r,
            n,
            p,
            rho,
            sigma,
            budget,
            seed,
            out,
        } => {
            let ids: Vec<String> = scenarios.split(',').map(|s| s.trim().to_string()).collect();
            let specs: Vec<ScenarioSpec> = ids
                .iter()
                .map(|id| scenario_spec(id, Some(n), p, rho, sigma, false, seed))
                .collect::<Result<_, _>>()?;
            match kind.as_str() {
                "table" => {
                    let alpha = alpha.unwrap_or_else(|| alpha_grid(p)[2]);
                    let ms: Vec<SelectMethod> = methods
                        .split(',')
                        .map(|m| match m.trim() {
                            "siri-ce" => Ok(SelectMethod::CvCe),
                            "siri-ae" => Ok(SelectMethod::CvAe),
                            "fixed" => Ok(SelectMethod::Fixed { q, alpha }),
                            other => Err(CliError::Usage(format!("unknown method {:?}", other))),
                        })
                        .collect::<Result<_, _>>()?;
                    let reports = run_table(&specs, &ms, r, seed)?;
                    print!("{}", format_table(&reports));
                    if out.is_some() {
                        emit_json(&reports, out.as_deref())?;
                    }
                    Ok(())
                }
                "screening" => {
                    let methods: Vec<ScreenMethod> = screen_methods
                        .split(',')
                        .map(|m| match m.trim() {
                            "sis-star" => Ok(ScreenMethod::SisStar),
                            "iterative" => Ok(ScreenMethod::Iterative),
                            "correlation" => Ok(ScreenMethod::Correlation),
                            other => {
                                Err(CliError::Usage(format!("unknown screen method {:?}", other)))
                            }
                        })
                        .collect::<Result<_, _>>()?;
                    let cfg = ScreeningConfig { budget, ..Default::default() };
                    let mut reports = Vec::new();
                    for spec in &specs {
                        for &m in &methods {
                            reports.push(screening_proportion(spec, m, &cfg, r, seed)?);
                        }
                    }
                    print!("{}", format_screening(&reports));
                    if out.is_some() {
                        emit_json(&reports, out.as_deref())?;
                    }
                    Ok(())
                }
                other => Err(CliError::Usage(format!(
                    "unknown bench kind {:?} (want table or screening)",
                    other
                ))),
            }
        }
    }
}
