//! `pnf` — differentially private selection from the command line.
//!
//! One binary covers the whole toolkit: drawing samples, exact selection
//! probabilities and error analysis, worst-case curves, LP optimality
//! certificates, histogram experiments, and the verification suites.
//!
//! Conventions:
//! - candidate indices printed by the CLI are 1-based (the library is
//!   0-based);
//! - every float is rounded to 12 significant digits before printing;
//! - identical invocations produce byte-identical output;
//! - exit codes: 0 success, 1 verification failure, 2 user/input error,
//!   3 internal/solver error.

mod render;

use std::path::{Path, PathBuf};
use std::process;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pnf::analysis::{
    check_dominance, error_ccdf, error_ratio, expected_error, lower_bound, verify_privacy_on_lattice,
    verify_regularity, worst_case_curve,
};
use pnf::exact::{
    pmf_exponential, pmf_noisy_max, pmf_pf_dp, pmf_pf_permutation, pmf_pf_subsets,
    verify_recurrence, QuadratureConfig, SelectionDistribution,
};
use pnf::mechanisms::{
    sample_exponential, sample_noisy_max, sample_permute_and_flip_with, stream_rng, DrawStreams,
    PfOrder, DEFAULT_SEED,
};
use pnf::optimality::{build_lp, certify_optimality, pareto_probe, OptimalityReport, ParetoProbe};
use pnf::tasks::{
    epsilon_for_target_error, load_histogram, power_law_histogram, sweep_experiment,
    task_expected_error, write_experiment_csv, Histogram, Task,
};
use pnf::{Error, Mechanism, PrivacyParams, QualityScores, Result};

use render::{flatten_json, fmt12, sig12, to_json, CsvBuilder};

#[derive(Parser)]
#[command(
    name = "pnf",
    version,
    about = "Differentially private selection: permute-and-flip, exponential mechanism, \
             report-noisy-max, exact distributions, and optimality certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Privacy budget ε (must be positive).
    #[arg(long = "eps", global = true, default_value_t = 1.0, value_name = "EPS")]
    epsilon: f64,

    /// Score sensitivity Δ (must be positive).
    #[arg(long, global = true, default_value_t = 1.0, value_name = "SENS")]
    delta: f64,

    /// Scores are monotonic in the database: coins use exponent ε/Δ instead
    /// of ε/(2Δ).
    #[arg(long, global = true)]
    monotonic: bool,

    /// RNG seed; draw i uses stream i of this seed.
    #[arg(long, global = true, env = "PNF_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output format. Tabular commands (worstcase, experiment) default to
    /// csv, report-shaped ones to json; verify prints text unless json is
    /// requested.
    #[arg(long, global = true, value_enum, value_name = "FMT")]
    format: Option<FormatArg>,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw selections and report the exact selection probabilities.
    Sample {
        /// Inline scores, comma-separated (e.g. --scores -2,0).
        #[arg(long, allow_hyphen_values = true, value_name = "LIST")]
        scores: Option<String>,

        /// File with one score per line.
        #[arg(long, value_name = "PATH", conflicts_with = "scores")]
        scores_file: Option<PathBuf>,

        /// Mechanism to sample from.
        #[arg(long = "mech", value_enum, default_value_t = MechArg::Pf)]
        mechanism: MechArg,

        /// Number of draws.
        #[arg(long = "n", default_value_t = 1, value_name = "COUNT")]
        count: u64,

        /// Candidate traversal for permute-and-flip (the two are
        /// distributionally identical).
        #[arg(long, value_enum, default_value_t = OrderArg::Shuffle)]
        order: OrderArg,
    },

    /// Exact pmfs, expected errors, error CCDFs, and the dominance verdict.
    Analyze {
        /// Inline scores, comma-separated.
        #[arg(long, allow_hyphen_values = true, value_name = "LIST")]
        scores: Option<String>,

        /// File with one score per line.
        #[arg(long, value_name = "PATH", conflicts_with = "scores")]
        scores_file: Option<PathBuf>,

        /// Also compute the report-noisy-max pmf by quadrature.
        #[arg(long)]
        with_rnm: bool,
    },

    /// Worst-case expected error over two-level instances, as a curve in the
    /// coin value p, with maximizers and the matching bounds.
    Worstcase {
        /// Number of candidates (at least 2).
        #[arg(long, default_value_t = 2)]
        n: usize,

        /// Comma-separated coin values p in (0, 1]; defaults to a 61-point
        /// logarithmic grid from 1e-6 to 1.
        #[arg(long, value_name = "LIST")]
        grid: Option<String>,
    },

    /// Solve the selection LP on the score lattice {0,…,-hk}ⁿ and certify
    /// how close permute-and-flip and the exponential mechanism come.
    Optimality {
        /// Number of candidates.
        #[arg(long)]
        n: usize,

        /// Lattice depth (scores live on k+1 levels).
        #[arg(long)]
        k: usize,

        /// Write the LP in CPLEX LP text format to this path.
        #[arg(long, value_name = "PATH")]
        export_lp: Option<PathBuf>,

        /// Ask the LP to beat permute-and-flip on one coordinate, written
        /// VECTOR:LEVEL (0-based indices into the canonical lattice list).
        #[arg(long, value_name = "V:L")]
        probe: Option<String>,

        /// Required improvement margin for --probe.
        #[arg(long, default_value_t = 1e-4, value_name = "MARGIN")]
        probe_margin: f64,
    },

    /// Expected-error sweep over histogram tasks (mode, median), or ε
    /// inversion for a target error. Counting tasks have sensitivity 1.
    Experiment {
        /// Histogram CSV with header `bin,count`.
        #[arg(long, value_name = "PATH")]
        histogram: Option<PathBuf>,

        /// Use the synthetic power-law fixture with this many bins instead
        /// of a file (default 1024 when neither source is given).
        #[arg(long, value_name = "BINS", conflicts_with = "histogram")]
        power_law: Option<usize>,

        /// Comma-separated ε grid for the sweep.
        #[arg(long = "eps-grid", value_name = "LIST")]
        eps_grid: Option<String>,

        /// Restrict to one task (default: both).
        #[arg(long, value_enum)]
        task: Option<TaskArg>,

        /// Solve for the ε that achieves --target instead of sweeping.
        #[arg(long)]
        find_eps: bool,

        /// Target expected error for --find-eps.
        #[arg(long, value_name = "ERR")]
        target: Option<f64>,

        /// Mechanism for --find-eps.
        #[arg(long = "mech", value_enum, default_value_t = MechArg::Pf)]
        mechanism: MechArg,
    },

    /// Run a verification suite; exits 0 iff every check passes.
    Verify {
        /// Which suite to run.
        #[arg(value_enum)]
        suite: SuiteArg,

        /// Candidates, for the lattice-based suites (privacy, dual).
        #[arg(long, default_value_t = 3)]
        n: usize,

        /// Lattice depth, for the lattice-based suites.
        #[arg(long, default_value_t = 3)]
        k: usize,

        /// Trial count, for the randomized suites.
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechArg {
    Pf,
    Em,
    Rnm,
}

impl From<MechArg> for Mechanism {
    fn from(arg: MechArg) -> Self {
        match arg {
            MechArg::Pf => Mechanism::PermuteAndFlip,
            MechArg::Em => Mechanism::Exponential,
            MechArg::Rnm => Mechanism::ReportNoisyMax,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Shuffle,
    Draw,
}

impl OrderArg {
    fn as_str(self) -> &'static str {
        match self {
            OrderArg::Shuffle => "shuffle",
            OrderArg::Draw => "draw",
        }
    }
}

impl From<OrderArg> for PfOrder {
    fn from(arg: OrderArg) -> Self {
        match arg {
            OrderArg::Shuffle => PfOrder::Shuffle,
            OrderArg::Draw => PfOrder::WithoutReplacement,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Mode,
    Median,
}

impl From<TaskArg> for Task {
    fn from(arg: TaskArg) -> Self {
        match arg {
            TaskArg::Mode => Task::Mode,
            TaskArg::Median => Task::Median,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Privacy,
    Regularity,
    Recurrence,
    Oracles,
    Dominance,
    Dual,
}

impl SuiteArg {
    fn as_str(self) -> &'static str {
        match self {
            SuiteArg::Privacy => "privacy",
            SuiteArg::Regularity => "regularity",
            SuiteArg::Recurrence => "recurrence",
            SuiteArg::Oracles => "oracles",
            SuiteArg::Dominance => "dominance",
            SuiteArg::Dual => "dual",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::LengthMismatch(..)
        | Error::OutOfRange { .. }
        | Error::Parse { .. } => 2,
        Error::TooLarge { .. }
        | Error::Accuracy { .. }
        | Error::Solver(_)
        | Error::SamplerStalled(_)
        | Error::Io(_) => 3,
    }
}

fn run(cli: Cli) -> Result<i32> {
    let Cli {
        command,
        epsilon,
        delta,
        monotonic,
        seed,
        format,
        output,
    } = cli;
    let params = PrivacyParams::new(epsilon, delta)?.with_monotonic(monotonic);

    let (body, code) = match command {
        Command::Sample {
            scores,
            scores_file,
            mechanism,
            count,
            order,
        } => {
            let scores = load_scores(scores, scores_file)?;
            let body = cmd_sample(
                &scores,
                &params,
                mechanism.into(),
                order,
                count,
                seed,
                format.unwrap_or(FormatArg::Json),
            )?;
            (body, 0)
        }
        Command::Analyze {
            scores,
            scores_file,
            with_rnm,
        } => {
            let scores = load_scores(scores, scores_file)?;
            let body = cmd_analyze(&scores, &params, with_rnm, format.unwrap_or(FormatArg::Json))?;
            (body, 0)
        }
        Command::Worstcase { n, grid } => {
            let body = cmd_worstcase(n, &params, grid, format.unwrap_or(FormatArg::Csv))?;
            (body, 0)
        }
        Command::Optimality {
            n,
            k,
            export_lp,
            probe,
            probe_margin,
        } => {
            let body = cmd_optimality(
                n,
                k,
                &params,
                export_lp.as_deref(),
                probe.as_deref(),
                probe_margin,
                format.unwrap_or(FormatArg::Json),
            )?;
            (body, 0)
        }
        Command::Experiment {
            histogram,
            power_law,
            eps_grid,
            task,
            find_eps,
            target,
            mechanism,
        } => {
            let body = cmd_experiment(
                histogram.as_deref(),
                power_law,
                eps_grid,
                task.map(Task::from),
                find_eps,
                target,
                mechanism.into(),
                format.unwrap_or(FormatArg::Csv),
            )?;
            (body, 0)
        }
        Command::Verify { suite, n, k, trials } => cmd_verify(suite, n, k, trials, &params, seed, format)?,
    };

    write_output(output.as_deref(), &body)?;
    Ok(code)
}

fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => {
            use std::io::Write as _;
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Input parsing

fn parse_float_list(list: &str, what: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|token| {
            let token = token.trim();
            token
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad {what} `{token}`: {e}")))
        })
        .collect()
}

fn load_scores(inline: Option<String>, file: Option<PathBuf>) -> Result<QualityScores> {
    let values = match (inline, file) {
        (Some(list), None) => parse_float_list(&list, "score")?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let mut values = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let token = line.trim();
                if token.is_empty() {
                    continue;
                }
                values.push(token.parse::<f64>().map_err(|e| Error::Parse {
                    line: i as u64 + 1,
                    msg: format!("bad score `{token}`: {e}"),
                })?);
            }
            values
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "provide --scores or --scores-file".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --scores with --scores-file"),
    };
    QualityScores::new(values)
}

// ---------------------------------------------------------------------------
// sample

#[derive(Serialize)]
struct SampleOutput<'a> {
    mechanism: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<&'static str>,
    epsilon: f64,
    delta: f64,
    monotonic: bool,
    seed: u64,
    count: u64,
    scores: &'a [f64],
    /// 1-based selected candidates, one per draw.
    indices: Vec<usize>,
    /// Exact selection probabilities for these flags.
    pmf: Vec<f64>,
}

fn exact_pmf(scores: &QualityScores, params: &PrivacyParams, mechanism: Mechanism) -> Result<Vec<f64>> {
    let dist = match mechanism {
        Mechanism::PermuteAndFlip => pmf_pf_dp(scores, params),
        Mechanism::Exponential => pmf_exponential(scores, params),
        Mechanism::ReportNoisyMax => {
            pmf_noisy_max(scores, params, &QuadratureConfig::default())?.0
        }
    };
    Ok(dist.probs().to_vec())
}

fn cmd_sample(
    scores: &QualityScores,
    params: &PrivacyParams,
    mechanism: Mechanism,
    order: OrderArg,
    count: u64,
    seed: u64,
    format: FormatArg,
) -> Result<String> {
    let pmf = exact_pmf(scores, params, mechanism)?;
    let mut streams = DrawStreams::new(seed);
    let mut indices = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let mut rng = streams.next_rng();
        let picked = match mechanism {
            Mechanism::PermuteAndFlip => {
                sample_permute_and_flip_with(scores, params, order.into(), &mut rng).index
            }
            Mechanism::Exponential => sample_exponential(scores, params, &mut rng).index,
            Mechanism::ReportNoisyMax => sample_noisy_max(scores, params, &mut rng).index,
        };
        indices.push(picked + 1);
    }

    match format {
        FormatArg::Json => to_json(&SampleOutput {
            mechanism: mechanism.as_str(),
            order: (mechanism == Mechanism::PermuteAndFlip).then(|| order.as_str()),
            epsilon: params.epsilon(),
            delta: params.sensitivity(),
            monotonic: params.monotonic(),
            seed,
            count,
            scores: scores.values(),
            indices,
            pmf,
        }),
        FormatArg::Csv => {
            let mut out = String::new();
            out.push_str(&format!(
                "# mechanism={} epsilon={} delta={} monotonic={} seed={}\n",
                mechanism.as_str(),
                fmt12(params.epsilon()),
                fmt12(params.sensitivity()),
                params.monotonic(),
                seed,
            ));
            let joined: Vec<String> = scores.values().iter().map(|&q| fmt12(q)).collect();
            out.push_str(&format!("# scores {}\n", joined.join(" ")));
            let joined: Vec<String> = pmf.iter().map(|&p| fmt12(p)).collect();
            out.push_str(&format!("# pmf {}\n", joined.join(" ")));
            let mut csv = CsvBuilder::new();
            csv.record(["draw", "index"])?;
            for (i, idx) in indices.iter().enumerate() {
                csv.record([(i + 1).to_string(), idx.to_string()])?;
            }
            out.push_str(&csv.finish()?);
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Serialize)]
struct PmfSet {
    pf: Vec<f64>,
    em: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rnm: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct ErrorSet {
    pf: f64,
    em: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rnm: Option<f64>,
}

#[derive(Serialize)]
struct CcdfPoint {
    t: f64,
    pf: f64,
    em: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rnm: Option<f64>,
}

#[derive(Serialize)]
struct DominanceOut {
    max_ccdf_violation: f64,
    holds: bool,
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    epsilon: f64,
    delta: f64,
    monotonic: bool,
    scores: &'a [f64],
    pmf: PmfSet,
    expected_error: ErrorSet,
    /// Exponential-mechanism error over permute-and-flip error (0/0 is 1).
    em_pf_ratio: f64,
    ccdf: Vec<CcdfPoint>,
    dominance: DominanceOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    rnm_quadrature_defect: Option<f64>,
}

fn cmd_analyze(
    scores: &QualityScores,
    params: &PrivacyParams,
    with_rnm: bool,
    format: FormatArg,
) -> Result<String> {
    let pf = pmf_pf_dp(scores, params);
    let em = pmf_exponential(scores, params);
    let rnm: Option<(SelectionDistribution, f64)> = if with_rnm {
        Some(pmf_noisy_max(scores, params, &QuadratureConfig::default())?)
    } else {
        None
    };

    let mut thresholds = scores.gaps();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    thresholds.dedup();
    let ccdf = thresholds
        .iter()
        .map(|&t| {
            Ok(CcdfPoint {
                t,
                pf: error_ccdf(&pf, scores, t)?,
                em: error_ccdf(&em, scores, t)?,
                rnm: match &rnm {
                    Some((dist, _)) => Some(error_ccdf(dist, scores, t)?),
                    None => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dominance = check_dominance(scores, params)?;
    let rnm_error = match &rnm {
        Some((dist, _)) => Some(expected_error(dist, scores)?),
        None => None,
    };

    let output = AnalyzeOutput {
        epsilon: params.epsilon(),
        delta: params.sensitivity(),
        monotonic: params.monotonic(),
        scores: scores.values(),
        pmf: PmfSet {
            pf: pf.probs().to_vec(),
            em: em.probs().to_vec(),
            rnm: rnm.as_ref().map(|(dist, _)| dist.probs().to_vec()),
        },
        expected_error: ErrorSet {
            pf: dominance.pf_expected_error,
            em: dominance.em_expected_error,
            rnm: rnm_error,
        },
        em_pf_ratio: dominance.em_pf_ratio,
        ccdf,
        dominance: DominanceOut {
            max_ccdf_violation: dominance.max_ccdf_violation,
            holds: dominance.holds,
        },
        rnm_quadrature_defect: rnm.as_ref().map(|&(_, defect)| defect),
    };

    match format {
        FormatArg::Json => to_json(&output),
        FormatArg::Csv => {
            let mut out = String::new();
            let rnm_part = match output.expected_error.rnm {
                Some(e) => format!(" rnm={}", fmt12(e)),
                None => String::new(),
            };
            out.push_str(&format!(
                "# expected_error pf={} em={}{} em_pf_ratio={}\n",
                fmt12(output.expected_error.pf),
                fmt12(output.expected_error.em),
                rnm_part,
                fmt12(output.em_pf_ratio),
            ));
            out.push_str(&format!(
                "# dominance holds={} max_ccdf_violation={}\n",
                output.dominance.holds,
                fmt12(output.dominance.max_ccdf_violation),
            ));
            let mut csv = CsvBuilder::new();
            let gaps = scores.gaps();
            if output.pmf.rnm.is_some() {
                csv.record(["index", "score", "gap", "pf", "em", "rnm"])?;
            } else {
                csv.record(["index", "score", "gap", "pf", "em"])?;
            }
            for r in 0..scores.len() {
                let mut row = vec![
                    (r + 1).to_string(),
                    fmt12(scores.values()[r]),
                    fmt12(gaps[r]),
                    fmt12(output.pmf.pf[r]),
                    fmt12(output.pmf.em[r]),
                ];
                if let Some(rnm_probs) = &output.pmf.rnm {
                    row.push(fmt12(rnm_probs[r]));
                }
                csv.record(row)?;
            }
            out.push_str(&csv.finish()?);
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// worstcase

#[derive(Serialize)]
struct GridPoint {
    p: f64,
    em_error: f64,
    pf_error: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct Extremum {
    p: f64,
    value: f64,
}

#[derive(Serialize)]
struct LowerBoundOut {
    /// (Δ/(2ε))·ln n, the distribution-free floor.
    bound: f64,
    /// Exact worst-case error at the uniform coin p = 1/n.
    exact_at_uniform: f64,
    ratio_to_upper: f64,
}

#[derive(Serialize)]
struct WorstcaseOutput {
    n: usize,
    epsilon: f64,
    delta: f64,
    monotonic: bool,
    grid: Vec<GridPoint>,
    em_max: Extremum,
    pf_max: Extremum,
    /// (ln n)/scale, the distribution-free ceiling on expected error.
    expected_error_upper: f64,
    lower_bound: LowerBoundOut,
}

fn default_coin_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=60)
        .map(|i| 10f64.powf(-6.0 * (1.0 - i as f64 / 60.0)))
        .collect();
    grid[60] = 1.0;
    grid
}

fn cmd_worstcase(
    n: usize,
    params: &PrivacyParams,
    grid_arg: Option<String>,
    format: FormatArg,
) -> Result<String> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "worstcase needs at least two candidates (got {n})"
        )));
    }
    let grid = match grid_arg {
        Some(list) => {
            let grid = parse_float_list(&list, "grid point")?;
            for &p in &grid {
                if !(p.is_finite() && p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "grid point p ({p}) must lie in (0, 1]"
                    )));
                }
            }
            grid
        }
        None => default_coin_grid(),
    };

    let em = worst_case_curve(Mechanism::Exponential, n, params, &grid)?;
    let pf = worst_case_curve(Mechanism::PermuteAndFlip, n, params, &grid)?;
    let bound = lower_bound(n, params)?;
    let upper = (n as f64).ln() / params.scale();

    let points: Vec<GridPoint> = em
        .points
        .iter()
        .zip(&pf.points)
        .map(|(&(p, em_v), &(_, pf_v))| GridPoint {
            p,
            em_error: em_v,
            pf_error: pf_v,
            ratio: error_ratio(em_v, pf_v),
        })
        .collect();

    let output = WorstcaseOutput {
        n,
        epsilon: params.epsilon(),
        delta: params.sensitivity(),
        monotonic: params.monotonic(),
        grid: points,
        em_max: Extremum {
            p: em.maximizer.0,
            value: em.maximizer.1,
        },
        pf_max: Extremum {
            p: pf.maximizer.0,
            value: pf.maximizer.1,
        },
        expected_error_upper: upper,
        lower_bound: LowerBoundOut {
            bound: bound.bound,
            exact_at_uniform: bound.exact,
            ratio_to_upper: bound.ratio_to_upper,
        },
    };

    match format {
        FormatArg::Json => to_json(&output),
        FormatArg::Csv => {
            let mut csv = CsvBuilder::new();
            csv.record(["kind", "p", "em_error", "pf_error", "ratio", "value"])?;
            for pt in &output.grid {
                csv.record([
                    "grid".to_string(),
                    fmt12(pt.p),
                    fmt12(pt.em_error),
                    fmt12(pt.pf_error),
                    fmt12(pt.ratio),
                    String::new(),
                ])?;
            }
            csv.record([
                "max-em".to_string(),
                fmt12(output.em_max.p),
                fmt12(output.em_max.value),
                String::new(),
                String::new(),
                fmt12(output.em_max.value),
            ])?;
            csv.record([
                "max-pf".to_string(),
                fmt12(output.pf_max.p),
                String::new(),
                fmt12(output.pf_max.value),
                String::new(),
                fmt12(output.pf_max.value),
            ])?;
            csv.record([
                "bound-upper".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                fmt12(output.expected_error_upper),
            ])?;
            csv.record([
                "lower-bound".to_string(),
                fmt12(1.0 / n as f64),
                String::new(),
                fmt12(output.lower_bound.exact_at_uniform),
                String::new(),
                fmt12(output.lower_bound.bound),
            ])?;
            csv.finish()
        }
    }
}

// ---------------------------------------------------------------------------
// optimality

#[derive(Serialize)]
struct OptimalityOutput {
    #[serde(flatten)]
    report: OptimalityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<ParetoProbe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_file: Option<String>,
}

fn parse_probe(spec: &str) -> Result<(usize, u32)> {
    let bad = || {
        Error::InvalidArgument(format!(
            "probe must be written VECTOR:LEVEL (got `{spec}`)"
        ))
    };
    let (vector, level) = spec.split_once(':').ok_or_else(bad)?;
    Ok((
        vector.trim().parse().map_err(|_| bad())?,
        level.trim().parse().map_err(|_| bad())?,
    ))
}

fn cmd_optimality(
    n: usize,
    k: usize,
    params: &PrivacyParams,
    export_lp: Option<&Path>,
    probe: Option<&str>,
    probe_margin: f64,
    format: FormatArg,
) -> Result<String> {
    let report = certify_optimality(n, k, params)?;

    let probe = match probe {
        Some(spec) => {
            let (vector, level) = parse_probe(spec)?;
            Some(pareto_probe(n, k, params, vector, level, probe_margin)?)
        }
        None => None,
    };

    let lp_file = match export_lp {
        Some(path) => {
            let lp = build_lp(n, k, params)?;
            std::fs::write(path, lp.to_lp_format())?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let output = OptimalityOutput {
        report,
        probe,
        lp_file,
    };

    match format {
        FormatArg::Json => to_json(&output),
        FormatArg::Csv => {
            let mut tree = serde_json::to_value(&output)
                .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
            round_tree(&mut tree);
            let mut csv = CsvBuilder::new();
            csv.record(["key", "value"])?;
            for (key, value) in flatten_json(&tree) {
                csv.record([key, value])?;
            }
            csv.finish()
        }
    }
}

/// Rounds every float in an already-serialized tree; used by the key/value
/// CSV rendering, which bypasses `to_json`.
fn round_tree(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(rounded) = n
                    .as_f64()
                    .and_then(|f| serde_json::Number::from_f64(sig12(f)))
                {
                    *value = serde_json::Value::Number(rounded);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_tree),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// experiment

const DEFAULT_EPS_GRID: [f64; 7] = [1e-7, 3e-7, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4];
const DEFAULT_POWER_LAW_BINS: usize = 1024;

#[derive(Serialize)]
struct FindEpsOutput {
    task: Task,
    mechanism: Mechanism,
    bins: usize,
    target_error: f64,
    epsilon: f64,
    achieved_error: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    histogram: Option<&Path>,
    power_law: Option<usize>,
    eps_grid: Option<String>,
    task: Option<Task>,
    find_eps: bool,
    target: Option<f64>,
    mechanism: Mechanism,
    format: FormatArg,
) -> Result<String> {
    let histogram: Histogram = match histogram {
        Some(path) => load_histogram(path)?,
        None => power_law_histogram(power_law.unwrap_or(DEFAULT_POWER_LAW_BINS))?,
    };

    if find_eps {
        let target = target.ok_or_else(|| {
            Error::InvalidArgument("--find-eps needs --target".into())
        })?;
        let task = task.unwrap_or(Task::Mode);
        let epsilon = epsilon_for_target_error(&histogram, task, mechanism, target)?;
        let achieved = task_expected_error(&histogram, task, mechanism, epsilon)?;
        let output = FindEpsOutput {
            task,
            mechanism,
            bins: histogram.len(),
            target_error: target,
            epsilon,
            achieved_error: achieved,
        };
        return match format {
            FormatArg::Json => to_json(&output),
            FormatArg::Csv => {
                let mut csv = CsvBuilder::new();
                csv.record(["task", "mechanism", "bins", "target_error", "epsilon", "achieved_error"])?;
                csv.record([
                    output.task.to_string(),
                    output.mechanism.to_string(),
                    output.bins.to_string(),
                    fmt12(output.target_error),
                    fmt12(output.epsilon),
                    fmt12(output.achieved_error),
                ])?;
                csv.finish()
            }
        };
    }

    let grid = match eps_grid {
        Some(list) => parse_float_list(&list, "epsilon")?,
        None => DEFAULT_EPS_GRID.to_vec(),
    };
    let mut rows = sweep_experiment(&histogram, &grid)?;
    if let Some(task) = task {
        rows.retain(|row| row.task == task);
    }
    for row in &mut rows {
        row.epsilon = sig12(row.epsilon);
        row.expected_error = sig12(row.expected_error);
        row.ratio_vs_pf = sig12(row.ratio_vs_pf);
    }

    match format {
        FormatArg::Json => to_json(&rows),
        FormatArg::Csv => {
            let mut buffer = Vec::new();
            write_experiment_csv(&rows, &mut buffer)?;
            String::from_utf8(buffer)
                .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))
        }
    }
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    suite: &'static str,
    pass: bool,
    checks: Vec<Check>,
}

fn cmd_verify(
    suite: SuiteArg,
    n: usize,
    k: usize,
    trials: usize,
    params: &PrivacyParams,
    seed: u64,
    format: Option<FormatArg>,
) -> Result<(String, i32)> {
    let checks = match suite {
        SuiteArg::Privacy => suite_privacy(n, k, params)?,
        SuiteArg::Regularity => suite_regularity(params, trials, seed),
        SuiteArg::Recurrence => suite_recurrence(params, trials, seed)?,
        SuiteArg::Oracles => suite_oracles(params, trials, seed)?,
        SuiteArg::Dominance => suite_dominance(params, trials, seed)?,
        SuiteArg::Dual => suite_dual(n, k, params)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let code = i32::from(!pass);

    let body = match format {
        Some(FormatArg::Json) => to_json(&VerifyOutput {
            suite: suite.as_str(),
            pass,
            checks,
        })?,
        _ => {
            let mut out = String::new();
            for check in &checks {
                let verdict = if check.pass { "PASS" } else { "FAIL" };
                out.push_str(&format!("{}: {} ({})\n", check.name, verdict, check.detail));
            }
            let verdict = if pass { "PASS" } else { "FAIL" };
            let passed = checks.iter().filter(|c| c.pass).count();
            out.push_str(&format!(
                "suite {}: {} ({}/{} checks passed)\n",
                suite.as_str(),
                verdict,
                passed,
                checks.len(),
            ));
            out
        }
    };
    Ok((body, code))
}

fn suite_privacy(n: usize, k: usize, params: &PrivacyParams) -> Result<Vec<Check>> {
    let report = verify_privacy_on_lattice(n, k, params)?;
    Ok(vec![
        Check::new(
            "log-ratio bound",
            report.holds,
            format!(
                "max |log ratio| {} vs eps {} over {} pairs",
                fmt12(report.max_log_ratio),
                fmt12(report.bound),
                report.pairs_checked,
            ),
        ),
        Check::new(
            "non-maximal tightness",
            report.max_tightness_violation <= 1e-9,
            format!(
                "max |log ratio - eps| {}",
                fmt12(report.max_tightness_violation)
            ),
        ),
    ])
}

fn suite_regularity(params: &PrivacyParams, trials: usize, seed: u64) -> Vec<Check> {
    let report = verify_regularity(params, trials, seed);
    vec![
        Check::new(
            "permutation equivariance",
            report.max_symmetry_deviation == 0.0,
            format!(
                "max deviation {} over {} trials (exact comparison)",
                fmt12(report.max_symmetry_deviation),
                report.trials,
            ),
        ),
        Check::new(
            "dyadic shift invariance",
            report.max_shift_deviation == 0.0,
            format!(
                "max deviation {} (exact comparison)",
                fmt12(report.max_shift_deviation)
            ),
        ),
        Check::new(
            "score monotonicity",
            report.max_monotonicity_violation <= 1e-12,
            format!(
                "max probability drop {}",
                fmt12(report.max_monotonicity_violation)
            ),
        ),
    ]
}

fn suite_recurrence(params: &PrivacyParams, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut below = 0.0f64;
    let mut maximal = 0.0f64;
    let mut cases = 0usize;
    for i in 0..trials {
        let mut rng = stream_rng(seed, i as u64);
        let n = 2 + (i % 7);
        let scores = QualityScores::random_uniform(&mut rng, n, -6.0, 0.0)?;
        let report = verify_recurrence(&scores, params);
        below = below.max(report.max_case1_violation);
        maximal = maximal.max(report.max_case2_violation);
        cases += report.cases_checked;
    }
    Ok(vec![
        Check::new(
            "strictly-below case",
            below <= 1e-9,
            format!("max residual {} over {} cases", fmt12(below), cases),
        ),
        Check::new(
            "maximal case",
            maximal <= 1e-9,
            format!("max residual {}", fmt12(maximal)),
        ),
    ])
}

fn suite_oracles(params: &PrivacyParams, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut route_deviation = 0.0f64;
    for i in 0..trials {
        let mut rng = stream_rng(seed, i as u64);
        let n = 2 + (i % 8);
        let scores = QualityScores::random_uniform(&mut rng, n, -8.0, 0.0)?;
        let by_permutations = pmf_pf_permutation(&scores, params)?;
        let by_subsets = pmf_pf_subsets(&scores, params)?;
        let by_recurrence = pmf_pf_dp(&scores, params);
        for r in 0..n {
            let a = by_permutations.probs()[r];
            let b = by_subsets.probs()[r];
            let c = by_recurrence.probs()[r];
            route_deviation = route_deviation.max((a - b).abs()).max((a - c).abs());
        }
    }

    let mut em_deviation = 0.0f64;
    let mut rnm_deviation = 0.0f64;
    for gap in [0.5, 1.0, 2.0, 4.0] {
        let scores = QualityScores::new(vec![-gap, 0.0])?;
        let p = (-params.scale() * gap).exp();
        let em = pmf_exponential(&scores, params);
        em_deviation = em_deviation.max((em.probs()[0] - p / (1.0 + p)).abs());

        let (rnm, _) = pmf_noisy_max(&scores, params, &QuadratureConfig::default())?;
        let t = gap * params.scale();
        let closed = (-t).exp() * (0.5 + t / 4.0);
        rnm_deviation = rnm_deviation.max((rnm.probs()[0] - closed).abs());
    }

    Ok(vec![
        Check::new(
            "permute-and-flip route agreement",
            route_deviation <= 1e-10,
            format!(
                "max componentwise deviation {} over {} instances",
                fmt12(route_deviation),
                trials,
            ),
        ),
        Check::new(
            "exponential two-candidate closed form",
            em_deviation <= 1e-12,
            format!("max deviation {}", fmt12(em_deviation)),
        ),
        Check::new(
            "noisy-max two-candidate closed form",
            rnm_deviation <= 1e-6,
            format!("max deviation {}", fmt12(rnm_deviation)),
        ),
    ])
}

fn suite_dominance(params: &PrivacyParams, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut violation = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for i in 0..trials {
        let mut rng = stream_rng(seed, i as u64);
        let n = 2 + (i % 9);
        let scores = QualityScores::random_uniform(&mut rng, n, -6.0, 0.0)?;
        let report = check_dominance(&scores, params)?;
        violation = violation.max(report.max_ccdf_violation);
        min_ratio = min_ratio.min(report.em_pf_ratio);
    }
    Ok(vec![
        Check::new(
            "ccdf dominance",
            violation <= 1e-10,
            format!(
                "max ccdf excess {} over {} instances",
                fmt12(violation),
                trials,
            ),
        ),
        Check::new(
            "expected-error ratio at least one",
            min_ratio >= 1.0 - 1e-12,
            format!("min em/pf ratio {}", fmt12(min_ratio)),
        ),
    ])
}

fn suite_dual(n: usize, k: usize, params: &PrivacyParams) -> Result<Vec<Check>> {
    let report = certify_optimality(n, k, params)?;
    let gap_tolerance = 1e-6 * report.lp_error.max(1.0);
    let mut checks = vec![
        Check::new(
            "permute-and-flip feasible in the LP",
            report.pf_residual <= 1e-9,
            format!("max constraint residual {}", fmt12(report.pf_residual)),
        ),
        Check::new(
            "recurrence dual certificate",
            report.dual.holds,
            format!(
                "duality gap {}, max recurrence residual {}, max bound violation {}",
                fmt12(report.dual.duality_gap),
                fmt12(report.dual.max_recurrence_residual),
                fmt12(report.dual.max_bound_violation),
            ),
        ),
        Check::new(
            "simplex strong duality",
            report.strong_duality_gap <= gap_tolerance,
            format!("|rhs·y - optimum| = {}", fmt12(report.strong_duality_gap)),
        ),
    ];
    if report.pf_exactly_optimal {
        checks.push(Check::new(
            "permute-and-flip matches the LP optimum",
            (report.pf_ratio - 1.0).abs() <= 1e-6,
            format!("pf/lp error ratio {}", fmt12(report.pf_ratio)),
        ));
    }
    Ok(checks)
}
