use serde::Serialize;

use herman_core::chain::{self, max_tokens, ChainLimits, SolvedState};
use herman_core::experiments::{cost_bound, time_bound, time_bound_lower};
use herman_core::rational::{ratio_string, Rational};
use herman_core::ring::{gap_vector, run_with, trial_rng, RingState, RunConfig, Trajectory};
use herman_core::steg::{scaled_upper_bound, steg_upper_bound, teg_count};
use herman_core::{estimate, verify, GapVector, HermanError};

use crate::{
    BoundsArgs, ExactArgs, Format, LimitArgs, Placement, SimulateArgs, StartArgs, StegArgs,
    SweepArgs, VerifyArgs, VerifyTarget,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<HermanError> for CliError {
    fn from(e: HermanError) -> Self {
        match e {
            HermanError::StepLimit { .. }
            | HermanError::TrialStepLimit { .. }
            | HermanError::SingularSystem => CliError::Failure(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub struct Output {
    pub text: String,
    pub verified: bool,
}

fn json<T: Serialize>(value: &T, verified: bool) -> Result<Output, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))?;
    text.push('\n');
    Ok(Output { text, verified })
}

fn csv_rows<T: Serialize>(rows: &[T], verified: bool) -> Result<Output, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(Output {
        text: String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))?,
        verified,
    })
}

pub fn parse_gaps(s: &str, n: Option<u64>) -> Result<GapVector, CliError> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad gap list {s:?}: {e}")))?;
    let gaps = GapVector::canonical(parts)?;
    if let Some(n) = n {
        if gaps.total() != n {
            return Err(HermanError::SumMismatch {
                expected: n,
                actual: gaps.total(),
            }
            .into());
        }
    }
    Ok(gaps)
}

fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad list {s:?}: {e}")))
}

fn start_state(start: &StartArgs, seed: u64) -> Result<RingState, CliError> {
    match (&start.gaps, start.placement) {
        (Some(g), _) => Ok(RingState::from_gaps(&parse_gaps(g, start.n)?)?),
        (None, Some(placement)) => {
            let n = start
                .n
                .ok_or_else(|| CliError::Usage("--placement needs --n".into()))?;
            let m = start.tokens.unwrap_or(0);
            if m == 0 || m % 2 == 0 {
                return Err(CliError::Usage(format!("--tokens must be odd, got {m}")));
            }
            Ok(match placement {
                Placement::Equal => RingState::equally_spaced(n, m)?,
                // Stream u64::MAX keeps placement draws apart from the trial streams.
                Placement::Random => RingState::random(n, m, &mut trial_rng(seed, u64::MAX))?,
            })
        }
        (None, None) => Err(CliError::Usage("give --gaps or --placement".into())),
    }
}

#[derive(Serialize)]
struct StegReport {
    m: usize,
    n: u64,
    gaps: GapVector,
    steg: u128,
    teg_count: u64,
    simplex_bound: Option<String>,
    scaled_bound: Option<String>,
    attains_bound: bool,
}

pub fn steg(args: &StegArgs) -> Result<Output, CliError> {
    let gaps = parse_gaps(&args.gaps, None)?;
    let m = gaps.len();
    let (simplex, scaled) = if m >= 3 {
        (
            Some(steg_upper_bound(m)?),
            Some(scaled_upper_bound(m, gaps.total())?),
        )
    } else {
        (None, None)
    };
    let attains_bound = scaled.as_ref().is_some_and(|b| *b == gaps.steg_rational());
    json(
        &StegReport {
            m,
            n: gaps.total(),
            steg: gaps.steg(),
            teg_count: teg_count(m)?,
            simplex_bound: simplex.as_ref().map(ratio_string),
            scaled_bound: scaled.as_ref().map(ratio_string),
            attains_bound,
            gaps,
        },
        true,
    )
}

/// One row of the experiment table; the JSON output mirrors these columns.
#[derive(Serialize)]
struct ExperimentRow {
    n: u64,
    gaps: String,
    trials: u64,
    seed: u64,
    mean_time: f64,
    se_time: f64,
    mean_cost: f64,
    se_cost: f64,
    exact_time: Option<String>,
    exact_cost: String,
    time_bound: f64,
    cost_bound: String,
}

#[derive(Serialize)]
struct SimulateReport {
    #[serde(flatten)]
    row: ExperimentRow,
    tokens: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<Trajectory>,
}

fn exact_time(gaps: &GapVector, max_states: u64) -> Option<Rational> {
    let m = gaps.len();
    if m == 1 {
        return Some(Rational::from_integer(0.into()));
    }
    let limits = ChainLimits {
        max_states,
        ..ChainLimits::default()
    };
    let solution = chain::solve(gaps.total(), m, &limits).ok()?;
    solution.lookup(gaps).map(|(time, _)| time)
}

pub fn simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let state = start_state(&args.start, args.seed)?;
    let gaps = gap_vector(&state);
    let n = state.n();
    let m = state.token_count();
    let config = RunConfig {
        max_steps: args.max_steps,
        record_steps: false,
    };
    let (time, cost) = estimate(&state, args.trials, args.seed, &config)?;
    let exact_cost = gaps.steg_rational() * Rational::new(4.into(), n.into());
    let gap_list: Vec<String> = gaps.components().iter().map(u64::to_string).collect();
    let row = ExperimentRow {
        n,
        gaps: gap_list.join(","),
        trials: args.trials,
        seed: args.seed,
        mean_time: time.mean,
        se_time: time.std_error,
        mean_cost: cost.mean,
        se_cost: cost.std_error,
        exact_time: exact_time(&gaps, args.exact_states)
            .as_ref()
            .map(ratio_string),
        exact_cost: ratio_string(&exact_cost),
        time_bound: time_bound(n),
        cost_bound: ratio_string(&cost_bound(n, m)),
    };
    match args.format {
        Format::Csv => csv_rows(&[row], true),
        Format::Json => {
            // With one trial, trial 0 is the plain seeded run.
            let trajectory = if args.trials == 1 {
                Some(run_with(&state, args.seed, 0, &config)?)
            } else {
                None
            };
            json(
                &SimulateReport {
                    row,
                    tokens: state.tokens().to_vec(),
                    trajectory,
                },
                true,
            )
        }
    }
}

fn limits(args: &LimitArgs) -> ChainLimits {
    ChainLimits {
        max_states: args.max_states,
        max_m: args.max_m,
    }
}

#[derive(Serialize)]
struct ExactRow {
    #[serde(flatten)]
    state: SolvedState,
    cost_identity: bool,
}

#[derive(Serialize)]
struct ExactCsvRow {
    n: u64,
    gaps: String,
    m: usize,
    steg: u128,
    expected_time: String,
    expected_cost: String,
    cost_identity: bool,
}

#[derive(Serialize)]
struct ExactReport {
    n: u64,
    states: Vec<ExactRow>,
}

pub fn exact(args: &ExactArgs) -> Result<Output, CliError> {
    let n = args.n;
    let limits = limits(&args.limits);
    let states: Vec<SolvedState> = match (&args.gaps, args.all) {
        (Some(g), _) => {
            let gaps = parse_gaps(g, Some(n))?;
            if gaps.len() == 1 {
                return Err(CliError::Usage("a single token is already stable".into()));
            }
            let solution = chain::solve(n, gaps.len(), &limits)?;
            let key = chain::CanonicalState::new(&gaps)?;
            solution
                .states
                .into_iter()
                .filter(|s| &s.gaps == key.gaps())
                .collect()
        }
        (None, true) => chain::solve(n, max_tokens(n), &limits)?.states,
        (None, false) => return Err(CliError::Usage("give --gaps or --all".into())),
    };
    let verified = states.iter().all(SolvedState::cost_identity_holds);
    match args.format {
        Format::Json => json(
            &ExactReport {
                n,
                states: states
                    .into_iter()
                    .map(|state| ExactRow {
                        cost_identity: state.cost_identity_holds(),
                        state,
                    })
                    .collect(),
            },
            verified,
        ),
        Format::Csv => csv_rows(
            &states
                .iter()
                .map(|s| ExactCsvRow {
                    n,
                    gaps: s
                        .gaps
                        .components()
                        .iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(","),
                    m: s.m,
                    steg: s.steg,
                    expected_time: ratio_string(&s.expected_time),
                    expected_cost: ratio_string(&s.expected_cost),
                    cost_identity: s.cost_identity_holds(),
                })
                .collect::<Vec<_>>(),
            verified,
        ),
    }
}

fn single_m(args: &VerifyArgs, default: usize) -> Result<usize, CliError> {
    match &args.m {
        None => Ok(default),
        Some(s) => {
            let list = parse_list(s)?;
            match list.as_slice() {
                [m] => Ok(*m),
                _ => Err(CliError::Usage(format!(
                    "--m takes one value here, got {s:?}"
                ))),
            }
        }
    }
}

fn m_list(args: &VerifyArgs, default: &[usize]) -> Result<Vec<usize>, CliError> {
    args.m
        .as_deref()
        .map(parse_list)
        .unwrap_or_else(|| Ok(default.to_vec()))
}

fn n_range(args: &VerifyArgs, default_max: u64) -> std::ops::RangeInclusive<u64> {
    match args.n {
        Some(n) => n..=n,
        None => 1..=args.n_max.unwrap_or(default_max),
    }
}

pub fn verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let report = match args.target {
        VerifyTarget::MoveIdentity => {
            let m = single_m(args, 5)?;
            if args.exhaustive {
                let n_max = args.n.or(args.n_max).unwrap_or(9);
                verify::move_identity_exhaustive(m, n_max)?
            } else {
                verify::move_identity_random(
                    m,
                    n_range(args, 20),
                    args.samples.unwrap_or(100),
                    args.seed,
                )?
            }
        }
        VerifyTarget::Martingale => match &args.gaps {
            Some(g) => {
                let state = RingState::from_gaps(&parse_gaps(g, args.n)?)?;
                verify::martingale_state(&state, args.max_m)?
            }
            None => verify::martingale_random(
                &m_list(args, &[3, 5, 7])?,
                n_range(args, 30),
                args.samples.unwrap_or(50),
                args.seed,
                args.max_m,
            )?,
        },
        VerifyTarget::StegBound => verify::steg_bound(
            single_m(args, 7)?,
            args.samples.unwrap_or(10_000),
            args.seed,
        )?,
        VerifyTarget::Telescoping => {
            let config = RunConfig {
                max_steps: args.max_steps,
                record_steps: false,
            };
            verify::telescoping(
                n_range(args, 50),
                &m_list(args, &[3, 5, 7, 9])?,
                args.samples.unwrap_or(10_000),
                args.seed,
                &config,
            )?
        }
        VerifyTarget::CoinBijection => verify::coin_bijection(single_m(args, 5)?)?,
        VerifyTarget::Reduction => verify::reduction(
            single_m(args, 11)?,
            args.n.or(args.n_max).unwrap_or(40),
            args.samples.unwrap_or(1_000),
            args.seed,
        )?,
    };
    let passed = report.passed;
    json(&report, passed)
}

#[derive(Serialize)]
struct BoundsReport {
    n: u64,
    time_bound: f64,
    time_bound_lower: String,
    rows: Vec<herman_core::BoundRow>,
}

#[derive(Serialize)]
struct BoundsCsvRow {
    n: u64,
    s: u64,
    tokens: u64,
    cost_bound: String,
    time_bound: f64,
}

pub fn bounds(args: &BoundsArgs) -> Result<Output, CliError> {
    if args.n < 3 || args.s_max < 1 {
        return Err(CliError::Usage("need --n >= 3 and --s-max >= 1".into()));
    }
    let rows = herman_core::bound_table(args.n, args.s_max);
    match args.format {
        Format::Json => json(
            &BoundsReport {
                n: args.n,
                time_bound: time_bound(args.n),
                time_bound_lower: ratio_string(&time_bound_lower(args.n)),
                rows,
            },
            true,
        ),
        Format::Csv => csv_rows(
            &rows
                .iter()
                .map(|r| BoundsCsvRow {
                    n: args.n,
                    s: r.s,
                    tokens: r.tokens,
                    cost_bound: ratio_string(&r.cost_bound),
                    time_bound: r.time_bound,
                })
                .collect::<Vec<_>>(),
            true,
        ),
    }
}

pub fn sweep(args: &SweepArgs) -> Result<Output, CliError> {
    let report = chain::conjecture_sweep(args.n, &limits(&args.limits))?;
    let passed = report.passed();
    json(&report, passed)
}
