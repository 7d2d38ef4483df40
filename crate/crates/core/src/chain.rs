//! Exact expected stabilization time and cost.
//!
//! States of the protocol are quotiented by rotation of the ring, leaving
//! the Markov chain on rotation classes of canonical gap vectors. Because
//! the token count never increases, the chain is solved level by level:
//! values at lower token counts are known when a level's linear system
//! `(I - Q) h = r + P_lower h_lower` is assembled. Everything is exact.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HermanError, Result};
use crate::experiments::{cost_bound, time_bound_lower};
use crate::linalg;
use crate::rational::{frac, int, serde_ratio, Rational};
use crate::ring::{gap_step, CoinPattern, DEFAULT_MAX_EXHAUSTIVE_M};
use crate::steg::GapVector;

pub const DEFAULT_MAX_STATES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainLimits {
    pub max_states: u64,
    /// Largest token count whose `2^m` coin patterns are enumerated.
    pub max_m: usize,
}

impl Default for ChainLimits {
    fn default() -> Self {
        Self {
            max_states: DEFAULT_MAX_STATES,
            max_m: DEFAULT_MAX_EXHAUSTIVE_M,
        }
    }
}

/// A gap vector in its lexicographically least rotation.
///
/// Ordered by token count first, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalState {
    gaps: GapVector,
}

impl CanonicalState {
    pub fn new(gaps: &GapVector) -> Result<Self> {
        if !gaps.is_canonical() {
            return Err(HermanError::NonCanonical {
                index: gaps.components().iter().position(|&c| c == 0).unwrap_or(0) + 1,
            });
        }
        Ok(Self::from_canonical(gaps))
    }

    fn from_canonical(gaps: &GapVector) -> Self {
        let best = (1..gaps.len())
            .map(|r| gaps.rotate(r))
            .fold(gaps.clone(), |best, cand| {
                if cand.components() < best.components() {
                    cand
                } else {
                    best
                }
            });
        Self { gaps: best }
    }

    pub fn gaps(&self) -> &GapVector {
        &self.gaps
    }

    pub fn m(&self) -> usize {
        self.gaps.len()
    }

    pub fn n(&self) -> u64 {
        self.gaps.total()
    }

    pub fn is_absorbing(&self) -> bool {
        self.m() == 1
    }
}

impl Ord for CanonicalState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.m()
            .cmp(&other.m())
            .then_with(|| self.gaps.components().cmp(other.gaps.components()))
    }
}

impl PartialOrd for CanonicalState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn check_params(n: u64, m_max: usize) -> Result<()> {
    if n < 3 {
        return Err(HermanError::InvalidArgument(format!(
            "ring size {n} is below 3"
        )));
    }
    if m_max < 3 || m_max % 2 == 0 || m_max as u64 > n {
        return Err(HermanError::InvalidOddParameter("m_max", 3, m_max));
    }
    Ok(())
}

/// Largest odd token count that fits on `n` processors.
pub fn max_tokens(n: u64) -> usize {
    let n = n as usize;
    if n % 2 == 1 {
        n
    } else {
        n - 1
    }
}

/// Calls `f` on every composition of `n` into `m` positive parts, in
/// lexicographic order.
fn for_each_composition(n: u64, m: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(rest: u64, slots: usize, buf: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if slots == 1 {
            buf.push(rest);
            f(buf);
            buf.pop();
            return;
        }
        for part in 1..=rest - (slots as u64 - 1) {
            buf.push(part);
            rec(rest - part, slots - 1, buf, f);
            buf.pop();
        }
    }
    if m == 0 || (m as u64) > n {
        return;
    }
    rec(n, m, &mut Vec::with_capacity(m), f);
}

/// All rotation classes with `3 <= m <= m_max` odd tokens on `n` processors,
/// grouped by token count.
pub fn build_state_space(
    n: u64,
    m_max: usize,
    limits: &ChainLimits,
) -> Result<Vec<CanonicalState>> {
    check_params(n, m_max)?;
    // Each rotation class has at most m members, so C(n-1, m-1)/m is a lower
    // bound on the class count; refuse before enumerating.
    let estimate: u128 = (3..=m_max)
        .step_by(2)
        .map(|m| binomial(n - 1, m as u64 - 1) / m as u128)
        .sum();
    if estimate > limits.max_states as u128 {
        return Err(HermanError::StateSpaceTooLarge {
            count: estimate.min(u64::MAX as u128) as u64,
            limit: limits.max_states,
        });
    }
    let mut out = Vec::new();
    for m in (3..=m_max).step_by(2) {
        for_each_composition(n, m, &mut |parts| {
            let least = (1..m).all(|r| {
                let rotated = parts[r..].iter().chain(&parts[..r]);
                rotated.cmp(parts.iter()) != Ordering::Less
            });
            if least {
                out.push(CanonicalState {
                    gaps: GapVector::new(parts.to_vec()).expect("odd length, positive sum"),
                });
            }
        })
    }
    if out.len() as u64 > limits.max_states {
        return Err(HermanError::StateSpaceTooLarge {
            count: out.len() as u64,
            limit: limits.max_states,
        });
    }
    Ok(out)
}

/// One-step distribution from `s` over all `2^m` equally likely coin patterns.
pub fn transition_distribution(
    s: &CanonicalState,
    limits: &ChainLimits,
) -> Result<BTreeMap<CanonicalState, Rational>> {
    let m = s.m();
    if m == 1 {
        return Ok(BTreeMap::from([(s.clone(), int(1))]));
    }
    if m > limits.max_m || m > 63 {
        return Err(HermanError::TooManyTokens {
            m,
            limit: limits.max_m.min(63),
        });
    }
    let patterns = 1u64 << m;
    let mut counts: HashMap<CanonicalState, u64> = HashMap::new();
    for mask in 0..patterns {
        let next = gap_step(&s.gaps, &CoinPattern::from_mask(mask, m))?;
        *counts
            .entry(CanonicalState::from_canonical(&next))
            .or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, frac(c as i64, patterns as i64)))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedState {
    pub gaps: GapVector,
    pub m: usize,
    pub steg: u128,
    #[serde(with = "serde_ratio")]
    pub expected_time: Rational,
    #[serde(with = "serde_ratio")]
    pub expected_cost: Rational,
}

impl SolvedState {
    /// Whether `expected_cost == (4/N) steg` holds exactly.
    pub fn cost_identity_holds(&self) -> bool {
        let n = self.gaps.total() as i64;
        self.expected_cost == int(self.steg) * frac(4, n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub n: u64,
    pub states: Vec<SolvedState>,
}

impl ExactSolution {
    /// Looks up any rotation of `gaps`. The single-token state is absorbing
    /// and has zero expected time and cost.
    pub fn lookup(&self, gaps: &GapVector) -> Option<(Rational, Rational)> {
        if gaps.total() != self.n {
            return None;
        }
        if gaps.len() == 1 {
            return Some((Rational::zero(), Rational::zero()));
        }
        let key = CanonicalState::new(gaps).ok()?;
        self.states
            .iter()
            .find(|s| &s.gaps == key.gaps())
            .map(|s| (s.expected_time.clone(), s.expected_cost.clone()))
    }
}

/// Solves the chain for all rotation classes with up to `m_max` tokens.
pub fn solve(n: u64, m_max: usize, limits: &ChainLimits) -> Result<ExactSolution> {
    let states = build_state_space(n, m_max, limits)?;
    let absorbing = CanonicalState {
        gaps: GapVector::new(vec![n])?,
    };
    let mut known: HashMap<CanonicalState, (Rational, Rational)> = HashMap::new();
    known.insert(absorbing, (Rational::zero(), Rational::zero()));

    let mut solved = Vec::with_capacity(states.len());
    for m in (3..=m_max).step_by(2) {
        let level: Vec<&CanonicalState> = states.iter().filter(|s| s.m() == m).collect();
        if level.is_empty() {
            continue;
        }
        let index: HashMap<&CanonicalState, usize> =
            level.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let dists = level
            .par_iter()
            .map(|s| transition_distribution(s, limits))
            .collect::<Result<Vec<_>>>()?;

        let k = level.len();
        let step_cost = int((m as i64 - 1) / 2);
        let mut a = vec![vec![Rational::zero(); k]; k];
        let mut b = vec![vec![int(1), step_cost.clone()]; k];
        for (row, dist) in dists.iter().enumerate() {
            a[row][row] = int(1);
            for (target, p) in dist {
                if let Some(&col) = index.get(target) {
                    a[row][col] -= p;
                } else {
                    let (time, cost) = known.get(target).ok_or_else(|| {
                        HermanError::InvalidState(format!(
                            "transition to unsolved state {}",
                            target.gaps
                        ))
                    })?;
                    b[row][0] += p * time;
                    b[row][1] += p * cost;
                }
            }
        }
        let x = linalg::solve(a, b)?;
        for (s, mut vals) in level.into_iter().zip(x) {
            let cost = vals.pop().expect("two columns");
            let time = vals.pop().expect("two columns");
            known.insert(s.clone(), (time.clone(), cost.clone()));
            solved.push(SolvedState {
                gaps: s.gaps.clone(),
                m,
                steg: s.gaps.steg(),
                expected_time: time,
                expected_cost: cost,
            });
        }
    }
    Ok(ExactSolution { n, states: solved })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateValue {
    pub gaps: GapVector,
    pub m: usize,
    #[serde(with = "serde_ratio")]
    pub expected_time: Rational,
}

impl From<&SolvedState> for StateValue {
    fn from(s: &SolvedState) -> Self {
        Self {
            gaps: s.gaps.clone(),
            m: s.m,
            expected_time: s.expected_time.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n: u64,
    pub states_solved: usize,
    /// Every state attaining the maximum expected time.
    pub global_argmax: Vec<StateValue>,
    /// Present only when `3 | n`.
    pub argmax_is_equally_spaced_three: Option<bool>,
    pub three_token_max: Vec<StateValue>,
    /// Every three-token maximizer has gaps differing by at most one.
    pub three_token_max_is_balanced: bool,
    /// `E[T] = 4abc/n` for every three-token state.
    pub three_token_closed_form_holds: bool,
    pub cost_identity_holds: bool,
    pub bounds_hold: bool,
}

impl SweepReport {
    /// The proven assertions; the global argmax is evidence only.
    pub fn passed(&self) -> bool {
        self.three_token_max_is_balanced
            && self.three_token_closed_form_holds
            && self.cost_identity_holds
            && self.bounds_hold
    }
}

fn argmax<'a>(states: impl Iterator<Item = &'a SolvedState> + Clone) -> Vec<StateValue> {
    let Some(best) = states.clone().map(|s| &s.expected_time).max() else {
        return Vec::new();
    };
    states
        .filter(|s| &s.expected_time == best)
        .map(StateValue::from)
        .collect()
}

/// Checks the cost and time bounds on every solved state.
pub fn bounds_hold(solution: &ExactSolution) -> bool {
    let time_cap = time_bound_lower(solution.n);
    solution
        .states
        .iter()
        .all(|s| s.expected_cost <= cost_bound(solution.n, s.m) && s.expected_time < time_cap)
}

/// Solves every start state on `n` processors and reports where the expected
/// stabilization time peaks.
pub fn conjecture_sweep(n: u64, limits: &ChainLimits) -> Result<SweepReport> {
    let solution = solve(n, max_tokens(n), limits)?;
    let global_argmax = argmax(solution.states.iter());
    let argmax_is_equally_spaced_three = (n % 3 == 0).then(|| {
        global_argmax.len() == 1
            && global_argmax[0].gaps.components() == [n / 3, n / 3, n / 3].as_slice()
    });
    let three = solution.states.iter().filter(|s| s.m == 3);
    let three_token_max = argmax(three.clone());
    let three_token_max_is_balanced = !three_token_max.is_empty()
        && three_token_max.iter().all(|s| {
            let c = s.gaps.components();
            c.iter().max().unwrap() - c.iter().min().unwrap() <= 1
        });
    let three_token_closed_form_holds = three.clone().all(|s| {
        let product: u64 = s.gaps.components().iter().product();
        s.expected_time == frac(4 * product as i64, n as i64)
    });
    Ok(SweepReport {
        n,
        states_solved: solution.states.len(),
        global_argmax,
        argmax_is_equally_spaced_three,
        three_token_max,
        three_token_max_is_balanced,
        three_token_closed_form_holds,
        cost_identity_holds: solution.states.iter().all(SolvedState::cost_identity_holds),
        bounds_hold: bounds_hold(&solution),
    })
}
