//! Herman's protocol on a unidirectional ring of `N` processors.
//!
//! At every synchronous step each token independently stays or passes to
//! the next processor (position `p` to `p % N + 1`) with probability 1/2.
//! A moving token that lands on a staying token annihilates with it. The
//! token count therefore stays odd and never increases; the ring is stable
//! once a single token remains.
//!
//! A step with `m` tokens costs `(m - 1) / 2`, an integer since `m` is odd.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HermanError, Result};
use crate::moves::{Orientation, RingMove};
use crate::rational::{frac, int, Rational};
use crate::steg::GapVector;

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_MAX_EXHAUSTIVE_M: usize = 20;

/// Processor count plus sorted 1-based token positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingState {
    n: u64,
    tokens: Vec<u64>,
}

impl RingState {
    pub fn new(n: u64, mut tokens: Vec<u64>) -> Result<Self> {
        if n == 0 {
            return Err(HermanError::InvalidState(
                "ring size must be positive".into(),
            ));
        }
        if tokens.len() % 2 == 0 {
            return Err(HermanError::InvalidTokenCount(tokens.len()));
        }
        tokens.sort_unstable();
        if tokens.windows(2).any(|w| w[0] == w[1]) {
            return Err(HermanError::InvalidState("duplicate token position".into()));
        }
        if tokens.iter().any(|&p| p == 0 || p > n) {
            return Err(HermanError::InvalidState(format!(
                "token positions must lie in 1..={n}"
            )));
        }
        Ok(Self { n, tokens })
    }

    /// Places the first token at position 1 and the rest at the given gaps.
    pub fn from_gaps(gaps: &GapVector) -> Result<Self> {
        if !gaps.is_canonical() {
            return Err(HermanError::NonCanonical {
                index: gaps.components().iter().position(|&c| c == 0).unwrap_or(0) + 1,
            });
        }
        let mut tokens = Vec::with_capacity(gaps.len());
        let mut pos = 1;
        for &g in gaps.components() {
            tokens.push(pos);
            pos += g;
        }
        Self::new(gaps.total(), tokens)
    }

    pub fn equally_spaced(n: u64, m: usize) -> Result<Self> {
        if m == 0 || n % m as u64 != 0 {
            return Err(HermanError::InvalidArgument(format!(
                "{m} tokens cannot be equally spaced on {n} processors"
            )));
        }
        let gap = n / m as u64;
        Self::new(n, (0..m as u64).map(|i| 1 + i * gap).collect())
    }

    /// Uniformly random placement of `m` distinct tokens.
    pub fn random<R: Rng + ?Sized>(n: u64, m: usize, rng: &mut R) -> Result<Self> {
        if m as u64 > n {
            return Err(HermanError::InvalidArgument(format!(
                "{m} tokens do not fit on {n} processors"
            )));
        }
        let picked = rand::seq::index::sample(rng, n as usize, m);
        Self::new(n, picked.into_iter().map(|p| p as u64 + 1).collect())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn tokens(&self) -> &[u64] {
        &self.tokens
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_stable(&self) -> bool {
        self.tokens.len() == 1
    }
}

/// Distances between consecutive tokens, the last one wrapping around.
pub fn gap_vector(state: &RingState) -> GapVector {
    let t = &state.tokens;
    let m = t.len();
    let mut gaps: Vec<u64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(state.n + t[0] - t[m - 1]);
    GapVector::new(gaps).expect("valid ring state has an odd token count")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coin {
    Stay,
    Move,
}

/// One fair-coin decision per token, indexed like the token positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoinPattern(Vec<Coin>);

impl CoinPattern {
    pub fn new(coins: Vec<Coin>) -> Self {
        Self(coins)
    }

    /// Bit `p` of `mask` set means token `p + 1` moves.
    pub fn from_mask(mask: u64, m: usize) -> Self {
        assert!(m <= 64);
        Self(
            (0..m)
                .map(|p| {
                    if mask >> p & 1 == 1 {
                        Coin::Move
                    } else {
                        Coin::Stay
                    }
                })
                .collect(),
        )
    }

    pub fn uniform(coin: Coin, m: usize) -> Self {
        Self(vec![coin; m])
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut coins = Vec::with_capacity(m);
        while coins.len() < m {
            let bits: u64 = rng.random();
            let take = (m - coins.len()).min(64);
            coins.extend((0..take).map(|p| {
                if bits >> p & 1 == 1 {
                    Coin::Move
                } else {
                    Coin::Stay
                }
            }));
        }
        Self(coins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn moves(&self, token: usize) -> bool {
        self.0[token] == Coin::Move
    }

    fn check(&self, m: usize) -> Result<()> {
        if self.0.len() != m {
            return Err(HermanError::CoinCountMismatch {
                expected: m,
                actual: self.0.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    /// Original position of the token that moved.
    pub mover: u64,
    /// Position where it met the staying token.
    pub site: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub collisions: Vec<Collision>,
}

impl CollisionReport {
    pub fn count(&self) -> usize {
        self.collisions.len()
    }
}

fn advance(p: u64, n: u64) -> u64 {
    p % n + 1
}

/// One synchronous protocol step at the token level.
pub fn step(state: &RingState, coins: &CoinPattern) -> Result<(RingState, CollisionReport)> {
    let m = state.token_count();
    coins.check(m)?;
    let n = state.n;
    let t = &state.tokens;
    let mut dead = vec![false; m];
    let mut report = CollisionReport::default();
    if m > 1 {
        for i in 0..m {
            // Positions are sorted, so the only token a mover can reach is its successor.
            let next = (i + 1) % m;
            if coins.moves(i) && !coins.moves(next) && advance(t[i], n) == t[next] {
                // A token cannot both collide as a mover and be hit by its predecessor.
                assert!(!dead[i] && !dead[next], "token involved in two collisions");
                dead[i] = true;
                dead[next] = true;
                report.collisions.push(Collision {
                    mover: t[i],
                    site: t[next],
                });
            }
        }
    }
    let mut tokens: Vec<u64> = (0..m)
        .filter(|&i| !dead[i])
        .map(|i| {
            if coins.moves(i) {
                advance(t[i], n)
            } else {
                t[i]
            }
        })
        .collect();
    tokens.sort_unstable();
    Ok((RingState { n, tokens }, report))
}

/// Gaps between the tokens' new positions before any annihilation, in the
/// original token order. Collisions show up as zero gaps.
pub fn pre_annihilation_gaps(state: &RingState, coins: &CoinPattern) -> Result<GapVector> {
    let m = state.token_count();
    coins.check(m)?;
    let n = state.n;
    if m == 1 {
        return GapVector::new(vec![n]);
    }
    let moved: Vec<u64> = (0..m)
        .map(|i| {
            let p = state.tokens[i];
            if coins.moves(i) {
                advance(p, n)
            } else {
                p
            }
        })
        .collect();
    let gaps = (0..m)
        .map(|i| (moved[(i + 1) % m] + n - moved[i]) % n)
        .collect();
    GapVector::new(gaps)
}

/// Resolves every zero gap of a pre-annihilation vector at once: each zero
/// at `i` removes tokens `i` and `i + 1`, and the gaps between surviving
/// tokens are summed. The result starts at the first surviving token.
pub fn resolve_collisions(hat: &GapVector) -> GapVector {
    let c = hat.components();
    let m = c.len();
    if m == 1 {
        return hat.clone();
    }
    let mut dead = vec![false; m];
    for i in 0..m {
        if c[i] == 0 {
            assert!(c[(i + 1) % m] != 0, "two adjacent zero gaps");
            dead[i] = true;
            dead[(i + 1) % m] = true;
        }
    }
    let Some(first) = (0..m).find(|&i| !dead[i]) else {
        unreachable!("an odd token count cannot annihilate completely");
    };
    let mut gaps = Vec::new();
    let mut acc = 0;
    for off in 0..m {
        let i = (first + off) % m;
        if off > 0 && !dead[i] {
            gaps.push(acc);
            acc = 0;
        }
        acc += c[i];
    }
    gaps.push(acc);
    GapVector::new(gaps).expect("annihilation keeps the token count odd")
}

/// One step at the gap level: move, then annihilate.
pub fn gap_step(a: &GapVector, coins: &CoinPattern) -> Result<GapVector> {
    let m = a.len();
    coins.check(m)?;
    let eta = (0..m).map(|i| {
        let next = (i + 1) % m;
        coins.moves(next) as i64 - coins.moves(i) as i64
    });
    let hat: Vec<u64> = a
        .components()
        .iter()
        .zip(eta)
        .enumerate()
        .map(|(idx, (&g, e))| {
            g.checked_add_signed(e)
                .ok_or(HermanError::MoveUnderflow { index: idx + 1 })
        })
        .collect::<Result<_>>()?;
    Ok(resolve_collisions(&GapVector::new(hat)?))
}

/// The move whose action on the gap vector reproduces the pre-annihilation
/// gaps induced by `coins`.
///
/// The support is the set of gaps whose two endpoint tokens disagree. With
/// an empty support, all-move maps to `Plus` and all-stay to `Minus`.
pub fn coin_to_move(state: &RingState, coins: &CoinPattern) -> Result<RingMove> {
    let m = state.token_count();
    coins.check(m)?;
    let support: Vec<usize> = (0..m)
        .filter(|&i| coins.moves(i) != coins.moves((i + 1) % m))
        .map(|i| i + 1)
        .collect();
    let orientation = match support.first() {
        None if coins.moves(0) => Orientation::Plus,
        None => Orientation::Minus,
        Some(&i) if !coins.moves(i - 1) => Orientation::Plus,
        Some(_) => Orientation::Minus,
    };
    RingMove::new(support, orientation)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub m: usize,
    pub cost: u64,
}

/// Record of one run to stabilization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: u64,
    pub initial_gaps: GapVector,
    pub seed: u64,
    pub stream: u64,
    #[serde(rename = "T")]
    pub time: u64,
    pub total_cost: u64,
    /// `s -> t`: first time the token count is at most `2s + 1`, for `s = 1..=r`.
    pub first_hit: BTreeMap<u64, u64>,
    /// `s -> c_t` at the matching first-hit time.
    pub cost_at_hit: BTreeMap<u64, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepRecord>>,
}

impl Trajectory {
    pub fn initial_tokens(&self) -> usize {
        self.initial_gaps.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub max_steps: u64,
    pub record_steps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            record_steps: false,
        }
    }
}

/// ChaCha8 keyed by `seed`, on an independent stream per trial.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run(state: &RingState, seed: u64) -> Result<Trajectory> {
    run_with(state, seed, 0, &RunConfig::default())
}

pub fn run_with(
    state: &RingState,
    seed: u64,
    stream: u64,
    config: &RunConfig,
) -> Result<Trajectory> {
    let mut rng = trial_rng(seed, stream);
    let r = (state.token_count() as u64 - 1) / 2;
    let mut first_hit = BTreeMap::new();
    let mut cost_at_hit = BTreeMap::new();
    let mut steps = config.record_steps.then(Vec::new);

    let mut current = state.clone();
    let mut t = 0u64;
    let mut cost = 0u64;
    // Levels s with 2s+1 >= m are hit; track the lowest one not yet hit.
    let mut next_level = r;
    loop {
        let m = current.token_count() as u64;
        while next_level >= 1 && 2 * next_level + 1 >= m {
            first_hit.insert(next_level, t);
            cost_at_hit.insert(next_level, cost);
            next_level -= 1;
        }
        if let Some(steps) = steps.as_mut() {
            steps.push(StepRecord {
                t,
                m: m as usize,
                cost,
            });
        }
        if m == 1 {
            break;
        }
        if t >= config.max_steps {
            return Err(HermanError::StepLimit {
                limit: config.max_steps,
            });
        }
        let coins = CoinPattern::random(m as usize, &mut rng);
        current = step(&current, &coins)?.0;
        cost += (m - 1) / 2;
        t += 1;
    }

    Ok(Trajectory {
        n: state.n,
        initial_gaps: gap_vector(state),
        seed,
        stream,
        time: t,
        total_cost: cost,
        first_hit,
        cost_at_hit,
        steps,
    })
}

/// `E[X_{t+1} | state]` and `X_t` for `X = steg(gaps) + (N/4) c`, taking
/// `c_t = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    #[serde(with = "crate::rational::serde_ratio")]
    pub expected_next: Rational,
    #[serde(with = "crate::rational::serde_ratio")]
    pub current: Rational,
}

impl MartingaleCheck {
    pub fn holds(&self) -> bool {
        (&self.expected_next - &self.current).is_zero()
    }
}

/// Exhausts all `2^m` coin patterns through the token-level [`step`].
pub fn verify_martingale_step(state: &RingState, max_m: usize) -> Result<MartingaleCheck> {
    let m = state.token_count();
    if m > max_m || m > 63 {
        return Err(HermanError::TooManyTokens {
            m,
            limit: max_m.min(63),
        });
    }
    let n = state.n as i64;
    let current = int(gap_vector(state).steg());
    let patterns = 1u64 << m;
    let mut steg_sum = 0u128;
    for mask in 0..patterns {
        let (next, _) = step(state, &CoinPattern::from_mask(mask, m))?;
        steg_sum += gap_vector(&next).steg();
    }
    let step_cost = (m as i64 - 1) / 2;
    let expected_next = Rational::new(steg_sum.into(), patterns.into()) + frac(n * step_cost, 4);
    Ok(MartingaleCheck {
        expected_next,
        current,
    })
}
