//! Randomized and exhaustive checks of the exact identities, packaged as
//! serializable reports.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{HermanError, Result};
use crate::experiments::telescoping_check;
use crate::moves::{enumerate_moves, expected_steg_after_move, move_identity_rhs, RingMove};
use crate::rational::{frac, ratio_string, to_f64};
use crate::ring::{coin_to_move, gap_vector, run_with, trial_rng, verify_martingale_step};
use crate::ring::{CoinPattern, RingState, RunConfig};
use crate::steg::{annihilate_at, steg, steg_upper_bound, GapVector};

/// Case details are kept for every case up to this many, failures always.
const DETAIL_LIMIT: usize = 20;

/// Absolute slack allowed when comparing floating-point `steg` on the
/// simplex against its exact maximum.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseDetail {
    pub input: String,
    pub lhs: String,
    pub rhs: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub target: String,
    pub passed: bool,
    pub cases: u64,
    pub failures: u64,
    pub details: Vec<CaseDetail>,
}

impl VerifyReport {
    fn new(target: &str) -> Self {
        Self {
            target: target.to_string(),
            passed: true,
            cases: 0,
            failures: 0,
            details: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> CaseDetail) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            self.passed = false;
        }
        if !ok || self.details.len() < DETAIL_LIMIT {
            self.details.push(detail());
        }
    }

    /// Drops the detail list when more cases ran than are worth printing.
    fn finish(mut self) -> Self {
        if self.cases as usize > DETAIL_LIMIT {
            self.details.retain(|d| !d.ok);
        }
        self
    }
}

fn check_odd_m(m: usize, min: usize) -> Result<()> {
    if m < min || m % 2 == 0 {
        return Err(HermanError::InvalidOddParameter("m", min, m));
    }
    Ok(())
}

/// Uniformly random canonical gap vector: `m` distinct cut points on a ring
/// of `n`, read off as consecutive distances.
pub fn random_gaps<R: Rng + ?Sized>(n: u64, m: usize, rng: &mut R) -> Result<GapVector> {
    Ok(gap_vector(&RingState::random(n, m, rng)?))
}

fn sample_n<R: Rng + ?Sized>(range: &RangeInclusive<u64>, m: usize, rng: &mut R) -> Result<u64> {
    let lo = (*range.start()).max(m as u64);
    if lo > *range.end() {
        return Err(HermanError::InvalidArgument(format!(
            "no ring size in {range:?} fits {m} tokens"
        )));
    }
    Ok(rng.random_range(lo..=*range.end()))
}

fn move_case(a: &GapVector) -> Result<(bool, CaseDetail)> {
    let lhs = expected_steg_after_move(a)?;
    let rhs = move_identity_rhs(a);
    let ok = lhs == rhs;
    Ok((
        ok,
        CaseDetail {
            input: a.to_string(),
            lhs: ratio_string(&lhs),
            rhs: ratio_string(&rhs),
            ok,
        },
    ))
}

/// Mean `steg` over all moves equals `steg(a) - (m-1)N/8` on random canonical
/// vectors with `m` gaps and total drawn from `n_range`.
pub fn move_identity_random(
    m: usize,
    n_range: RangeInclusive<u64>,
    samples: u64,
    seed: u64,
) -> Result<VerifyReport> {
    check_odd_m(m, 1)?;
    let mut rng = trial_rng(seed, 0);
    let mut report = VerifyReport::new("move-identity");
    for _ in 0..samples {
        let n = sample_n(&n_range, m, &mut rng)?;
        let a = random_gaps(n, m, &mut rng)?;
        let (ok, detail) = move_case(&a)?;
        report.record(ok, || detail);
    }
    Ok(report.finish())
}

/// The same identity over every canonical vector with `m` gaps and total at
/// most `n_max`.
pub fn move_identity_exhaustive(m: usize, n_max: u64) -> Result<VerifyReport> {
    check_odd_m(m, 1)?;
    let mut report = VerifyReport::new("move-identity");
    let mut err = None;
    for n in m as u64..=n_max {
        compositions(n, m, &mut |parts| {
            if err.is_some() {
                return;
            }
            match GapVector::new(parts.to_vec()).and_then(|a| move_case(&a)) {
                Ok((ok, detail)) => report.record(ok, || detail),
                Err(e) => err = Some(e),
            }
        });
    }
    match err {
        Some(e) => Err(e),
        None => Ok(report.finish()),
    }
}

fn compositions(n: u64, m: usize, f: &mut impl FnMut(&[u64])) {
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
    if m >= 1 && m as u64 <= n {
        rec(n, m, &mut Vec::new(), f);
    }
}

fn martingale_case(state: &RingState, max_m: usize) -> Result<(bool, CaseDetail)> {
    let check = verify_martingale_step(state, max_m)?;
    let ok = check.holds();
    Ok((
        ok,
        CaseDetail {
            input: format!("n={} gaps={}", state.n(), gap_vector(state)),
            lhs: ratio_string(&check.expected_next),
            rhs: ratio_string(&check.current),
            ok,
        },
    ))
}

pub fn martingale_state(state: &RingState, max_m: usize) -> Result<VerifyReport> {
    let mut report = VerifyReport::new("martingale");
    let (ok, detail) = martingale_case(state, max_m)?;
    report.record(ok, || detail);
    Ok(report.finish())
}

/// One-step martingale check on random placements; `m` is drawn from `ms`.
pub fn martingale_random(
    ms: &[usize],
    n_range: RangeInclusive<u64>,
    samples: u64,
    seed: u64,
    max_m: usize,
) -> Result<VerifyReport> {
    if ms.is_empty() {
        return Err(HermanError::InvalidArgument("no token counts given".into()));
    }
    for &m in ms {
        check_odd_m(m, 1)?;
    }
    let mut rng = trial_rng(seed, 0);
    let mut report = VerifyReport::new("martingale");
    for _ in 0..samples {
        let m = ms[rng.random_range(0..ms.len())];
        let n = sample_n(&n_range, m, &mut rng)?;
        let state = RingState::random(n, m, &mut rng)?;
        let (ok, detail) = martingale_case(&state, max_m)?;
        report.record(ok, || detail);
    }
    Ok(report.finish())
}

/// Uniform point on the probability simplex via normalized exponentials.
pub fn simplex_point<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// `steg(x) <= (1/24)(1 - 1/m²)` on random simplex points, plus exact
/// attainment at the uniform point.
pub fn steg_bound(m: usize, samples: u64, seed: u64) -> Result<VerifyReport> {
    let bound = steg_upper_bound(m)?;
    let bound_f = to_f64(&bound);
    let mut report = VerifyReport::new("steg-bound");

    let uniform = vec![frac(1, m as i64); m];
    let at_uniform = steg(&uniform);
    let ok = at_uniform == bound;
    report.record(ok, || CaseDetail {
        input: format!("uniform m={m}"),
        lhs: ratio_string(&at_uniform),
        rhs: ratio_string(&bound),
        ok,
    });

    let mut rng = trial_rng(seed, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut sampled = VerifyReport::new("steg-bound");
    for _ in 0..samples {
        let x = simplex_point(m, &mut rng);
        let value = steg(&x);
        worst = worst.max(value);
        let ok = value <= bound_f + SIMPLEX_TOLERANCE;
        sampled.record(ok, || CaseDetail {
            input: format!("{x:?}"),
            lhs: format!("{value:e}"),
            rhs: format!("{bound_f:e}"),
            ok,
        });
    }
    report.cases += sampled.cases;
    report.failures += sampled.failures;
    report.passed &= sampled.passed;
    report
        .details
        .extend(sampled.details.into_iter().filter(|d| !d.ok));
    if samples > 0 {
        report.details.push(CaseDetail {
            input: format!("max over {samples} samples"),
            lhs: format!("{worst:e}"),
            rhs: format!("{bound_f:e}"),
            ok: worst <= bound_f + SIMPLEX_TOLERANCE,
        });
    }
    Ok(report)
}

/// `steg` is unchanged by [`annihilate_at`] on random vectors with a forced
/// zero gap.
pub fn reduction(m_max: usize, n_max: u64, samples: u64, seed: u64) -> Result<VerifyReport> {
    check_odd_m(m_max, 3)?;
    let mut rng = trial_rng(seed, 0);
    let mut report = VerifyReport::new("reduction");
    for _ in 0..samples {
        let m = 2 * rng.random_range(1..=(m_max - 1) / 2) + 1;
        let n = rng.random_range(1..=n_max.max(1));
        // zero at a random slot; the rest split n into non-negative parts
        let zero = rng.random_range(0..m);
        let mut parts = vec![0u64; m];
        for _ in 0..n {
            let mut slot = rng.random_range(0..m - 1);
            if slot >= zero {
                slot += 1;
            }
            parts[slot] += 1;
        }
        let a = GapVector::new(parts)?;
        let reduced = annihilate_at(&a, zero + 1)?;
        let ok = reduced.steg() == a.steg() && reduced.total() == a.total();
        report.record(ok, || CaseDetail {
            input: format!("{a} at {}", zero + 1),
            lhs: reduced.steg().to_string(),
            rhs: a.steg().to_string(),
            ok,
        });
    }
    Ok(report.finish())
}

/// Pathwise `T = Σ C_s/(s(s+1))` on simulated runs from random placements.
pub fn telescoping(
    n_range: RangeInclusive<u64>,
    ms: &[usize],
    samples: u64,
    seed: u64,
    config: &RunConfig,
) -> Result<VerifyReport> {
    if ms.is_empty() {
        return Err(HermanError::InvalidArgument("no token counts given".into()));
    }
    let mut rng = trial_rng(seed, u64::MAX);
    let mut report = VerifyReport::new("telescoping");
    for trial in 0..samples {
        let m = ms[rng.random_range(0..ms.len())];
        check_odd_m(m, 1)?;
        let n = sample_n(&n_range, m, &mut rng)?;
        let state = RingState::random(n, m, &mut rng)?;
        let traj = run_with(&state, seed, trial, config)?;
        let ok = telescoping_check(&traj);
        report.record(ok, || CaseDetail {
            input: format!("n={n} gaps={} stream={trial}", traj.initial_gaps),
            lhs: traj.time.to_string(),
            rhs: ratio_string(&crate::experiments::telescoping_sum(&traj)),
            ok,
        });
    }
    Ok(report.finish())
}

/// The map from coin patterns to moves hits each of the `2^m` moves once.
pub fn coin_bijection(m: usize) -> Result<VerifyReport> {
    check_odd_m(m, 1)?;
    if m > 24 {
        return Err(HermanError::TooManyTokens { m, limit: 24 });
    }
    // Any placement works; the map depends only on the coins.
    let state = RingState::new(m as u64, (1..=m as u64).collect())?;
    let image: HashSet<RingMove> = (0..1u64 << m)
        .map(|mask| coin_to_move(&state, &CoinPattern::from_mask(mask, m)))
        .collect::<Result<_>>()?;
    let all: HashSet<RingMove> = enumerate_moves(m).into_iter().collect();
    let mut report = VerifyReport::new("coin-bijection");
    let ok = image.len() == 1 << m && image == all;
    report.record(ok, || CaseDetail {
        input: format!("m={m}"),
        lhs: format!("{} distinct images", image.len()),
        rhs: format!("{} moves", all.len()),
        ok,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_pass_on_small_inputs() {
        assert!(move_identity_random(5, 5..=12, 20, 1).unwrap().passed);
        assert!(move_identity_exhaustive(3, 9).unwrap().passed);
        assert!(
            martingale_random(&[3, 5], 5..=15, 10, 2, 20)
                .unwrap()
                .passed
        );
        assert!(steg_bound(5, 500, 3).unwrap().passed);
        assert!(reduction(9, 30, 200, 4).unwrap().passed);
        assert!(
            telescoping(9..=20, &[3, 5, 7], 50, 5, &RunConfig::default())
                .unwrap()
                .passed
        );
        for m in [1, 3, 5] {
            assert!(coin_bijection(m).unwrap().passed);
        }
    }

    #[test]
    fn exhaustive_counts() {
        // compositions of n into 3 positive parts: C(n-1, 2), n = 3..=9
        let expected: u64 = (3..=9u64).map(|n| (n - 1) * (n - 2) / 2).sum();
        assert_eq!(move_identity_exhaustive(3, 9).unwrap().cases, expected);
    }

    #[test]
    fn martingale_single_state_details() {
        let r = martingale_state(&RingState::new(9, vec![1, 4, 7]).unwrap(), 20).unwrap();
        assert!(r.passed);
        assert_eq!(r.details[0].lhs, "27/1");
        assert_eq!(r.details[0].rhs, "27/1");
    }

    #[test]
    fn random_gaps_are_canonical() {
        let mut rng = trial_rng(0, 0);
        for _ in 0..100 {
            let a = random_gaps(17, 7, &mut rng).unwrap();
            assert!(a.is_canonical());
            assert_eq!(a.total(), 17);
            assert_eq!(a.len(), 7);
        }
    }

    #[test]
    fn simplex_points_sum_to_one() {
        let mut rng = trial_rng(1, 0);
        let x = simplex_point(9, &mut rng);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn parameter_errors() {
        assert!(steg_bound(4, 1, 0).is_err());
        assert!(move_identity_random(5, 1..=3, 1, 0).is_err());
        assert!(coin_bijection(2).is_err());
    }
}
