//! Monte Carlo estimation, bound tables and the telescoping check.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HermanError, Result};
use crate::rational::{frac, int, serde_ratio, Rational};
use crate::ring::{run_with, RingState, RunConfig, Trajectory};

/// Rational under-approximation of `π²` (9.8687962 < π² = 9.8696044),
/// so that `expected_time < (PI_SQ_LOWER - 8) n² / 12` implies the strict
/// bound with the true constant.
pub fn pi_squared_lower() -> Rational {
    frac(227_081, 23_010)
}

/// `(1 - 1/m²) n² / 6`, the bound on expected total cost from `m` tokens.
pub fn cost_bound(n: u64, m: usize) -> Rational {
    let m2 = (m * m) as i64;
    frac(m2 - 1, m2) * int(n * n) / int(6)
}

/// `(π² - 8) n² / 12` in double precision (relative error ~1e-16).
pub fn time_bound(n: u64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    (pi2 - 8.0) * (n * n) as f64 / 12.0
}

/// [`time_bound`] computed with [`pi_squared_lower`]; strictly smaller.
pub fn time_bound_lower(n: u64) -> Rational {
    (pi_squared_lower() - int(8)) * int(n * n) / int(12)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Time,
    Cost,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Time => "time",
            Target::Cost => "cost",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: u64,
    pub mean: f64,
    /// Unbiased sample standard deviation over `sqrt(trials)`; 0 for one trial.
    pub std_error: f64,
    pub seed: u64,
    pub target: Target,
}

impl McEstimate {
    /// Whether `exact` lies within `k` standard errors of the mean.
    pub fn consistent_with(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.std_error
    }
}

/// Exact integer moments; merging is associative and commutative so
/// parallel aggregation is schedule-independent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Moments {
    count: u64,
    sum: u128,
    sum_sq: u128,
}

impl Moments {
    fn single(x: u64) -> Self {
        Self {
            count: 1,
            sum: x as u128,
            sum_sq: x as u128 * x as u128,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    fn estimate(&self, seed: u64, target: Target) -> McEstimate {
        let n = self.count as u128;
        let mean = self.sum as f64 / self.count as f64;
        let std_error = if n > 1 {
            // n * sum_sq - sum^2 = n (n - 1) s^2, exact in integers.
            let scaled = n * self.sum_sq - self.sum * self.sum;
            let var = scaled as f64 / (n * (n - 1)) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            trials: self.count,
            mean,
            std_error,
            seed,
            target,
        }
    }
}

/// Runs `trials` independent runs, trial `i` on stream `i` of `seed`.
/// Returns the (time, cost) estimates.
pub fn estimate(
    state: &RingState,
    trials: u64,
    seed: u64,
    config: &RunConfig,
) -> Result<(McEstimate, McEstimate)> {
    if trials == 0 {
        return Err(HermanError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    let config = RunConfig {
        record_steps: false,
        ..*config
    };
    let (time, cost) = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_with(state, seed, i, &config)
                .map(|t| (Moments::single(t.time), Moments::single(t.total_cost)))
                .map_err(|e| match e {
                    HermanError::StepLimit { limit } => {
                        HermanError::TrialStepLimit { trial: i, limit }
                    }
                    other => other,
                })
        })
        .try_reduce(
            || (Moments::default(), Moments::default()),
            |a, b| Ok((a.0.merge(b.0), a.1.merge(b.1))),
        )?;
    Ok((
        time.estimate(seed, Target::Time),
        cost.estimate(seed, Target::Cost),
    ))
}

/// `C_s` for `s = 1..=r`: cost accrued strictly after the first instant the
/// token count is at most `2s + 1`.
pub fn costs_after_levels(traj: &Trajectory) -> Vec<(u64, u64)> {
    traj.cost_at_hit
        .iter()
        .map(|(&s, &c)| (s, traj.total_cost - c))
        .collect()
}

/// `Σ_{s≥1} C_s / (s(s+1))`, summed exactly. Past `r` every `C_s` equals
/// `C_r`, and the tail `Σ_{s≥r} 1/(s(s+1))` is `1/r`.
pub fn telescoping_sum(traj: &Trajectory) -> Rational {
    let levels = costs_after_levels(traj);
    let Some(&(r, c_r)) = levels.last() else {
        return int(0);
    };
    let head: Rational = levels[..levels.len() - 1]
        .iter()
        .map(|&(s, c)| frac(c as i64, (s * (s + 1)) as i64))
        .sum();
    head + frac(c_r as i64, r as i64)
}

/// Checks `T = Σ_{s≥1} C_s / (s(s+1))` exactly on a completed trajectory.
pub fn telescoping_check(traj: &Trajectory) -> bool {
    telescoping_sum(traj) == int(traj.time)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub s: u64,
    pub tokens: u64,
    #[serde(with = "serde_ratio")]
    pub cost_bound: Rational,
    pub time_bound: f64,
}

pub fn bound_table(n: u64, s_max: u64) -> Vec<BoundRow> {
    let time = time_bound(n);
    (1..=s_max)
        .map(|s| BoundRow {
            s,
            tokens: 2 * s + 1,
            cost_bound: cost_bound(n, 2 * s as usize + 1),
            time_bound: time,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{run_with, trial_rng};
    use std::collections::BTreeMap;

    #[test]
    fn pi_lower_bound_is_below_pi_squared() {
        let lower = crate::rational::to_f64(&pi_squared_lower());
        assert!(lower < std::f64::consts::PI * std::f64::consts::PI);
        assert!(std::f64::consts::PI * std::f64::consts::PI - lower < 1e-3);
    }

    #[test]
    fn bound_rows() {
        let rows = bound_table(9, 5);
        assert_eq!(rows[0].cost_bound, int(12));
        assert_eq!(rows[0].tokens, 3);
        for w in rows.windows(2) {
            assert!(w[0].cost_bound < w[1].cost_bound);
        }
        assert!(rows.iter().all(|r| r.cost_bound < frac(81, 6)));
        assert!((bound_table(10, 1)[0].time_bound - 15.58).abs() < 0.005);
        let far = bound_table(10, 1000).pop().unwrap();
        assert!(frac(100, 6) - far.cost_bound < frac(1, 10000));
        assert!(crate::rational::to_f64(&time_bound_lower(10)) < time_bound(10));
    }

    fn synthetic(time: u64, total_cost: u64, hits: &[(u64, u64, u64)], m: usize) -> Trajectory {
        Trajectory {
            n: 20,
            initial_gaps: {
                let mut gaps = vec![1; m - 1];
                gaps.push(20 - (m as u64 - 1));
                crate::steg::GapVector::new(gaps).unwrap()
            },
            seed: 0,
            stream: 0,
            time,
            total_cost,
            first_hit: hits
                .iter()
                .map(|&(s, t, _)| (s, t))
                .collect::<BTreeMap<_, _>>(),
            cost_at_hit: hits.iter().map(|&(s, _, c)| (s, c)).collect(),
            steps: None,
        }
    }

    #[test]
    fn telescoping_by_hand() {
        // 3 tokens for 5 steps: C_1 = 5, T = 5.
        assert!(telescoping_check(&synthetic(5, 5, &[(1, 0, 0)], 3)));
        // 5 tokens for 2 steps (cost 4), then 3 tokens for 3 steps (cost 3).
        // C_1 = 3, C_2 = 7: 3/2 + 7/2 = 5 = T.
        let t = synthetic(5, 7, &[(1, 2, 4), (2, 0, 0)], 5);
        assert_eq!(telescoping_sum(&t), int(5));
        assert!(!telescoping_check(&synthetic(
            6,
            7,
            &[(1, 2, 4), (2, 0, 0)],
            5
        )));
        // single token
        assert!(telescoping_check(&synthetic(0, 0, &[], 1)));
    }

    #[test]
    fn telescoping_on_simulated_runs() {
        let mut rng = trial_rng(99, 0);
        for i in 0..200 {
            let state = RingState::random(31, 9, &mut rng).unwrap();
            let t = run_with(&state, 7, i, &RunConfig::default()).unwrap();
            assert!(telescoping_check(&t));
        }
    }

    #[test]
    fn estimate_is_deterministic() {
        let s = RingState::new(9, vec![1, 4, 7]).unwrap();
        let a = estimate(&s, 500, 3, &RunConfig::default()).unwrap();
        let b = estimate(&s, 500, 3, &RunConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.mean, a.1.mean);
        assert_eq!(a.0.target, Target::Time);
    }

    #[test]
    fn estimate_stable_start_and_errors() {
        let s = RingState::new(9, vec![4]).unwrap();
        let (time, cost) = estimate(&s, 10, 1, &RunConfig::default()).unwrap();
        assert_eq!((time.mean, time.std_error), (0.0, 0.0));
        assert_eq!((cost.mean, cost.std_error), (0.0, 0.0));
        assert!(estimate(&s, 0, 1, &RunConfig::default()).is_err());

        let s = RingState::new(9, vec![1, 4, 7]).unwrap();
        let cfg = RunConfig {
            max_steps: 0,
            record_steps: false,
        };
        assert!(matches!(
            estimate(&s, 4, 1, &cfg),
            Err(HermanError::TrialStepLimit { limit: 0, .. })
        ));
    }

    #[test]
    fn moments_match_textbook_formula() {
        let xs = [3u64, 7, 7, 19];
        let m = xs
            .iter()
            .fold(Moments::default(), |acc, &x| acc.merge(Moments::single(x)));
        let e = m.estimate(0, Target::Time);
        let mean = 9.0;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / 3.0;
        assert_eq!(e.mean, mean);
        assert!((e.std_error - (var / 4.0).sqrt()).abs() < 1e-12);
    }
}
