//! Gap vectors and the `steg` functional.
//!
//! For an odd number `m` of variables arranged on a cycle, a *triple with
//! even gaps* (TEG) is a choice of three indices `i < j < k` such that each
//! of the three cyclic runs of unused indices between consecutive chosen
//! indices has even length. `steg` is the sum of `a_i * a_j * a_k` over all
//! such triples. It vanishes for a single variable, is invariant under
//! cyclic rotation, and is preserved when a zero gap is merged away
//! (see [`annihilate_at`]).

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{HermanError, Result};
use crate::rational::{frac, int, Rational};

/// Cyclic sequence of inter-token distances. Components sum to the ring
/// size `N`; the length is the (odd) token count `m`.
///
/// Zero components are allowed: they describe the transient pre-annihilation
/// configuration in which a moving token has landed on a staying one. A
/// vector with every component positive is *canonical*.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct GapVector {
    components: Vec<u64>,
}

impl GapVector {
    pub fn new(components: Vec<u64>) -> Result<Self> {
        if components.len() % 2 == 0 {
            return Err(HermanError::InvalidTokenCount(components.len()));
        }
        if components.iter().sum::<u64>() == 0 {
            return Err(HermanError::EmptyRing);
        }
        Ok(Self { components })
    }

    /// Like [`GapVector::new`] but additionally requires every gap to be positive.
    pub fn canonical(components: Vec<u64>) -> Result<Self> {
        let v = Self::new(components)?;
        if let Some(index) = v.components.iter().position(|&c| c == 0) {
            return Err(HermanError::NonCanonical { index: index + 1 });
        }
        Ok(v)
    }

    pub fn components(&self) -> &[u64] {
        &self.components
    }

    /// Token count `m`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Ring size `N`.
    pub fn total(&self) -> u64 {
        self.components.iter().sum()
    }

    pub fn is_canonical(&self) -> bool {
        self.components.iter().all(|&c| c > 0)
    }

    /// Cyclic left rotation by `r` positions.
    pub fn rotate(&self, r: usize) -> Self {
        let mut components = self.components.clone();
        let len = components.len();
        components.rotate_left(r % len);
        Self { components }
    }

    pub fn steg(&self) -> u128 {
        let wide: Vec<u128> = self.components.iter().map(|&c| c as u128).collect();
        steg(&wide)
    }

    pub fn steg_rational(&self) -> Rational {
        let xs: Vec<Rational> = self.components.iter().map(|&c| int(c)).collect();
        steg(&xs)
    }

    pub fn into_components(self) -> Vec<u64> {
        self.components
    }
}

impl TryFrom<Vec<u64>> for GapVector {
    type Error = HermanError;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GapVector> for Vec<u64> {
    fn from(v: GapVector) -> Self {
        v.components
    }
}

impl fmt::Display for GapVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (idx, c) in self.components.iter().enumerate() {
            if idx > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Indices `i < j < k` (1-based) of a triple with even gaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TegTriple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl TegTriple {
    /// True when all three cyclic runs of unused indices are even.
    pub fn is_teg(m: usize, i: usize, j: usize, k: usize) -> bool {
        1 <= i
            && i < j
            && j < k
            && k <= m
            && (j - i - 1) % 2 == 0
            && (k - j - 1) % 2 == 0
            && (m - (k - i) - 1) % 2 == 0
    }
}

fn check_odd(name: &'static str, m: usize, min: usize) -> Result<()> {
    if m < min || m % 2 == 0 {
        return Err(HermanError::InvalidOddParameter(name, min, m));
    }
    Ok(())
}

/// Calls `f(i, j, k)` with 0-based indices for every TEG on `m` variables,
/// in lexicographic order. Each consecutive pair of chosen indices is an odd
/// distance apart; the wrap-around run is then even automatically when `m`
/// is odd.
fn for_each_teg(m: usize, mut f: impl FnMut(usize, usize, usize)) {
    if m < 3 || m % 2 == 0 {
        return;
    }
    for i in 0..m {
        for j in (i + 1..m).step_by(2) {
            for k in (j + 1..m).step_by(2) {
                f(i, j, k);
            }
        }
    }
}

pub fn enumerate_teg(m: usize) -> Result<Vec<TegTriple>> {
    check_odd("m", m, 1)?;
    let mut out = Vec::new();
    for_each_teg(m, |i, j, k| {
        out.push(TegTriple {
            i: i + 1,
            j: j + 1,
            k: k + 1,
        })
    });
    Ok(out)
}

/// `m(m+1)(m-1)/24`.
pub fn teg_count(m: usize) -> Result<u64> {
    check_odd("m", m, 1)?;
    let m = m as u64;
    Ok(m * (m + 1) * (m - 1) / 24)
}

/// Sum over all triples with even gaps of the product of the three entries.
///
/// Works over any commutative ring; an even-length slice has no triples
/// (the three runs would sum to an odd number) and evaluates to zero.
pub fn steg<T>(xs: &[T]) -> T
where
    T: Clone + Zero,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let mut total = T::zero();
    for_each_teg(xs.len(), |i, j, k| {
        let pair = &xs[i] * &xs[j];
        total = total.clone() + &pair * &xs[k];
    });
    total
}

/// Removes the zero gap at 1-based position `i` together with its cyclic
/// successor, adding the successor onto the cyclic predecessor. The result
/// has `m - 2` components in the same cyclic order and the same `steg`.
pub fn annihilate_at(a: &GapVector, i: usize) -> Result<GapVector> {
    let m = a.len();
    if m < 3 {
        return Err(HermanError::InvalidTokenCount(m));
    }
    if i == 0 || i > m {
        return Err(HermanError::IndexOutOfRange { index: i, len: m });
    }
    let zero = i - 1;
    let value = a.components[zero];
    if value != 0 {
        return Err(HermanError::NonZeroGap { index: i, value });
    }
    let prev = (zero + m - 1) % m;
    let next = (zero + 1) % m;
    let merged = a.components[prev] + a.components[next];
    let components = (0..m)
        .filter(|&p| p != zero && p != next)
        .map(|p| if p == prev { merged } else { a.components[p] })
        .collect();
    GapVector::new(components)
}

/// Maximum of `steg` over the unit simplex: `(1/24)(1 - 1/m^2)`.
pub fn steg_upper_bound(m: usize) -> Result<Rational> {
    check_odd("m", m, 3)?;
    let m2 = (m * m) as i64;
    Ok(frac(m2 - 1, 24 * m2))
}

/// `N^3 (1/24)(1 - 1/m^2)`, the bound on `steg` of a gap vector with total `N`.
pub fn scaled_upper_bound(m: usize, n: u64) -> Result<Rational> {
    Ok(steg_upper_bound(m)? * int(n).pow(3))
}

/// Shifts `delta` from the third coordinate onto the first.
pub fn perturb<T>(x: &[T], delta: &T) -> Vec<T>
where
    T: Clone + Add<Output = T> + Sub<Output = T>,
{
    let mut y = x.to_vec();
    y[0] = y[0].clone() + delta.clone();
    y[2] = y[2].clone() - delta.clone();
    y
}

/// Closed form of `steg(x1+δ, x2, x3-δ, x4, …) - steg(x)`:
///
/// `δ·x2·[(x3 + x5 + x7 + …) - (x1 + x4 + x6 + …)] - δ²·x2`.
pub fn perturbation_delta(x: &[Rational], delta: &Rational) -> Result<Rational> {
    check_odd("m", x.len(), 3)?;
    // 1-based: odd indices from 5 on and even indices from 4 on.
    let mut gain = x[2].clone() - &x[0];
    for (p, v) in x.iter().enumerate().skip(3) {
        if (p + 1) % 2 == 1 {
            gain += v;
        } else {
            gain -= v;
        }
    }
    Ok(delta * &x[1] * gain - delta * delta * &x[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: all 3-subsets filtered through the even-runs predicate.
    fn brute_teg(m: usize) -> Vec<TegTriple> {
        let mut out = Vec::new();
        for i in 1..=m {
            for j in i + 1..=m {
                for k in j + 1..=m {
                    if TegTriple::is_teg(m, i, j, k) {
                        out.push(TegTriple { i, j, k });
                    }
                }
            }
        }
        out
    }

    fn t(i: usize, j: usize, k: usize) -> TegTriple {
        TegTriple { i, j, k }
    }

    fn gv(c: &[u64]) -> GapVector {
        GapVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_small_cases() {
        assert_eq!(enumerate_teg(1).unwrap(), vec![]);
        assert_eq!(enumerate_teg(3).unwrap(), vec![t(1, 2, 3)]);
        assert_eq!(
            enumerate_teg(5).unwrap(),
            vec![t(1, 2, 3), t(1, 2, 5), t(1, 4, 5), t(2, 3, 4), t(3, 4, 5)]
        );
    }

    #[test]
    fn enumeration_matches_brute_force_and_count() {
        for m in (1..=15).step_by(2) {
            let fast = enumerate_teg(m).unwrap();
            assert_eq!(fast, brute_teg(m), "m={m}");
            assert_eq!(fast.len() as u64, teg_count(m).unwrap());
        }
        assert_eq!(teg_count(3).unwrap(), 1);
        assert_eq!(teg_count(5).unwrap(), 5);
        assert_eq!(teg_count(7).unwrap(), 14);
    }

    #[test]
    fn rejects_even_or_zero_m() {
        assert!(enumerate_teg(0).is_err());
        assert!(enumerate_teg(4).is_err());
        assert!(teg_count(6).is_err());
        assert!(steg_upper_bound(1).is_err());
        assert!(steg_upper_bound(4).is_err());
    }

    #[test]
    fn steg_examples() {
        assert_eq!(gv(&[1, 1, 1]).steg(), 1);
        assert_eq!(gv(&[3, 3, 3]).steg(), 27);
        assert_eq!(gv(&[2, 1, 1, 2, 3]).steg(), 28);
        assert_eq!(gv(&[7]).steg(), 0);
        assert_eq!(gv(&[1, 1, 1, 1, 1]).steg(), 5);
    }

    #[test]
    fn annihilation_examples() {
        let a = gv(&[2, 0, 1, 1, 1]);
        let r = annihilate_at(&a, 2).unwrap();
        assert_eq!(r.components(), &[3, 1, 1]);
        assert_eq!(a.steg(), 3);
        assert_eq!(r.steg(), 3);

        let r = annihilate_at(&gv(&[1, 0, 2]), 2).unwrap();
        assert_eq!(r.components(), &[3]);

        // zero in penultimate position: (a1..a_{m-3}, a_{m-2} + a_m)
        let r = annihilate_at(&gv(&[4, 5, 6, 0, 7]), 4).unwrap();
        assert_eq!(r.components(), &[4, 5, 13]);

        // wrap-around: zero in the last slot merges into a_{m-1} and drops a_1
        let a = gv(&[2, 3, 4, 5, 0]);
        let r = annihilate_at(&a, 5).unwrap();
        assert_eq!(r.components(), &[3, 4, 7]);
        assert_eq!(a.steg(), r.steg());
    }

    #[test]
    fn annihilation_errors() {
        assert_eq!(
            annihilate_at(&gv(&[1, 1, 1]), 2),
            Err(HermanError::NonZeroGap { index: 2, value: 1 })
        );
        assert!(annihilate_at(&gv(&[3]), 1).is_err());
        assert!(annihilate_at(&gv(&[1, 0, 2]), 4).is_err());
    }

    #[test]
    fn upper_bound_values() {
        assert_eq!(steg_upper_bound(3).unwrap(), frac(1, 27));
        assert_eq!(steg_upper_bound(5).unwrap(), frac(1, 25));
        for m in (3..=15).step_by(2) {
            let uniform = vec![frac(1, m as i64); m];
            assert_eq!(steg(&uniform), steg_upper_bound(m).unwrap());
        }
        assert_eq!(scaled_upper_bound(3, 9).unwrap(), int(27));
    }

    #[test]
    fn perturbation_examples() {
        let x = vec![frac(1, 3); 3];
        let d = frac(1, 6);
        assert_eq!(perturbation_delta(&x, &d).unwrap(), frac(-1, 108));
        assert_eq!(steg(&perturb(&x, &d)) - steg(&x), frac(-1, 108));
        assert_eq!(steg(&perturb(&x, &d)), frac(1, 36));
        assert_eq!(perturbation_delta(&x, &int(0)).unwrap(), int(0));
    }

    #[test]
    fn canonical_validation() {
        assert!(GapVector::canonical(vec![1, 0, 2]).is_err());
        assert!(GapVector::new(vec![1, 2]).is_err());
        assert!(GapVector::new(vec![]).is_err());
        assert!(GapVector::new(vec![0, 0, 0]).is_err());
        assert_eq!(gv(&[1, 2, 3]).to_string(), "(1,2,3)");
    }

    fn odd_vec(max_m: usize, max_c: u64) -> impl Strategy<Value = Vec<u64>> {
        (0..=max_m / 2).prop_flat_map(move |h| prop::collection::vec(1..=max_c, 2 * h + 1))
    }

    proptest! {
        #[test]
        fn rotation_invariance(c in odd_vec(13, 20), r in 0usize..13) {
            let a = gv(&c);
            prop_assert_eq!(a.rotate(r).steg(), a.steg());
        }

        #[test]
        fn homogeneity(c in odd_vec(11, 10), s in 0u64..6) {
            let a = gv(&c);
            let scaled = gv(&c.iter().map(|x| x * s.max(1)).collect::<Vec<_>>());
            let s = s.max(1) as u128;
            prop_assert_eq!(scaled.steg(), s * s * s * a.steg());
        }

        #[test]
        fn reduction_preserves_steg(c in odd_vec(11, 12), z in 0usize..11) {
            prop_assume!(c.len() >= 3);
            let mut c = c;
            let z = z % c.len();
            c[z] = 0;
            let a = gv(&c);
            let r = annihilate_at(&a, z + 1).unwrap();
            prop_assert_eq!(r.len(), a.len() - 2);
            prop_assert_eq!(r.total(), a.total());
            prop_assert_eq!(r.steg(), a.steg());
        }

        #[test]
        fn perturbation_identity(
            num in prop::collection::vec(0i64..50, 3..=11),
            d in -30i64..30,
        ) {
            let mut num = num;
            if num.len() % 2 == 0 { num.pop(); }
            let x: Vec<Rational> = num.iter().map(|&v| frac(v, 7)).collect();
            let delta = frac(d, 11);
            let direct = steg(&perturb(&x, &delta)) - steg(&x);
            prop_assert_eq!(perturbation_delta(&x, &delta).unwrap(), direct);
        }
    }
}
