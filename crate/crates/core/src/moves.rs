//! Alternating ±1 moves on gap vectors.
//!
//! For an even-size support `S = {i_1 < i_2 < … < i_2h}` the move `M_S^+`
//! adds 1 to `a_{i_k}` for odd `k` and subtracts 1 for even `k`; `M_S^-`
//! does the opposite. Both orientations of the empty support are distinct
//! moves that act as the identity, so there are exactly `2^m` moves. They
//! are the gap-level image of the `2^m` coin patterns of one protocol step.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HermanError, Result};
use crate::rational::{frac, int, Rational};
use crate::steg::GapVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingMove {
    support: Vec<usize>,
    orientation: Orientation,
}

impl RingMove {
    /// `support` holds 1-based indices, strictly increasing, of even count.
    pub fn new(support: Vec<usize>, orientation: Orientation) -> Result<Self> {
        if support.len() % 2 != 0
            || support.first() == Some(&0)
            || support.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(HermanError::InvalidSupport);
        }
        Ok(Self {
            support,
            orientation,
        })
    }

    pub fn identity(orientation: Orientation) -> Self {
        Self {
            support: Vec::new(),
            orientation,
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Per-gap increment `η` for a vector of length `m`.
    pub fn increments(&self, m: usize) -> Result<Vec<i64>> {
        let mut eta = vec![0i64; m];
        let sign = match self.orientation {
            Orientation::Plus => 1,
            Orientation::Minus => -1,
        };
        for (k, &idx) in self.support.iter().enumerate() {
            if idx > m {
                return Err(HermanError::IndexOutOfRange { index: idx, len: m });
            }
            eta[idx - 1] = if k % 2 == 0 { sign } else { -sign };
        }
        Ok(eta)
    }
}

pub fn apply_move(a: &GapVector, mv: &RingMove) -> Result<GapVector> {
    let eta = mv.increments(a.len())?;
    let components = a
        .components()
        .iter()
        .zip(&eta)
        .enumerate()
        .map(|(idx, (&c, &e))| {
            c.checked_add_signed(e)
                .ok_or(HermanError::MoveUnderflow { index: idx + 1 })
        })
        .collect::<Result<Vec<_>>>()?;
    GapVector::new(components)
}

/// All `2^m` moves: even subsets in binary-counter order (bit `p` ↔ index
/// `p + 1`), `Plus` before `Minus` for each subset.
pub fn enumerate_moves(m: usize) -> Vec<RingMove> {
    assert!(m < usize::BITS as usize, "m={m} too large to enumerate");
    let mut out = Vec::with_capacity(1 << m);
    for mask in 0usize..(1 << m) {
        if mask.count_ones() % 2 != 0 {
            continue;
        }
        let support: Vec<usize> = (0..m)
            .filter(|p| mask >> p & 1 == 1)
            .map(|p| p + 1)
            .collect();
        for orientation in [Orientation::Plus, Orientation::Minus] {
            out.push(RingMove {
                support: support.clone(),
                orientation,
            });
        }
    }
    out
}

/// Exact mean of `steg` over all `2^m` moves applied to `a`.
pub fn expected_steg_after_move(a: &GapVector) -> Result<Rational> {
    if !a.is_canonical() {
        return Err(HermanError::NonCanonical {
            index: a.components().iter().position(|&c| c == 0).unwrap_or(0) + 1,
        });
    }
    let moves = enumerate_moves(a.len());
    let count = moves.len();
    let total = moves
        .par_iter()
        .map(|mv| apply_move(a, mv).map(|b| b.steg()))
        .try_reduce(|| 0u128, |x, y| Ok(x + y))?;
    Ok(Rational::new(total.into(), count.into()))
}

/// `steg(a) - (m - 1) N / 8`.
pub fn move_identity_rhs(a: &GapVector) -> Rational {
    let m = a.len() as i64;
    int(a.steg()) - frac((m - 1) * a.total() as i64, 8)
}

/// True if the mean over all moves matches the closed form.
pub fn check_move_identity(a: &GapVector) -> Result<bool> {
    let lhs = expected_steg_after_move(a)?;
    Ok((lhs - move_identity_rhs(a)).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gv(c: &[u64]) -> GapVector {
        GapVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn identity_moves() {
        let a = gv(&[1, 1, 1]);
        for o in [Orientation::Plus, Orientation::Minus] {
            assert_eq!(apply_move(&a, &RingMove::identity(o)).unwrap(), a);
        }
        assert_ne!(
            RingMove::identity(Orientation::Plus),
            RingMove::identity(Orientation::Minus)
        );
    }

    #[test]
    fn apply_examples() {
        let plus12 = RingMove::new(vec![1, 2], Orientation::Plus).unwrap();
        assert_eq!(
            apply_move(&gv(&[1, 1, 1]), &plus12).unwrap().components(),
            &[2, 0, 1]
        );
        let minus13 = RingMove::new(vec![1, 3], Orientation::Minus).unwrap();
        let r = apply_move(&gv(&[3, 3, 3]), &minus13).unwrap();
        assert_eq!(r.components(), &[2, 3, 4]);
        assert_eq!(r.total(), 9);
    }

    #[test]
    fn apply_rejects_underflow_and_bad_support() {
        let mv = RingMove::new(vec![1, 2], Orientation::Plus).unwrap();
        assert_eq!(
            apply_move(&gv(&[1, 0, 2]), &mv),
            Err(HermanError::MoveUnderflow { index: 2 })
        );
        assert!(RingMove::new(vec![1], Orientation::Plus).is_err());
        assert!(RingMove::new(vec![2, 1], Orientation::Plus).is_err());
        assert!(RingMove::new(vec![0, 1], Orientation::Plus).is_err());
        let far = RingMove::new(vec![1, 5], Orientation::Plus).unwrap();
        assert!(apply_move(&gv(&[1, 1, 1]), &far).is_err());
    }

    #[test]
    fn move_counts() {
        for m in [1usize, 3, 5, 7] {
            assert_eq!(enumerate_moves(m).len(), 1 << m);
        }
        let m1 = enumerate_moves(1);
        assert!(m1.iter().all(|mv| mv.support().is_empty()));
        let m3 = enumerate_moves(3);
        assert_eq!(m3[0], RingMove::identity(Orientation::Plus));
        assert_eq!(m3[1], RingMove::identity(Orientation::Minus));
        assert_eq!(m3[2].support(), &[1, 2]);
    }

    #[test]
    fn expected_steg_examples() {
        assert_eq!(
            expected_steg_after_move(&gv(&[1, 1, 1])).unwrap(),
            frac(1, 4)
        );
        assert_eq!(
            expected_steg_after_move(&gv(&[3, 3, 3])).unwrap(),
            frac(99, 4)
        );
        assert_eq!(expected_steg_after_move(&gv(&[5])).unwrap(), int(0));
        assert_eq!(move_identity_rhs(&gv(&[3, 3, 3])), frac(99, 4));
        assert!(expected_steg_after_move(&gv(&[1, 0, 2])).is_err());
    }

    #[test]
    fn identity_exhaustive_three_tokens() {
        for n in 3..=9u64 {
            for a in 1..n {
                for b in 1..n - a {
                    let v = gv(&[a, b, n - a - b]);
                    assert!(check_move_identity(&v).unwrap(), "{v}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn orientation_symmetry(c in prop::collection::vec(1u64..6, 5), mask in 0usize..32) {
            prop_assume!(mask.count_ones() % 2 == 0);
            let a = gv(&c);
            let support: Vec<usize> = (0..5).filter(|p| mask >> p & 1 == 1).map(|p| p + 1).collect();
            let p = apply_move(&a, &RingMove::new(support.clone(), Orientation::Plus).unwrap()).unwrap();
            let m = apply_move(&a, &RingMove::new(support, Orientation::Minus).unwrap()).unwrap();
            for ((x, y), orig) in p.components().iter().zip(m.components()).zip(&c) {
                prop_assert_eq!(x + y, 2 * orig);
            }
            prop_assert_eq!(p.total(), a.total());
            prop_assert_eq!(m.total(), a.total());
        }

        #[test]
        fn identity_random_five_and_seven(c in prop::collection::vec(1u64..4, 7), five in any::<bool>()) {
            let c = if five { c[..5].to_vec() } else { c };
            prop_assert!(check_move_identity(&gv(&c)).unwrap());
        }
    }
}
