//! Dense Gauss–Jordan elimination over exact rationals.

use num_traits::{One, Zero};

use crate::error::{HermanError, Result};
use crate::rational::Rational;

/// Solves `A X = B` for square `A` (row-major, `k x k`) and `B` (`k x c`).
///
/// Pivoting takes the first row with a nonzero entry in the current column,
/// so the sequence of operations is deterministic.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Vec<Rational>>) -> Result<Vec<Vec<Rational>>> {
    let k = a.len();
    if b.len() != k || a.iter().any(|row| row.len() != k) {
        return Err(HermanError::InvalidArgument(
            "matrix dimensions disagree".into(),
        ));
    }
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(HermanError::SingularSystem)?;
        a.swap(col, pivot);
        b.swap(col, pivot);

        let inv = Rational::one() / &a[col][col];
        if !inv.is_one() {
            for v in a[col][col..].iter_mut() {
                *v *= &inv;
            }
            for v in b[col].iter_mut() {
                *v *= &inv;
            }
        }

        let (pivot_a, pivot_b) = (a[col].clone(), b[col].clone());
        for r in 0..k {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for (v, p) in a[r][col..].iter_mut().zip(&pivot_a[col..]) {
                *v -= &factor * p;
            }
            for (v, p) in b[r].iter_mut().zip(&pivot_b) {
                *v -= &factor * p;
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn solves_small_system() {
        // 2x + y = 5, x - y = 1  ->  x = 2, y = 1
        let a = vec![vec![int(2), int(1)], vec![int(1), int(-1)]];
        let b = vec![vec![int(5)], vec![int(1)]];
        let x = solve(a, b).unwrap();
        assert_eq!(x, vec![vec![int(2)], vec![int(1)]]);
    }

    #[test]
    fn needs_row_swap() {
        let a = vec![vec![int(0), int(1)], vec![frac(1, 3), int(0)]];
        let b = vec![vec![int(4), int(1)], vec![int(1), int(0)]];
        let x = solve(a, b).unwrap();
        assert_eq!(x, vec![vec![int(3), int(0)], vec![int(4), int(1)]]);
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        let b = vec![vec![int(1)], vec![int(2)]];
        assert_eq!(solve(a, b), Err(HermanError::SingularSystem));
    }

    #[test]
    fn geometric_hitting_time() {
        // h = 1 + (1/4) h  ->  h = 4/3
        let a = vec![vec![frac(3, 4)]];
        let b = vec![vec![int(1)]];
        assert_eq!(solve(a, b).unwrap()[0][0], frac(4, 3));
    }
}
