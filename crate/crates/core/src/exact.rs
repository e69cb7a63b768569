//! Exact rational bookkeeping and integer rank of incidence matrices.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::sparse::SparseIntMatrix;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q` or a bare integer; the denominator must be nonzero.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rational::new(p, q))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}

/// Rank over ℚ. Sparse fraction-free elimination first; dense Bareiss when
/// intermediate entries leave the i128 range.
pub fn integer_rank(m: &SparseIntMatrix) -> usize {
    rank_sparse_i128(m).unwrap_or_else(|| rank_bareiss(m))
}

/// Column-by-column elimination against pivot vectors keyed by their leading
/// row. Every stored vector is primitive (content 1). Returns `None` on
/// overflow.
pub fn rank_sparse_i128(m: &SparseIntMatrix) -> Option<usize> {
    let mut pivots: std::collections::HashMap<usize, Vec<(usize, i128)>> = std::collections::HashMap::new();
    for col in m.columns() {
        let mut v: Vec<(usize, i128)> = col.iter().map(|&(r, x)| (r, x as i128)).collect();
        loop {
            let Some(&(lead, b)) = v.first() else { break };
            match pivots.get(&lead) {
                None => {
                    pivots.insert(lead, v);
                    break;
                }
                Some(p) => {
                    let a = p[0].1;
                    let g = a.gcd(&b);
                    v = combine(a / g, &v, b / g, p)?;
                    make_primitive(&mut v);
                }
            }
        }
    }
    Some(pivots.len())
}

/// `x*v - y*p`, both sorted by row; the leading entries cancel.
fn combine(x: i128, v: &[(usize, i128)], y: i128, p: &[(usize, i128)]) -> Option<Vec<(usize, i128)>> {
    let mut out = Vec::with_capacity(v.len() + p.len());
    let (mut i, mut j) = (0, 0);
    while i < v.len() || j < p.len() {
        let (r, val) = if j == p.len() || (i < v.len() && v[i].0 < p[j].0) {
            let t = (v[i].0, v[i].1.checked_mul(x)?);
            i += 1;
            t
        } else if i == v.len() || p[j].0 < v[i].0 {
            let t = (p[j].0, p[j].1.checked_mul(y)?.checked_neg()?);
            j += 1;
            t
        } else {
            let t = (v[i].0, v[i].1.checked_mul(x)?.checked_sub(p[j].1.checked_mul(y)?)?);
            i += 1;
            j += 1;
            t
        };
        if val != 0 {
            out.push((r, val));
        }
    }
    Some(out)
}

fn make_primitive(v: &mut [(usize, i128)]) {
    let g = v.iter().fold(0i128, |g, &(_, x)| g.gcd(&x));
    if g > 1 {
        for e in v.iter_mut() {
            e.1 /= g;
        }
    }
}

/// Dense fraction-free Gaussian elimination over arbitrary-precision integers.
pub fn rank_bareiss(m: &SparseIntMatrix) -> usize {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = vec![vec![BigInt::zero(); cols]; rows];
    for (j, col) in m.columns().enumerate() {
        for &(i, v) in col {
            a[i][j] = BigInt::from(v);
        }
    }
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                let t = &a[rank][c] * &a[r][k] - &a[r][c] * &a[rank][k];
                a[r][k] = t / &prev;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_rational(" -4 "), Some(int(-4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&int(7)), "7");
    }

    #[test]
    fn rank_of_triangle_boundary_is_two() {
        let d = SparseIntMatrix::from_columns(3, vec![vec![(0, -1), (1, 1)], vec![(1, -1), (2, 1)], vec![(0, -1), (2, 1)]]);
        assert_eq!(rank_sparse_i128(&d), Some(2));
        assert_eq!(rank_bareiss(&d), 2);
    }

    #[test]
    fn routes_agree_on_dependent_columns() {
        let cols = vec![vec![(0, 2), (1, 4)], vec![(0, 1), (1, 2)], vec![(1, 3), (2, 5)], vec![(0, 2), (1, 7), (2, 5)]];
        let m = SparseIntMatrix::from_columns(3, cols);
        assert_eq!(integer_rank(&m), 2);
        assert_eq!(rank_bareiss(&m), 2);
    }
}
