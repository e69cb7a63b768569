//! L²-Betti numbers of cofinite complexes in every degree, Følner and
//! finite-quotient approximations, Künneth, and Euler consistency.

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, integer_rank, to_f64, Rational};
use crate::orbit::{CofiniteComplex, ComplexFamily, Truncation, DEFAULT_PRODUCT_CAP};
use crate::vn_dimension::{
    double_limit_estimate, sort_rows, BettiEstimate, EstimateKind, Exhaustion, LedgerRow, LimitReport, RowKind,
};

/// The invariant subcomplexes Δ^(k), checked for ∂∂ = 0 as they are built.
pub struct ComplexExhaustion<'a> {
    pub complex: &'a CofiniteComplex,
}

impl Exhaustion for ComplexExhaustion<'_> {
    fn truncation(&self, level: usize) -> Result<Truncation> {
        let t = self.complex.build_subcomplex(level)?;
        if !t.boundary_squares_to_zero() {
            return Err(Error::InternalInconsistency(format!("boundary does not square to zero at level {level}")));
        }
        Ok(t)
    }
}

/// Ordinary Betti numbers over ℚ of a finite complex.
pub fn ordinary_betti(t: &Truncation) -> Result<Vec<u64>> {
    let dims = t.dims();
    let ranks: Vec<usize> = (0..=dims + 1)
        .map(|n| if n == 0 || n > dims { Ok(0) } else { Ok(integer_rank(t.boundary(n)?)) })
        .collect::<Result<_>>()?;
    Ok((0..=dims).map(|n| (t.num_cells(n) - ranks[n] - ranks[n + 1]) as u64).collect())
}

/// b_n / μ(G) for a finite complex.
pub fn finite_betti_exact(c: &CofiniteComplex) -> Result<Vec<Rational>> {
    let t = ComplexExhaustion { complex: c }.truncation(0)?;
    if !t.is_complete() {
        return Err(Error::IncompleteInput("the complex is infinite".into()));
    }
    let mu = t.group_measure()?;
    Ok(ordinary_betti(&t)?.into_iter().map(|b| int(b as i64) / &mu).collect())
}

/// Exact L²-Betti numbers where they are determined by structure alone:
/// finite complexes, infinite trees (β⁰ = 0, β¹ = −χ), amenable families
/// (all zero), and products of those (Künneth).
pub fn exact_betti(c: &CofiniteComplex) -> Result<Option<Vec<Rational>>> {
    if c.is_finite() {
        return finite_betti_exact(c).map(Some);
    }
    Ok(match c.family() {
        ComplexFamily::Line | ComplexFamily::Grid { .. } => Some(vec![Rational::zero(); c.dims() + 1]),
        ComplexFamily::FreeCover { .. } | ComplexFamily::BtTree { .. } => Some(vec![Rational::zero(), -c.euler_characteristic()]),
        ComplexFamily::Product { left, right, .. } => match (exact_betti(left)?, exact_betti(right)?) {
            (Some(a), Some(b)) => Some(kunneth(&a, &b)?),
            _ => None,
        },
        ComplexFamily::Finite { .. } => None,
    })
}

/// βⁿ: exact point for finite complexes; otherwise a bracket whose upper
/// end is the double-limit trace estimate and whose lower end comes from the
/// Euler characteristic, βⁿ ≥ (−1)ⁿχ − Σ_{j≢n, j≡n mod 2} βʲ.
pub fn betti_cofinite(c: &CofiniteComplex, n: usize, levels: &[usize], eps: &[f64]) -> Result<LimitReport> {
    if n > c.dims() {
        let level = levels.last().copied().unwrap_or(0);
        return Ok(LimitReport {
            estimate: BettiEstimate::point(0.0, eps.last().copied().unwrap_or(0.0), level),
            rows: Vec::new(),
            per_level: Vec::new(),
            targets: Vec::new(),
        });
    }
    if c.is_finite() {
        let v = to_f64(&finite_betti_exact(c)?[n]);
        let e = eps.last().copied().unwrap_or(0.0);
        let row = LedgerRow { degree: n, level_k: 0, level_l: 0, epsilon: e, value: v, kind: RowKind::Point };
        return Ok(LimitReport { estimate: BettiEstimate::point(v, e, 0), rows: vec![row], per_level: vec![(0, v)], targets: Vec::new() });
    }
    let source = ComplexExhaustion { complex: c };
    let mut report = double_limit_estimate(&source, n, levels, eps)?;
    let hi = report.estimate.value;
    let chi = if n % 2 == 0 { c.euler_characteristic() } else { -c.euler_characteristic() };
    let mut others = 0.0;
    for j in (n % 2..=c.dims()).step_by(2).filter(|&j| j != n) {
        // β⁰ vanishes for non-compact groups.
        if j > 0 {
            others += double_limit_estimate(&source, j, levels, eps)?.estimate.value;
        }
    }
    let lo = f64::max(0.0, to_f64(&chi) - others);
    let top = *levels.last().expect("schedule validated");
    report.rows.push(LedgerRow { degree: n, level_k: top, level_l: top, epsilon: 0.0, value: lo, kind: RowKind::Lower });
    sort_rows(&mut report.rows);
    let (lo, hi) = (lo.min(hi), hi.max(lo));
    report.estimate = BettiEstimate { value: 0.5 * (lo + hi), kind: EstimateKind::Bracket { lo, hi }, ..report.estimate };
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FolnerEntry {
    pub m: usize,
    /// Ordinary Betti number of the box truncation.
    pub betti: u64,
    /// β_n(box) / ♯F_m.
    pub normalized: Rational,
    /// ♯(cells of the box outside F_m.L) / ♯(cells), in degree n.
    pub boundary_ratio: Rational,
}

/// β_n(Γ^(m)) / ♯F_m over box truncations.
pub fn folner_limit(c: &CofiniteComplex, n: usize, ms: &[usize]) -> Result<Vec<FolnerEntry>> {
    if c.folner().is_none() {
        return Err(Error::NotAmenableFamily("the family carries no Følner rule".into()));
    }
    if ms.is_empty() || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSchedule(format!("box sizes {ms:?} are not strictly increasing")));
    }
    ms.iter()
        .map(|&m| {
            let (t, in_fl, count) = c.folner_box(m)?;
            if !t.boundary_squares_to_zero() {
                return Err(Error::InternalInconsistency(format!("boundary does not square to zero on box {m}")));
            }
            let betti = ordinary_betti(&t)?.get(n).copied().unwrap_or(0);
            let cells = t.num_cells(n);
            let outside = in_fl.get(n).map(|f| f.iter().filter(|&&x| !x).count()).unwrap_or(0);
            let boundary_ratio = if cells == 0 { Rational::zero() } else { int(outside as i64) / int(cells as i64) };
            Ok(FolnerEntry { m, betti, normalized: int(betti as i64) / int(count as i64), boundary_ratio })
        })
        .collect()
}

/// β_n(quotient) / index for each finite quotient.
pub fn lueck_quotient_limit(quotients: &[(CofiniteComplex, u64)], n: usize) -> Result<Vec<Rational>> {
    if quotients.iter().any(|(_, i)| *i == 0) || quotients.windows(2).any(|w| w[0].1 >= w[1].1) {
        return Err(Error::InvalidSchedule("indices must be positive and increasing".into()));
    }
    quotients
        .iter()
        .map(|(q, index)| {
            let t = ComplexExhaustion { complex: q }.truncation(0)?;
            if !t.is_complete() {
                return Err(Error::IncompleteInput("quotients must be finite complexes".into()));
            }
            let b = ordinary_betti(&t)?.get(n).copied().unwrap_or(0);
            Ok(int(b as i64) / int(*index as i64))
        })
        .collect()
}

/// Discrete convolution of two Betti sequences.
pub fn kunneth(a: &[Rational], b: &[Rational]) -> Result<Vec<Rational>> {
    for (i, x) in a.iter().chain(b).enumerate() {
        if x.is_negative() {
            return Err(Error::InvalidBetti(i));
        }
    }
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Ok(out)
}

pub fn product_complex(c1: &CofiniteComplex, c2: &CofiniteComplex) -> CofiniteComplex {
    CofiniteComplex::product(c1, c2, DEFAULT_PRODUCT_CAP)
}

/// Σ(−1)ⁿβⁿ = χ exactly.
pub fn euler_check_exact(c: &CofiniteComplex, betas: &[Rational]) -> Result<bool> {
    if betas.len() != c.dims() + 1 {
        return Err(Error::IncompleteInput(format!("{} degrees given, {} required", betas.len(), c.dims() + 1)));
    }
    Ok(alternating(betas) == c.euler_characteristic())
}

pub fn alternating(betas: &[Rational]) -> Rational {
    betas.iter().enumerate().fold(Rational::zero(), |acc, (n, b)| if n % 2 == 0 { acc + b } else { acc - b })
}

/// χ lies in the range of Σ(−1)ⁿβⁿ allowed by the estimates, widened by
/// `tol`.
pub fn euler_check(c: &CofiniteComplex, betas: &[BettiEstimate], tol: f64) -> Result<bool> {
    if betas.len() != c.dims() + 1 {
        return Err(Error::IncompleteInput(format!("{} degrees given, {} required", betas.len(), c.dims() + 1)));
    }
    let (mut min, mut max) = (0.0, 0.0);
    for (n, b) in betas.iter().enumerate() {
        let (lo, hi) = b.bounds();
        if n % 2 == 0 {
            min += lo;
            max += hi;
        } else {
            min -= hi;
            max -= lo;
        }
    }
    let chi = to_f64(&c.euler_characteristic());
    Ok(min - tol <= chi && chi <= max + tol)
}
