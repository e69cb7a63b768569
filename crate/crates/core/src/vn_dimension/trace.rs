//! Orbit-weighted traces of harmonic projections on truncations and the
//! double-limit scheme over an exhaustion.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::spectral::{lanczos_measure, mass_below, ChainLaplacian, DenseSpectrum, DENSE_LIMIT, MAX_LANCZOS_STEPS};
use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};
use crate::orbit::{CellKey, Truncation};

pub const DEFAULT_EPSILONS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Singular values of W below this are dropped when forming the range
/// projection of R_{k,l} = W Wᵀ; its own eigenvalues are then ≥ 1e−8.
const RANGE_SINGULAR_CUTOFF: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimateKind {
    Point,
    Upper,
    Lower,
    Bracket { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BettiEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub level: usize,
    pub kind: EstimateKind,
}

impl BettiEstimate {
    pub fn point(value: f64, epsilon: f64, level: usize) -> Self {
        Self { value, epsilon, level, kind: EstimateKind::Point }
    }

    /// (lo, hi); a one-sided bound is open on the other side.
    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            EstimateKind::Point => (self.value, self.value),
            EstimateKind::Upper => (0.0, self.value),
            EstimateKind::Lower => (self.value, f64::INFINITY),
            EstimateKind::Bracket { lo, hi } => (lo, hi),
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo - tol <= x && x <= hi + tol
    }

    pub fn width(&self) -> f64 {
        let (lo, hi) = self.bounds();
        hi - lo
    }

    /// Scales every value; used by Haar rescaling.
    pub fn scaled(&self, f: f64) -> Self {
        let kind = match self.kind {
            EstimateKind::Bracket { lo, hi } => EstimateKind::Bracket { lo: lo * f, hi: hi * f },
            k => k,
        };
        Self { value: self.value * f, kind, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    Point,
    Upper,
    Lower,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Point => "point",
            RowKind::Upper => "upper",
            RowKind::Lower => "lower",
        })
    }
}

/// One entry of the convergence ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub degree: usize,
    pub level_k: usize,
    pub level_l: usize,
    pub epsilon: f64,
    pub value: f64,
    pub kind: RowKind,
}

/// Sorts by (k, l, ε descending, kind).
pub fn sort_rows(rows: &mut [LedgerRow]) {
    rows.sort_by(|a, b| {
        (a.degree, a.level_k, a.level_l)
            .cmp(&(b.degree, b.level_k, b.level_l))
            .then(b.epsilon.total_cmp(&a.epsilon))
            .then(a.kind.cmp(&b.kind))
    });
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport {
    pub estimate: BettiEstimate,
    pub rows: Vec<LedgerRow>,
    /// Diagonal values at the reported ε, one per level.
    pub per_level: Vec<(usize, f64)>,
    /// ⟨P_{<ε} e_s, e_s⟩ for every target cell of the last level at the
    /// reported ε, unweighted.
    pub targets: Vec<(CellKey, f64)>,
}

/// A linear functional Σ c_i ⟨P e_i, e_i⟩ on the degree-n chain space,
/// addressed by cell key so it can be evaluated on any level.
pub type TraceFunctional = Vec<(CellKey, f64)>;

/// The orbit-representative functional Σ_{s∈L_n} (1/μ(G_s)) ⟨P 𝟙_s, 𝟙_s⟩.
pub fn orbit_functional(t: &Truncation, n: usize, weights: Option<&[Rational]>) -> Result<TraceFunctional> {
    if n > t.dims() {
        return Ok(Vec::new());
    }
    let orbits = t.orbits(n);
    if let Some(w) = weights {
        if w.len() != orbits.len() {
            return Err(Error::ShapeMismatch(format!("{} weights for {} orbits", w.len(), orbits.len())));
        }
    }
    orbits
        .iter()
        .enumerate()
        .map(|(o, slot)| {
            let rep = slot.rep.ok_or(Error::DomainTooSmall { degree: n, orbit: o, level: t.level() })?;
            let stab = weights.map(|w| &w[o]).unwrap_or(&slot.stab);
            Ok((t.cells(n)[rep].key.clone(), 1.0 / to_f64(stab)))
        })
        .collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(eps))
    }
}

/// Spectral data of one level: dense eigensystem or per-target Lanczos
/// measures.
enum LevelSpectrum {
    Dense(DenseSpectrum),
    Local(Vec<Vec<(f64, f64)>>),
}

struct Level {
    truncation: Truncation,
    targets: Vec<(usize, f64)>,
    spectrum: LevelSpectrum,
}

impl Level {
    fn compute(t: Truncation, n: usize, functional: &TraceFunctional, eps: &[f64]) -> Result<Self> {
        let targets = functional
            .iter()
            .map(|(k, c)| {
                t.index_of(n, k).map(|i| (i, *c)).ok_or_else(|| Error::InternalInconsistency(format!("target cell {k:?} missing at level {}", t.level())))
            })
            .collect::<Result<Vec<_>>>()?;
        let lap = ChainLaplacian::new(&t, n)?;
        let spectrum = if lap.dim() <= DENSE_LIMIT {
            LevelSpectrum::Dense(DenseSpectrum::new(&lap))
        } else {
            LevelSpectrum::Local(targets.par_iter().map(|&(i, _)| lanczos_measure(&lap, i, eps, MAX_LANCZOS_STEPS)).collect())
        };
        Ok(Self { truncation: t, targets, spectrum })
    }

    fn target_values(&self, n: usize, eps: f64) -> Vec<(CellKey, f64)> {
        let key = |i: usize| self.truncation.cells(n)[i].key.clone();
        match &self.spectrum {
            LevelSpectrum::Dense(s) => self.targets.iter().map(|&(i, _)| (key(i), s.weight_below(i, eps))).collect(),
            LevelSpectrum::Local(ms) => self.targets.iter().zip(ms).map(|(&(i, _), m)| (key(i), mass_below(m, eps))).collect(),
        }
    }

    fn value(&self, eps: f64) -> f64 {
        match &self.spectrum {
            LevelSpectrum::Dense(s) => self.targets.iter().map(|&(i, c)| c * s.weight_below(i, eps)).sum(),
            LevelSpectrum::Local(ms) => self.targets.iter().zip(ms).map(|(&(_, c), m)| c * mass_below(m, eps)).sum(),
        }
    }
}

/// Σ_s (1/μ(G_s)) ⟨P_{<ε}(Δ_n) 𝟙_s, 𝟙_s⟩ over one representative per orbit;
/// `weights` overrides the truncation's stabilizer measures.
pub fn kernel_trace(t: &Truncation, n: usize, weights: Option<&[Rational]>, epsilon: f64) -> Result<BettiEstimate> {
    check_eps(epsilon)?;
    let functional = orbit_functional(t, n, weights)?;
    functional_trace(t, n, &functional, epsilon)
}

/// Evaluates an arbitrary trace functional at a single ε.
pub fn functional_trace(t: &Truncation, n: usize, functional: &TraceFunctional, epsilon: f64) -> Result<BettiEstimate> {
    check_eps(epsilon)?;
    if n > t.dims() || functional.is_empty() {
        let kind = if t.is_complete() { EstimateKind::Point } else { EstimateKind::Upper };
        return Ok(BettiEstimate { value: 0.0, epsilon, level: t.level(), kind });
    }
    let level = t.level();
    let complete = t.is_complete();
    let l = Level::compute(t.clone(), n, functional, &[epsilon])?;
    let kind = if complete { EstimateKind::Point } else { EstimateKind::Upper };
    Ok(BettiEstimate { value: l.value(epsilon), epsilon, level, kind })
}

/// Source of truncations and the trace functional evaluated on them.
pub trait Exhaustion: Sync {
    fn truncation(&self, level: usize) -> Result<Truncation>;

    fn functional(&self, t: &Truncation, degree: usize) -> Result<TraceFunctional> {
        orbit_functional(t, degree, None)
    }
}

pub fn validate_schedule(levels: &[usize], eps: &[f64]) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::InvalidSchedule("at least two levels are required".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSchedule(format!("levels {levels:?} are not strictly increasing")));
    }
    if eps.is_empty() {
        return Err(Error::InvalidSchedule("empty epsilon schedule".into()));
    }
    eps.iter().try_for_each(|&e| check_eps(e))
}

/// Table T(k,l,ε) = orbit-weighted trace of the range projection of
/// ι_k* P_{<ε,l} ι_k for k ≤ l, where the level-l kernel basis is available
/// densely. Every entry bounds the L²-Betti number from above; the estimate
/// is their infimum at the reported ε.
pub fn double_limit_estimate(source: &dyn Exhaustion, degree: usize, levels: &[usize], eps: &[f64]) -> Result<LimitReport> {
    validate_schedule(levels, eps)?;
    let mut eps: Vec<f64> = eps.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let computed: Vec<Level> = levels
        .par_iter()
        .map(|&lv| {
            let t = source.truncation(lv)?;
            let f = source.functional(&t, degree)?;
            Level::compute(t, degree, &f, &eps)
        })
        .collect::<Result<Vec<_>>>()?;
    let complete = computed.iter().all(|l| l.truncation.is_complete());
    let diag_kind = if complete { RowKind::Point } else { RowKind::Upper };

    let mut rows = Vec::new();
    for l in &computed {
        for &e in &eps {
            let lv = l.truncation.level();
            rows.push(LedgerRow { degree, level_k: lv, level_l: lv, epsilon: e, value: l.value(e), kind: diag_kind });
        }
    }
    if !complete {
        let pairs: Vec<(usize, usize)> =
            (0..computed.len()).flat_map(|a| (a + 1..computed.len()).map(move |b| (a, b))).collect();
        let off: Vec<Vec<LedgerRow>> = pairs
            .par_iter()
            .map(|&(a, b)| restricted_rows(&computed[a], &computed[b], degree, &eps))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(off.into_iter().flatten());
    }
    sort_rows(&mut rows);

    let last = computed.len() - 1;
    let reported = eps
        .iter()
        .rev()
        .copied()
        .find(|&e| computed[last].value(e) <= computed[last - 1].value(e) + 1e-12)
        .unwrap_or(eps[eps.len() - 1]);
    let per_level: Vec<(usize, f64)> = computed.iter().map(|l| (l.truncation.level(), l.value(reported))).collect();
    let top = levels[last];
    let estimate = if complete {
        BettiEstimate::point(per_level[last].1, reported, top)
    } else {
        let hi = rows.iter().filter(|r| r.epsilon == reported).map(|r| r.value).fold(f64::INFINITY, f64::min);
        BettiEstimate { value: hi, epsilon: reported, level: top, kind: EstimateKind::Upper }
    };
    let targets = computed[last].target_values(degree, reported);
    Ok(LimitReport { estimate, rows, per_level, targets })
}

/// Off-diagonal entries T(k,l,·); empty when level l was not diagonalized.
fn restricted_rows(k: &Level, l: &Level, degree: usize, eps: &[f64]) -> Result<Vec<LedgerRow>> {
    let LevelSpectrum::Dense(spec) = &l.spectrum else { return Ok(Vec::new()) };
    let tk = &k.truncation;
    let rows_in_l = tk
        .cells(degree)
        .iter()
        .map(|c| {
            l.truncation
                .index_of(degree, &c.key)
                .ok_or_else(|| Error::InternalInconsistency(format!("level {} is not nested in level {}", tk.level(), l.truncation.level())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        let v = spec.basis_below(e);
        let w = v.select_rows(&rows_in_l);
        let range = range_basis(&w);
        let value: f64 = k.targets.iter().map(|&(i, c)| c * range.row(i).norm_squared()).sum();
        out.push(LedgerRow {
            degree,
            level_k: tk.level(),
            level_l: l.truncation.level(),
            epsilon: e,
            value,
            kind: RowKind::Upper,
        });
    }
    Ok(out)
}

/// Orthonormal basis of the column space of `w`, dropping singular values
/// below the cutoff.
fn range_basis(w: &DMatrix<f64>) -> DMatrix<f64> {
    if w.ncols() == 0 || w.nrows() == 0 {
        return DMatrix::zeros(w.nrows(), 0);
    }
    // Eigen-decompose the small Gram matrix WᵀW = V Σ² Vᵀ; U = W V Σ⁻¹.
    let gram = w.transpose() * w;
    let e = nalgebra::SymmetricEigen::new(gram);
    let keep: Vec<usize> = (0..e.eigenvalues.len()).filter(|&i| e.eigenvalues[i] >= RANGE_SINGULAR_CUTOFF * RANGE_SINGULAR_CUTOFF).collect();
    let mut u = DMatrix::zeros(w.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let col = w * e.eigenvectors.column(i) / e.eigenvalues[i].sqrt();
        u.set_column(c, &col);
    }
    u
}

/// Types whose stabilizer measures can be multiplied by a common factor.
pub trait HaarScalable: Sized {
    fn scaled_by(&self, c: &Rational) -> Self;
}

impl HaarScalable for Truncation {
    fn scaled_by(&self, c: &Rational) -> Self {
        self.scaled(c)
    }
}

impl HaarScalable for crate::orbit::OrbitGraph {
    fn scaled_by(&self, c: &Rational) -> Self {
        self.scaled(c)
    }
}

impl HaarScalable for crate::orbit::Space {
    fn scaled_by(&self, c: &Rational) -> Self {
        self.scaled(c)
    }
}

impl HaarScalable for crate::orbit::CofiniteComplex {
    fn scaled_by(&self, c: &Rational) -> Self {
        self.scaled(c)
    }
}

/// Outputs that are homogeneous of degree −1 in the Haar measure.
pub trait Homogeneous: Sized {
    /// `self` equals `original / c`: exactly for rationals, to 1e−12
    /// relative for floats.
    fn is_rescaling_of(&self, original: &Self, c: &Rational) -> bool;
}

impl Homogeneous for Rational {
    fn is_rescaling_of(&self, original: &Self, c: &Rational) -> bool {
        *self == original / c
    }
}

fn close(a: f64, b: f64) -> bool {
    (a.is_infinite() && a == b) || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl Homogeneous for f64 {
    fn is_rescaling_of(&self, original: &Self, c: &Rational) -> bool {
        close(*self, original / to_f64(c))
    }
}

impl Homogeneous for BettiEstimate {
    fn is_rescaling_of(&self, original: &Self, c: &Rational) -> bool {
        let f = 1.0 / to_f64(c);
        let expect = original.scaled(f);
        let (a, b) = (self.bounds(), expect.bounds());
        close(self.value, expect.value) && close(a.0, b.0) && close(a.1, b.1) && self.epsilon == expect.epsilon
    }
}

impl<T: Homogeneous> Homogeneous for Vec<T> {
    fn is_rescaling_of(&self, original: &Self, c: &Rational) -> bool {
        self.len() == original.len() && self.iter().zip(original).all(|(a, b)| a.is_rescaling_of(b, c))
    }
}

impl<T: Homogeneous> Homogeneous for Option<T> {
    fn is_rescaling_of(&self, original: &Self, c: &Rational) -> bool {
        match (self, original) {
            (Some(a), Some(b)) => a.is_rescaling_of(b, c),
            (None, None) => true,
            _ => false,
        }
    }
}

/// Runs `op` on the input with every stabilizer measure multiplied by `c`,
/// asserting that the result is the unscaled result divided by `c`.
pub fn rescale_haar<I, O, F>(input: &I, c: &Rational, op: F) -> Result<O>
where
    I: HaarScalable,
    O: Homogeneous,
    F: Fn(&I) -> Result<O>,
{
    if !num::Signed::is_positive(c) {
        return Err(Error::InvalidScale);
    }
    let base = op(input)?;
    let scaled = op(&input.scaled_by(c))?;
    if !scaled.is_rescaling_of(&base, c) {
        return Err(Error::InternalInconsistency("output is not homogeneous of degree -1 in the Haar measure".into()));
    }
    Ok(scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::orbit::{build_ball, CofiniteComplex, EdgeOrbit, GraphFamily, OrbitGraph};

    fn c4() -> Truncation {
        let orbit = EdgeOrbit { arity: 1, stab: int(1), flipped: false };
        let edges = vec![(0, 1, 0), (1, 2, 0), (2, 3, 0), (3, 0, 0)];
        let g = OrbitGraph::new(GraphFamily::Finite { vertices: 4, edges }, int(1), vec![orbit]).unwrap();
        build_ball(&g, 4).unwrap()
    }

    #[test]
    fn triangle_has_no_harmonic_one_chains() {
        let t = CofiniteComplex::triangle().build_subcomplex(0).unwrap();
        let b = kernel_trace(&t, 1, None, 1e-6).unwrap();
        assert!(b.value.abs() < 1e-12);
        assert_eq!(b.kind, EstimateKind::Point);
    }

    #[test]
    fn four_cycle_under_rotation() {
        // ℤ/4 with counting measure: b₁/|G| = 1/4.
        let b = kernel_trace(&c4(), 1, None, 1e-6).unwrap();
        assert!((b.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn huge_threshold_counts_every_orbit() {
        let t = build_ball(&OrbitGraph::free(2), 2).unwrap();
        let b = kernel_trace(&t, 1, None, 1e6).unwrap();
        assert!((b.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_threshold_is_rejected() {
        let t = c4();
        assert_eq!(kernel_trace(&t, 1, None, 0.0), Err(Error::InvalidThreshold(0.0)));
    }

    #[test]
    fn missing_representative_is_reported() {
        let t = CofiniteComplex::grid(2).build_subcomplex(0).unwrap();
        assert!(matches!(kernel_trace(&t, 2, None, 0.1), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn range_basis_is_orthonormal() {
        let w = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let u = range_basis(&w);
        assert_eq!(u.ncols(), 2);
        assert!((u.transpose() * &u - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn rows_sort_by_level_then_descending_epsilon() {
        let r = |k, l, e| LedgerRow { degree: 1, level_k: k, level_l: l, epsilon: e, value: 0.0, kind: RowKind::Upper };
        let mut rows = vec![r(2, 2, 0.1), r(1, 2, 0.01), r(1, 2, 0.1), r(1, 1, 0.001)];
        sort_rows(&mut rows);
        let order: Vec<_> = rows.iter().map(|r| (r.level_k, r.level_l, r.epsilon)).collect();
        assert_eq!(order, vec![(1, 1, 0.001), (1, 2, 0.1), (1, 2, 0.01), (2, 2, 0.1)]);
    }

    #[test]
    fn rescale_rejects_nonpositive_factor() {
        let t = c4();
        let r = rescale_haar(&t, &int(0), |t| Ok(kernel_trace(t, 1, None, 0.1)?.value));
        assert_eq!(r, Err(Error::InvalidScale));
    }
}
