//! Finite tracial algebras ⊕ M_{n_i} with trace Σ w_i Tr, their projective
//! modules p𝒜^m, and the dimension function with its axioms.
//!
//! An element of M_m(𝒜) is stored blockwise: block i is an (m·n_i)×(m·n_i)
//! real matrix. A vector of (L²ψ)^m is stored blockwise as (m·n_i)×n_i
//! matrices, with 𝒜 acting by right multiplication.

use nalgebra::DMatrix;
use num::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exact::{rat, to_f64, Rational};

const PROJECTION_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-9;
/// Axiom identities are asserted to this tolerance.
pub const AXIOM_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for numerical ranks.
const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub size: usize,
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FTAlgebra {
    blocks: Vec<Block>,
}

impl FTAlgebra {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::ShapeMismatch("an algebra needs at least one block".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.size == 0 {
                return Err(Error::ShapeMismatch(format!("block {i} has size 0")));
            }
            if !crate::exact::is_positive(&b.weight) {
                return Err(Error::ShapeMismatch(format!("block {i} has non-positive weight")));
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// ψ(1) = Σ w_i n_i
    pub fn trace_of_identity(&self) -> Rational {
        self.blocks.iter().map(|b| &b.weight * Rational::from_integer(b.size.into())).sum()
    }

    fn weight(&self, i: usize) -> f64 {
        to_f64(&self.blocks[i].weight)
    }
}

/// The projective module p𝒜^m.
#[derive(Clone, Debug, PartialEq)]
pub struct FTModule {
    ambient: FTAlgebra,
    rank: usize,
    projection: Vec<DMatrix<f64>>,
}

impl FTModule {
    pub fn new(ambient: FTAlgebra, rank: usize, projection: Vec<DMatrix<f64>>) -> Result<Self> {
        check_block_shapes(&ambient, rank, &projection)?;
        for (i, p) in projection.iter().enumerate() {
            if !is_projection(p) {
                return Err(Error::NotAProjection(format!("block {i}")));
            }
        }
        Ok(Self { ambient, rank, projection })
    }

    pub fn full(ambient: FTAlgebra, rank: usize) -> Self {
        let projection = ambient.blocks.iter().map(|b| DMatrix::identity(rank * b.size, rank * b.size)).collect();
        Self { ambient, rank, projection }
    }

    pub fn zero(ambient: FTAlgebra, rank: usize) -> Self {
        let projection = ambient.blocks.iter().map(|b| DMatrix::zeros(rank * b.size, rank * b.size)).collect();
        Self { ambient, rank, projection }
    }

    pub fn ambient(&self) -> &FTAlgebra {
        &self.ambient
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn projection(&self) -> &[DMatrix<f64>] {
        &self.projection
    }

    pub fn is_zero(&self) -> bool {
        self.projection.iter().all(|p| p.iter().all(|&x| x == 0.0))
    }
}

fn check_block_shapes(a: &FTAlgebra, rank: usize, blocks: &[DMatrix<f64>]) -> Result<()> {
    if rank == 0 {
        return Err(Error::ShapeMismatch("module rank must be positive".into()));
    }
    if blocks.len() != a.blocks.len() {
        return Err(Error::ShapeMismatch(format!("{} blocks for an algebra with {}", blocks.len(), a.blocks.len())));
    }
    for (i, (m, b)) in blocks.iter().zip(&a.blocks).enumerate() {
        let d = rank * b.size;
        if m.shape() != (d, d) {
            return Err(Error::ShapeMismatch(format!("block {i} is {:?}, expected {d}x{d}", m.shape())));
        }
    }
    Ok(())
}

/// p² = p = pᵀ within 1e−12, spectrum in {0,1} within 1e−9.
pub fn is_projection(p: &DMatrix<f64>) -> bool {
    if !p.is_square() {
        return false;
    }
    if p.nrows() == 0 {
        return true;
    }
    let tol = PROJECTION_TOL * (p.nrows() as f64).max(1.0);
    if (p - p.transpose()).amax() > tol || (p * p - p).amax() > tol {
        return false;
    }
    let sym = (p + p.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().all(|&l| l.abs() <= SPECTRUM_TOL || (l - 1.0).abs() <= SPECTRUM_TOL)
}

/// (Tr⊗ψ)(p)
pub fn dim_projective(m: &FTModule) -> f64 {
    m.projection.iter().enumerate().map(|(i, p)| m.ambient.weight(i) * p.trace()).sum()
}

/// Σ w_i rank(p_i), exact: the trace of a projection is its rank.
pub fn dim_projective_exact(m: &FTModule) -> Rational {
    m.projection
        .iter()
        .zip(&m.ambient.blocks)
        .map(|(p, b)| &b.weight * Rational::from_integer(p.trace().round().to_i64().unwrap_or(0).into()))
        .sum()
}

/// Orthonormal basis of the column space by column-pivoted QR, dropping
/// pivots that are relatively small. The bidiagonal SVD is avoided: it
/// returns wrong factors for some exactly rank-deficient projections.
pub fn orth(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let lead = diag.iter().copied().fold(0.0, f64::max);
    if lead <= f64::MIN_POSITIVE {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let rank = diag.iter().take_while(|&&d| d > RANK_TOL * lead).count();
    qr.q().columns(0, rank).into_owned()
}

fn range_projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let u = orth(m);
    &u * u.transpose()
}

/// Dimension of the closed submodule of (L²ψ)^m generated by `generators`;
/// each generator holds one (m·n_i)×n_i matrix per block.
pub fn dim_closed_submodule(ambient: &FTAlgebra, rank: usize, generators: &[Vec<DMatrix<f64>>]) -> Result<f64> {
    Ok(dim_projective(&closed_submodule(ambient, rank, generators)?))
}

/// The range projection of the closed span, as a module.
pub fn closed_submodule(ambient: &FTAlgebra, rank: usize, generators: &[Vec<DMatrix<f64>>]) -> Result<FTModule> {
    if rank == 0 {
        return Err(Error::ShapeMismatch("module rank must be positive".into()));
    }
    let mut projection = Vec::with_capacity(ambient.blocks.len());
    for (i, b) in ambient.blocks.iter().enumerate() {
        let rows = rank * b.size;
        let mut cols = DMatrix::zeros(rows, 0);
        for (g, gen) in generators.iter().enumerate() {
            if gen.len() != ambient.blocks.len() {
                return Err(Error::ShapeMismatch(format!("generator {g} has {} blocks", gen.len())));
            }
            if gen[i].shape() != (rows, b.size) {
                return Err(Error::ShapeMismatch(format!("generator {g} block {i} is {:?}, expected {rows}x{}", gen[i].shape(), b.size)));
            }
            let c = cols.ncols();
            cols = cols.insert_columns(c, b.size, 0.0);
            cols.view_mut((0, c), (rows, b.size)).copy_from(&gen[i]);
        }
        projection.push(range_projection(&cols));
    }
    Ok(FTModule { ambient: ambient.clone(), rank, projection })
}

fn same_shape(a: &FTModule, b: &FTModule) -> Result<()> {
    if a.ambient != b.ambient || a.rank != b.rank {
        return Err(Error::ShapeMismatch("modules live over different algebras or ranks".into()));
    }
    Ok(())
}

/// q ≤ p, i.e. pq = q.
pub fn is_subprojection(q: &FTModule, p: &FTModule) -> bool {
    q.projection.iter().zip(&p.projection).all(|(q, p)| (p * q - q).amax() <= AXIOM_TOL)
}

/// dim p = dim q + dim(p − q) for the exact sequence q𝒜^m → p𝒜^m → (p−q)𝒜^m.
pub fn check_additivity(p: &FTModule, q: &FTModule) -> Result<bool> {
    same_shape(p, q)?;
    if !is_subprojection(q, p) {
        return Err(Error::NotASubobject);
    }
    let diff: Vec<DMatrix<f64>> = p.projection.iter().zip(&q.projection).map(|(a, b)| a - b).collect();
    let n = FTModule::new(p.ambient.clone(), p.rank, diff)?;
    Ok((dim_projective(p) - dim_projective(q) - dim_projective(&n)).abs() <= AXIOM_TOL)
}

pub fn check_monotonicity(p: &FTModule, q: &FTModule) -> Result<bool> {
    same_shape(p, q)?;
    if !is_subprojection(q, p) {
        return Err(Error::NotASubobject);
    }
    Ok(dim_projective(q) <= dim_projective(p) + AXIOM_TOL)
}

/// dim over (𝒜,ψ) of M equals dim over (p𝒜p, ψ|) of Mp, with p ∈ 𝒜 given
/// blockwise as n_i×n_i projections. Mp = q(𝒜p)^m is realized inside
/// (L² p𝒜p)^{m'} by padding, generated by q_i C U_i over matrix units C,
/// where U_i is an isometry onto the range of p_i.
pub fn check_compression(m: &FTModule, p: &[DMatrix<f64>]) -> Result<bool> {
    let a = &m.ambient;
    if p.len() != a.blocks.len() {
        return Err(Error::ShapeMismatch(format!("{} blocks for an algebra with {}", p.len(), a.blocks.len())));
    }
    let mut isometries = Vec::with_capacity(p.len());
    for (i, (pi, b)) in p.iter().zip(&a.blocks).enumerate() {
        if pi.shape() != (b.size, b.size) {
            return Err(Error::ShapeMismatch(format!("projection block {i} is {:?}", pi.shape())));
        }
        if !is_projection(pi) {
            return Err(Error::NotAProjection(format!("compression block {i}")));
        }
        let u = orth(pi);
        if u.ncols() == 0 {
            return Err(Error::CentralSupportViolation(i));
        }
        isometries.push(u);
    }
    let compressed = FTAlgebra::new(
        a.blocks.iter().zip(&isometries).map(|(b, u)| Block { size: u.ncols(), weight: b.weight.clone() }).collect(),
    )?;
    let padded_rank = a
        .blocks
        .iter()
        .zip(&isometries)
        .map(|(b, u)| (m.rank * b.size).div_ceil(u.ncols()))
        .max()
        .unwrap_or(1);
    let mut generators = Vec::new();
    for (i, b) in a.blocks.iter().enumerate() {
        let rows = m.rank * b.size;
        for row in 0..rows {
            for col in 0..b.size {
                let mut unit = DMatrix::zeros(rows, b.size);
                unit[(row, col)] = 1.0;
                let v = &m.projection[i] * unit * &isometries[i];
                let gen: Vec<DMatrix<f64>> = compressed
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(j, cb)| {
                        let mut g = DMatrix::zeros(padded_rank * cb.size, cb.size);
                        if j == i {
                            g.view_mut((0, 0), (rows, cb.size)).copy_from(&v);
                        }
                        g
                    })
                    .collect();
                generators.push(gen);
            }
        }
    }
    let compressed_dim = dim_closed_submodule(&compressed, padded_rank, &generators)?;
    Ok((compressed_dim - dim_projective(m)).abs() <= AXIOM_TOL)
}

/// Zero dimension exactly characterizes the zero module.
pub fn check_sauer(m: &FTModule) -> bool {
    dim_projective_exact(m).is_zero() == m.is_zero()
}

/// A right-𝒜-linear map 𝒜^m → 𝒜^{m'}; block i is left multiplication by an
/// (m'·n_i)×(m·n_i) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleMap {
    source_rank: usize,
    target_rank: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl ModuleMap {
    pub fn left_multiplication(a: &FTAlgebra, source_rank: usize, target_rank: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.len() != a.blocks.len() {
            return Err(Error::ShapeMismatch(format!("{} blocks for an algebra with {}", blocks.len(), a.blocks.len())));
        }
        for (i, (l, b)) in blocks.iter().zip(&a.blocks).enumerate() {
            if l.shape() != (target_rank * b.size, source_rank * b.size) {
                return Err(Error::ShapeMismatch(format!("map block {i} is {:?}", l.shape())));
            }
        }
        Ok(Self { source_rank, target_rank, blocks })
    }

    /// From arbitrary linear maps on the column-major flattening of each
    /// block; rejects maps that do not commute with the right action.
    pub fn from_flattened(a: &FTAlgebra, source_rank: usize, target_rank: usize, flat: Vec<DMatrix<f64>>) -> Result<Self> {
        if flat.len() != a.blocks.len() {
            return Err(Error::ShapeMismatch(format!("{} blocks for an algebra with {}", flat.len(), a.blocks.len())));
        }
        let mut blocks = Vec::with_capacity(flat.len());
        for (i, (t, b)) in flat.iter().zip(&a.blocks).enumerate() {
            let (n, r, c) = (b.size, target_rank * b.size, source_rank * b.size);
            if t.shape() != (r * n, c * n) {
                return Err(Error::ShapeMismatch(format!("flattened block {i} is {:?}", t.shape())));
            }
            // vec(X E) = (Eᵀ ⊗ I) vec(X); equivariance is T (Eᵀ⊗I_c) = (Eᵀ⊗I_r) T.
            for x in 0..n {
                for y in 0..n {
                    let mut e = DMatrix::zeros(n, n);
                    e[(y, x)] = 1.0;
                    let lhs = t * e.kronecker(&DMatrix::identity(c, c));
                    let rhs = e.kronecker(&DMatrix::identity(r, r)) * t;
                    if (lhs - rhs).amax() > AXIOM_TOL {
                        return Err(Error::NotEquivariant(i));
                    }
                }
            }
            blocks.push(t.view((0, 0), (r, c)).into_owned());
        }
        Ok(Self { source_rank, target_rank, blocks })
    }

    pub fn flattened(&self, a: &FTAlgebra) -> Vec<DMatrix<f64>> {
        self.blocks.iter().zip(&a.blocks).map(|(l, b)| DMatrix::<f64>::identity(b.size, b.size).kronecker(l)).collect()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }
}

/// A periodic directed system E_0 → E_1 → … → E_{L−1} → E_0; `maps[i]`
/// goes from `modules[i]` to `modules[(i+1) % L]`.
#[derive(Clone, Debug)]
pub struct Chain {
    modules: Vec<FTModule>,
    maps: Vec<ModuleMap>,
}

impl Chain {
    pub fn new(modules: Vec<FTModule>, maps: Vec<ModuleMap>) -> Result<Self> {
        if modules.len() < 2 {
            return Err(Error::ShapeMismatch("a chain needs at least two modules".into()));
        }
        if maps.len() != modules.len() {
            return Err(Error::ShapeMismatch(format!("{} maps for {} modules", maps.len(), modules.len())));
        }
        let a = modules[0].ambient.clone();
        for (i, e) in modules.iter().enumerate() {
            if e.ambient != a {
                return Err(Error::ShapeMismatch(format!("module {i} lives over a different algebra")));
            }
        }
        for (i, f) in maps.iter().enumerate() {
            let (s, t) = (&modules[i], &modules[(i + 1) % modules.len()]);
            if f.source_rank != s.rank || f.target_rank != t.rank {
                return Err(Error::ShapeMismatch(format!("map {i} has the wrong ranks")));
            }
            for (b, ((l, ps), pt)) in f.blocks.iter().zip(&s.projection).zip(&t.projection).enumerate() {
                let image = l * ps;
                if (pt * &image - &image).amax() > AXIOM_TOL {
                    return Err(Error::NotEquivariant(b));
                }
            }
        }
        Ok(Self { modules, maps })
    }

    pub fn modules(&self) -> &[FTModule] {
        &self.modules
    }

    pub fn maps(&self) -> &[ModuleMap] {
        &self.maps
    }

    fn len(&self) -> usize {
        self.modules.len()
    }

    /// Enough steps for every image dimension to stabilize.
    fn horizon(&self) -> usize {
        let d = self.modules.iter().map(|m| m.projection.iter().map(|p| p.nrows()).max().unwrap_or(0)).max().unwrap_or(0);
        self.len() * (d + 1)
    }

    fn block_dims<F: Fn(usize) -> usize>(&self, per_block: F) -> f64 {
        (0..self.modules[0].ambient.blocks.len()).map(|b| self.modules[0].ambient.weight(b) * per_block(b) as f64).sum()
    }

    /// Forward image basis of φ_{i,i+1}(U) at block b.
    fn forward(&self, i: usize, b: usize, u: &DMatrix<f64>) -> DMatrix<f64> {
        orth(&(&self.maps[i % self.len()].blocks[b] * u))
    }

    /// Adjoint image of U ⊂ E_{i+1} in E_i at block b.
    fn backward(&self, i: usize, b: usize, u: &DMatrix<f64>) -> DMatrix<f64> {
        let i = i % self.len();
        orth(&(&self.modules[i].projection[b] * self.maps[i].blocks[b].transpose() * u))
    }

    fn space(&self, i: usize, b: usize) -> DMatrix<f64> {
        orth(&self.modules[i % self.len()].projection[b])
    }

    /// Eventual image of the period map on E_0 (the direct limit).
    pub fn direct_limit_dim(&self) -> f64 {
        self.block_dims(|b| {
            let mut u = self.space(0, b);
            let mut stable = 0;
            let mut last = u.ncols();
            while stable < 2 {
                for i in 0..self.len() {
                    u = self.forward(i, b, &u);
                }
                if u.ncols() == last {
                    stable += 1;
                } else {
                    stable = 0;
                    last = u.ncols();
                }
            }
            u.ncols()
        })
    }

    /// sup_i inf_{j≥i} dim im φ_{ij}.
    pub fn direct_sup_inf(&self) -> f64 {
        let h = self.horizon();
        (0..self.len())
            .map(|s| {
                self.block_dims(|b| {
                    let mut u = self.space(s, b);
                    let mut inf = u.ncols();
                    for t in 0..h {
                        u = self.forward(s + t, b, &u);
                        inf = inf.min(u.ncols());
                    }
                    inf
                })
            })
            .fold(0.0, f64::max)
    }

    /// Eventual image of the adjoint period map on E_0 (the inverse limit
    /// of the adjoint system).
    pub fn inverse_limit_dim(&self) -> f64 {
        let l = self.len();
        self.block_dims(|b| {
            let mut u = self.space(0, b);
            let mut stable = 0;
            let mut last = u.ncols();
            while stable < 2 {
                for i in (0..l).rev() {
                    u = self.backward(i, b, &u);
                }
                if u.ncols() == last {
                    stable += 1;
                } else {
                    stable = 0;
                    last = u.ncols();
                }
            }
            u.ncols()
        })
    }

    /// sup_i inf_{j≥i} dim ψ_{ij}(E_j) for the adjoint maps ψ.
    pub fn inverse_sup_inf(&self) -> f64 {
        let h = self.horizon();
        (0..self.len())
            .map(|s| {
                self.block_dims(|b| {
                    let mut inf = self.space(s, b).ncols();
                    for t in 1..=h {
                        let mut u = self.space(s + t, b);
                        for k in (s..s + t).rev() {
                            u = self.backward(k, b, &u);
                        }
                        inf = inf.min(u.ncols());
                    }
                    inf
                })
            })
            .fold(0.0, f64::max)
    }
}

/// Both limit formulas: directly computed limit dimension against sup–inf.
pub fn check_limit_formulas(chain: &Chain) -> Result<bool> {
    let direct = (chain.direct_limit_dim() - chain.direct_sup_inf()).abs() <= AXIOM_TOL;
    let inverse = (chain.inverse_limit_dim() - chain.inverse_sup_inf()).abs() <= AXIOM_TOL;
    Ok(direct && inverse)
}

/// Random instances for the axiom battery.
pub mod random {
    use super::*;

    pub const MAX_BLOCKS: usize = 3;
    pub const MAX_SIZE: usize = 5;

    pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    pub fn algebra<R: Rng>(rng: &mut R) -> FTAlgebra {
        let k = rng.gen_range(1..=MAX_BLOCKS);
        let blocks =
            (0..k).map(|_| Block { size: rng.gen_range(1..=MAX_SIZE), weight: rat(rng.gen_range(1..=6), rng.gen_range(1..=4)) }).collect();
        FTAlgebra::new(blocks).expect("sizes and weights are positive")
    }

    /// Projection onto a random subspace of each block's range of `within`
    /// (or of the whole block when `within` is None).
    pub fn subprojection<R: Rng>(rng: &mut R, a: &FTAlgebra, rank: usize, within: Option<&FTModule>) -> FTModule {
        let projection = a
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let d = rank * b.size;
                let basis = match within {
                    Some(m) => orth(&m.projection()[i]),
                    None => DMatrix::identity(d, d),
                };
                let r = rng.gen_range(0..=basis.ncols());
                if r == 0 {
                    return DMatrix::zeros(d, d);
                }
                let u = orth(&(&basis * matrix(rng, basis.ncols(), r)));
                &u * u.transpose()
            })
            .collect();
        FTModule { ambient: a.clone(), rank, projection }
    }

    pub fn module<R: Rng>(rng: &mut R, a: &FTAlgebra) -> FTModule {
        let rank = rng.gen_range(1..=2);
        subprojection(rng, a, rank, None)
    }

    /// Projection in 𝒜 with a nonzero component in every block.
    pub fn full_support_projection<R: Rng>(rng: &mut R, a: &FTAlgebra) -> Vec<DMatrix<f64>> {
        a.blocks()
            .iter()
            .map(|b| {
                let r = rng.gen_range(1..=b.size);
                let u = orth(&matrix(rng, b.size, r));
                &u * u.transpose()
            })
            .collect()
    }

    /// A periodic chain whose maps have random kernels.
    pub fn chain<R: Rng>(rng: &mut R, a: &FTAlgebra, len: usize) -> Chain {
        let rank = rng.gen_range(1..=2);
        let modules: Vec<FTModule> = (0..len).map(|_| subprojection(rng, a, rank, None)).collect();
        let maps = (0..len)
            .map(|i| {
                let (s, t) = (&modules[i], &modules[(i + 1) % len]);
                let blocks = a
                    .blocks()
                    .iter()
                    .enumerate()
                    .map(|(b, blk)| {
                        let d = rank * blk.size;
                        let kill = subprojection(rng, a, rank, Some(s)).projection()[b].clone();
                        let g = matrix(rng, d, d);
                        &t.projection()[b] * g * (&s.projection()[b] - kill)
                    })
                    .collect();
                ModuleMap::left_multiplication(a, rank, rank, blocks).expect("shapes match")
            })
            .collect();
        Chain::new(modules, maps).expect("maps land in their targets")
    }
}
