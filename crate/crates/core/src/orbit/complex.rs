use std::collections::{BTreeMap, HashMap, VecDeque};

use num::Signed;

use super::graph::word_times;
use super::truncation::{CellKey, Truncation, TruncationBuilder};
use crate::error::{Error, Result};
use crate::exact::{int, Rational};

pub const DEFAULT_PRODUCT_CAP: usize = 50_000;

/// Følner rule attached to amenable families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FolnerRule {
    /// F_m = {0,…,m−1}^d acting on the closed unit cube.
    Box,
}

/// One cell of an explicitly listed finite complex; faces refer to keys one
/// dimension down.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCell {
    pub key: CellKey,
    pub orbit: usize,
    pub faces: Vec<(CellKey, i64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComplexFamily {
    /// ℤ acting on the real line.
    Line,
    /// ℤ^d acting on the cube-tiled ℝ^d; level k is the box [−k,k]^d.
    Grid { dim: usize },
    /// F_k acting on the universal cover of a wedge of k circles; level 0 is
    /// the closed fundamental domain, level k ≥ 1 the ball of radius k.
    FreeCover { rank: usize },
    /// Type-preserving action on the (q+1)-regular tree, chamber measure 1.
    BtTree { q: u32 },
    /// Cell product; level k is the product of the factors' level k.
    Product { left: Box<CofiniteComplex>, right: Box<CofiniteComplex>, cap: usize },
    Finite { cells: Vec<Vec<FiniteCell>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CofiniteComplex {
    family: ComplexFamily,
    dims: usize,
    stabs: Vec<Vec<Rational>>,
    reps: Vec<Vec<CellKey>>,
    folner: Option<FolnerRule>,
}

impl CofiniteComplex {
    pub fn line() -> Self {
        Self {
            family: ComplexFamily::Line,
            dims: 1,
            stabs: vec![vec![int(1)], vec![int(1)]],
            reps: vec![vec![vec![0]], vec![vec![0]]],
            folner: Some(FolnerRule::Box),
        }
    }

    pub fn grid(dim: usize) -> Self {
        let p = grid_product(dim);
        Self { family: ComplexFamily::Grid { dim }, dims: p.dims, stabs: p.stabs, reps: p.reps, folner: Some(FolnerRule::Box) }
    }

    pub fn free_cover(rank: usize) -> Self {
        Self {
            family: ComplexFamily::FreeCover { rank },
            dims: 1,
            stabs: vec![vec![int(1)], vec![int(1); rank]],
            reps: vec![vec![vec![]], (0..rank as i64).map(|i| vec![i, 1]).collect()],
            folner: None,
        }
    }

    pub fn bt_tree(q: u32) -> Self {
        let v = int(q as i64 + 1);
        Self {
            family: ComplexFamily::BtTree { q },
            dims: 1,
            stabs: vec![vec![v.clone(), v], vec![int(1)]],
            reps: vec![vec![vec![], vec![0, 1]], vec![vec![0, 1]]],
            folner: None,
        }
    }

    /// A single point with trivial group.
    pub fn point() -> Self {
        Self::finite(vec![vec![FiniteCell { key: vec![0], orbit: 0, faces: vec![] }]], vec![vec![int(1)]]).expect("point")
    }

    /// Cell product with multiplied stabilizer measures and Leibniz signs.
    pub fn product(left: &CofiniteComplex, right: &CofiniteComplex, cap: usize) -> Self {
        let dims = left.dims + right.dims;
        let mut stabs = vec![Vec::new(); dims + 1];
        let mut reps = vec![Vec::new(); dims + 1];
        for n in 0..=dims {
            for i in 0..=n.min(left.dims) {
                let j = n - i;
                if j > right.dims {
                    continue;
                }
                for (s1, r1) in left.stabs[i].iter().zip(&left.reps[i]) {
                    for (s2, r2) in right.stabs[j].iter().zip(&right.reps[j]) {
                        stabs[n].push(s1 * s2);
                        reps[n].push(product_key(i, r1, r2));
                    }
                }
            }
        }
        let folner = match (left.folner, right.folner) {
            (Some(FolnerRule::Box), Some(FolnerRule::Box)) => Some(FolnerRule::Box),
            _ => None,
        };
        Self {
            family: ComplexFamily::Product { left: Box::new(left.clone()), right: Box::new(right.clone()), cap },
            dims,
            stabs,
            reps,
            folner,
        }
    }

    /// Explicit finite complex; representatives are the first cell of each
    /// orbit.
    pub fn finite(cells: Vec<Vec<FiniteCell>>, stabs: Vec<Vec<Rational>>) -> Result<Self> {
        if cells.is_empty() || cells.len() != stabs.len() {
            return Err(Error::Consistency { orbit: "complex".into(), msg: "orbit table does not match dimensions".into() });
        }
        let mut reps: Vec<Vec<CellKey>> = stabs.iter().map(|s| vec![Vec::new(); s.len()]).collect();
        let mut seen: Vec<Vec<bool>> = stabs.iter().map(|s| vec![false; s.len()]).collect();
        for (n, cs) in cells.iter().enumerate() {
            for c in cs {
                if c.orbit >= stabs[n].len() {
                    return Err(Error::Consistency { orbit: format!("{n}:{}", c.orbit), msg: "undeclared orbit".into() });
                }
                if !seen[n][c.orbit] {
                    seen[n][c.orbit] = true;
                    reps[n][c.orbit] = c.key.clone();
                }
            }
            for (o, s) in stabs[n].iter().enumerate() {
                if !s.is_positive() {
                    return Err(Error::Consistency { orbit: format!("{n}:{o}"), msg: "stab must be positive".into() });
                }
            }
        }
        let c = Self { dims: cells.len() - 1, family: ComplexFamily::Finite { cells }, stabs, reps, folner: None };
        let t = c.build_subcomplex(0)?;
        t.group_measure()?;
        if !t.boundary_squares_to_zero() {
            return Err(Error::Consistency { orbit: "complex".into(), msg: "boundary of boundary is nonzero".into() });
        }
        Ok(c)
    }

    /// Filled simplicial complex from its maximal simplices; all faces are
    /// added. With `labels`, every simplex of the closure must be listed with
    /// an orbit id whose stabilizer measure is `stab[id]`; without, the group
    /// is trivial.
    pub fn simplicial(simplices: &[Vec<usize>], labels: Option<(&[Option<usize>], &BTreeMap<usize, Rational>)>) -> Result<Self> {
        let mut all: Vec<BTreeMap<Vec<usize>, Option<usize>>> = Vec::new();
        for (idx, s) in simplices.iter().enumerate() {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::Consistency { orbit: "complex".into(), msg: "empty simplex".into() });
            }
            let label = labels.and_then(|(l, _)| l[idx]);
            for mask in 1u64..(1u64 << s.len()) {
                let face: Vec<usize> = (0..s.len()).filter(|b| mask >> b & 1 == 1).map(|b| s[b]).collect();
                let d = face.len() - 1;
                if all.len() <= d {
                    all.resize(d + 1, BTreeMap::new());
                }
                let is_self = face.len() == s.len();
                let entry = all[d].entry(face).or_insert(None);
                if is_self && label.is_some() {
                    *entry = label;
                }
            }
        }
        let dims = all.len() - 1;
        let mut cells = vec![Vec::new(); dims + 1];
        let mut stabs = vec![Vec::new(); dims + 1];
        let mut local: Vec<HashMap<usize, usize>> = vec![HashMap::new(); dims + 1];
        for (d, faces) in all.iter().enumerate() {
            for (s, label) in faces {
                let orbit = match labels {
                    None => {
                        stabs[d].push(int(1));
                        stabs[d].len() - 1
                    }
                    Some((_, table)) => {
                        let Some(id) = label else {
                            return Err(Error::Consistency { orbit: format!("{s:?}"), msg: "simplex in the closure has no orbit label".into() });
                        };
                        let Some(stab) = table.get(id) else {
                            return Err(Error::Consistency { orbit: id.to_string(), msg: "orbit not declared".into() });
                        };
                        if let Some((dd, _)) = local.iter().enumerate().find(|(dd, m)| *dd != d && m.contains_key(id)) {
                            return Err(Error::Consistency { orbit: id.to_string(), msg: format!("orbit used in dimensions {dd} and {d}") });
                        }
                        let next = local[d].len();
                        let o = *local[d].entry(*id).or_insert(next);
                        if o == stabs[d].len() {
                            stabs[d].push(stab.clone());
                        }
                        o
                    }
                };
                let key: CellKey = s.iter().map(|&v| v as i64).collect();
                let faces = if d == 0 {
                    vec![]
                } else {
                    (0..=d)
                        .map(|i| {
                            let f: CellKey = key.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                            (f, if i % 2 == 0 { 1 } else { -1 })
                        })
                        .collect()
                };
                cells[d].push(FiniteCell { key, orbit, faces });
            }
        }
        Self::finite(cells, stabs)
    }

    /// The filled 2-simplex with trivial group.
    pub fn triangle() -> Self {
        Self::simplicial(&[vec![0, 1, 2]], None).expect("triangle")
    }

    /// The m-cycle with ℤ/m acting by rotation.
    pub fn cycle(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Consistency { orbit: "complex".into(), msg: "cycle length must be positive".into() });
        }
        let verts = (0..m as i64).map(|i| FiniteCell { key: vec![i], orbit: 0, faces: vec![] }).collect();
        let edges = (0..m as i64)
            .map(|i| {
                let j = (i + 1) % m as i64;
                let faces = if i == j { vec![] } else { vec![(vec![i], -1), (vec![j], 1)] };
                FiniteCell { key: vec![i], orbit: 0, faces }
            })
            .collect();
        Self::finite(vec![verts, edges], vec![vec![int(1)], vec![int(1)]])
    }

    /// One vertex with k loops, trivial group.
    pub fn wedge(k: usize) -> Self {
        let verts = vec![FiniteCell { key: vec![0], orbit: 0, faces: vec![] }];
        let loops = (0..k).map(|i| FiniteCell { key: vec![i as i64], orbit: i, faces: vec![] }).collect();
        Self::finite(vec![verts, loops], vec![vec![int(1)], vec![int(1); k]]).expect("wedge")
    }

    /// The connected m-fold cyclic cover of a wedge of k circles (every loop
    /// lifts to i → i+1), trivial group.
    pub fn wedge_cyclic_cover(k: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Consistency { orbit: "complex".into(), msg: "cover index must be positive".into() });
        }
        let verts = (0..m as i64).map(|i| FiniteCell { key: vec![i], orbit: i as usize, faces: vec![] }).collect();
        let mut edges = Vec::new();
        for g in 0..k as i64 {
            for i in 0..m as i64 {
                let j = (i + 1) % m as i64;
                let faces = if i == j { vec![] } else { vec![(vec![i], -1), (vec![j], 1)] };
                edges.push(FiniteCell { key: vec![g, i], orbit: edges.len(), faces });
            }
        }
        let ne = edges.len();
        Self::finite(vec![verts, edges], vec![vec![int(1); m], vec![int(1); ne]])
    }

    pub fn family(&self) -> &ComplexFamily {
        &self.family
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn folner(&self) -> Option<FolnerRule> {
        self.folner
    }

    pub fn is_finite(&self) -> bool {
        match &self.family {
            ComplexFamily::Finite { .. } => true,
            ComplexFamily::Product { left, right, .. } => left.is_finite() && right.is_finite(),
            _ => false,
        }
    }

    /// Stabilizer measures of the unoriented cells, per dimension and orbit.
    pub fn orbit_stabs(&self) -> &[Vec<Rational>] {
        &self.stabs
    }

    /// χ = Σ_n (−1)^n Σ_{s∈L_n} 1/μ(G_s), exactly.
    pub fn euler_characteristic(&self) -> Rational {
        let mut chi = Rational::from_integer(0.into());
        for (n, orbits) in self.stabs.iter().enumerate() {
            for s in orbits {
                if n % 2 == 0 {
                    chi += s.recip();
                } else {
                    chi -= s.recip();
                }
            }
        }
        chi
    }

    pub fn scaled(&self, c: &Rational) -> CofiniteComplex {
        let mut out = self.clone();
        for orbits in &mut out.stabs {
            for s in orbits {
                *s = &*s * c;
            }
        }
        out
    }

    /// Signed incidence of an orbit representative onto face orbits, read
    /// off the first level that realizes it.
    pub fn boundary_pattern(&self, n: usize, orbit: usize) -> Result<Vec<(usize, i64)>> {
        if n == 0 || n > self.dims {
            return Err(Error::DimensionOutOfRange { degree: n, dims: self.dims });
        }
        for level in 0..=2 {
            let t = self.build_subcomplex(level)?;
            if let Some(i) = t.orbits(n).get(orbit).and_then(|o| o.rep) {
                let faces = t.cells(n - 1);
                return Ok(t.boundary(n)?.column(i).iter().map(|&(r, s)| (faces[r].orbit, s)).collect());
            }
        }
        Err(Error::DomainTooSmall { degree: n, orbit, level: 2 })
    }

    /// The invariant subcomplex Δ^(level).
    pub fn build_subcomplex(&self, level: usize) -> Result<Truncation> {
        let stabs = self.stabs.clone();
        match &self.family {
            ComplexFamily::Line => line(level).finish(level, stabs, &self.reps, false),
            ComplexFamily::Grid { .. } | ComplexFamily::Product { .. } => {
                let (b, complete) = self.product_builder(level)?;
                b.finish(level, stabs, &self.reps, complete)
            }
            ComplexFamily::FreeCover { rank } => {
                tree_complex(&vec![0; *rank], level, |w| (0, edge_orbit_free(w)))?.finish(level, stabs, &self.reps, false)
            }
            ComplexFamily::BtTree { q } => {
                tree_complex(&vec![2; *q as usize + 1], level, |w| ((w.len() / 2) % 2, 0))?.finish(level, stabs, &self.reps, false)
            }
            ComplexFamily::Finite { cells } => {
                let mut b = TruncationBuilder::new(self.dims);
                for (n, cs) in cells.iter().enumerate() {
                    for c in cs {
                        b.add(n, c.key.clone(), c.orbit, true, &c.faces)?;
                    }
                }
                b.finish(level, stabs, &self.reps, true)
            }
        }
    }

    fn product_builder(&self, level: usize) -> Result<(TruncationBuilder, bool)> {
        let (l, r, cap) = match &self.family {
            ComplexFamily::Product { left, right, cap } => (left.as_ref(), right.as_ref(), *cap),
            ComplexFamily::Grid { dim } => {
                if *dim == 0 {
                    let mut p = TruncationBuilder::new(0);
                    p.add(0, vec![0], 0, true, &[])?;
                    return Ok((p, true));
                }
                return grid_product(*dim).product_builder(level);
            }
            _ => unreachable!("not a product family"),
        };
        let t1 = l.build_subcomplex(level)?;
        let t2 = r.build_subcomplex(level)?;
        let complete = t1.is_complete() && t2.is_complete();
        Ok((product_cells_with_orbits(&t1, &t2, l, r, cap)?, complete))
    }

    /// Box truncation [0,m]^d for the Følner rule, with the flag "cell lies
    /// in F_m.L" per cell, and ♯F_m.
    pub fn folner_box(&self, m: usize) -> Result<(Truncation, Vec<Vec<bool>>, u64)> {
        if self.folner.is_none() {
            return Err(Error::NotAmenableFamily("the family carries no Følner rule".into()));
        }
        let factors = self.line_factors();
        if factors == 0 || m == 0 {
            return Err(Error::NotAmenableFamily("Følner boxes need at least one line factor and m ≥ 1".into()));
        }
        let mut b = segment(m);
        let mut in_fl: Vec<Vec<bool>> = vec![(0..=m).map(|j| j < m).collect(), vec![true; m]];
        let seg_flags = in_fl.clone();
        let seg = segment(m).finish(0, unit_stabs(1), &unit_reps(1), true)?;
        let mut dims = 1;
        for _ in 1..factors {
            let t = b.finish(0, unit_stabs(dims), &unit_reps(dims), true)?;
            let mut flags = vec![Vec::new(); dims + 2];
            for n in 0..=dims + 1 {
                for i in 0..=n.min(dims) {
                    let j = n - i;
                    if j > 1 {
                        continue;
                    }
                    for a in 0..t.num_cells(i) {
                        for c in 0..seg.num_cells(j) {
                            flags[n].push(in_fl[i][a] && seg_flags[j][c]);
                        }
                    }
                }
            }
            b = product_cells(&t, &seg, usize::MAX)?;
            in_fl = flags;
            dims += 1;
        }
        let t = b.finish(0, unit_stabs(dims), &unit_reps(dims), true)?;
        Ok((t, in_fl, (m as u64).pow(factors as u32)))
    }

    /// Number of line factors when the complex is ℤ^d acting on ℝ^d.
    fn line_factors(&self) -> usize {
        match &self.family {
            ComplexFamily::Line => 1,
            ComplexFamily::Grid { dim } => *dim,
            ComplexFamily::Product { left, right, .. } => {
                let (a, b) = (left.line_factors(), right.line_factors());
                if a == 0 || b == 0 {
                    0
                } else {
                    a + b
                }
            }
            _ => 0,
        }
    }
}

/// ℤ^d as an iterated product of lines (ℤ^0 is a point).
fn grid_product(dim: usize) -> CofiniteComplex {
    if dim == 0 {
        return CofiniteComplex::point();
    }
    let mut c = CofiniteComplex::line();
    for _ in 1..dim {
        c = CofiniteComplex::product(&c, &CofiniteComplex::line(), usize::MAX);
    }
    c
}

/// Orbit table for unlabeled scratch complexes: one orbit per dimension.
fn unit_stabs(dims: usize) -> Vec<Vec<Rational>> {
    vec![vec![int(1)]; dims + 1]
}

fn unit_reps(dims: usize) -> Vec<Vec<CellKey>> {
    vec![vec![Vec::new()]; dims + 1]
}

pub(crate) fn product_key(i: usize, a: &[i64], b: &[i64]) -> CellKey {
    let mut k = Vec::with_capacity(2 + a.len() + b.len());
    k.push(i as i64);
    k.push(a.len() as i64);
    k.extend_from_slice(a);
    k.extend_from_slice(b);
    k
}

fn line(level: usize) -> TruncationBuilder {
    let k = level as i64;
    let mut b = TruncationBuilder::new(1);
    for i in -k..=k {
        b.add(0, vec![i], 0, i.abs() < k, &[]).expect("vertex");
    }
    for i in -k..k {
        b.add(1, vec![i], 0, true, &[(vec![i], -1), (vec![i + 1], 1)]).expect("edge");
    }
    b
}

/// The segment [0,m] with unit edges; every vertex counts as interior.
fn segment(m: usize) -> TruncationBuilder {
    let mut b = TruncationBuilder::new(1);
    for i in 0..=m as i64 {
        b.add(0, vec![i], 0, true, &[]).expect("vertex");
    }
    for i in 0..m as i64 {
        b.add(1, vec![i], 0, true, &[(vec![i], -1), (vec![i + 1], 1)]).expect("edge");
    }
    b
}

/// Word length in a free product of copies of ℤ and ℤ/2.
fn tree_len(w: &[i64]) -> i64 {
    w.chunks(2).map(|p| p[1].abs()).sum()
}

fn edge_orbit_free(child: &[i64]) -> usize {
    child[child.len() - 2] as usize
}

/// Tree complex of a free product Cayley graph: level 0 is the root with
/// its first generator edge (every generator edge for free groups), level
/// k ≥ 1 the ball of radius k. Edge keys are the child word; the closure
/// `orbit_of(child)` gives (vertex orbit of the child, edge orbit).
fn tree_complex(orders: &[u32], level: usize, orbit_of: impl Fn(&[i64]) -> (usize, usize)) -> Result<TruncationBuilder> {
    let mut b = TruncationBuilder::new(1);
    let gens: Vec<(usize, i64)> =
        orders.iter().enumerate().flat_map(|(f, &n)| if n == 2 { vec![(f, 1)] } else { vec![(f, 1), (f, -1)] }).collect();
    let degree = gens.len();
    let mut verts: Vec<(CellKey, usize)> = vec![(Vec::new(), 0)];
    let mut edges: Vec<(CellKey, CellKey)> = Vec::new();
    if level == 0 {
        let firsts: Vec<(usize, i64)> = if orders.iter().all(|&n| n == 0) {
            (0..orders.len()).map(|f| (f, 1)).collect()
        } else {
            vec![(0, 1)]
        };
        for (f, d) in firsts {
            let w = word_times(&[], f, d, orders[f]);
            verts.push((w.clone(), 1));
            edges.push((Vec::new(), w));
        }
    } else {
        let mut q = VecDeque::from([0usize]);
        while let Some(i) = q.pop_front() {
            let (w, d) = verts[i].clone();
            if d == level {
                continue;
            }
            for &(f, e) in &gens {
                let c = word_times(&w, f, e, orders[f]);
                if tree_len(&c) > tree_len(&w) {
                    verts.push((c.clone(), d + 1));
                    edges.push((w.clone(), c));
                    q.push_back(verts.len() - 1);
                }
            }
            if verts.len() > super::graph::MAX_BALL_VERTICES {
                return Err(Error::ExpansionUnavailable(format!("tree level {level} too large")));
            }
        }
    }
    let vertex_orbit = |w: &[i64]| if w.is_empty() { 0 } else { orbit_of(w).0 };
    let mut nbr_count: HashMap<CellKey, usize> = HashMap::new();
    for (p, c) in &edges {
        *nbr_count.entry(p.clone()).or_default() += 1;
        *nbr_count.entry(c.clone()).or_default() += 1;
    }
    for (w, _) in &verts {
        let interior = nbr_count.get(w).copied().unwrap_or(0) == degree;
        b.add(0, w.clone(), vertex_orbit(w), interior, &[])?;
    }
    for (p, c) in edges {
        let (_, orbit) = orbit_of(&c);
        // Edges run g → g·x: forward when the child's last exponent is
        // positive, backward otherwise. Bipartite trees run even → odd.
        let forward = if orders.iter().all(|&n| n == 2) { p.len() / 2 % 2 == 0 } else { *c.last().expect("child") > 0 };
        let faces = if forward { vec![(p.clone(), -1), (c.clone(), 1)] } else { vec![(c.clone(), -1), (p.clone(), 1)] };
        b.add(1, c, orbit, true, &faces)?;
    }
    Ok(b)
}

/// Product cells with orbit ids enumerated as in `CofiniteComplex::product`.
fn product_cells_with_orbits(t1: &Truncation, t2: &Truncation, l: &CofiniteComplex, r: &CofiniteComplex, cap: usize) -> Result<TruncationBuilder> {
    let dims = l.dims + r.dims;
    let mut offset: Vec<HashMap<usize, usize>> = vec![HashMap::new(); dims + 1];
    for (n, off) in offset.iter_mut().enumerate() {
        let mut next = 0;
        for i in 0..=n.min(l.dims) {
            let j = n - i;
            if j > r.dims {
                continue;
            }
            off.insert(i, next);
            next += l.stabs[i].len() * r.stabs[j].len();
        }
    }
    product_impl(t1, t2, cap, |n, i, o1, o2| offset[n][&i] + o1 * r.stabs[n - i].len() + o2)
}

fn product_cells(t1: &Truncation, t2: &Truncation, cap: usize) -> Result<TruncationBuilder> {
    product_impl(t1, t2, cap, |_, _, _, _| 0)
}

fn product_impl(t1: &Truncation, t2: &Truncation, cap: usize, orbit: impl Fn(usize, usize, usize, usize) -> usize) -> Result<TruncationBuilder> {
    let total = t1.total_cells() * t2.total_cells();
    if total > cap {
        return Err(Error::ProductTooLarge { cells: total, cap });
    }
    let (d1, d2) = (t1.dims(), t2.dims());
    let mut b = TruncationBuilder::new(d1 + d2);
    for n in 0..=d1 + d2 {
        for i in 0..=n.min(d1) {
            let j = n - i;
            if j > d2 {
                continue;
            }
            let sign = if i % 2 == 0 { 1 } else { -1 };
            for (ai, a) in t1.cells(i).iter().enumerate() {
                for (bi, c) in t2.cells(j).iter().enumerate() {
                    let mut faces = Vec::new();
                    if i > 0 {
                        for &(r, s) in t1.boundary(i)?.column(ai) {
                            faces.push((product_key(i - 1, &t1.cells(i - 1)[r].key, &c.key), s));
                        }
                    }
                    if j > 0 {
                        for &(r, s) in t2.boundary(j)?.column(bi) {
                            faces.push((product_key(i, &a.key, &t2.cells(j - 1)[r].key), sign * s));
                        }
                    }
                    b.add(n, product_key(i, &a.key, &c.key), orbit(n, i, a.orbit, c.orbit), a.interior && c.interior, &faces)?;
                }
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn plane_box_counts() {
        let c = CofiniteComplex::grid(2);
        for k in 0..4usize {
            let t = c.build_subcomplex(k).unwrap();
            let s = 2 * k + 1;
            assert_eq!(t.num_cells(0), s * s);
            assert_eq!(t.num_cells(1), 2 * s * (2 * k));
            assert_eq!(t.num_cells(2), 4 * k * k);
            assert!(t.boundary_squares_to_zero());
        }
    }

    #[test]
    fn wedge_cover_level_zero_is_the_fundamental_domain() {
        let t = CofiniteComplex::free_cover(2).build_subcomplex(0).unwrap();
        assert_eq!((t.num_cells(0), t.num_cells(1)), (3, 2));
        assert!(t.orbits(0).iter().chain(t.orbits(1)).all(|o| o.rep.is_some()));
    }

    #[test]
    fn levels_are_nested() {
        for c in [CofiniteComplex::free_cover(2), CofiniteComplex::bt_tree(2), CofiniteComplex::grid(2), CofiniteComplex::line()] {
            let a = c.build_subcomplex(1).unwrap();
            let b = c.build_subcomplex(2).unwrap();
            for n in 0..=a.dims() {
                for cell in a.cells(n) {
                    let j = b.index_of(n, &cell.key).expect("nested");
                    assert_eq!(b.cells(n)[j].orbit, cell.orbit);
                }
            }
        }
    }

    #[test]
    fn product_weights_multiply() {
        let a = CofiniteComplex::bt_tree(2);
        let p = CofiniteComplex::product(&a, &CofiniteComplex::line(), DEFAULT_PRODUCT_CAP);
        assert_eq!(p.orbit_stabs()[0], vec![int(3), int(3)]);
        assert_eq!(p.euler_characteristic(), a.euler_characteristic() * CofiniteComplex::line().euler_characteristic());
        let t = p.build_subcomplex(2).unwrap();
        assert!(t.boundary_squares_to_zero());
        assert!(t.orbits(2).iter().all(|o| o.rep.is_some()));
    }

    #[test]
    fn product_cap_is_enforced() {
        let w = CofiniteComplex::free_cover(2);
        let p = CofiniteComplex::product(&w, &w, 1000);
        assert!(matches!(p.build_subcomplex(3), Err(Error::ProductTooLarge { .. })));
    }

    #[test]
    fn point_times_complex_keeps_counts() {
        let c = CofiniteComplex::free_cover(2);
        let p = CofiniteComplex::product(&CofiniteComplex::point(), &c, DEFAULT_PRODUCT_CAP);
        let (a, b) = (p.build_subcomplex(2).unwrap(), c.build_subcomplex(2).unwrap());
        for n in 0..=1 {
            assert_eq!(a.num_cells(n), b.num_cells(n));
        }
    }

    #[test]
    fn bt_tree_orbit_data() {
        let c = CofiniteComplex::bt_tree(3);
        assert_eq!(c.euler_characteristic(), rat(2, 4) - int(1));
        let t = c.build_subcomplex(2).unwrap();
        assert_eq!(t.num_cells(1), 4 + 4 * 3);
        assert_eq!(c.boundary_pattern(1, 0).unwrap().len(), 2);
    }

    #[test]
    fn simplicial_labels_must_cover_the_closure() {
        let mut table = BTreeMap::new();
        table.insert(0, int(1));
        let labels = [Some(0)];
        assert!(CofiniteComplex::simplicial(&[vec![0, 1]], Some((&labels, &table))).is_err());
    }

    #[test]
    fn folner_flags() {
        let (t, flags, mass) = CofiniteComplex::grid(2).folner_box(3).unwrap();
        assert_eq!(mass, 9);
        assert_eq!(t.num_cells(0), 16);
        assert_eq!(flags[0].iter().filter(|&&f| f).count(), 9);
        assert_eq!(flags[2].iter().filter(|&&f| f).count(), 9);
        assert!(CofiniteComplex::free_cover(2).folner_box(3).is_err());
    }
}
