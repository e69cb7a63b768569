use std::collections::HashMap;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{format_rational, Rational};
use crate::sparse::SparseIntMatrix;

/// Family-specific cell identifier, unique within a dimension and stable
/// across exhaustion levels.
pub type CellKey = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub key: CellKey,
    pub orbit: usize,
    /// The full coboundary of this cell in the infinite complex lies inside
    /// the truncation.
    pub interior: bool,
}

/// Orbit data for one dimension: stabilizer measure of the unoriented cell
/// and the index of the fundamental-domain representative, if realized.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSlot {
    pub stab: Rational,
    pub rep: Option<usize>,
}

/// A finite cell complex with orbit labels. `boundary[n]` maps n-chains to
/// (n-1)-chains; `boundary[0]` is the empty map.
#[derive(Clone, Debug)]
pub struct Truncation {
    level: usize,
    cells: Vec<Vec<Cell>>,
    boundary: Vec<SparseIntMatrix>,
    index: Vec<HashMap<CellKey, usize>>,
    orbits: Vec<Vec<OrbitSlot>>,
    complete: bool,
}

impl Truncation {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dims(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    /// True when the truncation is the whole (finite) complex.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn cells(&self, n: usize) -> &[Cell] {
        self.cells.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn num_cells(&self, n: usize) -> usize {
        self.cells(n).len()
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, n: usize, key: &[i64]) -> Option<usize> {
        self.index.get(n)?.get(key).copied()
    }

    pub fn boundary(&self, n: usize) -> Result<&SparseIntMatrix> {
        if n == 0 || n > self.dims() {
            return Err(Error::DimensionOutOfRange { degree: n, dims: self.dims() });
        }
        Ok(&self.boundary[n])
    }

    pub fn orbits(&self, n: usize) -> &[OrbitSlot] {
        self.orbits.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Checks ∂∘∂ = 0 in exact integer arithmetic for every dimension.
    pub fn boundary_squares_to_zero(&self) -> bool {
        (2..=self.dims()).all(|n| self.boundary[n - 1].mul(&self.boundary[n]).is_zero())
    }

    /// Component label of every vertex in the 1-skeleton.
    pub fn vertex_components(&self) -> (Vec<usize>, Vec<usize>) {
        let nv = self.num_cells(0);
        let mut uf = UnionFind::new(nv);
        if self.dims() >= 1 {
            for col in self.boundary[1].columns() {
                if let [(a, _), (b, _)] = col {
                    uf.union(*a, *b);
                }
            }
        }
        let mut label = vec![usize::MAX; nv];
        let mut sizes = Vec::new();
        for v in 0..nv {
            let r = uf.find(v);
            if label[r] == usize::MAX {
                label[r] = sizes.len();
                sizes.push(0);
            }
            label[v] = label[r];
            sizes[label[v]] += 1;
        }
        (label, sizes)
    }

    /// μ(G) for a complete truncation: |orbit| · μ(G_s), which must agree
    /// across every orbit in every dimension.
    pub fn group_measure(&self) -> Result<Rational> {
        if !self.complete {
            return Err(Error::InternalInconsistency("group measure of an infinite complex".into()));
        }
        let mut counts: Vec<Vec<usize>> = self.orbits.iter().map(|o| vec![0; o.len()]).collect();
        for (n, cells) in self.cells.iter().enumerate() {
            for c in cells {
                counts[n][c.orbit] += 1;
            }
        }
        let mut measure: Option<Rational> = None;
        for (n, orbits) in self.orbits.iter().enumerate() {
            for (o, slot) in orbits.iter().enumerate() {
                if counts[n][o] == 0 {
                    continue;
                }
                let m = &slot.stab * Rational::from_integer(counts[n][o].into());
                match &measure {
                    None => measure = Some(m),
                    Some(prev) if *prev != m => {
                        return Err(Error::Consistency {
                            orbit: format!("{n}:{o}"),
                            msg: format!("orbit mass {} differs from {}", format_rational(&m), format_rational(prev)),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(measure.unwrap_or_else(Rational::one))
    }

    /// Σ_n (−1)^n Σ_{orbits} 1/μ(G_s), from the declared orbit data.
    pub fn orbit_euler_characteristic(&self) -> Rational {
        let mut chi = Rational::zero();
        for (n, orbits) in self.orbits.iter().enumerate() {
            for slot in orbits {
                let t = slot.stab.recip();
                if n % 2 == 0 {
                    chi += t;
                } else {
                    chi -= t;
                }
            }
        }
        chi
    }

    /// Multiplies every stabilizer measure by `c`.
    pub fn scaled(&self, c: &Rational) -> Truncation {
        let mut t = self.clone();
        for orbits in &mut t.orbits {
            for slot in orbits {
                slot.stab = &slot.stab * c;
            }
        }
        t
    }

    /// Appends a new top dimension whose cells have the given boundaries.
    pub fn with_top_cells(&self, cells: Vec<Cell>, boundary: SparseIntMatrix, orbits: Vec<OrbitSlot>) -> Truncation {
        assert_eq!(boundary.ncols(), cells.len());
        assert_eq!(boundary.nrows(), self.num_cells(self.dims()));
        let mut t = self.clone();
        let index = cells.iter().enumerate().map(|(i, c)| (c.key.clone(), i)).collect();
        t.cells.push(cells);
        t.boundary.push(boundary);
        t.index.push(index);
        t.orbits.push(orbits);
        t
    }
}

/// Incremental construction; faces must already be present.
#[derive(Debug)]
pub struct TruncationBuilder {
    cells: Vec<Vec<Cell>>,
    columns: Vec<Vec<Vec<(usize, i64)>>>,
    index: Vec<HashMap<CellKey, usize>>,
}

impl TruncationBuilder {
    pub fn new(dims: usize) -> Self {
        Self {
            cells: vec![Vec::new(); dims + 1],
            columns: vec![Vec::new(); dims + 1],
            index: vec![HashMap::new(); dims + 1],
        }
    }

    pub fn contains(&self, n: usize, key: &[i64]) -> bool {
        self.index[n].contains_key(key)
    }

    pub fn len(&self, n: usize) -> usize {
        self.cells[n].len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Vec::is_empty)
    }

    /// Adds a cell; duplicate keys are ignored and return the existing index.
    pub fn add(&mut self, n: usize, key: CellKey, orbit: usize, interior: bool, faces: &[(CellKey, i64)]) -> Result<usize> {
        if let Some(&i) = self.index[n].get(&key) {
            return Ok(i);
        }
        let mut col = Vec::with_capacity(faces.len());
        for (fk, sign) in faces {
            let Some(&r) = self.index[n - 1].get(fk) else {
                return Err(Error::InternalInconsistency(format!("face {fk:?} of {key:?} missing in dimension {}", n - 1)));
            };
            col.push((r, *sign));
        }
        let i = self.cells[n].len();
        self.index[n].insert(key.clone(), i);
        self.cells[n].push(Cell { key, orbit, interior });
        self.columns[n].push(col);
        Ok(i)
    }

    /// Finalizes; `reps[n][o]` is the key of the fundamental-domain
    /// representative of orbit `o` in dimension `n`.
    pub fn finish(self, level: usize, stabs: Vec<Vec<Rational>>, reps: &[Vec<CellKey>], complete: bool) -> Result<Truncation> {
        let dims = self.cells.len() - 1;
        if stabs.len() != dims + 1 || reps.len() != dims + 1 {
            return Err(Error::InternalInconsistency("orbit data does not match dimension".into()));
        }
        let mut boundary = Vec::with_capacity(dims + 1);
        boundary.push(SparseIntMatrix::zeros(0, self.cells[0].len()));
        for (n, cols) in self.columns.into_iter().enumerate().skip(1) {
            boundary.push(SparseIntMatrix::from_columns(self.cells[n - 1].len(), cols));
        }
        let mut orbits = Vec::with_capacity(dims + 1);
        for n in 0..=dims {
            if stabs[n].len() != reps[n].len() {
                return Err(Error::InternalInconsistency(format!("orbit data length mismatch in dimension {n}")));
            }
            for c in &self.cells[n] {
                if c.orbit >= stabs[n].len() {
                    return Err(Error::InternalInconsistency(format!("cell {:?} has unknown orbit {}", c.key, c.orbit)));
                }
            }
            let slots = stabs[n]
                .iter()
                .zip(&reps[n])
                .enumerate()
                .map(|(o, (s, k))| {
                    let rep = self.index[n].get(k).copied().filter(|&i| self.cells[n][i].orbit == o);
                    OrbitSlot { stab: s.clone(), rep }
                })
                .collect();
            orbits.push(slots);
        }
        Ok(Truncation { level, cells: self.cells, boundary, index: self.index, orbits, complete })
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    fn edge() -> Truncation {
        let mut b = TruncationBuilder::new(1);
        b.add(0, vec![0], 0, true, &[]).unwrap();
        b.add(0, vec![1], 0, true, &[]).unwrap();
        b.add(1, vec![0, 1], 0, true, &[(vec![0], -1), (vec![1], 1)]).unwrap();
        b.finish(0, vec![vec![int(1)], vec![int(2)]], &[vec![vec![0]], vec![vec![0, 1]]], true).unwrap()
    }

    #[test]
    fn single_edge_boundary_column() {
        let t = edge();
        assert_eq!(t.boundary(1).unwrap().column(0), &[(0, -1), (1, 1)]);
        assert!(matches!(t.boundary(2), Err(Error::DimensionOutOfRange { .. })));
        assert!(matches!(t.boundary(0), Err(Error::DimensionOutOfRange { .. })));
    }

    #[test]
    fn group_measure_and_euler_count() {
        let t = edge();
        assert_eq!(t.group_measure().unwrap(), int(2));
        assert_eq!(t.orbit_euler_characteristic(), crate::exact::rat(1, 2));
    }

    #[test]
    fn missing_face_is_reported() {
        let mut b = TruncationBuilder::new(1);
        b.add(0, vec![0], 0, true, &[]).unwrap();
        assert!(b.add(1, vec![0], 0, true, &[(vec![5], 1)]).is_err());
    }
}
