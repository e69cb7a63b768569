use std::collections::{HashMap, VecDeque};

use num::{One, Signed};

use super::truncation::{Cell, CellKey, OrbitSlot, Truncation, TruncationBuilder, UnionFind};
use crate::error::{Error, Result};
use crate::exact::{format_rational, int, rat, Rational};
use crate::sparse::SparseIntMatrix;

/// Largest ball (in vertices) any expander will produce.
pub const MAX_BALL_VERTICES: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeOrbit {
    /// Number of neighbors of the root reached by an edge of this orbit
    /// leaving the root in the orbit's own direction.
    pub arity: u32,
    /// Measure of the stabilizer of an oriented edge.
    pub stab: Rational,
    /// The orbit contains each edge together with its reversal.
    pub flipped: bool,
}

impl EdgeOrbit {
    /// Measure of the stabilizer of the unoriented edge.
    pub fn unordered_stab(&self) -> Rational {
        if self.flipped {
            &self.stab * int(2)
        } else {
            self.stab.clone()
        }
    }

    /// Number of root-incident edges of this orbit.
    pub fn root_degree(&self) -> usize {
        self.arity as usize * if self.flipped { 1 } else { 2 }
    }
}

/// Neighbor-expansion rules. Generator slots are numbered in declaration
/// order; each slot belongs to exactly one edge orbit.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphFamily {
    /// Cayley graph of a free product of cyclic groups; order 0 is ℤ.
    FreeProduct { orders: Vec<u32> },
    /// Standard Cayley graph of ℤ^d.
    Grid { dim: usize },
    /// Explicit connected graph; each edge carries its orbit id. Vertex 0 is
    /// the root.
    Finite { vertices: usize, edges: Vec<(usize, usize, usize)> },
}

impl GraphFamily {
    fn slots(&self) -> usize {
        match self {
            GraphFamily::FreeProduct { orders } => orders.len(),
            GraphFamily::Grid { dim } => *dim,
            GraphFamily::Finite { .. } => 0,
        }
    }

    fn slot_flipped(&self, s: usize) -> bool {
        matches!(self, GraphFamily::FreeProduct { orders } if orders[s] == 2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitGraph {
    root_weight: Rational,
    edge_orbits: Vec<EdgeOrbit>,
    family: GraphFamily,
    slot_orbit: Vec<usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl OrbitGraph {
    /// Validates orbit data against the family. For generator families the
    /// orbits claim slots in order, `arity` slots each.
    pub fn new(family: GraphFamily, root_weight: Rational, edge_orbits: Vec<EdgeOrbit>) -> Result<Self> {
        if !root_weight.is_positive() {
            return Err(Error::Consistency { orbit: "root".into(), msg: "root weight must be positive".into() });
        }
        for (i, o) in edge_orbits.iter().enumerate() {
            if o.arity == 0 || !o.stab.is_positive() {
                return Err(Error::Consistency { orbit: i.to_string(), msg: "arity and stab must be positive".into() });
            }
            if &o.stab * int(o.arity as i64) != root_weight {
                return Err(Error::Consistency {
                    orbit: i.to_string(),
                    msg: format!(
                        "arity {} x stab {} != root weight {}",
                        o.arity,
                        format_rational(&o.stab),
                        format_rational(&root_weight)
                    ),
                });
            }
        }
        let mut slot_orbit = Vec::new();
        let mut adjacency = Vec::new();
        match &family {
            GraphFamily::FreeProduct { orders } if orders.contains(&1) => {
                return Err(Error::Consistency { orbit: "family".into(), msg: "factor of order 1".into() });
            }
            GraphFamily::Finite { vertices, edges } => {
                adjacency = vec![Vec::new(); *vertices];
                let mut uf = UnionFind::new(*vertices);
                for &(u, v, o) in edges {
                    if u >= *vertices || v >= *vertices || u == v {
                        return Err(Error::Consistency { orbit: o.to_string(), msg: format!("bad edge {u} {v}") });
                    }
                    if o >= edge_orbits.len() {
                        return Err(Error::Consistency { orbit: o.to_string(), msg: "edge refers to an undeclared orbit".into() });
                    }
                    adjacency[u].push((v, o));
                    adjacency[v].push((u, o));
                    uf.union(u, v);
                }
                if *vertices == 0 {
                    if !edge_orbits.is_empty() {
                        return Err(Error::Consistency { orbit: "0".into(), msg: "the empty graph has no edge orbits".into() });
                    }
                    return Ok(Self { root_weight, edge_orbits, family, slot_orbit, adjacency });
                }
                if (0..*vertices).any(|v| uf.find(v) != uf.find(0)) {
                    return Err(Error::InternalInconsistency("finite graph is disconnected".into()));
                }
                for (i, o) in edge_orbits.iter().enumerate() {
                    let deg = adjacency[0].iter().filter(|&&(_, eo)| eo == i).count();
                    if deg != o.root_degree() {
                        return Err(Error::Consistency {
                            orbit: i.to_string(),
                            msg: format!("root has {deg} incident edges, declared {}", o.root_degree()),
                        });
                    }
                }
            }
            _ => {
                for (i, o) in edge_orbits.iter().enumerate() {
                    for _ in 0..o.arity {
                        let s = slot_orbit.len();
                        if s >= family.slots() {
                            return Err(Error::Consistency { orbit: i.to_string(), msg: "more arity than generator slots".into() });
                        }
                        if family.slot_flipped(s) != o.flipped {
                            return Err(Error::Consistency {
                                orbit: i.to_string(),
                                msg: format!("generator slot {s} disagrees with flipped={}", o.flipped as u8),
                            });
                        }
                        slot_orbit.push(i);
                    }
                }
                if slot_orbit.len() != family.slots() {
                    return Err(Error::Consistency {
                        orbit: "family".into(),
                        msg: format!("orbits cover {} of {} generator slots", slot_orbit.len(), family.slots()),
                    });
                }
            }
        }
        Ok(Self { root_weight, edge_orbits, family, slot_orbit, adjacency })
    }

    /// Cayley graph of F_k: one unflipped orbit per generator.
    pub fn free(k: usize) -> Self {
        Self::with_default_orbits(GraphFamily::FreeProduct { orders: vec![0; k] })
    }

    /// Cayley graph of ℤ^d.
    pub fn grid(d: usize) -> Self {
        Self::with_default_orbits(GraphFamily::Grid { dim: d })
    }

    pub fn free_product(orders: Vec<u32>) -> Result<Self> {
        if orders.contains(&1) {
            return Err(Error::Consistency { orbit: "family".into(), msg: "factor of order 1".into() });
        }
        Ok(Self::with_default_orbits(GraphFamily::FreeProduct { orders }))
    }

    /// (q+1)-regular tree with a single flipped orbit of stab 1/(q+1).
    pub fn regular_tree(q: u32) -> Self {
        let orbit = EdgeOrbit { arity: q + 1, stab: rat(1, q as i64 + 1), flipped: true };
        Self::new(GraphFamily::FreeProduct { orders: vec![2; q as usize + 1] }, int(1), vec![orbit])
            .expect("regular tree data is consistent")
    }

    fn with_default_orbits(family: GraphFamily) -> Self {
        let orbits = (0..family.slots())
            .map(|s| EdgeOrbit { arity: 1, stab: int(1), flipped: family.slot_flipped(s) })
            .collect();
        Self::new(family, int(1), orbits).expect("default orbit data is consistent")
    }

    pub fn root_weight(&self) -> &Rational {
        &self.root_weight
    }

    pub fn edge_orbits(&self) -> &[EdgeOrbit] {
        &self.edge_orbits
    }

    pub fn family(&self) -> &GraphFamily {
        &self.family
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.family, GraphFamily::Finite { .. })
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == Some(0)
    }

    pub fn vertex_count(&self) -> Option<usize> {
        match &self.family {
            GraphFamily::Finite { vertices, .. } => Some(*vertices),
            _ => None,
        }
    }

    /// μ(G) when the graph is finite: |V| · μ(G_ρ).
    pub fn total_measure(&self) -> Option<Rational> {
        self.vertex_count().map(|n| &self.root_weight * int(n as i64))
    }

    /// Whether the cycle space is trivial.
    pub fn is_tree(&self) -> bool {
        match &self.family {
            GraphFamily::FreeProduct { orders } => orders.iter().all(|&o| o == 0 || o == 2),
            GraphFamily::Grid { dim } => *dim <= 1,
            GraphFamily::Finite { vertices, edges } => edges.len() + 1 == (*vertices).max(1),
        }
    }

    pub fn scaled(&self, c: &Rational) -> OrbitGraph {
        let mut g = self.clone();
        g.root_weight = &g.root_weight * c;
        for o in &mut g.edge_orbits {
            o.stab = &o.stab * c;
        }
        g
    }

    fn root_key(&self) -> CellKey {
        match &self.family {
            GraphFamily::FreeProduct { .. } => Vec::new(),
            GraphFamily::Grid { dim } => vec![0; *dim],
            GraphFamily::Finite { .. } => vec![0],
        }
    }

    /// Neighbors with the orbit of the connecting edge, in a fixed order.
    fn neighbors(&self, v: &[i64]) -> Vec<(CellKey, usize)> {
        match &self.family {
            GraphFamily::FreeProduct { orders } => {
                let mut out = Vec::with_capacity(2 * orders.len());
                for (s, &n) in orders.iter().enumerate() {
                    out.push((word_times(v, s, 1, n), self.slot_orbit[s]));
                    if n != 2 {
                        out.push((word_times(v, s, -1, n), self.slot_orbit[s]));
                    }
                }
                out
            }
            GraphFamily::Grid { dim } => {
                let mut out = Vec::with_capacity(2 * dim);
                for s in 0..*dim {
                    for d in [1, -1] {
                        let mut w = v.to_vec();
                        w[s] += d;
                        out.push((w, self.slot_orbit[s]));
                    }
                }
                out
            }
            GraphFamily::Finite { .. } => self.adjacency[v[0] as usize].iter().map(|&(w, o)| (vec![w as i64], o)).collect(),
        }
    }
}

/// Right multiplication of a free-product normal form, stored as flattened
/// (factor, exponent) pairs, by the generator of `factor` raised to `delta`.
pub(crate) fn word_times(w: &[i64], factor: usize, delta: i64, order: u32) -> CellKey {
    let f = factor as i64;
    let reduce = |e: i64| if order == 0 { e } else { e.rem_euclid(order as i64) };
    let mut out = w.to_vec();
    let n = out.len();
    if n >= 2 && out[n - 2] == f {
        let e = reduce(out[n - 1] + delta);
        if e == 0 {
            out.truncate(n - 2);
        } else {
            out[n - 1] = e;
        }
    } else {
        out.push(f);
        out.push(reduce(delta));
    }
    out
}

/// Rooted ball of the given radius. Vertices appear in breadth-first order
/// and edges in order of their later endpoint, so each ball is a prefix of
/// the next. Cell keys are vertex indices; edges run from lower to higher
/// index.
pub fn build_ball(g: &OrbitGraph, radius: usize) -> Result<Truncation> {
    let mut keys: Vec<CellKey> = vec![g.root_key()];
    let mut index: HashMap<CellKey, usize> = HashMap::new();
    index.insert(keys[0].clone(), 0);
    let mut dist = vec![0usize];
    let mut queue = VecDeque::from([0usize]);
    let mut nbrs: Vec<Vec<(CellKey, usize)>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let ns = g.neighbors(&keys[i]);
        if dist[i] < radius {
            for (w, _) in &ns {
                if !index.contains_key(w) {
                    if keys.len() >= MAX_BALL_VERTICES {
                        return Err(Error::ExpansionUnavailable(format!("ball of radius {radius} exceeds {MAX_BALL_VERTICES} vertices")));
                    }
                    index.insert(w.clone(), keys.len());
                    keys.push(w.clone());
                    dist.push(dist[i] + 1);
                    queue.push_back(keys.len() - 1);
                }
            }
        }
        if nbrs.len() <= i {
            nbrs.resize(i + 1, Vec::new());
        }
        nbrs[i] = ns;
    }
    let nv = keys.len();
    let mut b = TruncationBuilder::new(1);
    for (i, ns) in nbrs.iter().enumerate() {
        let interior = ns.iter().all(|(w, _)| index.contains_key(w));
        b.add(0, vec![i as i64], 0, interior, &[])?;
    }
    let mut edge_reps: Vec<Option<CellKey>> = vec![None; g.edge_orbits.len()];
    for (j, ns) in nbrs.iter().enumerate() {
        for (w, o) in ns {
            let Some(&i) = index.get(w) else { continue };
            if i >= j {
                continue;
            }
            let key = vec![i as i64, j as i64];
            if b.contains(1, &key) {
                continue;
            }
            if i == 0 && edge_reps[*o].is_none() {
                edge_reps[*o] = Some(key.clone());
            }
            b.add(1, key, *o, true, &[(vec![i as i64], -1), (vec![j as i64], 1)])?;
        }
    }
    let complete = g.is_finite() && nbrs.iter().all(|ns| ns.iter().all(|(w, _)| index.contains_key(w)));
    let stabs = vec![vec![g.root_weight.clone()], g.edge_orbits.iter().map(EdgeOrbit::unordered_stab).collect()];
    let reps = vec![vec![vec![0]], edge_reps.into_iter().map(|k| k.unwrap_or_default()).collect()];
    debug_assert_eq!(b.len(0), nv);
    b.finish(radius, stabs, &reps, complete)
}

/// Breadth-first spanning forest of the 1-skeleton, as edge indices. Ties
/// are broken by edge index.
pub fn bfs_spanning_tree(t: &Truncation) -> Vec<usize> {
    let nv = t.num_cells(0);
    let adj = vertex_adjacency(t);
    let mut seen = vec![false; nv];
    let mut tree = Vec::new();
    for s in 0..nv {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &(w, e) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    tree.push(e);
                    q.push_back(w);
                }
            }
        }
    }
    tree
}

/// (neighbor, edge) lists sorted by edge index. Loops are skipped.
pub(crate) fn vertex_adjacency(t: &Truncation) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); t.num_cells(0)];
    if t.dims() >= 1 {
        for (e, col) in t.boundary(1).expect("dimension 1 exists").columns().enumerate() {
            if let [(a, _), (b, _)] = col {
                adj[*a].push((*b, e));
                adj[*b].push((*a, e));
            }
        }
    }
    adj
}

/// (tail, head) of an edge from its boundary column.
pub(crate) fn endpoints(col: &[(usize, i64)]) -> Option<(usize, usize)> {
    match col {
        [(a, -1), (b, 1)] => Some((*a, *b)),
        [(a, 1), (b, -1)] => Some((*b, *a)),
        _ => None,
    }
}

/// Star basis (coboundaries of vertex indicators, one column per vertex) and
/// cycle basis (alternating indicator of the fundamental cycle of each
/// non-tree edge), both as edge-indexed columns.
pub fn star_and_cycle_spaces(t: &Truncation, spanning_tree: &[usize]) -> Result<(SparseIntMatrix, SparseIntMatrix)> {
    let d1 = t.boundary(1)?;
    let star = d1.transpose();
    let (cycles, _) = fundamental_cycles(t, spanning_tree)?;
    Ok((star, cycles))
}

/// Cycle columns together with the non-tree edge each one is built on.
fn fundamental_cycles(t: &Truncation, tree: &[usize]) -> Result<(SparseIntMatrix, Vec<usize>)> {
    let d1 = t.boundary(1)?;
    let (nv, ne) = (t.num_cells(0), t.num_cells(1));
    let mut uf = UnionFind::new(nv);
    let mut in_tree = vec![false; ne];
    let mut tree_adj = vec![Vec::new(); nv];
    for &e in tree {
        let Some((a, b)) = (e < ne).then(|| endpoints(d1.column(e))).flatten() else {
            return Err(Error::InvalidTree(format!("edge {e} is not an edge of the truncation")));
        };
        if in_tree[e] || !uf.union(a, b) {
            return Err(Error::InvalidTree(format!("edge {e} closes a cycle")));
        }
        in_tree[e] = true;
        tree_adj[a].push((b, e));
        tree_adj[b].push((a, e));
    }
    let (_, sizes) = t.vertex_components();
    if tree.len() + sizes.len() != nv {
        return Err(Error::InvalidTree(format!("{} edges do not span {} vertices", tree.len(), nv)));
    }
    let mut parent = vec![(usize::MAX, usize::MAX); nv];
    let mut depth = vec![usize::MAX; nv];
    for s in 0..nv {
        if depth[s] != usize::MAX {
            continue;
        }
        depth[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &(w, e) in &tree_adj[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent[w] = (v, e);
                    q.push_back(w);
                }
            }
        }
    }
    let up_sign = |c: usize| {
        let (_, e) = parent[c];
        let (tail, _) = endpoints(d1.column(e)).expect("tree edge");
        if tail == c {
            1
        } else {
            -1
        }
    };
    let mut cols = Vec::new();
    let non_tree: Vec<usize> = (0..ne).filter(|&e| !in_tree[e]).collect();
    for &e in &non_tree {
        let Some((a, b)) = endpoints(d1.column(e)) else {
            // A loop is its own cycle.
            cols.push(vec![(e, 1)]);
            continue;
        };
        let mut col = vec![(e, 1)];
        let (mut x, mut y) = (b, a);
        while x != y {
            if depth[x] >= depth[y] {
                col.push((parent[x].1, up_sign(x)));
                x = parent[x].0;
            } else {
                col.push((parent[y].1, -up_sign(y)));
                y = parent[y].0;
            }
        }
        cols.push(col);
    }
    Ok((SparseIntMatrix::from_columns(ne, cols), non_tree))
}

/// Adds the fundamental cycles of the breadth-first tree as 2-cells, so the
/// cycle space becomes a space of boundaries.
pub fn with_fundamental_cycles(t: &Truncation) -> Result<Truncation> {
    if t.dims() != 1 {
        return Err(Error::DimensionOutOfRange { degree: 2, dims: t.dims() });
    }
    let tree = bfs_spanning_tree(t);
    let (cycles, non_tree) = fundamental_cycles(t, &tree)?;
    let edges = t.cells(1);
    let cells = non_tree.iter().map(|&e| Cell { key: edges[e].key.clone(), orbit: 0, interior: true }).collect();
    Ok(t.with_top_cells(cells, cycles, vec![OrbitSlot { stab: Rational::one(), rep: None }]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::integer_rank;

    #[test]
    fn radius_zero_is_the_root() {
        let t = build_ball(&OrbitGraph::free(2), 0).unwrap();
        assert_eq!((t.num_cells(0), t.num_cells(1)), (1, 0));
    }

    #[test]
    fn unit_balls_of_free_group_and_square_lattice() {
        for g in [OrbitGraph::free(2), OrbitGraph::grid(2)] {
            let t = build_ball(&g, 1).unwrap();
            assert_eq!((t.num_cells(0), t.num_cells(1)), (5, 4));
        }
    }

    #[test]
    fn free_group_ball_sizes() {
        let t = build_ball(&OrbitGraph::free(2), 4).unwrap();
        assert_eq!(t.num_cells(1), 2 * (81 - 1));
        assert_eq!(t.num_cells(0), 2 * 81 - 1);
    }

    #[test]
    fn balls_are_prefixes() {
        let g = OrbitGraph::free_product(vec![3, 0]).unwrap();
        let small = build_ball(&g, 3).unwrap();
        let big = build_ball(&g, 4).unwrap();
        for n in 0..=1 {
            for (s, b) in small.cells(n).iter().zip(big.cells(n)) {
                assert_eq!((&s.key, s.orbit), (&b.key, b.orbit));
            }
        }
        assert_eq!(small.boundary(1).unwrap().column(5), big.boundary(1).unwrap().column(5));
    }

    #[test]
    fn word_reduction() {
        assert_eq!(word_times(&[0, 1], 0, -1, 0), Vec::<i64>::new());
        assert_eq!(word_times(&[0, 2], 0, 1, 3), Vec::<i64>::new());
        assert_eq!(word_times(&[1, 1], 0, -1, 3), vec![1, 1, 0, 2]);
        assert_eq!(word_times(&[0, 1], 0, 1, 2), Vec::<i64>::new());
    }

    fn finite(n: usize, edges: &[(usize, usize)]) -> Truncation {
        let deg = edges.iter().filter(|&&(a, b)| a == 0 || b == 0).count() as u32;
        let orbit = EdgeOrbit { arity: deg, stab: rat(1, deg as i64), flipped: true };
        let g = OrbitGraph::new(
            GraphFamily::Finite { vertices: n, edges: edges.iter().map(|&(a, b)| (a, b, 0)).collect() },
            int(1),
            vec![orbit],
        )
        .unwrap();
        build_ball(&g, n).unwrap()
    }

    #[test]
    fn triangle_and_square_cycle_counts() {
        for (n, edges, star_rank) in [(3, vec![(0, 1), (1, 2), (2, 0)], 2), (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], 3)] {
            let t = finite(n, &edges);
            assert!(t.is_complete());
            let tree = bfs_spanning_tree(&t);
            let (star, cyc) = star_and_cycle_spaces(&t, &tree).unwrap();
            assert_eq!(integer_rank(&star), star_rank);
            assert_eq!(cyc.ncols(), 1);
            assert!(t.boundary(1).unwrap().mul(&cyc).is_zero());
        }
    }

    #[test]
    fn non_spanning_tree_is_rejected() {
        let t = finite(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(matches!(star_and_cycle_spaces(&t, &[0]), Err(Error::InvalidTree(_))));
        assert!(matches!(star_and_cycle_spaces(&t, &[0, 1, 2, 3]), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn mass_consistency_is_enforced() {
        let bad = EdgeOrbit { arity: 2, stab: int(1), flipped: false };
        let err = OrbitGraph::new(GraphFamily::Grid { dim: 2 }, int(1), vec![bad]).unwrap_err();
        assert!(matches!(err, Error::Consistency { orbit, .. } if orbit == "0"));
    }

    #[test]
    fn cycle_cells_close_up() {
        let t = build_ball(&OrbitGraph::grid(2), 3).unwrap();
        let a = with_fundamental_cycles(&t).unwrap();
        assert!(a.boundary_squares_to_zero());
        let ne = t.num_cells(1);
        assert_eq!(a.num_cells(2), ne - t.num_cells(0) + 1);
    }
}
