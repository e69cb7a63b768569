//! First and zeroth L²-Betti numbers of quasi-transitive graphs.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, to_f64, Rational};
use crate::orbit::{build_ball, with_fundamental_cycles, CofiniteComplex, OrbitGraph, Space, Truncation, UnionFind};
use crate::vn_dimension::{
    double_limit_estimate, orbit_functional, sort_rows, validate_schedule, BettiEstimate, EstimateKind, Exhaustion,
    LedgerRow, LimitReport, RowKind, TraceFunctional,
};

/// Agreement required between the neighbor and orbit forms of the trace.
const FORM_TOL: f64 = 1e-9;
const CG_TOL: f64 = 1e-12;

/// Balls with their fundamental cycles filled in, traced against the root's
/// incident edges and checked for ∂∂ = 0.
struct GraphExhaustion<'a> {
    g: &'a OrbitGraph,
}

impl Exhaustion for GraphExhaustion<'_> {
    fn truncation(&self, level: usize) -> Result<Truncation> {
        let t = with_fundamental_cycles(&connected_ball(self.g, level)?)?;
        if !t.boundary_squares_to_zero() {
            return Err(Error::InternalInconsistency(format!("boundary does not square to zero at radius {level}")));
        }
        Ok(t)
    }

    /// Σ_{v∼ρ} ⟨P δ_(ρ,v), δ_(ρ,v)⟩ / μ(G_ρ); the alternating δ has norm² ½.
    fn functional(&self, t: &Truncation, degree: usize) -> Result<TraceFunctional> {
        debug_assert_eq!(degree, 1);
        let c = 0.5 / to_f64(self.g.root_weight());
        Ok(root_edges(t).into_iter().map(|e| (t.cells(1)[e].key.clone(), c)).collect())
    }
}

fn connected_ball(g: &OrbitGraph, radius: usize) -> Result<Truncation> {
    let ball = build_ball(g, radius)?;
    if ball.vertex_components().1.len() != 1 {
        return Err(Error::InternalInconsistency(format!("ball of radius {radius} is disconnected")));
    }
    Ok(ball)
}

/// Edges incident to vertex 0.
fn root_edges(t: &Truncation) -> Vec<usize> {
    let Ok(d) = t.boundary(1) else { return Vec::new() };
    (0..t.num_cells(1)).filter(|&e| d.column(e).iter().any(|&(v, _)| v == 0)).collect()
}

/// β¹ of the graph: an upper bound from harmonic traces on balls, a lower
/// bound from effective resistances with the exterior of each ball shorted,
/// reported as a bracket. Finite graphs give the exact point value.
pub fn beta1_graph(g: &OrbitGraph, radii: &[usize], eps: &[f64]) -> Result<LimitReport> {
    let source = GraphExhaustion { g };
    if g.is_empty() {
        eps.iter().try_for_each(|&e| if e > 0.0 { Ok(()) } else { Err(Error::InvalidThreshold(e)) })?;
        let rows = eps
            .iter()
            .map(|&e| LedgerRow { degree: 1, level_k: 0, level_l: 0, epsilon: e, value: 0.0, kind: RowKind::Point })
            .collect();
        let e = eps.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(LimitReport { estimate: BettiEstimate::point(0.0, e, 0), rows, per_level: vec![(0, 0.0)], targets: Vec::new() });
    }
    if g.is_finite() {
        let r = g.vertex_count().unwrap_or(1);
        let mut report = double_limit_estimate(&source, 1, &[r, r + 1], eps)?;
        let t = source.truncation(r)?;
        check_forms(g, &t, &report)?;
        report.rows.retain(|row| row.level_k == r && row.level_l == r);
        report.per_level.truncate(1);
        return Ok(report);
    }
    let mut report = double_limit_estimate(&source, 1, radii, eps)?;
    let top = source.truncation(*radii.last().expect("schedule validated"))?;
    check_forms(g, &top, &report)?;

    let balls = radii.iter().map(|&r| connected_ball(g, r)).collect::<Result<Vec<_>>>()?;
    let mut lower_rows = Vec::new();
    let mut lo = 0.0f64;
    for a in 0..balls.len() - 1 {
        let mut inf = f64::INFINITY;
        for b in a + 1..balls.len() {
            let v = resistance_bound(g, &balls[a], &balls[b])?;
            inf = inf.min(v);
            lower_rows.push(LedgerRow {
                degree: 1,
                level_k: radii[a],
                level_l: radii[b],
                epsilon: 0.0,
                value: v,
                kind: RowKind::Lower,
            });
        }
        lo = lo.max(inf);
    }
    report.rows.extend(lower_rows);
    sort_rows(&mut report.rows);
    let hi = report.estimate.value;
    // Both ends are limits of heuristically truncated sequences; keep lo ≤ hi.
    let (lo, hi) = (lo.min(hi), hi.max(lo));
    report.estimate = BettiEstimate { value: 0.5 * (lo + hi), kind: EstimateKind::Bracket { lo, hi }, ..report.estimate };
    Ok(report)
}

/// The neighbor form must agree with Σ_orbits ⟨P u_rep, u_rep⟩ / μ(G_e).
fn check_forms(g: &OrbitGraph, top: &Truncation, report: &LimitReport) -> Result<()> {
    let neighbor: f64 = report.targets.iter().map(|(_, v)| 0.5 * v).sum::<f64>() / to_f64(g.root_weight());
    let orbit: f64 = orbit_functional(top, 1, None)?
        .iter()
        .map(|(key, c)| {
            report
                .targets
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| c * v)
                .ok_or_else(|| Error::InternalInconsistency(format!("orbit representative {key:?} is not a root edge")))
        })
        .sum::<Result<f64>>()?;
    if (neighbor - orbit).abs() > FORM_TOL {
        return Err(Error::Consistency {
            orbit: "edges".into(),
            msg: format!("neighbor sum {neighbor} and orbit sum {orbit} differ; orbit labels are not symmetric"),
        });
    }
    Ok(())
}

/// (½ Σ_{e∋ρ} R(e) − 1) / μ(G_ρ), where R is the effective resistance in B_k
/// after identifying boundary vertices joined by paths of B_l outside B_k.
fn resistance_bound(g: &OrbitGraph, inner: &Truncation, outer: &Truncation) -> Result<f64> {
    let nv = outer.num_cells(0);
    let mut uf = UnionFind::new(nv);
    let d = outer.boundary(1)?;
    for (e, cell) in outer.cells(1).iter().enumerate() {
        if inner.index_of(1, &cell.key).is_none() {
            if let [(a, _), (b, _)] = d.column(e) {
                uf.union(*a, *b);
            }
        }
    }
    let mut label = vec![usize::MAX; nv];
    let mut q = 0;
    let mut node = Vec::with_capacity(inner.num_cells(0));
    for c in inner.cells(0) {
        let v = outer
            .index_of(0, &c.key)
            .ok_or_else(|| Error::InternalInconsistency("balls are not nested".into()))?;
        let r = uf.find(v);
        if label[r] == usize::MAX {
            label[r] = q;
            q += 1;
        }
        node.push(label[r]);
    }
    let di = inner.boundary(1)?;
    let edges: Vec<(usize, usize)> = di
        .columns()
        .map(|col| match col {
            [(a, _), (b, _)] => (node[*a], node[*b]),
            _ => (0, 0),
        })
        .collect();
    let network = Network::new(q, &edges);
    let total: f64 = root_edges(inner).iter().map(|&e| network.resistance(e)).sum();
    Ok((0.5 * total - 1.0) / to_f64(g.root_weight()))
}

/// Unit-conductance multigraph.
struct Network {
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Network {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a != b {
                adj[a].push((b, e));
                adj[b].push((a, e));
            }
        }
        Self { edges: edges.to_vec(), adj }
    }

    fn resistance(&self, e: usize) -> f64 {
        let (u, v) = self.edges[e];
        if u == v {
            return 0.0;
        }
        if !self.connected_without(u, v, e) {
            return 1.0;
        }
        self.solve(u, v)
    }

    fn connected_without(&self, u: usize, v: usize, skip: usize) -> bool {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![u];
        seen[u] = true;
        while let Some(x) = stack.pop() {
            if x == v {
                return true;
            }
            for &(y, f) in &self.adj[x] {
                if f != skip && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    /// Potential difference for a unit current from u to v, grounding v;
    /// conjugate gradients on the reduced Laplacian.
    fn solve(&self, u: usize, v: usize) -> f64 {
        let n = self.adj.len();
        let apply = |x: &[f64], out: &mut [f64]| {
            for (i, nb) in self.adj.iter().enumerate() {
                out[i] = if i == v { 0.0 } else { nb.iter().map(|&(j, _)| x[i] - if j == v { 0.0 } else { x[j] }).sum() };
            }
        };
        let mut x = vec![0.0; n];
        let mut r = vec![0.0; n];
        r[u] = 1.0;
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = 1.0;
        for _ in 0..10 * n.max(10) {
            apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= CG_TOL {
                break;
            }
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        x[u]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Σ_{unordered edge orbits} 1/μ(G_e) − 1/μ(G_ρ) + β⁰, exactly.
pub fn beta1_tree_closed_form(g: &OrbitGraph) -> Result<Rational> {
    if !g.is_tree() {
        return Err(Error::NotATree("the graph has cycles".into()));
    }
    if g.is_empty() {
        return Ok(Rational::zero());
    }
    let mut b: Rational = g.edge_orbits().iter().map(|o| o.unordered_stab().recip()).sum();
    b -= g.root_weight().recip();
    if let Some(m) = g.total_measure() {
        b += m.recip();
    }
    Ok(b)
}

/// β⁰ exactly when the space is finite: components / μ(G).
pub fn beta0_exact(space: &Space) -> Result<Option<Rational>> {
    match space {
        Space::Graph(g) if g.is_empty() => Ok(Some(Rational::zero())),
        Space::Graph(g) => Ok(g.total_measure().map(|m| m.recip())),
        Space::Complex(c) if c.is_finite() => {
            let t = c.build_subcomplex(0)?;
            let components = t.vertex_components().1.len();
            Ok(Some(int(components as i64) / t.group_measure()?))
        }
        Space::Complex(_) => Ok(None),
    }
}

/// β⁰: exact for finite spaces, otherwise the upper bounds 1/μ(level) with
/// μ(level) the total stabilizer mass of the vertices at that level.
pub fn beta0(space: &Space, levels: &[usize]) -> Result<LimitReport> {
    if let Some(b) = beta0_exact(space)? {
        let v = to_f64(&b);
        let row = LedgerRow { degree: 0, level_k: 0, level_l: 0, epsilon: 0.0, value: v, kind: RowKind::Point };
        return Ok(LimitReport {
            estimate: BettiEstimate::point(v, 0.0, 0),
            rows: vec![row],
            per_level: vec![(0, v)],
            targets: Vec::new(),
        });
    }
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSchedule(format!("levels {levels:?} are not strictly increasing")));
    }
    let mut rows = Vec::new();
    for &k in levels {
        let mass = match space {
            Space::Graph(g) => g.root_weight() * int(build_ball(g, k)?.num_cells(0) as i64),
            Space::Complex(c) => vertex_mass(c, k)?,
        };
        let v = to_f64(&mass.recip());
        rows.push(LedgerRow { degree: 0, level_k: k, level_l: k, epsilon: 0.0, value: v, kind: RowKind::Upper });
    }
    let last = *rows.last().expect("levels non-empty");
    Ok(LimitReport {
        estimate: BettiEstimate { value: last.value, epsilon: 0.0, level: last.level_k, kind: EstimateKind::Upper },
        per_level: rows.iter().map(|r| (r.level_k, r.value)).collect(),
        rows,
        targets: Vec::new(),
    })
}

fn vertex_mass(c: &CofiniteComplex, level: usize) -> Result<Rational> {
    let t = c.build_subcomplex(level)?;
    let stabs = t.orbits(0);
    let mass: Rational = t.cells(0).iter().map(|v| stabs[v.orbit].stab.clone()).sum();
    if mass.is_zero() {
        return Err(Error::DomainTooSmall { degree: 0, orbit: 0, level });
    }
    Ok(mass)
}

/// The β¹ schedule check shared with the CLI.
pub fn validate_graph_schedule(g: &OrbitGraph, radii: &[usize], eps: &[f64]) -> Result<()> {
    if g.is_finite() {
        return eps.iter().try_for_each(|&e| if e > 0.0 { Ok(()) } else { Err(Error::InvalidThreshold(e)) });
    }
    validate_schedule(radii, eps)
}

/// 1/μ(G) for a compact group, as an exact value.
pub fn compact_beta0(total_measure: &Rational) -> Rational {
    Rational::one() / total_measure
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::orbit::{EdgeOrbit, GraphFamily};

    const EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

    #[test]
    fn tree_closed_forms() {
        assert_eq!(beta1_tree_closed_form(&OrbitGraph::free(2)).unwrap(), int(1));
        assert_eq!(beta1_tree_closed_form(&OrbitGraph::free(3)).unwrap(), int(2));
        assert_eq!(beta1_tree_closed_form(&OrbitGraph::grid(1)).unwrap(), int(0));
        let single = OrbitGraph::new(
            GraphFamily::FreeProduct { orders: vec![0, 0] },
            int(1),
            vec![EdgeOrbit { arity: 2, stab: rat(1, 2), flipped: false }],
        )
        .unwrap();
        assert_eq!(beta1_tree_closed_form(&single).unwrap(), int(1));
        assert!(matches!(beta1_tree_closed_form(&OrbitGraph::grid(2)), Err(Error::NotATree(_))));
    }

    #[test]
    fn line_has_exact_bounds() {
        let r = beta1_graph(&OrbitGraph::grid(1), &[2, 4, 8], &EPS).unwrap();
        let (lo, hi) = r.estimate.bounds();
        assert_eq!(lo, 0.0);
        assert!((hi - 1.0 / 16.0).abs() < 1e-9, "{hi}");
    }

    #[test]
    fn free_group_bracket_at_small_radius() {
        let r = beta1_graph(&OrbitGraph::free(2), &[2, 3, 4], &EPS).unwrap();
        let (lo, hi) = r.estimate.bounds();
        assert!((lo - 1.0).abs() < 1e-9, "{lo}");
        assert!(hi >= 1.0 && hi < 1.3, "{hi}");
    }

    #[test]
    fn finite_cycle_graph_is_exact() {
        let orbit = EdgeOrbit { arity: 1, stab: int(1), flipped: false };
        let g = OrbitGraph::new(GraphFamily::Finite { vertices: 3, edges: vec![(0, 1, 0), (1, 2, 0), (2, 0, 0)] }, int(1), vec![orbit])
            .unwrap();
        let r = beta1_graph(&g, &[1, 2], &EPS).unwrap();
        assert_eq!(r.estimate.kind, EstimateKind::Point);
        assert!(r.estimate.value.abs() < 1e-12);
        let b0 = beta0(&Space::Graph(g), &[]).unwrap();
        assert!((b0.estimate.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn beta0_bounds_decrease_on_the_plane() {
        let r = beta0(&Space::Graph(OrbitGraph::grid(2)), &[2, 4, 8]).unwrap();
        let v: Vec<f64> = r.per_level.iter().map(|p| p.1).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn beta0_of_finite_complexes() {
        assert_eq!(beta0_exact(&Space::Complex(CofiniteComplex::cycle(3).unwrap())).unwrap(), Some(rat(1, 3)));
        assert_eq!(beta0_exact(&Space::Complex(CofiniteComplex::point())).unwrap(), Some(int(1)));
        assert_eq!(beta0_exact(&Space::Complex(CofiniteComplex::line())).unwrap(), None);
    }

    #[test]
    fn shorted_resistance_on_a_square() {
        let n = Network::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!((n.resistance(0) - 0.75).abs() < 1e-10);
        let n = Network::new(2, &[(0, 1), (1, 1)]);
        assert_eq!(n.resistance(0), 1.0);
    }

    #[test]
    fn degenerate_graphs_have_no_cycles() {
        for n in [0, 1] {
            let g = OrbitGraph::new(GraphFamily::Finite { vertices: n, edges: vec![] }, int(1), vec![]).unwrap();
            assert_eq!(beta1_graph(&g, &[], &EPS).unwrap().estimate.bounds(), (0.0, 0.0));
            assert_eq!(beta1_tree_closed_form(&g).unwrap(), int(0));
            assert_eq!(beta0_exact(&Space::Graph(g)).unwrap(), Some(int(n as i64)));
        }
        let orbit = EdgeOrbit { arity: 1, stab: int(1), flipped: true };
        assert!(OrbitGraph::new(GraphFamily::Finite { vertices: 0, edges: vec![] }, int(1), vec![orbit]).is_err());
    }
}
