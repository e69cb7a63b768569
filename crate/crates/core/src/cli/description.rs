//! Text descriptions of graphs and complexes.
//!
//! ```text
//! # comment
//! family free 2 | grid 2 [filled] | freeprod 0 2 3 | tree 3 | line
//!        | freecover 2 | bt-tree 3 | triangle | cycle 5 | wedge 2
//!        | product freecover 2 x freecover 2
//! adjacency                      (then: vertices N, edge u v [orbit])
//! simplicial                     (then: simplex v0 v1 .. [orbit id])
//! root 1/2
//! orbit 0 arity 2 stab 1/4 flipped 0
//! folner box
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num::One;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, Rational};
use crate::orbit::{CofiniteComplex, EdgeOrbit, GraphFamily, OrbitGraph, Space, DEFAULT_PRODUCT_CAP};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySpec {
    Free(usize),
    Grid { dim: usize, filled: bool },
    FreeProduct(Vec<u32>),
    Tree(u32),
    Line,
    FreeCover(usize),
    BtTree(u32),
    Triangle,
    Cycle(usize),
    Wedge(usize),
    Product(Box<FamilySpec>, Box<FamilySpec>),
}

impl FamilySpec {
    fn is_graph(&self) -> bool {
        matches!(self, FamilySpec::Free(_) | FamilySpec::Grid { filled: false, .. } | FamilySpec::FreeProduct(_) | FamilySpec::Tree(_))
    }

    fn write(&self, out: &mut String) {
        let _ = match self {
            FamilySpec::Free(k) => write!(out, "free {k}"),
            FamilySpec::Grid { dim, filled } => write!(out, "grid {dim}{}", if *filled { " filled" } else { "" }),
            FamilySpec::FreeProduct(orders) => {
                write!(out, "freeprod {}", orders.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
            }
            FamilySpec::Tree(q) => write!(out, "tree {q}"),
            FamilySpec::Line => write!(out, "line"),
            FamilySpec::FreeCover(k) => write!(out, "freecover {k}"),
            FamilySpec::BtTree(q) => write!(out, "bt-tree {q}"),
            FamilySpec::Triangle => write!(out, "triangle"),
            FamilySpec::Cycle(m) => write!(out, "cycle {m}"),
            FamilySpec::Wedge(k) => write!(out, "wedge {k}"),
            FamilySpec::Product(a, b) => {
                out.push_str("product ");
                a.write(out);
                out.push_str(" x ");
                b.write(out);
                Ok(())
            }
        };
    }

    fn complex(&self) -> Result<CofiniteComplex> {
        match self {
            FamilySpec::Grid { dim, filled: true } => Ok(CofiniteComplex::grid(*dim)),
            FamilySpec::Line => Ok(CofiniteComplex::line()),
            FamilySpec::FreeCover(k) => Ok(CofiniteComplex::free_cover(*k)),
            FamilySpec::BtTree(q) => Ok(CofiniteComplex::bt_tree(*q)),
            FamilySpec::Triangle => Ok(CofiniteComplex::triangle()),
            FamilySpec::Cycle(m) => CofiniteComplex::cycle(*m),
            FamilySpec::Wedge(k) => Ok(CofiniteComplex::wedge(*k)),
            FamilySpec::Product(a, b) => Ok(CofiniteComplex::product(&a.complex()?, &b.complex()?, DEFAULT_PRODUCT_CAP)),
            _ => Err(Error::Consistency { orbit: "family".into(), msg: "a graph family cannot be a product factor".into() }),
        }
    }

    fn graph_family(&self) -> GraphFamily {
        match self {
            FamilySpec::Free(k) => GraphFamily::FreeProduct { orders: vec![0; *k] },
            FamilySpec::Grid { dim, .. } => GraphFamily::Grid { dim: *dim },
            FamilySpec::FreeProduct(o) => GraphFamily::FreeProduct { orders: o.clone() },
            FamilySpec::Tree(q) => GraphFamily::FreeProduct { orders: vec![2; *q as usize + 1] },
            _ => unreachable!("checked by is_graph"),
        }
    }

    fn default_graph(&self) -> Result<OrbitGraph> {
        match self {
            FamilySpec::Free(k) => Ok(OrbitGraph::free(*k)),
            FamilySpec::Grid { dim, .. } => Ok(OrbitGraph::grid(*dim)),
            FamilySpec::FreeProduct(o) => OrbitGraph::free_product(o.clone()),
            FamilySpec::Tree(q) => Ok(OrbitGraph::regular_tree(*q)),
            _ => unreachable!("checked by is_graph"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    Family(FamilySpec),
    Adjacency { vertices: Option<usize>, edges: Vec<(usize, usize, usize)> },
    Simplicial { simplices: Vec<(Vec<usize>, Option<usize>)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitLine {
    pub id: usize,
    pub arity: Option<u32>,
    pub stab: Rational,
    pub flipped: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Description {
    pub body: Body,
    pub root: Option<Rational>,
    pub orbits: Vec<OrbitLine>,
    pub folner: bool,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: Option<&&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("bad {what} '{tok}'")))
}

fn parse_family(line: usize, toks: &[&str]) -> Result<FamilySpec> {
    if let Some(x) = toks.iter().position(|&t| t == "x") {
        if toks.first() != Some(&"product") {
            return Err(perr(line, "'x' outside a product"));
        }
        let a = parse_family(line, &toks[1..x])?;
        let b = parse_family(line, &toks[x + 1..])?;
        return Ok(FamilySpec::Product(Box::new(a), Box::new(b)));
    }
    let arg = toks.get(1);
    let spec = match toks.first().copied() {
        Some("free") => FamilySpec::Free(num(line, arg, "rank")?),
        Some("grid") => {
            let filled = match toks.get(2).copied() {
                None => false,
                Some("filled") => true,
                Some(t) => return Err(perr(line, format!("unexpected '{t}'"))),
            };
            return Ok(FamilySpec::Grid { dim: num(line, arg, "dimension")?, filled });
        }
        Some("freeprod") => {
            if toks.len() < 2 {
                return Err(perr(line, "freeprod needs at least one factor order"));
            }
            let orders = toks[1..].iter().map(|t| num(line, Some(t), "order")).collect::<Result<Vec<u32>>>()?;
            return Ok(FamilySpec::FreeProduct(orders));
        }
        Some("tree") => FamilySpec::Tree(num(line, arg, "q")?),
        Some("line") => return expect_len(line, toks, 1, FamilySpec::Line),
        Some("freecover") => FamilySpec::FreeCover(num(line, arg, "rank")?),
        Some("bt-tree") => FamilySpec::BtTree(num(line, arg, "q")?),
        Some("triangle") => return expect_len(line, toks, 1, FamilySpec::Triangle),
        Some("cycle") => FamilySpec::Cycle(num(line, arg, "length")?),
        Some("wedge") => FamilySpec::Wedge(num(line, arg, "circle count")?),
        Some(t) => return Err(perr(line, format!("unknown family '{t}'"))),
        None => return Err(perr(line, "missing family name")),
    };
    expect_len(line, toks, 2, spec)
}

fn expect_len(line: usize, toks: &[&str], n: usize, spec: FamilySpec) -> Result<FamilySpec> {
    if toks.len() != n {
        return Err(perr(line, format!("expected {n} tokens, found {}", toks.len())));
    }
    Ok(spec)
}

/// Reads `key value` pairs after the orbit id.
fn parse_orbit(line: usize, toks: &[&str]) -> Result<OrbitLine> {
    let id = num(line, toks.get(1), "orbit id")?;
    let mut o = OrbitLine { id, arity: None, stab: Rational::one(), flipped: None };
    let mut stab = None;
    let mut i = 2;
    while i < toks.len() {
        let val = toks.get(i + 1);
        match toks[i] {
            "arity" => o.arity = Some(num(line, val, "arity")?),
            "stab" => {
                let v = val.ok_or_else(|| perr(line, "missing stab"))?;
                stab = Some(parse_rational(v).ok_or_else(|| perr(line, format!("bad rational '{v}'")))?);
            }
            "flipped" => {
                o.flipped = Some(match val.copied() {
                    Some("0") => false,
                    Some("1") => true,
                    _ => return Err(perr(line, "flipped must be 0 or 1")),
                })
            }
            t => return Err(perr(line, format!("unknown orbit field '{t}'"))),
        }
        i += 2;
    }
    o.stab = stab.ok_or_else(|| perr(line, "orbit needs a stab"))?;
    Ok(o)
}

pub fn parse_description(text: &str) -> Result<Description> {
    let mut body: Option<Body> = None;
    let mut root = None;
    let mut orbits: Vec<OrbitLine> = Vec::new();
    let mut folner = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some(&head) = toks.first() else { continue };
        let set_body = |body: &mut Option<Body>, b: Body| {
            if body.is_some() {
                return Err(perr(line, "a description has exactly one family, adjacency or simplicial section"));
            }
            *body = Some(b);
            Ok(())
        };
        match head {
            "family" => set_body(&mut body, Body::Family(parse_family(line, &toks[1..])?))?,
            "adjacency" => set_body(&mut body, Body::Adjacency { vertices: None, edges: Vec::new() })?,
            "simplicial" => set_body(&mut body, Body::Simplicial { simplices: Vec::new() })?,
            "vertices" => match &mut body {
                Some(Body::Adjacency { vertices, .. }) => *vertices = Some(num(line, toks.get(1), "vertex count")?),
                _ => return Err(perr(line, "'vertices' outside an adjacency section")),
            },
            "edge" => match &mut body {
                Some(Body::Adjacency { edges, .. }) => {
                    let u = num(line, toks.get(1), "vertex")?;
                    let v = num(line, toks.get(2), "vertex")?;
                    let o = if toks.len() > 3 { num(line, toks.get(3), "orbit")? } else { 0 };
                    if toks.len() > 4 {
                        return Err(perr(line, "trailing tokens after edge"));
                    }
                    edges.push((u, v, o));
                }
                _ => return Err(perr(line, "'edge' outside an adjacency section")),
            },
            "simplex" => match &mut body {
                Some(Body::Simplicial { simplices }) => {
                    let (verts, label) = match toks.iter().position(|&t| t == "orbit") {
                        Some(p) => {
                            if toks.len() != p + 2 {
                                return Err(perr(line, "orbit label must be the last token"));
                            }
                            (&toks[1..p], Some(num(line, toks.get(p + 1), "orbit id")?))
                        }
                        None => (&toks[1..], None),
                    };
                    if verts.is_empty() {
                        return Err(perr(line, "empty simplex"));
                    }
                    let vs = verts.iter().map(|t| num(line, Some(t), "vertex")).collect::<Result<Vec<usize>>>()?;
                    simplices.push((vs, label));
                }
                _ => return Err(perr(line, "'simplex' outside a simplicial section")),
            },
            "root" => {
                let v = toks.get(1).ok_or_else(|| perr(line, "missing root weight"))?;
                root = Some(parse_rational(v).ok_or_else(|| perr(line, format!("bad rational '{v}'")))?);
            }
            "orbit" => {
                let o = parse_orbit(line, &toks)?;
                if orbits.iter().any(|x| x.id == o.id) {
                    return Err(perr(line, format!("orbit {} declared twice", o.id)));
                }
                orbits.push(o);
            }
            "folner" => {
                if toks.get(1) != Some(&"box") || toks.len() != 2 {
                    return Err(perr(line, "the only Følner rule is 'folner box'"));
                }
                folner = true;
            }
            t => return Err(perr(line, format!("unknown directive '{t}'"))),
        }
    }
    let body = body.ok_or_else(|| perr(text.lines().count().max(1), "no family, adjacency or simplicial section"))?;
    Ok(Description { body, root, orbits, folner })
}

pub fn read_description(path: &Path) -> Result<Description> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_description(&text)
}

impl Description {
    pub fn family(spec: FamilySpec) -> Self {
        Self { body: Body::Family(spec), root: None, orbits: Vec::new(), folner: false }
    }

    /// Canonical text form.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        match &self.body {
            Body::Family(f) => {
                out.push_str("family ");
                f.write(&mut out);
                out.push('\n');
            }
            Body::Adjacency { vertices, edges } => {
                out.push_str("adjacency\n");
                if let Some(n) = vertices {
                    let _ = writeln!(out, "vertices {n}");
                }
                for (u, v, o) in edges {
                    let _ = writeln!(out, "edge {u} {v} {o}");
                }
            }
            Body::Simplicial { simplices } => {
                out.push_str("simplicial\n");
                for (vs, label) in simplices {
                    out.push_str("simplex");
                    for v in vs {
                        let _ = write!(out, " {v}");
                    }
                    if let Some(l) = label {
                        let _ = write!(out, " orbit {l}");
                    }
                    out.push('\n');
                }
            }
        }
        if let Some(r) = &self.root {
            let _ = writeln!(out, "root {}", format_rational(r));
        }
        for o in &self.orbits {
            let _ = write!(out, "orbit {}", o.id);
            if let Some(a) = o.arity {
                let _ = write!(out, " arity {a}");
            }
            let _ = write!(out, " stab {}", format_rational(&o.stab));
            if let Some(f) = o.flipped {
                let _ = write!(out, " flipped {}", f as u8);
            }
            out.push('\n');
        }
        if self.folner {
            out.push_str("folner box\n");
        }
        out
    }

    /// Orbit lines as edge orbits, in id order; ids must be 0..n.
    fn edge_orbits(&self) -> Result<Vec<EdgeOrbit>> {
        let mut sorted: Vec<&OrbitLine> = self.orbits.iter().collect();
        sorted.sort_by_key(|o| o.id);
        sorted
            .iter()
            .enumerate()
            .map(|(i, o)| {
                if o.id != i {
                    return Err(Error::Consistency { orbit: i.to_string(), msg: "orbit ids must be 0, 1, 2, ...".into() });
                }
                Ok(EdgeOrbit { arity: o.arity.unwrap_or(1), stab: o.stab.clone(), flipped: o.flipped.unwrap_or(false) })
            })
            .collect()
    }

    fn reject_graph_fields(&self, what: &str) -> Result<()> {
        if self.root.is_some() || self.orbits.iter().any(|o| o.arity.is_some() || o.flipped.is_some()) {
            return Err(Error::Consistency { orbit: "file".into(), msg: format!("root, arity and flipped do not apply to {what}") });
        }
        Ok(())
    }

    /// Validated object.
    pub fn build(&self) -> Result<Space> {
        let space = match &self.body {
            Body::Family(f) if f.is_graph() => {
                if self.orbits.is_empty() {
                    let g = f.default_graph()?;
                    Space::Graph(match &self.root {
                        Some(r) => g.scaled(r),
                        None => g,
                    })
                } else {
                    let root = self.root.clone().unwrap_or_else(Rational::one);
                    Space::Graph(OrbitGraph::new(f.graph_family(), root, self.edge_orbits()?)?)
                }
            }
            Body::Family(f) => {
                self.reject_graph_fields("complex families")?;
                if !self.orbits.is_empty() {
                    return Err(Error::Consistency { orbit: "file".into(), msg: "built-in complexes carry their own orbit data".into() });
                }
                Space::Complex(f.complex()?)
            }
            Body::Adjacency { vertices, edges } => {
                let n = vertices.unwrap_or_else(|| edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(1));
                let root = self.root.clone().unwrap_or_else(Rational::one);
                let orbits = if self.orbits.is_empty() {
                    // One flipped orbit through every root edge.
                    let deg = edges.iter().filter(|&&(u, v, _)| u == 0 || v == 0).count();
                    if deg == 0 {
                        Vec::new()
                    } else {
                        vec![EdgeOrbit { arity: deg as u32, stab: &root / int(deg as i64), flipped: true }]
                    }
                } else {
                    self.edge_orbits()?
                };
                Space::Graph(OrbitGraph::new(GraphFamily::Finite { vertices: n, edges: edges.clone() }, root, orbits)?)
            }
            Body::Simplicial { simplices } => {
                self.reject_graph_fields("simplicial complexes")?;
                let verts: Vec<Vec<usize>> = simplices.iter().map(|(v, _)| v.clone()).collect();
                let labels: Vec<Option<usize>> = simplices.iter().map(|(_, l)| *l).collect();
                let table: BTreeMap<usize, Rational> = self.orbits.iter().map(|o| (o.id, o.stab.clone())).collect();
                let c = if labels.iter().all(Option::is_none) && table.is_empty() {
                    CofiniteComplex::simplicial(&verts, None)?
                } else {
                    CofiniteComplex::simplicial(&verts, Some((&labels, &table)))?
                };
                Space::Complex(c)
            }
        };
        if self.folner {
            let ok = matches!(&space, Space::Complex(c) if c.folner().is_some());
            if !ok {
                return Err(Error::NotAmenableFamily("'folner box' needs a line, filled grid or product of those".into()));
            }
        }
        Ok(space)
    }
}

/// Descriptions of every built-in family, used by round-trip checks.
pub fn builtin_descriptions() -> Vec<Description> {
    let specs = vec![
        FamilySpec::Free(2),
        FamilySpec::Free(3),
        FamilySpec::Grid { dim: 1, filled: false },
        FamilySpec::Grid { dim: 2, filled: false },
        FamilySpec::Grid { dim: 2, filled: true },
        FamilySpec::FreeProduct(vec![0, 2, 3]),
        FamilySpec::Tree(3),
        FamilySpec::Line,
        FamilySpec::FreeCover(2),
        FamilySpec::BtTree(3),
        FamilySpec::Triangle,
        FamilySpec::Cycle(5),
        FamilySpec::Wedge(2),
        FamilySpec::Product(Box::new(FamilySpec::FreeCover(2)), Box::new(FamilySpec::FreeCover(2))),
        FamilySpec::Product(Box::new(FamilySpec::Line), Box::new(FamilySpec::Line)),
    ];
    specs.into_iter().map(Description::family).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn builtins_round_trip() {
        for d in builtin_descriptions() {
            let text = d.serialize();
            let p = parse_description(&text).unwrap();
            assert_eq!(p, d);
            assert_eq!(parse_description(&p.serialize()).unwrap(), p);
            assert_eq!(p.build().unwrap(), d.build().unwrap());
        }
    }

    #[test]
    fn free_group_and_filled_grid() {
        assert_eq!(parse_description("family free 2\n").unwrap().build().unwrap(), Space::Graph(OrbitGraph::free(2)));
        assert_eq!(
            parse_description("# plane\nfamily grid 2 filled\nfolner box\n").unwrap().build().unwrap(),
            Space::Complex(CofiniteComplex::grid(2))
        );
    }

    #[test]
    fn inconsistent_orbit_is_rejected() {
        let d = parse_description("family free 1\norbit 0 arity 1 stab 1/2 flipped 0\n").unwrap();
        match d.build() {
            Err(Error::Consistency { orbit, .. }) => assert_eq!(orbit, "0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(parse_description("family free 2\nbogus\n").unwrap_err(), Error::Parse { line: 2, msg: "unknown directive 'bogus'".into() });
        assert!(matches!(parse_description("orbit 0 stab x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_description("edge 0 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn adjacency_and_simplicial_files() {
        let d = parse_description("adjacency\nedge 0 1\nedge 1 2\nedge 2 0\n").unwrap();
        let Space::Graph(g) = d.build().unwrap() else { panic!() };
        assert_eq!(g.total_measure(), Some(int(3)));
        assert_eq!(parse_description(&d.serialize()).unwrap(), Description {
            body: Body::Adjacency { vertices: None, edges: vec![(0, 1, 0), (1, 2, 0), (2, 0, 0)] },
            root: None,
            orbits: vec![],
            folner: false
        });
        let s = "simplicial\nsimplex 0 1 2\n";
        assert_eq!(parse_description(s).unwrap().build().unwrap(), Space::Complex(CofiniteComplex::triangle()));
        let labeled = "simplicial\nsimplex 0 1 orbit 1\nsimplex 0 orbit 0\nsimplex 1 orbit 0\norbit 0 stab 1\norbit 1 stab 2\n";
        let Space::Complex(c) = parse_description(labeled).unwrap().build().unwrap() else { panic!() };
        assert_eq!(c.orbit_stabs()[1], vec![rat(2, 1)]);
    }
}
