//! Acceptance run: one PASS/FAIL line per criterion, each within its time
//! budget. Exits non-zero when any criterion fails.

use std::time::{Duration, Instant};

use l2betti::buildings::{top_degree_lower_bound, ChamberData};
use l2betti::cli::execute;
use l2betti::cli::selftest::{run_selftest, DEFAULT_SEED};
use l2betti::complex_invariants::{
    betti_cofinite, euler_check_exact, exact_betti, finite_betti_exact, folner_limit, lueck_quotient_limit, product_complex,
};
use l2betti::exact::{int, rat, Rational};
use l2betti::graph_invariants::{beta0_exact, beta1_graph, beta1_tree_closed_form};
use l2betti::orbit::{build_ball, with_fundamental_cycles, CofiniteComplex, EdgeOrbit, GraphFamily, OrbitGraph, Space};
use l2betti::vn_dimension::{random, rescale_haar, BettiEstimate, DEFAULT_EPSILONS};
use l2betti::Result;
use num::{Signed, Zero};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn fmt_bracket(e: &BettiEstimate) -> String {
    let (lo, hi) = e.bounds();
    format!("[{lo:.6}, {hi:.6}]")
}

fn strictly_decreasing(values: &[(usize, f64)]) -> bool {
    values.windows(2).all(|w| w[1].1 < w[0].1)
}

fn c1_free_groups() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, target, radii) in [(2, 1.0, 2..=8), (3, 2.0, 2..=6)] {
        let t = Instant::now();
        let radii: Vec<usize> = radii.collect();
        let r = beta1_graph(&OrbitGraph::free(k), &radii, &DEFAULT_EPSILONS)?;
        let secs = t.elapsed();
        let ok = r.estimate.contains(target, 0.0) && r.estimate.width() <= 0.2 && secs <= Duration::from_secs(60);
        pass &= ok;
        detail.push(format!("F{k} {} in {:.1}s", fmt_bracket(&r.estimate), secs.as_secs_f64()));
    }
    for k in 1..=6 {
        pass &= beta1_tree_closed_form(&OrbitGraph::free(k))? == int(k as i64 - 1);
    }
    pass &= execute(["l2betti", "tree", concat!(env!("CARGO_MANIFEST_DIR"), "/descriptions/f2.txt")]).stdout == "beta1 1 1\n";
    detail.push("tree gives k-1 for k=1..6".into());
    outcome(pass, detail.join("; "))
}

fn c2_amenable_vanishing() -> Result<Outcome> {
    let t = Instant::now();
    let z = beta1_graph(&OrbitGraph::grid(1), &[4, 8, 16, 32], &DEFAULT_EPSILONS)?;
    let z2 = beta1_graph(&OrbitGraph::grid(2), &[2, 4, 8, 16], &DEFAULT_EPSILONS)?;
    let secs = t.elapsed();
    let ok = |r: &l2betti::vn_dimension::LimitReport| r.estimate.bounds().1 <= 0.05 && strictly_decreasing(&r.per_level);
    let show = |r: &l2betti::vn_dimension::LimitReport| {
        r.per_level.iter().map(|(l, v)| format!("{l}:{v:.5}")).collect::<Vec<_>>().join(" ")
    };
    let pass = ok(&z) && ok(&z2) && secs <= Duration::from_secs(120);
    outcome(pass, format!("Z {} | Z2 {} in {:.1}s", show(&z), show(&z2), secs.as_secs_f64()))
}

fn c3_folner() -> Result<Outcome> {
    let t = Instant::now();
    let plane = CofiniteComplex::grid(2);
    let ms: Vec<usize> = (1..=10).collect();
    let b1 = folner_limit(&plane, 1, &ms)?;
    let b0 = folner_limit(&plane, 0, &ms)?;
    let secs = t.elapsed();
    let vanish = b1.iter().all(|e| e.normalized.is_zero());
    let squares = b0.iter().all(|e| e.normalized == rat(1, (e.m * e.m) as i64));
    let last = &b0.last().expect("ten boxes").normalized;
    let pass = vanish && squares && *last <= rat(1, 100) && secs <= Duration::from_secs(10);
    outcome(pass, format!("b1/|F| = 0 for m=1..10, b0/|F| = 1/m^2 reaching {last} in {:.2}s", secs.as_secs_f64()))
}

fn c4_kunneth() -> Result<Outcome> {
    let t = Instant::now();
    let inline = execute(["l2betti", "kunneth", "(0,1,0)", "(0,1,0)"]).stdout;
    let wedge = CofiniteComplex::free_cover(2);
    let p = product_complex(&wedge, &wedge);
    let est: Vec<BettiEstimate> =
        (0..=2).map(|n| betti_cofinite(&p, n, &[1, 2, 3], &DEFAULT_EPSILONS).map(|r| r.estimate)).collect::<Result<_>>()?;
    let secs = t.elapsed();
    let (lo2, hi2) = est[2].bounds();
    let near_one = lo2 - 0.1 <= 1.0 && 1.0 <= hi2 + 0.1;
    let small = est[0].bounds().1 <= 0.1 && est[1].bounds().1 <= 0.1;
    let pass = inline == "kunneth (0,0,1,0,0)\n" && near_one && small && secs <= Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "{}; product b0 {} b1 {} b2 {} in {:.1}s",
            inline.trim(),
            fmt_bracket(&est[0]),
            fmt_bracket(&est[1]),
            fmt_bracket(&est[2]),
            secs.as_secs_f64()
        ),
    )
}

fn c5_axioms() -> Result<Outcome> {
    let t = Instant::now();
    let r = run_selftest(DEFAULT_SEED, 200, false);
    let secs = t.elapsed();
    let required = ["additivity", "monotonicity", "compression", "direct-limit", "inverse-limit"];
    let covered = required.iter().all(|n| r.outcomes.iter().any(|o| o.name == *n && o.total >= 200 && o.ok()));
    let bounds = random::MAX_BLOCKS <= 3 && random::MAX_SIZE <= 5;
    let summary: Vec<String> = r.outcomes.iter().map(|o| format!("{} {}/{}", o.name, o.passed, o.total)).collect();
    outcome(r.ok() && covered && bounds && secs <= Duration::from_secs(30), format!("{} in {:.2}s", summary.join(", "), secs.as_secs_f64()))
}

fn c6_building() -> Result<Outcome> {
    let t = Instant::now();
    let printed = execute(["l2betti", "building", "--rank", "2", "--q", "9"]).stdout;
    let mut sweep = true;
    for n in 1..=6usize {
        for q in 2..=64u64 {
            let b = top_degree_lower_bound(&ChamberData::new(n, q, None)?);
            sweep &= b.is_positive() == (q > n as u64);
            sweep &= b == rat(q as i64 - n as i64, q as i64 + 1);
        }
    }
    let secs = t.elapsed();
    let pass = printed.starts_with("bound 7/10 ") && sweep && secs <= Duration::from_secs(1);
    outcome(pass, format!("{}; sign sweep over n=1..6, q=2..64 in {:.3}s", printed.trim(), secs.as_secs_f64()))
}

fn finite_graph_triangle() -> Result<OrbitGraph> {
    let edges = vec![(0, 1, 0), (1, 2, 0), (2, 0, 0)];
    OrbitGraph::new(GraphFamily::Finite { vertices: 3, edges }, int(1), vec![EdgeOrbit { arity: 2, stab: rat(1, 2), flipped: true }])
}

fn finite_complexes() -> Result<Vec<CofiniteComplex>> {
    let sphere = CofiniteComplex::simplicial(&[vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]], None)?;
    Ok(vec![
        CofiniteComplex::triangle(),
        CofiniteComplex::cycle(4)?,
        CofiniteComplex::cycle(7)?,
        CofiniteComplex::wedge(2),
        CofiniteComplex::wedge_cyclic_cover(2, 3)?,
        sphere,
        CofiniteComplex::point(),
    ])
}

fn c7_haar() -> Result<Outcome> {
    let t = Instant::now();
    let three = int(3);
    let mut pass = true;
    // Connected finite complexes: β⁰ is 1/μ(G).
    for c in finite_complexes()? {
        let mu = c.build_subcomplex(0)?.group_measure()?;
        pass &= beta0_exact(&Space::Complex(c.clone()))? == Some(mu.recip());
        let base = finite_betti_exact(&c)?;
        let scaled = rescale_haar(&c, &three, finite_betti_exact)?;
        pass &= scaled == base.iter().map(|b| b / &three).collect::<Vec<_>>();
    }
    let tri = finite_graph_triangle()?;
    pass &= beta0_exact(&Space::Graph(tri.clone()))? == Some(rat(1, 3));
    pass &= rescale_haar(&Space::Graph(tri), &three, beta0_exact)? == Some(rat(1, 9));
    pass &= rescale_haar(&OrbitGraph::free(3), &three, beta1_tree_closed_form)? == rat(2, 3);
    pass &= rescale_haar(&CofiniteComplex::bt_tree(3), &three, exact_betti)? == Some(vec![int(0), rat(1, 6)]);
    // Spectral outputs: rescale_haar itself enforces 1e-12 relative agreement.
    let f2 = rescale_haar(&OrbitGraph::free(2), &three, |g| beta1_graph(g, &[2, 3], &DEFAULT_EPSILONS).map(|r| r.estimate));
    let plane = rescale_haar(&CofiniteComplex::grid(2), &three, |c| betti_cofinite(c, 1, &[1, 2], &DEFAULT_EPSILONS).map(|r| r.estimate));
    pass &= f2.is_ok() && plane.is_ok();
    let secs = t.elapsed();
    outcome(
        pass && secs <= Duration::from_secs(5),
        format!("beta0 = 1/mu on {} finite spaces, exact /3 and spectral /3 to 1e-12 in {:.2}s", finite_complexes()?.len() + 1, secs.as_secs_f64()),
    )
}

fn c8_euler() -> Result<Outcome> {
    let t = Instant::now();
    let mut checked: Vec<(String, Rational)> = Vec::new();
    let mut pass = true;
    let mut cases = vec![("wedge cover".to_string(), CofiniteComplex::free_cover(2)), ("plane".to_string(), CofiniteComplex::grid(2))];
    cases.extend(finite_complexes()?.into_iter().enumerate().map(|(i, c)| (format!("finite{i}"), c)));
    for (name, c) in &cases {
        let b = exact_betti(c)?.expect("exact Betti numbers exist for these families");
        pass &= euler_check_exact(c, &b)?;
        checked.push((name.clone(), c.euler_characteristic()));
    }
    pass &= checked[0].1 == int(-1) && checked[1].1.is_zero();
    let secs = t.elapsed();
    outcome(
        pass && secs <= Duration::from_secs(5),
        format!("chi(wedge cover) = {}, chi(plane) = {}, {} finite complexes, in {:.2}s", checked[0].1, checked[1].1, cases.len() - 2, secs.as_secs_f64()),
    )
}

fn c9_structural() -> Result<Outcome> {
    let t = Instant::now();
    let mut count = 0;
    let mut pass = true;
    let graphs = [(OrbitGraph::free(2), 8), (OrbitGraph::free(3), 6), (OrbitGraph::grid(1), 32), (OrbitGraph::grid(2), 16)];
    for (g, max) in &graphs {
        for r in 1..=*max {
            pass &= with_fundamental_cycles(&build_ball(g, r)?)?.boundary_squares_to_zero();
            count += 1;
        }
    }
    let wedge = CofiniteComplex::free_cover(2);
    let complexes = [
        (product_complex(&wedge, &wedge), 3),
        (CofiniteComplex::grid(2), 16),
        (wedge.clone(), 6),
        (CofiniteComplex::bt_tree(3), 4),
        (CofiniteComplex::line(), 8),
    ];
    for (c, max) in &complexes {
        for level in 0..=*max {
            pass &= c.build_subcomplex(level)?.boundary_squares_to_zero();
            count += 1;
        }
    }
    for m in 1..=10 {
        pass &= CofiniteComplex::grid(2).folner_box(m)?.0.boundary_squares_to_zero();
        count += 1;
    }
    let ms: Vec<u64> = (1..=12).collect();
    let quotients: Vec<(CofiniteComplex, u64)> =
        ms.iter().map(|&m| CofiniteComplex::cycle(m as usize).map(|c| (c, m))).collect::<Result<_>>()?;
    let lueck = lueck_quotient_limit(&quotients, 1)?;
    let exact = lueck.iter().zip(&ms).all(|(v, &m)| *v == rat(1, m as i64));
    let secs = t.elapsed();
    outcome(pass && exact, format!("dd = 0 on {count} truncations; Lueck on C_m gives 1/m for m=1..12 in {:.1}s", secs.as_secs_f64()))
}

fn main() {
    let criteria: [(usize, fn() -> Result<Outcome>); 9] = [
        (1, c1_free_groups),
        (2, c2_amenable_vanishing),
        (3, c3_folner),
        (4, c4_kunneth),
        (5, c5_axioms),
        (6, c6_building),
        (7, c7_haar),
        (8, c8_euler),
        (9, c9_structural),
    ];
    let mut failures = 0;
    for (n, check) in criteria {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!("criterion {n}: {} ({:.1}s) {detail}", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
