//! Command-line front end. `execute` runs in-process and returns the exit
//! code with captured output; `main` forwards to the real streams.
//!
//! Exit codes: 0 success, 1 invalid input, 2 computation failure or a
//! failed identity check, 3 selftest failure.

pub mod description;
pub mod report;
pub mod selftest;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::buildings::{lattice_rescale, top_degree_lower_bound, ChamberData};
use crate::complex_invariants::{
    alternating, betti_cofinite, euler_check, euler_check_exact, exact_betti, folner_limit, kunneth, lueck_quotient_limit,
};
use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, to_f64, Rational};
use crate::graph_invariants::{beta0, beta0_exact, beta1_graph, beta1_tree_closed_form};
use crate::orbit::{CofiniteComplex, OrbitGraph, Space};
use crate::vn_dimension::{sort_rows, LedgerRow, RowKind, DEFAULT_EPSILONS};

pub use description::{parse_description, read_description, Description};
use report::{estimate_line, render_rows};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "l2betti", version, about = "L²-Betti numbers of graphs and cofinite complexes")]
pub struct Cli {
    /// Worker threads for the spectral solvers.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, global = true, default_value_t = selftest::DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// β⁰ of a graph or complex.
    Beta0 {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        levels: Vec<usize>,
    },
    /// β¹ of a quasi-transitive graph by the double-limit trace scheme.
    Beta1Graph {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        radii: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
        eps: Vec<f64>,
    },
    /// Exact β¹ of a tree.
    Tree { file: PathBuf },
    /// βⁿ of a cofinite complex, every degree unless --degree is given.
    BettiComplex {
        file: PathBuf,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        levels: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
        eps: Vec<f64>,
    },
    /// Normalized Betti numbers of Følner boxes.
    Folner {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
        levels: Vec<usize>,
    },
    /// Betti numbers of finite cyclic quotients divided by the index.
    Lueck {
        #[arg(long, value_enum)]
        family: QuotientFamily,
        /// Circle count of the wedge.
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        indices: Vec<u64>,
    },
    /// Betti sequence of a product; each argument is an inline sequence such
    /// as "(0,1,0)" or a description file with exactly known values.
    Kunneth { left: String, right: String },
    /// Σ(−1)ⁿβⁿ against the Euler characteristic.
    Euler {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        levels: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Top-degree bound for a group acting on its building.
    Building {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',')]
        splits: Option<Vec<u64>>,
        /// Covolume of a lattice, as p/q.
        #[arg(long)]
        covolume: Option<String>,
    },
    /// Randomized check of the dimension axioms and closed forms.
    Selftest {
        #[arg(long, default_value_t = selftest::DEFAULT_INSTANCES)]
        instances: usize,
        #[arg(long)]
        force_fail: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuotientFamily {
    Cycle,
    Wedge,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ExpansionUnavailable(_)
        | Error::DomainTooSmall { .. }
        | Error::InternalInconsistency(_)
        | Error::ProductTooLarge { .. }
        | Error::InvalidTree(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Execution { code, stdout: text, stderr: String::new() }
            } else {
                Execution { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let run = || dispatch(&cli);
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::InvalidSchedule(format!("thread pool: {e}"))),
        },
        None => run(),
    };
    match result {
        Ok(x) => x,
        Err(e) => Execution { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

pub fn main() -> i32 {
    let x = execute(std::env::args_os());
    print!("{}", x.stdout);
    eprint!("{}", x.stderr);
    x.code
}

fn load(path: &Path) -> Result<Space> {
    read_description(path)?.build()
}

fn load_graph(path: &Path) -> Result<OrbitGraph> {
    match load(path)? {
        Space::Graph(g) => Ok(g),
        Space::Complex(_) => Err(Error::IncompleteInput("this command needs a graph description".into())),
    }
}

fn load_complex(path: &Path) -> Result<CofiniteComplex> {
    match load(path)? {
        Space::Complex(c) => Ok(c),
        Space::Graph(_) => Err(Error::IncompleteInput("this command needs a complex description".into())),
    }
}

fn ok(stdout: String) -> Result<Execution> {
    Ok(Execution { code: 0, stdout, stderr: String::new() })
}

fn exact_line(name: &str, r: &Rational) -> String {
    format!("{name} {} {}\n", format_rational(r), to_f64(r))
}

fn point_row(degree: usize, level: usize, value: f64) -> LedgerRow {
    LedgerRow { degree, level_k: level, level_l: level, epsilon: 0.0, value, kind: RowKind::Point }
}

/// "(0,1,0)", "0,1,0" or "0 1/2 0".
pub fn parse_sequence(s: &str) -> Result<Vec<Rational>> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_rational(t).ok_or_else(|| Error::Parse { line: 1, msg: format!("bad rational '{t}' in sequence") }))
        .collect()
}

fn format_sequence(v: &[Rational]) -> String {
    format!("({})", v.iter().map(format_rational).collect::<Vec<_>>().join(","))
}

fn sequence_arg(arg: &str) -> Result<Vec<Rational>> {
    let path = Path::new(arg);
    if path.is_file() {
        let c = load_complex(path)?;
        return exact_betti(&c)?.ok_or_else(|| Error::IncompleteInput(format!("{arg}: no exact Betti numbers for this complex")));
    }
    parse_sequence(arg)
}

fn dispatch(cli: &Cli) -> Result<Execution> {
    let fmt = cli.format;
    match &cli.command {
        Command::Beta0 { file, levels } => {
            let space = load(file)?;
            let r = beta0(&space, levels)?;
            let mut out = render_rows(&r.rows, fmt);
            out.push_str(&estimate_line("beta0", &r.estimate));
            if let Some(x) = beta0_exact(&space)? {
                out.push_str(&exact_line("beta0-exact", &x));
            }
            ok(out)
        }
        Command::Beta1Graph { file, radii, eps } => {
            let g = load_graph(file)?;
            let r = beta1_graph(&g, radii, eps)?;
            let mut out = render_rows(&r.rows, fmt);
            out.push_str(&estimate_line("beta1", &r.estimate));
            ok(out)
        }
        Command::Tree { file } => {
            let g = load_graph(file)?;
            ok(exact_line("beta1", &beta1_tree_closed_form(&g)?))
        }
        Command::BettiComplex { file, degree, levels, eps } => {
            let c = load_complex(file)?;
            let degrees: Vec<usize> = match degree {
                Some(n) => vec![*n],
                None => (0..=c.dims()).collect(),
            };
            let mut rows = Vec::new();
            let mut summary = String::new();
            for &n in &degrees {
                let r = betti_cofinite(&c, n, levels, eps)?;
                rows.extend(r.rows);
                summary.push_str(&estimate_line(&format!("beta{n}"), &r.estimate));
            }
            sort_rows(&mut rows);
            let mut out = render_rows(&rows, fmt);
            out.push_str(&summary);
            if let Some(exact) = exact_betti(&c)? {
                for &n in &degrees {
                    let zero = Rational::default();
                    out.push_str(&exact_line(&format!("exact{n}"), exact.get(n).unwrap_or(&zero)));
                }
            }
            ok(out)
        }
        Command::Folner { file, degree, levels } => {
            let c = load_complex(file)?;
            let entries = folner_limit(&c, *degree, levels)?;
            let rows: Vec<LedgerRow> = entries.iter().map(|e| point_row(*degree, e.m, to_f64(&e.normalized))).collect();
            let mut out = render_rows(&rows, fmt);
            for e in &entries {
                out.push_str(&format!(
                    "folner {} {} {} {}\n",
                    e.m,
                    e.betti,
                    format_rational(&e.normalized),
                    format_rational(&e.boundary_ratio)
                ));
            }
            ok(out)
        }
        Command::Lueck { family, rank, degree, indices } => {
            let quotients = indices
                .iter()
                .map(|&m| {
                    let q = match family {
                        QuotientFamily::Cycle => CofiniteComplex::cycle(m as usize)?,
                        QuotientFamily::Wedge => CofiniteComplex::wedge_cyclic_cover(*rank, m as usize)?,
                    };
                    Ok((q, m))
                })
                .collect::<Result<Vec<_>>>()?;
            let values = lueck_quotient_limit(&quotients, *degree)?;
            let rows: Vec<LedgerRow> =
                indices.iter().zip(&values).map(|(&m, v)| point_row(*degree, m as usize, to_f64(v))).collect();
            let mut out = render_rows(&rows, fmt);
            for (m, v) in indices.iter().zip(&values) {
                out.push_str(&format!("lueck {m} {}\n", format_rational(v)));
            }
            ok(out)
        }
        Command::Kunneth { left, right } => {
            let p = kunneth(&sequence_arg(left)?, &sequence_arg(right)?)?;
            ok(format!("kunneth {}\n", format_sequence(&p)))
        }
        Command::Euler { file, levels, eps, tol } => {
            let c = load_complex(file)?;
            let chi = c.euler_characteristic();
            let mut out = exact_line("chi", &chi);
            let pass = match exact_betti(&c)? {
                Some(b) => {
                    out.push_str(&format!("betti {}\n", format_sequence(&b)));
                    out.push_str(&exact_line("alternating", &alternating(&b)));
                    euler_check_exact(&c, &b)?
                }
                None => {
                    let estimates = (0..=c.dims())
                        .map(|n| betti_cofinite(&c, n, levels, eps).map(|r| r.estimate))
                        .collect::<Result<Vec<_>>>()?;
                    for (n, e) in estimates.iter().enumerate() {
                        out.push_str(&estimate_line(&format!("beta{n}"), e));
                    }
                    euler_check(&c, &estimates, *tol)?
                }
            };
            out.push_str(&format!("euler {}\n", if pass { "pass" } else { "fail" }));
            Ok(Execution { code: if pass { 0 } else { 2 }, stdout: out, stderr: String::new() })
        }
        Command::Building { rank, q, splits, covolume } => {
            let cd = ChamberData::new(*rank, *q, splits.clone())?;
            let b = top_degree_lower_bound(&cd);
            let mut out = exact_line("bound", &b);
            if let Some(cv) = covolume {
                let cv = parse_rational(cv).ok_or_else(|| Error::Parse { line: 1, msg: format!("bad covolume '{cv}'") })?;
                out.push_str(&exact_line("lattice", &lattice_rescale(&b, &cv)?));
            }
            ok(out)
        }
        Command::Selftest { instances, force_fail } => {
            let r = selftest::run_selftest(cli.seed, *instances, *force_fail);
            Ok(Execution { code: if r.ok() { 0 } else { 3 }, stdout: r.render(), stderr: String::new() })
        }
    }
}
