use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use perctree::builders::{self, FiniteGraph};
use perctree::format::g17;
use perctree::{closedform, montecarlo, structure, Engine, Error, SolverOptions, TreeStructure};

#[derive(Parser)]
#[command(
    name = "perctree",
    version,
    about = "Exact bond-percolation thresholds of tree-like graphs"
)]
struct Cli {
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, env = "PERCTREE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a structure file for a built-in family.
    Build {
        #[command(subcommand)]
        family: Family,
        /// Output path (stdout by default).
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Compute the critical probability of a structure file.
    Pc {
        /// Structure file, or `-` for stdin.
        structure: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Number of scan intervals before bisection.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Bisection tolerance on p_c.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Include the wall time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Tabulate the spectral radius and det(M - I) as CSV.
    Scan {
        structure: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0.001)]
        pmin: f64,
        #[arg(long, default_value_t = 0.999)]
        pmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Monte Carlo on the unfolded graph: reach at one p, or a bracket for p_c.
    Mc {
        structure: PathBuf,
        #[arg(long, conflicts_with = "bracket", required_unless_present = "bracket")]
        p: Option<f64>,
        #[arg(long)]
        bracket: bool,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Expected cluster-size polynomials of finite graphs and their free-product threshold.
    Chi {
        /// Graph names: kN, cN or pN.
        #[arg(required = true)]
        graphs: Vec<String>,
    },
    /// Closed-form threshold of (Z2 x Z) *_Z2 Z4.
    Z2z,
}

#[derive(Args)]
struct SolverArgs {
    /// Fixed-point tolerance for the partition distribution.
    #[arg(long = "fp-tol", default_value_t = 1e-12)]
    fp_tol: f64,
    /// Iteration cap for the partition distribution.
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Subcommand)]
enum Family {
    /// Free product of finite graphs glued at their base vertices.
    FreeProduct {
        /// Factor graph (kN, cN or pN); repeat for each factor.
        #[arg(long = "factor", required = true)]
        factors: Vec<String>,
    },
    /// Amalgam of two finite Cayley graphs over a common subgroup.
    Amalgam {
        #[arg(long)]
        g1: String,
        /// Cosets of the common subgroup in g1, as `0,2/1,3`.
        #[arg(long)]
        cosets1: String,
        #[arg(long)]
        g2: String,
        #[arg(long)]
        cosets2: String,
    },
    /// HNN extension of a finite Cayley graph.
    Hnn {
        #[arg(long)]
        base: String,
        #[arg(long)]
        h_cosets: String,
        #[arg(long)]
        k_cosets: String,
        /// Image of each H element under the isomorphism onto K, as `0,1`.
        #[arg(long)]
        alpha: String,
    },
    /// Free group with the ball of radius k as generating set.
    Fball {
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        k: usize,
    },
    /// 3-regular tree with edges to grandparents.
    Grandparent,
    /// SL(2,Z) with its standard generators.
    Sl2z,
}

#[derive(Serialize)]
struct RunReport {
    structure: String,
    p_c: f64,
    bracket: [f64; 2],
    no_subcritical_root: bool,
    det_residual: f64,
    tolerance: f64,
    fixed_point_tolerance: f64,
    grid: usize,
    color_space_size: usize,
    support_sizes: Vec<(String, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

#[derive(Serialize)]
struct ChiEntry {
    graph: String,
    coefficients: Vec<i64>,
    polynomial: String,
}

#[derive(Serialize)]
struct ChiReport {
    factors: Vec<ChiEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_product_pc: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Guard(_) => 3,
        Error::NonConvergence { .. } => 4,
        _ => 2,
    }
}

fn load(path: &PathBuf) -> Result<TreeStructure, Error> {
    let mut bytes = Vec::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_end(&mut bytes)?;
    } else {
        bytes = fs::read(path).map_err(|e| Error::InvalidArgument(format!("cannot read '{}': {e}", path.display())))?;
    }
    structure::parse(&bytes)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn build(family: &Family) -> Result<TreeStructure, Error> {
    match family {
        Family::FreeProduct { factors } => builders::free_product(&builders::factors_from_names(factors)?),
        Family::Amalgam {
            g1,
            cosets1,
            g2,
            cosets2,
        } => builders::amalgam(
            &FiniteGraph::from_name(g1)?,
            &builders::parse_cosets(cosets1)?,
            &FiniteGraph::from_name(g2)?,
            &builders::parse_cosets(cosets2)?,
        ),
        Family::Hnn {
            base,
            h_cosets,
            k_cosets,
            alpha,
        } => {
            let alpha: Vec<usize> = builders::parse_cosets(alpha)?.concat();
            builders::hnn(
                &FiniteGraph::from_name(base)?,
                &builders::parse_cosets(h_cosets)?,
                &builders::parse_cosets(k_cosets)?,
                &alpha,
            )
        }
        Family::Fball { rank, k } => builders::free_group_ball(*rank, *k),
        Family::Grandparent => Ok(builders::grandparent()),
        Family::Sl2z => Ok(builders::sl2z()),
    }
}

fn options(args: &SolverArgs) -> SolverOptions {
    SolverOptions {
        fixed_point_tol: args.fp_tol,
        max_iter: args.max_iter,
        ..SolverOptions::default()
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut out = String::new();
    match cli.command {
        Command::Build { family, out: path } => {
            let s = structure::serialize(&build(&family)?);
            match path {
                Some(path) => fs::write(path, s)?,
                None => out = s,
            }
        }
        Command::Pc {
            structure,
            solver,
            grid,
            tol,
            timing,
        } => {
            let start = Instant::now();
            let s = load(&structure)?;
            let opts = SolverOptions {
                grid,
                tol,
                ..options(&solver)
            };
            let r = Engine::new(&s)?.critical_probability(&opts)?;
            out = json(&RunReport {
                structure: s.name,
                p_c: r.p_c,
                bracket: r.bracket,
                no_subcritical_root: r.no_subcritical_root,
                det_residual: r.det_residual,
                tolerance: tol,
                fixed_point_tolerance: opts.fixed_point_tol,
                grid,
                color_space_size: r.color_space_size,
                support_sizes: r.support_sizes,
                wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
            });
        }
        Command::Scan {
            structure,
            solver,
            pmin,
            pmax,
            steps,
        } => {
            if !(0.0..=1.0).contains(&pmin) || !(pmin..=1.0).contains(&pmax) || steps == 0 {
                return Err(Error::InvalidArgument(
                    "need 0 <= pmin <= pmax <= 1 and steps >= 1".into(),
                ));
            }
            let s = load(&structure)?;
            let points: Vec<f64> = (0..=steps)
                .map(|i| pmin + (pmax - pmin) * i as f64 / steps as f64)
                .collect();
            let rows = Engine::new(&s)?.scan(&points, &options(&solver))?;
            out.push_str("p,rho,det_residual\n");
            for r in rows {
                out.push_str(&format!("{},{},{}\n", g17(r.p), g17(r.rho), g17(r.det_residual)));
            }
        }
        Command::Mc {
            structure,
            p,
            bracket,
            depth,
            trials,
            seed,
        } => {
            let s = load(&structure)?;
            if bracket {
                out = json(&montecarlo::bracket_pc(&s, depth, trials, seed)?);
            } else {
                let p = p.expect("clap requires --p without --bracket");
                let graph = montecarlo::unfold(&s, depth)?;
                let r = montecarlo::estimate_reach(&graph, p, trials, seed)?;
                out = format!("{}\n{}\n", montecarlo::ReachEstimate::CSV_HEADER, r.csv_row());
            }
        }
        Command::Chi { graphs } => {
            let factors = builders::factors_from_names(&graphs)?;
            let chis = factors
                .iter()
                .map(closedform::chi_polynomial)
                .collect::<Result<Vec<_>, _>>()?;
            let free_product_pc = if chis.len() >= 2 {
                Some(closedform::free_product_pc(&chis)?)
            } else {
                None
            };
            out = json(&ChiReport {
                factors: graphs
                    .into_iter()
                    .zip(&chis)
                    .map(|(graph, c)| ChiEntry {
                        graph,
                        coefficients: c.coefficients.clone(),
                        polynomial: c.to_string(),
                    })
                    .collect(),
                free_product_pc,
            });
        }
        Command::Z2z => out = json(&closedform::z2z_amalgam_pc()?),
    }
    io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
