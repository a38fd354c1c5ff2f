//! One line per acceptance criterion; exits nonzero if any criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{grandparent_ball, isomorphic, Rooted};
use perctree::montecarlo::{bracket_pc, unfold};
use perctree::structure::enlarge;
use perctree::{builders, closedform, Engine, FiniteGraph, SolverOptions, TreeStructure};

const SL2Z_PC: f64 = 0.4291140496;
const SL2Z_TOL: f64 = 1e-6;
const SL2Z_SECONDS: u64 = 10;
const FBALL2_PC: f64 = 0.139;
const FBALL2_TOL: f64 = 1e-3;
const FBALL2_SECONDS: u64 = 120;
const FBALL1_TOL: f64 = 1e-9;
const GRANDPARENT_PC: f64 = 0.158656326;
const GRANDPARENT_TOL: f64 = 1e-6;
const GRANDPARENT_ISO_DEPTH: usize = 4;
const GRANDPARENT_MC_DEPTH: usize = 10;
const GRANDPARENT_MC_TRIALS: usize = 10_000;
const GRANDPARENT_MC_SEED: u64 = 7;
const Z2Z_PC: f64 = 0.2951;
const Z2Z_TOL: f64 = 1e-4;
const FREE_PRODUCT_CASES: usize = 20;
const FREE_PRODUCT_PC_TOL: f64 = 1e-8;
const FREE_PRODUCT_DET_TOL: f64 = 1e-10;
const FREE_PRODUCT_DET_POINTS: [f64; 3] = [0.1, 0.2, 0.3];
const NORMALIZATION_TOL: f64 = 1e-12;
const PROPERTY_GRID: usize = 64;
const ENLARGE_DEPTH: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> (T, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let out = pool.install(f);
    (out, start.elapsed())
}

fn pc(s: &TreeStructure) -> perctree::CriticalProbability {
    Engine::new(s)
        .unwrap()
        .critical_probability(&SolverOptions::default())
        .unwrap()
}

fn criterion_1() -> Outcome {
    let (r, t) = single_threaded(|| pc(&builders::sl2z()));
    let pass = (r.p_c - SL2Z_PC).abs() <= SL2Z_TOL && t < Duration::from_secs(SL2Z_SECONDS);
    outcome(pass, format!("sl2z p_c = {:.10} in {:.3} s", r.p_c, t.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let (r, t) = single_threaded(|| pc(&builders::free_group_ball(2, 2).unwrap()));
    let pass = (r.p_c - FBALL2_PC).abs() <= FBALL2_TOL && t < Duration::from_secs(FBALL2_SECONDS);
    outcome(
        pass,
        format!(
            "free group ball k=2 p_c = {:.10} (target {FBALL2_PC} +- {FBALL2_TOL}) in {:.3} s",
            r.p_c,
            t.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let r = pc(&builders::free_group_ball(2, 1).unwrap());
    outcome(
        (r.p_c - 1.0 / 3.0).abs() <= FBALL1_TOL,
        format!("free group k=1 p_c = {:.12}", r.p_c),
    )
}

fn criterion_4() -> Outcome {
    let s = builders::grandparent();
    let iso =
        (0..=GRANDPARENT_ISO_DEPTH).all(|n| isomorphic(&Rooted::from(&unfold(&s, n).unwrap()), &grandparent_ball(n)));
    let r = pc(&s);
    let b = bracket_pc(&s, GRANDPARENT_MC_DEPTH, GRANDPARENT_MC_TRIALS, GRANDPARENT_MC_SEED).unwrap();
    let contains = b.p_lo <= r.p_c && r.p_c <= b.p_hi;
    let close = (r.p_c - GRANDPARENT_PC).abs() <= GRANDPARENT_TOL;
    outcome(
        iso && close && contains,
        format!(
            "grandparent p_c = {:.10}, unfold isomorphism n <= {GRANDPARENT_ISO_DEPTH}: {iso}, MC bracket [{}, {}]",
            r.p_c, b.p_lo, b.p_hi
        ),
    )
}

fn criterion_5() -> Outcome {
    let r = closedform::z2z_amalgam_pc().unwrap();
    outcome(
        (r.p_c - Z2Z_PC).abs() <= Z2Z_TOL && r.residuals.equations <= 1e-12 && r.residuals.series <= 1e-10,
        format!(
            "z2z p_c = {:.10}, equation residual {:.1e}, series gap {:.1e}",
            r.p_c, r.residuals.equations, r.residuals.series
        ),
    )
}

fn random_graph(rng: &mut ChaCha8Rng, name: String) -> FiniteGraph {
    let n = rng.gen_range(2..=4);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push([rng.gen_range(0..v), v]);
    }
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&[a, b]) && rng.gen_bool(0.5) {
                edges.push([a, b]);
            }
        }
    }
    let base = rng.gen_range(0..n);
    FiniteGraph::new(name, n, edges, base)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_pc, mut worst_det) = (0.0f64, 0.0f64);
    for case in 0..FREE_PRODUCT_CASES {
        let k = rng.gen_range(2..=3);
        let factors: Vec<FiniteGraph> = (0..k).map(|i| random_graph(&mut rng, format!("g{case}_{i}"))).collect();
        let s = builders::free_product(&factors).unwrap();
        let engine = Engine::new(&s).unwrap();
        let opts = SolverOptions::default();
        let chis: Vec<_> = factors.iter().map(|g| closedform::chi_polynomial(g).unwrap()).collect();
        let exact = closedform::free_product_pc(&chis).unwrap();
        worst_pc = worst_pc.max((engine.critical_probability(&opts).unwrap().p_c - exact).abs());
        for p in FREE_PRODUCT_DET_POINTS {
            let det = engine.evaluate(p, &opts).unwrap().det_residual;
            worst_det = worst_det.max((det - closedform::free_product_det(&chis, p)).abs());
        }
    }
    outcome(
        worst_pc <= FREE_PRODUCT_PC_TOL && worst_det <= FREE_PRODUCT_DET_TOL,
        format!("{FREE_PRODUCT_CASES} free products: max |p_c gap| {worst_pc:.1e}, max |det gap| {worst_det:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let line = pc(&builders::free_product(&[FiniteGraph::complete(2), FiniteGraph::complete(2)]).unwrap());
    let z = pc(&builders::hnn(&FiniteGraph::complete(1), &[vec![0]], &[vec![0]], &[0]).unwrap());
    let ok = |r: &perctree::CriticalProbability| r.p_c == 1.0 && r.no_subcritical_root;
    outcome(
        ok(&line) && ok(&z),
        format!(
            "K2*K2 p_c = {} flag {}, trivial HNN p_c = {} flag {}",
            line.p_c, line.no_subcritical_root, z.p_c, z.no_subcritical_root
        ),
    )
}

fn property_structures() -> Vec<TreeStructure> {
    vec![
        builders::sl2z(),
        builders::grandparent(),
        builders::free_group_ball(2, 1).unwrap(),
        builders::free_group_ball(2, 2).unwrap(),
        builders::free_product(&[FiniteGraph::cycle(3), FiniteGraph::complete(2), FiniteGraph::path(3)]).unwrap(),
    ]
}

fn criterion_8() -> Outcome {
    let opts = SolverOptions::default();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for s in property_structures() {
        let engine = Engine::new(&s).unwrap();
        let (mut norm, mut totals, mut monotone) = (0.0f64, 0.0f64, true);
        for i in 0..=PROPERTY_GRID {
            let p = i as f64 / PROPERTY_GRID as f64;
            let dist = engine
                .partition_distribution(p, opts.fixed_point_tol, opts.max_iter)
                .unwrap();
            for m in &dist.models {
                norm = norm.max((m.total() - 1.0).abs());
            }
            for t in engine.transition_totals(&dist).unwrap() {
                totals = totals.max((t.total() - 1.0).abs());
            }
            let mut it = engine.initial_distribution(p);
            for _ in 0..50 {
                let next = engine.psi_step(&it);
                for (a, b) in it.models.iter().zip(&next.models) {
                    let k = a.partitions[0].len();
                    for x in 0..k {
                        for y in 0..x {
                            monotone &= b.joined(x, y) >= a.joined(x, y) - 1e-14;
                        }
                    }
                }
                it = next;
            }
        }
        let rho0 = engine.evaluate(0.0, &opts).unwrap().rho;
        if norm > NORMALIZATION_TOL {
            failures.push(format!("{} normalization {norm:.1e}", s.name));
        }
        if totals > NORMALIZATION_TOL {
            failures.push(format!("{} transition totals {totals:.1e}", s.name));
        }
        if !monotone {
            failures.push(format!("{} fixed-point iterates not monotone", s.name));
        }
        if rho0 != 0.0 {
            failures.push(format!("{} rho(M(0)) = {rho0}", s.name));
        }
    }
    details.push("normalization, transition totals, monotone iterates, rho(M(0)) checked".to_string());

    for s in [builders::sl2z(), builders::grandparent()] {
        let a = pc(&s).p_c;
        let b = pc(&enlarge(&s).unwrap()).p_c;
        if (a - b).abs() > 2.0 * opts.tol {
            failures.push(format!("{} enlarge changes p_c by {:.1e}", s.name, (a - b).abs()));
        }
    }
    details.push("enlarge invariance of p_c checked".to_string());

    let s = builders::sl2z();
    let big = enlarge(&s).unwrap();
    let mut doubled = Vec::new();
    let mut shifted = Vec::new();
    for d in 0..=ENLARGE_DEPTH {
        let e = Rooted::from(&unfold(&big, d).unwrap());
        if !isomorphic(&e, &Rooted::from(&unfold(&s, 2 * d).unwrap())) {
            doubled.push(d);
        }
        if isomorphic(&e, &Rooted::from(&unfold(&s, d + 1).unwrap())) {
            shifted.push(d);
        }
    }
    if !doubled.is_empty() {
        failures.push(format!(
            "unfold(enlarge(sl2z), d) is not isomorphic to unfold(sl2z, 2d) for d in {doubled:?}"
        ));
    }
    details.push(format!(
        "unfold(enlarge(sl2z), d) is isomorphic to unfold(sl2z, d + 1) for d in {shifted:?}"
    ));

    let pass = failures.is_empty();
    let mut detail = details.join("; ");
    if !pass {
        detail = format!("{}; FAILED: {}", detail, failures.join("; "));
    }
    outcome(pass, detail)
}

fn cli(args: &[&str], threads: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_perctree"));
    cmd.args(args).env_remove("PERCTREE_THREADS");
    if let Some(t) = threads {
        cmd.env("PERCTREE_THREADS", t);
    }
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn criterion_9() -> Outcome {
    let dir = std::env::temp_dir().join(format!("perctree-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (sl2z, gp) = (file("sl2z.json"), file("gp.json"));
    cli(&["build", "sl2z", "--out", &sl2z], None);
    cli(&["build", "grandparent", "--out", &gp], None);
    let commands: Vec<Vec<&str>> = vec![
        vec!["build", "sl2z"],
        vec!["build", "grandparent"],
        vec!["build", "fball", "--k", "2"],
        vec!["build", "free-product", "--factor", "k2", "--factor", "c3"],
        vec![
            "build",
            "amalgam",
            "--g1",
            "c4",
            "--cosets1",
            "0,2/1,3",
            "--g2",
            "c6",
            "--cosets2",
            "0,3/1,4/2,5",
        ],
        vec![
            "build",
            "hnn",
            "--base",
            "c2",
            "--h-cosets",
            "0/1",
            "--k-cosets",
            "0/1",
            "--alpha",
            "0",
        ],
        vec!["pc", &sl2z],
        vec!["pc", &gp],
        vec!["scan", &sl2z, "--steps", "32"],
        vec![
            "mc", &sl2z, "--p", "0.45", "--depth", "6", "--trials", "2000", "--seed", "9",
        ],
        vec!["mc", &gp, "--bracket", "--depth", "6", "--trials", "300", "--seed", "9"],
        vec!["chi", "k4", "c4", "p3"],
        vec!["z2z"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let reference = cli(args, None);
        let same = [None, Some("1"), Some("3")].iter().all(|t| cli(args, *t) == reference)
            && cli(&[&["--threads", "2"][..], args].concat(), None) == reference;
        if !same {
            differing.push(args.join(" "));
        }
    }
    std::fs::remove_dir_all(&dir).unwrap();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} commands byte-identical across runs and thread counts",
                commands.len()
            )
        } else {
            format!("outputs differ for: {}", differing.join(", "))
        },
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let o = run();
        println!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
