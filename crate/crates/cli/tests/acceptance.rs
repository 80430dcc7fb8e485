//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail for the reason
//! printed with them; they are still computed in full and their line still
//! reads FAIL. The target exits non-zero when any other criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bifcurrent::experiments::{self as ex, TangencyMeasure};
use bifcurrent::lifted::vertical_tangencies;
use bifcurrent::measures::marginal_c;
use bifcurrent::poly::Poly;
use bifcurrent::roots::{qk_coeffs, solve_qk_eq, SolveOptions};
use bifcurrent::{Complex, LineParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

// Tolerances and budgets.
const MASS_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-8;
const IDENTITY_PROBES: usize = 100;
const COUNT_BUDGET: Duration = Duration::from_secs(300);
const CONVERGENCE_BUDGET: Duration = Duration::from_secs(120);
const INEQUALITY_SAMPLES: usize = 1_000_000;
const BROLIN_ATOMS: usize = 1 << 16;
const ROOT_K_MAX: usize = 13;
const ORACLE_K_MAX: usize = 10;
const COMPANION_K_MAX: usize = 5;
const ORACLE_TOL: f64 = 1e-7;

/// Criterion number and the reason it is expected to fail.
const KNOWN_FAILURES: [(u32, &str); 1] = [(
    7,
    "the discrete dd^c of 2 g_c(0) has stencil-negative cells along the boundary of M holding ~4% of the mass \
     at every resolution, so the clipped measure is rejected; the signed total is reported",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bifcurrent")
}

fn run_cli(args: &[String], out: &Path) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn fmt_cx(c: Complex) -> String {
    format!("{},{}", c.re, c.im)
}

fn seeded_lines(count: usize) -> Vec<LineParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count)
        .map(|_| {
            let alpha = Complex::from_polar(rng.gen_range(1e-2..=1e-1), rng.gen_range(0.0..std::f64::consts::TAU));
            let beta = Complex::from_polar(2.0 * rng.gen_range(0.0f64..=1.0).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
            LineParams::new(alpha, beta)
        })
        .collect()
}

fn tangency_counts(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let mut lines = vec![LineParams::default()];
    lines.extend(seeded_lines(5));
    let mut bad = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        assert!(line.is_admissible());
        let out = tmp.join(format!("tangency{i}"));
        let args = [
            "tangency".to_string(),
            "--n".into(),
            "10".into(),
            format!("--alpha={}", fmt_cx(line.alpha)),
            format!("--beta={}", fmt_cx(line.beta)),
        ];
        let res = run_cli(&args, &out);
        let table = std::fs::read_to_string(out.join("counts.csv")).unwrap_or_default();
        for n in 1..=10usize {
            let row = format!("{n},{},certified", n << (n - 1));
            if !table.lines().any(|l| l == row) {
                bad.push(format!("line {i} n {n}"));
            }
        }
        if !res.status.success() {
            bad.push(format!("line {i} exit {:?}", res.status.code()));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: bad.is_empty() && elapsed < COUNT_BUDGET,
        detail: format!(
            "6 lines x n = 1..10, {} mismatches, {:.1} s (budget {} s)",
            bad.len(),
            elapsed.as_secs_f64(),
            COUNT_BUDGET.as_secs()
        ),
    }
}

fn mass_identity(measures: &BTreeMap<usize, TangencyMeasure>) -> Outcome {
    let mut worst = 0.0f64;
    let mut certified = true;
    for m in measures.values() {
        certified &= m.cloud.certified();
        worst = worst.max((m.cloud.total_mass() - 1.0).abs());
    }
    Outcome {
        pass: certified && worst <= MASS_TOL,
        detail: format!("n = 1..12, all certified: {certified}, max |mass - 1| = {worst:.2e} (tol {MASS_TOL:e})"),
    }
}

fn potential_identity(measures: &BTreeMap<usize, TangencyMeasure>) -> Outcome {
    let line = LineParams::default();
    let residuals: Vec<(usize, f64)> = [4, 8, 12]
        .into_iter()
        .map(|n| (n, ex::potential_identity_residual(&measures[&n], &line, IDENTITY_PROBES, SEED)))
        .collect();
    let worst = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome {
        pass: worst <= IDENTITY_TOL,
        detail: format!(
            "{IDENTITY_PROBES} probes, residuals {} (tol {IDENTITY_TOL:e})",
            residuals.iter().map(|(n, r)| format!("n{n}={r:.1e}")).collect::<Vec<_>>().join(" ")
        ),
    }
}

fn convergence_trend() -> Outcome {
    let start = Instant::now();
    let line = LineParams::default();
    let spec = ex::default_parameter_grid(256);
    let one = Poly::constant(Complex::new(1.0, 0.0));
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, a) in [("a=0", Poly::constant(Complex::new(0.0, 0.0))), ("a=line", Poly::affine(line.alpha, line.beta))] {
        let r = ex::mandel_green_convergence(&a, &one, &[4, 6, 8, 10, 12], spec).expect("convergence runs");
        pass &= r.passed();
        let first = r.get_metric("l1_distance_n4").unwrap();
        let last = r.get_metric("l1_distance_n12").unwrap();
        parts.push(format!("{label}: {first:.2e} -> {last:.2e}"));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && elapsed < CONVERGENCE_BUDGET,
        detail: format!("{}, {:.1} s", parts.join(", "), elapsed.as_secs_f64()),
    }
}

fn green_inequalities() -> Outcome {
    let r = ex::green_inequality_suite(INEQUALITY_SAMPLES, SEED);
    let v: Vec<f64> = ["upper_bound", "lower_bound", "line_below_parameter"]
        .iter()
        .map(|k| r.get_metric(&format!("{k}_violations")).unwrap())
        .collect();
    Outcome {
        pass: r.passed() && v.iter().all(|&x| x == 0.0),
        detail: format!("{INEQUALITY_SAMPLES} samples, violations {:?}", v),
    }
}

fn equilibrium_oracle() -> Outcome {
    let cs = [Complex::new(0.0, 0.0), Complex::new(-2.0, 0.0), Complex::new(0.0, 1.0)];
    let r = ex::equilibrium_potential_check(&cs, BROLIN_ATOMS, SEED).expect("runs");
    let gaps: Vec<String> = (0..3).map(|i| format!("{:.1e}", r.get_metric(&format!("gap_{i}")).unwrap())).collect();
    Outcome {
        pass: r.passed(),
        detail: format!(
            "2^16 atoms, mean gaps [0, -2, i] = [{}] (tol 5e-3), unit-circle deviation {:.1e} (tol 1e-9)",
            gaps.join(", "),
            r.get_metric("unit_circle_deviation").unwrap()
        ),
    }
}

fn bifurcation_mass() -> Outcome {
    let r = ex::bifurcation_mass_check(ex::default_mass_grid()).expect("runs");
    let signed = r.get_metric("signed_mass").unwrap();
    let clipped = r.get_metric("clipped_negative_mass").unwrap();
    let total = r.get_metric("total_mass");
    Outcome {
        pass: r.passed(),
        detail: format!(
            "2048^2: clipped total {}, clipped negative mass {clipped:.4} ({:.1}% > 1% limit), signed total {signed:.6}",
            total.map(|t| format!("{t:.4}")).unwrap_or_else(|| "rejected".into()),
            100.0 * clipped / (signed + clipped)
        ),
    }
}

fn lifted_invariants() -> Outcome {
    let r = ex::lifted_invariant_suite(SEED);
    Outcome {
        pass: r.passed(),
        detail: format!(
            "vertical {:.1e} (tol 1e-12), composition {:.1e} (tol 1e-9), jets {:.1e} (tol 1e-6)",
            r.get_metric("vertical_max_cross").unwrap(),
            r.get_metric("composition_max_cross").unwrap(),
            r.get_metric("jet_max_rel_error").unwrap()
        ),
    }
}

/// Companion-matrix eigenvalues of the monic polynomial `Q_k - alpha c - beta`.
fn companion_roots(k: usize, line: &LineParams) -> Vec<Complex> {
    let mut c: Vec<Complex> = qk_coeffs(k).unwrap().iter().map(|&x| Complex::new(x, 0.0)).collect();
    c[0] -= line.beta;
    c[1] -= line.alpha;
    let lead = c.pop().unwrap();
    let d = c.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    m.schur().eigenvalues().unwrap().iter().copied().collect()
}

fn greedy_distance(a: &[Complex], b: &[Complex]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn root_certification() -> Outcome {
    let line = LineParams::default();
    let r = ex::root_certification_check(ROOT_K_MAX, ORACLE_K_MAX, &line).expect("runs");
    let table = &r.tables[0].csv;
    let oracle_worst = table
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(5).and_then(|s| s.parse::<f64>().ok()))
        .fold(0.0, f64::max);
    let mut companion_worst = 0.0f64;
    for k in 1..=COMPANION_K_MAX {
        let set = solve_qk_eq(k, &line, &SolveOptions::default()).unwrap();
        companion_worst = companion_worst.max(greedy_distance(&set.roots, &companion_roots(k, &line)));
    }
    Outcome {
        pass: r.passed() && oracle_worst <= ORACLE_TOL && companion_worst <= ORACLE_TOL,
        detail: format!(
            "k = 1..{ROOT_K_MAX} certified with 2^(k-1) roots: {}; Aberth oracle k <= {ORACLE_K_MAX}: {oracle_worst:.1e}; \
             companion matrix k <= {COMPANION_K_MAX}: {companion_worst:.1e} (tol {ORACLE_TOL:e})",
            r.passed()
        ),
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output directory exists") {
        let p = entry.unwrap().path();
        files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
    }
    files
}

fn determinism(tmp: &Path) -> Outcome {
    let out = tmp.join("verify");
    let args = ["verify".to_string(), "--seed".into(), SEED.to_string()];
    let first = run_cli(&args, &out);
    let a = snapshot(&out);
    std::fs::remove_dir_all(&out).unwrap();
    let second = run_cli(&args, &out);
    let b = snapshot(&out);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let exits = (first.status.code(), second.status.code());
    Outcome {
        pass: exits == (Some(0), Some(0)) && a.len() == b.len() && differing.is_empty() && a.contains_key("report.json"),
        detail: format!(
            "exit codes {:?}, {} artifacts, {} differ{}",
            exits,
            a.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {differing:?}") }
        ),
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let line = LineParams::default();
    let measures: BTreeMap<usize, TangencyMeasure> = (1..=12)
        .map(|n| {
            let cloud = vertical_tangencies(n, &line, &SolveOptions::default()).expect("tangencies");
            let marginal = marginal_c(&cloud);
            (n, TangencyMeasure { n, cloud, marginal })
        })
        .collect();

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let checks: Vec<(u32, &str, Check)> = vec![
        (1, "tangency count", Box::new(|| tangency_counts(tmp.path()))),
        (2, "mass identity", Box::new(|| mass_identity(&measures))),
        (3, "potential identity", Box::new(|| potential_identity(&measures))),
        (4, "parameter Green convergence", Box::new(convergence_trend)),
        (5, "Green inequalities", Box::new(green_inequalities)),
        (6, "equilibrium potential", Box::new(equilibrium_oracle)),
        (7, "bifurcation measure mass", Box::new(bifurcation_mass)),
        (8, "lifted map invariants", Box::new(lifted_invariants)),
        (9, "root certification", Box::new(root_certification)),
        (10, "determinism", Box::new(|| determinism(tmp.path()))),
    ];

    let mut unexpected = Vec::new();
    for (id, name, check) in &checks {
        let t = Instant::now();
        let o = check();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| k == id).map(|(_, why)| *why);
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        match (o.pass, known) {
            (false, Some(why)) => println!("             expected failure: {why}"),
            (false, None) => unexpected.push(*id),
            (true, Some(_)) => println!("             listed as a known failure but passed"),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
