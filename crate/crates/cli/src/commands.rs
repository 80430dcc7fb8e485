//! Subcommand arguments and their implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bifcurrent::dynamics::{green as green_fn, in_mandelbrot, MembershipState, DEFAULT_N_CAP, DEFAULT_TOL};
use bifcurrent::experiments::{self as ex, ExperimentReport, TangencyMeasure};
use bifcurrent::io::{self, GridKind};
use bifcurrent::lifted::{contact_order_check, tangency_weight, vertical_tangencies};
use bifcurrent::poly::Poly;
use bifcurrent::roots::SolveOptions;
use bifcurrent::{Complex, GridField, LineParams};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{self, Cx, PolyArg};
use crate::CommonArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn of(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Files written by one run, so that a failed run can remove them.
pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    created: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Result<Self, String> {
        let created_dir = !dir.exists();
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        Ok(Outputs {
            dir,
            created_dir,
            created: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.register(p.clone());
        p
    }

    fn register(&mut self, p: PathBuf) {
        if !self.created.contains(&p) {
            self.created.push(p);
        }
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf, String> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| format!("{}: {e}", p.display()))?;
        Ok(p)
    }

    fn with_writer<F>(&mut self, name: &str, f: F) -> Result<(), String>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let p = self.path(name);
        let file = File::create(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| format!("{}: {e}", p.display()))
    }

    fn report(&mut self, report: &ExperimentReport) -> Result<Outcome, String> {
        self.text("report.json", &(report.to_json() + "\n"))?;
        Ok(Outcome::of(report.passed()))
    }

    /// Writes `config.resolved`: the merged parameters, with the common ones,
    /// in the same flat shape `--config` accepts.
    pub fn write_config(&mut self, command: &str, common: &CommonArgs, args: &Value) -> Result<(), String> {
        let mut map = match args {
            Value::Object(m) => m.clone(),
            _ => serde_json::Map::new(),
        };
        if let Value::Object(c) = serde_json::to_value(common).map_err(|e| e.to_string())? {
            map.extend(c);
        }
        map.insert("command".into(), Value::String(command.into()));
        let body = serde_json::to_string_pretty(&Value::Object(map)).map_err(|e| e.to_string())?;
        self.text("config.resolved", &(body + "\n")).map(|_| ())
    }

    pub fn remove_created(&mut self) {
        for p in self.created.drain(..) {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Parameters that have a complete default set.
pub trait Defaults: Sized {
    fn defaults() -> Self;
}

pub fn resolve<T>(flags: T, file: Option<&Value>) -> Result<(T, Value), String>
where
    T: Defaults + Serialize + DeserializeOwned,
{
    config::merge(&T::defaults(), file, &flags)
}

fn req<T: Clone>(v: &Option<T>, name: &str) -> Result<T, String> {
    v.clone().ok_or_else(|| format!("missing parameter {name}"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn default_line() -> (Cx, Cx) {
    let l = LineParams::default();
    (Cx(l.alpha), Cx(l.beta))
}

fn parameter_rect() -> Vec<f64> {
    vec![-2.5, 1.5, -1.5, 1.5]
}

fn line_of(alpha: &Option<Cx>, beta: &Option<Cx>) -> Result<LineParams, String> {
    let line = config::line_from(req(alpha, "alpha")?, req(beta, "beta")?);
    if !line.is_finite() {
        return Err("alpha and beta must be finite".into());
    }
    Ok(line)
}

fn note_admissibility(report: &mut ExperimentReport, line: &LineParams) {
    if !line.is_admissible() {
        report.note("line is outside the admissible range 1e-2 <= |alpha| <= 1e-1, |beta| <= 2");
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GreenArgs {
    /// Parameter c as re,im [default: 0,0]
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<Cx>,
    /// z-window re_min,re_max,im_min,im_max [default: -2,2,-2,2]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rect: Option<Vec<f64>>,
    /// Nodes per side [default: 512]
    #[arg(long)]
    pub res: Option<usize>,
    /// Truncation tolerance [default: 1e-12]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap [default: 4096]
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// PGM gamma [default: 0.5]
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl Defaults for GreenArgs {
    fn defaults() -> Self {
        GreenArgs {
            c: Some(Cx(Complex::new(0.0, 0.0))),
            rect: Some(vec![-2.0, 2.0, -2.0, 2.0]),
            res: Some(512),
            tol: Some(DEFAULT_TOL),
            n_cap: Some(DEFAULT_N_CAP),
            gamma: Some(io::DEFAULT_GAMMA),
        }
    }
}

pub fn green(a: &GreenArgs, out: &mut Outputs) -> Result<Outcome, String> {
    let c = req(&a.c, "c")?.0;
    let tol = req(&a.tol, "tol")?;
    let n_cap = req(&a.n_cap, "n-cap")?;
    if !(tol > 0.0) {
        return Err("tol must be positive".into());
    }
    let spec = config::grid_from(&req(&a.rect, "rect")?, req(&a.res, "res")?)?;
    let field = GridField::sample(spec, |z| green_fn(c, z, tol, n_cap).g).map_err(err)?;
    io::write_field_file(&out.path("green.bfgrid"), &field).map_err(err)?;
    io::write_pgm_file(&out.path("green.pgm"), &spec, &field.values, req(&a.gamma, "gamma")?).map_err(err)?;
    let mut report = ExperimentReport::new("green");
    report.param("c", c).param("grid", spec).param("tol", tol).param("n_cap", n_cap);
    let zeros = field.values.iter().filter(|&&g| g == 0.0).count();
    report
        .metric("max_green", field.values.iter().copied().fold(0.0, f64::max))
        .metric("bounded_fraction", zeros as f64 / spec.len() as f64);
    out.report(&report)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MandelGridArgs {
    /// c-window re_min,re_max,im_min,im_max [default: -2.5,1.5,-1.5,1.5]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rect: Option<Vec<f64>>,
    /// Nodes per side [default: 512]
    #[arg(long)]
    pub res: Option<usize>,
    /// Iteration cap of the membership test [default: 1000]
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// PGM gamma [default: 0.5]
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl Defaults for MandelGridArgs {
    fn defaults() -> Self {
        MandelGridArgs {
            rect: Some(parameter_rect()),
            res: Some(512),
            n_cap: Some(1000),
            gamma: Some(io::DEFAULT_GAMMA),
        }
    }
}

pub fn mandel_grid(a: &MandelGridArgs, out: &mut Outputs) -> Result<Outcome, String> {
    let spec = config::grid_from(&req(&a.rect, "rect")?, req(&a.res, "res")?)?;
    let n_cap = req(&a.n_cap, "n-cap")?;
    let gamma = req(&a.gamma, "gamma")?;
    let green = ex::green_critical_field(spec);
    // 1 inside, 0 outside, -1 undetermined.
    let membership = GridField::sample(spec, |c| match in_mandelbrot(c, n_cap).state {
        MembershipState::Inside => 1.0,
        MembershipState::Outside => 0.0,
        MembershipState::Undetermined => -1.0,
    })
    .map_err(err)?;
    io::write_field_file(&out.path("mandel_green.bfgrid"), &green).map_err(err)?;
    io::write_field_file(&out.path("mandel_membership.bfgrid"), &membership).map_err(err)?;
    io::write_pgm_file(&out.path("mandel_green.pgm"), &spec, &green.values, gamma).map_err(err)?;
    io::write_pgm_file(&out.path("mandel_membership.pgm"), &spec, &membership.values, 1.0).map_err(err)?;
    let inside = membership.values.iter().filter(|&&v| v == 1.0).count();
    let mut report = ExperimentReport::new("mandel_grid");
    report.param("grid", spec).param("n_cap", n_cap);
    report
        .metric("inside_nodes", inside as f64)
        .metric("area_estimate", inside as f64 * spec.cell_area());
    out.report(&report)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TangencyArgs {
    /// Largest depth N [default: 10]
    #[arg(long)]
    pub n: Option<usize>,
    /// Line slope alpha as re,im [default: 0.05,0]
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cx>,
    /// Line offset beta as re,im [default: 1,0]
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cx>,
}

impl Defaults for TangencyArgs {
    fn defaults() -> Self {
        let (alpha, beta) = default_line();
        TangencyArgs {
            n: Some(10),
            alpha: Some(alpha),
            beta: Some(beta),
        }
    }
}

pub fn tangency(a: &TangencyArgs, out: &mut Outputs) -> Result<Outcome, String> {
    let n = req(&a.n, "n")?;
    let line = line_of(&a.alpha, &a.beta)?;
    if n == 0 {
        return Err("n must be at least 1".into());
    }
    let mut report = ex::tangency_count_table(n, &line).map_err(err)?;
    note_admissibility(&mut report, &line);
    let table = report.tables[0].csv.clone();
    out.text("counts.csv", &table)?;
    print!("{table}");
    let cloud = vertical_tangencies(n, &line, &SolveOptions::default()).map_err(err)?;
    out.with_writer(&format!("tangency_n{n}.csv"), |w| io::write_pair_cloud_csv(w, &cloud))?;
    out.report(&report)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MuNArgs {
    /// Depth n [default: 8]
    #[arg(long)]
    pub n: Option<usize>,
    /// Line slope alpha as re,im [default: 0.05,0]
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cx>,
    /// Line offset beta as re,im [default: 1,0]
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cx>,
    /// c-window of the potential grid [default: -2.5,1.5,-1.5,1.5]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rect: Option<Vec<f64>>,
    /// Nodes per side of the potential grid [default: 256]
    #[arg(long)]
    pub res: Option<usize>,
    /// Off-atom probes for the potential identity [default: 100]
    #[arg(long)]
    pub probes: Option<usize>,
}

impl Defaults for MuNArgs {
    fn defaults() -> Self {
        let (alpha, beta) = default_line();
        MuNArgs {
            n: Some(8),
            alpha: Some(alpha),
            beta: Some(beta),
            rect: Some(parameter_rect()),
            res: Some(256),
            probes: Some(100),
        }
    }
}

pub fn mu_n(a: &MuNArgs, seed: u64, out: &mut Outputs) -> Result<Outcome, String> {
    let n = req(&a.n, "n")?;
    let line = line_of(&a.alpha, &a.beta)?;
    let probes = req(&a.probes, "probes")?;
    let spec = config::grid_from(&req(&a.rect, "rect")?, req(&a.res, "res")?)?;
    let measure = TangencyMeasure::build(n, &line).map_err(err)?;
    out.with_writer("mu_n.csv", |w| io::write_pair_cloud_csv(w, &measure.cloud))?;
    out.with_writer("marginal.csv", |w| io::write_plane_cloud_csv(w, &measure.marginal))?;
    let potential = GridField::sample(spec, |c| measure.parameter_potential(&line, c)).map_err(err)?;
    io::write_field_file(&out.path("potential.bfgrid"), &potential).map_err(err)?;
    let residual = ex::potential_identity_residual(&measure, &line, probes, seed);
    let expected = n << (n - 1);
    let mass = measure.cloud.total_mass();
    let mut report = ExperimentReport::new("mu_n");
    report
        .param("n", n)
        .param("line", line)
        .param("grid", spec)
        .param("probes", probes);
    report.seed = Some(seed);
    note_admissibility(&mut report, &line);
    report
        .metric("atoms", measure.cloud.len() as f64)
        .metric("expected_atoms", expected as f64)
        .metric("atom_weight", tangency_weight(n))
        .metric("total_mass", mass)
        .metric("marginal_atoms", measure.marginal.len() as f64)
        .metric("identity_residual", residual);
    report.pass = Some(
        measure.cloud.certified()
            && measure.cloud.len() == expected
            && (mass - 1.0).abs() <= 1e-12
            && residual <= ex::IDENTITY_TOL,
    );
    out.report(&report)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SliceArgs {
    /// Depths, comma separated [default: 4,6,8,10]
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Line slope alpha as re,im [default: 0.05,0]
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cx>,
    /// Line offset beta as re,im [default: 1,0]
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cx>,
    /// Slice centre c0 as re,im [default: 0,1]
    #[arg(long, allow_hyphen_values = true)]
    pub c0: Option<Cx>,
    /// Window radius around c0 [default: 0.25]
    #[arg(long)]
    pub width: Option<f64>,
    /// Backward-iteration sample size [default: 65536]
    #[arg(long)]
    pub brolin_count: Option<usize>,
}

impl Defaults for SliceArgs {
    fn defaults() -> Self {
        let (alpha, beta) = default_line();
        SliceArgs {
            ns: Some(vec![4, 6, 8, 10]),
            alpha: Some(alpha),
            beta: Some(beta),
            c0: Some(Cx(Complex::new(0.0, 1.0))),
            width: Some(0.25),
            brolin_count: Some(65536),
        }
    }
}

pub fn slice(a: &SliceArgs, seed: u64, out: &mut Outputs) -> Result<Outcome, String> {
    let ns = req(&a.ns, "ns")?;
    let line = line_of(&a.alpha, &a.beta)?;
    let c0 = req(&a.c0, "c0")?.0;
    let width = req(&a.width, "width")?;
    let report = ex::slice_vs_equilibrium(&ns, &line, c0, width, req(&a.brolin_count, "brolin-count")?, seed)
        .map_err(err)?;
    out.text("slices.csv", &report.tables[0].csv)?;
    if let Some(&n) = ns.iter().max() {
        let cloud = vertical_tangencies(n, &line, &SolveOptions::default()).map_err(err)?;
        if let Ok(s) = bifcurrent::measures::slice(&cloud, c0, width) {
            out.with_writer(&format!("slice_n{n}.csv"), |w| io::write_plane_cloud_csv(w, &s))?;
        }
    }
    out.report(&report)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConvergenceArgs {
    /// Coefficients of a(c), ascending, as re,im;re,im;... [default: 0,0]
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<PolyArg>,
    /// Coefficients of b(c), ascending [default: 1,0]
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<PolyArg>,
    /// Depths, comma separated [default: 4,6,8,10,12]
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// c-window [default: -2.5,1.5,-1.5,1.5]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rect: Option<Vec<f64>>,
    /// Nodes per side [default: 256]
    #[arg(long)]
    pub res: Option<usize>,
}

impl Defaults for ConvergenceArgs {
    fn defaults() -> Self {
        ConvergenceArgs {
            a: Some(PolyArg(vec![Complex::new(0.0, 0.0)])),
            b: Some(PolyArg(vec![Complex::new(1.0, 0.0)])),
            ns: Some(vec![4, 6, 8, 10, 12]),
            rect: Some(parameter_rect()),
            res: Some(256),
        }
    }
}

pub fn convergence(a: &ConvergenceArgs, out: &mut Outputs) -> Result<Outcome, String> {
    let pa = Poly::new(req(&a.a, "a")?.0);
    let pb = Poly::new(req(&a.b, "b")?.0);
    let spec = config::grid_from(&req(&a.rect, "rect")?, req(&a.res, "res")?)?;
    let report = ex::mandel_green_convergence(&pa, &pb, &req(&a.ns, "ns")?, spec).map_err(err)?;
    out.text("convergence.csv", &report.tables[0].csv)?;
    out.report(&report)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct VerifyArgs {
    /// Largest depth of the tangency count table [default: 10]
    #[arg(long)]
    pub tangency_n: Option<usize>,
    /// Largest k of the root certification [default: 10]
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Samples of the Green inequality suite [default: 100000]
    #[arg(long)]
    pub inequality_samples: Option<usize>,
    /// Backward-iteration sample size [default: 65536]
    #[arg(long)]
    pub brolin_count: Option<usize>,
    /// Nodes per side of the convergence grid [default: 256]
    #[arg(long)]
    pub res: Option<usize>,
    /// Line slope alpha as re,im [default: 0.05,0]
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cx>,
    /// Line offset beta as re,im [default: 1,0]
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cx>,
}

impl Defaults for VerifyArgs {
    fn defaults() -> Self {
        let (alpha, beta) = default_line();
        VerifyArgs {
            tangency_n: Some(10),
            k_max: Some(10),
            inequality_samples: Some(100_000),
            brolin_count: Some(65536),
            res: Some(256),
            alpha: Some(alpha),
            beta: Some(beta),
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifySummary<'a> {
    seed: u64,
    pass: bool,
    failed: Vec<&'a str>,
    reports: &'a [ExperimentReport],
}

fn contact_report(n: usize, line: &LineParams, seed: u64) -> Result<ExperimentReport, String> {
    let c = contact_order_check(n, line, 200, seed).map_err(err)?;
    let mut r = ExperimentReport::new("contact_order_check");
    r.param("n", n).param("line", line).param("samples", c.samples);
    r.seed = Some(seed);
    r.metric("transversal", c.transversal as f64)
        .metric("ambiguous", c.ambiguous as f64)
        .metric("geometry_mismatches", c.geometry_mismatches as f64)
        .metric("tangencies_checked", c.tangencies_checked as f64)
        .metric("order_one", c.order_one as f64)
        .metric("order_two_or_higher", c.order_two_or_higher as f64)
        .metric("unresolved", c.unresolved as f64)
        .metric("max_local_residual", c.max_local_residual);
    r.pass = Some(c.pass());
    Ok(r)
}

pub fn verify(a: &VerifyArgs, seed: u64, out: &mut Outputs) -> Result<Outcome, String> {
    let line = line_of(&a.alpha, &a.beta)?;
    let spec = ex::default_parameter_grid(req(&a.res, "res")?);
    let one = Poly::constant(Complex::new(1.0, 0.0));
    let depths = [4, 6, 8, 10, 12];
    let stage = |name: &str| eprintln!("verify: {name}");

    let mut reports = Vec::new();
    stage("tangency counts");
    reports.push(ex::tangency_count_table(req(&a.tangency_n, "tangency-n")?, &line).map_err(err)?);
    stage("root certification");
    let k_max = req(&a.k_max, "k-max")?;
    reports.push(
        ex::root_certification_check(k_max, k_max.min(bifcurrent::roots::CROSSCHECK_MAX_K), &line).map_err(err)?,
    );
    stage("potential identity");
    reports.push(ex::parameter_potential_check(&[4, 8], &line, spec, None, seed).map_err(err)?);
    stage("equilibrium potentials");
    let cs = [Complex::new(0.0, 0.0), Complex::new(-2.0, 0.0), Complex::new(0.0, 1.0)];
    reports.push(ex::equilibrium_potential_check(&cs, req(&a.brolin_count, "brolin-count")?, seed).map_err(err)?);
    stage("Mandelbrot Green convergence");
    for a_poly in [Poly::constant(Complex::new(0.0, 0.0)), Poly::affine(line.alpha, line.beta)] {
        let mut r = ex::mandel_green_convergence(&a_poly, &one, &depths, spec).map_err(err)?;
        r.name = if a_poly.is_zero() {
            "mandel_green_convergence_critical".into()
        } else {
            "mandel_green_convergence_line".into()
        };
        reports.push(r);
    }
    stage("Green inequalities");
    reports.push(ex::green_inequality_suite(req(&a.inequality_samples, "inequality-samples")?, seed));
    stage("lifted map invariants");
    reports.push(ex::lifted_invariant_suite(seed));
    stage("contact order");
    reports.push(contact_report(4, &line, seed)?);
    stage("dynamics invariants");
    reports.push(ex::dynamics_invariant_suite(seed));
    stage("measure invariants");
    reports.push(ex::measure_invariant_suite(6, &line, seed).map_err(err)?);

    for r in &reports {
        for t in &r.tables {
            out.text(&format!("{}_{}.csv", r.name, t.name), &t.csv)?;
        }
    }
    let measure = TangencyMeasure::build(8, &line).map_err(err)?;
    out.with_writer("mu_n8.csv", |w| io::write_pair_cloud_csv(w, &measure.cloud))?;
    out.with_writer("marginal_n8.csv", |w| io::write_plane_cloud_csv(w, &measure.marginal))?;
    let green = ex::green_critical_field(spec);
    io::write_field_file(&out.path("mandel_green.bfgrid"), &green).map_err(err)?;

    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    let pass = failed.is_empty();
    let summary = VerifySummary {
        seed,
        pass,
        failed: failed.clone(),
        reports: &reports,
    };
    let body = serde_json::to_string_pretty(&summary).map_err(err)? + "\n";
    out.text("report.json", &body)?;
    for r in &reports {
        eprintln!("verify: {:<36} {}", r.name, if r.passed() { "pass" } else { "FAIL" });
    }
    Ok(Outcome::of(pass))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RenderArgs {
    /// BFGRID01 file to render
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// PGM file name inside the output directory [default: input stem + .pgm]
    #[arg(long)]
    pub output: Option<String>,
    /// Gamma of the log-scaled grey map [default: 0.5]
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl Defaults for RenderArgs {
    fn defaults() -> Self {
        RenderArgs {
            input: None,
            output: None,
            gamma: Some(io::DEFAULT_GAMMA),
        }
    }
}

pub fn render(a: &RenderArgs, out: &mut Outputs) -> Result<Outcome, String> {
    let input = req(&a.input, "input")?;
    let gamma = req(&a.gamma, "gamma")?;
    if !(gamma > 0.0) {
        return Err("gamma must be positive".into());
    }
    let grid = io::read_grid_file(&input).map_err(|e| format!("{}: {e}", input.display()))?;
    let name = match &a.output {
        Some(n) => n.clone(),
        None => format!("{}.pgm", stem(&input)),
    };
    io::write_pgm_file(&out.path(&name), &grid.spec, &grid.values, gamma).map_err(err)?;
    let kind = match grid.kind {
        GridKind::Field => "field",
        GridKind::Measure => "measure",
    };
    eprintln!("render: {kind} grid {}x{} -> {name}", grid.spec.nx, grid.spec.ny);
    Ok(Outcome::Pass)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "grid".into())
}
