//! Dynamics on tangent directions and vertical tangencies of pulled-back lines.
//!
//! A point of the projectivised tangent bundle over `C^2` is stored as
//! `(c, z, [v1 : v2])` with `(v1, v2)` the `(c, z)` components of a tangent
//! vector. The lifted map acts by the differential of `F^n(c, z) = (c, p_c^n(z))`:
//! `[v1 : v2] -> [v1 : dc*v1 + dz*v2]`, so the vertical directions `[0 : 1]`
//! (the hypersurface `t = v1/v2 = 0`) are mapped to themselves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{PairCloud, PairPoint, Weighted};
use crate::dynamics::{green, jet2_iterate, jet_iterate, Overflow, DEFAULT_N_CAP, DEFAULT_TOL};
use crate::roots::{
    inverse_orbit_tree, min_pairwise_distance, solve_qk_eq, LineParams, RootError, SolveOptions,
};
use crate::{cdiv, par, Complex};

/// Largest depth accepted by [`vertical_tangencies`].
pub const MAX_TANGENCY_N: usize = 20;
/// Largest depth accepted by [`trace_inverse_graphs`].
pub const MAX_TRACE_N: usize = 12;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("direction (0, 0) does not define a tangent line")]
    ZeroDirection,
    #[error("direction is killed by the differential at a critical point")]
    Indeterminate,
    #[error(transparent)]
    Overflow(#[from] Overflow),
    #[error(transparent)]
    Roots(#[from] RootError),
    #[error("tangency count {count} is not certified")]
    Uncertified { count: usize },
    #[error("depth n = {n} outside 1..={max}")]
    InvalidDepth { n: usize, max: usize },
    #[error("line parameters must be finite (vertical lines are not graphs over c)")]
    VerticalLine,
    #[error("disk meets the postcritical set near c = {c} (margin {margin:.3e})")]
    PostcriticalObstruction { c: Complex, margin: f64 },
    #[error("continuation break on ray {ray} at radial step {step}: jump {jump:.3e} exceeds safety radius {safety:.3e}")]
    ContinuationBreak {
        ray: usize,
        step: usize,
        jump: f64,
        safety: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentChartPoint {
    pub c: Complex,
    pub z: Complex,
    v1: Complex,
    v2: Complex,
}

impl TangentChartPoint {
    pub fn new(c: Complex, z: Complex, v1: Complex, v2: Complex) -> Result<Self, LiftError> {
        let norm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(LiftError::ZeroDirection);
        }
        Ok(TangentChartPoint {
            c,
            z,
            v1: v1 / norm,
            v2: v2 / norm,
        })
    }

    /// The point with chart slope `t = v1/v2`.
    pub fn from_slope(c: Complex, z: Complex, t: Complex) -> Result<Self, LiftError> {
        TangentChartPoint::new(c, z, t, Complex::new(1.0, 0.0))
    }

    pub fn vertical(c: Complex, z: Complex) -> Self {
        TangentChartPoint {
            c,
            z,
            v1: Complex::new(0.0, 0.0),
            v2: Complex::new(1.0, 0.0),
        }
    }

    /// Unit representative of the direction.
    pub fn direction(&self) -> (Complex, Complex) {
        (self.v1, self.v2)
    }

    /// Chart coordinate `t = v1/v2`, undefined on `v2 = 0`.
    pub fn slope(&self) -> Option<Complex> {
        if self.v2 == Complex::new(0.0, 0.0) {
            None
        } else {
            Some(self.v1 / self.v2)
        }
    }

    /// `|v1 w2 - v2 w1|` for unit representatives; zero iff the directions agree.
    pub fn projective_distance(&self, other: &TangentChartPoint) -> f64 {
        (self.v1 * other.v2 - self.v2 * other.v1).norm()
    }

    /// Distance of the direction from the vertical `[0 : 1]`.
    pub fn verticality(&self) -> f64 {
        self.v1.norm()
    }
}

/// `F^n` lifted to directions: `(c, p_c^n(z), [v1 : dc*v1 + dz*v2])`.
pub fn lift_iterate(pt: &TangentChartPoint, n: usize) -> Result<TangentChartPoint, LiftError> {
    let jet = jet_iterate(pt.c, pt.z, n)?;
    let v2 = jet.dc * pt.v1 + jet.dz * pt.v2;
    TangentChartPoint::new(pt.c, jet.value, pt.v1, v2).map_err(|_| LiftError::Indeterminate)
}

/// Weight `2/(n 2^n)` of each tangency atom.
pub fn tangency_weight(n: usize) -> f64 {
    2.0 / (n as f64 * 2f64.powi(n as i32))
}

/// Points where `F^{-n}(L)` is tangent to a vertical line, as a cloud on
/// `C x C` with weight `2/(n 2^n)` per point (multiplicity counted).
///
/// For each `j` in `0..n` the parameters solve `Q_{n-j}(c) = alpha c + beta`
/// and the fibre points are the `2^j` solutions of `p_c^j(z) = 0`. Atoms are
/// sorted by `(c, z, j)`. A root set that fails certification still
/// contributes its roots, but the cloud is flagged as not certified.
pub fn vertical_tangencies(n: usize, line: &LineParams, opts: &SolveOptions) -> Result<PairCloud, LiftError> {
    if n == 0 || n > MAX_TANGENCY_N {
        return Err(LiftError::InvalidDepth {
            n,
            max: MAX_TANGENCY_N,
        });
    }
    if !line.is_finite() {
        return Err(LiftError::VerticalLine);
    }
    let weight = tangency_weight(n);
    let mut certified = true;
    let mut atoms = Vec::with_capacity(n << (n - 1));
    for j in 0..n {
        let roots = match solve_qk_eq(n - j, line, opts) {
            Ok(set) => set.roots,
            Err(RootError::Uncertified(set)) => {
                certified = false;
                set.roots
            }
            Err(e) => return Err(e.into()),
        };
        for c in roots {
            for z in inverse_orbit_tree(c, Complex::new(0.0, 0.0), j) {
                atoms.push(Weighted {
                    point: PairPoint {
                        c,
                        z,
                        depth: j as u32,
                    },
                    weight,
                });
            }
        }
    }
    atoms.sort_by(|a, b| {
        let (p, q) = (&a.point, &b.point);
        p.c.re
            .total_cmp(&q.c.re)
            .then(p.c.im.total_cmp(&q.c.im))
            .then(p.z.re.total_cmp(&q.z.re))
            .then(p.z.im.total_cmp(&q.z.im))
            .then(p.depth.cmp(&q.depth))
    });
    Ok(PairCloud::new(atoms, certified).expect("positive weights"))
}

/// Number of vertical tangencies counted with multiplicity; `n 2^(n-1)` for
/// a generic line.
pub fn tangency_count(n: usize, line: &LineParams, opts: &SolveOptions) -> Result<usize, LiftError> {
    let cloud = vertical_tangencies(n, line, opts)?;
    if cloud.certified() {
        Ok(cloud.len())
    } else {
        Err(LiftError::Uncertified { count: cloud.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub n: usize,
    pub samples: usize,
    /// Samples off the critical set whose curve is transversal to the vertical.
    pub transversal: usize,
    /// Samples within `1e-8` of the critical set (`min_j |p_c^j(z)| < 1e-8`).
    pub ambiguous: usize,
    /// Transversal samples whose finite-difference slope disagreed with the
    /// implicit slope `-(dc - alpha)/dz`.
    pub geometry_mismatches: usize,
    pub tangencies_checked: usize,
    /// Tangencies where the curve follows `c - c0 ~ kappa (z - z0)^2`.
    pub order_one: usize,
    pub order_two_or_higher: usize,
    /// Tangencies where no scale gave a clean local model.
    pub unresolved: usize,
    pub max_local_residual: f64,
}

impl ContactReport {
    pub fn pass(&self) -> bool {
        self.geometry_mismatches == 0
            && self.order_two_or_higher == 0
            && self.unresolved == 0
            && self.order_one == self.tangencies_checked
    }
}

const CRITICAL_AMBIGUITY: f64 = 1e-8;

/// Checks that vertical tangency of `F^{-n}(L)` happens exactly on the
/// critical set of `F^n` and always with contact order one.
///
/// `samples` random points of `F^{-n}(L)` (random parameter in `|c| <= 2.5`,
/// random backward branch from the line) are classified by `dz`; for the
/// transversal ones the slope of the curve obtained by re-solving the fibre
/// equation at `c +- h` must match the implicit slope. Every tangency atom of
/// [`vertical_tangencies`] is then checked against the local model
/// `q(c0 + h, z) = 0 <=> (z - z0)^2 ~ -2 q_c h / q_zz`: the displacement must
/// scale like `h^(1/2)`.
pub fn contact_order_check(
    n: usize,
    line: &LineParams,
    samples: usize,
    seed: u64,
) -> Result<ContactReport, LiftError> {
    if !line.is_finite() {
        return Err(LiftError::VerticalLine);
    }
    if n == 0 || n > MAX_TRACE_N {
        return Err(LiftError::InvalidDepth { n, max: MAX_TRACE_N });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(Complex, Vec<bool>)> = (0..samples)
        .map(|_| {
            let r = 2.5 * rng.gen_range(0.0f64..1.0).sqrt();
            let c = Complex::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
            let signs = (0..n).map(|_| rng.gen::<bool>()).collect();
            (c, signs)
        })
        .collect();

    #[derive(Clone, Copy)]
    enum Sample {
        Ambiguous,
        Transversal { consistent: bool },
    }
    let outcomes: Vec<Sample> = par::map_slice(&picks, |(c, signs)| {
        let c = *c;
        let mut z = line.eval(c);
        for &s in signs {
            let r = (z - c).sqrt();
            z = if s { r } else { -r };
        }
        let mut w = z;
        let mut closest = f64::INFINITY;
        for _ in 0..n {
            closest = closest.min(w.norm());
            w = w * w + c;
        }
        if closest < CRITICAL_AMBIGUITY {
            return Sample::Ambiguous;
        }
        Sample::Transversal {
            consistent: transversal_slope_consistent(n, line, c, z),
        }
    });

    let mut report = ContactReport {
        n,
        samples,
        transversal: 0,
        ambiguous: 0,
        geometry_mismatches: 0,
        tangencies_checked: 0,
        order_one: 0,
        order_two_or_higher: 0,
        unresolved: 0,
        max_local_residual: 0.0,
    };
    for s in outcomes {
        match s {
            Sample::Ambiguous => report.ambiguous += 1,
            Sample::Transversal { consistent } => {
                report.transversal += 1;
                if !consistent {
                    report.geometry_mismatches += 1;
                }
            }
        }
    }

    let cloud = vertical_tangencies(n, line, &SolveOptions::default())?;
    let orders: Vec<ContactOrder> =
        par::map_slice(cloud.atoms(), |a| local_contact_order(n, line, a.point.c, a.point.z));
    for o in orders {
        report.tangencies_checked += 1;
        match o {
            ContactOrder::One { residual } => {
                report.order_one += 1;
                report.max_local_residual = report.max_local_residual.max(residual);
            }
            ContactOrder::Higher => report.order_two_or_higher += 1,
            ContactOrder::Unresolved => report.unresolved += 1,
        }
    }
    Ok(report)
}

/// Solves `p_c^n(z) = alpha c + beta` for `z` by Newton from `z0`.
fn fibre_newton(n: usize, line: &LineParams, c: Complex, z0: Complex) -> Option<Complex> {
    let target = line.eval(c);
    let mut z = z0;
    for _ in 0..60 {
        let jet = jet_iterate(c, z, n).ok()?;
        if jet.dz == Complex::new(0.0, 0.0) {
            return None;
        }
        let step = cdiv(jet.value - target, jet.dz);
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    Some(z)
}

fn transversal_slope_consistent(n: usize, line: &LineParams, c: Complex, z: Complex) -> bool {
    let Ok(j2) = jet2_iterate(c, z, n) else {
        return false;
    };
    let q_z = j2.jet.dz;
    let q_c = j2.jet.dc - line.alpha;
    let slope = -cdiv(q_c, q_z);
    // keep the displacement well inside the distance to the nearest other root
    let separation = if j2.dzz.norm() > 0.0 {
        (q_z.norm() / j2.dzz.norm()).min(1.0)
    } else {
        1.0
    };
    let h = 1e-4 * separation / slope.norm().max(1.0);
    let plus = fibre_newton(n, line, c + h, z + slope * h);
    let minus = fibre_newton(n, line, c - h, z - slope * h);
    match (plus, minus) {
        (Some(p), Some(m)) => {
            let fd = (p - m) / (2.0 * h);
            (fd - slope).norm() <= 1e-5 * slope.norm().max(1.0)
        }
        _ => false,
    }
}

enum ContactOrder {
    One { residual: f64 },
    Higher,
    Unresolved,
}

fn local_contact_order(n: usize, line: &LineParams, c0: Complex, z0: Complex) -> ContactOrder {
    let Ok(j2) = jet2_iterate(c0, z0, n) else {
        return ContactOrder::Unresolved;
    };
    let q_c = j2.jet.dc - line.alpha;
    let q_zz = j2.dzz;
    if q_zz.norm() <= 1e-12 * (1.0 + j2.jet.dc.norm()) {
        return ContactOrder::Higher;
    }
    if q_c == Complex::new(0.0, 0.0) {
        return ContactOrder::Unresolved;
    }
    // Choose parameter offsets so that the predicted fibre displacement is
    // delta; shrink delta until the quadratic model holds.
    let mut delta = 1e-3 / (1.0 + z0.norm());
    for _ in 0..10 {
        let mut disp = [0.0f64; 2];
        let mut hs = [0.0f64; 2];
        let mut worst = 0.0f64;
        let mut ok = true;
        for (i, d) in [delta, delta / 4.0].into_iter().enumerate() {
            let h = -q_zz * d * d / (q_c * 2.0);
            let Some(z) = fibre_newton(n, line, c0 + h, z0 + d) else {
                ok = false;
                break;
            };
            disp[i] = (z - z0).norm();
            hs[i] = h.norm();
            worst = worst.max((disp[i] / d - 1.0).abs());
        }
        if ok && worst < 0.05 {
            let exponent = (disp[0] / disp[1]).ln() / (hs[0] / hs[1]).ln();
            if (exponent - 0.5).abs() < 0.05 {
                return ContactOrder::One { residual: worst };
            }
        }
        delta /= 10.0;
    }
    ContactOrder::Unresolved
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTable {
    pub c0: Complex,
    pub r0: f64,
    pub n: usize,
    pub rays: usize,
    pub radial_steps: usize,
    /// Node 0 is `c0`; node `1 + ray * radial_steps + (step - 1)` lies on
    /// `ray` at radius `r0 * step / radial_steps`.
    pub nodes: Vec<Complex>,
    /// `branches[b][node]`: value of the `b`-th inverse graph.
    pub branches: Vec<Vec<Complex>>,
    /// Per-branch maximum of `|d gamma| / |d c|` over neighbouring nodes.
    pub max_derivative: Vec<f64>,
    pub min_separation: f64,
    /// Largest `|p_c^n(gamma(c)) - (alpha c + beta)|`.
    pub max_residual: f64,
    /// Smallest `g_c(0)` over the nodes.
    pub min_green_critical: f64,
    /// Smallest `2 g_c(0) - g_c(alpha c + beta)` over the nodes.
    pub postcritical_margin: f64,
}

/// The `2^n` inverse graphs of the line `gamma(c) = alpha c + beta` under
/// `F^n` over the disk `D(c0, r0)`, continued along `max(8, grid_pts)` rays
/// with `grid_pts` radial steps by nearest-preimage matching.
///
/// The disk must avoid the postcritical set: at every node `g_c(0) > 0` and
/// `g_c(gamma(c)) < 2 g_c(0) <= g_c(p_c^k(0))` for all `k >= 1`. A step is
/// accepted only if every branch moves by less than half the minimal distance
/// between points of the previous fibre.
pub fn trace_inverse_graphs(
    c0: Complex,
    r0: f64,
    line: &LineParams,
    n: usize,
    grid_pts: usize,
) -> Result<BranchTable, LiftError> {
    if n == 0 || n > MAX_TRACE_N {
        return Err(LiftError::InvalidDepth { n, max: MAX_TRACE_N });
    }
    if !line.is_finite() {
        return Err(LiftError::VerticalLine);
    }
    let radial_steps = grid_pts.max(1);
    let rays = radial_steps.max(8);
    let mut nodes = Vec::with_capacity(1 + rays * radial_steps);
    nodes.push(c0);
    for ray in 0..rays {
        let theta = std::f64::consts::TAU * ray as f64 / rays as f64;
        for step in 1..=radial_steps {
            nodes.push(c0 + Complex::from_polar(r0 * step as f64 / radial_steps as f64, theta));
        }
    }

    let greens: Vec<(f64, f64)> = par::map_slice(&nodes, |&c| {
        let g0 = green(c, Complex::new(0.0, 0.0), DEFAULT_TOL, DEFAULT_N_CAP).g;
        let gl = green(c, line.eval(c), DEFAULT_TOL, DEFAULT_N_CAP).g;
        (g0, gl)
    });
    let mut min_green_critical = f64::INFINITY;
    let mut postcritical_margin = f64::INFINITY;
    for (&c, &(g0, gl)) in nodes.iter().zip(&greens) {
        let margin = 2.0 * g0 - gl;
        if !(g0 > 0.0) || !(margin > 0.0) {
            return Err(LiftError::PostcriticalObstruction { c, margin });
        }
        min_green_critical = min_green_critical.min(g0);
        postcritical_margin = postcritical_margin.min(margin);
    }

    let center_fibre = inverse_orbit_tree(c0, line.eval(c0), n);
    let center_levels = levels_of(c0, line.eval(c0), n);
    let per_ray: Vec<Result<Vec<Vec<Complex>>, LiftError>> = par::map_range(rays, |ray| {
        let mut levels = center_levels.clone();
        let mut fibre = center_fibre.clone();
        let mut out = Vec::with_capacity(radial_steps);
        for step in 1..=radial_steps {
            let c = nodes[1 + ray * radial_steps + step - 1];
            let safety = 0.5 * min_pairwise_distance(&fibre);
            let next_levels = continue_levels(&levels, c, line.eval(c));
            let next_fibre = next_levels.last().cloned().unwrap_or_default();
            let jump = fibre
                .iter()
                .zip(&next_fibre)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if !(jump < safety) {
                return Err(LiftError::ContinuationBreak {
                    ray,
                    step,
                    jump,
                    safety,
                });
            }
            levels = next_levels;
            fibre = next_fibre.clone();
            out.push(next_fibre);
        }
        Ok(out)
    });

    let branch_count = 1usize << n;
    let mut branches = vec![Vec::with_capacity(nodes.len()); branch_count];
    for (b, branch) in branches.iter_mut().enumerate() {
        branch.push(center_fibre[b]);
    }
    for ray_result in per_ray {
        for fibre in ray_result? {
            for (b, branch) in branches.iter_mut().enumerate() {
                branch.push(fibre[b]);
            }
        }
    }

    let node_index = |ray: usize, step: usize| {
        if step == 0 {
            0
        } else {
            1 + ray * radial_steps + step - 1
        }
    };
    let mut neighbour_pairs = Vec::new();
    for ray in 0..rays {
        for step in 1..=radial_steps {
            neighbour_pairs.push((node_index(ray, step - 1), node_index(ray, step)));
            neighbour_pairs.push((node_index(ray, step), node_index((ray + 1) % rays, step)));
        }
    }
    let max_derivative: Vec<f64> = branches
        .iter()
        .map(|values| {
            neighbour_pairs
                .iter()
                .map(|&(i, j)| (values[i] - values[j]).norm() / (nodes[i] - nodes[j]).norm())
                .fold(0.0, f64::max)
        })
        .collect();

    let node_stats: Vec<(f64, f64)> = par::map_range(nodes.len(), |i| {
        let fibre: Vec<Complex> = branches.iter().map(|b| b[i]).collect();
        let c = nodes[i];
        let target = line.eval(c);
        let residual = fibre
            .iter()
            .map(|&z| match jet_iterate(c, z, n) {
                Ok(j) => (j.value - target).norm(),
                Err(_) => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        (min_pairwise_distance(&fibre), residual)
    });
    let min_separation = node_stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max_residual = node_stats.iter().map(|s| s.1).fold(0.0, f64::max);

    Ok(BranchTable {
        c0,
        r0,
        n,
        rays,
        radial_steps,
        nodes,
        branches,
        max_derivative,
        min_separation,
        max_residual,
        min_green_critical,
        postcritical_margin,
    })
}

/// `levels[l]` holds the `2^(l+1)` preimages at depth `l + 1`, in tree order.
fn levels_of(c: Complex, w: Complex, n: usize) -> Vec<Vec<Complex>> {
    let mut levels = Vec::with_capacity(n);
    let mut current = vec![w];
    for _ in 0..n {
        let mut next = Vec::with_capacity(current.len() * 2);
        for &z in &current {
            let s = (z - c).sqrt();
            next.push(s);
            next.push(-s);
        }
        levels.push(next.clone());
        current = next;
    }
    levels
}

/// Continues every node of the preimage tree to the new parameter, picking at
/// each level the square root nearest to the previous value of that node.
fn continue_levels(previous: &[Vec<Complex>], c: Complex, w: Complex) -> Vec<Vec<Complex>> {
    let mut levels = Vec::with_capacity(previous.len());
    let mut parents = vec![w];
    for prev in previous {
        let mut next = Vec::with_capacity(prev.len());
        for (p, &parent) in parents.iter().enumerate() {
            let s = (parent - c).sqrt();
            let (a, b) = (prev[2 * p], prev[2 * p + 1]);
            // keep the pairing (a, b) ~ (s, -s) or (-s, s), whichever is closer
            if (a - s).norm() + (b + s).norm() <= (a + s).norm() + (b - s).norm() {
                next.push(s);
                next.push(-s);
            } else {
                next.push(-s);
                next.push(s);
            }
        }
        levels.push(next.clone());
        parents = next;
    }
    levels
}
