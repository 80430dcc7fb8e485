//! The parameter polynomials `Q_k(c) = p_c^k(0)` and certified solving of
//! `Q_k(c) = alpha*c + beta`.
//!
//! `Q_k` has degree `2^(k-1)` and its coefficients grow doubly exponentially,
//! so the solver never expands it: every evaluation runs the recursion
//! `Q_1 = c`, `Q_{j+1} = Q_j^2 + c`. Far from the Mandelbrot set the recursion
//! overflows long before `k` steps; the Newton correction is then taken from
//! the asymptotic ratio `Q_k / Q_k' = Q_j / (2^(k-j) Q_j')`.

mod aberth;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Overflow, OVERFLOW_GUARD};
use crate::{cdiv, par, Complex};

pub use aberth::{aberth, match_multisets, AberthOutcome};
pub use tree::{inverse_orbit_tree, sample_brolin};

/// Largest `k` for which `qk_coeffs` stays inside the `f64` range
/// (`Q_12(1)` already exceeds `1e308`).
pub const MAX_COEFF_K: usize = 11;
/// Largest `k` accepted by [`solve_qk_eq`].
pub const MAX_SOLVE_K: usize = 20;
/// Largest `k` for which the coefficient path is used by the Aberth oracle.
pub const ORACLE_COEFF_K: usize = 4;

/// The affine line `z = alpha*c + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub alpha: Complex,
    pub beta: Complex,
}

impl Default for LineParams {
    /// The line `z = c/20 + 1`.
    fn default() -> Self {
        LineParams {
            alpha: Complex::new(0.05, 0.0),
            beta: Complex::new(1.0, 0.0),
        }
    }
}

impl LineParams {
    pub fn new(alpha: Complex, beta: Complex) -> Self {
        LineParams { alpha, beta }
    }

    #[inline]
    pub fn eval(&self, c: Complex) -> Complex {
        self.alpha * c + self.beta
    }

    /// `1e-2 <= |alpha| <= 1e-1` and `|beta| <= 2`.
    pub fn is_admissible(&self) -> bool {
        let a = self.alpha.norm();
        (1e-2..=1e-1).contains(&a) && self.beta.norm() <= 2.0
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.re.is_finite()
            && self.alpha.im.is_finite()
            && self.beta.re.is_finite()
            && self.beta.im.is_finite()
    }
}

/// `(Q_k(c), dQ_k/dc)`.
pub fn qk_eval(k: usize, c: Complex) -> Result<(Complex, Complex), Overflow> {
    assert!(k >= 1, "Q_k is defined for k >= 1");
    let mut q = c;
    let mut dq = Complex::new(1.0, 0.0);
    for j in 1..k {
        dq = q * dq * 2.0 + 1.0;
        q = q * q + c;
        if !(q.norm() <= OVERFLOW_GUARD && dq.norm() <= OVERFLOW_GUARD) {
            return Err(Overflow { step: j + 1 });
        }
    }
    Ok((q, dq))
}

/// `ln|b Q_k(c) - a|` for `k = 1..=n`, stable when `Q_k` overflows: once
/// `|Q_j|` is huge, `ln|b Q - a| = ln|Q| + ln|b - a/Q|` with `a/Q` negligible
/// and `ln|Q_{j+1}| = 2 ln|Q_j|` to double precision.
pub fn qk_affine_log_moduli(n: usize, c: Complex, a: Complex, b: Complex) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut q = c;
    let mut k = 1;
    while k <= n {
        if q.norm() > 1e100 {
            let mut log_q = q.norm().ln();
            let tail = if b == Complex::new(0.0, 0.0) {
                None
            } else {
                Some(b.norm().ln())
            };
            while k <= n {
                out.push(match tail {
                    Some(lb) => log_q + lb,
                    None => a.norm().ln(),
                });
                log_q *= 2.0;
                k += 1;
            }
            break;
        }
        out.push((b * q - a).norm().ln());
        q = q * q + c;
        k += 1;
    }
    out
}

/// Monic dense coefficients of `Q_k`, ascending degree.
pub fn qk_coeffs(k: usize) -> Result<Vec<f64>, RootError> {
    if k == 0 {
        return Err(RootError::InvalidDegree(k));
    }
    if k > MAX_COEFF_K {
        return Err(RootError::DegreeTooLarge {
            k,
            max: MAX_COEFF_K,
        });
    }
    let mut q = vec![0.0, 1.0];
    for _ in 1..k {
        let deg = q.len() - 1;
        let mut sq = vec![0.0; 2 * deg + 1];
        for (i, &a) in q.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in q.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq[1] += 1.0;
        q = sq;
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Complex>,
    pub k: usize,
    pub expected_count: usize,
    pub max_residual: f64,
    pub certified: bool,
    /// Largest distance to the matched oracle root, when a cross-check ran.
    pub oracle_distance: Option<f64>,
}

impl RootSet {
    /// Newton residual `|Q_k(c) - alpha c - beta|` at each root.
    pub fn residuals(&self, line: &LineParams) -> Vec<f64> {
        self.roots
            .iter()
            .map(|&c| match qk_eval(self.k, c) {
                Ok((q, _)) => (q - line.eval(c)).norm(),
                Err(_) => f64::INFINITY,
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum RootError {
    #[error("degree index k = {0} is invalid (k >= 1 required)")]
    InvalidDegree(usize),
    #[error("k = {k} exceeds the supported maximum {max}")]
    DegreeTooLarge { k: usize, max: usize },
    #[error("found {} of {} roots for k = {}", .0.roots.len(), .0.expected_count, .0.k)]
    Uncertified(Box<RootSet>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Also run the Aberth oracle (k <= 10) and compare the two root sets.
    pub crosscheck: bool,
    pub dedup_radius: f64,
    /// Number of times the multi-start layout is doubled after a short count.
    pub retries: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            crosscheck: false,
            dedup_radius: 1e-9,
            retries: 3,
        }
    }
}

const START_RADII: [f64; 4] = [2.2, 2.6, 3.0, 3.5];
pub const CROSSCHECK_MAX_K: usize = 10;
pub const CROSSCHECK_TOL: f64 = 1e-7;
const RESIDUAL_FACTOR: f64 = 1e-8;

/// Either `f/f'` directly, or only the asymptotic ratio when `Q_k` overflows.
enum Correction {
    Near { f: Complex, df: Complex },
    Far { ratio: Complex },
}

impl Correction {
    /// `f'/f`, the logarithmic derivative.
    fn log_derivative(&self) -> Complex {
        match *self {
            Correction::Near { f, df } => cdiv(df, f),
            Correction::Far { ratio } => cdiv(Complex::new(1.0, 0.0), ratio),
        }
    }
}

fn correction(k: usize, c: Complex, line: &LineParams) -> Correction {
    let mut q = c;
    let mut dq = Complex::new(1.0, 0.0);
    for j in 1..k {
        if q.norm() > 1e100 {
            let scale = 2f64.powi((k - j) as i32);
            return Correction::Far {
                ratio: cdiv(q, dq * scale),
            };
        }
        dq = q * dq * 2.0 + 1.0;
        q = q * q + c;
    }
    Correction::Near {
        f: q - line.eval(c),
        df: dq - line.alpha,
    }
}

/// Newton correction `f/f'` for `f = Q_k - alpha c - beta`, or `None` at a
/// critical point.
pub(crate) fn newton_correction(k: usize, c: Complex, line: &LineParams) -> Option<Complex> {
    match correction(k, c, line) {
        Correction::Near { f, df } => {
            if f == Complex::new(0.0, 0.0) {
                Some(f)
            } else if df == Complex::new(0.0, 0.0) {
                None
            } else {
                Some(cdiv(f, df))
            }
        }
        Correction::Far { ratio } => Some(ratio),
    }
}

fn residual_ok(k: usize, c: Complex, line: &LineParams) -> (bool, f64) {
    match qk_eval(k, c) {
        Ok((q, dq)) => {
            let r = (q - line.eval(c)).norm();
            (r <= RESIDUAL_FACTOR * (1.0 + dq.norm()), r)
        }
        Err(_) => (false, f64::INFINITY),
    }
}

fn max_newton_iter(degree: usize) -> usize {
    4 * degree + 200
}

fn converged(step: Complex, c: Complex) -> bool {
    step.norm() <= 1e-12 * (1.0 + c.norm())
}

/// Plain Newton from `start`, polished with two extra steps on convergence.
fn newton_from(k: usize, line: &LineParams, start: Complex, max_iter: usize) -> Option<Complex> {
    let mut c = start;
    for _ in 0..max_iter {
        let step = newton_correction(k, c, line)?;
        c -= step;
        if !(c.re.is_finite() && c.im.is_finite()) {
            return None;
        }
        if converged(step, c) {
            for _ in 0..2 {
                match newton_correction(k, c, line) {
                    Some(s) => c -= s,
                    None => break,
                }
            }
            return Some(c);
        }
    }
    None
}

/// Newton with implicit deflation against `known`:
/// `c <- c - 1 / (f'/f - sum 1/(c - r))`.
fn deflated_newton_from(
    k: usize,
    line: &LineParams,
    known: &[Complex],
    start: Complex,
    max_iter: usize,
) -> Option<Complex> {
    let mut c = start;
    for _ in 0..max_iter {
        let ld = correction(k, c, line).log_derivative();
        let pull: Complex = known.iter().map(|&r| (c - r).inv()).sum();
        let denom = ld - pull;
        if !(denom.norm() > 0.0) || !denom.re.is_finite() {
            return None;
        }
        let step = denom.inv();
        c -= step;
        if !(c.re.is_finite() && c.im.is_finite()) {
            return None;
        }
        if converged(step, c) {
            return newton_from(k, line, c, 8);
        }
    }
    None
}

fn start_points(degree: usize, per_circle_factor: usize, attempt: usize) -> Vec<Complex> {
    let per_circle = degree * per_circle_factor;
    let mut pts = Vec::with_capacity(per_circle * START_RADII.len());
    for (ri, &r) in START_RADII.iter().enumerate() {
        let offset = 0.25 * ri as f64 + 0.125 * attempt as f64 + 0.0317;
        for m in 0..per_circle {
            let theta = std::f64::consts::TAU * (m as f64 + offset) / per_circle as f64;
            pts.push(Complex::from_polar(r, theta));
        }
    }
    pts
}

/// Merges `candidates` into `kept`, dropping points within `radius` of an
/// already kept root. Deterministic for a fixed candidate order.
fn merge_dedup(kept: &mut Vec<Complex>, mut candidates: Vec<Complex>, radius: f64) {
    use std::collections::HashMap;
    let cell = |c: Complex| ((c.re / radius).floor() as i64, (c.im / radius).floor() as i64);
    let mut index: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &r) in kept.iter().enumerate() {
        index.entry(cell(r)).or_default().push(i);
    }
    candidates.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for c in candidates {
        let (cx, cy) = cell(c);
        let near = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                index
                    .get(&(cx + dx, cy + dy))
                    .is_some_and(|ids| ids.iter().any(|&i| (kept[i] - c).norm() <= radius))
            })
        });
        if !near {
            index.entry((cx, cy)).or_default().push(kept.len());
            kept.push(c);
        }
    }
}

fn sort_roots(roots: &mut [Complex]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn certify(k: usize, line: &LineParams, mut roots: Vec<Complex>, radius: f64) -> RootSet {
    sort_roots(&mut roots);
    let expected = 1usize << (k - 1);
    let checks: Vec<(bool, f64)> = par::map_slice(&roots, |&c| residual_ok(k, c, line));
    let all_ok = checks.iter().all(|(ok, _)| *ok);
    let max_residual = checks.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let separated = min_pairwise_distance(&roots) > radius;
    RootSet {
        certified: roots.len() == expected && all_ok && separated,
        roots,
        k,
        expected_count: expected,
        max_residual,
        oracle_distance: None,
    }
}

/// Smallest pairwise distance (infinity for fewer than two points).
pub fn min_pairwise_distance(points: &[Complex]) -> f64 {
    let mut sorted: Vec<Complex> = points.to_vec();
    sort_roots(&mut sorted);
    let mut best = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            if sorted[j].re - sorted[i].re >= best {
                break;
            }
            best = best.min((sorted[j] - sorted[i]).norm());
        }
    }
    best
}

/// All `2^(k-1)` solutions of `Q_k(c) = alpha c + beta`.
///
/// Newton is multi-started from `degree` points on each of the circles of
/// radius 2.2, 2.6, 3.0 and 3.5; the layout is doubled up to
/// `opts.retries` times while roots are missing. Any roots still missing
/// after that are hunted with implicitly deflated Newton. The result is
/// certified when the count is exact, every residual satisfies
/// `|f| <= 1e-8 (1 + |Q_k'|)` and all roots are farther apart than the dedup
/// radius; otherwise it is returned inside [`RootError::Uncertified`].
pub fn solve_qk_eq(k: usize, line: &LineParams, opts: &SolveOptions) -> Result<RootSet, RootError> {
    if k == 0 {
        return Err(RootError::InvalidDegree(k));
    }
    if k > MAX_SOLVE_K {
        return Err(RootError::DegreeTooLarge { k, max: MAX_SOLVE_K });
    }
    let degree = 1usize << (k - 1);
    let max_iter = max_newton_iter(degree);
    let mut kept: Vec<Complex> = Vec::with_capacity(degree);

    let mut factor = 1;
    for attempt in 0..=opts.retries {
        let starts = start_points(degree, factor, attempt);
        let found: Vec<Option<Complex>> =
            par::map_slice(&starts, |&s| newton_from(k, line, s, max_iter));
        let good: Vec<Complex> = found
            .into_iter()
            .flatten()
            .filter(|&c| residual_ok(k, c, line).0)
            .collect();
        merge_dedup(&mut kept, good, opts.dedup_radius);
        if kept.len() >= degree {
            break;
        }
        factor *= 2;
    }

    if kept.len() < degree {
        complete_with_deflation(k, line, &mut kept, degree, max_iter, opts.dedup_radius);
    }

    let mut set = certify(k, line, kept, opts.dedup_radius);

    if opts.crosscheck && k <= CROSSCHECK_MAX_K {
        let oracle = oracle_roots(k, line);
        if oracle.converged {
            if let Some(d) = match_multisets(&set.roots, &oracle.roots) {
                set.oracle_distance = Some(d);
            }
            if !set.certified {
                let fallback = certify(k, line, oracle.roots, opts.dedup_radius);
                if fallback.certified {
                    set = RootSet {
                        oracle_distance: Some(0.0),
                        ..fallback
                    };
                }
            }
        }
    }

    if set.certified {
        Ok(set)
    } else {
        Err(RootError::Uncertified(Box::new(set)))
    }
}

fn complete_with_deflation(
    k: usize,
    line: &LineParams,
    kept: &mut Vec<Complex>,
    degree: usize,
    max_iter: usize,
    radius: f64,
) {
    let starts = start_points(degree.max(16), 1, 7);
    for batch in starts.chunks(64) {
        if kept.len() >= degree {
            break;
        }
        let snapshot = kept.clone();
        let found: Vec<Option<Complex>> =
            par::map_slice(batch, |&s| deflated_newton_from(k, line, &snapshot, s, max_iter));
        let good: Vec<Complex> = found
            .into_iter()
            .flatten()
            .filter(|&c| residual_ok(k, c, line).0)
            .collect();
        merge_dedup(kept, good, radius);
    }
}

/// Independent all-roots computation by Aberth–Ehrlich simultaneous
/// iteration started from a single circle. For `k <= ORACLE_COEFF_K` the
/// polynomial is evaluated from its expanded coefficients; above that the
/// coefficient path loses all accuracy near `|c| = 2` and the recursion is
/// used instead.
pub fn oracle_roots(k: usize, line: &LineParams) -> AberthOutcome {
    let degree = 1usize << (k - 1);
    if k <= ORACLE_COEFF_K {
        let coeffs = qk_coeffs(k).expect("k within coefficient range");
        let mut poly: Vec<Complex> = coeffs.iter().map(|&x| Complex::new(x, 0.0)).collect();
        poly[0] -= line.beta;
        poly[1] -= line.alpha;
        let p = crate::poly::Poly::new(poly);
        aberth(degree, 2.5, 2000, |c| {
            let (v, dv) = p.eval_with_derivative(c);
            if v == Complex::new(0.0, 0.0) {
                Some(v)
            } else if dv == Complex::new(0.0, 0.0) {
                None
            } else {
                Some(cdiv(v, dv))
            }
        })
    } else {
        aberth(degree, 2.5, 2000, |c| newton_correction(k, c, line))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn qk_eval_examples() {
        let c = cx(0.3, -1.2);
        let (q, dq) = qk_eval(2, c).unwrap();
        assert!((q - (c * c + c)).norm() < 1e-15);
        assert!((dq - (c * 2.0 + 1.0)).norm() < 1e-15);
        let (q, dq) = qk_eval(3, cx(-1.0, 0.0)).unwrap();
        assert_eq!((q, dq), (cx(-1.0, 0.0), cx(1.0, 0.0)));
    }

    #[test]
    fn qk3_matches_expansion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let expanded = c.powu(4) + c.powu(3) * 2.0 + c * c + c;
            let (q, _) = qk_eval(3, c).unwrap();
            assert!((q - expanded).norm() <= 1e-12 * expanded.norm().max(1.0));
        }
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(qk_coeffs(1).unwrap(), vec![0.0, 1.0]);
        assert_eq!(qk_coeffs(3).unwrap(), vec![0.0, 1.0, 1.0, 2.0, 1.0]);
        let q11 = qk_coeffs(11).unwrap();
        assert_eq!(q11.len(), 1025);
        assert_eq!(*q11.last().unwrap(), 1.0);
        assert!(q11.iter().all(|x| x.is_finite()));
        assert!(matches!(qk_coeffs(12), Err(RootError::DegreeTooLarge { .. })));
    }

    #[test]
    fn coefficients_reproduce_recursion() {
        use rand::{Rng, SeedableRng};
        let coeffs = qk_coeffs(5).unwrap();
        assert_eq!(coeffs.len(), 17);
        let p = crate::poly::Poly::from_real(&coeffs);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = Complex::from_polar(rng.gen_range(0.0..1.5), rng.gen_range(0.0..6.3));
            let (q, _) = qk_eval(5, c).unwrap();
            let v = p.eval(c);
            assert!((q - v).norm() <= 1e-9 * q.norm().max(1e-3), "c={c} q={q} v={v}");
        }
    }

    #[test]
    fn affine_log_moduli_handle_overflow() {
        let c = cx(3.0, 0.5);
        let a = cx(0.2, 0.0);
        let b = cx(1.0, 0.0);
        let logs = qk_affine_log_moduli(14, c, a, b);
        for k in 1..=6 {
            let (q, _) = qk_eval(k, c).unwrap();
            assert!((logs[k - 1] - (q - a).norm().ln()).abs() < 1e-12 * logs[k - 1].abs().max(1.0));
        }
        // ln|Q_k| doubles once Q is large.
        assert!((logs[13] / logs[12] - 2.0).abs() < 1e-12);
        assert!(logs.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn linear_case() {
        let line = LineParams::default();
        let set = solve_qk_eq(1, &line, &SolveOptions::default()).unwrap();
        assert_eq!(set.roots.len(), 1);
        assert!((set.roots[0] - cx(20.0 / 19.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn quadratic_case_matches_formula() {
        let line = LineParams::default();
        let set = solve_qk_eq(2, &line, &SolveOptions::default()).unwrap();
        // c^2 + (19/20) c - 1 = 0
        let b = 0.95f64;
        let disc = (b * b + 4.0).sqrt();
        let expected = [cx((-b - disc) / 2.0, 0.0), cx((-b + disc) / 2.0, 0.0)];
        assert_eq!(set.roots.len(), 2);
        assert!(match_multisets(&set.roots, &expected).unwrap() < 1e-13);
    }

    #[test]
    fn degree_limits() {
        let line = LineParams::default();
        assert!(matches!(
            solve_qk_eq(0, &line, &SolveOptions::default()),
            Err(RootError::InvalidDegree(0))
        ));
        assert!(matches!(
            solve_qk_eq(21, &line, &SolveOptions::default()),
            Err(RootError::DegreeTooLarge { .. })
        ));
    }

    #[test]
    fn crosscheck_records_oracle_distance() {
        let line = LineParams::new(cx(0.07, -0.02), cx(-0.5, 1.1));
        let opts = SolveOptions {
            crosscheck: true,
            ..SolveOptions::default()
        };
        for k in 1..=7 {
            let set = solve_qk_eq(k, &line, &opts).unwrap();
            assert_eq!(set.roots.len(), 1 << (k - 1));
            assert!(set.oracle_distance.unwrap() < CROSSCHECK_TOL, "k={k}");
        }
    }

    #[test]
    fn min_distance_brute_force() {
        let pts = [cx(0.0, 0.0), cx(3.0, 0.0), cx(0.1, 2.0), cx(2.9, 0.05)];
        let mut brute = f64::INFINITY;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                brute = brute.min((pts[i] - pts[j]).norm());
            }
        }
        assert_eq!(min_pairwise_distance(&pts), brute);
    }
}
