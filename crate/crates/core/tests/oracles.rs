//! Checks against oracles that share no code with the library: dense
//! eigenvalue solves, hand expansions and closed forms.

use approx::assert_abs_diff_eq;
use bifcurrent::dynamics::{green, DEFAULT_N_CAP, DEFAULT_TOL};
use bifcurrent::lifted::vertical_tangencies;
use bifcurrent::measures::{log_potential, slice};
use bifcurrent::roots::{qk_coeffs, qk_eval, sample_brolin, solve_qk_eq, SolveOptions};
use bifcurrent::{Complex, LineParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Roots of the monic polynomial with ascending coefficients `coeffs` (the
/// leading 1 omitted) as eigenvalues of its companion matrix.
fn companion_roots(coeffs: &[Complex]) -> Vec<Complex> {
    let d = coeffs.len();
    let m = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -coeffs[i]
        } else if i == j + 1 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    m.schur().eigenvalues().expect("complex Schur form is triangular").iter().copied().collect()
}

/// Coefficients of `Q_k(c) - alpha c - beta`, made monic, without the
/// leading 1. Only `k = 1` has a leading coefficient other than 1.
fn shifted_coeffs(k: usize, line: &LineParams) -> Vec<Complex> {
    let mut c: Vec<Complex> = qk_coeffs(k).unwrap().iter().map(|&x| Complex::new(x, 0.0)).collect();
    c[0] -= line.beta;
    c[1] -= line.alpha;
    let lead = c.pop().unwrap();
    c.iter().map(|x| x / lead).collect()
}

/// Largest distance in a greedy nearest matching of two equal-size sets.
fn multiset_distance(a: &[Complex], b: &[Complex]) -> f64 {
    assert_eq!(a.len(), b.len());
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

#[test]
fn cubic_example_against_companion_matrix() {
    // Q_3(c) = c^4 + 2c^3 + c^2 + c = c (c^3 + 2c^2 + c + 1).
    let line = LineParams::new(Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
    let set = solve_qk_eq(3, &line, &SolveOptions::default()).unwrap();
    assert!(set.certified);
    let mut oracle = companion_roots(&[1.0, 1.0, 2.0].map(|x| Complex::new(x, 0.0)));
    oracle.push(Complex::new(0.0, 0.0));
    assert!(multiset_distance(&set.roots, &oracle) < 1e-10);
}

#[test]
fn small_degrees_against_companion_matrix() {
    // The expanded coefficients stay trustworthy for eigenvalue solves up to
    // k = 5 (degree 16); beyond that cancellation near |c| = 2 ruins them.
    let lines = [
        LineParams::default(),
        LineParams::new(Complex::new(0.03, -0.07), Complex::new(-1.2, 0.9)),
    ];
    for line in &lines {
        for k in 1..=5 {
            let set = solve_qk_eq(k, line, &SolveOptions::default()).unwrap();
            let oracle = companion_roots(&shifted_coeffs(k, line));
            let d = multiset_distance(&set.roots, &oracle);
            assert!(d < 1e-7, "k = {k}: distance {d:e}");
        }
    }
}

#[test]
fn qk_eval_matches_hand_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let c = Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (q, dq) = qk_eval(3, c).unwrap();
        let expected = c.powi(4) + 2.0 * c.powi(3) + c * c + c;
        let expected_d = 4.0 * c.powi(3) + 6.0 * c * c + 2.0 * c + 1.0;
        assert!((q - expected).norm() < 1e-12 * (1.0 + expected.norm()));
        assert!((dq - expected_d).norm() < 1e-12 * (1.0 + expected_d.norm()));
    }
}

#[test]
fn equilibrium_potential_of_i_at_four() {
    let c = Complex::new(0.0, 1.0);
    let cloud = sample_brolin(c, Complex::new(1.0, 0.0), 1 << 16, 64, 42);
    let z = Complex::new(4.0, 0.0);
    let g = green(c, z, DEFAULT_TOL, DEFAULT_N_CAP).g;
    assert_abs_diff_eq!(log_potential(&cloud, z), g, epsilon = 5e-3);
}

#[test]
fn slice_at_minus_two_lies_near_real_segment() {
    let cloud = vertical_tangencies(10, &LineParams::default(), &SolveOptions::default()).unwrap();
    let s = slice(&cloud, Complex::new(-2.0, 0.0), 0.05).unwrap();
    assert!(!s.is_empty());
    // The window's Julia sets are within Hausdorff distance ~sqrt(0.05) of
    // [-2, 2]; epsilon is set from that.
    let eps = 0.25;
    for a in s.atoms() {
        assert!(a.point.re.abs() <= 2.0 + eps && a.point.im.abs() <= eps, "{:?}", a.point);
    }
}

#[test]
fn unit_circle_potential_is_log_plus() {
    let n = 1 << 12;
    let atoms = (0..n)
        .map(|k| bifcurrent::Weighted {
            point: Complex::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64),
            weight: 1.0 / n as f64,
        })
        .collect();
    let cloud = bifcurrent::PlaneCloud::new(atoms, true).unwrap();
    assert_abs_diff_eq!(log_potential(&cloud, Complex::new(2.0, 0.0)), 2f64.ln(), epsilon = 1e-6);
}
