use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{PlaneCloud, Weighted};
use crate::Complex;

/// The multiset `p_c^{-depth}(w)`, built level by level with
/// `z -> +sqrt(z - c), -sqrt(z - c)`. Always `2^depth` entries; a zero square
/// root contributes a doubled entry.
pub fn inverse_orbit_tree(c: Complex, w: Complex, depth: usize) -> Vec<Complex> {
    let mut level = vec![w];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &z in &level {
            let s = (z - c).sqrt();
            next.push(s);
            next.push(-s);
        }
        level = next;
    }
    level
}

/// Backward-iteration sample of the equilibrium measure of `K_c`: a seeded
/// random walk `z <- ±sqrt(z - c)` with uniform branch choice, keeping `count`
/// points of weight `1/count` after discarding `burn_in` steps.
pub fn sample_brolin(c: Complex, z0: Complex, count: usize, burn_in: usize, seed: u64) -> PlaneCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = z0;
    let next = |z: Complex, rng: &mut ChaCha8Rng| {
        let s = (z - c).sqrt();
        if rng.gen::<bool>() {
            s
        } else {
            -s
        }
    };
    for _ in 0..burn_in {
        z = next(z, &mut rng);
    }
    let weight = 1.0 / count as f64;
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        z = next(z, &mut rng);
        atoms.push(Weighted { point: z, weight });
    }
    PlaneCloud::new(atoms, true).expect("uniform positive weights")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::jet_iterate;

    fn cx(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn sorted(mut v: Vec<Complex>) -> Vec<Complex> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn tree_examples() {
        let t = inverse_orbit_tree(cx(0.0, 0.0), cx(1.0, 0.0), 2);
        assert_eq!(t.len(), 4);
        for e in [cx(1.0, 0.0), cx(-1.0, 0.0), cx(0.0, 1.0), cx(0.0, -1.0)] {
            assert_eq!(t.iter().filter(|z| (*z - e).norm() < 1e-15).count(), 1);
        }
        let t = inverse_orbit_tree(cx(0.0, 0.0), cx(0.0, 0.0), 1);
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|z| z.norm() == 0.0));
        let t = sorted(inverse_orbit_tree(cx(-1.0, 0.0), cx(0.0, 0.0), 1));
        assert!((t[0] - cx(-1.0, 0.0)).norm() < 1e-15 && (t[1] - cx(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(inverse_orbit_tree(cx(0.3, 0.2), cx(0.1, 0.0), 0), vec![cx(0.1, 0.0)]);
    }

    #[test]
    fn tree_entries_solve_the_forward_equation() {
        let (c, w) = (cx(-0.12, 0.75), cx(0.4, -0.3));
        for depth in 0..9 {
            let t = inverse_orbit_tree(c, w, depth);
            assert_eq!(t.len(), 1 << depth);
            for z in t {
                let jet = jet_iterate(c, z, depth).unwrap();
                assert!((jet.value - w).norm() <= 1e-8 * (1.0 + jet.dz.norm()));
            }
        }
    }

    #[test]
    fn brolin_on_unit_circle_for_zero() {
        let cloud = sample_brolin(cx(0.0, 0.0), cx(1.0, 0.0), 4096, 32, 9);
        assert_eq!(cloud.len(), 4096);
        assert!(cloud.atoms().iter().all(|a| (a.point.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn brolin_real_segment_for_minus_two() {
        let cloud = sample_brolin(cx(-2.0, 0.0), cx(1.0, 0.0), 4096, 32, 1);
        let max_im = cloud.atoms().iter().map(|a| a.point.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-9);
        assert!(cloud.atoms().iter().all(|a| a.point.re.abs() <= 2.0 + 1e-12));
    }

    #[test]
    fn brolin_is_reproducible() {
        let a = sample_brolin(cx(0.0, 1.0), cx(0.5, 0.0), 1000, 16, 77);
        let b = sample_brolin(cx(0.0, 1.0), cx(0.5, 0.0), 1000, 16, 77);
        let bits = |c: &PlaneCloud| {
            c.atoms()
                .iter()
                .map(|a| (a.point.re.to_bits(), a.point.im.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        let c = sample_brolin(cx(0.0, 1.0), cx(0.5, 0.0), 1000, 16, 78);
        assert_ne!(bits(&a), bits(&c));
    }
}
