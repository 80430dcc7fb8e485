use crate::{par, Complex};

#[derive(Debug, Clone)]
pub struct AberthOutcome {
    pub roots: Vec<Complex>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Aberth–Ehrlich simultaneous iteration for a polynomial of the given
/// degree, accessed only through its Newton correction `f/f'`.
///
/// Starts from `degree` points on the circle of radius `radius` and applies
/// Jacobi-style sweeps `z_i <- z_i - N_i / (1 - N_i sum_{j != i} 1/(z_i - z_j))`
/// until every correction is below `1e-13 (1 + |z_i|)` or `max_sweeps` is hit.
pub fn aberth<F>(degree: usize, radius: f64, max_sweeps: usize, newton: F) -> AberthOutcome
where
    F: Fn(Complex) -> Option<Complex> + Sync + Send,
{
    let mut z: Vec<Complex> = (0..degree)
        .map(|m| {
            let theta = std::f64::consts::TAU * (m as f64 + 0.25) / degree as f64 + 0.4;
            Complex::from_polar(radius, theta)
        })
        .collect();
    let mut done = vec![false; degree];
    for sweep in 1..=max_sweeps {
        let current = &z;
        let active = &done;
        let updates: Vec<Option<Complex>> = par::map_range(degree, |i| {
            if active[i] {
                return Some(Complex::new(0.0, 0.0));
            }
            let zi = current[i];
            let n = newton(zi)?;
            let mut s = Complex::new(0.0, 0.0);
            for (j, &zj) in current.iter().enumerate() {
                if j != i {
                    s += (zi - zj).inv();
                }
            }
            let w = n / (Complex::new(1.0, 0.0) - n * s);
            Some(if w.re.is_finite() && w.im.is_finite() { w } else { n })
        });
        let mut all_done = true;
        for (i, u) in updates.into_iter().enumerate() {
            if done[i] {
                continue;
            }
            // A critical point of f: nudge off it.
            let w = u.unwrap_or(Complex::new(1e-7, 1e-7));
            z[i] -= w;
            if w.norm() <= 1e-13 * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return AberthOutcome {
                roots: z,
                converged: true,
                sweeps: sweep,
            };
        }
    }
    AberthOutcome {
        roots: z,
        converged: false,
        sweeps: max_sweeps,
    }
}

/// Matches two root multisets one-to-one by nearest neighbours and returns the
/// largest matched distance, or `None` when sizes differ or the greedy
/// matching is not a bijection.
pub fn match_multisets(a: &[Complex], b: &[Complex]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    // Match the tightest pairs first so that near clusters do not steal
    // each other's partners.
    let mut order: Vec<(f64, usize, usize)> = a
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (j, d) = nearest(&x, b);
            (d, i, j)
        })
        .collect();
    order.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
    for (_, i, _) in order {
        let x = a[i];
        let mut best = None;
        for (j, &y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

fn nearest(x: &Complex, b: &[Complex]) -> (usize, f64) {
    b.iter()
        .enumerate()
        .map(|(j, y)| (j, (x - y).norm()))
        .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aberth_finds_roots_of_unity() {
        // z^8 - 1
        let out = aberth(8, 2.0, 500, |z| {
            let f = z.powu(8) - 1.0;
            let df = z.powu(7) * 8.0;
            Some(f / df)
        });
        assert!(out.converged);
        let expected: Vec<Complex> = (0..8)
            .map(|m| Complex::from_polar(1.0, std::f64::consts::TAU * m as f64 / 8.0))
            .collect();
        assert!(match_multisets(&out.roots, &expected).unwrap() < 1e-12);
    }

    #[test]
    fn multiset_match_rejects_size_mismatch() {
        let a = [Complex::new(0.0, 0.0)];
        assert!(match_multisets(&a, &[]).is_none());
        let b = [Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)];
        assert!(match_multisets(&b, &b).unwrap() == 0.0);
    }
}
