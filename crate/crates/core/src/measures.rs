//! Operations on discrete measures: pushforward to the parameter line,
//! logarithmic potentials, slices and the plurisubharmonic order probe.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{compensated_sum, CloudPoint, PairCloud, PlaneCloud, Weighted};
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("grid shapes or rectangles differ")]
    ShapeMismatch,
    #[error("invalid grid {nx}x{ny} (need at least 2x2 over a non-empty finite rectangle)")]
    InvalidGrid { nx: usize, ny: usize },
    #[error("non-finite field value at index {index}")]
    NonFinite { index: usize },
    #[error("clipped negative mass {clipped:.3e} exceeds 1% of total {total:.3e}; grid under-resolved")]
    ClippingExcess { clipped: f64, total: f64 },
    #[error("slice is empty")]
    EmptySlice,
}

/// Pushforward of a cloud on `C x C` under `(c, z) -> c`. Atoms with the same
/// `c` are merged; output is sorted by `(re, im)`.
pub fn marginal_c(cloud: &PairCloud) -> PlaneCloud {
    let mut groups: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    for a in cloud.atoms() {
        groups
            .entry((a.point.c.re.to_bits(), a.point.c.im.to_bits()))
            .or_default()
            .push(a.weight);
    }
    let mut atoms: Vec<Weighted<Complex>> = groups
        .into_iter()
        .map(|((re, im), w)| Weighted {
            point: Complex::new(f64::from_bits(re), f64::from_bits(im)),
            weight: compensated_sum(w),
        })
        .collect();
    atoms.sort_by(|a, b| {
        a.point
            .re
            .total_cmp(&b.point.re)
            .then(a.point.im.total_cmp(&b.point.im))
    });
    PlaneCloud::new(atoms, cloud.certified()).expect("merged weights stay positive")
}

/// Distance below which `log_potential` reports `-inf`.
pub const ATOM_EXCLUSION: f64 = 1e-14;

/// `sum_i w_i ln|x - a_i|`; `-inf` within `1e-14` of an atom.
pub fn log_potential(cloud: &PlaneCloud, x: Complex) -> f64 {
    if cloud
        .atoms()
        .iter()
        .any(|a| (x - a.point).norm() <= ATOM_EXCLUSION)
    {
        return f64::NEG_INFINITY;
    }
    cloud.integrate(|a| (x - a).norm().ln())
}

/// Empirical conditional of `cloud` near the vertical line `{c0} x C`: the
/// `z`-coordinates of atoms with `|c - c0| <= width`, renormalised to mass 1.
pub fn slice(cloud: &PairCloud, c0: Complex, width: f64) -> Result<PlaneCloud, MeasureError> {
    let picked: Vec<Weighted<Complex>> = cloud
        .atoms()
        .iter()
        .filter(|a| (a.point.c - c0).norm() <= width)
        .map(|a| Weighted {
            point: a.point.z,
            weight: a.weight,
        })
        .collect();
    if picked.is_empty() {
        return Err(MeasureError::EmptySlice);
    }
    let mass = compensated_sum(picked.iter().map(|a| a.weight));
    let atoms = picked
        .into_iter()
        .map(|a| Weighted {
            point: a.point,
            weight: a.weight / mass,
        })
        .collect();
    Ok(PlaneCloud::new(atoms, cloud.certified()).expect("positive weights"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    /// `phi = 1`; must agree in both directions.
    Mass,
    /// `phi = ln|l(w) - a|` with `a` away from both supports.
    LogKernel,
    /// `phi = Re l(w)`; pluriharmonic, so checked in both directions.
    Linear,
    /// `phi = |l(w)|^2`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub kind: ProbeKind,
    /// `<nu, phi> - <mu, phi>`.
    pub difference: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshOrderReport {
    pub tol: f64,
    pub probes: Vec<ProbeOutcome>,
}

impl PshOrderReport {
    pub fn violations(&self) -> impl Iterator<Item = (usize, &ProbeOutcome)> {
        self.probes.iter().enumerate().filter(|(_, p)| p.violated)
    }

    pub fn violation_count(&self) -> usize {
        self.violations().count()
    }
}

/// `5 N^{-1/2}` times the probe scale: the default violation tolerance for
/// comparing `N`-atom discretisations.
pub fn default_psh_tol(atoms: usize, probe_scale: f64) -> f64 {
    5.0 * probe_scale / (atoms.max(1) as f64).sqrt()
}

/// Falsification test for `nu ▷ mu` (`<nu, phi> >= <mu, phi>` for every
/// plurisubharmonic `phi`). Probes are a mass probe followed by `probes`
/// seeded test functions cycling through log kernels, real parts of linear
/// forms and squared moduli of linear forms. Only necessary conditions are
/// tested: an empty violation list never proves the order.
pub fn psh_order_test<P: CloudPoint>(
    nu: &crate::AtomCloud<P>,
    mu: &crate::AtomCloud<P>,
    probes: usize,
    seed: u64,
    tol: f64,
) -> PshOrderReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(probes + 1);
    let mass_diff = nu.total_mass() - mu.total_mass();
    out.push(ProbeOutcome {
        kind: ProbeKind::Mass,
        difference: mass_diff,
        violated: mass_diff.abs() > tol,
    });
    for p in 0..probes {
        let form = random_form::<P>(&mut rng);
        let apply = |w: &P| {
            let x = w.coords();
            form[0] * x[0] + form[1] * x[1]
        };
        let (kind, diff) = match p % 3 {
            0 => {
                let reach = nu
                    .atoms()
                    .iter()
                    .chain(mu.atoms())
                    .map(|a| apply(&a.point).norm())
                    .fold(0.0, f64::max);
                let r = reach + 1.0 + rng.gen_range(0.0..1.0) * (reach + 1.0);
                let a = Complex::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
                let phi = |w: &P| (apply(w) - a).norm().ln();
                (ProbeKind::LogKernel, nu.integrate(phi) - mu.integrate(phi))
            }
            1 => {
                let phi = |w: &P| apply(w).re;
                (ProbeKind::Linear, nu.integrate(phi) - mu.integrate(phi))
            }
            _ => {
                let phi = |w: &P| apply(w).norm_sqr();
                (ProbeKind::Quadratic, nu.integrate(phi) - mu.integrate(phi))
            }
        };
        let violated = match kind {
            ProbeKind::Linear => diff.abs() > tol,
            _ => diff < -tol,
        };
        out.push(ProbeOutcome {
            kind,
            difference: diff,
            violated,
        });
    }
    PshOrderReport { tol, probes: out }
}

fn random_form<P: CloudPoint>(rng: &mut ChaCha8Rng) -> [Complex; 2] {
    let mut u = [Complex::new(0.0, 0.0); 2];
    for slot in u.iter_mut().take(P::DIM) {
        *slot = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
    if n > 0.0 {
        u[0] /= n;
        u[1] /= n;
    } else {
        u[0] = Complex::new(1.0, 0.0);
    }
    u
}
