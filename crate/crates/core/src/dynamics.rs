//! Orbits of `p_c(z) = z^2 + c`, derivative jets and Green functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Complex;

/// Magnitude above which an orbit is abandoned as overflowed.
pub const OVERFLOW_GUARD: f64 = 1e150;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_N_CAP: usize = 4096;

/// An orbit left the representable range at `step` (the index of the first
/// iterate whose magnitude exceeded [`OVERFLOW_GUARD`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("orbit overflowed at step {step}")]
pub struct Overflow {
    pub step: usize,
}

/// One step of the quadratic map.
#[inline]
pub fn step(c: Complex, z: Complex) -> Complex {
    z * z + c
}

/// `p_c^n(z)`, or the step at which the orbit crossed the overflow guard.
pub fn iterate(c: Complex, z: Complex, n: usize) -> Result<Complex, Overflow> {
    let mut w = z;
    for k in 1..=n {
        w = step(c, w);
        if !(w.norm() <= OVERFLOW_GUARD) {
            return Err(Overflow { step: k });
        }
    }
    Ok(w)
}

/// `p_c^n(z)` together with its partial derivatives in `z` and `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetValue {
    pub value: Complex,
    pub dz: Complex,
    pub dc: Complex,
    pub n: usize,
}

impl JetValue {
    pub fn start(z: Complex) -> Self {
        JetValue {
            value: z,
            dz: Complex::new(1.0, 0.0),
            dc: Complex::new(0.0, 0.0),
            n: 0,
        }
    }

    /// Applies one more step of the recursion
    /// `value' = value^2 + c`, `dz' = 2 value dz`, `dc' = 2 value dc + 1`.
    #[inline]
    pub fn advance(self, c: Complex) -> Self {
        let two_v = self.value * 2.0;
        JetValue {
            value: self.value * self.value + c,
            dz: two_v * self.dz,
            dc: two_v * self.dc + 1.0,
            n: self.n + 1,
        }
    }

    fn overflowed(&self) -> bool {
        !(self.value.norm() <= OVERFLOW_GUARD
            && self.dz.norm() <= OVERFLOW_GUARD
            && self.dc.norm() <= OVERFLOW_GUARD)
    }
}

pub fn jet_iterate(c: Complex, z: Complex, n: usize) -> Result<JetValue, Overflow> {
    let mut jet = JetValue::start(z);
    for _ in 0..n {
        jet = jet.advance(c);
        if jet.overflowed() {
            return Err(Overflow { step: jet.n });
        }
    }
    Ok(jet)
}

/// Jet extended with the second `z`-derivative and the mixed derivative,
/// used by the contact-order checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub jet: JetValue,
    pub dzz: Complex,
    pub dzc: Complex,
}

pub fn jet2_iterate(c: Complex, z: Complex, n: usize) -> Result<Jet2, Overflow> {
    let zero = Complex::new(0.0, 0.0);
    let mut out = Jet2 {
        jet: JetValue::start(z),
        dzz: zero,
        dzc: zero,
    };
    for _ in 0..n {
        let j = out.jet;
        // d/dz (2 v dz) = 2 dz^2 + 2 v dzz ; d/dc (2 v dz) = 2 dc dz + 2 v dzc
        out.dzz = (j.dz * j.dz + j.value * out.dzz) * 2.0;
        out.dzc = (j.dc * j.dz + j.value * out.dzc) * 2.0;
        out.jet = j.advance(c);
        if out.jet.overflowed() || !(out.dzz.norm() <= OVERFLOW_GUARD) {
            return Err(Overflow { step: out.jet.n });
        }
    }
    Ok(out)
}

/// Escape radius `R(c) = max(|c|, 2) + 1e-12`: once an iterate exceeds it the
/// orbit tends to infinity.
#[inline]
pub fn escape_radius(c: Complex) -> f64 {
    c.norm().max(2.0) + 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub g: f64,
    pub error_bound: f64,
    pub n_used: usize,
    /// False when the orbit stayed inside the escape disk for `n_cap` steps
    /// (or a certified interior shortcut applied); then `g == 0`.
    pub escaped: bool,
}

impl GreenValue {
    fn bounded(n_used: usize) -> Self {
        GreenValue {
            g: 0.0,
            error_bound: 0.0,
            n_used,
            escaped: false,
        }
    }
}

/// Dynamical Green function `g_c(z) = lim 2^-n ln+|p_c^n(z)|`.
///
/// After escape the truncated value `2^-n ln|p_c^n(z)|` differs from the limit
/// by `sum_{k>=n} 2^-(k+1) ln|1 + c/p_c^k(z)^2|`, which is at most
/// `2^-n * 2|c| / |p_c^n(z)|^2` once `|p_c^n(z)| > R(c)`. Iteration continues
/// until that bound is below `tol`.
pub fn green(c: Complex, z: Complex, tol: f64, n_cap: usize) -> GreenValue {
    let radius = escape_radius(c);
    let mut w = z;
    let mut n = 0usize;
    while w.norm() <= radius {
        if n >= n_cap {
            return GreenValue::bounded(n_cap);
        }
        w = step(c, w);
        n += 1;
    }
    if !w.norm().is_finite() {
        return GreenValue::bounded(n);
    }
    let cabs = c.norm();
    let mut scale = 0.5f64.powi(n as i32);
    loop {
        let r = w.norm();
        let bound = scale * 2.0 * cabs / (r * r);
        if bound < tol || r > OVERFLOW_GUARD {
            return GreenValue {
                g: scale * r.ln(),
                error_bound: bound,
                n_used: n,
                escaped: true,
            };
        }
        w = step(c, w);
        n += 1;
        scale *= 0.5;
    }
}

/// Certified interior test for the main cardioid and the period-two disk.
pub fn in_main_components(c: Complex) -> bool {
    let x = c.re - 0.25;
    let q = x * x + c.im * c.im;
    if q * (q + x) < 0.25 * c.im * c.im {
        return true;
    }
    let x1 = c.re + 1.0;
    x1 * x1 + c.im * c.im < 1.0 / 16.0
}

/// Green function of the Mandelbrot set at `c`, i.e. `g_c(0)`, together with
/// `g_c(c) = 2 g_c(0)`, the potential of the bifurcation measure.
pub fn green_param(c: Complex, tol: f64, n_cap: usize) -> (GreenValue, f64) {
    if in_main_components(c) {
        return (GreenValue::bounded(0), 0.0);
    }
    let g0 = green(c, Complex::new(0.0, 0.0), tol, n_cap);
    (g0, 2.0 * g0.g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipState {
    Inside,
    Outside,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub state: MembershipState,
    pub n_used: usize,
}

/// Tri-state membership of `z` in `K_c`. `Outside` is certified by an iterate
/// exceeding `R(c)`; `Inside` means no iterate exceeded `R(c)` within `n_cap`
/// steps; `Undetermined` is returned when the arithmetic stops being finite.
pub fn in_filled_julia(c: Complex, z: Complex, n_cap: usize) -> Membership {
    if !(c.re.is_finite() && c.im.is_finite() && z.re.is_finite() && z.im.is_finite()) {
        return Membership {
            state: MembershipState::Undetermined,
            n_used: 0,
        };
    }
    let radius = escape_radius(c);
    let mut w = z;
    if w.norm() > radius {
        return Membership {
            state: MembershipState::Outside,
            n_used: 0,
        };
    }
    for n in 1..=n_cap {
        w = step(c, w);
        if w.norm() > radius {
            return Membership {
                state: MembershipState::Outside,
                n_used: n,
            };
        }
    }
    Membership {
        state: MembershipState::Inside,
        n_used: n_cap,
    }
}

pub fn in_mandelbrot(c: Complex, n_cap: usize) -> Membership {
    in_filled_julia(c, Complex::new(0.0, 0.0), n_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn iterate_examples() {
        assert_eq!(iterate(cx(0.0, 0.0), cx(2.0, 0.0), 3).unwrap(), cx(256.0, 0.0));
        assert_eq!(iterate(cx(-1.0, 0.0), cx(0.0, 0.0), 2).unwrap(), cx(0.0, 0.0));
        assert_eq!(iterate(cx(-2.0, 0.0), cx(0.0, 0.0), 3).unwrap(), cx(2.0, 0.0));
    }

    #[test]
    fn iterate_reports_overflow_step() {
        // 10^(2^k) passes 1e150 at k = 8
        let err = iterate(cx(0.0, 0.0), cx(10.0, 0.0), 20).unwrap_err();
        assert_eq!(err, Overflow { step: 8 });
    }

    #[test]
    fn jet_examples() {
        let j = jet_iterate(cx(0.0, 0.0), cx(1.0, 0.0), 1).unwrap();
        assert_eq!((j.value, j.dz, j.dc), (cx(1.0, 0.0), cx(2.0, 0.0), cx(1.0, 0.0)));
        let c = cx(0.37, -0.81);
        let j = jet_iterate(c, cx(0.0, 0.0), 2).unwrap();
        assert_relative_eq!((j.value - (c * c + c)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((j.dc - (c * 2.0 + 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(j.dz, cx(0.0, 0.0));
        let j0 = jet_iterate(c, cx(0.3, 0.2), 0).unwrap();
        assert_eq!((j0.value, j0.dz, j0.dc, j0.n), (cx(0.3, 0.2), cx(1.0, 0.0), cx(0.0, 0.0), 0));
    }

    #[test]
    fn jet_matches_central_differences() {
        let (c, z, n) = (cx(0.3, 0.1), cx(0.2, 0.0), 6);
        let h = 1e-6;
        let j = jet_iterate(c, z, n).unwrap();
        let p = |c: Complex, z: Complex| iterate(c, z, n).unwrap();
        let fd_z = (p(c, z + h) - p(c, z - h)) / (2.0 * h);
        let fd_c = (p(c + h, z) - p(c - h, z)) / (2.0 * h);
        assert!((fd_z - j.dz).norm() / j.dz.norm() < 1e-6);
        assert!((fd_c - j.dc).norm() / j.dc.norm() < 1e-6);
    }

    #[test]
    fn second_order_jet_matches_differences() {
        let (c, z, n) = (cx(-0.4, 0.3), cx(0.1, -0.2), 5);
        let h = 1e-5;
        let j2 = jet2_iterate(c, z, n).unwrap();
        let dz = |c: Complex, z: Complex| jet_iterate(c, z, n).unwrap().dz;
        let fd_zz = (dz(c, z + h) - dz(c, z - h)) / (2.0 * h);
        let fd_zc = (dz(c + h, z) - dz(c - h, z)) / (2.0 * h);
        assert!((fd_zz - j2.dzz).norm() / j2.dzz.norm() < 1e-6);
        assert!((fd_zc - j2.dzc).norm() / j2.dzc.norm() < 1e-6);
    }

    #[test]
    fn green_examples() {
        let g = green(cx(0.0, 0.0), cx(2.0, 0.0), DEFAULT_TOL, DEFAULT_N_CAP);
        assert!(g.escaped);
        assert!((g.g - std::f64::consts::LN_2).abs() < DEFAULT_TOL);
        assert_eq!(green(cx(0.0, 0.0), cx(0.5, 0.0), DEFAULT_TOL, DEFAULT_N_CAP).g, 0.0);
        let g = green(cx(-2.0, 0.0), cx(0.0, 0.0), DEFAULT_TOL, DEFAULT_N_CAP);
        assert_eq!((g.g, g.error_bound, g.n_used, g.escaped), (0.0, 0.0, DEFAULT_N_CAP, false));
    }

    #[test]
    fn green_of_zero_parameter_is_log_plus() {
        for &r in &[0.1, 0.5, 0.89, 1.11, 1.5, 3.0, 17.0, 1e6] {
            for k in 0..7 {
                let z = Complex::from_polar(r, 0.9 * k as f64);
                let g = green(cx(0.0, 0.0), z, DEFAULT_TOL, DEFAULT_N_CAP).g;
                assert!((g - r.ln().max(0.0)).abs() < 1e-10, "r={r} g={g}");
            }
        }
    }

    #[test]
    fn green_param_examples() {
        assert_eq!(green_param(cx(0.0, 0.0), DEFAULT_TOL, DEFAULT_N_CAP).1, 0.0);
        assert_eq!(green_param(cx(-1.0, 0.0), DEFAULT_TOL, DEFAULT_N_CAP).1, 0.0);
        let (g0, gm) = green_param(cx(1.0, 0.0), DEFAULT_TOL, DEFAULT_N_CAP);
        assert!(g0.escaped && g0.g > 0.0);
        assert_eq!(gm, 2.0 * g0.g);
    }

    #[test]
    fn shortcut_agrees_with_iteration() {
        for &c in &[cx(-1.0, 0.0), cx(0.0, 0.0), cx(0.2, 0.3), cx(-0.9, 0.1), cx(-0.5, 0.5)] {
            assert!(in_main_components(c));
            assert_eq!(in_mandelbrot(c, 2000).state, MembershipState::Inside);
        }
        assert!(!in_main_components(cx(0.26, 0.0)));
        assert!(!in_main_components(cx(-1.3, 0.0)));
    }

    #[test]
    fn membership_examples() {
        assert_eq!(in_mandelbrot(cx(-1.0, 0.0), 100).state, MembershipState::Inside);
        assert_eq!(in_mandelbrot(cx(0.26, 0.0), 1000).state, MembershipState::Outside);
        assert_eq!(in_mandelbrot(cx(-2.0, 0.0), 1000).state, MembershipState::Inside);
        assert_eq!(
            in_filled_julia(cx(f64::NAN, 0.0), cx(0.0, 0.0), 10).state,
            MembershipState::Undetermined
        );
    }

    #[test]
    fn outside_membership_means_positive_green() {
        for i in 0..50 {
            let c = Complex::from_polar(0.3 + 0.05 * i as f64, 0.7 * i as f64);
            let m = in_mandelbrot(c, 500);
            let g = green(c, cx(0.0, 0.0), DEFAULT_TOL, 500);
            assert_eq!(m.state == MembershipState::Outside, g.escaped, "c={c}");
        }
    }
}
