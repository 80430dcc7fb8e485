//! Numerics for the quadratic family `p_c(z) = z^2 + c`.
//!
//! The crate covers four layers:
//!
//! * [`dynamics`]: orbits, derivative jets, Green functions and membership
//!   tests for the filled Julia sets `K_c` and the Mandelbrot set.
//! * [`roots`]: the parameter polynomials `Q_k(c) = p_c^k(0)`, certified
//!   solving of `Q_k(c) = alpha*c + beta`, inverse orbits and backward
//!   iteration sampling of the equilibrium measure of `K_c`.
//! * [`lifted`]: the map induced by the differential of `F(c, z) = (c, p_c(z))`
//!   on tangent directions, vertical tangencies of pulled-back lines and the
//!   discrete tangency measures built from them.
//! * [`measures`], [`grid`] and [`cloud`]: discrete and grid measures,
//!   logarithmic potentials, discrete `dd^c`, slices and order probes.
//!
//! [`experiments`] assembles these into reproducible reports and [`io`]
//! holds the on-disk formats.

pub mod cloud;
pub mod dynamics;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod lifted;
pub mod measures;
mod par;
pub mod poly;
pub mod roots;

/// Double precision complex scalar used for both `c` and `z`.
pub type Complex = num_complex::Complex64;

/// `a / b` with both operands rescaled first, so that `|b|^2` cannot overflow.
#[inline]
pub(crate) fn cdiv(a: Complex, b: Complex) -> Complex {
    let s = b.re.abs().max(b.im.abs());
    if s == 0.0 || !s.is_finite() {
        return a / b;
    }
    (a / s) / (b / s)
}

pub use cloud::{AtomCloud, PairCloud, PairPoint, PlaneCloud, Weighted};
pub use dynamics::{GreenValue, JetValue, Membership, MembershipState, Overflow};
pub use grid::{GridField, GridMeasure, GridSpec, Rect};
pub use roots::{LineParams, RootSet};
