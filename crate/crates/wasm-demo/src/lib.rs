//! Browser bindings: Green function images, vertical tangency clouds and
//! equilibrium-measure samples. The plain functions do the work and are
//! tested natively; the exported wrappers only convert errors.

use bifcurrent::dynamics::{green, green_param, DEFAULT_N_CAP, DEFAULT_TOL};
use bifcurrent::lifted::vertical_tangencies;
use bifcurrent::roots::{sample_brolin, SolveOptions};
use bifcurrent::{Complex, LineParams};
use wasm_bindgen::prelude::*;

/// Depth limit for interactive use; depth 12 already takes seconds.
pub const MAX_DEMO_DEPTH: usize = 12;
pub const MAX_PIXELS: usize = 1 << 22;
pub const MAX_SAMPLES: usize = 1 << 18;

/// Which Green function an image shows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plane {
    /// `g_c(0)` over the parameter window.
    Parameter,
    /// `g_c(z)` over the dynamical window for a fixed `c`.
    Dynamical(Complex),
}

/// Dark inside, then a blue to amber ramp in `ln g`.
fn colour(g: f64) -> [u8; 4] {
    if g <= 0.0 {
        return [8, 8, 16, 255];
    }
    let t = ((g.ln() + 9.0) / 11.0).clamp(0.0, 1.0);
    let s = 1.0 - t;
    let r = 255.0 * (1.0 - s * s * s);
    let gr = 200.0 * (1.0 - s * s);
    let b = 255.0 * (0.35 + 0.65 * s * t * 4.0).min(1.0) * (1.0 - 0.6 * t);
    [r as u8, gr as u8, b as u8, 255]
}

/// RGBA pixels, row 0 at `im_max`.
pub fn green_image(
    plane: Plane,
    width: usize,
    height: usize,
    rect: [f64; 4],
) -> Result<Vec<u8>, String> {
    let [re_min, re_max, im_min, im_max] = rect;
    if width < 2 || height < 2 || width * height > MAX_PIXELS {
        return Err(format!("image must be between 2x2 and {MAX_PIXELS} pixels"));
    }
    if !(re_min < re_max && im_min < im_max) || rect.iter().any(|x| !x.is_finite()) {
        return Err("invalid window".into());
    }
    let mut px = Vec::with_capacity(width * height * 4);
    for row in 0..height {
        let im = im_max - (im_max - im_min) * row as f64 / (height - 1) as f64;
        for col in 0..width {
            let re = re_min + (re_max - re_min) * col as f64 / (width - 1) as f64;
            let p = Complex::new(re, im);
            let g = match plane {
                Plane::Parameter => green_param(p, DEFAULT_TOL, 512).0.g,
                Plane::Dynamical(c) => green(c, p, DEFAULT_TOL, 512).g,
            };
            px.extend_from_slice(&colour(g));
        }
    }
    Ok(px)
}

/// Vertical tangencies of depth `n` as a flat list of
/// `(c_re, c_im, z_re, z_im, depth, weight)` records.
pub fn tangency_records(n: usize, alpha: Complex, beta: Complex) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_DEMO_DEPTH {
        return Err(format!("depth must be in 1..={MAX_DEMO_DEPTH}"));
    }
    let line = LineParams::new(alpha, beta);
    let cloud = vertical_tangencies(n, &line, &SolveOptions::default()).map_err(|e| e.to_string())?;
    if !cloud.certified() {
        return Err("tangency cloud could not be certified".into());
    }
    let mut out = Vec::with_capacity(cloud.len() * 6);
    for a in cloud.atoms() {
        let p = &a.point;
        out.extend_from_slice(&[p.c.re, p.c.im, p.z.re, p.z.im, p.depth as f64, a.weight]);
    }
    Ok(out)
}

/// Backward-iteration sample of the equilibrium measure of `K_c` as a flat
/// `(re, im)` list.
pub fn equilibrium_points(c: Complex, count: usize, seed: u64) -> Result<Vec<f64>, String> {
    if count == 0 || count > MAX_SAMPLES {
        return Err(format!("count must be in 1..={MAX_SAMPLES}"));
    }
    let cloud = sample_brolin(c, Complex::new(1.0, 0.0), count, 64, seed);
    Ok(cloud.atoms().iter().flat_map(|a| [a.point.re, a.point.im]).collect())
}

#[wasm_bindgen(js_name = parameterGreenImage)]
pub fn parameter_green_image(
    width: usize,
    height: usize,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
) -> Result<Vec<u8>, JsError> {
    green_image(Plane::Parameter, width, height, [re_min, re_max, im_min, im_max]).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dynamicalGreenImage)]
#[allow(clippy::too_many_arguments)]
pub fn dynamical_green_image(
    c_re: f64,
    c_im: f64,
    width: usize,
    height: usize,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
) -> Result<Vec<u8>, JsError> {
    green_image(
        Plane::Dynamical(Complex::new(c_re, c_im)),
        width,
        height,
        [re_min, re_max, im_min, im_max],
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tangencyCloud)]
pub fn tangency_cloud(n: usize, alpha_re: f64, alpha_im: f64, beta_re: f64, beta_im: f64) -> Result<Vec<f64>, JsError> {
    tangency_records(n, Complex::new(alpha_re, alpha_im), Complex::new(beta_re, beta_im)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = equilibriumSample)]
pub fn equilibrium_sample(c_re: f64, c_im: f64, count: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    equilibrium_points(Complex::new(c_re, c_im), count, seed as u64).map_err(|e| JsError::new(&e))
}

/// `g_c(z)` at a single point, for the page's readout.
#[wasm_bindgen(js_name = greenAt)]
pub fn green_at(c_re: f64, c_im: f64, z_re: f64, z_im: f64) -> f64 {
    green(Complex::new(c_re, c_im), Complex::new(z_re, z_im), DEFAULT_TOL, DEFAULT_N_CAP).g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_has_rgba_layout_and_dark_interior() {
        let px = green_image(Plane::Parameter, 9, 7, [-2.0, 1.0, -1.5, 1.5]).unwrap();
        assert_eq!(px.len(), 9 * 7 * 4);
        // Centre row, pixel at c = -0.5 (main cardioid): inside.
        let i = (3 * 9 + 6) * 4;
        assert_eq!(&px[i..i + 4], &[8, 8, 16, 255]);
        // Corner c = -2 + 1.5i escapes.
        assert_ne!(&px[0..4], &[8, 8, 16, 255]);
        assert!(green_image(Plane::Parameter, 1, 7, [-2.0, 1.0, -1.5, 1.5]).is_err());
        assert!(green_image(Plane::Parameter, 4, 4, [1.0, -2.0, -1.5, 1.5]).is_err());
    }

    #[test]
    fn dynamical_image_of_zero_is_the_disk() {
        let px = green_image(Plane::Dynamical(Complex::new(0.0, 0.0)), 5, 5, [-2.0, 2.0, -2.0, 2.0]).unwrap();
        let centre = (2 * 5 + 2) * 4;
        assert_eq!(&px[centre..centre + 4], &[8, 8, 16, 255]);
        assert_ne!(&px[0..4], &[8, 8, 16, 255]);
    }

    #[test]
    fn tangency_records_have_full_count_and_mass() {
        let r = tangency_records(4, Complex::new(0.05, 0.0), Complex::new(1.0, 0.0)).unwrap();
        assert_eq!(r.len(), 32 * 6);
        let mass: f64 = r.chunks_exact(6).map(|a| a[5]).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(tangency_records(0, Complex::new(0.05, 0.0), Complex::new(1.0, 0.0)).is_err());
        assert!(tangency_records(13, Complex::new(0.05, 0.0), Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn equilibrium_points_for_zero_lie_on_circle() {
        let pts = equilibrium_points(Complex::new(0.0, 0.0), 500, 3).unwrap();
        assert_eq!(pts.len(), 1000);
        for p in pts.chunks_exact(2) {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-9);
        }
        assert!(equilibrium_points(Complex::new(0.0, 0.0), 0, 3).is_err());
    }
}
