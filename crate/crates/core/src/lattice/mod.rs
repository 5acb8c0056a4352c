//! Flat torus lattice with a conformal factor, real 1-forms, discrete
//! exterior derivatives and the L² pairings.
//!
//! Sites are numbered row-major, `s = iy·Nx + ix`. A 1-form lives on the two
//! links leaving a site, a 2-form on the plaquette whose lower-left corner
//! is the site and is stored integrated over the plaquette.

mod fields;
mod star;

pub use fields::*;
pub use star::{coulomb_potential, ExactStar, Fft2};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, Ordering};

/// Test hook: flips the sign of [`hodge_star`] so that the verify suite can
/// be checked against a known defect.
#[doc(hidden)]
pub static HODGE_SIGN_BUG: AtomicBool = AtomicBool::new(false);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusLattice {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Conformal factor `h` per site, metric `h²(dx² + dy²)`.
    pub conformal: Vec<f64>,
}

impl TorusLattice {
    /// Flat lattice (`h ≡ 1`).
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_conformal(nx, ny, lx, ly, vec![1.0; nx * ny])
    }

    pub fn unit(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, 1.0, 1.0)
    }

    pub fn with_conformal(nx: usize, ny: usize, lx: f64, ly: f64, conformal: Vec<f64>) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidLattice(format!("need at least 4x4 sites, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidLattice(format!("periods must be positive, got {lx}, {ly}")));
        }
        if conformal.len() != nx * ny {
            return Err(Error::SizeMismatch { expected: nx * ny, got: conformal.len() });
        }
        if conformal.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidLattice("conformal factor must be positive".into()));
        }
        Ok(TorusLattice { nx, ny, lx, ly, conformal })
    }

    /// Lattice with `h(x,y) = 1 + amp·sin(2πx/Lx)·cos(2πy/Ly)`.
    pub fn bump(nx: usize, ny: usize, lx: f64, ly: f64, amp: f64) -> Result<Self> {
        let mut h = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let x = 2.0 * std::f64::consts::PI * ix as f64 / nx as f64;
                let y = 2.0 * std::f64::consts::PI * iy as f64 / ny as f64;
                h[iy * nx + ix] = 1.0 + amp * x.sin() * y.cos();
            }
        }
        Self::with_conformal(nx, ny, lx, ly, h)
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }
    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    /// Coordinate cell area `hx·hy`.
    #[inline]
    pub fn cell(&self) -> f64 {
        self.hx() * self.hy()
    }
    #[inline]
    pub fn site(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
    #[inline]
    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.nx, s / self.nx)
    }
    #[inline]
    pub fn xp(&self, s: usize) -> usize {
        let (ix, iy) = self.coords(s);
        self.site((ix + 1) % self.nx, iy)
    }
    #[inline]
    pub fn xm(&self, s: usize) -> usize {
        let (ix, iy) = self.coords(s);
        self.site((ix + self.nx - 1) % self.nx, iy)
    }
    #[inline]
    pub fn yp(&self, s: usize) -> usize {
        let (ix, iy) = self.coords(s);
        self.site(ix, (iy + 1) % self.ny)
    }
    #[inline]
    pub fn ym(&self, s: usize) -> usize {
        let (ix, iy) = self.coords(s);
        self.site(ix, (iy + self.ny - 1) % self.ny)
    }
    /// Whether the y-link leaving `s` crosses the y-wrap.
    #[inline]
    pub fn wraps_y(&self, s: usize) -> bool {
        s / self.nx == self.ny - 1
    }
    /// Riemannian volume of the cell at `s`, `h²·hx·hy`.
    #[inline]
    pub fn dvol(&self, s: usize) -> f64 {
        let h = self.conformal[s];
        h * h * self.cell()
    }
    pub fn area(&self) -> f64 {
        pairwise_sum(&(0..self.sites()).map(|s| self.dvol(s)).collect::<Vec<_>>())
    }
    pub fn is_flat(&self) -> bool {
        self.conformal.iter().all(|h| *h == 1.0)
    }
    pub fn same_shape(&self, o: &TorusLattice) -> bool {
        self.nx == o.nx && self.ny == o.ny
    }
    pub fn label(&self) -> String {
        format!("{}x{}", self.nx, self.ny)
    }
}

/// Order-independent summation: fixed binary tree over the slice.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Real (iℝ-valued) 1-form: coefficients on x- and y-links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl OneForm {
    pub fn zeros(n: usize) -> Self {
        OneForm { x: vec![0.0; n], y: vec![0.0; n] }
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn axpy(&mut self, a: f64, o: &OneForm) {
        for (p, q) in self.x.iter_mut().zip(&o.x) {
            *p += a * q;
        }
        for (p, q) in self.y.iter_mut().zip(&o.y) {
            *p += a * q;
        }
    }
    pub fn scaled(&self, a: f64) -> OneForm {
        OneForm { x: self.x.iter().map(|v| a * v).collect(), y: self.y.iter().map(|v| a * v).collect() }
    }
}

/// Pointwise Hodge star on 1-forms, `*dx = dy`, `*dy = −dx`.
pub fn hodge_star(f: &OneForm) -> OneForm {
    let star = OneForm { x: f.y.iter().map(|v| -v).collect(), y: f.x.clone() };
    if HODGE_SIGN_BUG.load(Ordering::Relaxed) {
        return star.scaled(-1.0);
    }
    star
}

/// Pointwise star on a 1-form with values in any vector space.
pub fn hodge_star_pair<T: Copy + std::ops::Neg<Output = T>>(vx: T, vy: T) -> (T, T) {
    (-vy, vx)
}

/// Star of a 2-form stored integrated over plaquettes: the density
/// `F/(h²·hx·hy)`.
pub fn hodge_star_2form(lat: &TorusLattice, f: &[f64]) -> Vec<f64> {
    f.iter().enumerate().map(|(s, v)| v / lat.dvol(s)).collect()
}

/// Star of a 0-form: the integrated 2-form `f·h²·hx·hy`.
pub fn hodge_star_0form(lat: &TorusLattice, f: &[f64]) -> Vec<f64> {
    f.iter().enumerate().map(|(s, v)| v * lat.dvol(s)).collect()
}

/// `∫ f g dvol`.
pub fn inner_0form(lat: &TorusLattice, f: &[f64], g: &[f64]) -> f64 {
    pairwise_sum(&f.iter().zip(g).enumerate().map(|(s, (a, b))| a * b * lat.dvol(s)).collect::<Vec<_>>())
}

/// `∫ *f ∧ g` for 1-forms, conformally invariant.
pub fn inner_1form(lat: &TorusLattice, f: &OneForm, g: &OneForm) -> f64 {
    let c = lat.cell();
    let terms: Vec<f64> = (0..f.len()).map(|s| (f.x[s] * g.x[s] + f.y[s] * g.y[s]) * c).collect();
    pairwise_sum(&terms)
}

/// `∫ *F *G dvol` for integrated 2-forms.
pub fn inner_2form(lat: &TorusLattice, f: &[f64], g: &[f64]) -> f64 {
    pairwise_sum(&f.iter().zip(g).enumerate().map(|(s, (a, b))| a * b / lat.dvol(s)).collect::<Vec<_>>())
}

/// Forward difference `dγ` of a periodic 0-form.
pub fn d0(lat: &TorusLattice, g: &[f64]) -> OneForm {
    let (hx, hy) = (lat.hx(), lat.hy());
    let mut out = OneForm::zeros(lat.sites());
    for s in 0..lat.sites() {
        out.x[s] = (g[lat.xp(s)] - g[s]) / hx;
        out.y[s] = (g[lat.yp(s)] - g[s]) / hy;
    }
    out
}

/// L²-adjoint of `d0` for the pairings above: `d*α = dᵀα / h²`.
pub fn d0_adjoint(lat: &TorusLattice, a: &OneForm) -> Vec<f64> {
    let (hx, hy) = (lat.hx(), lat.hy());
    (0..lat.sites())
        .map(|s| {
            let t = (a.x[lat.xm(s)] - a.x[s]) / hx + (a.y[lat.ym(s)] - a.y[s]) / hy;
            let h = lat.conformal[s];
            t / (h * h)
        })
        .collect()
}

/// Backward difference of a periodic 0-form.
pub fn d0_backward(lat: &TorusLattice, g: &[f64]) -> OneForm {
    let (hx, hy) = (lat.hx(), lat.hy());
    let mut out = OneForm::zeros(lat.sites());
    for s in 0..lat.sites() {
        out.x[s] = (g[s] - g[lat.xm(s)]) / hx;
        out.y[s] = (g[s] - g[lat.ym(s)]) / hy;
    }
    out
}

/// `curl* = −*d*` on 2-forms, with the backward difference.
pub fn codifferential_2form(lat: &TorusLattice, f: &[f64]) -> OneForm {
    hodge_star(&d0_backward(lat, &hodge_star_2form(lat, f))).scaled(-1.0)
}

/// Plain transpose of the forward difference, `dᵀα` (no metric weights).
pub fn d0_transpose(lat: &TorusLattice, a: &OneForm) -> Vec<f64> {
    let (hx, hy) = (lat.hx(), lat.hy());
    (0..lat.sites())
        .map(|s| (a.x[lat.xm(s)] - a.x[s]) / hx + (a.y[lat.ym(s)] - a.y[s]) / hy)
        .collect()
}

/// Exterior derivative of a periodic 1-form, integrated per plaquette.
pub fn curl(lat: &TorusLattice, a: &OneForm) -> Vec<f64> {
    let (hx, hy) = (lat.hx(), lat.hy());
    (0..lat.sites())
        .map(|s| hx * (a.x[s] - a.x[lat.yp(s)]) + hy * (a.y[lat.xp(s)] - a.y[s]))
        .collect()
}

/// L²-adjoint of `curl` for the 1-form and 2-form pairings.
pub fn curl_adjoint(lat: &TorusLattice, f: &[f64]) -> OneForm {
    let (hx, hy) = (lat.hx(), lat.hy());
    let z: Vec<f64> = f.iter().enumerate().map(|(s, v)| v / lat.dvol(s)).collect();
    let mut out = OneForm::zeros(lat.sites());
    for s in 0..lat.sites() {
        out.x[s] = (z[s] - z[lat.ym(s)]) / hy;
        out.y[s] = (z[lat.xm(s)] - z[s]) / hx;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_form(n: usize, rng: &mut ChaCha8Rng) -> OneForm {
        OneForm {
            x: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn rejects_small_or_degenerate_lattices() {
        assert!(TorusLattice::unit(3, 8).is_err());
        assert!(TorusLattice::new(8, 8, 0.0, 1.0).is_err());
        assert!(TorusLattice::with_conformal(4, 4, 1.0, 1.0, vec![0.0; 16]).is_err());
    }

    #[test]
    fn unit_constant_has_unit_norm() {
        let lat = TorusLattice::unit(8, 6).unwrap();
        let one = vec![1.0; lat.sites()];
        assert!((inner_0form(&lat, &one, &one) - 1.0).abs() < 1e-14);
        assert!((lat.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn star_squares_to_minus_one_and_is_conformal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_form(16, &mut rng);
        let ss = hodge_star(&hodge_star(&f));
        assert_eq!(ss, f.scaled(-1.0));
        let flat = TorusLattice::unit(4, 4).unwrap();
        let bent = TorusLattice::with_conformal(4, 4, 1.0, 1.0, vec![2.0; 16]).unwrap();
        let g = random_form(16, &mut rng);
        let a = inner_1form(&flat, &hodge_star(&f), &g);
        let b = inner_1form(&bent, &hodge_star(&f), &g);
        assert_eq!(a, b);
    }

    #[test]
    fn star_on_10_forms_is_minus_iota() {
        use num_complex::Complex64;
        let f = Complex64::new(0.3, -1.7);
        let iota = Complex64::new(0.0, 1.0);
        let (sx, sy) = hodge_star_pair(f, iota * f);
        assert!((sx - (-iota * f)).norm() < 1e-15);
        assert!((sy - (-iota * iota * f)).norm() < 1e-15);
    }

    #[test]
    fn summation_by_parts() {
        let lat = TorusLattice::bump(8, 6, 1.3, 0.7, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g: Vec<f64> = (0..lat.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = random_form(lat.sites(), &mut rng);
        let lhs = inner_1form(&lat, &d0(&lat, &g), &a);
        let rhs = inner_0form(&lat, &g, &d0_adjoint(&lat, &a));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        let f: Vec<f64> = (0..lat.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = inner_2form(&lat, &curl(&lat, &a), &f);
        let rhs = inner_1form(&lat, &a, &curl_adjoint(&lat, &f));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        let c = codifferential_2form(&lat, &f);
        let d = curl_adjoint(&lat, &f);
        assert!((0..lat.sites()).all(|s| (c.x[s] - d.x[s]).abs() < 1e-12 && (c.y[s] - d.y[s]).abs() < 1e-12));
    }

    #[test]
    fn curl_of_exact_form_vanishes() {
        let lat = TorusLattice::unit(6, 5).unwrap();
        let g: Vec<f64> = (0..lat.sites()).map(|s| (s as f64 * 0.37).sin()).collect();
        let c = curl(&lat, &d0(&lat, &g));
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }
}
