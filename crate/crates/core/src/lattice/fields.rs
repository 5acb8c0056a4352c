//! Connection, spinor and Higgs fields on the torus, the degree-d twist and
//! gauge transformations.
//!
//! A connection `a = iA` is stored as the fixed background
//! `A_x = f·y, A_y = 0` of constant curvature plus a periodic fluctuation.
//! Sections of the degree-d bundle are stored on the fundamental domain; a
//! y-link leaving the top row carries the transition phase
//! `χ(ix) = −2πd·ix/Nx`. Parallel transport along a link is the compact
//! phase `e^{i w h A}`, which makes every difference operator below exactly
//! gauge covariant.

use super::{OneForm, TorusLattice};
use crate::error::{Error, Result};
use crate::quaternion::{complex_structure, Quaternion, Target};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionField {
    pub degree: i32,
    pub fluct: OneForm,
}

/// Link phases (unit charge) of a connection, transition included.
#[derive(Clone, Debug)]
pub struct LinkPhases {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Transition phase across the y-wrap at column `ix`.
pub fn cocycle_phase(lat: &TorusLattice, degree: i32, ix: usize) -> f64 {
    -2.0 * PI * degree as f64 * ix as f64 / lat.nx as f64
}

impl ConnectionField {
    pub fn background(lat: &TorusLattice, degree: i32) -> Self {
        ConnectionField { degree, fluct: OneForm::zeros(lat.sites()) }
    }

    /// Slope `f` of the background `A_x = f·iy`.
    pub fn background_slope(lat: &TorusLattice, degree: i32) -> f64 {
        2.0 * PI * degree as f64 / (lat.hx() * (lat.nx * lat.ny) as f64)
    }

    /// Background flux through one plaquette, `−2πd/(Nx·Ny)`.
    pub fn background_plaquette(lat: &TorusLattice, degree: i32) -> f64 {
        -2.0 * PI * degree as f64 / (lat.nx * lat.ny) as f64
    }

    pub fn total_x(&self, lat: &TorusLattice, s: usize) -> f64 {
        let iy = s / lat.nx;
        Self::background_slope(lat, self.degree) * iy as f64 + self.fluct.x[s]
    }

    pub fn total_y(&self, _lat: &TorusLattice, s: usize) -> f64 {
        self.fluct.y[s]
    }

    pub fn link_phases(&self, lat: &TorusLattice) -> LinkPhases {
        let n = lat.sites();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for s in 0..n {
            x[s] = lat.hx() * self.total_x(lat, s);
            y[s] = lat.hy() * self.total_y(lat, s);
            if lat.wraps_y(s) {
                y[s] += cocycle_phase(lat, self.degree, s % lat.nx);
            }
        }
        LinkPhases { x, y }
    }
}

/// Curvature `F = iΦ`, returned as the plaquette-integrated coefficient `Φ`.
pub fn curvature(lat: &TorusLattice, a: &ConnectionField) -> Vec<f64> {
    let bg = ConnectionField::background_plaquette(lat, a.degree);
    let mut c = super::curl(lat, &a.fluct);
    for v in c.iter_mut() {
        *v += bg;
    }
    c
}

/// `Σ Φ`, equal to `−2πd`.
pub fn total_flux(lat: &TorusLattice, a: &ConnectionField) -> f64 {
    super::pairwise_sum(&curvature(lat, a))
}

/// `(i/2π)∫F`.
pub fn chern_number(lat: &TorusLattice, a: &ConnectionField) -> f64 {
    -total_flux(lat, a) / (2.0 * PI)
}

/// Site field with values in ℍⁿ, twisted across the y-wrap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinorField {
    pub n: usize,
    pub values: Vec<Quaternion>,
}

impl SpinorField {
    pub fn zeros(lat: &TorusLattice, n: usize) -> Self {
        SpinorField { n, values: vec![Quaternion::ZERO; lat.sites() * n] }
    }
    pub fn constant(lat: &TorusLattice, h: &[Quaternion]) -> Self {
        let mut values = Vec::with_capacity(lat.sites() * h.len());
        for _ in 0..lat.sites() {
            values.extend_from_slice(h);
        }
        SpinorField { n: h.len(), values }
    }
    pub fn at(&self, s: usize) -> &[Quaternion] {
        &self.values[s * self.n..(s + 1) * self.n]
    }
}

/// Neighbour values transported back to `s`: `e^{i w hA_x} u(s+x̂)` and the
/// analogous y-transport including the transition phase.
#[inline]
pub fn transported(
    lat: &TorusLattice,
    ph: &LinkPhases,
    weights: &[i32],
    u: &[Quaternion],
    s: usize,
    a: usize,
) -> (Quaternion, Quaternion) {
    let n = weights.len();
    let w = weights[a] as f64;
    let vx = u[lat.xp(s) * n + a].rotate_left(w * ph.x[s]);
    let vy = u[lat.yp(s) * n + a].rotate_left(w * ph.y[s]);
    (vx, vy)
}

/// Covariant forward differences `(D_x u, D_y u)`.
pub fn covariant_derivative(
    lat: &TorusLattice,
    a: &ConnectionField,
    target: &Target,
    u: &SpinorField,
) -> Result<(Vec<Quaternion>, Vec<Quaternion>)> {
    check_spinor(lat, target, u)?;
    let ph = a.link_phases(lat);
    let n = target.n();
    let (hx, hy) = (lat.hx(), lat.hy());
    let mut dx = vec![Quaternion::ZERO; u.values.len()];
    let mut dy = vec![Quaternion::ZERO; u.values.len()];
    for s in 0..lat.sites() {
        for k in 0..n {
            let (vx, vy) = transported(lat, &ph, &target.weights, &u.values, s, k);
            let here = u.values[s * n + k];
            dx[s * n + k] = (vx - here).scale(1.0 / hx);
            dy[s * n + k] = (vy - here).scale(1.0 / hy);
        }
    }
    Ok((dx, dy))
}

/// L²-adjoint of [`covariant_derivative`] for the 1-form pairing on the
/// left and the `dvol`-weighted pairing on the right.
pub fn covariant_derivative_adjoint(
    lat: &TorusLattice,
    a: &ConnectionField,
    target: &Target,
    vx: &[Quaternion],
    vy: &[Quaternion],
) -> Vec<Quaternion> {
    let ph = a.link_phases(lat);
    let n = target.n();
    let (hx, hy) = (lat.hx(), lat.hy());
    let mut out = vec![Quaternion::ZERO; vx.len()];
    for s in 0..lat.sites() {
        for k in 0..n {
            let w = target.weights[k] as f64;
            let i = s * n + k;
            out[lat.xp(s) * n + k] += vx[i].rotate_left(-w * ph.x[s]).scale(1.0 / hx);
            out[lat.yp(s) * n + k] += vy[i].rotate_left(-w * ph.y[s]).scale(1.0 / hy);
            out[i] -= vx[i].scale(1.0 / hx) + vy[i].scale(1.0 / hy);
        }
    }
    for s in 0..lat.sites() {
        let h2 = lat.conformal[s] * lat.conformal[s];
        for k in 0..n {
            out[s * n + k] = out[s * n + k].scale(1.0 / h2);
        }
    }
    out
}

/// `dx`-coefficient of `∂_a u`: `D_x u − I₁ D_y u`.
pub fn del_a(lat: &TorusLattice, a: &ConnectionField, target: &Target, u: &SpinorField) -> Result<Vec<Quaternion>> {
    let (dx, dy) = covariant_derivative(lat, a, target, u)?;
    Ok(dx.iter().zip(&dy).map(|(p, q)| *p - complex_structure(1, *q)).collect())
}

/// `dx`-coefficient of `∂̄_a u`: `D_x u + I₁ D_y u`.
pub fn dbar_a(lat: &TorusLattice, a: &ConnectionField, target: &Target, u: &SpinorField) -> Result<Vec<Quaternion>> {
    let (dx, dy) = covariant_derivative(lat, a, target, u)?;
    Ok(dx.iter().zip(&dy).map(|(p, q)| *p + complex_structure(1, *q)).collect())
}

/// (1,0) part `½(η − I₁∘η∘J)` of a 1-form `(vx, vy)`.
pub fn project_10(vx: Quaternion, vy: Quaternion) -> (Quaternion, Quaternion) {
    (
        (vx - complex_structure(1, vy)).scale(0.5),
        (vy + complex_structure(1, vx)).scale(0.5),
    )
}

/// (0,1) part `½(η + I₁∘η∘J)`.
pub fn project_01(vx: Quaternion, vy: Quaternion) -> (Quaternion, Quaternion) {
    (
        (vx + complex_structure(1, vy)).scale(0.5),
        (vy - complex_structure(1, vx)).scale(0.5),
    )
}

fn check_spinor(lat: &TorusLattice, target: &Target, u: &SpinorField) -> Result<()> {
    if u.n != target.n() || u.values.len() != lat.sites() * target.n() {
        return Err(Error::SizeMismatch { expected: lat.sites() * target.n(), got: u.values.len() });
    }
    Ok(())
}

/// Complex scalar `φ` per site, encoding `Φ = φ dz − φ̄ dz̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiggsField {
    pub phi: Vec<Complex64>,
}

impl HiggsField {
    pub fn zeros(lat: &TorusLattice) -> Self {
        HiggsField { phi: vec![Complex64::new(0.0, 0.0); lat.sites()] }
    }

    /// `ψ = ι φ̄`, so that `Φ = i(2 Re ψ dx + 2 Im ψ dy)`.
    #[inline]
    pub fn psi(&self, s: usize) -> Complex64 {
        let p = self.phi[s];
        Complex64::new(p.im, p.re)
    }

    pub fn from_psi(psi: &[Complex64]) -> Self {
        HiggsField { phi: psi.iter().map(|p| Complex64::new(p.im, p.re)).collect() }
    }

    /// Real coefficients `(Φx, Φy)` of `Φ = i(Φx dx + Φy dy)`.
    pub fn one_form(&self) -> OneForm {
        OneForm {
            x: self.phi.iter().map(|p| 2.0 * p.im).collect(),
            y: self.phi.iter().map(|p| 2.0 * p.re).collect(),
        }
    }

    pub fn from_one_form(f: &OneForm) -> Self {
        HiggsField { phi: f.x.iter().zip(&f.y).map(|(x, y)| Complex64::new(0.5 * y, 0.5 * x)).collect() }
    }
}

/// Periodic forward `∂̄ = ∂_x + ι∂_y` on a complex charge-0 field.
pub fn dbar_scalar(lat: &TorusLattice, f: &[Complex64]) -> Vec<Complex64> {
    let (hx, hy) = (lat.hx(), lat.hy());
    let iota = Complex64::new(0.0, 1.0);
    (0..lat.sites())
        .map(|s| (f[lat.xp(s)] - f[s]) / hx + iota * (f[lat.yp(s)] - f[s]) / hy)
        .collect()
}

/// Transpose of [`dbar_scalar`] for the unweighted pairing `Re Σ ā b`.
pub fn dbar_scalar_transpose(lat: &TorusLattice, z: &[Complex64]) -> Vec<Complex64> {
    let (hx, hy) = (lat.hx(), lat.hy());
    let iota = Complex64::new(0.0, 1.0);
    (0..lat.sites())
        .map(|s| (z[lat.xm(s)] - z[s]) / hx - iota * (z[lat.ym(s)] - z[s]) / hy)
        .collect()
}

/// `g = exp(i(θ + 2π(mx·x/Lx + my·y/Ly)))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    pub theta: Vec<f64>,
    pub winding: (i32, i32),
}

impl GaugeTransform {
    pub fn identity(lat: &TorusLattice) -> Self {
        GaugeTransform { theta: vec![0.0; lat.sites()], winding: (0, 0) }
    }
    pub fn constant(lat: &TorusLattice, theta: f64) -> Self {
        GaugeTransform { theta: vec![theta; lat.sites()], winding: (0, 0) }
    }
    pub fn winding(lat: &TorusLattice, mx: i32, my: i32) -> Self {
        GaugeTransform { theta: vec![0.0; lat.sites()], winding: (mx, my) }
    }
    pub fn random<R: Rng>(lat: &TorusLattice, rng: &mut R, amplitude: f64) -> Self {
        GaugeTransform {
            theta: (0..lat.sites()).map(|_| rng.random_range(-amplitude..amplitude)).collect(),
            winding: (rng.random_range(-2..=2), rng.random_range(-2..=2)),
        }
    }

    /// Phase at `s`.
    pub fn phase(&self, lat: &TorusLattice, s: usize) -> f64 {
        let (ix, iy) = lat.coords(s);
        self.theta[s]
            + 2.0 * PI * (self.winding.0 as f64 * ix as f64 / lat.nx as f64 + self.winding.1 as f64 * iy as f64 / lat.ny as f64)
    }

    /// Exact phase increments along the x- and y-links at `s`.
    pub fn increments(&self, lat: &TorusLattice, s: usize) -> (f64, f64) {
        let dx = self.theta[lat.xp(s)] - self.theta[s] + 2.0 * PI * self.winding.0 as f64 / lat.nx as f64;
        let dy = self.theta[lat.yp(s)] - self.theta[s] + 2.0 * PI * self.winding.1 as f64 / lat.ny as f64;
        (dx, dy)
    }

    /// `a ↦ a − g⁻¹dg`.
    pub fn act_connection(&self, lat: &TorusLattice, a: &ConnectionField) -> ConnectionField {
        let mut out = a.clone();
        for s in 0..lat.sites() {
            let (dx, dy) = self.increments(lat, s);
            out.fluct.x[s] -= dx / lat.hx();
            out.fluct.y[s] -= dy / lat.hy();
        }
        out
    }

    /// `u ↦ g·u`.
    pub fn act_spinor(&self, lat: &TorusLattice, target: &Target, u: &SpinorField) -> SpinorField {
        let n = target.n();
        let mut out = u.clone();
        for s in 0..lat.sites() {
            let th = self.phase(lat, s);
            for k in 0..n {
                out.values[s * n + k] = u.values[s * n + k].rotate_left(target.weights[k] as f64 * th);
            }
        }
        out
    }
}
