//! Linearization `D_q` of the section, the infinitesimal gauge action `d₁`,
//! and their adjoints for the L² pairings.
//!
//! A tangent vector is `(α, ξ, η)`: `α` varies the connection coefficient,
//! `ξ` the spinor and `η = (ηx, ηy)` the Higgs coefficients `(Φx, Φy)`, so
//! that `δψ = (ηx + ι ηy)/2`. The gauge action is `a ↦ a − g⁻¹dg`, hence
//! `d₁γ = (−dγ, γ·K u, 0)`.

mod index;
mod regular;

pub use index::*;
pub use regular::*;

use crate::configuration::Configuration;
use crate::equations::{higgs_vector_field_site, transports, Cotriple};
use crate::lattice::{d0, d0_adjoint, pairwise_sum, LinkPhases, OneForm, TorusLattice};
use crate::quaternion::{complex_structure, moment_map_differential, Quaternion};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentTriple {
    pub alpha: OneForm,
    pub xi: Vec<Quaternion>,
    pub eta: OneForm,
}

pub type CotripleValue = Cotriple;

impl TangentTriple {
    pub fn zeros(sites: usize, n: usize) -> Self {
        TangentTriple { alpha: OneForm::zeros(sites), xi: vec![Quaternion::ZERO; sites * n], eta: OneForm::zeros(sites) }
    }

    pub fn random<R: Rng>(sites: usize, n: usize, rng: &mut R) -> Self {
        let mut r = || rng.random_range(-1.0..1.0);
        let mut t = Self::zeros(sites, n);
        for s in 0..sites {
            t.alpha.x[s] = r();
            t.alpha.y[s] = r();
            t.eta.x[s] = r();
            t.eta.y[s] = r();
        }
        for v in t.xi.iter_mut() {
            *v = Quaternion::new(r(), r(), r(), r());
        }
        t
    }

    pub fn axpy(&mut self, a: f64, o: &TangentTriple) {
        self.alpha.axpy(a, &o.alpha);
        self.eta.axpy(a, &o.eta);
        for (p, q) in self.xi.iter_mut().zip(&o.xi) {
            *p += q.scale(a);
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.alpha = self.alpha.scaled(a);
        self.eta = self.eta.scaled(a);
        self.xi.iter_mut().for_each(|v| *v = v.scale(a));
    }

    /// `(⟨α,α'⟩, ⟨ξ,ξ'⟩, ⟨η,η'⟩)` with `∫*α∧α'`, `∫g(ξ,ξ')dvol`, `∫*η∧η'`.
    pub fn slot_dots(&self, lat: &TorusLattice, o: &TangentTriple) -> [f64; 3] {
        let n = self.xi.len() / lat.sites();
        let c = lat.cell();
        let mut ta = Vec::with_capacity(lat.sites());
        let mut tx = Vec::with_capacity(lat.sites());
        let mut te = Vec::with_capacity(lat.sites());
        for s in 0..lat.sites() {
            ta.push((self.alpha.x[s] * o.alpha.x[s] + self.alpha.y[s] * o.alpha.y[s]) * c);
            te.push((self.eta.x[s] * o.eta.x[s] + self.eta.y[s] * o.eta.y[s]) * c);
            let g: f64 = (0..n).map(|k| self.xi[s * n + k].dot(o.xi[s * n + k])).sum();
            tx.push(g * lat.dvol(s));
        }
        [pairwise_sum(&ta), pairwise_sum(&tx), pairwise_sum(&te)]
    }

    pub fn dot(&self, lat: &TorusLattice, o: &TangentTriple) -> f64 {
        self.slot_dots(lat, o).iter().sum()
    }

    pub fn norm(&self, lat: &TorusLattice) -> f64 {
        self.dot(lat, self).sqrt()
    }

    /// Number of real coordinates.
    pub fn real_dim(sites: usize, n: usize) -> usize {
        4 * sites + 4 * n * sites
    }

    /// Orthonormal coordinates: entries scaled by the square root of their
    /// weight so that the Euclidean product equals [`TangentTriple::dot`].
    pub fn to_coords(&self, lat: &TorusLattice) -> Vec<f64> {
        let n = self.xi.len() / lat.sites();
        let sc = lat.cell().sqrt();
        let mut v = Vec::with_capacity(Self::real_dim(lat.sites(), n));
        v.extend(self.alpha.x.iter().map(|a| a * sc));
        v.extend(self.alpha.y.iter().map(|a| a * sc));
        for s in 0..lat.sites() {
            let sv = lat.dvol(s).sqrt();
            for k in 0..n {
                v.extend(self.xi[s * n + k].to_array().iter().map(|a| a * sv));
            }
        }
        v.extend(self.eta.x.iter().map(|a| a * sc));
        v.extend(self.eta.y.iter().map(|a| a * sc));
        v
    }

    pub fn from_coords(lat: &TorusLattice, n: usize, v: &[f64]) -> Self {
        let m = lat.sites();
        let sc = 1.0 / lat.cell().sqrt();
        let mut t = Self::zeros(m, n);
        for s in 0..m {
            t.alpha.x[s] = v[s] * sc;
            t.alpha.y[s] = v[m + s] * sc;
            let base = 2 * m + 4 * n * s;
            let sv = 1.0 / lat.dvol(s).sqrt();
            for k in 0..n {
                let o = base + 4 * k;
                t.xi[s * n + k] = Quaternion::new(v[o], v[o + 1], v[o + 2], v[o + 3]).scale(sv);
            }
            let e = 2 * m + 4 * n * m;
            t.eta.x[s] = v[e + s] * sc;
            t.eta.y[s] = v[e + m + s] * sc;
        }
        t
    }
}

impl Cotriple {
    pub fn real_dim(sites: usize, n: usize) -> usize {
        3 * sites + 4 * n * sites
    }

    /// Orthonormal coordinates, as for [`TangentTriple::to_coords`].
    pub fn to_coords(&self, lat: &TorusLattice) -> Vec<f64> {
        let n = self.r2.len() / lat.sites();
        let sc = lat.cell().sqrt();
        let mut v = Vec::with_capacity(Self::real_dim(lat.sites(), n));
        v.extend(self.r1.iter().enumerate().map(|(s, a)| a * lat.dvol(s).sqrt()));
        for q in &self.r2 {
            v.extend(q.to_array().iter().map(|a| a * sc));
        }
        for (s, c) in self.r3.iter().enumerate() {
            let sv = lat.dvol(s).sqrt();
            v.push(c.re * sv);
            v.push(c.im * sv);
        }
        v
    }

    pub fn from_coords(lat: &TorusLattice, n: usize, v: &[f64]) -> Self {
        let m = lat.sites();
        let sc = 1.0 / lat.cell().sqrt();
        let mut c = Cotriple::zeros(m, n);
        for s in 0..m {
            let sv = 1.0 / lat.dvol(s).sqrt();
            c.r1[s] = v[s] * sv;
            for k in 0..n {
                let o = m + 4 * (s * n + k);
                c.r2[s * n + k] = Quaternion::new(v[o], v[o + 1], v[o + 2], v[o + 3]).scale(sc);
            }
            let o = m + 4 * n * m + 2 * s;
            c.r3[s] = Complex64::new(v[o], v[o + 1]) * sv;
        }
        c
    }
}

/// `D_q`, `D_q*`, `d₁`, `d₁*` at a fixed configuration, with the transported
/// neighbours cached.
pub struct LinearizedOperator<'a> {
    pub q: &'a Configuration,
    ph: LinkPhases,
    /// `K V_x`, `K V_y`: infinitesimal action on the transported neighbours.
    kvx: Vec<Quaternion>,
    kvy: Vec<Quaternion>,
    /// `L = K u`.
    l: Vec<Quaternion>,
    psi: Vec<Complex64>,
}

impl<'a> LinearizedOperator<'a> {
    pub fn new(q: &'a Configuration) -> Self {
        let lat = &q.lattice;
        let ph = q.a.link_phases(lat);
        let (vx, vy) = transports(q, &ph);
        let n = q.n();
        let w = &q.target.weights;
        let k = |v: &[Quaternion]| -> Vec<Quaternion> {
            v.iter().enumerate().map(|(i, x)| x.mul_i_left().scale(w[i % n] as f64)).collect()
        };
        let kvx = k(&vx);
        let kvy = k(&vy);
        let l = k(&q.u.values);
        let psi = (0..lat.sites()).map(|s| q.phi.psi(s)).collect();
        LinearizedOperator { q, ph, kvx, kvy, l, psi }
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.q.lattice
    }

    pub fn apply(&self, x: &TangentTriple) -> Cotriple {
        let q = self.q;
        let lat = &q.lattice;
        let n = q.n();
        let w = &q.target.weights;
        let eps = q.epsilon;
        let (hx, hy) = (lat.hx(), lat.hy());
        let dpsi: Vec<Complex64> = x.eta.x.iter().zip(&x.eta.y).map(|(a, b)| Complex64::new(0.5 * a, 0.5 * b)).collect();
        let iota = Complex64::new(0.0, 1.0);
        let mut out = Cotriple::zeros(lat.sites(), n);
        out.r1.par_iter_mut().enumerate().for_each(|(s, r)| {
            let c = hx * (x.alpha.x[s] - x.alpha.x[lat.yp(s)]) + hy * (x.alpha.y[lat.xp(s)] - x.alpha.y[s]);
            let dm = moment_map_differential(w, q.u.at(s), &x.xi[s * n..(s + 1) * n]);
            *r = eps * c / lat.dvol(s) - dm.x;
        });
        out.r3.par_iter_mut().enumerate().for_each(|(s, r)| {
            let h2 = lat.conformal[s] * lat.conformal[s];
            let db = (dpsi[lat.xp(s)] - dpsi[s]) / hx + iota * (dpsi[lat.yp(s)] - dpsi[s]) / hy;
            let dm = moment_map_differential(w, q.u.at(s), &x.xi[s * n..(s + 1) * n]);
            *r = db * (eps / h2) - Complex64::new(dm.y, dm.z);
        });
        out.r2.par_chunks_mut(n).enumerate().for_each(|(s, r)| {
            let mut xa = vec![Quaternion::ZERO; n];
            let mut xb = vec![Quaternion::ZERO; n];
            higgs_vector_field_site(w, self.psi[s], &x.xi[s * n..(s + 1) * n], &mut xa);
            higgs_vector_field_site(w, dpsi[s], q.u.at(s), &mut xb);
            for k in 0..n {
                let i = s * n + k;
                let wk = w[k] as f64;
                let tx = x.xi[lat.xp(s) * n + k].rotate_left(wk * self.ph.x[s]);
                let ty = x.xi[lat.yp(s) * n + k].rotate_left(wk * self.ph.y[s]);
                let dx = (tx - x.xi[i]).scale(1.0 / hx) + self.kvx[i].scale(x.alpha.x[s]);
                let dy = (ty - x.xi[i]).scale(1.0 / hy) + self.kvy[i].scale(x.alpha.y[s]);
                r[k] = dx - complex_structure(1, dy) - xa[k] - xb[k];
            }
        });
        out
    }

    pub fn adjoint(&self, y: &Cotriple) -> TangentTriple {
        let q = self.q;
        let lat = &q.lattice;
        let n = q.n();
        let w = &q.target.weights;
        let eps = q.epsilon;
        let (hx, hy) = (lat.hx(), lat.hy());
        let iota = Complex64::new(0.0, 1.0);
        let m = lat.sites();
        let mut out = TangentTriple::zeros(m, n);
        let i1y2: Vec<Quaternion> = y.r2.par_iter().map(|v| complex_structure(1, *v)).collect();
        let alpha: Vec<(f64, f64)> = (0..m)
            .into_par_iter()
            .map(|s| {
                let z = |t: usize| eps * y.r1[t];
                let mut ax = (z(s) - z(lat.ym(s))) / hy;
                let mut ay = (z(lat.xm(s)) - z(s)) / hx;
                for k in 0..n {
                    let i = s * n + k;
                    ax += self.kvx[i].dot(y.r2[i]);
                    ay += self.kvy[i].dot(i1y2[i]);
                }
                (ax, ay)
            })
            .collect();
        let eta: Vec<(f64, f64)> = (0..m)
            .into_par_iter()
            .map(|s| {
                let z = |t: usize| y.r3[t] * eps;
                let wv = (z(lat.xm(s)) - z(s)) / hx - iota * (z(lat.ym(s)) - z(s)) / hy;
                let (mut ex, mut ey) = (0.5 * wv.re, 0.5 * wv.im);
                for k in 0..n {
                    let i = s * n + k;
                    ex -= 0.5 * complex_structure(2, self.l[i]).dot(y.r2[i]);
                    ey -= 0.5 * complex_structure(3, self.l[i]).dot(y.r2[i]);
                }
                (ex, ey)
            })
            .collect();
        for s in 0..m {
            out.alpha.x[s] = alpha[s].0;
            out.alpha.y[s] = alpha[s].1;
            out.eta.x[s] = eta[s].0;
            out.eta.y[s] = eta[s].1;
        }
        out.xi.par_chunks_mut(n).enumerate().for_each(|(s, o)| {
            let h2 = lat.conformal[s] * lat.conformal[s];
            let (sxm, sym) = (lat.xm(s), lat.ym(s));
            let mut x3 = vec![Quaternion::ZERO; n];
            let mut xp = vec![Quaternion::ZERO; n];
            higgs_vector_field_site(w, y.r3[s], q.u.at(s), &mut x3);
            higgs_vector_field_site(w, self.psi[s], &y.r2[s * n..(s + 1) * n], &mut xp);
            for k in 0..n {
                let i = s * n + k;
                let wk = w[k] as f64;
                let from_x = y.r2[sxm * n + k].rotate_left(-wk * self.ph.x[sxm]).scale(1.0 / hx);
                let from_y = i1y2[sym * n + k].rotate_left(-wk * self.ph.y[sym]).scale(1.0 / hy);
                let local = y.r2[i].scale(1.0 / hx) + i1y2[i].scale(1.0 / hy);
                let transport = (from_x + from_y - local - xp[k]).scale(1.0 / h2);
                o[k] = transport - complex_structure(1, self.l[i]).scale(y.r1[s]) - x3[k];
            }
        });
        out
    }

    /// `d₁γ = (−dγ, γ K u, 0)`.
    pub fn d1(&self, gamma: &[f64]) -> TangentTriple {
        let lat = self.lattice();
        let n = self.q.n();
        let mut t = TangentTriple::zeros(lat.sites(), n);
        t.alpha = d0(lat, gamma).scaled(-1.0);
        for (i, v) in t.xi.iter_mut().enumerate() {
            *v = self.l[i].scale(gamma[i / n]);
        }
        t
    }

    /// `d₁*X = −d*α + g(K u, ξ)`.
    pub fn d1_adjoint(&self, x: &TangentTriple) -> Vec<f64> {
        let lat = self.lattice();
        let n = self.q.n();
        let mut out: Vec<f64> = d0_adjoint(lat, &x.alpha).iter().map(|v| -v).collect();
        for (s, o) in out.iter_mut().enumerate() {
            for k in 0..n {
                *o += self.l[s * n + k].dot(x.xi[s * n + k]);
            }
        }
        out
    }
}

pub fn apply_dq(q: &Configuration, x: &TangentTriple) -> Cotriple {
    LinearizedOperator::new(q).apply(x)
}

pub fn apply_dq_adjoint(q: &Configuration, y: &Cotriple) -> TangentTriple {
    LinearizedOperator::new(q).adjoint(y)
}

pub fn gauge_infinitesimal(q: &Configuration, gamma: &[f64]) -> TangentTriple {
    LinearizedOperator::new(q).d1(gamma)
}

/// `q + s X`.
pub fn displace(q: &Configuration, x: &TangentTriple, s: f64) -> Configuration {
    let mut out = q.clone();
    out.a.fluct.axpy(s, &x.alpha);
    for (u, d) in out.u.values.iter_mut().zip(&x.xi) {
        *u += d.scale(s);
    }
    for (p, (ex, ey)) in out.phi.phi.iter_mut().zip(x.eta.x.iter().zip(&x.eta.y)) {
        // δψ = (ηx + ι ηy)/2 and φ = ι ψ̄
        *p += Complex64::new(0.5 * ey, 0.5 * ex) * s;
    }
    out
}
