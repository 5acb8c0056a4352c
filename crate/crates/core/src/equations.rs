//! Residual of the reduced equations, the Higgs vector field, the energy,
//! the 4D residual on a small periodic grid and the reduction check.
//!
//! With `τ = i t` and the Higgs encoding `ψ = ι φ̄` the three components at
//! a site are
//!
//! ```text
//! r1 = ε Φ_p/(h² hx hy) − μ₁(u) + t
//! r2 = D_x u − I₁ D_y u − X_ψ(u)
//! r3 = ε ∂̄ψ/h² − μ_c(u)
//! ```
//!
//! `r1` is the coefficient of `i`, `r2` the `dx`-coefficient of a (1,0)-form.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{curvature, dbar_scalar, pairwise_sum, transported, LinkPhases, TorusLattice};
use crate::quaternion::{complex_structure, moment_map, Quaternion, Target};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Values of the section: `(r1, r2, r3)`, also the codomain of `D_q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cotriple {
    pub r1: Vec<f64>,
    pub r2: Vec<Quaternion>,
    pub r3: Vec<Complex64>,
}

pub type ResidualTriple = Cotriple;

impl Cotriple {
    pub fn zeros(sites: usize, n: usize) -> Self {
        Cotriple {
            r1: vec![0.0; sites],
            r2: vec![Quaternion::ZERO; sites * n],
            r3: vec![Complex64::new(0.0, 0.0); sites],
        }
    }

    pub fn axpy(&mut self, a: f64, o: &Cotriple) {
        for (p, q) in self.r1.iter_mut().zip(&o.r1) {
            *p += a * q;
        }
        for (p, q) in self.r2.iter_mut().zip(&o.r2) {
            *p += q.scale(a);
        }
        for (p, q) in self.r3.iter_mut().zip(&o.r3) {
            *p += q * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.r1.iter_mut().for_each(|v| *v *= a);
        self.r2.iter_mut().for_each(|v| *v = v.scale(a));
        self.r3.iter_mut().for_each(|v| *v *= a);
    }

    /// Per-slot weighted inner products `(⟨r1⟩, ⟨r2⟩, ⟨r3⟩)`: `r1, r3`
    /// against `dvol`, `r2` against the coordinate cell.
    pub fn slot_dots(&self, lat: &TorusLattice, o: &Cotriple) -> [f64; 3] {
        let n = self.r2.len() / lat.sites();
        let mut t1 = Vec::with_capacity(lat.sites());
        let mut t2 = Vec::with_capacity(lat.sites());
        let mut t3 = Vec::with_capacity(lat.sites());
        for s in 0..lat.sites() {
            let dv = lat.dvol(s);
            t1.push(self.r1[s] * o.r1[s] * dv);
            let g: f64 = (0..n).map(|k| self.r2[s * n + k].dot(o.r2[s * n + k])).sum();
            t2.push(g * lat.cell());
            t3.push((self.r3[s].conj() * o.r3[s]).re * dv);
        }
        [pairwise_sum(&t1), pairwise_sum(&t2), pairwise_sum(&t3)]
    }

    pub fn dot(&self, lat: &TorusLattice, o: &Cotriple) -> f64 {
        self.slot_dots(lat, o).iter().sum()
    }

    pub fn norms(&self, lat: &TorusLattice) -> [f64; 3] {
        let d = self.slot_dots(lat, self);
        [d[0].sqrt(), d[1].sqrt(), d[2].sqrt()]
    }

    pub fn norm(&self, lat: &TorusLattice) -> f64 {
        self.dot(lat, self).sqrt()
    }
}

/// `K u = (i w_a u_a)` at one site.
#[inline]
pub fn infinitesimal_u1(weights: &[i32], u: &[Quaternion], out: &mut [Quaternion]) {
    for k in 0..u.len() {
        out[k] = u[k].mul_i_left().scale(weights[k] as f64);
    }
}

/// `X_c(u) = Re c·I₂K u + Im c·I₃K u` at one site, for the complex Lie
/// value `c` (the `ψ` of a Higgs field).
#[inline]
pub fn higgs_vector_field_site(weights: &[i32], c: Complex64, u: &[Quaternion], out: &mut [Quaternion]) {
    for k in 0..u.len() {
        let l = u[k].mul_i_left().scale(weights[k] as f64);
        out[k] = complex_structure(2, l).scale(c.re) + complex_structure(3, l).scale(c.im);
    }
}

/// `X_Φ(u)` on the whole lattice.
pub fn higgs_vector_field(q: &Configuration) -> Vec<Quaternion> {
    let n = q.n();
    let mut out = vec![Quaternion::ZERO; q.u.values.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(s, o)| {
        higgs_vector_field_site(&q.target.weights, q.phi.psi(s), q.u.at(s), o);
    });
    out
}

/// `μ_c = μ₂ + ι μ₃`.
#[inline]
pub fn moment_c(weights: &[i32], u: &[Quaternion]) -> Complex64 {
    let m = moment_map(weights, u);
    Complex64::new(m.y, m.z)
}

/// `[Φ ∧ Φ*]` for the abelian structure group: identically zero.
pub fn higgs_bracket(lat: &TorusLattice) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); lat.sites()]
}

/// Transported neighbours `V_x(s), V_y(s)` of every spinor component.
pub fn transports(q: &Configuration, ph: &LinkPhases) -> (Vec<Quaternion>, Vec<Quaternion>) {
    let n = q.n();
    let lat = &q.lattice;
    let mut vx = vec![Quaternion::ZERO; q.u.values.len()];
    let mut vy = vec![Quaternion::ZERO; q.u.values.len()];
    vx.par_chunks_mut(n).zip(vy.par_chunks_mut(n)).enumerate().for_each(|(s, (ox, oy))| {
        for k in 0..n {
            let (a, b) = transported(lat, ph, &q.target.weights, &q.u.values, s, k);
            ox[k] = a;
            oy[k] = b;
        }
    });
    (vx, vy)
}

/// The section `𝓕(q)`.
pub fn residual_2d(q: &Configuration) -> Cotriple {
    let lat = &q.lattice;
    let n = q.n();
    let w = &q.target.weights;
    let ph = q.a.link_phases(lat);
    let (vx, vy) = transports(q, &ph);
    let flux = curvature(lat, &q.a);
    let psi: Vec<Complex64> = (0..lat.sites()).map(|s| q.phi.psi(s)).collect();
    let dpsi = dbar_scalar(lat, &psi);
    let (hx, hy) = (lat.hx(), lat.hy());
    let mut out = Cotriple::zeros(lat.sites(), n);
    out.r1.par_iter_mut().enumerate().for_each(|(s, r)| {
        let m = moment_map(w, q.u.at(s));
        *r = q.epsilon * flux[s] / lat.dvol(s) - m.x + q.tau;
    });
    out.r3.par_iter_mut().enumerate().for_each(|(s, r)| {
        let h2 = lat.conformal[s] * lat.conformal[s];
        *r = dpsi[s] * (q.epsilon / h2) - moment_c(w, q.u.at(s));
    });
    out.r2.par_chunks_mut(n).enumerate().for_each(|(s, r)| {
        let mut x = vec![Quaternion::ZERO; n];
        higgs_vector_field_site(w, psi[s], q.u.at(s), &mut x);
        for k in 0..n {
            let i = s * n + k;
            let u = q.u.values[i];
            let dx = (vx[i] - u).scale(1.0 / hx);
            let dy = (vy[i] - u).scale(1.0 / hy);
            r[k] = dx - complex_structure(1, dy) - x[k];
        }
    });
    out
}

/// `½‖𝓕(q)‖²`.
pub fn energy(q: &Configuration) -> f64 {
    let r = residual_2d(q);
    0.5 * r.dot(&q.lattice, &r)
}

/// Periodic 4D grid with spacings `h_μ`; directions 0 and 1 are the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid4 {
    pub n: [usize; 4],
    pub h: [f64; 4],
}

impl Grid4 {
    pub fn sites(&self) -> usize {
        self.n.iter().product()
    }
    pub fn index(&self, c: [usize; 4]) -> usize {
        ((c[3] * self.n[2] + c[2]) * self.n[1] + c[1]) * self.n[0] + c[0]
    }
    pub fn coords(&self, mut s: usize) -> [usize; 4] {
        let mut c = [0; 4];
        for (m, cm) in c.iter_mut().enumerate() {
            *cm = s % self.n[m];
            s /= self.n[m];
        }
        c
    }
    pub fn step(&self, s: usize, mu: usize) -> usize {
        let mut c = self.coords(s);
        c[mu] = (c[mu] + 1) % self.n[mu];
        self.index(c)
    }
}

/// Lie-valued connection `a_μ = i A_μ` and spinor on a [`Grid4`].
#[derive(Clone, Debug, PartialEq)]
pub struct Fields4 {
    pub grid: Grid4,
    pub target: Target,
    pub a: Vec<[f64; 4]>,
    pub u: Vec<Quaternion>,
}

/// Defects of the 4D equations at every site: the three self-dual
/// curvature combinations minus `μ`, and the Dirac operator
/// `∇₀u − Σ I_l ∇_l u`. The surface directions use link transport, the two
/// fibre directions `∂_μ + K_{a_μ}`.
pub fn residual_4d(f: &Fields4) -> (Vec<[f64; 3]>, Vec<Quaternion>) {
    let g = &f.grid;
    let n = f.target.n();
    let w = &f.target.weights;
    let mut curv = vec![[0.0; 3]; g.sites()];
    let mut dirac = vec![Quaternion::ZERO; g.sites() * n];
    for s in 0..g.sites() {
        let d = |mu: usize, nu: usize| (f.a[g.step(s, mu)][nu] - f.a[s][nu]) / g.h[mu];
        let fmn = |mu: usize, nu: usize| d(mu, nu) - d(nu, mu);
        let m = moment_map(w, &f.u[s * n..(s + 1) * n]);
        curv[s] = [
            fmn(0, 1) + fmn(2, 3) - m.x,
            fmn(0, 2) + fmn(3, 1) - m.y,
            fmn(0, 3) + fmn(1, 2) - m.z,
        ];
        for k in 0..n {
            let wk = w[k] as f64;
            let u = f.u[s * n + k];
            let mut nabla = [Quaternion::ZERO; 4];
            for (mu, nb) in nabla.iter_mut().enumerate() {
                let next = f.u[g.step(s, mu) * n + k];
                *nb = if mu < 2 {
                    (next.rotate_left(wk * g.h[mu] * f.a[s][mu]) - u).scale(1.0 / g.h[mu])
                } else {
                    (next - u).scale(1.0 / g.h[mu]) + u.mul_i_left().scale(wk * f.a[s][mu])
                };
            }
            dirac[s * n + k] = nabla[0]
                - complex_structure(1, nabla[1])
                - complex_structure(2, nabla[2])
                - complex_structure(3, nabla[3]);
        }
    }
    (curv, dirac)
}

/// Lift of a `d = 0` configuration on a flat lattice to `N0 × N1 × m × m`,
/// constant in the fibre directions, with `a₂ = i Re ψ`, `a₃ = i Im ψ`.
pub fn lift_to_4d(q: &Configuration, m: usize) -> Result<Fields4> {
    let lat = &q.lattice;
    if q.degree() != 0 {
        return Err(Error::NontrivialDegree(q.degree()));
    }
    if !lat.is_flat() {
        return Err(Error::NonFlatMetric);
    }
    let grid = Grid4 { n: [lat.nx, lat.ny, m, m], h: [lat.hx(), lat.hy(), lat.hx(), lat.hy()] };
    let n = q.n();
    let mut a = vec![[0.0; 4]; grid.sites()];
    let mut u = vec![Quaternion::ZERO; grid.sites() * n];
    for s4 in 0..grid.sites() {
        let c = grid.coords(s4);
        let s = lat.site(c[0], c[1]);
        let psi = q.phi.psi(s);
        a[s4] = [q.a.total_x(lat, s), q.a.total_y(lat, s), psi.re, psi.im];
        u[s4 * n..(s4 + 1) * n].copy_from_slice(q.u.at(s));
    }
    Ok(Fields4 { grid, target: q.target.clone(), a, u })
}

/// Maximum over sites of the difference between the 4D residual of the
/// lifted configuration and the 2D residual at `ε = 1, τ = 0`.
pub fn reduction_consistency(q: &Configuration) -> Result<f64> {
    let f = lift_to_4d(q, 2)?;
    let mut q1 = q.clone();
    q1.epsilon = 1.0;
    q1.tau = 0.0;
    let r = residual_2d(&q1);
    let (curv, dirac) = residual_4d(&f);
    let n = q.n();
    let lat = &q.lattice;
    let mut defect: f64 = 0.0;
    for s4 in 0..f.grid.sites() {
        let c = f.grid.coords(s4);
        let s = lat.site(c[0], c[1]);
        let e = [r.r1[s], r.r3[s].re, r.r3[s].im];
        for l in 0..3 {
            defect = defect.max((curv[s4][l] - e[l]).abs());
        }
        for k in 0..n {
            defect = defect.max((dirac[s4 * n + k] - r.r2[s * n + k]).norm());
        }
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GaugeTransform;
    use crate::quaternion::metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat(n: usize) -> TorusLattice {
        TorusLattice::unit(n, n).unwrap()
    }

    #[test]
    fn zero_configuration_solves() {
        let q = Configuration::zero(flat(6), Target::uniform(1), 0);
        let r = residual_2d(&q);
        assert_eq!(r.norm(&q.lattice), 0.0);
    }

    #[test]
    fn flat_unit_spinor() {
        let mut q = Configuration::zero(flat(8), Target::uniform(1), 0);
        q.u.values.iter_mut().for_each(|v| *v = Quaternion::ONE);
        let r = residual_2d(&q);
        assert!(r.r1.iter().all(|v| (v + 0.5).abs() < 1e-15));
        assert!(r.r2.iter().all(|v| v.norm() < 1e-15));
        assert!(r.r3.iter().all(|v| v.norm() < 1e-15));
        assert!((energy(&q) - 0.125).abs() < 1e-14);
    }

    #[test]
    fn higgs_field_example_and_dual() {
        let w = [1];
        let mut out = [Quaternion::ZERO];
        higgs_vector_field_site(&w, Complex64::new(1.0, 0.0), &[Quaternion::ONE], &mut out);
        assert!((out[0] + Quaternion::K).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let w = [1, -2];
        for _ in 0..100 {
            let mut rq = || Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let u = [rq(), rq()];
            let xi = [rq(), rq()];
            let c = Complex64::new(0.3, -0.8);
            let mut x = [Quaternion::ZERO; 2];
            higgs_vector_field_site(&w, c, &u, &mut x);
            let dm = crate::quaternion::moment_map_differential(&w, &u, &xi);
            let rhs = c.re * dm.y + c.im * dm.z;
            assert!((metric(&x, &xi) - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn bracket_vanishes() {
        assert!(higgs_bracket(&flat(4)).iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn gauge_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let lat = TorusLattice::bump(8, 8, 1.0, 1.0, 0.3).unwrap();
        let mut q = Configuration::random(lat, Target::new(vec![1, 2]), 1, 0.5, &mut rng);
        q.tau = 3.0;
        let e0 = energy(&q);
        let r0 = residual_2d(&q);
        for _ in 0..5 {
            let g = GaugeTransform::random(&q.lattice, &mut rng, 3.0);
            let gq = q.gauge_transform(&g);
            assert!((energy(&gq) - e0).abs() < 1e-12 * e0.max(1.0));
            let r = residual_2d(&gq);
            for s in 0..q.lattice.sites() {
                assert!((r.r1[s] - r0.r1[s]).abs() < 1e-11);
                assert!((r.r3[s] - r0.r3[s]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn epsilon_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut q = Configuration::random(flat(6), Target::uniform(1), 1, 0.5, &mut rng);
        let at = |q: &mut Configuration, e: f64| {
            q.epsilon = e;
            residual_2d(q)
        };
        let (r0, r5, r1) = (at(&mut q, 0.0), at(&mut q, 0.5), at(&mut q, 1.0));
        for s in 0..q.lattice.sites() {
            assert!((r5.r1[s] - 0.5 * (r0.r1[s] + r1.r1[s])).abs() < 1e-12);
            assert!((r5.r3[s] - 0.5 * (r0.r3[s] + r1.r3[s])).norm() < 1e-12);
            assert_eq!(r0.r2[s], r1.r2[s]);
        }
    }

    #[test]
    fn r2_is_conformally_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let q = Configuration::random(flat(6), Target::uniform(1), 1, 0.5, &mut rng);
        let mut q2 = q.clone();
        q2.lattice = TorusLattice::bump(6, 6, 1.0, 1.0, 0.4).unwrap();
        assert_eq!(residual_2d(&q).r2, residual_2d(&q2).r2);
    }

    #[test]
    fn vortex_sector_has_no_r3() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut q = Configuration::random(flat(6), Target::uniform(1), 1, 0.5, &mut rng);
        q.phi = crate::lattice::HiggsField::zeros(&q.lattice);
        for v in q.u.values.iter_mut() {
            v.y = 0.0;
            v.z = 0.0;
        }
        assert!(residual_2d(&q).r3.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn four_d_examples() {
        let grid = Grid4 { n: [4, 4, 2, 2], h: [0.25; 4] };
        let t = Target::uniform(1);
        let f = Fields4 { grid: grid.clone(), target: t.clone(), a: vec![[0.0; 4]; 64], u: vec![Quaternion::ONE; 64] };
        let (c, d) = residual_4d(&f);
        assert!(c.iter().all(|v| (v[0] + 0.5).abs() < 1e-15 && v[1] == 0.0 && v[2] == 0.0));
        assert!(d.iter().all(|q| q.norm() == 0.0));
        // linear u = x₀ + x₁i + x₂j + x₃k away from the wrap
        let grid = Grid4 { n: [6, 6, 6, 6], h: [0.1; 4] };
        let u: Vec<Quaternion> = (0..grid.sites())
            .map(|s| {
                let c = grid.coords(s);
                Quaternion::new(c[0] as f64, c[1] as f64, c[2] as f64, c[3] as f64).scale(0.1)
            })
            .collect();
        let f = Fields4 { grid: grid.clone(), target: t, a: vec![[0.0; 4]; grid.sites()], u };
        let (_, d) = residual_4d(&f);
        let s = grid.index([2, 3, 1, 4]);
        assert!((d[s] - Quaternion::new(-2.0, 0.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reduction_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let q = Configuration::zero(flat(6), Target::uniform(1), 0);
        assert_eq!(reduction_consistency(&q).unwrap(), 0.0);
        let q = Configuration::random(flat(8), Target::new(vec![1, -1]), 0, 1.0, &mut rng);
        assert!(reduction_consistency(&q).unwrap() <= 1e-10);
        let q = Configuration::random(flat(8), Target::uniform(1), 1, 1.0, &mut rng);
        assert!(matches!(reduction_consistency(&q), Err(Error::NontrivialDegree(1))));
    }
}
