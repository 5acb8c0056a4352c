//! Vortex initial data and zero counting.

use crate::configuration::Configuration;
use crate::lattice::{curvature, ConnectionField, TorusLattice};
use crate::quaternion::{Quaternion, Target};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `(−Δ_a + sign·w·F) f` for the charge-`w` bundle, flat coordinates.
fn landau_apply(lat: &TorusLattice, a: &ConnectionField, w: i32, sign: f64, f: &[Complex64]) -> Vec<Complex64> {
    let ph = a.link_phases(lat);
    let flux = curvature(lat, a);
    let (hx2, hy2) = (lat.hx() * lat.hx(), lat.hy() * lat.hy());
    let wf = w as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    for s in 0..lat.sites() {
        let diag = 2.0 / hx2 + 2.0 / hy2 + sign * wf * flux[s] / lat.cell();
        let ux = Complex64::from_polar(1.0, wf * ph.x[s]);
        let uy = Complex64::from_polar(1.0, wf * ph.y[s]);
        let (xp, yp) = (lat.xp(s), lat.yp(s));
        out[s] += f[s] * diag - ux * f[xp] / hx2 - uy * f[yp] / hy2;
        out[xp] -= ux.conj() * f[s] / hx2;
        out[yp] -= uy.conj() * f[s] / hy2;
    }
    out
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cg_complex(apply: impl Fn(&[Complex64]) -> Vec<Complex64>, b: &[Complex64], tol: f64, max_iter: usize) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = cdot(&r, &r).re;
    let stop = tol * tol * rr;
    for _ in 0..max_iter {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / cdot(&p, &ap).re;
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = cdot(&r, &r).re;
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
    }
    x
}

/// A section in the lowest eigenspace of `−Δ_a + w F` (the discrete
/// holomorphic sections for `d > 0`), by inverse iteration. Unit max norm.
pub fn lowest_landau_section(lat: &TorusLattice, a: &ConnectionField, w: i32, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> =
        (0..lat.sites()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    for _ in 0..4 {
        v = cg_complex(|f| landau_apply(lat, a, w, 1.0, f), &v, 1e-10, 4 * lat.sites());
        let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        v.iter_mut().for_each(|z| *z /= m);
    }
    v
}

/// Starting point for the vortex solve in the `ℂ ⊂ ℍ` sector: the
/// background connection and a lowest Landau section scaled to carry the
/// `L²` mass fixed by integrating the curvature equation.
pub fn vortex_initial_guess(lat: &TorusLattice, degree: i32, t: f64, epsilon: f64, seed: u64) -> Configuration {
    vortex_initial_guess_for(lat, Target::uniform(1), degree, t, epsilon, seed)
}

/// As [`vortex_initial_guess`] for a general target: the section sits in the
/// first factor, the others start at zero.
pub fn vortex_initial_guess_for(
    lat: &TorusLattice,
    target: Target,
    degree: i32,
    t: f64,
    epsilon: f64,
    seed: u64,
) -> Configuration {
    let w = target.weights[0];
    let n = target.n();
    let mut q = Configuration::zero(lat.clone(), target, degree);
    q.tau = t;
    q.epsilon = epsilon;
    let z = lowest_landau_section(lat, &q.a, w, seed);
    let mass = 2.0 * (t * lat.area() - 2.0 * PI * degree as f64 * epsilon) / (w.abs().max(1) as f64);
    let cur: f64 = (0..lat.sites()).map(|s| z[s].norm_sqr() * lat.dvol(s)).sum();
    let c = if mass > 0.0 && cur > 0.0 { (mass / cur).sqrt() } else { 0.0 };
    for s in 0..lat.sites() {
        q.u.values[s * n] = Quaternion::from_complex(c * z[s].re, c * z[s].im);
    }
    q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexCount {
    /// Sum of plaquette windings of the first complex component.
    pub count: i64,
    /// Plaquettes with non-zero winding.
    pub zeros: usize,
    /// Some site value was too small relative to the maximum to trust the
    /// link phases and has been perturbed.
    pub degenerate: bool,
}

/// Plaquette windings of the `ℂ`-part of the first factor, gauge invariant:
/// `n_p = (Σ_links arg(z̄_s U z_{s'}) − wΦ_p)/2π`.
pub fn count_vortices(q: &Configuration) -> VortexCount {
    let lat = &q.lattice;
    let n = q.n();
    let w = q.target.weights[0] as f64;
    let ph = q.a.link_phases(lat);
    let flux = curvature(lat, &q.a);
    let mut z: Vec<Complex64> = (0..lat.sites()).map(|s| Complex64::new(q.u.values[s * n].w, q.u.values[s * n].x)).collect();
    let zmax = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let zmin = z.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let degenerate = zmax == 0.0 || zmin < 1e-8 * zmax;
    // a zero sitting on a site: nudge it into a neighbouring plaquette
    for v in z.iter_mut().filter(|v| v.norm() < 1e-8 * zmax) {
        *v += Complex64::new(1e-6 * zmax, 0.0);
    }
    let link = |s: usize, t: usize, p: f64| (z[s].conj() * Complex64::from_polar(1.0, w * p) * z[t]).arg();
    let mut count = 0i64;
    let mut zeros = 0usize;
    for s in 0..lat.sites() {
        let (xp, yp) = (lat.xp(s), lat.yp(s));
        let sum = link(s, xp, ph.x[s]) + link(xp, lat.yp(xp), ph.y[xp]) - link(yp, lat.xp(yp), ph.x[yp]) - link(s, yp, ph.y[s]);
        let np = ((sum - w * flux[s]) / (2.0 * PI)).round() as i64;
        if np != 0 {
            zeros += 1;
            count += np;
        }
    }
    VortexCount { count, zeros, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_no_vortices() {
        let mut q = Configuration::zero(TorusLattice::unit(8, 8).unwrap(), Target::uniform(1), 0);
        q.u.values.iter_mut().for_each(|v| *v = Quaternion::ONE);
        let c = count_vortices(&q);
        assert_eq!((c.count, c.zeros, c.degenerate), (0, 0, false));
    }

    #[test]
    fn landau_section_has_degree_many_zeros() {
        let lat = TorusLattice::unit(16, 16).unwrap();
        for d in [1, 2] {
            let q = vortex_initial_guess(&lat, d, 8.0 * PI, 1.0, 3);
            let c = count_vortices(&q);
            assert_eq!(c.count, d as i64);
            assert!(c.zeros <= d as usize);
        }
    }
}
