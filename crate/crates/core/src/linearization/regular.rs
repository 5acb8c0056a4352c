//! Regularity and irreducibility of a configuration.

use super::{LinearizedOperator, TangentTriple};
use crate::equations::Cotriple;
use crate::configuration::Configuration;
use crate::lattice::inner_0form;
use crate::quaternion::complex_structure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub irreducible: bool,
    /// Smallest singular value of `γ ↦ (dγ, L_uγ)` over the largest.
    pub regular_margin: f64,
    /// Largest `det Gram(L_u, I₁L_u)` over `max |L_u|⁴` among admissible sites.
    pub irreducible_margin: f64,
}

fn normalize(lat: &crate::lattice::TorusLattice, v: &mut [f64]) -> f64 {
    let n = inner_0form(lat, v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Conjugate gradients for the SPD map `A` in the `dvol`-weighted pairing.
pub(crate) fn cg_0form(
    lat: &crate::lattice::TorusLattice,
    a: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = inner_0form(lat, &r, &r);
    let stop = tol * tol * rr;
    for _ in 0..max_iter {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ap = a(&p);
        let alpha = rr / inner_0form(lat, &p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = inner_0form(lat, &r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// Smallest and largest eigenvalue of `d₁* d₁` by inverse and direct power
/// iteration.
pub fn gauge_operator_extremes(q: &Configuration) -> (f64, f64) {
    let op = LinearizedOperator::new(q);
    let lat = &q.lattice;
    let apply = |g: &[f64]| op.d1_adjoint(&op.d1(g));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..lat.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(lat, &mut v);
    let mut lmax = 0.0;
    for _ in 0..60 {
        let mut w = apply(&v);
        lmax = normalize(lat, &mut w);
        v = w;
    }
    let mut v: Vec<f64> = (0..lat.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(lat, &mut v);
    let mut lmin = lmax;
    for _ in 0..40 {
        let shifted = |g: &[f64]| {
            let mut r = apply(g);
            for (x, y) in r.iter_mut().zip(g) {
                *x += 1e-14 * lmax * y;
            }
            r
        };
        let mut w = cg_0form(lat, &shifted, &v, 1e-12, 20 * lat.sites());
        let n = normalize(lat, &mut w);
        if n == 0.0 || !n.is_finite() {
            break;
        }
        let prev = lmin;
        lmin = 1.0 / n;
        v = w;
        if (prev - lmin).abs() <= 1e-10 * lmin.abs() {
            break;
        }
    }
    (lmin.max(0.0), lmax)
}

pub fn check_regular_irreducible(q: &Configuration) -> RegularityReport {
    let (lmin, lmax) = gauge_operator_extremes(q);
    let regular_margin = if lmax > 0.0 { (lmin / lmax).sqrt() } else { 0.0 };
    let regular = regular_margin > 1e-6;
    let n = q.n();
    let w = &q.target.weights;
    let lmax_site = (0..q.lattice.sites())
        .map(|s| (0..n).map(|k| q.u.values[s * n + k].norm_sqr() * (w[k] * w[k]) as f64).sum::<f64>())
        .fold(0.0, f64::max);
    let mut irreducible_margin: f64 = 0.0;
    if lmax_site > 0.0 {
        for s in 0..q.lattice.sites() {
            let u = q.u.at(s);
            // trivial stabilizer: gcd of the charges present at this site is 1
            let g = (0..n).filter(|&k| u[k].norm_sqr() > 1e-12 * lmax_site).fold(0, |g, k| gcd(g, w[k].unsigned_abs()));
            if g != 1 {
                continue;
            }
            let l: Vec<_> = (0..n).map(|k| u[k].mul_i_left().scale(w[k] as f64)).collect();
            let il: Vec<_> = l.iter().map(|v| complex_structure(1, *v)).collect();
            let a: f64 = l.iter().map(|v| v.norm_sqr()).sum();
            let b: f64 = il.iter().map(|v| v.norm_sqr()).sum();
            let c: f64 = l.iter().zip(&il).map(|(x, y)| x.dot(*y)).sum();
            let det = (a * b - c * c) / (lmax_site * lmax_site);
            irreducible_margin = irreducible_margin.max(det);
        }
    }
    RegularityReport { regular, irreducible: irreducible_margin > 1e-12, regular_margin, irreducible_margin }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurjectivityReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_min / sigma_max`.
    pub relative_gap: f64,
}

/// Extreme singular values of `D_q*`, from the dense eigenvalues of
/// `D_q D_q*` in orthonormal coordinates. Fails above 1024 sites.
pub fn surjectivity_margin(q: &Configuration) -> crate::error::Result<SurjectivityReport> {
    let lat = &q.lattice;
    let (m, n) = (lat.sites(), q.n());
    if m > 1024 {
        return Err(crate::error::Error::Config(format!("dense surjectivity check limited to 1024 sites, got {m}")));
    }
    let op = LinearizedOperator::new(q);
    let rows = Cotriple::real_dim(m, n);
    let dt = super::index::materialize(rows, TangentTriple::real_dim(m, n), |v| {
        op.adjoint(&Cotriple::from_coords(lat, n, v)).to_coords(lat)
    });
    let gram = dt.transpose() * &dt;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt();
    let hi = eig.eigenvalues.iter().copied().fold(0.0, f64::max).sqrt();
    Ok(SurjectivityReport { sigma_min: lo, sigma_max: hi, relative_gap: if hi > 0.0 { lo / hi } else { 0.0 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusLattice;
    use crate::quaternion::{Quaternion, Target};

    #[test]
    fn zero_spinor_is_not_regular() {
        let q = Configuration::zero(TorusLattice::unit(6, 6).unwrap(), Target::uniform(1), 0);
        let r = check_regular_irreducible(&q);
        assert!(!r.regular && !r.irreducible);
    }

    #[test]
    fn unit_spinor_is_regular_and_irreducible() {
        let mut q = Configuration::zero(TorusLattice::unit(6, 6).unwrap(), Target::uniform(1), 0);
        q.u.values.iter_mut().for_each(|v| *v = Quaternion::ONE);
        let r = check_regular_irreducible(&q);
        assert!(r.regular && r.irreducible, "{r:?}");
        assert!((r.irreducible_margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_charges_have_stabilizer() {
        let mut q = Configuration::zero(TorusLattice::unit(6, 6).unwrap(), Target::new(vec![2]), 0);
        q.u.values.iter_mut().for_each(|v| *v = Quaternion::ONE);
        assert!(!check_regular_irreducible(&q).irreducible);
    }

    #[test]
    fn trivial_solution_is_surjective() {
        let lat = crate::lattice::TorusLattice::unit(6, 6).unwrap();
        let mut q = Configuration::zero(lat, crate::quaternion::Target::uniform(1), 0);
        q.tau = 1.0;
        q.u.values.iter_mut().for_each(|v| *v = crate::quaternion::Quaternion::ONE.scale(2f64.sqrt()));
        let r = surjectivity_margin(&q).unwrap();
        assert!(r.relative_gap > 1e-3, "{r:?}");
        let mut z = q.clone();
        z.u.values.iter_mut().for_each(|v| *v = crate::quaternion::Quaternion::ZERO);
        assert!(surjectivity_margin(&z).unwrap().relative_gap < 1e-12);
    }
}
