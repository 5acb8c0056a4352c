//! The configuration space as a hyperKähler manifold: metric, the triple
//! `𝓘₁, 𝓘₂, 𝓘₃`, the forms `Ω_l`, the gauge moment maps and the two
//! curvature forms of the prequantum line.
//!
//! `𝓘` uses the exact lattice star `S` of [`ExactStar`] on both 1-form
//! slots, so that `Ω₁(d₁γ, ·) = dμ̃_I(γ)` holds identically on the lattice.

use crate::configuration::Configuration;
use crate::equations::residual_2d;
use crate::error::Result;
use crate::equations::higgs_vector_field_site;
use crate::lattice::{curl, curvature, d0_transpose, project_10, ExactStar, HiggsField, OneForm, TorusLattice};
use crate::linearization::{displace, materialize, split_by_gap, LinearizedOperator, TangentTriple};
use crate::quaternion::{complex_structure, hyperkahler_potential, moment_map, moment_map_differential, Quaternion};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Normalization constants between the forms of this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionSheet {
    /// `g_𝒞 = metric_factor · (⟨α,α'⟩ + ⟨ξ,ξ'⟩ + ⟨η,η'⟩)`.
    pub metric_factor: f64,
    /// Complex Hessian of `ρ₀` over the target metric.
    pub hessian_over_metric: f64,
    /// `γ(ζ₁,ζ₂) = gamma_over_omega1 · Ω₁((0,ζ₁,0),(0,ζ₂,0))`.
    pub gamma_over_omega1: f64,
    /// `τ(η₁,η₂) = i · tau_over_omega1 · Ω₁((0,0,η₁),(0,0,η₂))`.
    pub tau_over_omega1: f64,
}

pub const CONVENTIONS: ConventionSheet =
    ConventionSheet { metric_factor: 0.5, hessian_over_metric: 0.5, gamma_over_omega1: -2.0, tau_over_omega1: 1.0 / (2.0 * PI) };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigStructure {
    I1,
    I2,
    I3,
}

impl ConfigStructure {
    pub fn from_index(l: usize) -> Self {
        match l {
            1 => ConfigStructure::I1,
            2 => ConfigStructure::I2,
            3 => ConfigStructure::I3,
            _ => panic!("structure index {l} not in 1..=3"),
        }
    }
}

/// `g_𝒞(X, Y)`.
pub fn config_metric(lat: &TorusLattice, x: &TangentTriple, y: &TangentTriple) -> f64 {
    CONVENTIONS.metric_factor * x.dot(lat, y)
}

/// The triple `𝓘₁ = (Sα, −I₁ξ, −Sη)`, `𝓘₂ = (Sη, −I₂ξ, Sα)`,
/// `𝓘₃ = (−η, I₃ξ, α)`.
pub struct HyperKahlerTriple {
    lat: TorusLattice,
    star: ExactStar,
}

impl HyperKahlerTriple {
    pub fn new(lat: &TorusLattice) -> Self {
        HyperKahlerTriple { lat: lat.clone(), star: ExactStar::new(lat) }
    }

    pub fn star(&self, f: &OneForm) -> OneForm {
        self.star.apply(f)
    }

    pub fn apply(&self, sel: ConfigStructure, x: &TangentTriple) -> TangentTriple {
        let rot = |l: usize, sign: f64| -> Vec<Quaternion> {
            x.xi.iter().map(|v| complex_structure(l, *v).scale(sign)).collect()
        };
        match sel {
            ConfigStructure::I1 => TangentTriple {
                alpha: self.star.apply(&x.alpha),
                xi: rot(1, -1.0),
                eta: self.star.apply(&x.eta).scaled(-1.0),
            },
            ConfigStructure::I2 => {
                TangentTriple { alpha: self.star.apply(&x.eta), xi: rot(2, -1.0), eta: self.star.apply(&x.alpha) }
            }
            ConfigStructure::I3 => TangentTriple { alpha: x.eta.scaled(-1.0), xi: rot(3, 1.0), eta: x.alpha.clone() },
        }
    }

    /// `Ω_l(X, Y) = g_𝒞(𝓘_l X, Y)`.
    pub fn omega(&self, sel: ConfigStructure, x: &TangentTriple, y: &TangentTriple) -> f64 {
        config_metric(&self.lat, &self.apply(sel, x), y)
    }

    /// `Ω_c = Ω₂ + iΩ₃`.
    pub fn omega_c(&self, x: &TangentTriple, y: &TangentTriple) -> Complex64 {
        Complex64::new(self.omega(ConfigStructure::I2, x, y), self.omega(ConfigStructure::I3, x, y))
    }
}

/// `(μ̃_I(γ), μ̃_c(γ))` with
/// `μ̃_I(γ) = ½Σ γ(Φ_F − μ₁∘u·dvol)` and
/// `μ̃_c(γ) = ½Σ γ(curl Φ + ι div Φ·cell − conj(μ_c∘u)·dvol)`.
pub fn config_moment_maps(q: &Configuration, gamma: &[f64]) -> (f64, Complex64) {
    let lat = &q.lattice;
    let w = &q.target.weights;
    let flux = curvature(lat, &q.a);
    let phi = q.phi.one_form();
    let c = curl(lat, &phi);
    let div: Vec<f64> = d0_transpose(lat, &phi).iter().map(|v| -v).collect();
    let mut mi = Vec::with_capacity(lat.sites());
    let mut mr = Vec::with_capacity(lat.sites());
    let mut mc = Vec::with_capacity(lat.sites());
    for s in 0..lat.sites() {
        let m = moment_map(w, q.u.at(s));
        let dv = lat.dvol(s);
        mi.push(gamma[s] * (flux[s] - m.x * dv));
        mr.push(gamma[s] * (c[s] - m.y * dv));
        mc.push(gamma[s] * (div[s] * lat.cell() + m.z * dv));
    }
    use crate::lattice::pairwise_sum as ps;
    (0.5 * ps(&mi), Complex64::new(0.5 * ps(&mr), 0.5 * ps(&mc)))
}

/// Central-difference defects of `dμ̃_I(γ)[X] = Ω₁(d₁γ, X)` and
/// `dμ̃_c(γ)[X] = Ω_c(d₁γ, X)`.
pub fn verify_hamiltonian_identity(q: &Configuration, gamma: &[f64], x: &TangentTriple, step: f64) -> (f64, f64) {
    let hk = HyperKahlerTriple::new(&q.lattice);
    let (pi, pc) = config_moment_maps(&displace(q, x, step), gamma);
    let (mi, mc) = config_moment_maps(&displace(q, x, -step), gamma);
    let di = (pi - mi) / (2.0 * step);
    let dc = (pc - mc) / (2.0 * step);
    let k = LinearizedOperator::new(q).d1(gamma);
    ((di - hk.omega(ConfigStructure::I1, &k, x)).abs(), (dc - hk.omega_c(&k, x)).norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CprimeReport {
    /// `max ‖(1 − P)𝓘₁ b‖` over an orthonormal kernel basis `b`.
    pub defect: f64,
    pub kernel_dim: usize,
    pub sigma_gap: f64,
    pub residual: f64,
}

/// `𝓘₁`-invariance of `T𝒞′ = ker(rows 2–3 of D_q)`. The kernel is read off
/// the eigen-decomposition of `AᵀA` in orthonormal coordinates, with the
/// rank split at the largest relative gap.
pub fn check_cprime_invariance(q: &Configuration) -> Result<CprimeReport> {
    let lat = &q.lattice;
    let n = q.n();
    let m = lat.sites();
    let op = LinearizedOperator::new(q);
    let dt = TangentTriple::real_dim(m, n);
    let a = materialize(dt, 4 * n * m + 2 * m, |v| {
        let y = op.apply(&TangentTriple::from_coords(lat, n, v)).to_coords(lat);
        y[m..].to_vec()
    });
    let ata = a.transpose() * &a;
    let eig = SymmetricEigen::new(ata);
    let sv: Vec<f64> = eig.eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect();
    let split = split_by_gap(&sv, 1e-6, 1e3)?;
    let mut order: Vec<usize> = (0..dt).collect();
    order.sort_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap());
    let kernel: Vec<usize> = order[..split.small].to_vec();
    let basis = DMatrix::from_fn(dt, kernel.len(), |r, c| eig.eigenvectors[(r, kernel[c])]);
    let hk = HyperKahlerTriple::new(lat);
    let mut defect: f64 = 0.0;
    for c in 0..basis.ncols() {
        let b: Vec<f64> = basis.column(c).iter().copied().collect();
        let ib = hk.apply(ConfigStructure::I1, &TangentTriple::from_coords(lat, n, &b)).to_coords(lat);
        let ibv = nalgebra::DVector::from_vec(ib);
        let proj = &basis * (basis.transpose() * &ibv);
        defect = defect.max((ibv - proj).norm());
    }
    Ok(CprimeReport { defect, kernel_dim: kernel.len(), sigma_gap: split.ratio, residual: residual_2d(q).norm(lat) })
}

/// Pointwise identities behind the `𝓘₁`-invariance of `T𝒞′`, with the
/// pointwise star `(vx, vy) ↦ (−vy, vx)` and `L = K u`:
/// `(L(*α))^{1,0} = −I₁(Lα)^{1,0}` and `(X_{−*η})^{1,0} = −I₁(X_η)^{1,0}`,
/// where `X_η = (ηx I₂L, −ηy I₂L)` has `(1,0)` part `X_ψ(u)`.
/// Returns the largest defect over `samples` random points.
pub fn cprime_pointwise_identities<R: Rng>(rng: &mut R, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut r = || rng.random_range(-1.0..1.0);
        let l = Quaternion::new(r(), r(), r(), r());
        let (ax, ay, ex, ey) = (r(), r(), r(), r());
        let i1 = |p: (Quaternion, Quaternion)| (complex_structure(1, p.0).scale(-1.0), complex_structure(1, p.1).scale(-1.0));
        let lu = |x: f64, y: f64| project_10(l.scale(x), l.scale(y));
        let (s1, s2) = (lu(-ay, ax), i1(lu(ax, ay)));
        worst = worst.max((s1.0 - s2.0).norm()).max((s1.1 - s2.1).norm());
        let i2l = complex_structure(2, l);
        let xe = |x: f64, y: f64| project_10(i2l.scale(x), i2l.scale(-y));
        let (t1, t2) = (xe(ey, -ex), i1(xe(ex, ey)));
        worst = worst.max((t1.0 - t2.0).norm()).max((t1.1 - t2.1).norm());
    }
    worst
}

/// Both sides of `⟨X_Φ(u), ξ⟩ = ⟨Φ, dμ_c(ξ)⟩` in the `dvol` pairing, for a
/// Higgs 1-form `Φ = −Sη` built from `η`. The `(1,0)` part of `X_Φ` is
/// `X_ψ(u)`, so this is the identity killing the cross term of `D_q D_q*`.
pub fn adjoint_vanishing_identity(q: &Configuration, eta: &OneForm, xi: &[Quaternion]) -> (f64, f64) {
    let lat = &q.lattice;
    let n = q.n();
    let w = &q.target.weights;
    let phi = HiggsField::from_one_form(&ExactStar::new(lat).apply(eta).scaled(-1.0));
    let mut lhs = Vec::with_capacity(lat.sites());
    let mut rhs = Vec::with_capacity(lat.sites());
    let mut x = vec![Quaternion::ZERO; n];
    for s in 0..lat.sites() {
        let psi = phi.psi(s);
        let (u, v) = (q.u.at(s), &xi[s * n..(s + 1) * n]);
        higgs_vector_field_site(w, psi, u, &mut x);
        let dm = moment_map_differential(w, u, v);
        lhs.push(crate::quaternion::metric(&x, v) * lat.dvol(s));
        rhs.push((psi.re * dm.y + psi.im * dm.z) * lat.dvol(s));
    }
    (crate::lattice::pairwise_sum(&lhs), crate::lattice::pairwise_sum(&rhs))
}

/// `γ(ζ₁,ζ₂) = Σ g(I₁ζ₁, ζ₂) dvol`.
pub fn gamma_form(lat: &TorusLattice, z1: &[Quaternion], z2: &[Quaternion]) -> f64 {
    let n = z1.len() / lat.sites();
    let t: Vec<f64> = (0..lat.sites())
        .map(|s| (0..n).map(|k| complex_structure(1, z1[s * n + k]).dot(z2[s * n + k])).sum::<f64>() * lat.dvol(s))
        .collect();
    crate::lattice::pairwise_sum(&t)
}

/// The same form from central mixed differences of `∫ρ₀(u)ω_Σ`: twice the
/// complex Hessian evaluated on `(I₁ζ₁, ζ₂)`, divided by the Hessian
/// constant of the sheet.
pub fn gamma_form_fd(q: &Configuration, z1: &[Quaternion], z2: &[Quaternion], step: f64) -> f64 {
    let lat = &q.lattice;
    let n = q.n();
    let rho = |a: &[Quaternion], sa: f64, b: &[Quaternion], sb: f64| -> f64 {
        let t: Vec<f64> = (0..lat.sites())
            .map(|s| {
                let p: Vec<Quaternion> = (0..n)
                    .map(|k| {
                        let i = s * n + k;
                        q.u.values[i] + a[i].scale(sa) + b[i].scale(sb)
                    })
                    .collect();
                hyperkahler_potential(&p) * lat.dvol(s)
            })
            .collect();
        crate::lattice::pairwise_sum(&t)
    };
    let second = |a: &[Quaternion], b: &[Quaternion]| {
        (rho(a, step, b, step) - rho(a, step, b, -step) - rho(a, -step, b, step) + rho(a, -step, b, -step)) / (4.0 * step * step)
    };
    let rot = |v: &[Quaternion]| -> Vec<Quaternion> { v.iter().map(|x| complex_structure(1, *x)).collect() };
    let v = rot(z1);
    let hess = 0.25 * (second(&v, z2) + second(&rot(&v), &rot(z2)));
    hess / CONVENTIONS.hessian_over_metric
}

/// `τ(η₁,η₂) = (i/4π)∫η₁∧η₂` with the discrete wedge `∫η₁∧η₂ = −⟨Sη₁, η₂⟩`.
pub fn tau_form(hk: &HyperKahlerTriple, lat: &TorusLattice, e1: &OneForm, e2: &OneForm) -> Complex64 {
    let wedge = -crate::lattice::inner_1form(lat, &hk.star(e1), e2);
    Complex64::new(0.0, wedge / (4.0 * PI))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFormReport {
    pub gamma_analytic: f64,
    pub gamma_fd: f64,
    pub gamma_omega_block: f64,
    pub tau: Complex64,
    pub tau_swapped: Complex64,
    pub tau_omega_block: f64,
}

/// Evaluate both curvature forms on the `ξ`- and `η`-slots of a pair of
/// tangents, with the corresponding `Ω₁` blocks.
pub fn curvature_bilinear_forms(q: &Configuration, x: &TangentTriple, y: &TangentTriple, step: f64) -> CurvatureFormReport {
    let lat = &q.lattice;
    let hk = HyperKahlerTriple::new(lat);
    let only_xi = |t: &TangentTriple| TangentTriple { alpha: OneForm::zeros(lat.sites()), xi: t.xi.clone(), eta: OneForm::zeros(lat.sites()) };
    let only_eta = |t: &TangentTriple| TangentTriple {
        alpha: OneForm::zeros(lat.sites()),
        xi: vec![Quaternion::ZERO; t.xi.len()],
        eta: t.eta.clone(),
    };
    CurvatureFormReport {
        gamma_analytic: gamma_form(lat, &x.xi, &y.xi),
        gamma_fd: gamma_form_fd(q, &x.xi, &y.xi, step),
        gamma_omega_block: hk.omega(ConfigStructure::I1, &only_xi(x), &only_xi(y)),
        tau: tau_form(&hk, lat, &x.eta, &y.eta),
        tau_swapped: tau_form(&hk, lat, &y.eta, &x.eta),
        tau_omega_block: hk.omega(ConfigStructure::I1, &only_eta(x), &only_eta(y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GaugeTransform;
    use crate::quaternion::Target;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(seed: u64) -> (Configuration, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = TorusLattice::bump(8, 8, 1.0, 1.3, 0.2).unwrap();
        let q = Configuration::random(lat, Target::new(vec![1, 2]), 1, 0.6, &mut rng);
        (q, rng)
    }

    #[test]
    fn metric_examples() {
        let lat = TorusLattice::unit(8, 8).unwrap();
        let mut x = TangentTriple::zeros(lat.sites(), 1);
        x.alpha.x.iter_mut().for_each(|v| *v = 1.0);
        assert!((config_metric(&lat, &x, &x) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn quaternionic_relations() {
        let (q, mut rng) = sample(1);
        let lat = &q.lattice;
        let hk = HyperKahlerTriple::new(lat);
        let x = TangentTriple::random(lat.sites(), 2, &mut rng);
        let y = TangentTriple::random(lat.sites(), 2, &mut rng);
        use ConfigStructure::*;
        let close = |a: &TangentTriple, b: &TangentTriple| {
            let mut d = a.clone();
            d.axpy(-1.0, b);
            d.norm(lat)
        };
        let mut minus = x.clone();
        minus.scale(-1.0);
        for s in [I1, I2, I3] {
            assert!(close(&hk.apply(s, &hk.apply(s, &x)), &minus) < 1e-12);
            assert!((hk.omega(s, &x, &y) + hk.omega(s, &y, &x)).abs() < 1e-12);
            assert!((hk.omega(s, &hk.apply(s, &x), &hk.apply(s, &y)) - hk.omega(s, &x, &y)).abs() < 1e-12);
        }
        assert!(close(&hk.apply(I1, &hk.apply(I2, &x)), &hk.apply(I3, &x)) < 1e-12);
        assert!(close(&hk.apply(I2, &hk.apply(I3, &x)), &hk.apply(I1, &x)) < 1e-12);
        assert!(close(&hk.apply(I3, &hk.apply(I1, &x)), &hk.apply(I2, &x)) < 1e-12);
    }

    #[test]
    fn moment_map_examples() {
        let lat = TorusLattice::unit(8, 8).unwrap();
        let q = Configuration::zero(lat.clone(), Target::uniform(1), 0);
        let (a, b) = config_moment_maps(&q, &vec![1.0; lat.sites()]);
        assert!(a.abs() < 1e-15 && b.norm() < 1e-15);
        let q = Configuration::zero(lat.clone(), Target::uniform(1), 1);
        let (a, _) = config_moment_maps(&q, &vec![1.0; lat.sites()]);
        assert!((a + PI).abs() < 1e-12);
    }

    #[test]
    fn moment_maps_are_gauge_invariant() {
        let (q, mut rng) = sample(2);
        let gamma: Vec<f64> = (0..q.lattice.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = GaugeTransform::random(&q.lattice, &mut rng, 2.0);
        let (a, b) = config_moment_maps(&q, &gamma);
        let (c, d) = config_moment_maps(&q.gauge_transform(&g), &gamma);
        assert!((a - c).abs() < 1e-12 && (b - d).norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_identities() {
        let (q, mut rng) = sample(3);
        let lat = &q.lattice;
        let hk = HyperKahlerTriple::new(lat);
        for k in 0..6 {
            let gamma: Vec<f64> = (0..lat.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut x = TangentTriple::random(lat.sites(), 2, &mut rng);
            if k % 2 == 1 {
                let g2: Vec<f64> = (0..lat.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
                x = hk.apply(ConfigStructure::I1, &LinearizedOperator::new(&q).d1(&g2));
            }
            let (di, dc) = verify_hamiltonian_identity(&q, &gamma, &x, 1e-4);
            assert!(di < 1e-6 && dc < 1e-6, "{di} {dc}");
        }
        let (di, dc) = verify_hamiltonian_identity(&q, &vec![0.0; lat.sites()], &TangentTriple::random(lat.sites(), 2, &mut rng), 1e-4);
        assert_eq!((di, dc), (0.0, 0.0));
    }

    #[test]
    fn adjoint_vanishing() {
        let (q, mut rng) = sample(6);
        let lat = &q.lattice;
        let x = TangentTriple::random(lat.sites(), 2, &mut rng);
        let (l, r) = adjoint_vanishing_identity(&q, &x.alpha, &x.xi);
        assert!((l - r).abs() < 1e-12 * l.abs().max(1.0), "{l} {r}");
    }

    #[test]
    fn pointwise_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(cprime_pointwise_identities(&mut rng, 200) < 1e-12);
    }

    #[test]
    fn trivial_solution_tangent_space_is_complex() {
        let lat = TorusLattice::unit(6, 6).unwrap();
        let q = Configuration::zero(lat, Target::uniform(1), 0);
        let r = check_cprime_invariance(&q).unwrap();
        assert!(r.defect < 1e-10, "{r:?}");
    }

    #[test]
    fn curvature_forms_and_conventions() {
        let (q, mut rng) = sample(5);
        let lat = &q.lattice;
        let x = TangentTriple::random(lat.sites(), 2, &mut rng);
        let y = TangentTriple::random(lat.sites(), 2, &mut rng);
        let r = curvature_bilinear_forms(&q, &x, &y, 1e-3);
        assert!((r.gamma_fd - r.gamma_analytic).abs() < 1e-6 * r.gamma_analytic.abs().max(1.0));
        assert!((r.tau + r.tau_swapped).norm() < 1e-12);
        assert!((r.gamma_analytic - CONVENTIONS.gamma_over_omega1 * r.gamma_omega_block).abs() < 1e-10);
        assert!((r.tau.im - CONVENTIONS.tau_over_omega1 * r.tau_omega_block).abs() < 1e-12);
        let z = vec![Quaternion::ZERO; x.xi.len()];
        assert_eq!(gamma_form(lat, &z, &y.xi), 0.0);
    }
}
