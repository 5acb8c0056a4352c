//! Seeded identity suites behind `swv verify`.

use crate::configuration::Configuration;
use crate::equations::{energy, higgs_vector_field_site, reduction_consistency, residual_2d};
use crate::error::{Error, Result};
use crate::lattice::{
    codifferential_2form, curl, d0, d0_adjoint, inner_0form, inner_1form, inner_2form, GaugeTransform, OneForm,
    TorusLattice,
};
use crate::linearization::{apply_dq, displace, LinearizedOperator, TangentTriple};
use crate::quaternion::{
    apply_complex_structure, check_moment_axioms, complex_structure, metric, moment_map_differential, ImQuaternion,
    Quaternion, Target, TargetPoint,
};
use crate::symplectic::{
    adjoint_vanishing_identity, cprime_pointwise_identities, curvature_bilinear_forms, verify_hamiltonian_identity,
    ConfigStructure, HyperKahlerTriple, CONVENTIONS,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub lattice: String,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(check: &str, lattice: &str, defect: f64, tolerance: f64) -> Self {
        // NaN never passes
        let pass = defect <= tolerance;
        CheckResult { check: check.into(), lattice: lattice.into(), defect, tolerance, pass }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Moment,
    Gauge,
    Reduction,
    Adjoint,
    Symplectic,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] =
        [Suite::Algebra, Suite::Moment, Suite::Gauge, Suite::Reduction, Suite::Adjoint, Suite::Symplectic];
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "algebra" => Suite::Algebra,
            "moment" => Suite::Moment,
            "gauge" => Suite::Gauge,
            "reduction" => Suite::Reduction,
            "adjoint" => Suite::Adjoint,
            "symplectic" => Suite::Symplectic,
            "all" => Suite::All,
            _ => return Err(Error::Config(format!("unknown suite '{s}'"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Algebra => "algebra",
            Suite::Moment => "moment",
            Suite::Gauge => "gauge",
            Suite::Reduction => "reduction",
            Suite::Adjoint => "adjoint",
            Suite::Symplectic => "symplectic",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

/// Run a suite. Each suite draws from its own stream so that `all` reports
/// the same numbers as the suites run one by one.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckResult>> {
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k));
    Ok(match suite {
        Suite::Algebra => algebra(&mut stream(1)),
        Suite::Moment => moment(&mut stream(2)),
        Suite::Gauge => gauge(&mut stream(3)),
        Suite::Reduction => reduction(&mut stream(4))?,
        Suite::Adjoint => adjoint(&mut stream(5)),
        Suite::Symplectic => symplectic(&mut stream(6)),
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::EACH {
                out.extend(run_suite(s, seed)?);
            }
            out
        }
    })
}

fn rand_quat<R: Rng>(rng: &mut R) -> Quaternion {
    Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn rand_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<Quaternion> {
    (0..n).map(|_| rand_quat(rng)).collect()
}

fn rand_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<i32> {
    (0..n).map(|_| [-2, -1, 1, 2, 3][rng.random_range(0..5)]).collect()
}

fn dist(a: &[Quaternion], b: &[Quaternion]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sqr()).sum::<f64>().sqrt()
}

fn tangent_dist(lat: &TorusLattice, a: &TangentTriple, b: &TangentTriple) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.norm(lat)
}

const INSTANCES: usize = 1000;

/// Quaternion relations, the complex structures `I_ξ` on `ℍⁿ`, and the
/// triple `𝓘₁, 𝓘₂, 𝓘₃` on configuration tangents.
fn algebra<R: Rng>(rng: &mut R) -> Vec<CheckResult> {
    let (mut rel, mut assoc, mut normmul) = (0.0f64, 0.0f64, 0.0f64);
    let (i, j, k, one) = (Quaternion::I, Quaternion::J, Quaternion::K, Quaternion::ONE);
    for q in [i * i + one, j * j + one, k * k + one, i * j * k + one, i * j - k, j * k - i, k * i - j] {
        rel = rel.max(q.norm());
    }
    for _ in 0..INSTANCES {
        let (a, b, c) = (rand_quat(rng), rand_quat(rng), rand_quat(rng));
        assoc = assoc.max(((a * b) * c - a * (b * c)).norm());
        normmul = normmul.max(((a * b).norm() - a.norm() * b.norm()).abs());
    }
    let (mut sq, mut cyc, mut compat, mut unit) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..INSTANCES {
        let n = rng.random_range(1..4);
        let v = rand_vec(rng, n);
        let w = rand_vec(rng, n);
        let ap = |l: usize, x: &[Quaternion]| x.iter().map(|q| complex_structure(l, *q)).collect::<Vec<_>>();
        let minus: Vec<Quaternion> = v.iter().map(|q| -*q).collect();
        for l in 1..=3 {
            sq = sq.max(dist(&ap(l, &ap(l, &v)), &minus));
            compat = compat.max((metric(&ap(l, &v), &ap(l, &w)) - metric(&v, &w)).abs());
        }
        cyc = cyc.max(dist(&ap(1, &ap(2, &v)), &ap(3, &v)));
        cyc = cyc.max(dist(&ap(2, &ap(3, &v)), &ap(1, &v)));
        cyc = cyc.max(dist(&ap(3, &ap(1, &v)), &ap(2, &v)));
        let mut xi = ImQuaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        xi = xi.scale_by(1.0 / xi.norm());
        let twice = apply_complex_structure(xi, &apply_complex_structure(xi, &v));
        unit = unit.max(dist(&twice, &minus));
    }
    let lat = TorusLattice::bump(4, 4, 1.0, 1.2, 0.2).expect("fixed lattice");
    let hk = HyperKahlerTriple::new(&lat);
    let (mut csq, mut ccyc, mut ccompat) = (0.0f64, 0.0f64, 0.0f64);
    use ConfigStructure::*;
    for _ in 0..INSTANCES {
        let x = TangentTriple::random(lat.sites(), 1, rng);
        let y = TangentTriple::random(lat.sites(), 1, rng);
        let scale = x.norm(&lat).max(1.0);
        let mut minus = x.clone();
        minus.scale(-1.0);
        for s in [I1, I2, I3] {
            let sx = hk.apply(s, &x);
            csq = csq.max(tangent_dist(&lat, &hk.apply(s, &sx), &minus) / scale);
            let g = x.dot(&lat, &y);
            ccompat = ccompat.max((hk.apply(s, &x).dot(&lat, &hk.apply(s, &y)) - g).abs() / (scale * y.norm(&lat)).max(1.0));
        }
        ccyc = ccyc.max(tangent_dist(&lat, &hk.apply(I1, &hk.apply(I2, &x)), &hk.apply(I3, &x)) / scale);
        ccyc = ccyc.max(tangent_dist(&lat, &hk.apply(I2, &hk.apply(I3, &x)), &hk.apply(I1, &x)) / scale);
        ccyc = ccyc.max(tangent_dist(&lat, &hk.apply(I3, &hk.apply(I1, &x)), &hk.apply(I2, &x)) / scale);
    }
    let t = 1e-12;
    let l = lat.label();
    vec![
        CheckResult::new("algebra.hamilton_relations", "pointwise", rel, t),
        CheckResult::new("algebra.associativity", "pointwise", assoc, t),
        CheckResult::new("algebra.norm_multiplicative", "pointwise", normmul, t),
        CheckResult::new("algebra.complex_structure_square", "pointwise", sq, t),
        CheckResult::new("algebra.complex_structure_cyclic", "pointwise", cyc, t),
        CheckResult::new("algebra.metric_compatibility", "pointwise", compat, t),
        CheckResult::new("algebra.unit_xi_square", "pointwise", unit, t),
        CheckResult::new("algebra.config_structure_square", &l, csq, t),
        CheckResult::new("algebra.config_structure_cyclic", &l, ccyc, t),
        CheckResult::new("algebra.config_metric_compatibility", &l, ccompat, t),
    ]
}

/// The moment-map axioms at random points of `ℍⁿ` and the duality of the
/// Higgs vector field with `dμ_c`.
fn moment<R: Rng>(rng: &mut R) -> Vec<CheckResult> {
    let (mut a1, mut a2, mut dual) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..4);
        let w = rand_weights(rng, n);
        let p = TargetPoint::new(rand_vec(rng, n), w.clone());
        let v = rand_vec(rng, n);
        let xi = ImQuaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let eta = rng.random_range(-3.0..3.0);
        let (d1, d2) = check_moment_axioms(&p, xi, eta, &v, 1e-4);
        a1 = a1.max(d1);
        a2 = a2.max(d2);
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let mut x = vec![Quaternion::ZERO; n];
        higgs_vector_field_site(&w, c, &p.components, &mut x);
        let dm = moment_map_differential(&w, &p.components, &v);
        dual = dual.max((metric(&x, &v) - (c.re * dm.y + c.im * dm.z)).abs());
    }
    vec![
        CheckResult::new("moment.differential_fd", "pointwise", a1, 1e-6),
        CheckResult::new("moment.equivariance", "pointwise", a2, 1e-12),
        CheckResult::new("moment.higgs_field_dual", "pointwise", dual, 1e-12),
    ]
}

fn random_config<R: Rng>(rng: &mut R, lat: TorusLattice, weights: Vec<i32>, degree: i32) -> Configuration {
    let mut q = Configuration::random(lat, Target::new(weights), degree, 0.6, rng);
    q.epsilon = rng.random_range(0.2..1.0);
    q.tau = rng.random_range(-3.0..3.0);
    q
}

/// Gauge invariance of `𝓕` (pointwise `r1`, `|r2|`, `r3`) and of the energy
/// over random gauge transformations with winding.
fn gauge<R: Rng>(rng: &mut R) -> Vec<CheckResult> {
    let lat = TorusLattice::bump(12, 12, 1.0, 1.1, 0.2).expect("fixed lattice");
    let q = random_config(rng, lat.clone(), vec![1, -2], 1);
    let r0 = residual_2d(&q);
    let e0 = energy(&q);
    let scale = r0.r1.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let (mut dr, mut de) = (0.0f64, 0.0f64);
    for k in 0..50 {
        let mut g = GaugeTransform::random(&lat, rng, 3.0);
        g.winding = ((k % 3) as i32 - 1, (k % 2) as i32);
        let gq = q.gauge_transform(&g);
        let r = residual_2d(&gq);
        for s in 0..lat.sites() {
            dr = dr.max((r.r1[s] - r0.r1[s]).abs() / scale);
            dr = dr.max((r.r3[s] - r0.r3[s]).norm() / scale);
        }
        let (n0, n1) = (r0.r2.iter().map(|v| v.norm_sqr()), r.r2.iter().map(|v| v.norm_sqr()));
        dr = dr.max(n0.zip(n1).map(|(a, b)| (a.sqrt() - b.sqrt()).abs()).fold(0.0, f64::max) / scale);
        de = de.max((energy(&gq) - e0).abs() / e0.max(1.0));
    }
    let l = lat.label();
    vec![
        CheckResult::new("gauge.residual_drift", &l, dr, 1e-12),
        CheckResult::new("gauge.energy_drift", &l, de, 1e-12),
    ]
}

/// 4D lift against the 2D residual on random `d = 0` configurations.
fn reduction<R: Rng>(rng: &mut R) -> Result<Vec<CheckResult>> {
    let lat = TorusLattice::new(12, 12, 1.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(1..3);
        let w = rand_weights(rng, n);
        let q = random_config(rng, lat.clone(), w, 0);
        worst = worst.max(reduction_consistency(&q)?);
    }
    Ok(vec![CheckResult::new("reduction.lift_consistency", &format!("{}x2x2", lat.label()), worst, 1e-10)])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Summation by parts for the lattice operators, adjointness and finite
/// differences of `D_q`, and the orbit composition `D_q d₁`.
fn adjoint<R: Rng>(rng: &mut R) -> Vec<CheckResult> {
    let lat = TorusLattice::bump(10, 8, 1.3, 0.9, 0.25).expect("fixed lattice");
    let m = lat.sites();
    let rand_form = |rng: &mut R| OneForm {
        x: (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
        y: (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let rand_fn = |rng: &mut R| -> Vec<f64> { (0..m).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let (mut hc, mut dd) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let a = rand_form(rng);
        let f = rand_fn(rng);
        hc = hc.max(rel(inner_2form(&lat, &curl(&lat, &a), &f), inner_1form(&lat, &a, &codifferential_2form(&lat, &f))));
        let g = rand_fn(rng);
        dd = dd.max(rel(inner_1form(&lat, &d0(&lat, &g), &a), inner_0form(&lat, &g, &d0_adjoint(&lat, &a))));
    }
    let q = random_config(rng, lat.clone(), vec![1, 2], -1);
    let op = LinearizedOperator::new(&q);
    let (mut adj, mut fd, mut d1a) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..5 {
        let x = TangentTriple::random(m, 2, rng);
        let y = op.apply(&TangentTriple::random(m, 2, rng));
        adj = adj.max(rel(op.apply(&x).dot(&lat, &y), x.dot(&lat, &op.adjoint(&y))));
        let s = 1e-5;
        let mut num = residual_2d(&displace(&q, &x, s));
        num.axpy(-1.0, &residual_2d(&displace(&q, &x, -s)));
        num.scale(0.5 / s);
        let mut diff = apply_dq(&q, &x);
        diff.axpy(-1.0, &num);
        fd = fd.max(diff.norm(&lat) / num.norm(&lat));
        let g = rand_fn(rng);
        d1a = d1a.max(rel(op.d1(&g).dot(&lat, &x), inner_0form(&lat, &g, &op.d1_adjoint(&x))));
    }
    let g = rand_fn(rng);
    let comp = op.apply(&op.d1(&g)).norm(&lat) / (residual_2d(&q).norm(&lat) * inner_0form(&lat, &g, &g).sqrt());
    let l = lat.label();
    vec![
        CheckResult::new("adjoint.hodge_curl", &l, hc, 1e-12),
        CheckResult::new("adjoint.d0", &l, dd, 1e-12),
        CheckResult::new("adjoint.dq_transpose", &l, adj, 1e-10),
        CheckResult::new("adjoint.d1_transpose", &l, d1a, 1e-10),
        CheckResult::new("adjoint.dq_finite_difference", &l, fd, 1e-6),
        CheckResult::new("adjoint.orbit_composition", &l, comp, 10.0),
    ]
}

/// Hamiltonian identities, the `T𝒞′` pointwise identities, the
/// adjoint-vanishing identity and the two curvature forms.
fn symplectic<R: Rng>(rng: &mut R) -> Vec<CheckResult> {
    let lat = TorusLattice::bump(16, 16, 1.0, 1.0, 0.2).expect("fixed lattice");
    let m = lat.sites();
    let q = random_config(rng, lat.clone(), vec![1, 2], 1);
    let (mut hi, mut hc) = (0.0f64, 0.0f64);
    for _ in 0..4 {
        let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = TangentTriple::random(m, 2, rng);
        let (a, b) = verify_hamiltonian_identity(&q, &gamma, &x, 1e-4);
        hi = hi.max(a);
        hc = hc.max(b);
    }
    let pw = cprime_pointwise_identities(rng, 200);
    let mut av: f64 = 0.0;
    for _ in 0..5 {
        let x = TangentTriple::random(m, 2, rng);
        let (l, r) = adjoint_vanishing_identity(&q, &x.eta, &x.xi);
        av = av.max((l - r).abs() / l.abs().max(r.abs()).max(1.0));
    }
    let x = TangentTriple::random(m, 2, rng);
    let y = TangentTriple::random(m, 2, rng);
    let r = curvature_bilinear_forms(&q, &x, &y, 1e-3);
    let gfd = (r.gamma_fd - r.gamma_analytic).abs() / r.gamma_analytic.abs().max(1.0);
    let tanti = (r.tau + r.tau_swapped).norm();
    let block = (r.gamma_analytic - CONVENTIONS.gamma_over_omega1 * r.gamma_omega_block).abs()
        .max((r.tau.im - CONVENTIONS.tau_over_omega1 * r.tau_omega_block).abs());
    let l = lat.label();
    vec![
        CheckResult::new("symplectic.hamiltonian_omega1", &l, hi, 1e-6),
        CheckResult::new("symplectic.hamiltonian_omega_c", &l, hc, 1e-6),
        CheckResult::new("symplectic.cprime_pointwise", "pointwise", pw, 1e-12),
        CheckResult::new("symplectic.adjoint_vanishing", &l, av, 1e-10),
        CheckResult::new("symplectic.gamma_form_fd", &l, gfd, 1e-6),
        CheckResult::new("symplectic.tau_form_antisymmetry", &l, tanti, 1e-12),
        CheckResult::new("symplectic.curvature_blocks", &l, block, 1e-8),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([Suite::All].iter()) {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), *s);
        }
        assert!("nonsense".parse::<Suite>().is_err());
    }

    #[test]
    fn nan_defect_fails() {
        assert!(!CheckResult::new("x", "y", f64::NAN, 1.0).pass);
        assert!(CheckResult::new("x", "y", 0.5, 1.0).pass);
    }

    #[test]
    fn algebra_suite_passes() {
        let r = run_suite(Suite::Algebra, 42).unwrap();
        assert!(r.iter().all(|c| c.pass), "{r:#?}");
    }

    #[test]
    fn adjoint_suite_passes_and_is_deterministic() {
        let a = run_suite(Suite::Adjoint, 7).unwrap();
        assert!(a.iter().all(|c| c.pass), "{a:#?}");
        assert_eq!(a, run_suite(Suite::Adjoint, 7).unwrap());
    }
}
