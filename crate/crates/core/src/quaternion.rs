//! Quaternions, the flat hyperKähler target ℍⁿ and its weighted U(1) action.
//!
//! Conventions: the complex structures act by right multiplication,
//! `I_l v = v ē_l`, so that `I₁ I₂ = I₃`. The circle acts on factor `a` by
//! left multiplication with `e^{i w_a θ}`, its moment map is
//! `μ(h) = Σ_a w_a ½ h̄_a i h_a` and the three components of `μ` are the
//! `i, j, k` coefficients. With these choices
//! `⟨dμ(v), e_l⟩ = g(I_l K_i h, v)` holds exactly.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Unit imaginary `e_l` for `l ∈ {1,2,3}`.
    pub fn unit(l: usize) -> Self {
        match l {
            1 => Self::I,
            2 => Self::J,
            3 => Self::K,
            _ => panic!("imaginary unit index must be 1, 2 or 3"),
        }
    }

    /// `re + im·i`, the embedding ℂ ⊂ ℍ.
    pub fn from_complex(re: f64, im: f64) -> Self {
        Quaternion::new(re, im, 0.0, 0.0)
    }

    /// `e^{iθ}`.
    pub fn phase(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Quaternion::new(c, s, 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Euclidean inner product of ℝ⁴.
    pub fn dot(self, o: Self) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn im(self) -> ImQuaternion {
        ImQuaternion::new(self.x, self.y, self.z)
    }

    /// Left multiplication by `i`.
    #[inline]
    pub fn mul_i_left(self) -> Self {
        Quaternion::new(-self.x, self.w, -self.z, self.y)
    }

    /// Left multiplication by `e^{iθ}` without building the product in full.
    #[inline]
    pub fn rotate_left(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Quaternion::new(
            c * self.w - s * self.x,
            c * self.x + s * self.w,
            c * self.y - s * self.z,
            c * self.z + s * self.y,
        )
    }

    /// Components as an array `[w, x, y, z]`.
    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

/// Hamilton product.
pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        quat_mul(self, o)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImQuaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ImQuaternion {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        ImQuaternion { x, y, z }
    }

    pub fn to_quat(self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn component(self, l: usize) -> f64 {
        match l {
            1 => self.x,
            2 => self.y,
            3 => self.z,
            _ => panic!("imaginary component index must be 1, 2 or 3"),
        }
    }

    /// `μ_c = μ₂ + ι μ₃` as (re, im).
    pub fn complex_part(self) -> (f64, f64) {
        (self.y, self.z)
    }
}

impl Add for ImQuaternion {
    type Output = ImQuaternion;
    fn add(self, o: Self) -> Self {
        ImQuaternion::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for ImQuaternion {
    type Output = ImQuaternion;
    fn sub(self, o: Self) -> Self {
        ImQuaternion::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// The flat target ℍⁿ together with the U(1) charge of each factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub weights: Vec<i32>,
}

impl Target {
    pub fn new(weights: Vec<i32>) -> Self {
        assert!(!weights.is_empty(), "target needs n >= 1");
        Target { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Target::new(vec![1; n])
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }
}

/// A point of ℍⁿ with its weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPoint {
    pub components: Vec<Quaternion>,
    pub weights: Vec<i32>,
}

impl TargetPoint {
    pub fn new(components: Vec<Quaternion>, weights: Vec<i32>) -> Self {
        assert_eq!(components.len(), weights.len());
        assert!(!components.is_empty());
        TargetPoint { components, weights }
    }

    pub fn target(&self) -> Target {
        Target::new(self.weights.clone())
    }

    pub fn moment_map(&self) -> ImQuaternion {
        moment_map(&self.weights, &self.components)
    }
}

/// Metric `g_M` on ℍⁿ: the Euclidean metric of ℝ⁴ⁿ.
pub fn metric(v: &[Quaternion], w: &[Quaternion]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a.dot(*b)).sum()
}

/// `I_l q = q ē_l`.
#[inline]
pub fn complex_structure(l: usize, q: Quaternion) -> Quaternion {
    match l {
        1 => Quaternion::new(q.x, -q.w, -q.z, q.y),
        2 => Quaternion::new(q.y, q.z, -q.w, -q.x),
        3 => Quaternion::new(q.z, -q.y, q.x, -q.w),
        _ => panic!("complex structure index must be 1, 2 or 3"),
    }
}

/// `I_ξ v = ξ₁ v ī + ξ₂ v j̄ + ξ₃ v k̄`, componentwise.
pub fn apply_complex_structure(xi: ImQuaternion, v: &[Quaternion]) -> Vec<Quaternion> {
    let xb = xi.to_quat().conj();
    v.iter().map(|q| *q * xb).collect()
}

/// `ω_ξ(v, w) = g_M(I_ξ v, w)`.
pub fn kahler_form(xi: ImQuaternion, v: &[Quaternion], w: &[Quaternion]) -> f64 {
    metric(&apply_complex_structure(xi, v), w)
}

/// `K_η h = (w_a η h_a)` for `η = eta·i`.
pub fn fundamental_vector_field(weights: &[i32], eta: f64, h: &[Quaternion]) -> Vec<Quaternion> {
    h.iter()
        .zip(weights)
        .map(|(q, &w)| q.mul_i_left().scale(w as f64 * eta))
        .collect()
}

/// Action of `e^{iθ}`: `h_a ↦ e^{i w_a θ} h_a`.
pub fn circle_action(weights: &[i32], theta: f64, h: &[Quaternion]) -> Vec<Quaternion> {
    h.iter()
        .zip(weights)
        .map(|(q, &w)| q.rotate_left(w as f64 * theta))
        .collect()
}

/// Moment map of one factor with weight `w`.
#[inline]
pub fn moment_map_single(w: i32, h: Quaternion) -> ImQuaternion {
    (h.conj() * h.mul_i_left()).im().scale_by(0.5 * w as f64)
}

/// `μ(h) = Σ_a w_a ½ h̄_a i h_a`.
pub fn moment_map(weights: &[i32], h: &[Quaternion]) -> ImQuaternion {
    h.iter()
        .zip(weights)
        .fold(ImQuaternion::default(), |acc, (q, &w)| acc + moment_map_single(w, *q))
}

/// `dμ_h(v) = Σ_a w_a Im(h̄_a i v_a)`.
pub fn moment_map_differential(weights: &[i32], h: &[Quaternion], v: &[Quaternion]) -> ImQuaternion {
    h.iter()
        .zip(v)
        .zip(weights)
        .fold(ImQuaternion::default(), |acc, ((q, dv), &w)| {
            acc + (q.conj() * dv.mul_i_left()).im().scale_by(w as f64)
        })
}

impl ImQuaternion {
    pub fn scale_by(self, s: f64) -> Self {
        ImQuaternion::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Defects of the two moment-map axioms.
///
/// `axiom1 = |η ⟨dμ(p)v, ξ⟩ − g(I_ξ K_η p, v)|` with `dμ` by central
/// differences; `axiom2 = |μ(e^{η i}·p) − μ(p)|`.
pub fn check_moment_axioms(
    p: &TargetPoint,
    xi: ImQuaternion,
    eta: f64,
    v: &[Quaternion],
    step: f64,
) -> (f64, f64) {
    let w = &p.weights;
    let h = &p.components;
    let plus: Vec<Quaternion> = h.iter().zip(v).map(|(a, b)| *a + b.scale(step)).collect();
    let minus: Vec<Quaternion> = h.iter().zip(v).map(|(a, b)| *a - b.scale(step)).collect();
    let dmu = (moment_map(w, &plus) - moment_map(w, &minus)).scale_by(0.5 / step);
    let lhs = eta * dmu.dot(xi);
    let k = fundamental_vector_field(w, eta, h);
    let rhs = kahler_form(xi, &k, v);
    let axiom1 = (lhs - rhs).abs();
    let moved = circle_action(w, eta, h);
    let axiom2 = (moment_map(w, &moved) - moment_map(w, h)).norm();
    (axiom1, axiom2)
}

/// Flat hyperKähler potential `ρ₀(h) = ½|h|²`.
pub fn hyperkahler_potential(h: &[Quaternion]) -> f64 {
    0.5 * h.iter().map(|q| q.norm_sqr()).sum::<f64>()
}

/// Real part of the complex Hessian of `ρ₀` with respect to `I₁`,
/// `¼[D²ρ(v,w) + D²ρ(I₁v, I₁w)]`, by central mixed differences.
pub fn complex_hessian_fd(h: &[Quaternion], v: &[Quaternion], w: &[Quaternion], step: f64) -> f64 {
    let second = |a: &[Quaternion], b: &[Quaternion]| {
        let at = |sa: f64, sb: f64| {
            let p: Vec<Quaternion> = h
                .iter()
                .zip(a)
                .zip(b)
                .map(|((q, x), y)| *q + x.scale(sa) + y.scale(sb))
                .collect();
            hyperkahler_potential(&p)
        };
        (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4.0 * step * step)
    };
    let i1v: Vec<Quaternion> = v.iter().map(|q| complex_structure(1, *q)).collect();
    let i1w: Vec<Quaternion> = w.iter().map(|q| complex_structure(1, *q)).collect();
    0.25 * (second(v, w) + second(&i1v, &i1w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Quaternion, b: Quaternion) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn multiplication_table() {
        assert!(close(Quaternion::I * Quaternion::J, Quaternion::K));
        let a = Quaternion::new(1.0, 1.0, 0.0, 0.0);
        let b = Quaternion::new(1.0, 0.0, 1.0, 0.0);
        assert!(close(a * b, Quaternion::new(1.0, 1.0, 1.0, 1.0)));
        let q = Quaternion::new(0.3, -1.2, 2.0, 0.7);
        assert!(close(q * Quaternion::ONE, q));
        let m1 = Quaternion::I * Quaternion::I;
        assert!(close(m1, -Quaternion::ONE));
        assert!(close(Quaternion::I * Quaternion::J * Quaternion::K, -Quaternion::ONE));
    }

    #[test]
    fn complex_structure_examples() {
        let i = ImQuaternion::new(1.0, 0.0, 0.0);
        let j = ImQuaternion::new(0.0, 1.0, 0.0);
        assert!(close(apply_complex_structure(i, &[Quaternion::ONE])[0], -Quaternion::I));
        // i·(−j) = −k
        assert!(close(apply_complex_structure(j, &[Quaternion::I])[0], -Quaternion::K));
        for l in 1..=3 {
            for b in [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K] {
                let e = Quaternion::unit(l);
                assert!(close(complex_structure(l, b), b * e.conj()));
            }
        }
    }

    #[test]
    fn quaternion_relations_on_basis() {
        for b in [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K] {
            let i1 = |q| complex_structure(1, q);
            let i2 = |q| complex_structure(2, q);
            let i3 = |q| complex_structure(3, q);
            assert!(close(i1(i2(b)), i3(b)));
            assert!(close(i2(i3(b)), i1(b)));
            assert!(close(i3(i1(b)), i2(b)));
            assert!(close(i1(i1(b)), -b));
        }
    }

    #[test]
    fn moment_map_examples() {
        let w = [1];
        let m = moment_map(&w, &[Quaternion::ONE]);
        assert_eq!(m, ImQuaternion::new(0.5, 0.0, 0.0));
        assert_eq!(moment_map(&w, &[Quaternion::ZERO]), ImQuaternion::default());
        let m = moment_map(&w, &[Quaternion::J]);
        assert!((m - ImQuaternion::new(-0.5, 0.0, 0.0)).norm() < 1e-15);
        let m = moment_map(&w, &[Quaternion::new(1.0, 0.0, 1.0, 0.0)]);
        assert!((m - ImQuaternion::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn fundamental_field_examples() {
        let w = [1];
        assert!(close(fundamental_vector_field(&w, 1.0, &[Quaternion::ONE])[0], Quaternion::I));
        assert!(close(fundamental_vector_field(&w, 0.0, &[Quaternion::J])[0], Quaternion::ZERO));
        assert!(close(fundamental_vector_field(&w, 1.0, &[Quaternion::J])[0], Quaternion::K));
    }

    #[test]
    fn moment_axiom_examples() {
        let p = TargetPoint::new(vec![Quaternion::ONE], vec![1]);
        let i = ImQuaternion::new(1.0, 0.0, 0.0);
        let (a1, _) = check_moment_axioms(&p, i, 0.0, &[Quaternion::I], 1e-4);
        assert_eq!(a1, 0.0);
        let (a1, _) = check_moment_axioms(&p, i, 1.0, &[Quaternion::I], 1e-4);
        assert!(a1 <= 1e-8);
        let p = TargetPoint::new(vec![Quaternion::J], vec![1]);
        let (_, a2) = check_moment_axioms(&p, i, std::f64::consts::PI / 3.0, &[Quaternion::I], 1e-4);
        assert!(a2 <= 1e-12);
    }

    #[test]
    fn analytic_differential_matches_axiom() {
        // dμ_l(v) = g(I_l K_i h, v) for every basis pair
        let w = [2, -1];
        let h = [Quaternion::new(0.3, -0.2, 1.1, 0.4), Quaternion::new(-0.7, 0.5, 0.0, 0.9)];
        let basis = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];
        let k = fundamental_vector_field(&w, 1.0, &h);
        for a in 0..2 {
            for b in basis {
                let mut v = [Quaternion::ZERO; 2];
                v[a] = b;
                let dmu = moment_map_differential(&w, &h, &v);
                for l in 1..=3 {
                    let ik: Vec<Quaternion> = k.iter().map(|q| complex_structure(l, *q)).collect();
                    assert!((dmu.component(l) - metric(&ik, &v)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn potential_and_hessian() {
        assert_eq!(hyperkahler_potential(&[Quaternion::ZERO]), 0.0);
        assert_eq!(hyperkahler_potential(&[Quaternion::ONE]), 0.5);
        let h = [Quaternion::new(1.0, 0.0, 0.0, 1.0)];
        let basis = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];
        for (a, x) in basis.iter().enumerate() {
            for (b, y) in basis.iter().enumerate() {
                let hval = complex_hessian_fd(&h, &[*x], &[*y], 1e-4);
                let expect = if a == b { 0.5 } else { 0.0 };
                assert!((hval - expect).abs() <= 1e-6);
            }
        }
    }
}
