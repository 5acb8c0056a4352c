//! The configuration triple `q = (a, u, Φ)` with its parameters.

use crate::lattice::{ConnectionField, GaugeTransform, HiggsField, SpinorField, TorusLattice};
use crate::quaternion::{Quaternion, Target};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub lattice: TorusLattice,
    pub target: Target,
    pub a: ConnectionField,
    pub u: SpinorField,
    pub phi: HiggsField,
    pub epsilon: f64,
    /// Coefficient `t` of the central shift `τ = i t`.
    pub tau: f64,
}

impl Configuration {
    /// Background connection, `u ≡ 0`, `φ ≡ 0`, `ε = 1`, `τ = 0`.
    pub fn zero(lattice: TorusLattice, target: Target, degree: i32) -> Self {
        let a = ConnectionField::background(&lattice, degree);
        let u = SpinorField::zeros(&lattice, target.n());
        let phi = HiggsField::zeros(&lattice);
        Configuration { lattice, target, a, u, phi, epsilon: 1.0, tau: 0.0 }
    }

    pub fn degree(&self) -> i32 {
        self.a.degree
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    /// Uniformly random fields of size `amp` (fluctuation, spinor, Higgs).
    pub fn random<R: Rng>(lattice: TorusLattice, target: Target, degree: i32, amp: f64, rng: &mut R) -> Self {
        let mut q = Configuration::zero(lattice, target, degree);
        q.randomize(amp, rng);
        q
    }

    pub fn randomize<R: Rng>(&mut self, amp: f64, rng: &mut R) {
        let mut r = || rng.random_range(-amp..amp);
        for s in 0..self.lattice.sites() {
            self.a.fluct.x[s] = r();
            self.a.fluct.y[s] = r();
            self.phi.phi[s] = Complex64::new(r(), r());
        }
        for v in self.u.values.iter_mut() {
            *v = Quaternion::new(r(), r(), r(), r());
        }
    }

    pub fn gauge_transform(&self, g: &GaugeTransform) -> Configuration {
        let mut out = self.clone();
        out.a = g.act_connection(&self.lattice, &self.a);
        out.u = g.act_spinor(&self.lattice, &self.target, &self.u);
        out
    }
}
