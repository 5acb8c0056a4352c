//! Exact lattice Hodge star on 1-forms and the periodic Poisson solve.
//!
//! Per Fourier mode the forward difference has symbol `(a, b)` with
//! `a = (e^{iθ₁} − 1)/hx`, `b = (e^{iθ₂} − 1)/hy`. The star `S` rotates the
//! exact direction `e = (a, b)/|·|` into the co-exact direction
//! `f = (b̄, −ā)/|·|` and `f` into `−e`; the zero mode uses `*dx = dy`.
//! `S` is real and orthogonal, `S² = −1`, and `dᵀ S α = curl α / (hx·hy)`.

use super::{OneForm, TorusLattice};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Forward and inverse 2D FFT on row-major `Nx × Ny` data.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fx: p.plan_fft_forward(nx),
            ix: p.plan_fft_inverse(nx),
            fy: p.plan_fft_forward(ny),
            iy: p.plan_fft_inverse(ny),
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let (fx, fy) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        for row in data.chunks_mut(self.nx) {
            fx.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
        for c in 0..self.nx {
            for r in 0..self.ny {
                col[r] = data[r * self.nx + c];
            }
            fy.process(&mut col);
            for r in 0..self.ny {
                data[r * self.nx + c] = col[r];
            }
        }
        if inverse {
            let k = 1.0 / (self.nx * self.ny) as f64;
            for v in data.iter_mut() {
                *v *= k;
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false)
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true)
    }
}

fn symbols(lat: &TorusLattice, s: usize) -> (Complex64, Complex64) {
    let (kx, ky) = lat.coords(s);
    let t1 = 2.0 * PI * kx as f64 / lat.nx as f64;
    let t2 = 2.0 * PI * ky as f64 / lat.ny as f64;
    let one = Complex64::new(1.0, 0.0);
    (
        (Complex64::from_polar(1.0, t1) - one) / lat.hx(),
        (Complex64::from_polar(1.0, t2) - one) / lat.hy(),
    )
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
}

/// The exact star, with a cached FFT plan.
pub struct ExactStar {
    fft: Fft2,
    lat: TorusLattice,
}

impl ExactStar {
    pub fn new(lat: &TorusLattice) -> Self {
        ExactStar { fft: Fft2::new(lat.nx, lat.ny), lat: lat.clone() }
    }

    pub fn apply(&self, a: &OneForm) -> OneForm {
        let lat = &self.lat;
        let mut x = to_complex(&a.x);
        let mut y = to_complex(&a.y);
        self.fft.forward(&mut x);
        self.fft.forward(&mut y);
        for s in 0..lat.sites() {
            let (p, q) = (x[s], y[s]);
            if s == 0 {
                x[s] = -q;
                y[s] = p;
                continue;
            }
            let (ca, cb) = symbols(lat, s);
            let n = (ca.norm_sqr() + cb.norm_sqr()).sqrt();
            let (e1, e2) = (ca / n, cb / n);
            let (f1, f2) = (cb.conj() / n, -ca.conj() / n);
            let pe = e1.conj() * p + e2.conj() * q;
            let pf = f1.conj() * p + f2.conj() * q;
            x[s] = f1 * pe - e1 * pf;
            y[s] = f2 * pe - e2 * pf;
        }
        self.fft.inverse(&mut x);
        self.fft.inverse(&mut y);
        OneForm { x: x.iter().map(|c| c.re).collect(), y: y.iter().map(|c| c.re).collect() }
    }
}

/// Solve `dᵀd θ = dᵀα` (zero mean θ). Then `α − dθ` is co-closed.
pub fn coulomb_potential(lat: &TorusLattice, a: &OneForm) -> Vec<f64> {
    let rhs = super::d0_transpose(lat, a);
    let fft = Fft2::new(lat.nx, lat.ny);
    let mut r = to_complex(&rhs);
    fft.forward(&mut r);
    for s in 0..lat.sites() {
        if s == 0 {
            r[s] = Complex64::new(0.0, 0.0);
            continue;
        }
        let (ca, cb) = symbols(lat, s);
        r[s] /= ca.norm_sqr() + cb.norm_sqr();
    }
    fft.inverse(&mut r);
    r.iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{curl, d0, d0_transpose, inner_1form};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_form(n: usize, rng: &mut ChaCha8Rng) -> OneForm {
        OneForm {
            x: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn exact_star_properties() {
        let lat = TorusLattice::new(8, 6, 1.3, 0.9).unwrap();
        let st = ExactStar::new(&lat);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_form(lat.sites(), &mut rng);
        let b = random_form(lat.sites(), &mut rng);
        let ssa = st.apply(&st.apply(&a));
        for s in 0..lat.sites() {
            assert!((ssa.x[s] + a.x[s]).abs() < 1e-12 && (ssa.y[s] + a.y[s]).abs() < 1e-12);
        }
        let lhs = inner_1form(&lat, &st.apply(&a), &b);
        let rhs = -inner_1form(&lat, &a, &st.apply(&b));
        assert!((lhs - rhs).abs() < 1e-12);
        let c = curl(&lat, &a);
        let dts = d0_transpose(&lat, &st.apply(&a));
        for s in 0..lat.sites() {
            assert!((dts[s] - c[s] / lat.cell()).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_mode_is_pointwise_star() {
        let lat = TorusLattice::unit(4, 4).unwrap();
        let st = ExactStar::new(&lat);
        let a = OneForm { x: vec![1.0; 16], y: vec![0.0; 16] };
        let sa = st.apply(&a);
        assert!(sa.x.iter().all(|v| v.abs() < 1e-14));
        assert!(sa.y.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn coulomb_potential_makes_form_coclosed() {
        let lat = TorusLattice::new(8, 8, 2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut a = random_form(lat.sites(), &mut rng);
        let th = coulomb_potential(&lat, &a);
        a.axpy(-1.0, &d0(&lat, &th));
        assert!(d0_transpose(&lat, &a).iter().all(|v| v.abs() < 1e-10));
    }
}
