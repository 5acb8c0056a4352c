//! Numerical Fredholm indices.
//!
//! Any square lattice discretization of `∂̄_a` has index zero by dimension
//! count, and forward differences add doublers on top. The index of a
//! Cauchy-Riemann block is therefore read off the Weitzenböck pair
//! `∂̄*∂̄ = −Δ_a + F`, `∂̄∂̄* = −Δ_a − F` on the doubler-free covariant
//! Laplacian: `dim ker` and `dim coker` are the numbers of near-zero
//! eigenvalues of the two operators, split at the largest relative gap.
//! Assembled discrete operators (`*d_a`, full `D_q`) use singular values.

use super::{LinearizedOperator, TangentTriple};
use crate::configuration::Configuration;
use crate::equations::Cotriple;
use crate::error::{Error, Result};
use crate::lattice::{curvature, ConnectionField, TorusLattice};
use crate::quaternion::{complex_structure, Quaternion, Target};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexOperator {
    /// `∂̄_a` on the degree-d line bundle.
    Dbar,
    /// `α ↦ (*dα, d*α)` on 1-forms.
    StarD,
    /// The Higgs block `η ↦ *∂̄η`.
    StarDbar,
    /// The spinor block of `D_q` at `u`.
    Dirac,
    /// `D_q` rolled up with `d₁*`.
    Full,
}

impl IndexOperator {
    pub fn name(self) -> &'static str {
        match self {
            IndexOperator::Dbar => "dbar",
            IndexOperator::StarD => "star-d",
            IndexOperator::StarDbar => "star-dbar-on-1-forms",
            IndexOperator::Dirac => "dirac",
            IndexOperator::Full => "full",
        }
    }
}

impl FromStr for IndexOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dbar" => Ok(IndexOperator::Dbar),
            "star-d" | "stard" => Ok(IndexOperator::StarD),
            "star-dbar" | "star-dbar-on-1-forms" | "higgs" => Ok(IndexOperator::StarDbar),
            "dirac" => Ok(IndexOperator::Dirac),
            "full" => Ok(IndexOperator::Full),
            _ => Err(Error::Config(format!("unknown operator '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub operator: String,
    pub degree: i32,
    pub lattice: String,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    /// Ratio across the gap that separated the near-zero part.
    pub sigma_gap: f64,
}

/// Split of a non-negative ascending spectrum into a near-zero part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSplit {
    pub small: usize,
    pub ratio: f64,
}

/// Place the threshold at the largest relative gap `v[i]/v[i−1]` whose
/// lower side lies below `window·v_max`; it must reach `min_ratio`. An
/// empty near-zero part is accepted when `v[0]` clears `window·v_max` by
/// a decade. Anything else is refused.
pub fn split_by_gap(values: &[f64], window: f64, min_ratio: f64) -> Result<GapSplit> {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let vmax = v.last().copied().unwrap_or(0.0);
    if vmax == 0.0 {
        return Ok(GapSplit { small: v.len(), ratio: f64::INFINITY });
    }
    let floor = f64::EPSILON * vmax * (v.len() as f64).sqrt();
    let empty = v[0] / (window * vmax);
    let mut best = if empty >= 10.0 { Some(GapSplit { small: 0, ratio: empty }) } else { None };
    for i in 1..v.len() {
        let lo = v[i - 1];
        if lo > window * vmax {
            break;
        }
        let r = v[i] / lo.max(floor);
        if r >= min_ratio && best.is_none_or(|b| r > b.ratio) {
            best = Some(GapSplit { small: i, ratio: r });
        }
    }
    best.ok_or_else(|| {
        Error::AmbiguousGap(format!(
            "no relative gap of {:.1e} below {:.1e}·max (lowest values {:?})",
            min_ratio,
            window,
            &v[..v.len().min(6)]
        ))
    })
}

const LANDAU_WINDOW: f64 = 1e-2;
const LANDAU_RATIO: f64 = 10.0;
const SVD_WINDOW: f64 = 1e-6;
const SVD_RATIO: f64 = 1e3;

/// `−Δ_a + sign·F` for the charge-`w` line bundle of `a`, in the flat
/// coordinates (the conformal factor does not change the kernels).
pub fn weitzenbock_matrix(lat: &TorusLattice, a: &ConnectionField, w: i32, sign: f64) -> DMatrix<Complex64> {
    let n = lat.sites();
    let ph = a.link_phases(lat);
    let f = curvature(lat, a);
    let (hx2, hy2) = (lat.hx() * lat.hx(), lat.hy() * lat.hy());
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let wf = w as f64;
    for s in 0..n {
        m[(s, s)] += Complex64::new(2.0 / hx2 + 2.0 / hy2 + sign * wf * f[s] / lat.cell(), 0.0);
        let ux = Complex64::from_polar(1.0, wf * ph.x[s]);
        let uy = Complex64::from_polar(1.0, wf * ph.y[s]);
        let (sx, sy) = (lat.xp(s), lat.yp(s));
        m[(s, sx)] -= ux / hx2;
        m[(sx, s)] -= ux.conj() / hx2;
        m[(s, sy)] -= uy / hy2;
        m[(sy, s)] -= uy.conj() / hy2;
    }
    m
}

fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
}

/// `(dim ker, dim coker, gap ratio)` of `∂̄_a` (complex dimensions) on the
/// charge-`w` bundle of `a`.
pub fn dbar_kernel_counts(lat: &TorusLattice, a: &ConnectionField, w: i32) -> Result<(usize, usize, f64)> {
    let e_ker = hermitian_eigenvalues(weitzenbock_matrix(lat, a, w, 1.0));
    let e_cok = hermitian_eigenvalues(weitzenbock_matrix(lat, a, w, -1.0));
    let mut all = e_ker.clone();
    all.extend_from_slice(&e_cok);
    let split = split_by_gap(&all, LANDAU_WINDOW, LANDAU_RATIO)?;
    let mut sorted: Vec<f64> = all.iter().map(|x| x.abs()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let thr = if split.small == 0 { sorted[0] * 0.5 } else { 0.5 * (sorted[split.small - 1] + sorted[split.small]) };
    let ker = e_ker.iter().filter(|x| x.abs() < thr).count();
    let cok = e_cok.iter().filter(|x| x.abs() < thr).count();
    Ok((ker, cok, split.ratio))
}

/// `(dim ker, dim coker, gap ratio)` of a real `rows × cols` matrix.
pub fn svd_kernel_counts(m: &DMatrix<f64>) -> Result<(usize, usize, f64)> {
    let sv = nalgebra::SVD::new(m.clone(), false, false).singular_values;
    let sv: Vec<f64> = sv.iter().copied().collect();
    let split = split_by_gap(&sv, SVD_WINDOW, SVD_RATIO)?;
    let rank = sv.len() - split.small;
    Ok((m.ncols() - rank, m.nrows() - rank, split.ratio))
}

/// Matrix of a linear map in given orthonormal coordinates, column by column.
pub fn materialize(cols: usize, rows: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(rows, cols);
    let mut e = vec![0.0; cols];
    for j in 0..cols {
        e[j] = 1.0;
        let c = f(&e);
        e[j] = 0.0;
        for i in 0..rows {
            m[(i, j)] = c[i];
        }
    }
    m
}

/// `α ↦ (*dα, d*α)` in orthonormal coordinates.
pub fn star_d_matrix(lat: &TorusLattice) -> DMatrix<f64> {
    let m = lat.sites();
    let sc = lat.cell().sqrt();
    materialize(2 * m, 2 * m, |v| {
        let a = crate::lattice::OneForm { x: v[..m].iter().map(|x| x / sc).collect(), y: v[m..].iter().map(|x| x / sc).collect() };
        let c = crate::lattice::curl(lat, &a);
        let dstar = crate::lattice::d0_adjoint(lat, &a);
        let mut out = Vec::with_capacity(2 * m);
        out.extend((0..m).map(|s| c[s] / lat.dvol(s) * lat.dvol(s).sqrt()));
        out.extend((0..m).map(|s| dstar[s] * lat.dvol(s).sqrt()));
        out
    })
}

/// `D_q ⊕ d₁*` in orthonormal coordinates (square).
pub fn full_matrix(q: &Configuration) -> DMatrix<f64> {
    let lat = &q.lattice;
    let n = q.n();
    let m = lat.sites();
    let op = LinearizedOperator::new(q);
    let dt = TangentTriple::real_dim(m, n);
    let de = Cotriple::real_dim(m, n);
    materialize(dt, de + m, |v| {
        let x = TangentTriple::from_coords(lat, n, v);
        let mut out = op.apply(&x).to_coords(lat);
        let g = op.d1_adjoint(&x);
        out.extend((0..m).map(|s| g[s] * lat.dvol(s).sqrt()));
        out
    })
}

/// U(1)-weights on `(Tℍⁿ, I₁)`: each factor splits into two `I₁`-complex
/// lines, spanned by `1` and `j`; on each line the generator `v ↦ i w v`
/// acts as `λ I₁`.
pub fn target_weights_on_i1_lines(target: &Target) -> Vec<f64> {
    let mut out = Vec::new();
    for &w in &target.weights {
        for v in [Quaternion::ONE, Quaternion::J] {
            let gen = v.mul_i_left().scale(w as f64);
            let i1 = complex_structure(1, v);
            out.push(gen.dot(i1) / i1.norm_sqr());
        }
    }
    out
}

/// `⟨c₁^{U(1)}(Tℍⁿ), [u]⟩ = (Σ weights)·d`.
pub fn equivariant_chern_oracle(target: &Target, degree: i32) -> f64 {
    target_weights_on_i1_lines(target).iter().sum::<f64>() * degree as f64
}

/// Index predicted by Riemann-Roch on the torus (`g = 1`, `χ = 0`).
pub fn riemann_roch_expectation(op: IndexOperator, target: &Target, degree: i32) -> i64 {
    let chi = 0i64;
    let genus = 1i64;
    let c1 = equivariant_chern_oracle(target, degree).round() as i64;
    let n = target.n() as i64;
    match op {
        IndexOperator::Dbar => degree as i64 + 1 - genus,
        IndexOperator::StarD => -chi,
        IndexOperator::StarDbar => 2 * genus,
        IndexOperator::Dirac => 2 * c1 + 2 * n * chi,
        IndexOperator::Full => (2 * n - 1) * chi + 2 * c1 + 2 * genus,
    }
}

fn record(op: IndexOperator, degree: i32, lat: &TorusLattice, ker: usize, cok: usize, gap: f64) -> IndexRecord {
    IndexRecord {
        operator: op.name().to_string(),
        degree,
        lattice: lat.label(),
        dim_ker: ker,
        dim_coker: cok,
        index: ker as i64 - cok as i64,
        sigma_gap: gap,
    }
}

/// Index of `∂̄_a` (complex dimensions) for the connection `a`.
pub fn dbar_index(lat: &TorusLattice, a: &ConnectionField) -> Result<IndexRecord> {
    let (k, c, g) = dbar_kernel_counts(lat, a, 1)?;
    Ok(record(IndexOperator::Dbar, a.degree, lat, k, c, g))
}

/// Index of `*d_a ⊕ d*` on 1-forms (real dimensions).
pub fn star_d_index(lat: &TorusLattice) -> Result<IndexRecord> {
    let (k, c, g) = svd_kernel_counts(&star_d_matrix(lat))?;
    Ok(record(IndexOperator::StarD, 0, lat, k, c, g))
}

/// Index of the Higgs block `η ↦ *∂̄η` (real dimensions): `∂̄` on the
/// trivial bundle, counted on its Weitzenböck pair.
pub fn star_dbar_index(lat: &TorusLattice) -> Result<IndexRecord> {
    let a = ConnectionField::background(lat, 0);
    let (k, c, g) = dbar_kernel_counts(lat, &a, 1)?;
    Ok(record(IndexOperator::StarDbar, 0, lat, 2 * k, 2 * c, g))
}

/// Index of the spinor block (real dimensions). On factor `a` the `ℂ`
/// component sees `∂̄` and the `ℂj` component sees `∂` on the charge-`w_a`
/// bundle; `ker ∂ = coker ∂̄` and vice versa.
pub fn dirac_index(q: &Configuration) -> Result<IndexRecord> {
    let lat = &q.lattice;
    let mut ker = 0;
    let mut cok = 0;
    let mut gap = f64::INFINITY;
    for &w in &q.target.weights {
        let (k, c, g) = dbar_kernel_counts(lat, &q.a, w)?;
        ker += 2 * k + 2 * c;
        cok += 2 * c + 2 * k;
        gap = gap.min(g);
    }
    Ok(record(IndexOperator::Dirac, q.degree(), lat, ker, cok, gap))
}

/// Index of the assembled `D_q ⊕ d₁*` (real dimensions).
pub fn full_index(q: &Configuration) -> Result<IndexRecord> {
    let (k, c, g) = svd_kernel_counts(&full_matrix(q))?;
    Ok(record(IndexOperator::Full, q.degree(), &q.lattice, k, c, g))
}

/// Index of the three assembled blocks of `D_q ⊕ d₁*` taken separately:
/// `(α ↦ (*dα, d*α), ξ ↦ r₂, η ↦ r₃)`.
pub fn assembled_block_indices(q: &Configuration) -> Result<[IndexRecord; 3]> {
    let lat = &q.lattice;
    let n = q.n();
    let m = lat.sites();
    let op = LinearizedOperator::new(q);
    let a_rec = star_d_index(lat)?;
    let dirac = materialize(4 * n * m, 4 * n * m, |v| {
        let mut full = vec![0.0; TangentTriple::real_dim(m, n)];
        full[2 * m..2 * m + 4 * n * m].copy_from_slice(v);
        let x = TangentTriple::from_coords(lat, n, &full);
        let y = op.apply(&x).to_coords(lat);
        y[m..m + 4 * n * m].to_vec()
    });
    let (k, c, g) = svd_kernel_counts(&dirac)?;
    let d_rec = record(IndexOperator::Dirac, q.degree(), lat, k, c, g);
    let higgs = materialize(2 * m, 2 * m, |v| {
        let mut full = vec![0.0; TangentTriple::real_dim(m, n)];
        let off = 2 * m + 4 * n * m;
        full[off..].copy_from_slice(v);
        let x = TangentTriple::from_coords(lat, n, &full);
        let yc = op.apply(&x).to_coords(lat);
        yc[m + 4 * n * m..].to_vec()
    });
    let (k, c, g) = svd_kernel_counts(&higgs)?;
    let h_rec = record(IndexOperator::StarDbar, q.degree(), lat, k, c, g);
    Ok([a_rec, d_rec, h_rec])
}

/// Dispatch used by the command line.
pub fn numerical_index(op: IndexOperator, q: &Configuration) -> Result<IndexRecord> {
    let lat = &q.lattice;
    if lat.sites() > 32 * 32 {
        return Err(Error::Config("index computations need a lattice of at most 32x32".into()));
    }
    match op {
        IndexOperator::Dbar => dbar_index(lat, &q.a),
        IndexOperator::StarD => star_d_index(lat),
        IndexOperator::StarDbar => star_dbar_index(lat),
        IndexOperator::Dirac => dirac_index(q),
        IndexOperator::Full => full_index(q),
    }
}
