//! Minimization of `E = ½‖𝓕‖²`: gradient flow, nonlinear CG and a
//! Levenberg-Marquardt / Gauss-Newton iteration with minimal-norm steps.

mod continuation;
mod vortex;

pub use continuation::*;
pub use vortex::*;

use crate::configuration::Configuration;
use crate::equations::{residual_2d, Cotriple};
use crate::error::{Error, Result};
use crate::lattice::{coulomb_potential, d0_adjoint, inner_0form, GaugeTransform};
use crate::linearization::{check_regular_irreducible, displace, LinearizedOperator, RegularityReport, TangentTriple};
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GradientFlow,
    NonlinearCg,
    GaussNewton,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gradient-flow" | "gradient" | "flow" => Ok(Method::GradientFlow),
            "nonlinear-cg" | "ncg" | "cg" => Ok(Method::NonlinearCg),
            "gauss-newton" | "gn" | "newton" | "lm" => Ok(Method::GaussNewton),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeFix {
    None,
    Coulomb,
}

impl FromStr for GaugeFix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(GaugeFix::None),
            "coulomb" | "coulomb-projection" => Ok(GaugeFix::Coulomb),
            _ => Err(Error::Config(format!("unknown gauge fix '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    /// Target `‖𝓕‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub gauge_fix: GaugeFix,
    /// Initial step for gradient flow and nonlinear CG.
    pub step: f64,
    /// Initial Levenberg-Marquardt damping.
    pub lm_lambda: f64,
    /// Inner CG iterations per Gauss-Newton step.
    pub cg_max_iter: usize,
    /// `‖𝓕‖` above this multiple of the initial value counts as divergence.
    pub divergence_factor: f64,
    pub epsilon_schedule: Vec<f64>,
    /// Penalty weights used in turn for the `ε = 0` stage.
    pub penalty_schedule: Vec<f64>,
    /// Smallest ε-step tried when bisecting a failed continuation step.
    pub min_epsilon_step: f64,
    /// Run the regularity/irreducibility check on convergence.
    pub diagnostics: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::GaussNewton,
            tol: 1e-8,
            max_iter: 10_000,
            gauge_fix: GaugeFix::Coulomb,
            step: 1e-4,
            lm_lambda: 1e-3,
            cg_max_iter: 4000,
            divergence_factor: 1e6,
            epsilon_schedule: vec![1.0],
            penalty_schedule: vec![1.0, 1e2, 1e4],
            min_epsilon_step: 1.0 / 64.0,
            diagnostics: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.step > 0.0) || !(self.lm_lambda >= 0.0) || !(self.divergence_factor > 1.0) {
            return Err(Error::Config("step control parameters out of range".into()));
        }
        if self.epsilon_schedule.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Config("epsilon schedule values must lie in [0,1]".into()));
        }
        if self.epsilon_schedule.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config("epsilon schedule must be non-increasing".into()));
        }
        if self.penalty_schedule.is_empty() || self.penalty_schedule.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config("penalty schedule must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub gauge_defect: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    /// Objective norm the stopping rule uses (slot weights applied).
    pub residual: f64,
    /// Unweighted `(‖r1‖, ‖r2‖, ‖r3‖)`.
    pub residual_norms: [f64; 3],
    pub energy_history: Vec<f64>,
    pub history: Vec<IterationRecord>,
    /// `‖d*α‖` of the connection fluctuation at exit.
    pub gauge_defect: f64,
    pub wall_ms: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub message: String,
    pub regularity: Option<RegularityReport>,
    pub vortices: Option<VortexCount>,
}

/// Per-slot multipliers on `(r1, r2, r3)`.
pub type SlotWeights = [f64; 3];

pub(crate) fn weigh(c: &mut Cotriple, w: SlotWeights) {
    if w == [1.0; 3] {
        return;
    }
    c.r1.iter_mut().for_each(|v| *v *= w[0]);
    c.r2.iter_mut().for_each(|v| *v = v.scale(w[1]));
    c.r3.iter_mut().for_each(|v| *v *= w[2]);
}

fn weighted_residual(q: &Configuration, w: SlotWeights) -> Cotriple {
    let mut r = residual_2d(q);
    weigh(&mut r, w);
    r
}

/// `∇E = D_q* 𝓕(q)`.
pub fn gradient(q: &Configuration) -> TangentTriple {
    gradient_weighted(q, [1.0; 3])
}

fn gradient_weighted(q: &Configuration, w: SlotWeights) -> TangentTriple {
    let mut r = weighted_residual(q, w);
    weigh(&mut r, w);
    LinearizedOperator::new(q).adjoint(&r)
}

/// `‖d*α‖` for the connection fluctuation.
pub fn gauge_defect(q: &Configuration) -> f64 {
    let d = d0_adjoint(&q.lattice, &q.a.fluct);
    inner_0form(&q.lattice, &d, &d).sqrt()
}

/// Gauge transformation that makes the fluctuation co-closed. Leaves `‖𝓕‖`
/// unchanged.
pub fn coulomb_project(q: &Configuration) -> Configuration {
    let theta = coulomb_potential(&q.lattice, &q.a.fluct);
    q.gauge_transform(&GaugeTransform { theta, winding: (0, 0) })
}

/// CG on `(W D D* W + λ) y = b` in the cotriple pairing.
fn normal_cg(op: &LinearizedOperator, w: SlotWeights, lambda: f64, b: &Cotriple, rtol: f64, max_iter: usize) -> Cotriple {
    let lat = op.lattice();
    let apply = |y: &Cotriple| {
        let mut wy = y.clone();
        weigh(&mut wy, w);
        let mut out = op.apply(&op.adjoint(&wy));
        weigh(&mut out, w);
        out.axpy(lambda, y);
        out
    };
    let mut x = Cotriple::zeros(b.r1.len(), b.r2.len() / b.r1.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(lat, &r);
    let stop = rtol * rtol * rr;
    for _ in 0..max_iter {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ap = apply(&p);
        let pap = p.dot(lat, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = r.dot(lat, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.scale(beta);
        p.axpy(1.0, &r);
    }
    x
}

struct Tracker {
    start: Instant,
    history: Vec<IterationRecord>,
}

impl Tracker {
    fn record(&mut self, iter: usize, q: &Configuration, energy: f64) -> IterationRecord {
        let n = residual_2d(q).norms(&q.lattice);
        let rec = IterationRecord {
            iter,
            energy,
            r1: n[0],
            r2: n[1],
            r3: n[2],
            gauge_defect: gauge_defect(q),
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        self.history.push(rec.clone());
        rec
    }
}

/// Observer called after every accepted iterate (and once for the start).
pub type Observer<'o> = dyn FnMut(&IterationRecord, &Configuration) + 'o;

pub fn solve(q0: &Configuration, opts: &SolveOptions) -> Result<(Configuration, SolveReport)> {
    solve_observed(q0, opts, [1.0; 3], &mut |_, _| {})
}

/// Solve with slot weights on the residual and an observer.
pub fn solve_observed(
    q0: &Configuration,
    opts: &SolveOptions,
    w: SlotWeights,
    observer: &mut Observer,
) -> Result<(Configuration, SolveReport)> {
    opts.validate()?;
    let mut q = if opts.gauge_fix == GaugeFix::Coulomb { coulomb_project(q0) } else { q0.clone() };
    let lat = q.lattice.clone();
    let mut tr = Tracker { start: Instant::now(), history: Vec::new() };
    let mut f = weighted_residual(&q, w);
    let mut nf = f.norm(&lat);
    let nf0 = nf;
    if !nf.is_finite() {
        return Err(Error::Divergence("initial residual is not finite".into()));
    }
    let rec = tr.record(0, &q, 0.5 * nf * nf);
    observer(&rec, &q);
    let mut iter = 0;
    let mut message = String::from("converged");
    let mut step = opts.step;
    let mut lambda = opts.lm_lambda;
    let mut prev_grad: Option<TangentTriple> = None;
    let mut dir: Option<TangentTriple> = None;
    while nf > opts.tol {
        if iter >= opts.max_iter {
            message = format!("max_iter {} reached", opts.max_iter);
            break;
        }
        iter += 1;
        let accepted = match opts.method {
            Method::GaussNewton => {
                let op = LinearizedOperator::new(&q);
                let mut rhs = f.clone();
                rhs.scale(-1.0);
                let rtol = 0.1f64.min(nf.sqrt()).max(1e-12);
                let mut found = None;
                for _ in 0..12 {
                    let y = normal_cg(&op, w, lambda, &rhs, rtol, opts.cg_max_iter);
                    let mut wy = y;
                    weigh(&mut wy, w);
                    let x = op.adjoint(&wy);
                    let mut s = 1.0;
                    while s >= 1.0 / 64.0 {
                        let qn = displace(&q, &x, s);
                        let fnew = weighted_residual(&qn, w);
                        let nn = fnew.norm(&lat);
                        if nn.is_finite() && nn < (1.0 - 1e-4 * s) * nf {
                            found = Some((qn, fnew, nn, s));
                            break;
                        }
                        s *= 0.5;
                    }
                    if let Some((_, _, _, s)) = &found {
                        lambda = if *s == 1.0 { (lambda / 4.0).max(1e-14) } else { lambda * 2.0 };
                        break;
                    }
                    lambda = (lambda * 10.0).max(1e-8);
                    if lambda > 1e12 {
                        break;
                    }
                }
                found.map(|(qn, fnew, nn, _)| (qn, fnew, nn))
            }
            Method::GradientFlow | Method::NonlinearCg => {
                let g = gradient_weighted(&q, w);
                let gg = g.dot(&lat, &g);
                let mut d = g.clone();
                d.scale(-1.0);
                if opts.method == Method::NonlinearCg {
                    if let (Some(pg), Some(pd)) = (&prev_grad, &dir) {
                        let mut diff = g.clone();
                        diff.axpy(-1.0, pg);
                        let beta = (g.dot(&lat, &diff) / pg.dot(&lat, pg)).max(0.0);
                        d.axpy(beta, pd);
                        if d.dot(&lat, &g) >= 0.0 {
                            d = g.clone();
                            d.scale(-1.0);
                        }
                    }
                }
                let slope = d.dot(&lat, &g);
                let e0 = 0.5 * nf * nf;
                let mut found = None;
                for _ in 0..60 {
                    let qn = displace(&q, &d, step);
                    let fnew = weighted_residual(&qn, w);
                    let nn = fnew.norm(&lat);
                    if nn.is_finite() && 0.5 * nn * nn <= e0 + 1e-4 * step * slope {
                        found = Some((qn, fnew, nn));
                        step *= 1.5;
                        break;
                    }
                    step *= 0.5;
                }
                if gg == 0.0 {
                    found = None;
                }
                prev_grad = Some(g);
                dir = Some(d);
                found
            }
        };
        match accepted {
            Some((qn, fnew, nn)) => {
                q = qn;
                f = fnew;
                nf = nn;
                if opts.gauge_fix == GaugeFix::Coulomb {
                    q = coulomb_project(&q);
                }
                let rec = tr.record(iter, &q, 0.5 * nf * nf);
                observer(&rec, &q);
            }
            None => {
                message = format!("line search stalled at ‖F‖ = {nf:.3e}");
                break;
            }
        }
        if !nf.is_finite() || nf > opts.divergence_factor * nf0.max(opts.tol) {
            return Err(Error::Divergence(format!("‖F‖ grew to {nf:.3e} from {nf0:.3e} at iteration {iter}")));
        }
    }
    let converged = nf <= opts.tol;
    let norms = residual_2d(&q).norms(&lat);
    let diag = converged && opts.diagnostics && q.u.values.iter().any(|v| v.norm_sqr() > 0.0);
    let report = SolveReport {
        method: opts.method,
        converged,
        iterations: iter,
        residual: nf,
        residual_norms: norms,
        energy_history: tr.history.iter().map(|r| r.energy).collect(),
        gauge_defect: gauge_defect(&q),
        wall_ms: tr.start.elapsed().as_secs_f64() * 1e3,
        history: tr.history,
        epsilon: q.epsilon,
        tau: q.tau,
        message,
        regularity: if diag { Some(check_regular_irreducible(&q)) } else { None },
        vortices: if diag { Some(count_vortices(&q)) } else { None },
    };
    Ok((q, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusLattice;
    use crate::linearization::apply_dq;
    use crate::quaternion::{Quaternion, Target};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_energy_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lat = TorusLattice::bump(8, 8, 1.0, 1.2, 0.2).unwrap();
        let mut q = Configuration::random(lat.clone(), Target::new(vec![1, -1]), 1, 0.5, &mut rng);
        q.tau = 0.7;
        let g = gradient(&q);
        for _ in 0..20 {
            let x = TangentTriple::random(lat.sites(), 2, &mut rng);
            let h = 1e-5;
            let fd = (crate::equations::energy(&displace(&q, &x, h)) - crate::equations::energy(&displace(&q, &x, -h))) / (2.0 * h);
            let an = g.dot(&lat, &x);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} {an}");
        }
    }

    #[test]
    fn solution_returns_immediately() {
        let mut q = Configuration::zero(TorusLattice::unit(8, 8).unwrap(), Target::uniform(1), 0);
        q.tau = 1.0;
        q.u.values.iter_mut().for_each(|v| *v = Quaternion::ONE.scale(2f64.sqrt()));
        let (_, rep) = solve(&q, &SolveOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }

    #[test]
    fn coulomb_projection_keeps_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = Configuration::random(TorusLattice::unit(8, 8).unwrap(), Target::uniform(1), 1, 0.4, &mut rng);
        let p = coulomb_project(&q);
        let (a, b) = (residual_2d(&q).norm(&q.lattice), residual_2d(&p).norm(&p.lattice));
        assert!((a - b).abs() <= 1e-12 * a);
        assert!(gauge_defect(&p) < 1e-10);
    }

    #[test]
    fn gradient_flow_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut q = Configuration::random(TorusLattice::unit(8, 8).unwrap(), Target::uniform(1), 0, 0.5, &mut rng);
        q.tau = 1.0;
        let opts = SolveOptions { method: Method::GradientFlow, max_iter: 50, ..Default::default() };
        let (_, rep) = solve(&q, &opts).unwrap();
        assert!(rep.energy_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(rep.energy_history.last().unwrap() < &rep.energy_history[0]);
    }

    #[test]
    fn gauss_newton_solves_small_vortex() {
        let lat = TorusLattice::unit(32, 32).unwrap();
        let q0 = vortex_initial_guess(&lat, 1, 4.0 * std::f64::consts::PI, 1.0, 1);
        let (q, rep) = solve(&q0, &SolveOptions { max_iter: 200, ..Default::default() }).unwrap();
        assert!(rep.converged, "{}", rep.message);
        assert_eq!(count_vortices(&q).count, 1);
        let y = apply_dq(&q, &crate::linearization::gauge_infinitesimal(&q, &vec![1.0; lat.sites()]));
        assert!(y.norm(&lat) <= 10.0 * rep.residual * lat.area().sqrt());
    }

    #[test]
    fn options_are_validated() {
        assert!(SolveOptions { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolveOptions { epsilon_schedule: vec![0.5, 1.0], ..Default::default() }.validate().is_err());
    }
}
