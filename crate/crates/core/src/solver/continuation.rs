//! Continuation in ε towards the adiabatic limit.

use super::{solve_observed, SolveOptions, SolveReport};
use crate::configuration::Configuration;
use crate::equations::residual_2d;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationStage {
    pub epsilon: f64,
    pub report: SolveReport,
    /// `(‖μ₁∘u‖² + ‖μ_c∘u‖²)^{1/2}`.
    pub mu_norm: f64,
    /// `‖r2‖`, the Dirac part.
    pub dirac_norm: f64,
    #[serde(skip)]
    pub config: Option<Configuration>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub stages: Vec<ContinuationStage>,
    pub completed: bool,
    pub message: String,
}

/// `‖μ∘u‖` in the `dvol` pairing.
pub fn moment_norm(q: &Configuration) -> f64 {
    let mut p = q.clone();
    p.epsilon = 0.0;
    p.tau = 0.0;
    let n = residual_2d(&p).norms(&p.lattice);
    (n[0] * n[0] + n[2] * n[2]).sqrt()
}

fn stage(eps: f64, report: SolveReport, q: Configuration) -> ContinuationStage {
    let dirac_norm = report.residual_norms[1];
    ContinuationStage { epsilon: eps, mu_norm: moment_norm(&q), dirac_norm, report, config: Some(q) }
}

/// The `ε = 0` system: `μ∘u = 0` with `r2 = 0`, by quadratic penalty on the
/// moment-map slots with increasing weight. The central shift is dropped.
pub fn solve_adiabatic_limit(q0: &Configuration, opts: &SolveOptions) -> Result<(Configuration, SolveReport)> {
    let mut q = q0.clone();
    q.epsilon = 0.0;
    q.tau = 0.0;
    let mut last = None;
    for &rho in &opts.penalty_schedule {
        let w = [rho.sqrt(), 1.0, rho.sqrt()];
        let (qn, rep) = solve_observed(&q, opts, w, &mut |_, _| {})?;
        q = qn;
        let done = rep.converged;
        last = Some(rep);
        if done && moment_norm(&q) <= opts.tol {
            break;
        }
    }
    Ok((q, last.expect("non-empty penalty schedule")))
}

/// Solve at each ε of the schedule, warm-starting from the previous stage.
/// A failed step is bisected down to `min_epsilon_step`; below that the
/// stages reached so far are returned with `completed = false`.
pub fn epsilon_continuation(q0: &Configuration, opts: &SolveOptions) -> Result<ContinuationResult> {
    opts.validate()?;
    let sched = &opts.epsilon_schedule;
    if sched.is_empty() {
        return Err(Error::Config("empty epsilon schedule".into()));
    }
    let mut stages = Vec::new();
    let mut q = q0.clone();
    q.epsilon = sched[0];
    let run = |q: &Configuration, eps: f64| -> Result<(Configuration, SolveReport)> {
        if eps == 0.0 {
            solve_adiabatic_limit(q, opts)
        } else {
            let mut p = q.clone();
            p.epsilon = eps;
            solve_observed(&p, opts, [1.0; 3], &mut |_, _| {})
        }
    };
    let (q1, rep) = run(&q, sched[0])?;
    if !rep.converged {
        let msg = format!("first stage ε = {} did not converge: {}", sched[0], rep.message);
        stages.push(stage(sched[0], rep, q1));
        return Ok(ContinuationResult { stages, completed: false, message: msg });
    }
    q = q1;
    let mut eps = sched[0];
    stages.push(stage(eps, rep, q.clone()));
    let mut pending: Vec<f64> = sched[1..].iter().rev().copied().collect();
    while let Some(target) = pending.pop() {
        let attempt = run(&q, target);
        match attempt {
            Ok((qn, rep)) if rep.converged => {
                q = qn;
                eps = target;
                stages.push(stage(eps, rep, q.clone()));
            }
            other => {
                let mid = 0.5 * (eps + target);
                if (eps - mid).abs() < opts.min_epsilon_step {
                    let why = match other {
                        Ok((_, rep)) => rep.message,
                        Err(e) => e.to_string(),
                    };
                    return Ok(ContinuationResult {
                        stages,
                        completed: false,
                        message: format!("step {eps} → {target} failed below the minimum step: {why}"),
                    });
                }
                pending.push(target);
                pending.push(mid);
            }
        }
    }
    Ok(ContinuationResult { stages, completed: true, message: "completed".into() })
}
