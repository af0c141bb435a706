//! Box-constrained projected-gradient solver for the landing MPC.
//!
//! Spectral (Barzilai-Borwein) step lengths with a non-monotone Armijo
//! backtracking along the projected direction. The best iterate is kept, so
//! the returned cost never exceeds the cost of the warm start.

use std::time::Instant;

use super::objective::{flatten, unflatten, Objective};
use super::{LandingContext, MpcConfig};
use crate::uav_model::{JerkInput, ModelMatrices, UavState};
use crate::{Error, Result};

const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e12;
const ARMIJO: f64 = 1e-4;
const MEMORY: usize = 8;
const MAX_BACKTRACKS: usize = 30;

/// Outcome of one MPC solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub inputs: Vec<JerkInput>,
    /// Predicted states `1..=mp` under `inputs`.
    pub states: Vec<UavState>,
    pub cost: f64,
    /// Cost of the (projected) warm start.
    pub warm_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The iteration or time budget ran out before convergence.
    pub budget_limited: bool,
}

impl MpcSolution {
    /// `(vx, vy, vz, eta_d)` of the first predicted state.
    pub fn velocity_reference(&self) -> [f64; 4] {
        self.states[0].velocities()
    }

    /// Inputs advanced by `steps`, padding with the last input.
    pub fn shifted(&self, steps: usize) -> Vec<JerkInput> {
        shift_inputs(&self.inputs, steps)
    }
}

pub fn shift_inputs(inputs: &[JerkInput], steps: usize) -> Vec<JerkInput> {
    let n = inputs.len();
    let last = inputs.last().copied().unwrap_or_else(JerkInput::zeros);
    (0..n)
        .map(|i| inputs.get(i + steps).copied().unwrap_or(last))
        .collect()
}

fn project(u: &mut [f64], limit: &[f64; 4]) {
    for (i, v) in u.iter_mut().enumerate() {
        let l = limit[i % 4];
        *v = v.clamp(-l, l);
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves the MPC from `x0`. `warm_start` (length `mc`) defaults to holding
/// the previous input.
pub fn solve(
    cfg: &MpcConfig,
    ctx: &LandingContext,
    x0: &UavState,
    warm_start: Option<&[JerkInput]>,
) -> Result<MpcSolution> {
    let started = Instant::now();
    let mut obj = Objective::new(cfg, ctx, *x0)?;
    let n = obj.num_vars();
    let mut u = match warm_start {
        Some(w) if w.len() != cfg.mc => {
            return Err(Error::LengthMismatch {
                expected: cfg.mc,
                got: w.len(),
            })
        }
        Some(w) => flatten(w),
        None => flatten(&vec![ctx.prev_input; cfg.mc]),
    };
    project(&mut u, &cfg.jerk_limit);

    let mut g = vec![0.0; n];
    let mut cost = obj.eval(&u, Some(&mut g))?;
    let warm_cost = cost;
    let mut best_u = u.clone();
    let mut best_cost = cost;
    let mut history = vec![cost];

    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    // initial step from the projected gradient scale
    for i in 0..n {
        dir[i] = u[i] - g[i];
    }
    project(&mut dir, &cfg.jerk_limit);
    let pg0 = dir.iter().zip(&u).fold(0.0f64, |m, (p, x)| m.max((p - x).abs()));
    let mut step = if pg0 > 0.0 { (1.0 / pg0).clamp(STEP_MIN, STEP_MAX) } else { 1.0 };

    let mut converged = false;
    let mut out_of_time = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if let Some(budget) = cfg.time_budget_ms {
            if started.elapsed().as_secs_f64() * 1e3 > budget {
                out_of_time = true;
                break;
            }
        }
        // projected direction
        for i in 0..n {
            dir[i] = u[i] - step * g[i];
        }
        project(&mut dir, &cfg.jerk_limit);
        for i in 0..n {
            dir[i] -= u[i];
        }
        // convergence on the unit projected gradient
        let pg = {
            let mut m = 0.0f64;
            for i in 0..n {
                let l = cfg.jerk_limit[i % 4];
                let p = (u[i] - g[i]).clamp(-l, l) - u[i];
                m = m.max(p.abs());
            }
            m
        };
        if pg <= cfg.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = u[i] + lambda * dir[i];
            }
            let c = obj.eval(&trial, Some(&mut g_trial))?;
            if c <= reference + ARMIJO * lambda * slope {
                accepted = Some(c);
                break;
            }
            // safeguarded quadratic interpolation
            let denom = 2.0 * (c - cost - lambda * slope);
            let mut next = if denom > 0.0 { -slope * lambda * lambda / denom } else { 0.5 * lambda };
            if !(next >= 0.1 * lambda && next <= 0.9 * lambda) {
                next = 0.5 * lambda;
            }
            lambda = next;
        }
        let Some(new_cost) = accepted else {
            break;
        };

        let mut sty = 0.0;
        let mut sts = 0.0;
        for i in 0..n {
            let s = trial[i] - u[i];
            let y = g_trial[i] - g[i];
            sty += s * y;
            sts += s * s;
        }
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        cost = new_cost;
        step = if sty > 0.0 { (sts / sty).clamp(STEP_MIN, STEP_MAX) } else { STEP_MAX };
        if inf_norm(&g) == 0.0 {
            step = 1.0;
        }

        if cost < best_cost {
            best_cost = cost;
            best_u.copy_from_slice(&u);
        }
        history.push(cost);
        if history.len() > MEMORY {
            history.remove(0);
        }
    }

    let inputs = unflatten(&best_u);
    let model = ModelMatrices::new(cfg.dt_pred)?;
    let states = model.rollout(x0, &inputs, cfg.mp, cfg.mc)?;
    Ok(MpcSolution {
        inputs,
        states,
        cost: best_cost,
        warm_cost,
        iterations,
        converged,
        budget_limited: !converged && (out_of_time || iterations >= cfg.max_iterations),
    })
}

/// Receding-horizon wrapper that warm-starts each solve from the previous
/// solution shifted by the prediction steps elapsed per control cycle.
#[derive(Debug, Clone)]
pub struct LandingMpc {
    pub config: MpcConfig,
    steps_per_cycle: usize,
    last: Option<MpcSolution>,
    applied: JerkInput,
}

impl LandingMpc {
    pub fn new(config: MpcConfig, steps_per_cycle: usize) -> Result<Self> {
        config.validate()?;
        if steps_per_cycle == 0 || steps_per_cycle > config.mc {
            return Err(Error::InvalidArgument(format!(
                "steps per cycle {steps_per_cycle} must lie in 1..={}",
                config.mc
            )));
        }
        Ok(Self {
            config,
            steps_per_cycle,
            last: None,
            applied: JerkInput::zeros(),
        })
    }

    pub fn steps_per_cycle(&self) -> usize {
        self.steps_per_cycle
    }

    /// Solves with `ctx.prev_input` set to the last input applied during the
    /// previous cycle.
    pub fn step(&mut self, mut ctx: LandingContext, x0: &UavState) -> Result<MpcSolution> {
        ctx.prev_input = self.applied;
        let warm = self.last.as_ref().map(|s| s.shifted(self.steps_per_cycle));
        let sol = solve(&self.config, &ctx, x0, warm.as_deref())?;
        self.applied = sol.inputs[self.steps_per_cycle - 1];
        self.last = Some(sol.clone());
        Ok(sol)
    }

    pub fn reset(&mut self) {
        self.last = None;
        self.applied = JerkInput::zeros();
    }
}
