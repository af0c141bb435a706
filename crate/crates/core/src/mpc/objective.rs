//! MPC objective and its analytic gradient.
//!
//! The model is `I4 (x) D'`, so the rollout and the adjoint pass run per axis
//! on 3-state blocks. Decision variables are laid out step-major:
//! `u[4 * k + axis]` for control step `k` in `0..mc`.

use nalgebra::{Matrix3, Vector3};

use super::barrier::sigmoid_gate_with_slope;
use super::{LandingContext, MpcConfig};
use crate::uav_model::{JerkInput, ModelMatrices, UavState, AXIS_HEADING, AXIS_Z};
use crate::{Error, Result};

/// Objective value with its gradient per control step.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<JerkInput>,
}

/// Reusable evaluator for one `(config, context, x0)` triple.
pub struct Objective<'a> {
    cfg: &'a MpcConfig,
    ctx: &'a LandingContext,
    x0: UavState,
    d: Matrix3<f64>,
    e: Vector3<f64>,
    traj: Vec<Vector3<f64>>,
    local: Vec<Vector3<f64>>,
}

impl<'a> Objective<'a> {
    pub fn new(cfg: &'a MpcConfig, ctx: &'a LandingContext, x0: UavState) -> Result<Self> {
        cfg.validate()?;
        ctx.validate(cfg)?;
        if !x0.is_finite() {
            return Err(Error::InvalidArgument("non-finite initial state".into()));
        }
        let model = ModelMatrices::new(cfg.dt_pred)?;
        Ok(Self {
            cfg,
            ctx,
            x0,
            d: model.d_block,
            e: model.e_block,
            traj: vec![Vector3::zeros(); cfg.mp],
            local: vec![Vector3::zeros(); cfg.mp],
        })
    }

    pub fn num_vars(&self) -> usize {
        4 * self.cfg.mc
    }

    /// Objective at the flat input vector `u`; fills `grad` when given.
    pub fn eval(&mut self, u: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let cfg = self.cfg;
        let ctx = self.ctx;
        let (mp, mc) = (cfg.mp, cfg.mc);
        if u.len() != 4 * mc {
            return Err(Error::LengthMismatch {
                expected: 4 * mc,
                got: u.len(),
            });
        }
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let d_t = self.d.transpose();
        let mut total = 0.0;

        for a in 0..4 {
            let w = Vector3::new(
                cfg.state_weights[3 * a],
                cfg.state_weights[3 * a + 1],
                cfg.state_weights[3 * a + 2],
            );
            let mut s = self.x0.block(a);
            for m in 1..=mp {
                let k = m.min(mc) - 1;
                s = self.d * s + self.e * u[4 * k + a];
                self.traj[m - 1] = s;
            }

            let landing = a == AXIS_Z && ctx.landing_active;
            for m in 1..=mp {
                let s = self.traj[m - 1];
                let err = s - ctx.reference.at(m).block(a);
                let mut cost = w.dot(&err.component_mul(&err));
                let mut dl = 2.0 * w.component_mul(&err);

                if a != AXIS_HEADING && cfg.soft_weight > 0.0 {
                    for (idx, bound) in [(1, cfg.v_max), (2, cfg.a_max)] {
                        let over = s[idx].abs() - bound;
                        if over > 0.0 {
                            cost += cfg.soft_weight * over * over;
                            dl[idx] += 2.0 * cfg.soft_weight * over * s[idx].signum();
                        }
                    }
                }
                if landing {
                    let [b4, b5] = ctx.tilt_forecast[m - 1];
                    let tilt2 = b4 * b4 + b5 * b5;
                    let clearance = match ctx.deck_height {
                        Some(h) => s[0] - h,
                        None => err[0],
                    };
                    let (f, df) = sigmoid_gate_with_slope(clearance, cfg.h_d);
                    cost += cfg.alpha_l * f * tilt2;
                    dl[0] += cfg.alpha_l * df * tilt2;
                }
                if !cost.is_finite() {
                    return Err(Error::NonFinite(m));
                }
                total += cost;
                self.local[m - 1] = dl;
            }

            if let Some(g) = grad.as_deref_mut() {
                let mut lam = Vector3::zeros();
                for m in (1..=mp).rev() {
                    lam = self.local[m - 1] + d_t * lam;
                    let k = m.min(mc) - 1;
                    g[4 * k + a] += self.e.dot(&lam);
                }
            }

            let t = cfg.rate_weights[a];
            for k in 0..mc {
                let prev = if k == 0 { ctx.prev_input[a] } else { u[4 * (k - 1) + a] };
                let h = u[4 * k + a] - prev;
                total += t * h * h;
                if let Some(g) = grad.as_deref_mut() {
                    g[4 * k + a] += 2.0 * t * h;
                    if k > 0 {
                        g[4 * (k - 1) + a] -= 2.0 * t * h;
                    }
                }
            }
            if !total.is_finite() {
                return Err(Error::NonFinite(mp));
            }
        }
        Ok(total)
    }
}

/// Objective value and gradient for an input sequence of length `mc`.
pub fn objective(
    cfg: &MpcConfig,
    ctx: &LandingContext,
    x0: &UavState,
    u_seq: &[JerkInput],
) -> Result<Evaluation> {
    let mut obj = Objective::new(cfg, ctx, *x0)?;
    if u_seq.len() != cfg.mc {
        return Err(Error::LengthMismatch {
            expected: cfg.mc,
            got: u_seq.len(),
        });
    }
    let flat = flatten(u_seq);
    let mut g = vec![0.0; flat.len()];
    let value = obj.eval(&flat, Some(&mut g))?;
    Ok(Evaluation {
        value,
        gradient: unflatten(&g),
    })
}

pub(crate) fn flatten(u_seq: &[JerkInput]) -> Vec<f64> {
    u_seq.iter().flat_map(|u| u.iter().copied()).collect()
}

pub(crate) fn unflatten(flat: &[f64]) -> Vec<JerkInput> {
    flat.chunks_exact(4)
        .map(|c| JerkInput::new(c[0], c[1], c[2], c[3]))
        .collect()
}
