//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use deckland::mpc::{LandingContext, MpcConfig};
use deckland::uav_model::{JerkInput, UavState};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Deck height used by the objective instances.
pub const DECK: f64 = 1.0;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs())) * a.nrows() as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(s);
    let n = a.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Position, velocity and acceleration after `t` seconds of constant jerk.
pub fn cubic(p: f64, v: f64, a: f64, j: f64, t: f64) -> [f64; 3] {
    [
        p + v * t + a * t * t / 2.0 + j * t * t * t / 6.0,
        v + a * t + j * t * t / 2.0,
        a + j * t,
    ]
}

/// A random objective instance: context, initial state and a flat input vector.
pub fn random_instance(rng: &mut ChaCha8Rng, cfg: &MpcConfig) -> (LandingContext, UavState, Vec<f64>) {
    let mut x0 = UavState::zeros();
    for a in 0..4 {
        x0.set(a, rng.gen_range(-1.0..1.0), rng.gen_range(-4.5..4.5), rng.gen_range(-3.5..3.5));
    }
    x0.0[6] = DECK + rng.gen_range(-0.1..2.0);
    let sp = UavState::at_rest(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), DECK - 0.3, 0.0);
    let phase: f64 = rng.gen_range(0.0..2.0 * PI);
    let forecast: Vec<[f64; 2]> = (1..=cfg.mp)
        .map(|m| {
            let t = m as f64 * cfg.dt_pred;
            [0.1 * (2.0 * PI * 0.3 * t).cos(), 0.3 * (2.0 * PI * 0.2 * t + phase).sin()]
        })
        .collect();
    let mut ctx = if rng.gen_bool(0.8) {
        LandingContext::landing(sp, forecast).with_deck_height(DECK)
    } else {
        LandingContext::hover(sp)
    };
    ctx.prev_input = JerkInput::new(rng.gen_range(-5.0..5.0), 0.0, rng.gen_range(-5.0..5.0), 0.0);
    let lim = cfg.jerk_limit;
    let u: Vec<f64> = (0..4 * cfg.mc).map(|i| rng.gen_range(-lim[i % 4]..lim[i % 4])).collect();
    (ctx, x0, u)
}
