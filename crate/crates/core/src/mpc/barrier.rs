//! Sigmoid landing barrier.
//!
//! `f(z)` is a logistic bump: above 0.16 m it rises from 0 towards 1 as the
//! height error drops below `h_d`, below 0.16 m it falls back to 0 around
//! 0.1 m. Multiplied by the squared tilt it forms the landing cost `g`.

/// Height error separating the two logistic branches.
pub const BRANCH_HEIGHT: f64 = 0.16;
const UPPER_WIDTH: f64 = 0.15;
const LOWER_CENTER: f64 = 0.1;
const LOWER_WIDTH: f64 = 0.01;

fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Barrier gate `f(z_tilde)`.
pub fn sigmoid_gate(z_tilde: f64, h_d: f64) -> f64 {
    sigmoid_gate_with_slope(z_tilde, h_d).0
}

/// `(f, df/dz)` at `z_tilde`.
pub fn sigmoid_gate_with_slope(z_tilde: f64, h_d: f64) -> (f64, f64) {
    let (s, ds) = if z_tilde >= BRANCH_HEIGHT {
        (-(z_tilde - h_d) / UPPER_WIDTH, -1.0 / UPPER_WIDTH)
    } else {
        ((z_tilde - LOWER_CENTER) / LOWER_WIDTH, 1.0 / LOWER_WIDTH)
    };
    let f = logistic(s);
    (f, f * (1.0 - f) * ds)
}

/// Landing cost `g = f(z_tilde) (b4^2 + b5^2)`.
pub fn landing_cost(z_tilde: f64, b4: f64, b5: f64, h_d: f64) -> f64 {
    sigmoid_gate(z_tilde, h_d) * (b4 * b4 + b5 * b5)
}
