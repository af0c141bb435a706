//! Discrete triple-integrator model of the vehicle with jerk input.
//!
//! State ordering is fixed: `(x, vx, ax, y, vy, ay, z, vz, az, eta, eta_d, eta_dd)`.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3, Vector4};

use crate::{Error, Result};

/// Default prediction step in seconds.
pub const DEFAULT_DT_PRED: f64 = 0.01;
/// Default symmetric jerk bounds `(x, y, z, heading)`.
pub const DEFAULT_JERK_LIMIT: [f64; 4] = [20.0, 20.0, 20.0, 10.0];

pub const AXIS_X: usize = 0;
pub const AXIS_Y: usize = 1;
pub const AXIS_Z: usize = 2;
pub const AXIS_HEADING: usize = 3;

pub type StateVector = SVector<f64, 12>;

/// 12-dimensional vehicle state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavState(pub StateVector);

impl UavState {
    pub fn zeros() -> Self {
        Self(StateVector::zeros())
    }

    /// State at rest at `(x, y, z)` with heading `eta`.
    pub fn at_rest(x: f64, y: f64, z: f64, eta: f64) -> Self {
        let mut s = StateVector::zeros();
        s[0] = x;
        s[3] = y;
        s[6] = z;
        s[9] = eta;
        Self(s)
    }

    pub fn pos(&self, axis: usize) -> f64 {
        self.0[3 * axis]
    }

    pub fn vel(&self, axis: usize) -> f64 {
        self.0[3 * axis + 1]
    }

    pub fn acc(&self, axis: usize) -> f64 {
        self.0[3 * axis + 2]
    }

    pub fn set(&mut self, axis: usize, pos: f64, vel: f64, acc: f64) {
        self.0[3 * axis] = pos;
        self.0[3 * axis + 1] = vel;
        self.0[3 * axis + 2] = acc;
    }

    pub fn block(&self, axis: usize) -> Vector3<f64> {
        Vector3::new(self.pos(axis), self.vel(axis), self.acc(axis))
    }

    /// `(vx, vy, vz, eta_d)`.
    pub fn velocities(&self) -> [f64; 4] {
        [self.vel(0), self.vel(1), self.vel(2), self.vel(3)]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Jerk input `(x, y, z, heading)`.
pub type JerkInput = Vector4<f64>;

/// Discrete model `x+ = D x + E u` with `D = I4 (x) D'`, `E = I4 (x) E'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    pub d: SMatrix<f64, 12, 12>,
    pub e: SMatrix<f64, 12, 4>,
    pub d_block: Matrix3<f64>,
    pub e_block: Vector3<f64>,
    pub dt: f64,
}

impl ModelMatrices {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("prediction step {dt}")));
        }
        let d_block = Matrix3::new(
            1.0, dt, dt * dt / 2.0, //
            0.0, 1.0, dt, //
            0.0, 0.0, 1.0,
        );
        let e_block = Vector3::new(dt * dt * dt / 6.0, dt * dt / 2.0, dt);
        let eye4 = SMatrix::<f64, 4, 4>::identity();
        let d = eye4.kronecker(&d_block);
        let e = eye4.kronecker(&e_block);
        Ok(Self {
            d,
            e,
            d_block,
            e_block,
            dt,
        })
    }

    pub fn step(&self, s: &UavState, u: &JerkInput) -> UavState {
        UavState(self.d * s.0 + self.e * u)
    }

    /// States `1..=mp` under `inputs` (length `mc`), holding the last input
    /// beyond the control horizon.
    pub fn rollout(
        &self,
        s0: &UavState,
        inputs: &[JerkInput],
        mp: usize,
        mc: usize,
    ) -> Result<Vec<UavState>> {
        if inputs.len() != mc {
            return Err(Error::LengthMismatch {
                expected: mc,
                got: inputs.len(),
            });
        }
        if mc == 0 || mc > mp {
            return Err(Error::InvalidArgument(format!(
                "control horizon {mc} must lie in 1..={mp}"
            )));
        }
        let mut out = Vec::with_capacity(mp);
        let mut s = *s0;
        for m in 1..=mp {
            s = self.step(&s, &inputs[m.min(mc) - 1]);
            out.push(s);
        }
        Ok(out)
    }
}
