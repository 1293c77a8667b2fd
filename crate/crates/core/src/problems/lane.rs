//! Two-car lane-merging game with kinematic bicycle dynamics.
//!
//! The minimiser controls the merging car (acceleration and steering, laid
//! out as `[a_0..a_{P-1}, delta_0..delta_{P-1}]`); the maximiser controls the
//! acceleration profile of the car already in the lane.

use std::sync::Arc;

use crate::geometry::JointPoint;

use super::{FeasibleSet, MinMaxProblem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl CarState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { x, y, theta, v }
    }

    fn axpy(&self, h: f64, d: &CarState) -> CarState {
        CarState {
            x: self.x + h * d.x,
            y: self.y + h * d.y,
            theta: self.theta + h * d.theta,
            v: self.v + h * d.v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CarInput {
    pub a: f64,
    pub delta: f64,
}

impl CarInput {
    pub fn new(a: f64, delta: f64) -> Self {
        Self { a, delta }
    }

    fn midpoint(&self, other: &CarInput) -> CarInput {
        CarInput {
            a: 0.5 * (self.a + other.a),
            delta: 0.5 * (self.delta + other.delta),
        }
    }
}

/// `[v cos(theta), v sin(theta), v tan(delta) / L, a]`.
fn bicycle(s: &CarState, u: &CarInput, wheelbase: f64) -> CarState {
    CarState {
        x: s.v * s.theta.cos(),
        y: s.v * s.theta.sin(),
        theta: s.v * u.delta.tan() / wheelbase,
        v: u.a,
    }
}

/// One classic RK4 step; the input is linear over the step, so the
/// half-step stages use the midpoint of the two control values.
pub fn rk4_step(state: &CarState, inputs: (CarInput, CarInput), dt: f64, wheelbase: f64) -> CarState {
    let (u0, u1) = inputs;
    let um = u0.midpoint(&u1);
    let k1 = bicycle(state, &u0, wheelbase);
    let k2 = bicycle(&state.axpy(dt / 2.0, &k1), &um, wheelbase);
    let k3 = bicycle(&state.axpy(dt / 2.0, &k2), &um, wheelbase);
    let k4 = bicycle(&state.axpy(dt, &k3), &u1, wheelbase);
    CarState {
        x: state.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        y: state.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        theta: state.theta + dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        v: state.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneMergingParams {
    /// Number of control points `P`.
    pub control_points: usize,
    pub dt: f64,
    pub wheelbase: f64,
    pub y_target: f64,
    pub accel_bounds: (f64, f64),
    pub steer_bounds: (f64, f64),
    pub car1_start: CarState,
    pub car2_start: CarState,
}

impl Default for LaneMergingParams {
    fn default() -> Self {
        Self {
            control_points: 50,
            dt: 0.4,
            wheelbase: 2.5,
            y_target: 5.0,
            accel_bounds: (-3.0, 3.0),
            steer_bounds: (-0.5, 0.5),
            car1_start: CarState::new(0.0, 5.0, 0.0, 2.0),
            car2_start: CarState::new(5.0, 0.0, 0.0, 3.0),
        }
    }
}

impl LaneMergingParams {
    /// Twenty control points one second apart.
    pub fn mvi_study() -> Self {
        Self {
            control_points: 20,
            dt: 1.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneMerging {
    pub params: LaneMergingParams,
}

impl LaneMerging {
    pub fn new(params: LaneMergingParams) -> Result<Self, ProblemError> {
        let p = &params;
        if p.control_points < 2 || !(p.dt > 0.0) || !(p.wheelbase > 0.0) {
            return Err(ProblemError::InvalidParameter(
                "need at least two control points, dt > 0 and wheelbase > 0".into(),
            ));
        }
        if !(p.accel_bounds.0 <= p.accel_bounds.1 && p.steer_bounds.0 <= p.steer_bounds.1) {
            return Err(ProblemError::InvalidParameter("input bounds are inverted".into()));
        }
        Ok(Self { params })
    }

    /// Minimiser dimension `2P`.
    pub fn n(&self) -> usize {
        2 * self.params.control_points
    }

    /// Maximiser dimension `P`.
    pub fn m(&self) -> usize {
        self.params.control_points
    }

    /// State trajectories `s_{1,k}, s_{2,k}` for `k = 0..P`.
    pub fn rollout(&self, z: &JointPoint) -> (Vec<CarState>, Vec<CarState>) {
        let p = self.params.control_points;
        let u1 = |k: usize| CarInput::new(z.y[k], 0.0);
        let u2 = |k: usize| CarInput::new(z.x[k], z.x[p + k]);
        let mut s1 = vec![self.params.car1_start];
        let mut s2 = vec![self.params.car2_start];
        for k in 0..p - 1 {
            s1.push(rk4_step(&s1[k], (u1(k), u1(k + 1)), self.params.dt, self.params.wheelbase));
            s2.push(rk4_step(&s2[k], (u2(k), u2(k + 1)), self.params.dt, self.params.wheelbase));
        }
        (s1, s2)
    }

    /// Per-stage `(Gamma_1, Gamma_2)`.
    pub fn stage_costs(&self, s1: &CarState, s2: &CarState) -> (f64, f64) {
        let proximity = (-((s1.x - s2.x).powi(2) + (s1.y - s2.y).powi(2))).exp();
        let g1 = 0.5 * s1.v * s1.v - 2.0 * proximity;
        let g2 = proximity + 10.0 * (s2.y - self.params.y_target).powi(2);
        (g1, g2)
    }

    /// Summed `(Gamma_1, Gamma_2)` over the horizon.
    pub fn costs(&self, z: &JointPoint) -> (f64, f64) {
        let (s1, s2) = self.rollout(z);
        s1.iter()
            .zip(&s2)
            .map(|(a, b)| self.stage_costs(a, b))
            .fold((0.0, 0.0), |acc, c| (acc.0 + c.0, acc.1 + c.1))
    }

    pub fn objective(&self, z: &JointPoint) -> f64 {
        let (g1, g2) = self.costs(z);
        g1 + g2
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        let p = self.params.control_points;
        let (amin, amax) = self.params.accel_bounds;
        let (dmin, dmax) = self.params.steer_bounds;
        let mut lower = vec![amin; p];
        lower.extend(std::iter::repeat_n(dmin, p));
        lower.extend(std::iter::repeat_n(amin, p));
        let mut upper = vec![amax; p];
        upper.extend(std::iter::repeat_n(dmax, p));
        upper.extend(std::iter::repeat_n(amax, p));
        FeasibleSet::Box { lower, upper }
    }

    /// Per-coordinate sampling variances: `accel` for accelerations,
    /// `steer` for steering angles, in the problem's coordinate order.
    pub fn input_variances(&self, accel: f64, steer: f64) -> Vec<f64> {
        let p = self.params.control_points;
        let mut v = vec![accel; p];
        v.extend(std::iter::repeat_n(steer, p));
        v.extend(std::iter::repeat_n(accel, p));
        v
    }

    pub fn problem(self: &Arc<Self>) -> MinMaxProblem {
        let me = self.clone();
        MinMaxProblem::new("lane_merging", self.n(), self.m(), move |z: &JointPoint| me.objective(z))
            .with_set(self.feasible_set())
            .expect("bounds validated at construction")
    }
}
