//! Constant-velocity Kalman filter over box observations, in the SORT state
//! parameterization (cx, cy, s, r, ċx, ċy, ṡ) with aspect ratio r constant.

use nalgebra::{SMatrix, SVector};

use crate::tracking::BBox;

type State = SVector<f64, 7>;
type Cov = SMatrix<f64, 7, 7>;
type Obs = SVector<f64, 4>;

/// Noise and initial-uncertainty constants. Defaults follow the widely used
/// SORT values; zeroing the noises turns the filter into an exact
/// constant-velocity observer, which the tests rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanParams {
    /// Measurement noise diagonal over (cx, cy, s, r).
    pub measurement_noise: [f64; 4],
    /// Process noise diagonal over the full state.
    pub process_noise: [f64; 7],
    /// Initial variance of the observed components.
    pub initial_position_variance: f64,
    /// Initial variance of (ċx, ċy, ṡ).
    pub initial_velocity_variance: [f64; 3],
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams {
            measurement_noise: [1.0, 1.0, 10.0, 10.0],
            process_noise: [1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4],
            initial_position_variance: 10.0,
            initial_velocity_variance: [1e4, 1e4, 1e5],
        }
    }
}

/// Box state estimate: mean and covariance of the 7-dimensional state.
#[derive(Debug, Clone)]
pub struct KalmanBoxState {
    x: State,
    p: Cov,
    q: Cov,
    r: SMatrix<f64, 4, 4>,
}

fn to_observation(b: &BBox) -> Obs {
    let w = b.x2 - b.x1;
    let h = b.y2 - b.y1;
    Obs::new(b.x1 + w / 2.0, b.y1 + h / 2.0, w * h, w / h)
}

fn to_bbox(x: &State) -> BBox {
    let s = x[2].max(1e-9);
    let r = x[3].max(1e-9);
    let w = (s * r).sqrt();
    let h = s / w;
    BBox {
        x1: x[0] - w / 2.0,
        y1: x[1] - h / 2.0,
        x2: x[0] + w / 2.0,
        y2: x[1] + h / 2.0,
    }
}

fn transition() -> Cov {
    let mut f = Cov::identity();
    f[(0, 4)] = 1.0;
    f[(1, 5)] = 1.0;
    f[(2, 6)] = 1.0;
    f
}

fn observation_matrix() -> SMatrix<f64, 4, 7> {
    let mut h = SMatrix::<f64, 4, 7>::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

impl KalmanBoxState {
    /// Initialize from the first observation with zero velocity.
    pub fn new(bbox: &BBox, params: &KalmanParams) -> Self {
        let z = to_observation(bbox);
        let mut x = State::zeros();
        for i in 0..4 {
            x[i] = z[i];
        }
        let mut p = Cov::zeros();
        for i in 0..4 {
            p[(i, i)] = params.initial_position_variance;
        }
        for i in 0..3 {
            p[(i + 4, i + 4)] = params.initial_velocity_variance[i];
        }
        let mut q = Cov::zeros();
        for i in 0..7 {
            q[(i, i)] = params.process_noise[i];
        }
        let mut r = SMatrix::<f64, 4, 4>::zeros();
        for i in 0..4 {
            r[(i, i)] = params.measurement_noise[i];
        }
        KalmanBoxState { x, p, q, r }
    }

    /// Advance one frame under the constant-velocity model and return the
    /// predicted box. A prediction that would drive the area non-positive
    /// resets the area velocity first.
    pub fn predict(&mut self) -> BBox {
        if self.x[2] + self.x[6] <= 0.0 {
            self.x[6] = 0.0;
        }
        let f = transition();
        self.x = f * self.x;
        self.p = f * self.p * f.transpose() + self.q;
        to_bbox(&self.x)
    }

    /// Standard measurement update on (cx, cy, s, r). The tiny diagonal
    /// floor keeps the innovation covariance invertible when both noise
    /// matrices are zeroed (the exact-observer configuration).
    pub fn update(&mut self, bbox: &BBox) {
        let h = observation_matrix();
        let z = to_observation(bbox);
        let innovation = z - h * self.x;
        let s = h * self.p * h.transpose() + self.r + SMatrix::<f64, 4, 4>::identity() * 1e-12;
        let s_inv = s.try_inverse().expect("innovation covariance invertible");
        let gain = self.p * h.transpose() * s_inv;
        self.x += gain * innovation;
        self.p = (Cov::identity() - gain * h) * self.p;
    }

    pub fn bbox(&self) -> BBox {
        to_bbox(&self.x)
    }

    pub fn covariance_trace(&self) -> f64 {
        self.p.trace()
    }

    /// (ċx, ċy) of the current estimate; used by tests.
    pub fn velocity(&self) -> (f64, f64) {
        (self.x[4], self.x[5])
    }
}
