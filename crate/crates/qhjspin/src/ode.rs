//! Adaptive embedded Runge-Kutta stepping with dense output.
//!
//! Dormand-Prince 5(4) supplies the step and its error estimate; accepted
//! steps are stored as (x, y, y') nodes and evaluated off-grid with cubic
//! Hermite interpolation. Callers that need interpolation at the same
//! accuracy as the integration must bound the step length; see
//! [`hermite_step_cap`].

use crate::error::{Error, Result};

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Error weights: b5 - b4 (the 7th stage is FSAL).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;

/// Step cap making cubic Hermite interpolation error on a wave of local
/// wavenumber `k` comparable to `rtol`: |y''''| h^4 / 384 <= rtol |y| with
/// |y''''| ~ k^4 |y|.
pub fn hermite_step_cap(rtol: f64, k: f64) -> f64 {
    (384.0 * rtol).powf(0.25) / k
}

/// One accepted node of a dense solution.
#[derive(Debug, Clone, Copy)]
pub struct Node<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// Outcome of a single trial step.
pub struct StepResult<const N: usize> {
    pub y_new: [f64; N],
    pub dy_new: [f64; N],
    pub error_norm: f64,
}

fn axpy<const N: usize>(y: &[f64; N], k: &[[f64; N]; 7], coeffs: &[f64], h: f64) -> [f64; N] {
    let mut out = *y;
    for (ki, ci) in k.iter().zip(coeffs) {
        if *ci != 0.0 {
            for n in 0..N {
                out[n] += h * ci * ki[n];
            }
        }
    }
    out
}

/// Attempt one Dormand-Prince step of size `h` from (x, y) with known
/// derivative `dy` (FSAL). Does not decide acceptance.
pub fn dopri5_step<const N: usize, F>(
    f: &F,
    x: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<StepResult<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = *dy;
    for i in 1..7 {
        let yi = axpy(y, &k, &A[i][..i], h);
        k[i] = f(x + C[i] * h, &yi)?;
    }
    let y_new = axpy(y, &k, &A[6], h); // row 7 of A = 5th-order weights
    let mut error_norm = 0.0f64;
    for n in 0..N {
        let mut err = 0.0;
        for i in 0..7 {
            err += E[i] * k[i][n];
        }
        err *= h;
        let scale = atol + rtol * y[n].abs().max(y_new[n].abs());
        let ratio = (err / scale).abs();
        if !ratio.is_finite() || !y_new[n].is_finite() {
            // Non-finite values must reject the step; f64::max would drop NaN.
            return Ok(StepResult { y_new, dy_new: k[6], error_norm: f64::INFINITY });
        }
        error_norm = error_norm.max(ratio);
    }
    Ok(StepResult { y_new, dy_new: k[6], error_norm })
}

/// Integration controls for [`integrate_dense`].
pub struct IntegrateOptions<'a> {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on |h| as a function of x (interpolation-accuracy cap).
    pub max_step: &'a dyn Fn(f64) -> f64,
}

/// Integrate from `x0` to `x_end` (either direction), returning every
/// accepted node including both endpoints. The final step is shortened to
/// land exactly on `x_end`.
pub fn integrate_dense<const N: usize, F>(
    f: &F,
    x0: f64,
    x_end: f64,
    y0: [f64; N],
    opts: &IntegrateOptions,
) -> Result<Vec<Node<N>>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut dy = f(x, &y)?;
    let mut nodes = vec![Node { x, y, dy }];
    if x0 == x_end {
        return Ok(nodes);
    }

    let span = (x_end - x0).abs();
    let mut h = dir * ((opts.max_step)(x0)).min(span).max(span * 1e-12);
    let mut rejections_in_a_row = 0usize;

    for _ in 0..opts.max_steps {
        let cap = (opts.max_step)(x);
        if h.abs() > cap {
            h = dir * cap;
        }
        let mut last = false;
        if (x + h - x_end) * dir >= 0.0 {
            h = x_end - x;
            last = true;
        }
        if h.abs() < f64::EPSILON * (x.abs() + 1.0) {
            return Err(Error::Integration { x, reason: "step size underflow".into() });
        }

        let step = dopri5_step(f, x, &y, &dy, h, opts.rtol, opts.atol)?;
        if step.error_norm <= 1.0 {
            x += h;
            y = step.y_new;
            dy = step.dy_new;
            nodes.push(Node { x, y, dy });
            rejections_in_a_row = 0;
            if last {
                return Ok(nodes);
            }
        } else {
            rejections_in_a_row += 1;
            if rejections_in_a_row > 60 {
                return Err(Error::Integration {
                    x,
                    reason: format!("60 consecutive rejected steps (error norm {})", step.error_norm),
                });
            }
        }
        let scale = if step.error_norm > 0.0 {
            (SAFETY * step.error_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        } else {
            MAX_SCALE
        };
        h *= scale;
    }
    Err(Error::Integration { x, reason: format!("exceeded {} steps", opts.max_steps) })
}

/// Cubic Hermite value on [x0, x1] given endpoint values and derivatives.
pub fn hermite<const N: usize>(
    x: f64,
    x0: f64,
    y0: &[f64; N],
    dy0: &[f64; N],
    x1: f64,
    y1: &[f64; N],
    dy1: &[f64; N],
) -> [f64; N] {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = [0.0; N];
    for n in 0..N {
        out[n] = h00 * y0[n] + h * h10 * dy0[n] + h01 * y1[n] + h * h11 * dy1[n];
    }
    out
}

/// Ascending mesh of accepted nodes with Hermite evaluation between them.
#[derive(Debug, Clone)]
pub struct DenseMesh<const N: usize> {
    nodes: Vec<Node<N>>,
}

impl<const N: usize> DenseMesh<N> {
    /// `nodes` must be sorted by strictly increasing x.
    pub fn new(nodes: Vec<Node<N>>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0].x < w[1].x));
        Self { nodes }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0].x, self.nodes[self.nodes.len() - 1].x)
    }

    pub fn nodes(&self) -> &[Node<N>] {
        &self.nodes
    }

    /// Index of the segment containing x.
    pub fn segment_index(&self, x: f64) -> Result<usize> {
        let (min, max) = self.domain();
        if x < min || x > max {
            return Err(Error::OutOfDomain { x, min, max });
        }
        let i = self
            .nodes
            .partition_point(|n| n.x <= x)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        Ok(i)
    }

    pub fn eval(&self, x: f64) -> Result<[f64; N]> {
        let i = self.segment_index(x)?;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        Ok(hermite(x, a.x, &a.y, &a.dy, b.x, &b.y, &b.dy))
    }
}
