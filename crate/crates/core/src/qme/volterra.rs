//! Second-order solver for Volterra integro-differential equations
//! `dX/dt = I(t) − ∫₀^t K(t, s) X(s) ds` on a uniform grid.
//!
//! The memory integral uses the trapezoid rule and each step is one Heun
//! predictor–corrector pass.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Operations the solver needs from a state value.
pub trait VolterraState: Clone {
    fn zero_like(&self) -> Self;
    /// `self += alpha * x`
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn is_finite(&self) -> bool;
}

impl VolterraState for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        *self += alpha * x;
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl VolterraState for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        *self += x * alpha;
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl VolterraState for DMatrix<Complex64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        for (a, b) in self.iter_mut().zip(x.iter()) {
            *a += b * alpha;
        }
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Samples of a state on `t_m = m·dt`, contiguous from `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct History<S> {
    pub dt: f64,
    pub samples: Vec<S>,
}

impl<S> History<S> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at(&self, m: usize) -> Result<&S> {
        self.samples
            .get(m)
            .ok_or_else(|| Error::State(format!("history has {} samples, step {m} requested", self.len())))
    }
}

/// Integrates `n_steps` steps from `initial`.
///
/// `source(m)` returns `I(t_m)`; `kernel(m, k, x)` applies `K(t_m, t_k)` to
/// `x`. Passing `None` for the source means `I ≡ 0`.
pub fn volterra_solve<S, I, K>(
    initial: S,
    dt: f64,
    n_steps: usize,
    source: Option<I>,
    kernel: K,
) -> Result<History<S>>
where
    S: VolterraState,
    I: Fn(usize) -> Result<S>,
    K: Fn(usize, usize, &S) -> Result<S>,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation("dt", "time step must be positive"));
    }
    let zero = initial.zero_like();
    let src = |m: usize| -> Result<S> {
        match &source {
            Some(f) => f(m),
            None => Ok(zero.clone()),
        }
    };
    let check = |x: &S, m: usize| -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(format!("non-finite value at step {m}")))
        }
    };

    let mut samples = Vec::with_capacity(n_steps + 1);
    check(&initial, 0)?;
    samples.push(initial);
    // F_0 = I_0 (memory integral over an empty interval)
    let mut f_m = src(0)?;
    check(&f_m, 0)?;

    for m in 0..n_steps {
        let next = m + 1;
        // trapezoid sum over s_k, k = 0..=m, endpoint k = next added later
        let mut partial = zero.clone();
        for (k, xk) in samples.iter().enumerate() {
            let w = if k == 0 { 0.5 } else { 1.0 };
            partial.axpy(w, &kernel(next, k, xk)?);
        }
        let i_next = src(next)?;

        let mut predicted = samples[m].clone();
        predicted.axpy(dt, &f_m);

        let mut f_pred = i_next.clone();
        f_pred.axpy(-dt, &partial);
        f_pred.axpy(-0.5 * dt, &kernel(next, next, &predicted)?);

        let mut x_next = samples[m].clone();
        x_next.axpy(0.5 * dt, &f_m);
        x_next.axpy(0.5 * dt, &f_pred);
        check(&x_next, next)?;

        let mut f_next = i_next;
        f_next.axpy(-dt, &partial);
        f_next.axpy(-0.5 * dt, &kernel(next, next, &x_next)?);
        check(&f_next, next)?;

        samples.push(x_next);
        f_m = f_next;
    }
    Ok(History { dt, samples })
}

/// Trapezoid weights for `n + 1` equally spaced samples.
#[inline]
pub fn trapezoid_weight(k: usize, n: usize, dt: f64) -> f64 {
    if n == 0 {
        0.0
    } else if k == 0 || k == n {
        0.5 * dt
    } else {
        dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoSource = fn(usize) -> Result<f64>;

    fn exact(t: f64) -> f64 {
        let r = 3f64.sqrt() / 2.0;
        (-t / 2.0).exp() * ((r * t).cos() + (r * t).sin() / 3f64.sqrt())
    }

    fn max_error(dt: f64, t_end: f64) -> f64 {
        let n = (t_end / dt).round() as usize;
        let h = volterra_solve(1.0, dt, n, None::<NoSource>, |m, k, y: &f64| {
            Ok((-(m as f64 - k as f64) * dt).exp() * y)
        })
        .unwrap();
        h.samples
            .iter()
            .enumerate()
            .map(|(m, y)| (y - exact(m as f64 * dt)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_without_kernel() {
        let h = volterra_solve(2.5, 0.1, 50, None::<NoSource>, |_, _, _: &f64| Ok(0.0)).unwrap();
        assert!(h.samples.iter().all(|&y| y == 2.5));
    }

    #[test]
    fn exponential_kernel_benchmark() {
        let e = max_error(0.01, 10.0);
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn second_order_convergence() {
        let ratio = max_error(0.04, 10.0) / max_error(0.02, 10.0);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn source_only_integrates_exactly_for_linear() {
        // dy/dt = t → y = t²/2; Heun is exact for linear sources
        let dt = 0.1;
        let h = volterra_solve(0.0, dt, 20, Some(|m: usize| Ok(m as f64 * dt)), |_, _, _: &f64| Ok(0.0)).unwrap();
        for (m, y) in h.samples.iter().enumerate() {
            let t = m as f64 * dt;
            assert!((y - t * t / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nan_reports_step() {
        let err = volterra_solve(1.0, 0.1, 10, Some(|m: usize| Ok(if m == 4 { f64::NAN } else { 0.0 })), |_, _, _: &f64| {
            Ok(0.0)
        })
        .unwrap_err();
        match err {
            Error::Numeric(msg) => assert!(msg.contains("step 4") || msg.contains("step 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_state() {
        let x0 = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let h = volterra_solve(x0.clone(), 0.01, 100, None::<fn(usize) -> Result<DMatrix<Complex64>>>, |m, k, x: &DMatrix<Complex64>| {
            Ok(x * Complex64::new((-(m as f64 - k as f64) * 0.01).exp(), 0.0))
        })
        .unwrap();
        let y = exact(1.0);
        assert!((h.samples[100][(1, 0)].re - y).abs() < 1e-4);
    }
}
