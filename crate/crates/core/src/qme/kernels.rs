//! Second-order memory kernels for linear exciton-bath coupling.

use num_complex::Complex64;

use crate::bath::{CorrelationTable, CouplingChannel};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};

/// Coupling channels, tabulated correlations and a cache of
/// interaction-picture operators `Ã_a(m·dt) = e^{i h_e m dt} A_a e^{−i h_e m dt}`.
#[derive(Debug, Clone)]
pub struct KernelContext {
    energies: Vec<f64>,
    channels: Vec<CouplingChannel>,
    table: CorrelationTable,
    /// `cache[m][a]`
    cache: Vec<Vec<CMatrix>>,
}

impl KernelContext {
    /// `energies` are exciton energies in rad/fs (h_e is diagonal in this
    /// basis). The operator cache covers steps `0..=n_op_steps`; the
    /// correlation table covers lags up to `n_lags`.
    pub fn new(
        energies: &[f64],
        channels: Vec<CouplingChannel>,
        frequencies: &[f64],
        beta: f64,
        dt: f64,
        n_op_steps: usize,
        n_lags: usize,
    ) -> Result<Self> {
        let n = energies.len();
        for (a, ch) in channels.iter().enumerate() {
            if ch.op.shape() != (n, n) {
                return Err(Error::validation(
                    format!("bath.channels[{a}].op"),
                    format!("expected {n}x{n}, got {:?}", ch.op.shape()),
                ));
            }
        }
        let table = CorrelationTable::build(&channels, frequencies, beta, dt, n_lags)?;
        let mut ctx = KernelContext {
            energies: energies.to_vec(),
            channels,
            table,
            cache: Vec::new(),
        };
        ctx.cache = (0..=n_op_steps)
            .map(|m| {
                let t = m as f64 * dt;
                (0..ctx.channels.len()).map(|a| ctx.a_tilde_at(a, t)).collect()
            })
            .collect();
        Ok(ctx)
    }

    pub fn dt(&self) -> f64 {
        self.table.dt()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn table(&self) -> &CorrelationTable {
        &self.table
    }

    /// `Ã_a(t)` evaluated directly.
    pub fn a_tilde_at(&self, a: usize, t: f64) -> CMatrix {
        let op = &self.channels[a].op;
        let e = &self.energies;
        CMatrix::from_fn(op.nrows(), op.ncols(), |j, k| {
            op[(j, k)] * Complex64::from_polar(1.0, (e[j] - e[k]) * t)
        })
    }

    /// Cached `Ã_a(m·dt)`.
    #[inline]
    pub fn a_tilde(&self, a: usize, m: usize) -> Result<&CMatrix> {
        self.cache
            .get(m)
            .map(|row| &row[a])
            .ok_or_else(|| Error::State(format!("operator cache holds {} steps, step {m} requested", self.cache.len())))
    }

    /// `C_ab(m·dt)`.
    #[inline]
    pub fn corr(&self, a: usize, b: usize, lag: i64) -> Result<Complex64> {
        self.table.lag(a, b, lag)
    }

    /// `Σ_b C_ab(lag_b) Ã_b(s)` for one `a`, the combination every kernel uses.
    fn weighted_sum(&self, a: usize, lag: i64, s: usize, transpose: bool) -> Result<CMatrix> {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for b in 0..self.n_channels() {
            let c = if transpose { self.corr(b, a, lag)? } else { self.corr(a, b, lag)? };
            if c != ZERO {
                out += self.a_tilde(b, s)? * c;
            }
        }
        Ok(out)
    }

    /// `K_L(t, s) X = Σ_ab C_ab(t − s) Ã_a(t) Ã_b(s) X` on grid steps.
    pub fn kernel_left(&self, t: usize, s: usize, x: &CMatrix) -> Result<CMatrix> {
        let lag = t as i64 - s as i64;
        let mut acc = CMatrix::zeros(self.dim(), self.dim());
        for a in 0..self.n_channels() {
            acc += self.a_tilde(a, t)? * self.weighted_sum(a, lag, s, false)?;
        }
        Ok(acc * x)
    }

    /// `X K_R(t, s) = X Σ_ab C_ab(s − t) Ã_a(s) Ã_b(t)` on grid steps.
    pub fn kernel_right(&self, t: usize, s: usize, x: &CMatrix) -> Result<CMatrix> {
        let lag = s as i64 - t as i64;
        let mut acc = CMatrix::zeros(self.dim(), self.dim());
        // Σ_ab C_ab Ã_a(s) Ã_b(t) = Σ_b [Σ_a C_ab Ã_a(s)] Ã_b(t)
        for b in 0..self.n_channels() {
            acc += self.weighted_sum(b, lag, s, true)? * self.a_tilde(b, t)?;
        }
        Ok(x * acc)
    }

    /// Double-commutator kernel
    /// `Σ_ab C_ab(t−s)[Ã_a(t)Ã_b(s)X − Ã_b(s)XÃ_a(t)] + C_ab(t−s)*[XÃ_b(s)Ã_a(t) − Ã_a(t)XÃ_b(s)]`.
    pub fn dissipator(&self, t: usize, s: usize, x: &CMatrix) -> Result<CMatrix> {
        let lag = t as i64 - s as i64;
        let n = self.dim();
        let mut acc = CMatrix::zeros(n, n);
        for a in 0..self.n_channels() {
            let at = self.a_tilde(a, t)?;
            let mut w = CMatrix::zeros(n, n);
            let mut wc = CMatrix::zeros(n, n);
            for b in 0..self.n_channels() {
                let c = self.corr(a, b, lag)?;
                if c != ZERO {
                    let bs = self.a_tilde(b, s)?;
                    w += bs * c;
                    wc += bs * c.conj();
                }
            }
            // C[A_a W X − W X A_a] + C*[X W* A_a − A_a X W*] with W = Σ_b C_ab Ã_b(s)
            let wx = &w * x;
            let xwc = x * &wc;
            acc += at * &wx - &wx * at + &xwc * at - at * &xwc;
        }
        Ok(acc)
    }

    /// `K_L` at arbitrary times: operators evaluated directly, correlations
    /// interpolated from the table (range error outside it).
    pub fn kernel_left_at(&self, t: f64, s: f64, x: &CMatrix) -> Result<CMatrix> {
        let n = self.dim();
        let mut acc = CMatrix::zeros(n, n);
        for a in 0..self.n_channels() {
            let at = self.a_tilde_at(a, t);
            for b in 0..self.n_channels() {
                let c = self.table.at(a, b, t - s)?;
                acc += &at * self.a_tilde_at(b, s) * c;
            }
        }
        Ok(acc * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, max_abs_diff};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn random_ctx(seed: u64, n: usize, na: usize, scale: f64) -> KernelContext {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let energies: Vec<f64> = (0..n).map(|_| rng.random_range(-0.05..0.05)).collect();
        let freqs: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..0.04)).collect();
        let channels = (0..na)
            .map(|_| CouplingChannel {
                op: hermitian(&mut rng, n),
                weights: (0..3).map(|_| scale * rng.random_range(-1.0..1.0)).collect(),
            })
            .collect();
        KernelContext::new(&energies, channels, &freqs, 40.0, 1.0, 50, 100).unwrap()
    }

    #[test]
    fn zero_coupling_gives_zero_maps() {
        let ctx = random_ctx(1, 3, 2, 0.0);
        let x = CMatrix::identity(3, 3);
        assert_eq!(max_abs(&ctx.kernel_left(10, 4, &x).unwrap()), 0.0);
        assert_eq!(max_abs(&ctx.kernel_right(10, 4, &x).unwrap()), 0.0);
        assert_eq!(max_abs(&ctx.dissipator(10, 4, &x).unwrap()), 0.0);
    }

    #[test]
    fn equal_times_single_channel() {
        let ctx = random_ctx(2, 3, 1, 1.0);
        let x = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        let c0 = ctx.corr(0, 0, 0).unwrap();
        assert_eq!(c0.im, 0.0);
        let a = ctx.a_tilde(0, 7).unwrap();
        let expect = a * a * &x * c0;
        assert!(max_abs_diff(&ctx.kernel_left(7, 7, &x).unwrap(), &expect) < 1e-14);
    }

    #[test]
    fn right_kernel_is_adjoint_of_left_for_real_operator() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let op = CMatrix::from_fn(3, 3, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0));
        let op = (&op + op.transpose()) * Complex64::new(0.5, 0.0);
        let ctx = KernelContext::new(
            &[0.0, 0.01, 0.03],
            vec![CouplingChannel { op, weights: vec![0.5, 0.2] }],
            &[0.02, 0.03],
            30.0,
            1.0,
            40,
            80,
        )
        .unwrap();
        let id = CMatrix::identity(3, 3);
        for (t, s) in [(10, 3), (25, 25), (40, 0)] {
            let l = ctx.kernel_left(t, s, &id).unwrap();
            let r = ctx.kernel_right(t, s, &id).unwrap();
            assert!(max_abs_diff(&r, &l.adjoint()) < 1e-14);
        }
    }

    #[test]
    fn identity_gives_commutators() {
        let ctx = random_ctx(3, 2, 1, 1.0);
        let id = CMatrix::identity(2, 2);
        let (t, s) = (12, 5);
        let c = ctx.corr(0, 0, (t - s) as i64).unwrap();
        let at = ctx.a_tilde(0, t).unwrap();
        let as_ = ctx.a_tilde(0, s).unwrap();
        let expect = (at * as_ - as_ * at) * c + (as_ * at - at * as_) * c.conj();
        let got = ctx.dissipator(t, s, &id).unwrap();
        assert!(max_abs_diff(&got, &expect) < 1e-14);
        assert!(got.trace().norm() < 1e-14);
    }

    #[test]
    fn off_grid_kernel_matches_grid_and_range_checked() {
        let ctx = random_ctx(4, 3, 2, 1.0);
        let x = CMatrix::identity(3, 3);
        let on = ctx.kernel_left(9, 2, &x).unwrap();
        let at = ctx.kernel_left_at(9.0, 2.0, &x).unwrap();
        assert!(max_abs_diff(&on, &at) < 1e-14);
        assert!(matches!(ctx.kernel_left_at(150.0, 0.5, &x), Err(Error::Range { .. })));
    }

    proptest! {
        #[test]
        fn dissipator_is_traceless(seed in 0u64..500, t in 0usize..50, s in 0usize..50) {
            let ctx = random_ctx(seed, 3, 2, 1.0);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 7);
            let x = CMatrix::from_fn(3, 3, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let (t, s) = if t >= s { (t, s) } else { (s, t) };
            let d = ctx.dissipator(t, s, &x).unwrap();
            prop_assert!(d.trace().norm() < 1e-12);
        }

        #[test]
        fn interaction_picture_hermitian(seed in 0u64..500, m in 0usize..50) {
            let ctx = random_ctx(seed, 3, 2, 1.0);
            for a in 0..2 {
                let at = ctx.a_tilde(a, m).unwrap();
                prop_assert!(max_abs_diff(at, &at.adjoint()) < 1e-12);
            }
            prop_assert!(max_abs_diff(ctx.a_tilde(0, 0).unwrap(), &ctx.channels[0].op) == 0.0);
        }
    }
}
