//! Brute-force evaluation of the response functions in a truncated
//! exciton ⊗ oscillator space.
//!
//! The full Hamiltonian `h_ex = h_e + H_b + Σ_a A_a ⊗ B_a` is diagonalized
//! once; the four response functions are then evaluated literally as traces
//! of operator products with the thermal bath state, truncated to `cutoff`
//! levels per mode and renormalized.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::{diagonal_to_channels, BathSpec, CouplingChannel};
use crate::error::{Error, Result};
use crate::exciton::DipoleProjection;
use crate::grid::{Channel, GridSpec, Provenance, ResponseGrid};
use crate::linalg::{CMatrix, CVector, ZERO};

/// Truncation and size limits of the oracle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleSpec {
    /// Number of Fock levels kept per mode.
    pub cutoff: usize,
    /// Largest allowed dimension of the exciton ⊗ bath space.
    pub max_dim: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            cutoff: 20,
            max_dim: 4096,
        }
    }
}

/// Bytes of cached bath-space propagator blocks allowed during grid
/// evaluation.
const BLOCK_CACHE_CAP: usize = 3 << 30;

#[derive(Debug, Clone)]
pub struct FockOracle {
    n_exc: usize,
    bath_dim: usize,
    /// Bath energies `Σ_n ω_n k_n` per number state.
    bath_energies: Vec<f64>,
    /// Truncated, renormalized thermal populations.
    rho: Vec<f64>,
    /// Per-channel bath operators `B_a` (dense, bath space).
    bath_ops: Vec<DMatrix<f64>>,
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors; row index `j·M + m`.
    eigenvectors: DMatrix<f64>,
    dipoles: [CVector; 4],
}

/// `e^{−i h s}` sandwiched between two exciton-space vectors, as a key:
/// (bra pulse, ket pulse, s).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Block {
    bra: usize,
    ket: usize,
    s: f64,
}

impl Block {
    fn key(&self) -> (usize, usize, u64) {
        (self.bra, self.ket, self.s.to_bits())
    }
}

impl FockOracle {
    /// `energies` are exciton energies in rad/fs; channel operators are in
    /// the exciton basis and must be real symmetric.
    pub fn new(
        energies: &[f64],
        channels: &[CouplingChannel],
        frequencies: &[f64],
        beta: f64,
        dipoles: &DipoleProjection,
        spec: OracleSpec,
    ) -> Result<Self> {
        let n_exc = energies.len();
        if spec.cutoff < 1 {
            return Err(Error::validation("oracle.cutoff", "must be at least 1"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::validation("bath.beta", "inverse temperature must be positive"));
        }
        if dipoles.n_excitons() != n_exc {
            return Err(Error::validation("pulses", "dipole projection size mismatch"));
        }
        let n_modes = frequencies.len();
        let mut bath_dim: usize = 1;
        for _ in 0..n_modes {
            bath_dim = bath_dim.saturating_mul(spec.cutoff);
        }
        let dim = bath_dim.saturating_mul(n_exc);
        if dim > spec.max_dim {
            return Err(Error::Resource(format!(
                "oracle dimension {dim} exceeds cap {} ({n_exc} excitons, {n_modes} modes, cutoff {})",
                spec.max_dim, spec.cutoff
            )));
        }
        for (a, ch) in channels.iter().enumerate() {
            if ch.op.shape() != (n_exc, n_exc) || ch.weights.len() != n_modes {
                return Err(Error::validation(
                    format!("bath.channels[{a}]"),
                    "channel shape does not match system and modes",
                ));
            }
            if ch.op.iter().any(|z| z.im != 0.0) {
                return Err(Error::validation(
                    format!("bath.channels[{a}].op"),
                    "the Fock oracle supports real symmetric coupling operators only",
                ));
            }
        }

        // number-state bookkeeping: m = Σ_n k_n · cutoff^(n_modes-1-n)
        let levels: Vec<Vec<usize>> = (0..bath_dim)
            .map(|m| {
                let mut k = vec![0; n_modes];
                let mut r = m;
                for n in (0..n_modes).rev() {
                    k[n] = r % spec.cutoff;
                    r /= spec.cutoff;
                }
                k
            })
            .collect();
        let stride: Vec<usize> = (0..n_modes)
            .map(|n| spec.cutoff.pow((n_modes - 1 - n) as u32))
            .collect();
        let bath_energies: Vec<f64> = levels
            .iter()
            .map(|k| k.iter().zip(frequencies).map(|(&kn, w)| kn as f64 * w).sum())
            .collect();
        let e_min = bath_energies.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = bath_energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
        let z: f64 = weights.iter().sum();
        let rho = weights.iter().map(|w| w / z).collect();

        // x_n = b_n + b_n† in the product basis
        let position = |n: usize| {
            let mut x = DMatrix::<f64>::zeros(bath_dim, bath_dim);
            for (m, k) in levels.iter().enumerate() {
                if k[n] + 1 < spec.cutoff {
                    let up = m + stride[n];
                    let amp = ((k[n] + 1) as f64).sqrt();
                    x[(up, m)] = amp;
                    x[(m, up)] = amp;
                }
            }
            x
        };
        let positions: Vec<DMatrix<f64>> = (0..n_modes).map(position).collect();
        let bath_ops: Vec<DMatrix<f64>> = channels
            .iter()
            .map(|ch| {
                let mut b = DMatrix::zeros(bath_dim, bath_dim);
                for n in 0..n_modes {
                    let c = frequencies[n] * ch.weights[n];
                    if c != 0.0 {
                        b += &positions[n] * c;
                    }
                }
                b
            })
            .collect();

        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..n_exc {
            for m in 0..bath_dim {
                h[(j * bath_dim + m, j * bath_dim + m)] = energies[j] + bath_energies[m];
            }
        }
        for (ch, b) in channels.iter().zip(&bath_ops) {
            for j in 0..n_exc {
                for k in 0..n_exc {
                    let a = ch.op[(j, k)].re;
                    if a == 0.0 {
                        continue;
                    }
                    let mut block = h.view_mut((j * bath_dim, k * bath_dim), (bath_dim, bath_dim));
                    block += b * a;
                }
            }
        }
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100_000)
            .ok_or_else(|| Error::Numeric(format!("oracle eigensolver failed (dimension {dim})")))?;

        Ok(FockOracle {
            n_exc,
            bath_dim,
            bath_energies,
            rho,
            bath_ops,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
            dipoles: dipoles.vectors.clone(),
        })
    }

    /// Oracle for the diagonal coupling model.
    pub fn from_diagonal(
        energies: &[f64],
        bath: &BathSpec,
        dipoles: &DipoleProjection,
        spec: OracleSpec,
    ) -> Result<Self> {
        bath.validate()?;
        FockOracle::new(
            energies,
            &diagonal_to_channels(bath),
            &bath.frequencies,
            bath.beta,
            dipoles,
            spec,
        )
    }

    pub fn dimension(&self) -> usize {
        self.n_exc * self.bath_dim
    }

    pub fn bath_dimension(&self) -> usize {
        self.bath_dim
    }

    fn dipole_is_real(&self, k: usize) -> bool {
        self.dipoles[k].iter().all(|z| z.im == 0.0)
    }

    /// Rows of `Σ_j w_j V[(j, m), e]` for a weight vector over excitons.
    fn weighted_rows(&self, w: &[Complex64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.bath_dim;
        let d = self.dimension();
        let mut re = DMatrix::zeros(m, d);
        let mut im = DMatrix::zeros(m, d);
        for (j, wj) in w.iter().enumerate() {
            let rows = self.eigenvectors.rows(j * m, m);
            if wj.re != 0.0 {
                re += rows * wj.re;
            }
            if wj.im != 0.0 {
                im += rows * wj.im;
            }
        }
        (re, im)
    }

    /// Bath-space operator `⟨D_bra| e^{−i h s} |D_ket⟩`.
    fn block(&self, b: Block) -> CMatrix {
        let bra: Vec<Complex64> = self.dipoles[b.bra].iter().map(|z| z.conj()).collect();
        let ket: Vec<Complex64> = self.dipoles[b.ket].iter().copied().collect();
        let (l_re, l_im) = self.weighted_rows(&bra);
        let (r_re, r_im) = self.weighted_rows(&ket);
        let cos = nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|l| (l * b.s).cos()),
        );
        let sin = nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|l| -(l * b.s).sin()),
        );
        let scale_cols = |m: &DMatrix<f64>, v: &nalgebra::DVector<f64>| {
            let mut out = m.clone();
            for (c, s) in out.column_iter_mut().zip(v.iter()) {
                let mut c = c;
                c *= *s;
            }
            out
        };
        if self.dipole_is_real(b.bra) && self.dipole_is_real(b.ket) {
            let re = scale_cols(&l_re, &cos) * r_re.transpose();
            let im = scale_cols(&l_re, &sin) * r_re.transpose();
            return CMatrix::from_fn(self.bath_dim, self.bath_dim, |i, k| {
                Complex64::new(re[(i, k)], im[(i, k)])
            });
        }
        let to_c = |re: &DMatrix<f64>, im: &DMatrix<f64>| {
            CMatrix::from_fn(re.nrows(), re.ncols(), |i, k| Complex64::new(re[(i, k)], im[(i, k)]))
        };
        let phases = CVector::from_iterator(
            self.eigenvalues.len(),
            cos.iter().zip(sin.iter()).map(|(c, s)| Complex64::new(*c, *s)),
        );
        let mut left = to_c(&l_re, &l_im);
        for (c, p) in left.column_iter_mut().zip(phases.iter()) {
            let mut c = c;
            c *= *p;
        }
        left * to_c(&r_re, &r_im).transpose()
    }

    fn propagator_diag(&self, t: f64) -> Vec<Complex64> {
        self.bath_energies
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * t))
            .collect()
    }

    /// Channel layout: left diagonal `a`, right diagonal `b`, and the two
    /// blocks so that `χ = Σ_{mn} a_m X_mn b_n Y_nm`.
    fn layout(&self, channel: Channel, tau: f64, tp: f64, tau_prime: f64) -> (Vec<Complex64>, Vec<Complex64>, Block, Block) {
        let total = tau + tp + tau_prime;
        let rho_times = |p: Vec<Complex64>| -> Vec<Complex64> {
            p.iter().zip(&self.rho).map(|(z, r)| z * r).collect()
        };
        let conj = |p: Vec<Complex64>| -> Vec<Complex64> { p.iter().map(|z| z.conj()).collect() };
        match channel {
            Channel::One => (
                self.propagator_diag(tau + tp),
                rho_times(conj(self.propagator_diag(tp + tau_prime))),
                Block { bra: 1, ket: 0, s: tau_prime },
                Block { bra: 2, ket: 3, s: -tau },
            ),
            Channel::Two => (
                self.propagator_diag(tau),
                rho_times(conj(self.propagator_diag(tau_prime))),
                Block { bra: 2, ket: 0, s: tp + tau_prime },
                Block { bra: 1, ket: 3, s: -(tau + tp) },
            ),
            Channel::Three => (
                self.propagator_diag(tau),
                rho_times(self.propagator_diag(tau_prime)),
                Block { bra: 2, ket: 1, s: tp },
                Block { bra: 0, ket: 3, s: -total },
            ),
            Channel::Four => (
                rho_times(self.propagator_diag(total)),
                conj(self.propagator_diag(tp)),
                Block { bra: 0, ket: 1, s: -tau_prime },
                Block { bra: 2, ket: 3, s: -tau },
            ),
        }
    }

    fn contract(&self, a: &[Complex64], x: &CMatrix, b: &[Complex64], y: &CMatrix) -> Complex64 {
        let m = self.bath_dim;
        let mut acc = ZERO;
        for n in 0..m {
            let mut col = ZERO;
            for i in 0..m {
                col += a[i] * x[(i, n)] * y[(n, i)];
            }
            acc += col * b[n];
        }
        acc
    }

    /// `χ^(k)(τ, T_p, τ′)` at a single point.
    pub fn chi(&self, channel: Channel, tau: f64, tp: f64, tau_prime: f64) -> Complex64 {
        let (a, b, xb, yb) = self.layout(channel, tau, tp, tau_prime);
        self.contract(&a, &self.block(xb), &b, &self.block(yb))
    }

    /// Evaluates `points` (each `(τ, T_p, τ′)`) for one channel, caching
    /// propagator blocks shared between points.
    pub fn chi_points(&self, channel: Channel, points: &[(f64, f64, f64)]) -> Result<Vec<Complex64>> {
        let layouts: Vec<_> = points
            .iter()
            .map(|&(t, tp, tpr)| self.layout(channel, t, tp, tpr))
            .collect();
        let mut keys: Vec<Block> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (_, _, x, y) in &layouts {
            for blk in [x, y] {
                if seen.insert(blk.key()) {
                    keys.push(*blk);
                }
            }
        }
        let need = keys.len() * self.bath_dim * self.bath_dim * std::mem::size_of::<Complex64>();
        if need > BLOCK_CACHE_CAP {
            return Err(Error::Resource(format!(
                "oracle block cache needs {need} bytes (cap {BLOCK_CACHE_CAP})"
            )));
        }
        let blocks: HashMap<_, CMatrix> = keys
            .par_iter()
            .map(|b| (b.key(), self.block(*b)))
            .collect();
        Ok(layouts
            .par_iter()
            .map(|(a, b, x, y)| self.contract(a, &blocks[&x.key()], b, &blocks[&y.key()]))
            .collect())
    }

    /// Full grids for the requested channels.
    pub fn evaluate_grid(&self, channels: &[Channel], spec: &GridSpec) -> Result<Vec<ResponseGrid>> {
        let points: Vec<(f64, f64, f64)> = (0..spec.n_points())
            .map(|idx| {
                let (a, b, c) = spec.unflat(idx);
                (spec.tau(a), spec.tp(b), spec.tau_prime(c))
            })
            .collect();
        channels
            .iter()
            .map(|&ch| {
                Ok(ResponseGrid {
                    channel: ch,
                    // oracle grids are compared against closed-form output
                    provenance: Provenance::Closed,
                    spec: spec.clone(),
                    values: self.chi_points(ch, &points)?,
                })
            })
            .collect()
    }

    fn full_propagator(&self, t: f64) -> CMatrix {
        let v = &self.eigenvectors;
        let d = self.dimension();
        let cos = DMatrix::from_fn(d, d, |i, e| v[(i, e)] * (self.eigenvalues[e] * t).cos());
        let sin = DMatrix::from_fn(d, d, |i, e| -v[(i, e)] * (self.eigenvalues[e] * t).sin());
        let re = cos * v.transpose();
        let im = sin * v.transpose();
        CMatrix::from_fn(d, d, |i, k| Complex64::new(re[(i, k)], im[(i, k)]))
    }

    /// `Tr_b{e^{−i h t}(X₀ ⊗ ρ_b) e^{i H_b t}}`.
    pub fn left_coherence(&self, x0: &CMatrix, t: f64) -> CMatrix {
        let u = self.full_propagator(t);
        let m = self.bath_dim;
        let p = self.propagator_diag(t);
        CMatrix::from_fn(self.n_exc, self.n_exc, |j, k| {
            let mut acc = ZERO;
            for bm in 0..m {
                let w = self.rho[bm] * p[bm].conj();
                for l in 0..self.n_exc {
                    acc += u[(j * m + bm, l * m + bm)] * x0[(l, k)] * w;
                }
            }
            acc
        })
    }

    /// `Tr_b{e^{−i H_b t}(X₀ ⊗ ρ_b) e^{i h t}}`.
    pub fn right_coherence(&self, x0: &CMatrix, t: f64) -> CMatrix {
        let u = self.full_propagator(-t);
        let m = self.bath_dim;
        let p = self.propagator_diag(t);
        CMatrix::from_fn(self.n_exc, self.n_exc, |j, k| {
            let mut acc = ZERO;
            for bm in 0..m {
                let w = self.rho[bm] * p[bm];
                for l in 0..self.n_exc {
                    acc += w * x0[(j, l)] * u[(l * m + bm, k * m + bm)];
                }
            }
            acc
        })
    }

    /// `Tr{ρ_b B̃_a(t) B_b}` with `B̃(t) = e^{i H_b t} B e^{−i H_b t}`.
    pub fn bath_correlation(&self, a: usize, b: usize, t: f64) -> Complex64 {
        let (ba, bb) = (&self.bath_ops[a], &self.bath_ops[b]);
        let mut acc = ZERO;
        for m in 0..self.bath_dim {
            for n in 0..self.bath_dim {
                let v = ba[(m, n)] * bb[(n, m)];
                if v != 0.0 {
                    acc += Complex64::from_polar(
                        self.rho[m] * v,
                        (self.bath_energies[m] - self.bath_energies[n]) * t,
                    );
                }
            }
        }
        acc
    }
}

/// One-shot oracle evaluation for the diagonal coupling model.
#[allow(clippy::too_many_arguments)]
pub fn fock_oracle(
    energies: &[f64],
    bath: &BathSpec,
    dipoles: &DipoleProjection,
    spec: OracleSpec,
    k: usize,
    tau: f64,
    tp: f64,
    tau_prime: f64,
) -> Result<Complex64> {
    let channel = Channel::from_index(k)?;
    Ok(FockOracle::from_diagonal(energies, bath, dipoles, spec)?.chi(channel, tau, tp, tau_prime))
}
