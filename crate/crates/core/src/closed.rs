//! Exact response functions for harmonic baths coupled diagonally in the
//! exciton basis.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::exciton::{DipoleProjection, ExcitonBasis};
use crate::grid::{Channel, GridSpec, Provenance, ResponseGrid};
use crate::units::coth_half;

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Thermal trace of a product of four polaron displacement operators,
/// `⟨e^{−S_{j′}(x)} e^{S_{j′}(x′)} e^{−S_j(y)} e^{S_j(y′)}⟩` with the first
/// pair built from `g_first` and the second pair from `g_second`:
///
/// ```text
/// exp(−Σ g₁²[coth(1 − cos ω(x−x′)) + i sin ω(x−x′)])
/// · exp(−Σ g₂²[coth(1 − cos ω(y−y′)) + i sin ω(y−y′)])
/// · exp(−Σ g₁g₂ coth[cos ω(x−y) − cos ω(x′−y) − cos ω(x−y′) + cos ω(x′−y′)])
/// · exp( iΣ g₁g₂ [sin ω(x−y) − sin ω(x′−y) − sin ω(x−y′) + sin ω(x′−y′)])
/// ```
///
/// with `coth = coth(βω_n/2)`.
#[allow(clippy::too_many_arguments)]
pub fn displacement_trace(
    g_first: &[f64],
    g_second: &[f64],
    x: f64,
    x_prime: f64,
    y: f64,
    y_prime: f64,
    beta: f64,
    frequencies: &[f64],
) -> Complex64 {
    let coth: Vec<f64> = frequencies.iter().map(|w| coth_half(beta * w)).collect();
    displacement_trace_with(g_first, g_second, [x, x_prime, y, y_prime], frequencies, &coth)
}

fn displacement_trace_with(
    g1: &[f64],
    g2: &[f64],
    [x, xp, y, yp]: [f64; 4],
    frequencies: &[f64],
    coth: &[f64],
) -> Complex64 {
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    for (n, &w) in frequencies.iter().enumerate() {
        let (a, b) = (g1[n], g2[n]);
        let c = coth[n];
        let (s1, c1) = (w * (x - xp)).sin_cos();
        let (s2, c2) = (w * (y - yp)).sin_cos();
        re.add(-a * a * c * (1.0 - c1));
        im.add(-a * a * s1);
        re.add(-b * b * c * (1.0 - c2));
        im.add(-b * b * s2);
        let ab = a * b;
        if ab != 0.0 {
            let (sxy, cxy) = (w * (x - y)).sin_cos();
            let (sxpy, cxpy) = (w * (xp - y)).sin_cos();
            let (sxyp, cxyp) = (w * (x - yp)).sin_cos();
            let (sxpyp, cxpyp) = (w * (xp - yp)).sin_cos();
            re.add(-ab * c * (cxy - cxpy - cxyp + cxpyp));
            im.add(ab * (sxy - sxpy - sxyp + sxpyp));
        }
    }
    Complex64::from_polar(re.sum.exp(), im.sum)
}

/// `Ẽ_j = ℰ_j − Σ_n g²_{j,n} ω_n` (rad/fs).
pub fn polaron_shifted_energies(energies: &[f64], bath: &BathSpec) -> Vec<f64> {
    energies
        .iter()
        .enumerate()
        .map(|(j, e)| e - bath.reorganization(j))
        .collect()
}

/// Pre-processed inputs for closed-form evaluation.
#[derive(Debug, Clone)]
pub struct ClosedModel {
    shifted: Vec<f64>,
    frequencies: Vec<f64>,
    coth: Vec<f64>,
    rows: Vec<Vec<f64>>,
    dipoles: [Vec<Complex64>; 4],
}

impl ClosedModel {
    pub fn new(basis: &ExcitonBasis, bath: &BathSpec, dipoles: &DipoleProjection) -> Result<Self> {
        ClosedModel::from_energies(&basis.energies_rad_fs(), bath, dipoles)
    }

    /// Exciton energies given directly in rad/fs.
    pub fn from_energies(energies: &[f64], bath: &BathSpec, dipoles: &DipoleProjection) -> Result<Self> {
        bath.validate()?;
        let n = energies.len();
        if bath.n_excitons() != n {
            return Err(Error::validation(
                "bath.modes",
                format!("{} coupling rows for {n} excitons", bath.n_excitons()),
            ));
        }
        if dipoles.n_excitons() != n {
            return Err(Error::validation("pulses", "dipole projection size mismatch"));
        }
        Ok(ClosedModel {
            shifted: polaron_shifted_energies(energies, bath),
            frequencies: bath.frequencies.clone(),
            coth: bath.frequencies.iter().map(|w| coth_half(bath.beta * w)).collect(),
            rows: (0..n).map(|j| bath.couplings.row(j).iter().copied().collect()).collect(),
            dipoles: dipoles.vectors.clone().map(|v| v.iter().copied().collect()),
        })
    }

    pub fn n_excitons(&self) -> usize {
        self.shifted.len()
    }

    pub fn shifted_energies(&self) -> &[f64] {
        &self.shifted
    }

    /// Dipole prefactor of the `(j, j′)` term for a channel.
    pub fn dipole_factor(&self, channel: Channel, j: usize, jp: usize) -> Complex64 {
        let [d1, d2, d3, d4] = &self.dipoles;
        match channel {
            Channel::One => d2[j].conj() * d1[j] * d3[jp].conj() * d4[jp],
            Channel::Two => d3[j].conj() * d1[j] * d2[jp].conj() * d4[jp],
            Channel::Three => d3[j].conj() * d2[j] * d1[jp].conj() * d4[jp],
            Channel::Four => d1[j].conj() * d2[j] * d3[jp].conj() * d4[jp],
        }
    }

    /// `Σ_{j,j′}` of the dipole prefactors, the value of χ at the origin.
    pub fn dipole_sum(&self, channel: Channel) -> Complex64 {
        let n = self.n_excitons();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for jp in 0..n {
                acc += self.dipole_factor(channel, j, jp);
            }
        }
        acc
    }

    /// `χ^(k)(τ, T_p, τ′)`; summation runs over j then j′.
    pub fn chi(&self, channel: Channel, tau: f64, tp: f64, tau_prime: f64) -> Complex64 {
        let n = self.n_excitons();
        let e = &self.shifted;
        let total = tau + tp + tau_prime;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for jp in 0..n {
                let pref = self.dipole_factor(channel, j, jp);
                if pref == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (phase, first, second, args) = match channel {
                    Channel::One => (
                        e[jp] * tau - e[j] * tau_prime,
                        jp,
                        j,
                        [tp + tau_prime, total, tau_prime, 0.0],
                    ),
                    Channel::Two => (
                        e[jp] * (tau + tp) - e[j] * (tp + tau_prime),
                        jp,
                        j,
                        [tau_prime, total, tp + tau_prime, 0.0],
                    ),
                    Channel::Three => (
                        e[jp] * total - e[j] * tp,
                        jp,
                        j,
                        [0.0, total, tp + tau_prime, tau_prime],
                    ),
                    Channel::Four => (
                        e[j] * tau_prime + e[jp] * tau,
                        j,
                        jp,
                        [0.0, tau_prime, tp + tau_prime, total],
                    ),
                };
                let disp = displacement_trace_with(
                    &self.rows[first],
                    &self.rows[second],
                    args,
                    &self.frequencies,
                    &self.coth,
                );
                acc += pref * Complex64::from_polar(1.0, phase) * disp;
            }
        }
        acc
    }
}

/// Pointwise closed-form response.
pub fn chi_closed(
    k: usize,
    tau: f64,
    tp: f64,
    tau_prime: f64,
    basis: &ExcitonBasis,
    bath: &BathSpec,
    dipoles: &DipoleProjection,
) -> Result<Complex64> {
    let channel = Channel::from_index(k)?;
    Ok(ClosedModel::new(basis, bath, dipoles)?.chi(channel, tau, tp, tau_prime))
}

/// Bytes needed to hold `n_channels` grids of `spec`.
pub fn grid_memory_estimate(spec: &GridSpec, n_channels: usize) -> usize {
    spec.n_points()
        .saturating_mul(n_channels)
        .saturating_mul(std::mem::size_of::<Complex64>())
}

/// Dense evaluation over the grid, data-parallel over points.
pub fn evaluate_closed_grid(
    channels: &[Channel],
    spec: &GridSpec,
    model: &ClosedModel,
    memory_cap: usize,
) -> Result<Vec<ResponseGrid>> {
    let need = grid_memory_estimate(spec, channels.len());
    if need > memory_cap {
        return Err(Error::Resource(format!(
            "closed-form grids need {need} bytes, cap is {memory_cap} bytes"
        )));
    }
    Ok(channels
        .iter()
        .map(|&ch| {
            let values = (0..spec.n_points())
                .into_par_iter()
                .map(|idx| {
                    let (a, b, c) = spec.unflat(idx);
                    model.chi(ch, spec.tau(a), spec.tp(b), spec.tau_prime(c))
                })
                .collect();
            ResponseGrid {
                channel: ch,
                provenance: Provenance::Closed,
                spec: spec.clone(),
                values,
            }
        })
        .collect())
}
