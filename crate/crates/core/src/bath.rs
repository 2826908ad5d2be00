//! Discrete harmonic baths, linear coupling channels and two-time bath
//! correlation functions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
#[cfg(test)]
use crate::linalg::max_abs;
use crate::units::{cm_to_rad_fs, coth_half};

/// Harmonic bath with per-exciton diagonal couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    /// Mode frequencies ω_n in rad/fs.
    pub frequencies: Vec<f64>,
    /// Dimensionless couplings g_{j,n}, one row per exciton.
    pub couplings: DMatrix<f64>,
    /// Inverse temperature in fs/rad.
    pub beta: f64,
}

impl BathSpec {
    pub fn new(frequencies: Vec<f64>, couplings: DMatrix<f64>, beta: f64) -> Result<Self> {
        let bath = BathSpec {
            frequencies,
            couplings,
            beta,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        for (n, w) in self.frequencies.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::validation(
                    format!("bath.modes[{n}].omega"),
                    "mode frequencies must be positive and finite",
                ));
            }
        }
        if self.couplings.ncols() != self.frequencies.len() {
            return Err(Error::validation(
                "bath.modes",
                format!(
                    "coupling rows have {} entries for {} modes",
                    self.couplings.ncols(),
                    self.frequencies.len()
                ),
            ));
        }
        if self.couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::validation("bath.modes", "couplings must be finite"));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn n_excitons(&self) -> usize {
        self.couplings.nrows()
    }

    /// Reorganization energy Σ_n g²_{j,n} ω_n of exciton `j` (rad/fs).
    pub fn reorganization(&self, j: usize) -> f64 {
        self.frequencies
            .iter()
            .enumerate()
            .map(|(n, w)| self.couplings[(j, n)].powi(2) * w)
            .sum()
    }

    /// Builds one coupling row per exciton as `scales[j]` times row 0.
    pub fn with_exciton_rows(&self, scales: &[f64]) -> BathSpec {
        let base = self.couplings.row(0).into_owned();
        let mut g = DMatrix::zeros(scales.len(), self.n_modes());
        for (j, s) in scales.iter().enumerate() {
            g.set_row(j, &(base.clone() * *s));
        }
        BathSpec {
            frequencies: self.frequencies.clone(),
            couplings: g,
            beta: self.beta,
        }
    }

    /// Same bath with every coupling multiplied by `s`.
    pub fn scaled(&self, s: f64) -> BathSpec {
        BathSpec {
            couplings: &self.couplings * s,
            ..self.clone()
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::validation("bath.beta", format!("inverse temperature must be positive (got {beta})")));
    }
    Ok(())
}

/// One term `A_a ⊗ B_a` of the exciton-bath coupling, with
/// `B_a = Σ_n ω_n c_{a,n} (b_n + b_n†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingChannel {
    /// Hermitian system operator in the exciton basis.
    pub op: DMatrix<Complex64>,
    /// Per-mode weights c_{a,n}.
    pub weights: Vec<f64>,
}

impl CouplingChannel {
    pub fn new(op: DMatrix<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if !op.is_square() {
            return Err(Error::validation("bath.channels", "system operator must be square"));
        }
        let scale = op.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let herm = (&op - op.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-12 * scale {
            return Err(Error::validation(
                "bath.channels",
                format!("system operator is not Hermitian (‖A − A†‖ = {herm:.3e})"),
            ));
        }
        if weights.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("bath.channels", "weights must be finite"));
        }
        Ok(CouplingChannel { op, weights })
    }
}

/// One channel per exciton: `A_j = |φ_j⟩⟨φ_j|`, `c_{j,n} = g_{j,n}`.
pub fn diagonal_to_channels(bath: &BathSpec) -> Vec<CouplingChannel> {
    let n = bath.n_excitons();
    (0..n)
        .map(|j| {
            let mut op = DMatrix::zeros(n, n);
            op[(j, j)] = Complex64::new(1.0, 0.0);
            CouplingChannel {
                op,
                weights: bath.couplings.row(j).iter().copied().collect(),
            }
        })
        .collect()
}

fn check_channels(channels: &[CouplingChannel], n_modes: usize) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::validation("bath.channels", "at least one channel is required"));
    }
    for (a, ch) in channels.iter().enumerate() {
        if ch.weights.len() != n_modes {
            return Err(Error::validation(
                format!("bath.channels[{a}]"),
                format!("{} weights for {n_modes} modes", ch.weights.len()),
            ));
        }
    }
    Ok(())
}

/// Per-mode factors shared by every correlation evaluation.
#[derive(Debug, Clone)]
struct ModeFactors {
    omega: Vec<f64>,
    /// ω_n² coth(βω_n/2)
    re: Vec<f64>,
    /// ω_n²
    im: Vec<f64>,
}

impl ModeFactors {
    fn new(frequencies: &[f64], beta: f64) -> Self {
        ModeFactors {
            omega: frequencies.to_vec(),
            re: frequencies.iter().map(|w| w * w * coth_half(beta * w)).collect(),
            im: frequencies.iter().map(|w| w * w).collect(),
        }
    }

    fn fill(&self, channels: &[CouplingChannel], t: f64, out: &mut [Complex64]) {
        let na = channels.len();
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for n in 0..self.omega.len() {
            let (s, c) = (self.omega[n] * t).sin_cos();
            let mode = Complex64::new(self.re[n] * c, -self.im[n] * s);
            for a in 0..na {
                let ca = channels[a].weights[n];
                if ca == 0.0 {
                    continue;
                }
                for b in 0..na {
                    out[a * na + b] += mode * (ca * channels[b].weights[n]);
                }
            }
        }
    }
}

/// `C_ab(t) = Σ_n ω_n² c_{a,n} c_{b,n} [coth(βω_n/2) cos ω_n t − i sin ω_n t]`.
pub fn correlation(
    channels: &[CouplingChannel],
    frequencies: &[f64],
    beta: f64,
    t: f64,
) -> Result<DMatrix<Complex64>> {
    check_beta(beta)?;
    check_channels(channels, frequencies.len())?;
    if !t.is_finite() {
        return Err(Error::validation("t", "time must be finite"));
    }
    let na = channels.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); na * na];
    ModeFactors::new(frequencies, beta).fill(channels, t, &mut buf);
    Ok(DMatrix::from_row_slice(na, na, &buf))
}

/// `C_ab(m·dt)` for `m = 0..=n_lags`; negative lags follow from
/// `C_ab(−t) = C_ba(t)*`.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    dt: f64,
    n_channels: usize,
    n_lags: usize,
    /// `samples[(m * na + a) * na + b]`
    samples: Vec<Complex64>,
}

impl CorrelationTable {
    pub fn build(
        channels: &[CouplingChannel],
        frequencies: &[f64],
        beta: f64,
        dt: f64,
        n_lags: usize,
    ) -> Result<Self> {
        check_beta(beta)?;
        check_channels(channels, frequencies.len())?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation("grids.dt", "time step must be positive"));
        }
        let na = channels.len();
        let factors = ModeFactors::new(frequencies, beta);
        let mut samples = vec![Complex64::new(0.0, 0.0); (n_lags + 1) * na * na];
        for (m, chunk) in samples.chunks_mut(na * na).enumerate() {
            factors.fill(channels, m as f64 * dt, chunk);
        }
        Ok(CorrelationTable {
            dt,
            n_channels: na,
            n_lags,
            samples,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    /// Largest |t| covered by the table.
    pub fn max_time(&self) -> f64 {
        self.n_lags as f64 * self.dt
    }

    /// `C_ab(m·dt)` for a signed integer lag.
    #[inline]
    pub fn lag(&self, a: usize, b: usize, m: i64) -> Result<Complex64> {
        let k = m.unsigned_abs() as usize;
        if k > self.n_lags {
            return Err(Error::Range {
                time: m as f64 * self.dt,
                limit: self.max_time(),
            });
        }
        let na = self.n_channels;
        Ok(if m >= 0 {
            self.samples[(k * na + a) * na + b]
        } else {
            self.samples[(k * na + b) * na + a].conj()
        })
    }

    /// `C_ab(t)`: exact on grid lags, four-point cubic interpolation between.
    pub fn at(&self, a: usize, b: usize, t: f64) -> Result<Complex64> {
        let x = t / self.dt;
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
            return self.lag(a, b, r as i64);
        }
        let i1 = x.floor() as i64;
        let f = x - i1 as f64;
        // Lagrange weights on nodes -1, 0, 1, 2 relative to i1
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            let m = i1 - 1 + k as i64;
            acc += self.lag(a, b, m).map_err(|_| Error::Range {
                time: t,
                limit: self.max_time(),
            })? * *wk;
        }
        Ok(acc)
    }

    /// Full matrix `C(m·dt)`.
    pub fn matrix(&self, m: i64) -> Result<DMatrix<Complex64>> {
        let na = self.n_channels;
        let mut out = DMatrix::zeros(na, na);
        for a in 0..na {
            for b in 0..na {
                out[(a, b)] = self.lag(a, b, m)?;
            }
        }
        Ok(out)
    }
}

/// Spectral-density families available for discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = 2λγω / (ω² + γ²)`, λ and γ in cm⁻¹.
    DrudeLorentz { lambda_cm: f64, gamma_cm: f64 },
    /// `J(ω) = η ω e^{−ω/ω_c}`, ω_c in cm⁻¹; reorganization energy η ω_c / π.
    OhmicExp { eta: f64, omega_c_cm: f64 },
}

impl SpectralDensity {
    /// Looks a model up by name with its two parameters.
    pub fn from_name(name: &str, p1: f64, p2: f64) -> Result<Self> {
        let model = match name {
            "drude-lorentz" | "drude" => SpectralDensity::DrudeLorentz {
                lambda_cm: p1,
                gamma_cm: p2,
            },
            "ohmic-exp" | "ohmic" => SpectralDensity::OhmicExp {
                eta: p1,
                omega_c_cm: p2,
            },
            other => {
                return Err(Error::validation(
                    "bath.spectral_density.model",
                    format!("unsupported model '{other}' (expected drude-lorentz or ohmic-exp)"),
                ))
            }
        };
        Ok(model)
    }

    /// Reorganization energy `(1/π)∫ J(ω)/ω dω` in cm⁻¹.
    pub fn reorganization_cm(&self) -> f64 {
        match *self {
            SpectralDensity::DrudeLorentz { lambda_cm, .. } => lambda_cm,
            SpectralDensity::OhmicExp { eta, omega_c_cm } => eta * omega_c_cm / std::f64::consts::PI,
        }
    }

    /// Inverse of the normalized cumulative reorganization `F(ω)`, in cm⁻¹.
    fn quantile_cm(&self, p: f64) -> f64 {
        match *self {
            // F(ω) = (2/π) arctan(ω/γ)
            SpectralDensity::DrudeLorentz { gamma_cm, .. } => {
                gamma_cm * (0.5 * std::f64::consts::PI * p).tan()
            }
            // F(ω) = 1 − e^{−ω/ω_c}
            SpectralDensity::OhmicExp { omega_c_cm, .. } => -omega_c_cm * (1.0 - p).ln(),
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b, names) = match *self {
            SpectralDensity::DrudeLorentz { lambda_cm, gamma_cm } => {
                (lambda_cm, gamma_cm, ["lambda_cm", "gamma_cm"])
            }
            SpectralDensity::OhmicExp { eta, omega_c_cm } => (eta, omega_c_cm, ["eta", "omega_c_cm"]),
        };
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::validation(
                format!("bath.spectral_density.{}", names[0]),
                "must be non-negative",
            ));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::validation(
                format!("bath.spectral_density.{}", names[1]),
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// Splits the spectral density into `n_modes` bins of equal reorganization
/// energy. Each mode sits at the reorganization-weighted median of its bin
/// and carries `g_n = sqrt(λ / (n_modes ω_n))`, so `Σ g_n² ω_n = λ` exactly.
/// The result has a single coupling row.
pub fn discretize_spectral_density(
    model: SpectralDensity,
    n_modes: usize,
    beta: f64,
) -> Result<BathSpec> {
    model.validate()?;
    if n_modes == 0 {
        return Err(Error::validation("bath.spectral_density.n_modes", "must be at least 1"));
    }
    let lambda = cm_to_rad_fs(model.reorganization_cm());
    let frequencies: Vec<f64> = (0..n_modes)
        .map(|n| cm_to_rad_fs(model.quantile_cm((n as f64 + 0.5) / n_modes as f64)))
        .collect();
    let g = DMatrix::from_iterator(
        1,
        n_modes,
        frequencies.iter().map(|w| (lambda / (n_modes as f64 * w)).sqrt()),
    );
    BathSpec::new(frequencies, g, beta)
}
