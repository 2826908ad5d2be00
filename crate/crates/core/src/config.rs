//! Job configuration: JSON ingestion, defaults and validation.
//!
//! Energies are in cm⁻¹ and times in fs. After [`parse_config`] every
//! optional field that has a default is filled in, so serializing the result
//! echoes the exact run settings.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bath::{discretize_spectral_density, BathSpec, CouplingChannel, SpectralDensity};
use crate::error::{Error, Result};
use crate::exciton::SiteSystem;
use crate::grid::GridSpec;
use crate::linalg::to_complex;
use crate::oracle::OracleSpec;
use crate::signal::{DisorderModel, Envelope, FourierOptions};
use crate::units::{beta_from_kelvin, cm_to_rad_fs};

pub const DEFAULT_TEMPERATURE_K: f64 = 300.0;
pub const DEFAULT_MEMORY_MB: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub system: SystemConfig,
    pub bath: BathConfig,
    #[serde(default)]
    pub pulses: PulsesConfig,
    #[serde(default)]
    pub grids: GridsConfig,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub disorder: Option<DisorderConfig>,
    #[serde(default)]
    pub spectra: SpectraConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub limits: LimitsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub site_energies_cm: Vec<f64>,
    /// Symmetric inter-site couplings; all zero when omitted.
    #[serde(default)]
    pub couplings_cm: Option<Vec<Vec<f64>>>,
    pub dipoles: Vec<[f64; 3]>,
    /// ℰ_e; defaults to the mean site energy.
    #[serde(default)]
    pub reference_energy_cm: Option<f64>,
    #[serde(default)]
    pub ground_energy_cm: f64,
}

/// Harmonic bath. Couplings come from exactly one of `couplings`
/// (diagonal, one row per exciton), `channels` (general linear coupling in
/// the exciton basis) or `spectral_density`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    #[serde(default)]
    pub temperature_k: Option<f64>,
    /// β in cm (1/β in cm⁻¹); alternative to `temperature_k`.
    #[serde(default)]
    pub beta_cm: Option<f64>,
    #[serde(default)]
    pub modes_cm: Option<Vec<f64>>,
    #[serde(default)]
    pub couplings: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub channels: Option<Vec<ChannelConfig>>,
    #[serde(default)]
    pub spectral_density: Option<SpectralDensityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Real symmetric operator in the exciton basis.
    pub operator: Vec<Vec<f64>>,
    /// Dimensionless weight per mode.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensityConfig {
    /// `drude-lorentz` or `ohmic-exp`.
    pub model: String,
    #[serde(default)]
    pub lambda_cm: Option<f64>,
    #[serde(default)]
    pub gamma_cm: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub omega_c_cm: Option<f64>,
    pub n_modes: usize,
    /// Per-exciton coupling scale; all ones when omitted.
    #[serde(default)]
    pub exciton_scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulsesConfig {
    /// ε₁, ε₂, ε₃ and ε_m.
    #[serde(default = "default_polarizations")]
    pub polarizations: [[f64; 3]; 4],
    /// ω₁, ω₂, ω₃; resonant with ℰ_e − ℰ_g when omitted.
    #[serde(default)]
    pub carriers_cm: Option<[f64; 3]>,
    #[serde(default = "default_envelopes")]
    pub envelopes: [Envelope; 3],
    /// Optional finite-pulse polarization trace.
    #[serde(default)]
    pub polarization: Option<PolarizationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationConfig {
    pub centers_fs: [f64; 3],
    pub detection_fs: Vec<f64>,
}

fn default_polarizations() -> [[f64; 3]; 4] {
    [[1.0, 0.0, 0.0]; 4]
}

fn default_envelopes() -> [Envelope; 3] {
    [Envelope::Impulsive; 3]
}

impl Default for PulsesConfig {
    fn default() -> Self {
        PulsesConfig {
            polarizations: default_polarizations(),
            carriers_cm: None,
            envelopes: default_envelopes(),
            polarization: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridsConfig {
    pub dt_fs: f64,
    pub n_tau: usize,
    pub n_tau_prime: usize,
    pub tp_fs: Vec<f64>,
}

impl Default for GridsConfig {
    fn default() -> Self {
        GridsConfig {
            dt_fs: 2.0,
            n_tau: 32,
            n_tau_prime: 32,
            tp_fs: vec![0.0, 50.0, 100.0, 200.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Closed,
    Qme,
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Qme => "qme",
            Method::Both => "both",
        }
    }

    pub fn runs_closed(self) -> bool {
        matches!(self, Method::Closed | Method::Both)
    }

    pub fn runs_qme(self) -> bool {
        matches!(self, Method::Qme | Method::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    /// One σ per site, or a single value applied to every site.
    pub sigma_cm: Vec<f64>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectraConfig {
    pub window: bool,
    pub pad: usize,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        SpectraConfig { window: true, pad: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "fourwave-out".into(),
            formats: vec![Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitsConfig {
    /// Cap on the estimated working memory of a run.
    pub memory_mb: usize,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        LimitsConfig {
            memory_mb: DEFAULT_MEMORY_MB,
        }
    }
}

/// Bath in internal units, ready for either solution path.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedBath {
    /// Mode frequencies in rad/fs.
    pub frequencies: Vec<f64>,
    pub beta: f64,
    pub channels: Vec<CouplingChannel>,
    /// Present when every channel operator is diagonal.
    pub diagonal: Option<BathSpec>,
}

fn render_path(path: &serde_ignored::Path) -> String {
    use serde_ignored::Path;
    match path {
        Path::Root => String::new(),
        Path::Seq { parent, index } => format!("{}[{index}]", render_path(parent)),
        Path::Map { parent, key } => {
            let p = render_path(parent);
            if p.is_empty() {
                key.clone()
            } else {
                format!("{p}.{key}")
            }
        }
        Path::Some { parent } | Path::NewtypeStruct { parent } | Path::NewtypeVariant { parent } => render_path(parent),
    }
}

/// Parses, fills defaults and validates a JSON job description.
pub fn parse_config(text: &str) -> Result<JobConfig> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: JobConfig = serde_ignored::deserialize(&mut de, |p| unknown.push(render_path(&p)))?;
    de.end()?;
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    raw.resolve()
}

fn check_finite(path: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::validation(format!("{path}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

fn square(path: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation(
            path,
            format!(
                "expected a {n}x{n} matrix, got {} rows of lengths {:?}",
                rows.len(),
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            ),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl JobConfig {
    pub fn n_sites(&self) -> usize {
        self.system.site_energies_cm.len()
    }

    /// Fills defaults and checks cross-references.
    pub fn resolve(mut self) -> Result<JobConfig> {
        let n = self.n_sites();
        if n == 0 {
            return Err(Error::validation("system.site_energies_cm", "at least one site is required"));
        }
        check_finite("system.site_energies_cm", &self.system.site_energies_cm)?;
        if self.system.couplings_cm.is_none() {
            self.system.couplings_cm = Some(vec![vec![0.0; n]; n]);
        }
        if self.system.reference_energy_cm.is_none() {
            self.system.reference_energy_cm = Some(self.system.site_energies_cm.iter().sum::<f64>() / n as f64);
        }
        // the system constructor checks shapes and symmetry
        let system = self.site_system()?;

        let b = &mut self.bath;
        match (b.temperature_k, b.beta_cm) {
            (Some(_), Some(_)) => {
                return Err(Error::validation("bath", "give either temperature_k or beta_cm, not both"));
            }
            (None, None) => b.temperature_k = Some(DEFAULT_TEMPERATURE_K),
            _ => {}
        }
        if self.pulses.carriers_cm.is_none() {
            let gap = system.optical_gap();
            self.pulses.carriers_cm = Some([gap; 3]);
        }
        if let Some(d) = self.disorder.as_mut() {
            if d.sigma_cm.len() == 1 && n > 1 {
                d.sigma_cm = vec![d.sigma_cm[0]; n];
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        self.resolved_bath(n)?;
        for (i, p) in self.pulses.polarizations.iter().enumerate() {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::validation(format!("pulses.polarizations[{i}]"), "must be a unit vector"));
            }
        }
        if let Some(c) = self.pulses.carriers_cm {
            check_finite("pulses.carriers_cm", &c)?;
        }
        if let Some(p) = &self.pulses.polarization {
            let setup = crate::signal::PulseSetup {
                carriers: [0.0; 3],
                envelopes: self.pulses.envelopes,
                centers: p.centers_fs,
            };
            setup.validate()?;
            check_finite("pulses.polarization.detection_fs", &p.detection_fs)?;
        }
        self.grid_spec()?;
        if let Some(d) = &self.disorder {
            self.disorder_model(d).validate(n)?;
        }
        if self.spectra.pad == 0 {
            return Err(Error::validation("spectra.pad", "must be at least 1"));
        }
        if self.limits.memory_mb == 0 {
            return Err(Error::validation("limits.memory_mb", "must be positive"));
        }
        if self.output.formats.is_empty() {
            return Err(Error::validation("output.formats", "at least one format is required"));
        }
        Ok(())
    }

    pub fn site_system(&self) -> Result<SiteSystem> {
        let s = &self.system;
        let n = s.site_energies_cm.len();
        let couplings = match &s.couplings_cm {
            Some(rows) => square("system.couplings_cm", rows, n)?,
            None => DMatrix::zeros(n, n),
        };
        let mut system = SiteSystem::new(s.site_energies_cm.clone(), couplings, s.dipoles.clone())?;
        if let Some(r) = s.reference_energy_cm {
            system = system.with_reference_energy(r)?;
        }
        system.with_ground_energy(s.ground_energy_cm)
    }

    /// β in fs/rad.
    pub fn beta(&self) -> Result<f64> {
        let beta = match (self.bath.temperature_k, self.bath.beta_cm) {
            (Some(t), None) => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::validation("bath.temperature_k", "must be positive"));
                }
                beta_from_kelvin(t)
            }
            (None, Some(b)) => {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::validation("bath.beta_cm", "must be positive"));
                }
                // β[cm] = 1/(k_B T)[cm⁻¹]; convert the energy scale to rad/fs
                1.0 / cm_to_rad_fs(1.0 / b)
            }
            _ => return Err(Error::validation("bath", "exactly one of temperature_k or beta_cm is required")),
        };
        Ok(beta)
    }

    /// Builds the bath for `n` excitons.
    pub fn resolved_bath(&self, n: usize) -> Result<ResolvedBath> {
        let b = &self.bath;
        let beta = self.beta()?;
        let sources = [b.couplings.is_some(), b.channels.is_some(), b.spectral_density.is_some()]
            .iter()
            .filter(|x| **x)
            .count();
        if sources != 1 {
            return Err(Error::validation(
                "bath",
                "exactly one of couplings, channels or spectral_density is required",
            ));
        }

        if let Some(sd) = &b.spectral_density {
            if b.modes_cm.is_some() {
                return Err(Error::validation("bath.modes_cm", "not used with spectral_density"));
            }
            let (p1, p2) = match sd.model.as_str() {
                "drude-lorentz" | "drude" => (sd.lambda_cm, sd.gamma_cm),
                "ohmic-exp" | "ohmic" => (sd.eta, sd.omega_c_cm),
                _ => (Some(0.0), Some(1.0)),
            };
            let (p1, p2) = match (p1, p2) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::validation(
                        "bath.spectral_density",
                        "drude-lorentz needs lambda_cm and gamma_cm; ohmic-exp needs eta and omega_c_cm",
                    ))
                }
            };
            let model = SpectralDensity::from_name(&sd.model, p1, p2)?;
            let single = discretize_spectral_density(model, sd.n_modes, beta)?;
            let scales = sd.exciton_scales.clone().unwrap_or_else(|| vec![1.0; n]);
            if scales.len() != n {
                return Err(Error::validation(
                    "bath.spectral_density.exciton_scales",
                    format!("expected {n} entries, got {}", scales.len()),
                ));
            }
            check_finite("bath.spectral_density.exciton_scales", &scales)?;
            let bath = single.with_exciton_rows(&scales);
            return Ok(ResolvedBath {
                frequencies: bath.frequencies.clone(),
                beta,
                channels: crate::bath::diagonal_to_channels(&bath),
                diagonal: Some(bath),
            });
        }

        let modes = b
            .modes_cm
            .as_ref()
            .ok_or_else(|| Error::validation("bath.modes_cm", "mode frequencies are required"))?;
        if modes.is_empty() {
            return Err(Error::validation("bath.modes_cm", "at least one mode is required"));
        }
        for (i, w) in modes.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::validation(format!("bath.modes_cm[{i}]"), "must be positive"));
            }
        }
        let frequencies: Vec<f64> = modes.iter().map(|&w| cm_to_rad_fs(w)).collect();
        let m = modes.len();

        if let Some(rows) = &b.couplings {
            if rows.len() != n || rows.iter().any(|r| r.len() != m) {
                return Err(Error::validation(
                    "bath.couplings",
                    format!("expected {n} rows (excitons) of {m} entries (modes)"),
                ));
            }
            for (j, r) in rows.iter().enumerate() {
                check_finite(&format!("bath.couplings[{j}]"), r)?;
            }
            let g = DMatrix::from_fn(n, m, |j, k| rows[j][k]);
            let bath = BathSpec::new(frequencies.clone(), g, beta)?;
            return Ok(ResolvedBath {
                frequencies,
                beta,
                channels: crate::bath::diagonal_to_channels(&bath),
                diagonal: Some(bath),
            });
        }

        let configs = b.channels.as_ref().expect("one source present");
        if configs.is_empty() {
            return Err(Error::validation("bath.channels", "at least one channel is required"));
        }
        let mut channels = Vec::with_capacity(configs.len());
        let mut diagonal = true;
        for (a, c) in configs.iter().enumerate() {
            let path = format!("bath.channels[{a}]");
            let op = square(&format!("{path}.operator"), &c.operator, n)?;
            for r in &c.operator {
                check_finite(&format!("{path}.operator"), r)?;
            }
            if c.weights.len() != m {
                return Err(Error::validation(
                    format!("{path}.weights"),
                    format!("expected {m} entries (one per mode), got {}", c.weights.len()),
                ));
            }
            check_finite(&format!("{path}.weights"), &c.weights)?;
            diagonal &= (0..n).all(|i| (0..n).all(|j| i == j || op[(i, j)] == 0.0));
            let channel = CouplingChannel::new(to_complex(&op), c.weights.clone()).map_err(|e| match e {
                Error::Validation { message, .. } => Error::validation(format!("{path}.operator"), message),
                other => other,
            })?;
            channels.push(channel);
        }
        // g_{j,n} = Σ_a A_a[j,j] c_{a,n} when every operator is diagonal
        let diagonal = if diagonal {
            let g = DMatrix::from_fn(n, m, |j, k| {
                channels.iter().map(|c| c.op[(j, j)].re * c.weights[k]).sum::<f64>()
            });
            Some(BathSpec::new(frequencies.clone(), g, beta)?)
        } else {
            None
        };
        Ok(ResolvedBath {
            frequencies,
            beta,
            channels,
            diagonal,
        })
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grids;
        GridSpec::new(g.dt_fs, g.n_tau, &g.tp_fs, g.n_tau_prime)
    }

    pub fn disorder_model(&self, d: &DisorderConfig) -> DisorderModel {
        DisorderModel {
            sigma_cm: d.sigma_cm.clone(),
            samples: d.samples,
            seed: d.seed,
        }
    }

    pub fn fourier_options(&self, excitation_origin: f64, detection_origin: f64) -> FourierOptions {
        FourierOptions {
            window: self.spectra.window,
            pad: self.spectra.pad,
            excitation_origin,
            detection_origin,
        }
    }

    /// Carriers in cm⁻¹ (resolved).
    pub fn carriers_cm(&self) -> Result<[f64; 3]> {
        match self.pulses.carriers_cm {
            Some(c) => Ok(c),
            None => Ok([self.site_system()?.optical_gap(); 3]),
        }
    }

    pub fn memory_cap_bytes(&self) -> usize {
        self.limits.memory_mb.saturating_mul(1 << 20)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DIMER: &str = r#"{
        "system": {
            "site_energies_cm": [12100, 12000],
            "couplings_cm": [[0, 100], [100, 0]],
            "dipoles": [[1, 0, 0], [0, 1, 0]]
        },
        "bath": {
            "modes_cm": [120, 180],
            "couplings": [[0.05, 0.05], [0.04, 0.06]]
        }
    }"#;

    #[test]
    fn minimal_dimer_gets_defaults() {
        let c = parse_config(DIMER).unwrap();
        assert_eq!(c.system.reference_energy_cm, Some(12050.0));
        assert_eq!(c.system.ground_energy_cm, 0.0);
        assert_eq!(c.bath.temperature_k, Some(DEFAULT_TEMPERATURE_K));
        assert_eq!(c.pulses.carriers_cm, Some([12050.0; 3]));
        assert_eq!(c.pulses.envelopes, [Envelope::Impulsive; 3]);
        assert_eq!(c.grids, GridsConfig::default());
        assert_eq!(c.method, Method::Closed);
        assert_eq!(c.oracle, OracleSpec::default());
        assert_eq!(c.output.formats, vec![Format::Csv]);
        let bath = c.resolved_bath(2).unwrap();
        assert!(bath.diagonal.is_some());
        assert_eq!(bath.channels.len(), 2);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let text = DIMER.replace("\"modes_cm\"", "\"colour\": 1, \"modes_cm\"").replacen('{', "{\"extra\": [1],", 1);
        match parse_config(&text) {
            Err(Error::UnknownKeys(keys)) => {
                assert_eq!(keys, vec!["extra".to_string(), "bath.colour".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_channel_shape_names_channel() {
        let text = r#"{
            "system": {"site_energies_cm": [0, 10], "dipoles": [[1,0,0],[1,0,0]]},
            "bath": {"modes_cm": [100], "channels": [{"operator": [[1, 0, 0], [0, 0, 0]], "weights": [0.1]}]}
        }"#;
        match parse_config(text) {
            Err(Error::Validation { path, .. }) => assert!(path.starts_with("bath.channels[0]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn physical_inconsistencies_rejected() {
        let neg = DIMER.replace("\"modes_cm\"", "\"beta_cm\": -1, \"modes_cm\"");
        assert!(matches!(parse_config(&neg), Err(Error::Validation { path, .. }) if path == "bath.beta_cm"));
        let asym = DIMER.replace("[[0, 100], [100, 0]]", "[[0, 100], [90, 0]]");
        assert!(matches!(parse_config(&asym), Err(Error::Validation { path, .. }) if path.starts_with("system.couplings")));
        let pol = DIMER.replacen("\"bath\"", "\"pulses\": {\"polarizations\": [[1,1,0],[1,0,0],[1,0,0],[1,0,0]]}, \"bath\"", 1);
        assert!(matches!(parse_config(&pol), Err(Error::Validation { path, .. }) if path == "pulses.polarizations[0]"));
    }

    #[test]
    fn syntax_error_is_config_error() {
        let e = parse_config("{\"system\": ").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn channels_reduce_to_diagonal_bath() {
        let text = r#"{
            "system": {"site_energies_cm": [0, 300], "dipoles": [[1,0,0],[1,0,0]]},
            "bath": {"modes_cm": [100, 200], "channels": [
                {"operator": [[1, 0], [0, 0]], "weights": [0.1, 0.2]},
                {"operator": [[1, 0], [0, -1]], "weights": [0.3, 0.0]}
            ]}
        }"#;
        let c = parse_config(text).unwrap();
        let d = c.resolved_bath(2).unwrap().diagonal.unwrap();
        assert!((d.couplings[(0, 0)] - 0.4).abs() < 1e-15);
        assert!((d.couplings[(0, 1)] - 0.2).abs() < 1e-15);
        assert!((d.couplings[(1, 0)] + 0.3).abs() < 1e-15);
        assert_eq!(d.couplings[(1, 1)], 0.0);

        let off = text.replace("[[1, 0], [0, -1]]", "[[0, 1], [1, 0]]");
        let c = parse_config(&off).unwrap();
        assert!(c.resolved_bath(2).unwrap().diagonal.is_none());
    }

    #[test]
    fn spectral_density_bath() {
        let text = r#"{
            "system": {"site_energies_cm": [0, 300], "dipoles": [[1,0,0],[1,0,0]]},
            "bath": {"temperature_k": 77, "spectral_density": {"model": "drude-lorentz", "lambda_cm": 35, "gamma_cm": 50, "n_modes": 10}},
            "disorder": {"sigma_cm": [20], "samples": 3}
        }"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.disorder.as_ref().unwrap().sigma_cm, vec![20.0, 20.0]);
        let b = c.resolved_bath(2).unwrap();
        assert_eq!(b.frequencies.len(), 10);
        assert_eq!(b.diagonal.unwrap().n_excitons(), 2);
    }

    #[test]
    fn beta_forms_agree() {
        let t = DIMER.replace("\"modes_cm\"", "\"temperature_k\": 300, \"modes_cm\"");
        let kt = crate::units::BOLTZMANN_CM_PER_K * 300.0;
        let b = DIMER.replace("\"modes_cm\"", &format!("\"beta_cm\": {}, \"modes_cm\"", 1.0 / kt));
        let bt = parse_config(&t).unwrap().beta().unwrap();
        let bb = parse_config(&b).unwrap().beta().unwrap();
        assert!((bt - bb).abs() < 1e-12 * bt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip(
            e0 in 10000.0..14000.0f64,
            e1 in 10000.0..14000.0f64,
            j in -200.0..200.0f64,
            w in 20.0..500.0f64,
            g in 0.0..0.5f64,
            dt in 0.5..4.0f64,
            n in 2usize..64,
            method in 0usize..3,
            dis in proptest::option::of((0.0..100.0f64, 1usize..50, any::<u64>())),
        ) {
            let method = ["closed", "qme", "both"][method];
            let mut value = serde_json::json!({
                "system": {
                    "site_energies_cm": [e0, e1],
                    "couplings_cm": [[0.0, j], [j, 0.0]],
                    "dipoles": [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0]]
                },
                "bath": {"modes_cm": [w], "couplings": [[g], [g * 0.5]]},
                "grids": {"dt_fs": dt, "n_tau": n, "n_tau_prime": n, "tp_fs": [0.0, 3.0 * dt]},
                "method": method,
            });
            if let Some((s, k, seed)) = dis {
                value["disorder"] = serde_json::json!({"sigma_cm": [s], "samples": k, "seed": seed});
            }
            let parsed = parse_config(&value.to_string()).unwrap();
            let again = parse_config(&parsed.to_json().unwrap()).unwrap();
            prop_assert_eq!(parsed, again);
        }
    }
}
