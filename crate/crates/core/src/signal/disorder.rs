//! Static site-energy disorder averaging.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fourier::Spectrum2D;
use crate::error::{Error, Result};
use crate::exciton::SiteSystem;

/// Independent Gaussian offsets per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderModel {
    /// Standard deviation per site (cm⁻¹).
    pub sigma_cm: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

/// Samples processed per parallel batch before folding into the running sum.
const CHUNK: usize = 32;

impl DisorderModel {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::validation("disorder.samples", "at least one sample is required"));
        }
        if self.sigma_cm.len() != n_sites {
            return Err(Error::validation(
                "disorder.sigma_cm",
                format!("expected {n_sites} entries, got {}", self.sigma_cm.len()),
            ));
        }
        for (i, s) in self.sigma_cm.iter().enumerate() {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(Error::validation(format!("disorder.sigma_cm[{i}]"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Site offsets for sample `index`. Each sample owns its own stream of
    /// the seeded generator, so offsets do not depend on evaluation order.
    pub fn offsets(&self, index: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        self.sigma_cm
            .iter()
            .map(|&s| {
                let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
                s * z
            })
            .collect()
    }
}

/// Ensemble mean spectra and the per-bin sample variance `⟨|S − ⟨S⟩|²⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderAverage {
    pub mean: Vec<Spectrum2D>,
    pub variance: Vec<Vec<f64>>,
    pub samples: usize,
}

/// Runs `pipeline` once per disordered copy of `system` and averages the
/// resulting spectra. Every call must return spectra with identical shapes.
pub fn disorder_average<F>(system: &SiteSystem, model: &DisorderModel, pipeline: F) -> Result<DisorderAverage>
where
    F: Fn(&SiteSystem) -> Result<Vec<Spectrum2D>> + Sync,
{
    model.validate(system.n_sites())?;
    let mut sum: Option<Vec<Spectrum2D>> = None;
    let mut sum_sq: Vec<Vec<f64>> = Vec::new();

    for start in (0..model.samples).step_by(CHUNK) {
        let end = (start + CHUNK).min(model.samples);
        let batch: Vec<Vec<Spectrum2D>> = (start..end)
            .into_par_iter()
            .map(|i| pipeline(&system.with_site_offsets(&model.offsets(i))?))
            .collect::<Result<_>>()?;
        for spectra in batch {
            match sum.as_mut() {
                None => {
                    sum_sq = spectra
                        .iter()
                        .map(|s| s.values.iter().map(|z| z.norm_sqr()).collect())
                        .collect();
                    sum = Some(spectra);
                }
                Some(acc) => {
                    if acc.len() != spectra.len() {
                        return Err(Error::State("disorder samples produced different spectrum counts".into()));
                    }
                    for ((a, sq), s) in acc.iter_mut().zip(sum_sq.iter_mut()).zip(&spectra) {
                        if a.values.len() != s.values.len() {
                            return Err(Error::State("disorder samples produced different spectrum shapes".into()));
                        }
                        for ((x, q), y) in a.values.iter_mut().zip(sq.iter_mut()).zip(&s.values) {
                            *x += *y;
                            *q += y.norm_sqr();
                        }
                    }
                }
            }
        }
    }

    let n = model.samples as f64;
    let mut mean = sum.expect("at least one sample");
    let mut variance = Vec::with_capacity(mean.len());
    for (m, sq) in mean.iter_mut().zip(sum_sq) {
        for z in m.values.iter_mut() {
            *z /= n;
        }
        variance.push(
            m.values
                .iter()
                .zip(sq)
                .map(|(z, q)| (q / n - z.norm_sqr()).max(0.0))
                .collect(),
        );
    }
    Ok(DisorderAverage {
        mean,
        variance,
        samples: model.samples,
    })
}

/// Full width at half maximum of `|S|` along the main diagonal
/// `ω_τ′ = ω_τ`, linearly interpolated between bins. Both axes must share
/// spacing and origin.
pub fn diagonal_fwhm(spectrum: &Spectrum2D) -> Result<f64> {
    let n = spectrum.excitation.len();
    if n != spectrum.detection.len()
        || spectrum
            .excitation
            .iter()
            .zip(&spectrum.detection)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::validation("spectrum", "diagonal cut needs identical axes"));
    }
    let cut: Vec<f64> = (0..n).map(|i| spectrum.get(i, i).norm()).collect();
    let (peak, top) = cut
        .iter()
        .enumerate()
        .fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    if top == 0.0 {
        return Err(Error::Numeric("diagonal cut is identically zero".into()));
    }
    let half = top / 2.0;
    let dx = spectrum.excitation[1] - spectrum.excitation[0];
    let crossing = |dir: i64| -> f64 {
        let mut i = peak as i64;
        loop {
            let j = i + dir;
            if j < 0 || j >= n as i64 {
                return (i - peak as i64).abs() as f64 * dx;
            }
            let (a, b) = (cut[i as usize], cut[j as usize]);
            if b <= half {
                let frac = (a - half) / (a - b);
                return ((i - peak as i64).abs() as f64 + frac) * dx;
            }
            i = j;
        }
    };
    Ok(crossing(-1) + crossing(1))
}
