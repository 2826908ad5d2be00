//! Third-order polarization from finite pulse envelopes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::impulsive::{impulsive_signal, TimeSignal};
use crate::error::{Error, Result};
use crate::grid::ResponseGrid;

/// Temporal envelope of one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Envelope {
    Impulsive,
    /// Unit-area Gaussian with the given full width at half maximum (fs).
    Gaussian { fwhm_fs: f64 },
}

impl Envelope {
    fn sigma(self) -> f64 {
        match self {
            Envelope::Impulsive => 0.0,
            Envelope::Gaussian { fwhm_fs } => fwhm_fs / (2.0 * (2.0 * 2f64.ln()).sqrt()),
        }
    }
}

/// Carriers, envelopes and centers of the three incoming pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSetup {
    /// Carrier frequencies in rad/fs (detunings when working in a rotating frame).
    pub carriers: [f64; 3],
    pub envelopes: [Envelope; 3],
    /// Pulse centers `t₁ ≤ t₂ ≤ t₃` in fs.
    pub centers: [f64; 3],
}

impl PulseSetup {
    pub fn validate(&self) -> Result<()> {
        let [t1, t2, t3] = self.centers;
        if !(t1 <= t2 && t2 <= t3) {
            return Err(Error::validation("pulses.centers_fs", "pulse centers must be ordered t1 <= t2 <= t3"));
        }
        for (i, env) in self.envelopes.iter().enumerate() {
            if let Envelope::Gaussian { fwhm_fs } = env {
                if !(fwhm_fs.is_finite() && *fwhm_fs > 0.0) {
                    return Err(Error::validation(format!("pulses.envelopes[{i}].fwhm_fs"), "must be positive"));
                }
            }
        }
        let impulsive = self.envelopes.iter().filter(|e| matches!(e, Envelope::Impulsive)).count();
        if impulsive != 0 && impulsive != 3 {
            return Err(Error::validation(
                "pulses.envelopes",
                "envelopes must be either all impulsive or all gaussian",
            ));
        }
        Ok(())
    }
}

/// Rephasing and nonrephasing parts of `ε_m·P̄^(3)(t_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub rephasing: Complex64,
    pub nonrephasing: Complex64,
}

impl Polarization {
    /// Real observable `2 Im{·}` of the summed complex polarization.
    pub fn signal(&self) -> f64 {
        2.0 * (self.rephasing + self.nonrephasing).im
    }
}

fn gaussian(t: f64, sigma: f64) -> f64 {
    (-(t * t) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn grid_index(value: f64, dt: f64, n: usize, axis: &str) -> Result<usize> {
    let x = value / dt;
    let r = x.round();
    if (x - r).abs() > 1e-9 * x.abs().max(1.0) || r < 0.0 || r as usize >= n {
        return Err(Error::validation(
            format!("grids.{axis}"),
            format!("delay {value} fs is not a sample of the {axis} axis"),
        ));
    }
    Ok(r as usize)
}

/// Evaluates the polarization at detection time `t_m` by trapezoidal
/// quadrature of envelopes × phased responses over the `(τ, T_p, τ′)` grid.
/// Impulsive envelopes pick the grid point `(t_m − t₃, t₃ − t₂, t₂ − t₁)`.
pub fn assemble_polarization(grids: &[ResponseGrid], gap: f64, pulses: &PulseSetup, t_m: f64) -> Result<Polarization> {
    pulses.validate()?;
    let (reph, nonreph) = impulsive_signal(grids, gap, pulses.carriers)?;
    let spec = &reph.spec;
    let [c1, c2, c3] = pulses.centers;

    if matches!(pulses.envelopes[0], Envelope::Impulsive) {
        let r = grid_index(t_m - c3, spec.dt, spec.n_tau, "tau")?;
        let p = grid_index(c2 - c1, spec.dt, spec.n_tau_prime, "tau_prime")?;
        let tp = c3 - c2;
        let q = spec
            .tp_steps
            .iter()
            .position(|&s| ((s as f64) * spec.dt - tp).abs() <= 1e-9 * tp.abs().max(1.0))
            .ok_or_else(|| Error::validation("grids.tp_fs", format!("delay {tp} fs is not a population time")))?;
        return Ok(Polarization {
            rephasing: reph.get(r, q, p),
            nonrephasing: nonreph.get(r, q, p),
        });
    }

    // T_p must be a dense uniform axis for quadrature
    if spec.tp_steps.iter().enumerate().any(|(i, &s)| s != i) {
        return Err(Error::validation(
            "grids.tp_fs",
            "finite envelopes need a uniform population axis 0, dt, 2dt, ...",
        ));
    }
    let [s1, s2, s3] = pulses.envelopes.map(Envelope::sigma);
    let reach = 5.0;
    let check = |axis: &str, center: f64, width: f64, n: usize| -> Result<()> {
        let hi = (n - 1) as f64 * spec.dt;
        // the response vanishes for negative delays, so only the upper edge can be deficient
        if center + reach * width > hi + 1e-9 {
            return Err(Error::validation(
                format!("grids.{axis}"),
                format!(
                    "envelope support [{:.3}, {:.3}] fs exceeds the {axis} axis [0, {hi:.3}] fs",
                    center - reach * width,
                    center + reach * width
                ),
            ));
        }
        Ok(())
    };
    check("tau", t_m - c3, s3, spec.n_tau)?;
    check("tp", c3 - c2, s2 + s3, spec.n_tp())?;
    check("tau_prime", c2 - c1, s1 + s2, spec.n_tau_prime)?;

    let weight = |k: usize, n: usize| if n > 1 && (k == 0 || k == n - 1) { 0.5 } else { 1.0 };
    let dt = spec.dt;
    let integrate = |sig: &TimeSignal| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..spec.n_tau {
            let tau = spec.tau(r);
            // t₃ = t_m − τ
            let e3 = gaussian(t_m - tau - c3, s3) * weight(r, spec.n_tau);
            if e3 == 0.0 {
                continue;
            }
            for q in 0..spec.n_tp() {
                let tp = spec.tp(q);
                let e2 = gaussian(t_m - tau - tp - c2, s2) * weight(q, spec.n_tp());
                if e2 == 0.0 {
                    continue;
                }
                for p in 0..spec.n_tau_prime {
                    let t1 = t_m - tau - tp - spec.tau_prime(p);
                    let e1 = gaussian(t1 - c1, s1) * weight(p, spec.n_tau_prime);
                    acc += sig.get(r, q, p) * (e1 * e2 * e3);
                }
            }
        }
        acc * dt * dt * dt
    };
    Ok(Polarization {
        rephasing: integrate(&reph),
        nonrephasing: integrate(&nonreph),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Channel, GridSpec, Provenance};

    fn smooth_grids(spec: &GridSpec) -> Vec<ResponseGrid> {
        Channel::ALL
            .iter()
            .map(|&ch| {
                let mut g = ResponseGrid::zeros(ch, Provenance::Closed, spec.clone());
                for idx in 0..spec.n_points() {
                    let (a, b, c) = spec.unflat(idx);
                    let (t, tp, tpr) = (spec.tau(a), spec.tp(b), spec.tau_prime(c));
                    let k = ch.index() as f64;
                    g.values[idx] = Complex64::from_polar(
                        (-(t + tpr) / 80.0 - tp / 200.0).exp(),
                        0.03 * k * t - 0.02 * tpr + 0.01 * tp,
                    );
                }
                g
            })
            .collect()
    }

    #[test]
    fn zero_responses_give_zero() {
        let spec = GridSpec::uniform(1.0, 40, 40, 40).unwrap();
        let grids: Vec<_> = Channel::ALL
            .iter()
            .map(|&ch| ResponseGrid::zeros(ch, Provenance::Closed, spec.clone()))
            .collect();
        let pulses = PulseSetup {
            carriers: [0.0; 3],
            envelopes: [Envelope::Gaussian { fwhm_fs: 3.0 }; 3],
            centers: [0.0, 12.0, 24.0],
        };
        let p = assemble_polarization(&grids, 0.0, &pulses, 36.0).unwrap();
        assert_eq!(p.signal(), 0.0);
    }

    #[test]
    fn impulsive_picks_grid_point() {
        let spec = GridSpec::uniform(1.0, 20, 20, 20).unwrap();
        let grids = smooth_grids(&spec);
        let pulses = PulseSetup {
            carriers: [0.01, 0.02, 0.0],
            envelopes: [Envelope::Impulsive; 3],
            centers: [0.0, 5.0, 12.0],
        };
        let p = assemble_polarization(&grids, 0.0, &pulses, 19.0).unwrap();
        let (r, _) = impulsive_signal(&grids, 0.0, pulses.carriers).unwrap();
        assert!((p.rephasing - r.get(7, 7, 5)).norm() < 1e-6);
    }

    #[test]
    fn support_beyond_grid_names_axis() {
        let spec = GridSpec::uniform(1.0, 20, 20, 20).unwrap();
        let grids = smooth_grids(&spec);
        let pulses = PulseSetup {
            carriers: [0.0; 3],
            envelopes: [Envelope::Gaussian { fwhm_fs: 4.0 }; 3],
            centers: [0.0, 17.0, 18.0],
        };
        match assemble_polarization(&grids, 0.0, &pulses, 26.0) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "grids.tau_prime"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shrinking_envelopes_converge_to_impulsive() {
        let spec = GridSpec::uniform(0.5, 80, 80, 112).unwrap();
        let grids = smooth_grids(&spec);
        let centers = [0.0, 20.0, 25.0];
        let t_m = 45.0;
        let carriers = [0.01, 0.015, 0.0];
        let exact = assemble_polarization(
            &grids,
            0.0,
            &PulseSetup {
                carriers,
                envelopes: [Envelope::Impulsive; 3],
                centers,
            },
            t_m,
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for fwhm in [8.0, 4.0, 2.0] {
            let p = assemble_polarization(
                &grids,
                0.0,
                &PulseSetup {
                    carriers,
                    envelopes: [Envelope::Gaussian { fwhm_fs: fwhm }; 3],
                    centers,
                },
                t_m,
            )
            .unwrap();
            let err = (p.rephasing - exact.rephasing).norm() + (p.nonrephasing - exact.nonrephasing).norm();
            assert!(err < last, "fwhm {fwhm}: {err} !< {last}");
            last = err;
        }
    }
}
