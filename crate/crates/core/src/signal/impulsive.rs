//! Phase-matched signals in the impulsive limit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Channel, GridSpec, ResponseGrid};

/// Phase-matching direction. The `(χ¹, χ²)` group is labeled rephasing
/// (echo) and `(χ³, χ⁴)` nonrephasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Rephasing,
    Nonrephasing,
}

impl SignalKind {
    pub const ALL: [SignalKind; 2] = [SignalKind::Rephasing, SignalKind::Nonrephasing];

    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Rephasing => "rephasing",
            SignalKind::Nonrephasing => "nonrephasing",
        }
    }
}

/// Complex signal on the `(τ, T_p, τ′)` grid, same layout as [`ResponseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub kind: SignalKind,
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl TimeSignal {
    #[inline]
    pub fn get(&self, i_tau: usize, i_tp: usize, i_tau_prime: usize) -> Complex64 {
        self.values[self.spec.flat(i_tau, i_tp, i_tau_prime)]
    }

    pub fn scaled(&self, s: Complex64) -> TimeSignal {
        TimeSignal {
            values: self.values.iter().map(|z| z * s).collect(),
            ..self.clone()
        }
    }
}

fn find<'a>(grids: &'a [ResponseGrid], ch: Channel) -> Result<&'a ResponseGrid> {
    grids
        .iter()
        .find(|g| g.channel == ch)
        .ok_or_else(|| Error::validation("grids", format!("channel {} response is missing", ch.index())))
}

/// Multiplies the channel sums by their carrier phases:
///
/// * rephasing `(χ¹+χ²) e^{−i(ω₂−ω₁)T_p} e^{iω₁τ′} e^{iΩ(τ−τ′)}`
/// * nonrephasing `(χ³+χ⁴) e^{i(ω₂−ω₁)T_p} e^{−iω₁τ′} e^{iΩ(τ+τ′)}`
///
/// with `Ω = gap` the optical gap `ℰ_e − ℰ_g`. In a rotating frame pass the
/// carrier detunings from the frame frequency and `gap = 0`.
pub fn impulsive_signal(grids: &[ResponseGrid], gap: f64, carriers: [f64; 3]) -> Result<(TimeSignal, TimeSignal)> {
    let g1 = find(grids, Channel::One)?;
    let spec = g1.spec.clone();
    for g in grids {
        if g.spec != spec {
            return Err(Error::validation(
                "grids",
                format!("channel {} axes differ from channel 1", g.channel.index()),
            ));
        }
    }
    let g2 = find(grids, Channel::Two)?;
    let g3 = find(grids, Channel::Three)?;
    let g4 = find(grids, Channel::Four)?;
    let [w1, w2, _] = carriers;
    let mut reph = Vec::with_capacity(spec.n_points());
    let mut nonreph = Vec::with_capacity(spec.n_points());
    for idx in 0..spec.n_points() {
        let (a, b, c) = spec.unflat(idx);
        let (tau, tp, tpr) = (spec.tau(a), spec.tp(b), spec.tau_prime(c));
        let pr = -(w2 - w1) * tp + w1 * tpr + gap * (tau - tpr);
        let pn = (w2 - w1) * tp - w1 * tpr + gap * (tau + tpr);
        reph.push((g1.values[idx] + g2.values[idx]) * Complex64::from_polar(1.0, pr));
        nonreph.push((g3.values[idx] + g4.values[idx]) * Complex64::from_polar(1.0, pn));
    }
    Ok((
        TimeSignal {
            kind: SignalKind::Rephasing,
            spec: spec.clone(),
            values: reph,
        },
        TimeSignal {
            kind: SignalKind::Nonrephasing,
            spec,
            values: nonreph,
        },
    ))
}
