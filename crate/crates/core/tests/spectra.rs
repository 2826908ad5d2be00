use std::fs;

use fourwave::config::parse_config;
use fourwave::grid::GridSpec;
use fourwave::job::{run_job, RunOptions};
use fourwave::signal::{fourier_2d, FourierOptions, SignalKind, TimeSignal};
use num_complex::Complex64;

fn damped(kind: SignalKind, omega: f64, gamma: f64, dt: f64, n: usize) -> TimeSignal {
    let spec = GridSpec::new(dt, n, &[0.0], n).unwrap();
    let s = match kind {
        SignalKind::Rephasing => -1.0,
        SignalKind::Nonrephasing => 1.0,
    };
    let values = (0..spec.n_points())
        .map(|idx| {
            let (r, _, p) = spec.unflat(idx);
            let (tau, tpr) = (spec.tau(r), spec.tau_prime(p));
            Complex64::from_polar((-gamma * (tau + tpr)).exp(), omega * tau + s * omega * tpr)
        })
        .collect();
    TimeSignal { kind, spec, values }
}

/// Half width at half maximum of the real part of a 1D cut, interpolated.
fn hwhm(axis: &[f64], cut: &[f64], peak: usize) -> f64 {
    let half = cut[peak] / 2.0;
    let side = |dir: isize| {
        let mut i = peak as isize;
        loop {
            let j = i + dir;
            let (a, b) = (cut[i as usize], cut[j as usize]);
            if b <= half {
                let x = (a - half) / (a - b);
                return (axis[j as usize] - axis[i as usize]).abs() * x + (axis[i as usize] - axis[peak]).abs();
            }
            i = j;
        }
    };
    0.5 * (side(-1) + side(1))
}

#[test]
fn damped_exponential_gives_lorentzian() {
    let (omega, gamma) = (0.35, 0.04);
    for kind in SignalKind::ALL {
        let s = fourier_2d(&damped(kind, omega, gamma, 1.0, 512), 0, &FourierOptions::default()).unwrap();
        let (i, j) = s.argmax();
        let (dx, dy) = s.spacing();
        assert!((s.excitation[i] - omega).abs() <= dx);
        assert!((s.detection[j] - omega).abs() <= dy);
        // cuts through the peak, phased so the peak is real and positive
        let p = s.get(i, j);
        let phase = p.conj() / p.norm();
        let det: Vec<f64> = (0..s.detection.len()).map(|k| (s.get(i, k) * phase).re).collect();
        let exc: Vec<f64> = (0..s.excitation.len()).map(|k| (s.get(k, j) * phase).re).collect();
        for w in [hwhm(&s.detection, &det, j), hwhm(&s.excitation, &exc, i)] {
            assert!((w - gamma).abs() < 0.1 * gamma, "{} half width {w} vs {gamma}", kind.name());
        }
    }
}

#[test]
fn spectra_scale_linearly() {
    let sig = damped(SignalKind::Rephasing, 0.2, 0.05, 1.0, 32);
    let s = Complex64::new(-0.7, 2.3);
    let a = fourier_2d(&sig, 0, &FourierOptions::default()).unwrap();
    let b = fourier_2d(&sig.scaled(s), 0, &FourierOptions::default()).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x * s - y).norm() <= 1e-12 * (x * s).norm().max(1e-300));
    }
}

fn peak_from_csv(path: &std::path::Path) -> (f64, f64, f64) {
    let text = fs::read_to_string(path).unwrap();
    let mut best = (0.0, 0.0, -1.0);
    let mut bin = f64::INFINITY;
    let mut prev: Option<f64> = None;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if let Some(p) = prev {
            if f[1] > p {
                bin = bin.min(f[1] - p);
            }
        }
        prev = Some(f[1]);
        let m = f[2].hypot(f[3]);
        if m > best.2 {
            best = (f[0], f[1], m);
        }
    }
    (best.0, best.1, bin)
}

#[test]
fn shifting_energies_and_frame_shifts_spectra() {
    let config = |shift: f64| {
        format!(
            r#"{{
            "system": {{"site_energies_cm": [{}, {}], "couplings_cm": [[0, 80], [80, 0]], "dipoles": [[1, 0, 0], [0.3, 1, 0]]}},
            "bath": {{"temperature_k": 300, "modes_cm": [150], "couplings": [[0.2], [0.25]]}},
            "grids": {{"dt_fs": 2, "n_tau": 64, "n_tau_prime": 64, "tp_fs": [0]}}
        }}"#,
            12000.0 + shift,
            12150.0 + shift
        )
    };
    let delta_cm = 300.0;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, shift) in [(&a, 0.0), (&b, delta_cm)] {
        let cfg = parse_config(&config(shift)).unwrap();
        run_job(
            &cfg,
            &RunOptions {
                out_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            },
        )
        .unwrap();
    }
    let delta = fourwave::units::cm_to_rad_fs(delta_cm);
    for kind in ["rephasing", "nonrephasing"] {
        let rel = format!("spectra/{kind}_closed_tp0.csv");
        let (x0, y0, bin) = peak_from_csv(&a.path().join(&rel));
        let (x1, y1, _) = peak_from_csv(&b.path().join(&rel));
        assert!((x1 - x0 - delta).abs() <= bin * 1.000001, "{kind} excitation");
        assert!((y1 - y0 - delta).abs() <= bin * 1.000001, "{kind} detection");
    }
}
