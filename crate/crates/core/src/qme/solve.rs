//! Channel workflows: chain the interval equations and trace the final
//! operator into `χ^(k)`.

use rayon::prelude::*;

use super::inhomogeneous::{reduce_inhomogeneous, Histories, InhomogeneousTerm, TermPoint};
use super::kernels::KernelContext;
use super::volterra::{volterra_solve, History};
use crate::bath::CouplingChannel;
use crate::error::{Error, Result};
use crate::exciton::DipoleProjection;
use crate::grid::{Channel, GridSpec, Provenance, ResponseGrid};
use crate::linalg::{outer, phase_diag, CMatrix};

type NoSource = fn(usize) -> Result<CMatrix>;

/// Kernel context sized for every time a grid evaluation touches.
pub fn context_for_grid(
    energies: &[f64],
    channels: Vec<CouplingChannel>,
    frequencies: &[f64],
    beta: f64,
    spec: &GridSpec,
) -> Result<KernelContext> {
    let tp_max = spec.tp_steps.iter().copied().max().unwrap_or(0);
    let op_steps = (spec.n_tau - 1).max(spec.n_tau_prime - 1).max(tp_max);
    let lags = (spec.n_tau - 1) + tp_max + (spec.n_tau_prime - 1);
    KernelContext::new(energies, channels, frequencies, beta, spec.dt, op_steps, lags)
}

/// Bytes of history storage a channel solve holds at once.
pub fn qme_memory_estimate(spec: &GridSpec, n_excitons: usize) -> usize {
    let tp_max = spec.tp_steps.iter().copied().max().unwrap_or(0);
    let per = n_excitons * n_excitons * std::mem::size_of::<num_complex::Complex64>();
    let threads = rayon::current_num_threads().max(1);
    // g̃₁ history, per-worker g̃₂ and g̃₃ histories plus source buffers
    per * (spec.n_tau_prime + threads * (2 * (tp_max + 1) + 3 * spec.n_tau))
}

fn check_step(spec: &GridSpec, ctx: &KernelContext) -> Result<()> {
    if (spec.dt - ctx.dt()).abs() > 1e-12 * spec.dt {
        return Err(Error::validation(
            "grids.dt_fs",
            format!("grid step {} differs from kernel step {}", spec.dt, ctx.dt()),
        ));
    }
    Ok(())
}

fn solve_left(ctx: &KernelContext, init: CMatrix, n_steps: usize) -> Result<History<CMatrix>> {
    volterra_solve(init, ctx.dt(), n_steps, None::<NoSource>, |t, s, x| ctx.kernel_left(t, s, x))
}

fn solve_right(ctx: &KernelContext, init: CMatrix, n_steps: usize) -> Result<History<CMatrix>> {
    volterra_solve(init, ctx.dt(), n_steps, None::<NoSource>, |t, s, x| ctx.kernel_right(t, s, x))
}

/// Solves the τ interval from `init` with a precomputed source and traces
/// `χ(τ) = Tr{g̃₃(τ) e^{ih_eτ}}`.
fn final_interval(ctx: &KernelContext, init: CMatrix, source: Vec<CMatrix>, n_tau: usize) -> Result<Vec<num_complex::Complex64>> {
    let h = volterra_solve(
        init,
        ctx.dt(),
        n_tau - 1,
        Some(|r: usize| Ok(source[r].clone())),
        |t, s, x| ctx.kernel_right(t, s, x),
    )?;
    let e = ctx.energies();
    Ok(h.samples
        .iter()
        .enumerate()
        .map(|(r, g)| (g * phase_diag(e, r as f64 * ctx.dt())).trace())
        .collect())
}

/// `χ^(k)` on the grid from the second-order multistep master equations.
pub fn chi_qme(k: usize, spec: &GridSpec, ctx: &KernelContext, dipoles: &DipoleProjection) -> Result<ResponseGrid> {
    let channel = Channel::from_index(k)?;
    check_step(spec, ctx)?;
    if dipoles.n_excitons() != ctx.dim() {
        return Err(Error::validation("pulses", "dipole projection size mismatch"));
    }
    let [d1, d2, d3, d4] = &dipoles.vectors;
    let dt = spec.dt;
    let e = ctx.energies();
    let n_tau = spec.n_tau;
    let n_tp = spec.n_tp();
    let tp_max = spec.tp_steps.iter().copied().max().unwrap_or(0);

    // values indexed [τ′][T_p][τ]
    let columns: Vec<Vec<Vec<num_complex::Complex64>>> = match channel {
        Channel::One | Channel::Four => {
            let one = channel == Channel::One;
            let g1 = if one {
                solve_left(ctx, outer(d1, d3), spec.n_tau_prime - 1)?
            } else {
                solve_right(ctx, outer(d4, d1), spec.n_tau_prime - 1)?
            };
            let dyad = if one { outer(d4, d2) } else { outer(d2, d3) };
            (0..spec.n_tau_prime)
                .into_par_iter()
                .map(|p| {
                    spec.tp_steps
                        .iter()
                        .map(|&q| {
                            let at = TermPoint { tau_prime: p, tp: q };
                            let hist = Histories { g1: Some(&g1), g2: None };
                            let (init, term) = if one {
                                (
                                    &dyad * phase_diag(e, -(p as f64) * dt) * &g1.samples[p],
                                    InhomogeneousTerm::CoherenceOne { lead: dyad.clone() },
                                )
                            } else {
                                (
                                    &g1.samples[p] * phase_diag(e, p as f64 * dt) * &dyad,
                                    InhomogeneousTerm::CoherenceFour { trail: dyad.clone() },
                                )
                            };
                            let source = reduce_inhomogeneous(&term, at, n_tau, hist, ctx)?;
                            final_interval(ctx, init, source, n_tau)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        }
        Channel::Two | Channel::Three => {
            let two = channel == Channel::Two;
            let g1 = if two {
                solve_left(ctx, outer(d1, d2), spec.n_tau_prime - 1)?
            } else {
                solve_right(ctx, outer(d2, d1), spec.n_tau_prime - 1)?
            };
            let lead = outer(d4, d3);
            (0..spec.n_tau_prime)
                .into_par_iter()
                .map(|p| {
                    let start = TermPoint { tau_prime: p, tp: 0 };
                    let hist1 = Histories { g1: Some(&g1), g2: None };
                    let (init2, pop) = if two {
                        (phase_diag(e, -(p as f64) * dt) * &g1.samples[p], InhomogeneousTerm::PopulationTwo)
                    } else {
                        (&g1.samples[p] * phase_diag(e, p as f64 * dt), InhomogeneousTerm::PopulationThree)
                    };
                    let i2 = reduce_inhomogeneous(&pop, start, tp_max + 1, hist1, ctx)?;
                    let g2 = volterra_solve(init2, dt, tp_max, Some(|t: usize| Ok(i2[t].clone())), |t, s, x| {
                        ctx.dissipator(t, s, x)
                    })?;
                    spec.tp_steps
                        .iter()
                        .map(|&q| {
                            let at = TermPoint { tau_prime: p, tp: q };
                            let hist = Histories { g1: Some(&g1), g2: Some(&g2) };
                            let term = if two {
                                InhomogeneousTerm::CoherenceTwo { lead: lead.clone() }
                            } else {
                                InhomogeneousTerm::CoherenceThree { lead: lead.clone() }
                            };
                            let source = reduce_inhomogeneous(&term, at, n_tau, hist, ctx)?;
                            let init = &lead
                                * phase_diag(e, -(q as f64) * dt)
                                * &g2.samples[q]
                                * phase_diag(e, q as f64 * dt);
                            final_interval(ctx, init, source, n_tau)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut grid = ResponseGrid::zeros(channel, Provenance::Qme, spec.clone());
    for (p, per_tp) in columns.iter().enumerate() {
        for (i_tp, col) in per_tp.iter().enumerate().take(n_tp) {
            for (r, v) in col.iter().enumerate() {
                grid.set(r, i_tp, p, *v);
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{diagonal_to_channels, BathSpec};
    use crate::closed::ClosedModel;
    use crate::linalg::{max_abs_diff, CVector, ONE};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn setup(g: f64) -> (Vec<f64>, BathSpec, DipoleProjection) {
        let energies = vec![-0.01, 0.012];
        let bath = BathSpec::new(
            vec![0.025, 0.035],
            DMatrix::from_row_slice(2, 2, &[g, 0.6 * g, 0.8 * g, g]),
            60.0,
        )
        .unwrap();
        let v = |a: f64, b: f64| CVector::from_vec(vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)]);
        let dip = DipoleProjection::from_vectors([v(1.0, 0.4), v(0.7, -0.5), v(0.2, 1.0), v(1.0, 0.3)]);
        (energies, bath, dip)
    }

    #[test]
    fn decoupled_limit_matches_closed() {
        let (e, bath, dip) = setup(0.0);
        let spec = GridSpec::new(4.0, 6, &[0.0, 20.0], 5).unwrap();
        let ctx = context_for_grid(&e, diagonal_to_channels(&bath), &bath.frequencies, bath.beta, &spec).unwrap();
        let model = ClosedModel::from_energies(&e, &bath, &dip).unwrap();
        for k in 1..=4 {
            let grid = chi_qme(k, &spec, &ctx, &dip).unwrap();
            for idx in 0..spec.n_points() {
                let (a, b, c) = spec.unflat(idx);
                let exact = model.chi(grid.channel, spec.tau(a), spec.tp(b), spec.tau_prime(c));
                assert!((exact - grid.values[idx]).norm() < 1e-10, "k={k} {a},{b},{c}");
            }
        }
    }

    #[test]
    fn decoupled_histories_are_constant() {
        let (e, bath, dip) = setup(0.0);
        let spec = GridSpec::uniform(2.0, 4, 1, 10).unwrap();
        let ctx = context_for_grid(&e, diagonal_to_channels(&bath), &bath.frequencies, bath.beta, &spec).unwrap();
        let x0 = outer(&dip.vectors[0], &dip.vectors[2]);
        let h = solve_left(&ctx, x0.clone(), 9).unwrap();
        assert!(h.samples.iter().all(|x| max_abs_diff(x, &x0) < 1e-12));
    }

    #[test]
    fn weak_coupling_tracks_closed_form() {
        let (e, bath, dip) = setup(0.05);
        let spec = GridSpec::new(2.0, 12, &[0.0, 30.0], 12).unwrap();
        let ctx = context_for_grid(&e, diagonal_to_channels(&bath), &bath.frequencies, bath.beta, &spec).unwrap();
        let model = ClosedModel::from_energies(&e, &bath, &dip).unwrap();
        for k in 1..=4 {
            let grid = chi_qme(k, &spec, &ctx, &dip).unwrap();
            let mut dev: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for idx in 0..spec.n_points() {
                let (a, b, c) = spec.unflat(idx);
                let exact = model.chi(grid.channel, spec.tau(a), spec.tp(b), spec.tau_prime(c));
                dev = dev.max((exact - grid.values[idx]).norm());
                scale = scale.max(exact.norm());
            }
            assert!(dev / scale < 1e-3, "k={k}: {}", dev / scale);
        }
    }

    #[test]
    fn origin_identity() {
        let (e, bath, dip) = setup(0.2);
        let spec = GridSpec::uniform(2.0, 2, 1, 2).unwrap();
        let ctx = context_for_grid(&e, diagonal_to_channels(&bath), &bath.frequencies, bath.beta, &spec).unwrap();
        let model = ClosedModel::from_energies(&e, &bath, &dip).unwrap();
        for ch in Channel::ALL {
            let grid = chi_qme(ch.index(), &spec, &ctx, &dip).unwrap();
            assert!((grid.get(0, 0, 0) - model.dipole_sum(ch)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_exciton_channel_symmetry() {
        let one = CVector::from_element(1, ONE);
        let dip = DipoleProjection::from_vectors([one.clone(), one.clone(), one.clone(), one]);
        let bath = BathSpec::new(vec![0.02], DMatrix::from_element(1, 1, 0.0), 30.0).unwrap();
        let spec = GridSpec::new(3.0, 5, &[0.0, 9.0], 5).unwrap();
        let ctx = context_for_grid(&[0.0], diagonal_to_channels(&bath), &bath.frequencies, bath.beta, &spec).unwrap();
        let g1 = chi_qme(1, &spec, &ctx, &dip).unwrap();
        let g4 = chi_qme(4, &spec, &ctx, &dip).unwrap();
        for (a, b) in g1.values.iter().zip(&g4.values) {
            assert!((a.conj() - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mismatched_step_rejected() {
        let (e, bath, dip) = setup(0.1);
        let spec = GridSpec::uniform(2.0, 3, 1, 3).unwrap();
        let ctx = context_for_grid(&e, diagonal_to_channels(&bath), &bath.frequencies, bath.beta, &spec).unwrap();
        let other = GridSpec::uniform(1.0, 3, 1, 3).unwrap();
        assert!(matches!(chi_qme(1, &other, &ctx, &dip), Err(Error::Validation { .. })));
    }
}
