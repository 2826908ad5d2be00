//! Source terms that carry bath memory from earlier pulse intervals into
//! later ones.
//!
//! Each term pairs a bath operator from an earlier interval with one in the
//! current interval; the pair reduces to `C_ab` evaluated at the difference
//! of their effective bath times, with system operators kept in order.

use num_complex::Complex64;

use super::kernels::KernelContext;
use super::volterra::{trapezoid_weight, History};
use crate::error::{Error, Result};
use crate::linalg::{phase_diag, CMatrix, ZERO};

/// Which source term to build. `lead`/`trail` are the dipole dyads
/// applied at the third interaction.
#[derive(Debug, Clone)]
pub enum InhomogeneousTerm {
    /// Channel 1, τ interval: `Σ_ab ∫₀^{τ′} du C_ab(τ+T_p+τ′−u) L e^{−ih_eτ′} Ã_b(u) g̃₁(u) Ã_a(τ)`.
    CoherenceOne { lead: CMatrix },
    /// Channel 4, τ interval: `−Σ_ab ∫₀^{τ′} du C_ab(u−τ′−T_p−τ) g̃₁(u) Ã_a(u) e^{ih_eτ′} R Ã_b(τ)`.
    CoherenceFour { trail: CMatrix },
    /// Channel 2, T_p interval: `−Σ_ab ∫₀^{τ′} du C_ab(T_p+τ′−u) [Ã_a(T_p), e^{−ih_eτ′} Ã_b(u) g̃₁(u)]`.
    PopulationTwo,
    /// Channel 3, T_p interval: `Σ_ab ∫₀^{τ′} du C_ab(u−T_p−τ′) [Ã_b(T_p), g̃₁(u) Ã_a(u) e^{ih_eτ′}]`.
    PopulationThree,
    /// Channel 2, τ interval: memory from both the τ′ and T_p intervals.
    CoherenceTwo { lead: CMatrix },
    /// Channel 3, τ interval: memory from both the τ′ and T_p intervals.
    CoherenceThree { lead: CMatrix },
}

/// Histories a term may read: `g̃₁` over τ′ and `g̃₂` over T_p (for the
/// current τ′).
#[derive(Debug, Clone, Copy, Default)]
pub struct Histories<'a> {
    pub g1: Option<&'a History<CMatrix>>,
    pub g2: Option<&'a History<CMatrix>>,
}

/// Grid position of the earlier intervals, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermPoint {
    pub tau_prime: usize,
    pub tp: usize,
}

fn need<'a>(h: Option<&'a History<CMatrix>>, name: &str, len: usize, dt: f64) -> Result<&'a History<CMatrix>> {
    let h = h.ok_or_else(|| Error::State(format!("{name} history is required but missing")))?;
    if (h.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::validation(
            "grids.dt_fs",
            format!("{name} history step {} differs from kernel step {dt}", h.dt),
        ));
    }
    if h.len() < len {
        return Err(Error::State(format!(
            "{name} history has {} samples, {len} required",
            h.len()
        )));
    }
    Ok(h)
}

fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// Source values at outer steps `0..n_out`.
pub fn reduce_inhomogeneous(
    term: &InhomogeneousTerm,
    at: TermPoint,
    n_out: usize,
    hist: Histories<'_>,
    ctx: &KernelContext,
) -> Result<Vec<CMatrix>> {
    let n = ctx.dim();
    let na = ctx.n_channels();
    let dt = ctx.dt();
    let e = ctx.energies();
    let p = at.tau_prime;
    let q = at.tp;
    let g1 = need(hist.g1, "g1", p + 1, dt)?;
    let wu = |u: usize| trapezoid_weight(u, p, dt);

    match term {
        InhomogeneousTerm::CoherenceOne { lead } => {
            let pre = lead * phase_diag(e, -(p as f64) * dt);
            // M_b(u) = L e^{−ih_eτ′} Ã_b(u) g̃₁(u)
            let m = products(na, p, |b, u| Ok(&pre * ctx.a_tilde(b, u)? * &g1.samples[u]))?;
            (0..n_out)
                .map(|r| {
                    let mut out = zeros(n);
                    for a in 0..na {
                        let mut s = zeros(n);
                        for b in 0..na {
                            for u in 0..=p {
                                let c = ctx.corr(a, b, (r + q + p) as i64 - u as i64)? * wu(u);
                                add_scaled(&mut s, &m[b][u], c);
                            }
                        }
                        out += s * ctx.a_tilde(a, r)?;
                    }
                    Ok(out)
                })
                .collect()
        }
        InhomogeneousTerm::CoherenceFour { trail } => {
            let post = phase_diag(e, p as f64 * dt) * trail;
            let m = products(na, p, |a, u| Ok(&g1.samples[u] * ctx.a_tilde(a, u)? * &post))?;
            (0..n_out)
                .map(|r| {
                    let mut out = zeros(n);
                    for b in 0..na {
                        let mut s = zeros(n);
                        for a in 0..na {
                            for u in 0..=p {
                                let c = ctx.corr(a, b, u as i64 - (p + q + r) as i64)? * wu(u);
                                add_scaled(&mut s, &m[a][u], c);
                            }
                        }
                        out -= s * ctx.a_tilde(b, r)?;
                    }
                    Ok(out)
                })
                .collect()
        }
        InhomogeneousTerm::PopulationTwo => {
            let pre = phase_diag(e, -(p as f64) * dt);
            let y = products(na, p, |b, u| Ok(&pre * ctx.a_tilde(b, u)? * &g1.samples[u]))?;
            (0..n_out)
                .map(|t| {
                    let mut out = zeros(n);
                    for a in 0..na {
                        let mut s = zeros(n);
                        for b in 0..na {
                            for u in 0..=p {
                                let c = ctx.corr(a, b, (t + p) as i64 - u as i64)? * wu(u);
                                add_scaled(&mut s, &y[b][u], c);
                            }
                        }
                        let at = ctx.a_tilde(a, t)?;
                        out -= at * &s - &s * at;
                    }
                    Ok(out)
                })
                .collect()
        }
        InhomogeneousTerm::PopulationThree => {
            let post = phase_diag(e, p as f64 * dt);
            let z = products(na, p, |a, u| Ok(&g1.samples[u] * ctx.a_tilde(a, u)? * &post))?;
            (0..n_out)
                .map(|t| {
                    let mut out = zeros(n);
                    for b in 0..na {
                        let mut s = zeros(n);
                        for a in 0..na {
                            for u in 0..=p {
                                let c = ctx.corr(a, b, u as i64 - (t + p) as i64)? * wu(u);
                                add_scaled(&mut s, &z[a][u], c);
                            }
                        }
                        let bt = ctx.a_tilde(b, t)?;
                        out += bt * &s - &s * bt;
                    }
                    Ok(out)
                })
                .collect()
        }
        InhomogeneousTerm::CoherenceTwo { lead } | InhomogeneousTerm::CoherenceThree { lead } => {
            let g2 = need(hist.g2, "g2", q + 1, dt)?;
            let fwd = phase_diag(e, -(q as f64) * dt);
            let back = phase_diag(e, q as f64 * dt);
            let lf = lead * &fwd;
            let two = matches!(term, InhomogeneousTerm::CoherenceTwo { .. });
            // memory from the τ′ interval
            let first = if two {
                let pre = &lf * phase_diag(e, -(p as f64) * dt);
                products(na, p, |b, u| Ok(&pre * ctx.a_tilde(b, u)? * &g1.samples[u] * &back))?
            } else {
                let post = phase_diag(e, p as f64 * dt) * &back;
                products(na, p, |a, u| Ok(&lf * &g1.samples[u] * ctx.a_tilde(a, u)? * &post))?
            };
            // memory from the T_p interval
            let left = products(na, q, |b, t| Ok(&lf * ctx.a_tilde(b, t)? * &g2.samples[t] * &back))?;
            let right = products(na, q, |b, t| Ok(&lf * &g2.samples[t] * ctx.a_tilde(b, t)? * &back))?;
            let wt = |t: usize| trapezoid_weight(t, q, dt);
            (0..n_out)
                .map(|r| {
                    let mut out = zeros(n);
                    for a in 0..na {
                        let mut s = zeros(n);
                        for b in 0..na {
                            for u in 0..=p {
                                if two {
                                    let c = ctx.corr(a, b, (r + q + p) as i64 - u as i64)? * wu(u);
                                    add_scaled(&mut s, &first[b][u], c);
                                } else {
                                    // roles of a and b swap: the τ operator is the second index
                                    let c = ctx.corr(b, a, u as i64 - (p + q + r) as i64)? * wu(u);
                                    add_scaled(&mut s, &first[b][u], -c);
                                }
                            }
                            for t in 0..=q {
                                let c = ctx.corr(a, b, (q + r) as i64 - t as i64)? * wt(t);
                                add_scaled(&mut s, &left[b][t], c);
                                add_scaled(&mut s, &right[b][t], -c.conj());
                            }
                        }
                        out += s * ctx.a_tilde(a, r)?;
                    }
                    Ok(out)
                })
                .collect()
        }
    }
}

/// `out[c][u]` for channel `c` and step `u = 0..=len`.
fn products<F>(na: usize, len: usize, f: F) -> Result<Vec<Vec<CMatrix>>>
where
    F: Fn(usize, usize) -> Result<CMatrix>,
{
    (0..na).map(|c| (0..=len).map(|u| f(c, u)).collect()).collect()
}

#[inline]
fn add_scaled(acc: &mut CMatrix, x: &CMatrix, c: Complex64) {
    if c != ZERO {
        for (a, b) in acc.iter_mut().zip(x.iter()) {
            *a += b * c;
        }
    }
}
