//! Single-exciton Hamiltonian, its eigenbasis and projected transition dipoles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::cm_to_rad_fs;

/// Tolerance on `Δ − Δᵀ`, relative to the largest coupling.
const SYMMETRY_TOL: f64 = 1e-12;

/// Site representation of a multichromophoric system.
///
/// `site_energies` are absolute excitation energies of the chromophores.
/// The exciton Hamiltonian used downstream is measured from
/// `reference_energy`: `h_e = Σ_l (ε_l − ℰ_e)|l⟩⟨l| + Σ Δ_{ll'}|l⟩⟨l'|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSystem {
    site_energies: Vec<f64>,
    couplings: DMatrix<f64>,
    dipoles: Vec<[f64; 3]>,
    reference_energy: f64,
    ground_energy: f64,
}

impl SiteSystem {
    /// Builds a validated system with `ℰ_e` defaulting to the mean site energy
    /// and `ℰ_g = 0`.
    pub fn new(
        site_energies: Vec<f64>,
        couplings: DMatrix<f64>,
        dipoles: Vec<[f64; 3]>,
    ) -> Result<Self> {
        let n = site_energies.len();
        if n == 0 {
            return Err(Error::validation("system.site_energies", "at least one site is required"));
        }
        let mean = site_energies.iter().sum::<f64>() / n as f64;
        let system = SiteSystem {
            site_energies,
            couplings,
            dipoles,
            reference_energy: mean,
            ground_energy: 0.0,
        };
        system.validate()?;
        Ok(system)
    }

    pub fn with_reference_energy(mut self, reference: f64) -> Result<Self> {
        if !reference.is_finite() {
            return Err(Error::validation("system.reference_energy", "must be finite"));
        }
        self.reference_energy = reference;
        Ok(self)
    }

    pub fn with_ground_energy(mut self, ground: f64) -> Result<Self> {
        if !ground.is_finite() {
            return Err(Error::validation("system.ground_energy", "must be finite"));
        }
        self.ground_energy = ground;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.site_energies.len();
        if self.couplings.shape() != (n, n) {
            return Err(Error::validation(
                "system.couplings",
                format!("expected {n}x{n}, got {:?}", self.couplings.shape()),
            ));
        }
        if self.dipoles.len() != n {
            return Err(Error::validation(
                "system.dipoles",
                format!("expected {n} dipole vectors, got {}", self.dipoles.len()),
            ));
        }
        if self.site_energies.iter().any(|e| !e.is_finite())
            || self.couplings.iter().any(|e| !e.is_finite())
            || self.dipoles.iter().flatten().any(|e| !e.is_finite())
        {
            return Err(Error::validation("system", "all values must be finite"));
        }
        let scale = self.couplings.amax().max(1.0);
        for l in 0..n {
            if self.couplings[(l, l)] != 0.0 {
                return Err(Error::validation(
                    format!("system.couplings[{l}][{l}]"),
                    "diagonal couplings must be zero",
                ));
            }
            for m in (l + 1)..n {
                if (self.couplings[(l, m)] - self.couplings[(m, l)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::validation(
                        format!("system.couplings[{l}][{m}]"),
                        "coupling matrix must be symmetric",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn dipoles(&self) -> &[[f64; 3]] {
        &self.dipoles
    }

    pub fn reference_energy(&self) -> f64 {
        self.reference_energy
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    /// Optical gap `ℰ_e − ℰ_g` in cm⁻¹.
    pub fn optical_gap(&self) -> f64 {
        self.reference_energy - self.ground_energy
    }

    /// `h_e` in cm⁻¹ (site basis, reference energy removed).
    pub fn exciton_hamiltonian(&self) -> DMatrix<f64> {
        let mut h = self.couplings.clone();
        for (l, e) in self.site_energies.iter().enumerate() {
            h[(l, l)] = e - self.reference_energy;
        }
        h
    }

    /// Copy of the system with site energies shifted by `offsets` (cm⁻¹);
    /// the reference and ground energies are kept.
    pub fn with_site_offsets(&self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.n_sites() {
            return Err(Error::validation("disorder.sigma", "one entry per site required"));
        }
        let mut out = self.clone();
        for (e, d) in out.site_energies.iter_mut().zip(offsets) {
            *e += d;
        }
        out.validate()?;
        Ok(out)
    }
}

/// Eigen-decomposition of `h_e` with exciton transition dipoles.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonBasis {
    /// Exciton energies `ℰ_j` in cm⁻¹, ascending, measured from `ℰ_e`.
    pub energies: Vec<f64>,
    /// `U_{lj} = ⟨l|φ_j⟩`.
    pub transform: DMatrix<f64>,
    /// `D_j = Σ_l μ_l U_{lj}`.
    pub exciton_dipoles: Vec<[f64; 3]>,
}

impl ExcitonBasis {
    pub fn n_excitons(&self) -> usize {
        self.energies.len()
    }

    /// Exciton energies in rad/fs.
    pub fn energies_rad_fs(&self) -> Vec<f64> {
        self.energies.iter().map(|&e| cm_to_rad_fs(e)).collect()
    }
}

/// Diagonalizes the single-exciton Hamiltonian.
///
/// Eigenvalues are sorted ascending; each eigenvector is signed so that its
/// largest-magnitude component is positive (lowest site index wins ties).
pub fn diagonalize(system: &SiteSystem) -> Result<ExcitonBasis> {
    system.validate()?;
    let h = system.exciton_hamiltonian();
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numeric(format!(
            "symmetric eigensolver did not converge (n = {n}, ‖h‖_max = {:.6e}, ‖h − hᵀ‖_max = {:.3e})",
            h.amax(),
            (&h - h.transpose()).amax()
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut energies = Vec::with_capacity(n);
    let mut transform = DMatrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for l in 1..n {
            // strict comparison keeps the lowest index on ties
            if col[l].abs() > col[pivot].abs() + 1e-14 {
                pivot = l;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for l in 0..n {
            transform[(l, j)] = sign * col[l];
        }
    }

    let exciton_dipoles = (0..n)
        .map(|j| {
            let mut d = [0.0; 3];
            for (l, mu) in system.dipoles.iter().enumerate() {
                for k in 0..3 {
                    d[k] += mu[k] * transform[(l, j)];
                }
            }
            d
        })
        .collect();

    Ok(ExcitonBasis {
        energies,
        transform,
        exciton_dipoles,
    })
}

/// Which pulse a polarization belongs to: the three incoming pulses and the
/// detected field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pulse {
    First = 0,
    Second = 1,
    Third = 2,
    Detected = 3,
}

/// Exciton-basis dipole vectors `d_{α,j} = ε_α · D_j` for the four
/// field interactions.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleProjection {
    pub polarizations: [[f64; 3]; 4],
    pub vectors: [DVector<Complex64>; 4],
}

impl DipoleProjection {
    pub fn get(&self, pulse: Pulse) -> &DVector<Complex64> {
        &self.vectors[pulse as usize]
    }

    /// Builds a projection directly from exciton-basis vectors, bypassing
    /// polarization geometry.
    pub fn from_vectors(vectors: [DVector<Complex64>; 4]) -> Self {
        DipoleProjection {
            polarizations: [[0.0; 3]; 4],
            vectors,
        }
    }

    pub fn n_excitons(&self) -> usize {
        self.vectors[0].len()
    }

    /// Uniform rescale of every vector.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.vectors.iter_mut() {
            *v *= Complex64::new(s, 0.0);
        }
        out
    }
}

/// Projects exciton dipoles on the polarizations `[ε₁, ε₂, ε₃, ε_m]`.
pub fn project_dipoles(basis: &ExcitonBasis, polarizations: [[f64; 3]; 4]) -> Result<DipoleProjection> {
    for (a, eps) in polarizations.iter().enumerate() {
        let norm = eps.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::validation(
                format!("pulses.polarizations[{a}]"),
                format!("polarization must have unit norm (got {norm})"),
            ));
        }
    }
    let vectors = polarizations.map(|eps| {
        DVector::from_iterator(
            basis.n_excitons(),
            basis
                .exciton_dipoles
                .iter()
                .map(|d| Complex64::new(eps[0] * d[0] + eps[1] * d[1] + eps[2] * d[2], 0.0)),
        )
    });
    Ok(DipoleProjection {
        polarizations,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn dimer(delta: f64) -> SiteSystem {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, delta, delta, 0.0]);
        SiteSystem::new(vec![0.0, 0.0], c, vec![[1.0, 0.0, 0.0]; 2]).unwrap()
    }

    #[test]
    fn symmetric_dimer() {
        let basis = diagonalize(&dimer(100.0)).unwrap();
        assert!((basis.energies[0] + 100.0).abs() < 1e-12);
        assert!((basis.energies[1] - 100.0).abs() < 1e-12);
        let u = &basis.transform;
        // lower state antisymmetric, upper symmetric; largest component positive
        assert!((u[(0, 0)].abs() - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((u[(0, 1)] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((u[(1, 1)] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((u[(0, 0)] + u[(1, 0)]).abs() < 1e-12);
        // tie → lowest site index positive
        assert!(u[(0, 0)] > 0.0);
    }

    #[test]
    fn uncoupled_is_identity() {
        let sys = SiteSystem::new(
            vec![30.0, -20.0, 5.0],
            DMatrix::zeros(3, 3),
            vec![[1.0, 0.0, 0.0]; 3],
        )
        .unwrap()
        .with_reference_energy(0.0)
        .unwrap();
        let basis = diagonalize(&sys).unwrap();
        assert_eq!(basis.energies, vec![-20.0, 5.0, 30.0]);
        let expected = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.]);
        assert!((&basis.transform - expected).amax() < 1e-15);
    }

    #[test]
    fn asymmetric_coupling_rejected() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        let err = SiteSystem::new(vec![0.0, 0.0], c, vec![[1.0, 0.0, 0.0]; 2]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn dimer_projection_constructive_destructive() {
        let basis = diagonalize(&dimer(100.0)).unwrap();
        let x = [1.0, 0.0, 0.0];
        let p = project_dipoles(&basis, [x; 4]).unwrap();
        // lower (antisymmetric) exciton is dark, upper carries √2
        assert!(p.vectors[0][0].norm() < 1e-12);
        assert!((p.vectors[0][1].re - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_polarization_gives_zero() {
        let basis = diagonalize(&dimer(50.0)).unwrap();
        let p = project_dipoles(&basis, [[0.0, 0.0, 1.0]; 4]).unwrap();
        assert!(p.vectors.iter().all(|v| v.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn non_unit_polarization_rejected() {
        let basis = diagonalize(&dimer(50.0)).unwrap();
        let err = project_dipoles(&basis, [[1.0, 1.0, 0.0]; 4]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }
}
