use fourwave::bath::BathSpec;
use fourwave::closed::ClosedModel;
use fourwave::exciton::{diagonalize, project_dipoles, SiteSystem};
use fourwave::grid::{Channel, GridSpec};
use fourwave::oracle::{fock_oracle, FockOracle, OracleSpec};
use fourwave::units::beta_from_kelvin;
use fourwave::Error;
use nalgebra::DMatrix;

fn dimer() -> SiteSystem {
    SiteSystem::new(
        vec![12050.0, 12000.0],
        DMatrix::from_row_slice(2, 2, &[0.0, 60.0, 60.0, 0.0]),
        vec![[1.0, 0.0, 0.0], [0.4, 0.9, 0.0]],
    )
    .unwrap()
}

#[test]
fn cutoff_convergence_for_cold_modes() {
    let basis = diagonalize(&dimer()).unwrap();
    let dip = project_dipoles(&basis, [[1.0, 0.0, 0.0]; 4]).unwrap();
    let beta = beta_from_kelvin(300.0);
    // βω = 2 and 3
    let bath = BathSpec::new(
        vec![2.0 / beta, 3.0 / beta],
        DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.25, 0.35]),
        beta,
    )
    .unwrap();
    let spec = GridSpec::new(6.0, 6, &[0.0, 30.0], 6).unwrap();
    let e = basis.energies_rad_fs();
    let eval = |cutoff| {
        FockOracle::from_diagonal(&e, &bath, &dip, OracleSpec { cutoff, max_dim: 4096 })
            .unwrap()
            .evaluate_grid(&Channel::ALL, &spec)
            .unwrap()
    };
    let (a, b) = (eval(20), eval(25));
    let model = ClosedModel::new(&basis, &bath, &dip).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.max_abs_diff(y).unwrap() < 1e-9);
        for idx in 0..spec.n_points() {
            let (r, q, p) = spec.unflat(idx);
            let c = model.chi(x.channel, spec.tau(r), spec.tp(q), spec.tau_prime(p));
            assert!((c - y.values[idx]).norm() < 1e-9);
        }
    }
}

#[test]
fn one_shot_matches_closed_form() {
    let basis = diagonalize(&dimer()).unwrap();
    let dip = project_dipoles(&basis, [[0.0, 1.0, 0.0]; 4]).unwrap();
    let beta = beta_from_kelvin(150.0);
    let bath = BathSpec::new(vec![0.04], DMatrix::from_row_slice(2, 1, &[0.4, -0.3]), beta).unwrap();
    let e = basis.energies_rad_fs();
    let spec = OracleSpec { cutoff: 25, max_dim: 4096 };
    for k in 1..=4 {
        let o = fock_oracle(&e, &bath, &dip, spec, k, 17.0, 40.0, 9.0).unwrap();
        let c = ClosedModel::new(&basis, &bath, &dip)
            .unwrap()
            .chi(Channel::from_index(k).unwrap(), 17.0, 40.0, 9.0);
        assert!((o - c).norm() < 1e-7, "channel {k}: {o} vs {c}");
    }
}

#[test]
fn oversized_space_is_a_resource_error() {
    let basis = diagonalize(&dimer()).unwrap();
    let dip = project_dipoles(&basis, [[1.0, 0.0, 0.0]; 4]).unwrap();
    let bath = BathSpec::new(vec![0.02; 3], DMatrix::from_element(2, 3, 0.1), 20.0).unwrap();
    let err = FockOracle::from_diagonal(&basis.energies_rad_fs(), &bath, &dip, OracleSpec::default()).unwrap_err();
    assert!(matches!(err, Error::Resource(_)));
    assert_eq!(err.exit_code(), 4);
}
