//! Cross-module flows: a saved basis drives propagation and observability.

use grushin::observability::{gramian, obs_constant, ObservationRegion};
use grushin::propagators::{heat_step, schrodinger_step, StateVector};
use grushin::spectral::{build_basis_with, BasisOptions, Grid1D, GrushinParams, SpectralBasis};
use grushin::Exec;

fn basis(exec: Exec) -> SpectralBasis {
    let params = GrushinParams::new(1.0, 1).unwrap();
    let grid = Grid1D::interior(80).unwrap();
    build_basis_with(&params, 8.0, &grid, BasisOptions { exec, ..Default::default() }).unwrap()
}

#[test]
fn sequential_and_parallel_bases_agree_exactly() {
    let a = basis(Exec::Sequential);
    let b = basis(Exec::Parallel);
    assert_eq!(a.id(), b.id());
    assert_eq!(
        serde_json::to_string(&a.to_document()).unwrap(),
        serde_json::to_string(&b.to_document()).unwrap()
    );
}

#[test]
fn document_round_trip_preserves_dynamics() {
    let b = basis(Exec::Parallel);
    let back = SpectralBasis::from_document(&b.to_document()).unwrap();
    assert_eq!(back.len(), b.len());
    let u = StateVector::unit(&b, 3).unwrap();
    let v = StateVector::unit(&back, 3).unwrap();
    let x = schrodinger_step(&b, &u, 0.7, 1).unwrap();
    let y = schrodinger_step(&back, &v, 0.7, 1).unwrap();
    let err = x.coeffs.iter().zip(&y.coeffs).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(err < 1e-14, "{err}");
}

#[test]
fn heat_flow_contracts_and_wider_strip_observes_better() {
    let b = basis(Exec::Parallel);
    let u = StateVector::unit(&b, 0).unwrap();
    assert!(heat_step(&b, &u, 1.0, 1).unwrap().norm() < u.norm());

    let narrow = ObservationRegion::new(1.0, 1.5).unwrap();
    let wide = ObservationRegion::new(1.0, 3.0).unwrap();
    let c_narrow = obs_constant(&gramian(&b, &narrow, 2.0, 2).unwrap()).unwrap().value;
    let c_wide = obs_constant(&gramian(&b, &wide, 2.0, 2).unwrap()).unwrap().value;
    assert!(c_wide <= c_narrow, "{c_wide} vs {c_narrow}");
}
