//! Shared fixtures for the criterion benchmarks.

use sidework::linalg::{HermitianOperator, SubsystemDims};
use sidework::states::{random_state, DensityOperator, ThermoState};

pub fn uniform_gamma(d: usize) -> DensityOperator {
    DensityOperator::new(
        HermitianOperator::identity(d).scale(1.0 / d as f64),
        SubsystemDims::new(&[d]).unwrap(),
    )
    .unwrap()
}

pub fn random_thermo_2x2(seed: u64) -> ThermoState {
    let dims = SubsystemDims::new(&[2, 2]).unwrap();
    let rho = random_state(&dims, 4, seed).unwrap();
    ThermoState::new(rho, uniform_gamma(2)).unwrap()
}

pub fn random_hermitian(dim: usize, seed: u64) -> HermitianOperator {
    let dims = SubsystemDims::new(&[dim]).unwrap();
    random_state(&dims, dim, seed).unwrap().op().clone()
}
