mod support;

use grating_core::kernel::{generic_branch, KernelParams, KernelTable};
use grating_core::problem::Grid;
use grating_core::Complex64;
use support::closed_form::Evaluator;

#[test]
fn table_matches_extended_precision() {
    let (k, alpha, rho) = (1.0, 0.3, 2.0);
    let grid = Grid::new(64, 64, rho).unwrap();
    let table = KernelTable::new(&grid, KernelParams::new(k * k, alpha)).unwrap();
    assert!(table.degenerate_modes().is_empty());
    let mut ev = Evaluator::new();
    let mut worst = 0.0f64;
    for i1 in 0..64 {
        for i2 in 0..64 {
            let j = [grid.freq1(i1), grid.freq2(i2)];
            let exact = ev.coefficient(j, k, alpha, rho);
            worst = worst.max(ev.relative_error(table.get(j).unwrap(), &exact));
        }
    }
    assert!(worst < 1e-13, "worst relative error {worst:e}");
}

#[test]
fn degenerate_branch_is_exact() {
    let params = KernelParams::new(1.0, 0.0);
    let rho = std::f64::consts::PI;
    let up = params.coefficient([0, 1], rho).unwrap();
    let down = params.coefficient([0, -1], rho).unwrap();
    assert!(up.1 && down.1);
    assert_eq!(up.0, Complex64::new(0.0, 0.25));
    assert_eq!(down.0, Complex64::new(0.0, -0.25));
}

#[test]
fn generic_branch_near_degenerate_mode() {
    // λ = 1e-6 next to the degenerate mode j = (0, 1) at k = 1, α = 0, ρ = π.
    let rho = std::f64::consts::PI;
    let lambda: f64 = 1e-6;
    let beta = Complex64::new((1.0 + lambda).sqrt(), 0.0);
    let near = generic_branch(beta, 1, lambda, rho);
    let limit = Complex64::new(0.0, 0.25);
    assert!((near - limit).norm() / limit.norm() < 1e-4, "{near}");
}
