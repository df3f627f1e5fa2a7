//! Frozen reference values from the Fabry–Perot reflectance of a unit-thickness
//! slab at normal incidence, `R = g sin²(κd)/(4 + g sin²(κd))` with
//! `g = (η − 1/η)²`, `η = sqrt(1 + q)`, `κ = k/η`, evaluated independently.

use grating_core::kernel::kernel_table;
use grating_core::oracle::{slab_problem, slab_reference, SlabSpec};
use grating_core::postprocess::efficiency_report;
use grating_core::solver::solve;
use grating_core::{Complex64, SolveOptions};

const R_POSITIVE: f64 = 0.09618588344291024;
const R_NEGATIVE: f64 = 0.25281059328208916;

#[test]
fn transfer_matrix_reproduces_frozen_reflectance() {
    for (q, frozen) in [(3.0, R_POSITIVE), (-5.0, R_NEGATIVE)] {
        let s = slab_reference(&SlabSpec::new(Complex64::new(q, 0.0), -0.5, 0.5, 0.9, 0.0).unwrap());
        assert!((s.reflectance - frozen).abs() < 1e-12, "q = {q}: {}", s.reflectance);
        assert!((s.transmittance - (1.0 - frozen)).abs() < 1e-12, "q = {q}: {}", s.transmittance);
    }
}

#[test]
fn solver_reproduces_frozen_reflectance() {
    for (q, frozen) in [(3.0, R_POSITIVE), (-5.0, R_NEGATIVE)] {
        let p = slab_problem(q, 128).unwrap();
        let table = kernel_table(p.grid(), p.wave()).unwrap();
        let s = solve(&p, &table, &SolveOptions { rel_tol: 1e-10, ..Default::default() }).unwrap();
        let (eff, _) = efficiency_report(&s, &p).unwrap();
        let row = eff.row(0).unwrap();
        assert!((row.e_refl - frozen).abs() < 1e-3, "q = {q}: R = {}", row.e_refl);
        assert!((row.e_trans - (1.0 - frozen)).abs() < 1e-3, "q = {q}: T = {}", row.e_trans);
    }
}
