//! Right-hand side assembly and the Krylov solve of the discrete Lippmann–Schwinger equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmres::{gmres, GmresParams};
use crate::kernel::KernelTable;
use crate::operator::{div_potential, ForwardOperator};
use crate::problem::Problem;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub record_residuals: bool,
    /// Evaluate `Q∇u` on a 3/2-padded grid.
    pub dealias: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rel_tol: 1e-8, max_iterations: 500, restart: 50, record_residuals: true, dealias: false }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.restart < 1 {
            return Err(Error::Config("restart length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Scattered field on the computational box with its convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: SpectralField,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Relative residual `‖A u − rhs‖ / ‖rhs‖` recomputed at the end.
    pub true_residual: f64,
    pub rel_tol: f64,
}

impl Solution {
    /// Last Krylov residual estimate.
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(self.true_residual)
    }
}

/// `L_k(Q∇u^i)` with `∇u^i` sampled at the nodes.
pub fn assemble_rhs(problem: &Problem, table: &KernelTable) -> Result<SpectralField> {
    assemble_rhs_with(&ForwardOperator::new(problem, table, false)?, problem)
}

pub fn assemble_rhs_with(op: &ForwardOperator<'_>, problem: &Problem) -> Result<SpectralField> {
    let grid = problem.grid();
    let wave = problem.wave();
    let mut g1 = Vec::with_capacity(grid.len());
    let mut g2 = Vec::with_capacity(grid.len());
    for m1 in 0..grid.n1() {
        for m2 in 0..grid.n2() {
            let (_, g) = wave.value_and_gradient(grid.node(m1, m2));
            g1.push(g[0]);
            g2.push(g[1]);
        }
    }
    let flux = op.flux_of_samples(g1, g2)?;
    div_potential(&flux, op.table())
}

/// Solves `A u = L_k(Q∇u^i)` by restarted GMRES from a zero initial guess.
pub fn solve(problem: &Problem, table: &KernelTable, opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    let op = ForwardOperator::new(problem, table, opts.dealias)?;
    let rhs = assemble_rhs_with(&op, problem)?;
    solve_with(&op, &rhs, opts)
}

/// Solves `A u = rhs` for a prepared operator and right-hand side.
pub fn solve_with(op: &ForwardOperator<'_>, rhs: &SpectralField, opts: &SolveOptions) -> Result<Solution> {
    let params = GmresParams {
        tol: opts.rel_tol,
        max_iterations: opts.max_iterations,
        restart: opts.restart,
        breakdown: 1e-14,
    };
    let out = gmres(|x| op.apply_vec(x), &rhs.coeffs, params)?;
    let u = SpectralField::from_coeffs(rhs.grid, rhs.alpha, out.x)?;
    let au = op.apply(&u)?;
    let rnorm = rhs.norm();
    let true_residual = if rnorm == 0.0 { au.norm() } else { au.sub(rhs).norm() / rnorm };
    let residual_history =
        if opts.record_residuals { out.history } else { out.history.last().copied().into_iter().collect() };
    let solution = Solution {
        u,
        residual_history,
        converged: out.converged,
        iterations: out.iterations,
        true_residual,
        rel_tol: opts.rel_tol,
    };
    if out.breakdown {
        Err(Error::Breakdown(Box::new(solution)))
    } else if !out.converged {
        Err(Error::NotConverged(Box::new(solution)))
    } else {
        Ok(solution)
    }
}

/// Recomputed residual; `absolute` is set when the right-hand side vanishes
/// and the plain norm `‖A u‖` is returned instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub absolute: bool,
}

pub fn residual(problem: &Problem, table: &KernelTable, u: &SpectralField) -> Result<Residual> {
    let op = ForwardOperator::new(problem, table, false)?;
    let rhs = assemble_rhs_with(&op, problem)?;
    let au = op.apply(u)?;
    let rnorm = rhs.norm();
    if rnorm == 0.0 {
        Ok(Residual { value: au.norm(), absolute: true })
    } else {
        Ok(Residual { value: au.sub(&rhs).norm() / rnorm, absolute: false })
    }
}

/// Incident field coefficients on the box, useful for total-field evaluation.
pub fn incident_coefficients(problem: &Problem) -> Result<SpectralField> {
    let grid = problem.grid();
    let vals: Vec<Complex64> = (0..grid.n1())
        .flat_map(|m1| (0..grid.n2()).map(move |m2| (m1, m2)))
        .map(|(m1, m2)| problem.wave().value(grid.node(m1, m2)))
        .collect();
    crate::spectral::to_spectral(*grid, problem.alpha(), &vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_table;
    use crate::problem::{build_problem, ContrastField, Grid, IncidentWave};
    use crate::tensor::Sym2;

    fn slab_problem(n: usize, q: f64) -> Problem {
        let wave = IncidentWave::from_angle(0.9, 0.0).unwrap();
        let contrast = ContrastField::slab(0.5, Sym2::scalar(Complex64::new(q, 0.0)));
        let grid = Grid::with_default_box(n, n, 0.5).unwrap();
        build_problem(wave, contrast, grid).unwrap()
    }

    #[test]
    fn zero_contrast_rhs_and_solution() {
        let wave = IncidentWave::from_angle(0.9, 0.3).unwrap();
        let grid = Grid::new(8, 8, 1.0).unwrap();
        let p = build_problem(wave, ContrastField::zero(), grid).unwrap();
        let table = kernel_table(&grid, &wave).unwrap();
        let rhs = assemble_rhs(&p, &table).unwrap();
        assert_eq!(rhs.norm(), 0.0);
        let s = solve(&p, &table, &SolveOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(s.u.norm(), 0.0);
        let r = residual(&p, &table, &s.u).unwrap();
        assert!(r.absolute && r.value == 0.0);
    }

    #[test]
    fn slab_rhs_is_x1_independent() {
        let p = slab_problem(16, 3.0);
        let table = kernel_table(p.grid(), p.wave()).unwrap();
        let rhs = assemble_rhs(&p, &table).unwrap();
        let g = p.grid();
        for i1 in 1..g.n1() {
            for i2 in 0..g.n2() {
                assert!(rhs.coeffs[g.index(i1, i2)].norm() < 1e-12);
            }
        }
        assert!(rhs.norm() > 1e-3);
    }

    #[test]
    fn slab_converges_and_residual_is_consistent() {
        let p = slab_problem(32, 3.0);
        let table = kernel_table(p.grid(), p.wave()).unwrap();
        let s = solve(&p, &table, &SolveOptions::default()).unwrap();
        assert!(s.converged);
        assert!(s.true_residual <= 1.1e-8);
        assert!(s.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
        let r = residual(&p, &table, &s.u).unwrap();
        assert!(!r.absolute && r.value <= 1.1e-8);
        assert!(r.value <= 10.0 * s.final_residual().max(1e-16) || r.value < 1e-12);
        let mut perturbed = s.u.clone();
        perturbed.coeffs[3] += 1e-3;
        assert!(residual(&p, &table, &perturbed).unwrap().value > r.value);
        let zero = SpectralField::zeros(*p.grid(), p.alpha());
        assert!((residual(&p, &table, &zero).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn not_converged_carries_best_iterate() {
        let p = slab_problem(32, 3.0);
        let table = kernel_table(p.grid(), p.wave()).unwrap();
        let opts = SolveOptions { max_iterations: 1, rel_tol: 1e-14, ..Default::default() };
        match solve(&p, &table, &opts) {
            Err(Error::NotConverged(s)) => {
                assert_eq!(s.iterations, 1);
                assert!(!s.converged);
                assert!(s.final_residual() < 1.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn options_validation() {
        assert!(SolveOptions { rel_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolveOptions { restart: 0, ..Default::default() }.validate().is_err());
    }
}
