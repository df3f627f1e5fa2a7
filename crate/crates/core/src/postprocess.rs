//! Rayleigh coefficients, field evaluation, diffraction efficiencies and energy balance.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::operator::grad_spectral;
use crate::problem::{IncidentWave, Problem};
use crate::solver::Solution;
use crate::spectral::Transform;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Evanescent orders with `|Im β_j|·ρ_ref` above this are stored as zero.
pub const EVANESCENT_DROP: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighOrder {
    pub j: i64,
    pub alpha_j: f64,
    pub beta: Complex64,
    pub coeff: Complex64,
    /// Set when the order was dropped as negligibly evanescent.
    pub truncated: bool,
}

impl RayleighOrder {
    pub fn is_propagating(&self) -> bool {
        self.beta.im == 0.0
    }
}

/// Coefficients `û_j^±` of `u^s = Σ û_j^± exp(iα_j x1 ± iβ_j(x2 ∓ ρ_ref))` for `±x2 > ρ_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighData {
    pub side: Side,
    pub rho_ref: f64,
    pub orders: Vec<RayleighOrder>,
}

impl RayleighData {
    pub fn get(&self, j: i64) -> Option<&RayleighOrder> {
        self.orders.iter().find(|o| o.j == j)
    }

    pub fn propagating(&self) -> impl Iterator<Item = &RayleighOrder> {
        self.orders.iter().filter(|o| o.is_propagating())
    }

    /// Evaluates the Rayleigh series at a point with `±x2 ≥ ρ_ref`.
    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let dz = match self.side {
            Side::Above => x[1] - self.rho_ref,
            Side::Below => -(x[1] + self.rho_ref),
        };
        self.orders
            .iter()
            .filter(|o| o.coeff != ZERO)
            .map(|o| o.coeff * (I * (o.alpha_j * x[0] + o.beta * dz)).exp())
            .sum()
    }
}

fn order_list(problem: &Problem) -> Result<Vec<(i64, f64, Complex64)>> {
    let grid = problem.grid();
    let params = KernelParams::from_wave(problem.wave());
    let mut js: Vec<i64> = (0..grid.n1()).map(|i| grid.freq1(i)).collect();
    js.sort();
    js.into_iter().map(|j| Ok((j, j as f64 + params.alpha, params.beta(j)?))).collect()
}

fn require_converged(solution: &Solution) -> Result<()> {
    if solution.converged {
        Ok(())
    } else {
        Err(Error::UnconvergedInput)
    }
}

/// Samples of the total-field flux `w = Q∇(u^s + u^i)` at the nodes.
pub fn total_flux_samples(solution: &Solution, problem: &Problem) -> Result<[Vec<Complex64>; 2]> {
    let grid = problem.grid();
    let t = Transform::new(*grid, problem.alpha());
    let grad = grad_spectral(&solution.u);
    let s1 = t.to_physical(&grad.g1)?;
    let s2 = t.to_physical(&grad.g2)?;
    let mut w1 = vec![ZERO; grid.len()];
    let mut w2 = vec![ZERO; grid.len()];
    for m1 in 0..grid.n1() {
        for m2 in 0..grid.n2() {
            let idx = grid.index(m1, m2);
            let q = problem.q_grid()[idx];
            if q.is_zero() {
                continue;
            }
            let (_, gi) = problem.wave().value_and_gradient(grid.node(m1, m2));
            let [a, b] = q.mul_vec([s1[idx] + gi[0], s2[idx] + gi[1]]);
            w1[idx] = a;
            w2[idx] = b;
        }
    }
    Ok([w1, w2])
}

/// Rayleigh coefficients from the moments of the solved flux (moment route).
pub fn rayleigh_coefficients(solution: &Solution, problem: &Problem, side: Side) -> Result<RayleighData> {
    require_converged(solution)?;
    let grid = *problem.grid();
    let rho_ref = problem.rho_ref();
    let [w1, w2] = total_flux_samples(solution, problem)?;
    let support: Vec<(f64, f64, Complex64, Complex64)> = (0..grid.len())
        .filter(|&idx| w1[idx] != ZERO || w2[idx] != ZERO)
        .map(|idx| {
            let [y1, y2] = grid.node(idx / grid.n2(), idx % grid.n2());
            (y1, y2, w1[idx], w2[idx])
        })
        .collect();
    let area = grid.cell_area();
    let orders = order_list(problem)?
        .into_par_iter()
        .map(|(j, alpha_j, beta)| {
            if beta.im * rho_ref > EVANESCENT_DROP {
                return RayleighOrder { j, alpha_j, beta, coeff: ZERO, truncated: true };
            }
            let sign = if side == Side::Above { 1.0 } else { -1.0 };
            let mut m1 = ZERO;
            let mut m2 = ZERO;
            for &(y1, y2, a, b) in &support {
                let e = (I * (beta * (rho_ref - sign * y2) - alpha_j * y1)).exp();
                m1 += e * a;
                m2 += e * b;
            }
            let coeff = -(alpha_j * m1 + sign * beta * m2) * area / (4.0 * PI * beta);
            RayleighOrder { j, alpha_j, beta, coeff, truncated: false }
        })
        .collect();
    Ok(RayleighData { side, rho_ref, orders })
}

/// Rayleigh coefficients read off the box field on the line `x2 = ±ρ_ref` (line-integral route).
pub fn rayleigh_from_line(solution: &Solution, problem: &Problem, side: Side) -> Result<RayleighData> {
    require_converged(solution)?;
    let grid = problem.grid();
    let rho_ref = problem.rho_ref();
    let x2 = if side == Side::Above { rho_ref } else { -rho_ref };
    let norm = 1.0 / (4.0 * PI * grid.rho_box()).sqrt();
    let e2: Vec<Complex64> = (0..grid.n2()).map(|i2| (I * grid.kz(grid.freq2(i2)) * x2).exp()).collect();
    let orders = order_list(problem)?
        .into_iter()
        .map(|(j, alpha_j, beta)| {
            let i1 = grid.slot1(j).expect("order on grid");
            let row = &solution.u.coeffs[i1 * grid.n2()..(i1 + 1) * grid.n2()];
            let coeff = norm * row.iter().zip(&e2).map(|(c, e)| c * e).sum::<Complex64>();
            RayleighOrder { j, alpha_j, beta, coeff, truncated: false }
        })
        .collect();
    Ok(RayleighData { side, rho_ref, orders })
}

/// Evaluates the scattered field: box expansion for `|x2| ≤ ρ_ref`, Rayleigh
/// series (read off the lines `x2 = ±ρ_ref`) beyond.
pub fn scattered_field_at(solution: &Solution, problem: &Problem, points: &[[f64; 2]]) -> Result<Vec<Complex64>> {
    require_converged(solution)?;
    let above = rayleigh_from_line(solution, problem, Side::Above)?;
    let below = rayleigh_from_line(solution, problem, Side::Below)?;
    let rho_ref = problem.rho_ref();
    let h = problem.half_height();
    points
        .par_iter()
        .map(|&x| {
            let ax2 = x[1].abs();
            if ax2 <= rho_ref {
                Ok(solution.u.eval(x))
            } else if ax2 < h {
                Err(Error::EvaluationGap { x1: x[0], x2: x[1] })
            } else if x[1] > 0.0 {
                Ok(above.eval(x))
            } else {
                Ok(below.eval(x))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub j: i64,
    pub alpha_j: f64,
    pub beta_j_re: f64,
    pub beta_j_im: f64,
    pub e_refl: f64,
    pub e_trans: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMetadata {
    pub k: f64,
    pub alpha: f64,
    pub n1: usize,
    pub n2: usize,
    pub residual: f64,
    pub energy_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyTable {
    pub rows: Vec<EfficiencyRow>,
    pub total_reflected: f64,
    pub total_transmitted: f64,
    pub absorbed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<EfficiencyMetadata>,
}

/// Efficiencies of the propagating orders, normalized by `β_0`.
pub fn efficiencies(above: &RayleighData, below: &RayleighData, wave: &IncidentWave) -> Result<EfficiencyTable> {
    let params = KernelParams::from_wave(wave);
    let beta0 = params.beta(0)?.re;
    let mut rows = Vec::new();
    for up in above.propagating() {
        let down = below.get(up.j).ok_or(Error::ShapeMismatch { expected: above.orders.len(), found: below.orders.len() })?;
        let mut t = down.coeff;
        if up.j == 0 {
            t += (I * beta0 * below.rho_ref).exp();
        }
        let w = up.beta.re / beta0;
        rows.push(EfficiencyRow {
            j: up.j,
            alpha_j: up.alpha_j,
            beta_j_re: up.beta.re,
            beta_j_im: up.beta.im,
            e_refl: w * up.coeff.norm_sqr(),
            e_trans: w * t.norm_sqr(),
        });
    }
    let total_reflected: f64 = rows.iter().map(|r| r.e_refl).sum();
    let total_transmitted: f64 = rows.iter().map(|r| r.e_trans).sum();
    Ok(EfficiencyTable {
        rows,
        total_reflected,
        total_transmitted,
        absorbed: 1.0 - total_reflected - total_transmitted,
        metadata: None,
    })
}

impl EfficiencyTable {
    pub fn row(&self, j: i64) -> Option<&EfficiencyRow> {
        self.rows.iter().find(|r| r.j == j)
    }

    pub fn with_metadata(mut self, metadata: EfficiencyMetadata) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["j", "alpha_j", "beta_j_re", "beta_j_im", "e_refl", "e_trans"])
            .map_err(csv_err)?;
        for r in &self.rows {
            wtr.write_record([
                r.j.to_string(),
                r.alpha_j.to_string(),
                r.beta_j_re.to_string(),
                r.beta_j_im.to_string(),
                r.e_refl.to_string(),
                r.e_trans.to_string(),
            ])
            .map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyBalance {
    /// `|1 − Σ(e^r + e^t)|` for a lossless contrast.
    Lossless { defect: f64 },
    /// `1 − Σ(e^r + e^t)`. With outgoing waves `exp(+iβ|x2|)` a dissipative
    /// contrast has `Im Q ≤ 0`; `consistent` is false when the sign of the
    /// absorbed fraction contradicts the sign of `Im Q` by more than `1e-8`.
    Lossy { absorbed: f64, consistent: bool },
}

impl EnergyBalance {
    /// Defect for lossless media, absorbed fraction otherwise.
    pub fn value(&self) -> f64 {
        match *self {
            EnergyBalance::Lossless { defect } => defect,
            EnergyBalance::Lossy { absorbed, .. } => absorbed,
        }
    }
}

pub fn energy_balance(table: &EfficiencyTable, problem: &Problem) -> EnergyBalance {
    let total = table.total_reflected + table.total_transmitted;
    if problem.is_lossless() {
        EnergyBalance::Lossless { defect: (1.0 - total).abs() }
    } else {
        let absorbed = 1.0 - total;
        let dissipative = problem.q_grid().iter().all(|q| {
            let e = q.im().eigen();
            e.lambda1 <= 0.0 && e.lambda2 <= 0.0
        });
        let active = problem.q_grid().iter().all(|q| {
            let e = q.im().eigen();
            e.lambda1 >= 0.0 && e.lambda2 >= 0.0
        });
        let consistent = match (dissipative, active) {
            (true, false) => absorbed >= -1e-8,
            (false, true) => absorbed <= 1e-8,
            _ => true,
        };
        EnergyBalance::Lossy { absorbed, consistent }
    }
}

/// Moment-route efficiencies of a converged solution with run metadata and energy balance.
pub fn efficiency_report(solution: &Solution, problem: &Problem) -> Result<(EfficiencyTable, EnergyBalance)> {
    let above = rayleigh_coefficients(solution, problem, Side::Above)?;
    let below = rayleigh_coefficients(solution, problem, Side::Below)?;
    let table = efficiencies(&above, &below, problem.wave())?;
    let balance = energy_balance(&table, problem);
    let grid = problem.grid();
    let metadata = EfficiencyMetadata {
        k: problem.wave().k(),
        alpha: problem.alpha(),
        n1: grid.n1(),
        n2: grid.n2(),
        residual: solution.true_residual,
        energy_defect: balance.value(),
    };
    Ok((table.with_metadata(metadata), balance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_table;
    use crate::problem::{build_problem, ContrastField, Grid};
    use crate::solver::{solve, SolveOptions};
    use crate::tensor::Sym2;

    fn solved(q: Complex64, theta: f64, n: usize) -> (Problem, Solution) {
        let wave = IncidentWave::from_angle(0.9, theta).unwrap();
        let grid = Grid::with_default_box(n, n, 0.5).unwrap();
        let p = build_problem(wave, ContrastField::slab(0.5, Sym2::scalar(q)), grid).unwrap();
        let table = kernel_table(p.grid(), p.wave()).unwrap();
        let s = solve(&p, &table, &SolveOptions::default()).unwrap();
        (p, s)
    }

    #[test]
    fn zero_contrast_gives_free_propagation() {
        let wave = IncidentWave::from_angle(0.9, 0.4).unwrap();
        let grid = Grid::new(16, 16, 1.0).unwrap();
        let p = build_problem(wave, ContrastField::zero(), grid).unwrap();
        let table = kernel_table(&grid, &wave).unwrap();
        let s = solve(&p, &table, &SolveOptions::default()).unwrap();
        let up = rayleigh_coefficients(&s, &p, Side::Above).unwrap();
        let down = rayleigh_coefficients(&s, &p, Side::Below).unwrap();
        assert!(up.orders.iter().chain(&down.orders).all(|o| o.coeff == ZERO));
        let eff = efficiencies(&up, &down, &wave).unwrap();
        assert_eq!(eff.rows.len(), 2);
        assert!((eff.row(0).unwrap().e_trans - 1.0).abs() < 1e-14);
        for r in &eff.rows {
            assert_eq!(r.e_refl, 0.0);
            if r.j != 0 {
                assert_eq!(r.e_trans, 0.0);
            }
        }
        assert!(matches!(energy_balance(&eff, &p), EnergyBalance::Lossless { defect } if defect < 1e-14));
        let vals = scattered_field_at(&s, &p, &[[0.1, 0.0], [0.3, 5.0], [-1.0, -3.0]]).unwrap();
        assert!(vals.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn slab_normal_incidence_has_only_zero_order() {
        let (p, s) = solved(Complex64::new(3.0, 0.0), 0.0, 32);
        for side in [Side::Above, Side::Below] {
            let data = rayleigh_coefficients(&s, &p, side).unwrap();
            for o in &data.orders {
                if o.j != 0 {
                    assert!(o.coeff.norm() < 1e-10, "j = {}: {}", o.j, o.coeff);
                }
            }
        }
    }

    #[test]
    fn lossy_slab_absorbs() {
        // Outgoing waves are exp(+iβ|x2|), so dissipation means Im Q < 0.
        let (p, s) = solved(Complex64::new(2.0, -0.5), 0.0, 32);
        let up = rayleigh_coefficients(&s, &p, Side::Above).unwrap();
        let down = rayleigh_coefficients(&s, &p, Side::Below).unwrap();
        let eff = efficiencies(&up, &down, p.wave()).unwrap();
        match energy_balance(&eff, &p) {
            EnergyBalance::Lossy { absorbed, consistent } => assert!(absorbed > 0.0 && consistent, "{absorbed}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exterior_field_is_continuous_at_reference_line() {
        let (p, s) = solved(Complex64::new(3.0, 0.0), 0.3, 32);
        let r = p.rho_ref();
        let inside = scattered_field_at(&s, &p, &[[0.4, r], [-1.1, -r]]).unwrap();
        let above = rayleigh_from_line(&s, &p, Side::Above).unwrap();
        let below = rayleigh_from_line(&s, &p, Side::Below).unwrap();
        assert!((above.eval([0.4, r]) - inside[0]).norm() < 1e-12);
        assert!((below.eval([-1.1, -r]) - inside[1]).norm() < 1e-12);
    }

    #[test]
    fn far_field_only_propagating_orders() {
        let (p, s) = solved(Complex64::new(3.0, 0.0), 0.3, 32);
        let x = [0.7, p.rho_ref() + 10.0];
        let full = scattered_field_at(&s, &p, &[x]).unwrap()[0];
        let above = rayleigh_from_line(&s, &p, Side::Above).unwrap();
        let prop: Complex64 = above
            .propagating()
            .map(|o| o.coeff * (I * (o.alpha_j * x[0] + o.beta * 10.0)).exp())
            .sum();
        assert!((full - prop).norm() < 1e-12);
    }

    #[test]
    fn unconverged_input_is_refused() {
        let (p, mut s) = solved(Complex64::new(3.0, 0.0), 0.0, 16);
        s.converged = false;
        assert!(matches!(rayleigh_coefficients(&s, &p, Side::Above), Err(Error::UnconvergedInput)));
    }

    #[test]
    fn single_propagating_order() {
        let (p, s) = solved(Complex64::new(1.0, 0.0), 0.05, 16);
        let up = rayleigh_coefficients(&s, &p, Side::Above).unwrap();
        let down = rayleigh_coefficients(&s, &p, Side::Below).unwrap();
        let eff = efficiencies(&up, &down, p.wave()).unwrap();
        assert_eq!(eff.rows.len(), 1);
        assert_eq!(eff.rows[0].j, 0);
    }

    #[test]
    fn csv_layout() {
        let (p, s) = solved(Complex64::new(3.0, 0.0), 0.0, 16);
        let up = rayleigh_coefficients(&s, &p, Side::Above).unwrap();
        let down = rayleigh_coefficients(&s, &p, Side::Below).unwrap();
        let eff = efficiencies(&up, &down, p.wave()).unwrap();
        let mut buf = Vec::new();
        eff.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("j,alpha_j,beta_j_re,beta_j_im,e_refl,e_trans"));
        assert!(lines.next().unwrap().starts_with("0,0,0.9,0,"));
    }
}
