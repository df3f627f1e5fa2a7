//! Solvability diagnostics: spectral decomposition of `Re Q`, weighted norms,
//! the Im/Re domination constant, the reflection extension operator and the
//! Gårding condition verdicts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::grad_spectral;
use crate::problem::{Grid, Problem, Profile, SupportGraphs};
use crate::spectral::{SpectralField, Transform};
use crate::tensor::{Eigen2, Real2x2, RealSym2};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `|det Re Q|` at or below this counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpectrum {
    pub m1: usize,
    pub m2: usize,
    pub eigen: Eigen2,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub sign: Sign,
}

/// Eigen-decomposition of `Re Q` at every node of the support `D`
/// (the nodes where `Q ≠ 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSpectra {
    pub nodes: Vec<NodeSpectrum>,
    /// Positive or negative when every node has that sign, mixed otherwise.
    pub sign: Sign,
    pub inf_lambda_min: f64,
    pub sup_lambda_max: f64,
    /// Largest eigenvalue of `Re Q` over `D` (signed).
    pub sup_eigenvalue: f64,
}

fn node_sign(e: &Eigen2) -> Sign {
    if e.lambda1 > 0.0 && e.lambda2 > 0.0 {
        Sign::Positive
    } else if e.lambda1 < 0.0 && e.lambda2 < 0.0 {
        Sign::Negative
    } else {
        Sign::Mixed
    }
}

#[allow(non_snake_case)]
pub fn decompose_reQ(problem: &Problem) -> Result<ContrastSpectra> {
    let grid = problem.grid();
    let mut nodes = Vec::new();
    let mut singular = Vec::new();
    for m1 in 0..grid.n1() {
        for m2 in 0..grid.n2() {
            let q = problem.q_at(m1, m2);
            if q.is_zero() {
                continue;
            }
            let re = q.re();
            if re.det().abs() <= SINGULAR_DET {
                singular.push((m1, m2));
                continue;
            }
            let eigen = re.eigen();
            let (a, b) = (eigen.lambda1.abs(), eigen.lambda2.abs());
            nodes.push(NodeSpectrum {
                m1,
                m2,
                eigen,
                lambda_min: a.min(b),
                lambda_max: a.max(b),
                sign: node_sign(&eigen),
            });
        }
    }
    if !singular.is_empty() {
        return Err(Error::SingularReQ { nodes: singular });
    }
    let sign = match nodes.first().map(|n| n.sign) {
        None => Sign::Positive,
        Some(s) if nodes.iter().all(|n| n.sign == s) => s,
        Some(_) => Sign::Mixed,
    };
    let inf_lambda_min = nodes.iter().map(|n| n.lambda_min).fold(f64::INFINITY, f64::min);
    let sup_lambda_max = nodes.iter().map(|n| n.lambda_max).fold(0.0, f64::max);
    let sup_eigenvalue =
        nodes.iter().map(|n| n.eigen.lambda1.max(n.eigen.lambda2)).fold(f64::NEG_INFINITY, f64::max);
    Ok(ContrastSpectra { nodes, sign, inf_lambda_min, sup_lambda_max, sup_eigenvalue })
}

impl NodeSpectrum {
    /// `|Re Q|^{1/2} = U |Σ|^{1/2} Uᵀ`.
    pub fn sqrt_abs(&self) -> RealSym2 {
        self.eigen.map(|l| l.abs().sqrt())
    }

    pub fn abs(&self) -> RealSym2 {
        self.eigen.map(f64::abs)
    }
}

fn apply_real(m: &RealSym2, v: [Complex64; 2]) -> [Complex64; 2] {
    [m.a * v[0] + m.b * v[1], m.b * v[0] + m.c * v[1]]
}

struct Sampled {
    u: Vec<Complex64>,
    g1: Vec<Complex64>,
    g2: Vec<Complex64>,
}

fn sample_with_gradient(u: &SpectralField) -> Result<Sampled> {
    let t = Transform::new(u.grid, u.alpha);
    let g = grad_spectral(u);
    Ok(Sampled { u: t.to_physical(u)?, g1: t.to_physical(&g.g1)?, g2: t.to_physical(&g.g2)? })
}

/// `‖u‖_{H¹_{α,Q}(D)} = (‖√|Re Q| ∇u‖² + ‖u‖²)^{1/2}` by node quadrature over `D`.
pub fn weighted_norm(u: &SpectralField, problem: &Problem, spectra: &ContrastSpectra) -> Result<f64> {
    let grid = problem.grid();
    let s = sample_with_gradient(u)?;
    let mut sum = 0.0;
    for n in &spectra.nodes {
        let idx = grid.index(n.m1, n.m2);
        let w = apply_real(&n.sqrt_abs(), [s.g1[idx], s.g2[idx]]);
        sum += w[0].norm_sqr() + w[1].norm_sqr() + s.u[idx].norm_sqr();
    }
    Ok((sum * grid.cell_area()).sqrt())
}

/// `a_Q(u, v) = ∫_D sign(Re Q) Q∇u·∇v̄ + u v̄` by node quadrature.
///
/// Requires a pointwise definite `Re Q`; nodes of mixed sign are rejected.
pub fn a_q(u: &SpectralField, v: &SpectralField, problem: &Problem, spectra: &ContrastSpectra) -> Result<Complex64> {
    let grid = problem.grid();
    let su = sample_with_gradient(u)?;
    let sv = sample_with_gradient(v)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in &spectra.nodes {
        let sign = match n.sign {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
            Sign::Mixed => {
                return Err(Error::Config(format!("Re Q is indefinite at node ({}, {})", n.m1, n.m2)));
            }
        };
        let idx = grid.index(n.m1, n.m2);
        let q = problem.q_at(n.m1, n.m2);
        let qg = q.mul_vec([su.g1[idx], su.g2[idx]]);
        sum += sign * (qg[0] * sv.g1[idx].conj() + qg[1] * sv.g2[idx].conj()) + su.u[idx] * sv.u[idx].conj();
    }
    Ok(sum * grid.cell_area())
}

/// `C = sup_D ‖Im Q (Re Q)^{-1}‖₂`.
pub fn im_bound_constant(problem: &Problem, spectra: &ContrastSpectra) -> Result<f64> {
    let mut c = 0.0f64;
    for n in &spectra.nodes {
        let q = problem.q_at(n.m1, n.m2);
        let inv = q.re().inverse().ok_or(Error::SingularReQ { nodes: vec![(n.m1, n.m2)] })?;
        c = c.max(Real2x2::product(&q.im(), &inv).spectral_norm());
    }
    Ok(c)
}

/// Degree-7 smoothstep `35t⁴ − 84t⁵ + 70t⁶ − 20t⁷` clamped to `[0, 1]`.
pub fn smoothstep7(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t.powi(4) * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
}

/// Cutoff `χ` equal to 1 on `|x2| ≤ ρ` and 0 on `|x2| ≥ 2ρ`.
pub fn cutoff(x2: f64, rho: f64) -> f64 {
    1.0 - smoothstep7((x2.abs() - rho) / rho)
}

/// `sup |χ′| = 35 / (16 ρ)`.
pub fn cutoff_slope(rho: f64) -> f64 {
    35.0 / (16.0 * rho)
}

/// Support bounded by two periodic graphs inside the strip `|x2| < ρ`.
#[derive(Clone, Debug)]
pub struct GraphGeometry {
    pub graphs: SupportGraphs,
    pub rho: f64,
}

impl GraphGeometry {
    /// Checks `ζ± ∈ (−ρ, ρ)`, `ζ− < −2ρ/3` and `ζ+ > 2ρ/3` on `samples` points.
    pub fn new(graphs: SupportGraphs, rho: f64, samples: usize) -> Result<Self> {
        let (lo_min, lo_max, up_min, up_max) = graph_range(&graphs, samples);
        if !(up_max < rho && lo_min > -rho && lo_max < -2.0 * rho / 3.0 && up_min > 2.0 * rho / 3.0) {
            return Err(Error::GeometryNotGraph(format!(
                "graphs with ζ− ∈ [{lo_min}, {lo_max}], ζ+ ∈ [{up_min}, {up_max}] do not fit the strip of half-height {rho}"
            )));
        }
        Ok(GraphGeometry { graphs, rho })
    }

    /// Picks `ρ = 0.99 · 1.5 · min(min ζ+, −max ζ−)` when that exceeds `max |ζ±|`.
    pub fn from_graphs(graphs: SupportGraphs, samples: usize) -> Result<Self> {
        let (lo_min, lo_max, up_min, up_max) = graph_range(&graphs, samples);
        let inner = up_min.min(-lo_max);
        if inner <= 0.0 {
            return Err(Error::GeometryNotGraph("graphs do not enclose the line x2 = 0".into()));
        }
        let rho = 0.99 * 1.5 * inner;
        if rho <= up_max.max(-lo_min) {
            return Err(Error::GeometryNotGraph(format!(
                "graphs vary too much for a reflection extension (inner {inner}, outer {})",
                up_max.max(-lo_min)
            )));
        }
        Self::new(graphs, rho, samples)
    }

    pub fn upper(&self, x1: f64) -> f64 {
        (self.graphs.upper)(x1)
    }

    pub fn lower(&self, x1: f64) -> f64 {
        (self.graphs.lower)(x1)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.lower(x[0]) < x[1] && x[1] < self.upper(x[0])
    }

    /// Maximum finite-difference slope of both graphs over `samples` points per period.
    pub fn lipschitz(&self, samples: usize) -> f64 {
        let h = 2.0 * PI / samples as f64;
        let slope = |f: &Profile| {
            (0..samples)
                .map(|i| {
                    let x = -PI + h * i as f64;
                    ((f)(x + h) - (f)(x)).abs() / h
                })
                .fold(0.0, f64::max)
        };
        slope(&self.graphs.upper).max(slope(&self.graphs.lower))
    }

    /// Source point of the reflection for `x`, or `None` outside the extended strip.
    fn reflect(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let (up, lo) = (self.upper(x[0]), self.lower(x[0]));
        if x[1].abs() >= 2.0 * self.rho {
            None
        } else if x[1] > up {
            (x[1] < 2.0 * up - lo).then_some([x[0], 2.0 * up - x[1]])
        } else if x[1] < lo {
            (x[1] > 2.0 * lo - up).then_some([x[0], 2.0 * lo - x[1]])
        } else {
            Some(x)
        }
    }

    /// `E(u)` for a field given in closed form on `D`.
    pub fn extend_fn(&self, u: &impl Fn([f64; 2]) -> Complex64, x: [f64; 2]) -> Complex64 {
        match self.reflect(x) {
            None => Complex64::new(0.0, 0.0),
            Some(y) if y == x => u(x),
            Some(y) => cutoff(x[1], self.rho) * u(y),
        }
    }
}

fn graph_range(graphs: &SupportGraphs, samples: usize) -> (f64, f64, f64, f64) {
    let mut r = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..samples.max(1) {
        let x = -PI + 2.0 * PI * i as f64 / samples.max(1) as f64;
        let (lo, up) = ((graphs.lower)(x), (graphs.upper)(x));
        r = (r.0.min(lo), r.1.max(lo), r.2.min(up), r.3.max(up));
    }
    r
}

/// Reflection-and-cutoff extension of grid samples known on `D`.
///
/// Values at nodes inside `D` are copied; reflected values are linearly
/// interpolated along the grid column from the nodes inside `D`.
pub fn extend_field(u: &[Complex64], grid: &Grid, geometry: &GraphGeometry) -> Result<Vec<Complex64>> {
    if u.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), found: u.len() });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for m1 in 0..grid.n1() {
        let x1 = grid.x1(m1);
        let inside: Vec<(f64, Complex64)> = (0..grid.n2())
            .filter(|&m2| geometry.contains([x1, grid.x2(m2)]))
            .map(|m2| (grid.x2(m2), u[grid.index(m1, m2)]))
            .collect();
        if inside.is_empty() {
            continue;
        }
        let interp = |y: f64| -> Complex64 {
            let k = inside.partition_point(|(x, _)| *x < y);
            if k == 0 {
                inside[0].1
            } else if k == inside.len() {
                inside[k - 1].1
            } else {
                let (xa, ua) = inside[k - 1];
                let (xb, ub) = inside[k];
                let t = (y - xa) / (xb - xa);
                ua * (1.0 - t) + ub * t
            }
        };
        for m2 in 0..grid.n2() {
            let x = [x1, grid.x2(m2)];
            let idx = grid.index(m1, m2);
            out[idx] = match geometry.reflect(x) {
                None => Complex64::new(0.0, 0.0),
                Some(y) if y == x => u[idx],
                Some(y) => cutoff(x[1], geometry.rho) * interp(y[1]),
            };
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionNorm {
    pub rho: f64,
    pub lipschitz: f64,
    /// `max(√3, 2√2 M)`.
    pub reflected_bound: f64,
    pub cutoff_slope: f64,
    /// `(1 + c + c²)^{1/2}` with `c = sup |χ′|`.
    pub cutoff_factor: f64,
    /// `(1 + (cutoff_factor · reflected_bound)²)^{1/2}`.
    pub bound: f64,
    /// Largest observed `‖E u‖ / ‖u‖` over random smooth fields.
    pub estimate: f64,
    pub samples: usize,
    /// Set when bound and estimate differ by more than a factor 2.
    pub disagreement: bool,
    pub recipe: String,
}

/// `max(√3, 2√2 M)`.
pub fn reflected_part_bound(m: f64) -> f64 {
    3f64.sqrt().max(2.0 * 2f64.sqrt() * m)
}

/// Analytic bound on `‖E‖` plus a Rayleigh-quotient estimate over 50 random fields.
pub fn extension_norm(geometry: &GraphGeometry, alpha: f64, seed: u64) -> ExtensionNorm {
    let lipschitz = geometry.lipschitz(640);
    let reflected_bound = reflected_part_bound(lipschitz);
    let c = cutoff_slope(geometry.rho);
    let cutoff_factor = (1.0 + c + c * c).sqrt();
    let bound = (1.0 + (cutoff_factor * reflected_bound).powi(2)).sqrt();
    let samples = 50;
    let estimate = extension_estimate(geometry, alpha, samples, seed);
    ExtensionNorm {
        rho: geometry.rho,
        lipschitz,
        reflected_bound,
        cutoff_slope: c,
        cutoff_factor,
        bound,
        estimate,
        samples,
        disagreement: bound > 2.0 * estimate || estimate > 2.0 * bound,
        recipe: "sqrt(1 + (sqrt(1 + c + c^2) * max(sqrt(3), 2 sqrt(2) M))^2), c = 35/(16 rho)".into(),
    }
}

/// `max ‖E u‖_{H¹(Ω_{2ρ})} / ‖u‖_{H¹(D)}` over random low-order trigonometric
/// fields, by midpoint quadrature with chain-rule gradients of the reflection.
pub fn extension_estimate(geometry: &GraphGeometry, alpha: f64, samples: usize, seed: u64) -> f64 {
    let (n1, n2) = (96usize, 192usize);
    let rho = geometry.rho;
    let h1 = 2.0 * PI / n1 as f64;
    let h2 = 4.0 * rho / n2 as f64;
    let delta = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<Complex64>> = (0..samples)
        .map(|_| (0..25).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();
    let a: Vec<f64> = (-2..=2).map(|j| j as f64 + alpha).collect();
    let b: Vec<f64> = (-2..=2).map(|n| n as f64 * PI / (2.0 * rho)).collect();
    let columns: Vec<(f64, f64, f64, f64, f64)> = (0..n1)
        .map(|i| {
            let x1 = -PI + h1 * (i as f64 + 0.5);
            let d = |f: &Profile| ((f)(x1 + delta) - (f)(x1 - delta)) / (2.0 * delta);
            (x1, geometry.upper(x1), geometry.lower(x1), d(&geometry.graphs.upper), d(&geometry.graphs.lower))
        })
        .collect();
    fields
        .par_iter()
        .map(|c| {
            let eval = |x: [f64; 2]| -> (Complex64, [Complex64; 2]) {
                let e1: Vec<Complex64> = a.iter().map(|a| (I * a * x[0]).exp()).collect();
                let e2: Vec<Complex64> = b.iter().map(|b| (I * b * x[1]).exp()).collect();
                let (mut u, mut g1, mut g2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for (j, ej) in e1.iter().enumerate() {
                    for (n, en) in e2.iter().enumerate() {
                        let t = c[j * 5 + n] * ej * en;
                        u += t;
                        g1 += I * a[j] * t;
                        g2 += I * b[n] * t;
                    }
                }
                (u, [g1, g2])
            };
            let (mut num, mut den) = (0.0, 0.0);
            for &(x1, up, lo, dup, dlo) in &columns {
                for k in 0..n2 {
                    let x2 = -2.0 * rho + h2 * (k as f64 + 0.5);
                    if lo < x2 && x2 < up {
                        let (u, g) = eval([x1, x2]);
                        let local = u.norm_sqr() + g[0].norm_sqr() + g[1].norm_sqr();
                        num += local;
                        den += local;
                        continue;
                    }
                    let (y2, slope) = if x2 >= up {
                        if x2 >= 2.0 * up - lo {
                            continue;
                        }
                        (2.0 * up - x2, 2.0 * dup)
                    } else {
                        if x2 <= 2.0 * lo - up {
                            continue;
                        }
                        (2.0 * lo - x2, 2.0 * dlo)
                    };
                    let (u, g) = eval([x1, y2]);
                    let chi = cutoff(x2, rho);
                    let dchi = (cutoff(x2 + delta, rho) - cutoff(x2 - delta, rho)) / (2.0 * delta);
                    let w1 = chi * (g[0] + slope * g[1]);
                    let w2 = dchi * u - chi * g[1];
                    num += (chi * u).norm_sqr() + w1.norm_sqr() + w2.norm_sqr();
                }
            }
            if den > 0.0 {
                (num / den).sqrt()
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub id: String,
    pub verdict: Verdict,
    /// Left-hand side of the tested inequality, when one was evaluated.
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    /// `rhs − lhs` for strict inequalities `lhs < rhs`.
    pub margin: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingReport {
    pub sign: Sign,
    pub inf_lambda_min: f64,
    pub sup_lambda_max: f64,
    pub im_bound_constant: Option<f64>,
    pub lipschitz_constant: Option<f64>,
    pub extension_norm: Option<f64>,
    pub extension: Option<ExtensionNorm>,
    pub isotropic: bool,
    pub smoothness_asserted: bool,
    pub conditions: Vec<ConditionVerdict>,
    pub interpretation: String,
}

/// Evaluates the three Gårding conditions. `extension` is `None` when the
/// support is not a graph region, which makes the negative-contrast
/// conditions not applicable.
pub fn garding_check(
    problem: &Problem,
    spectra: &ContrastSpectra,
    extension: Option<&ExtensionNorm>,
    smoothness_asserted: bool,
) -> GardingReport {
    let im_c = im_bound_constant(problem, spectra).ok();
    let ext = extension.map(|e| e.bound);
    let isotropic = spectra.nodes.iter().all(|n| problem.q_at(n.m1, n.m2).is_real_scalar());

    let positive = ConditionVerdict {
        id: "garding-positive".into(),
        verdict: if spectra.sign == Sign::Positive && spectra.inf_lambda_min > 0.0 {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        },
        lhs: None,
        rhs: Some(spectra.inf_lambda_min),
        margin: (spectra.sign == Sign::Positive).then_some(spectra.inf_lambda_min),
        note: "requires Re Q > 0 on D; rhs is inf_D λ_min".into(),
    };

    let threshold = spectra.inf_lambda_min.sqrt();
    let negative = if spectra.sign != Sign::Negative {
        not_applicable("garding-negative-extension", "requires Re Q < -1 on D; Re Q is not negative definite")
    } else if spectra.sup_eigenvalue >= -1.0 {
        not_applicable(
            "garding-negative-extension",
            &format!("requires Re Q < -1 on D; largest eigenvalue is {}", spectra.sup_eigenvalue),
        )
    } else {
        extension_verdict("garding-negative-extension", ext, threshold, "‖E‖ < inf_D λ_min^{1/2}")
    };

    let isotropic_negative = if !isotropic {
        not_applicable("garding-isotropic-negative", "requires a real scalar contrast Q = q I")
    } else if spectra.sign != Sign::Negative {
        not_applicable("garding-isotropic-negative", "requires q < 0 on D")
    } else {
        let mut v = extension_verdict("garding-isotropic-negative", ext, threshold, "‖E‖ < inf_D |q|^{1/2}");
        v.note.push_str(if smoothness_asserted {
            "; smoothness of sqrt|q| and of the boundary asserted by the user"
        } else {
            "; smoothness of sqrt|q| and of the boundary assumed, not verified"
        });
        v
    };

    let conditions = vec![positive, negative, isotropic_negative];
    let interpretation = if spectra.sign == Sign::Mixed {
        "indefinite: no certificate".to_string()
    } else if conditions.iter().any(|c| c.verdict == Verdict::Satisfied) {
        "Gårding inequality holds: the integral operator is Fredholm of index zero, so uniqueness of the \
         scattering problem implies existence of a solution for every incident field"
            .to_string()
    } else {
        "no certificate: none of the sufficient conditions is met".to_string()
    };

    GardingReport {
        sign: spectra.sign,
        inf_lambda_min: spectra.inf_lambda_min,
        sup_lambda_max: spectra.sup_lambda_max,
        im_bound_constant: im_c,
        lipschitz_constant: extension.map(|e| e.lipschitz),
        extension_norm: ext,
        extension: extension.cloned(),
        isotropic,
        smoothness_asserted,
        conditions,
        interpretation,
    }
}

fn not_applicable(id: &str, note: &str) -> ConditionVerdict {
    ConditionVerdict {
        id: id.into(),
        verdict: Verdict::NotApplicable,
        lhs: None,
        rhs: None,
        margin: None,
        note: note.into(),
    }
}

fn extension_verdict(id: &str, ext: Option<f64>, threshold: f64, what: &str) -> ConditionVerdict {
    match ext {
        None => not_applicable(id, "support is not a graph region; no extension bound available"),
        Some(e) => ConditionVerdict {
            id: id.into(),
            verdict: if e < threshold { Verdict::Satisfied } else { Verdict::Violated },
            lhs: Some(e),
            rhs: Some(threshold),
            margin: Some(threshold - e),
            note: what.into(),
        },
    }
}

impl GardingReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionVerdict> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the full diagnostic chain for a problem.
pub fn diagnose(problem: &Problem, smoothness_asserted: bool) -> Result<GardingReport> {
    let spectra = decompose_reQ(problem)?;
    let extension = problem
        .contrast()
        .graphs()
        .ok_or_else(|| Error::GeometryNotGraph("support has no graph description".into()))
        .and_then(|g| GraphGeometry::from_graphs(g.clone(), 10 * problem.grid().n1()))
        .map(|geo| extension_norm(&geo, problem.alpha(), 0x5eed))
        .ok();
    Ok(garding_check(problem, &spectra, extension.as_ref(), smoothness_asserted))
}
