//! Arbitrary-precision re-evaluation of the closed-form kernel coefficients.

use astro_float::{BigFloat, Consts, RoundingMode};
use grating_core::Complex64;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Evaluator {
    cc: Consts,
}

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn to_f64(x: &BigFloat) -> f64 {
    let s = format!("{x}");
    s.parse().unwrap_or_else(|_| panic!("unparseable big float {s}"))
}

impl Evaluator {
    pub fn new() -> Self {
        Evaluator { cc: Consts::new().expect("constant cache") }
    }

    /// `((−1)^{j2} e^{iβρ} − 1)/(sqrt(4πρ) λ)` in 256-bit arithmetic.
    pub fn coefficient(&mut self, j: [i64; 2], k: f64, alpha: f64, rho: f64) -> (BigFloat, BigFloat) {
        let pi = self.cc.pi(P, RM);
        let aj = big(j[0] as f64).add(&big(alpha), P, RM);
        let k2 = big(k).mul(&big(k), P, RM);
        let d = k2.sub(&aj.mul(&aj, P, RM), P, RM);
        let rho_b = big(rho);
        let kz = big(j[1] as f64).mul(&pi, P, RM).div(&rho_b, P, RM);
        let lambda = d.sub(&kz.mul(&kz, P, RM), P, RM);
        let sign = if j[1].rem_euclid(2) == 0 { big(1.0) } else { big(-1.0) };
        let (er, ei) = if d.is_positive() {
            let phase = d.sqrt(P, RM).mul(&rho_b, P, RM);
            (phase.cos(P, RM, &mut self.cc), phase.sin(P, RM, &mut self.cc))
        } else {
            let decay = d.neg().sqrt(P, RM).mul(&rho_b, P, RM).neg();
            (decay.exp(P, RM, &mut self.cc), big(0.0))
        };
        let num_re = sign.mul(&er, P, RM).sub(&big(1.0), P, RM);
        let num_im = sign.mul(&ei, P, RM);
        let norm = big(4.0).mul(&pi, P, RM).mul(&rho_b, P, RM).sqrt(P, RM).mul(&lambda, P, RM);
        (num_re.div(&norm, P, RM), num_im.div(&norm, P, RM))
    }

    /// `|approx − exact| / |exact|`, the difference formed in 256-bit arithmetic.
    pub fn relative_error(&self, approx: Complex64, exact: &(BigFloat, BigFloat)) -> f64 {
        let dr = big(approx.re).sub(&exact.0, P, RM);
        let di = big(approx.im).sub(&exact.1, P, RM);
        let num = dr.mul(&dr, P, RM).add(&di.mul(&di, P, RM), P, RM);
        let den = exact.0.mul(&exact.0, P, RM).add(&exact.1.mul(&exact.1, P, RM), P, RM);
        (to_f64(&num) / to_f64(&den)).sqrt()
    }
}
