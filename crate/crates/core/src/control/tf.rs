//! Continuous-time rational transfer functions with coefficients in
//! descending powers of `s`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len().saturating_sub(1));
    let out = p[first.min(p.len())..].to_vec();
    if out.is_empty() {
        vec![0.0]
    } else {
        out
    }
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[n - b.len() + i] += y;
    }
    out
}

pub(crate) fn poly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
    poly_add(a, &neg)
}

pub(crate) fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Roots via the eigenvalues of the companion matrix.
pub fn poly_roots(p: &[f64]) -> Vec<Complex64> {
    let p = trim(p);
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    // strip roots at the origin first; the companion matrix handles them but
    // exact zeros are worth keeping exact
    let zeros = p.iter().rev().take_while(|&&c| c == 0.0).count();
    let core = &p[..p.len() - zeros];
    let m = core.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if m > 0 {
        let mut comp = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            comp[(0, j)] = -core[j + 1] / core[0];
        }
        for i in 1..m {
            comp[(i, i - 1)] = 1.0;
        }
        roots.extend(comp.complex_eigenvalues().iter().copied());
    }
    roots
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousTF {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl ContinuousTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::param("tf", "empty coefficient list"));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::param("tf", "non-finite coefficient"));
        }
        let num = trim(&num);
        let den = trim(&den);
        if den[0] == 0.0 {
            return Err(Error::param("den", "denominator is identically zero"));
        }
        Ok(ContinuousTF { num, den })
    }

    pub fn constant(k: f64) -> Self {
        ContinuousTF {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.num.len() <= self.den.len()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn response(&self, f_hz: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, 2.0 * PI * f_hz))
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        poly_roots(&self.num)
    }

    /// Scale so the leading denominator coefficient is one.
    pub fn normalized(&self) -> Self {
        let a = self.den[0];
        ContinuousTF {
            num: self.num.iter().map(|c| c / a).collect(),
            den: self.den.iter().map(|c| c / a).collect(),
        }
    }

    pub fn mul(&self, other: &ContinuousTF) -> Self {
        ContinuousTF {
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
        }
    }

    /// Number of poles at the origin (trailing zero denominator coefficients).
    pub fn integrators(&self) -> usize {
        let scale = self.den.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        self.den
            .iter()
            .rev()
            .take_while(|c| c.abs() <= 1e-14 * scale)
            .count()
    }

    /// Low-frequency gain: the DC value, or the residue coefficient
    /// `lim s^k C(s)` when there are `k` integrators.
    pub fn dc_gain(&self) -> f64 {
        let k = self.integrators();
        let num_last = *self.num.last().expect("nonempty");
        let den_last = self.den[self.den.len() - 1 - k];
        num_last / den_last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_helpers() {
        assert_eq!(poly_mul(&[1.0, 2.0], &[1.0, -2.0]), vec![1.0, 0.0, -4.0]);
        assert_eq!(poly_add(&[1.0, 0.0, 0.0], &[3.0]), vec![1.0, 0.0, 3.0]);
        assert_eq!(trim(&[0.0, 0.0, 2.0, 1.0]), vec![2.0, 1.0]);
        let mut r = poly_roots(&[1.0, -3.0, 2.0, 0.0]);
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_relative_eq!(r[0].re, 0.0);
        assert_relative_eq!(r[1].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[2].re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_zero_denominator() {
        assert!(ContinuousTF::new(vec![1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn integrator_residue() {
        let c = ContinuousTF::new(vec![2.0, 6.0], vec![1.0, 3.0, 0.0]).unwrap();
        assert_eq!(c.integrators(), 1);
        assert_relative_eq!(c.dc_gain(), 2.0);
    }
}
