//! Negative binomial moment matching.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::moments::LoadMoments;
use crate::error::{invalid, Error, Result};

/// `NB(r, t)` with `P(n) = C(r + n - 1, n) (1 - t)^r t^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinParams {
    pub r: u64,
    pub t: f64,
}

impl NegBinParams {
    pub fn new(r: u64, t: f64) -> Result<Self> {
        if r == 0 {
            return Err(invalid("r", "must be at least 1"));
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(invalid("t", format!("must lie in (0, 1], got {t}")));
        }
        Ok(Self { r, t })
    }

    pub fn mean(&self) -> f64 {
        self.r as f64 * self.t / (1.0 - self.t)
    }

    pub fn variance(&self) -> f64 {
        let q = 1.0 - self.t;
        self.r as f64 * self.t / (q * q)
    }

    /// First `len` probabilities, by the ratio recursion
    /// `P(n + 1) = P(n) t (r + n) / (n + 1)`.
    pub fn pmf(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let r = self.r as f64;
        let mut p = (1.0 - self.t).powf(r);
        for n in 0..len {
            out.push(p);
            p *= self.t * (r + n as f64) / (n as f64 + 1.0);
        }
        out
    }

    /// `((1 - t) / (1 - t θ))^r`
    pub fn pgf(&self, theta: Complex64) -> Complex64 {
        let base = Complex64::new(1.0 - self.t, 0.0) / (Complex64::new(1.0, 0.0) - self.t * theta);
        base.powi(self.r as i32)
    }
}

/// Matches the first two moments: `t = 1 - E/Var`, `r = ⌊(1 - t) E / t⌋`.
///
/// `r` is floored at 1 when the load is so over-dispersed that the matched
/// value falls below it.
pub fn nb_fit(m: &LoadMoments) -> Result<NegBinParams> {
    if !(m.variance > m.mean) || !(m.mean > 0.0) {
        return Err(Error::NotOverdispersed {
            mean: m.mean,
            variance: m.variance,
        });
    }
    let t = 1.0 - m.mean / m.variance;
    let r = ((1.0 - t) * m.mean / t).floor().max(1.0) as u64;
    NegBinParams::new(r, t)
}
