//! SIR coverage of a uniformly placed user in the typical cell and the rate
//! coverage of the representative user.
//!
//! ```text
//! P_c(τ) = δ² τ^{-2/α} ∫_0^{τ^{2/α}} β(t)^{-2} / (1 + t^{α/2}) dt,   δ = 9/7
//! ```
//!
//! The kernel `β` has three readings, see [`BetaReading`]. Only
//! [`BetaReading::DeltaShifted`] yields a proper coverage curve that agrees
//! with simulation; the other two are kept so the selection can be rerun.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pgf::LoadPmf;
use crate::error::{domain, invalid, Error, Result};
use crate::quadrature::{integrate_finite, QuadSpec};

/// Cell-shape constant of the typical-cell coverage.
pub const DELTA: f64 = 9.0 / 7.0;

/// Candidate forms of the coverage kernel `β(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaReading {
    /// `t ∫_{1/t}^∞ du / (1 + u^{2/α})`. Diverges for every `α > 2`, so the
    /// coverage is identically zero.
    AsPrinted,
    /// `t ∫_{1/t}^∞ du / (1 + u^{α/2})`. Vanishes like `t^{α/2}` at the
    /// origin and makes the outer integral diverge.
    SwappedExponent,
    /// `δ + t ∫_{1/t}^∞ du / (1 + u^{α/2})`. With `δ = 1` this is the
    /// classical `1 / (1 + ρ(τ))` coverage of a PPP network.
    #[default]
    DeltaShifted,
}

impl BetaReading {
    pub const ALL: [BetaReading; 3] = [Self::AsPrinted, Self::SwappedExponent, Self::DeltaShifted];

    pub fn name(self) -> &'static str {
        match self {
            Self::AsPrinted => "as-printed",
            Self::SwappedExponent => "swapped-exponent",
            Self::DeltaShifted => "delta-shifted",
        }
    }
}

fn coverage_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-10,
        abs_tol: 1e-13,
        max_subdivisions: 200,
    }
}

/// `∫_{1/t}^∞ du / (1 + u^p)`, computed as `∫_0^t w^{p-2} / (1 + w^p) dw`.
fn kernel_tail(t: f64, p: f64) -> Result<f64> {
    if p <= 1.0 {
        return Ok(f64::INFINITY);
    }
    if p == 2.0 {
        return Ok(t.atan());
    }
    integrate_finite(|w| w.powf(p - 2.0) / (1.0 + w.powf(p)), 0.0, t, &coverage_spec())
        .map(|r| r.value)
        .map_err(|e| Error::Convergence {
            context: format!("coverage kernel at t = {t}: {e}"),
            estimate: e.best().map_or(f64::NAN, |b| b.value),
            error_estimate: e.best().map_or(f64::INFINITY, |b| b.error_estimate),
        })
}

fn beta(t: f64, alpha: f64, reading: BetaReading, delta: f64) -> Result<f64> {
    Ok(match reading {
        BetaReading::AsPrinted => t * kernel_tail(t, 2.0 / alpha)?,
        BetaReading::SwappedExponent => t * kernel_tail(t, alpha / 2.0)?,
        BetaReading::DeltaShifted => delta + t * kernel_tail(t, alpha / 2.0)?,
    })
}

fn coverage(alpha: f64, tau: f64, reading: BetaReading, delta: f64) -> Result<f64> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(domain("sir_ccdf", format!("alpha must exceed 2, got {alpha}")));
    }
    if !(tau > 0.0) {
        return Err(domain("sir_ccdf", format!("tau must be positive, got {tau}")));
    }
    if tau == f64::INFINITY {
        return Ok(0.0);
    }
    let alarm = |value: f64| Error::Transcription {
        reading: reading.name().to_string(),
        value,
    };
    let x = tau.powf(2.0 / alpha);
    let mut failure = None;
    let mut integrand = |t: f64| match beta(t, alpha, reading, delta) {
        Ok(b) => 1.0 / (b * b * (1.0 + t.powf(alpha / 2.0))),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let spec = coverage_spec();
    // [0, min(x, 1)] directly, (1, x] through t = 1/s so huge x stays cheap.
    let head = integrate_finite(&mut integrand, 0.0, x.min(1.0), &spec);
    let tail = if x > 1.0 {
        integrate_finite(|s| integrand(1.0 / s) / (s * s), 1.0 / x, 1.0, &spec).map(|r| r.value)
    } else {
        Ok(0.0)
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let integral = match (head, tail) {
        (Ok(h), Ok(t)) => h.value + t,
        (Err(e), _) => return Err(alarm(e.best().map_or(f64::INFINITY, |b| b.value))),
        (_, Err(e)) => return Err(alarm(e.best().map_or(f64::INFINITY, |b| b.value))),
    };
    let pc = delta * delta * integral / x;
    if !pc.is_finite() || !(-1e-6..=1.0 + 1e-6).contains(&pc) {
        return Err(alarm(pc));
    }
    Ok(pc.clamp(0.0, 1.0))
}

/// `P(SIR > τ)` for a uniformly placed user in the typical cell.
pub fn sir_ccdf(alpha: f64, tau: f64) -> Result<f64> {
    CoverageKernel::default().ccdf(alpha, tau)
}

pub fn sir_ccdf_with(alpha: f64, tau: f64, reading: BetaReading) -> Result<f64> {
    CoverageKernel { reading, delta: DELTA }.ccdf(alpha, tau)
}

/// A kernel reading together with the shift `δ`. Only the default is meant
/// for results; other values exist for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageKernel {
    pub reading: BetaReading,
    pub delta: f64,
}

impl Default for CoverageKernel {
    fn default() -> Self {
        Self {
            reading: BetaReading::default(),
            delta: DELTA,
        }
    }
}

impl CoverageKernel {
    pub fn ccdf(&self, alpha: f64, tau: f64) -> Result<f64> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", format!("must be finite and positive, got {}", self.delta)));
        }
        coverage(alpha, tau, self.reading, self.delta)
    }
}

/// Outcome of checking one kernel reading against empirical coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingCheck {
    pub reading: BetaReading,
    /// Largest absolute gap to the empirical values, `None` when the
    /// coverage integral raised an alarm.
    pub max_gap: Option<f64>,
    pub passed: bool,
}

/// Tries the kernel readings in order against empirical `(τ, P(SIR > τ))`
/// pairs and reports each one. The first passing reading is the one to use.
pub fn check_beta_readings(alpha: f64, empirical: &[(f64, f64)], tol: f64) -> Vec<ReadingCheck> {
    BetaReading::ALL
        .iter()
        .map(|&reading| {
            let gaps: Result<Vec<f64>> = empirical
                .iter()
                .map(|&(tau, p)| sir_ccdf_with(alpha, tau, reading).map(|pc| (pc - p).abs()))
                .collect();
            let max_gap = gaps.ok().map(|g| g.into_iter().fold(0.0, f64::max));
            ReadingCheck {
                reading,
                max_gap,
                passed: max_gap.is_some_and(|g| g <= tol),
            }
        })
        .collect()
}

/// Pathloss, bandwidth and backhaul of the rate model, plus the rate
/// thresholds to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub alpha: f64,
    /// Hz.
    pub bandwidth_w: f64,
    /// Backhaul cap in bps; `None` is unbounded.
    #[serde(default)]
    pub backhaul_rb: Option<f64>,
    /// bps.
    #[serde(default)]
    pub thresholds: Vec<f64>,
}

impl RateConfig {
    pub fn new(alpha: f64, bandwidth_w: f64, backhaul_rb: Option<f64>, thresholds: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            alpha,
            bandwidth_w,
            backhaul_rb,
            thresholds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be finite and > 2, got {}", self.alpha)));
        }
        if !(self.bandwidth_w > 0.0 && self.bandwidth_w.is_finite()) {
            return Err(invalid("bandwidth_w", format!("must be finite and positive, got {}", self.bandwidth_w)));
        }
        if let Some(rb) = self.backhaul_rb {
            if !(rb >= 0.0) || rb.is_infinite() {
                return Err(invalid("backhaul_rb", format!("must be finite and non-negative, got {rb}")));
            }
        }
        if let Some(&rho) = self.thresholds.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(invalid("thresholds", format!("must be finite and positive, got {rho}")));
        }
        Ok(())
    }
}

/// Coverage below this is dropped from the rate sum.
const NEGLIGIBLE_COVERAGE: f64 = 1e-13;

/// `P(Rate > ρ | N > 0) = Σ_{n < R_b/ρ} P_c(2^{nρ/W} - 1) p_n / (1 - p_0)`,
/// treating SIR and load as independent. The backhaul share `R_b / n` must
/// exceed `ρ` strictly, so `n = R_b / ρ` is excluded.
pub fn rate_coverage(cfg: &RateConfig, pmf: &LoadPmf, rho: f64) -> Result<f64> {
    rate_coverage_with(cfg, pmf, rho, &CoverageKernel::default())
}

/// [`rate_coverage`] with an explicit SIR coverage kernel.
pub fn rate_coverage_with(cfg: &RateConfig, pmf: &LoadPmf, rho: f64, kernel: &CoverageKernel) -> Result<f64> {
    cfg.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(domain("rate_coverage", format!("rho must be finite and positive, got {rho}")));
    }
    let occupied = 1.0 - pmf.get(0);
    if occupied <= 1e-12 {
        return Err(Error::EmptyCell);
    }
    let mut n_max = pmf.probs.len().saturating_sub(1);
    if let Some(rb) = cfg.backhaul_rb {
        let cap = (rb / rho).ceil() - 1.0;
        n_max = n_max.min(cap.max(0.0) as usize);
    }
    let mut total = 0.0;
    for n in 1..=n_max {
        let tau = (n as f64 * rho / cfg.bandwidth_w).exp2() - 1.0;
        let pc = kernel.ccdf(cfg.alpha, tau)?;
        total += pc * pmf.probs[n];
        if pc < NEGLIGIBLE_COVERAGE {
            break;
        }
    }
    Ok((total / occupied).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rho: f64,
    pub coverage: f64,
}

/// [`rate_coverage`] at every threshold of `cfg`, in order.
pub fn rate_coverage_curve(cfg: &RateConfig, pmf: &LoadPmf) -> Result<Vec<RatePoint>> {
    rate_coverage_curve_with(cfg, pmf, &CoverageKernel::default())
}

pub fn rate_coverage_curve_with(cfg: &RateConfig, pmf: &LoadPmf, kernel: &CoverageKernel) -> Result<Vec<RatePoint>> {
    cfg.thresholds
        .par_iter()
        .map(|&rho| rate_coverage_with(cfg, pmf, rho, kernel).map(|coverage| RatePoint { rho, coverage }))
        .collect()
}
