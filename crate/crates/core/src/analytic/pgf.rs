//! PGF of the typical-cell load under the equal-area disc approximation of
//! the typical cell, and its numerical inversion to a PMF.
//!
//! In units where `λ_b = 1` the normalized equal-area radius `s` is
//! Nakagami(3.5, 1) and the physical radius is `s / √π`. Given the radius,
//! the number of users in the disc has the cluster-process PGF
//! `exp(-2π λ_p ∫ (1 - exp(-m̄ (1 - θ) F(s/√π, v))) v dv)`, where `F` is the
//! probability that an offspring of a parent at distance `v` lands in the
//! disc.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::moments::LoadMoments;
use crate::error::{invalid, Error, Result};
use crate::ppmodel::{cluster_mass, ClusterKind, NetworkModel};
use crate::quadrature::{integrate_finite_with, QuadError, QuadSpec};
use crate::specfun::{cell_radius_density, CELL_RADIUS_QUANTILE};

/// Probability mass function of the load on `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPmf {
    pub probs: Vec<f64>,
    /// Present when the PMF came from a PGF inversion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<Inversion>,
}

/// How an inverted PMF was obtained, with its pre-clipping diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    /// Radius of the circle the PGF was sampled on.
    pub radius: f64,
    pub dft_size: usize,
    /// Smallest probability before negative values were clipped to zero.
    pub min_raw: f64,
    /// Sum of the probabilities before clipping.
    pub raw_sum: f64,
}

impl LoadPmf {
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total-variation distance `½ Σ |p_n - q_n|` over the union of supports.
    pub fn total_variation(&self, other: &LoadPmf) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        0.5 * (0..len).map(|n| (self.get(n) - other.get(n)).abs()).sum::<f64>()
    }
}

pub(crate) fn pgf_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-10,
        abs_tol: 1e-11,
        max_subdivisions: 300,
    }
}

/// Parents farther than this beyond the disc edge contribute below 1e-12:
/// `8σ` for Thomas, `R` (exactly zero beyond) for Matérn.
fn parent_reach(kind: &ClusterKind) -> f64 {
    match *kind {
        ClusterKind::Thomas { sigma } => 8.0 * sigma,
        ClusterKind::Matern { radius } => radius,
    }
}

/// Cluster mass inside `b(o, r)` with the exact 0/1 limits short-circuited.
fn disc_mass(kind: &ClusterKind, r: f64, v: f64) -> Result<f64> {
    match *kind {
        // Both Marcum tails are below e^-50 ten deviations from the edge.
        ClusterKind::Thomas { sigma } if v - r > 10.0 * sigma => Ok(0.0),
        ClusterKind::Thomas { sigma } if r - v > 10.0 * sigma => Ok(1.0),
        ClusterKind::Matern { radius } if v >= r + radius => Ok(0.0),
        ClusterKind::Matern { radius } if r >= v + radius => Ok(1.0),
        _ => cluster_mass(kind, r, v),
    }
}

/// `e^z - 1` without cancellation for small `|z|`.
fn exp_m1(z: Complex64) -> Complex64 {
    let half_sin = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin;
    Complex64::new(re, z.re.exp() * z.im.sin())
}

fn quad_failure(context: &str, e: QuadError<Vec<Complex64>>) -> Error {
    match e {
        QuadError::NotConverged { best } => Error::Convergence {
            context: context.to_string(),
            estimate: best.value.first().map_or(f64::NAN, |c| c.norm()),
            error_estimate: best.error_estimate,
        },
        other => Error::Convergence {
            context: format!("{context}: {other}"),
            estimate: f64::NAN,
            error_estimate: f64::INFINITY,
        },
    }
}

/// Evaluates the load PGF at every point of `thetas` in one adaptive pass,
/// sharing the cluster-mass evaluations between them.
pub fn load_pgf_many(net: &NetworkModel, thetas: &[Complex64]) -> Result<Vec<Complex64>> {
    net.validate()?;
    let norm = net.normalized();
    let users = norm.users;
    if users.m_bar == 0.0 || thetas.is_empty() {
        return Ok(vec![Complex64::new(1.0, 0.0); thetas.len()]);
    }
    let spec = pgf_spec();
    let reach = parent_reach(&users.kind);
    let one_minus: Vec<Complex64> = thetas.iter().map(|t| users.m_bar * (1.0 - t)).collect();
    let zeros = vec![Complex64::new(0.0, 0.0); thetas.len()];

    // ∫ (1 - exp(-m̄(1-θ) F(r, v))) v dv for every θ.
    let parent_integral = |r: f64| -> Result<Vec<Complex64>> {
        let mut failure = None;
        let result = integrate_finite_with(
            |v| match disc_mass(&users.kind, r, v) {
                Ok(mass) => one_minus.iter().map(|c| -exp_m1(-(c * mass)) * v).collect(),
                Err(e) => {
                    failure.get_or_insert(e);
                    zeros.clone()
                }
            },
            0.0,
            r + reach,
            &spec,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        result.map(|r| r.value).map_err(|e| quad_failure("PGF parent integral", e))
    };

    // Integrate f(s) (E(s) - 1) and add one, so θ = 1 gives exactly 1.
    let mut failure = None;
    let outer = integrate_finite_with(
        |s| {
            let density = cell_radius_density(s);
            if density == 0.0 {
                return zeros.clone();
            }
            match parent_integral(s / PI.sqrt()) {
                Ok(inner) => inner
                    .into_iter()
                    .map(|i| density * exp_m1(-2.0 * PI * users.lambda_p * i))
                    .collect(),
                Err(e) => {
                    failure.get_or_insert(e);
                    zeros.clone()
                }
            }
        },
        0.0,
        CELL_RADIUS_QUANTILE,
        &spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer.map_err(|e| quad_failure("PGF radius integral", e))?;
    Ok(outer.value.into_iter().map(|g| g + 1.0).collect())
}

/// PGF `E[θ^N]` of the typical-cell load.
pub fn load_pgf(net: &NetworkModel, theta: Complex64) -> Result<Complex64> {
    load_pgf_many(net, &[theta]).map(|v| v[0])
}

/// Smallest power of two at least `mean + 10 sd`, and at least 128.
pub fn default_dft_size(moments: &LoadMoments) -> usize {
    let span = moments.mean + 10.0 * moments.variance.max(0.0).sqrt();
    (span.ceil().max(1.0) as usize).next_power_of_two().max(128)
}

fn check_inversion_args(n_points: usize, radius: f64) -> Result<()> {
    if n_points < 2 || !n_points.is_power_of_two() {
        return Err(invalid("dft_size", format!("must be a power of two >= 2, got {n_points}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("inversion_radius", format!("must be finite and positive, got {radius}")));
    }
    Ok(())
}

fn circle_nodes(n_points: usize, radius: f64) -> Vec<Complex64> {
    (0..n_points)
        .map(|m| Complex64::from_polar(radius, 2.0 * PI * m as f64 / n_points as f64))
        .collect()
}

/// Recovers `p_0 .. p_{N-1}` from the values of a PGF at the `N` points
/// `R e^{2πjm/N}`:
/// `p_n = R^{-n} / N Σ_m G(R e^{2πjm/N}) e^{-2πjnm/N}`.
pub fn pmf_from_circle_values(values: &[Complex64], radius: f64) -> Result<LoadPmf> {
    let n_points = values.len();
    check_inversion_args(n_points, radius)?;
    let mut buffer = values.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n_points).process(&mut buffer);
    let scale = 1.0 / n_points as f64;
    let mut raw = Vec::with_capacity(n_points);
    let mut radius_pow = 1.0;
    for c in buffer {
        raw.push(c.re * scale / radius_pow);
        radius_pow *= radius;
    }
    let raw_sum: f64 = raw.iter().sum();
    let min_raw = raw.iter().copied().fold(f64::INFINITY, f64::min);
    if (raw_sum - 1.0).abs() > 1e-3 {
        return Err(Error::Inversion(format!("probabilities sum to {raw_sum}")));
    }
    Ok(LoadPmf {
        probs: raw.into_iter().map(|p| p.max(0.0)).collect(),
        inversion: Some(Inversion {
            radius,
            dft_size: n_points,
            min_raw,
            raw_sum,
        }),
    })
}

/// Inverts any generating function sampled on the circle of radius `radius`.
pub fn invert_generating_function<G>(g: G, n_points: usize, radius: f64) -> Result<LoadPmf>
where
    G: Fn(Complex64) -> Complex64 + Send + Sync,
{
    check_inversion_args(n_points, radius)?;
    let values: Vec<Complex64> = circle_nodes(n_points, radius).into_par_iter().map(g).collect();
    pmf_from_circle_values(&values, radius)
}

/// PMF of the typical-cell load by DFT inversion of [`load_pgf`].
pub fn invert_pgf(net: &NetworkModel, n_points: usize, radius: f64) -> Result<LoadPmf> {
    check_inversion_args(n_points, radius)?;
    // G has real coefficients, so G(conj θ) = conj G(θ): only the upper
    // half of the circle is evaluated.
    let nodes = circle_nodes(n_points, radius);
    let half = n_points / 2 + 1;
    let upper = load_pgf_many(net, &nodes[..half])?;
    let mut values = upper.clone();
    for m in half..n_points {
        values.push(upper[n_points - m].conj());
    }
    pmf_from_circle_values(&values, radius)
}
