//! First and second moments of the typical-cell load.
//!
//! The second moment is
//!
//! ```text
//! E[N²] = λ_u/λ_b + ∫∫ exp(-λ_b A_u(|x1|, |x2|, |x1 - x2|)) ρ⁽²⁾(|x1 - x2|) dx1 dx2
//! ```
//!
//! with both integrals over the plane. Writing `ρ⁽²⁾ = λ_u² + excess` splits
//! it into a clustering-free part, `λ_u²` times the second moment of the
//! Poisson–Voronoi cell area, and a clustering part that only sees
//! separations where the excess is non-zero. The first part is a universal
//! constant in units where `λ_b = 1`; the second is integrated over
//! `(x1, separation, angle)` so that a narrow excess never has to be found
//! by the adaptive rule.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ppmodel::{pair_correlation_excess, pair_correlation_range, NetworkModel};
use crate::quadrature::{integrate_nested, Axis, IntegrationResult, QuadError, QuadSpec, Upper};
use crate::specfun::{union_area, DiscPair};

/// Beyond this normalized distance `exp(-π x²)` is below 1e-27.
const KERNEL_RADIUS: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentErrors {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

/// Mean, second moment and variance of the typical-cell load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub error_estimates: MomentErrors,
}

impl LoadMoments {
    /// Builds moments from a mean and variance known exactly.
    pub fn from_mean_variance(mean: f64, variance: f64) -> Self {
        Self {
            mean,
            second_moment: variance + mean * mean,
            variance,
            error_estimates: MomentErrors {
                mean: 0.0,
                second_moment: 0.0,
                variance: 0.0,
            },
        }
    }

    /// `Var / mean²`, or `NaN` for an empty model.
    pub fn normalized_variance(&self) -> f64 {
        self.variance / (self.mean * self.mean)
    }
}

pub(crate) fn moment_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-9,
        abs_tol: 1e-12,
        max_subdivisions: 400,
    }
}

fn convergence(context: &str, e: QuadError) -> Error {
    match e {
        QuadError::NotConverged { best } => Error::Convergence {
            context: context.to_string(),
            estimate: best.value,
            error_estimate: best.error_estimate,
        },
        other => Error::Convergence {
            context: format!("{context}: {other}"),
            estimate: f64::NAN,
            error_estimate: f64::INFINITY,
        },
    }
}

/// `E[N] = m̄ λ_p / λ_b`.
pub fn mean_load(net: &NetworkModel) -> f64 {
    net.mean_users_per_cell()
}

/// Evaluates the pair integral of the second moment in its direct form,
///
/// ```text
/// 2π ∫_0^{2π} ∫_0^∞ ∫_0^∞ exp(-A_u(x1, x2, d)) g(d) x1 x2 dx1 dx2 dθ,
/// d = (x1² + x2² - 2 x1 x2 cos θ)^{1/2},
/// ```
///
/// in units where `λ_b = 1`. The leading `2π` is the rotation of the pair
/// about the origin. `g` is the pair density as a function of separation.
pub fn pair_kernel_integral<G>(g: G, spec: &QuadSpec) -> Result<IntegrationResult>
where
    G: Fn(f64) -> f64,
{
    // Symmetric in θ ↔ 2π - θ and in x1 ↔ x2.
    let axes = [
        Axis::fixed(0.0, PI),
        Axis::fixed(0.0, KERNEL_RADIUS),
        Axis::dependent(|_| 0.0, |p| Upper::Finite(p[1])),
    ];
    let integrand = |p: &[f64]| {
        let (theta, x1, x2) = (p[0], p[1], p[2]);
        let d = (x1 * x1 + x2 * x2 - 2.0 * x1 * x2 * theta.cos()).max(0.0).sqrt();
        let area = union_area(&DiscPair::unchecked(x1, x2, d));
        (-area).exp() * g(d) * x1 * x2
    };
    let r = integrate_nested(integrand, &axes, spec).map_err(|e| convergence("pair kernel integral", e))?;
    let factor = 2.0 * PI * 4.0;
    Ok(IntegrationResult {
        value: factor * r.value,
        error_estimate: factor * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// `E[(λ_b |C_o|)²]`, the second moment of the normalized area of the
/// typical Poisson–Voronoi cell, from the pair kernel with `g ≡ 1`.
pub fn voronoi_area_second_moment() -> IntegrationResult {
    static CELL: OnceLock<IntegrationResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = QuadSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_subdivisions: 400,
        };
        pair_kernel_integral(|_| 1.0, &spec).expect("Voronoi kernel converges")
    })
    .clone()
}

/// Clustering contribution to the second moment, integrated over the
/// position of the first point (radius `x`), the separation `r` and the
/// angle `φ` between them; `|x2| = (x² + r² + 2 x r cos φ)^{1/2}`.
fn clustering_term(net: &NetworkModel, spec: &QuadSpec) -> Result<IntegrationResult> {
    let norm = net.normalized();
    let users = norm.users;
    if users.m_bar == 0.0 {
        return Ok(IntegrationResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let range = pair_correlation_range(&users.kind);
    let axes = [
        Axis::fixed(0.0, KERNEL_RADIUS),
        Axis::fixed(0.0, range),
        Axis::fixed(0.0, PI),
    ];
    let integrand = |p: &[f64]| {
        let (x, r, phi) = (p[0], p[1], p[2]);
        let x2 = (x * x + r * r + 2.0 * x * r * phi.cos()).max(0.0).sqrt();
        let area = union_area(&DiscPair::unchecked(x, x2, r));
        (-area).exp() * pair_correlation_excess(&users, r) * x * r
    };
    let r = integrate_nested(integrand, &axes, spec).map_err(|e| convergence("clustering term of the second moment", e))?;
    // 2π for the rotation of x1, 2 for φ ∈ [π, 2π].
    let factor = 4.0 * PI;
    Ok(IntegrationResult {
        value: factor * r.value,
        error_estimate: factor * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// `E[N²]` with its quadrature error estimate.
pub fn second_moment_load(net: &NetworkModel) -> Result<IntegrationResult> {
    net.validate()?;
    let spec = moment_spec();
    let mean = mean_load(net);
    let cell = voronoi_area_second_moment();
    let clustering = clustering_term(net, &spec)?;
    Ok(IntegrationResult {
        value: mean + mean * mean * cell.value + clustering.value,
        error_estimate: mean * mean * cell.error_estimate + clustering.error_estimate,
        evaluations: cell.evaluations + clustering.evaluations,
    })
}

/// `Var[N] = E[N²] - E[N]²`.
pub fn variance_load(net: &NetworkModel) -> Result<f64> {
    load_moments(net).map(|m| m.variance)
}

pub fn load_moments(net: &NetworkModel) -> Result<LoadMoments> {
    let mean = mean_load(net);
    let second = second_moment_load(net)?;
    let variance = (second.value - mean * mean).max(0.0);
    Ok(LoadMoments {
        mean,
        second_moment: second.value,
        variance,
        error_estimates: MomentErrors {
            mean: 0.0,
            second_moment: second.error_estimate,
            variance: second.error_estimate,
        },
    })
}

/// Variance of the load when users form a PPP of the same intensity.
pub fn ppp_user_variance(net: &NetworkModel) -> f64 {
    let mean = mean_load(net);
    let cell = voronoi_area_second_moment().value;
    mean + mean * mean * (cell - 1.0)
}
