//! The spatial model: a PPP of base stations and an independent Poisson
//! cluster process of users, plus the densities derived from it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::quadrature::{integrate_finite, QuadSpec};
use crate::specfun::{i0_scaled, lens_area, marcum_q1_complement, DiscPair};

/// Offspring displacement law of a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClusterKind {
    /// Thomas process: isotropic Gaussian displacement with per-axis deviation `sigma`.
    Thomas { sigma: f64 },
    /// Matérn process: displacement uniform in a disc of radius `radius`.
    Matern { radius: f64 },
}

impl ClusterKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ClusterKind::Thomas { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(invalid("sigma", format!("must be finite and positive, got {sigma}")))
            }
            ClusterKind::Matern { radius } if !(radius.is_finite() && radius > 0.0) => {
                Err(invalid("cluster_radius", format!("must be finite and positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// Length scale of the cluster (`sigma` or `radius`).
    pub fn scale(&self) -> f64 {
        match *self {
            ClusterKind::Thomas { sigma } => sigma,
            ClusterKind::Matern { radius } => radius,
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match *self {
            ClusterKind::Thomas { sigma } => ClusterKind::Thomas { sigma: sigma * factor },
            ClusterKind::Matern { radius } => ClusterKind::Matern { radius: radius * factor },
        }
    }

    /// Offspring farther than this from their parent are ignored by the
    /// simulator: `6σ` for Thomas (tail mass below 1e-7), exactly `R` for Matérn.
    pub fn truncation_radius(&self) -> f64 {
        match *self {
            ClusterKind::Thomas { sigma } => 6.0 * sigma,
            ClusterKind::Matern { radius } => radius,
        }
    }
}

/// Poisson cluster process of users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    /// Parent intensity.
    pub lambda_p: f64,
    /// Mean number of offspring per parent. Zero gives an empty process.
    pub m_bar: f64,
    #[serde(flatten)]
    pub kind: ClusterKind,
}

impl UserModel {
    pub fn new(lambda_p: f64, m_bar: f64, kind: ClusterKind) -> Result<Self> {
        let model = Self { lambda_p, m_bar, kind };
        model.validate()?;
        Ok(model)
    }

    pub fn thomas(lambda_p: f64, m_bar: f64, sigma: f64) -> Result<Self> {
        Self::new(lambda_p, m_bar, ClusterKind::Thomas { sigma })
    }

    pub fn matern(lambda_p: f64, m_bar: f64, radius: f64) -> Result<Self> {
        Self::new(lambda_p, m_bar, ClusterKind::Matern { radius })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_p.is_finite() && self.lambda_p > 0.0) {
            return Err(invalid("lambda_p", format!("must be finite and positive, got {}", self.lambda_p)));
        }
        if !(self.m_bar.is_finite() && self.m_bar >= 0.0) {
            return Err(invalid("m_bar", format!("must be finite and non-negative, got {}", self.m_bar)));
        }
        self.kind.validate()
    }

    /// User intensity `m̄ λ_p`.
    pub fn lambda_u(&self) -> f64 {
        self.m_bar * self.lambda_p
    }

    /// The same process with lengths multiplied by `factor`.
    fn rescaled(&self, factor: f64) -> Self {
        Self {
            lambda_p: self.lambda_p / (factor * factor),
            m_bar: self.m_bar,
            kind: self.kind.scaled(factor),
        }
    }
}

/// Base stations (PPP of intensity `lambda_b`) together with the user process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub lambda_b: f64,
    pub users: UserModel,
}

impl NetworkModel {
    pub fn new(lambda_b: f64, users: UserModel) -> Result<Self> {
        let model = Self { lambda_b, users };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_b.is_finite() && self.lambda_b > 0.0) {
            return Err(invalid("lambda_b", format!("must be finite and positive, got {}", self.lambda_b)));
        }
        self.users.validate().map_err(|e| match e {
            Error::Invalid { field, message } => invalid(format!("users.{field}"), message),
            other => other,
        })
    }

    /// The equivalent model in units where `lambda_b = 1`: lengths are
    /// multiplied by `sqrt(lambda_b)`, intensities divided by `lambda_b`.
    /// Counts (and therefore every load statistic) are unchanged.
    pub fn normalized(&self) -> Self {
        let factor = self.lambda_b.sqrt();
        Self {
            lambda_b: 1.0,
            users: self.users.rescaled(factor),
        }
    }

    /// Mean number of users per cell, `λ_u / λ_b`.
    pub fn mean_users_per_cell(&self) -> f64 {
        self.users.lambda_u() / self.lambda_b
    }
}

fn check_non_negative(function: &'static str, pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(domain(function, format!("{name} = {v} must be finite and non-negative")));
        }
    }
    Ok(())
}

/// Density of the distance from the origin of an offspring whose parent is
/// at distance `z`: Rician for Thomas, the disc-chord form for Matérn.
pub fn conditional_distance_pdf(model: &UserModel, x: f64, z: f64) -> Result<f64> {
    check_non_negative("conditional_distance_pdf", &[("x", x), ("z", z)])?;
    Ok(distance_density(&model.kind, x, z))
}

pub(crate) fn distance_density(kind: &ClusterKind, x: f64, z: f64) -> f64 {
    match *kind {
        ClusterKind::Thomas { sigma } => {
            let s2 = sigma * sigma;
            let shift = x - z;
            x / s2 * (-0.5 * shift * shift / s2).exp() * i0_scaled(x * z / s2)
        }
        ClusterKind::Matern { radius } => {
            let r2 = radius * radius;
            if z <= radius && x <= radius - z {
                2.0 * x / r2
            } else if x > (radius - z).abs() && x <= radius + z {
                2.0 * x / (PI * r2) * chord_half_angle(x, z, radius)
            } else {
                0.0
            }
        }
    }
}

/// `arccos((x² + z² - R²) / (2 x z))`, the half-angle of the arc of the
/// circle of radius `x` lying inside `b(z, R)`. Computed as an `atan2` of the
/// triangle's Heron factor so it stays accurate where the cosine is ±1.
fn chord_half_angle(x: f64, z: f64, radius: f64) -> f64 {
    let heron = (x + z + radius) * (x + z - radius) * (x - z + radius) * (-x + z + radius);
    heron.max(0.0).sqrt().atan2(x * x + z * z - radius * radius)
}

fn xi_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        max_subdivisions: 200,
    }
}

/// Probability that an offspring of a parent at distance `v` falls within
/// distance `r` of the origin, i.e. `∫_0^r f_d(u | v) du`.
pub fn cluster_cdf(model: &UserModel, r: f64, v: f64) -> Result<f64> {
    check_non_negative("cluster_cdf", &[("r", r), ("v", v)])?;
    cluster_mass(&model.kind, r, v)
}

pub(crate) fn cluster_mass(kind: &ClusterKind, r: f64, v: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    match *kind {
        ClusterKind::Thomas { sigma } => marcum_q1_complement(v / sigma, r / sigma),
        ClusterKind::Matern { radius } => matern_xi(radius, r, v),
    }
}

/// `ξ(r, v)`: a closed term for the part of the cluster disc inside
/// `b(o, r)` around the origin plus one integral over the chord region.
fn matern_xi(radius: f64, r: f64, v: f64) -> Result<f64> {
    let r2 = radius * radius;
    let inner = r.min((radius - v).max(0.0));
    let lo = r.min((radius - v).abs());
    let hi = r.min(radius + v);
    let mut chord = 0.0;
    if hi > lo {
        let integral = integrate_finite(
            |u| u * chord_half_angle(u, v, radius),
            lo,
            hi,
            &xi_spec(),
        )
        .map_err(|e| Error::Convergence {
            context: format!("matern cluster cdf at (r = {r}, v = {v})"),
            estimate: e.best().map_or(f64::NAN, |b| b.value),
            error_estimate: e.best().map_or(f64::INFINITY, |b| b.error_estimate),
        })?;
        chord = 2.0 / PI * integral.value;
    }
    Ok(((inner * inner + chord) / r2).clamp(0.0, 1.0))
}

/// Excess of the second-order product density over `λ_u²` at separation `r`.
pub fn pair_correlation_excess(model: &UserModel, r: f64) -> f64 {
    let pair_mass = model.lambda_p * model.m_bar * model.m_bar;
    match model.kind {
        ClusterKind::Thomas { sigma } => {
            let s2 = sigma * sigma;
            pair_mass / (4.0 * PI * s2) * (-r * r / (4.0 * s2)).exp()
        }
        ClusterKind::Matern { radius } => {
            if r > 2.0 * radius {
                0.0
            } else {
                let r4 = radius.powi(4);
                pair_mass * lens_area(&DiscPair::unchecked(radius, radius, r)) / (PI * PI * r4)
            }
        }
    }
}

/// Second-order product density `ρ⁽²⁾(r)` of the user process.
pub fn pair_correlation_density(model: &UserModel, r: f64) -> Result<f64> {
    check_non_negative("pair_correlation_density", &[("r", r)])?;
    let lu = model.lambda_u();
    Ok(lu * lu + pair_correlation_excess(model, r))
}

/// Separation beyond which the pair-correlation excess is negligible
/// (below `1e-12` of its peak for Thomas, exactly zero for Matérn).
pub(crate) fn pair_correlation_range(kind: &ClusterKind) -> f64 {
    match *kind {
        ClusterKind::Thomas { sigma } => 2.0 * sigma * (12.0 * std::f64::consts::LN_10).sqrt(),
        ClusterKind::Matern { radius } => 2.0 * radius,
    }
}
