//! Special functions and disc geometry shared by the analytical formulas.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_finite, QuadSpec};

/// Nakagami shape of the normalized equal-area cell radius.
pub const CELL_SHAPE: f64 = 3.5;

/// `1 - 1e-10` quantile of the normalized cell radius distribution.
pub const CELL_RADIUS_QUANTILE: f64 = 2.949_459_886_746_100_6;

/// Two discs of radii `r1`, `r2` whose centers are `d` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscPair {
    r1: f64,
    r2: f64,
    d: f64,
}

impl DiscPair {
    pub fn new(r1: f64, r2: f64, d: f64) -> Result<Self> {
        for (name, v) in [("r1", r1), ("r2", r2), ("d", d)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain("DiscPair::new", format!("{name} = {v} must be finite and non-negative")));
            }
        }
        Ok(Self { r1, r2, d })
    }

    /// Callers guarantee finite, non-negative arguments.
    pub(crate) fn unchecked(r1: f64, r2: f64, d: f64) -> Self {
        debug_assert!(r1 >= 0.0 && r2 >= 0.0 && d >= 0.0);
        Self { r1, r2, d }
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }
    pub fn d(&self) -> f64 {
        self.d
    }
}

/// Area of the intersection of the two discs.
///
/// The half-angles are taken with `atan2(t, ·)`, where `t` is four times the
/// area of the triangle formed by the two centers and an intersection point.
/// This stays well defined at both tangencies, where `t` vanishes.
pub fn lens_area(p: &DiscPair) -> f64 {
    let DiscPair { r1, r2, d } = *p;
    let rmin = r1.min(r2);
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return PI * rmin * rmin;
    }
    let t2 = (r1 + r2 + d) * (r1 + r2 - d) * (r1 - r2 + d) * (-r1 + r2 + d);
    let t = t2.max(0.0).sqrt();
    let d2 = d * d;
    let phi1 = t.atan2(d2 + r1 * r1 - r2 * r2);
    let phi2 = t.atan2(d2 - r1 * r1 + r2 * r2);
    let area = r1 * r1 * phi1 + r2 * r2 * phi2 - 0.5 * t;
    area.clamp(0.0, PI * rmin * rmin)
}

/// Area of the union of the two discs.
pub fn union_area(p: &DiscPair) -> f64 {
    PI * (p.r1 * p.r1 + p.r2 * p.r2) - lens_area(p)
}

const I0_SERIES_LIMIT: f64 = 20.0;

/// `exp(-x) * I0(x)` for `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain("bessel_i0_scaled", format!("argument {x} must be finite and non-negative")));
    }
    Ok(i0_scaled(x))
}

/// Unchecked core of [`bessel_i0_scaled`].
pub(crate) fn i0_scaled(x: f64) -> f64 {
    if x <= I0_SERIES_LIMIT {
        // Σ (x²/4)^k / (k!)²; all terms positive.
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Asymptotic series Σ ((2k-1)!!)² / (k! (8x)^k); beyond x = 20 its
        // smallest term is below 1e-17.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next >= term || next < sum * 1e-17 {
                if next < term {
                    sum += next;
                }
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

fn marcum_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-15,
        max_subdivisions: 200,
    }
}

/// `y exp(-(y² + a²)/2) I0(a y)` with the exponentials combined so nothing overflows.
fn marcum_integrand(a: f64, y: f64) -> f64 {
    let shift = y - a;
    y * (-0.5 * shift * shift).exp() * i0_scaled(a * y)
}

fn check_marcum_args(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
        return Err(domain("marcum_q1", format!("arguments ({a}, {b}) must be finite and non-negative")));
    }
    Ok(())
}

/// Integral of the Rician integrand over `[lo, hi]`.
fn marcum_segment(a: f64, lo: f64, hi: f64) -> Result<f64> {
    integrate_finite(|y| marcum_integrand(a, y), lo, hi, &marcum_spec())
        .map(|r| r.value)
        .map_err(|e| match e.best() {
            Some(best) => Error::Convergence {
                context: format!("marcum_q1(a = {a}) on [{lo}, {hi}]"),
                estimate: best.value,
                error_estimate: best.error_estimate,
            },
            None => domain("marcum_q1", e.to_string()),
        })
}

// Beyond this many units past max(a, b) the Gaussian factor is below e^-72.
const MARCUM_TAIL: f64 = 12.0;

/// First-order Marcum Q-function `Q1(a, b)`.
///
/// Evaluated by adaptive quadrature of its defining integral. Whichever of
/// `Q1` and `1 - Q1` has the shorter integration range is computed directly.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    check_marcum_args(a, b)?;
    if b == 0.0 {
        return Ok(1.0);
    }
    if a == 0.0 {
        return Ok((-0.5 * b * b).exp());
    }
    let q = if b < a {
        1.0 - marcum_segment(a, 0.0, b)?
    } else {
        marcum_segment(a, b, b + MARCUM_TAIL)?
    };
    Ok(q.clamp(0.0, 1.0))
}

/// `1 - Q1(a, b)`, accurate when it is small.
pub fn marcum_q1_complement(a: f64, b: f64) -> Result<f64> {
    check_marcum_args(a, b)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(-(-0.5 * b * b).exp_m1());
    }
    let p = if b < a {
        marcum_segment(a, 0.0, b)?
    } else {
        1.0 - marcum_segment(a, b, b + MARCUM_TAIL)?
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Density of `sqrt(pi * lambda_b) * R_c`, the normalized radius of the disc
/// with the same area as the typical cell: Nakagami with `m = 3.5`, `Ω = 1`.
pub fn cell_radius_pdf(r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(domain("cell_radius_pdf", format!("radius {r} must be finite and non-negative")));
    }
    Ok(cell_radius_density(r))
}

pub(crate) fn cell_radius_density(r: f64) -> f64 {
    // Γ(3.5) = 15 √π / 8
    let gamma = 15.0 * PI.sqrt() / 8.0;
    let norm = 2.0 * CELL_SHAPE.powf(CELL_SHAPE) / gamma;
    let r2 = r * r;
    norm * r2 * r2 * r2 * (-CELL_SHAPE * r2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_semi_infinite;
    use proptest::prelude::*;

    // Reference values from a 40-digit evaluation of exp(-x) I0(x).
    const I0_REFERENCE: [(f64, f64); 8] = [
        (0.5, 0.645_035_270_449_150_068_11),
        (1.0, 0.465_759_607_593_640_436_5),
        (5.0, 0.183_540_812_609_328_353_07),
        (10.0, 0.127_833_337_163_428_607_32),
        (20.0, 0.089_780_311_884_826_021_596),
        (50.0, 0.056_561_626_647_454_192_53),
        (700.0, 0.015_081_295_651_531_357_587),
        (1e6, 0.000_398_942_330_269_245_778_78),
    ];

    #[test]
    fn i0_at_zero() {
        assert_eq!(bessel_i0_scaled(0.0).unwrap(), 1.0);
    }

    #[test]
    fn i0_matches_reference() {
        for (x, want) in I0_REFERENCE {
            let got = bessel_i0_scaled(x).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn i0_at_one_matches_power_series() {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..40 {
            if k > 0 {
                fact *= k as f64;
            }
            sum += 0.5f64.powi(2 * k) / (fact * fact);
        }
        let want = sum * (-1.0f64).exp();
        assert!((bessel_i0_scaled(1.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn i0_large_argument_leading_order() {
        let got = bessel_i0_scaled(700.0).unwrap();
        let leading = 1.0 / (2.0 * PI * 700.0).sqrt();
        assert!(got.is_finite() && ((got - leading) / leading).abs() < 1e-3);
    }

    #[test]
    fn i0_continuous_across_series_switch() {
        let below = i0_scaled(I0_SERIES_LIMIT);
        let above = i0_scaled(I0_SERIES_LIMIT * (1.0 + 1e-12));
        assert!(((below - above) / below).abs() < 1e-12);
    }

    #[test]
    fn i0_rejects_bad_input() {
        assert!(bessel_i0_scaled(f64::NAN).is_err());
        assert!(bessel_i0_scaled(f64::INFINITY).is_err());
        assert!(bessel_i0_scaled(-1.0).is_err());
    }

    #[test]
    fn marcum_limits() {
        for beta in [0.1, 1.0, 3.0] {
            let got = marcum_q1(0.0, beta).unwrap();
            assert!((got - (-beta * beta / 2.0).exp()).abs() < 1e-15);
        }
        for a in [0.0, 0.5, 4.0] {
            assert_eq!(marcum_q1(a, 0.0).unwrap(), 1.0);
        }
        assert!(marcum_q1(2.0, 60.0).unwrap() < 1e-200);
        assert!(marcum_q1(-1.0, 1.0).is_err());
        assert!(marcum_q1(1.0, -1.0).is_err());
    }

    #[test]
    fn marcum_matches_reference() {
        // 20-digit quadrature of the defining integral.
        let cases = [
            (1.0, 1.0, 0.732_879_803_796_820_218_25),
            (2.0, 1.5, 0.790_767_779_396_770_095_57),
            (5.0, 7.0, 0.027_714_786_295_963_427_797),
            (30.0, 25.0, 0.999_999_739_259_944_306_5),
        ];
        for (a, b, want) in cases {
            let got = marcum_q1(a, b).unwrap();
            assert!((got - want).abs() < 1e-12, "Q1({a},{b}) = {got}, want {want}");
            let comp = marcum_q1_complement(a, b).unwrap();
            assert!((comp - (1.0 - want)).abs() < 1e-12);
        }
    }

    #[test]
    fn marcum_unit_args_against_plain_quadrature() {
        // Unscaled I0 by its power series; the integrand is negligible past y = 40.
        let i0 = |x: f64| {
            let q = 0.25 * x * x;
            let (mut term, mut sum) = (1.0, 1.0);
            for k in 1..200 {
                term *= q / (k * k) as f64;
                sum += term;
            }
            sum
        };
        let direct = integrate_finite(
            |y| y * (-(y * y + 1.0) / 2.0).exp() * i0(y),
            1.0,
            40.0,
            &QuadSpec::default().with_tolerances(1e-12, 1e-14),
        )
        .unwrap()
        .value;
        let got = marcum_q1(1.0, 1.0).unwrap();
        assert!(got > 0.0 && got < 1.0);
        assert!((got - direct).abs() < 1e-10, "{got} vs {direct}");
    }

    #[test]
    fn marcum_is_a_ccdf_in_b() {
        for a in [0.0, 0.3, 1.0, 2.5, 8.0] {
            let mut prev = 1.0;
            for i in 0..=60 {
                let b = 0.25 * i as f64;
                let q = marcum_q1(a, b).unwrap();
                assert!((0.0..=1.0).contains(&q));
                assert!(q <= prev + 1e-13, "not monotone at a={a}, b={b}");
                prev = q;
            }
            assert!(prev < 1e-12 || a >= 8.0);
        }
    }

    #[test]
    fn marcum_nondecreasing_in_a() {
        for b in [0.5, 1.0, 3.0] {
            let mut prev = 0.0;
            for i in 0..=40 {
                let q = marcum_q1(0.2 * i as f64, b).unwrap();
                assert!(q + 1e-13 >= prev);
                prev = q;
            }
        }
    }

    #[test]
    fn lens_area_reference_points() {
        let coincident = DiscPair::new(1.0, 1.0, 0.0).unwrap();
        assert!((lens_area(&coincident) - PI).abs() < 1e-15);
        let tangent = DiscPair::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(lens_area(&tangent), 0.0);
        let unit = DiscPair::new(1.0, 1.0, 1.0).unwrap();
        assert!((lens_area(&unit) - 1.228_369_698_608_756_8).abs() < 1e-14);
        assert!((union_area(&unit) - (2.0 * PI - 1.228_369_698_608_756_8)).abs() < 1e-14);
    }

    #[test]
    fn lens_area_hit_or_miss() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut hits = 0u64;
        // Bounding box of the first disc, centered at the origin; second at (1, 0).
        for _ in 0..n {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            if x * x + y * y <= 1.0 && (x - 1.0) * (x - 1.0) + y * y <= 1.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let estimate = 4.0 * p;
        let se = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        let exact = lens_area(&DiscPair::new(1.0, 1.0, 1.0).unwrap());
        assert!((estimate - exact).abs() < 3.0 * se, "{estimate} vs {exact} (se {se})");
    }

    #[test]
    fn union_area_disjoint_and_nested() {
        let disjoint = DiscPair::new(1.0, 2.0, 5.0).unwrap();
        assert!((union_area(&disjoint) - 5.0 * PI).abs() < 1e-13);
        let nested = DiscPair::new(3.0, 1.0, 0.5).unwrap();
        assert!((union_area(&nested) - 9.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn lens_area_continuous_at_tangencies() {
        for (r1, r2) in [(1.0f64, 1.0f64), (2.0, 0.5), (0.3, 1.7)] {
            let outer = r1 + r2;
            let inner = (r1 - r2).abs();
            let eps = 1e-12;
            let a = lens_area(&DiscPair::unchecked(r1, r2, outer - eps));
            assert!(a < 1e-9, "outer tangency {r1},{r2}: {a}");
            let full = PI * r1.min(r2).powi(2);
            let b = lens_area(&DiscPair::unchecked(r1, r2, inner + eps));
            assert!((b - full).abs() < 1e-9, "inner tangency {r1},{r2}: {b}");
        }
    }

    #[test]
    fn disc_pair_validation() {
        assert!(DiscPair::new(-1.0, 1.0, 1.0).is_err());
        assert!(DiscPair::new(1.0, f64::NAN, 1.0).is_err());
        assert!(DiscPair::new(1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn cell_radius_pdf_normalized_with_unit_mean_area() {
        let spec = QuadSpec::default().with_tolerances(1e-12, 1e-14);
        let mass = integrate_semi_infinite(cell_radius_density, 0.0, &spec).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-9);
        let second = integrate_semi_infinite(|r| r * r * cell_radius_density(r), 0.0, &spec).unwrap();
        assert!((second.value - 1.0).abs() < 1e-9, "E[r²] = {}", second.value);
        let tail = integrate_semi_infinite(cell_radius_density, CELL_RADIUS_QUANTILE, &spec).unwrap();
        assert!((tail.value - 1e-10).abs() < 1e-12, "tail {}", tail.value);
    }

    #[test]
    fn cell_radius_pdf_mode() {
        let mode = (6.0f64 / 7.0).sqrt();
        let at = cell_radius_density(mode);
        assert!(at > cell_radius_density(mode - 1e-4));
        assert!(at > cell_radius_density(mode + 1e-4));
        assert!(cell_radius_pdf(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn union_plus_lens_is_total_area(r1 in 0.0..5.0f64, r2 in 0.0..5.0f64, d in 0.0..12.0f64) {
            let p = DiscPair::new(r1, r2, d).unwrap();
            let total = PI * (r1 * r1 + r2 * r2);
            prop_assert!((union_area(&p) + lens_area(&p) - total).abs() <= 1e-12 * total.max(1.0));
            let lens = lens_area(&p);
            prop_assert!(lens >= 0.0 && lens <= PI * r1.min(r2).powi(2) + 1e-12);
            let union = union_area(&p);
            prop_assert!(union + 1e-12 >= PI * r1.max(r2).powi(2));
        }

        #[test]
        fn i0_scaled_bounded(x in 0.0..1e6f64) {
            let v = i0_scaled(x);
            prop_assert!(v.is_finite() && v > 0.0 && v <= 1.0);
        }
    }
}
