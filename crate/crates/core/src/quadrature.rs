//! Adaptive Gauss–Kronrod integration.
//!
//! Every routine here is built on a 21-point Kronrod rule with its embedded
//! 10-point Gauss rule. Subintervals are bisected in order of decreasing
//! error estimate (global adaptivity) until the requested tolerance is met
//! or the subdivision budget runs out.
//!
//! Integrands may be vector valued through [`QuadValue`], which lets a single
//! adaptive pass integrate many related functions that share expensive work
//! (the PGF on all DFT nodes, for example). The error estimate of a vector is
//! its largest component error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

// Kronrod abscissae on [-1, 1]; odd indices are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_114_850,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and subdivision budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self, QuadError> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) || max_subdivisions == 0 {
            return Err(QuadError::InvalidSpec);
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }

    fn tolerance_for(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult<T = f64> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError<T = f64> {
    #[error("tolerance not reached after {} evaluations (error estimate {:e})", best.evaluations, best.error_estimate)]
    NotConverged { best: IntegrationResult<T> },
    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerances must be positive and the subdivision budget at least 1")]
    InvalidSpec,
}

impl<T> QuadError<T> {
    /// The best available estimate, when the failure was a convergence failure.
    pub fn best(&self) -> Option<&IntegrationResult<T>> {
        match self {
            QuadError::NotConverged { best } => Some(best),
            _ => None,
        }
    }
}

/// Values that can be accumulated by the quadrature rules.
pub trait QuadValue: Clone {
    /// A zero of the same shape as `self`.
    fn zeros_like(&self) -> Self;
    /// `self += weight * other`
    fn add_scaled(&mut self, weight: f64, other: &Self);
    /// Largest absolute component.
    fn max_abs(&self) -> f64;
    fn all_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        *self += weight * other;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zeros_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        self.re += weight * other.re;
        self.im += weight * other.im;
    }
    fn max_abs(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<const N: usize> QuadValue for [f64; N] {
    fn zeros_like(&self) -> Self {
        [0.0; N]
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            *s += weight * o;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl<T: QuadValue> QuadValue for Vec<T> {
    fn zeros_like(&self) -> Self {
        self.iter().map(QuadValue::zeros_like).collect()
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            s.add_scaled(weight, o);
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.max_abs()))
    }
    fn all_finite(&self) -> bool {
        self.iter().all(QuadValue::all_finite)
    }
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One 21-point Kronrod panel with its Gauss error estimate.
fn kronrod_panel<T, F>(f: &mut F, a: f64, b: f64) -> Result<(T, f64), QuadError<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    if !fc.all_finite() {
        return Err(QuadError::NonFinite { at: center });
    }
    let mut kronrod = fc.zeros_like();
    let mut gauss = fc.zeros_like();
    kronrod.add_scaled(WGK[10], &fc);

    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let f1 = f(x1);
        if !f1.all_finite() {
            return Err(QuadError::NonFinite { at: x1 });
        }
        let f2 = f(x2);
        if !f2.all_finite() {
            return Err(QuadError::NonFinite { at: x2 });
        }
        kronrod.add_scaled(WGK[j], &f1);
        kronrod.add_scaled(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.add_scaled(WG[j / 2], &f1);
            gauss.add_scaled(WG[j / 2], &f2);
        }
    }

    let mut value = kronrod.zeros_like();
    value.add_scaled(half, &kronrod);
    let mut diff = kronrod;
    diff.add_scaled(-1.0, &gauss);
    let raw = (half * diff.max_abs()).abs();
    let floor = 50.0 * f64::EPSILON * value.max_abs();
    Ok((value, raw.max(floor)))
}

/// Global adaptive bisection of `[a, b]`.
fn adapt<T, F>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<IntegrationResult<T>, QuadError<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let (value, error) = kronrod_panel(&mut f, a, b)?;
    let mut evaluations = 21;
    if a == b {
        return Ok(IntegrationResult {
            value: value.zeros_like(),
            error_estimate: 0.0,
            evaluations,
        });
    }

    let mut total = value.clone();
    let mut total_error = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });

    let mut subdivisions = 1;
    while total_error > spec.tolerance_for(total.max_abs()) {
        if subdivisions >= spec.max_subdivisions {
            break;
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution.
            heap.push(worst);
            break;
        }
        let (left, left_err) = kronrod_panel(&mut f, worst.a, mid)?;
        let (right, right_err) = kronrod_panel(&mut f, mid, worst.b)?;
        evaluations += 42;
        subdivisions += 1;

        total.add_scaled(-1.0, &worst.value);
        total.add_scaled(1.0, &left);
        total.add_scaled(1.0, &right);
        total_error += left_err + right_err - worst.error;

        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: left,
            error: left_err,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: right,
            error: right_err,
        });
    }

    // Re-sum in interval order so the result does not carry drift from the
    // running updates above.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = segments[0].value.zeros_like();
    let mut error_estimate = 0.0;
    for s in &segments {
        value.add_scaled(1.0, &s.value);
        error_estimate += s.error;
    }

    let result = IntegrationResult {
        value,
        error_estimate,
        evaluations,
    };
    if result.error_estimate <= spec.tolerance_for(result.value.max_abs()) {
        Ok(result)
    } else {
        Err(QuadError::NotConverged { best: result })
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate_finite<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<IntegrationResult, QuadError>
where
    F: FnMut(f64) -> f64,
{
    adapt(f, a, b, spec)
}

/// Vector-valued form of [`integrate_finite`].
pub fn integrate_finite_with<T, F>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<IntegrationResult<T>, QuadError<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    adapt(f, a, b, spec)
}

/// Integrates `f` over `[a, ∞)` through the map `x = a + s / (1 - s)`.
pub fn integrate_semi_infinite<F>(f: F, a: f64, spec: &QuadSpec) -> Result<IntegrationResult, QuadError>
where
    F: FnMut(f64) -> f64,
{
    integrate_semi_infinite_with(f, a, spec)
}

pub fn integrate_semi_infinite_with<T, F>(
    mut f: F,
    a: f64,
    spec: &QuadSpec,
) -> Result<IntegrationResult<T>, QuadError<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !a.is_finite() {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
    }
    adapt(
        |s| {
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            let mut out = f(x);
            let jacobian = 1.0 / (one_minus * one_minus);
            let zero = out.zeros_like();
            let taken = std::mem::replace(&mut out, zero);
            out.add_scaled(jacobian, &taken);
            out
        },
        0.0,
        1.0,
        spec,
    )
}

/// Upper limit of one axis of a nested integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinity,
}

type BoundFn<'a, B> = Box<dyn Fn(&[f64]) -> B + Sync + 'a>;

/// Limits of one axis. Both closures receive the values of all axes
/// further out (outermost first).
pub struct Axis<'a> {
    lower: BoundFn<'a, f64>,
    upper: BoundFn<'a, Upper>,
}

impl<'a> Axis<'a> {
    pub fn fixed(a: f64, b: f64) -> Self {
        Self {
            lower: Box::new(move |_| a),
            upper: Box::new(move |_| Upper::Finite(b)),
        }
    }

    pub fn from(a: f64) -> Self {
        Self {
            lower: Box::new(move |_| a),
            upper: Box::new(|_| Upper::Infinity),
        }
    }

    pub fn dependent(
        lower: impl Fn(&[f64]) -> f64 + Sync + 'a,
        upper: impl Fn(&[f64]) -> Upper + Sync + 'a,
    ) -> Self {
        Self {
            lower: Box::new(lower),
            upper: Box::new(upper),
        }
    }
}

/// Iterated integral of `f` over the axes, outermost first.
///
/// Each level is integrated with the same `spec`. The reported error adds
/// the outer estimate to the integral of the inner estimates, so it bounds
/// the accumulated error whenever each level's estimate does.
pub fn integrate_nested<F>(f: F, axes: &[Axis<'_>], spec: &QuadSpec) -> Result<IntegrationResult, QuadError>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(!axes.is_empty(), "at least one axis is required");
    let mut point = Vec::with_capacity(axes.len());
    let mut evaluations = 0usize;
    let mut converged = true;
    let [value, error] = nested_level(&f, axes, spec, &mut point, &mut evaluations, &mut converged)?;
    let result = IntegrationResult {
        value,
        error_estimate: error,
        evaluations,
    };
    if converged || result.error_estimate <= spec.tolerance_for(value.abs()) {
        Ok(result)
    } else {
        Err(QuadError::NotConverged { best: result })
    }
}

fn nested_level<F>(
    f: &F,
    axes: &[Axis<'_>],
    spec: &QuadSpec,
    point: &mut Vec<f64>,
    evaluations: &mut usize,
    converged: &mut bool,
) -> Result<[f64; 2], QuadError>
where
    F: Fn(&[f64]) -> f64,
{
    let (axis, inner) = axes.split_first().expect("non-empty axes");
    let lower = (axis.lower)(point);
    let upper = (axis.upper)(point);
    if let Upper::Finite(b) = upper {
        if b <= lower {
            return Ok([0.0, 0.0]);
        }
    }

    let depth = point.len();
    point.push(0.0);
    let mut failure = None;
    let outcome = {
        let integrand = |x: f64| -> [f64; 2] {
            point[depth] = x;
            if inner.is_empty() {
                *evaluations += 1;
                [f(point), 0.0]
            } else {
                match nested_level(f, inner, spec, point, evaluations, converged) {
                    Ok(v) => {
                        point.truncate(depth + 1);
                        v
                    }
                    Err(e) => {
                        point.truncate(depth + 1);
                        failure.get_or_insert(e);
                        [0.0, 0.0]
                    }
                }
            }
        };
        match upper {
            Upper::Finite(b) => adapt(integrand, lower, b, spec),
            Upper::Infinity => integrate_semi_infinite_with(integrand, lower, spec),
        }
    };
    point.truncate(depth);
    if let Some(e) = failure {
        return Err(e);
    }

    let result = match outcome {
        Ok(r) => r,
        Err(QuadError::NotConverged { best }) => {
            *converged = false;
            best
        }
        Err(QuadError::NonFinite { at }) => return Err(QuadError::NonFinite { at }),
        Err(QuadError::InvalidInterval { a, b }) => return Err(QuadError::InvalidInterval { a, b }),
        Err(QuadError::InvalidSpec) => return Err(QuadError::InvalidSpec),
    };
    let [value, inner_error] = result.value;
    Ok([value, result.error_estimate + inner_error.abs()])
}
