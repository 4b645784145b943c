//! Direct simulation of the spatial model under the Palm distribution of the
//! base-station process: a BS at the origin plus an independent PPP, and an
//! independent cluster process of users.
//!
//! Every realization `i` draws from its own ChaCha8 stream `(seed, i)`, so
//! results do not depend on how the work is split between threads.
//!
//! All sampling happens in units where `λ_b = 1`; reported cell areas are
//! converted back.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{LoadPmf, RateConfig};
use crate::error::{invalid, Result};
use crate::ppmodel::{ClusterKind, NetworkModel, UserModel};

pub type Point = [f64; 2];

/// `P(cell ⊄ b(o, W/2))` must stay below this.
const ESCAPE_PROBABILITY: f64 = 1e-6;
/// Interference from beyond the window, relative to the in-window mean.
const INTERFERENCE_TAIL: f64 = 0.01;

/// Smallest half-window `w` with `6 exp(-π w² / 6) < 1e-6` in units where
/// `λ_b = 1`: each of six 60° sectors must contain a BS closer than `w`.
fn min_half_window() -> f64 {
    (6.0 * (6.0 / ESCAPE_PROBABILITY).ln() / PI).sqrt()
}

/// Smallest window, in units where `λ_b = 1`, whose far-field interference
/// `∫_W^∞ r^{1-α} dr` is below 1% of the in-window part measured from the
/// mean nearest-neighbour scale `1/√π`.
fn min_interference_window(alpha: f64) -> f64 {
    let r0 = 1.0 / PI.sqrt();
    let k = alpha - 2.0;
    // W^{-k} / (r0^{-k} - W^{-k}) < tol  ⇔  W > r0 ((1 + tol) / tol)^{1/k}
    r0 * ((1.0 + INTERFERENCE_TAIL) / INTERFERENCE_TAIL).powf(1.0 / k)
}

/// Number of realizations, observation window and seed of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub realizations: usize,
    /// Radius of the disc around the origin in which BSs are sampled.
    pub window_radius: f64,
    pub seed: u64,
    /// Work items handed to the thread pool. Does not affect results.
    pub parallel_chunks: usize,
}

impl SimConfig {
    pub fn new(realizations: usize, window_radius: f64, seed: u64) -> Self {
        Self {
            realizations,
            window_radius,
            seed,
            parallel_chunks: 64,
        }
    }

    /// Default window for load statistics under `net`.
    pub fn for_network(net: &NetworkModel, realizations: usize, seed: u64) -> Self {
        Self::new(realizations, default_window(net.lambda_b, None), seed)
    }

    /// Default window for SIR and rate statistics under `net`.
    pub fn for_rates(net: &NetworkModel, alpha: f64, realizations: usize, seed: u64) -> Self {
        Self::new(realizations, default_window(net.lambda_b, Some(alpha)), seed)
    }

    pub fn validate(&self, lambda_b: f64) -> Result<()> {
        if self.realizations == 0 {
            return Err(invalid("realizations", "must be at least 1"));
        }
        if self.parallel_chunks == 0 {
            return Err(invalid("parallel_chunks", "must be at least 1"));
        }
        let need = 2.0 * min_half_window() / lambda_b.sqrt();
        if !(self.window_radius.is_finite() && self.window_radius >= need) {
            return Err(invalid(
                "window_radius",
                format!("{} is too small; the typical cell may leave b(o, W/2), need W >= {need:.4}", self.window_radius),
            ));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the far-field interference bound.
    pub fn validate_for_rates(&self, lambda_b: f64, alpha: f64) -> Result<()> {
        self.validate(lambda_b)?;
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be finite and > 2, got {alpha}")));
        }
        let need = min_interference_window(alpha) / lambda_b.sqrt();
        if self.window_radius < need {
            return Err(invalid(
                "window_radius",
                format!(
                    "{} truncates more than 1% of the interference at alpha = {alpha}, need W >= {need:.4}",
                    self.window_radius
                ),
            ));
        }
        Ok(())
    }
}

/// Smallest window meeting the checks of [`SimConfig`], rounded up to a
/// whole unit of `1/√λ_b`.
pub fn default_window(lambda_b: f64, alpha: Option<f64>) -> f64 {
    let mut w = 2.0 * min_half_window();
    if let Some(alpha) = alpha {
        w = w.max(min_interference_window(alpha));
    }
    w.ceil() / lambda_b.sqrt()
}

/// One simulated typical cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub load: u64,
    /// SIR of the representative user, when the cell is non-empty and SIR
    /// was simulated.
    pub sir_sample: Option<f64>,
    /// Rate of the representative user in bps, alongside `sir_sample`.
    pub rate_sample: Option<f64>,
    pub cell_area: f64,
}

fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

fn uniform_in_disc<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let a = 2.0 * PI * rng.random::<f64>();
    [r * a.cos(), r * a.sin()]
}

/// A homogeneous PPP of the given intensity in `b(o, window_radius)`.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, window_radius: f64, rng: &mut R) -> Vec<Point> {
    let n = poisson(intensity * PI * window_radius * window_radius, rng);
    (0..n).map(|_| uniform_in_disc(window_radius, rng)).collect()
}

fn offspring<R: Rng + ?Sized>(kind: &ClusterKind, parent: Point, rng: &mut R) -> Point {
    match *kind {
        ClusterKind::Thomas { sigma } => {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            [parent[0] + sigma * dx, parent[1] + sigma * dy]
        }
        ClusterKind::Matern { radius } => {
            let d = uniform_in_disc(radius, rng);
            [parent[0] + d[0], parent[1] + d[1]]
        }
    }
}

/// Users of the cluster process that fall in `b(o, window_radius)`. Parents
/// are drawn in the window enlarged by the cluster truncation radius.
pub fn sample_pcp<R: Rng + ?Sized>(model: &UserModel, window_radius: f64, rng: &mut R) -> Vec<Point> {
    let mut users = Vec::new();
    if model.m_bar == 0.0 {
        return users;
    }
    let reach = window_radius + model.kind.truncation_radius();
    let limit = window_radius * window_radius;
    for parent in sample_ppp(model.lambda_p, reach, rng) {
        for _ in 0..poisson(model.m_bar, rng) {
            let u = offspring(&model.kind, parent, rng);
            if norm2(u) <= limit {
                users.push(u);
            }
        }
    }
    users
}

fn norm2(p: Point) -> f64 {
    p[0] * p[0] + p[1] * p[1]
}

/// BSs other than the origin, sorted by distance, with a bound `s` such that
/// the typical cell lies in `b(o, s)`.
struct BaseStations {
    points: Vec<Point>,
    cell_bound: f64,
}

/// Draws the PPP (intensity 1) radially outwards. Sampling stops at `2s`,
/// the farthest a BS can be and still cut the cell, unless `full` asks for
/// the whole window.
fn sample_base_stations<R: Rng + ?Sized>(window: f64, full: bool, rng: &mut R) -> BaseStations {
    // Nearest BS per 60° sector. A point of a sector farther than that BS
    // is closer to it than to the origin.
    let mut sector = [f64::INFINITY; 6];
    let mut filled = 0;
    let mut cell_bound = f64::INFINITY;
    let mut points = Vec::new();
    let mut area = 0.0;
    loop {
        area += rng.sample::<f64, _>(Exp1);
        let r = (area / PI).sqrt();
        if r > window || (!full && r > 2.0 * cell_bound) {
            break;
        }
        let a = 2.0 * PI * rng.random::<f64>();
        points.push([r * a.cos(), r * a.sin()]);
        let k = ((a / (PI / 3.0)) as usize).min(5);
        if sector[k].is_infinite() {
            sector[k] = r;
            filled += 1;
            if filled == 6 {
                cell_bound = sector.iter().copied().fold(0.0, f64::max);
            }
        }
    }
    if cell_bound.is_infinite() {
        cell_bound = 0.5 * window;
    }
    BaseStations { points, cell_bound }
}

impl BaseStations {
    /// `u` is in the typical cell iff no BS is strictly closer than the origin.
    fn serves(&self, u: Point) -> bool {
        let d2 = norm2(u);
        let reach = 4.0 * d2;
        for x in &self.points {
            if norm2(*x) >= reach {
                break;
            }
            let dx = u[0] - x[0];
            let dy = u[1] - x[1];
            if dx * dx + dy * dy < d2 {
                return false;
            }
        }
        true
    }

    /// Area of the typical cell, by clipping a square around `b(o, s)` with
    /// the bisector half-plane of every BS that can reach it.
    fn cell_area(&self) -> f64 {
        let s = self.cell_bound;
        let mut poly = vec![[-s, -s], [s, -s], [s, s], [-s, s]];
        let reach = 4.0 * s * s;
        for x in &self.points {
            let n2 = norm2(*x);
            if n2 >= reach {
                break;
            }
            poly = clip_half_plane(&poly, *x, 0.5 * n2);
            if poly.is_empty() {
                break;
            }
        }
        polygon_area(&poly)
    }
}

/// Keeps the part of `poly` with `p · n <= c`.
fn clip_half_plane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let side = |p: Point| p[0] * n[0] + p[1] * n[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    0.5 * twice.abs()
}

/// Users of the cluster process that fall in the typical cell.
fn cell_users<R: Rng + ?Sized>(users: &UserModel, bs: &BaseStations, rng: &mut R) -> Vec<Point> {
    sample_pcp(users, bs.cell_bound, rng)
        .into_iter()
        .filter(|u| bs.serves(*u))
        .collect()
}

/// SIR at `u` with unit-mean exponential fades, served by the origin.
fn sir_at<R: Rng + ?Sized>(u: Point, bs: &BaseStations, alpha: f64, rng: &mut R) -> f64 {
    let half = -0.5 * alpha;
    let signal = rng.sample::<f64, _>(Exp1) * norm2(u).powf(half);
    let interference: f64 = bs
        .points
        .iter()
        .map(|x| {
            let d2 = (u[0] - x[0]).powi(2) + (u[1] - x[1]).powi(2);
            rng.sample::<f64, _>(Exp1) * d2.powf(half)
        })
        .sum();
    signal / interference
}

fn check_network(net: &NetworkModel, cfg: &SimConfig) -> Result<NetworkModel> {
    net.validate()?;
    cfg.validate(net.lambda_b)?;
    Ok(net.normalized())
}

fn realization_load<R: Rng + ?Sized>(norm: &NetworkModel, window: f64, lambda_b: f64, rng: &mut R) -> Realization {
    let bs = sample_base_stations(window, false, rng);
    let users = cell_users(&norm.users, &bs, rng);
    Realization {
        load: users.len() as u64,
        sir_sample: None,
        rate_sample: None,
        cell_area: bs.cell_area() / lambda_b,
    }
}

fn realization_rate<R: Rng + ?Sized>(
    norm: &NetworkModel,
    window: f64,
    lambda_b: f64,
    rate: &RateConfig,
    rng: &mut R,
) -> Realization {
    let bs = sample_base_stations(window, true, rng);
    let users = cell_users(&norm.users, &bs, rng);
    let load = users.len() as u64;
    let (sir_sample, rate_sample) = if users.is_empty() {
        (None, None)
    } else {
        let u = users[rng.random_range(0..users.len())];
        let sir = sir_at(u, &bs, rate.alpha, rng);
        let n = load as f64;
        let shannon = rate.bandwidth_w / n * sir.ln_1p() / std::f64::consts::LN_2;
        let r = match rate.backhaul_rb {
            Some(rb) => shannon.min(rb / n),
            None => shannon,
        };
        (Some(sir), Some(r))
    };
    Realization {
        load,
        sir_sample,
        rate_sample,
        cell_area: bs.cell_area() / lambda_b,
    }
}

/// One realization of the typical-cell load.
pub fn sample_typical_cell_load<R: Rng + ?Sized>(net: &NetworkModel, cfg: &SimConfig, rng: &mut R) -> Result<Realization> {
    let norm = check_network(net, cfg)?;
    Ok(realization_load(&norm, cfg.window_radius * net.lambda_b.sqrt(), net.lambda_b, rng))
}

/// One realization with the SIR and rate of a representative user, chosen
/// uniformly among the users of the typical cell.
pub fn sample_sir_rate<R: Rng + ?Sized>(
    net: &NetworkModel,
    cfg: &SimConfig,
    rate: &RateConfig,
    rng: &mut R,
) -> Result<Realization> {
    let norm = check_network(net, cfg)?;
    rate.validate()?;
    cfg.validate_for_rates(net.lambda_b, rate.alpha)?;
    Ok(realization_rate(&norm, cfg.window_radius * net.lambda_b.sqrt(), net.lambda_b, rate, rng))
}

/// SIR of a point drawn uniformly from the typical cell.
pub fn sample_cell_point_sir<R: Rng + ?Sized>(lambda_b: f64, alpha: f64, cfg: &SimConfig, rng: &mut R) -> Result<f64> {
    cfg.validate_for_rates(lambda_b, alpha)?;
    Ok(cell_point_sir(cfg.window_radius * lambda_b.sqrt(), alpha, rng))
}

fn cell_point_sir<R: Rng + ?Sized>(window: f64, alpha: f64, rng: &mut R) -> f64 {
    let bs = sample_base_stations(window, true, rng);
    loop {
        let u = uniform_in_disc(bs.cell_bound, rng);
        if bs.serves(u) {
            return sir_at(u, &bs, alpha, rng);
        }
    }
}

fn run_parallel<T, F>(cfg: &SimConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunk = cfg.realizations.div_ceil(cfg.parallel_chunks).max(1);
    let ranges: Vec<(usize, usize)> = (0..cfg.realizations)
        .step_by(chunk)
        .map(|start| (start, (start + chunk).min(cfg.realizations)))
        .collect();
    let parts: Vec<Vec<T>> = ranges
        .into_par_iter()
        .map(|(start, end)| (start..end).map(|i| f(&mut stream_rng(cfg.seed, i))).collect())
        .collect();
    parts.into_iter().flatten().collect()
}

/// `cfg.realizations` independent typical-cell loads.
pub fn simulate_loads(net: &NetworkModel, cfg: &SimConfig) -> Result<Vec<Realization>> {
    let norm = check_network(net, cfg)?;
    let window = cfg.window_radius * net.lambda_b.sqrt();
    Ok(run_parallel(cfg, |rng| realization_load(&norm, window, net.lambda_b, rng)))
}

/// `cfg.realizations` independent typical cells with representative-user
/// SIR and rate.
pub fn simulate_rates(net: &NetworkModel, cfg: &SimConfig, rate: &RateConfig) -> Result<Vec<Realization>> {
    let norm = check_network(net, cfg)?;
    rate.validate()?;
    cfg.validate_for_rates(net.lambda_b, rate.alpha)?;
    let window = cfg.window_radius * net.lambda_b.sqrt();
    Ok(run_parallel(cfg, |rng| realization_rate(&norm, window, net.lambda_b, rate, rng)))
}

/// `cfg.realizations` SIR values of uniform points of the typical cell.
pub fn simulate_cell_point_sir(lambda_b: f64, alpha: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    if !(lambda_b.is_finite() && lambda_b > 0.0) {
        return Err(invalid("lambda_b", format!("must be finite and positive, got {lambda_b}")));
    }
    cfg.validate_for_rates(lambda_b, alpha)?;
    let window = cfg.window_radius * lambda_b.sqrt();
    Ok(run_parallel(cfg, |rng| cell_point_sir(window, alpha, rng)))
}

/// Histogram of the loads, normalized to sum to one.
pub fn empirical_pmf(realizations: &[Realization]) -> Result<LoadPmf> {
    if realizations.is_empty() {
        return Err(invalid("realizations", "need at least one realization"));
    }
    let max = realizations.iter().map(|r| r.load).max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for r in realizations {
        counts[r.load as usize] += 1;
    }
    let n = realizations.len() as f64;
    Ok(LoadPmf {
        probs: counts.into_iter().map(|c| c as f64 / n).collect(),
        inversion: None,
    })
}

/// Sample moments of the load with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub realizations: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub empty_fraction: f64,
    pub mean_cell_area: f64,
}

impl LoadSummary {
    pub fn normalized_variance(&self) -> f64 {
        self.variance / (self.mean * self.mean)
    }
}

pub fn summarize(realizations: &[Realization]) -> Result<LoadSummary> {
    if realizations.len() < 2 {
        return Err(invalid("realizations", "need at least two realizations"));
    }
    let n = realizations.len() as f64;
    let loads: Vec<f64> = realizations.iter().map(|r| r.load as f64).collect();
    let mean = loads.iter().sum::<f64>() / n;
    let second = loads.iter().map(|x| x * x).sum::<f64>() / n;
    let central = |k: i32| loads.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    let m4 = central(4);
    let second_var = loads.iter().map(|x| (x * x - second).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(LoadSummary {
        realizations: realizations.len(),
        mean,
        mean_se: (m2 * n / (n - 1.0) / n).sqrt(),
        second_moment: second,
        second_moment_se: (second_var / n).sqrt(),
        variance: m2 * n / (n - 1.0),
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        empty_fraction: loads.iter().filter(|&&x| x == 0.0).count() as f64 / n,
        mean_cell_area: realizations.iter().map(|r| r.cell_area).sum::<f64>() / n,
    })
}

/// Fraction of `samples` strictly above each threshold.
pub fn empirical_ccdf(samples: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    thresholds
        .iter()
        .map(|&t| samples.iter().filter(|&&s| s > t).count() as f64 / n)
        .collect()
}

/// `P(Rate > ρ | load > 0)` over the non-empty realizations.
pub fn empirical_rate_coverage(realizations: &[Realization], thresholds: &[f64]) -> Vec<f64> {
    let rates: Vec<f64> = realizations.iter().filter_map(|r| r.rate_sample).collect();
    empirical_ccdf(&rates, thresholds)
}
