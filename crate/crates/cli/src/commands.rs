use std::path::Path;

use anyhow::{Context, Result};

use cellload::analytic::{
    default_dft_size, invert_generating_function, invert_pgf, load_moments, nb_fit, ppp_user_variance,
    rate_coverage_curve, rate_coverage_curve_with, CoverageKernel, LoadMoments, NegBinParams, RatePoint,
};
use cellload::montecarlo::{
    empirical_ccdf, empirical_pmf, empirical_rate_coverage, simulate_cell_point_sir, simulate_loads, simulate_rates,
    summarize, Realization, SimConfig,
};
use cellload::{Error, NetworkModel};

use crate::args::{CompareArgs, InversionArgs, MomentsArgs, PmfArgs, RateArgs, SimulateArgs};
use crate::report::{
    Check, CompareReport, InversionConfig, MomentsReport, NbSelfTest, PmfReport, RateReport, RunConfig,
    SimulateReport,
};

/// Tolerances of `compare`.
const MEAN_Z: f64 = 3.0;
const VARIANCE_REL: f64 = 0.05;
const PMF_TV: f64 = 0.05;
const SIR_GAP: f64 = 0.03;
const SIR_THRESHOLDS: [f64; 3] = [0.1, 1.0, 10.0];
const RATE_GAP: f64 = 0.05;

fn run_config(network: NetworkModel) -> RunConfig {
    RunConfig {
        network,
        sim: None,
        rate: None,
        inversion: None,
    }
}

fn inversion(args: &InversionArgs, moments: Option<&LoadMoments>, net: &NetworkModel) -> Result<InversionConfig, Error> {
    let dft_size = match (args.dft_size, moments) {
        (Some(n), _) => n,
        (None, Some(m)) => default_dft_size(m),
        (None, None) => default_dft_size(&load_moments(net)?),
    };
    Ok(InversionConfig {
        dft_size,
        radius: args.inversion_radius,
    })
}

pub fn moments(args: &MomentsArgs) -> Result<MomentsReport> {
    let net = args.model.network()?;
    let mut config = run_config(net);
    let moments = load_moments(&net)?;
    let monte_carlo = if args.mc {
        let sim = args.sim.load_config(&net);
        config.sim = Some(sim);
        Some(summarize(&simulate_loads(&net, &sim)?)?)
    } else {
        None
    };
    Ok(MomentsReport {
        config,
        normalized_variance: moments.normalized_variance(),
        ppp_user_variance: ppp_user_variance(&net),
        nb_fit: nb_fit(&moments).ok(),
        moments,
        monte_carlo,
    })
}

fn nb_self_test(dft_size: usize) -> Result<NbSelfTest, Error> {
    let nb = NegBinParams::new(25, 0.5)?;
    let pmf = invert_generating_function(|z| nb.pgf(z), dft_size, 1.0)?;
    let max_error = pmf
        .probs
        .iter()
        .zip(nb.pmf(dft_size))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(NbSelfTest {
        r: nb.r,
        t: nb.t,
        dft_size,
        max_error,
    })
}

pub fn pmf(args: &PmfArgs) -> Result<PmfReport> {
    let net = args.model.network()?;
    let mut config = run_config(net);
    let inv = inversion(&args.inversion, None, &net)?;
    let pmf = invert_pgf(&net, inv.dft_size, inv.radius)?;
    let nb_self_test = args.nb_self_test.then(|| nb_self_test(inv.dft_size)).transpose()?;
    config.inversion = Some(inv);
    let empirical = if args.mc {
        let sim = args.sim.load_config(&net);
        config.sim = Some(sim);
        Some(empirical_pmf(&simulate_loads(&net, &sim)?)?)
    } else {
        None
    };
    Ok(PmfReport {
        config,
        mean: pmf.mean(),
        variance: pmf.variance(),
        total_variation: empirical.as_ref().map(|e| pmf.total_variation(e)),
        empirical,
        nb_self_test,
        pmf,
    })
}

pub fn rate(args: &RateArgs) -> Result<RateReport> {
    let net = args.model.network()?;
    let mut config = run_config(net);
    let rate = args.link.rate_config()?;
    let inv = inversion(&args.inversion, None, &net)?;
    let pmf = invert_pgf(&net, inv.dft_size, inv.radius)?;
    config.inversion = Some(inv);
    let coverage = rate_coverage_curve(&rate, &pmf)?;
    let empirical = if args.mc {
        let sim = args.sim.rate_config(&net, rate.alpha);
        config.sim = Some(sim);
        Some(empirical_rate_coverage(&simulate_rates(&net, &sim, &rate)?, &rate.thresholds))
    } else {
        None
    };
    config.rate = Some(rate);
    Ok(RateReport {
        config,
        coverage,
        empirical,
    })
}

fn write_raw(path: &Path, realizations: &[Realization]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["realization_index", "load", "sir", "rate"])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for (i, r) in realizations.iter().enumerate() {
        w.write_record([i.to_string(), r.load.to_string(), opt(r.sir_sample), opt(r.rate_sample)])?;
    }
    w.flush()?;
    Ok(())
}

fn coverage_points(thresholds: &[f64], coverage: Vec<f64>) -> Vec<RatePoint> {
    thresholds
        .iter()
        .zip(coverage)
        .map(|(&rho, coverage)| RatePoint { rho, coverage })
        .collect()
}

pub fn simulate(args: &SimulateArgs) -> Result<SimulateReport> {
    let net = args.model.network()?;
    let mut config = run_config(net);
    let (realizations, rate_coverage) = if args.rates {
        let rate = args.link.rate_config()?;
        let sim = args.sim.rate_config(&net, rate.alpha);
        config.sim = Some(sim);
        let out = simulate_rates(&net, &sim, &rate)?;
        let coverage = coverage_points(&rate.thresholds, empirical_rate_coverage(&out, &rate.thresholds));
        config.rate = Some(rate);
        (out, Some(coverage))
    } else {
        let sim = args.sim.load_config(&net);
        config.sim = Some(sim);
        (simulate_loads(&net, &sim)?, None)
    };
    if let Some(path) = &args.raw {
        write_raw(path, &realizations)?;
    }
    Ok(SimulateReport {
        config,
        summary: summarize(&realizations)?,
        pmf: empirical_pmf(&realizations)?,
        rate_coverage,
    })
}

fn check(name: &str, value: f64, tolerance: f64) -> Check {
    Check {
        name: name.to_string(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn max_gap(a: impl IntoIterator<Item = f64>, b: &[f64]) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn compare(args: &CompareArgs) -> Result<CompareReport> {
    let net = args.model.network()?;
    let mut config = run_config(net);
    let rate = args.link.rate_config()?;
    let kernel = CoverageKernel {
        delta: args.delta.unwrap_or(CoverageKernel::default().delta),
        ..CoverageKernel::default()
    };
    let moments = load_moments(&net)?;
    let inv = inversion(&args.inversion, Some(&moments), &net)?;
    let pmf = invert_pgf(&net, inv.dft_size, inv.radius)?;
    config.inversion = Some(inv);

    let sim = args.sim.rate_config(&net, rate.alpha);
    config.sim = Some(sim);
    let realizations = simulate_rates(&net, &sim, &rate)?;
    let summary = summarize(&realizations)?;
    let empirical = empirical_pmf(&realizations)?;

    let mut checks = vec![
        check("mean_z_score", ((summary.mean - moments.mean) / summary.mean_se).abs(), MEAN_Z),
        check(
            "normalized_variance_rel_error",
            (moments.normalized_variance() - summary.normalized_variance()).abs() / summary.normalized_variance(),
            VARIANCE_REL,
        ),
        check("pmf_total_variation", pmf.total_variation(&empirical), PMF_TV),
    ];

    // A separate seed keeps the SIR draws independent of the cells above.
    let sir_sim = SimConfig {
        seed: sim.seed.wrapping_add(1),
        ..sim
    };
    let sir_samples = simulate_cell_point_sir(net.lambda_b, rate.alpha, &sir_sim)?;
    let sir_empirical = empirical_ccdf(&sir_samples, &SIR_THRESHOLDS);
    let sir_analytic = SIR_THRESHOLDS
        .iter()
        .map(|&tau| kernel.ccdf(rate.alpha, tau))
        .collect::<Result<Vec<f64>, Error>>()?;
    checks.push(check("sir_ccdf_max_gap", max_gap(sir_analytic, &sir_empirical), SIR_GAP));

    if pmf.get(0) < 1.0 {
        let analytic = rate_coverage_curve_with(&rate, &pmf, &kernel)?;
        let empirical = empirical_rate_coverage(&realizations, &rate.thresholds);
        checks.push(check(
            "rate_coverage_max_gap",
            max_gap(analytic.iter().map(|p| p.coverage), &empirical),
            RATE_GAP,
        ));
    }
    config.rate = Some(rate);
    let passed = checks.iter().all(|c| c.passed);
    Ok(CompareReport { config, checks, passed })
}
