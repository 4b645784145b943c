//! Records written by the subcommands. Every report embeds the configuration
//! that produced it and parses back from its own JSON.

use serde::{Deserialize, Serialize};

use cellload::analytic::{LoadMoments, LoadPmf, NegBinParams, RateConfig, RatePoint};
use cellload::montecarlo::{LoadSummary, SimConfig};
use cellload::NetworkModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub dft_size: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub network: NetworkModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<InversionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub config: RunConfig,
    pub moments: LoadMoments,
    pub normalized_variance: f64,
    /// Variance if the users were a PPP of the same intensity.
    pub ppp_user_variance: f64,
    /// Absent when the load is not over-dispersed.
    pub nb_fit: Option<NegBinParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<LoadSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbSelfTest {
    pub r: u64,
    pub t: f64,
    pub dft_size: usize,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfReport {
    pub config: RunConfig,
    pub pmf: LoadPmf,
    pub mean: f64,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical: Option<LoadPmf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_variation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nb_self_test: Option<NbSelfTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: RunConfig,
    pub coverage: Vec<RatePoint>,
    /// Empirical coverage at the same thresholds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub config: RunConfig,
    pub summary: LoadSummary,
    pub pmf: LoadPmf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_coverage: Option<Vec<RatePoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Rows for CSV output, header first.
pub trait Tabular {
    fn rows(&self) -> Vec<Vec<String>>;
}

fn row<const N: usize>(cells: [String; N]) -> Vec<String> {
    cells.to_vec()
}

fn kv(key: &str, value: f64) -> Vec<String> {
    row([key.to_string(), value.to_string()])
}

impl Tabular for MomentsReport {
    fn rows(&self) -> Vec<Vec<String>> {
        let m = &self.moments;
        let mut rows = vec![
            row(["quantity".into(), "value".into()]),
            kv("mean", m.mean),
            kv("second_moment", m.second_moment),
            kv("variance", m.variance),
            kv("normalized_variance", self.normalized_variance),
            kv("ppp_user_variance", self.ppp_user_variance),
        ];
        if let Some(nb) = &self.nb_fit {
            rows.push(kv("nb_r", nb.r as f64));
            rows.push(kv("nb_t", nb.t));
        }
        if let Some(s) = &self.monte_carlo {
            rows.push(kv("mc_mean", s.mean));
            rows.push(kv("mc_mean_se", s.mean_se));
            rows.push(kv("mc_second_moment", s.second_moment));
            rows.push(kv("mc_variance", s.variance));
            rows.push(kv("mc_variance_se", s.variance_se));
            rows.push(kv("mc_normalized_variance", s.normalized_variance()));
        }
        rows
    }
}

fn pmf_rows(columns: &[(&str, &LoadPmf)]) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once("n".to_string())
        .chain(columns.iter().map(|(name, _)| name.to_string()))
        .collect()];
    let len = columns.iter().map(|(_, p)| p.probs.len()).max().unwrap_or(0);
    for n in 0..len {
        rows.push(
            std::iter::once(n.to_string())
                .chain(columns.iter().map(|(_, p)| p.get(n).to_string()))
                .collect(),
        );
    }
    rows
}

impl Tabular for PmfReport {
    fn rows(&self) -> Vec<Vec<String>> {
        match &self.empirical {
            Some(e) => pmf_rows(&[("p_hat", &self.pmf), ("empirical", e)]),
            None => pmf_rows(&[("p_hat", &self.pmf)]),
        }
    }
}

impl Tabular for RateReport {
    fn rows(&self) -> Vec<Vec<String>> {
        let mut header = row(["rho".into(), "coverage".into()]);
        if self.empirical.is_some() {
            header.push("empirical".into());
        }
        let mut rows = vec![header];
        for (i, p) in self.coverage.iter().enumerate() {
            let mut r = row([p.rho.to_string(), p.coverage.to_string()]);
            if let Some(e) = &self.empirical {
                r.push(e[i].to_string());
            }
            rows.push(r);
        }
        rows
    }
}

impl Tabular for SimulateReport {
    fn rows(&self) -> Vec<Vec<String>> {
        pmf_rows(&[("probability", &self.pmf)])
    }
}

impl Tabular for CompareReport {
    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![row(["check".into(), "value".into(), "tolerance".into(), "passed".into()])];
        for c in &self.checks {
            rows.push(row([c.name.clone(), c.value.to_string(), c.tolerance.to_string(), c.passed.to_string()]));
        }
        rows
    }
}
