use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cellload::analytic::RateConfig;
use cellload::montecarlo::SimConfig;
use cellload::{ClusterKind, Error, NetworkModel, UserModel};

/// Load distribution of the typical cell and downlink rate coverage for PPP
/// base stations with Poisson-cluster users.
///
/// Lengths are in km, intensities in km^-2, bandwidth in Hz and rates in bps.
#[derive(Debug, Parser)]
#[command(name = "cellload", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean, second moment and variance of the load, with the NB fit.
    #[command(allow_negative_numbers = true)]
    Moments(MomentsArgs),
    /// Load PMF by inversion of the PGF.
    #[command(allow_negative_numbers = true)]
    Pmf(PmfArgs),
    /// Rate coverage over a threshold grid.
    #[command(allow_negative_numbers = true)]
    Rate(RateArgs),
    /// Monte Carlo load statistics, optionally with SIR and rates.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Analytic results against Monte Carlo at fixed tolerances.
    #[command(allow_negative_numbers = true)]
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Tcp,
    Mcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Cluster process of the users.
    #[arg(long, value_enum, default_value = "tcp")]
    pub kind: Kind,
    /// BS intensity.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_b: f64,
    /// Cluster-centre intensity.
    #[arg(long, default_value_t = 5.0)]
    pub lambda_p: f64,
    /// Mean users per cluster.
    #[arg(long, default_value_t = 5.0)]
    pub mbar: f64,
    /// Thomas offspring deviation (tcp).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Matérn cluster radius (mcp).
    #[arg(long)]
    pub cluster_radius: Option<f64>,
}

impl ModelArgs {
    pub fn network(&self) -> Result<NetworkModel, Error> {
        let missing = |field: &str| Error::Invalid {
            field: format!("users.{field}"),
            message: format!("--{} is required for --kind {}", field.replace('_', "-"), self.kind_name()),
        };
        let kind = match self.kind {
            Kind::Tcp => {
                if self.cluster_radius.is_some() {
                    return Err(Error::Invalid {
                        field: "users.cluster_radius".into(),
                        message: "only applies to --kind mcp".into(),
                    });
                }
                ClusterKind::Thomas {
                    sigma: self.sigma.ok_or_else(|| missing("sigma"))?,
                }
            }
            Kind::Mcp => {
                if self.sigma.is_some() {
                    return Err(Error::Invalid {
                        field: "users.sigma".into(),
                        message: "only applies to --kind tcp".into(),
                    });
                }
                ClusterKind::Matern {
                    radius: self.cluster_radius.ok_or_else(|| missing("cluster_radius"))?,
                }
            }
        };
        NetworkModel::new(
            self.lambda_b,
            UserModel {
                lambda_p: self.lambda_p,
                m_bar: self.mbar,
                kind,
            },
        )
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Tcp => "tcp",
            Kind::Mcp => "mcp",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Monte Carlo realizations.
    #[arg(long, default_value_t = 10_000)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// BS sampling window radius; defaults to the smallest admissible one.
    #[arg(long)]
    pub window: Option<f64>,
}

impl SimArgs {
    pub fn load_config(&self, net: &NetworkModel) -> SimConfig {
        let mut cfg = SimConfig::for_network(net, self.realizations, self.seed);
        if let Some(w) = self.window {
            cfg.window_radius = w;
        }
        cfg
    }

    pub fn rate_config(&self, net: &NetworkModel, alpha: f64) -> SimConfig {
        let mut cfg = SimConfig::for_rates(net, alpha, self.realizations, self.seed);
        if let Some(w) = self.window {
            cfg.window_radius = w;
        }
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct LinkArgs {
    /// Pathloss exponent.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    /// Bandwidth W.
    #[arg(long, default_value_t = 1e6)]
    pub bandwidth: f64,
    /// Backhaul cap R_b; unbounded when omitted.
    #[arg(long)]
    pub backhaul: Option<f64>,
    /// Rate thresholds, comma separated. Default: 1%, 2%, ..., 30% of W.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
}

impl LinkArgs {
    pub fn rate_config(&self) -> Result<RateConfig, Error> {
        let thresholds = self
            .thresholds
            .clone()
            .unwrap_or_else(|| (1..=30).map(|k| k as f64 * self.bandwidth / 100.0).collect());
        RateConfig::new(self.alpha, self.bandwidth, self.backhaul, thresholds)
    }
}

#[derive(Debug, Clone, Args)]
pub struct InversionArgs {
    /// DFT size N (power of two); defaults to max(128, mean + 10 sd rounded up).
    #[arg(long)]
    pub dft_size: Option<usize>,
    /// Radius of the sampling circle.
    #[arg(long, default_value_t = 1.0)]
    pub inversion_radius: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Append Monte Carlo estimates.
    #[arg(long)]
    pub mc: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
    /// Also invert the PGF of NB(25, 0.5) and report the error against its
    /// closed-form PMF.
    #[arg(long)]
    pub nb_self_test: bool,
    /// Append the empirical PMF.
    #[arg(long)]
    pub mc: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
    /// Append the empirical rate coverage.
    #[arg(long)]
    pub mc: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also simulate SIR and rate of a representative user.
    #[arg(long)]
    pub rates: bool,
    #[command(flatten)]
    pub link: LinkArgs,
    /// Write every realization as CSV (realization_index, load, sir, rate).
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Override the shift of the SIR coverage kernel (sensitivity check).
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}
