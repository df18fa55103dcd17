//! Command-line driver for the percolation toolkit.
//!
//! Every flag can also be supplied through a flat key-value config file
//! (TOML, keys named like the long flags); explicit flags win. Exit
//! codes: 0 on success, 2 on parameter errors, 3 on capacity errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hierperc::analytic;
use hierperc::embedding;
use hierperc::experiments::{
    estimate_alpha_c, fraction_curve, mean_cluster_size, meta_graph_experiment, mixed_comparison,
    survival_curve, ExperimentReport,
};
use hierperc::sampler::{sample_ball_skip, sample_mixed};
use hierperc::{Error, PercolationParams, Result};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "hierperc", version, about = "Long-range percolation on the hierarchical lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Lattice order N
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Vertex-closure probability of the mixed model
    #[arg(long)]
    gamma: Option<f64>,
    /// Ball radius n
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Flat key-value config file mirroring the long flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one configuration and write its edge list
    Sample {
        #[command(flatten)]
        common: Common,
        /// Replicate index of the configuration
        #[arg(long)]
        replicate: Option<u64>,
    },
    /// Largest- and origin-cluster fractions across radii
    FractionCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_min: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        /// Fraction threshold for the origin-cluster tail probability
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Escape probabilities of the origin ball and cluster
    SurvivalCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        j_min: Option<u32>,
        #[arg(long)]
        j_max: Option<u32>,
        /// Radius of the sampled ball; must exceed j_max
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Bisection estimate of the critical alpha
    AlphaC {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bracket_lo: Option<f64>,
        #[arg(long)]
        bracket_hi: Option<f64>,
    },
    /// Mean origin-cluster size across radii
    MeanCluster {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_min: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Renormalized meta-graph giant component vs the mean-field fixed point
    MetaGraph {
        #[command(flatten)]
        common: Common,
        /// Cluster-size threshold coefficient K
        #[arg(long)]
        big_k: Option<f64>,
    },
    /// Plain model vs the coupled mixed model
    MixedCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Comma-separated cluster-size thresholds
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<u64>>,
    },
    /// Binomial renormalization recursion trace
    Renorm {
        #[command(flatten)]
        common: Common,
        /// Block size K of the recursion
        #[arg(long)]
        block: Option<u32>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        steps: Option<u32>,
    },
    /// Odometer orbit exactness and embedding stationarity
    KvnCheck {
        #[command(flatten)]
        common: Common,
        /// Tracked digit length L
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Evaluate one closed-form quantity
    Analytic {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        formula: Formula,
        /// Distance class k
        #[arg(long)]
        k: Option<u32>,
        /// Ball radius j
        #[arg(long)]
        j: Option<u32>,
        /// Truncation horizon; omitted means the infinite-horizon form
        #[arg(long)]
        horizon: Option<u32>,
        /// Mean degree for the giant-component fixed point
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    /// p_k = 1 - exp(-alpha / beta^k)
    EdgeProb,
    /// Probability of an edge into the distance-k shell
    ShellEdgeProb,
    /// Escape probability of the radius-j ball
    BallEscape,
    /// Expected vertex degree
    ExpectedDegree,
    /// Lower bound on the critical alpha
    AlphaCLowerBound,
    /// Giant-component fraction at mean degree lambda
    GiantFraction,
    /// Closure probability of the mixed coupling
    GammaForEpsilon,
    /// Branching gain of loosening beta by (1 - epsilon)
    SubcriticalB,
}

/// Flag values with config-file fallback: explicit flags win, then the
/// file, then the built-in default.
struct Resolver {
    table: toml::Table,
}

impl Resolver {
    fn load(path: &Option<PathBuf>) -> Result<Self> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Format(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Resolver { table })
    }

    fn value<T: Copy + TryFromToml>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.table.get(key) {
            None => Ok(default),
            Some(v) => T::try_from_toml(v)
                .ok_or_else(|| Error::Parameter(format!("config key {key}: bad value {v}"))),
        }
    }

    fn optional<T: Copy + TryFromToml>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => T::try_from_toml(v)
                .map(Some)
                .ok_or_else(|| Error::Parameter(format!("config key {key}: bad value {v}"))),
        }
    }
}

trait TryFromToml: Sized {
    fn try_from_toml(v: &toml::Value) -> Option<Self>;
}

impl TryFromToml for u32 {
    fn try_from_toml(v: &toml::Value) -> Option<Self> {
        v.as_integer().and_then(|i| u32::try_from(i).ok())
    }
}

impl TryFromToml for u64 {
    fn try_from_toml(v: &toml::Value) -> Option<Self> {
        v.as_integer().and_then(|i| u64::try_from(i).ok())
    }
}

impl TryFromToml for usize {
    fn try_from_toml(v: &toml::Value) -> Option<Self> {
        v.as_integer().and_then(|i| usize::try_from(i).ok())
    }
}

impl TryFromToml for f64 {
    fn try_from_toml(v: &toml::Value) -> Option<Self> {
        v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
    }
}

impl TryFromToml for Format {
    fn try_from_toml(v: &toml::Value) -> Option<Self> {
        match v.as_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// The common parameter block after config merging.
struct Resolved {
    params: PercolationParams,
    replicates: u64,
    out: Option<PathBuf>,
    format: Format,
    resolver: Resolver,
}

fn resolve(common: &Common) -> Result<Resolved> {
    let r = Resolver::load(&common.config)?;
    let params = PercolationParams::new(
        r.value(common.order, "order", 2)?,
        r.value(common.alpha, "alpha", 1.0)?,
        r.value(common.beta, "beta", 3.0)?,
        r.value(common.radius, "radius", 6)?,
    )
    .with_gamma(r.value(common.gamma, "gamma", 0.0)?)
    .with_seed(r.value(common.seed, "seed", 0)?);
    params.validate()?;
    let replicates = r.value(common.replicates, "replicates", 1_000)?;
    let format = r.value(common.format, "format", Format::Csv)?;
    let out = match &common.out {
        Some(p) => Some(p.clone()),
        None => r
            .table
            .get("out")
            .map(|v| {
                v.as_str()
                    .map(PathBuf::from)
                    .ok_or_else(|| Error::Parameter("config key out: expected a path".into()))
            })
            .transpose()?,
    };
    Ok(Resolved {
        params,
        replicates,
        out,
        format,
        resolver: r,
    })
}

fn with_output<F>(out: &Option<PathBuf>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
        Some(p) => {
            let mut file = std::fs::File::create(p)?;
            f(&mut file)
        }
    }
}

fn emit_report(report: &ExperimentReport, out: &Option<PathBuf>, format: Format) -> Result<()> {
    with_output(out, |mut w| match format {
        Format::Csv => report.write_csv(&mut w),
        Format::Json => report.write_json(&mut w),
    })
}

fn emit_json<T: serde::Serialize>(value: &T, w: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { common, replicate } => {
            let res = resolve(&common)?;
            let replicate = res.resolver.value(replicate, "replicate", 0)?;
            let params = res.params.with_replicate(replicate);
            let c = if params.gamma > 0.0 {
                sample_mixed(&params)?
            } else {
                sample_ball_skip(&params)?
            };
            with_output(&res.out, |mut w| match res.format {
                Format::Csv => c.write_csv(&mut w),
                Format::Json => emit_json(&c, w),
            })
        }
        Command::FractionCurve {
            common,
            k_min,
            k_max,
            threshold,
        } => {
            let res = resolve(&common)?;
            let k_min = res.resolver.value(k_min, "k-min", 4)?;
            let k_max = res.resolver.value(k_max, "k-max", res.params.radius)?;
            let threshold = res.resolver.value(threshold, "threshold", 0.5)?;
            if k_min > k_max {
                return Err(Error::Parameter(format!("k-min {k_min} exceeds k-max {k_max}")));
            }
            let report = fraction_curve(&res.params, k_min..=k_max, threshold, res.replicates)?;
            emit_report(&report, &res.out, res.format)
        }
        Command::SurvivalCurve {
            common,
            j_min,
            j_max,
            horizon,
        } => {
            let res = resolve(&common)?;
            let j_min = res.resolver.value(j_min, "j-min", 0)?;
            let j_max = res.resolver.value(j_max, "j-max", 3)?;
            let horizon = res.resolver.value(horizon, "horizon", res.params.radius)?;
            if j_min > j_max {
                return Err(Error::Parameter(format!("j-min {j_min} exceeds j-max {j_max}")));
            }
            let report = survival_curve(&res.params, j_min..=j_max, horizon, res.replicates)?;
            emit_report(&report, &res.out, res.format)
        }
        Command::AlphaC {
            common,
            bracket_lo,
            bracket_hi,
        } => {
            let res = resolve(&common)?;
            let lo = res.resolver.value(bracket_lo, "bracket-lo", 0.3)?;
            let hi = res.resolver.value(bracket_hi, "bracket-hi", 6.0)?;
            let est = estimate_alpha_c(
                res.params.order,
                res.params.beta,
                res.params.radius,
                res.replicates,
                (lo, hi),
                res.params.seed,
            )?;
            with_output(&res.out, |mut w| match res.format {
                Format::Csv => {
                    writeln!(w, "# verdict: {:?}; lower bound {}", est.verdict, est.lower_bound)?;
                    est.report.write_csv(&mut w)
                }
                Format::Json => emit_json(&est, w),
            })
        }
        Command::MeanCluster { common, k_min, k_max } => {
            let res = resolve(&common)?;
            let k_min = res.resolver.value(k_min, "k-min", 4)?;
            let k_max = res.resolver.value(k_max, "k-max", res.params.radius)?;
            if k_min > k_max {
                return Err(Error::Parameter(format!("k-min {k_min} exceeds k-max {k_max}")));
            }
            let report = mean_cluster_size(&res.params, k_min..=k_max, res.replicates)?;
            emit_report(&report, &res.out, res.format)
        }
        Command::MetaGraph { common, big_k } => {
            let res = resolve(&common)?;
            let big_k = res.resolver.value(big_k, "big-k", 1.0)?;
            let report = meta_graph_experiment(&res.params, res.params.radius, big_k, res.replicates)?;
            emit_report(&report, &res.out, res.format)
        }
        Command::MixedCompare {
            common,
            epsilon,
            thresholds,
        } => {
            let res = resolve(&common)?;
            let epsilon = res.resolver.value(epsilon, "epsilon", 0.5)?;
            let thresholds = match thresholds {
                Some(t) => t,
                None => vec![2, 4, 16],
            };
            let report = mixed_comparison(
                &res.params,
                epsilon,
                res.params.radius,
                &thresholds,
                res.replicates,
            )?;
            emit_report(&report, &res.out, res.format)
        }
        Command::Renorm {
            common,
            block,
            eta,
            steps,
        } => {
            let res = resolve(&common)?;
            let block = res.resolver.value(block, "block", 3)?;
            let eta = res.resolver.value(eta, "eta", 1.9)?;
            let steps = res.resolver.value(steps, "steps", 30)?;
            let trace = analytic::iterate_t(
                res.params.order,
                block,
                eta,
                res.params.alpha,
                res.params.beta,
                steps,
            )?;
            with_output(&res.out, |mut w| match res.format {
                Format::Csv => trace.write_csv(&mut w),
                Format::Json => emit_json(&trace, w),
            })
        }
        Command::KvnCheck {
            common,
            length,
            trials,
        } => {
            let res = resolve(&common)?;
            let length = res.resolver.value(length, "length", 8)?;
            let trials = res.resolver.value(trials, "trials", 10_000)?;
            let report =
                embedding::stationarity_check(res.params.order, length, trials, res.params.seed)?;
            with_output(&res.out, |mut w| match res.format {
                Format::Csv => report.write_csv(&mut w),
                Format::Json => emit_json(&report, w),
            })
        }
        Command::Analytic {
            common,
            formula,
            k,
            j,
            horizon,
            lambda,
            epsilon,
        } => {
            let res = resolve(&common)?;
            let r = &res.resolver;
            let p = &res.params;
            let k = r.value(k, "k", 1)?;
            let j = r.value(j, "j", 0)?;
            let horizon = r.optional(horizon, "horizon")?;
            let lambda = r.value(lambda, "lambda", 2.0)?;
            let epsilon = r.value(epsilon, "epsilon", 0.5)?;
            let value = match formula {
                Formula::EdgeProb => hierperc::sampler::edge_prob(p.alpha, p.beta, k),
                Formula::ShellEdgeProb => analytic::shell_edge_prob(p.order, p.alpha, p.beta, k)?,
                Formula::BallEscape => {
                    analytic::ball_escape_prob(p.order, p.alpha, p.beta, j, horizon)?
                }
                Formula::ExpectedDegree => match analytic::expected_degree(p.order, p.alpha, p.beta)? {
                    analytic::SeriesSum::Convergent(v) => v,
                    analytic::SeriesSum::Divergent => f64::INFINITY,
                },
                Formula::AlphaCLowerBound => analytic::alpha_c_lower_bound(p.order, p.beta)?,
                Formula::GiantFraction => analytic::giant_fraction(lambda)?,
                Formula::GammaForEpsilon => {
                    analytic::gamma_for_epsilon(p.order, p.alpha, p.beta, epsilon)?.gamma
                }
                Formula::SubcriticalB => analytic::subcritical_b(p.order, p.alpha, p.beta, epsilon)?,
            };
            with_output(&res.out, |w| {
                writeln!(w, "{value}")?;
                Ok(())
            })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
