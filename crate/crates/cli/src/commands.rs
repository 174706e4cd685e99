//! Subcommands. Each one validates its inputs, calls into `sphint_core` and
//! returns an [`Outcome`] holding the echoed inputs, the outputs and CSV rows.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sphint_core::ldp::{self, RateModel};
use sphint_core::randmat::{self, McConfig, Proposal};
use sphint_core::spherical::{j_multi, j_one};
use sphint_core::{Beta, DiscreteModel, Error, OutlierSpec, SpectralMeasure, ThetaSpec, VarianceProfile};

use crate::report::{nums, obj, Num, Outcome, Table};

#[derive(Debug)]
pub enum CliError {
    /// Malformed arguments or input files.
    Input(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "invalid input: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// 2 for invalid input, 3 when a solver or quadrature gave up.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Convergence(_) | Error::Numerical(_)) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_beta(s: &str) -> std::result::Result<Beta, String> {
    match s {
        "1" => Ok(Beta::Real),
        "2" => Ok(Beta::Complex),
        _ => Err(format!("beta must be 1 or 2, got {s:?}")),
    }
}

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct List(Vec<f64>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(List(Vec::new()));
        }
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<std::result::Result<_, _>>().map(List)
    }
}

/// `lo:hi:n`, expanded to the `n + 1` points `lo + i (hi - lo)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("grid must look like lo:hi:n, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("grid lower end: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("grid upper end: {e}"))?;
        let n: usize = n.parse().map_err(|e| format!("grid step count: {e}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || n == 0 {
            return Err("grid needs finite ends with lo < hi and at least one step".into());
        }
        Ok(Grid { lo, hi, n })
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|i| if i == self.n { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / self.n as f64 })
            .collect()
    }
}

fn points(single: Option<f64>, grid: Option<Grid>, name: &str) -> CliResult<Vec<f64>> {
    match (single, grid) {
        (Some(x), None) => Ok(vec![x]),
        (None, Some(g)) => Ok(g.points()),
        _ => Err(CliError::Input(format!("give exactly one of --{name} and --grid"))),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A named measure (`semicircle`, `mp:0.25`), inline JSON, or a JSON file.
fn load_measure(spec: &str) -> CliResult<SpectralMeasure> {
    let path = Path::new(spec);
    if !spec.trim_start().starts_with('{') && path.is_file() {
        return Ok(SpectralMeasure::parse(&read_text(path)?)?);
    }
    Ok(SpectralMeasure::parse(spec)?)
}

fn beta_label(beta: Beta) -> u8 {
    match beta {
        Beta::Real => 1,
        Beta::Complex => 2,
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank-one limit J(mu, theta, lambda), optionally swept over lambda.
    J(JArgs),
    /// Sum of rank-one limits for several tilts and outliers.
    JMulti(JMultiArgs),
    /// Large-deviation rate of an extreme eigenvalue.
    Rate(RateArgs),
    /// Annealed spherical integrals of Wishart and variance-profile matrices.
    #[command(subcommand)]
    Annealed(AnnealedCommand),
    /// Cost of placing outliers in given intervals.
    IntervalCost(IntervalCostArgs),
    /// Monte-Carlo estimate of a finite-N spherical integral against its limit.
    McVerify(McVerifyArgs),
}

impl Command {
    pub fn run(&self) -> CliResult<Outcome> {
        match self {
            Command::J(a) => a.run(),
            Command::JMulti(a) => a.run(),
            Command::Rate(a) => a.run(),
            Command::Annealed(a) => a.run(),
            Command::IntervalCost(a) => a.run(),
            Command::McVerify(a) => a.run(),
        }
    }
}

#[derive(Debug, Args)]
pub struct JArgs {
    /// `semicircle`, `mp:<alpha>`, inline JSON, or a JSON file.
    #[arg(long)]
    measure: String,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Sweep lambda over `lo:hi:n`.
    #[arg(long)]
    grid: Option<Grid>,
    #[arg(long, value_parser = parse_beta, default_value = "1")]
    beta: Beta,
}

#[derive(Serialize)]
struct JRow {
    lambda: Num,
    value: Num,
    scaled_value: Num,
    v_star: Num,
    regime: String,
}

impl JArgs {
    fn run(&self) -> CliResult<Outcome> {
        let mu = load_measure(&self.measure)?;
        let lambdas = points(self.lambda, self.grid, "lambda")?;
        let mut rows = Vec::new();
        let mut table = Table::new(&["lambda", "value"]);
        for &l in &lambdas {
            let j = j_one(&mu, self.theta, l)?;
            table.push(vec![Num(l).to_string(), Num(j.value).to_string()]);
            rows.push(JRow {
                lambda: Num(l),
                value: Num(j.value),
                scaled_value: Num(self.beta.half() * j.value),
                v_star: Num(j.v_star),
                regime: format!("{:?}", j.regime),
            });
        }
        let inputs = obj! {
            "measure" => self.measure,
            "theta" => Num(self.theta),
            "lambda" => self.lambda.map(Num),
            "grid" => self.grid,
            "beta" => beta_label(self.beta),
        };
        let outputs = obj! {
            "normalization" => "value is J without beta/2; scaled_value = (beta/2) J",
            "rows" => rows,
        };
        Ok(Outcome::new(&inputs, &outputs, table))
    }
}

#[derive(Debug, Args)]
pub struct JMultiArgs {
    #[arg(long)]
    measure: String,
    /// Comma-separated signed tilts.
    #[arg(long, allow_hyphen_values = true)]
    thetas: List,
    /// Comma-separated outliers, matched to the tilts after sorting: top
    /// tilts to top outliers, negative tilts to bottom outliers.
    #[arg(long, allow_hyphen_values = true)]
    lambdas: List,
    #[arg(long, value_parser = parse_beta, default_value = "1")]
    beta: Beta,
}

/// Splits outliers relative to the bulk: at or above the right edge go on
/// top (largest first), the rest below (smallest first).
fn split_outliers(mu: &SpectralMeasure, lambdas: &[f64]) -> CliResult<OutlierSpec> {
    let edges = mu.edges();
    let mut top: Vec<f64> = lambdas.iter().copied().filter(|l| *l >= edges.right).collect();
    let mut bottom: Vec<f64> = lambdas.iter().copied().filter(|l| *l < edges.right).collect();
    top.sort_by(|a, b| b.total_cmp(a));
    bottom.sort_by(f64::total_cmp);
    let spec = OutlierSpec::new(top, bottom)?;
    spec.check_against(mu)?;
    Ok(spec)
}

impl JMultiArgs {
    fn run(&self) -> CliResult<Outcome> {
        let mu = load_measure(&self.measure)?;
        let thetas = ThetaSpec::from_signed(&self.thetas.0)?;
        let lambdas = split_outliers(&mu, &self.lambdas.0)?;
        let value = j_multi(&mu, &thetas, &lambdas)?;
        let mut table = Table::new(&["value", "scaled_value"]);
        table.push(vec![Num(value).to_string(), Num(self.beta.half() * value).to_string()]);
        let inputs = obj! {
            "measure" => self.measure,
            "thetas" => nums(&self.thetas.0),
            "lambdas" => nums(&self.lambdas.0),
            "beta" => beta_label(self.beta),
        };
        let outputs = obj! {
            "normalization" => "value is the sum of J without beta/2; scaled_value = (beta/2) value",
            "value" => Num(value),
            "scaled_value" => Num(self.beta.half() * value),
        };
        Ok(Outcome::new(&inputs, &outputs, table))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    Wigner,
    Wishart,
    PerturbedWigner,
    PerturbedWishart,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(value_enum)]
    kind: RateKind,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Sweep x over `lo:hi:n`.
    #[arg(long)]
    grid: Option<Grid>,
    /// Tilt of the perturbed Wigner ensemble.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Covariance spike of the perturbed Wishart ensemble.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Aspect ratio L/M of the Wishart ensembles.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_beta, default_value = "1")]
    beta: Beta,
}

fn need(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Input(format!("--{name} is required for this rate")))
}

impl RateArgs {
    fn model(&self) -> CliResult<RateModel> {
        Ok(match self.kind {
            RateKind::Wigner => RateModel::Wigner,
            RateKind::Wishart => RateModel::Wishart { alpha: need(self.alpha, "alpha")? },
            RateKind::PerturbedWigner => RateModel::PerturbedWigner { theta: need(self.theta, "theta")? },
            RateKind::PerturbedWishart => {
                RateModel::PerturbedWishart { gamma: need(self.gamma, "gamma")?, alpha: need(self.alpha, "alpha")? }
            }
        })
    }

    fn run(&self) -> CliResult<Outcome> {
        let model = self.model()?;
        let xs = points(self.x, self.grid, "x")?;
        let mut table = Table::new(&["x", "value"]);
        let mut values = Vec::with_capacity(xs.len());
        for &x in &xs {
            let v = model.rate(x, self.beta)?;
            table.push(vec![Num(x).to_string(), Num(v).to_string()]);
            values.push(v);
        }
        let argmin = match model {
            RateModel::PerturbedWigner { theta } => Some(ldp::perturbed_wigner_minimizer(theta)?.0),
            RateModel::PerturbedWishart { gamma, alpha } if gamma != 0.0 => {
                Some(ldp::perturbed_wishart_minimizer(gamma, alpha, self.beta)?.0)
            }
            _ => None,
        };
        let inputs = obj! {
            "kind" => self.kind,
            "x" => self.x.map(Num),
            "grid" => self.grid,
            "theta" => self.theta.map(Num),
            "gamma" => self.gamma.map(Num),
            "alpha" => self.alpha.map(Num),
            "beta" => beta_label(self.beta),
        };
        let outputs = obj! {
            "normalization" => "rates include their beta prefactor",
            "x" => nums(&xs),
            "value" => nums(&values),
            "argmin" => argmin.map(Num),
        };
        Ok(Outcome::new(&inputs, &outputs, table))
    }
}

#[derive(Debug, Subcommand)]
pub enum AnnealedCommand {
    /// sup over a in (0,1) of theta^2 a(1-a) plus the relative entropy terms.
    Wishart(AnnealedWishartArgs),
    /// Variance-profile annealed integral from a JSON profile `{"r": [[..]], "alpha": [..]}`.
    Profile(AnnealedProfileArgs),
}

impl AnnealedCommand {
    fn run(&self) -> CliResult<Outcome> {
        match self {
            AnnealedCommand::Wishart(a) => a.run(),
            AnnealedCommand::Profile(a) => a.run(),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnnealedWishartArgs {
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Sweep theta over `lo:hi:n`.
    #[arg(long)]
    grid: Option<Grid>,
    #[arg(long)]
    alpha: f64,
}

impl AnnealedWishartArgs {
    fn run(&self) -> CliResult<Outcome> {
        let thetas = points(self.theta, self.grid, "theta")?;
        let alpha_prime = 1.0 / (1.0 + self.alpha);
        let mut table = Table::new(&["theta", "value"]);
        let (mut values, mut maximizers, mut residuals) = (Vec::new(), Vec::new(), Vec::new());
        for &t in &thetas {
            let (v, a) = ldp::annealed_lambda_wishart(t, self.alpha)?;
            table.push(vec![Num(t).to_string(), Num(v).to_string()]);
            values.push(v);
            maximizers.push(a);
            residuals.push(if t == 0.0 { 0.0 } else { ldp::annealed_wishart_residual(t * t, alpha_prime, a).abs() });
        }
        let inputs = obj! {
            "theta" => self.theta.map(Num),
            "grid" => self.grid,
            "alpha" => Num(self.alpha),
        };
        let outputs = obj! {
            "theta" => nums(&thetas),
            "value" => nums(&values),
            "maximizer" => nums(&maximizers),
            "residual" => nums(&residuals),
        };
        Ok(Outcome::new(&inputs, &outputs, table))
    }
}

#[derive(Debug, Args)]
pub struct AnnealedProfileArgs {
    /// JSON file with `r` (symmetric matrix) and `alpha` (block weights).
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Sweep theta over `lo:hi:n`.
    #[arg(long)]
    grid: Option<Grid>,
    #[arg(long, value_parser = parse_beta, default_value = "1")]
    beta: Beta,
}

#[derive(Serialize)]
struct ProfileRow {
    theta: Num,
    value: Num,
    scaled_value: Num,
    psi: Vec<Num>,
    kkt_residual: Num,
}

impl AnnealedProfileArgs {
    fn run(&self) -> CliResult<Outcome> {
        let profile: VarianceProfile = read_json(&self.profile)?;
        let thetas = points(self.theta, self.grid, "theta")?;
        let (status, top) = ldp::assumption_neg_status(&profile);
        let mut table = Table::new(&["theta", "value"]);
        let mut rows = Vec::new();
        let mut boundary = false;
        for &t in &thetas {
            let opt = ldp::annealed_lambda_profile(t, &profile)?;
            boundary |= opt.boundary;
            table.push(vec![Num(t).to_string(), Num(opt.value).to_string()]);
            rows.push(ProfileRow {
                theta: Num(t),
                value: Num(opt.value),
                scaled_value: Num(self.beta.half() * opt.value),
                psi: nums(&opt.psi),
                kkt_residual: Num(opt.kkt_residual),
            });
        }
        let inputs = obj! {
            "profile" => profile,
            "theta" => self.theta.map(Num),
            "grid" => self.grid,
            "beta" => beta_label(self.beta),
        };
        let outputs = obj! {
            "normalization" => "value without beta/2; scaled_value = (beta/2) value",
            "assumption_neg" => format!("{status:?}"),
            "projected_top_eigenvalue" => Num(top),
            "boundary" => boundary,
            "rows" => rows,
        };
        Ok(Outcome::new(&inputs, &outputs, table))
    }
}

#[derive(Debug, Args)]
pub struct IntervalCostArgs {
    /// JSON file: `{"rate": {"kind": "wigner"}, "beta": 1, "intervals": [[a, b], ..], "counts": [n, ..]}`.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostSpec {
    rate: RateModel,
    #[serde(default = "default_beta")]
    beta: u8,
    intervals: Vec<[f64; 2]>,
    counts: Vec<u32>,
}

fn default_beta() -> u8 {
    1
}

impl IntervalCostArgs {
    fn run(&self) -> CliResult<Outcome> {
        let spec: CostSpec = read_json(&self.spec)?;
        let beta = Beta::try_from(spec.beta)?;
        let intervals: Vec<(f64, f64)> = spec.intervals.iter().map(|[a, b]| (*a, *b)).collect();
        let edge = spec.rate.upper_edge()?;
        // The rate is probed before the search so that bad parameters surface
        // as errors instead of infinite costs.
        if let Some(&(a, _)) = intervals.first() {
            spec.rate.rate(a, beta)?;
        }
        let model = spec.rate;
        let cost = ldp::outlier_interval_cost(&intervals, &spec.counts, edge, |x| {
            model.rate(x, beta).unwrap_or(f64::NAN)
        })?;
        if cost.is_nan() {
            return Err(CliError::Core(Error::Numerical("rate evaluation failed inside an interval".into())));
        }
        let mut table = Table::new(&["cost"]);
        table.push(vec![Num(cost).to_string()]);
        let outputs = obj! {
            "normalization" => "rates include their beta prefactor",
            "edge" => Num(edge),
            "cost" => Num(cost),
        };
        Ok(Outcome::new(&spec, &outputs, table))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalArg {
    Tilted,
    Haar,
}

#[derive(Debug, Args)]
pub struct McVerifyArgs {
    /// JSON file: a discrete model `{"etas", "mult", "bulk"}`, or
    /// `{"measure": .., "top": [..], "bottom": [..]}` for a quantile bulk of
    /// the measure plus outliers.
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated signed tilts.
    #[arg(long, allow_hyphen_values = true)]
    thetas: List,
    /// Matrix dimension; required for quantile models.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_beta, default_value = "1")]
    beta: Beta,
    #[arg(long, value_enum, default_value_t = ProposalArg::Tilted)]
    proposal: ProposalArg,
    /// Also write the diagonal matrix in the SPHI binary format.
    #[arg(long)]
    dump: Option<PathBuf>,
}

/// Spectrum, limiting bulk and outliers described by a model file.
struct Diagonal {
    spectrum: Vec<f64>,
    bulk: SpectralMeasure,
    top: Vec<f64>,
    bottom: Vec<f64>,
}

fn load_diagonal(value: Value, n: Option<usize>) -> CliResult<Diagonal> {
    let obj = value.as_object().ok_or_else(|| CliError::Input("model file must hold a JSON object".into()))?;
    if obj.contains_key("etas") {
        let model: DiscreteModel =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("discrete model: {e}")))?;
        let dim = usize::try_from(model.dim()).map_err(|_| CliError::Input("model too large".into()))?;
        if let Some(n) = n {
            if n != dim {
                return Err(CliError::Input(format!("--n {n} disagrees with the model dimension {dim}")));
            }
        }
        let mut spectrum = Vec::with_capacity(dim);
        let (mut top, mut bottom) = (Vec::new(), Vec::new());
        let [b0, b1] = model.bulk();
        for (i, (&eta, &m)) in model.etas().iter().zip(model.mult()).enumerate() {
            for _ in 0..m {
                spectrum.push(eta);
                if i < b0 {
                    bottom.push(eta);
                } else if i > b1 {
                    top.push(eta);
                }
            }
        }
        top.reverse();
        Ok(Diagonal { spectrum, bulk: model.bulk_measure(), top, bottom })
    } else if let Some(measure) = obj.get("measure") {
        let bulk = match measure {
            Value::String(s) => SpectralMeasure::parse(s)?,
            other => serde_json::from_value(other.clone()).map_err(|e| CliError::Input(format!("measure: {e}")))?,
        };
        let list = |key: &str| -> CliResult<Vec<f64>> {
            match obj.get(key) {
                None => Ok(Vec::new()),
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("{key}: {e}"))),
            }
        };
        let mut top = list("top")?;
        let mut bottom = list("bottom")?;
        if let Some(k) = obj.keys().find(|k| !["measure", "top", "bottom"].contains(&k.as_str())) {
            return Err(CliError::Input(format!("unknown model field {k:?}")));
        }
        top.sort_by(|a, b| b.total_cmp(a));
        bottom.sort_by(f64::total_cmp);
        let n = n.ok_or_else(|| CliError::Input("--n is required for a quantile model".into()))?;
        let outliers: Vec<f64> = bottom.iter().chain(&top).copied().collect();
        let spectrum = randmat::quantile_diagonal(&bulk, n, &outliers)?;
        Ok(Diagonal { spectrum, bulk, top, bottom })
    } else {
        Err(CliError::Input("model file needs either \"etas\" or \"measure\"".into()))
    }
}

/// Outlier attached to each tilt: the matching outlier when there is one,
/// the bulk edge otherwise.
fn attach(thetas: &ThetaSpec, d: &Diagonal) -> CliResult<OutlierSpec> {
    let edges = d.bulk.edges();
    let top = (0..thetas.top.len()).map(|i| d.top.get(i).copied().unwrap_or(edges.right)).collect();
    let bottom = (0..thetas.bottom.len()).map(|i| d.bottom.get(i).copied().unwrap_or(edges.left)).collect();
    Ok(OutlierSpec::new(top, bottom)?)
}

impl McVerifyArgs {
    fn run(&self) -> CliResult<Outcome> {
        let value: Value = read_json(&self.model)?;
        let diag = load_diagonal(value.clone(), self.n)?;
        let thetas = ThetaSpec::from_signed(&self.thetas.0)?;
        let lambdas = attach(&thetas, &diag)?;
        let n = diag.spectrum.len();
        let proposal = match self.proposal {
            ProposalArg::Tilted => Proposal::Tilted,
            ProposalArg::Haar => Proposal::Haar,
        };
        let config = McConfig::new(n, self.samples, self.seed, self.beta).with_proposal(proposal);
        let est = randmat::mc_spherical_spectrum(&diag.spectrum, &thetas, &config)?;
        let asymptotic = self.beta.half() * j_multi(&diag.bulk, &thetas, &lambdas)?;
        if let Some(path) = &self.dump {
            let file = std::fs::File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            randmat::write_matrix(std::io::BufWriter::new(file), &sphint_core::Hermitian::from_diagonal(&diag.spectrum))?;
        }
        let gap = est.estimate - asymptotic;
        let mut table = Table::new(&["estimate", "stderr", "asymptotic", "gap"]);
        table.push(vec![
            Num(est.estimate).to_string(),
            Num(est.stderr).to_string(),
            Num(asymptotic).to_string(),
            Num(gap).to_string(),
        ]);
        let inputs = obj! {
            "model" => value,
            "thetas" => nums(&self.thetas.0),
            "n" => n,
            "samples" => self.samples,
            "seed" => self.seed,
            "beta" => beta_label(self.beta),
            "proposal" => self.proposal,
        };
        let outputs = obj! {
            "normalization" => "estimate and asymptotic include beta/2",
            "estimate" => Num(est.estimate),
            "stderr" => Num(est.stderr),
            "asymptotic" => Num(asymptotic),
            "gap" => Num(gap),
            "lambdas" => obj! { "top" => nums(&lambdas.top), "bottom" => nums(&lambdas.bottom) },
        };
        let mut outcome = Outcome::new(&inputs, &outputs, table);
        outcome.seed = Some(self.seed);
        Ok(outcome)
    }
}
