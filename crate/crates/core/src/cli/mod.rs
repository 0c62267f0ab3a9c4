//! The `fpr-sim` command line: configuration layering, one subcommand per
//! workflow, CSV output and the on-disk moment cache.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, ReuseFactor};
use crate::mu::{
    cache_key, estimate_mu, family_cache_key, quadrature_mu_oracle, Group, GroupStatistics,
    MonteCarloConfig, MuCache, MuFamily, UserSplit,
};
use crate::optimizer::{
    beta_f_profile, compute_gains, optimize, sweep, GainRow, ProfilePoint, Scenario, Scheme,
    SearchSpace, SweepRecord,
};
use crate::propagation::{Moment, PropagationModel};
use crate::se::{spectral_efficiency, Combiner, EvaluationResult, SystemParams};

pub use config::ScenarioConfig;
use output::OracleRow;

/// Antenna counts of the gain table.
pub const TABLE1_ANTENNAS: [usize; 4] = [10, 100, 1000, 10_000];

#[derive(Debug, Parser)]
#[command(name = "fpr-sim", version, about = "Fractional pilot reuse simulator for multi-cell massive MIMO")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML scenario file; its keys override the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub n_samples: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Estimate the group moments of one user split and write them as CSV.
    EstimateMu {
        #[arg(short = 'k', long)]
        users: usize,
        #[arg(long)]
        beta_f: f64,
        /// Reuse factor used for the color column (default: largest of beta_set).
        #[arg(long)]
        beta: Option<u32>,
    },
    /// Evaluate the spectral efficiency of a single operating point.
    Evaluate {
        #[arg(short = 'n', long)]
        antennas: usize,
        #[arg(short = 'k', long)]
        users: usize,
        #[arg(long)]
        beta: u32,
        #[arg(long)]
        beta_f: f64,
        #[arg(long)]
        combiner: Combiner,
    },
    /// Optimal operating point against N for every combiner and scheme.
    Sweep,
    /// FPR gains over integer pilot reuse at N = 10, 100, 1000, 10000.
    ReproduceTable1,
    /// SE over every beta_f = m/K at fixed (N, K, beta).
    BetafProfile {
        #[arg(short = 'n', long)]
        antennas: usize,
        #[arg(long)]
        beta: u32,
        #[arg(long)]
        combiner: Combiner,
        /// Defaults to the SE-maximizing K for this (N, beta, combiner).
        #[arg(short = 'k', long)]
        users: Option<usize>,
    },
    /// Compare Monte-Carlo moments with the quadrature oracle.
    OracleCheck {
        #[arg(short = 'k', long, default_value_t = 10)]
        users: usize,
        #[arg(long, num_args = 1.., default_values_t = [0.2, 0.5])]
        beta_f: Vec<f64>,
        /// Gauss-Legendre nodes per quadrature panel.
        #[arg(long, default_value_t = 48)]
        resolution: usize,
    },
}

impl Command {
    fn execute(&self, ctx: &Context) -> Result<Vec<PathBuf>> {
        match self {
            Command::EstimateMu { users, beta_f, beta } => {
                let beta = beta.unwrap_or_else(|| *ctx.config.beta_set.iter().max().expect("validated"));
                Ok(vec![ctx.estimate_mu(*users, *beta_f, beta)?.0])
            }
            Command::Evaluate { antennas, users, beta, beta_f, combiner } => {
                let (path, params, result) = ctx.evaluate(*antennas, *users, *beta, *beta_f, *combiner)?;
                println!(
                    "{} {}: N={} K={} beta={} beta_f={} B={} SE={:.6} bits/s/Hz",
                    result.combiner,
                    output::evaluation_label(&params),
                    params.antennas(),
                    params.users(),
                    params.reuse(),
                    params.beta_f(),
                    params.pilots(),
                    result.se
                );
                Ok(vec![path])
            }
            Command::Sweep => Ok(ctx.sweep()?.into_iter().map(|(p, _)| p).collect()),
            Command::ReproduceTable1 => {
                let (path, rows) = ctx.reproduce_table1()?;
                print!("{}", format_gain_table(&rows));
                Ok(vec![path])
            }
            Command::BetafProfile { antennas, beta, combiner, users } => {
                Ok(vec![ctx.betaf_profile(*antennas, *beta, *combiner, *users)?.0])
            }
            Command::OracleCheck { users, beta_f, resolution } => {
                let (path, rows) = ctx.oracle_check(*users, beta_f, *resolution)?;
                print!("{}", summarize_oracle(&rows));
                Ok(vec![path])
            }
        }
    }
}

/// Runs a parsed command line and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let ctx = Context::from_args(&cli.global)?;
    let written = match cli.global.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| cli.command.execute(&ctx))?,
        None => cli.command.execute(&ctx)?,
    };
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    Ok(written)
}

/// Resolved configuration plus output and cache locations.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ScenarioConfig,
    pub out_dir: PathBuf,
    pub cache: MuCache,
}

impl Context {
    pub fn new(config: ScenarioConfig, out_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let out_dir = out_dir.into();
        let cache = MuCache::from_env_or(out_dir.join("cache"));
        Ok(Self { config, out_dir, cache })
    }

    pub fn from_args(args: &GlobalArgs) -> Result<Self> {
        let mut config = match &args.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = args.seed {
            config.seed = s;
        }
        if let Some(n) = args.n_samples {
            config.n_samples = n;
        }
        Self::new(config, &args.out_dir)
    }

    pub fn with_cache(mut self, cache: MuCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn grid(&self) -> Result<CellGrid> {
        CellGrid::new(1.0, self.config.tiers)
    }

    pub fn model(&self) -> Result<PropagationModel> {
        PropagationModel::new(self.config.kappa)
    }

    pub fn mc_config(&self) -> Result<MonteCarloConfig> {
        MonteCarloConfig::new(self.config.n_samples, self.config.min_dist_fraction, self.config.seed)
    }

    pub fn scenario(&self, grid: &CellGrid) -> Result<Scenario> {
        Ok(Scenario::new(grid, &self.config.beta_set, self.config.coherence, self.config.inv_snr())?
            .with_edge_load(self.config.edge_load()?))
    }

    fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }

    /// Moments of one split, from the cache when possible.
    pub fn statistics(&self, grid: &CellGrid, split: UserSplit) -> Result<GroupStatistics> {
        let (model, mc) = (self.model()?, self.mc_config()?);
        let key = cache_key(grid, &model, split, &mc);
        match self.cache.load(&key) {
            Ok(Some(s)) => return Ok(s),
            Ok(None) => {}
            Err(e) => eprintln!("discarding cache entry {}: {e}", key.as_str()),
        }
        let stats = estimate_mu(grid, &model, split, &mc)?;
        self.cache.store(&key, &stats)?;
        Ok(stats)
    }

    /// Moments of every split with `k_min <= K <= k_max`, from the cache when possible.
    pub fn family(&self, grid: &CellGrid, k_min: usize, k_max: usize) -> Result<MuFamily> {
        let (model, mc) = (self.model()?, self.mc_config()?);
        let key = family_cache_key(grid, &model, k_min, k_max, &mc);
        match self.cache.load_family(&key) {
            Ok(Some(f)) => return Ok(f),
            Ok(None) => {}
            Err(e) => eprintln!("discarding cache entry {}: {e}", key.as_str()),
        }
        let family = MuFamily::estimate_range(grid, &model, k_min, k_max, &mc)?;
        self.cache.store_family(&key, &family)?;
        Ok(family)
    }

    pub fn estimate_mu(&self, users: usize, beta_f: f64, beta: u32) -> Result<(PathBuf, GroupStatistics)> {
        let grid = self.grid()?;
        let coloring = grid.assign_reuse_coloring(beta)?;
        let split = UserSplit::from_fraction(users, beta_f)?;
        let stats = self.statistics(&grid, split)?;
        let path = self.output(&format!("mu_K{}_m{}.csv", split.users(), split.interior()))?;
        output::write_mu(&path, &grid, &coloring, &stats)?;
        for group in [Group::Interior, Group::Edge] {
            if let Some(g) = stats.group(group) {
                let worst = g.stderr(Moment::First).iter().copied().fold(0.0, f64::max);
                println!("{:<8} largest first-moment standard error {:.3e}", group.label(), worst);
            }
        }
        Ok((path, stats))
    }

    pub fn evaluate(
        &self,
        antennas: usize,
        users: usize,
        beta: u32,
        beta_f: f64,
        combiner: Combiner,
    ) -> Result<(PathBuf, SystemParams, EvaluationResult)> {
        let grid = self.grid()?;
        let scenario = self.scenario(&grid)?;
        let reuse = ReuseFactor::new(beta)?;
        let split = UserSplit::from_fraction(users, beta_f)?;
        let params = scenario.params(antennas, users, split.interior(), reuse)?;
        let coloring = grid.assign_reuse_coloring(beta)?;
        let stats = self.statistics(&grid, split)?;
        let result = spectral_efficiency(&params, &stats, &coloring, combiner)?;
        let path = self.output("evaluate.csv")?;
        output::write_evaluation(&path, &params, &result)?;
        Ok((path, params, result))
    }

    fn search_space(&self, scheme: Scheme, antennas: Vec<usize>) -> Result<SearchSpace> {
        Ok(SearchSpace {
            users: 1..=self.config.k_max(),
            reuse: self.config.reuse_factors()?,
            scheme,
            antennas,
        })
    }

    /// Per-N optima for every configured combiner under both schemes.
    pub fn sweep_records(&self, antennas: &[usize]) -> Result<Vec<(Combiner, Scheme, Vec<SweepRecord>)>> {
        let grid = self.grid()?;
        let scenario = self.scenario(&grid)?;
        let family = self.family(&grid, 1, self.config.k_max())?;
        let mut out = Vec::new();
        for combiner in self.config.combiners()? {
            for scheme in [Scheme::Fpr, Scheme::Baseline] {
                let space = self.search_space(scheme, antennas.to_vec())?;
                out.push((combiner, scheme, sweep(&space, combiner, &scenario, &family)?));
            }
        }
        Ok(out)
    }

    pub fn sweep(&self) -> Result<Vec<(PathBuf, Vec<SweepRecord>)>> {
        let mut out = Vec::new();
        for (combiner, scheme, records) in self.sweep_records(&self.config.antenna_list())? {
            let path = self.output(&format!("sweep_{}_{}.csv", file_tag(combiner.label()), file_tag(scheme.label())))?;
            output::write_sweep(&path, &records)?;
            out.push((path, records));
        }
        Ok(out)
    }

    pub fn reproduce_table1(&self) -> Result<(PathBuf, Vec<GainRow>)> {
        let sweeps = self.sweep_records(&TABLE1_ANTENNAS)?;
        let pick = |scheme| -> Vec<SweepRecord> {
            sweeps.iter().filter(|s| s.1 == scheme).flat_map(|s| s.2.iter().cloned()).collect()
        };
        let rows = compute_gains(&pick(Scheme::Fpr), &pick(Scheme::Baseline))?;
        let path = self.output("table1_gains.csv")?;
        output::write_gains(&path, &rows)?;
        Ok((path, rows))
    }

    pub fn betaf_profile(
        &self,
        antennas: usize,
        beta: u32,
        combiner: Combiner,
        users: Option<usize>,
    ) -> Result<(PathBuf, usize, Vec<ProfilePoint>)> {
        let grid = self.grid()?;
        let scenario = self.scenario(&grid)?;
        let reuse = ReuseFactor::new(beta)?;
        let (users, family) = match users {
            Some(k) => (k, self.family(&grid, k, k)?),
            None => {
                let family = self.family(&grid, 1, self.config.k_max())?;
                let space = SearchSpace {
                    users: 1..=self.config.k_max(),
                    reuse: vec![reuse],
                    scheme: Scheme::Fpr,
                    antennas: vec![antennas],
                };
                (optimize(&space, antennas, combiner, &scenario, &family)?.users, family)
            }
        };
        let points = beta_f_profile(antennas, users, reuse, combiner, &scenario, &family)?;
        let name = format!("betaf_profile_{}_beta{beta}_N{antennas}.csv", file_tag(combiner.label()));
        let path = self.output(&name)?;
        output::write_profile(&path, antennas, combiner, users, beta, &points)?;
        Ok((path, users, points))
    }

    pub fn oracle_check(&self, users: usize, beta_fs: &[f64], resolution: usize) -> Result<(PathBuf, Vec<OracleRow>)> {
        let grid = self.grid()?;
        let model = self.model()?;
        let mut rows = Vec::new();
        for &beta_f in beta_fs {
            let split = UserSplit::from_fraction(users, beta_f)?;
            let mc = self.statistics(&grid, split)?;
            let exact = quadrature_mu_oracle(&grid, &model, split, self.config.min_dist_fraction, resolution)?;
            for group in [Group::Interior, Group::Edge] {
                let (Some(m), Some(q)) = (mc.group(group), exact.group(group)) else { continue };
                for gamma in Moment::ALL {
                    for l in 0..grid.len() {
                        rows.push(OracleRow {
                            cell: l,
                            tier: grid.cell(l).tier,
                            beta_f,
                            group,
                            gamma,
                            mu_mc: m.mu(gamma)[l],
                            stderr_mc: m.stderr(gamma)[l],
                            mu_oracle: q.mu(gamma)[l],
                        });
                    }
                }
            }
        }
        let path = self.output(&format!("oracle_check_K{users}.csv"))?;
        output::write_oracle(&path, &rows)?;
        Ok((path, rows))
    }
}

fn file_tag(label: &str) -> String {
    label.to_ascii_lowercase().replace('-', "")
}

pub fn format_gain_table(rows: &[GainRow]) -> String {
    let mut s = format!("{:>7}  {:<6} {:>12} {:>12} {:>9}\n", "N", "comb", "SE FPR", "SE baseline", "gain");
    for r in rows {
        s += &format!(
            "{:>7}  {:<6} {:>12.3} {:>12.3} {:>8.1}%\n",
            r.antennas, r.combiner.label(), r.se_fpr, r.se_baseline, r.gain_percent
        );
    }
    s
}

/// Share of non-trivial entries within three standard errors of the oracle.
pub fn oracle_agreement(rows: &[OracleRow]) -> (usize, usize) {
    let z: Vec<f64> = rows.iter().filter_map(OracleRow::z_score).collect();
    (z.iter().filter(|z| z.abs() <= 3.0).count(), z.len())
}

fn summarize_oracle(rows: &[OracleRow]) -> String {
    let (ok, total) = oracle_agreement(rows);
    let worst = rows.iter().filter_map(OracleRow::z_score).fold(0.0f64, |a, z| a.max(z.abs()));
    format!(
        "{ok}/{total} entries within 3 standard errors ({:.1}%), largest |z| = {worst:.2}\n",
        100.0 * ok as f64 / total.max(1) as f64
    )
}

/// Binary entry point: parses `std::env::args` and maps errors to exit code 1.
pub fn main_with_args<I, T>(args: I) -> std::process::ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(_) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
