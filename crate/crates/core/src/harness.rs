//! Monte-Carlo experiment over Student-t samples: empirical L1 distance
//! `M⁻¹ Σ_m |V_n(m) − θ|` per (ν, statistic, n) cell, averaged truncation
//! decompositions, and log-log slope fits.
//!
//! Every random stream is derived from the root seed and the cell/replication
//! coordinates, so the data for replication `m` of a given `(ν, n)` is the
//! same for every statistic (paired design) and results are identical for
//! any number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::distributions::{sample_iid, theta_oracle, truncated_theta_oracle, DistributionSpec};
use crate::error::{Error, Result};
use crate::estimators::{complete_u, error_decomposition, incomplete_u};
use crate::indexcomb::IndexSpace;
use crate::kernels::Kernel;
use crate::rng::{StreamKey, StreamRng};
use crate::sampling::{draw_selection, SamplingScheme, SchemeKind};
use crate::sum::KahanSum;

const DATA_STREAM: u64 = 0x6461_7461;
const SAMPLING_STREAM: u64 = 0x7361_6d70;

/// Budget growth rule `N = n^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NRule {
    /// `N = n^{3/2}`
    N32,
    /// `N = n`
    N,
    /// `N = n^{2/3}`
    N23,
}

impl NRule {
    pub const ALL: [NRule; 3] = [NRule::N32, NRule::N, NRule::N23];

    pub fn token(self) -> &'static str {
        match self {
            NRule::N32 => "n32",
            NRule::N => "n",
            NRule::N23 => "n23",
        }
    }

    /// Unrounded `n^e`.
    pub fn raw_budget(self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            NRule::N32 => x * x.sqrt(),
            NRule::N => x,
            NRule::N23 => x.cbrt().powi(2),
        }
    }
}

impl fmt::Display for NRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for NRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NRule::ALL
            .into_iter()
            .find(|r| r.token() == s)
            .ok_or_else(|| Error::Config(format!("unknown N rule `{s}` (expected n32, n or n23)")))
    }
}

/// `n^e`, rounded to the nearest integer `≥ 1` for the fixed-size designs and
/// left unrounded for Bernoulli sampling.
pub fn resolve_budget(rule: NRule, n: usize, kind: SchemeKind) -> f64 {
    let raw = rule.raw_budget(n);
    if kind.integer_budget() {
        raw.round().max(1.0)
    } else {
        raw
    }
}

/// The estimator computed in a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    Complete,
    Incomplete { kind: SchemeKind, rule: NRule },
}

impl Statistic {
    pub fn scheme_token(&self) -> &'static str {
        match self {
            Statistic::Complete => "complete",
            Statistic::Incomplete { kind, .. } => kind.token(),
        }
    }

    /// `full` for the complete statistic.
    pub fn rule_token(&self) -> &'static str {
        match self {
            Statistic::Complete => "full",
            Statistic::Incomplete { rule, .. } => rule.token(),
        }
    }

    pub fn from_tokens(scheme: &str, rule: &str) -> Result<Self> {
        if scheme == "complete" {
            if rule != "full" {
                return Err(Error::Config(format!("complete statistic has N rule `full`, got `{rule}`")));
            }
            return Ok(Statistic::Complete);
        }
        Ok(Statistic::Incomplete {
            kind: scheme.parse().map_err(|_| Error::Config(format!("unknown scheme `{scheme}`")))?,
            rule: rule.parse()?,
        })
    }

    fn stream_tag(&self) -> (u64, u64) {
        match self {
            Statistic::Complete => (0, 0),
            Statistic::Incomplete { kind, rule } => (*kind as u64 + 1, *rule as u64 + 1),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.scheme_token(), self.rule_token())
    }
}

/// Which statistics to run; `complete` plus any of the three designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeChoice {
    Complete,
    Sampled(SchemeKind),
}

impl FromStr for SchemeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "complete" {
            return Ok(SchemeChoice::Complete);
        }
        s.parse::<SchemeKind>()
            .map(SchemeChoice::Sampled)
            .map_err(|_| Error::Config(format!("unknown scheme `{s}` (expected complete, swor, swr or bern)")))
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeChoice::Complete => f.write_str("complete"),
            SchemeChoice::Sampled(k) => f.write_str(k.token()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub nu_list: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// Replications per cell (`M`).
    pub replications: usize,
    pub schemes: Vec<SchemeChoice>,
    pub n_rules: Vec<NRule>,
    pub root_seed: u64,
    /// Absolute accuracy of the θ oracle.
    pub theta_tol: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nu_list: vec![1.5, 1.8, 2.1, 4.1],
            n_grid: (1..=8).map(|k| 50 * k).collect(),
            replications: 12_000,
            schemes: vec![
                SchemeChoice::Complete,
                SchemeChoice::Sampled(SchemeKind::WithoutReplacement),
                SchemeChoice::Sampled(SchemeKind::WithReplacement),
                SchemeChoice::Sampled(SchemeKind::Bernoulli),
            ],
            n_rules: NRule::ALL.to_vec(),
            root_seed: 20_250_101,
            theta_tol: 1e-10,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("M must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n grid must be non-empty and strictly increasing".into()));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::Config("every n must be >= 2".into()));
        }
        if self.nu_list.is_empty() {
            return Err(Error::Config("need at least one nu".into()));
        }
        for &nu in &self.nu_list {
            check_nu(nu)?;
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("need at least one scheme".into()));
        }
        let sampled = self.schemes.iter().any(|s| matches!(s, SchemeChoice::Sampled(_)));
        if sampled && self.n_rules.is_empty() {
            return Err(Error::Config("sampled schemes need at least one N rule".into()));
        }
        if !(self.theta_tol > 0.0) {
            return Err(Error::Config("theta tolerance must be > 0".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        Ok(())
    }

    /// Statistics in output order, deduplicated.
    pub fn statistics(&self) -> Vec<Statistic> {
        let mut out = Vec::new();
        for s in &self.schemes {
            match *s {
                SchemeChoice::Complete => out.push(Statistic::Complete),
                SchemeChoice::Sampled(kind) => {
                    out.extend(self.n_rules.iter().map(|&rule| Statistic::Incomplete { kind, rule }))
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Runs `f` on the configured pool.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(f()),
            Some(k) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start {k} worker threads: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 1.0) || !nu.is_finite() {
        return Err(Error::Domain(format!(
            "nu must be > 1 for E|X1 - X2| to be finite, got {nu}"
        )));
    }
    Ok(())
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub nu: f64,
    pub statistic: Statistic,
    pub n: usize,
    /// Nominal budget `N`; `C(n,2)` for the complete statistic.
    pub budget: f64,
    pub replications: usize,
    pub l1: f64,
    pub theta: f64,
    pub seed: u64,
}

/// A resolved cell: statistic plus its nominal budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPlan {
    pub nu: f64,
    pub n: usize,
    pub statistic: Statistic,
    pub budget: f64,
}

impl CellPlan {
    pub fn new(nu: f64, statistic: Statistic, n: usize) -> Result<Self> {
        check_nu(nu)?;
        let space = IndexSpace::new(n, 2)?;
        let budget = match statistic {
            Statistic::Complete => space.total() as f64,
            Statistic::Incomplete { kind, rule } => resolve_budget(rule, n, kind),
        };
        Ok(Self {
            nu,
            n,
            statistic,
            budget,
        })
    }

    pub fn label(&self) -> String {
        format!("nu={} {} n={} N={}", self.nu, self.statistic, self.n, self.budget)
    }
}

/// Source of the size-`n` sample for one replication.
pub type DataSource = dyn Fn(&mut StreamRng, usize) -> Result<Vec<f64>> + Sync;

fn data_key(seed: u64, nu: f64, n: usize, m: usize) -> StreamKey {
    StreamKey::root(seed)
        .push(DATA_STREAM)
        .push_f64(nu)
        .push(n as u64)
        .push(m as u64)
}

fn sampling_key(seed: u64, nu: f64, n: usize, m: usize, statistic: &Statistic) -> StreamKey {
    let (scheme, rule) = statistic.stream_tag();
    StreamKey::root(seed)
        .push(SAMPLING_STREAM)
        .push_f64(nu)
        .push(n as u64)
        .push(m as u64)
        .push(scheme)
        .push(rule)
}

fn student_t_source(nu: f64) -> impl Fn(&mut StreamRng, usize) -> Result<Vec<f64>> + Sync {
    move |rng: &mut StreamRng, n| sample_iid(&DistributionSpec::StudentT { nu }, n, rng)
}

/// `θ = E|X₁ − X₂|` under Student-t(ν).
pub fn student_t_theta(nu: f64, tol: f64) -> Result<f64> {
    check_nu(nu)?;
    theta_oracle(&DistributionSpec::StudentT { nu }, &Kernel::abs_diff(), tol)
}

/// `V_n(m)` for every replication, in replication order.
fn replicate_estimates(config: &ExperimentConfig, plan: &CellPlan, data: &DataSource) -> Result<Vec<f64>> {
    let kernel = Kernel::abs_diff();
    let space = IndexSpace::new(plan.n, 2)?;
    let scheme = match plan.statistic {
        Statistic::Complete => None,
        Statistic::Incomplete { kind, .. } => {
            let s = SamplingScheme::new(kind, plan.budget);
            s.validate(&space)?;
            Some(s)
        }
    };
    let seed = config.root_seed;
    config.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|m| {
                let mut rng = data_key(seed, plan.nu, plan.n, m).rng();
                let xs = data(&mut rng, plan.n)?;
                match scheme {
                    None => Ok(complete_u(&kernel, &xs)?.value),
                    Some(s) => {
                        let mut srng = sampling_key(seed, plan.nu, plan.n, m, &plan.statistic).rng();
                        let draw = draw_selection(&space, s, &mut srng)?;
                        Ok(incomplete_u(&kernel, &xs, &draw)?.value)
                    }
                }
            })
            .collect::<Result<Vec<f64>>>()
    })?
}

/// Runs one planned cell against an arbitrary data source and a given `θ`.
pub fn run_plan(config: &ExperimentConfig, plan: &CellPlan, theta: f64, data: &DataSource) -> Result<ResultRow> {
    if config.replications == 0 {
        return Err(Error::Config("M must be >= 1".into()));
    }
    let values = replicate_estimates(config, plan, data)?;
    let total: KahanSum = values.iter().map(|v| (v - theta).abs()).collect();
    Ok(ResultRow {
        nu: plan.nu,
        statistic: plan.statistic,
        n: plan.n,
        budget: plan.budget,
        replications: config.replications,
        l1: total.value() / config.replications as f64,
        theta,
        seed: config.root_seed,
    })
}

/// One cell of the Student-t experiment.
pub fn run_cell(config: &ExperimentConfig, nu: f64, statistic: Statistic, n: usize) -> Result<ResultRow> {
    let plan = CellPlan::new(nu, statistic, n)?;
    let theta = student_t_theta(nu, config.theta_tol)?;
    run_plan(config, &plan, theta, &student_t_source(nu))
}

/// Every cell of `config`, sorted by `(ν, statistic, n)`.
///
/// Failing cells do not stop the run; the first failure is returned with the
/// cell label and the number of failed cells.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut nus = config.nu_list.clone();
    nus.sort_by(f64::total_cmp);
    nus.dedup();
    let statistics = config.statistics();
    let mut rows = Vec::new();
    let mut failures: Vec<(String, Error)> = Vec::new();
    for &nu in &nus {
        let theta = match student_t_theta(nu, config.theta_tol) {
            Ok(t) => t,
            Err(e) => {
                failures.push((format!("nu={nu} theta oracle"), e));
                continue;
            }
        };
        let source = student_t_source(nu);
        for &statistic in &statistics {
            for &n in &config.n_grid {
                let outcome =
                    CellPlan::new(nu, statistic, n).and_then(|plan| run_plan(config, &plan, theta, &source));
                match outcome {
                    Ok(row) => rows.push(row),
                    Err(e) => failures.push((format!("nu={nu} {statistic} n={n}"), e)),
                }
            }
        }
    }
    if let Some((cell, source)) = failures.first().cloned() {
        let more = failures.len() - 1;
        let cell = if more > 0 {
            format!("{cell} (and {more} more failing cells)")
        } else {
            cell
        };
        return Err(Error::Cell {
            cell,
            source: Box::new(source),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of `ln l1` on `ln min(n, N)`.
pub fn fit_log_log_slope(rows: &[ResultRow]) -> Result<SlopeFit> {
    if rows.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| !(r.l1 > 0.0) || !r.l1.is_finite()) {
        return Err(Error::Fit(format!("l1 must be positive, got {} at n={}", r.l1, r.n)));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).min(r.budget).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.l1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all points share the same min(n, N)".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if rows.len() > 2 {
        (sse / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
        points: rows.len(),
    })
}

/// Mean absolute decomposition terms at one truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TjRow {
    pub level: f64,
    /// `M⁻¹ Σ_m |t_j(m)|`, `j = 1..4`.
    pub mean_abs: [f64; 4],
    /// `M⁻¹ Σ_m |t1 + t2 + t3 + t4|`; the cell's L1 distance.
    pub sum_check: f64,
    pub theta_c: f64,
}

/// Averages `|t_j|` over the replications of an incomplete cell, reusing the
/// data and sampling streams of [`run_cell`], for each level in `levels`.
pub fn estimate_tj_curves(
    config: &ExperimentConfig,
    nu: f64,
    statistic: Statistic,
    n: usize,
    levels: &[f64],
) -> Result<Vec<TjRow>> {
    let Statistic::Incomplete { kind, .. } = statistic else {
        return Err(Error::Config("the decomposition needs a sampled statistic".into()));
    };
    if config.replications == 0 {
        return Err(Error::Config("M must be >= 1".into()));
    }
    if levels.is_empty() {
        return Err(Error::Config("need at least one truncation level".into()));
    }
    let plan = CellPlan::new(nu, statistic, n)?;
    let spec = DistributionSpec::StudentT { nu };
    let kernel = Kernel::abs_diff();
    let theta = theta_oracle(&spec, &kernel, config.theta_tol)?;
    let theta_cs = levels
        .iter()
        .map(|&c| truncated_theta_oracle(&spec, &kernel, c, config.theta_tol))
        .collect::<Result<Vec<f64>>>()?;
    let space = IndexSpace::new(n, 2)?;
    let scheme = SamplingScheme::new(kind, plan.budget);
    scheme.validate(&space)?;
    let seed = config.root_seed;
    let source = student_t_source(nu);
    let per_rep: Vec<Vec<[f64; 5]>> = config.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|m| {
                let xs = source(&mut data_key(seed, nu, n, m).rng(), n)?;
                let mut srng = sampling_key(seed, nu, n, m, &statistic).rng();
                let draw = draw_selection(&space, scheme, &mut srng)?;
                levels
                    .iter()
                    .zip(&theta_cs)
                    .map(|(&c, &tc)| {
                        let d = error_decomposition(&kernel, &xs, &draw, c, tc, theta)?;
                        Ok([d.t1.abs(), d.t2.abs(), d.t3.abs(), d.t4.abs(), d.sum().abs()])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mm = config.replications as f64;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut sums = [KahanSum::new(); 5];
            for rep in &per_rep {
                for (s, v) in sums.iter_mut().zip(rep[i]) {
                    s.add(v);
                }
            }
            TjRow {
                level: c,
                mean_abs: [
                    sums[0].value() / mm,
                    sums[1].value() / mm,
                    sums[2].value() / mm,
                    sums[3].value() / mm,
                ],
                sum_check: sums[4].value() / mm,
                theta_c: theta_cs[i],
            }
        })
        .collect())
}

/// `lo, …, hi` spaced evenly in `log10`, with `round(7 · decades)` intervals
/// (at least one), both ends included.
pub fn geometric_grid(lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Config(format!("geometric grid needs 0 < lo <= hi, got {lo}:{hi}")));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    let decades = (hi / lo).log10();
    let steps = ((7.0 * decades).round() as usize).max(1);
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..=steps)
        .map(|i| match i {
            0 => lo,
            _ if i == steps => hi,
            _ => (a + (b - a) * i as f64 / steps as f64).exp(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexcomb::binom;

    fn small(m: usize) -> ExperimentConfig {
        ExperimentConfig {
            nu_list: vec![1.5],
            n_grid: vec![20, 40],
            replications: m,
            root_seed: 11,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn budget_rules() {
        let swor = SchemeKind::WithoutReplacement;
        assert_eq!(resolve_budget(NRule::N32, 100, swor), 1000.0);
        assert_eq!(resolve_budget(NRule::N23, 64, swor), 16.0);
        assert_eq!(resolve_budget(NRule::N23, 64, SchemeKind::Bernoulli), 16.0);
        assert_eq!(resolve_budget(NRule::N32, 50, swor), 354.0);
        assert_eq!(resolve_budget(NRule::N32, 50, SchemeKind::WithReplacement), 354.0);
        let b = resolve_budget(NRule::N32, 50, SchemeKind::Bernoulli);
        assert!((b - 353.553_390_593_273_8).abs() < 1e-9);
        assert_eq!(resolve_budget(NRule::N23, 1, swor), 1.0);
        assert!(matches!("n12".parse::<NRule>(), Err(Error::Config(_))));
        assert_eq!("n23".parse::<NRule>().unwrap(), NRule::N23);
    }

    #[test]
    fn statistic_tokens_round_trip() {
        let cfg = ExperimentConfig::default();
        let stats = cfg.statistics();
        assert_eq!(stats.len(), 10);
        assert_eq!(stats[0], Statistic::Complete);
        for s in stats {
            assert_eq!(Statistic::from_tokens(s.scheme_token(), s.rule_token()).unwrap(), s);
        }
        assert!(Statistic::from_tokens("complete", "n").is_err());
        assert!(Statistic::from_tokens("srs", "n").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = [
            ExperimentConfig { replications: 0, ..small(1) },
            ExperimentConfig { n_grid: vec![40, 20], ..small(1) },
            ExperimentConfig { n_grid: vec![1, 20], ..small(1) },
            ExperimentConfig { nu_list: vec![1.0], ..small(1) },
            ExperimentConfig { n_rules: vec![], ..small(1) },
            ExperimentConfig { theta_tol: 0.0, ..small(1) },
            ExperimentConfig { threads: Some(0), ..small(1) },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(matches!(run_cell(&small(1), 0.9, Statistic::Complete, 20), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_data_gives_theta() {
        // M a power of two keeps M·θ / M exact
        let plan = CellPlan::new(1.5, Statistic::Complete, 20).unwrap();
        let theta = student_t_theta(1.5, 1e-10).unwrap();
        let constant = |_: &mut StreamRng, n: usize| Ok(vec![2.5; n]);
        for m in [1, 8] {
            let row = run_plan(&small(m), &plan, theta, &constant).unwrap();
            assert_eq!(row.l1, theta);
        }
    }

    #[test]
    fn single_replication_is_reproducible() {
        let cfg = small(1);
        let a = run_cell(&cfg, 1.5, Statistic::Complete, 20).unwrap();
        let b = run_cell(&cfg, 1.5, Statistic::Complete, 20).unwrap();
        assert_eq!(a.l1.to_bits(), b.l1.to_bits());
        let xs = sample_iid(&DistributionSpec::StudentT { nu: 1.5 }, 20, &mut data_key(11, 1.5, 20, 0).rng()).unwrap();
        let u = complete_u(&Kernel::abs_diff(), &xs).unwrap().value;
        assert_eq!(a.l1, (u - a.theta).abs());
        assert_eq!(a.budget, 190.0);
    }

    #[test]
    fn full_budget_swor_matches_complete() {
        let cfg = small(50);
        let n = 30;
        let complete = run_cell(&cfg, 1.8, Statistic::Complete, n).unwrap();
        let stat = Statistic::Incomplete {
            kind: SchemeKind::WithoutReplacement,
            rule: NRule::N32,
        };
        let mut plan = CellPlan::new(1.8, stat, n).unwrap();
        plan.budget = binom(n as u64, 2).unwrap() as f64;
        let full = run_plan(&cfg, &plan, complete.theta, &student_t_source(1.8)).unwrap();
        assert!((full.l1 - complete.l1).abs() < 1e-12 * complete.l1, "{} vs {}", full.l1, complete.l1);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let base = run_experiment(&ExperimentConfig { threads: Some(1), ..small(40) }).unwrap();
        for t in [2, 3, 5] {
            let other = run_experiment(&ExperimentConfig { threads: Some(t), ..small(40) }).unwrap();
            assert_eq!(base, other);
        }
    }

    #[test]
    fn experiment_shape_and_order() {
        let cfg = ExperimentConfig {
            nu_list: vec![2.1, 1.5],
            n_grid: vec![10, 20],
            ..small(3)
        };
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 10 * 2);
        let keys: Vec<_> = rows.iter().map(|r| (r.nu.to_bits(), r.statistic, r.n)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r.l1 >= 0.0 && r.replications == 3));
    }

    #[test]
    fn cell_errors_carry_identity() {
        let cfg = ExperimentConfig {
            n_grid: vec![2, 3],
            schemes: vec![SchemeChoice::Sampled(SchemeKind::WithoutReplacement)],
            n_rules: vec![NRule::N32],
            ..small(2)
        };
        // n^{3/2} exceeds C(n,2) for n = 2, 3
        match run_experiment(&cfg) {
            Err(Error::Cell { cell, .. }) => {
                assert!(cell.contains("swor/n32") && cell.contains("1 more"), "{cell}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn paired_design_shares_data() {
        // with the full budget every SWOR draw sees the complete sample, so
        // equality with the complete statistic shows the data streams coincide
        let cfg = small(4);
        let theta = student_t_theta(1.5, 1e-10).unwrap();
        let a = run_plan(&cfg, &CellPlan::new(1.5, Statistic::Complete, 12).unwrap(), theta, &student_t_source(1.5)).unwrap();
        for rule in NRule::ALL {
            let mut plan = CellPlan::new(1.5, Statistic::Incomplete { kind: SchemeKind::WithoutReplacement, rule }, 12).unwrap();
            plan.budget = 66.0;
            let b = run_plan(&cfg, &plan, theta, &student_t_source(1.5)).unwrap();
            assert!((a.l1 - b.l1).abs() < 1e-13);
        }
    }

    #[test]
    fn slope_fit() {
        let row = |n: usize, l1: f64| ResultRow {
            nu: 2.0,
            statistic: Statistic::Complete,
            n,
            budget: 1e9,
            replications: 1,
            l1,
            theta: 1.0,
            seed: 0,
        };
        let exact: Vec<_> = [50, 100, 200, 400].iter().map(|&n| row(n, (n as f64).powf(-0.5))).collect();
        let fit = fit_log_log_slope(&exact).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12 && fit.stderr < 1e-12);
        let flat: Vec<_> = [50, 100, 200].iter().map(|&n| row(n, 0.3)).collect();
        assert!(fit_log_log_slope(&flat).unwrap().slope.abs() < 1e-12);
        assert!(fit_log_log_slope(&flat[..2]).is_err());
        let mut bad = flat.clone();
        bad[1].l1 = 0.0;
        assert!(matches!(fit_log_log_slope(&bad), Err(Error::Fit(_))));
        // min(n, N) is the regressor
        let capped: Vec<_> = [50, 100, 200]
            .iter()
            .map(|&n| ResultRow { budget: (n as f64).sqrt(), ..row(n, (n as f64).powf(-0.25)) })
            .collect();
        assert!((fit_log_log_slope(&capped).unwrap().slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tj_curves_properties() {
        let cfg = small(30);
        let levels = [1.0, 8.0, 1e12];
        let swor = Statistic::Incomplete {
            kind: SchemeKind::WithoutReplacement,
            rule: NRule::N,
        };
        let rows = estimate_tj_curves(&cfg, 1.5, swor, 40, &levels).unwrap();
        let cell = run_cell(&cfg, 1.5, swor, 40).unwrap();
        for r in &rows {
            assert_eq!(r.mean_abs[2], 0.0);
            assert!((r.sum_check - cell.l1).abs() < 1e-12, "{} vs {}", r.sum_check, cell.l1);
        }
        assert_eq!(rows[2].mean_abs[0], 0.0);
        assert!(rows[0].mean_abs[3] > rows[1].mean_abs[3] && rows[1].mean_abs[3] > rows[2].mean_abs[3]);

        let bern = Statistic::Incomplete {
            kind: SchemeKind::Bernoulli,
            rule: NRule::N,
        };
        let rows = estimate_tj_curves(&cfg, 1.5, bern, 40, &levels[..1]).unwrap();
        assert!(rows[0].mean_abs[2] > 0.0);
        assert!(estimate_tj_curves(&cfg, 1.5, Statistic::Complete, 40, &levels).is_err());
    }

    #[test]
    fn geometric_grids() {
        let g = geometric_grid(1.0, 64.0).unwrap();
        // log10(64) · 7 = 12.64 → 13 intervals
        assert_eq!(g.len(), 14);
        assert_eq!((g[0], g[13]), (1.0, 64.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let ratio = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-12));
        assert_eq!(geometric_grid(1.0, 10.0).unwrap().len(), 8);
        assert_eq!(geometric_grid(5.0, 5.0).unwrap(), vec![5.0]);
        assert!(geometric_grid(0.0, 5.0).is_err());
        assert!(geometric_grid(5.0, 1.0).is_err());
    }
}
