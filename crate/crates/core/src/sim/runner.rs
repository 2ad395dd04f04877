use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::cwz::{cwz_mean_from, cwz_regression, ClippedMeanAccumulator, ShardSource};
use crate::error::{invalid, Result};
use crate::lasso::{local_lasso_signs, RegressionShard};
use crate::mean::local_mean_signs;
use crate::privrand::RandomStream;
use crate::vote::{dpvote_with, majority_vote_aggregate, Sign, SignMatrix};

use super::{fdr, gen_mean_shard, gen_regression_shard, power, DataSpec, ExperimentConfig, Method, Problem, TruthSpec};

/// Column order of the results CSV.
pub const CSV_HEADER: [&str; 14] = [
    "problem", "method", "m", "n", "p", "s_tilde", "epsilon", "delta", "lambda_n", "rep", "fdr", "power", "wall_ms",
    "seed",
];

// top-level path labels
const DATA: u64 = 0xDA7A;
const MECHANISM: u64 = 0x3EC4;

/// One replication of one method at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub problem: Problem,
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub s_tilde: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda_n: f64,
    pub rep: usize,
    pub fdr: f64,
    pub power: f64,
    pub wall_ms: u64,
    pub seed: u64,
    /// Index of the sweep point this record belongs to.
    pub point: usize,
}

impl MetricRecord {
    fn csv_fields(&self) -> [String; 14] {
        [
            self.problem.to_string(),
            self.method.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.s_tilde.to_string(),
            self.epsilon.to_string(),
            self.delta.to_string(),
            self.lambda_n.to_string(),
            self.rep.to_string(),
            self.fdr.to_string(),
            self.power.to_string(),
            self.wall_ms.to_string(),
            self.seed.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationFailure {
    pub point: usize,
    pub rep: usize,
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub records: Vec<MetricRecord>,
    pub failures: Vec<ReplicationFailure>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Run replications on the rayon pool.
    pub parallel: bool,
    /// Regression shards are kept in memory for the multi-pass baseline when
    /// `N·p` is at most this many entries; above it they are regenerated on
    /// every pass.
    pub cache_entries: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { parallel: true, cache_entries: 32 << 20 }
    }
}

/// Run `cfg.method` over every sweep point and replication.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_comparison(cfg, &[cfg.method])
}

/// Run several methods on identical data: a replication generates its shards
/// once and every method sees the same draws.
pub fn run_comparison(cfg: &ExperimentConfig, methods: &[Method]) -> Result<ExperimentOutput> {
    run_comparison_with(cfg, methods, RunOptions::default())
}

pub fn run_comparison_with(cfg: &ExperimentConfig, methods: &[Method], options: RunOptions) -> Result<ExperimentOutput> {
    if methods.is_empty() {
        return invalid("no methods to run");
    }
    cfg.validate()?;
    let points = cfg.points()?;
    let groups = data_groups(&points);
    let tasks: Vec<(usize, usize)> =
        (0..groups.len()).flat_map(|g| (0..cfg.replications).map(move |rep| (g, rep))).collect();
    let run = |&(g, rep): &(usize, usize)| run_replication(&points, &groups[g], rep, methods, options);
    let results: Vec<Vec<std::result::Result<MetricRecord, ReplicationFailure>>> =
        if options.parallel { tasks.par_iter().map(run).collect() } else { tasks.iter().map(run).collect() };

    let mut out = ExperimentOutput::default();
    for outcome in results.into_iter().flatten() {
        match outcome {
            Ok(record) => out.records.push(record),
            Err(failure) => out.failures.push(failure),
        }
    }
    let rank = |m: Method| methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    out.records.sort_by_key(|r| (r.point, rank(r.method), r.rep));
    out.failures.sort_by_key(|f| (f.point, f.method.map(rank), f.rep));
    Ok(out)
}

/// Sweep points that see the same data (they differ only in the privacy
/// level) share one preparation per replication.
fn data_groups(points: &[ExperimentConfig]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, point) in points.iter().enumerate() {
        let same = |g: &&mut Vec<usize>| {
            let first = &points[g[0]];
            *first == ExperimentConfig { epsilon: first.epsilon, delta: first.delta, ..point.clone() }
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

fn mechanism_stream(cfg: &ExperimentConfig, point: usize, rep: usize, method: Method) -> RandomStream {
    RandomStream::at(cfg.seed, vec![MECHANISM, point as u64, rep as u64, method.tag()])
}

/// Shared per-replication state: local votes and whatever the baseline needs.
enum Prepared {
    Mean { matrix: Option<SignMatrix>, clipped: ClippedMeanAccumulator },
    Regression { matrix: Option<SignMatrix>, cached: Option<Vec<RegressionShard>> },
}

struct Regenerate<'a> {
    truth: &'a TruthSpec,
    spec: DataSpec,
    stream: &'a RandomStream,
}

impl ShardSource for Regenerate<'_> {
    fn machines(&self) -> usize {
        self.spec.m
    }

    fn n(&self) -> usize {
        self.spec.n
    }

    fn p(&self) -> usize {
        self.truth.p()
    }

    fn for_each(&self, visit: &mut dyn FnMut(&RegressionShard) -> Result<()>) -> Result<()> {
        for j in 0..self.spec.m {
            let shard = gen_regression_shard(self.truth, &self.spec, &mut self.stream.derive(j as u64))?;
            visit(&shard)?;
        }
        Ok(())
    }
}

fn prepare(cfg: &ExperimentConfig, truth: &TruthSpec, data: &RandomStream, methods: &[Method], options: RunOptions) -> Result<Prepared> {
    let spec = cfg.data_spec();
    let votes = methods.iter().any(|&m| m != Method::Cwz);
    let baseline = methods.contains(&Method::Cwz);
    let mut columns = Vec::with_capacity(if votes { spec.m } else { 0 });
    match cfg.problem {
        Problem::Mean => {
            let mut clipped = ClippedMeanAccumulator::new(cfg.p, cfg.truncation);
            for j in 0..spec.m {
                let shard = gen_mean_shard(truth, &spec, &mut data.derive(j as u64))?;
                if votes {
                    columns.push(local_mean_signs(shard.view(), cfg.lambda_n)?);
                }
                if baseline {
                    clipped.add(shard.view());
                }
            }
            let matrix = if votes { Some(SignMatrix::from_columns(&columns)?) } else { None };
            Ok(Prepared::Mean { matrix, clipped })
        }
        Problem::Regression => {
            let cache = baseline && spec.m * spec.n * cfg.p <= options.cache_entries;
            let mut cached = Vec::new();
            for j in 0..spec.m {
                let shard = gen_regression_shard(truth, &spec, &mut data.derive(j as u64))?;
                if votes {
                    columns.push(local_lasso_signs(&shard, cfg.lambda_n, cfg.s_tilde, &cfg.lasso)?);
                }
                if cache {
                    cached.push(shard);
                }
            }
            let matrix = if votes { Some(SignMatrix::from_columns(&columns)?) } else { None };
            Ok(Prepared::Regression { matrix, cached: cache.then_some(cached) })
        }
    }
}

fn estimate(
    cfg: &ExperimentConfig,
    truth: &TruthSpec,
    data: &RandomStream,
    prepared: &Prepared,
    method: Method,
    stream: &mut RandomStream,
) -> Result<Vec<Sign>> {
    let matrix = match prepared {
        Prepared::Mean { matrix, .. } | Prepared::Regression { matrix, .. } => matrix.as_ref(),
    };
    match method {
        Method::Vote => Ok(majority_vote_aggregate(matrix.expect("votes prepared"))),
        Method::DpVote => {
            Ok(dpvote_with(matrix.expect("votes prepared"), &cfg.budget()?, cfg.mechanism_noise, stream)?.into_signs())
        }
        Method::Cwz => {
            let cwz = cfg.cwz()?;
            let selection = match prepared {
                Prepared::Mean { clipped, .. } => cwz_mean_from(clipped, cfg.n, &cwz, stream)?,
                Prepared::Regression { cached: Some(shards), .. } => cwz_regression(&shards[..], &cwz, stream)?,
                Prepared::Regression { cached: None, .. } => {
                    let source = Regenerate { truth, spec: cfg.data_spec(), stream: data };
                    cwz_regression(&source, &cwz, stream)?
                }
            };
            Ok(selection.into_signs())
        }
    }
}

fn run_replication(
    points: &[ExperimentConfig],
    group: &[usize],
    rep: usize,
    methods: &[Method],
    options: RunOptions,
) -> Vec<std::result::Result<MetricRecord, ReplicationFailure>> {
    let first = &points[group[0]];
    let fail_all = |e: crate::Error| {
        group
            .iter()
            .map(|&point| Err(ReplicationFailure { point, rep, method: None, message: e.to_string() }))
            .collect::<Vec<_>>()
    };
    let started = Instant::now();
    let truth = match first.truth() {
        Ok(t) => t,
        Err(e) => return fail_all(e),
    };
    let data = RandomStream::at(first.seed, vec![DATA, rep as u64]);
    let prepared = match prepare(first, &truth, &data, methods, options) {
        Ok(p) => p,
        Err(e) => return fail_all(e),
    };
    let shared = started.elapsed();

    let mut out = Vec::with_capacity(group.len() * methods.len());
    for &point in group {
        let cfg = &points[point];
        let fail = |method: Method, e: crate::Error| ReplicationFailure {
            point,
            rep,
            method: Some(method),
            message: e.to_string(),
        };
        for &method in methods {
            let t0 = Instant::now();
            let mut stream = mechanism_stream(cfg, point, rep, method);
            let record = estimate(cfg, &truth, &data, &prepared, method, &mut stream)
                .and_then(|signs| Ok((fdr(&signs, &truth)?, power(&signs, &truth)?)))
                .map_err(|e| fail(method, e))
                .map(|(fdr, power)| MetricRecord {
                    problem: cfg.problem,
                    method,
                    m: cfg.m,
                    n: cfg.n,
                    p: cfg.p,
                    s_tilde: cfg.s_tilde,
                    epsilon: cfg.epsilon,
                    delta: cfg.delta,
                    lambda_n: cfg.lambda_n,
                    rep,
                    fdr,
                    power,
                    wall_ms: if cfg.record_timing { (shared + t0.elapsed()).as_millis() as u64 } else { 0 },
                    seed: cfg.seed,
                    point,
                });
            out.push(record);
        }
    }
    out
}

/// Write records under [`CSV_HEADER`].
pub fn write_csv<W: Write>(records: &[MetricRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record(r.csv_fields())?;
    }
    writer.flush()?;
    Ok(())
}
