//! Seeded Monte Carlo experiment drivers.
//!
//! Every experiment takes a master seed; row `i` of the resulting grid
//! draws its replicates from `row_seed(master, i)`, so any row is
//! regenerable in isolation. Replicates run in parallel and are
//! aggregated in fixed replicate order.

use crate::analytic;
use crate::clusters::{components, stats, DisjointSetForest};
use crate::error::{Error, Result};
use crate::lattice::upow;
use crate::rng::row_seed;
use crate::sampler::{sample_ball_skip, sample_mixed, Configuration, PercolationParams};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

/// A numeric grid of results plus the provenance needed to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub version: String,
    pub master_seed: u64,
    pub wall_secs: f64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(name: &str, master_seed: u64, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            wall_secs: 0.0,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Value at `(row, column name)`; panics on an unknown column.
    pub fn get(&self, row: usize, column: &str) -> f64 {
        let c = self
            .columns
            .iter()
            .position(|n| n == column)
            .unwrap_or_else(|| panic!("no column {column}"));
        self.rows[row][c]
    }

    pub fn column(&self, column: &str) -> Vec<f64> {
        (0..self.rows.len()).map(|r| self.get(r, column)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: &mut W) -> Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)
            .map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }
}

/// Sample mean and standard error (`sample std / sqrt(n)`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run `replicates` independent draws of `f` in parallel, collecting in
/// replicate order.
fn run_replicates<T, F>(replicates: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..replicates)
        .into_par_iter()
        .map(f)
        .collect::<Result<Vec<T>>>()
}

fn cluster_stats_for(params: &PercolationParams) -> Result<(Configuration, crate::clusters::ClusterStats)> {
    let c = if params.gamma > 0.0 {
        sample_mixed(params)?
    } else {
        sample_ball_skip(params)?
    };
    let mut forest = components(&c)?;
    let s = stats(&mut forest, &c)?;
    Ok((c, s))
}

/// Largest-cluster and origin-cluster fractions over a range of radii.
///
/// For each `k` in `k_range` the report row holds the mean of
/// `|C^m_k(0)| / N^k` and `|C_k(0)| / N^k`, plus the frequency of
/// `|C_k(0)| >= threshold * N^k`.
pub fn fraction_curve(
    params: &PercolationParams,
    k_range: std::ops::RangeInclusive<u32>,
    threshold: f64,
    replicates: u64,
) -> Result<ExperimentReport> {
    if replicates == 0 {
        return Err(Error::Parameter("replicates must be >= 1".into()));
    }
    let start = Instant::now();
    let mut report = ExperimentReport::new(
        "fraction_curve",
        params.seed,
        &[
            "k",
            "max_fraction",
            "max_fraction_se",
            "origin_fraction",
            "origin_fraction_se",
            "threshold_prob",
            "threshold_prob_se",
            "replicates",
        ],
    );
    for (row, k) in k_range.enumerate() {
        let mut p = *params;
        p.radius = k;
        p.seed = row_seed(params.seed, row as u64);
        let size = p.vertex_count()? as f64;
        let cut = threshold * size;
        let samples = run_replicates(replicates, |r| {
            let (_, s) = cluster_stats_for(&p.with_replicate(r))?;
            Ok((
                s.max_cluster_size as f64 / size,
                s.origin_cluster_size as f64 / size,
                (s.origin_cluster_size as f64 >= cut) as u8 as f64,
            ))
        })?;
        let (mf, mf_se) = mean_se(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
        let (of, of_se) = mean_se(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
        let (tp, tp_se) = mean_se(&samples.iter().map(|s| s.2).collect::<Vec<_>>());
        report
            .rows
            .push(vec![k as f64, mf, mf_se, of, of_se, tp, tp_se, replicates as f64]);
    }
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Labels of the origin's cluster using only edges internal to the
/// radius-`j` sub-ball at the origin.
fn origin_cluster_within(c: &Configuration, j_size: u64) -> Result<Vec<u64>> {
    let mut forest = DisjointSetForest::new(j_size as usize)?;
    for &(u, v) in &c.edges {
        if v < j_size {
            forest.union(u as usize, v as usize);
        }
    }
    if !c.is_open(0) {
        return Ok(Vec::new());
    }
    Ok((0..j_size)
        .filter(|&x| c.is_open(x) && forest.connected(0, x as usize))
        .collect())
}

/// Escape probabilities of the origin ball and of the origin cluster.
///
/// Per `j`: the frequency of any edge leaving `B_j(0)` (`ball_escape`),
/// the frequency of an edge from `C_j(0)` leaving the ball
/// (`cluster_escape`), the empirical expectation form
/// `E[1 - exp(-|C_j(0)| * truncated per-vertex exponent)]`
/// (`expectation_form`), and the truncated closed form of the ball
/// escape (`analytic_ball`). All events are read off a radius-`horizon`
/// configuration.
pub fn survival_curve(
    params: &PercolationParams,
    j_range: std::ops::RangeInclusive<u32>,
    horizon: u32,
    replicates: u64,
) -> Result<ExperimentReport> {
    if *j_range.end() >= horizon {
        return Err(Error::Parameter(format!(
            "radius range must stay below horizon {horizon}"
        )));
    }
    let start = Instant::now();
    let mut report = ExperimentReport::new(
        "survival_curve",
        params.seed,
        &[
            "j",
            "ball_escape",
            "ball_escape_se",
            "cluster_escape",
            "cluster_escape_se",
            "expectation_form",
            "expectation_form_se",
            "analytic_ball",
            "replicates",
        ],
    );
    for (row, j) in j_range.enumerate() {
        let mut p = *params;
        p.radius = horizon;
        p.seed = row_seed(params.seed, row as u64);
        let j_size = upow(p.order as u64, j)?;
        let samples = run_replicates(replicates, |r| {
            let c = if p.gamma > 0.0 {
                sample_mixed(&p.with_replicate(r))?
            } else {
                sample_ball_skip(&p.with_replicate(r))?
            };
            let ball_escape = c.edges.iter().any(|&(u, v)| u < j_size && v >= j_size);
            let cluster = origin_cluster_within(&c, j_size)?;
            let cluster_escape = c
                .edges
                .iter()
                .any(|&(u, v)| v >= j_size && cluster.binary_search(&u).is_ok());
            let expectation = analytic::cluster_escape_prob(
                p.order,
                p.alpha,
                p.beta,
                cluster.len() as f64,
                j,
                Some(horizon),
            )?;
            Ok((ball_escape as u8 as f64, cluster_escape as u8 as f64, expectation))
        })?;
        let (be, be_se) = mean_se(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
        let (ce, ce_se) = mean_se(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
        let (ef, ef_se) = mean_se(&samples.iter().map(|s| s.2).collect::<Vec<_>>());
        let analytic_ball = analytic::ball_escape_prob(p.order, p.alpha, p.beta, j, Some(horizon))?;
        report.rows.push(vec![
            j as f64,
            be,
            be_se,
            ce,
            ce_se,
            ef,
            ef_se,
            analytic_ball,
            replicates as f64,
        ]);
    }
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Phase verdict of [`estimate_alpha_c`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AlphaCVerdict {
    /// `beta <= N`: the critical value is 0.
    Zero,
    /// `N < beta < N^2`: bisection interval `(lo, hi)`.
    Interval(f64, f64),
    /// `beta >= N^2`: no percolation at any `alpha`.
    Infinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaCEstimate {
    pub verdict: AlphaCVerdict,
    /// Analytic lower bound `(beta - N)/(N - 1)` (0 outside the
    /// nontrivial regime).
    pub lower_bound: f64,
    pub report: ExperimentReport,
}

/// The frozen supercriticality criterion: the mean largest-cluster
/// fraction does not drop significantly between radius `k` and `k + 2`.
/// "Significantly" is a one-sided 3-standard-error test, so a flat or
/// growing fraction reads as supercritical.
fn crossing_is_supercritical(
    order: u32,
    alpha: f64,
    beta: f64,
    k: u32,
    replicates: u64,
    seed: u64,
) -> Result<(bool, f64, f64, f64)> {
    let fraction_at = |radius: u32, sub: u64| -> Result<(f64, f64)> {
        let p = PercolationParams::new(order, alpha, beta, radius).with_seed(row_seed(seed, sub));
        let size = p.vertex_count()? as f64;
        let samples = run_replicates(replicates, |r| {
            let (_, s) = cluster_stats_for(&p.with_replicate(r))?;
            Ok(s.max_cluster_size as f64 / size)
        })?;
        Ok(mean_se(&samples))
    };
    let (f1, se1) = fraction_at(k, 0)?;
    let (f2, se2) = fraction_at(k + 2, 1)?;
    let se_diff = (se1 * se1 + se2 * se2).sqrt();
    Ok((f2 - f1 >= -3.0 * se_diff, f1, f2, se_diff))
}

/// Finite-size bisection estimate of the critical `alpha`.
///
/// Outside the nontrivial regime the phase-diagram verdict is returned
/// without sampling. Inside it, the crossing criterion above is
/// bisected over `bracket`; the bracket must straddle the crossing
/// (subcritical at its lower end, supercritical at its upper end).
pub fn estimate_alpha_c(
    order: u32,
    beta: f64,
    k: u32,
    replicates: u64,
    bracket: (f64, f64),
    seed: u64,
) -> Result<AlphaCEstimate> {
    if order < 2 {
        return Err(Error::Parameter(format!("order must be >= 2, got {order}")));
    }
    let n = order as f64;
    let start = Instant::now();
    let mut report = ExperimentReport::new(
        "alpha_c",
        seed,
        &["alpha", "fraction_k", "fraction_k2", "se_diff", "supercritical"],
    );
    let lower_bound = analytic::alpha_c_lower_bound(order, beta)?;
    if beta <= n {
        report.notes.push("beta <= N: alpha_c = 0".into());
        report.wall_secs = start.elapsed().as_secs_f64();
        return Ok(AlphaCEstimate {
            verdict: AlphaCVerdict::Zero,
            lower_bound,
            report,
        });
    }
    if beta >= n * n {
        report.notes.push("beta >= N^2: no percolation at any alpha".into());
        report.wall_secs = start.elapsed().as_secs_f64();
        return Ok(AlphaCEstimate {
            verdict: AlphaCVerdict::Infinite,
            lower_bound,
            report,
        });
    }
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Parameter(format!("bad bracket ({lo}, {hi})")));
    }
    let probe = |alpha: f64, step: u64, report: &mut ExperimentReport| -> Result<bool> {
        let (sup, f1, f2, se) =
            crossing_is_supercritical(order, alpha, beta, k, replicates, row_seed(seed, step))?;
        report.rows.push(vec![alpha, f1, f2, se, sup as u8 as f64]);
        Ok(sup)
    };
    if probe(lo, 0, &mut report)? {
        return Err(Error::Parameter(format!(
            "bracket lower end {lo} already reads supercritical"
        )));
    }
    if !probe(hi, 1, &mut report)? {
        return Err(Error::Parameter(format!(
            "bracket upper end {hi} does not read supercritical"
        )));
    }
    for step in 2..12u64 {
        let mid = 0.5 * (lo + hi);
        if probe(mid, step, &mut report)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    report.notes.push(format!(
        "interval ({lo}, {hi}); analytic lower bound {lower_bound}"
    ));
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(AlphaCEstimate {
        verdict: AlphaCVerdict::Interval(lo, hi),
        lower_bound,
        report,
    })
}

/// Mean origin-cluster size across radii, with the growth ratio between
/// successive radii as a divergence proxy.
pub fn mean_cluster_size(
    params: &PercolationParams,
    k_range: std::ops::RangeInclusive<u32>,
    replicates: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new(
        "mean_cluster",
        params.seed,
        &["k", "mean_size", "mean_size_se", "growth_ratio", "replicates"],
    );
    let mut prev: Option<f64> = None;
    for (row, k) in k_range.enumerate() {
        let mut p = *params;
        p.radius = k;
        p.seed = row_seed(params.seed, row as u64);
        let samples = run_replicates(replicates, |r| {
            let (_, s) = cluster_stats_for(&p.with_replicate(r))?;
            Ok(s.origin_cluster_size as f64)
        })?;
        let (mean, se) = mean_se(&samples);
        let ratio = prev.map_or(f64::NAN, |p| mean / p);
        prev = Some(mean);
        report
            .rows
            .push(vec![k as f64, mean, se, ratio, replicates as f64]);
    }
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// One replicate of the meta-graph construction; returns
/// `(meta_vertices, giant_fraction, mean_degree)` or `None` when fewer
/// than two meta-vertices qualify.
fn meta_replicate(
    params: &PercolationParams,
    n: u32,
    threshold: f64,
) -> Result<Option<(f64, f64, f64)>> {
    let c = sample_ball_skip(params)?;
    let sub_size = upow(params.order as u64, n)?;
    // clusters from edges internal to the radius-n sub-balls only; the
    // length-(n+1) edges are held back for the meta level
    let total = params.vertex_count()?;
    let mut forest = DisjointSetForest::new(total as usize)?;
    for &(u, v) in &c.edges {
        if u / sub_size == v / sub_size {
            forest.union(u as usize, v as usize);
        }
    }
    let piece = threshold.ceil().max(1.0) as u64;
    // group vertices by root, in label order (a selection rule blind to
    // the held-back edges)
    let mut by_root: std::collections::HashMap<usize, Vec<u64>> = std::collections::HashMap::new();
    for x in 0..total {
        by_root.entry(forest.find(x as usize)).or_default().push(x);
    }
    let mut meta_of = vec![usize::MAX; total as usize];
    let mut meta_count = 0usize;
    let mut sub_ball_of = Vec::new();
    let mut roots: Vec<&Vec<u64>> = by_root.values().collect();
    roots.sort_by_key(|m| m[0]);
    for members in roots {
        if (members.len() as f64) <= threshold {
            continue;
        }
        let pieces = (members.len() as u64 / piece).max(1) as usize;
        for (i, &x) in members.iter().enumerate() {
            // remainder vertices join the last piece
            let idx = (i / piece as usize).min(pieces - 1);
            meta_of[x as usize] = meta_count + idx;
        }
        for _ in 0..pieces {
            sub_ball_of.push(members[0] / sub_size);
        }
        meta_count += pieces;
    }
    if meta_count < 2 {
        return Ok(None);
    }
    let mut meta_forest = DisjointSetForest::new(meta_count)?;
    let mut meta_pairs = std::collections::HashSet::new();
    for &(u, v) in &c.edges {
        if u / sub_size == v / sub_size {
            continue;
        }
        let (a, b) = (meta_of[u as usize], meta_of[v as usize]);
        if a == usize::MAX || b == usize::MAX || a == b {
            continue;
        }
        debug_assert_ne!(sub_ball_of[a], sub_ball_of[b]);
        meta_forest.union(a, b);
        meta_pairs.insert((a.min(b), a.max(b)));
    }
    let giant = (0..meta_count)
        .map(|m| meta_forest.component_size(m))
        .max()
        .unwrap() as f64
        / meta_count as f64;
    let mean_degree = 2.0 * meta_pairs.len() as f64 / meta_count as f64;
    Ok(Some((meta_count as f64, giant, mean_degree)))
}

/// Renormalize large sub-ball clusters into meta-vertices and compare
/// the giant meta-component fraction with the mean-field prediction at
/// the measured mean meta-degree.
///
/// Per replicate, the ball `B_(n+1)(0)` is sampled; within each
/// radius-`n` sub-ball, every cluster larger than `big_k (beta/N)^n` is
/// cut into pieces of `ceil(big_k (beta/N)^n)` vertices in label order,
/// and pieces in different sub-balls are joined iff a length-`(n+1)`
/// edge joins them. Replicates with fewer than two meta-vertices are
/// counted as degenerate and excluded from the averages.
pub fn meta_graph_experiment(
    params: &PercolationParams,
    n: u32,
    big_k: f64,
    replicates: u64,
) -> Result<ExperimentReport> {
    if big_k <= 0.0 {
        return Err(Error::Parameter(format!("K must be > 0, got {big_k}")));
    }
    let start = Instant::now();
    let nf = params.order as f64;
    if !(nf < params.beta && params.beta < nf * nf) {
        return Err(Error::Parameter(format!(
            "meta-graph experiment needs N < beta < N^2, got N={}, beta={}",
            params.order, params.beta
        )));
    }
    let threshold = big_k * (params.beta / nf).powi(n as i32);
    let mut p = *params;
    p.radius = n + 1;
    let outcomes = run_replicates(replicates, |r| meta_replicate(&p.with_replicate(r), n, threshold))?;
    let kept: Vec<(f64, f64, f64)> = outcomes.iter().filter_map(|o| *o).collect();
    let degenerate = (replicates as usize - kept.len()) as f64;
    let mut report = ExperimentReport::new(
        "meta_graph",
        params.seed,
        &[
            "n",
            "meta_vertices",
            "giant_fraction",
            "giant_fraction_se",
            "mean_degree",
            "predicted_fraction",
            "degenerate",
            "replicates",
        ],
    );
    let (mv, _) = mean_se(&kept.iter().map(|s| s.0).collect::<Vec<_>>());
    let (gf, gf_se) = mean_se(&kept.iter().map(|s| s.1).collect::<Vec<_>>());
    let (md, _) = mean_se(&kept.iter().map(|s| s.2).collect::<Vec<_>>());
    let predicted = if kept.is_empty() {
        f64::NAN
    } else {
        analytic::giant_fraction(md)?
    };
    report.rows.push(vec![
        n as f64,
        mv,
        gf,
        gf_se,
        md,
        predicted,
        degenerate,
        replicates as f64,
    ]);
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Side-by-side origin-cluster survival proxies of the plain model at
/// `(alpha, beta)` and the mixed model at `(alpha (1+eps), beta, gamma)`
/// with `gamma` chosen so the two out-degree couplings share their zero
/// class. For each threshold `s` the report row compares
/// `P(|C_k(0)| >= s)` and flags whether the mixed model dominates
/// within 3 standard errors. Threshold 1 is degenerate — the plain
/// model reaches it with probability 1 while the mixed origin may be
/// closed — so meaningful thresholds start at 2.
pub fn mixed_comparison(
    params: &PercolationParams,
    epsilon: f64,
    k: u32,
    thresholds: &[u64],
    replicates: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let coupling = analytic::gamma_for_epsilon(params.order, params.alpha, params.beta, epsilon)?;
    let mut plain = *params;
    plain.radius = k;
    plain.gamma = 0.0;
    plain.seed = row_seed(params.seed, 0);
    let mut mixed = plain;
    mixed.alpha = params.alpha * (1.0 + epsilon);
    mixed.gamma = coupling.gamma;
    mixed.seed = row_seed(params.seed, 1);
    let plain_sizes = run_replicates(replicates, |r| {
        let (_, s) = cluster_stats_for(&plain.with_replicate(r))?;
        Ok(s.origin_cluster_size)
    })?;
    let mixed_sizes = run_replicates(replicates, |r| {
        let (_, s) = cluster_stats_for(&mixed.with_replicate(r))?;
        Ok(s.origin_cluster_size)
    })?;
    let mut report = ExperimentReport::new(
        "mixed_compare",
        params.seed,
        &[
            "threshold",
            "plain_prob",
            "plain_se",
            "mixed_prob",
            "mixed_se",
            "dominates",
            "replicates",
        ],
    );
    report.notes.push(format!(
        "gamma = {} from epsilon = {epsilon} (lambda1 = {}, lambda2 = {})",
        coupling.gamma, coupling.lambda1, coupling.lambda2
    ));
    for &s in thresholds {
        let ind = |sizes: &[u64]| -> (f64, f64) {
            mean_se(&sizes.iter().map(|&x| (x >= s) as u8 as f64).collect::<Vec<_>>())
        };
        let (pp, pp_se) = ind(&plain_sizes);
        let (mp, mp_se) = ind(&mixed_sizes);
        let se_diff = (pp_se * pp_se + mp_se * mp_se).sqrt();
        let dominates = mp >= pp - 3.0 * se_diff;
        report.rows.push(vec![
            s as f64,
            pp,
            pp_se,
            mp,
            mp_se,
            dominates as u8 as f64,
            replicates as f64,
        ]);
    }
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(report)
}
