use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_with_truth, Dependence, GenSpec};
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::estimator::{fit, SolverConfig};

/// Draws per replicate before a degenerate-degree replicate counts as failed.
pub const MAX_ATTEMPTS: u64 = 10;

const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    pub attempts: u64,
    pub beta_err_inf: f64,
    pub gamma_err_inf: f64,
    pub gamma_bc_err_inf: f64,
    pub gamma_hat: Vec<f64>,
    pub gamma_bc: Vec<f64>,
    pub se_gamma: Vec<f64>,
    /// `None` in noise-free runs.
    pub covered: Option<Vec<bool>>,
    pub covered_bc: Option<Vec<bool>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub n: usize,
    pub replicate: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub replicates: usize,
    pub failures: usize,
    pub median_beta_err: f64,
    pub median_gamma_err: f64,
    pub median_gamma_bc_err: f64,
    pub coverage: Option<Vec<f64>>,
    pub coverage_bc: Option<Vec<f64>>,
    /// Mean of `gamma_hat - gamma*` and of `gamma_bc - gamma*`.
    pub mean_bias: Vec<f64>,
    pub mean_bias_bc: Vec<f64>,
    pub sd_gamma_bc: Vec<f64>,
    pub median_se_gamma: Vec<f64>,
}

/// Least-squares slopes on the log-log scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSlopes {
    /// Median `|beta_hat - beta*|_inf` against `sqrt(log n / n)`.
    pub beta_vs_sqrt_log_n_over_n: f64,
    /// Median `|gamma_bc - gamma*|_inf` against `1 / n`.
    pub gamma_bc_vs_inv_n: f64,
    pub gamma_vs_inv_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStudyReport {
    pub family: EdgeFamily,
    pub dependence: Dependence,
    pub noise_free: bool,
    pub replicates: usize,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<FailureRecord>,
    pub summaries: Vec<NSummary>,
    pub rates: Option<RateSlopes>,
}

enum Outcome {
    Record(ReplicateRecord),
    Failure(FailureRecord),
}

fn stream_id(base: u64, grid: usize, replicate: usize, attempt: u64) -> u64 {
    base.wrapping_add(((grid as u64) << 48) | ((replicate as u64) << 8) | attempt)
}

fn sup_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn run_one(spec: &GenSpec, grid: usize, replicate: usize, config: &SolverConfig) -> Result<Outcome> {
    let failure = |reason: String| Outcome::Failure(FailureRecord { n: spec.n, replicate, reason });
    for attempt in 0..MAX_ATTEMPTS {
        let draw = GenSpec { stream: stream_id(spec.stream, grid, replicate, attempt), ..spec.clone() };
        let sim = generate_with_truth(&draw)?;
        if !sim.data.degenerate_nodes(spec.family).is_empty() {
            continue;
        }
        let res = match fit(&sim.data, spec.family, config, None) {
            Ok(res) => res,
            Err(Error::DegenerateDegrees { .. }) => continue,
            Err(e) => return Ok(failure(e.to_string())),
        };
        let truth = &sim.truth.gamma;
        let gamma_bc = res.gamma_bc.clone().unwrap_or_else(|| res.params.gamma.clone());
        let cover = |est: &[f64]| -> Vec<bool> {
            est.iter()
                .zip(&res.se_gamma)
                .zip(truth)
                .map(|((g, se), t)| (g - t).abs() <= Z_95 * se)
                .collect()
        };
        let (covered, covered_bc) = if spec.noise_free {
            (None, None)
        } else {
            (Some(cover(&res.params.gamma)), Some(cover(&gamma_bc)))
        };
        return Ok(Outcome::Record(ReplicateRecord {
            n: spec.n,
            replicate,
            attempts: attempt + 1,
            beta_err_inf: sup_err(&res.params.beta, &sim.truth.beta),
            gamma_err_inf: sup_err(&res.params.gamma, truth),
            gamma_bc_err_inf: sup_err(&gamma_bc, truth),
            gamma_hat: res.params.gamma.clone(),
            gamma_bc,
            se_gamma: res.se_gamma.clone(),
            covered,
            covered_bc,
            iterations: res.iterations,
        }));
    }
    Ok(failure(format!("degenerate degrees in {MAX_ATTEMPTS} consecutive draws")))
}

/// Worker count from `NETMOMENT_THREADS`, falling back to rayon's default.
pub(crate) fn thread_cap() -> Option<usize> {
    std::env::var("NETMOMENT_THREADS").ok()?.trim().parse().ok().filter(|&t| t > 0)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn summarize(n: usize, replicates: usize, p: usize, truth: &[f64], recs: &[&ReplicateRecord], failures: usize) -> NSummary {
    let med = |f: &dyn Fn(&ReplicateRecord) -> f64| median(&mut recs.iter().map(|r| f(r)).collect::<Vec<_>>());
    let count = recs.len() as f64;
    let rate = |pick: &dyn Fn(&ReplicateRecord) -> Option<&Vec<bool>>| -> Option<Vec<f64>> {
        let rows: Option<Vec<&Vec<bool>>> = recs.iter().map(|r| pick(r)).collect();
        let rows = rows?;
        Some((0..p).map(|c| rows.iter().filter(|v| v[c]).count() as f64 / count).collect())
    };
    let mean_of = |c: usize, pick: &dyn Fn(&ReplicateRecord) -> &Vec<f64>| {
        recs.iter().map(|r| pick(r)[c]).sum::<f64>() / count
    };
    let sd_bc = (0..p)
        .map(|c| {
            let m = mean_of(c, &|r| &r.gamma_bc);
            let ss: f64 = recs.iter().map(|r| (r.gamma_bc[c] - m).powi(2)).sum();
            (ss / (count - 1.0).max(1.0)).sqrt()
        })
        .collect();
    NSummary {
        n,
        replicates,
        failures,
        median_beta_err: med(&|r| r.beta_err_inf),
        median_gamma_err: med(&|r| r.gamma_err_inf),
        median_gamma_bc_err: med(&|r| r.gamma_bc_err_inf),
        coverage: rate(&|r| r.covered.as_ref()),
        coverage_bc: rate(&|r| r.covered_bc.as_ref()),
        mean_bias: (0..p).map(|c| mean_of(c, &|r| &r.gamma_hat) - truth[c]).collect(),
        mean_bias_bc: (0..p).map(|c| mean_of(c, &|r| &r.gamma_bc) - truth[c]).collect(),
        sd_gamma_bc: sd_bc,
        median_se_gamma: (0..p).map(|c| median(&mut recs.iter().map(|r| r.se_gamma[c]).collect::<Vec<_>>())).collect(),
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub(crate) fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn rates(summaries: &[NSummary]) -> Option<RateSlopes> {
    let mut ns: Vec<usize> = summaries.iter().map(|s| s.n).collect();
    ns.dedup();
    if ns.len() < 2 {
        return None;
    }
    let slope = |x: &dyn Fn(f64) -> f64, y: &dyn Fn(&NSummary) -> f64| {
        let pts: Vec<(f64, f64)> = summaries.iter().map(|s| (x(s.n as f64), y(s))).collect();
        log_log_slope(&pts)
    };
    Some(RateSlopes {
        beta_vs_sqrt_log_n_over_n: slope(&|n| (n.ln() / n).sqrt(), &|s| s.median_beta_err),
        gamma_bc_vs_inv_n: slope(&|n| 1.0 / n, &|s| s.median_gamma_bc_err),
        gamma_vs_inv_n: slope(&|n| 1.0 / n, &|s| s.median_gamma_err),
    })
}

/// Fits `replicates` generated networks per grid entry. Replicates run in
/// parallel; each draws from its own stream, so the report does not depend
/// on the number of workers. All grid entries must share the family,
/// dependence, noise mode and `gamma*`.
pub fn run_mc_study(grid: &[GenSpec], replicates: usize, config: &SolverConfig) -> Result<McStudyReport> {
    if replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let first = grid.first().ok_or_else(|| Error::Config("study grid is empty".into()))?;
    config.validate()?;
    for spec in grid {
        spec.validate()?;
        if spec.family != first.family
            || spec.dependence != first.dependence
            || spec.noise_free != first.noise_free
            || spec.gamma_star != first.gamma_star
        {
            return Err(Error::Config(
                "grid entries must share family, dependence, noise mode and gamma_star".into(),
            ));
        }
    }
    let jobs: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|g| (0..replicates).map(move |r| (g, r))).collect();
    let work = || -> Result<Vec<Outcome>> {
        jobs.par_iter().map(|&(g, r)| run_one(&grid[g], g, r, config)).collect()
    };
    let outcomes = match thread_cap() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Record(r) => records.push(r),
            Outcome::Failure(f) => failures.push(f),
        }
    }
    records.sort_by_key(|r| (r.n, r.replicate));
    failures.sort_by_key(|f| (f.n, f.replicate));

    let mut ns: Vec<usize> = grid.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let p = first.gamma_star.len();
    let mut summaries = Vec::with_capacity(ns.len());
    for &n in &ns {
        let recs: Vec<&ReplicateRecord> = records.iter().filter(|r| r.n == n).collect();
        let failed = failures.iter().filter(|f| f.n == n).count();
        if recs.is_empty() {
            return Err(Error::AllReplicatesFailed { n });
        }
        summaries.push(summarize(n, recs.len() + failed, p, &first.gamma_star, &recs, failed));
    }
    let rates = rates(&summaries);
    Ok(McStudyReport {
        family: first.family,
        dependence: first.dependence,
        noise_free: first.noise_free,
        replicates,
        records,
        failures,
        summaries,
        rates,
    })
}

impl McStudyReport {
    /// One row per replicate, failures included with empty estimates.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let p = self.summaries.first().map_or(0, |s| s.mean_bias.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["n", "replicate", "status", "attempts", "beta_err_inf", "gamma_err_inf", "gamma_bc_err_inf"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for prefix in ["gamma_hat", "gamma_bc", "se_gamma", "covered", "covered_bc"] {
            header.extend((1..=p).map(|k| format!("{prefix}_{k}")));
        }
        header.push("reason".into());
        w.write_record(&header)?;
        let flag = |v: &Option<Vec<bool>>, k: usize| v.as_ref().map_or(String::new(), |v| u8::from(v[k]).to_string());
        let mut rows: Vec<(usize, usize, Vec<String>)> = Vec::new();
        for r in &self.records {
            let mut row = vec![
                r.n.to_string(),
                r.replicate.to_string(),
                "ok".into(),
                r.attempts.to_string(),
                r.beta_err_inf.to_string(),
                r.gamma_err_inf.to_string(),
                r.gamma_bc_err_inf.to_string(),
            ];
            for v in [&r.gamma_hat, &r.gamma_bc, &r.se_gamma] {
                row.extend(v.iter().map(|x| x.to_string()));
            }
            row.extend((0..p).map(|k| flag(&r.covered, k)));
            row.extend((0..p).map(|k| flag(&r.covered_bc, k)));
            row.push(String::new());
            rows.push((r.n, r.replicate, row));
        }
        for f in &self.failures {
            let mut row = vec![f.n.to_string(), f.replicate.to_string(), "failed".into()];
            row.extend(std::iter::repeat_n(String::new(), 4 + 5 * p));
            row.push(f.reason.clone());
            rows.push((f.n, f.replicate, row));
        }
        rows.sort_by_key(|r| (r.0, r.1));
        for (_, _, row) in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
