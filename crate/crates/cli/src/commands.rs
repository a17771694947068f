//! One function per subcommand, each rendering its tables in memory.

use spinthermal::ensemble::{
    distance_sweep, run_ensemble, two_spin_phase_map, CellStats, EnergyCurve, EnsembleRun,
    RealizationFailure, RealizationRecord,
};
use spinthermal::entanglement::{
    analytic_chi, threshold_beta, threshold_beta_delta_e, ThresholdResult,
};
use spinthermal::hamiltonians::PairSpec;
use spinthermal::Error;

use crate::output::{num, opt, Files, Table};
use crate::params::{Kind, Params};
use crate::Failure;

pub struct Outcome {
    pub files: Files,
    /// Realizations that could not be computed; their rows are absent.
    pub failures: Vec<RealizationFailure>,
}

fn core_err(e: Error) -> Failure {
    match e {
        Error::InvalidParameter(_) | Error::ZeroCoupling | Error::SiteOutOfRange { .. } => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Compute(other.into()),
    }
}

fn render(kind: Kind, params: &Params, tables: Vec<Table>) -> Result<Files, Failure> {
    tables
        .into_iter()
        .map(|t| Ok((format!("{}.csv", t.name), t.render(kind, params)?)))
        .collect::<anyhow::Result<Files>>()
        .map_err(Failure::Compute)
}

pub fn execute(kind: Kind, params: &Params, max_sites: usize) -> Result<Outcome, Failure> {
    params.validate(kind)?;
    if kind.uses_chain() {
        let config = params.ensemble_config(kind, max_sites);
        // resource and shape checks happen here, before any diagonalization
        config.validate().map_err(core_err)?;
    }
    let (tables, failures) = match kind {
        Kind::TwoSpin => (two_spin(params)?, Vec::new()),
        Kind::Threshold => (threshold(params)?, Vec::new()),
        Kind::Chain | Kind::Fit | Kind::Ensemble => {
            let config = params.ensemble_config(kind, max_sites);
            let run = run_ensemble(&config).map_err(core_err)?;
            let tables = match kind {
                Kind::Chain => vec![points_table(&run.records), fields_table(&run.records)],
                Kind::Fit => vec![fit_table(&run.records), stats_table(&run.stats)],
                _ => vec![
                    stats_table(&run.stats),
                    crossings_table(&run, &config.lambdas),
                    points_table(&run.records),
                    fields_table(&run.records),
                ],
            };
            (tables, run.failures)
        }
        Kind::Distance => {
            let config = params.ensemble_config(kind, max_sites);
            let table = distance_sweep(&config).map_err(core_err)?;
            let mut vanishing = Table::new("vanishing", &["lambda", "beta", "n_star"]);
            for v in &table.vanishing {
                vanishing.push(vec![
                    num(v.lambda),
                    num(v.beta),
                    v.n_star
                        .map(|n| n.to_string())
                        .unwrap_or_else(|| "none".into()),
                ]);
            }
            let tables = vec![
                stats_table(&table.run.stats),
                vanishing,
                points_table(&table.run.records),
            ];
            (tables, table.run.failures)
        }
    };
    let mut files = render(kind, params, tables)?;
    if !failures.is_empty() {
        let mut t = Table::new("failures", &["lambda", "realization", "seed", "message"]);
        for f in &failures {
            t.push(vec![
                num(f.lambda),
                f.index.to_string(),
                f.seed.to_string(),
                f.message.clone(),
            ]);
        }
        files.extend(render(kind, params, vec![t])?);
    }
    Ok(Outcome { files, failures })
}

/// Columns: `delta_h, h1, h2, beta, concurrence, eof, chi`; detuning-major.
fn two_spin(p: &Params) -> Result<Vec<Table>, Failure> {
    let cells = two_spin_phase_map(p.j, p.gamma, p.hsum, &p.delta_h, &p.betas).map_err(core_err)?;
    let mut t = Table::new(
        "two_spin",
        &["delta_h", "h1", "h2", "beta", "concurrence", "eof", "chi"],
    );
    for c in cells {
        let spec = PairSpec::new(p.j, p.gamma, c.h1, c.h2).map_err(core_err)?;
        let chi = analytic_chi(&spec, c.beta).map_err(core_err)?;
        t.push(vec![
            num(c.delta_h),
            num(c.h1),
            num(c.h2),
            num(c.beta),
            num(c.concurrence),
            num(c.eof),
            num(chi),
        ]);
    }
    Ok(vec![t])
}

fn status(r: &Result<ThresholdResult, Error>) -> &'static str {
    match r {
        Ok(ThresholdResult::Finite { .. }) => "finite",
        Ok(ThresholdResult::None) => "none",
        Err(Error::IndeterminateThreshold { .. }) => "indeterminate",
        Err(_) => "error",
    }
}

/// One row per detuning. `beta_c` is empty unless `status` is `finite`; the
/// `(βΔE)_c` columns are filled only for `h1 + h2 = 0` and `J > 0`.
fn threshold(p: &Params) -> Result<Vec<Table>, Failure> {
    let mut t = Table::new(
        "threshold",
        &[
            "delta_h",
            "h1",
            "h2",
            "status",
            "beta_c",
            "residual",
            "delta_e_status",
            "beta_delta_e_c",
            "routes_consistent",
        ],
    );
    for &dh in &p.delta_h {
        let spec = PairSpec::from_detuning(p.j, p.gamma, dh, p.hsum).map_err(core_err)?;
        let r = threshold_beta(&spec);
        if let Err(e) = &r {
            if !matches!(e, Error::IndeterminateThreshold { .. }) {
                return Err(Failure::Compute(anyhow::anyhow!(
                    "threshold at delta_h = {dh}: {e}"
                )));
            }
        }
        let (root, residual) = match r {
            Ok(ThresholdResult::Finite { root, residual }) => (Some(root), Some(residual)),
            _ => (None, None),
        };
        let (de_status, de_root, consistent) = if p.hsum == 0.0 && p.j > 0.0 {
            let d = threshold_beta_delta_e(p.gamma, dh).map(|d| (d.result, d.consistent));
            match d {
                Ok((res, ok)) => (status(&Ok(res)).to_string(), res.root(), ok.to_string()),
                Err(e) => (status(&Err(e)).to_string(), None, String::new()),
            }
        } else {
            (String::new(), None, String::new())
        };
        t.push(vec![
            num(dh),
            num(spec.h1),
            num(spec.h2),
            status(&r).into(),
            opt(root),
            opt(residual),
            de_status,
            opt(de_root),
            consistent,
        ]);
    }
    Ok(vec![t])
}

const POINT_COLUMNS: [&str; 12] = [
    "lambda",
    "realization",
    "seed",
    "beta",
    "separation",
    "site_i",
    "site_j",
    "concurrence",
    "eof",
    "purity",
    "ebar",
    "normalized_energy",
];

fn points_table(records: &[RealizationRecord]) -> Table {
    let mut t = Table::new("points", &POINT_COLUMNS);
    for r in records {
        for p in &r.points {
            t.push(vec![
                num(r.lambda),
                r.index.to_string(),
                r.seed.to_string(),
                num(p.beta),
                p.separation.to_string(),
                p.site_i.to_string(),
                p.site_j.to_string(),
                num(p.concurrence),
                num(p.eof),
                num(p.purity),
                num(p.ebar),
                num(p.normalized_energy),
            ]);
        }
    }
    t
}

fn fields_table(records: &[RealizationRecord]) -> Table {
    let mut t = Table::new("fields", &["lambda", "realization", "seed", "site", "h"]);
    for r in records {
        for (k, h) in r.fields.iter().enumerate() {
            t.push(vec![
                num(r.lambda),
                r.index.to_string(),
                r.seed.to_string(),
                (k + 1).to_string(),
                num(*h),
            ]);
        }
    }
    t
}

fn fit_table(records: &[RealizationRecord]) -> Table {
    let mut t = Table::new(
        "fit",
        &[
            "lambda",
            "realization",
            "seed",
            "beta",
            "separation",
            "site_i",
            "site_j",
            "alpha1",
            "alpha2",
            "d_unfitted",
            "d_fitted",
            "iterations",
            "converged",
        ],
    );
    for r in records {
        for p in &r.points {
            let Some(f) = &p.fit else { continue };
            t.push(vec![
                num(r.lambda),
                r.index.to_string(),
                r.seed.to_string(),
                num(p.beta),
                p.separation.to_string(),
                p.site_i.to_string(),
                p.site_j.to_string(),
                num(f.alpha1),
                num(f.alpha2),
                num(f.d_unfitted),
                num(f.d_fitted),
                f.iterations.to_string(),
                f.converged.to_string(),
            ]);
        }
    }
    t
}

fn stats_table(stats: &[CellStats]) -> Table {
    let mut t = Table::new(
        "stats",
        &[
            "lambda",
            "beta",
            "separation",
            "count",
            "mean_eof",
            "var_eof",
            "stderr_eof",
            "min_eof",
            "max_eof",
            "mean_concurrence",
            "mean_normalized_energy",
            "all_separable",
            "mean_d_unfitted",
            "mean_d_fitted",
        ],
    );
    for c in stats {
        t.push(vec![
            num(c.lambda),
            num(c.beta),
            c.separation.to_string(),
            c.count.to_string(),
            num(c.mean_eof),
            num(c.var_eof),
            num(c.stderr_eof),
            num(c.min_eof),
            num(c.max_eof),
            num(c.mean_concurrence),
            num(c.mean_normalized_energy),
            c.all_separable.to_string(),
            opt(c.mean_d_unfitted),
            opt(c.mean_d_fitted),
        ]);
    }
    t
}

/// Normalized energy at which the mean EoF reaches zero, per `(λ, n)`.
fn crossings_table(run: &EnsembleRun, lambdas: &[f64]) -> Table {
    let mut t = Table::new(
        "crossings",
        &["lambda", "separation", "zero_crossing_energy"],
    );
    let mut seps: Vec<usize> = run.stats.iter().map(|c| c.separation).collect();
    seps.sort_unstable();
    seps.dedup();
    for &l in lambdas {
        for &n in &seps {
            let curve = EnergyCurve::from_stats(&run.stats, l, n);
            t.push(vec![num(l), n.to_string(), opt(curve.zero_crossing())]);
        }
    }
    t
}
