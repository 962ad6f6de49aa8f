use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cas_core::channel::{alphas_from_channel, generate_rayleigh};
use cas_core::dual::{optimize_dual, optimize_dual_best, InitKind};
use cas_core::separated::{evaluate_split, optimize_separated};
use cas_core::CasError;
use rayon::prelude::*;

use crate::config::{DualInit, ExperimentConfig, Scheme};
use crate::error::{CliError, Result};
use crate::output::{write_records, write_table, Cell, SweepRecord};

fn point_err(seed: u64, snr_c_db: f64) -> impl Fn(CasError) -> CliError {
    move |source| CliError::Point { seed, snr_c_db, source }
}

fn gains_for(cfg: &ExperimentConfig, seed: u64, snr_c_db: f64) -> (cas_core::SystemConfig, Vec<f64>) {
    let system = cfg.system_at(snr_c_db);
    let channel = generate_rayleigh(seed, system.m_c, system.n_tx);
    let alphas = alphas_from_channel(&channel, &system);
    (system, alphas)
}

/// Solves every selected scheme at one (seed, SNR_c) point.
pub fn run_point(cfg: &ExperimentConfig, seed: u64, snr_c_db: f64) -> Result<Vec<SweepRecord>> {
    let err = point_err(seed, snr_c_db);
    let (system, alphas) = gains_for(cfg, seed, snr_c_db);
    let mut out = Vec::new();
    for scheme in cfg.schemes() {
        let record = match scheme {
            Scheme::Separated => {
                let sol = optimize_separated(&system, &alphas, cfg.separated_options()).map_err(&err)?;
                SweepRecord {
                    scheme,
                    seed,
                    snr_c_db,
                    p_s: Some(sol.p_s),
                    alloc_summary: sol.comm_alloc.into_inner(),
                    d_s: sol.report.d_s,
                    d_c: sol.report.d_c,
                    d_sc: sol.report.d_sc,
                    capacity: sol.report.capacity,
                    iterations: sol.rounds,
                    converged: !sol.degenerate,
                }
            }
            _ => {
                let opts = cfg.dual_options();
                let sol = match cfg.dual_init {
                    DualInit::Sensing => optimize_dual(&system, &alphas, InitKind::SensingOptimal, opts),
                    DualInit::Communication => optimize_dual(&system, &alphas, InitKind::CommunicationOptimal, opts),
                    DualInit::Best => optimize_dual_best(&system, &alphas, opts),
                }
                .map_err(&err)?;
                SweepRecord {
                    scheme: Scheme::Dual,
                    seed,
                    snr_c_db,
                    p_s: None,
                    alloc_summary: sol.alloc.into_inner(),
                    d_s: sol.report.d_s,
                    d_c: sol.report.d_c,
                    d_sc: sol.report.d_sc,
                    capacity: sol.report.capacity,
                    iterations: sol.iterations,
                    converged: sol.converged && !sol.saturated,
                }
            }
        };
        out.push(record);
    }
    Ok(out)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs:?} worker threads: {e}")))
}

/// All records of the sweep, sorted by (scheme, SNR_c, seed).
pub fn collect_sweep(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<SweepRecord>> {
    let points: Vec<(u64, f64)> =
        cfg.snr_c_db_list.iter().flat_map(|&snr| cfg.seeds.iter().map(move |&seed| (seed, snr))).collect();
    let batches = pool(jobs)?
        .install(|| points.par_iter().map(|&(seed, snr)| run_point(cfg, seed, snr)).collect::<Result<Vec<_>>>())?;
    let mut records: Vec<SweepRecord> = batches.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.scheme.as_str().cmp(b.scheme.as_str()).then(a.snr_c_db.total_cmp(&b.snr_c_db)).then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}

/// Opens the destination before any work is done; `None` means stdout.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn finish(out: &mut dyn Write, path: Option<&Path>, res: io::Result<()>) -> Result<()> {
    let label = || path.map_or_else(|| "<stdout>".into(), Path::to_path_buf);
    res.map_err(|e| CliError::io(label(), e))?;
    out.flush().map_err(|e| CliError::io(label(), e))
}

/// Runs the sweep and writes it to the configured output. Returns the records.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<SweepRecord>> {
    let path = cfg.output_path.as_deref();
    let mut out = open_output(path)?;
    let mut curve_out = match (cfg.curve_points, cfg.curve_output.as_deref()) {
        (0, _) => None,
        (_, p) => Some(open_output(p)?),
    };

    let records = collect_sweep(cfg, jobs)?;
    let res = write_records(&mut out, cfg.output_format, &records);
    finish(&mut out, path, res)?;

    if let Some(curve) = curve_out.as_mut() {
        let rows = curve_rows(cfg, jobs)?;
        let res = write_table(curve, cfg.output_format, &CURVE_COLUMNS, &rows);
        finish(curve.as_mut(), cfg.curve_output.as_deref(), res)?;
    }
    Ok(records)
}

pub const CURVE_COLUMNS: [&str; 6] = ["seed", "snr_c_db", "p_s", "d_s", "d_c", "d_sc"];

/// Dense `D_sc(P_s)` curves of the separated scheme for every (seed, SNR_c).
pub fn curve_rows(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<Vec<Cell>>> {
    let k = cfg.curve_points;
    let mut points: Vec<(f64, u64)> = Vec::new();
    for &snr in &cfg.snr_c_db_list {
        for &seed in &cfg.seeds {
            points.push((snr, seed));
        }
    }
    let blocks = pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|&(snr, seed)| {
                let (system, alphas) = gains_for(cfg, seed, snr);
                (0..=k)
                    .map(|i| {
                        let p_s = system.p_total * i as f64 / k as f64;
                        let r = evaluate_split(p_s, &system, &alphas).map_err(point_err(seed, snr))?;
                        Ok(vec![
                            Cell::Int(seed),
                            Cell::Float(snr),
                            Cell::Float(p_s),
                            Cell::Float(r.d_s),
                            Cell::Float(r.d_c),
                            Cell::Float(r.d_sc),
                        ])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(blocks.into_iter().flatten().collect())
}

pub const TRACE_COLUMNS: [&str; 3] = ["init_kind", "iteration", "d_sc"];

/// Per-iteration dual objective for both initializations at one point.
pub fn trace_rows(cfg: &ExperimentConfig, seed: u64, snr_c_db: f64) -> Result<Vec<Vec<Cell>>> {
    let (system, alphas) = gains_for(cfg, seed, snr_c_db);
    let mut rows = Vec::new();
    for init in [InitKind::SensingOptimal, InitKind::CommunicationOptimal] {
        let sol = optimize_dual(&system, &alphas, init, cfg.dual_options()).map_err(point_err(seed, snr_c_db))?;
        for (i, d) in sol.objective_trace.iter().enumerate() {
            rows.push(vec![Cell::Text(init.as_str().into()), Cell::Int(i as u64), Cell::Float(*d)]);
        }
    }
    Ok(rows)
}

pub fn emit_trace(cfg: &ExperimentConfig, seed: u64, snr_c_db: f64) -> Result<()> {
    if cfg.scheme == Scheme::Separated {
        return Err(CliError::Config("trace needs scheme dual or both".into()));
    }
    let path = cfg.output_path.as_deref();
    let mut out = open_output(path)?;
    let rows = trace_rows(cfg, seed, snr_c_db)?;
    let res = write_table(&mut out, cfg.output_format, &TRACE_COLUMNS, &rows);
    finish(&mut out, path, res)
}

/// Per-SNR comparison of the two schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub snr_c_db: f64,
    pub mean_d_sc_separated: f64,
    pub mean_d_sc_dual: f64,
    /// Mean over seeds of `(D_sep − D_dual) / D_sep`.
    pub mean_gain: f64,
    pub seeds: usize,
}

pub const SUMMARY_COLUMNS: [&str; 5] = ["snr_c_db", "mean_d_sc_separated", "mean_d_sc_dual", "gain_percent", "seeds"];

/// Pairs separated and dual records by (seed, SNR_c) and averages per SNR.
pub fn summarize(records: &[SweepRecord]) -> Vec<SummaryRow> {
    let mut snrs: Vec<f64> = records.iter().map(|r| r.snr_c_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    snrs.into_iter()
        .filter_map(|snr| {
            let pairs: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.scheme == Scheme::Separated && r.snr_c_db == snr)
                .filter_map(|s| {
                    records
                        .iter()
                        .find(|d| d.scheme == Scheme::Dual && d.snr_c_db == snr && d.seed == s.seed)
                        .map(|d| (s.d_sc, d.d_sc))
                })
                .collect();
            if pairs.is_empty() {
                return None;
            }
            let k = pairs.len() as f64;
            Some(SummaryRow {
                snr_c_db: snr,
                mean_d_sc_separated: pairs.iter().map(|p| p.0).sum::<f64>() / k,
                mean_d_sc_dual: pairs.iter().map(|p| p.1).sum::<f64>() / k,
                mean_gain: pairs.iter().map(|(s, d)| (s - d) / s).sum::<f64>() / k,
                seeds: pairs.len(),
            })
        })
        .collect()
}

pub fn summary_table(rows: &[SummaryRow]) -> Vec<Vec<Cell>> {
    rows.iter()
        .map(|r| {
            vec![
                Cell::Float(r.snr_c_db),
                Cell::Float(r.mean_d_sc_separated),
                Cell::Float(r.mean_d_sc_dual),
                Cell::Float(100.0 * r.mean_gain),
                Cell::Int(r.seeds as u64),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FileConfig;
    use crate::config::SeedList;

    fn small() -> ExperimentConfig {
        ExperimentConfig::resolve(
            FileConfig {
                seeds: Some(SeedList(vec![0, 1])),
                snr_c_db_list: Some(crate::config::DbList(vec![10.0, 0.0])),
                ..Default::default()
            },
            0,
        )
        .unwrap()
    }

    #[test]
    fn both_schemes_per_point() {
        let recs = run_point(&small(), 0, 10.0).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].scheme, Scheme::Separated);
        assert_eq!(recs[1].scheme, Scheme::Dual);
        for r in &recs {
            assert_eq!(r.d_sc, r.d_s + r.d_c);
            assert!(r.converged);
        }
        assert!((recs[1].alloc_summary.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn very_low_snr_approaches_prior() {
        for r in run_point(&small(), 4, -20.0).unwrap() {
            assert!((r.d_sc - 5.0).abs() <= 0.1 * 5.0, "{r:?}");
        }
    }

    #[test]
    fn sweep_is_sorted_and_complete() {
        let cfg = small();
        let recs = collect_sweep(&cfg, Some(3)).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 2);
        let keys: Vec<(&str, f64, u64)> = recs.iter().map(|r| (r.scheme.as_str(), r.snr_c_db, r.seed)).collect();
        assert_eq!(keys[0], ("dual", 0.0, 0));
        assert_eq!(keys[7], ("separated", 10.0, 1));
        assert_eq!(recs, collect_sweep(&cfg, Some(1)).unwrap());
    }

    #[test]
    fn summary_pairs_records() {
        let recs = collect_sweep(&small(), None).unwrap();
        let rows = summarize(&recs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].snr_c_db, 0.0);
        assert_eq!(rows[0].seeds, 2);
        assert!(rows.iter().all(|r| r.mean_d_sc_dual <= r.mean_d_sc_separated));
    }

    #[test]
    fn trace_has_both_inits() {
        let rows = trace_rows(&small(), 0, 10.0).unwrap();
        let firsts: Vec<&Cell> = rows.iter().filter(|r| r[1] == Cell::Int(0)).map(|r| &r[0]).collect();
        assert_eq!(firsts.len(), 2);
    }
}
