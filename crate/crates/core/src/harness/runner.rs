use std::time::Instant;

use super::config::{ExperimentConfig, GeneratorSpec, Method};
use crate::cluster::{copo, kmeans, spectral_cluster_from, spectral_init, CopoConfig};
use crate::datagen::Dataset;
use crate::embed::{hollowed_embedding, svd_embedding, Embedding};
use crate::error::Result;
use crate::metrics::{misclustering, weighted_loss};
use crate::numcore::{stream_id, Matrix, SeededRng};
use crate::oracle::{bayes_classify, projected_params, snr_report, truth_spectral};
use crate::par::{self, Parallelism};
use crate::LabelVector;

/// Environment variable that sets the worker count.
pub const THREADS_ENV: &str = "COPO_THREADS";

const DATA_TAG: u64 = 1;
const SHUFFLE_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub point: usize,
    pub replicate: usize,
    pub method: Method,
    pub h: Option<f64>,
    pub weighted_loss: Option<f64>,
    pub snr: Option<f64>,
    pub snr_mod: Option<f64>,
    pub snr_exc: Option<f64>,
    pub iters: Option<usize>,
    pub wall_ms: Option<f64>,
    /// Set when the replicate failed for this method.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub point: usize,
    pub method: Method,
    pub n_reps: usize,
    pub n_failed: usize,
    pub h_mean: f64,
    pub h_se: f64,
    pub weighted_loss_mean: Option<f64>,
    pub weighted_loss_se: Option<f64>,
    pub iters_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub parallelism: Parallelism,
    /// Worker count; `None` reads [`THREADS_ENV`], then uses the pool default.
    pub threads: Option<usize>,
}

/// Generates one replicate. Rows are shuffled so that label order carries no
/// information.
pub fn replicate_dataset(
    spec: &GeneratorSpec,
    base_seed: u64,
    point: usize,
    replicate: usize,
) -> Result<Dataset> {
    let root = SeededRng::new(base_seed, stream_id(&[point as u64, replicate as u64]));
    let mut data = spec.generate(&mut root.substream(DATA_TAG))?;
    let mut perm: Vec<usize> = (0..data.y.rows()).collect();
    root.substream(SHUFFLE_TAG).shuffle(&mut perm);
    data.permute_rows(&perm);
    Ok(data)
}

struct Outcome {
    labels: LabelVector,
    iters: Option<usize>,
}

fn run_method(
    method: Method,
    cfg: &ExperimentConfig,
    data: &Dataset,
    hollowed: &mut Option<Embedding>,
    rng: &mut SeededRng,
) -> Result<Outcome> {
    let k = data.truth.k;
    let restarts = cfg.kmeans_restarts;
    let mut hollow = || -> Result<Embedding> {
        if hollowed.is_none() {
            *hollowed = Some(hollowed_embedding(&data.y, k)?);
        }
        Ok(hollowed.clone().expect("just set"))
    };
    Ok(match method {
        Method::Copo => {
            let e = hollow()?;
            let init = spectral_init(&e, k, rng, restarts)?;
            let cc = CopoConfig {
                max_iters: cfg.copo.max_iters,
                ridge: cfg.copo.ridge,
                min_cluster_size: cfg.copo.min_cluster_size,
                log_det: cfg.copo.log_det,
                ..CopoConfig::new(k)
            };
            let r = copo(&e, &init, &cc)?;
            Outcome {
                labels: r.labels,
                iters: Some(r.iterations),
            }
        }
        Method::Kmeans => {
            let r = kmeans(&data.y, k, rng, restarts)?;
            Outcome {
                labels: r.labels,
                iters: Some(r.iterations),
            }
        }
        Method::Spectral => {
            let r = spectral_cluster_from(&svd_embedding(&data.y, k)?, rng, restarts)?;
            Outcome {
                labels: r.labels,
                iters: Some(r.iterations),
            }
        }
        Method::Hollowed => {
            let r = spectral_cluster_from(&hollow()?, rng, restarts)?;
            Outcome {
                labels: r.labels,
                iters: Some(r.iterations),
            }
        }
        Method::BayesOracle => Outcome {
            labels: bayes_classify(&data.y, &data.truth)?,
            iters: None,
        },
    })
}

struct TruthSummary {
    omega: Option<Matrix>,
    snr: [Option<f64>; 3],
}

fn truth_summary(data: &Dataset) -> TruthSummary {
    let Ok(ts) = truth_spectral(&data.truth) else {
        return TruthSummary {
            omega: None,
            snr: [None; 3],
        };
    };
    let Ok(pp) = projected_params(&data.truth, &ts) else {
        return TruthSummary {
            omega: None,
            snr: [None; 3],
        };
    };
    let snr = match snr_report(&pp, &data.truth, &ts) {
        Ok(r) => [Some(r.snr), Some(r.snr_mod), Some(r.snr_exc)],
        Err(_) => [None; 3],
    };
    TruthSummary {
        omega: Some(pp.omega),
        snr,
    }
}

fn run_job(
    cfg: &ExperimentConfig,
    sweep_value: Option<f64>,
    spec: &GeneratorSpec,
    point: usize,
    replicate: usize,
) -> Vec<RunRecord> {
    let sweep_param = cfg.sweep.as_ref().map(|s| s.param.clone());
    let blank = |method: Method| RunRecord {
        sweep_param: sweep_param.clone(),
        sweep_value,
        point,
        replicate,
        method,
        h: None,
        weighted_loss: None,
        snr: None,
        snr_mod: None,
        snr_exc: None,
        iters: None,
        wall_ms: None,
        error: None,
    };
    let data = match replicate_dataset(spec, cfg.base_seed, point, replicate) {
        Ok(d) => d,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&m| RunRecord {
                    error: Some(e.to_string()),
                    ..blank(m)
                })
                .collect()
        }
    };
    let truth = truth_summary(&data);
    let root = SeededRng::new(cfg.base_seed, stream_id(&[point as u64, replicate as u64]));
    let k = data.truth.k;
    let mut hollowed = None;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let mut rng = root.substream(method.stream_tag());
        let start = Instant::now();
        let result = run_method(method, cfg, &data, &mut hollowed, &mut rng);
        let wall = start.elapsed().as_secs_f64() * 1e3;
        let mut rec = RunRecord {
            snr: truth.snr[0],
            snr_mod: truth.snr[1],
            snr_exc: truth.snr[2],
            wall_ms: cfg.record_timing.then_some(wall),
            ..blank(method)
        };
        let scored = result.and_then(|o| {
            let m = misclustering(&o.labels, &data.truth.labels, k)?;
            let wl = match &truth.omega {
                Some(om) => Some(weighted_loss(&o.labels, &data.truth.labels, om)?),
                None => None,
            };
            Ok((m.h, wl, o.iters))
        });
        match scored {
            Ok((h, wl, iters)) => {
                rec.h = Some(h);
                rec.weighted_loss = wl;
                rec.iters = iters;
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
        out.push(rec);
    }
    out
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with(cfg, &RunOptions::default())
}

/// Runs every (sweep point, replicate) job and aggregates per method.
/// Replicate failures become records with `error` set; the run continues.
pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let points = cfg.points()?;
    let jobs: Vec<(usize, Option<f64>, &GeneratorSpec, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, (v, g))| (0..cfg.replicates).map(move |r| (i, *v, g, r)))
        .collect();
    let threads = opts.threads.or_else(threads_from_env);
    let nested = par::with_threads(threads, || {
        par::map(jobs, opts.parallelism, |(i, v, g, r)| run_job(cfg, v, g, i, r))
    });
    let mut records: Vec<RunRecord> = nested.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.point, r.replicate, r.method));
    let summary = summarize(&records);
    Ok(ExperimentOutput { records, summary })
}

/// Mean and standard error (`sd/√m`, sample sd); SE is 0 for one value.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// One row per (sweep point, method), in first-seen order of the sorted
/// records.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Method)> = records.iter().map(|r| (r.point, r.method)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(point, method)| {
            let cell: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.point == point && r.method == method)
                .collect();
            let ok: Vec<&&RunRecord> = cell.iter().filter(|r| r.h.is_some()).collect();
            let h: Vec<f64> = ok.iter().filter_map(|r| r.h).collect();
            let wl: Vec<f64> = ok.iter().filter_map(|r| r.weighted_loss).collect();
            let it: Vec<f64> = ok.iter().filter_map(|r| r.iters.map(|v| v as f64)).collect();
            let (h_mean, h_se) = mean_se(&h);
            let (wl_mean, wl_se) = mean_se(&wl);
            SummaryRow {
                sweep_param: cell[0].sweep_param.clone(),
                sweep_value: cell[0].sweep_value,
                point,
                method,
                n_reps: ok.len(),
                n_failed: cell.len() - ok.len(),
                h_mean,
                h_se,
                weighted_loss_mean: (!wl.is_empty()).then_some(wl_mean),
                weighted_loss_se: (!wl.is_empty()).then_some(wl_se),
                iters_mean: (!it.is_empty()).then(|| mean_se(&it).0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(methods: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "name": "unit",
                "generator": {{"kind": "sparse_gaussian", "n": 40, "p": 60, "s": 5, "alpha": 12.0}},
                "methods": {methods},
                "replicates": 3,
                "base_seed": 11
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn separable_config_is_solved_by_everyone() {
        let cfg = config(r#"["copo", "kmeans", "spectral", "hollowed", "bayes_oracle"]"#);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 15);
        for row in &out.summary {
            assert_eq!(row.h_mean, 0.0, "{:?}", row.method);
            assert_eq!(row.n_failed, 0);
        }
    }

    #[test]
    fn sequential_and_pool_agree() {
        let cfg = config(r#"["copo", "kmeans"]"#);
        let a = run_experiment_with(
            &cfg,
            &RunOptions {
                parallelism: Parallelism::Sequential,
                threads: None,
            },
        )
        .unwrap();
        let b = run_experiment_with(
            &cfg,
            &RunOptions {
                parallelism: Parallelism::Pool,
                threads: Some(3),
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn method_streams_do_not_depend_on_the_method_list() {
        let a = run_experiment(&config(r#"["kmeans"]"#)).unwrap();
        let b = run_experiment(&config(r#"["copo", "kmeans"]"#)).unwrap();
        let km: Vec<_> = b.records.iter().filter(|r| r.method == Method::Kmeans).cloned().collect();
        assert_eq!(a.records, km);
    }

    #[test]
    fn mean_se_examples() {
        assert_eq!(mean_se(&[2.0]), (2.0, 0.0));
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        // min cluster size above n/2 makes every COPO run fail its contract
        let mut cfg = config(r#"["copo", "kmeans"]"#);
        cfg.copo.min_cluster_size = 39;
        let out = run_experiment(&cfg).unwrap();
        let copo_row = out.summary.iter().find(|r| r.method == Method::Copo).unwrap();
        assert_eq!(copo_row.n_failed, 3);
        assert_eq!(copo_row.n_reps, 0);
        assert!(out.records.iter().filter(|r| r.method == Method::Copo).all(|r| r.error.is_some()));
        let km = out.summary.iter().find(|r| r.method == Method::Kmeans).unwrap();
        assert_eq!(km.n_failed, 0);
    }
}
