use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use copo::cluster::{copo, kmeans, spectral_cluster_from, spectral_init, CopoConfig, DEFAULT_RESTARTS};
use copo::embed::{hollowed_embedding, svd_embedding};
use copo::harness::{
    emit_outputs, ingest_csv, replicate_dataset, run_experiment_with, ExperimentConfig, Method,
    RunOptions,
};
use copo::metrics::misclustering;
use copo::oracle::{linearization_diagnostic, projected_params, snr_report, truth_spectral};
use copo::par::Parallelism;
use copo::{Error, SeededRng};
use serde_json::json;

#[derive(Parser)]
#[command(name = "copo", version, about = "Covariance projected spectral clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write its tables and charts.
    Run {
        config: PathBuf,
        /// Worker threads (overrides COPO_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// Run replicates one after another on this thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Cluster the rows of a CSV file and print one label per line.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// copo, kmeans, spectral or hollowed.
        #[arg(long, default_value = "copo")]
        method: String,
        /// 0-based column holding true labels; prints h when given.
        #[arg(long)]
        labels_col: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First line is a header.
        #[arg(long)]
        header: bool,
    },
    /// Print the SNR family for the first replicate of each sweep point.
    Snr { config: PathBuf },
    /// Print the linearization diagnostic for the first replicate of each
    /// sweep point.
    Diag { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cmd: Command) -> copo::Result<()> {
    match cmd {
        Command::Run {
            config,
            threads,
            sequential,
        } => run(config, threads, sequential),
        Command::Cluster {
            input,
            k,
            method,
            labels_col,
            seed,
            header,
        } => cluster(input, k, &method, labels_col, seed, header),
        Command::Snr { config } => snr(config),
        Command::Diag { config } => diag(config),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn run(config: PathBuf, threads: Option<usize>, sequential: bool) -> copo::Result<()> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let opts = RunOptions {
        parallelism: if sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Pool
        },
        threads,
    };
    let jobs = cfg.points()?.len() * cfg.replicates;
    eprintln!("{}: {jobs} jobs x {} methods", cfg.name, cfg.methods.len());
    let out = run_experiment_with(&cfg, &opts)?;
    for r in out.records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "replicate {} at point {} failed for {}: {}",
            r.replicate,
            r.point,
            r.method.name(),
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!("sweep_value\tmethod\tn_reps\tn_failed\th_mean\th_se\twl_mean");
    for s in &out.summary {
        println!(
            "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}",
            opt(s.sweep_value),
            s.method.name(),
            s.n_reps,
            s.n_failed,
            s.h_mean,
            s.h_se,
            opt(s.weighted_loss_mean)
        );
    }
    for p in emit_outputs(&cfg.name, &out, &cfg.output)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cluster(
    input: PathBuf,
    k: usize,
    method: &str,
    labels_col: Option<usize>,
    seed: u64,
    header: bool,
) -> copo::Result<()> {
    let method = Method::from_name(method)
        .filter(|m| *m != Method::BayesOracle)
        .ok_or_else(|| {
            Error::Validation(vec![format!(
                "unknown method '{method}' (expected copo, kmeans, spectral or hollowed)"
            )])
        })?;
    if k == 0 {
        return Err(Error::Validation(vec!["--k must be at least 1".into()]));
    }
    let (y, truth) = ingest_csv(&input, header, labels_col)?;
    let mut rng = SeededRng::new(seed, 0);
    let labels = match method {
        Method::Copo => {
            let e = hollowed_embedding(&y, k)?;
            let init = spectral_init(&e, k, &mut rng, DEFAULT_RESTARTS)?;
            copo(&e, &init, &CopoConfig::new(k))?.labels
        }
        Method::Kmeans => kmeans(&y, k, &mut rng, DEFAULT_RESTARTS)?.labels,
        Method::Spectral => spectral_cluster_from(&svd_embedding(&y, k)?, &mut rng, DEFAULT_RESTARTS)?.labels,
        Method::Hollowed => {
            spectral_cluster_from(&hollowed_embedding(&y, k)?, &mut rng, DEFAULT_RESTARTS)?.labels
        }
        Method::BayesOracle => unreachable!("filtered above"),
    };
    for l in &labels {
        println!("{l}");
    }
    if let Some(t) = truth {
        let kk = k.max(t.iter().max().map_or(0, |m| m + 1));
        let m = misclustering(&labels, &t, kk)?;
        eprintln!("h = {}", m.h);
        println!("h\t{}", m.h);
    }
    Ok(())
}

fn snr(config: PathBuf) -> copo::Result<()> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let mut out = Vec::new();
    for (i, (v, g)) in cfg.points()?.into_iter().enumerate() {
        let data = replicate_dataset(&g, cfg.base_seed, i, 0)?;
        let ts = truth_spectral(&data.truth)?;
        let pp = projected_params(&data.truth, &ts)?;
        let r = snr_report(&pp, &data.truth, &ts)?;
        out.push(json!({
            "sweep_value": v,
            "snr": r.snr,
            "snr_mod": r.snr_mod,
            "snr_exc": r.snr_exc,
            "snr_full": r.snr_full,
            "beta": pp.beta,
            "nu": pp.nu,
            "kappa": pp.kappa,
            "exc_rep_deviation": pp.exc_rep_deviation,
            "pairs": r.pairs.iter().map(|p| json!({
                "from": p.j1, "to": p.j2, "snr": p.snr, "snr_mod": p.snr_mod,
                "snr_exc": p.snr_exc, "snr_full": p.snr_full,
            })).collect::<Vec<_>>(),
        }));
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("plain JSON values"));
    Ok(())
}

fn diag(config: PathBuf) -> copo::Result<()> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let mut out = Vec::new();
    for (i, (v, g)) in cfg.points()?.into_iter().enumerate() {
        let data = replicate_dataset(&g, cfg.base_seed, i, 0)?;
        let ts = truth_spectral(&data.truth)?;
        let e = hollowed_embedding(&data.y, data.truth.k)?;
        let r = linearization_diagnostic(&data, &ts, &e)?;
        out.push(json!({
            "sweep_value": v,
            "median_relative_residual": r.median_relative,
            "median_relative_residual_gram_aligned": r.median_relative_gram_aligned,
            "median_linear_norm": r.median_linear_norm,
            "quantiles": r.quantiles.iter().map(|(q, x)| json!({"q": q, "value": x})).collect::<Vec<_>>(),
        }));
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("plain JSON values"));
    Ok(())
}
