use std::path::{Path, PathBuf};

use gevnet::bootstrap::{parametric_bootstrap, ConfidenceInterval};
use gevnet::evaluation::{self, GridSpec, Parameter};
use gevnet::io::{self, SeriesTable};
use gevnet::mle::{fit_mle_with, mle_confidence_intervals, MleOptions};
use gevnet::nn::{self, NetworkModel, PenaltyMode};
use gevnet::rng::derive_seed;
use gevnet::training::{
    self, DatasetSpec, ParameterRanges, Scenario, TrainConfig, MIN_ESTIMATION_SIZE,
};
use gevnet::{Error, GevParams, GevSample, Result};
use serde::Serialize;

use crate::{
    BenchmarkArgs, BootstrapArgs, Command, DatasetArgs, DatasetFlags, EstimateArgs, FitArgs,
    MethodArg, PenaltyArg, ScenarioArg, SimulateArgs, Study, TrainArgs,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::BuildDataset(a) => build_dataset(a),
        Command::Train(a) => train(a),
        Command::Estimate(a) => estimate(a),
        Command::Fit(a) => fit(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let theta = GevParams::new(a.mu, a.sigma, a.xi)?;
    let sample = theta.sample(a.n, a.seed)?;
    let header = vec![format!(
        "gev mu={} sigma={} xi={} n={} seed={}",
        a.mu, a.sigma, a.xi, a.n, a.seed
    )];
    io::write_values(&a.out, &header, sample.values())?;
    log::info!("wrote {} values to {}", a.n, a.out.display());
    Ok(())
}

fn dataset_spec(f: &DatasetFlags) -> DatasetSpec {
    let scenario = match f.scenario {
        ScenarioArg::Fixed => Scenario::FixedSize { n: f.sample_size },
        ScenarioArg::Varying => Scenario::VaryingSize {
            sizes: f.sizes.clone(),
        },
    };
    DatasetSpec {
        n_train: f.n_train,
        n_valid: f.n_valid,
        scenario,
        seed: f.seed,
    }
}

fn build_dataset(a: DatasetArgs) -> Result<()> {
    let ds = training::build_dataset(&dataset_spec(&a.dataset), &ParameterRanges::default())?;
    io::write_dataset(&a.out, &ds)?;
    log::info!(
        "wrote {} training and {} validation records to {} ({} redraws)",
        ds.train.len(),
        ds.valid.len(),
        a.out.display(),
        ds.redraws
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let (ds, tag) = match &a.dataset_file {
        Some(p) => (io::read_dataset(p)?, None),
        None => {
            let spec = dataset_spec(&a.dataset);
            let tag = spec.scenario.tag();
            (
                training::build_dataset(&spec, &ParameterRanges::default())?,
                Some(tag),
            )
        }
    };
    let config = TrainConfig {
        hidden: a.hidden.clone(),
        batch_size: a.batch_size,
        max_epochs: a.max_epochs,
        patience: a.patience,
        lr: a.lr,
        lambda: a.lambda,
        penalty_mode: match a.penalty {
            PenaltyArg::Hinge => PenaltyMode::Hinge,
            PenaltyArg::Indicator => PenaltyMode::Indicator,
        },
        seed: a.train_seed,
        ..TrainConfig::default()
    };
    log::info!(
        "training on {} records, validating on {}",
        ds.train.len(),
        ds.valid.len()
    );
    let (mut model, history) = training::train(&ds.train, &ds.valid, &config)?;
    model.metadata.scenario = tag;
    nn::save(&model, &a.model_out)?;
    let history_out = a
        .history_out
        .unwrap_or_else(|| with_suffix(&a.model_out, ".history.csv"));
    io::write_history(&history_out, &history)?;
    log::info!(
        "{} epochs, best {} (validation loss {:.6}); model written to {}",
        history.epochs.len(),
        history.best_epoch,
        history.best_valid_loss(),
        a.model_out.display()
    );
    Ok(())
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let model = nn::load(&a.model)?;
    let sample = GevSample::new(io::read_values(&a.data)?)?;
    let est = training::estimate(&model, &sample)?;
    println!("mu,sigma,xi");
    println!("{},{},{}", est.mu(), est.sigma(), est.xi());
    Ok(())
}

#[derive(Serialize, Default)]
struct FitRow {
    site_id: String,
    method: &'static str,
    n: usize,
    status: String,
    mu: Option<f64>,
    sigma: Option<f64>,
    xi: Option<f64>,
    mu_lower: Option<f64>,
    mu_upper: Option<f64>,
    sigma_lower: Option<f64>,
    sigma_upper: Option<f64>,
    xi_lower: Option<f64>,
    xi_upper: Option<f64>,
}

impl FitRow {
    fn with_estimate(mut self, p: &GevParams) -> Self {
        (self.mu, self.sigma, self.xi) = (Some(p.mu()), Some(p.sigma()), Some(p.xi()));
        self
    }

    fn with_intervals(mut self, ci: &[ConfidenceInterval; 3]) -> Self {
        (self.mu_lower, self.mu_upper) = (Some(ci[0].lower), Some(ci[0].upper));
        (self.sigma_lower, self.sigma_upper) = (Some(ci[1].lower), Some(ci[1].upper));
        (self.xi_lower, self.xi_upper) = (Some(ci[2].lower), Some(ci[2].upper));
        self
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let model = match (a.method, &a.model) {
        (MethodArg::Mle, _) => None,
        (_, Some(p)) => Some(nn::load(p)?),
        (_, None) => {
            return Err(Error::InvalidParameter(
                "--model is required for the nn method".into(),
            ))
        }
    };
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "--level {} outside (0, 1)",
            a.level
        )));
    }
    let table = SeriesTable::read(&a.data)?;
    let mle_opts = MleOptions {
        restarts: a.restarts,
        seed: a.seed,
        ..MleOptions::default()
    };
    let mut rows = Vec::new();
    for (index, (site, values)) in table.by_site().into_iter().enumerate() {
        let n = values.len();
        let base = || FitRow {
            site_id: site.clone(),
            n,
            ..FitRow::default()
        };
        let methods: &[&'static str] = match a.method {
            MethodArg::Nn => &["nn"],
            MethodArg::Mle => &["mle"],
            MethodArg::Both => &["nn", "mle"],
        };
        if n < MIN_ESTIMATION_SIZE {
            log::warn!("site {site}: {n} values, need at least {MIN_ESTIMATION_SIZE}; skipped");
            for &m in methods {
                rows.push(FitRow {
                    method: m,
                    status: "too_few_values".into(),
                    ..base()
                });
            }
            continue;
        }
        let sample = GevSample::new(values)?;
        if let Some(model) = &model {
            let row = FitRow {
                method: "nn",
                ..base()
            };
            rows.push(match training::estimate(model, &sample) {
                Ok(est) if a.bootstrap > 0 => {
                    let seed = derive_seed(a.seed, index as u64);
                    let boot = parametric_bootstrap(model, &est, n, a.bootstrap, a.level, seed)?;
                    FitRow {
                        status: "ok".into(),
                        ..row
                    }
                    .with_estimate(&est)
                    .with_intervals(&boot.intervals)
                }
                Ok(est) => FitRow {
                    status: "ok".into(),
                    ..row
                }
                .with_estimate(&est),
                Err(Error::DegenerateSample(msg)) => {
                    log::warn!("site {site}: {msg}");
                    FitRow {
                        status: "degenerate".into(),
                        ..row
                    }
                }
                Err(e) => return Err(e),
            });
        }
        if a.method != MethodArg::Nn {
            let row = FitRow {
                method: "mle",
                ..base()
            };
            let fit = fit_mle_with(&sample, &mle_opts);
            rows.push(match fit {
                Ok(f) if f.converged => {
                    let row = FitRow {
                        status: "ok".into(),
                        ..row
                    }
                    .with_estimate(&f.params);
                    match mle_confidence_intervals(&f, &sample, a.level) {
                        Ok(ci) => row.with_intervals(&ci),
                        Err(e) => {
                            log::warn!("site {site}: {e}");
                            FitRow {
                                status: "no_interval".into(),
                                ..row
                            }
                        }
                    }
                }
                Ok(f) => FitRow {
                    status: "not_converged".into(),
                    ..row
                }
                .with_estimate(&f.params),
                Err(Error::DegenerateSample(msg)) => {
                    log::warn!("site {site}: {msg}");
                    FitRow {
                        status: "degenerate".into(),
                        ..row
                    }
                }
                Err(e) => return Err(e),
            });
        }
    }
    io::write_table(&a.out, &rows)?;
    log::info!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct IntervalLine {
    parameter: &'static str,
    estimate: f64,
    lower: f64,
    upper: f64,
    level: f64,
    replicates: usize,
}

fn bootstrap(a: BootstrapArgs) -> Result<()> {
    let model = nn::load(&a.model)?;
    let sample = GevSample::new(io::read_values(&a.data)?)?;
    let est = training::estimate(&model, &sample)?;
    let boot = parametric_bootstrap(&model, &est, sample.len(), a.b, a.level, a.seed)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for (k, name) in ["mu", "sigma", "xi"].into_iter().enumerate() {
        let ci = &boot.intervals[k];
        w.serialize(IntervalLine {
            parameter: name,
            estimate: est.to_array()[k],
            lower: ci.lower,
            upper: ci.upper,
            level: ci.level,
            replicates: a.b,
        })
        .map_err(Error::from)?;
    }
    w.flush()?;
    if let Some(p) = &a.replicates_out {
        #[derive(Serialize)]
        struct Rep {
            mu: f64,
            sigma: f64,
            xi: f64,
        }
        let reps: Vec<Rep> = boot
            .replicates
            .iter()
            .map(|r| Rep {
                mu: r[0],
                sigma: r[1],
                xi: r[2],
            })
            .collect();
        io::write_table(p, &reps)?;
    }
    if boot.redraws > 0 {
        log::info!("{} degenerate bootstrap samples were redrawn", boot.redraws);
    }
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let model: NetworkModel = nn::load(&a.model)?;
    std::fs::create_dir_all(&a.out_dir)?;
    match a.study {
        Study::Deviations => {
            let r = evaluation::deviation_study(&model, a.n, a.seed)?;
            io::write_table(&a.out_dir.join("fig2_deviations.csv"), &r.rows)?;
            let summary = r.summary();
            io::write_table(&a.out_dir.join("fig2_summary.csv"), &summary)?;
            for s in &summary {
                log::info!(
                    "{} {:?}: median {:.4} iqr {:.4} ({} cases)",
                    s.estimator.name(),
                    s.parameter,
                    s.median,
                    s.iqr,
                    s.count
                );
            }
            if r.mle_exclusions > 0 {
                log::warn!(
                    "{} likelihood fits did not converge and were excluded",
                    r.mle_exclusions
                );
            }
        }
        Study::Grid => {
            let grid = GridSpec::new(
                a.grid_points,
                a.grid_points,
                a.replications,
                a.sizes.clone(),
            )?;
            let r = evaluation::mse_grid(&model, &grid, a.seed)?;
            for p in io::write_mse_tables(&a.out_dir, &r)? {
                log::info!("wrote {}", p.display());
            }
            for &size in &a.sizes {
                let nn = r.aggregate(size, evaluation::Estimator::Nn);
                let ml = r.aggregate(size, evaluation::Estimator::Mle);
                log::info!(
                    "n={size}: mse(xi) nn {:?} mle {:?}",
                    nn.map(|v| v.1),
                    ml.map(|v| v.1)
                );
            }
        }
        Study::Ratios => {
            let r = evaluation::interval_study(&model, a.n, a.b, a.level, a.seed)?;
            io::write_table(&a.out_dir.join("fig4_ratios.csv"), &r.rows)?;
            for p in [Parameter::Mu, Parameter::Sigma, Parameter::Xi] {
                log::info!(
                    "{p:?}: coverage {:.3}, median width ratio {:.3}",
                    r.coverage(p),
                    r.median_width_ratio(p)
                );
            }
        }
        Study::Timing => {
            let r = evaluation::timing_benchmark(&model, a.n, a.seed)?;
            io::write_table(&a.out_dir.join("timing.csv"), std::slice::from_ref(&r))?;
            log::info!(
                "nn {:.3}s, mle {:.3}s, speedup {:.1}x",
                r.nn_seconds,
                r.mle_seconds,
                r.speedup
            );
        }
    }
    Ok(())
}
