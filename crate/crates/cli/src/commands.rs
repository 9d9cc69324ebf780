use std::path::{Path, PathBuf};

use epinode::data_io::{
    artifact_fingerprint, load_dataset, load_run, read_series_csv, save_run, write_atomic, Dataset, DatasetSpec,
    ForecastTrajectories, RunArtifact,
};
use epinode::evaluation::{
    align_applied_rates, run_ablations, run_benchmark, score_forecast, BenchmarkPlan, Variant,
};
use epinode::latent_model::{rollout, LatentVariant, Rollout};
use epinode::mechanistic::SyntheticConfig;
use epinode::training::{build_controls, fit, split_index};
use serde_json::json;

use crate::args::*;
use crate::config::{
    apply_model_args, parse_delay, parse_kind, parse_method, parse_variant, resolve_dataset, CliConfig,
};
use crate::error::Failure;
use crate::svg::{emit_svg, Series};

pub struct Context {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub overwrite: bool,
    pub config: CliConfig,
}

impl Context {
    fn out_dir() -> PathBuf {
        std::env::var_os("EPINODE_OUT_DIR").map_or_else(|| PathBuf::from("."), PathBuf::from)
    }

    /// `--out`, or `default_name` inside the default output directory.
    fn out_file(&self, default_name: &str) -> Result<PathBuf, Failure> {
        let path = self.out.clone().unwrap_or_else(|| Self::out_dir().join(default_name));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        Ok(path)
    }

    fn out_directory(&self) -> Result<PathBuf, Failure> {
        let dir = self.out.clone().unwrap_or_else(Self::out_dir);
        create_dir(&dir)?;
        Ok(dir)
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Result<(), Failure> {
        write_atomic(path, bytes, self.overwrite)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn load(spec: &DatasetSpec) -> Result<Dataset, Failure> {
    eprintln!("loading {}", spec.label());
    Ok(load_dataset(spec)?)
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), Failure> {
    let kind = parse_kind(&args.kind)?;
    let mut cfg = match &ctx.config.dataset {
        Some(DatasetSpec::Synthetic(c)) if c.kind == kind => c.clone(),
        _ => SyntheticConfig::for_kind(kind),
    };
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    if let Some(n) = args.noise {
        cfg.noise_sigma = n;
    }
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let generated = cfg.generate()?;
    let traj = &generated.trajectory;
    let mut header = vec!["t".to_string()];
    header.extend(traj.kind.compartment_names().iter().map(|s| s.to_string()));
    header.extend(["beta", "gamma", "delta", "observed"].map(String::from));
    let rows: Vec<Vec<String>> = (0..traj.times.len())
        .map(|i| {
            let mut row = vec![num(traj.times[i])];
            row.extend(traj.states[i].values().iter().map(|v| num(*v)));
            let r = &traj.rates[i];
            row.extend([num(r.beta), num(r.gamma), num(r.delta), num(generated.observed[i])]);
            row
        })
        .collect();
    ctx.write(&ctx.out_file("simulation.csv")?, &csv_bytes(&header, &rows)?)
}

pub fn decompose(ctx: &Context, args: &DecomposeArgs) -> Result<(), Failure> {
    let bytes = std::fs::read(&args.input)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let first = csv::Reader::from_reader(bytes.as_slice())
        .headers()?
        .get(0)
        .map(str::to_string);
    let time_column = first.filter(|h| *h != args.column);
    let table = read_series_csv(&bytes, &args.column, time_column.as_deref())?;
    let mut cfg = ctx.config.train.decomposition.clone();
    if let Some(k) = args.k {
        cfg.vmd.k = k;
    }
    if let Some(c) = args.components {
        cfg.components = c;
    }
    if let Some(m) = &args.method {
        cfg.method = parse_method(m)?;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let tsr = cfg.decompose(&table.values)?;

    let labels: Vec<String> = match &table.labels {
        Some(l) => l.clone(),
        None => (0..table.values.len()).map(|i| i.to_string()).collect(),
    };
    let header = ["t", "value", "trend", "seasonal", "residual"].map(String::from);
    let rows: Vec<Vec<String>> = (0..table.values.len())
        .map(|i| {
            vec![
                labels[i].clone(),
                num(table.values[i]),
                num(tsr.trend[i]),
                num(tsr.seasonal[i]),
                num(tsr.residual[i]),
            ]
        })
        .collect();
    let max_err = tsr
        .reconstruct()
        .iter()
        .zip(&table.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let csv_path = ctx.out_file("decomposition.csv")?;
    let json_path = csv_path.with_extension("json");
    let summary = json!({
        "input": args.input,
        "column": args.column,
        "config": cfg,
        "seed": ctx.seed,
        "length": table.values.len(),
        "filled_gaps": table.gaps,
        "dominant_period": tsr.dominant_period,
        "max_reconstruction_error": max_err,
    });
    ctx.write(&csv_path, &csv_bytes(&header, &rows)?)?;
    ctx.write(&json_path, serde_json::to_string_pretty(&summary)?.as_bytes())
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<(), Failure> {
    let mut cfg = ctx.config.train.clone();
    apply_model_args(&mut cfg, &args.model)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let split = args.split.unwrap_or(ctx.config.split);
    let dataset = load(&resolve_dataset(ctx.config.dataset.clone(), &args.data)?)?;
    let t_split = split_index(split, dataset.series.len()).map_err(|e| Failure::Usage(e.to_string()))?;
    eprintln!("training {} epochs on {t_split} of {} points", cfg.epochs, dataset.series.len());
    let out = fit(&dataset.series, t_split, &cfg)?;
    eprintln!(
        "best loss {:.4e} at epoch {} ({:.1}s)",
        out.history.best_loss, out.history.best_epoch, out.history.wall_clock_secs
    );
    if out.leaked {
        eprintln!("warning: controls were built from observations past the split");
    }
    let roll = rollout(&out.model, &out.controls, dataset.series.values[0], &dataset.series.times, t_split)?;
    let forecast = ForecastTrajectories::from_rollout(&roll, &dataset.series.values);
    let mut artifact = RunArtifact::new(&dataset, split, t_split, cfg, &out.model, out.history, forecast, out.leaked);
    add_metrics(&mut artifact, &dataset, &roll)?;
    let path = ctx.out_file("run.json")?;
    save_run(&artifact, &path, ctx.overwrite)?;
    eprintln!("wrote {}", path.display());
    let fingerprint = artifact_fingerprint(&artifact)?;
    println!("{}", json!({ "artifact": path, "fingerprint": fingerprint, "metrics": artifact.metrics }));
    Ok(())
}

fn add_metrics(artifact: &mut RunArtifact, dataset: &Dataset, roll: &Rollout) -> Result<(), Failure> {
    let target = dataset.truth.as_ref().map_or(&dataset.series.values, |t| &t.infected);
    let (rmse, mae, peak) = score_forecast(&roll.infected(), target, artifact.t_split)?;
    let m = &mut artifact.metrics;
    m.insert("forecast_rmse".into(), rmse);
    m.insert("forecast_mae".into(), mae);
    m.insert("peak_timing_error".into(), peak.timing as f64);
    m.insert("peak_magnitude_error".into(), peak.magnitude);
    m.insert("peak_relative_error".into(), peak.relative);
    if let Some(truth) = &dataset.truth {
        let (inferred, applied) = align_applied_rates(&roll.rates, &truth.rates);
        let rec = epinode::evaluation::parameter_recovery(inferred, applied)?;
        m.insert("beta_rmse".into(), rec.beta.rmse);
        if let Some(c) = rec.beta.correlation {
            m.insert("beta_correlation".into(), c);
        }
    }
    Ok(())
}

pub fn forecast(ctx: &Context, args: &ForecastArgs) -> Result<(), Failure> {
    let artifact = load_run(&args.run)?;
    let dataset = load(&artifact.dataset)?;
    artifact.verify_fingerprint(&dataset)?;
    let model = artifact.model()?;
    let (controls, _) = build_controls(&dataset.series.values, artifact.t_split, &artifact.train)?;
    let roll = rollout(&model, &controls, dataset.series.values[0], &dataset.series.times, artifact.t_split)?;
    if ForecastTrajectories::from_rollout(&roll, &dataset.series.values) != artifact.forecast {
        log::warn!("recomputed forecast differs from the one stored in the artifact");
    }
    let n = roll.times.len();
    let truth = dataset.truth.as_ref();

    let mut header: Vec<String> = ["t", "observed", "S", "I", "R", "forecast"].map(String::from).to_vec();
    if truth.is_some() {
        header.push("true_I".into());
    }
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let s = roll.states[i].values();
            let mut row = vec![
                num(roll.times[i]),
                num(dataset.series.values[i]),
                num(s[0]),
                num(s[1]),
                num(s[2]),
                if i >= artifact.t_split { "1" } else { "0" }.to_string(),
            ];
            if let Some(t) = truth {
                row.push(num(t.infected[i]));
            }
            row
        })
        .collect();

    // rates[i] moved the state into point i; the generator's rates[i - 1] did the same
    let mut p_header: Vec<String> = ["t", "beta", "gamma", "delta"].map(String::from).to_vec();
    if truth.is_some() {
        p_header.extend(["true_beta", "true_gamma", "true_delta"].map(String::from));
    }
    let p_rows: Vec<Vec<String>> = (1..n)
        .map(|i| {
            let r = &roll.rates[i];
            let mut row = vec![num(roll.times[i]), num(r.beta), num(r.gamma), num(r.delta)];
            if let Some(t) = truth {
                let a = &t.rates[i - 1];
                row.extend([num(a.beta), num(a.gamma), num(a.delta)]);
            }
            row
        })
        .collect();
    let dir = ctx.out_directory()?;
    ctx.write(&dir.join("forecast.csv"), &csv_bytes(&header, &rows)?)?;
    ctx.write(&dir.join("parameters.csv"), &csv_bytes(&p_header, &p_rows)?)
}

/// Configured seeds, shifted by `--seed` when given.
fn seeds(ctx: &Context, explicit: &Option<Vec<u64>>, configured: &[u64]) -> Vec<u64> {
    match (explicit, ctx.seed) {
        (Some(s), _) => s.clone(),
        (None, Some(base)) => configured.iter().map(|s| s + base).collect(),
        (None, None) => configured.to_vec(),
    }
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<(), Failure> {
    let mut base = ctx.config.train.clone();
    apply_model_args(&mut base, &args.model)?;
    let names = args
        .variants
        .clone()
        .unwrap_or_else(|| vec!["epinode".into(), "1ode".into()]);
    let mut variants = Vec::new();
    for name in &names {
        variants.push(match name.as_str() {
            "oracle" => Variant::oracle(),
            "epinode" | "3ode" => {
                let mut cfg = base.clone();
                cfg.model.variant = LatentVariant::PerComponent;
                Variant::model("epinode", cfg)
            }
            "1ode" => {
                let mut cfg = base.clone();
                cfg.model.variant = parse_variant("1ode")?;
                Variant::model("1ode", cfg)
            }
            other => return Err(Failure::Usage(format!("unknown variant {other:?}; expected epinode, 1ode or oracle"))),
        });
    }
    let plan = BenchmarkPlan {
        splits: args.splits.clone().unwrap_or_else(|| ctx.config.splits.clone()),
        seeds: seeds(ctx, &args.seeds, &ctx.config.seeds),
        variants,
        jobs: args.jobs.unwrap_or(ctx.config.jobs),
    };
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let dataset = load(&resolve_dataset(ctx.config.dataset.clone(), &args.data)?)?;
    let cells = plan.splits.len() * plan.seeds.len() * plan.variants.len();
    eprintln!("running {cells} cells on {} worker(s)", plan.jobs);
    let report = run_benchmark(&dataset, &plan)?;
    report.write(&ctx.out_directory()?, "benchmark", ctx.overwrite)?;
    print!("{}", report.summary_table());
    Ok(())
}

pub fn ablate(ctx: &Context, args: &AblateArgs) -> Result<(), Failure> {
    let mut plan = ctx.config.ablation.clone();
    if ctx.config.train != Default::default() && plan.base == Default::default() {
        plan.base = ctx.config.train.clone();
    }
    if let Some(e) = args.epochs {
        plan.base.epochs = e;
    }
    if let Some(s) = args.split {
        plan.split = s;
    }
    plan.seeds = seeds(ctx, &args.seeds, &plan.seeds);
    if let Some(v) = &args.variants {
        plan.variants = v.iter().map(|s| parse_variant(s)).collect::<Result<_, _>>()?;
    }
    if let Some(d) = &args.delays {
        plan.delays = d.iter().map(|s| parse_delay(s)).collect::<Result<_, _>>()?;
    }
    if let Some(c) = &args.components {
        plan.components = c.clone();
    }
    if let Some(m) = &args.methods {
        plan.methods = m.iter().map(|s| parse_method(s)).collect::<Result<_, _>>()?;
    }
    if let Some(j) = args.jobs {
        plan.jobs = j;
    }
    if !(plan.split > 0.0 && plan.split < 1.0) {
        return Err(Failure::Usage(format!("split {} is outside (0, 1)", plan.split)));
    }
    let dataset = load(&resolve_dataset(ctx.config.dataset.clone(), &args.data)?)?;
    let report = run_ablations(&dataset, &plan)?;
    report.write(&ctx.out_directory()?, "ablation", ctx.overwrite)?;
    print!("{}", report.summary_table());
    Ok(())
}

pub fn plot(ctx: &Context, args: &PlotArgs) -> Result<(), Failure> {
    let bytes = std::fs::read(&args.input)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>()?;
    let column = |name: &str| -> Result<Vec<f64>, Failure> {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Usage(format!("column {name:?} not in {headers:?}")))?;
        records
            .iter()
            .map(|r| {
                let cell = r.get(idx).unwrap_or("").trim();
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| Failure::Usage(format!("column {name:?} has non-numeric cell {cell:?}")))
                }
            })
            .collect()
    };
    let x_name = args.x.clone().or_else(|| headers.first().cloned()).unwrap_or_default();
    let x = column(&x_name)?;
    let names: Vec<String> = match &args.columns {
        Some(c) => c.clone(),
        None => headers
            .iter()
            .filter(|h| **h != x_name && column(h).is_ok())
            .cloned()
            .collect(),
    };
    let values: Vec<Vec<f64>> = names.iter().map(|n| column(n)).collect::<Result<_, _>>()?;
    let series: Vec<Series<'_>> = names
        .iter()
        .zip(&values)
        .map(|(name, v)| Series { name, values: v })
        .collect();
    let svg = emit_svg(&series, &x, args.split, &args.title)?;
    ctx.write(&ctx.out_file("plot.svg")?, svg.as_bytes())
}
