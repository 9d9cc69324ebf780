//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line and
//! the process exits nonzero if any criterion fails.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use epinode::data_io::{load_dataset, Dataset, DatasetSpec, TimeSeries};
use epinode::decomposition::{vmd_decompose, VmdConfig};
use epinode::diffcore::{directional_check, finite_diff_check, Tape, Tensor, Var};
use epinode::evaluation::{align_applied_rates, parameter_recovery, score_forecast, PeakErrors};
use epinode::latent_model::{record_rollout, rollout, EpiNodeModel, LatentVariant, Rollout};
use epinode::mechanistic::{rk4_step, simulate, EpiState, ModelKind, ParamSchedule, RateTriple, SyntheticKind};
use epinode::training::{
    build_controls, fit, make_weights, split_index, weighted_mse, weighted_mse_var, TrainConfig, TrainOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [0, 1, 2];

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    secs: f64,
}

fn dataset(kind: SyntheticKind) -> Dataset {
    load_dataset(&DatasetSpec::synthetic(kind)).expect("synthetic dataset")
}

struct Run {
    outcome: TrainOutcome,
    rollout: Rollout,
}

fn train_on(series: &TimeSeries, split: f64, cfg: &TrainConfig) -> Run {
    let t = split_index(split, series.len()).unwrap();
    let outcome = fit(series, t, cfg).expect("training");
    let rollout = rollout(&outcome.model, &outcome.controls, series.values[0], &series.times, t).unwrap();
    Run { outcome, rollout }
}

fn seeded(cfg: &TrainConfig, seed: u64) -> TrainConfig {
    TrainConfig { seed, ..cfg.clone() }
}

fn forecast_scores(ds: &Dataset, run: &Run) -> (f64, PeakErrors) {
    let truth = &ds.truth.as_ref().unwrap().infected;
    let (rmse, _, peak) = score_forecast(&run.rollout.infected(), truth, run.outcome.t_split).unwrap();
    (rmse, peak)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn vmd_two_tone() -> Verdict {
    let start = Instant::now();
    let x: Vec<f64> = (0..256)
        .map(|t| (TAU * 5.0 * t as f64 / 256.0).sin() + 0.5 * (TAU * 40.0 * t as f64 / 256.0).sin())
        .collect();
    // the stated K, alpha and tau, iterated to convergence
    let cfg = VmdConfig {
        k: 2,
        alpha: 2000.0,
        tau: 0.1,
        tol: 1e-12,
        max_iter: 5000,
    };
    let set = vmd_decompose(&x, &cfg).unwrap();
    let truth = [5.0 / 256.0, 40.0 / 256.0];
    let freq_err = set
        .center_freqs
        .iter()
        .zip(truth)
        .map(|(w, t)| (w - t).abs() / t)
        .fold(0.0, f64::max);
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let recon = set.reconstruct();
    let recon_err = x.iter().zip(&recon).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak;
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        id: 1,
        name: "VMD two-tone recovery",
        pass: set.converged && freq_err <= 0.10 && recon_err <= 0.02 && secs < 5.0,
        detail: format!(
            "center freqs {:.5?}, max rel freq err {freq_err:.4}, reconstruction max err {recon_err:.4} of peak after {} iterations",
            set.center_freqs, set.iterations_used
        ),
        secs,
    }
}

type Build = for<'t> fn(&[Var<'t>]) -> Var<'t>;

fn gradient_suite() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut random = |n: usize, lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..hi)).collect() };

    // each primitive on random leaves, projected to a scalar by a random vector
    let ops: Vec<(&str, Vec<(usize, f64, f64)>, Build)> = vec![
        ("add", vec![(5, -1.0, 1.0), (5, -1.0, 1.0)], |v| v[0] + v[1]),
        ("sub", vec![(5, -1.0, 1.0), (5, -1.0, 1.0)], |v| v[0] - v[1]),
        ("mul", vec![(5, -1.0, 1.0), (5, -1.0, 1.0)], |v| v[0] * v[1]),
        ("scale+offset", vec![(5, -1.0, 1.0)], |v| v[0].scale(-1.7).offset(0.3)),
        ("scale_by", vec![(5, -1.0, 1.0), (1, 0.5, 2.0)], |v| v[0].scale_by(v[1])),
        ("div_by", vec![(5, -1.0, 1.0), (1, 0.5, 2.0)], |v| v[0].div_by(v[1])),
        ("tanh", vec![(5, -2.0, 2.0)], |v| v[0].tanh()),
        ("sigmoid", vec![(5, -3.0, 3.0)], |v| v[0].sigmoid()),
        ("softplus", vec![(5, -3.0, 3.0)], |v| v[0].softplus()),
        ("clamp_nonneg", vec![(5, 0.1, 1.0)], |v| v[0].clamp_nonneg()),
        ("sum", vec![(5, -1.0, 1.0)], |v| v[0].sum()),
        ("slice+at", vec![(6, -1.0, 1.0)], |v| Var::concat(&[v[0].slice(1, 3), v[0].at(5)])),
        ("concat", vec![(3, -1.0, 1.0), (2, -1.0, 1.0)], |v| Var::concat(&[v[0], v[1]])),
    ];
    let mut worst_primitive = 0.0f64;
    let mut worst_name = "";
    for (name, shapes, build) in &ops {
        let leaves: Vec<Vec<f64>> = shapes.iter().map(|&(n, lo, hi)| random(n, lo, hi)).collect();
        let sizes: Vec<usize> = leaves.iter().map(Vec::len).collect();
        let out_len = {
            let tape = Tape::new();
            let vars: Vec<Var<'_>> = leaves.iter().map(|l| tape.vector(l)).collect();
            build(&vars).len()
        };
        let proj = random(out_len, -1.0, 1.0);
        let scalar = |flat: &[f64]| -> epinode::Result<f64> {
            let tape = Tape::new();
            let mut at = 0;
            let vars: Vec<Var<'_>> = sizes
                .iter()
                .map(|&s| {
                    at += s;
                    tape.vector(&flat[at - s..at])
                })
                .collect();
            Ok(build(&vars).to_vec().iter().zip(&proj).map(|(a, b)| a * b).sum())
        };
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = leaves.iter().map(|l| tape.vector(l)).collect();
        let y = build(&vars);
        let grads = tape.backward(y.id(), &proj).unwrap();
        let analytic: Vec<f64> = vars.iter().flat_map(|v| grads.wrt(*v)).collect();
        let err = finite_diff_check(scalar, &leaves.concat(), &analytic, 1e-6).unwrap();
        if err >= worst_primitive {
            worst_primitive = err;
            worst_name = name;
        }
    }
    {
        let (m, x, proj) = (random(12, -1.0, 1.0), random(4, -1.0, 1.0), random(3, -1.0, 1.0));
        let scalar = |flat: &[f64]| -> epinode::Result<f64> {
            let tape = Tape::new();
            let w = tape.leaf(&Tensor::new(vec![3, 4], flat[..12].to_vec())?);
            let y = w.matvec(tape.vector(&flat[12..])).to_vec();
            Ok(y.iter().zip(&proj).map(|(a, b)| a * b).sum())
        };
        let tape = Tape::new();
        let w = tape.leaf(&Tensor::new(vec![3, 4], m.clone()).unwrap());
        let xv = tape.vector(&x);
        let y = w.matvec(xv);
        let grads = tape.backward(y.id(), &proj).unwrap();
        let analytic = [grads.wrt(w), grads.wrt(xv)].concat();
        let err = finite_diff_check(scalar, &[m, x].concat(), &analytic, 1e-6).unwrap();
        if err >= worst_primitive {
            worst_primitive = err;
            worst_name = "matvec";
        }
    }

    // the full training loss over a 10-step rollout at seeded initial weights
    let cfg = TrainConfig::default();
    let ds = dataset(SyntheticKind::SirsVarying);
    let steps = 10;
    // controls come from a 40-point prefix; the loss covers the first 10 steps
    let (controls, _) = build_controls(&ds.series.values, 40, &cfg).unwrap();
    let model = EpiNodeModel::new(cfg.model.clone(), 11).unwrap();
    let weights = make_weights(steps, cfg.ramp_start, cfg.w_max).unwrap();
    let observed = &ds.series.values[..steps];
    let times = &ds.series.times;
    let tape = Tape::new();
    let params = model.leaves(&tape);
    let rec = record_rollout(&model, &params, &controls, observed[0], times, steps).unwrap();
    let loss = weighted_mse_var(&rec.infected(), observed, &weights, steps).unwrap();
    let grads = tape.backward(loss.id(), &[1.0]).unwrap();
    let analytic: Vec<f64> = params.iter().flat_map(|p| grads.wrt(*p)).collect();
    let point = model.weights().flatten();
    let dirs: Vec<Vec<f64>> = (0..20).map(|_| random(point.len(), -1.0, 1.0)).collect();
    let loss_at = |w: &[f64]| -> epinode::Result<f64> {
        let mut m = model.clone();
        m.set_flat_weights(w)?;
        let r = rollout(&m, &controls, observed[0], &times[..steps], steps)?;
        weighted_mse(&r.infected(), observed, &weights, steps)
    };
    let worst_loss = directional_check(loss_at, &point, &analytic, &dirs, 1e-5).unwrap();
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        id: 2,
        name: "gradient suite",
        pass: worst_primitive <= 1e-6 && worst_loss <= 1e-4 && secs < 30.0,
        detail: format!(
            "worst primitive {worst_primitive:.2e} ({worst_name}); training loss, {} weights, 20 directions: {worst_loss:.2e}",
            point.len()
        ),
        secs,
    }
}

fn mechanistic_fidelity() -> Verdict {
    let start = Instant::now();
    let (beta, gamma, delta) = (0.3, 0.1, 0.02);
    let ds = dataset(SyntheticKind::SirsFixed);
    let i_star = delta * (1.0 - gamma / beta) / (gamma + delta);
    let i_end = *ds.truth.as_ref().unwrap().infected.last().unwrap();
    let eq_err = (i_end - i_star).abs() / i_star;

    let rates = RateTriple::new(beta, gamma, delta);
    let integrate = |dt: f64| -> Vec<f64> {
        let mut y = vec![0.99, 0.01, 0.0];
        for _ in 0..(20.0 / dt).round() as usize {
            y = rk4_step(|s: &[f64]| ModelKind::Sirs.derivative(s, &rates), &y, dt).unwrap();
        }
        y
    };
    let reference = integrate(1.0 / 256.0);
    let err = |dt: f64| {
        integrate(dt)
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(1.0) / err(0.5);

    let y0 = EpiState::new(vec![0.99, 0.01, 0.0]).unwrap();
    let long = simulate(ModelKind::Sirs, &ParamSchedule::Fixed { rates }, &y0, 10_000, 1.0).unwrap();
    let mass_err = long.states.iter().map(|s| (s.mass() - 1.0).abs()).fold(0.0, f64::max);
    Verdict {
        id: 3,
        name: "mechanistic fidelity",
        pass: eq_err <= 0.02 && (12.0..=20.0).contains(&ratio) && mass_err <= 1e-6,
        detail: format!(
            "I at step 199 {i_end:.5} vs I* {i_star:.5} (rel err {eq_err:.4}); RK4 error ratio under dt halving {ratio:.2}; max mass drift {mass_err:.1e} over 10000 steps"
        ),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn forecast_fixed(ds: &Dataset, runs: &[Run]) -> Verdict {
    let start = Instant::now();
    let peak = ds.truth.as_ref().unwrap().infected.iter().copied().fold(0.0, f64::max);
    let scores: Vec<(f64, PeakErrors)> = runs.iter().map(|r| forecast_scores(ds, r)).collect();
    let rmse = mean(&scores.iter().map(|s| s.0).collect::<Vec<_>>());
    let timing = mean(&scores.iter().map(|s| s.1.timing as f64).collect::<Vec<_>>());
    let train_secs: f64 = runs.iter().map(|r| r.outcome.history.wall_clock_secs).sum();
    Verdict {
        id: 4,
        name: "forecast SIRS fixed @0.3",
        pass: rmse <= 0.10 * peak && timing <= 3.0 && train_secs <= 600.0,
        detail: format!(
            "mean RMSE {rmse:.4} vs limit {:.4}; mean peak timing error {timing:.2} steps; per seed RMSE {:.4?}, timing {:?}",
            0.10 * peak,
            scores.iter().map(|s| s.0).collect::<Vec<_>>(),
            scores.iter().map(|s| s.1.timing).collect::<Vec<_>>()
        ),
        secs: start.elapsed().as_secs_f64() + train_secs,
    }
}

fn forecast_varying(ds: &Dataset, runs: &[Run]) -> Verdict {
    let scores: Vec<PeakErrors> = runs.iter().map(|r| forecast_scores(ds, r).1).collect();
    let timing = mean(&scores.iter().map(|p| p.timing as f64).collect::<Vec<_>>());
    let bias = mean(&scores.iter().map(|p| p.relative).collect::<Vec<_>>());
    Verdict {
        id: 5,
        name: "multi-wave SIRS varying @0.6",
        pass: timing <= 5.0 && bias <= 0.30,
        detail: format!(
            "mean peak timing error {timing:.2} steps; mean relative peak bias {bias:.4}; per seed predicted/true peak index {:?}, bias {:.4?}",
            scores.iter().map(|p| (p.predicted_index, p.truth_index)).collect::<Vec<_>>(),
            scores.iter().map(|p| p.relative).collect::<Vec<_>>()
        ),
        secs: runs.iter().map(|r| r.outcome.history.wall_clock_secs).sum(),
    }
}

fn ablation_ordering(ds: &Dataset, full: &[Run], base: &TrainConfig) -> Verdict {
    let start = Instant::now();
    let mean_rmse = |runs: &[Run]| mean(&runs.iter().map(|r| forecast_scores(ds, r).0).collect::<Vec<_>>());
    let cohort = |cfg: &TrainConfig| -> Vec<Run> {
        SEEDS
            .iter()
            .map(|&s| train_on(&ds.series, 0.6, &seeded(cfg, s)))
            .collect()
    };
    let c3 = mean_rmse(full);
    let c2 = mean_rmse(&cohort(&base.clone().with_components(2)));
    let c1 = mean_rmse(&cohort(&base.clone().with_components(1)));
    let mut single = base.clone();
    single.model.variant = LatentVariant::Single;
    let one_ode = mean_rmse(&cohort(&single));
    Verdict {
        id: 6,
        name: "ablation ordering",
        pass: c3 <= c2 && c2 <= c1 && c3 <= one_ode,
        detail: format!("mean RMSE 3C {c3:.4}, 2C {c2:.4}, 1C {c1:.4}; 3ODE {c3:.4} vs 1ODE {one_ode:.4}"),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn parameter_recovery_full_window(ds: &Dataset, base: &TrainConfig) -> Verdict {
    let start = Instant::now();
    let truth = ds.truth.as_ref().unwrap();
    let mut correlations = Vec::new();
    let mut within = true;
    for &seed in &SEEDS {
        let run = train_on(&ds.series, 0.99, &seeded(base, seed));
        let (inferred, applied) = align_applied_rates(&run.rollout.rates, &truth.rates);
        let rec = parameter_recovery(inferred, applied).unwrap();
        correlations.push(rec.beta.correlation.unwrap_or(f64::NAN));
        let bounds = base.model.bounds;
        within &= run.rollout.rates.iter().all(|r| bounds.contains_strictly(r));
    }
    Verdict {
        id: 7,
        name: "parameter recovery @0.99",
        pass: within && correlations.iter().all(|c| *c >= 0.7),
        detail: format!("beta correlation per seed {correlations:.4?}; every rate inside its bounds: {within}"),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn determinism(ds: &Dataset, first: &Run, cfg: &TrainConfig) -> Verdict {
    let start = Instant::now();
    let again = train_on(&ds.series, 0.3, cfg);
    let a = first.outcome.model.weights();
    let b = again.outcome.model.weights();
    let same = bits(&a.flatten()) == bits(&b.flatten()) && a.to_json().unwrap() == b.to_json().unwrap();
    Verdict {
        id: 8,
        name: "determinism",
        pass: same,
        detail: format!("{} weights, bit-identical across two runs with seed {}: {same}", a.numel(), cfg.seed),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn leakage_isolation(ds: &Dataset, reference: &Run, cfg: &TrainConfig) -> Verdict {
    let start = Instant::now();
    let t = reference.outcome.t_split;
    let mut values = ds.series.values.clone();
    values[t..].iter_mut().for_each(|v| *v = 0.0);
    let blanked = TimeSeries::new(ds.series.times.clone(), values).unwrap();
    let run = train_on(&blanked, 0.6, cfg);
    let weights_same = bits(&run.outcome.model.weights().flatten()) == bits(&reference.outcome.model.weights().flatten());
    let losses_same = bits(&run.outcome.history.losses) == bits(&reference.outcome.history.losses);
    Verdict {
        id: 9,
        name: "leakage isolation",
        pass: weights_same && losses_same && !run.outcome.leaked,
        detail: format!(
            "forecast window ({} points) zeroed: weights identical {weights_same}, {} epoch losses identical {losses_same}",
            ds.series.len() - t,
            run.outcome.history.losses.len()
        ),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture or test filters are accepted and ignored
    let total = Instant::now();
    let mut verdicts = Vec::new();
    let mut record = |v: Verdict| {
        println!(
            "criterion {} {:<30} {}  ({:.1}s)  {}",
            v.id,
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.secs,
            v.detail
        );
        verdicts.push((v.id, v.pass));
    };

    record(vmd_two_tone());
    record(gradient_suite());
    record(mechanistic_fidelity());

    let base = TrainConfig::default();
    let fixed = dataset(SyntheticKind::SirsFixed);
    let fixed_runs: Vec<Run> = SEEDS
        .iter()
        .map(|&s| train_on(&fixed.series, 0.3, &seeded(&base, s)))
        .collect();
    record(forecast_fixed(&fixed, &fixed_runs));

    let varying = dataset(SyntheticKind::SirsVarying);
    let varying_runs: Vec<Run> = SEEDS
        .iter()
        .map(|&s| train_on(&varying.series, 0.6, &seeded(&base, s)))
        .collect();
    record(forecast_varying(&varying, &varying_runs));
    record(ablation_ordering(&varying, &varying_runs, &base));
    record(parameter_recovery_full_window(&varying, &base));
    record(determinism(&fixed, &fixed_runs[0], &seeded(&base, SEEDS[0])));
    record(leakage_isolation(&varying, &varying_runs[0], &seeded(&base, SEEDS[0])));

    let failed: Vec<usize> = verdicts.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s{}",
        verdicts.len() - failed.len(),
        verdicts.len(),
        total.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failed: {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
