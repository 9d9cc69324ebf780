use super::*;
use crate::diffcore::directional_check;
use crate::mechanistic::{SyntheticConfig, SyntheticKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick_config() -> TrainConfig {
    TrainConfig {
        epochs: 30,
        model: EpiNodeConfig {
            latent_dim: 3,
            field_hidden: 6,
            fusion_hidden: 6,
            fused_dim: 4,
            decoder_hidden: 6,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn sirs_series(steps: usize) -> TimeSeries {
    let cfg = SyntheticConfig {
        steps,
        ..SyntheticConfig::for_kind(SyntheticKind::SirsFixed)
    };
    TimeSeries::uniform(cfg.generate().unwrap().observed)
}

#[test]
fn weight_ramp_examples() {
    assert_eq!(make_weights(10, 0.8, 5.0).unwrap(), vec![1., 1., 1., 1., 1., 1., 1., 1., 3., 5.]);
    assert!(make_weights(7, 0.5, 1.0).unwrap().iter().all(|&w| w == 1.0));
    for (t, r) in [(2, 0.0), (3, 0.9), (57, 0.8), (120, 0.25)] {
        let w = make_weights(t, r, 4.0).unwrap();
        assert_eq!(w.len(), t);
        assert_eq!(*w.last().unwrap(), 4.0);
        assert!(w.windows(2).all(|p| p[1] >= p[0]));
    }
    assert!(make_weights(1, 0.8, 5.0).is_err());
    assert!(make_weights(10, 0.8, 0.5).is_err());
}

#[test]
fn weighted_mse_examples() {
    assert_eq!(weighted_mse(&[0.3, 0.4], &[0.3, 0.4], &[1.0, 2.0], 2).unwrap(), 0.0);
    let e = 0.25;
    let v = weighted_mse(&[e; 4], &[0.0; 4], &[1.0; 4], 4).unwrap();
    assert!((v - e * e).abs() < 1e-15);
    let v = weighted_mse(&[0.1, 0.2], &[0.0, 0.0], &[1.0, 2.0], 2).unwrap();
    assert!((v - 0.045).abs() < 1e-15);
    // points past the split are ignored
    let v2 = weighted_mse(&[0.1, 0.2, 9.0], &[0.0, 0.0, 0.0], &[1.0, 2.0, 1.0], 2).unwrap();
    assert_eq!(v, v2);
    assert!(weighted_mse(&[0.1], &[0.0, 0.0], &[1.0, 1.0], 2).is_err());

    let tape = Tape::new();
    let p = [tape.scalar(0.1), tape.scalar(0.2)];
    let loss = weighted_mse_var(&p, &[0.0, 0.0], &[1.0, 2.0], 2).unwrap();
    assert!((loss.item() - 0.045).abs() < 1e-15);
    let g = tape.backward(loss.id(), &[1.0]).unwrap();
    // d/dp_i = 2 w_i p_i / t_split
    assert!((g.wrt(p[0])[0] - 0.1).abs() < 1e-15);
    assert!((g.wrt(p[1])[0] - 0.4).abs() < 1e-15);
}

#[test]
fn split_index_rounds_and_validates() {
    assert_eq!(split_index(0.3, 200).unwrap(), 60);
    assert_eq!(split_index(0.6, 200).unwrap(), 120);
    assert!(split_index(0.0, 200).is_err());
    assert!(split_index(0.999, 100).is_err());
}

#[test]
fn zero_epochs_leaves_model_unchanged() {
    let cfg = TrainConfig {
        epochs: 0,
        ..quick_config()
    };
    let series = sirs_series(60);
    let model = EpiNodeModel::new(cfg.model.clone(), 3).unwrap();
    let out = train(model.clone(), &series, 30, &cfg).unwrap();
    assert_eq!(out.model.weights(), model.weights());
    assert!(out.history.losses.is_empty());
}

#[test]
fn training_reduces_loss_and_keeps_best() {
    let series = sirs_series(60);
    let out = fit(&series, 30, &quick_config()).unwrap();
    let h = &out.history;
    assert_eq!(h.losses.len(), 30);
    assert!(h.best_loss < h.losses[0]);
    assert!(h.losses.iter().all(|&l| l >= h.best_loss));
    // the returned weights reproduce the best loss
    let check = TrainConfig {
        epochs: 0,
        ..quick_config()
    };
    let again = train(out.model.clone(), &series, 30, &check).unwrap();
    let (controls, _) = build_controls(&series.values, 30, &check).unwrap();
    let roll = crate::latent_model::rollout(&again.model, &controls, series.values[0], &series.times, 30).unwrap();
    let w = make_weights(30, 0.8, 5.0).unwrap();
    let loss = weighted_mse(&roll.infected(), &series.values, &w, 30).unwrap();
    assert!((loss - h.best_loss).abs() <= 1e-15 * h.best_loss.max(1.0), "{loss} vs {}", h.best_loss);
}

#[test]
fn identical_seeds_give_identical_runs() {
    let series = sirs_series(60);
    let a = fit(&series, 30, &quick_config()).unwrap();
    let b = fit(&series, 30, &quick_config()).unwrap();
    assert_eq!(a.history.losses, b.history.losses);
    assert_eq!(a.model.weights(), b.model.weights());
}

#[test]
fn forecast_window_does_not_influence_training() {
    let series = sirs_series(60);
    let mut blanked = series.clone();
    blanked.values[30..].iter_mut().for_each(|v| *v = 0.0);
    let a = fit(&series, 30, &quick_config()).unwrap();
    let b = fit(&blanked, 30, &quick_config()).unwrap();
    assert_eq!(a.history.losses, b.history.losses);
    assert_eq!(a.history.grad_norms, b.history.grad_norms);
    assert_eq!(a.model.weights(), b.model.weights());
    assert!(!a.leaked);
}

#[test]
fn paper_faithful_policy_reads_the_future() {
    let series = sirs_series(80);
    let cfg = TrainConfig {
        policy: ControlPolicy::PaperFaithful,
        ..quick_config()
    };
    let (causal, _) = build_controls(&series.values, 40, &TrainConfig { policy: ControlPolicy::Causal, ..cfg.clone() }).unwrap();
    let (full, leaked) = build_controls(&series.values, 40, &cfg).unwrap();
    assert!(leaked);
    assert_eq!(full.len(), 80);
    assert_ne!(causal.components, full.components);
}

#[test]
fn training_loss_gradient_matches_finite_differences() {
    let cfg = quick_config();
    let series = sirs_series(40);
    let t_split = 12;
    let (controls, _) = build_controls(&series.values, t_split, &cfg).unwrap();
    let model = EpiNodeModel::new(cfg.model.clone(), 21).unwrap();
    let objective = Objective {
        controls: &controls,
        observed: &series.values[..t_split],
        times: &series.times,
        weights: make_weights(t_split, 0.8, 5.0).unwrap(),
        t_split,
    };
    let (_, grad) = objective.evaluate(&model, 0).unwrap();
    let point = model.weights().flatten();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dirs: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..point.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let worst = directional_check(
        |w| {
            let mut m = model.clone();
            m.set_flat_weights(w)?;
            Ok(objective.evaluate(&m, 0)?.0)
        },
        &point,
        &grad,
        &dirs,
        1e-5,
    )
    .unwrap();
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn config_validation() {
    let mut cfg = TrainConfig::default();
    assert!(cfg.validate().is_ok());
    cfg.model.components = 2;
    assert!(cfg.validate().is_err());
    let cfg = TrainConfig::default().with_components(2);
    assert!(cfg.validate().is_ok());
    let cfg = TrainConfig {
        ramp_start: 1.0,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
    let series = sirs_series(30);
    assert!(fit(&series, 30, &quick_config()).is_err());
}
