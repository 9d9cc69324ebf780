use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Softplus,
    Identity,
}

impl Activation {
    fn apply(self, x: Var<'_>) -> Var<'_> {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => x.sigmoid(),
            Activation::Softplus => x.softplus(),
            Activation::Identity => x,
        }
    }
}

/// Layer widths plus one activation per weight layer (the last one is the
/// output activation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    /// Same activation on every hidden layer, separate output activation.
    pub fn new(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let layers = widths.len().saturating_sub(1);
        let mut activations = vec![hidden; layers];
        if let Some(last) = activations.last_mut() {
            *last = output;
        }
        let spec = Self {
            widths,
            activations,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::Input(
                "an MLP needs at least an input and an output width".into(),
            ));
        }
        if let Some(pos) = self.widths.iter().position(|&w| w == 0) {
            return Err(Error::Input(format!("layer width {pos} is zero")));
        }
        if self.activations.len() != self.widths.len() - 1 {
            return Err(Error::Input(format!(
                "{} activations given for {} weight layers",
                self.activations.len(),
                self.widths.len() - 1
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("validated spec")
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Weights as `[W0, b0, W1, b1, ...]` with `W` shaped `[out, in]`,
    /// uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Tensor> {
        let mut out = Vec::with_capacity(2 * self.num_layers());
        for pair in self.widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let s = 1.0 / (fan_in as f64).sqrt();
            let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-s..=s)).collect::<Vec<_>>();
            let w = draw(fan_in * fan_out);
            let b = draw(fan_out);
            out.push(Tensor::new(vec![fan_out, fan_in], w).expect("sized above"));
            out.push(Tensor::vector(b));
        }
        out
    }
}

/// Forward pass recorded on `input`'s tape. `weights` alternates matrix and
/// bias nodes as produced by [`MlpSpec::init_weights`].
pub fn mlp_apply<'t>(spec: &MlpSpec, weights: &[Var<'t>], input: Var<'t>) -> Result<Var<'t>> {
    if weights.len() != 2 * spec.num_layers() {
        return Err(Error::Dimension(format!(
            "expected {} weight tensors, got {}",
            2 * spec.num_layers(),
            weights.len()
        )));
    }
    if input.len() != spec.input_dim() {
        return Err(Error::Dimension(format!(
            "layer 0: input has {} entries, spec expects {}",
            input.len(),
            spec.input_dim()
        )));
    }
    let mut h = input;
    for (layer, (pair, act)) in spec.widths.windows(2).zip(&spec.activations).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let (w, b) = (weights[2 * layer], weights[2 * layer + 1]);
        if w.matrix_cols() != Some(fan_in) || w.len() != fan_in * fan_out || b.len() != fan_out {
            return Err(Error::Dimension(format!(
                "layer {layer}: weight has {} values ({:?} columns), bias has {}; expected [{fan_out}, {fan_in}] and {fan_out}",
                w.len(),
                w.matrix_cols(),
                b.len()
            )));
        }
        h = act.apply(w.matvec(h) + b);
    }
    Ok(h)
}

/// Plain evaluation on a scratch tape.
pub fn mlp_eval(spec: &MlpSpec, weights: &[Tensor], input: &[f64]) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let ws: Vec<_> = weights.iter().map(|w| tape.leaf(w)).collect();
    let out = mlp_apply(spec, &ws, tape.vector(input))?;
    tape.check_finite()?;
    Ok(out.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_network() {
        let spec = MlpSpec::new(vec![2, 2], Activation::Identity, Activation::Identity).unwrap();
        let w = vec![
            Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::vector(vec![0.0, 0.0]),
        ];
        assert_eq!(mlp_eval(&spec, &w, &[0.3, -0.1]).unwrap(), vec![0.3, -0.1]);
    }

    #[test]
    fn single_sigmoid_neuron() {
        let spec = MlpSpec::new(vec![1, 1], Activation::Identity, Activation::Sigmoid).unwrap();
        let w = vec![Tensor::new(vec![1, 1], vec![1.0]).unwrap(), Tensor::scalar(0.0)];
        assert_eq!(mlp_eval(&spec, &w, &[0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn two_three_one_matches_scalar_arithmetic() {
        let spec = MlpSpec::new(vec![2, 3, 1], Activation::Tanh, Activation::Identity).unwrap();
        let w = spec.init_weights(&mut ChaCha8Rng::seed_from_u64(11));
        let (w0, b0, w1, b1) = (w[0].data(), w[1].data(), w[2].data(), w[3].data());
        let x = [1.0, 1.0];
        let mut expected = b1[0];
        for j in 0..3 {
            let pre = w0[2 * j] * x[0] + w0[2 * j + 1] * x[1] + b0[j];
            expected += w1[j] * pre.tanh();
        }
        let got = mlp_eval(&spec, &w, &x).unwrap();
        assert!((got[0] - expected).abs() < 1e-15, "{got:?} vs {expected}");
    }

    #[test]
    fn shape_errors_name_the_layer() {
        let spec = MlpSpec::new(vec![2, 3, 1], Activation::Tanh, Activation::Identity).unwrap();
        let mut w = spec.init_weights(&mut ChaCha8Rng::seed_from_u64(1));
        w[2] = Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap();
        let err = mlp_eval(&spec, &w, &[1.0, 1.0]).unwrap_err().to_string();
        assert!(err.contains("layer 1"), "{err}");
        assert!(mlp_eval(&spec, &spec.init_weights(&mut ChaCha8Rng::seed_from_u64(1)), &[1.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![3], Activation::Tanh, Activation::Tanh).is_err());
        assert!(MlpSpec::new(vec![3, 0, 1], Activation::Tanh, Activation::Tanh).is_err());
    }
}
