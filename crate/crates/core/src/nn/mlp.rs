//! Fully connected networks with tanh/identity layers and an optional
//! output transform, plus exact reverse-mode gradients.
//!
//! Zero entries of a layer input are skipped in the forward pass and in
//! the weight gradient, so sparse hashed features cost only their
//! non-zeros.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::softmax;
use super::tensor::Tensor2;
use crate::error::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutputTransform {
    None,
    Softmax,
    /// `s * tanh(z)`, bounding each output to `(-s, s)`.
    ScaledTanh(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    activations: Vec<Activation>,
    output: OutputTransform,
}

impl MlpSpec {
    pub fn new(
        widths: Vec<usize>,
        activations: Vec<Activation>,
        output: OutputTransform,
    ) -> Result<Self, NnError> {
        if widths.len() < 2 {
            return Err(NnError::InvalidSpec(
                "need at least input and output widths",
            ));
        }
        if widths.contains(&0) {
            return Err(NnError::InvalidSpec("layer widths must be positive"));
        }
        if activations.len() != widths.len() - 1 {
            return Err(NnError::InvalidSpec("one activation per layer"));
        }
        if let OutputTransform::ScaledTanh(s) = output {
            if !(s.is_finite() && s > 0.0) {
                return Err(NnError::InvalidSpec("tanh scale must be positive"));
            }
        }
        Ok(Self {
            widths,
            activations,
            output,
        })
    }

    /// A single affine layer.
    pub fn affine(
        input: usize,
        output: usize,
        transform: OutputTransform,
    ) -> Result<Self, NnError> {
        Self::new(vec![input, output], vec![Activation::Identity], transform)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn output(&self) -> OutputTransform {
        self.output
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("validated non-empty")
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    spec: MlpSpec,
    weights: Vec<Tensor2>,
    biases: Vec<Tensor2>,
}

/// Intermediates of one forward pass, consumed by [`Mlp::backprop`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    widths: Vec<usize>,
    /// Non-zero entries of each layer's input.
    inputs: Vec<Vec<(usize, f64)>>,
    /// Post-activation output of each layer.
    activations: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Final layer output before the output transform.
    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("at least one layer")
    }
}

impl Mlp {
    pub fn zeros(spec: MlpSpec) -> Self {
        let mut weights = Vec::with_capacity(spec.layers());
        let mut biases = Vec::with_capacity(spec.layers());
        for pair in spec.widths.windows(2) {
            weights.push(Tensor2::zeros(pair[1], pair[0]));
            biases.push(Tensor2::zeros(pair[1], 1));
        }
        Self {
            spec,
            weights,
            biases,
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn xavier<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Self {
        let mut m = Self::zeros(spec);
        for w in &mut m.weights {
            let limit = libm::sqrt(6.0 / (w.rows() + w.cols()) as f64);
            for x in w.data_mut() {
                *x = rng.random_range(-limit..limit);
            }
        }
        m
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.spec.clone())
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn weight(&self, layer: usize) -> &Tensor2 {
        &self.weights[layer]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut Tensor2 {
        &mut self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &Tensor2 {
        &self.biases[layer]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut Tensor2 {
        &mut self.biases[layer]
    }

    /// Parameter tensors in the order `w0, b0, w1, b1, ...`.
    pub fn tensors(&self) -> Vec<&Tensor2> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    /// Names matching [`Mlp::tensors`], under `prefix`.
    pub fn tensor_names(&self, prefix: &str) -> Vec<alloc::string::String> {
        (0..self.spec.layers())
            .flat_map(|l| {
                [
                    alloc::format!("{prefix}.layer{l}.weight"),
                    alloc::format!("{prefix}.layer{l}.bias"),
                ]
            })
            .collect()
    }

    /// Rebuilds a network from tensors in [`Mlp::tensors`] order.
    pub fn from_tensors(spec: MlpSpec, tensors: Vec<Tensor2>) -> Result<Self, NnError> {
        if tensors.len() != 2 * spec.layers() {
            return Err(NnError::InvalidSpec("wrong number of tensors"));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut it = tensors.into_iter();
        for pair in spec.widths.windows(2) {
            let w = it.next().expect("counted");
            let b = it.next().expect("counted");
            w.check_shape((pair[1], pair[0]))?;
            b.check_shape((pair[1], 1))?;
            weights.push(w);
            biases.push(b);
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }

    pub fn apply(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache), NnError> {
        if x.len() != self.spec.input_width() {
            return Err(NnError::Shape {
                expected: (self.spec.input_width(), 1),
                actual: (x.len(), 1),
            });
        }
        let layers = self.spec.layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut activations = Vec::with_capacity(layers);
        let mut current: Vec<(usize, f64)> = nonzeros(x);
        for l in 0..layers {
            let w = &self.weights[l];
            let b = self.biases[l].data();
            let mut out = Vec::with_capacity(w.rows());
            for (i, &bi) in b.iter().enumerate() {
                let row = w.row(i);
                let mut z = bi;
                for &(j, xj) in &current {
                    z += row[j] * xj;
                }
                out.push(match self.spec.activations[l] {
                    Activation::Tanh => libm::tanh(z),
                    Activation::Identity => z,
                });
            }
            let next = nonzeros(&out);
            inputs.push(core::mem::replace(&mut current, next));
            activations.push(out);
        }
        let logits = activations.last().expect("at least one layer");
        let output = match self.spec.output {
            OutputTransform::None => logits.clone(),
            OutputTransform::Softmax => softmax(logits),
            OutputTransform::ScaledTanh(s) => logits.iter().map(|&z| s * libm::tanh(z)).collect(),
        };
        let cache = MlpCache {
            widths: self.spec.widths.clone(),
            inputs,
            activations,
            output: output.clone(),
        };
        Ok((output, cache))
    }

    /// Accumulates into `grads` the gradient given `d_out`, the derivative
    /// of the loss with respect to the transformed output. Returns the
    /// gradient with respect to the input when `want_input` is set.
    pub fn backprop(
        &self,
        cache: &MlpCache,
        d_out: &[f64],
        grads: &mut Mlp,
        want_input: bool,
    ) -> Result<Option<Vec<f64>>, NnError> {
        self.check_cache(cache, d_out)?;
        let d_logits: Vec<f64> = match self.spec.output {
            OutputTransform::None => d_out.to_vec(),
            OutputTransform::Softmax => {
                let p = &cache.output;
                let dot: f64 = p.iter().zip(d_out).map(|(a, b)| a * b).sum();
                p.iter()
                    .zip(d_out)
                    .map(|(pi, gi)| pi * (gi - dot))
                    .collect()
            }
            OutputTransform::ScaledTanh(s) => cache
                .output
                .iter()
                .zip(d_out)
                .map(|(y, g)| g * (s - y * y / s))
                .collect(),
        };
        self.backprop_logits(cache, &d_logits, grads, want_input)
    }

    /// Like [`Mlp::backprop`], with the derivative taken with respect to the
    /// final layer output before the output transform.
    pub fn backprop_logits(
        &self,
        cache: &MlpCache,
        d_logits: &[f64],
        grads: &mut Mlp,
        want_input: bool,
    ) -> Result<Option<Vec<f64>>, NnError> {
        self.check_cache(cache, d_logits)?;
        if grads.spec.widths != self.spec.widths {
            return Err(NnError::InvalidSpec(
                "gradient buffer has a different shape",
            ));
        }
        let mut upstream = d_logits.to_vec();
        for l in (0..self.spec.layers()).rev() {
            let post = &cache.activations[l];
            let delta: Vec<f64> = match self.spec.activations[l] {
                Activation::Tanh => upstream
                    .iter()
                    .zip(post)
                    .map(|(g, y)| g * (1.0 - y * y))
                    .collect(),
                Activation::Identity => upstream,
            };
            let gw = &mut grads.weights[l];
            let cols = gw.cols();
            let gw = gw.data_mut();
            let gb = grads.biases[l].data_mut();
            for (i, &di) in delta.iter().enumerate() {
                if di == 0.0 {
                    continue;
                }
                gb[i] += di;
                let row = &mut gw[i * cols..(i + 1) * cols];
                for &(j, xj) in &cache.inputs[l] {
                    row[j] += di * xj;
                }
            }
            if l == 0 && !want_input {
                return Ok(None);
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; w.cols()];
            for (i, &di) in delta.iter().enumerate() {
                if di == 0.0 {
                    continue;
                }
                for (p, wij) in prev.iter_mut().zip(w.row(i)) {
                    *p += di * wij;
                }
            }
            upstream = prev;
        }
        Ok(Some(upstream))
    }

    /// Fresh gradients for one forward pass.
    pub fn gradients(&self, cache: &MlpCache, d_out: &[f64]) -> Result<Mlp, NnError> {
        let mut g = self.zeros_like();
        self.backprop(cache, d_out, &mut g, false)?;
        Ok(g)
    }

    fn check_cache(&self, cache: &MlpCache, d: &[f64]) -> Result<(), NnError> {
        if cache.widths != self.spec.widths || cache.inputs.len() != self.spec.layers() {
            return Err(NnError::StaleCache);
        }
        if d.len() != self.spec.output_width() {
            return Err(NnError::Shape {
                expected: (self.spec.output_width(), 1),
                actual: (d.len(), 1),
            });
        }
        Ok(())
    }
}

fn nonzeros(x: &[f64]) -> Vec<(usize, f64)> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, GradCheckOptions};
    use crate::nn::tensor::{assign_flat, flatten};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let spec = MlpSpec::affine(3, 3, OutputTransform::None).unwrap();
        let mut m = Mlp::zeros(spec);
        *m.weight_mut(0) = Tensor2::identity(3);
        let x = [0.5, -2.0, 3.25];
        let (y, _) = m.apply(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn zero_tanh_net_outputs_zero() {
        let spec = MlpSpec::new(
            vec![4, 5, 2],
            vec![Activation::Tanh, Activation::Tanh],
            OutputTransform::None,
        )
        .unwrap();
        let (y, _) = Mlp::zeros(spec).apply(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(y, [0.0, 0.0]);
    }

    #[test]
    fn softmax_output_is_distribution() {
        let spec = MlpSpec::affine(3, 7, OutputTransform::Softmax).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mlp::xavier(spec, &mut rng);
        for x in [[1000.0, -5.0, 2.0], [0.0, 0.0, 0.0], [-700.0, 700.0, 1.0]] {
            let (p, _) = m.apply(&x).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let spec = MlpSpec::affine(3, 2, OutputTransform::None).unwrap();
        let m = Mlp::zeros(spec);
        assert!(matches!(m.apply(&[1.0]), Err(NnError::Shape { .. })));
        let other = Mlp::zeros(MlpSpec::affine(4, 2, OutputTransform::None).unwrap());
        let (_, cache) = other.apply(&[1.0; 4]).unwrap();
        assert_eq!(
            m.gradients(&cache, &[1.0, 1.0]).unwrap_err(),
            NnError::StaleCache
        );
        assert!(MlpSpec::new(vec![3], vec![], OutputTransform::None).is_err());
        assert!(MlpSpec::new(vec![3, 0], vec![Activation::Tanh], OutputTransform::None).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let spec = MlpSpec::new(
            vec![3, 4, 2],
            vec![Activation::Tanh, Activation::Identity],
            OutputTransform::None,
        )
        .unwrap();
        let m = Mlp::xavier(spec, &mut ChaCha8Rng::seed_from_u64(1));
        let (_, cache) = m.apply(&[0.3, -0.1, 0.9]).unwrap();
        let g = m.gradients(&cache, &[0.0, 0.0]).unwrap();
        assert!(g
            .tensors()
            .iter()
            .all(|t| t.data().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn identity_layer_weight_gradient_is_outer_product() {
        let spec = MlpSpec::affine(3, 2, OutputTransform::None).unwrap();
        let m = Mlp::xavier(spec, &mut ChaCha8Rng::seed_from_u64(2));
        let x = [0.5, -1.0, 2.0];
        let d = [3.0, -0.25];
        let (_, cache) = m.apply(&x).unwrap();
        let g = m.gradients(&cache, &d).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(g.weight(0).get(i, j), d[i] * x[j]);
            }
            assert_eq!(g.bias(0).get(i, 0), d[i]);
        }
    }

    fn check_random_net(output: OutputTransform, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = MlpSpec::new(
            vec![6, 5, 4, 3],
            vec![Activation::Tanh, Activation::Tanh, Activation::Identity],
            output,
        )
        .unwrap();
        let m = Mlp::xavier(spec, &mut rng);
        let mut m = m;
        for b in 0..3 {
            for x in m.bias_mut(b).data_mut() {
                *x = rng.random_range(-0.5..0.5);
            }
        }
        let mut x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        x[2] = 0.0;
        let coeffs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Loss = <coeffs, y> + 0.5 |y|^2
        let loss = |y: &[f64]| -> f64 {
            y.iter()
                .zip(&coeffs)
                .map(|(a, c)| a * c + 0.5 * a * a)
                .sum()
        };
        let (y, cache) = m.apply(&x).unwrap();
        let d: Vec<f64> = y.iter().zip(&coeffs).map(|(a, c)| c + a).collect();
        let mut g = m.zeros_like();
        let dx = m.backprop(&cache, &d, &mut g, true).unwrap().unwrap();
        let params = flatten(&m.tensors());
        let analytic = flatten(&g.tensors());
        let mut probe = m.clone();
        let report = gradient_check(
            |p| {
                assign_flat(&mut probe.tensors_mut(), p).unwrap();
                loss(&probe.apply(&x).unwrap().0)
            },
            &params,
            &analytic,
            &GradCheckOptions::default(),
        );
        // Input gradient too.
        let input_report = gradient_check(
            |xi| loss(&m.apply(xi).unwrap().0),
            &x,
            &dx,
            &GradCheckOptions::default(),
        );
        report.max_rel_error.max(input_report.max_rel_error)
    }

    #[test]
    fn two_hidden_layer_gradients_match_finite_differences() {
        for seed in 0..20 {
            for output in [
                OutputTransform::None,
                OutputTransform::Softmax,
                OutputTransform::ScaledTanh(2.0),
            ] {
                let err = check_random_net(output, seed);
                assert!(err < 1e-4, "seed {seed} {output:?}: {err}");
            }
        }
    }

    #[test]
    fn tensor_round_trip() {
        let spec = MlpSpec::new(
            vec![2, 3, 1],
            vec![Activation::Tanh, Activation::Identity],
            OutputTransform::None,
        )
        .unwrap();
        let m = Mlp::xavier(spec.clone(), &mut ChaCha8Rng::seed_from_u64(9));
        let rebuilt =
            Mlp::from_tensors(spec.clone(), m.tensors().into_iter().cloned().collect()).unwrap();
        assert_eq!(rebuilt, m);
        assert_eq!(m.tensor_names("h")[3], "h.layer1.bias");
        let mut bad: Vec<Tensor2> = m.tensors().into_iter().cloned().collect();
        bad[0] = Tensor2::zeros(2, 2);
        assert!(Mlp::from_tensors(spec, bad).is_err());
    }
}
