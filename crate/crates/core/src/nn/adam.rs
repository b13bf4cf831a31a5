use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::error::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    beta1_pow: f64,
    beta2_pow: f64,
    m: Vec<Tensor2>,
    v: Vec<Tensor2>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor2]) -> Self {
        let zeros = |t: &&Tensor2| Tensor2::zeros(t.rows(), t.cols());
        Self {
            config,
            step: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` along `grads`.
pub fn adam_step(
    params: &mut [&mut Tensor2],
    grads: &[&Tensor2],
    state: &mut AdamState,
) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(NnError::InvalidSpec(
            "parameter, gradient and moment counts differ",
        ));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        g.check_shape(p.shape())?;
        m.check_shape(p.shape())?;
    }

    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.step += 1;
    state.beta1_pow *= beta1;
    state.beta2_pow *= beta2;
    let c1 = 1.0 / (1.0 - state.beta1_pow);
    let c2 = 1.0 / (1.0 - state.beta2_pow);

    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for (((pi, &gi), mi), vi) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            *pi -= lr * (*mi * c1) / (libm::sqrt(*vi * c2) + eps);
        }
    }
    Ok(())
}
