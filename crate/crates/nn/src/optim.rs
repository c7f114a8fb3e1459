//! Adam with bias correction and a reduce-on-plateau learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::param::ParamStore;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Added to `√v̂` in the denominator.
    pub eps: f64,
    /// L2 penalty folded into the gradient.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// One Adam update of a flat parameter slice. `step` is 1-based.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], step: u64, lr: f64, cfg: &AdamConfig) {
    assert!(step >= 1, "adam step is 1-based");
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i] + cfg.weight_decay * params[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Moment estimates for every trainable tensor of a store.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    pub state: AdamState,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store
            .iter()
            .map(|(_, p)| if p.trainable { vec![0.0; p.value.numel()] } else { Vec::new() })
            .collect();
        Self {
            config,
            state: AdamState {
                step: 0,
                m: zeros.clone(),
                v: zeros,
            },
        }
    }

    /// Applies accumulated gradients with learning rate `lr`.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64) {
        self.state.step += 1;
        let step = self.state.step;
        for (id, p) in store.iter_mut() {
            if !p.trainable {
                continue;
            }
            let i = id.index();
            adam_step(
                p.value.data_mut(),
                &p.grad,
                &mut self.state.m[i],
                &mut self.state.v[i],
                step,
                lr,
                &self.config,
            );
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateauMode {
    /// Higher metric is better (accuracy).
    Max,
    /// Lower metric is better (loss).
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 10,
            min_lr: 1e-5,
        }
    }
}

/// Multiplies the learning rate by `factor` once the monitored metric has
/// failed to improve for `patience` consecutive evaluations, then starts
/// counting again. The first evaluation only sets the reference value.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauScheduler {
    pub config: PlateauConfig,
    pub mode: PlateauMode,
    pub lr: f64,
    pub best: Option<f64>,
    pub bad_evals: usize,
}

impl PlateauScheduler {
    pub fn new(config: PlateauConfig, mode: PlateauMode, lr: f64) -> Self {
        Self {
            config,
            mode,
            lr,
            best: None,
            bad_evals: 0,
        }
    }

    pub fn step(&mut self, metric: f64) -> f64 {
        let improved = match (self.best, self.mode) {
            (None, _) => true,
            (Some(b), PlateauMode::Max) => metric > b,
            (Some(b), PlateauMode::Min) => metric < b,
        };
        if improved {
            self.best = Some(metric);
            self.bad_evals = 0;
        } else {
            self.bad_evals += 1;
            if self.bad_evals >= self.config.patience {
                self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
                self.bad_evals = 0;
            }
        }
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig::default();
        let (mut p, mut m, mut v) = ([0.5], [0.0], [0.0]);
        adam_step(&mut p, &[1.0], &mut m, &mut v, 1, 0.01, &cfg);
        assert!((p[0] - (0.5 - 0.01)).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let cfg = AdamConfig::default();
        let (mut p, mut m, mut v) = ([0.5, -2.0], [0.0; 2], [0.0; 2]);
        for step in 1..=50 {
            adam_step(&mut p, &[0.0, 0.0], &mut m, &mut v, step, 0.1, &cfg);
        }
        assert_eq!(p, [0.5, -2.0]);
    }

    #[test]
    fn plateau_hand_trace() {
        let cfg = PlateauConfig {
            factor: 0.5,
            patience: 2,
            min_lr: 1e-9,
        };
        let mut s = PlateauScheduler::new(cfg, PlateauMode::Max, 1.0);
        let lrs: Vec<f64> = [0.5; 5].iter().map(|&m| s.step(m)).collect();
        // halved at evaluations 3 and 5
        assert_eq!(lrs, vec![1.0, 1.0, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn plateau_floor_and_reset() {
        let cfg = PlateauConfig {
            factor: 0.1,
            patience: 1,
            min_lr: 0.05,
        };
        let mut s = PlateauScheduler::new(cfg, PlateauMode::Min, 1.0);
        assert_eq!(s.step(3.0), 1.0);
        assert_eq!(s.step(2.0), 1.0); // improvement
        assert!((s.step(2.5) - 0.1).abs() < 1e-15);
        assert_eq!(s.step(2.5), 0.05);
        assert_eq!(s.step(2.5), 0.05);
    }
}
