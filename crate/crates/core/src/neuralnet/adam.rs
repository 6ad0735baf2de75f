use super::params::LstmParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: LstmParams,
    v: LstmParams,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, shape_of: &LstmParams) -> Self {
        let zeros = LstmParams::zeros(shape_of.input_size(), shape_of.hidden_size(), shape_of.output_size());
        Self { cfg, m: zeros.clone(), v: zeros, t: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut LstmParams, grads: &LstmParams, learning_rate: f64) {
        self.t += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, g), m), v) in params.tensors_mut().into_iter().zip(grads.tensors()).zip(self.m.tensors_mut()).zip(self.v.tensors_mut()) {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                p[k] -= learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + epsilon);
            }
        }
    }
}
