use ndarray::Array2;

use crate::config::Optimizer;
use vrp_policy::PolicyParams;

/// Optimizer state: first/second moment estimates aligned with the
/// canonical trainable-tensor order.
pub struct OptimState {
    rule: Optimizer,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: usize,
}

impl OptimState {
    pub fn new(params: &PolicyParams, rule: Optimizer) -> Self {
        let shapes: Vec<_> = params
            .trainable_tensors()
            .iter()
            .map(|(_, t)| Array2::zeros(t.raw_dim()))
            .collect();
        OptimState {
            rule,
            m: shapes.clone(),
            v: shapes,
            t: 0,
        }
    }

    /// Ascends the objective: `ascent_grad` estimates the gradient of the
    /// expected return, so parameters move along it.
    pub fn apply(&mut self, params: &mut PolicyParams, ascent_grad: &[Array2<f64>], lr: f64) {
        match self.rule {
            Optimizer::Sgd => {
                for ((_, tensor), g) in params.trainable_tensors_mut().into_iter().zip(ascent_grad)
                {
                    *tensor = &*tensor + &(g * lr);
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                self.t += 1;
                let t = self.t as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                for (idx, ((_, tensor), g)) in params
                    .trainable_tensors_mut()
                    .into_iter()
                    .zip(ascent_grad)
                    .enumerate()
                {
                    // Minimize the negated return.
                    let gd = g * -1.0;
                    self.m[idx] = &self.m[idx] * beta1 + &gd * (1.0 - beta1);
                    self.v[idx] = &self.v[idx] * beta2 + &(&gd * &gd) * (1.0 - beta2);
                    let m_hat = &self.m[idx] / bc1;
                    let v_hat = &self.v[idx] / bc2;
                    let step = m_hat / (v_hat.mapv(f64::sqrt) + eps);
                    *tensor = &*tensor - &(step * lr);
                }
            }
        }
    }
}
