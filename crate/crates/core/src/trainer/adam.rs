use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, ParamStore, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub step: u64,
    first: IndexMap<String, Tensor>,
    second: IndexMap<String, Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: IndexMap<String, Tensor> = params
            .iter()
            .map(|(k, t)| (k.to_string(), Tensor::zeros(t.shape())))
            .collect();
        Self {
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn first_moment(&self, name: &str) -> Option<&Tensor> {
        self.first.get(name)
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor> {
        self.second.get(name)
    }
}

/// One bias-corrected Adam update. Parameters without a gradient entry are
/// treated as having zero gradient.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    for (name, g) in grads.iter() {
        let p = params.get(name)?;
        if p.shape() != g.shape() {
            return Err(Error::shape(
                "adam_step",
                format!("gradient for `{name}` is {:?}, parameter is {:?}", g.shape(), p.shape()),
            ));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (name, p) in params.iter_mut() {
        let m = state
            .first
            .entry(name.to_string())
            .or_insert_with(|| Tensor::zeros(p.shape()));
        let v = state
            .second
            .entry(name.to_string())
            .or_insert_with(|| Tensor::zeros(p.shape()));
        let g = grads.get(name);
        let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
        for i in 0..pd.len() {
            let gi = g.map_or(0.0, |g| g.data()[i]);
            md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * gi;
            vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = md[i] / bc1;
            let v_hat = vd[i] / bc2;
            pd[i] -= cfg.step_size * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn store(v: Vec<f64>) -> ParamStore {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::vector(v));
        p
    }

    fn grads(v: Vec<f64>) -> Gradients {
        let mut tape = Tape::new();
        let p = store(vec![0.0; v.len()]);
        let w = tape.param(&p, "w").unwrap();
        let c = tape.constant(Tensor::vector(v)).unwrap();
        let out = tape.dot(w, c).unwrap();
        tape.backward(out, &Tensor::scalar(1.0)).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = store(vec![1.0, -2.0]);
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &grads(vec![0.0, 0.0]), &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p.get("w").unwrap().data(), &[1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_step_size_against_sign() {
        let mut p = store(vec![0.0, 0.0, 0.0]);
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &grads(vec![3.0, -0.02, 250.0]), &mut s, &cfg).unwrap();
        for (&w, sign) in p.get("w").unwrap().data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((w - sign * cfg.step_size).abs() < 1e-9, "{w}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = store(vec![0.0, 0.0]);
        let mut s = AdamState::new(&p);
        assert!(adam_step(&mut p, &grads(vec![1.0, 2.0, 3.0]), &mut s, &AdamConfig::default()).is_err());
    }

    #[test]
    fn quadratic_loss_decreases_every_step() {
        // loss = 0.5 * |w - target|^2
        let target = [3.0, -1.0];
        let mut p = store(vec![0.0, 0.0]);
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig { step_size: 0.01, ..Default::default() };
        let loss = |p: &ParamStore| -> f64 {
            p.get("w").unwrap().data().iter().zip(target).map(|(w, t)| 0.5 * (w - t).powi(2)).sum()
        };
        let mut prev = loss(&p);
        for _ in 0..100 {
            let w = p.get("w").unwrap().data().to_vec();
            let g = grads(w.iter().zip(target).map(|(w, t)| w - t).collect());
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
            let now = loss(&p);
            assert!(now < prev);
            prev = now;
        }
        assert_eq!(s.first_moment("w").unwrap().shape(), p.get("w").unwrap().shape());
    }
}
