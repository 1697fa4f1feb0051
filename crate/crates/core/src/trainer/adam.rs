use crate::numcore::{ParamStore, Tensor};

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies the gradients currently held in `store`.
    pub fn step(&mut self, store: &mut ParamStore) {
        if self.m.is_empty() {
            self.m = store
                .iter()
                .map(|(_, p)| Tensor::zeros(p.value.shape()))
                .collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grads = p.grad.values();
            let values = p.value.values_mut();
            let (ms, vs) = (m.values_mut(), v.values_mut());
            for i in 0..values.len() {
                let g = grads[i];
                ms[i] = self.beta1 * ms[i] + (1.0 - self.beta1) * g;
                vs[i] = self.beta2 * vs[i] + (1.0 - self.beta2) * g * g;
                let m_hat = ms[i] / c1;
                let v_hat = vs[i] / c2;
                values[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_step_is_a_no_op() {
        let mut store = ParamStore::new();
        store
            .insert("w", Tensor::vector(vec![0.5, -1.0, 2.0]))
            .unwrap();
        let before = store.clone();
        let mut adam = Adam::new(0.1);
        adam.step(&mut store);
        adam.step(&mut store);
        for ((_, a), (_, b)) in store.iter().zip(before.iter()) {
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::vector(vec![1.0, 1.0])).unwrap();
        store.get_mut(id).grad = Tensor::vector(vec![3.0, -0.01]);
        Adam::new(0.01).step(&mut store);
        let v = store.value(id).values();
        assert!((v[0] - 0.99).abs() < 1e-9);
        assert!((v[1] - 1.01).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::vector(vec![3.0])).unwrap();
        let mut adam = Adam::new(0.05);
        for _ in 0..2000 {
            let w = store.value(id).values()[0];
            store.get_mut(id).grad = Tensor::vector(vec![2.0 * (w - 1.0)]);
            adam.step(&mut store);
        }
        assert!((store.value(id).values()[0] - 1.0).abs() < 1e-3);
        assert_eq!(adam.steps_taken(), 2000);
    }
}
