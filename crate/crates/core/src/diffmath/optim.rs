use serde::{Deserialize, Serialize};

use super::{Array, Gradients, ParamGroup, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Per-group learning rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    /// Encoder layers.
    pub body: f64,
    /// Embeddings and output heads.
    pub head: f64,
}

impl GroupRates {
    pub fn single(lr: f64) -> Self {
        Self { body: lr, head: lr }
    }

    pub fn for_group(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Body => self.body,
            ParamGroup::Embedding | ParamGroup::Head => self.head,
        }
    }
}

/// Adaptive-moment or plain gradient descent with global-norm clipping.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    rates: GroupRates,
    clip_norm: Option<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<Array>,
    v: Vec<Array>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, rates: GroupRates, clip_norm: Option<f64>) -> Self {
        Self {
            kind,
            rates,
            clip_norm,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn rates(&self) -> GroupRates {
        self.rates
    }

    /// Applies one update and returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) -> f64 {
        let norm = grads.global_norm();
        let clip = match self.clip_norm {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        if self.m.is_empty() {
            self.m = params
                .ids()
                .map(|id| {
                    let s = params.get(id).shape();
                    Array::zeros(s[0], s[1])
                })
                .collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            let lr = self.rates.for_group(params.info(id).group);
            let g = grads.get(id).data();
            let p = params.get_mut(id).data_mut();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, &gv) in p.iter_mut().zip(g) {
                        *w -= lr * clip * gv;
                    }
                }
                OptimizerKind::Adam => {
                    let m = self.m[id.index()].data_mut();
                    let v = self.v[id.index()].data_mut();
                    for i in 0..p.len() {
                        let gv = g[i] * clip;
                        m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gv;
                        v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gv * gv;
                        let mh = m[i] / bc1;
                        let vh = v[i] / bc2;
                        p[i] -= lr * mh / (vh.sqrt() + self.eps);
                    }
                }
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_grad(store: &ParamStore) -> Gradients {
        let mut g = Gradients::zeros_like(store);
        for id in store.ids() {
            for (o, &x) in g.get_mut(id).data_mut().iter_mut().zip(store.get(id).data()) {
                *o = 2.0 * (x - 3.0);
            }
        }
        g
    }

    #[test]
    fn both_optimizers_descend_a_bowl() {
        for kind in [OptimizerKind::Adam, OptimizerKind::Sgd] {
            let mut store = ParamStore::new();
            let id = store.add("w", Array::row(vec![0.0, 10.0]), ParamGroup::Head);
            let mut opt = Optimizer::new(kind, GroupRates::single(0.1), None);
            for _ in 0..500 {
                let g = quadratic_grad(&store);
                opt.step(&mut store, &g);
            }
            for &x in store.get(id).data() {
                assert!((x - 3.0).abs() < 1e-2, "{kind:?} ended at {x}");
            }
        }
    }

    #[test]
    fn clipping_limits_the_step() {
        let mut store = ParamStore::new();
        let id = store.add("w", Array::row(vec![0.0]), ParamGroup::Head);
        let mut g = Gradients::zeros_like(&store);
        g.get_mut(id).data_mut()[0] = 100.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd, GroupRates::single(1.0), Some(5.0));
        let norm = opt.step(&mut store, &g);
        assert_eq!(norm, 100.0);
        assert!((store.get(id).data()[0] + 5.0).abs() < 1e-12);
    }

    #[test]
    fn group_rates_apply_per_group() {
        let mut store = ParamStore::new();
        let body = store.add("b", Array::row(vec![0.0]), ParamGroup::Body);
        let head = store.add("h", Array::row(vec![0.0]), ParamGroup::Head);
        let mut g = Gradients::zeros_like(&store);
        g.get_mut(body).data_mut()[0] = 1.0;
        g.get_mut(head).data_mut()[0] = 1.0;
        let rates = GroupRates { body: 0.01, head: 1.0 };
        let mut opt = Optimizer::new(OptimizerKind::Sgd, rates, None);
        opt.step(&mut store, &g);
        assert_eq!(store.get(body).data()[0], -0.01);
        assert_eq!(store.get(head).data()[0], -1.0);
    }
}
