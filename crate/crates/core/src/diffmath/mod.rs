//! Dense arrays, reverse-mode differentiation, optimizers and gradient checks.

mod array;
mod gradcheck;
mod optim;
mod params;
mod tape;

pub use array::Array;
pub use gradcheck::{
    check_gradients, finite_diff_check, GradCheckOptions, GradCheckReport, GradMismatch,
};
pub use optim::{GroupRates, Optimizer, OptimizerKind};
pub use params::{Gradients, ParamGroup, ParamId, ParamInfo, ParamStore};
pub use tape::{normal_cdf, normal_pdf, Mode, Tape, Var};

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::error::Result;

    type Unary = fn(&mut Tape, Var) -> Result<Var>;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> Array {
        Array::from_vec(r, c, (0..r * c).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
    }

    /// Reduces an arbitrary node to a scalar with random weights so every
    /// output entry contributes a distinct amount.
    fn weighted_sum(t: &mut Tape, v: Var, seed: u64) -> Result<Var> {
        let s = t.value(v).shape();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = t.constant(random(&mut rng, s[0], s[1], -1.0, 1.0));
        let p = t.mul(v, w)?;
        Ok(t.sum(p))
    }

    #[test]
    fn every_primitive_passes_finite_differences() {
        let unary: Vec<(&str, Unary, f64, f64)> = vec![
            ("sigmoid", |t, x| Ok(t.sigmoid(x)), -3.0, 3.0),
            ("tanh", |t, x| Ok(t.tanh(x)), -3.0, 3.0),
            ("exp", |t, x| Ok(t.exp(x)), -2.0, 2.0),
            ("log", |t, x| Ok(t.log(x)), 0.5, 3.0),
            ("softplus", |t, x| Ok(t.softplus(x)), -4.0, 4.0),
            ("abs", |t, x| Ok(t.abs(x)), 0.2, 2.0),
            ("square", |t, x| Ok(t.square(x)), -2.0, 2.0),
            ("gelu", |t, x| Ok(t.gelu(x)), -3.0, 3.0),
            ("normal_cdf", |t, x| Ok(t.normal_cdf(x)), -3.0, 3.0),
            ("softmax", |t, x| Ok(t.softmax(x)), -2.0, 2.0),
            ("log_softmax", |t, x| Ok(t.log_softmax(x)), -2.0, 2.0),
            ("logsumexp", |t, x| Ok(t.logsumexp(x)), -2.0, 2.0),
            ("transpose", |t, x| Ok(t.transpose(x)), -2.0, 2.0),
            ("scale", |t, x| Ok(t.scale(x, -1.7)), -2.0, 2.0),
            ("add_scalar", |t, x| Ok(t.add_scalar(x, 0.3)), -2.0, 2.0),
            ("slice_cols", |t, x| t.slice_cols(x, 1, 3), -2.0, 2.0),
            ("slice_rows", |t, x| t.slice_rows(x, 1, 2), -2.0, 2.0),
            ("element", |t, x| t.element(x, 1, 2), -2.0, 2.0),
            ("gather", |t, x| t.gather(x, &[2, 0, 2]), -2.0, 2.0),
            ("gather_param", |t, _| t.gather_param(ParamId(0), &[1, 1, 0]), -2.0, 2.0),
            ("dropout", |t, x| Ok(t.dropout(x, 0.6)), -2.0, 2.0),
            ("concat_cols", |t, x| t.concat_cols(&[x, x]), -2.0, 2.0),
            ("concat_rows", |t, x| t.concat_rows(&[x, x]), -2.0, 2.0),
            ("self_mul", |t, x| t.mul(x, x), -2.0, 2.0),
            ("self_div", |t, x| {
                let d = t.add_scalar(x, 5.0);
                t.div(x, d)
            }, -2.0, 2.0),
            ("sub", |t, x| {
                let y = t.square(x);
                t.sub(x, y)
            }, -2.0, 2.0),
        ];
        for seed in 0..10u64 {
            for &(name, f, lo, hi) in &unary {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut store = ParamStore::new();
                let id = store.add("x", random(&mut rng, 3, 4, lo, hi), ParamGroup::Head);
                let opts = GradCheckOptions {
                    mode: Mode::Train,
                    seed,
                    ..Default::default()
                };
                let report = finite_diff_check(
                    &mut store,
                    |t| {
                        let x = t.param(id);
                        let y = f(t, x)?;
                        weighted_sum(t, y, seed + 100)
                    },
                    &opts,
                )
                .unwrap();
                assert!(report.passed(), "{name} seed {seed}: {:?}", report.failures);
            }
        }
    }

    #[test]
    fn binary_primitives_pass_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut store = ParamStore::new();
            let a = store.add("a", random(&mut rng, 3, 4, -1.0, 1.0), ParamGroup::Body);
            let b = store.add("b", random(&mut rng, 4, 2, -1.0, 1.0), ParamGroup::Body);
            let bias = store.add("bias", random(&mut rng, 1, 2, -1.0, 1.0), ParamGroup::Head);
            let gamma = store.add("g", random(&mut rng, 1, 4, 0.5, 1.5), ParamGroup::Body);
            let beta = store.add("be", random(&mut rng, 1, 4, -0.5, 0.5), ParamGroup::Body);
            let report = finite_diff_check(
                &mut store,
                |t| {
                    let (av, bv, cv) = (t.param(a), t.param(b), t.param(bias));
                    let (gv, bev) = (t.param(gamma), t.param(beta));
                    let ln = t.layer_norm(av, gv, bev, 1e-5)?;
                    let y = t.affine(ln, bv, cv)?;
                    let z = t.matmul(av, bv)?;
                    let s = t.add(y, z)?;
                    weighted_sum(t, s, seed)
                },
                &GradCheckOptions::default(),
            )
            .unwrap();
            assert!(report.passed(), "seed {seed}: {:?}", report.failures);
        }
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let id = store.add("x", random(&mut rng, 2, 5, -1.0, 1.0), ParamGroup::Head);
        let run = |seed| {
            let mut t = Tape::new(&store, Mode::Eval, seed);
            let x = t.param(id);
            let d = t.dropout(x, 0.5);
            let s = t.softmax(d);
            t.value(s).clone()
        };
        assert_eq!(run(1), run(2));
    }
}
