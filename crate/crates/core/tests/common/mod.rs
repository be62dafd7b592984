#![allow(dead_code)]

pub mod qp;

use knowattn::{seeded_rng, Rng};
use rand::Rng as _;

pub fn random_svr_set(rng: &mut Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| r.iter().sum::<f64>().sin() + 0.2 * rng.random_range(-1.0..1.0))
        .collect();
    (x, y)
}

pub fn rng(seed: u64) -> Rng {
    seeded_rng(seed)
}

use knowattn::autodiff::{ParamStore, Tape, Tensor};
use knowattn::model::{AttentionNetwork, SentenceInput};

/// Squared error of the network score, evaluated with `params`.
pub fn loss_at(net: &AttentionNetwork, params: &ParamStore, input: &SentenceInput, target: f64) -> f64 {
    let mut probe = net.clone();
    probe.params = params.clone();
    let (score, _) = probe.predict(input).expect("forward");
    (score - target) * (score - target)
}

/// Largest relative error between tape gradients and central differences
/// over every parameter entry.
pub fn finite_difference_gap(net: &AttentionNetwork, input: &SentenceInput, target: f64, step: f64) -> f64 {
    let mut tape = Tape::new();
    let pass = net.forward::<Rng>(&mut tape, &net.params, input, None).expect("forward");
    let y = tape.constant(Tensor::scalar(target)).unwrap();
    let d = tape.sub(pass.score, y).unwrap();
    let loss = tape.mul(d, d).unwrap();
    let grads = tape.backward(loss, &Tensor::scalar(1.0)).unwrap();

    let mut worst: f64 = 0.0;
    let mut probe = net.params.clone();
    let names: Vec<String> = net.params.names().map(str::to_string).collect();
    for name in names {
        let len = net.params.get(&name).unwrap().len();
        for i in 0..len {
            let x = net.params.get(&name).unwrap().data()[i];
            probe.get_mut(&name).unwrap().data_mut()[i] = x + step;
            let up = loss_at(net, &probe, input, target);
            probe.get_mut(&name).unwrap().data_mut()[i] = x - step;
            let down = loss_at(net, &probe, input, target);
            probe.get_mut(&name).unwrap().data_mut()[i] = x;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.get(&name).map_or(0.0, |g| g.data()[i]);
            let denom = (analytic.abs() + numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    worst
}
