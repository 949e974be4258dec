//! Central-difference gradient checks for each network component.

use super::{random_hypergraph, random_matrix};
use hgcnn::hypergraph::FactoredLaplacian;
use hgcnn::nn::{cross_entropy_loss, BatchNorm, DenseParam, HyperConvLayer, Mode, Parameterized};
use hgcnn::spectral::LaplacianOperator;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEPS: [f64; 2] = [1e-6, 1e-7];

/// Relative agreement within 1e-4 at either step. A second step handles
/// the rare case where the first straddles a ReLU kink. Differences below
/// the rounding noise of the quotient count as agreement, which matters for
/// gradients that vanish exactly (a bias followed by batch norm).
fn agrees(analytic: f64, f: &mut dyn FnMut(f64) -> f64) -> bool {
    STEPS.iter().any(|&h| {
        let (up, down) = (f(h), f(-h));
        let fd = (up - down) / (2.0 * h);
        let noise = 1e-14 * (1.0 + up.abs() + down.abs()) / h;
        (fd - analytic).abs() <= (1e-4 * fd.abs().max(analytic.abs())).max(noise)
    })
}

fn gradients<P: Parameterized>(p: &mut P) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    p.visit("", &mut |r| {
        if let Some(g) = r.grad {
            out.push((r.name, g.to_vec()));
        }
    });
    out
}

fn nudge<P: Parameterized>(p: &mut P, name: &str, idx: usize, d: f64) {
    p.visit("", &mut |r| {
        if r.name == name && r.grad.is_some() {
            r.value[idx] += d;
        }
    });
}

/// Checks parameter and input gradients of `objective(layer, x)` against
/// central differences. `backward` returns the input gradient after a fresh
/// forward pass has populated the caches.
fn check_component<P: Parameterized + Clone>(
    layer: &P,
    x: &Array2<f64>,
    objective: &dyn Fn(&mut P, &Array2<f64>) -> f64,
    backward: &dyn Fn(&mut P, &Array2<f64>) -> Array2<f64>,
) -> Result<(), String> {
    let mut l = layer.clone();
    l.zero_grads();
    let dx = backward(&mut l, x);
    for (name, grads) in gradients(&mut l) {
        for (idx, &g) in grads.iter().enumerate() {
            let ok = agrees(g, &mut |h| {
                let mut probe = layer.clone();
                nudge(&mut probe, &name, idx, h);
                objective(&mut probe, x)
            });
            if !ok {
                return Err(format!("{name}[{idx}]"));
            }
        }
    }
    for ((i, j), &g) in dx.indexed_iter() {
        let ok = agrees(g, &mut |h| {
            let mut xp = x.clone();
            xp[[i, j]] += h;
            objective(&mut layer.clone(), &xp)
        });
        if !ok {
            return Err(format!("input[{i},{j}]"));
        }
    }
    Ok(())
}

pub fn check_conv(seed: u64) -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let batch = r.gen_range(1..3);
    let graphs: Vec<FactoredLaplacian> = (0..batch)
        .map(|_| FactoredLaplacian::new(&random_hypergraph(&mut r, 8)).unwrap())
        .collect();
    let rows: usize = graphs.iter().map(|g| g.dim()).sum();
    let (f_in, f_out) = (r.gen_range(1..=5), r.gen_range(1..=5));
    let mut layer = HyperConvLayer::new("conv", f_in, f_out, r.gen_range(1..=3), r.gen_bool(0.7), &mut r);
    for t in layer.theta.iter_mut() {
        *t = r.gen_range(-1.0..1.0);
    }
    if r.gen_bool(0.3) {
        layer.rescale = Some(2.0);
    }
    let mode = if r.gen_bool(0.7) { Mode::Train } else { Mode::Eval };
    if let Some(bn) = layer.bn.as_mut() {
        bn.gamma.mapv_inplace(|_| r.gen_range(0.5..1.5));
        bn.beta.mapv_inplace(|_| r.gen_range(-0.5..0.5));
        bn.running_mean.mapv_inplace(|_| r.gen_range(-0.5..0.5));
        bn.running_var.mapv_inplace(|_| r.gen_range(0.5..1.5));
    }
    let x = random_matrix(&mut r, rows, f_in);
    let weights = random_matrix(&mut r, rows, f_out);
    let refs: Vec<&dyn LaplacianOperator> = graphs.iter().map(|g| g as &dyn LaplacianOperator).collect();
    let objective = |l: &mut HyperConvLayer, x: &Array2<f64>| (l.forward(&refs, x.view(), mode).unwrap() * &weights).sum();
    let backward = |l: &mut HyperConvLayer, x: &Array2<f64>| {
        l.forward(&refs, x.view(), mode).unwrap();
        l.backward(&refs, weights.view()).unwrap()
    };
    check_component(&layer, &x, &objective, &backward)
}

pub fn check_dense(seed: u64) -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (n, f_in, f_out) = (r.gen_range(1..=8), r.gen_range(1..=5), r.gen_range(1..=5));
    let mut layer = DenseParam::xavier(f_in, f_out, &mut r);
    layer.bias.mapv_inplace(|_| r.gen_range(-1.0..1.0));
    let x = random_matrix(&mut r, n, f_in);
    let weights = random_matrix(&mut r, n, f_out);
    let objective = |l: &mut DenseParam, x: &Array2<f64>| (l.forward(x.view()) * &weights).sum();
    let backward = |l: &mut DenseParam, x: &Array2<f64>| l.backward(x.view(), weights.view());
    check_component(&layer, &x, &objective, &backward)
}

pub fn check_batchnorm(seed: u64) -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (n, f) = (r.gen_range(2..=8), r.gen_range(1..=5));
    let mut bn = BatchNorm::new(f);
    bn.gamma.mapv_inplace(|_| r.gen_range(0.5..1.5));
    bn.beta.mapv_inplace(|_| r.gen_range(-0.5..0.5));
    let x = random_matrix(&mut r, n, f);
    let weights = random_matrix(&mut r, n, f);
    let objective = |b: &mut BatchNorm, x: &Array2<f64>| (b.forward(x.view(), Mode::Train).0 * &weights).sum();
    let backward = |b: &mut BatchNorm, x: &Array2<f64>| {
        let (_, cache) = b.forward(x.view(), Mode::Train);
        b.backward(&cache.unwrap(), weights.view())
    };
    check_component(&bn, &x, &objective, &backward)
}

pub fn check_loss(seed: u64) -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.gen_range(1..=8);
    let logits = random_matrix(&mut r, n, 2) * 4.0;
    let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..2)).collect();
    let (_, d) = cross_entropy_loss(logits.view(), &labels).map_err(|e| e.to_string())?;
    for ((i, j), &g) in d.indexed_iter() {
        let ok = agrees(g, &mut |h| {
            let mut l = logits.clone();
            l[[i, j]] += h;
            cross_entropy_loss(l.view(), &labels).unwrap().0
        });
        if !ok {
            return Err(format!("logit[{i},{j}]"));
        }
    }
    Ok(())
}
