//! Straight-line dense re-implementations used as oracles by the integration tests.
#![allow(dead_code)]

use gtcnn::graph::{line_graph, sbm_generate, Graph};
use gtcnn::nn::{
    batch_objective, standard_config, Activation, Architecture, FilterMode, GtcnnConfig, GtcnnModel, Loss, Readout,
    Sample, Target,
};
use gtcnn::{DenseMatrix, JointFilterCoeffs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_joint(rng: &mut impl Rng, k_bar: usize, k_tilde: usize) -> JointFilterCoeffs {
    let rows: Vec<Vec<f64>> = (0..=k_bar).map(|_| random_vec(rng, k_tilde + 1)).collect();
    JointFilterCoeffs::from_rows(&rows).unwrap()
}

pub fn dense(g: &Graph) -> DenseMatrix {
    g.gso().to_dense()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `Σ h_kl (S_T^l ⊗ S^k) x` with explicit dense Kronecker products.
pub fn dense_joint_filter(s: &DenseMatrix, st: &DenseMatrix, h: &JointFilterCoeffs, x: &[f64]) -> Vec<f64> {
    let dim = s.rows() * st.rows();
    let mut y = vec![0.0; dim];
    for k in 0..=h.k_bar() {
        for l in 0..=h.k_tilde() {
            let op = st.pow(l).unwrap().kron(&s.pow(k).unwrap());
            let z = op.matvec(x).unwrap();
            for (a, b) in y.iter_mut().zip(z) {
                *a += h.get(k, l) * b;
            }
        }
    }
    y
}

/// `Σ_ij s_ij S_T^i ⊗ S^j` as a dense matrix.
pub fn dense_parametric_product(s: &DenseMatrix, st: &DenseMatrix, scalars: [[f64; 2]; 2]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(s.rows() * st.rows(), s.rows() * st.rows());
    for (i, row) in scalars.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            out.axpy(c, &st.pow(i).unwrap().kron(&s.pow(j).unwrap()));
        }
    }
    out
}

fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Identity => z,
    }
}

/// Network output computed layer by layer with dense operators only.
///
/// `x` is the `N × T` sample. No code from the recursion path is reused: layer
/// operators are dense powers of `S_T ⊗ S` factors or of the dense product GSO.
pub fn dense_network_forward(model: &GtcnnModel, spatial: &Graph, temporal: &Graph, x: &DenseMatrix) -> Vec<f64> {
    let s = dense(spatial);
    let n = s.rows();
    let cfg = &model.config;
    let (t, mut feats): (usize, Vec<Vec<f64>>) = match cfg.filter {
        FilterMode::TimeAsFeatures { .. } => (1, (0..x.cols()).map(|c| x.col(c)).collect()),
        _ => {
            let mut v = Vec::new();
            for tau in 0..x.cols() {
                for i in 0..n {
                    v.push(x[(i, tau)]);
                }
            }
            (x.cols(), vec![v])
        }
    };
    let st = match cfg.filter {
        FilterMode::TimeAsFeatures { .. } => DenseMatrix::zeros(1, 1),
        _ => dense(temporal),
    };
    let layers = model.layers.len();
    for (idx, bank) in model.layers.iter().enumerate() {
        // per-(f,g) dense operator
        let mut ops: Vec<Vec<DenseMatrix>> = vec![vec![DenseMatrix::zeros(n * t, n * t); bank.f_in()]; bank.f_out()];
        match &cfg.filter {
            FilterMode::Product { .. } => {
                let sp = dense_parametric_product(&s, &st, model.scalars);
                for k in 0..=bank.k_bar() {
                    let pk = sp.pow(k).unwrap();
                    for f in 0..bank.f_out() {
                        for g in 0..bank.f_in() {
                            ops[f][g].axpy(bank.tap(k, 0)[(f, g)], &pk);
                        }
                    }
                }
            }
            _ => {
                for k in 0..=bank.k_bar() {
                    for l in 0..=bank.k_tilde() {
                        let a = st.pow(l).unwrap().kron(&s.pow(k).unwrap());
                        for f in 0..bank.f_out() {
                            for g in 0..bank.f_in() {
                                ops[f][g].axpy(bank.tap(k, l)[(f, g)], &a);
                            }
                        }
                    }
                }
            }
        }
        let a = if idx + 1 == layers && !cfg.final_activation {
            Activation::Identity
        } else {
            cfg.activation
        };
        feats = (0..bank.f_out())
            .map(|f| {
                let mut y = vec![0.0; n * t];
                for g in 0..bank.f_in() {
                    let z = ops[f][g].matvec(&feats[g]).unwrap();
                    for (o, v) in y.iter_mut().zip(z) {
                        *o += v;
                    }
                }
                y.into_iter().map(|z| act(a, z)).collect()
            })
            .collect();
    }
    let fl = feats.len();
    let mean = |i: usize, f: usize| (0..t).map(|tau| feats[f][tau * n + i]).sum::<f64>() / t as f64;
    let w = &model.readout_w;
    match cfg.readout {
        Readout::NodeMean { classes } => (0..classes)
            .map(|c| {
                let node_logits: f64 = (0..n)
                    .map(|i| (0..fl).map(|f| mean(i, f) * w[(f, c)]).sum::<f64>())
                    .sum();
                node_logits / n as f64 + model.readout_b[c]
            })
            .collect(),
        Readout::NodeLinear { classes, .. } => (0..classes)
            .map(|c| {
                model.readout_b[c]
                    + (0..n)
                        .flat_map(|i| (0..fl).map(move |f| (i, f)))
                        .map(|(i, f)| mean(i, f) * w[(i * fl + f, c)])
                        .sum::<f64>()
            })
            .collect(),
        Readout::LastSlice => (0..n)
            .map(|i| model.readout_b[0] + (0..fl).map(|f| feats[f][(t - 1) * n + i] * w[(f, 0)]).sum::<f64>())
            .collect(),
    }
}

pub fn sample(rng: &mut impl Rng, n: usize, t: usize, target: Target) -> Sample {
    Sample {
        x: DenseMatrix::from_fn(n, t, |_, _| rng.gen_range(-1.0..1.0)),
        target,
    }
}

pub fn graphs(n: usize, t: usize, seed: u64) -> (Graph, Graph) {
    let (s, _) = sbm_generate(n, 2, 0.8, 0.3, seed).unwrap();
    (s, line_graph(t).unwrap())
}

/// Every architecture/readout combination exercised by the gradient check.
pub fn gradient_configs() -> Vec<(GtcnnConfig, Loss)> {
    let mut out = Vec::new();
    for arch in [
        Architecture::Joint,
        Architecture::Parametric,
        Architecture::Fixed(gtcnn::ProductKind::Strong),
        Architecture::Gcnn,
    ] {
        out.push((
            standard_config(arch, &[3, 2], 2, 3, Readout::NodeMean { classes: 3 }, 0.05),
            Loss::CrossEntropy,
        ));
        out.push((
            standard_config(arch, &[2], 2, 3, Readout::NodeLinear { classes: 2, nodes: 5 }, 0.05),
            Loss::CrossEntropy,
        ));
        out.push((standard_config(arch, &[2, 2], 1, 3, Readout::LastSlice, 0.05), Loss::Mse));
    }
    out
}

pub fn finite_difference_check(cfg: GtcnnConfig, loss: Loss, seed: u64) -> f64 {
    let (n, t) = (5, 3);
    let mut r = rng(seed);
    let mut model = GtcnnModel::init(cfg, seed).unwrap();
    // non-zero biases exercise their gradients too
    for b in &mut model.readout_b {
        *b = r.gen_range(-0.5..0.5);
    }
    let (s, st) = graphs(n, t, seed);
    let ops = model.operators(&s, &st).unwrap();
    let data: Vec<Sample> = (0..2)
        .map(|i| {
            let target = match loss {
                Loss::CrossEntropy => Target::Class(i % model.readout_b.len()),
                Loss::Mse => Target::Values(random_vec(&mut r, n)),
            };
            sample(&mut r, n, t, target)
        })
        .collect();
    let batch: Vec<&Sample> = data.iter().collect();
    let (_, analytic) = batch_objective(&model, &ops, &batch, loss).unwrap();
    let params = model.flat_params();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut probe = model.clone();
        let mut p = params.clone();
        p[i] += h;
        probe.assign_params(&p).unwrap();
        let plus = batch_objective(&probe, &ops, &batch, loss).unwrap().0;
        p[i] -= 2.0 * h;
        probe.assign_params(&p).unwrap();
        let minus = batch_objective(&probe, &ops, &batch, loss).unwrap().0;
        let numeric = (plus - minus) / (2.0 * h);
        // relative error, with a 1e-6 floor so vanishing gradients are compared absolutely
        let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
