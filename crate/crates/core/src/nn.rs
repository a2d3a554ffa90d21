//! Graph-time convolutional neural networks with hand-written gradients.
//!
//! A network is a stack of filter-bank layers followed by a readout. Three filter
//! parameterizations share one code path, because each reduces to a joint bank
//! `{H_kl}` before it touches a signal:
//!
//! * [`FilterMode::Joint`]: the joint bank is the parameter.
//! * [`FilterMode::Product`]: a monolithic bank `{M_k}` over a product graph, expanded
//!   through `S◇^k = Σ_pq [P^k]_pq S_T^q ⊗ S^p`. With `learn_scalars` the four product
//!   scalars are trained too, and their gradient flows back through that expansion.
//! * [`FilterMode::TimeAsFeatures`]: the GCNN baseline. Time steps become input
//!   features and the temporal graph collapses to a single node.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{param, Error, Result};
use crate::filters::{parametric_powers, FilterBank, JointFilterCoeffs, ShiftCounts, ShiftOperators};
use crate::graph::{line_graph, Graph};
use crate::product::{ProductKind, ProductSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterMode {
    /// Joint filters with per-layer orders `(K̄, K̃)`.
    Joint { orders: Vec<(usize, usize)> },
    /// Monolithic filters of per-layer order `K` over a product graph.
    Product {
        spec: ProductSpec,
        orders: Vec<usize>,
        learn_scalars: bool,
    },
    /// Graph convolutions over the spatial graph with time steps as features.
    TimeAsFeatures { orders: Vec<usize> },
}

impl FilterMode {
    fn n_layers(&self) -> usize {
        match self {
            Self::Joint { orders } => orders.len(),
            Self::Product { orders, .. } | Self::TimeAsFeatures { orders } => orders.len(),
        }
    }

    /// Orders `(K̄, K̃)` of the stored bank of layer `l`.
    fn stored_orders(&self, layer: usize) -> (usize, usize) {
        match self {
            Self::Joint { orders } => orders[layer],
            Self::Product { orders, .. } | Self::TimeAsFeatures { orders } => (orders[layer], 0),
        }
    }

    fn learns_scalars(&self) -> bool {
        matches!(
            self,
            Self::Product {
                learn_scalars: true,
                ..
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Self::Relu => z.max(0.0),
            Self::Identity => z,
        }
    }

    /// Derivative, with the ReLU subgradient at 0 taken as 0.
    #[inline]
    fn grad(self, z: f64) -> f64 {
        match self {
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Identity => 1.0,
        }
    }
}

/// How the final `NT × F_L` features become outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Readout {
    /// Temporal mean per node, a linear map shared by all nodes, then the mean over
    /// nodes. Class scores are invariant to node relabelling.
    NodeMean { classes: usize },
    /// Temporal mean per node, then one linear map over all `N·F_L` node features.
    /// Node-specific, so it can tell communities apart on a fixed graph.
    NodeLinear { classes: usize, nodes: usize },
    /// Per-node linear regression on the last time slice (`N` outputs).
    LastSlice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtcnnConfig {
    /// `F_0 … F_L`. For [`FilterMode::TimeAsFeatures`], `F_0` is the window length.
    pub features: Vec<usize>,
    pub filter: FilterMode,
    pub activation: Activation,
    /// Apply the nonlinearity after the last filter layer too.
    pub final_activation: bool,
    pub readout: Readout,
    /// Weight of `‖s‖₁` in the training objective (learned product scalars only).
    pub l1_weight: f64,
}

impl GtcnnConfig {
    pub fn n_layers(&self) -> usize {
        self.features.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() < 2 {
            return param("a network needs at least one layer (features F_0..F_L with L >= 1)");
        }
        if self.features.contains(&0) {
            return param("feature counts must be positive");
        }
        if self.filter.n_layers() != self.n_layers() {
            return param(format!(
                "{} filter orders given for {} layers",
                self.filter.n_layers(),
                self.n_layers()
            ));
        }
        if let FilterMode::Product { orders, .. } = &self.filter {
            if orders.iter().any(|&k| k > crate::filters::MAX_PARAMETRIC_ORDER) {
                return param("product filter order exceeds the expansion cap");
            }
        }
        match self.readout {
            Readout::NodeMean { classes } | Readout::NodeLinear { classes, .. } if classes == 0 => {
                return param("classification readout needs at least one class")
            }
            _ => {}
        }
        if self.l1_weight.is_nan() || self.l1_weight < 0.0 {
            return param("l1 weight must be non-negative");
        }
        Ok(())
    }

    /// Largest hidden or output feature count.
    pub fn max_features(&self) -> usize {
        self.features[1..].iter().copied().max().unwrap_or(1)
    }
}

/// Trainable parameters plus their configuration; serializes as a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtcnnModel {
    pub config: GtcnnConfig,
    /// Stored banks. In product and time-as-features modes these have `K̃ = 0` and
    /// tap `k` is the monolithic matrix `M_k`.
    pub layers: Vec<FilterBank>,
    /// Product scalars `s_ij` (temporal power `i`, spatial power `j`).
    pub scalars: [[f64; 2]; 2],
    pub readout_w: DenseMatrix,
    pub readout_b: Vec<f64>,
}

fn readout_shape(readout: &Readout, f_last: usize) -> (usize, usize) {
    match *readout {
        Readout::NodeMean { classes } => (f_last, classes),
        Readout::NodeLinear { classes, nodes } => (nodes * f_last, classes),
        Readout::LastSlice => (f_last, 1),
    }
}

impl GtcnnModel {
    /// All-zero parameters (product scalars set to the configured pattern).
    pub fn zeros(config: GtcnnConfig) -> Result<Self> {
        config.validate()?;
        let layers = (0..config.n_layers())
            .map(|l| {
                let (kb, kt) = config.filter.stored_orders(l);
                FilterBank::zeros(kb, kt, config.features[l + 1], config.features[l])
            })
            .collect();
        let scalars = match &config.filter {
            FilterMode::Product { spec, .. } => spec.scalars(),
            _ => [[0.0; 2]; 2],
        };
        let (r, c) = readout_shape(&config.readout, *config.features.last().unwrap());
        let b = match config.readout {
            Readout::LastSlice => 1,
            _ => c,
        };
        Ok(Self {
            config,
            layers,
            scalars,
            readout_w: DenseMatrix::zeros(r, c),
            readout_b: vec![0.0; b],
        })
    }

    /// Random initialization.
    ///
    /// Bank entries are uniform on `±1/√(F_in·(K̄+1)·(K̃+1))`; readout weights on
    /// `±1/√fan_in`; biases zero. Learned product scalars start at the Cartesian
    /// pattern plus uniform `±0.01` noise.
    pub fn init(config: GtcnnConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for bank in &mut model.layers {
            let bound = 1.0
                / ((bank.f_in() * (bank.k_bar() + 1) * (bank.k_tilde() + 1)) as f64).sqrt();
            for tap in bank.taps_mut() {
                for v in tap.as_mut_slice() {
                    *v = rng.gen_range(-bound..=bound);
                }
            }
        }
        if model.config.filter.learns_scalars() {
            let base = ProductSpec::CARTESIAN.scalars();
            for (i, row) in base.iter().enumerate() {
                for (j, &b) in row.iter().enumerate() {
                    model.scalars[i][j] = b + rng.gen_range(-0.01..=0.01);
                }
            }
        }
        let bound = 1.0 / (model.readout_w.rows() as f64).sqrt();
        for v in model.readout_w.as_mut_slice() {
            *v = rng.gen_range(-bound..=bound);
        }
        Ok(model)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Shift operators the network runs on for a given spatial and temporal graph.
    pub fn operators(&self, spatial: &Graph, temporal: &Graph) -> Result<ShiftOperators> {
        match self.config.filter {
            FilterMode::TimeAsFeatures { .. } => {
                Ok(ShiftOperators::new(spatial, &line_graph(1)?))
            }
            _ => Ok(ShiftOperators::new(spatial, temporal)),
        }
    }

    /// Input feature columns for an `N × T` sample.
    pub fn input_features(&self, x: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
        let f0 = self.config.features[0];
        match self.config.filter {
            FilterMode::TimeAsFeatures { .. } => {
                if x.cols() != f0 {
                    return param(format!(
                        "GCNN expects {f0} time steps as features, sample has {}",
                        x.cols()
                    ));
                }
                Ok((0..x.cols()).map(|t| x.col(t)).collect())
            }
            _ => {
                if f0 != 1 {
                    return param("GTCNN over raw samples expects F_0 = 1");
                }
                Ok(vec![crate::product::vectorize(x)?.into_values()])
            }
        }
    }

    /// Joint banks actually applied by each layer.
    pub fn effective_banks(&self) -> Vec<FilterBank> {
        match &self.config.filter {
            FilterMode::Product { orders, .. } => self
                .layers
                .iter()
                .zip(orders)
                .map(|(mono, &k)| expand_bank(mono, &parametric_powers(self.scalars, k)))
                .collect(),
            _ => self.layers.clone(),
        }
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in self.flat_params() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Parameters in a fixed order: layer taps, product scalars (if learned),
    /// readout weights, readout bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for bank in &self.layers {
            for tap in bank.taps() {
                out.extend_from_slice(tap.as_slice());
            }
        }
        if self.config.filter.learns_scalars() {
            out.extend(self.scalars.iter().flatten());
        }
        out.extend_from_slice(self.readout_w.as_slice());
        out.extend_from_slice(&self.readout_b);
        out
    }

    pub fn assign_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return param(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                flat.len()
            ));
        }
        let mut it = flat.iter().copied();
        for bank in &mut self.layers {
            for tap in bank.taps_mut() {
                for v in tap.as_mut_slice() {
                    *v = it.next().unwrap();
                }
            }
        }
        if self.config.filter.learns_scalars() {
            for v in self.scalars.iter_mut().flatten() {
                *v = it.next().unwrap();
            }
        }
        for v in self.readout_w.as_mut_slice() {
            *v = it.next().unwrap();
        }
        for v in &mut self.readout_b {
            *v = it.next().unwrap();
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        let banks: usize = self
            .layers
            .iter()
            .map(|b| b.taps().len() * b.f_in() * b.f_out())
            .sum();
        let scalars = if self.config.filter.learns_scalars() { 4 } else { 0 };
        banks + scalars + self.readout_w.as_slice().len() + self.readout_b.len()
    }

    /// Forward pass on one `N × T` sample.
    pub fn forward(&self, ops: &ShiftOperators, x: &DenseMatrix) -> Result<(Vec<f64>, ForwardCache)> {
        let banks = self.effective_banks();
        self.forward_with(&banks, ops, x)
    }

    /// Forward pass with precomputed [`GtcnnModel::effective_banks`].
    pub fn forward_with(
        &self,
        banks: &[FilterBank],
        ops: &ShiftOperators,
        x: &DenseMatrix,
    ) -> Result<(Vec<f64>, ForwardCache)> {
        let mut input = self.input_features(x)?;
        let dim = ops.dim();
        if input.iter().any(|c| c.len() != dim) {
            return param(format!(
                "sample does not match the {}x{} graph pair",
                ops.n(),
                ops.t()
            ));
        }
        let mut layers = Vec::with_capacity(banks.len());
        let mut counts = ShiftCounts::default();
        for (idx, bank) in banks.iter().enumerate() {
            let tables: Vec<_> = input
                .iter()
                .map(|c| ops.spatial_table(c, bank.k_bar(), false, &mut counts))
                .collect();
            let pre = ops.bank_forward_from_tables(bank, &tables, &mut counts);
            let act = self.layer_activation(idx);
            let post: Vec<Vec<f64>> = pre
                .iter()
                .map(|c| c.iter().map(|&z| act.apply(z)).collect())
                .collect();
            if post.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite activation in layer {}",
                    idx + 1
                )));
            }
            layers.push(LayerCache { tables, pre });
            input = post;
        }
        let out = self.readout_forward(&input, ops.n(), ops.t())?;
        Ok((
            out,
            ForwardCache {
                layers,
                features: input,
                n: ops.n(),
                t: ops.t(),
                fingerprint: self.fingerprint(),
            },
        ))
    }

    fn layer_activation(&self, idx: usize) -> Activation {
        if idx + 1 == self.n_layers() && !self.config.final_activation {
            Activation::Identity
        } else {
            self.config.activation
        }
    }

    /// Final feature maps `Φ(x)` (before the readout) as an `NT × F_L` flat vector.
    pub fn features(&self, ops: &ShiftOperators, x: &DenseMatrix) -> Result<Vec<f64>> {
        let (_, cache) = self.forward(ops, x)?;
        Ok(cache.features.concat())
    }

    fn temporal_means(features: &[Vec<f64>], n: usize, t: usize) -> Vec<Vec<f64>> {
        // means[i][f]
        let mut means = vec![vec![0.0; features.len()]; n];
        for (f, col) in features.iter().enumerate() {
            for tau in 0..t {
                for i in 0..n {
                    means[i][f] += col[tau * n + i];
                }
            }
        }
        let inv_t = 1.0 / t as f64;
        means.iter_mut().flatten().for_each(|v| *v *= inv_t);
        means
    }

    fn readout_forward(&self, features: &[Vec<f64>], n: usize, t: usize) -> Result<Vec<f64>> {
        let w = &self.readout_w;
        match self.config.readout {
            Readout::NodeMean { classes } => {
                let means = Self::temporal_means(features, n, t);
                let mut pooled = vec![0.0; features.len()];
                for row in &means {
                    for (p, &m) in pooled.iter_mut().zip(row) {
                        *p += m / n as f64;
                    }
                }
                Ok((0..classes)
                    .map(|c| {
                        self.readout_b[c]
                            + pooled.iter().enumerate().map(|(f, &p)| p * w[(f, c)]).sum::<f64>()
                    })
                    .collect())
            }
            Readout::NodeLinear { classes, nodes } => {
                if nodes != n {
                    return param(format!(
                        "readout was built for {nodes} nodes, graph has {n}"
                    ));
                }
                let means = Self::temporal_means(features, n, t);
                let fl = features.len();
                let mut out = self.readout_b.clone();
                for (i, row) in means.iter().enumerate() {
                    for (f, &m) in row.iter().enumerate() {
                        let wr = w.row(i * fl + f);
                        for (o, &wv) in out.iter_mut().zip(wr).take(classes) {
                            *o += m * wv;
                        }
                    }
                }
                Ok(out)
            }
            Readout::LastSlice => {
                let base = (t - 1) * n;
                Ok((0..n)
                    .map(|i| {
                        self.readout_b[0]
                            + features
                                .iter()
                                .enumerate()
                                .map(|(f, col)| col[base + i] * w[(f, 0)])
                                .sum::<f64>()
                    })
                    .collect())
            }
        }
    }

    /// Gradients of a scalar loss given `∂L/∂output`.
    pub fn backward(
        &self,
        ops: &ShiftOperators,
        cache: &ForwardCache,
        upstream: &[f64],
    ) -> Result<Gradients> {
        let banks = self.effective_banks();
        self.backward_with(&banks, ops, cache, upstream)
    }

    pub fn backward_with(
        &self,
        banks: &[FilterBank],
        ops: &ShiftOperators,
        cache: &ForwardCache,
        upstream: &[f64],
    ) -> Result<Gradients> {
        if cache.fingerprint != self.fingerprint() || cache.layers.len() != self.n_layers() {
            return Err(Error::Contract(
                "forward cache does not belong to the current parameters".into(),
            ));
        }
        if cache.n != ops.n() || cache.t != ops.t() {
            return Err(Error::Contract("forward cache was built on another graph pair".into()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut d_feat = self.readout_backward(cache, upstream, &mut grads)?;
        let mut counts = ShiftCounts::default();
        for idx in (0..self.n_layers()).rev() {
            let layer = &cache.layers[idx];
            let act = self.layer_activation(idx);
            for (d, z) in d_feat.iter_mut().zip(&layer.pre) {
                for (dv, &zv) in d.iter_mut().zip(z) {
                    *dv *= act.grad(zv);
                }
            }
            let (d_bank, d_in) = ops.bank_backward(&banks[idx], &layer.tables, &d_feat, &mut counts);
            self.fold_bank_gradient(idx, &d_bank, &mut grads);
            d_feat = d_in;
        }
        Ok(grads)
    }

    /// Maps a joint-bank gradient onto the stored parameters of layer `idx`.
    fn fold_bank_gradient(&self, idx: usize, d_joint: &FilterBank, grads: &mut Gradients) {
        let FilterMode::Product {
            orders,
            learn_scalars,
            ..
        } = &self.config.filter
        else {
            grads.layers[idx] = d_joint.clone();
            return;
        };
        let order = orders[idx];
        let powers = parametric_powers(self.scalars, order);
        let mono = &self.layers[idx];
        let target = &mut grads.layers[idx];
        // ∂L/∂M_k = Σ_pq [P^k]_pq ∂L/∂H_pq
        for (k, pk) in powers.iter().enumerate() {
            let tap = target.tap_mut(k, 0);
            for p in 0..=order {
                for q in 0..=order {
                    let c = pk.get(p, q);
                    if c != 0.0 {
                        tap.axpy(c, d_joint.tap(p, q));
                    }
                }
            }
        }
        if !*learn_scalars {
            return;
        }
        // ∂P^k/∂s_ij = k·P^{k-1}·λ_T^i λ^j; shift k·P^{k-1} by (spatial j, temporal i).
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 1..=order {
                    let prev = &powers[k - 1];
                    let mk = mono.tap(k, 0);
                    for p in 0..order {
                        for q in 0..order {
                            let c = prev.get(p, q);
                            if c == 0.0 || p + j > order || q + i > order {
                                continue;
                            }
                            let g = d_joint.tap(p + j, q + i);
                            let inner: f64 = g
                                .as_slice()
                                .iter()
                                .zip(mk.as_slice())
                                .map(|(a, b)| a * b)
                                .sum();
                            acc += k as f64 * c * inner;
                        }
                    }
                }
                grads.scalars[i][j] += acc;
            }
        }
    }

    fn readout_backward(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<Vec<f64>>> {
        let (n, t) = (cache.n, cache.t);
        let features = &cache.features;
        let fl = features.len();
        let w = &self.readout_w;
        let mut d_feat = vec![vec![0.0; n * t]; fl];
        match self.config.readout {
            Readout::NodeMean { classes } => {
                if upstream.len() != classes {
                    return param("upstream gradient has the wrong length");
                }
                let means = Self::temporal_means(features, n, t);
                let mut pooled = vec![0.0; fl];
                for row in &means {
                    for (p, &m) in pooled.iter_mut().zip(row) {
                        *p += m / n as f64;
                    }
                }
                for c in 0..classes {
                    grads.readout_b[c] += upstream[c];
                    for f in 0..fl {
                        grads.readout_w[(f, c)] += pooled[f] * upstream[c];
                    }
                }
                let scale = 1.0 / (n * t) as f64;
                for (f, col) in d_feat.iter_mut().enumerate() {
                    let d: f64 = (0..classes).map(|c| w[(f, c)] * upstream[c]).sum::<f64>() * scale;
                    col.iter_mut().for_each(|v| *v = d);
                }
            }
            Readout::NodeLinear { classes, .. } => {
                if upstream.len() != classes {
                    return param("upstream gradient has the wrong length");
                }
                let means = Self::temporal_means(features, n, t);
                for c in 0..classes {
                    grads.readout_b[c] += upstream[c];
                }
                let inv_t = 1.0 / t as f64;
                for (i, row) in means.iter().enumerate() {
                    for (f, &m) in row.iter().enumerate() {
                        let r = i * fl + f;
                        let mut d = 0.0;
                        for c in 0..classes {
                            grads.readout_w[(r, c)] += m * upstream[c];
                            d += w[(r, c)] * upstream[c];
                        }
                        for tau in 0..t {
                            d_feat[f][tau * n + i] = d * inv_t;
                        }
                    }
                }
            }
            Readout::LastSlice => {
                if upstream.len() != n {
                    return param("upstream gradient has the wrong length");
                }
                let base = (t - 1) * n;
                for (i, &u) in upstream.iter().enumerate() {
                    grads.readout_b[0] += u;
                    for f in 0..fl {
                        grads.readout_w[(f, 0)] += features[f][base + i] * u;
                        d_feat[f][base + i] = w[(f, 0)] * u;
                    }
                }
            }
        }
        Ok(d_feat)
    }
}

/// `H_pq = Σ_k M_k [P^k]_pq`.
fn expand_bank(mono: &FilterBank, powers: &[JointFilterCoeffs<f64>]) -> FilterBank {
    let order = powers.len() - 1;
    let mut out = FilterBank::zeros(order, order, mono.f_out(), mono.f_in());
    for (k, pk) in powers.iter().enumerate() {
        let mk = mono.tap(k, 0);
        for p in 0..=order {
            for q in 0..=order {
                let c = pk.get(p, q);
                if c != 0.0 {
                    out.tap_mut(p, q).axpy(c, mk);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct LayerCache {
    tables: Vec<Vec<Vec<f64>>>,
    pre: Vec<Vec<f64>>,
}

/// Activations kept by [`GtcnnModel::forward`] for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    features: Vec<Vec<f64>>,
    n: usize,
    t: usize,
    fingerprint: u64,
}

impl ForwardCache {
    /// Final feature columns (one per output feature, each of length `NT`).
    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    /// Pre-activation columns of layer `idx`.
    pub fn pre_activation(&self, idx: usize) -> &[Vec<f64>] {
        &self.layers[idx].pre
    }
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<FilterBank>,
    pub scalars: [[f64; 2]; 2],
    pub readout_w: DenseMatrix,
    pub readout_b: Vec<f64>,
    learn_scalars: bool,
}

impl Gradients {
    pub fn zeros_like(model: &GtcnnModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|b| FilterBank::zeros(b.k_bar(), b.k_tilde(), b.f_out(), b.f_in()))
                .collect(),
            scalars: [[0.0; 2]; 2],
            readout_w: DenseMatrix::zeros(model.readout_w.rows(), model.readout_w.cols()),
            readout_b: vec![0.0; model.readout_b.len()],
            learn_scalars: model.config.filter.learns_scalars(),
        }
    }

    /// Same ordering as [`GtcnnModel::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for bank in &self.layers {
            for tap in bank.taps() {
                out.extend_from_slice(tap.as_slice());
            }
        }
        if self.learn_scalars {
            out.extend(self.scalars.iter().flatten());
        }
        out.extend_from_slice(self.readout_w.as_slice());
        out.extend_from_slice(&self.readout_b);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    CrossEntropy,
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Class(usize),
    Values(Vec<f64>),
}

/// One input window with its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// `N × T` signal window.
    pub x: DenseMatrix,
    pub target: Target,
}

impl Loss {
    /// Per-sample loss and its gradient with respect to the network output.
    pub fn evaluate(self, output: &[f64], target: &Target) -> Result<(f64, Vec<f64>)> {
        match (self, target) {
            (Self::CrossEntropy, Target::Class(c)) => {
                if *c >= output.len() {
                    return param(format!("label {c} out of range for {} classes", output.len()));
                }
                let max = output.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = output.iter().map(|&o| (o - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                let loss = z.ln() + max - output[*c];
                let mut grad: Vec<f64> = exps.iter().map(|e| e / z).collect();
                grad[*c] -= 1.0;
                Ok((loss, grad))
            }
            (Self::Mse, Target::Values(y)) => {
                if y.len() != output.len() {
                    return param("regression target length mismatch");
                }
                let n = y.len() as f64;
                let loss = output.iter().zip(y).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / n;
                let grad = output.iter().zip(y).map(|(o, t)| 2.0 * (o - t) / n).collect();
                Ok((loss, grad))
            }
            _ => param("loss and target kinds do not match"),
        }
    }
}

/// Objective over a batch: mean sample loss plus `β‖s‖₁` on learned scalars.
pub fn batch_objective(
    model: &GtcnnModel,
    ops: &ShiftOperators,
    batch: &[&Sample],
    loss: Loss,
) -> Result<(f64, Vec<f64>)> {
    let banks = model.effective_banks();
    let mut grad = vec![0.0; model.n_params()];
    let mut total = 0.0;
    let inv = 1.0 / batch.len() as f64;
    for sample in batch {
        let (out, cache) = model.forward_with(&banks, ops, &sample.x)?;
        let (l, dout) = loss.evaluate(&out, &sample.target)?;
        total += l * inv;
        let g = model.backward_with(&banks, ops, &cache, &dout)?.flatten();
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b * inv;
        }
    }
    if model.config.filter.learns_scalars() && model.config.l1_weight > 0.0 {
        let beta = model.config.l1_weight;
        let offset = model
            .layers
            .iter()
            .map(|b| b.taps().len() * b.f_in() * b.f_out())
            .sum::<usize>();
        for (idx, &s) in model.scalars.iter().flatten().enumerate() {
            total += beta * s.abs();
            // subgradient of |s| at 0 is taken as 0
            let sign = if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            };
            grad[offset + idx] += beta * sign;
        }
    }
    Ok((total, grad))
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 100,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            split: [0.8, 0.1, 0.1],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return param("batch size must be positive");
        }
        if self.split.iter().any(|&f| !(0.0..=1.0).contains(&f))
            || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return param("split fractions must be in [0, 1] and sum to 1");
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return param("learning rate must be non-negative");
        }
        Ok(())
    }

    /// Sizes of the train / validation / test parts of `n` samples.
    pub fn split_sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = (self.split[0] * n as f64).round() as usize;
        let val = ((self.split[1] * n as f64).round() as usize).min(n - train.min(n));
        let train = train.min(n);
        (train, val, n - train - val)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Mae,
    Rmse,
    /// Percent.
    Mape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Targets skipped by MAPE because `|y| < 1e-8`.
    pub skipped: usize,
}

/// Index of the largest score (lowest index on ties).
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Metric from paired outputs and targets.
pub fn score(outputs: &[Vec<f64>], targets: &[&Target], metric: Metric) -> Result<Evaluation> {
    if outputs.is_empty() {
        return param("cannot evaluate on an empty dataset");
    }
    if metric == Metric::Accuracy {
        let mut hits = 0usize;
        for (o, t) in outputs.iter().zip(targets) {
            let Target::Class(c) = t else {
                return param("accuracy needs class targets");
            };
            hits += usize::from(argmax(o) == *c);
        }
        return Ok(Evaluation {
            value: hits as f64 / outputs.len() as f64,
            skipped: 0,
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut skipped = 0usize;
    for (o, t) in outputs.iter().zip(targets) {
        let Target::Values(y) = t else {
            return param("regression metrics need value targets");
        };
        if y.len() != o.len() {
            return param("prediction and target lengths differ");
        }
        for (&p, &yv) in o.iter().zip(y) {
            let e = p - yv;
            match metric {
                Metric::Mae => sum += e.abs(),
                Metric::Rmse => sum += e * e,
                Metric::Mape => {
                    if yv.abs() < 1e-8 {
                        skipped += 1;
                        continue;
                    }
                    sum += (e / yv).abs();
                }
                Metric::Accuracy => unreachable!(),
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate(
            "every target was skipped by the metric".into(),
        ));
    }
    let mean = sum / count as f64;
    let value = match metric {
        Metric::Rmse => mean.sqrt(),
        Metric::Mape => 100.0 * mean,
        _ => mean,
    };
    Ok(Evaluation { value, skipped })
}

/// Runs the model over `data` and scores it.
pub fn evaluate(
    model: &GtcnnModel,
    ops: &ShiftOperators,
    data: &[Sample],
    metric: Metric,
) -> Result<Evaluation> {
    let banks = model.effective_banks();
    let outputs = data
        .iter()
        .map(|s| model.forward_with(&banks, ops, &s.x).map(|(o, _)| o))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<&Target> = data.iter().map(|s| &s.target).collect();
    score(&outputs, &targets, metric)
}

/// Mean loss over `data` (no regularization).
pub fn mean_loss(model: &GtcnnModel, ops: &ShiftOperators, data: &[Sample], loss: Loss) -> Result<f64> {
    if data.is_empty() {
        return Ok(f64::NAN);
    }
    let banks = model.effective_banks();
    let mut total = 0.0;
    for s in data {
        let (o, _) = model.forward_with(&banks, ops, &s.x)?;
        total += loss.evaluate(&o, &s.target)?.0;
    }
    Ok(total / data.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    /// CSV with header `epoch,train_loss,val_loss,val_metric`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_loss", "val_loss", "val_metric"])?;
        for r in &self.epochs {
            w.write_record(&[
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.val_loss.to_string(),
                r.val_metric.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mini-batch Adam training.
///
/// Batches are drawn from a ChaCha8 shuffle seeded with `tc.seed`; training is
/// single-threaded, so a fixed seed gives bit-identical histories. `train_loss` is the
/// size-weighted mean of the batch objectives seen during the epoch.
pub fn train(
    model: &mut GtcnnModel,
    spatial: &Graph,
    temporal: &Graph,
    train_set: &[Sample],
    val_set: &[Sample],
    tc: &TrainConfig,
    loss: Loss,
) -> Result<History> {
    tc.validate()?;
    if train_set.is_empty() {
        return param("training set is empty");
    }
    let ops = model.operators(spatial, temporal)?;
    let metric = match loss {
        Loss::CrossEntropy => Metric::Accuracy,
        Loss::Mse => Metric::Rmse,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut adam = Adam::new(model.n_params(), tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(tc.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (obj, grad) = batch_objective(model, &ops, &batch, loss)?;
            if !obj.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            epoch_loss += obj * chunk.len() as f64;
            let mut params = model.flat_params();
            adam.step(&mut params, &grad);
            model.assign_params(&params)?;
        }
        let (val_loss, val_metric) = if val_set.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (
                mean_loss(model, &ops, val_set, loss)?,
                evaluate(model, &ops, val_set, metric)?.value,
            )
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            val_loss,
            val_metric,
        });
    }
    Ok(history)
}

/// Class scores of the GCNN baseline for an `N × T` window (time steps as features).
pub fn gcnn_baseline_forward(model: &GtcnnModel, spatial: &Graph, x: &DenseMatrix) -> Result<Vec<f64>> {
    if !matches!(model.config.filter, FilterMode::TimeAsFeatures { .. }) {
        return param("gcnn_baseline_forward needs a time-as-features model");
    }
    let ops = ShiftOperators::new(spatial, &line_graph(1)?);
    model.forward(&ops, x).map(|(o, _)| o)
}

/// Builds a config for one of the standard architectures.
pub fn standard_config(
    kind: Architecture,
    features: &[usize],
    order: usize,
    window: usize,
    readout: Readout,
    l1_weight: f64,
) -> GtcnnConfig {
    let layers = features.len();
    let mut all = Vec::with_capacity(layers + 1);
    let filter = match kind {
        Architecture::Gcnn => {
            all.push(window);
            FilterMode::TimeAsFeatures {
                orders: vec![order; layers],
            }
        }
        Architecture::Joint => {
            all.push(1);
            FilterMode::Joint {
                orders: vec![(order, order); layers],
            }
        }
        Architecture::Fixed(kind) => {
            all.push(1);
            FilterMode::Product {
                spec: ProductSpec::fixed(kind).expect("fixed product kind"),
                orders: vec![order; layers],
                learn_scalars: false,
            }
        }
        Architecture::Parametric => {
            all.push(1);
            FilterMode::Product {
                spec: ProductSpec::CARTESIAN.as_parametric(),
                orders: vec![order; layers],
                learn_scalars: true,
            }
        }
    };
    all.extend_from_slice(features);
    GtcnnConfig {
        features: all,
        filter,
        activation: Activation::Relu,
        final_activation: false,
        readout,
        l1_weight: if kind == Architecture::Parametric { l1_weight } else { 0.0 },
    }
}

/// Model families compared in the source-localization experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Gcnn,
    Joint,
    Fixed(ProductKind),
    Parametric,
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gcnn => "gcnn",
            Self::Joint => "joint",
            Self::Fixed(ProductKind::Kronecker) => "kronecker",
            Self::Fixed(ProductKind::Cartesian) => "cartesian",
            Self::Fixed(ProductKind::Strong) => "strong",
            Self::Fixed(ProductKind::Parametric) | Self::Parametric => "parametric",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "gcnn" => Self::Gcnn,
            "joint" => Self::Joint,
            "kronecker" => Self::Fixed(ProductKind::Kronecker),
            "cartesian" => Self::Fixed(ProductKind::Cartesian),
            "strong" => Self::Fixed(ProductKind::Strong),
            "parametric" => Self::Parametric,
            other => return Err(Error::Config(format!("unknown model {other:?}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sbm_generate;

    fn small_graphs(n: usize, t: usize, seed: u64) -> (Graph, Graph) {
        let (s, _) = sbm_generate(n, 2, 0.7, 0.3, seed).unwrap();
        (s, line_graph(t).unwrap())
    }

    fn sample(n: usize, t: usize, seed: u64, target: Target) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Sample {
            x: DenseMatrix::from_fn(n, t, |_, _| rng.gen_range(-1.0..1.0)),
            target,
        }
    }

    #[test]
    fn zero_model_gives_uniform_scores() {
        let cfg = standard_config(
            Architecture::Parametric,
            &[3, 2],
            2,
            3,
            Readout::NodeMean { classes: 4 },
            0.05,
        );
        let model = GtcnnModel::zeros(cfg).unwrap();
        let (s, st) = small_graphs(6, 3, 1);
        let ops = model.operators(&s, &st).unwrap();
        let (out, _) = model.forward(&ops, &sample(6, 3, 2, Target::Class(0)).x).unwrap();
        assert!(out.iter().all(|&o| o == out[0]));
    }

    #[test]
    fn identity_network_reproduces_its_input() {
        let cfg = GtcnnConfig {
            features: vec![1, 1],
            filter: FilterMode::Joint { orders: vec![(0, 0)] },
            activation: Activation::Identity,
            final_activation: false,
            readout: Readout::LastSlice,
            l1_weight: 0.0,
        };
        let mut model = GtcnnModel::zeros(cfg).unwrap();
        model.layers[0].tap_mut(0, 0)[(0, 0)] = 1.0;
        model.readout_w[(0, 0)] = 1.0;
        let (s, st) = small_graphs(2, 1, 3);
        let ops = model.operators(&s, &st).unwrap();
        let x = DenseMatrix::from_rows(&[vec![0.25], vec![-1.5]]).unwrap();
        let (out, _) = model.forward(&ops, &x).unwrap();
        assert_eq!(out, vec![0.25, -1.5]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let cfg = standard_config(Architecture::Joint, &[3, 2], 2, 3, Readout::NodeMean { classes: 2 }, 0.0);
        let model = GtcnnModel::init(cfg, 4).unwrap();
        let (s, st) = small_graphs(5, 3, 4);
        let ops = model.operators(&s, &st).unwrap();
        let (_, cache) = model.forward(&ops, &sample(5, 3, 9, Target::Class(1)).x).unwrap();
        let g = model.backward(&ops, &cache, &[0.0, 0.0]).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let cfg = standard_config(Architecture::Joint, &[2], 1, 2, Readout::NodeMean { classes: 2 }, 0.0);
        let mut model = GtcnnModel::init(cfg, 1).unwrap();
        let (s, st) = small_graphs(4, 2, 1);
        let ops = model.operators(&s, &st).unwrap();
        let (_, cache) = model.forward(&ops, &sample(4, 2, 1, Target::Class(0)).x).unwrap();
        model.readout_b[0] += 1.0;
        assert!(matches!(model.backward(&ops, &cache, &[1.0, 0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn param_round_trip() {
        let cfg = standard_config(Architecture::Parametric, &[3, 2], 2, 3, Readout::NodeMean { classes: 3 }, 0.05);
        let mut model = GtcnnModel::init(cfg, 7).unwrap();
        let p = model.flat_params();
        assert_eq!(p.len(), model.n_params());
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        model.assign_params(&shifted).unwrap();
        assert_eq!(model.flat_params(), shifted);
        assert!(model.assign_params(&p[1..]).is_err());
    }

    #[test]
    fn parametric_init_is_near_cartesian() {
        let cfg = standard_config(Architecture::Parametric, &[2], 2, 3, Readout::NodeMean { classes: 2 }, 0.05);
        let model = GtcnnModel::init(cfg, 3).unwrap();
        let cart = ProductSpec::CARTESIAN.scalars();
        for i in 0..2 {
            for j in 0..2 {
                assert!((model.scalars[i][j] - cart[i][j]).abs() <= 0.01);
            }
        }
    }

    #[test]
    fn metrics_by_hand() {
        let targets = [Target::Values(vec![2.0, 2.0]), Target::Values(vec![2.0, 2.0])];
        let refs: Vec<&Target> = targets.iter().collect();
        let perfect = vec![vec![2.0, 2.0]; 2];
        for m in [Metric::Mae, Metric::Rmse, Metric::Mape] {
            assert_eq!(score(&perfect, &refs, m).unwrap().value, 0.0);
        }
        let off = vec![vec![3.0, 3.0]; 2];
        assert_eq!(score(&off, &refs, Metric::Mae).unwrap().value, 1.0);
        assert_eq!(score(&off, &refs, Metric::Rmse).unwrap().value, 1.0);
        assert_eq!(score(&off, &refs, Metric::Mape).unwrap().value, 50.0);

        let zeros = [Target::Values(vec![0.0, 1e-9])];
        let z: Vec<&Target> = zeros.iter().collect();
        assert!(matches!(score(&[vec![1.0, 1.0]], &z, Metric::Mape), Err(Error::Degenerate(_))));
        let mixed = [Target::Values(vec![0.0, 4.0])];
        let m: Vec<&Target> = mixed.iter().collect();
        let e = score(&[vec![1.0, 2.0]], &m, Metric::Mape).unwrap();
        assert_eq!((e.value, e.skipped), (50.0, 1));

        let classes = [Target::Class(1), Target::Class(0)];
        let c: Vec<&Target> = classes.iter().collect();
        assert_eq!(score(&[vec![0.0, 1.0], vec![2.0, 1.0]], &c, Metric::Accuracy).unwrap().value, 1.0);
        assert!(score(&[], &[], Metric::Accuracy).is_err());
    }

    #[test]
    fn random_labels_give_chance_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let classes = 4;
        let outputs: Vec<Vec<f64>> =
            (0..1000).map(|_| (0..classes).map(|_| rng.gen::<f64>()).collect()).collect();
        let targets: Vec<Target> = (0..1000).map(|_| Target::Class(rng.gen_range(0..classes))).collect();
        let refs: Vec<&Target> = targets.iter().collect();
        let acc = score(&outputs, &refs, Metric::Accuracy).unwrap().value;
        assert!((acc - 0.25).abs() <= 0.05, "accuracy {acc}");
    }

    #[test]
    fn cross_entropy_gradient_sums_to_zero() {
        let (l, g) = Loss::CrossEntropy.evaluate(&[1.0, 2.0, 0.5], &Target::Class(1)).unwrap();
        assert!(l > 0.0);
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
        assert!(Loss::CrossEntropy.evaluate(&[1.0], &Target::Class(3)).is_err());
        assert!(Loss::Mse.evaluate(&[1.0], &Target::Class(0)).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let cfg = standard_config(Architecture::Parametric, &[2], 1, 2, Readout::NodeMean { classes: 2 }, 0.05);
        let mut model = GtcnnModel::init(cfg, 5).unwrap();
        let before = model.clone();
        let (s, st) = small_graphs(4, 2, 5);
        let data: Vec<Sample> = (0..6).map(|i| sample(4, 2, i, Target::Class((i % 2) as usize))).collect();
        let tc = TrainConfig {
            epochs: 3,
            batch_size: 4,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let h = train(&mut model, &s, &st, &data, &data[..2], &tc, Loss::CrossEntropy).unwrap();
        assert_eq!(h.epochs.len(), 3);
        assert_eq!(model, before);
    }

    #[test]
    fn split_sizes() {
        let tc = TrainConfig::default();
        assert_eq!(tc.split_sizes(2000), (1600, 200, 200));
        assert_eq!(tc.split_sizes(600), (480, 60, 60));
        let bad = TrainConfig {
            split: [0.5, 0.1, 0.1],
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn checkpoint_json_round_trip() {
        let cfg = standard_config(Architecture::Parametric, &[3, 2], 2, 3, Readout::NodeLinear { classes: 3, nodes: 5 }, 0.05);
        let model = GtcnnModel::init(cfg, 2).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: GtcnnModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }
}
