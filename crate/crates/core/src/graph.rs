//! Graphs, generators, Laplacian, heat diffusion and node permutations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{sym_eig, EigenDecomposition};
use crate::sparse::CsrMatrix;

/// Symmetry tolerance for the `symmetric` flag.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Spatial,
    Temporal,
}

/// A graph represented by its shift operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T = f64> {
    gso: CsrMatrix<T>,
    kind: GraphKind,
    symmetric: bool,
}

impl<T: Scalar> Graph<T> {
    /// Wraps a square shift operator; the symmetric flag is computed, not trusted.
    pub fn new(gso: CsrMatrix<T>, kind: GraphKind) -> Result<Self> {
        if !gso.is_square() {
            return param(format!(
                "graph shift operator must be square, got {}x{}",
                gso.n_rows(),
                gso.n_cols()
            ));
        }
        let symmetric = gso.is_symmetric(T::of(SYMMETRY_TOL));
        Ok(Self {
            gso,
            kind,
            symmetric,
        })
    }

    pub fn gso(&self) -> &CsrMatrix<T> {
        &self.gso
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn n(&self) -> usize {
        self.gso.n_rows()
    }

    pub fn with_kind(mut self, kind: GraphKind) -> Self {
        self.kind = kind;
        self
    }

    /// Graph with the transposed shift operator.
    pub fn transposed(&self) -> Self {
        Self {
            gso: self.gso.transpose(),
            kind: self.kind,
            symmetric: self.symmetric,
        }
    }

    /// Out-degrees (row sums of the shift operator).
    pub fn degrees(&self) -> Vec<T> {
        self.gso.row_sums()
    }

    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        Graph {
            gso: self.gso.cast(),
            kind: self.kind,
            symmetric: self.symmetric,
        }
    }
}

/// Undirected stochastic block model with 0/1 weights.
///
/// Node `i` belongs to community `i mod communities`. Pairs `(i, j)` with `i < j`
/// are visited in lexicographic order and each draws one `f64` from a ChaCha8
/// generator seeded with `seed`; the edge exists iff the draw is below the pair's
/// probability.
pub fn sbm_generate<T: Scalar>(
    n: usize,
    communities: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Graph<T>, Vec<usize>)> {
    if communities == 0 || n < communities {
        return param(format!(
            "SBM needs n >= communities >= 1 (n = {n}, communities = {communities})"
        ));
    }
    let valid = |p: f64| (0.0..=1.0).contains(&p);
    if !valid(p_in) || !valid(p_out) || p_out > p_in {
        return param(format!(
            "SBM needs 0 <= p_out <= p_in <= 1 (p_in = {p_in}, p_out = {p_out})"
        ));
    }
    let labels: Vec<usize> = (0..n).map(|i| i % communities).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                entries.push((i, j, T::one()));
                entries.push((j, i, T::one()));
            }
        }
    }
    let gso = CsrMatrix::from_triplets(n, n, entries)?;
    Ok((Graph::new(gso, GraphKind::Spatial)?, labels))
}

/// Directed line graph: `[S_T]_{τ,τ-1} = 1`, so `S_T x` moves samples one step forward.
pub fn line_graph<T: Scalar>(t: usize) -> Result<Graph<T>> {
    if t == 0 {
        return param("line graph needs t >= 1");
    }
    let gso = CsrMatrix::from_triplets(t, t, (1..t).map(|tau| (tau, tau - 1, T::one())))?;
    Graph::new(gso, GraphKind::Temporal)
}

/// Directed cycle: `[S_T]_{τ,(τ-1) mod t} = 1`.
pub fn cyclic_graph<T: Scalar>(t: usize) -> Result<Graph<T>> {
    if t == 0 {
        return param("cyclic graph needs t >= 1");
    }
    let gso =
        CsrMatrix::from_triplets(t, t, (0..t).map(|tau| (tau, (tau + t - 1) % t, T::one())))?;
    Graph::new(gso, GraphKind::Temporal)
}

/// Undirected path over `t` time steps (symmetric, real spectrum).
pub fn path_graph<T: Scalar>(t: usize) -> Result<Graph<T>> {
    if t == 0 {
        return param("path graph needs t >= 1");
    }
    let gso = CsrMatrix::from_triplets(
        t,
        t,
        (1..t).flat_map(|tau| [(tau, tau - 1, T::one()), (tau - 1, tau, T::one())]),
    )?;
    Graph::new(gso, GraphKind::Temporal)
}

/// Combinatorial Laplacian `D - A` of a symmetric graph.
pub fn laplacian<T: Scalar>(g: &Graph<T>) -> Result<CsrMatrix<T>> {
    if !g.is_symmetric() {
        return Err(Error::Contract("laplacian needs a symmetric graph".into()));
    }
    let degrees = g.degrees();
    CsrMatrix::linear_combination(&[
        (T::one(), &CsrMatrix::diagonal(&degrees)),
        (-T::one(), g.gso()),
    ])
}

/// Heat kernel `e^{-τL}` of a symmetric graph, evaluated through the eigenbasis of `L`.
#[derive(Debug, Clone)]
pub struct HeatDiffusion<T = f64> {
    eig: EigenDecomposition<T>,
}

impl<T: Scalar> HeatDiffusion<T> {
    pub fn new(g: &Graph<T>) -> Result<Self> {
        let l = laplacian(g)?;
        Ok(Self { eig: sym_eig(&l)? })
    }

    /// `V e^{-τΛ} Vᵀ x0`.
    pub fn apply(&self, x0: &[T], time: T) -> Result<Vec<T>> {
        let n = self.eig.dim();
        if x0.len() != n {
            return param(format!("signal has {} entries, graph has {n} nodes", x0.len()));
        }
        if time < T::zero() || !time.is_finite() {
            return param("diffusion time must be finite and non-negative");
        }
        let v = &self.eig.eigenvectors;
        let mut coeffs = vec![T::zero(); n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let proj: T = (0..n).map(|i| v[(i, k)] * x0[i]).sum();
            // Laplacian eigenvalues are >= 0 up to rounding; clamp so e^{-τλ} never grows.
            let lambda = self.eig.eigenvalues[k].max(T::zero());
            *c = proj * (-time * lambda).exp();
        }
        Ok((0..n)
            .map(|i| (0..n).map(|k| v[(i, k)] * coeffs[k]).sum())
            .collect())
    }
}

/// `e^{-time·L} x0` for a symmetric graph.
pub fn heat_diffusion<T: Scalar>(g: &Graph<T>, x0: &[T], time: T) -> Result<Vec<T>> {
    if !g.is_symmetric() {
        return Err(Error::Contract("heat diffusion needs a symmetric graph".into()));
    }
    HeatDiffusion::new(g)?.apply(x0, time)
}

/// A node relabelling. Applying it yields `Pᵀ S P` and `Pᵀ x` with
/// `(Pᵀ x)[i] = x[mapping[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut sorted = mapping.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &m)| i != m) {
            return param("permutation mapping is not a bijection on 0..n");
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    /// Two-element swap on `n` nodes.
    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return param("swap index out of range");
        }
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.swap(a, b);
        Ok(Self { mapping })
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }
}

/// `Pᵀ S P`, i.e. `[result]_{ij} = S_{mapping[i], mapping[j]}`.
pub fn permute_graph<T: Scalar>(g: &Graph<T>, p: &Permutation) -> Result<Graph<T>> {
    if p.len() != g.n() {
        return param(format!(
            "permutation of size {} applied to a graph with {} nodes",
            p.len(),
            g.n()
        ));
    }
    let inv = p.inverse();
    let gso = CsrMatrix::from_triplets(
        g.n(),
        g.n(),
        g.gso()
            .triplets()
            .map(|(r, c, v)| (inv.mapping[r], inv.mapping[c], v)),
    )?;
    Ok(Graph {
        gso,
        kind: g.kind,
        symmetric: g.symmetric,
    })
}

/// `Pᵀ x`.
pub fn permute_signal<T: Scalar>(x: &[T], p: &Permutation) -> Result<Vec<T>> {
    if p.len() != x.len() {
        return param(format!(
            "permutation of size {} applied to a signal of length {}",
            p.len(),
            x.len()
        ));
    }
    Ok(p.mapping.iter().map(|&m| x[m]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    #[test]
    fn sbm_disjoint_cliques() {
        for seed in [0, 5, 99] {
            let (g, labels) = sbm_generate::<f64>(4, 2, 1.0, 0.0, seed).unwrap();
            assert_eq!(labels, vec![0, 1, 0, 1]);
            assert_eq!(g.gso().nnz(), 4);
            assert_eq!(g.gso().get(0, 2), 1.0);
            assert_eq!(g.gso().get(1, 3), 1.0);
            assert!(g.is_symmetric());
        }
    }

    #[test]
    fn sbm_expected_edge_count() {
        // 0.8·5·C(20,2) + 0.2·(C(100,2) − 5·C(20,2)) = 760 + 800
        let expected = 1560.0;
        let mut total = 0.0;
        for seed in 0..20 {
            let (g, _) = sbm_generate::<f64>(100, 5, 0.8, 0.2, seed).unwrap();
            total += g.gso().nnz() as f64 / 2.0;
        }
        let mean = total / 20.0;
        assert!((mean - expected).abs() <= 0.05 * expected, "mean edges {mean}");
    }

    #[test]
    fn sbm_replays_its_bernoulli_draws() {
        let (g, _) = sbm_generate::<f64>(3, 3, 0.5, 0.5, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..3 {
            for j in (i + 1)..3 {
                let fired = rng.gen::<f64>() < 0.5;
                assert_eq!(g.gso().get(i, j) == 1.0, fired);
                assert_eq!(g.gso().get(j, i) == 1.0, fired);
            }
        }
        for i in 0..3 {
            assert_eq!(g.gso().get(i, i), 0.0);
        }
    }

    #[test]
    fn sbm_rejects_bad_parameters() {
        assert!(sbm_generate::<f64>(2, 3, 0.5, 0.1, 0).is_err());
        assert!(sbm_generate::<f64>(4, 2, 0.2, 0.5, 0).is_err());
        assert!(sbm_generate::<f64>(4, 2, 1.2, 0.5, 0).is_err());
        assert!(sbm_generate::<f64>(4, 0, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn line_graph_shape() {
        let g1 = line_graph::<f64>(1).unwrap();
        assert_eq!(g1.gso().nnz(), 0);
        assert_eq!(g1.n(), 1);
        let g3 = line_graph::<f64>(3).unwrap();
        assert_eq!(g3.gso().nnz(), 2);
        assert_eq!(g3.gso().get(1, 0), 1.0);
        assert_eq!(g3.gso().get(2, 1), 1.0);
        assert!(!g3.is_symmetric());
        assert!(line_graph::<f64>(0).is_err());
    }

    #[test]
    fn line_graph_is_nilpotent() {
        let d = line_graph::<f64>(4).unwrap().gso().to_dense();
        assert!(d.pow(3).unwrap().max_abs() > 0.0);
        assert_eq!(d.pow(4).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn cyclic_graph_cases() {
        let g1 = cyclic_graph::<f64>(1).unwrap();
        assert_eq!(g1.gso().get(0, 0), 1.0);
        let g2 = cyclic_graph::<f64>(2).unwrap();
        assert!(g2.is_symmetric());
        assert_eq!(g2.gso().to_dense(), DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let g4 = cyclic_graph::<f64>(4).unwrap();
        assert_eq!(g4.gso().nnz(), 4);
        // λ^4 = 1 for every eigenvalue ⇔ S^4 = I for this permutation matrix.
        let d = g4.gso().to_dense();
        assert_eq!(d.pow(4).unwrap(), DenseMatrix::identity(4));
        // normal: S Sᵀ = Sᵀ S
        assert_eq!(d.matmul(&d.transpose()).unwrap(), d.transpose().matmul(&d).unwrap());
        assert!(cyclic_graph::<f64>(0).is_err());
    }

    fn triangle() -> Graph<f64> {
        let t = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (0, 2, 1.0), (2, 0, 1.0)],
        )
        .unwrap();
        Graph::new(t, GraphKind::Spatial).unwrap()
    }

    #[test]
    fn laplacian_cases() {
        let edge = Graph::new(
            CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            GraphKind::Spatial,
        )
        .unwrap();
        let l = laplacian(&edge).unwrap().to_dense();
        assert_eq!(l, DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap());

        let l = laplacian(&triangle()).unwrap();
        for i in 0..3 {
            assert_eq!(l.get(i, i), 2.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(l.get(i, j), -1.0);
                }
            }
        }
        let eig = sym_eig(&l).unwrap();
        assert!(eig.min_eigenvalue().abs() < 1e-12);

        let (g, _) = sbm_generate::<f64>(20, 2, 0.6, 0.2, 3).unwrap();
        let l = laplacian(&g).unwrap();
        let ones = vec![1.0; 20];
        assert!(l.mul_vec(&ones).unwrap().iter().all(|v| v.abs() <= 1e-12));

        let directed = line_graph::<f64>(3).unwrap();
        assert!(matches!(laplacian(&directed), Err(Error::Contract(_))));
    }

    #[test]
    fn heat_diffusion_time_zero_and_limit() {
        let g = triangle();
        let x0 = vec![0.3, -1.0, 2.0];
        let y = heat_diffusion(&g, &x0, 0.0).unwrap();
        for (a, b) in y.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-12);
        }
        let k2 = Graph::new(
            CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            GraphKind::Spatial,
        )
        .unwrap();
        let y: Vec<f64> = heat_diffusion(&k2, &[1.0, 0.0], 50.0).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-12 && (y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heat_diffusion_matches_taylor_series_on_path() {
        let g = path_graph::<f64>(3).unwrap().with_kind(GraphKind::Spatial);
        let l = laplacian(&g).unwrap().to_dense();
        let minus_l = l.scale(-1.0);
        // Σ_{k≤30} (−L)^k / k! applied to e_0
        let mut term = vec![1.0, 0.0, 0.0];
        let mut sum = term.clone();
        for k in 1..=30 {
            term = minus_l.matvec(&term).unwrap().iter().map(|v| v / k as f64).collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        let y = heat_diffusion(&g, &[1.0, 0.0, 0.0], 1.0).unwrap();
        for (a, b) in y.iter().zip(&sum) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn heat_diffusion_conserves_mass() {
        let (g, _) = sbm_generate::<f64>(15, 3, 0.7, 0.1, 4).unwrap();
        let kernel = HeatDiffusion::new(&g).unwrap();
        let x0: Vec<f64> = (0..15).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let l1: f64 = x0.iter().map(|v| v.abs()).sum();
        let m0: f64 = x0.iter().sum();
        for t in [0.0, 0.1, 1.0, 5.0, 30.0] {
            let m: f64 = kernel.apply(&x0, t).unwrap().iter().sum();
            assert!((m - m0).abs() <= 1e-9 * l1);
        }
    }

    #[test]
    fn heat_diffusion_rejects_directed_graphs() {
        let g = line_graph::<f64>(3).unwrap();
        assert!(matches!(
            heat_diffusion(&g, &[1.0, 0.0, 0.0], 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn permutation_cases() {
        let (g, _) = sbm_generate::<f64>(10, 2, 0.7, 0.2, 1).unwrap();
        assert_eq!(permute_graph(&g, &Permutation::identity(10)).unwrap(), g);

        let sw = Graph::new(
            CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            GraphKind::Spatial,
        )
        .unwrap();
        assert_eq!(permute_graph(&sw, &Permutation::swap(2, 0, 1).unwrap()).unwrap(), sw);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Permutation::random(10, &mut rng);
        let pg = permute_graph(&g, &p).unwrap();
        let mut d0 = g.degrees();
        let mut d1 = pg.degrees();
        d0.sort_by(f64::total_cmp);
        d1.sort_by(f64::total_cmp);
        assert_eq!(d0, d1);
        assert_eq!(permute_graph(&pg, &p.inverse()).unwrap(), g);

        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let px = permute_signal(&x, &p).unwrap();
        assert_eq!(permute_signal(&px, &p.inverse()).unwrap(), x);
        assert!(permute_signal(&x[..3], &p).is_err());
        assert!(permute_graph(&sw, &p).is_err());
    }

    #[test]
    fn permutation_matches_dense_conjugation() {
        let (g, _) = sbm_generate::<f64>(6, 2, 0.8, 0.3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = Permutation::random(6, &mut rng);
        // P has P[mapping[i], i] = 1 so that (Pᵀx)_i = x[mapping[i]].
        let pm = DenseMatrix::from_fn(6, 6, |r, c| if p.mapping()[c] == r { 1.0 } else { 0.0 });
        let expected = pm.transpose().matmul(&g.gso().to_dense()).unwrap().matmul(&pm).unwrap();
        assert_eq!(permute_graph(&g, &p).unwrap().gso().to_dense(), expected);
    }

    #[test]
    fn permutation_preserves_spectrum() {
        let (g, _) = sbm_generate::<f64>(12, 3, 0.7, 0.2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = Permutation::random(12, &mut rng);
        let a = sym_eig(g.gso()).unwrap().eigenvalues;
        let b = sym_eig(permute_graph(&g, &p).unwrap().gso()).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn invalid_permutation_is_rejected() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![2, 0, 1]).is_ok());
    }
}
