//! Graph-time convolutional filters.
//!
//! Two parameterizations are supported:
//!
//! * monolithic, `Σ_k h_k S◇^k` over a product shift operator, evaluated with `K`
//!   sparse mat-vecs;
//! * joint, `Σ_k Σ_l h_kl (S_T^l ⊗ S^k)`, evaluated without forming any `NT × NT`
//!   matrix. The spatial shift `I_T ⊗ S` acts on each time slice and the temporal
//!   shift `S_T ⊗ I_N` mixes whole slices, and the two commute.
//!
//! The joint evaluation first builds the table `z_k = (I_T ⊗ S)^k x` (`K̄` spatial
//! passes), folds it into `u_l = Σ_k h_kl z_k`, and finishes with a Horner sweep
//! `y = u_0 + S_T(u_1 + S_T(u_2 + …))` (`K̃` temporal passes). Total cost is
//! `O(K̄·T·nnz(S) + K̃·N·nnz(S_T) + K̄·K̃·NT)`.

use serde::{Deserialize, Serialize};

use crate::dense::{dot, DenseMatrix};
use crate::error::{param, Result};
use crate::graph::Graph;
use crate::product::{ProductGraph, ProductKind, ProductSignal, ProductSpec};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Largest monolithic order accepted by [`expand_parametric`].
pub const MAX_PARAMETRIC_ORDER: usize = 6;

/// Taps `h_0..h_K` of a polynomial in one shift operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MonoFilterCoeffs<T = f64> {
    h: Vec<T>,
}

impl<T: Scalar> MonoFilterCoeffs<T> {
    pub fn new(h: Vec<T>) -> Result<Self> {
        if h.is_empty() {
            return param("filter needs at least one tap");
        }
        if h.iter().any(|v| !v.is_finite()) {
            return param("filter taps must be finite");
        }
        Ok(Self { h })
    }

    pub fn order(&self) -> usize {
        self.h.len() - 1
    }

    pub fn taps(&self) -> &[T] {
        &self.h
    }
}

/// Coefficient grid `h_kl`: `k` is the spatial power (`0..=k_bar`), `l` the temporal
/// power (`0..=k_tilde`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "JointRepr<T>", into = "JointRepr<T>")]
pub struct JointFilterCoeffs<T = f64> {
    k_bar: usize,
    k_tilde: usize,
    h: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct JointRepr<T> {
    k_bar: usize,
    k_tilde: usize,
    h: Vec<Vec<T>>,
}

impl<T: Scalar> TryFrom<JointRepr<T>> for JointFilterCoeffs<T> {
    type Error = crate::error::Error;

    fn try_from(r: JointRepr<T>) -> Result<Self> {
        Self::from_rows(&r.h).and_then(|c| {
            if c.k_bar != r.k_bar || c.k_tilde != r.k_tilde {
                param("k_bar/k_tilde disagree with the coefficient grid")
            } else {
                Ok(c)
            }
        })
    }
}

impl<T: Scalar> From<JointFilterCoeffs<T>> for JointRepr<T> {
    fn from(c: JointFilterCoeffs<T>) -> Self {
        Self {
            k_bar: c.k_bar,
            k_tilde: c.k_tilde,
            h: c.rows(),
        }
    }
}

impl<T: Scalar> JointFilterCoeffs<T> {
    pub fn zeros(k_bar: usize, k_tilde: usize) -> Self {
        Self {
            k_bar,
            k_tilde,
            h: vec![T::zero(); (k_bar + 1) * (k_tilde + 1)],
        }
    }

    /// Grid given as `k_bar + 1` rows of `k_tilde + 1` temporal taps.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return param("joint filter grid must be a non-empty rectangle");
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return param("joint filter coefficients must be finite");
        }
        Ok(Self {
            k_bar: rows.len() - 1,
            k_tilde: cols - 1,
            h: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.h.chunks(self.k_tilde + 1).map(<[T]>::to_vec).collect()
    }

    #[inline]
    pub fn k_bar(&self) -> usize {
        self.k_bar
    }

    #[inline]
    pub fn k_tilde(&self) -> usize {
        self.k_tilde
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> T {
        self.h[k * (self.k_tilde + 1) + l]
    }

    #[inline]
    pub fn set(&mut self, k: usize, l: usize, v: T) {
        self.h[k * (self.k_tilde + 1) + l] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.h
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            k_bar: self.k_bar,
            k_tilde: self.k_tilde,
            h: self.h.iter().map(|&v| v * alpha).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&v| v == T::zero())
    }
}

/// Per-tap parameter matrices `H_kl` (`F_out × F_in`) of a joint filter bank.
///
/// Output feature `f` is `Σ_g H^{fg}(S_T, S) x^g` where the scalar filter `H^{fg}`
/// has coefficients `[H_kl]_{fg}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FilterBank<T = f64> {
    k_bar: usize,
    k_tilde: usize,
    f_out: usize,
    f_in: usize,
    taps: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> FilterBank<T> {
    pub fn zeros(k_bar: usize, k_tilde: usize, f_out: usize, f_in: usize) -> Self {
        Self {
            k_bar,
            k_tilde,
            f_out,
            f_in,
            taps: vec![DenseMatrix::zeros(f_out, f_in); (k_bar + 1) * (k_tilde + 1)],
        }
    }

    /// Taps listed with `k` major, `l` minor.
    pub fn from_taps(k_bar: usize, k_tilde: usize, taps: Vec<DenseMatrix<T>>) -> Result<Self> {
        if taps.len() != (k_bar + 1) * (k_tilde + 1) {
            return param("filter bank tap count does not match its orders");
        }
        let shape = taps[0].shape();
        if taps.iter().any(|m| m.shape() != shape) {
            return param("filter bank taps must share one shape");
        }
        Ok(Self {
            k_bar,
            k_tilde,
            f_out: shape.0,
            f_in: shape.1,
            taps,
        })
    }

    /// Single-feature bank wrapping a scalar joint filter.
    pub fn from_scalar(h: &JointFilterCoeffs<T>) -> Self {
        let taps = h
            .as_slice()
            .iter()
            .map(|&v| DenseMatrix::from_vec(1, 1, vec![v]).expect("1x1"))
            .collect();
        Self::from_taps(h.k_bar, h.k_tilde, taps).expect("consistent scalar bank")
    }

    pub fn k_bar(&self) -> usize {
        self.k_bar
    }

    pub fn k_tilde(&self) -> usize {
        self.k_tilde
    }

    pub fn f_out(&self) -> usize {
        self.f_out
    }

    pub fn f_in(&self) -> usize {
        self.f_in
    }

    #[inline]
    pub fn tap(&self, k: usize, l: usize) -> &DenseMatrix<T> {
        &self.taps[k * (self.k_tilde + 1) + l]
    }

    #[inline]
    pub fn tap_mut(&mut self, k: usize, l: usize) -> &mut DenseMatrix<T> {
        &mut self.taps[k * (self.k_tilde + 1) + l]
    }

    pub fn taps(&self) -> &[DenseMatrix<T>] {
        &self.taps
    }

    pub fn taps_mut(&mut self) -> &mut [DenseMatrix<T>] {
        &mut self.taps
    }

    /// Scalar filter `H^{fg}` between input feature `g` and output feature `f`.
    pub fn scalar_filter(&self, f: usize, g: usize) -> JointFilterCoeffs<T> {
        let mut h = JointFilterCoeffs::zeros(self.k_bar, self.k_tilde);
        for k in 0..=self.k_bar {
            for l in 0..=self.k_tilde {
                h.set(k, l, self.tap(k, l)[(f, g)]);
            }
        }
        h
    }
}

/// Number of full-signal shift passes performed by a filter evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShiftCounts {
    pub spatial: usize,
    pub temporal: usize,
}

/// Spatial and temporal shift operators prepared for repeated filtering,
/// including their transposes (needed for adjoint passes).
#[derive(Debug, Clone)]
pub struct ShiftOperators<T = f64> {
    spatial: CsrMatrix<T>,
    temporal: CsrMatrix<T>,
    spatial_t: CsrMatrix<T>,
    temporal_t: CsrMatrix<T>,
}

impl<T: Scalar> ShiftOperators<T> {
    pub fn new(spatial: &Graph<T>, temporal: &Graph<T>) -> Self {
        Self {
            spatial: spatial.gso().clone(),
            temporal: temporal.gso().clone(),
            spatial_t: spatial.gso().transpose(),
            temporal_t: temporal.gso().transpose(),
        }
    }

    pub fn n(&self) -> usize {
        self.spatial.n_rows()
    }

    pub fn t(&self) -> usize {
        self.temporal.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.n() * self.t()
    }

    fn spatial_op(&self, adjoint: bool) -> &CsrMatrix<T> {
        if adjoint {
            &self.spatial_t
        } else {
            &self.spatial
        }
    }

    fn temporal_op(&self, adjoint: bool) -> &CsrMatrix<T> {
        if adjoint {
            &self.temporal_t
        } else {
            &self.temporal
        }
    }

    /// `out = (I_T ⊗ S) x` (or with `Sᵀ` when `adjoint`).
    pub fn spatial_shift(&self, x: &[T], out: &mut [T], adjoint: bool) {
        let s = self.spatial_op(adjoint);
        let n = self.n();
        for (xs, ys) in x.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            s.mul_vec_into(xs, ys);
        }
    }

    /// `out = (S_T ⊗ I_N) x` (or with `S_Tᵀ` when `adjoint`).
    pub fn temporal_shift(&self, x: &[T], out: &mut [T], adjoint: bool) {
        let st = self.temporal_op(adjoint);
        let n = self.n();
        out.iter_mut().for_each(|v| *v = T::zero());
        for tau in 0..self.t() {
            let dst = &mut out[tau * n..(tau + 1) * n];
            for (sigma, w) in st.row(tau) {
                for (d, &s) in dst.iter_mut().zip(&x[sigma * n..(sigma + 1) * n]) {
                    *d += w * s;
                }
            }
        }
    }

    /// `[x, Sx, S²x, …, S^{k_bar}x]` slice-wise.
    pub fn spatial_table(
        &self,
        x: &[T],
        k_bar: usize,
        adjoint: bool,
        counts: &mut ShiftCounts,
    ) -> Vec<Vec<T>> {
        let mut table = Vec::with_capacity(k_bar + 1);
        table.push(x.to_vec());
        for k in 1..=k_bar {
            let mut next = vec![T::zero(); x.len()];
            self.spatial_shift(&table[k - 1], &mut next, adjoint);
            counts.spatial += 1;
            table.push(next);
        }
        table
    }

    /// `[g, S_T g, …, S_T^{k_tilde} g]`.
    pub fn temporal_table(
        &self,
        g: &[T],
        k_tilde: usize,
        adjoint: bool,
        counts: &mut ShiftCounts,
    ) -> Vec<Vec<T>> {
        let mut table = Vec::with_capacity(k_tilde + 1);
        table.push(g.to_vec());
        for l in 1..=k_tilde {
            let mut next = vec![T::zero(); g.len()];
            self.temporal_shift(&table[l - 1], &mut next, adjoint);
            counts.temporal += 1;
            table.push(next);
        }
        table
    }

    /// Horner sweep `u_0 + S_T(u_1 + S_T(u_2 + …))` over precombined terms.
    fn temporal_horner(&self, u: &[Vec<T>], adjoint: bool, counts: &mut ShiftCounts) -> Vec<T> {
        let mut y = u.last().expect("at least one term").clone();
        let mut scratch = vec![T::zero(); y.len()];
        for ul in u.iter().rev().skip(1) {
            self.temporal_shift(&y, &mut scratch, adjoint);
            counts.temporal += 1;
            for ((yv, &sv), &uv) in y.iter_mut().zip(&scratch).zip(ul) {
                *yv = sv + uv;
            }
        }
        y
    }

    /// Horner sweep over spatial powers.
    fn spatial_horner(&self, w: &[Vec<T>], adjoint: bool, counts: &mut ShiftCounts) -> Vec<T> {
        let mut y = w.last().expect("at least one term").clone();
        let mut scratch = vec![T::zero(); y.len()];
        for wk in w.iter().rev().skip(1) {
            self.spatial_shift(&y, &mut scratch, adjoint);
            counts.spatial += 1;
            for ((yv, &sv), &wv) in y.iter_mut().zip(&scratch).zip(wk) {
                *yv = sv + wv;
            }
        }
        y
    }

    /// Joint filter on a flat signal of length `N·T`.
    pub fn joint_filter(
        &self,
        h: &JointFilterCoeffs<T>,
        x: &[T],
        adjoint: bool,
        counts: &mut ShiftCounts,
    ) -> Vec<T> {
        let table = self.spatial_table(x, h.k_bar(), adjoint, counts);
        let u: Vec<Vec<T>> = (0..=h.k_tilde())
            .map(|l| {
                let mut ul = vec![T::zero(); x.len()];
                for (k, zk) in table.iter().enumerate() {
                    let c = h.get(k, l);
                    if c != T::zero() {
                        for (a, &b) in ul.iter_mut().zip(zk) {
                            *a += c * b;
                        }
                    }
                }
                ul
            })
            .collect();
        self.temporal_horner(&u, adjoint, counts)
    }

    /// Filter bank on feature columns (`F_in` vectors of length `N·T`).
    pub fn bank_forward(
        &self,
        bank: &FilterBank<T>,
        inputs: &[Vec<T>],
        counts: &mut ShiftCounts,
    ) -> Vec<Vec<T>> {
        let tables: Vec<_> = inputs
            .iter()
            .map(|x| self.spatial_table(x, bank.k_bar, false, counts))
            .collect();
        self.bank_forward_from_tables(bank, &tables, counts)
    }

    /// Same as [`ShiftOperators::bank_forward`] with spatial tables already built.
    pub fn bank_forward_from_tables(
        &self,
        bank: &FilterBank<T>,
        tables: &[Vec<Vec<T>>],
        counts: &mut ShiftCounts,
    ) -> Vec<Vec<T>> {
        let len = self.dim();
        (0..bank.f_out)
            .map(|f| {
                let u: Vec<Vec<T>> = (0..=bank.k_tilde)
                    .map(|l| {
                        let mut ul = vec![T::zero(); len];
                        for (g, table) in tables.iter().enumerate() {
                            for (k, zk) in table.iter().enumerate() {
                                let c = bank.tap(k, l)[(f, g)];
                                if c != T::zero() {
                                    for (a, &b) in ul.iter_mut().zip(zk) {
                                        *a += c * b;
                                    }
                                }
                            }
                        }
                        ul
                    })
                    .collect();
                self.temporal_horner(&u, false, counts)
            })
            .collect()
    }

    /// Adjoint of [`ShiftOperators::bank_forward`].
    ///
    /// Given the spatial tables of the forward inputs and `∂L/∂Y`, returns `∂L/∂H_kl`
    /// for every tap and `∂L/∂X` per input feature.
    pub fn bank_backward(
        &self,
        bank: &FilterBank<T>,
        tables: &[Vec<Vec<T>>],
        upstream: &[Vec<T>],
        counts: &mut ShiftCounts,
    ) -> (FilterBank<T>, Vec<Vec<T>>) {
        let len = self.dim();
        let q: Vec<_> = upstream
            .iter()
            .map(|g| self.temporal_table(g, bank.k_tilde, true, counts))
            .collect();
        let mut grad = FilterBank::zeros(bank.k_bar, bank.k_tilde, bank.f_out, bank.f_in);
        for k in 0..=bank.k_bar {
            for l in 0..=bank.k_tilde {
                let tap = grad.tap_mut(k, l);
                for (f, qf) in q.iter().enumerate() {
                    for (g, table) in tables.iter().enumerate() {
                        tap[(f, g)] = dot(&table[k], &qf[l]);
                    }
                }
            }
        }
        let dx = (0..bank.f_in)
            .map(|g| {
                let w: Vec<Vec<T>> = (0..=bank.k_bar)
                    .map(|k| {
                        let mut wk = vec![T::zero(); len];
                        for l in 0..=bank.k_tilde {
                            for (f, qf) in q.iter().enumerate() {
                                let c = bank.tap(k, l)[(f, g)];
                                if c != T::zero() {
                                    for (a, &b) in wk.iter_mut().zip(&qf[l]) {
                                        *a += c * b;
                                    }
                                }
                            }
                        }
                        wk
                    })
                    .collect();
                self.spatial_horner(&w, true, counts)
            })
            .collect();
        (grad, dx)
    }
}

/// `y = Σ_k h_k S◇^k x`, using exactly `K` sparse mat-vecs.
pub fn apply_mono_filter<T: Scalar>(
    pg: &ProductGraph<T>,
    h: &MonoFilterCoeffs<T>,
    x: &ProductSignal<T>,
) -> Result<ProductSignal<T>> {
    if x.n_spatial() != pg.n_spatial() || x.n_temporal() != pg.n_temporal() {
        return param(format!(
            "signal is {}x{}, product graph is {}x{}",
            x.n_spatial(),
            x.n_temporal(),
            pg.n_spatial(),
            pg.n_temporal()
        ));
    }
    let taps = h.taps();
    let xs = x.values();
    let mut y: Vec<T> = xs.iter().map(|&v| v * taps[taps.len() - 1]).collect();
    let mut scratch = vec![T::zero(); y.len()];
    for &hk in taps.iter().rev().skip(1) {
        pg.gso().mul_vec_into(&y, &mut scratch);
        for ((yv, &sv), &xv) in y.iter_mut().zip(&scratch).zip(xs) {
            *yv = sv + hk * xv;
        }
    }
    ProductSignal::new(y, pg.n_spatial(), pg.n_temporal())
}

fn check_signal<T: Scalar>(
    spatial: &Graph<T>,
    temporal: &Graph<T>,
    x: &ProductSignal<T>,
) -> Result<()> {
    if x.n_spatial() != spatial.n() || x.n_temporal() != temporal.n() {
        return param(format!(
            "signal is {}x{}, graphs are {}x{}",
            x.n_spatial(),
            x.n_temporal(),
            spatial.n(),
            temporal.n()
        ));
    }
    Ok(())
}

/// `y = Σ_k Σ_l h_kl (S_T^l ⊗ S^k) x` through the shift recursion.
pub fn apply_joint_filter<T: Scalar>(
    spatial: &Graph<T>,
    temporal: &Graph<T>,
    h: &JointFilterCoeffs<T>,
    x: &ProductSignal<T>,
) -> Result<ProductSignal<T>> {
    apply_joint_filter_counted(spatial, temporal, h, x).map(|(y, _)| y)
}

/// [`apply_joint_filter`] that also reports how many shift passes it made.
pub fn apply_joint_filter_counted<T: Scalar>(
    spatial: &Graph<T>,
    temporal: &Graph<T>,
    h: &JointFilterCoeffs<T>,
    x: &ProductSignal<T>,
) -> Result<(ProductSignal<T>, ShiftCounts)> {
    check_signal(spatial, temporal, x)?;
    let ops = ShiftOperators::new(spatial, temporal);
    let mut counts = ShiftCounts::default();
    let y = ops.joint_filter(h, x.values(), false, &mut counts);
    Ok((ProductSignal::new(y, spatial.n(), temporal.n())?, counts))
}

/// Powers `P^0 … P^K` of `P(λ_T, λ) = Σ_ij s_ij λ_T^i λ^j`, each on a
/// `(K+1) × (K+1)` grid indexed (spatial power, temporal power).
///
/// Because `(S_T^a ⊗ S^b)(S_T^c ⊗ S^d) = S_T^{a+c} ⊗ S^{b+d}`, these grids are
/// exactly the joint-filter coefficients of `S◇^k` for the parametric product.
pub fn parametric_powers<T: Scalar>(s: [[T; 2]; 2], order: usize) -> Vec<JointFilterCoeffs<T>> {
    let mut powers = Vec::with_capacity(order + 1);
    let mut cur = JointFilterCoeffs::zeros(order, order);
    cur.set(0, 0, T::one());
    powers.push(cur.clone());
    for _ in 0..order {
        let mut next = JointFilterCoeffs::zeros(order, order);
        for k in 0..=order {
            for l in 0..=order {
                let c = cur.get(k, l);
                if c == T::zero() {
                    continue;
                }
                for (i, row) in s.iter().enumerate() {
                    for (j, &sij) in row.iter().enumerate() {
                        // i: temporal power, j: spatial power
                        if sij != T::zero() && k + j <= order && l + i <= order {
                            let v = next.get(k + j, l + i) + c * sij;
                            next.set(k + j, l + i, v);
                        }
                    }
                }
            }
        }
        powers.push(next.clone());
        cur = next;
    }
    powers
}

/// Rewrites `Σ_k h_k S◇^k` over a parametric product as joint coefficients on a
/// `(K+1) × (K+1)` grid.
pub fn expand_parametric<T: Scalar>(
    spec: &ProductSpec,
    h: &MonoFilterCoeffs<T>,
) -> Result<JointFilterCoeffs<T>> {
    if spec.kind() != ProductKind::Parametric {
        return param("expand_parametric needs a parametric product spec");
    }
    let order = h.order();
    if order > MAX_PARAMETRIC_ORDER {
        return param(format!(
            "parametric expansion is capped at order {MAX_PARAMETRIC_ORDER}, got {order}"
        ));
    }
    let sc = spec.scalars();
    let s = [
        [T::of(sc[0][0]), T::of(sc[0][1])],
        [T::of(sc[1][0]), T::of(sc[1][1])],
    ];
    let powers = parametric_powers(s, order);
    let mut out = JointFilterCoeffs::zeros(order, order);
    for (hk, pk) in h.taps().iter().zip(&powers) {
        for (o, &p) in out.h.iter_mut().zip(pk.as_slice()) {
            *o += *hk * p;
        }
    }
    Ok(out)
}

/// `Y = Σ_{k,l} Shift_{kl}(X) H_klᵀ` for an `NT × F_in` input.
pub fn apply_filter_bank<T: Scalar>(
    spatial: &Graph<T>,
    temporal: &Graph<T>,
    bank: &FilterBank<T>,
    x_in: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let nt = spatial.n() * temporal.n();
    if x_in.rows() != nt || x_in.cols() != bank.f_in() {
        return param(format!(
            "bank input is {:?}, expected {}x{}",
            x_in.shape(),
            nt,
            bank.f_in()
        ));
    }
    let ops = ShiftOperators::new(spatial, temporal);
    let cols: Vec<Vec<T>> = (0..x_in.cols()).map(|g| x_in.col(g)).collect();
    let out = ops.bank_forward(bank, &cols, &mut ShiftCounts::default());
    let mut y = DenseMatrix::zeros(nt, bank.f_out());
    for (f, col) in out.iter().enumerate() {
        y.set_col(f, col);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{line_graph, sbm_generate, GraphKind};
    use crate::product::build_product;

    #[test]
    fn identity_filters() {
        let (s, _) = sbm_generate::<f64>(5, 2, 0.8, 0.2, 1).unwrap();
        let st = line_graph(3).unwrap();
        let x = ProductSignal::new((0..15).map(|v| v as f64).collect(), 5, 3).unwrap();
        let mut h = JointFilterCoeffs::zeros(0, 0);
        h.set(0, 0, 1.0);
        assert_eq!(apply_joint_filter(&s, &st, &h, &x).unwrap(), x);

        let pg = build_product(&s, &st, ProductSpec::STRONG).unwrap();
        let mono = MonoFilterCoeffs::new(vec![1.0]).unwrap();
        assert_eq!(apply_mono_filter(&pg, &mono, &x).unwrap(), x);
    }

    #[test]
    fn pure_spatial_shift_acts_per_column() {
        let (s, _) = sbm_generate::<f64>(6, 2, 0.7, 0.3, 4).unwrap();
        let st = line_graph(4).unwrap();
        let x = ProductSignal::new((0..24).map(|v| (v as f64).sin()).collect(), 6, 4).unwrap();
        let mut h = JointFilterCoeffs::zeros(1, 0);
        h.set(1, 0, 1.0);
        let y = apply_joint_filter(&s, &st, &h, &x).unwrap().to_matrix();
        let xm = x.to_matrix();
        for t in 0..4 {
            let expected = s.gso().mul_vec(&xm.col(t)).unwrap();
            assert_eq!(y.col(t), expected);
        }
    }

    #[test]
    fn mono_shift_matches_dense_product() {
        let k2 = Graph::new(
            CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            GraphKind::Spatial,
        )
        .unwrap();
        let pg = build_product(&k2, &line_graph(2).unwrap(), ProductSpec::CARTESIAN).unwrap();
        let e0 = ProductSignal::new(vec![1.0, 0.0, 0.0, 0.0], 2, 2).unwrap();
        let y = apply_mono_filter(&pg, &MonoFilterCoeffs::new(vec![0.0, 1.0]).unwrap(), &e0)
            .unwrap();
        let dense = pg.gso().to_dense();
        assert_eq!(y.values(), dense.col(0).as_slice());
    }

    #[test]
    fn shift_counts_match_orders() {
        let (s, _) = sbm_generate::<f64>(7, 2, 0.7, 0.3, 2).unwrap();
        let st = line_graph(5).unwrap();
        let x = ProductSignal::new(vec![1.0; 35], 7, 5).unwrap();
        for (kb, kt) in [(0, 0), (3, 0), (0, 2), (3, 2), (1, 4)] {
            let h = JointFilterCoeffs::from_rows(&vec![vec![0.5; kt + 1]; kb + 1]).unwrap();
            let (_, counts) = apply_joint_filter_counted(&s, &st, &h, &x).unwrap();
            assert_eq!(counts, ShiftCounts { spatial: kb, temporal: kt });
        }
    }

    #[test]
    fn expansion_small_cases() {
        let spec = ProductSpec::parametric([[0.3, -1.2], [0.7, 2.0]]).unwrap();
        let e = expand_parametric(&spec, &MonoFilterCoeffs::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!((e.k_bar(), e.k_tilde()), (0, 0));
        assert_eq!(e.get(0, 0), 1.0);

        let e = expand_parametric(&spec, &MonoFilterCoeffs::new(vec![0.0, 1.0]).unwrap()).unwrap();
        let sc = spec.scalars();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(e.get(j, i), sc[i][j]);
            }
        }

        let kron = ProductSpec::KRONECKER.as_parametric();
        let e = expand_parametric(&kron, &MonoFilterCoeffs::new(vec![0.0, 0.0, 1.0]).unwrap())
            .unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let expected = if (k, l) == (2, 2) { 1.0 } else { 0.0 };
                assert_eq!(e.get(k, l), expected);
            }
        }
    }

    #[test]
    fn expansion_rejects_fixed_specs_and_high_orders() {
        let h = MonoFilterCoeffs::new(vec![1.0, 1.0]).unwrap();
        assert!(expand_parametric(&ProductSpec::CARTESIAN, &h).is_err());
        let big = MonoFilterCoeffs::new(vec![1.0; MAX_PARAMETRIC_ORDER + 2]).unwrap();
        assert!(expand_parametric(&ProductSpec::CARTESIAN.as_parametric(), &big).is_err());
    }

    #[test]
    fn joint_json_format() {
        let h = JointFilterCoeffs::from_rows(&[vec![1.0, 0.5], vec![-2.0, 0.0], vec![0.25, 3.0]])
            .unwrap();
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(
            text,
            r#"{"k_bar":2,"k_tilde":1,"h":[[1.0,0.5],[-2.0,0.0],[0.25,3.0]]}"#
        );
        assert_eq!(serde_json::from_str::<JointFilterCoeffs>(&text).unwrap(), h);
        let bad = r#"{"k_bar":1,"k_tilde":1,"h":[[1.0,0.5],[-2.0,0.0],[0.25,3.0]]}"#;
        assert!(serde_json::from_str::<JointFilterCoeffs>(bad).is_err());
    }

    #[test]
    fn bank_identity_tap() {
        let (s, _) = sbm_generate::<f64>(4, 2, 0.8, 0.2, 6).unwrap();
        let st = line_graph(3).unwrap();
        let mut bank = FilterBank::zeros(2, 1, 3, 3);
        *bank.tap_mut(0, 0) = DenseMatrix::identity(3);
        let x = DenseMatrix::from_fn(12, 3, |i, j| (i as f64 - 2.0 * j as f64).cos());
        assert_eq!(apply_filter_bank(&s, &st, &bank, &x).unwrap(), x);
        assert!(apply_filter_bank(&s, &st, &bank, &DenseMatrix::zeros(12, 2)).is_err());
    }

    #[test]
    fn f32_filter_tracks_f64() {
        let (s, _) = sbm_generate::<f64>(6, 2, 0.7, 0.3, 8).unwrap();
        let st = line_graph(3).unwrap();
        let h = JointFilterCoeffs::from_rows(&[vec![0.5, -0.25], vec![0.1, 0.2], vec![0.03, -0.01]])
            .unwrap();
        let x = ProductSignal::new((0..18).map(|v| (v as f64 * 0.3).cos()).collect(), 6, 3)
            .unwrap();
        let y64 = apply_joint_filter(&s, &st, &h, &x).unwrap();
        let h32 = JointFilterCoeffs::<f32>::from_rows(
            &h.rows().iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect::<Vec<_>>(),
        )
        .unwrap();
        let x32 = ProductSignal::new(x.values().iter().map(|&v| v as f32).collect(), 6, 3).unwrap();
        let y32 = apply_joint_filter(&s.cast::<f32>(), &st.cast::<f32>(), &h32, &x32).unwrap();
        for (a, b) in y64.values().iter().zip(y32.values()) {
            assert!((a - f64::from(*b)).abs() < 1e-4);
        }
    }
}
