//! Joint graph-time spectral analysis.
//!
//! All routines here work in real arithmetic: the spatial shift operator must be
//! symmetric, and spectral statements about the temporal graph only hold when it is
//! diagonalizable with a real spectrum (undirected path, 2-cycle). The directed line
//! graph is nilpotent and has no eigenbasis, so it never enters [`gtft`].

use crate::dense::DenseMatrix;
use crate::error::{param, Error, Result};
use crate::filters::JointFilterCoeffs;
use crate::graph::Graph;
use crate::product::ProductSignal;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix.
///
/// Eigenvalues are sorted in descending order and column `i` of `eigenvectors`
/// pairs with `eigenvalues[i]`. Each eigenvector has its entry of largest magnitude
/// positive (lowest index wins a tie).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T = f64> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DenseMatrix<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let v = &self.eigenvectors;
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)])
                .sum()
        })
    }

    pub fn min_eigenvalue(&self) -> T {
        *self.eigenvalues.last().expect("non-empty decomposition")
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }

    /// Largest eigenvalue magnitude, i.e. the operator 2-norm of the matrix.
    pub fn spectral_norm(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, &l| m.max(l.abs()))
    }
}

/// Full eigendecomposition of a symmetric sparse matrix.
pub fn sym_eig<T: Scalar>(m: &CsrMatrix<T>) -> Result<EigenDecomposition<T>> {
    if !m.is_square() {
        return Err(Error::Contract("sym_eig needs a square matrix".into()));
    }
    let tol = T::of(1e-12).max(T::epsilon() * T::of(16.0)) * T::one().max(m.max_abs());
    if m.asymmetry() > tol {
        return Err(Error::Contract(format!(
            "sym_eig needs a symmetric matrix (asymmetry {})",
            m.asymmetry()
        )));
    }
    jacobi(m.to_dense())
}

/// Dense counterpart of [`sym_eig`].
pub fn sym_eig_dense<T: Scalar>(m: &DenseMatrix<T>) -> Result<EigenDecomposition<T>> {
    let (r, c) = m.shape();
    if r != c {
        return Err(Error::Contract("sym_eig needs a square matrix".into()));
    }
    let tol = T::of(1e-12).max(T::epsilon() * T::of(16.0)) * T::one().max(m.max_abs());
    if m.max_abs_diff(&m.transpose()) > tol {
        return Err(Error::Contract("sym_eig needs a symmetric matrix".into()));
    }
    jacobi(m.clone())
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
fn jacobi<T: Scalar>(mut a: DenseMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = a.rows();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm();
    let off_tol = T::epsilon() * scale;

    let off = |a: &DenseMatrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = scale == T::zero() || off(&a) <= off_tol;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // A <- Jᵀ A J on rows/cols p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= off_tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.col(src);
        normalize_sign(&mut col);
        eigenvectors.set_col(dst, &col);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Flips `v` so that its largest-magnitude entry is positive.
///
/// Entries within `sqrt(eps)` (relative) of the maximum count as ties and the lowest
/// index wins, so rounding noise cannot flip the choice.
pub fn normalize_sign<T: Scalar>(v: &mut [T]) {
    let max = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if max == T::zero() {
        return;
    }
    let tie = max * T::epsilon().sqrt();
    let lead = v
        .iter()
        .position(|&x| max - x.abs() <= tie)
        .expect("max is attained");
    if v[lead] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Operator 2-norm of a general dense matrix, via the largest eigenvalue of `AᵀA`.
pub fn operator_norm<T: Scalar>(a: &DenseMatrix<T>) -> Result<T> {
    let ata = a.transpose().matmul(a)?;
    // Symmetrize away rounding before the symmetric solver sees it.
    let sym = ata.add(&ata.transpose())?.scale(T::of(0.5));
    let eig = jacobi(sym)?;
    Ok(eig.max_eigenvalue().max(T::zero()).sqrt())
}

fn check_dims<T: Scalar>(
    n: usize,
    t: usize,
    spatial: &EigenDecomposition<T>,
    temporal: &EigenDecomposition<T>,
) -> Result<()> {
    if spatial.dim() != n || temporal.dim() != t {
        return param(format!(
            "GTFT dimension mismatch: signal is {n}x{t}, bases are {}x{}",
            spatial.dim(),
            temporal.dim()
        ));
    }
    Ok(())
}

/// Graph-time Fourier transform `(V_T ⊗ V)ᵀ x`.
///
/// With `X` the `N × T` matrix behind `x`, this is `Vᵀ X V_T`, so the Kronecker basis
/// is never formed. Output entry `t·N + i` is the coefficient of `v_{T,t} ⊗ v_i`.
pub fn gtft<T: Scalar>(
    x: &ProductSignal<T>,
    spatial: &EigenDecomposition<T>,
    temporal: &EigenDecomposition<T>,
) -> Result<ProductSignal<T>> {
    let (n, t) = (x.n_spatial(), x.n_temporal());
    check_dims(n, t, spatial, temporal)?;
    let xm = x.to_matrix();
    let out = spatial
        .eigenvectors
        .transpose()
        .matmul(&xm)?
        .matmul(&temporal.eigenvectors)?;
    ProductSignal::from_matrix(&out)
}

/// Inverse of [`gtft`]: `V X̃ V_Tᵀ`.
pub fn inverse_gtft<T: Scalar>(
    coeffs: &ProductSignal<T>,
    spatial: &EigenDecomposition<T>,
    temporal: &EigenDecomposition<T>,
) -> Result<ProductSignal<T>> {
    let (n, t) = (coeffs.n_spatial(), coeffs.n_temporal());
    check_dims(n, t, spatial, temporal)?;
    let out = spatial
        .eigenvectors
        .matmul(&coeffs.to_matrix())?
        .matmul(&temporal.eigenvectors.transpose())?;
    ProductSignal::from_matrix(&out)
}

/// `h(λ_T, λ) = Σ_k Σ_l h_kl λ_T^l λ^k` (Horner in both variables).
pub fn frequency_response<T: Scalar>(h: &JointFilterCoeffs<T>, lambda_t: T, lambda: T) -> T {
    let mut acc = T::zero();
    for k in (0..=h.k_bar()).rev() {
        let mut row = T::zero();
        for l in (0..=h.k_tilde()).rev() {
            row = row * lambda_t + h.get(k, l);
        }
        acc = acc * lambda + row;
    }
    acc
}

/// `∂h/∂λ` at `(λ_T, λ)`.
pub fn response_spatial_derivative<T: Scalar>(
    h: &JointFilterCoeffs<T>,
    lambda_t: T,
    lambda: T,
) -> T {
    let mut acc = T::zero();
    for k in (1..=h.k_bar()).rev() {
        let mut row = T::zero();
        for l in (0..=h.k_tilde()).rev() {
            row = row * lambda_t + h.get(k, l);
        }
        acc = acc * lambda + T::of_usize(k) * row;
    }
    acc
}

/// Uniform grid over a closed interval with `intervals + 1` points, endpoints included.
///
/// A grid with `m·n` intervals contains every point of the grid with `n` intervals,
/// which makes maxima over the grid monotone under refinement by integer factors.
pub fn uniform_grid<T: Scalar>(range: (T, T), intervals: usize) -> Vec<T> {
    let (lo, hi) = range;
    let step = (hi - lo) / T::of_usize(intervals);
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                hi
            } else {
                lo + step * T::of_usize(i)
            }
        })
        .collect()
}

fn check_grid<T: Scalar>(lambda_t_set: &[T], intervals: usize) -> Result<()> {
    if lambda_t_set.is_empty() {
        return param("empty temporal frequency set");
    }
    if intervals < 2 {
        return param("frequency grid needs at least 2 intervals");
    }
    Ok(())
}

/// Grid estimate of the integral Lipschitz constant `max |λ ∂h/∂λ|`.
///
/// Evaluated on `intervals + 1` uniformly spaced spatial frequencies over
/// `lambda_range` times every temporal frequency in `lambda_t_set`. This is a lower
/// bound on the true supremum over the interval and converges to it as the grid is
/// refined.
pub fn lipschitz_constant<T: Scalar>(
    h: &JointFilterCoeffs<T>,
    lambda_range: (T, T),
    lambda_t_set: &[T],
    intervals: usize,
) -> Result<T> {
    check_grid(lambda_t_set, intervals)?;
    let grid = uniform_grid(lambda_range, intervals);
    let mut best = T::zero();
    for &lt in lambda_t_set {
        for &l in &grid {
            best = best.max((l * response_spatial_derivative(h, lt, l)).abs());
        }
    }
    Ok(best)
}

/// Largest `|h(λ_T, λ)|` on the evaluation grid.
pub fn max_response<T: Scalar>(
    h: &JointFilterCoeffs<T>,
    lambda_range: (T, T),
    lambda_t_set: &[T],
    intervals: usize,
) -> Result<T> {
    check_grid(lambda_t_set, intervals)?;
    let grid = uniform_grid(lambda_range, intervals);
    let mut best = T::zero();
    for &lt in lambda_t_set {
        for &l in &grid {
            best = best.max(frequency_response(h, lt, l).abs());
        }
    }
    Ok(best)
}

/// Rescales `h` so that its largest grid response magnitude is one.
pub fn normalize_response<T: Scalar>(
    h: &JointFilterCoeffs<T>,
    lambda_range: (T, T),
    lambda_t_set: &[T],
    intervals: usize,
) -> Result<JointFilterCoeffs<T>> {
    let peak = max_response(h, lambda_range, lambda_t_set, intervals)?;
    if peak == T::zero() || !peak.is_finite() {
        return Err(Error::Degenerate(
            "filter response is identically zero on the grid".into(),
        ));
    }
    Ok(h.scaled(T::one() / peak))
}

/// Temporal frequencies used when evaluating responses over a temporal graph.
///
/// Symmetric temporal shifts contribute their eigenvalues. For a non-symmetric shift
/// (directed line or cycle) real eigenvalues do not describe its action, so the
/// interval `[-r, r]` with `r` the largest absolute row sum (an upper bound on the
/// spectral radius) is sampled at `fallback_intervals + 1` points instead.
pub fn temporal_frequency_set<T: Scalar>(
    temporal: &Graph<T>,
    fallback_intervals: usize,
) -> Result<Vec<T>> {
    if temporal.is_symmetric() {
        return Ok(sym_eig(temporal.gso())?.eigenvalues);
    }
    let gso = temporal.gso();
    let r = (0..gso.n_rows())
        .map(|i| gso.row(i).map(|(_, v)| v.abs()).sum::<T>())
        .fold(T::zero(), |m, s| m.max(s));
    if r == T::zero() {
        return Ok(vec![T::zero()]);
    }
    Ok(uniform_grid((-r, r), fallback_intervals.max(1)))
}

/// `(λ_min, λ_max)` of a symmetric spatial shift.
pub fn spatial_frequency_range<T: Scalar>(spatial: &Graph<T>) -> Result<(T, T)> {
    let eig = sym_eig(spatial.gso())?;
    Ok((eig.min_eigenvalue(), eig.max_eigenvalue()))
}

/// One point of a sampled response surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseSample<T = f64> {
    pub lambda_t: T,
    pub lambda: T,
    pub response: T,
}

/// Samples `h` on `lambda_t_set × grid(lambda_range)`.
pub fn response_grid<T: Scalar>(
    h: &JointFilterCoeffs<T>,
    lambda_range: (T, T),
    lambda_t_set: &[T],
    intervals: usize,
) -> Result<Vec<ResponseSample<T>>> {
    check_grid(lambda_t_set, intervals)?;
    let grid = uniform_grid(lambda_range, intervals);
    Ok(lambda_t_set
        .iter()
        .flat_map(|&lt| {
            grid.iter().map(move |&l| ResponseSample {
                lambda_t: lt,
                lambda: l,
                response: frequency_response(h, lt, l),
            })
        })
        .collect())
}
