//! Product graphs over space and time, and the graph-time signal layout.
//!
//! A product graph lives on `V_T × V`; node `(t, i)` has flat index `t·N + i`, which
//! is the column vectorization of the `N × T` matrix `X = [x_1 … x_T]`.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{param, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductKind {
    Kronecker,
    Cartesian,
    Strong,
    Parametric,
}

/// Which product couples space and time.
///
/// `s[i][j]` multiplies `S_T^i ⊗ S^j`: the first index is the temporal power and the
/// second the spatial power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProductSpecRepr", into = "ProductSpecRepr")]
pub struct ProductSpec {
    kind: ProductKind,
    s: Option<[[f64; 2]; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ProductSpecRepr {
    kind: ProductKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<[[f64; 2]; 2]>,
}

impl TryFrom<ProductSpecRepr> for ProductSpec {
    type Error = crate::error::Error;

    fn try_from(r: ProductSpecRepr) -> Result<Self> {
        match (r.kind, r.s) {
            (ProductKind::Parametric, Some(s)) => Self::parametric(s),
            (ProductKind::Parametric, None) => param("parametric product needs \"s\""),
            (kind, _) => Ok(Self { kind, s: None }),
        }
    }
}

impl From<ProductSpec> for ProductSpecRepr {
    fn from(p: ProductSpec) -> Self {
        Self {
            kind: p.kind,
            s: p.s,
        }
    }
}

impl ProductSpec {
    pub const KRONECKER: Self = Self {
        kind: ProductKind::Kronecker,
        s: None,
    };
    pub const CARTESIAN: Self = Self {
        kind: ProductKind::Cartesian,
        s: None,
    };
    pub const STRONG: Self = Self {
        kind: ProductKind::Strong,
        s: None,
    };

    pub fn parametric(s: [[f64; 2]; 2]) -> Result<Self> {
        if s.iter().flatten().any(|v| !v.is_finite()) {
            return param("parametric product scalars must be finite");
        }
        Ok(Self {
            kind: ProductKind::Parametric,
            s: Some(s),
        })
    }

    pub fn fixed(kind: ProductKind) -> Result<Self> {
        match kind {
            ProductKind::Parametric => param("parametric products need explicit scalars"),
            kind => Ok(Self { kind, s: None }),
        }
    }

    pub fn kind(&self) -> ProductKind {
        self.kind
    }

    /// Scalars `s_ij`; fixed products report their equivalent pattern.
    pub fn scalars(&self) -> [[f64; 2]; 2] {
        match self.kind {
            ProductKind::Kronecker => [[0.0, 0.0], [0.0, 1.0]],
            ProductKind::Cartesian => [[0.0, 1.0], [1.0, 0.0]],
            ProductKind::Strong => [[0.0, 1.0], [1.0, 1.0]],
            ProductKind::Parametric => self.s.expect("parametric spec carries scalars"),
        }
    }

    /// The same product written in parametric form.
    pub fn as_parametric(&self) -> Self {
        Self {
            kind: ProductKind::Parametric,
            s: Some(self.scalars()),
        }
    }
}

/// Shift operator of a product graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGraph<T = f64> {
    gso: CsrMatrix<T>,
    n_spatial: usize,
    n_temporal: usize,
    spec: ProductSpec,
}

impl<T: Scalar> ProductGraph<T> {
    pub fn gso(&self) -> &CsrMatrix<T> {
        &self.gso
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_temporal(&self) -> usize {
        self.n_temporal
    }

    pub fn spec(&self) -> ProductSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.n_spatial * self.n_temporal
    }
}

/// Builds the product shift operator in sparse form.
///
/// * Kronecker: `S_T ⊗ S`
/// * Cartesian: `S_T ⊗ I_N + I_T ⊗ S`
/// * Strong: Kronecker + Cartesian
/// * Parametric: `Σ_{i,j∈{0,1}} s_ij (S_T^i ⊗ S^j)` with `S^0 = I`
pub fn build_product<T: Scalar>(
    spatial: &Graph<T>,
    temporal: &Graph<T>,
    spec: ProductSpec,
) -> Result<ProductGraph<T>> {
    let s = spatial.gso();
    let st = temporal.gso();
    if !s.is_square() || !st.is_square() {
        return param("product factors must be square");
    }
    let (n, t) = (s.n_rows(), st.n_rows());
    let i_n = CsrMatrix::identity(n);
    let i_t = CsrMatrix::identity(t);
    let one = T::one();
    let gso = match spec.kind {
        ProductKind::Kronecker => st.kron(s),
        ProductKind::Cartesian => {
            CsrMatrix::linear_combination(&[(one, &st.kron(&i_n)), (one, &i_t.kron(s))])?
        }
        ProductKind::Strong => CsrMatrix::linear_combination(&[
            (one, &st.kron(s)),
            (one, &st.kron(&i_n)),
            (one, &i_t.kron(s)),
        ])?,
        ProductKind::Parametric => {
            let sc = spec.scalars();
            let factor_t = [&i_t, st];
            let factor_s = [&i_n, s];
            let mut blocks = Vec::new();
            for (i, row) in sc.iter().enumerate() {
                for (j, &sij) in row.iter().enumerate() {
                    if sij != 0.0 {
                        blocks.push((T::of(sij), factor_t[i].kron(factor_s[j])));
                    }
                }
            }
            if blocks.is_empty() {
                CsrMatrix::zeros(n * t, n * t)
            } else {
                let terms: Vec<_> = blocks.iter().map(|(a, m)| (*a, m)).collect();
                CsrMatrix::linear_combination(&terms)?
            }
        }
    };
    Ok(ProductGraph {
        gso,
        n_spatial: n,
        n_temporal: t,
        spec,
    })
}

/// A graph-time signal: `vec(X)` for an `N × T` matrix, node index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSignal<T = f64> {
    values: Vec<T>,
    n_spatial: usize,
    n_temporal: usize,
}

impl<T: Scalar> ProductSignal<T> {
    pub fn new(values: Vec<T>, n_spatial: usize, n_temporal: usize) -> Result<Self> {
        if values.len() != n_spatial * n_temporal {
            return param(format!(
                "product signal of length {} does not match N·T = {}·{}",
                values.len(),
                n_spatial,
                n_temporal
            ));
        }
        Ok(Self {
            values,
            n_spatial,
            n_temporal,
        })
    }

    pub fn zeros(n_spatial: usize, n_temporal: usize) -> Self {
        Self {
            values: vec![T::zero(); n_spatial * n_temporal],
            n_spatial,
            n_temporal,
        }
    }

    /// `vec(X)`: entry `(i, t)` lands at `t·N + i`.
    pub fn from_matrix(x: &DenseMatrix<T>) -> Result<Self> {
        let (n, t) = x.shape();
        let mut values = Vec::with_capacity(n * t);
        for tau in 0..t {
            values.extend((0..n).map(|i| x[(i, tau)]));
        }
        Self::new(values, n, t)
    }

    /// Inverse of [`ProductSignal::from_matrix`].
    pub fn to_matrix(&self) -> DenseMatrix<T> {
        let n = self.n_spatial;
        DenseMatrix::from_fn(n, self.n_temporal, |i, t| self.values[t * n + i])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_temporal(&self) -> usize {
        self.n_temporal
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples of time step `t` (a contiguous slice of length `N`).
    pub fn slice(&self, t: usize) -> &[T] {
        &self.values[t * self.n_spatial..(t + 1) * self.n_spatial]
    }
}

/// `vec(X)`.
pub fn vectorize<T: Scalar>(x: &DenseMatrix<T>) -> Result<ProductSignal<T>> {
    ProductSignal::from_matrix(x)
}

/// Reshapes a graph-time signal back into its `N × T` matrix.
pub fn devectorize<T: Scalar>(ps: &ProductSignal<T>) -> DenseMatrix<T> {
    ps.to_matrix()
}
