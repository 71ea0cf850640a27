//! Wahba cost, weight construction and the K-matrix potential.
//!
//! Direction sets are stored column-wise as `3 x k` matrices. A pair of
//! directions is augmented with their (normalized) cross product on
//! ingestion, so everything downstream sees `k >= 3`.
//!
//! Weights are built so that `K = E W Eᵀ` has a prescribed set of distinct
//! eigenvalues: with `E = U_E Σ_E V_Eᵀ`, `W = V_E W₀ V_Eᵀ` where the first
//! three diagonal entries of `W₀` are `dᵢ / σᵢ²`. The potential
//! `⟨I - Q, K⟩` then has exactly four critical points on SO(3).

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};
use thiserror::Error;

use crate::so3::{vex_of_skew_part, AxialVector, RotationMatrix};

/// Smallest singular value of `E` accepted as full rank.
pub const RANK_TOLERANCE: f64 = 1e-6;

/// Minimum pairwise gap between target eigenvalues.
pub const DISTINCT_TOLERANCE: f64 = 1e-9;

/// Minimum `‖u₁ × u₂‖` for a direction pair to define an attitude.
pub const PAIR_TOLERANCE: f64 = 1e-6;

/// Diagonal weight for the directions that do not shape `K`.
pub const TAIL_WEIGHT: f64 = 1e-6;

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WahbaError {
    #[error("direction pair is nearly parallel (|u1 x u2| = {cross_norm:e})")]
    DegeneratePair { cross_norm: f64 },
    #[error("direction matrix is rank deficient (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },
    #[error("target eigenvalues are not pairwise distinct (gap {gap:e})")]
    NonDistinct { gap: f64 },
    #[error("target eigenvalues must be positive, got {0:?}")]
    NonPositive([f64; 3]),
    #[error("at least two directions are required, got {0}")]
    TooFewDirections(usize),
    #[error("column {column} is not unit norm ({norm})")]
    NotUnit { column: usize, norm: f64 },
    #[error("shape mismatch: expected {expected} columns, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
}

/// Columns `[u₁, u₂, u₁ × u₂ / ‖u₁ × u₂‖]`.
pub fn augment_two_vectors(u1: &Vector3<f64>, u2: &Vector3<f64>) -> Result<Matrix3<f64>, WahbaError> {
    let cross = u1.cross(u2);
    let cross_norm = cross.norm();
    if !(cross_norm > PAIR_TOLERANCE) {
        return Err(WahbaError::DegeneratePair { cross_norm });
    }
    Ok(Matrix3::from_columns(&[*u1, *u2, cross / cross_norm]))
}

fn augment_if_pair(columns: Matrix3xX<f64>) -> Result<Matrix3xX<f64>, WahbaError> {
    match columns.ncols() {
        0 | 1 => Err(WahbaError::TooFewDirections(columns.ncols())),
        2 => {
            let m = augment_two_vectors(&columns.column(0).into_owned(), &columns.column(1).into_owned())?;
            Ok(Matrix3xX::from_columns(&[m.column(0), m.column(1), m.column(2)]))
        }
        _ => Ok(columns),
    }
}

fn singular_values_sorted(m: &Matrix3xX<f64>) -> Vector3<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(3, 0.0);
    Vector3::new(s[0], s[1], s[2])
}

/// Inertial reference directions `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEnsemble {
    columns: Matrix3xX<f64>,
    observed: usize,
    sigma_min: f64,
}

impl DirectionEnsemble {
    /// Builds `E` from unit columns; two columns are augmented.
    pub fn new(columns: Matrix3xX<f64>) -> Result<Self, WahbaError> {
        let observed = columns.ncols();
        for (j, c) in columns.column_iter().enumerate() {
            let norm = c.norm();
            if (norm - 1.0).abs() > UNIT_TOLERANCE {
                return Err(WahbaError::NotUnit { column: j, norm });
            }
        }
        let columns = augment_if_pair(columns)?;
        let sigma_min = singular_values_sorted(&columns)[2];
        Ok(Self { columns, observed, sigma_min })
    }

    pub fn from_directions(directions: &[Vector3<f64>]) -> Result<Self, WahbaError> {
        Self::new(Matrix3xX::from_columns(directions))
    }

    pub fn matrix(&self) -> &Matrix3xX<f64> {
        &self.columns
    }

    /// Column count after augmentation.
    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    /// Number of directions before augmentation.
    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.sigma_min
    }

    pub fn is_full_rank(&self) -> bool {
        self.sigma_min > RANK_TOLERANCE
    }
}

/// Body-frame directions `U`: measured (fresh) or propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyVectorSet {
    columns: Matrix3xX<f64>,
    fresh: bool,
}

impl BodyVectorSet {
    /// Fresh measurement; two columns are augmented.
    pub fn measured(columns: Matrix3xX<f64>) -> Result<Self, WahbaError> {
        Ok(Self { columns: augment_if_pair(columns)?, fresh: true })
    }

    /// Wraps already-augmented columns without touching the freshness flag.
    pub fn from_columns(columns: Matrix3xX<f64>, fresh: bool) -> Self {
        Self { columns, fresh }
    }

    /// `Rᵀ E`, the noise-free body view of an ensemble.
    pub fn exact(attitude: &RotationMatrix, ensemble: &DirectionEnsemble) -> Self {
        Self { columns: attitude.matrix().transpose() * ensemble.matrix(), fresh: true }
    }

    pub fn matrix(&self) -> &Matrix3xX<f64> {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn is_fresh(&self) -> bool {
        self.fresh
    }

    /// Left-multiplies every column by `rotation`; clears freshness.
    pub fn rotated(&self, rotation: &RotationMatrix) -> Self {
        Self { columns: rotation.matrix() * &self.columns, fresh: false }
    }
}

/// Prescribed eigenvalues `(d₁, d₂, d₃)` of `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEigenvalues([f64; 3]);

impl TargetEigenvalues {
    pub fn new(d: [f64; 3]) -> Result<Self, WahbaError> {
        if d.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(WahbaError::NonPositive(d));
        }
        let gap = (d[0] - d[1]).abs().min((d[0] - d[2]).abs()).min((d[1] - d[2]).abs());
        if gap < DISTINCT_TOLERANCE {
            return Err(WahbaError::NonDistinct { gap });
        }
        Ok(Self(d))
    }

    pub fn values(&self) -> [f64; 3] {
        self.0
    }
}

impl Default for TargetEigenvalues {
    fn default() -> Self {
        Self([3.0, 2.0, 1.0])
    }
}

/// Symmetric positive-definite weights `W` over the columns of `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
    d: TargetEigenvalues,
}

impl WeightMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn eigenvalues(&self) -> TargetEigenvalues {
        self.d
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.nrows() == 0
    }
}

/// Flips singular-vector pairs so the largest-magnitude entry of each left
/// singular vector is positive.
fn fix_signs(u: &mut Matrix3<f64>, v: &mut DMatrix<f64>) {
    for j in 0..3 {
        let col = u.column(j);
        let i = col.iamax();
        if col[i] < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

/// Thin SVD of `E` with singular values sorted descending: `(U_E, σ, V_E)`,
/// `V_E` being `k x 3`.
fn sorted_svd(e: &Matrix3xX<f64>) -> (Matrix3<f64>, Vector3<f64>, DMatrix<f64>) {
    let dyn_e = DMatrix::from_column_slice(3, e.ncols(), e.as_slice());
    let svd = dyn_e.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut u_e = Matrix3::zeros();
    let mut v_e = DMatrix::zeros(e.ncols(), 3);
    let mut sigma = Vector3::zeros();
    for (slot, &j) in order.iter().take(3).enumerate() {
        u_e.set_column(slot, &u.column(j));
        v_e.set_column(slot, &v_t.row(j).transpose());
        sigma[slot] = svd.singular_values[j];
    }
    fix_signs(&mut u_e, &mut v_e);
    (u_e, sigma, v_e)
}

/// Weights for which `E W Eᵀ` has eigenvalues exactly `d`.
pub fn construct_weights(e: &DirectionEnsemble, d: TargetEigenvalues) -> Result<WeightMatrix, WahbaError> {
    if !e.is_full_rank() {
        return Err(WahbaError::RankDeficient { sigma_min: e.smallest_singular_value() });
    }
    let (_, sigma, v_e) = sorted_svd(e.matrix());
    let dv = d.values();
    let w_head = DVector::from_iterator(3, (0..3).map(|i| dv[i] / (sigma[i] * sigma[i])));
    let k = e.len();
    // V_E W₀ V_Eᵀ for the full orthogonal V_E, written with the thin factor:
    // the k-3 trailing directions all carry TAIL_WEIGHT.
    let projector = &v_e * v_e.transpose();
    let mut w =
        &v_e * DMatrix::from_diagonal(&w_head) * v_e.transpose() + (DMatrix::identity(k, k) - projector) * TAIL_WEIGHT;
    w = (&w + w.transpose()) * 0.5;
    Ok(WeightMatrix { w, d })
}

/// `K = E W Eᵀ` together with its eigendecomposition, eigenvalues in
/// descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrix {
    k: Matrix3<f64>,
    eigenvalues: Vector3<f64>,
    eigenvectors: Matrix3<f64>,
}

impl KMatrix {
    /// Decomposes a symmetric matrix, requiring distinct positive eigenvalues.
    pub fn new(k: Matrix3<f64>) -> Result<Self, WahbaError> {
        let k = (k + k.transpose()) * 0.5;
        let eig = k.symmetric_eigen();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = Vector3::from_fn(|i, _| eig.eigenvalues[order[i]]);
        let mut eigenvectors = Matrix3::zeros();
        for (slot, &j) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(j).into_owned();
            if col[col.iamax()] < 0.0 {
                col.neg_mut();
            }
            eigenvectors.set_column(slot, &col);
        }
        let values = [eigenvalues[0], eigenvalues[1], eigenvalues[2]];
        if !(values[2] > 0.0) {
            return Err(WahbaError::NonPositive(values));
        }
        let gap = (values[0] - values[1]).min(values[1] - values[2]);
        if gap < DISTINCT_TOLERANCE {
            return Err(WahbaError::NonDistinct { gap });
        }
        Ok(Self { k, eigenvalues, eigenvectors })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.k
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &Vector3<f64> {
        &self.eigenvalues
    }

    /// Unit eigenvectors as columns, ordered like [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &Matrix3<f64> {
        &self.eigenvectors
    }
}

/// `K = E W Eᵀ`.
pub fn k_matrix(e: &DirectionEnsemble, w: &WeightMatrix) -> Result<KMatrix, WahbaError> {
    if !e.is_full_rank() {
        return Err(WahbaError::RankDeficient { sigma_min: e.smallest_singular_value() });
    }
    if w.len() != e.len() {
        return Err(WahbaError::ShapeMismatch { expected: e.len(), found: w.len() });
    }
    let em = DMatrix::from_column_slice(3, e.len(), e.matrix().as_slice());
    let k = &em * w.matrix() * em.transpose();
    KMatrix::new(Matrix3::from_iterator(k.iter().copied()))
}

/// `E W Ũᵀ`, the matrix `L` whose skew coupling with `R̂` drives the filter.
fn l_matrix(e: &DirectionEnsemble, w: &WeightMatrix, u: &BodyVectorSet) -> Matrix3<f64> {
    let (em, um) = (e.matrix(), u.matrix());
    let ew = em * w.matrix();
    let mut l = Matrix3::zeros();
    for j in 0..um.ncols() {
        l += ew.column(j) * um.column(j).transpose();
    }
    l
}

fn check_shapes(e: &DirectionEnsemble, w: &WeightMatrix, u: &BodyVectorSet) {
    assert_eq!(e.len(), u.len(), "ensemble and body vectors differ in column count");
    assert_eq!(e.len(), w.len(), "ensemble and weights differ in size");
}

/// `½ ⟨E - R̂U, (E - R̂U) W⟩`.
pub fn wahba_cost(r_hat: &RotationMatrix, u: &BodyVectorSet, e: &DirectionEnsemble, w: &WeightMatrix) -> f64 {
    check_shapes(e, w, u);
    let residual = e.matrix() - r_hat.matrix() * u.matrix();
    let mut acc = 0.0;
    for (a, row) in w.matrix().row_iter().enumerate() {
        for (b, wab) in row.iter().enumerate() {
            if *wab != 0.0 {
                acc += wab * residual.column(a).dot(&residual.column(b));
            }
        }
    }
    0.5 * acc
}

/// `⟨I - Q, K⟩ = tr K - tr(Qᵀ K)`.
pub fn potential_error(q: &RotationMatrix, k: &KMatrix) -> f64 {
    k.matrix().trace() - (q.matrix().transpose() * k.matrix()).trace()
}

/// `vex(Lᵀ R̂ - R̂ᵀ L)` with `L = E W Ũᵀ`: the gradient of the Wahba cost
/// with respect to right perturbations `R̂ exp(hat(Σ))`.
pub fn s_l(r_hat: &RotationMatrix, e: &DirectionEnsemble, w: &WeightMatrix, u: &BodyVectorSet) -> AxialVector {
    check_shapes(e, w, u);
    let l = l_matrix(e, w, u);
    let a = l.transpose() * r_hat.matrix();
    // vex(A - Aᵀ) = 2 · vex(skew part of A)
    vex_of_skew_part(&a) * 2.0
}

/// `vex(K Qᵀ - Q K)`.
pub fn s_k(q: &RotationMatrix, k: &KMatrix) -> AxialVector {
    let a = k.matrix() * q.matrix().transpose();
    let b = q.matrix() * k.matrix();
    crate::so3::vex_of_skew_part(&(a - b))
}

/// `{I, Q¹, Q², Q³}` with `Qⁱ = 2 vᵢ vᵢᵀ - I`, `vᵢ` the eigenvector of the
/// i-th largest eigenvalue of `K`.
pub fn critical_points(k: &KMatrix) -> [RotationMatrix; 4] {
    let flip = |i: usize| {
        let v = k.eigenvectors().column(i);
        RotationMatrix::from_matrix_unchecked(v * v.transpose() * 2.0 - Matrix3::identity())
    };
    [RotationMatrix::identity(), flip(0), flip(1), flip(2)]
}

/// An ensemble with its weights and K-matrix, rebuilt at each fresh
/// vector-measurement instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    pub ensemble: DirectionEnsemble,
    pub weights: WeightMatrix,
    pub k: KMatrix,
}

impl WeightedEnsemble {
    pub fn new(ensemble: DirectionEnsemble, d: TargetEigenvalues) -> Result<Self, WahbaError> {
        let weights = construct_weights(&ensemble, d)?;
        let k = k_matrix(&ensemble, &weights)?;
        Ok(Self { ensemble, weights, k })
    }

    pub fn cost(&self, r_hat: &RotationMatrix, u: &BodyVectorSet) -> f64 {
        wahba_cost(r_hat, u, &self.ensemble, &self.weights)
    }

    pub fn gradient(&self, r_hat: &RotationMatrix, u: &BodyVectorSet) -> AxialVector {
        s_l(r_hat, &self.ensemble, &self.weights, u)
    }
}
