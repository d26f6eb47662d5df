//! Lapse-shift splitting of a Lorentzian metric at a slice, and the
//! effective generator components every Hamiltonian here consumes.
//!
//! Conventions: signature (-,+,...,+); the covariant split is
//! `g_00 = M_k M^k - N^2`, `g_0i = M_i`, `g_ij = gamma_ij`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Lapse, shift, and spatial metric at one point of a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapseShift {
    pub lapse: f64,
    /// Contravariant shift `M^i`.
    pub shift: Vec<f64>,
    /// Spatial metric `gamma_ij`, row-major, symmetric positive-definite.
    pub gamma: Vec<Vec<f64>>,
}

impl LapseShift {
    pub fn flat(dim: usize) -> Self {
        LapseShift {
            lapse: 1.0,
            shift: vec![0.0; dim],
            gamma: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn spatial_dim(&self) -> usize {
        self.shift.len()
    }

    pub fn gamma_matrix(&self) -> DMatrix<f64> {
        let n = self.spatial_dim();
        DMatrix::from_fn(n, n, |i, j| self.gamma[i][j])
    }

    fn validate(&self) -> Result<()> {
        let n = self.spatial_dim();
        if self.gamma.len() != n || self.gamma.iter().any(|row| row.len() != n) {
            return Err(CoreError::InvalidInput(
                "gamma must be square and match the shift dimension".into(),
            ));
        }
        if self.lapse <= 0.0 {
            return Err(CoreError::Signature("lapse must be positive".into()));
        }
        let gamma = self.gamma_matrix();
        let sym = gamma.clone().symmetric_eigen();
        if sym.eigenvalues.iter().any(|&e| e <= 0.0) {
            return Err(CoreError::Signature(
                "spatial metric is not positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// A spacetime metric restricted to a slice, as an (n+1)x(n+1) matrix with
/// index 0 the time direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeMetricAtSlice {
    pub g: DMatrix<f64>,
}

impl SpacetimeMetricAtSlice {
    pub fn minkowski(spatial_dim: usize) -> Self {
        let mut g = DMatrix::identity(spatial_dim + 1, spatial_dim + 1);
        g[(0, 0)] = -1.0;
        SpacetimeMetricAtSlice { g }
    }

    pub fn spatial_dim(&self) -> usize {
        self.g.nrows() - 1
    }
}

/// The generator of an infinitesimal slicing, plus the internal-gauge
/// component chi used by the gauge-field theories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicingGenerator {
    pub zeta0: f64,
    /// Spatial components `zeta^i` (constant over the slice).
    pub zeta: Vec<f64>,
    /// Per-node internal gauge parameter; empty means zero.
    pub chi: Vec<f64>,
}

impl SlicingGenerator {
    pub fn transverse(zeta0: f64, zeta: Vec<f64>) -> Self {
        SlicingGenerator {
            zeta0,
            zeta,
            chi: Vec::new(),
        }
    }

    pub fn is_transverse(&self) -> bool {
        self.zeta0 != 0.0
    }

    pub fn chi_at(&self, node: usize) -> f64 {
        if self.chi.is_empty() {
            0.0
        } else {
            self.chi[node]
        }
    }
}

/// Decompose `g` into lapse, shift, and spatial metric:
/// `gamma_ij = g_ij`, `M_i = g_0i`, `M^i = gamma^{ij} M_j`,
/// `N = sqrt(M_k M^k - g_00)`.
pub fn split_metric(metric: &SpacetimeMetricAtSlice) -> Result<LapseShift> {
    let n = metric.spatial_dim();
    let g = &metric.g;
    let gamma = DMatrix::from_fn(n, n, |i, j| g[(i + 1, j + 1)]);
    let sym = gamma.clone().symmetric_eigen();
    if sym.eigenvalues.iter().any(|&e| e <= 0.0) {
        return Err(CoreError::Signature(
            "slice is not spacelike: gamma not positive definite".into(),
        ));
    }
    let m_cov = DVector::from_fn(n, |i, _| g[(0, i + 1)]);
    let gamma_inv = gamma
        .clone()
        .try_inverse()
        .ok_or_else(|| CoreError::Signature("gamma is singular".into()))?;
    let m_contra = &gamma_inv * &m_cov;
    let n_sq = m_cov.dot(&m_contra) - g[(0, 0)];
    if n_sq <= 0.0 {
        return Err(CoreError::Signature(format!(
            "slice is not spacelike: M_k M^k - g_00 = {n_sq:.3e} <= 0"
        )));
    }
    Ok(LapseShift {
        lapse: n_sq.sqrt(),
        shift: m_contra.iter().cloned().collect(),
        gamma: (0..n)
            .map(|i| (0..n).map(|j| gamma[(i, j)]).collect())
            .collect(),
    })
}

/// Covariant metric built from lapse-shift data.
pub fn reconstruct_metric(ls: &LapseShift) -> Result<SpacetimeMetricAtSlice> {
    ls.validate()?;
    let n = ls.spatial_dim();
    let gamma = ls.gamma_matrix();
    let m_contra = DVector::from_vec(ls.shift.clone());
    let m_cov = &gamma * &m_contra;
    let mut g = DMatrix::zeros(n + 1, n + 1);
    g[(0, 0)] = m_cov.dot(&m_contra) - ls.lapse * ls.lapse;
    for i in 0..n {
        g[(0, i + 1)] = m_cov[i];
        g[(i + 1, 0)] = m_cov[i];
        for j in 0..n {
            g[(i + 1, j + 1)] = gamma[(i, j)];
        }
    }
    Ok(SpacetimeMetricAtSlice { g })
}

/// Contravariant metric: `g^00 = -1/N^2`, `g^0i = M^i/N^2`,
/// `g^ij = gamma^ij - M^i M^j / N^2`.
pub fn contravariant_metric(ls: &LapseShift) -> Result<DMatrix<f64>> {
    ls.validate()?;
    let n = ls.spatial_dim();
    let gamma_inv = ls
        .gamma_matrix()
        .try_inverse()
        .ok_or_else(|| CoreError::Signature("gamma is singular".into()))?;
    let n2 = ls.lapse * ls.lapse;
    let mut g = DMatrix::zeros(n + 1, n + 1);
    g[(0, 0)] = -1.0 / n2;
    for i in 0..n {
        g[(0, i + 1)] = ls.shift[i] / n2;
        g[(i + 1, 0)] = ls.shift[i] / n2;
        for j in 0..n {
            g[(i + 1, j + 1)] = gamma_inv[(i, j)] - ls.shift[i] * ls.shift[j] / n2;
        }
    }
    Ok(g)
}

/// `sqrt(-g) = N sqrt(det gamma)`.
pub fn volume_factor(ls: &LapseShift) -> Result<f64> {
    ls.validate()?;
    Ok(ls.lapse * ls.gamma_matrix().determinant().sqrt())
}

/// Effective generator components `(zeta^0 N, zeta^0 M^i + zeta^i)`.
pub struct EffectiveGenerator {
    pub perp: f64,
    pub parallel: Vec<f64>,
}

pub fn effective_generator(zg: &SlicingGenerator, ls: &LapseShift) -> EffectiveGenerator {
    let perp = zg.zeta0 * ls.lapse;
    let parallel = ls
        .shift
        .iter()
        .zip(zg.zeta.iter())
        .map(|(&m, &z)| zg.zeta0 * m + z)
        .collect();
    EffectiveGenerator { perp, parallel }
}
