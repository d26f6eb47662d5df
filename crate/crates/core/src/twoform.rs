//! Point-dependent antisymmetric bilinear forms on state space.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::layout::StateVector;

pub const ANTISYMMETRY_TOL: f64 = 1e-14;

type EvalFn = dyn Fn(&StateVector) -> DMatrix<f64> + Send + Sync;

/// The (pre)symplectic form omega as a dense matrix field,
/// `m[(i, j)] = omega(e_i, e_j)`.
#[derive(Clone)]
pub struct TwoFormField {
    eval: Arc<EvalFn>,
    constant: Option<Arc<DMatrix<f64>>>,
    dim: usize,
}

impl TwoFormField {
    /// A form that does not depend on the base point.
    pub fn constant(matrix: DMatrix<f64>) -> Self {
        let dim = matrix.nrows();
        assert_eq!(dim, matrix.ncols(), "two-form matrix must be square");
        let shared = Arc::new(matrix);
        let for_eval = Arc::clone(&shared);
        TwoFormField {
            eval: Arc::new(move |_| (*for_eval).clone()),
            constant: Some(shared),
            dim,
        }
    }

    pub fn varying(
        dim: usize,
        eval: impl Fn(&StateVector) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        TwoFormField {
            eval: Arc::new(eval),
            constant: None,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    /// Matrix of the form at `p`, without validation.
    pub fn matrix(&self, p: &StateVector) -> DMatrix<f64> {
        match &self.constant {
            Some(m) => (**m).clone(),
            None => (self.eval)(p),
        }
    }

    /// Matrix of the form at `p`, checked antisymmetric to
    /// `ANTISYMMETRY_TOL * max|omega|`.
    pub fn matrix_checked(&self, p: &StateVector) -> Result<DMatrix<f64>> {
        let m = self.matrix(p);
        let scale = m.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let defect = (&m + m.transpose())
            .iter()
            .fold(0.0_f64, |a, x| a.max(x.abs()));
        let tol = ANTISYMMETRY_TOL * scale.max(1.0);
        if defect > tol {
            return Err(CoreError::MalformedForm { defect, tol });
        }
        Ok(m)
    }
}

impl std::fmt::Debug for TwoFormField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoFormField")
            .field("dim", &self.dim)
            .field("constant", &self.is_constant())
            .finish()
    }
}

/// Canonical symplectic form on pairs of blocks: `omega(e_{q_i}, e_{p_i}) = weight`.
/// `pairs` lists (first index, second index) of conjugate coordinates.
pub fn paired_form(dim: usize, pairs: &[(usize, usize)], weight: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for &(a, b) in pairs {
        m[(a, b)] = weight;
        m[(b, a)] = -weight;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::BlockLayout;
    use std::sync::Arc as StdArc;

    fn dummy_state(dim: usize) -> StateVector {
        let layout = StdArc::new(BlockLayout::new(&[("x", 1, dim)]));
        StateVector::zeros(layout)
    }

    #[test]
    fn constant_form_is_flagged_and_checked() {
        let m = paired_form(2, &[(0, 1)], 1.0);
        let f = TwoFormField::constant(m);
        assert!(f.is_constant());
        let p = dummy_state(2);
        let got = f.matrix_checked(&p).unwrap();
        assert_eq!(got[(0, 1)], 1.0);
        assert_eq!(got[(1, 0)], -1.0);
    }

    #[test]
    fn symmetric_part_is_rejected() {
        let mut m = paired_form(2, &[(0, 1)], 1.0);
        m[(0, 0)] = 1e-3; // inject a symmetric defect
        let f = TwoFormField::constant(m);
        let p = dummy_state(2);
        assert!(matches!(
            f.matrix_checked(&p),
            Err(CoreError::MalformedForm { .. })
        ));
    }
}
