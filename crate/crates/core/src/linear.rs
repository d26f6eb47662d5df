//! Pointwise linear presymplectic algebra: kernels, symplectic polars,
//! subspace classification, and local solvability of Hamilton's equation.
//!
//! Convention, pinned by test: the contraction of a vector field into the
//! form is `(i_X omega)_j = sum_i X_i Omega_ij`, so Hamilton's equation
//! `i_X omega = dH` is the matrix equation `Omega^T X = dH`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::layout::StateVector;
use crate::subspace::{nullspace, Subspace};
use crate::twoform::TwoFormField;

/// Kernel of the form at `p`: all `v` with `Omega(p) v = 0`.
pub fn kernel(omega: &TwoFormField, p: &StateVector, eps_rank: f64) -> Result<Subspace> {
    let m = omega.matrix_checked(p)?;
    Ok(nullspace(&m, eps_rank))
}

/// Symplectic polar of `W` inside `within`:
/// `{v in within : omega(v, w) = 0 for all w in W}`.
///
/// Computed as the nullspace of `W^T Omega` intersected with `within`.
pub fn polar(
    omega: &TwoFormField,
    p: &StateVector,
    w: &Subspace,
    within: Option<&Subspace>,
    eps_rank: f64,
) -> Result<Subspace> {
    let m = omega.matrix_checked(p)?;
    let dim = m.nrows();
    let unrestricted = if w.dim() == 0 {
        Subspace::full(dim)
    } else {
        let wt_omega = w.basis().transpose() * &m;
        nullspace(&wt_omega, eps_rank)
    };
    Ok(match within {
        None => unrestricted,
        Some(s) => unrestricted.intersect(s, eps_rank),
    })
}

/// Classification of a subspace against its symplectic polar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceClass {
    Isotropic,
    Coisotropic,
    Symplectic,
    Lagrangian,
    Mixed,
}

impl std::fmt::Display for SubspaceClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SubspaceClass::Isotropic => "isotropic",
            SubspaceClass::Coisotropic => "coisotropic",
            SubspaceClass::Symplectic => "symplectic",
            SubspaceClass::Lagrangian => "lagrangian",
            SubspaceClass::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// Compare `W` with its polar: isotropic (`W ⊆ W^⊥`), coisotropic
/// (`W^⊥ ⊆ W`), symplectic (`W ∩ W^⊥ = 0`), lagrangian (`W = W^⊥`),
/// otherwise mixed.
pub fn classify_subspace(
    omega: &TwoFormField,
    p: &StateVector,
    w: &Subspace,
    eps_rank: f64,
) -> Result<SubspaceClass> {
    let pol = polar(omega, p, w, None, eps_rank)?;
    let tol = (eps_rank * 1e3).max(1e-9);
    let iso = pol.includes(w, tol);
    let coiso = w.includes(&pol, tol);
    Ok(if iso && coiso {
        SubspaceClass::Lagrangian
    } else if iso {
        SubspaceClass::Isotropic
    } else if coiso {
        SubspaceClass::Coisotropic
    } else if w.intersect(&pol, eps_rank).dim() == 0 {
        SubspaceClass::Symplectic
    } else {
        SubspaceClass::Mixed
    })
}

/// Kernel of the form pulled back to `W`: `W ∩ W^⊥`.
pub fn restricted_kernel(
    omega: &TwoFormField,
    p: &StateVector,
    w: &Subspace,
    eps_rank: f64,
) -> Result<Subspace> {
    let pol = polar(omega, p, w, None, eps_rank)?;
    Ok(w.intersect(&pol, eps_rank))
}

/// Outcome of solving `Omega^T X = dH` at a point.
#[derive(Debug, Clone)]
pub enum HamiltonSolution {
    /// `particular` is the minimum-norm solution; adding any vector of
    /// `freedom` (the kernel of omega) yields every other solution.
    Solved {
        particular: DVector<f64>,
        freedom: Subspace,
    },
    /// `dH` is not in the range of `Omega^T`; the residual of the best
    /// least-squares candidate is reported.
    Infeasible { residual: f64 },
}

impl HamiltonSolution {
    pub fn particular(&self) -> Option<&DVector<f64>> {
        match self {
            HamiltonSolution::Solved { particular, .. } => Some(particular),
            HamiltonSolution::Infeasible { .. } => None,
        }
    }
}

/// Solve Hamilton's equation `Omega(p)^T X = dH` by SVD least squares.
/// Infeasible when the residual exceeds `eps_rank * |dH|`.
pub fn solve_hamilton(
    omega: &TwoFormField,
    p: &StateVector,
    dh: &DVector<f64>,
    eps_rank: f64,
) -> Result<HamiltonSolution> {
    let m = omega.matrix_checked(p)?;
    let mt = m.transpose();
    let svd = mt.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = if smax > 0.0 { eps_rank * smax } else { f64::MAX };
    let x = svd
        .solve(dh, cutoff)
        .expect("svd solve with both factors requested");
    let residual = (&mt * &x - dh).norm();
    if residual > eps_rank * dh.norm() {
        return Ok(HamiltonSolution::Infeasible { residual });
    }
    let freedom = nullspace(&m, eps_rank);
    Ok(HamiltonSolution::Solved {
        particular: x,
        freedom,
    })
}

/// The Hamiltonian vector field of a function with differential `df`,
/// i.e. the particular solution of `Omega^T X = df`.
pub fn hamiltonian_vector_field(
    omega: &TwoFormField,
    p: &StateVector,
    df: &DVector<f64>,
    eps_rank: f64,
) -> Result<Option<DVector<f64>>> {
    Ok(match solve_hamilton(omega, p, df, eps_rank)? {
        HamiltonSolution::Solved { particular, .. } => Some(particular),
        HamiltonSolution::Infeasible { .. } => None,
    })
}

/// Apply the form: the covector `i_X omega` as a column vector.
pub fn contract(omega_matrix: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    omega_matrix.transpose() * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::BlockLayout;
    use crate::twoform::paired_form;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn state(dim: usize) -> StateVector {
        let layout = Arc::new(BlockLayout::new(&[("x", 1, dim)]));
        StateVector::zeros(layout)
    }

    fn form(m: DMatrix<f64>) -> TwoFormField {
        TwoFormField::constant(m)
    }

    #[test]
    fn kernel_of_block_degenerate_form() {
        // Omega = [[0,1,0],[-1,0,0],[0,0,0]] -> kernel = span{e3}
        let m = paired_form(3, &[(0, 1)], 1.0);
        let f = form(m);
        let k = kernel(&f, &state(3), 1e-9).unwrap();
        assert_eq!(k.dim(), 1);
        assert!(k.contains(&DVector::from_vec(vec![0.0, 0.0, 1.0]), 1e-10));
    }

    #[test]
    fn kernel_of_nondegenerate_form_is_zero() {
        // standard symplectic on R^4: (q1,q2,p1,p2)
        let m = paired_form(4, &[(0, 2), (1, 3)], 1.0);
        let k = kernel(&form(m), &state(4), 1e-9).unwrap();
        assert_eq!(k.dim(), 0);
    }

    #[test]
    fn polar_of_coordinate_line() {
        // symplectic R^4, W = span{dq1} -> polar = span{dq1, dq2, dp2}
        let m = paired_form(4, &[(0, 2), (1, 3)], 1.0);
        let f = form(m);
        let w = Subspace::span(
            &DMatrix::from_columns(&[DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])]),
            1e-9,
        );
        let pol = polar(&f, &state(4), &w, None, 1e-9).unwrap();
        assert_eq!(pol.dim(), 3);
        for v in [
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ] {
            assert!(pol.contains(&DVector::from_vec(v), 1e-10));
        }
        assert!(!pol.contains(&DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]), 1e-10));
    }

    #[test]
    fn polar_of_full_space_is_zero_and_vice_versa() {
        let m = paired_form(4, &[(0, 2), (1, 3)], 1.0);
        let f = form(m);
        let p = state(4);
        let full = Subspace::full(4);
        assert_eq!(polar(&f, &p, &full, None, 1e-9).unwrap().dim(), 0);
        let zero = Subspace::zero(4);
        let within = Subspace::full(4);
        let pol = polar(&f, &p, &zero, Some(&within), 1e-9).unwrap();
        assert_eq!(pol.dim(), 4);
    }

    #[test]
    fn classification_examples() {
        let m = paired_form(4, &[(0, 2), (1, 3)], 1.0);
        let f = form(m);
        let p = state(4);
        let span = |vs: &[Vec<f64>]| {
            let cols: Vec<DVector<f64>> = vs.iter().map(|v| DVector::from_vec(v.clone())).collect();
            Subspace::span(&DMatrix::from_columns(&cols), 1e-9)
        };
        // W = span{dq1, dq2} is lagrangian
        let w = span(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]);
        assert_eq!(
            classify_subspace(&f, &p, &w, 1e-9).unwrap(),
            SubspaceClass::Lagrangian
        );
        // W = span{dq1} is isotropic
        let w = span(&[vec![1.0, 0.0, 0.0, 0.0]]);
        assert_eq!(
            classify_subspace(&f, &p, &w, 1e-9).unwrap(),
            SubspaceClass::Isotropic
        );
        // W = span{dq1, dp1} is symplectic
        let w = span(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]]);
        assert_eq!(
            classify_subspace(&f, &p, &w, 1e-9).unwrap(),
            SubspaceClass::Symplectic
        );
        // W = span{dq1, dq2, dp1} is coisotropic
        let w = span(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(
            classify_subspace(&f, &p, &w, 1e-9).unwrap(),
            SubspaceClass::Coisotropic
        );
    }

    #[test]
    fn restricted_kernel_of_coisotropic_hypersurface() {
        // W = ker dq1 in symplectic R^4; the pulled-back kernel is spanned by
        // the Hamiltonian direction of q1. Brute-force check by intersection.
        let m = paired_form(4, &[(0, 2), (1, 3)], 1.0);
        let f = form(m);
        let p = state(4);
        let w = Subspace::span(
            &DMatrix::from_columns(&[
                DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
                DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
                DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]),
            ]),
            1e-9,
        );
        let rk = restricted_kernel(&f, &p, &w, 1e-9).unwrap();
        assert_eq!(rk.dim(), 1);
        // X_{q1} solves Omega^T X = dq1 = e1: X = (0,0,-1,0)
        let x = hamiltonian_vector_field(&f, &p, &DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), 1e-9)
            .unwrap()
            .unwrap();
        assert!(rk.contains(&x, 1e-9));
        // full space restricted kernel is {0} for symplectic form
        let full = Subspace::full(4);
        assert_eq!(restricted_kernel(&f, &p, &full, 1e-9).unwrap().dim(), 0);
    }

    #[test]
    fn convention_pin_omega_2d() {
        // On Omega = [[0,1],[-1,0]] with dH = (1,0), the unique solution of
        // Omega^T X = dH is X = (0,-1). This test freezes the sign convention.
        let m = paired_form(2, &[(0, 1)], 1.0);
        let f = form(m);
        let sol = solve_hamilton(&f, &state(2), &DVector::from_vec(vec![1.0, 0.0]), 1e-9).unwrap();
        let x = sol.particular().unwrap();
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn hamiltons_equations_on_harmonic_data() {
        // omega = dq ^ dp, H = p^2/2 must flow as dq/dt = p.
        let m = paired_form(2, &[(0, 1)], 1.0);
        let f = form(m);
        let p_val = 0.7;
        let dh = DVector::from_vec(vec![0.0, p_val]);
        let sol = solve_hamilton(&f, &state(2), &dh, 1e-9).unwrap();
        let x = sol.particular().unwrap();
        assert_relative_eq!(x[0], p_val, epsilon = 1e-14);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_differential_gives_zero_particular_and_kernel_freedom() {
        let m = paired_form(3, &[(0, 1)], 1.0);
        let f = form(m);
        let sol = solve_hamilton(&f, &state(3), &DVector::zeros(3), 1e-9).unwrap();
        match sol {
            HamiltonSolution::Solved { particular, freedom } => {
                assert_eq!(particular.norm(), 0.0);
                assert_eq!(freedom.dim(), 1);
            }
            _ => panic!("expected solvable"),
        }
    }

    #[test]
    fn zero_form_is_infeasible_for_nonzero_dh() {
        let f = form(DMatrix::zeros(2, 2));
        let sol = solve_hamilton(&f, &state(2), &DVector::from_vec(vec![1.0, 0.0]), 1e-9).unwrap();
        assert!(matches!(sol, HamiltonSolution::Infeasible { .. }));
    }

    #[test]
    fn random_rank_two_system_solves_in_range() {
        // Build dH = Omega^T X0 from a random X0 so feasibility is guaranteed.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut a = DMatrix::zeros(4, 4);
        // random rank-2 antisymmetric: u w^T - w u^T
        let u = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let w = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..4 {
            for j in 0..4 {
                a[(i, j)] = u[i] * w[j] - w[i] * u[j];
            }
        }
        let f = form(a.clone());
        let x0 = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let dh = a.transpose() * &x0;
        let sol = solve_hamilton(&f, &state(4), &dh, 1e-9).unwrap();
        let x = sol.particular().unwrap();
        assert!((a.transpose() * x - &dh).norm() <= 1e-12 * dh.norm().max(1.0));
    }

    #[test]
    fn infeasible_on_degenerate_form() {
        // dH along the kernel direction of a degenerate form has no solution.
        let m = paired_form(3, &[(0, 1)], 1.0);
        let f = form(m);
        let dh = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(
            hamiltonian_vector_field(&f, &state(3), &dh, 1e-9)
                .unwrap()
                .is_none()
        );
    }
}
