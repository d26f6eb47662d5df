//! Subspaces of state space with orthonormal bases.
//!
//! Bases are orthonormalized on construction so that inclusion and equality
//! tests reduce to stable projector arithmetic.

use nalgebra::{DMatrix, DVector};

/// A linear subspace of `R^ambient_dim`, stored as orthonormal basis columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
    ambient_dim: usize,
}

impl Subspace {
    /// Span of the given columns. Columns that fall below `eps_rank` relative
    /// to the largest singular value are dropped, so the result is always a
    /// genuine orthonormal basis (possibly empty).
    pub fn span(columns: &DMatrix<f64>, eps_rank: f64) -> Self {
        let ambient_dim = columns.nrows();
        if columns.ncols() == 0 {
            return Subspace {
                basis: DMatrix::zeros(ambient_dim, 0),
                ambient_dim,
            };
        }
        let svd = columns.clone().svd(true, false);
        let u = svd.u.as_ref().expect("svd requested u");
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if smax > 0.0 && s > eps_rank * smax {
                cols.push(u.column(i).into_owned());
            }
        }
        Subspace::from_orthonormal(cols, ambient_dim)
    }

    pub fn from_orthonormal(cols: Vec<DVector<f64>>, ambient_dim: usize) -> Self {
        let k = cols.len();
        let mut basis = DMatrix::zeros(ambient_dim, k);
        for (j, c) in cols.iter().enumerate() {
            basis.set_column(j, c);
        }
        Subspace { basis, ambient_dim }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::zeros(ambient_dim, 0),
            ambient_dim,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            ambient_dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.basis.column(j).into_owned()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient_dim);
        }
        &self.basis * (self.basis.transpose() * v)
    }

    /// Distance from `v` to the subspace, relative to `|v|` (0 for v = 0).
    pub fn relative_distance(&self, v: &DVector<f64>) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (v - self.project(v)).norm() / norm
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.relative_distance(v) <= tol
    }

    pub fn includes(&self, other: &Subspace, tol: f64) -> bool {
        (0..other.dim()).all(|j| self.contains(&other.column(j), tol))
    }

    pub fn equals(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.includes(other, tol) && other.includes(self, tol)
    }

    /// Intersection computed from the nullspace of `[A | -B]`.
    pub fn intersect(&self, other: &Subspace, eps_rank: f64) -> Subspace {
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(self.ambient_dim);
        }
        let ka = self.dim();
        let kb = other.dim();
        let mut stacked = DMatrix::zeros(self.ambient_dim, ka + kb);
        stacked.view_mut((0, 0), (self.ambient_dim, ka)).copy_from(&self.basis);
        stacked
            .view_mut((0, ka), (self.ambient_dim, kb))
            .copy_from(&(-&other.basis));
        let null = nullspace(&stacked, eps_rank);
        if null.dim() == 0 {
            return Subspace::zero(self.ambient_dim);
        }
        // Map coefficient-space kernel vectors back through A.
        let mut cols = DMatrix::zeros(self.ambient_dim, null.dim());
        for j in 0..null.dim() {
            let coeffs = null.column(j);
            let xa = coeffs.rows(0, ka).into_owned();
            cols.set_column(j, &(&self.basis * xa));
        }
        Subspace::span(&cols, eps_rank)
    }

    /// Least-squares residual of fitting `v` inside the subspace,
    /// relative to `1 + |v|`.
    pub fn fit_residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm() / (1.0 + v.norm())
    }

    /// Deterministic basis aligned with coordinate axes wherever possible:
    /// axes are visited in order and their projections kept whenever they add
    /// a new direction. Falls back to nothing exotic -- the result always
    /// spans the same subspace.
    pub fn canonical_basis(&self, eps_rank: f64) -> Vec<DVector<f64>> {
        let k = self.dim();
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(k);
        if k == 0 {
            return out;
        }
        for j in 0..self.ambient_dim {
            if out.len() == k {
                break;
            }
            let mut e = DVector::zeros(self.ambient_dim);
            e[j] = 1.0;
            let mut w = self.project(&e);
            for b in &out {
                let c = b.dot(&w);
                w -= b * c;
            }
            let norm = w.norm();
            if norm > eps_rank.max(1e-12) {
                out.push(w / norm);
            }
        }
        out
    }
}

/// Right nullspace of `m` at relative singular-value threshold `eps_rank`.
pub fn nullspace(m: &DMatrix<f64>, eps_rank: f64) -> Subspace {
    let ncols = m.ncols();
    if m.nrows() == 0 || ncols == 0 {
        return Subspace::full(ncols);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    // Rows of V^T beyond the numerical rank span the kernel; V^T has
    // min(nrows, ncols) rows, so directions past it are added explicitly.
    let computed = vt.nrows();
    for i in 0..computed {
        let s = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if smax == 0.0 || s <= eps_rank * smax {
            cols.push(vt.row(i).transpose());
        }
    }
    if computed < ncols {
        // Complete the kernel with the orthogonal complement of V^T's rows.
        let mut all = DMatrix::zeros(ncols, computed);
        for i in 0..computed {
            all.set_column(i, &vt.row(i).transpose());
        }
        let complement = orthogonal_complement(&all, eps_rank);
        for j in 0..complement.dim() {
            cols.push(complement.column(j));
        }
    }
    let k = cols.len();
    let mut basis = DMatrix::zeros(ncols, k);
    for (j, c) in cols.iter().enumerate() {
        basis.set_column(j, c);
    }
    Subspace::span(&basis, eps_rank)
}

/// Orthogonal complement of the span of `cols` in its ambient space.
pub fn orthogonal_complement(cols: &DMatrix<f64>, eps_rank: f64) -> Subspace {
    let n = cols.nrows();
    let s = Subspace::span(cols, eps_rank);
    let mut out: Vec<DVector<f64>> = Vec::new();
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let mut w = &e - s.project(&e);
        for b in &out {
            let c = b.dot(&w);
            w -= b * c;
        }
        let norm = w.norm();
        if norm > 1e-10 {
            out.push(w / norm);
        }
    }
    Subspace::from_orthonormal(out, n)
}
