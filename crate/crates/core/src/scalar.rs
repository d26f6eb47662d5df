//! Scalar functions on state space with gradients.

use std::sync::Arc;

use nalgebra::DVector;

use crate::layout::StateVector;

type ValueFn = dyn Fn(&StateVector) -> f64 + Send + Sync;
type GradFn = dyn Fn(&StateVector) -> DVector<f64> + Send + Sync;

/// A named scalar function with its gradient.
///
/// `linear` marks functions whose gradient is constant in the state; the
/// constraint algorithm uses it to decide when polar directions can be
/// treated as locally constant.
#[derive(Clone)]
pub struct ScalarFunction {
    pub name: String,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    pub linear: bool,
}

impl ScalarFunction {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&StateVector) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            linear: false,
        }
    }

    pub fn linear_flagged(mut self) -> Self {
        self.linear = true;
        self
    }

    /// Function defined by its value only; the gradient falls back to
    /// central finite differences with step `fd_step * (1 + |p|)`.
    pub fn from_value(
        name: impl Into<String>,
        value: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
        fd_step: f64,
    ) -> Self {
        let value = Arc::new(value);
        let for_grad = Arc::clone(&value);
        ScalarFunction {
            name: name.into(),
            value: value.clone(),
            gradient: Arc::new(move |p| fd_gradient(|q| (for_grad)(q), p, fd_step)),
            linear: false,
        }
    }

    pub fn value(&self, p: &StateVector) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: &StateVector) -> DVector<f64> {
        (self.gradient)(p)
    }

    /// Largest relative gradient-vs-finite-difference deviation over the
    /// coordinates with non-negligible entries.
    pub fn gradient_check(&self, p: &StateVector, fd_step: f64) -> f64 {
        let analytic = self.gradient(p);
        let numeric = fd_gradient(|q| self.value(q), p, fd_step);
        let scale = analytic.norm().max(numeric.norm()).max(1e-6);
        (analytic - numeric).norm() / scale
    }
}

impl std::fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("name", &self.name)
            .field("linear", &self.linear)
            .finish()
    }
}

/// Central finite-difference gradient with step `fd_step * (1 + |p|)`.
pub fn fd_gradient(
    value: impl Fn(&StateVector) -> f64,
    p: &StateVector,
    fd_step: f64,
) -> DVector<f64> {
    let h = fd_step * (1.0 + p.coords.norm());
    let n = p.dim();
    let mut grad = DVector::zeros(n);
    let mut work = p.clone();
    for i in 0..n {
        let orig = work.coords[i];
        work.coords[i] = orig + h;
        let plus = value(&work);
        work.coords[i] = orig - h;
        let minus = value(&work);
        work.coords[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Directional second derivative `Hess(f) v` via central differences of an
/// analytic gradient.
pub fn fd_hessian_apply(
    gradient: impl Fn(&StateVector) -> DVector<f64>,
    p: &StateVector,
    v: &DVector<f64>,
    fd_step: f64,
) -> DVector<f64> {
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return DVector::zeros(p.dim());
    }
    let h = fd_step * (1.0 + p.coords.norm()) / vnorm;
    let mut plus = p.clone();
    plus.coords += v * h;
    let mut minus = p.clone();
    minus.coords -= v * h;
    (gradient(&plus) - gradient(&minus)) / (2.0 * h)
}
