//! Pointwise-evaluable functions of a parameter vector.

use std::fmt;
use std::sync::Arc;

type FieldFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A real-valued function of a `dim`-dimensional point.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    f: Arc<FieldFn>,
}

impl ScalarField {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(dim >= 1, "field dimension must be at least 1");
        Self {
            dim,
            f: Arc::new(f),
        }
    }

    /// One-dimensional field.
    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(1, move |x| f(x[0]))
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, move |_| c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, theta: &[f64]) -> f64 {
        (self.f)(theta)
    }

    #[inline]
    pub fn eval1(&self, x: f64) -> f64 {
        (self.f)(std::slice::from_ref(&x))
    }

    /// Pointwise composition `g(self(θ))`.
    pub fn map<G>(&self, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = self.clone();
        Self::new(self.dim, move |x| g(inner.eval(x)))
    }

    /// Natural log of a nonnegative field.
    pub fn ln(&self) -> Self {
        self.map(f64::ln)
    }

    /// Exponential of a log-space field.
    pub fn exp(&self) -> Self {
        self.map(f64::exp)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(dim={})", self.dim)
    }
}

/// Ordered list of scalar fields sharing one domain.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Self {
        assert!(
            !components.is_empty(),
            "vector field needs at least one component"
        );
        let d = components[0].dim();
        assert!(
            components.iter().all(|c| c.dim() == d),
            "vector field components must share a dimension"
        );
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn eval_into(&self, theta: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(theta);
        }
    }

    pub fn eval(&self, theta: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(theta)).collect()
    }
}

impl From<ScalarField> for VectorField {
    fn from(f: ScalarField) -> Self {
        Self::new(vec![f])
    }
}

/// Anything that can be integrated componentwise against a target: a
/// [`ScalarField`] (one component) or a [`VectorField`].
pub trait Integrand {
    fn components(&self) -> usize;
    fn eval_into(&self, theta: &[f64], out: &mut [f64]);
}

impl Integrand for ScalarField {
    fn components(&self) -> usize {
        1
    }
    #[inline]
    fn eval_into(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = self.eval(theta);
    }
}

impl Integrand for VectorField {
    fn components(&self) -> usize {
        self.len()
    }
    #[inline]
    fn eval_into(&self, theta: &[f64], out: &mut [f64]) {
        VectorField::eval_into(self, theta, out)
    }
}
