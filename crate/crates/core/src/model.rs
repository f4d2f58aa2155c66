//! Scalar functions that attribution methods can probe.

/// A real-valued function of a fixed-length feature vector.
///
/// Callers validate the input length before evaluating; implementations may
/// panic on a mismatch.
pub trait Model: Sync {
    fn input_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;

    /// Measurement unit of the output, if known.
    fn output_unit(&self) -> &str {
        ""
    }
}

/// A model with an available input gradient.
pub trait Differentiable: Model {
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl<M: Model + ?Sized> Model for &M {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn output_unit(&self) -> &str {
        (**self).output_unit()
    }
}

impl<M: Differentiable + ?Sized> Differentiable for &M {
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
}

/// Adapts a closure into a [`Model`].
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// A closure together with its analytic gradient.
pub struct FnDifferentiable<F, G> {
    dim: usize,
    f: F,
    grad: G,
}

impl<F, G> FnDifferentiable<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F, grad: G) -> Self {
        Self { dim, f, grad }
    }
}

impl<F, G> Model for FnDifferentiable<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl<F, G> Differentiable for FnDifferentiable<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}
