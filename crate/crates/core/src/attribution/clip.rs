use crate::model::{Differentiable, Model};

/// `g⁺(x) = max(0, f(x) − ỹ)`.
#[derive(Debug, Clone)]
pub struct ClipPositive<M> {
    inner: M,
    reference: f64,
}

/// `g⁻(x) = min(0, f(x) − ỹ)`.
#[derive(Debug, Clone)]
pub struct ClipNegative<M> {
    inner: M,
    reference: f64,
}

pub fn clip_positive<M: Model>(f: M, reference: f64) -> ClipPositive<M> {
    ClipPositive { inner: f, reference }
}

pub fn clip_negative<M: Model>(f: M, reference: f64) -> ClipNegative<M> {
    ClipNegative { inner: f, reference }
}

impl<M: Model> Model for ClipPositive<M> {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.inner.eval(x) - self.reference).max(0.0)
    }
    fn output_unit(&self) -> &str {
        self.inner.output_unit()
    }
}

impl<M: Model> Model for ClipNegative<M> {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.inner.eval(x) - self.reference).min(0.0)
    }
    fn output_unit(&self) -> &str {
        self.inner.output_unit()
    }
}

impl<M: Differentiable> Differentiable for ClipPositive<M> {
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if self.inner.eval(x) - self.reference > 0.0 {
            self.inner.gradient(x)
        } else {
            vec![0.0; self.input_dim()]
        }
    }
}

impl<M: Differentiable> Differentiable for ClipNegative<M> {
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if self.inner.eval(x) - self.reference < 0.0 {
            self.inner.gradient(x)
        } else {
            vec![0.0; self.input_dim()]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnModel;

    #[test]
    fn clipping_values() {
        let f = FnModel::new(1, |x: &[f64]| x[0]);
        let g = clip_positive(&f, 1000.0);
        assert_eq!(g.eval(&[1100.0]), 100.0);
        assert_eq!(g.eval(&[800.0]), 0.0);
        assert_eq!(clip_positive(&f, 500.0).eval(&[0.0]), 0.0);
        let h = clip_negative(&f, 1000.0);
        assert_eq!(h.eval(&[800.0]), -200.0);
        assert_eq!(h.eval(&[1100.0]), 0.0);
    }
}
