use super::{check_input, Baseline, Explanation};
use crate::model::Differentiable;
use crate::network::DenseNetwork;
use crate::{Error, Result};

pub const DEFAULT_IG_STEPS: usize = 128;

/// `R_i = ∂f/∂x_i · x_i`.
pub fn gradient_x_input(net: &DenseNetwork, x: &[f64]) -> Result<Explanation> {
    let trace = net.forward(x)?;
    let grad = net.gradient_of_trace(&trace);
    let attributions = grad.iter().zip(x).map(|(g, v)| g * v).collect();
    Ok(Explanation::new("gradient_x_input", attributions, trace.output, 0.0, net.output_unit()))
}

/// Integrated gradients along the straight line from `baseline` to `x`,
/// discretized with the midpoint rule over `steps` equal sub-intervals.
///
/// The explanation's reference value is `f(baseline)`.
pub fn integrated_gradients<M: Differentiable>(
    f: &M,
    x: &[f64],
    baseline: &Baseline,
    steps: usize,
) -> Result<Explanation> {
    let d = f.input_dim();
    check_input(x, d)?;
    baseline.check(d)?;
    if steps == 0 {
        return Err(Error::Config("integrated gradients needs at least one step".into()));
    }
    let base = baseline.point();
    let delta: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
    let mut avg = vec![0.0; d];
    let mut point = vec![0.0; d];
    for s in 0..steps {
        let t = (s as f64 + 0.5) / steps as f64;
        for ((p, b), dx) in point.iter_mut().zip(base).zip(&delta) {
            *p = b + t * dx;
        }
        for (acc, g) in avg.iter_mut().zip(f.gradient(&point)) {
            *acc += g;
        }
    }
    let attributions = avg.iter().zip(&delta).map(|(g, dx)| g / steps as f64 * dx).collect();
    Ok(Explanation::new("integrated_gradients", attributions, f.eval(x), f.eval(base), f.output_unit())
        .with_param("steps", steps)
        .with_baseline(baseline))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnDifferentiable;
    use crate::network::{build_max_network, Activation, DenseLayer};

    fn linear(w: [f64; 2]) -> DenseNetwork {
        let l = DenseLayer::new(2, 1, w.to_vec(), vec![0.0], Activation::Identity).unwrap();
        DenseNetwork::new(vec![l], "u").unwrap()
    }

    #[test]
    fn gxi_reference_cases() {
        let e = gradient_x_input(&linear([2.0, -1.0]), &[3.0, 4.0]).unwrap();
        assert_eq!(e.attributions, vec![6.0, -4.0]);
        assert_eq!(e.total(), 2.0);
        assert_eq!(e.conservation_gap, 0.0);
        let e = gradient_x_input(&build_max_network(), &[0.0, 0.0]).unwrap();
        assert_eq!(e.attributions, vec![0.0, 0.0]);
        let e = gradient_x_input(&build_max_network(), &[1100.0, 900.0]).unwrap();
        assert_eq!(e.attributions, vec![1100.0, 0.0]);
    }

    #[test]
    fn ig_on_linear_is_exact_for_any_steps() {
        let net = linear([2.0, -1.0]);
        let base = Baseline(vec![1.0, -3.0]);
        for steps in [1, 2, 7, 128] {
            let e = integrated_gradients(&net, &[3.0, 4.0], &base, steps).unwrap();
            assert_eq!(e.attributions, vec![4.0, -7.0]);
            assert_eq!(e.conservation_gap, 0.0);
        }
    }

    #[test]
    fn ig_max_network_auction() {
        let e = integrated_gradients(&build_max_network(), &[1100.0, 900.0], &Baseline::zeros(2), 128).unwrap();
        assert_eq!(e.attributions, vec![1100.0, 0.0]);
    }

    #[test]
    fn ig_midpoint_is_exact_for_square() {
        // f(x) = x², path t·x: integrand 2·t·x·x is linear in t
        let f = FnDifferentiable::new(1, |x: &[f64]| x[0] * x[0], |x: &[f64]| vec![2.0 * x[0]]);
        let e = integrated_gradients(&f, &[2.0], &Baseline::zeros(1), 1).unwrap();
        assert_eq!(e.attributions, vec![4.0]);
    }

    #[test]
    fn ig_rejects_zero_steps_and_bad_baseline() {
        let net = linear([1.0, 1.0]);
        assert!(integrated_gradients(&net, &[1.0, 1.0], &Baseline::zeros(2), 0).is_err());
        assert!(integrated_gradients(&net, &[1.0, 1.0], &Baseline::zeros(3), 4).is_err());
    }
}
