//! Flat gradient accumulation and SGD-with-momentum updates.
//!
//! Gradients live in flat arrays congruent with the owning model's parameter
//! layout, so one optimizer implementation serves every model in the crate.

/// A flat gradient vector, index-for-index congruent with a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator {
    values: Vec<f64>,
}

impl GradientAccumulator {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `self += other`. Panics on layout mismatch (a programming error).
    pub fn add(&mut self, other: &GradientAccumulator) {
        self.add_scaled(other, 1.0);
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &GradientAccumulator, factor: f64) {
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "gradient layouts differ"
        );
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    /// `self *= factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// SGD with classical momentum over a flat parameter vector:
/// `v <- momentum * v + grad`, then `theta <- theta - lr * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSgd {
    velocity: Vec<f64>,
}

impl MomentumSgd {
    /// Fresh optimizer state (zero velocity) for `len` parameters.
    pub fn new(len: usize) -> Self {
        Self {
            velocity: vec![0.0; len],
        }
    }

    /// Restores optimizer state from a checkpointed velocity vector.
    pub fn from_velocity(velocity: Vec<f64>) -> Self {
        Self { velocity }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Applies one descent step in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, momentum: f64) {
        assert_eq!(params.len(), self.velocity.len(), "optimizer/param mismatch");
        assert_eq!(params.len(), grad.len(), "gradient/param mismatch");
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = momentum * *v + g;
            *p -= lr * *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_momentum_is_plain_sgd() {
        let mut opt = MomentumSgd::new(2);
        let mut params = vec![1.0, 2.0];
        opt.step(&mut params, &[0.5, -0.5], 0.1, 0.0);
        assert_eq!(params, vec![0.95, 2.05]);
    }

    #[test]
    fn two_steps_with_momentum_compound_the_velocity() {
        // With a constant gradient g, lr 1, momentum 0.9:
        // step 1 moves by g, step 2 by 1.9 g, total 2.9 g.
        let g = 0.7;
        let mut opt = MomentumSgd::new(1);
        let mut params = vec![0.0];
        opt.step(&mut params, &[g], 1.0, 0.9);
        opt.step(&mut params, &[g], 1.0, 0.9);
        assert!((params[0] - (-2.9 * g)).abs() < 1e-12);
    }

    #[test]
    fn velocity_round_trips() {
        let mut opt = MomentumSgd::new(2);
        let mut params = vec![0.0, 0.0];
        opt.step(&mut params, &[1.0, -2.0], 0.1, 0.9);
        let copy = MomentumSgd::from_velocity(opt.velocity().to_vec());
        assert_eq!(copy, opt);
    }

    #[test]
    fn gradient_accumulator_arithmetic() {
        let mut g = GradientAccumulator::zeros(3);
        g.add(&GradientAccumulator::from_values(vec![1.0, 2.0, 3.0]));
        g.add_scaled(&GradientAccumulator::from_values(vec![1.0, 1.0, 1.0]), 0.5);
        g.scale(2.0);
        assert_eq!(g.values(), &[3.0, 5.0, 7.0]);
    }
}
