//! Edge cost models, the potential function and the social cost.

use alloc::vec::Vec;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::tape::TapeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    /// `d_i (1 + C y_i / (θ_i + 1))`
    Fractional,
    /// `d_i (1 + C y_i exp(-θ_i))`
    Exponential,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("congestion factor must be positive, got {0}")]
    Congestion(f64),
    #[error("edge length {index} must lie in (0, 1], got {value}")]
    Length { index: usize, value: f64 },
    #[error("fractional cost needs θ_{index} > -1, got {value}")]
    ThetaDomain { index: usize, value: f64 },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Tape(#[from] TapeError),
}

pub const DEFAULT_CONGESTION: f64 = 10.0;

/// Separable, parameterized edge costs `c_i(y_i; θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel {
    kind: CostKind,
    congestion: f64,
    lengths: Vec<f64>,
}

impl CostModel {
    pub fn new(kind: CostKind, congestion: f64, lengths: Vec<f64>) -> Result<Self, ModelError> {
        if !(congestion > 0.0 && congestion.is_finite()) {
            return Err(ModelError::Congestion(congestion));
        }
        for (index, &value) in lengths.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ModelError::Length { index, value });
            }
        }
        Ok(Self { kind, congestion, lengths })
    }

    /// Unit lengths on `n` edges with `C = 10`.
    pub fn uniform(kind: CostKind, n: usize) -> Self {
        Self { kind, congestion: DEFAULT_CONGESTION, lengths: alloc::vec![1.0; n] }
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn congestion(&self) -> f64 {
        self.congestion
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    fn check_dims(&self, a: usize, b: usize) -> Result<(), ModelError> {
        for got in [a, b] {
            if got != self.lengths.len() {
                return Err(ModelError::Dimension { expected: self.lengths.len(), got });
            }
        }
        Ok(())
    }

    /// Cost of edge `i` at load `y` under parameter `theta`.
    pub fn edge_cost<S: Scalar>(&self, i: usize, y: S, theta: S) -> Result<S, ModelError> {
        let d = self.lengths[i];
        let c = self.congestion;
        let out = match self.kind {
            CostKind::Fractional => {
                if theta.value() <= -1.0 {
                    return Err(ModelError::ThetaDomain { index: i, value: theta.value() });
                }
                (y * (c * d) / (theta + 1.0)) + d
            }
            CostKind::Exponential => (y * (-theta).exp()) * (c * d) + d,
        };
        out.status()?;
        Ok(out)
    }

    /// `∇f(y; θ)`, i.e. the vector of edge costs.
    pub fn potential_gradient<S: Scalar>(&self, y: &[S], theta: &[S]) -> Result<Vec<S>, ModelError> {
        self.check_dims(y.len(), theta.len())?;
        (0..y.len()).map(|i| self.edge_cost(i, y[i], theta[i])).collect()
    }

    /// `f(y; θ) = Σ_i ∫_0^{y_i} c_i(u; θ) du`, in closed form.
    pub fn potential_value(&self, y: &[f64], theta: &[f64]) -> Result<f64, ModelError> {
        self.check_dims(y.len(), theta.len())?;
        let c = self.congestion;
        let mut total = 0.0;
        for i in 0..y.len() {
            let (d, yi, ti) = (self.lengths[i], y[i], theta[i]);
            let slope = match self.kind {
                CostKind::Fractional => {
                    if ti <= -1.0 {
                        return Err(ModelError::ThetaDomain { index: i, value: ti });
                    }
                    c / (ti + 1.0)
                }
                CostKind::Exponential => c * libm::exp(-ti),
            };
            total += d * (yi + 0.5 * slope * yi * yi);
        }
        Ok(total)
    }

    /// `F(θ, y) = Σ_i c_i(y_i; θ) y_i`.
    pub fn social_cost<S: Scalar>(&self, theta: &[S], y: &[S]) -> Result<S, ModelError> {
        self.check_dims(y.len(), theta.len())?;
        let mut total: Option<S> = None;
        for i in 0..y.len() {
            let term = self.edge_cost(i, y[i], theta[i])? * y[i];
            total = Some(match total {
                Some(acc) => acc + term,
                None => term,
            });
        }
        match total {
            Some(t) => Ok(t),
            None => Err(ModelError::Dimension { expected: 1, got: 0 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;
    use alloc::vec;

    fn frac() -> CostModel {
        CostModel::uniform(CostKind::Fractional, 5)
    }

    fn expo() -> CostModel {
        CostModel::uniform(CostKind::Exponential, 5)
    }

    #[test]
    fn edge_cost_examples() {
        assert_eq!(frac().edge_cost(0, 0.5, 1.0).unwrap(), 3.5);
        assert_eq!(expo().edge_cost(0, 0.5, 0.0).unwrap(), 6.0);
        assert_eq!(expo().edge_cost(0, 0.0, 3.3).unwrap(), 1.0);
        assert!(matches!(frac().edge_cost(2, 0.5, -1.0), Err(ModelError::ThetaDomain { index: 2, .. })));
    }

    #[test]
    fn gradient_is_edge_costs() {
        let g = frac().potential_gradient(&[0.5, 0.5, 0.0, 0.5, 0.5], &[1.0; 5]).unwrap();
        assert_eq!(g, vec![3.5, 3.5, 1.0, 3.5, 3.5]);
        let g = expo().potential_gradient(&[0.0; 5], &[1.0; 5]).unwrap();
        assert_eq!(g, vec![1.0; 5]);
        let g = expo().potential_gradient(&[0.7; 5], &[60.0; 5]).unwrap();
        assert!(g.iter().all(|&v| (v - 1.0).abs() < 1e-20));
    }

    #[test]
    fn potential_values() {
        let y = [0.5, 0.5, 0.0, 0.5, 0.5];
        assert!((frac().potential_value(&y, &[1.0; 5]).unwrap() - 4.5).abs() < 1e-15);
        assert_eq!(frac().potential_value(&[0.0; 5], &[1.0; 5]).unwrap(), 0.0);
        let one = CostModel::uniform(CostKind::Fractional, 1);
        assert_eq!(one.potential_value(&[1.0], &[1.0]).unwrap(), 3.5);
    }

    #[test]
    fn social_cost_at_uniform_capacity() {
        let y = [0.5, 0.5, 0.0, 0.5, 0.5];
        assert!((frac().social_cost(&[1.0; 5], &y).unwrap() - 7.0).abs() < 1e-12);
        assert_eq!(frac().social_cost(&[1.0; 5], &[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn social_cost_is_differentiable_in_both_arguments() {
        let tape = Tape::new();
        let theta: Vec<_> = (0..5).map(|_| tape.input(1.0).unwrap()).collect();
        let y: Vec<_> = [0.5, 0.5, 0.0, 0.5, 0.5].iter().map(|&v| tape.input(v).unwrap()).collect();
        let f = expo().social_cost(&theta, &y).unwrap();
        let g = tape.backward(f).unwrap();
        // dF/dθ_i = -C y_i^2 e^{-θ_i}; dF/dy_i = 1 + 2 C y_i e^{-θ_i}.
        let e = libm::exp(-1.0);
        assert!((g[0] + 10.0 * 0.25 * e).abs() < 1e-12);
        assert_eq!(g[2], 0.0);
        assert!((g[5] - (1.0 + 10.0 * e)).abs() < 1e-12);
        assert!((g[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CostModel::new(CostKind::Fractional, 0.0, vec![1.0]).is_err());
        assert!(CostModel::new(CostKind::Fractional, 1.0, vec![1.5]).is_err());
        assert!(frac().potential_value(&[0.0; 4], &[1.0; 5]).is_err());
    }
}
