//! Gauss-Hermite quadrature for Gaussian expectations.
//!
//! Nodes and weights come from the Golub-Welsch algorithm: the Hermite
//! three-term recurrence gives a symmetric tridiagonal companion matrix
//! with zeros on the diagonal and √(k/2) off it; its eigenvalues are the
//! nodes and √π times the squared first eigenvector components are the
//! weights.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported rule order.
pub const MAX_ORDER: usize = 512;

/// A Gauss-Hermite rule: ∫ e^(−x²) f(x) dx ≈ Σ wₖ f(xₖ).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Build the rule of the given order (number of nodes). Orders below 2
    /// cannot resolve a spread and are rejected.
    pub fn new(order: usize) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must be in [2, {MAX_ORDER}], got {order}"
            )));
        }
        let mut companion = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let off = (k as f64 / 2.0).sqrt();
            companion[(k - 1, k)] = off;
            companion[(k, k - 1)] = off;
        }
        let eigen = companion.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &node)| {
                let first = eigen.eigenvectors[(0, i)];
                (node, PI.sqrt() * first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(GaussHermite { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫ e^(−x²) f(x) dx over the whole real line.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// E[f(T)] for T ~ Normal(mean, std_dev): substitute t = mean + √2 σ x
    /// and divide by √π.
    pub fn gaussian_expectation(&self, mean: f64, std_dev: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * std_dev;
        self.integrate(|x| f(mean + scale * x)) / PI.sqrt()
    }
}
