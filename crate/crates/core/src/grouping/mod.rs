//! Geometry-aware grouping of skeleton points.
//!
//! Within-component distances are scaled by `lambda` and cross-component
//! distances by `1 - lambda`; with `lambda < 0.5` neighborhoods stretch along
//! skeleton components instead of jumping between nearby ones. The labels are
//! produced by seeded majority-vote propagation over the resulting k-NN graph.

mod knn;
mod propagate;

pub use knn::{knn_graph, neighborhood_purity, Metric, NeighborGraph};
pub use propagate::{labeling_accuracy, propagate_labels, remove_false_positives};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::l2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingConfig {
    pub lambda: f64,
    pub k: usize,
    /// `(point index, class id)` pairs; indices refer to the point set being
    /// labeled.
    pub seeds: Vec<(usize, u32)>,
}

impl GroupingConfig {
    pub fn new(lambda: f64, k: usize) -> Result<Self> {
        let cfg = Self {
            lambda,
            k,
            seeds: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seeds(mut self, seeds: Vec<(usize, u32)>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            k: 8,
            seeds: Vec::new(),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 0.5 {
        Ok(())
    } else {
        Err(Error::Config(format!("lambda must lie in (0, 0.5), got {lambda}")))
    }
}

#[inline]
pub(crate) fn scaled_distance(l2_mm: f64, same_component: bool, lambda: f64) -> f64 {
    if same_component {
        lambda * l2_mm
    } else {
        (1.0 - lambda) * l2_mm
    }
}

/// Geometry-aware distance between two points given in mm.
pub fn gag_distance(a: [f64; 3], b: [f64; 3], same_component: bool, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(scaled_distance(l2(a, b), same_component, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_values() {
        let a = [0.0, 0.0, 0.0];
        let b = [6.0, 8.0, 0.0];
        assert!((gag_distance(a, b, true, 0.3).unwrap() - 3.0).abs() < 1e-12);
        assert!((gag_distance(a, b, false, 0.3).unwrap() - 7.0).abs() < 1e-12);
        assert_eq!(gag_distance(a, a, true, 0.3).unwrap(), 0.0);
        assert_eq!(gag_distance(a, a, false, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn lambda_bounds() {
        let p = [0.0; 3];
        for bad in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            assert!(matches!(gag_distance(p, p, true, bad), Err(Error::Config(_))));
        }
        assert!(GroupingConfig::new(0.3, 0).is_err());
        assert!(GroupingConfig::new(0.3, 1).is_ok());
    }
}
