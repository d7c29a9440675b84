use serde::{Deserialize, Serialize};

/// Numerical tolerances and knobs shared by every module.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Coefficient-wise polynomial equality.
    pub tol_coeff: f64,
    /// Residual target when polishing roots and critical points.
    pub tol_root: f64,
    /// Relative distance under which discriminant roots are merged into one branch point.
    pub tol_cluster: f64,
    /// Ambiguity factor for nearest-match labelling during continuation.
    pub tol_match: f64,
    /// Gauss-Legendre order per panel.
    pub quad_order: usize,
    /// Relative tolerance of the adaptive panel refinement.
    pub quad_tol: f64,
    /// Maximum panel bisection depth.
    pub quad_max_depth: usize,
    /// Samples per arc when measuring lengths and materialising curves.
    pub arc_samples: usize,
    /// Relative size of the push-off used when counting intersections.
    pub perturbation: f64,
    /// Relative transverse width of the band that triggers an edge split.
    pub split_band: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol_coeff: 1e-12,
            tol_root: 1e-12,
            tol_cluster: 1e-7,
            tol_match: 3.0,
            quad_order: 16,
            quad_tol: 1e-10,
            quad_max_depth: 20,
            arc_samples: 64,
            perturbation: 1e-2,
            split_band: 0.05,
            seed: 0,
        }
    }
}
