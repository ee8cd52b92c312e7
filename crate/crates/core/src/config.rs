/// Numerical tolerances shared by the inference core and its checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative Frobenius tolerance on `RᵀR` against the Gram matrix.
    pub gram: f64,
    /// Absolute tolerance on entropy and log-determinant comparisons.
    pub entropy: f64,
    /// Absolute tolerance on MAP estimate comparisons.
    pub estimate: f64,
    /// A diagonal pivot below `rank_rel * max|input entry|` is rank deficient.
    pub rank_rel: f64,
    /// Entries whose magnitude falls below this after a rotation are dropped.
    pub drop: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        gram: 1e-9,
        entropy: 1e-10,
        estimate: 1e-8,
        rank_rel: 1e-10,
        drop: 1e-14,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
