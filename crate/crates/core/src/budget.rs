/// Caps on the exhaustive scans and on toppling work. Every scan refuses
/// with [`crate::Error::BudgetExceeded`] instead of truncating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Maximum number of elements of the characteristic-vector set scanned
    /// by the definition-level oracles.
    pub omega: u64,
    /// Maximum number of points of the stable box visited by enumerations.
    pub stable_box: u64,
    /// Maximum dimension for the subset-based allowed test (2^n - 1 subsets).
    pub subset_dim: usize,
    /// Maximum number of single topplings in one stabilization.
    pub topples: u64,
    /// Maximum number of digraph vertices (sink included) for arborescence
    /// enumeration.
    pub digraph_vertices: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            omega: 10_000_000,
            stable_box: 1_000_000,
            subset_dim: 20,
            topples: 1_000_000,
            digraph_vertices: 6,
        }
    }
}
