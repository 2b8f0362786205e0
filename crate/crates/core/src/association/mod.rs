//! Association tables, joint weights and the exact oracles.

mod approx;
mod exact;
mod table;
mod weights;

pub use approx::{
    approx1_weight, compute_weights_approx1, factorised_p_approx1, factorised_p_approx2,
};
pub use exact::{
    compute_weights_exact, compute_weights_exact_clustered, compute_weights_sequential,
    factorised_p_exact, gating_clusters, sequential_cost, EXACT_LIMIT, FRONTIER_LIMIT,
};
pub use table::{
    build_table, compute_cz, AssociationTable, Detection, ObservationRows, PropagatedRow,
};
pub use weights::{
    ColumnPosterior, NormalizationResiduals, ObsWeights, RowPosterior, RowWeights, WeightTable,
};
