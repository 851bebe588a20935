//! Group extraction, clustering refinement and block effective models.

mod block;
mod cluster;
mod groups;

pub use block::{
    block_spectrum_analytic, estimate_block_model, expand_block_model, BlockGroup, BlockModel,
    BlockModelSpec, BlockSpectrum,
};
pub use cluster::{hierarchical_split, mean_intra_correlation, split_group};
pub use groups::{
    extract_outlier_groups, overlap_count, overlap_report, partition_from_raw, raw_outlier_groups,
    read_partition_csv, write_partition_csv, Group, GroupPartition, RawOutlierGroups, Threshold,
    DEFAULT_THRESHOLD_MULT, G1, G1_FALLBACK_FRACTION, G23, G23_MINUS, G23_PLUS, G_PERP,
};
