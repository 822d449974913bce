//! Connection graph of a configuration: component counts, the local count
//! relative to a bounded region, and labels maintained along a chain.

mod dynamic;
mod labeling;
mod local;
mod union_find;

pub use dynamic::{DynamicClusters, RemovalPlan};
pub use labeling::{
    component_stats, count_components, far_left_order, ClusterLabeling, ComponentStats,
    ComponentSummary,
};
pub use local::{
    cc_increment, check_bounds, compatibility_offset, local_cc, local_cc_value,
    lower_bound_constant, BoundsCheck, LocalCcResult,
};
pub use union_find::UnionFind;
