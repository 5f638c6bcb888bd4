//! Near-field hierarchical beamforming codebooks for uniform linear arrays.
//!
//! The crate builds a lower codebook of steering beams that covers the Fresnel
//! region at a guaranteed minimum gain, derives wide-beam upper levels from a
//! single initial pattern by rotation and relocation, and runs exhaustive and
//! hierarchical beam searches over simulated users.
//!
//! ```
//! use nfhcb::{ArrayConfig, LowerCodebook};
//!
//! let cfg = ArrayConfig::new(32, 40e9).unwrap();
//! let cb = LowerCodebook::with_grid(&cfg, 0.64, 64, 2).unwrap();
//! assert_eq!(cb.len(), 128);
//! ```

pub mod array;
pub mod container;
pub mod coverage;
pub mod error;
pub mod fresnel;
pub mod lower;
pub mod search;
pub mod sim;
pub mod steering_gain;
pub mod transform;
pub mod upper;

pub use array::{
    beam_gain, element_offsets, quadratic_gain, quadratic_steering, steering_vector, synthesize_channel, ArrayConfig,
    BeamVector, ChannelRealization, Coord, GainModel, Normalization, Path, PolarPoint, SPEED_OF_LIGHT,
};
pub use coverage::{angular_grid, check_partition, CoverageRegion, PartitionReport, SteeringGrid};
pub use error::{Error, Result};
pub use fresnel::{fresnel, fresnel_c, fresnel_s};
pub use lower::{
    boundary_kappa, boundary_theta, build_lower_codebook, sample_steering_points, CornerModel, Level, LowerCodebook,
    LowerCodebookParams,
};
pub use search::{
    exhaustive_search, exhaustive_search_top, hierarchical_search, topk_agreement, ChannelProbe, CodewordIndex, Probe,
    RankedCodeword, SearchResult,
};
pub use steering_gain::{fresnel_steering_gain, steering_beam_gain, SteeringGainParams};
pub use transform::{
    map_point_relocation, map_point_rotation, relocate, relocate_curvature, rotate, MappedPoint, TransformSpec,
};
pub use upper::{
    bmwss_pattern, build_hierarchy, deact_pattern, initial_pattern, quadric_pattern, ring_schedule,
    HierarchicalCodebook, HierarchyConfig, PatternKind,
};
