//! Optical access: accessible solid angle, parabolic-mirror collection,
//! cavity coupling and entangled-pair rates.

mod cavity;
mod mirror;
mod scene;

pub use cavity::{cavity_coupling_efficiency, cooperativity_for_efficiency, pair_rate_boost, CollectionChannel};
pub use mirror::{dipole_collection_efficiency, mirror_geometry, mirror_solid_angle, MirrorSpec};
pub use scene::{
    accessible_solid_angle, blocked_fraction_coaxial, hit_map, hit_map_csv, ObstructionScene, Occluder, OccluderShape, RayHit,
    SolidAngleEstimate, SolidAngleMethod, TABLE_EXCLUSIONS,
};
