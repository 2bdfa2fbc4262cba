//! Structure-based localization against synthetic ground-truth maps.

mod descriptor;
mod pipeline;
mod pnp;
mod pose;
mod scene;

pub use descriptor::{global_descriptor, retrieve_topk, GlobalDescriptor, DEFAULT_K, DESCRIPTOR_LEN, GRID};
pub use pipeline::{accuracy_report, localize, localize_query, median, AccuracyReport, LocalizeConfig, QueryResult};
pub use pnp::{
    dlt_pose, pnp_ransac, refine_pose, reprojection_error, Correspondence, Intrinsics, PnpSolution, RansacConfig,
    MIN_SAMPLE,
};
pub use pose::{
    axis_angle, orthonormalize, pose_errors, rotation_angle_deg, Pose, PoseError, R_THRESHOLD_DEG, T_THRESHOLD,
};
pub use scene::{
    build_synthetic_scene, match_and_lift, render_view, render_voxel, select_reference, shared_points, visible_points,
    voxel_descriptor, voxel_image, MatchConfig, Query, Reference, RenderConfig, SceneConfig, SceneMap,
};
