//! Depth-derived proxy geometry: back-projection, triangulation, Laplace
//! smoothing and shading-normal selection.

mod bounding;
mod camera;
mod depth;
mod mesh;

pub use bounding::{min_bounding_sphere, BoundingSphere};
pub use camera::CameraSpec;
pub use depth::{backproject, DepthMap, ForegroundMask, PointGrid, MASK_THRESHOLD};
pub(crate) use mesh::normalization_transform;
pub use mesh::{
    attach_smoothed_normals, dirichlet_energy, laplace_smooth, normalize_object,
    set_shading_normals, triangulate, MeshSource, NormalMode, ProxyMesh, SmoothingParams,
    DEFAULT_DISCONTINUITY_RATIO, NORMALIZED_RADIUS,
};
