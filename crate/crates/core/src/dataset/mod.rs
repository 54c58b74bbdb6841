//! Synthetic relighting corpus: procedural objects, viewpoint and lighting
//! sampling, training-pair composition, manifests and rendering.

mod corpus;
mod manifest;
mod procedural;
mod protocol;

pub use corpus::{
    degrade_depth, env_name, materialize_pair, procedural_env, procedural_env_pool, render_corpus,
    smoothed_variant, transfer_depth_normals, DEPTH_BLUR_SIGMA_PX, DEPTH_WARP_FRACTION,
};
pub use manifest::{
    compose_manifest, read_manifest, records_path, slate_categories, write_manifest, DatasetConfig,
    DatasetManifest, MANIFEST_SCHEMA_VERSION,
};
pub use procedural::{
    build_object, gen_procedural_object, icosphere, mesh_depth, ProceduralKind, ProceduralObject,
    Shape, DEFAULT_OBJECT_DETAIL,
};
pub use protocol::{
    assign_lighting_slate, compose_training_pair, hint_file, lighting_dir, sample_viewpoints,
    slate_counts, SamplePaths, SampleRecord, ViewSpec, DISTANCE_RANGE, ELEVATION_RANGE_DEG,
    FOV_RANGE_DEG, SLATE_COUNTS, SLATE_SIZE, SMOOTHED_PROBABILITY, VIEWS_PER_OBJECT,
};
