use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_bounding_sphere, PointGrid};
use crate::math::DVec3;

/// Triangles whose longest edge exceeds this multiple of the median edge
/// length are treated as spanning a depth discontinuity.
pub const DEFAULT_DISCONTINUITY_RATIO: f64 = 4.0;

/// Bounding-sphere radius of a normalized object, meters.
pub const NORMALIZED_RADIUS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    DepthDerived,
    SyntheticObject,
}

/// Which per-vertex normal set the renderer shades with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalMode {
    #[default]
    Geometric,
    SmoothedDepth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub lambda: f64,
    pub iterations: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            lambda: 0.5,
            iterations: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxyMesh {
    pub positions: Vec<DVec3>,
    pub triangles: Vec<[u32; 3]>,
    pub geometric_normals: Vec<DVec3>,
    pub alt_normals: Option<Vec<DVec3>>,
    pub source: MeshSource,
    pub shading: NormalMode,
    /// Source pixel of each vertex, for depth-derived meshes.
    pub vertex_pixels: Option<Vec<[u32; 2]>>,
}

impl ProxyMesh {
    /// Builds a mesh, validating indices and rejecting zero-area triangles.
    pub fn new(positions: Vec<DVec3>, triangles: Vec<[u32; 3]>, source: MeshSource) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh("no triangles"));
        }
        let n = positions.len() as u32;
        if triangles.iter().flatten().any(|&i| i >= n) {
            return Err(Error::InvalidParameter("triangle index out of range".into()));
        }
        if triangles.iter().any(|t| is_degenerate(&positions, t)) {
            return Err(Error::DegenerateMesh("zero-area triangle"));
        }
        let geometric_normals = vertex_normals(&positions, &triangles);
        if geometric_normals.iter().any(|n| !n.is_finite()) {
            return Err(Error::DegenerateMesh("vertex without incident area"));
        }
        Ok(ProxyMesh {
            positions,
            triangles,
            geometric_normals,
            alt_normals: None,
            source,
            shading: NormalMode::Geometric,
            vertex_pixels: None,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn shading_normals(&self) -> &[DVec3] {
        match (self.shading, &self.alt_normals) {
            (NormalMode::SmoothedDepth, Some(alt)) => alt,
            _ => &self.geometric_normals,
        }
    }

    fn recompute_normals(&mut self) {
        self.geometric_normals = vertex_normals(&self.positions, &self.triangles);
    }

    /// Sorted, de-duplicated one-ring neighbors of every vertex.
    pub fn neighbors(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.positions.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Vertices lying on an edge used by exactly one triangle.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut edges: Vec<(u32, u32)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        let mut boundary = vec![false; self.positions.len()];
        let mut i = 0;
        while i < edges.len() {
            let mut j = i + 1;
            while j < edges.len() && edges[j] == edges[i] {
                j += 1;
            }
            if j - i == 1 {
                boundary[edges[i].0 as usize] = true;
                boundary[edges[i].1 as usize] = true;
            }
            i = j;
        }
        boundary
    }

    /// Wavefront OBJ with `vn` records for the active shading normals.
    pub fn write_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        for p in &self.positions {
            writeln!(w, "v {} {} {}", p.x, p.y, p.z).map_err(io)?;
        }
        for n in self.shading_normals() {
            writeln!(w, "vn {} {} {}", n.x, n.y, n.z).map_err(io)?;
        }
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| i + 1);
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn face_cross(p: &[DVec3], t: &[u32; 3]) -> DVec3 {
    let a = p[t[0] as usize];
    (p[t[1] as usize] - a).cross(p[t[2] as usize] - a)
}

fn is_degenerate(p: &[DVec3], t: &[u32; 3]) -> bool {
    let a = p[t[0] as usize];
    let b = p[t[1] as usize];
    let c = p[t[2] as usize];
    let scale = (b - a).length_squared().max((c - a).length_squared());
    let area2 = (b - a).cross(c - a).length();
    !(area2 > 1e-12 * scale) || scale == 0.0
}

/// Area-weighted vertex normals (unnormalized face cross products summed).
fn vertex_normals(p: &[DVec3], tris: &[[u32; 3]]) -> Vec<DVec3> {
    let mut acc = vec![DVec3::ZERO; p.len()];
    for t in tris {
        let n = face_cross(p, t);
        for &i in t {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.length();
            if len > 0.0 {
                n / len
            } else {
                DVec3::NAN
            }
        })
        .collect()
}

/// Triangulates each fully-foreground 2×2 pixel quad, dropping triangles that
/// bridge depth discontinuities.
///
/// Quads split along the `(u, v) → (u + 1, v + 1)` diagonal, wound so that
/// face normals point back towards the camera.
pub fn triangulate(grid: &PointGrid, discontinuity_ratio: f64) -> Result<ProxyMesh> {
    if !(discontinuity_ratio > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "discontinuity ratio {discontinuity_ratio} must be positive"
        )));
    }
    let (w, h) = (grid.width, grid.height);
    let idx = |x: usize, y: usize| y * w + x;
    let mut candidates: Vec<[usize; 3]> = Vec::new();
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let a = idx(x, y);
            let b = idx(x + 1, y);
            let c = idx(x + 1, y + 1);
            let d = idx(x, y + 1);
            if [a, b, c, d].iter().all(|&i| grid.points[i].is_some()) {
                candidates.push([a, c, b]);
                candidates.push([a, d, c]);
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::EmptyMesh("no fully-foreground 2x2 pixel quad"));
    }

    let world: Vec<Option<DVec3>> = grid
        .points
        .iter()
        .map(|p| p.map(|p| grid.camera.camera_to_world(p)))
        .collect();
    let pos = |i: usize| world[i].unwrap();
    let longest = |t: &[usize; 3]| {
        let (a, b, c) = (pos(t[0]), pos(t[1]), pos(t[2]));
        (a - b).length().max((b - c).length()).max((c - a).length())
    };

    let mut edges: Vec<f64> = candidates
        .iter()
        .flat_map(|t| {
            let (a, b, c) = (pos(t[0]), pos(t[1]), pos(t[2]));
            [(a - b).length(), (b - c).length(), (c - a).length()]
        })
        .collect();
    let mid = edges.len() / 2;
    let median = *edges.select_nth_unstable_by(mid, f64::total_cmp).1;
    let limit = discontinuity_ratio * median;

    // compact vertex numbering in pixel order
    let mut remap = vec![u32::MAX; w * h];
    let mut positions = Vec::new();
    let mut pixels = Vec::new();
    let mut triangles = Vec::new();
    for t in &candidates {
        if longest(t) > limit {
            continue;
        }
        let (a, b, c) = (pos(t[0]), pos(t[1]), pos(t[2]));
        let scale = (b - a).length_squared().max((c - a).length_squared());
        if !((b - a).cross(c - a).length() > 1e-12 * scale) {
            continue;
        }
        let mut tri = [0u32; 3];
        for (k, &pix) in t.iter().enumerate() {
            if remap[pix] == u32::MAX {
                remap[pix] = positions.len() as u32;
                positions.push(world[pix].unwrap());
                pixels.push([(pix % w) as u32, (pix / w) as u32]);
            }
            tri[k] = remap[pix];
        }
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err(Error::EmptyMesh("every triangle crossed a depth discontinuity"));
    }
    let mut mesh = ProxyMesh::new(positions, triangles, MeshSource::DepthDerived)?;
    mesh.vertex_pixels = Some(pixels);
    Ok(mesh)
}

/// Uniform-umbrella Laplace smoothing of vertex positions (Jacobi updates).
/// Vertices on open boundaries stay pinned so silhouettes do not shrink.
/// Connectivity is unchanged; geometric normals are re-derived and stale
/// alternative normals dropped.
pub fn laplace_smooth(mesh: &ProxyMesh, lambda: f64, iterations: usize) -> Result<ProxyMesh> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing lambda {lambda} outside (0, 1]"
        )));
    }
    if iterations == 0 {
        return Ok(mesh.clone());
    }
    let adj = mesh.neighbors();
    let pinned = mesh.boundary_vertices();
    let mut cur = mesh.positions.clone();
    let mut next = cur.clone();
    for _ in 0..iterations {
        for (v, ring) in adj.iter().enumerate() {
            if ring.is_empty() || pinned[v] {
                next[v] = cur[v];
                continue;
            }
            let centroid =
                ring.iter().map(|&j| cur[j as usize]).sum::<DVec3>() / ring.len() as f64;
            next[v] = cur[v] + lambda * (centroid - cur[v]);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut out = mesh.clone();
    out.positions = cur;
    out.recompute_normals();
    if out.geometric_normals.iter().any(|n| !n.is_finite()) {
        return Err(Error::DegenerateMesh("smoothing collapsed a vertex neighbourhood"));
    }
    out.alt_normals = None;
    out.shading = NormalMode::Geometric;
    Ok(out)
}

/// Keeps positions and stores, as the alternative normal set, the normals of
/// a Laplace-smoothed copy of the mesh.
pub fn attach_smoothed_normals(mesh: &ProxyMesh, params: SmoothingParams) -> Result<ProxyMesh> {
    let smoothed = laplace_smooth(mesh, params.lambda, params.iterations)?;
    let mut out = mesh.clone();
    out.alt_normals = Some(smoothed.geometric_normals);
    Ok(out)
}

pub fn set_shading_normals(mesh: &ProxyMesh, mode: NormalMode) -> Result<ProxyMesh> {
    if mode == NormalMode::SmoothedDepth && mesh.alt_normals.is_none() {
        return Err(Error::MissingAltNormals);
    }
    let mut out = mesh.clone();
    out.shading = mode;
    Ok(out)
}

/// Translates and uniformly scales the mesh so its minimal bounding sphere is
/// centred at the origin with radius [`NORMALIZED_RADIUS`].
pub fn normalize_object(mesh: &ProxyMesh) -> Result<ProxyMesh> {
    let (center, scale) = normalization_transform(&mesh.positions)?;
    let mut out = mesh.clone();
    for p in &mut out.positions {
        *p = (*p - center) * scale;
    }
    Ok(out)
}

/// `(center, scale)` such that `(p - center) * scale` is normalized.
pub(crate) fn normalization_transform(points: &[DVec3]) -> Result<(DVec3, f64)> {
    if points.is_empty() {
        return Err(Error::EmptyMesh("no vertices"));
    }
    let sphere = min_bounding_sphere(points);
    let extent = points
        .iter()
        .map(|p| p.abs().max_element())
        .fold(0f64, f64::max)
        .max(1e-300);
    if !(sphere.radius > 1e-12 * extent) {
        return Err(Error::DegenerateMesh("all vertices coincide"));
    }
    Ok((sphere.center, NORMALIZED_RADIUS / sphere.radius))
}

/// Discrete Dirichlet energy: sum over unique edges of squared edge length.
pub fn dirichlet_energy(mesh: &ProxyMesh) -> f64 {
    mesh.neighbors()
        .iter()
        .enumerate()
        .map(|(i, ring)| {
            ring.iter()
                .filter(|&&j| (j as usize) > i)
                .map(|&j| (mesh.positions[i] - mesh.positions[j as usize]).length_squared())
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{backproject, CameraSpec, DepthMap, ForegroundMask};

    fn camera(w: usize, h: usize) -> CameraSpec {
        CameraSpec::new(DVec3::new(0.0, 0.0, 3.0), DVec3::ZERO, 30.0, w, h)
    }

    fn grid_mesh(w: usize, h: usize, depth: &DepthMap) -> ProxyMesh {
        let cam = camera(w, h);
        let grid = backproject(depth, &ForegroundMask::full(w, h), &cam).unwrap();
        triangulate(&grid, DEFAULT_DISCONTINUITY_RATIO).unwrap()
    }

    /// Regular planar grid in the XY plane, triangulated like a depth quad.
    fn flat_grid(n: usize) -> ProxyMesh {
        let mut positions = Vec::new();
        for y in 0..n {
            for x in 0..n {
                positions.push(DVec3::new(x as f64, y as f64, 0.0) * 0.1);
            }
        }
        let mut tris = Vec::new();
        for y in 0..n - 1 {
            for x in 0..n - 1 {
                let a = (y * n + x) as u32;
                let b = a + 1;
                let d = a + n as u32;
                let c = d + 1;
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
        ProxyMesh::new(positions, tris, MeshSource::SyntheticObject).unwrap()
    }

    fn interior(n: usize) -> impl Iterator<Item = usize> {
        (0..n * n).filter(move |i| {
            let (x, y) = (i % n, i / n);
            x > 0 && y > 0 && x < n - 1 && y < n - 1
        })
    }

    #[test]
    fn full_grid_yields_two_triangles_per_quad() {
        let mesh = grid_mesh(7, 5, &DepthMap::constant(7, 5, 2.0));
        assert_eq!(mesh.triangles.len(), 2 * 6 * 4);
        assert_eq!(mesh.vertex_count(), 35);
    }

    #[test]
    fn flat_plane_normals_face_camera() {
        let mesh = grid_mesh(6, 6, &DepthMap::constant(6, 6, 2.0));
        for n in &mesh.geometric_normals {
            assert!((*n - DVec3::Z).length() < 1e-5, "{n}");
        }
    }

    #[test]
    fn depth_step_is_not_bridged() {
        let (w, h) = (10, 8);
        let mut depth = DepthMap::constant(w, h, 1.0);
        for y in 0..h {
            for x in w / 2..w {
                depth.values[y * w + x] = 10.0;
            }
        }
        let cam = camera(w, h);
        let grid = backproject(&depth, &ForegroundMask::full(w, h), &cam).unwrap();
        let mesh = triangulate(&grid, 4.0).unwrap();
        // brute-force scan: no triangle mixes near and far vertices
        let pixels = mesh.vertex_pixels.as_ref().unwrap();
        for t in &mesh.triangles {
            let sides: Vec<bool> = t.iter().map(|&i| pixels[i as usize][0] as usize >= w / 2).collect();
            assert!(sides.iter().all(|&s| s == sides[0]), "triangle spans the step");
        }
        // quads fully on one side survive
        let near_quads = (w / 2 - 1) * (h - 1);
        let far_quads = (w / 2 - 1) * (h - 1);
        assert_eq!(mesh.triangles.len(), 2 * (near_quads + far_quads));
    }

    #[test]
    fn triangulate_requires_a_full_quad() {
        let cam = camera(4, 4);
        let mut mask = ForegroundMask::empty(4, 4);
        for i in [0, 1, 4] {
            mask.coverage[i] = 1.0;
        }
        let grid = backproject(&DepthMap::constant(4, 4, 1.0), &mask, &cam).unwrap();
        assert!(matches!(triangulate(&grid, 4.0), Err(Error::EmptyMesh(_))));
    }

    #[test]
    fn zero_iterations_is_identity() {
        let mesh = grid_mesh(5, 5, &DepthMap::constant(5, 5, 1.5));
        assert_eq!(laplace_smooth(&mesh, 0.5, 0).unwrap(), mesh);
    }

    #[test]
    fn flat_grid_is_a_fixed_point() {
        let n = 9;
        let mesh = flat_grid(n);
        let out = laplace_smooth(&mesh, 0.7, 15).unwrap();
        assert_eq!(out.triangles, mesh.triangles);
        for i in interior(n) {
            assert!((out.positions[i] - mesh.positions[i]).length() < 1e-6);
        }
        for (i, p) in out.positions.iter().enumerate() {
            assert!(p.z.abs() < 1e-12);
            if !interior(n).any(|j| j == i) {
                assert_eq!(*p, mesh.positions[i], "boundary vertex moved");
            }
        }
    }

    #[test]
    fn spike_matches_direct_umbrella_update() {
        let n = 7;
        let mut mesh = flat_grid(n);
        let spike = 3 * n + 3;
        mesh.positions[spike].z = 0.4;
        let out = laplace_smooth(&mesh, 0.5, 1).unwrap();

        // direct re-implementation: neighbours of a grid vertex under the
        // (a, b, c), (a, c, d) split are the 4-connected pixels plus the two
        // diagonal ones (x+1, y+1) and (x-1, y-1)
        let (x, y) = (3i64, 3i64);
        let ring = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
        let centroid_z: f64 = ring
            .iter()
            .map(|(dx, dy)| mesh.positions[((y + dy) * n as i64 + x + dx) as usize].z)
            .sum::<f64>()
            / 6.0;
        let expected = 0.4 + 0.5 * (centroid_z - 0.4);
        assert!(out.positions[spike].z < 0.4);
        assert_eq!(out.positions[spike].z, expected);
        // a neighbour rises by lambda / its valence of the spike height
        let right = spike + 1;
        assert!((out.positions[right].z - 0.5 * 0.4 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn smoothing_rejects_bad_lambda() {
        let mesh = flat_grid(3);
        assert!(laplace_smooth(&mesh, 0.0, 1).is_err());
        assert!(laplace_smooth(&mesh, 1.5, 1).is_err());
        assert!(laplace_smooth(&mesh, 1.0, 1).is_ok());
    }

    #[test]
    fn shading_normal_selection() {
        let mesh = flat_grid(4);
        let geo = set_shading_normals(&mesh, NormalMode::Geometric).unwrap();
        assert_eq!(geo.shading_normals(), mesh.geometric_normals.as_slice());
        assert!(matches!(
            set_shading_normals(&mesh, NormalMode::SmoothedDepth),
            Err(Error::MissingAltNormals)
        ));
        let with_alt = attach_smoothed_normals(&mesh, SmoothingParams::default()).unwrap();
        let sm = set_shading_normals(&with_alt, NormalMode::SmoothedDepth).unwrap();
        assert_eq!(sm.shading_normals(), with_alt.alt_normals.as_ref().unwrap().as_slice());
        assert_eq!(sm.positions, mesh.positions);
    }

    #[test]
    fn normalize_centres_and_scales() {
        let mut mesh = flat_grid(5);
        for p in &mut mesh.positions {
            *p += DVec3::new(3.0, -1.0, 2.0);
        }
        let out = normalize_object(&mesh).unwrap();
        let max = out.positions.iter().map(|p| p.length()).fold(0.0, f64::max);
        assert!((max - 0.5).abs() < 1e-4);
        let twice = normalize_object(&out).unwrap();
        for (a, b) in out.positions.iter().zip(&twice.positions) {
            assert!((*a - *b).length() < 1e-6);
        }
    }

    #[test]
    fn normalize_rejects_coincident_vertices() {
        let mut mesh = flat_grid(3);
        for p in &mut mesh.positions {
            *p = DVec3::ONE;
        }
        assert!(matches!(normalize_object(&mesh), Err(Error::DegenerateMesh(_))));
    }

    #[test]
    fn obj_export_lists_active_normals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        let mesh = flat_grid(3);
        mesh.write_obj(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 9);
        assert_eq!(text.lines().filter(|l| l.starts_with("vn ")).count(), 9);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 8);
        assert!(text.contains("f 1//1 2//2 5//5"));
    }
}
