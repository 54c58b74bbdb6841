//! Procedural stand-in objects with closed-form implicit surfaces, so every
//! mesh has an analytic depth and mask for any camera.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_object, CameraSpec, DepthMap, ForegroundMask, MeshSource, ProxyMesh};
use crate::geometry::normalization_transform;
use crate::math::DVec3;
use crate::render::{Bvh, Ray};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProceduralKind {
    Sphere,
    RoundedBox,
    Torus,
    BumpySphere,
}

impl ProceduralKind {
    pub const ALL: [ProceduralKind; 4] = [
        ProceduralKind::Sphere,
        ProceduralKind::RoundedBox,
        ProceduralKind::Torus,
        ProceduralKind::BumpySphere,
    ];
}

/// Shape parameters in the object's raw (pre-normalization) frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    RoundedBox { half_extents: DVec3, corner: f64 },
    Torus { major: f64, minor: f64 },
    BumpySphere { amplitude: f64, frequency: DVec3, phase: DVec3 },
}

/// Upper bound on the gradient norm of the implicit, used as a safe
/// sphere-tracing step scale.
fn lipschitz(shape: &Shape) -> f64 {
    match *shape {
        Shape::BumpySphere { amplitude, frequency, .. } => 1.0 + amplitude * frequency.length() * 2.0,
        _ => 1.0,
    }
}

impl Shape {
    /// Negative inside, positive outside. Exact distance for all but the
    /// bumpy sphere.
    pub fn implicit(&self, p: DVec3) -> f64 {
        match *self {
            Shape::Sphere { radius } => p.length() - radius,
            Shape::RoundedBox { half_extents, corner } => {
                let q = p.abs() - half_extents + DVec3::splat(corner);
                q.max(DVec3::ZERO).length() + q.max_element().min(0.0) - corner
            }
            Shape::Torus { major, minor } => {
                let ring = (p.x * p.x + p.z * p.z).sqrt() - major;
                (ring * ring + p.y * p.y).sqrt() - minor
            }
            Shape::BumpySphere { .. } => {
                let r = p.length();
                if r < 1e-12 {
                    return -self.radial(DVec3::Y);
                }
                r - self.radial(p / r)
            }
        }
    }

    /// Surface radius along a unit direction, for star-shaped kinds.
    fn radial(&self, d: DVec3) -> f64 {
        match *self {
            Shape::BumpySphere { amplitude, frequency, phase } => {
                let s = (frequency.x * d.x + phase.x).sin()
                    * (frequency.y * d.y + phase.y).sin()
                    * (frequency.z * d.z + phase.z).sin();
                1.0 + amplitude * s
            }
            _ => unreachable!("radial is only defined for the bumpy sphere"),
        }
    }

    fn bound_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::RoundedBox { half_extents, .. } => half_extents.length(),
            Shape::Torus { major, minor } => major + minor,
            Shape::BumpySphere { amplitude, .. } => 1.0 + amplitude,
        }
    }

    /// First positive crossing of the surface along `o + t d`, `d` unit.
    pub fn intersect(&self, o: DVec3, d: DVec3) -> Option<f64> {
        let r = self.bound_radius() * 1.001;
        let b = o.dot(d);
        let disc = b * b - (o.length_squared() - r * r);
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let (t_in, t_out) = ((-b - sq).max(0.0), -b + sq);
        if t_out <= 0.0 {
            return None;
        }
        if let Shape::Sphere { radius } = *self {
            let disc = b * b - (o.length_squared() - radius * radius);
            if disc < 0.0 {
                return None;
            }
            let t = -b - disc.sqrt();
            return (t > 0.0).then_some(t);
        }
        let lip = lipschitz(self);
        let eps = 1e-10 * r;
        let mut t = t_in;
        let mut prev = t;
        while t < t_out {
            let f = self.implicit(o + d * t);
            if f <= eps {
                if f < 0.0 {
                    let (mut lo, mut hi) = (prev, t);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if self.implicit(o + d * mid) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    return Some(0.5 * (lo + hi));
                }
                return Some(t);
            }
            prev = t;
            t += (f / lip).max(eps);
        }
        None
    }

    /// Point where the ray from the origin along `d` leaves the solid.
    fn project_from_origin(&self, d: DVec3) -> DVec3 {
        if let Shape::BumpySphere { .. } = self {
            return d * self.radial(d);
        }
        let (mut lo, mut hi) = (0.0, self.bound_radius() * 1.01);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.implicit(d * mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d * 0.5 * (lo + hi)
    }
}

/// Geodesic sphere from a subdivided icosahedron, outward winding.
pub fn icosphere(subdivisions: u32, radius: f64) -> ProxyMesh {
    let (positions, triangles) = icosphere_directions(subdivisions);
    let positions = positions.into_iter().map(|d| d * radius).collect();
    ProxyMesh::new(positions, triangles, MeshSource::SyntheticObject).expect("icosphere is well formed")
}

fn icosphere_directions(subdivisions: u32) -> (Vec<DVec3>, Vec<[u32; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<DVec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<DVec3>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

fn torus_mesh(major: f64, minor: f64, nu: usize, nv: usize) -> Result<ProxyMesh> {
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let ring = major + minor * v.cos();
            positions.push(DVec3::new(ring * u.cos(), minor * v.sin(), ring * u.sin()));
        }
    }
    let id = |i: usize, j: usize| ((i % nu) * nv + (j % nv)) as u32;
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }
    ProxyMesh::new(positions, triangles, MeshSource::SyntheticObject)
}

/// A normalized procedural mesh together with its exact implicit surface.
#[derive(Clone, Debug)]
pub struct ProceduralObject {
    pub kind: ProceduralKind,
    pub shape: Shape,
    pub mesh: ProxyMesh,
    /// Raw-frame point mapped to the origin by normalization.
    pub center: DVec3,
    /// Uniform scale from the raw frame to the normalized frame.
    pub scale: f64,
}

/// Mesh resolution knob: icosphere subdivision level (torus rings follow).
pub const DEFAULT_OBJECT_DETAIL: u32 = 5;

pub fn gen_procedural_object(kind: ProceduralKind, rng: &mut Rng) -> Result<ProceduralObject> {
    build_object(kind, rng, DEFAULT_OBJECT_DETAIL)
}

pub fn build_object(kind: ProceduralKind, rng: &mut Rng, detail: u32) -> Result<ProceduralObject> {
    let shape = match kind {
        ProceduralKind::Sphere => Shape::Sphere { radius: 1.0 },
        ProceduralKind::RoundedBox => {
            let h = DVec3::new(
                rng.random_range(0.5..1.0),
                rng.random_range(0.5..1.0),
                rng.random_range(0.5..1.0),
            );
            Shape::RoundedBox {
                half_extents: h,
                corner: rng.random_range(0.1..0.3) * h.min_element(),
            }
        }
        ProceduralKind::Torus => Shape::Torus {
            major: 1.0,
            minor: rng.random_range(0.25..0.45),
        },
        ProceduralKind::BumpySphere => Shape::BumpySphere {
            amplitude: rng.random_range(0.05..0.12),
            frequency: DVec3::new(
                rng.random_range(3.0..7.0),
                rng.random_range(3.0..7.0),
                rng.random_range(3.0..7.0),
            ),
            phase: DVec3::new(
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            ),
        },
    };
    let raw = match shape {
        Shape::Torus { major, minor } => {
            let nu = 8 << detail.min(6);
            torus_mesh(major, minor, nu, (nu as f64 * minor / major).ceil().max(8.0) as usize)?
        }
        _ => {
            let (dirs, tris) = icosphere_directions(detail);
            let positions = dirs.into_iter().map(|d| shape.project_from_origin(d)).collect();
            ProxyMesh::new(positions, tris, MeshSource::SyntheticObject)?
        }
    };
    let (center, scale) = normalization_transform(&raw.positions)?;
    let mesh = normalize_object(&raw)?;
    Ok(ProceduralObject {
        kind,
        shape,
        mesh,
        center,
        scale,
    })
}

impl ProceduralObject {
    /// Z-depth of the implicit along a normalized-frame ray (`dir` need not
    /// be unit; the returned `t` is in units of `dir`).
    pub fn intersect(&self, origin: DVec3, dir: DVec3) -> Option<f64> {
        let len = dir.length();
        let o = origin / self.scale + self.center;
        let t_raw = self.shape.intersect(o, dir / len)?;
        Some(t_raw * self.scale / len)
    }

    /// Exact depth and binary mask of the implicit surface.
    pub fn analytic_depth(&self, camera: &CameraSpec) -> Result<(DepthMap, ForegroundMask)> {
        camera.validate()?;
        per_pixel_depth(camera, |dir| self.intersect(camera.eye, dir))
    }
}

/// Depth and mask by casting pixel-centre rays against a mesh.
pub fn mesh_depth(mesh: &ProxyMesh, camera: &CameraSpec) -> Result<(DepthMap, ForegroundMask)> {
    camera.validate()?;
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh("nothing to cast against"));
    }
    let bvh = Bvh::build(mesh);
    per_pixel_depth(camera, |dir| {
        bvh.intersect(&Ray { origin: camera.eye, dir }, f64::INFINITY).map(|h| h.t)
    })
}

fn per_pixel_depth(
    camera: &CameraSpec,
    hit: impl Fn(DVec3) -> Option<f64> + Sync,
) -> Result<(DepthMap, ForegroundMask)> {
    use rayon::prelude::*;
    let (w, h) = (camera.width, camera.height);
    let samples: Vec<Option<f64>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let local = camera.camera_ray((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            // unit forward component, so t along this ray is z-depth
            hit(camera.camera_to_world_dir(local))
        })
        .collect();
    let depth = samples.iter().map(|s| s.map_or(0.0, |t| t as f32)).collect();
    let cover = samples.iter().map(|s| if s.is_some() { 1.0 } else { 0.0 }).collect();
    Ok((DepthMap::new(w, h, depth), ForegroundMask::new(w, h, cover)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn icosphere_counts_and_winding() {
        let m = icosphere(2, 1.0);
        assert_eq!(m.vertex_count(), 162);
        assert_eq!(m.triangles.len(), 320);
        for (p, n) in m.positions.iter().zip(&m.geometric_normals) {
            assert!((p.length() - 1.0).abs() < 1e-12);
            assert!(n.dot(*p) > 0.99);
        }
        assert!(m.boundary_vertices().iter().all(|b| !b));
    }

    #[test]
    fn sphere_vertices_on_normalized_radius() {
        let obj = gen_procedural_object(ProceduralKind::Sphere, &mut rng_from(1, &[])).unwrap();
        for p in &obj.mesh.positions {
            assert!((p.length() - 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn every_kind_is_closed_and_outward() {
        for (k, kind) in ProceduralKind::ALL.into_iter().enumerate() {
            let obj = build_object(kind, &mut rng_from(9, &[k as u64]), 3).unwrap();
            assert!(obj.mesh.boundary_vertices().iter().all(|b| !b), "{kind:?} has a boundary");
            let max_r = obj.mesh.positions.iter().map(|p| p.length()).fold(0.0, f64::max);
            assert!((max_r - 0.5).abs() < 1e-9);
            // the divergence theorem gives a positive volume for outward winding
            let vol: f64 = obj
                .mesh
                .triangles
                .iter()
                .map(|t| {
                    let [a, b, c] = t.map(|i| obj.mesh.positions[i as usize]);
                    a.dot(b.cross(c)) / 6.0
                })
                .sum();
            assert!(vol > 0.0, "{kind:?} volume {vol}");
            for p in &obj.mesh.positions {
                let raw = *p / obj.scale + obj.center;
                assert!(obj.shape.implicit(raw).abs() < 1e-6, "{kind:?} vertex off surface");
            }
        }
    }

    #[test]
    fn sphere_depth_at_centre() {
        let obj = gen_procedural_object(ProceduralKind::Sphere, &mut rng_from(2, &[])).unwrap();
        let cam = CameraSpec::new(DVec3::new(0.0, 0.0, 1.0), DVec3::ZERO, 28.0, 65, 65);
        let (depth, mask) = obj.analytic_depth(&cam).unwrap();
        assert!(mask.is_foreground(32 * 65 + 32));
        assert!((depth.get(32, 32) - 0.5).abs() < 1e-6);
        let far = CameraSpec::new(DVec3::new(0.0, 0.0, 3.0), DVec3::ZERO, 28.0, 65, 65);
        let (_, mask) = obj.analytic_depth(&far).unwrap();
        assert!(!mask.is_foreground(0));
        assert!(mask.is_foreground(32 * 65 + 32));
    }

    #[test]
    fn torus_ray_through_hole_misses() {
        let obj = build_object(ProceduralKind::Torus, &mut rng_from(3, &[]), 3).unwrap();
        assert!(obj.intersect(DVec3::new(0.0, 3.0, 0.0), -DVec3::Y).is_none());
        let t = obj.intersect(DVec3::new(0.0, 0.0, 3.0), -DVec3::Z).unwrap();
        assert!((t - 2.5).abs() < 1e-9);
    }

    #[test]
    fn rounded_box_sdf_on_face() {
        let s = Shape::RoundedBox {
            half_extents: DVec3::new(1.0, 0.5, 0.7),
            corner: 0.1,
        };
        assert!(s.implicit(DVec3::new(1.0, 0.0, 0.0)).abs() < 1e-12);
        assert!((s.implicit(DVec3::new(2.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
        let t = s.intersect(DVec3::new(0.0, 3.0, 0.0), -DVec3::Y).unwrap();
        assert!((t - 2.5).abs() < 1e-9);
    }
}
