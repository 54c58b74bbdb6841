//! Unidirectional path tracer with next-event estimation and power-heuristic
//! MIS for area and environment lights.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::brdf::{eval_brdf, sample_brdf};
use crate::math::DVec3;
use crate::render::bvh::{Ray, TriHit};
use crate::render::scene::{Scene, SceneHit};
use crate::rng::Rng;

/// How emitters with finite extent are sampled. Point lights are always
/// reached by next-event estimation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightStrategy {
    #[default]
    Mis,
    NeeOnly,
    BrdfOnly,
}

pub(crate) struct Tracer<'s, 'a> {
    pub scene: &'s Scene<'a>,
    pub max_bounces: usize,
    pub clamp_indirect: f64,
    pub strategy: LightStrategy,
    pub show_background: bool,
}

#[derive(Default, Clone, Copy)]
pub(crate) struct PathStats {
    pub clamped: u64,
}

struct Interaction {
    p: DVec3,
    ng: DVec3,
    ns: DVec3,
}

const RR_START: usize = 3;

fn power_heuristic(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if a2 + b2 == 0.0 {
        0.0
    } else {
        a2 / (a2 + b2)
    }
}

fn spawn(p: DVec3, ng: DVec3, dir: DVec3) -> Ray {
    let eps = 1e-7 * p.abs().max_element().max(1.0);
    let side = if dir.dot(ng) >= 0.0 { 1.0 } else { -1.0 };
    Ray {
        origin: p + ng * (eps * side),
        dir,
    }
}

impl Tracer<'_, '_> {
    fn interaction(&self, hit: &TriHit, ray: &Ray) -> Interaction {
        let g = self.scene.geometry.as_ref().expect("surface hit implies geometry");
        let tri = g.mesh.triangles[hit.tri as usize];
        let pos = |k: usize| g.mesh.positions[tri[k] as usize];
        let normals = g.mesh.shading_normals();
        let (p0, p1, p2) = (pos(0), pos(1), pos(2));
        let w0 = 1.0 - hit.u - hit.v;
        let p = p0 * w0 + p1 * hit.u + p2 * hit.v;
        let mut ng = (p1 - p0).cross(p2 - p0).normalize();
        let mut ns = (normals[tri[0] as usize] * w0
            + normals[tri[1] as usize] * hit.u
            + normals[tri[2] as usize] * hit.v)
            .normalize_or_zero();
        let wo = -ray.dir;
        if ng.dot(wo) < 0.0 {
            ng = -ng;
            ns = -ns;
        }
        if ns.dot(wo) <= 1e-9 {
            ns = ng;
        }
        Interaction { p, ng, ns }
    }

    fn add(&self, l: &mut DVec3, contrib: DVec3, bounce: usize, stats: &mut PathStats) {
        let m = contrib.max_element();
        if bounce >= 2 && m > self.clamp_indirect {
            *l += contrib * (self.clamp_indirect / m);
            stats.clamped += 1;
        } else {
            *l += contrib;
        }
    }

    /// Returns the radiance estimate and whether the primary ray hit geometry.
    pub fn trace(&self, primary: Ray, rng: &mut Rng, stats: &mut PathStats) -> (DVec3, bool) {
        let scene = self.scene;
        let m = &scene.material;
        let mut l = DVec3::ZERO;
        let mut beta = DVec3::ONE;
        let mut ray = primary;
        let mut bounce = 0;
        let mut last_pdf = 0.0;
        let mut primary_hit = false;
        loop {
            match scene.intersect(&ray) {
                None => {
                    if bounce == 0 {
                        if self.show_background {
                            l += scene.lights.background(ray.dir);
                        }
                        break;
                    }
                    for light in &scene.lights.infinite {
                        let le = light.radiance(ray.dir);
                        if le == DVec3::ZERO {
                            continue;
                        }
                        let w = match self.strategy {
                            LightStrategy::Mis if light.brdf_sampled_only() => 1.0,
                            LightStrategy::Mis => power_heuristic(last_pdf, light.pdf(ray.dir)),
                            LightStrategy::NeeOnly => 0.0,
                            LightStrategy::BrdfOnly => 1.0,
                        };
                        self.add(&mut l, beta * le * w, bounce, stats);
                    }
                    break;
                }
                Some(SceneHit::Emitter { light, t, front }) => {
                    let a = &scene.lights.areas[light];
                    if bounce == 0 {
                        if self.show_background && front {
                            l += a.radiance;
                        }
                        break;
                    }
                    if front {
                        let cos_l = -ray.dir.dot(a.normal);
                        let w = match self.strategy {
                            LightStrategy::Mis => {
                                power_heuristic(last_pdf, a.solid_angle_pdf(t, cos_l))
                            }
                            LightStrategy::NeeOnly => 0.0,
                            LightStrategy::BrdfOnly => 1.0,
                        };
                        self.add(&mut l, beta * a.radiance * w, bounce, stats);
                    }
                    break;
                }
                Some(SceneHit::Surface(hit)) => {
                    if bounce == 0 {
                        primary_hit = true;
                    }
                    if bounce >= self.max_bounces {
                        break;
                    }
                    bounce += 1;
                    let it = self.interaction(&hit, &ray);
                    let wo = -ray.dir;
                    let direct = self.next_event(&it, wo, rng);
                    self.add(&mut l, beta * direct, bounce, stats);

                    if bounce > RR_START {
                        let q = beta.max_element().min(0.95);
                        if rng.random::<f64>() >= q {
                            break;
                        }
                        beta /= q;
                    }
                    let Some(s) = sample_brdf(m, wo, it.ns, rng) else {
                        break;
                    };
                    if s.incoming.dot(it.ng) <= 0.0 {
                        break;
                    }
                    beta *= s.weight;
                    last_pdf = s.pdf;
                    ray = spawn(it.p, it.ng, s.incoming);
                }
            }
        }
        (l, primary_hit)
    }

    /// Light sampled at a surface vertex, one sample per light.
    fn next_event(&self, it: &Interaction, wo: DVec3, rng: &mut Rng) -> DVec3 {
        let scene = self.scene;
        let m = &scene.material;
        let mut sum = DVec3::ZERO;
        let mis = self.strategy == LightStrategy::Mis;

        for pl in &scene.lights.points {
            let to = pl.position - it.p;
            let d2 = to.length_squared();
            let d = d2.sqrt();
            let wi = to / d;
            if wi.dot(it.ng) <= 0.0 {
                continue;
            }
            let f = eval_brdf(m, wi, wo, it.ns);
            if f == DVec3::ZERO {
                continue;
            }
            let shadow = spawn(it.p, it.ng, wi);
            if scene.occluded(&shadow, (pl.position - shadow.origin).length() * (1.0 - 1e-9), None) {
                continue;
            }
            sum += f * wi.dot(it.ns) * pl.intensity / d2;
        }

        if self.strategy == LightStrategy::BrdfOnly {
            return sum;
        }

        for (i, a) in scene.lights.areas.iter().enumerate() {
            let q = a.sample_point(rng);
            let to = q - it.p;
            let d = to.length();
            let wi = to / d;
            let cos_l = -wi.dot(a.normal);
            if cos_l <= 0.0 || wi.dot(it.ng) <= 0.0 {
                continue;
            }
            let f = eval_brdf(m, wi, wo, it.ns);
            if f == DVec3::ZERO {
                continue;
            }
            let pdf_l = a.solid_angle_pdf(d, cos_l);
            let shadow = spawn(it.p, it.ng, wi);
            if scene.occluded(&shadow, (q - shadow.origin).length() * (1.0 - 1e-9), Some(i)) {
                continue;
            }
            let w = if mis {
                power_heuristic(pdf_l, crate::brdf::pdf_brdf(m, wi, wo, it.ns))
            } else {
                1.0
            };
            sum += f * wi.dot(it.ns) * a.radiance * (w / pdf_l);
        }

        for light in &scene.lights.infinite {
            if mis && light.brdf_sampled_only() {
                continue;
            }
            let (wi, pdf_l) = light.sample(rng);
            if !(pdf_l > 0.0) || wi.dot(it.ng) <= 0.0 {
                continue;
            }
            let f = eval_brdf(m, wi, wo, it.ns);
            if f == DVec3::ZERO {
                continue;
            }
            let le = light.radiance(wi);
            if le == DVec3::ZERO {
                continue;
            }
            if scene.occluded(&spawn(it.p, it.ng, wi), f64::INFINITY, None) {
                continue;
            }
            let w = if mis {
                power_heuristic(pdf_l, crate::brdf::pdf_brdf(m, wi, wo, it.ns))
            } else {
                1.0
            };
            sum += f * wi.dot(it.ns) * le * (w / pdf_l);
        }
        sum
    }
}
