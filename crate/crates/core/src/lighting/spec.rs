use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lighting::EnvMap;
use crate::math::{spherical_y_up, DVec3};
use crate::rng::Rng;

/// Radiance of the uniform ambient term per watt of equivalent power.
pub const AMBIENT_RADIANCE_PER_WATT: f64 = 1.0 / (4.0 * PI * PI);

/// Largest polar angle (from +Y) of sampled point and area lights.
pub const LIGHT_MAX_POLAR_DEG: f64 = 60.0;
pub const LIGHT_RADIUS_RANGE: (f64, f64) = (4.0, 5.0);
pub const LIGHT_POWER_RANGE: (f64, f64) = (500.0, 1500.0);
pub const AREA_EDGE_RANGE: (f64, f64) = (5.0, 10.0);

const AMBIENT_WATTS: f64 = 1.0;

fn white() -> DVec3 {
    DVec3::ONE
}

fn unit_scale() -> f64 {
    1.0
}

/// One light source. Powers are in watts, positions in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Light {
    /// Isotropic point light with intensity `power / 4π` W/sr.
    Point {
        position: DVec3,
        power: f64,
        #[serde(default = "white")]
        color: DVec3,
    },
    /// One-sided square emitter facing `normal`, with radiance
    /// `power / (π · edge²)`.
    Area {
        center: DVec3,
        normal: DVec3,
        edge_length: f64,
        power: f64,
        #[serde(default = "white")]
        color: DVec3,
    },
    /// Environment map from the pool, rotated about +Y by `rotation` radians.
    Environment {
        map: String,
        #[serde(default)]
        rotation: f64,
        #[serde(default)]
        monochrome: bool,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    /// Constant radiance from every direction.
    UniformAmbient { radiance: DVec3 },
}

impl Light {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Light::Point { position, power, color } => {
                if !(*power > 0.0 && power.is_finite()) || !position.is_finite() {
                    return bad(format!("point light power {power} must be positive"));
                }
                if color.min_element() < 0.0 {
                    return bad("negative light color".into());
                }
            }
            Light::Area {
                center,
                normal,
                edge_length,
                power,
                color,
            } => {
                if !(*power > 0.0 && power.is_finite()) || !(*edge_length > 0.0) {
                    return bad("area light power and edge length must be positive".into());
                }
                if !center.is_finite() || normal.length() < 1e-9 || color.min_element() < 0.0 {
                    return bad("invalid area light geometry or color".into());
                }
            }
            Light::Environment { scale, rotation, .. } => {
                if !(*scale > 0.0) || !rotation.is_finite() {
                    return bad("environment scale must be positive".into());
                }
            }
            Light::UniformAmbient { radiance } => {
                if radiance.min_element() < 0.0 || !radiance.is_finite() {
                    return bad("ambient radiance must be non-negative".into());
                }
            }
        }
        Ok(())
    }
}

/// The five training lighting categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingCategory {
    Point,
    MultiPoint,
    Environment,
    MonochromeEnvironment,
    Area,
}

impl LightingCategory {
    pub const ALL: [LightingCategory; 5] = [
        LightingCategory::Point,
        LightingCategory::MultiPoint,
        LightingCategory::Environment,
        LightingCategory::MonochromeEnvironment,
        LightingCategory::Area,
    ];

    /// 1-based category number.
    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_index(n: u8) -> Result<Self> {
        match n {
            1..=5 => Ok(Self::ALL[n as usize - 1]),
            _ => Err(Error::InvalidParameter(format!(
                "lighting category {n} outside 1..=5"
            ))),
        }
    }

    pub fn needs_env(self) -> bool {
        matches!(
            self,
            LightingCategory::Environment | LightingCategory::MonochromeEnvironment
        )
    }

    /// Colored environment lighting is never used for training inputs.
    pub fn is_colored_environment(self) -> bool {
        self == LightingCategory::Environment
    }
}

/// A composite lighting condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<LightingCategory>,
    pub lights: Vec<Light>,
}

impl LightingSpec {
    pub fn new(lights: Vec<Light>) -> Self {
        LightingSpec {
            category: None,
            lights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lights.is_empty() {
            return Err(Error::InvalidParameter("lighting has no lights".into()));
        }
        self.lights.iter().try_for_each(Light::validate)
    }

    pub fn point_lights(&self) -> impl Iterator<Item = (DVec3, f64)> + '_ {
        self.lights.iter().filter_map(|l| match l {
            Light::Point { position, power, .. } => Some((*position, *power)),
            _ => None,
        })
    }

    pub fn env_names(&self) -> impl Iterator<Item = &str> {
        self.lights.iter().filter_map(|l| match l {
            Light::Environment { map, .. } => Some(map.as_str()),
            _ => None,
        })
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: LightingSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Named environment maps, ordered by name.
#[derive(Clone, Debug, Default)]
pub struct EnvPool {
    maps: BTreeMap<String, Arc<EnvMap>>,
}

impl EnvPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, map: EnvMap) {
        self.maps.insert(name.into(), Arc::new(map));
    }

    pub fn get(&self, name: &str) -> Result<&Arc<EnvMap>> {
        self.maps
            .get(name)
            .ok_or_else(|| Error::UnknownEnvMap(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.maps.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Loads every environment referenced by `spec` from files, resolving
    /// relative names against `base`.
    pub fn load_for(spec: &LightingSpec, base: &Path) -> Result<Self> {
        let mut pool = EnvPool::new();
        for name in spec.env_names() {
            if pool.maps.contains_key(name) {
                continue;
            }
            let path = base.join(name);
            pool.insert(name, EnvMap::load(&path)?);
        }
        Ok(pool)
    }
}

fn uniform_in(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Direction area-uniform on the spherical cap of polar angle ≤ 60° about +Y.
fn cap_direction(rng: &mut Rng) -> DVec3 {
    let cos_max = LIGHT_MAX_POLAR_DEG.to_radians().cos();
    let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
    let azimuth = 2.0 * PI * rng.random::<f64>();
    spherical_y_up(cos_t.acos(), azimuth)
}

fn ambient() -> Light {
    Light::UniformAmbient {
        radiance: DVec3::splat(AMBIENT_WATTS * AMBIENT_RADIANCE_PER_WATT),
    }
}

fn point_light(rng: &mut Rng) -> Light {
    let dir = cap_direction(rng);
    let radius = uniform_in(rng, LIGHT_RADIUS_RANGE);
    Light::Point {
        position: dir * radius,
        power: uniform_in(rng, LIGHT_POWER_RANGE),
        color: DVec3::ONE,
    }
}

/// Draws a lighting condition of the given category. Point and area
/// categories carry a 1 W uniform white ambient.
pub fn sample_lighting(category: LightingCategory, pool: &EnvPool, rng: &mut Rng) -> Result<LightingSpec> {
    let lights = match category {
        LightingCategory::Point => vec![point_light(rng), ambient()],
        LightingCategory::MultiPoint => {
            let mut l: Vec<Light> = (0..3).map(|_| point_light(rng)).collect();
            l.push(ambient());
            l
        }
        LightingCategory::Environment | LightingCategory::MonochromeEnvironment => {
            if pool.is_empty() {
                return Err(Error::EmptyEnvPool);
            }
            let k = rng.random_range(0..pool.len());
            let map = pool.names().nth(k).unwrap().to_owned();
            vec![Light::Environment {
                map,
                rotation: 2.0 * PI * rng.random::<f64>(),
                monochrome: category == LightingCategory::MonochromeEnvironment,
                scale: 1.0,
            }]
        }
        LightingCategory::Area => {
            let dir = cap_direction(rng);
            let radius = uniform_in(rng, LIGHT_RADIUS_RANGE);
            vec![
                Light::Area {
                    center: dir * radius,
                    normal: -dir,
                    edge_length: uniform_in(rng, AREA_EDGE_RANGE),
                    power: uniform_in(rng, LIGHT_POWER_RANGE),
                    color: DVec3::ONE,
                },
                ambient(),
            ]
        }
    };
    Ok(LightingSpec {
        category: Some(category),
        lights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn pool() -> EnvPool {
        let mut p = EnvPool::new();
        p.insert("a", EnvMap::uniform(8, [1.0, 0.5, 0.2]));
        p.insert("b", EnvMap::uniform(8, [0.2, 0.5, 1.0]));
        p
    }

    #[test]
    fn point_category_ranges() {
        for seed in 0..200 {
            let mut rng = Rng::seed_from_u64(seed);
            let spec = sample_lighting(LightingCategory::Point, &pool(), &mut rng).unwrap();
            let points: Vec<_> = spec.point_lights().collect();
            assert_eq!(points.len(), 1);
            let (p, w) = points[0];
            let polar = (p.y / p.length()).acos().to_degrees();
            assert!(polar <= 60.0 + 1e-9);
            assert!((4.0..=5.0).contains(&p.length()));
            assert!((500.0..=1500.0).contains(&w));
            let ambient: Vec<_> = spec
                .lights
                .iter()
                .filter_map(|l| match l {
                    Light::UniformAmbient { radiance } => Some(*radiance),
                    _ => None,
                })
                .collect();
            assert_eq!(ambient, vec![DVec3::splat(AMBIENT_RADIANCE_PER_WATT)]);
        }
    }

    #[test]
    fn multi_point_has_three_lights() {
        let mut rng = Rng::seed_from_u64(9);
        let spec = sample_lighting(LightingCategory::MultiPoint, &pool(), &mut rng).unwrap();
        assert_eq!(spec.point_lights().count(), 3);
    }

    #[test]
    fn area_light_is_aimed_at_origin() {
        let mut rng = Rng::seed_from_u64(4);
        let spec = sample_lighting(LightingCategory::Area, &pool(), &mut rng).unwrap();
        let Light::Area { center, normal, edge_length, power, .. } = &spec.lights[0] else {
            panic!("expected area light");
        };
        assert!((5.0..=10.0).contains(edge_length));
        assert!((500.0..=1500.0).contains(power));
        assert!((center.normalize() + *normal).length() < 1e-12);
    }

    #[test]
    fn env_categories_need_a_pool() {
        let mut rng = Rng::seed_from_u64(1);
        let empty = EnvPool::new();
        assert!(matches!(
            sample_lighting(LightingCategory::Environment, &empty, &mut rng),
            Err(Error::EmptyEnvPool)
        ));
        let spec = sample_lighting(LightingCategory::MonochromeEnvironment, &pool(), &mut rng).unwrap();
        assert!(matches!(spec.lights[0], Light::Environment { monochrome: true, .. }));
    }

    #[test]
    fn json_schema_uses_type_tag() {
        let spec = LightingSpec::new(vec![
            Light::Point {
                position: DVec3::new(0.0, 4.0, 0.0),
                power: 1000.0,
                color: DVec3::ONE,
            },
            Light::UniformAmbient {
                radiance: DVec3::splat(0.1),
            },
        ]);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""type":"point""#));
        assert!(text.contains(r#""type":"uniform_ambient""#));
        let back: LightingSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let minimal: LightingSpec = serde_json::from_str(
            r#"{"lights":[{"type":"environment","map":"sky.hdr"},{"type":"point","position":[1,2,3],"power":5}]}"#,
        )
        .unwrap();
        assert!(matches!(&minimal.lights[0], Light::Environment { rotation, scale, .. } if *rotation == 0.0 && *scale == 1.0));
        assert!(matches!(&minimal.lights[1], Light::Point { color, .. } if *color == DVec3::ONE));
    }

    #[test]
    fn rejects_non_positive_power() {
        let spec = LightingSpec::new(vec![Light::Point {
            position: DVec3::Y,
            power: 0.0,
            color: DVec3::ONE,
        }]);
        assert!(spec.validate().is_err());
        assert!(LightingSpec::new(vec![]).validate().is_err());
    }

    #[test]
    fn category_indices() {
        for (i, c) in LightingCategory::ALL.iter().enumerate() {
            assert_eq!(c.index() as usize, i + 1);
            assert_eq!(LightingCategory::from_index(c.index()).unwrap(), *c);
        }
        assert!(LightingCategory::from_index(0).is_err());
        assert!(LightingCategory::from_index(6).is_err());
    }
}
