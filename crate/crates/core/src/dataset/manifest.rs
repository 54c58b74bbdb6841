//! Corpus configuration and the manifest: a JSON header next to a JSON Lines
//! file with one [`SampleRecord`] per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::protocol::{compose_training_pair, SampleRecord, SLATE_COUNTS, VIEWS_PER_OBJECT};
use crate::error::{Error, Result};
use crate::lighting::LightingCategory;
use crate::rng::rng_from;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub(crate) const TAG_PAIRS: u64 = 0x5041_4952;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub seed: u64,
    pub objects: u32,
    /// Square render resolution, pixels.
    pub resolution: usize,
    pub samples_per_pixel: u32,
    pub max_bounces: usize,
    pub hint_count: usize,
    /// Training pairs in the manifest; `None` gives one per render.
    pub records: Option<usize>,
    pub env_maps: usize,
    /// Width of each procedural environment map, texels.
    pub env_width: usize,
    /// Icosphere subdivision level of the procedural meshes.
    pub object_detail: u32,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            seed: 0,
            objects: 16,
            resolution: 256,
            samples_per_pixel: 256,
            max_bounces: 6,
            hint_count: 4,
            records: None,
            env_maps: 8,
            env_width: 128,
            object_detail: 5,
        }
    }
}

impl DatasetConfig {
    pub fn record_count(&self) -> usize {
        self.records
            .unwrap_or(self.objects as usize * VIEWS_PER_OBJECT * SLATE_COUNTS.iter().sum::<usize>())
    }

    pub fn validate(&self) -> Result<()> {
        crate::brdf::hint_materials(self.hint_count)?;
        if self.objects == 0 {
            return Err(Error::InvalidParameter("at least one object is required".into()));
        }
        if self.resolution < 2 {
            return Err(Error::InvalidParameter("resolution must be ≥ 2".into()));
        }
        if self.samples_per_pixel == 0 || self.max_bounces == 0 {
            return Err(Error::InvalidParameter("spp and max bounces must be ≥ 1".into()));
        }
        if self.env_maps == 0 {
            return Err(Error::EmptyEnvPool);
        }
        if self.env_width < 2 || !self.env_width.is_multiple_of(2) {
            return Err(Error::InvalidParameter("environment width must be even and ≥ 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub config: DatasetConfig,
    /// Conditions per category in every object's slate.
    pub category_ratio: [usize; 5],
    pub records: Vec<SampleRecord>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    seed: u64,
    config: DatasetConfig,
    category_ratio: [usize; 5],
    record_count: usize,
    records_file: String,
}

/// Category of each slot in an object's slate.
pub fn slate_categories() -> Vec<LightingCategory> {
    LightingCategory::ALL
        .iter()
        .zip(SLATE_COUNTS)
        .flat_map(|(&c, n)| std::iter::repeat_n(c, n))
        .collect()
}

/// Pairs records from the configuration alone; no renders are needed since
/// every slate has the same category layout.
pub fn compose_manifest(config: &DatasetConfig) -> Result<DatasetManifest> {
    config.validate()?;
    let slate = slate_categories();
    let mut rng = rng_from(config.seed, &[TAG_PAIRS]);
    let records = (0..config.record_count())
        .map(|_| {
            let object = rng.random_range(0..config.objects);
            let view = rng.random_range(0..VIEWS_PER_OBJECT as u32);
            compose_training_pair(object, view, &slate, config.hint_count, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        seed: config.seed,
        config: *config,
        category_ratio: SLATE_COUNTS,
        records,
    })
}

pub fn records_path(header: &Path) -> PathBuf {
    header.with_extension("jsonl")
}

/// Writes the header to `path` and the records beside it as `.jsonl`.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let lines = records_path(path);
    let header = Header {
        schema_version: manifest.schema_version,
        seed: manifest.seed,
        config: manifest.config,
        category_ratio: manifest.category_ratio,
        record_count: manifest.records.len(),
        records_file: lines.file_name().unwrap().to_string_lossy().into_owned(),
    };
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n").map_err(|e| Error::io(path, e))?;
    let file = fs::File::create(&lines).map_err(|e| Error::io(&lines, e))?;
    let mut w = BufWriter::new(file);
    for r in &manifest.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(&lines, e))?;
    }
    w.flush().map_err(|e| Error::io(&lines, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::CorruptManifest(format!("header: {e}")))?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptManifest("header lacks schema_version".into()))?;
    if found != MANIFEST_SCHEMA_VERSION as u64 {
        return Err(Error::SchemaMismatch {
            expected: MANIFEST_SCHEMA_VERSION,
            found: found.min(u32::MAX as u64) as u32,
        });
    }
    let header: Header =
        serde_json::from_value(value).map_err(|e| Error::CorruptManifest(format!("header: {e}")))?;
    let lines = path.with_file_name(&header.records_file);
    let file = fs::File::open(&lines).map_err(|e| Error::io(&lines, e))?;
    let mut records = Vec::with_capacity(header.record_count);
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&lines, e))?;
        if line.is_empty() {
            continue;
        }
        let r: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::CorruptManifest(format!("record line {}: {e}", n + 1)))?;
        records.push(r);
    }
    if records.len() != header.record_count {
        return Err(Error::CorruptManifest(format!(
            "header promises {} records, file holds {}",
            header.record_count,
            records.len()
        )));
    }
    Ok(DatasetManifest {
        schema_version: header.schema_version,
        seed: header.seed,
        config: header.config,
        category_ratio: header.category_ratio,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        DatasetConfig {
            seed: 11,
            objects: 3,
            records: Some(200),
            ..Default::default()
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = compose_manifest(&small()).unwrap();
        write_manifest(&m, &path).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), m);
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a/manifest.json"), dir.path().join("b/manifest.json"));
        fs::create_dir_all(a.parent().unwrap()).unwrap();
        fs::create_dir_all(b.parent().unwrap()).unwrap();
        write_manifest(&compose_manifest(&small()).unwrap(), &a).unwrap();
        write_manifest(&compose_manifest(&small()).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read(records_path(&a)).unwrap(), fs::read(records_path(&b)).unwrap());
    }

    #[test]
    fn tampered_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_manifest(&compose_manifest(&small()).unwrap(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            read_manifest(&path),
            Err(Error::SchemaMismatch { expected: 1, found: 7 })
        ));
    }

    #[test]
    fn truncated_records_are_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_manifest(&compose_manifest(&small()).unwrap(), &path).unwrap();
        let lines = records_path(&path);
        let text = fs::read_to_string(&lines).unwrap();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        fs::write(&lines, cut).unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::CorruptManifest(_))));
        fs::write(&lines, "{not json}\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::CorruptManifest(_))));
    }

    #[test]
    fn default_record_count() {
        let c = DatasetConfig {
            objects: 2,
            ..Default::default()
        };
        assert_eq!(c.record_count(), 96);
    }
}
