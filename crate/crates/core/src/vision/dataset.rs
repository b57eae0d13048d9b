use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::{augment, AugmentationConfig};
use super::deformation::{class_from_position, ground_truth_deformation, DeformationClass, STROKE_MM};
use super::edges::DEFAULT_EDGE_THRESHOLD;
use super::frame::FrameFormat;
use super::pipeline::{measure_area, FeatureScale};
use super::regress::AreaSample;
use super::render::{render_frame, SceneGeometry};
use crate::VisionError;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const AUGMENTED_FILE: &str = "augmented.csv";
pub const META_FILE: &str = "dataset.json";
pub const SPLIT_FILES: [&str; 3] = ["split_train.csv", "split_val.csv", "split_test.csv"];
const FRAMES_DIR: &str = "frames";

/// Where knife positions for the base frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositionSampler {
    /// Independent uniform draws.
    Uniform { min_mm: f64, max_mm: f64 },
    /// Evenly spaced, both ends included.
    Grid { min_mm: f64, max_mm: f64 },
    /// The listed positions, repeated in order as needed.
    Fixed { positions_mm: Vec<f64> },
}

impl Default for PositionSampler {
    fn default() -> Self {
        PositionSampler::Uniform {
            min_mm: 0.0,
            max_mm: STROKE_MM,
        }
    }
}

impl PositionSampler {
    pub fn positions(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>, VisionError> {
        let check = |lo: f64, hi: f64| {
            if lo < 0.0 || hi > STROKE_MM || lo > hi || !lo.is_finite() || !hi.is_finite() {
                Err(VisionError::Config(format!("sampler range [{lo}, {hi}] outside [0, {STROKE_MM}]")))
            } else {
                Ok(())
            }
        };
        match self {
            PositionSampler::Uniform { min_mm, max_mm } => {
                check(*min_mm, *max_mm)?;
                Ok((0..n).map(|_| rng.random_range(*min_mm..=*max_mm)).collect())
            }
            PositionSampler::Grid { min_mm, max_mm } => {
                check(*min_mm, *max_mm)?;
                let step = if n > 1 { (max_mm - min_mm) / (n - 1) as f64 } else { 0.0 };
                Ok((0..n).map(|i| (min_mm + step * i as f64).min(*max_mm)).collect())
            }
            PositionSampler::Fixed { positions_mm } => {
                if positions_mm.is_empty() {
                    return Err(VisionError::Config("fixed sampler has no positions".into()));
                }
                for p in positions_mm {
                    check(*p, *p)?;
                }
                Ok(positions_mm.iter().copied().cycle().take(n).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_base: usize,
    /// Drives position sampling and the split shuffle.
    pub seed: u64,
    pub sampler: PositionSampler,
    /// `None` builds base frames only.
    pub augmentation: Option<AugmentationConfig>,
    pub geometry: SceneGeometry,
    pub edge_threshold: f64,
    pub format: FrameFormat,
    /// Train : validation : test.
    pub split_ratio: [u32; 3],
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_base: 1500,
            seed: 0,
            sampler: PositionSampler::default(),
            augmentation: Some(AugmentationConfig::default()),
            geometry: SceneGeometry::default(),
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
            format: FrameFormat::Pgm,
            split_ratio: [7, 2, 1],
        }
    }
}

impl DatasetConfig {
    /// `n_base` frames with one seed for sampling, splitting and augmentation.
    pub fn seeded(n_base: usize, seed: u64) -> Self {
        let mut cfg = Self {
            n_base,
            seed,
            ..Self::default()
        };
        if let Some(aug) = cfg.augmentation.as_mut() {
            aug.seed = seed;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        if self.n_base == 0 {
            return Err(VisionError::Config("n_base must be positive".into()));
        }
        if self.split_ratio.iter().sum::<u32>() == 0 {
            return Err(VisionError::Config("split ratio is all zero".into()));
        }
        if let Some(aug) = &self.augmentation {
            aug.validate()?;
        }
        self.geometry.validate()
    }

    /// Train/validation/test sizes; the remainder after flooring goes to test.
    pub fn split_sizes(&self) -> [usize; 3] {
        let total: u64 = self.split_ratio.iter().map(|r| u64::from(*r)).sum();
        let n = self.n_base as u64;
        let train = (n * u64::from(self.split_ratio[0]) / total) as usize;
        let val = (n * u64::from(self.split_ratio[1]) / total) as usize;
        [train, val, self.n_base - train - val]
    }
}

/// One labelled frame, also the manifest row layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub frame_path: String,
    pub knife_mm: f64,
    pub class_id: usize,
    pub ground_truth_pct: f64,
    pub contour_area_px2: f64,
}

impl DatasetRecord {
    pub fn class(&self) -> Option<DeformationClass> {
        DeformationClass::from_id(self.class_id)
    }

    pub fn area_sample(&self) -> AreaSample {
        AreaSample {
            area: self.contour_area_px2,
            deformation_pct: self.ground_truth_pct,
        }
    }
}

/// An augmented variant and the base frame it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedRecord {
    pub frame_path: String,
    pub source_frame: String,
    pub knife_mm: f64,
    pub class_id: usize,
    pub ground_truth_pct: f64,
    pub contour_area_px2: f64,
}

impl AugmentedRecord {
    pub fn record(&self) -> DatasetRecord {
        DatasetRecord {
            frame_path: self.frame_path.clone(),
            knife_mm: self.knife_mm,
            class_id: self.class_id,
            ground_truth_pct: self.ground_truth_pct,
            contour_area_px2: self.contour_area_px2,
        }
    }
}

/// Indices into [`Dataset::records`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Build parameters and derived constants, stored as `dataset.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub config: DatasetConfig,
    pub scale: FeatureScale,
    pub split_sizes: [usize; 3],
    pub augmented_count: usize,
    /// Variants discarded because no closed contour survived augmentation.
    pub dropped_variants: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub records: Vec<DatasetRecord>,
    pub augmented: Vec<AugmentedRecord>,
    pub split: Split,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VisionError + '_ {
    move |source| VisionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn base_name(index: usize) -> String {
    format!("{index:06}")
}

/// Renders, labels, augments and splits a synthetic dataset.
///
/// Frames and CSV files are written under `out` when given; otherwise only
/// the in-memory records are produced. The result depends only on `cfg`.
pub fn build_dataset(cfg: &DatasetConfig, out: Option<&Path>) -> Result<Dataset, VisionError> {
    cfg.validate()?;
    let g = &cfg.geometry;
    let scale = FeatureScale::from_geometry(g, cfg.edge_threshold)?;
    let ext = cfg.format.extension();
    if let Some(dir) = out {
        let frames = dir.join(FRAMES_DIR);
        fs::create_dir_all(&frames).map_err(io_err(&frames))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let positions = cfg.sampler.positions(cfg.n_base, &mut rng)?;

    let mut records = Vec::with_capacity(cfg.n_base);
    let mut augmented = Vec::new();
    let mut dropped = 0;
    for (i, &pos) in positions.iter().enumerate() {
        let frame = render_frame(pos, g)?;
        let area = measure_area(&frame, cfg.edge_threshold)?.ok_or(VisionError::NoContour)?;
        let name = base_name(i);
        let frame_path = format!("{FRAMES_DIR}/{name}.{ext}");
        if let Some(dir) = out {
            frame.save(&dir.join(&frame_path), cfg.format)?;
        }
        let record = DatasetRecord {
            frame_path,
            knife_mm: pos,
            class_id: class_from_position(pos)?.id(),
            ground_truth_pct: ground_truth_deformation(pos)?,
            contour_area_px2: area,
        };

        if let Some(aug) = &cfg.augmentation {
            let mut arng = aug.rng_for(i as u64);
            for k in 0..aug.variants_per_frame {
                let variant = augment(&frame, aug, g.background_level, &mut arng);
                let Some(area) = measure_area(&variant, cfg.edge_threshold)? else {
                    dropped += 1;
                    continue;
                };
                let vpath = format!("{FRAMES_DIR}/{name}_a{k}.{ext}");
                if let Some(dir) = out {
                    variant.save(&dir.join(&vpath), cfg.format)?;
                }
                augmented.push(AugmentedRecord {
                    frame_path: vpath,
                    source_frame: record.frame_path.clone(),
                    knife_mm: pos,
                    class_id: record.class_id,
                    ground_truth_pct: record.ground_truth_pct,
                    contour_area_px2: area,
                });
            }
        }
        records.push(record);
    }

    let split = make_split(cfg);
    let dataset = Dataset {
        meta: DatasetMeta {
            config: cfg.clone(),
            scale,
            split_sizes: cfg.split_sizes(),
            augmented_count: augmented.len(),
            dropped_variants: dropped,
        },
        records,
        augmented,
        split,
    };
    if let Some(dir) = out {
        dataset.write_index(dir)?;
    }
    Ok(dataset)
}

/// `per_class` labelled frames at each class's position midpoint.
///
/// With augmentation configured every frame is a distinct random variant of
/// the clean midpoint render; otherwise the clean render is repeated.
pub fn midpoint_records(per_class: usize, cfg: &DatasetConfig) -> Result<Vec<DatasetRecord>, VisionError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(per_class * 4);
    for class in DeformationClass::ALL {
        let pos = class.midpoint_mm();
        let clean = render_frame(pos, &cfg.geometry)?;
        for i in 0..per_class {
            let frame = match &cfg.augmentation {
                Some(aug) => {
                    let mut rng = aug.rng_for((class.id() * per_class + i) as u64);
                    augment(&clean, aug, cfg.geometry.background_level, &mut rng)
                }
                None => clean.clone(),
            };
            let area = measure_area(&frame, cfg.edge_threshold)?.ok_or(VisionError::NoContour)?;
            out.push(DatasetRecord {
                frame_path: format!("midpoint/{}_{i:04}", class.name()),
                knife_mm: pos,
                class_id: class.id(),
                ground_truth_pct: ground_truth_deformation(pos)?,
                contour_area_px2: area,
            });
        }
    }
    Ok(out)
}

fn make_split(cfg: &DatasetConfig) -> Split {
    let mut idx: Vec<usize> = (0..cfg.n_base).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    idx.shuffle(&mut rng);
    let [tr, va, _] = cfg.split_sizes();
    let mut split = Split {
        train: idx[..tr].to_vec(),
        val: idx[tr..tr + va].to_vec(),
        test: idx[tr + va..].to_vec(),
    };
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    split
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), VisionError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, VisionError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

impl Dataset {
    /// Writes the manifest, split lists, augmented list and `dataset.json`.
    pub fn write_index(&self, dir: &Path) -> Result<(), VisionError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_csv(&dir.join(MANIFEST_FILE), &self.records)?;
        for (file, idx) in SPLIT_FILES.iter().zip([&self.split.train, &self.split.val, &self.split.test]) {
            write_csv(&dir.join(file), idx.iter().map(|&i| &self.records[i]))?;
        }
        write_csv(&dir.join(AUGMENTED_FILE), &self.augmented)?;
        let meta = dir.join(META_FILE);
        fs::write(&meta, serde_json::to_string_pretty(&self.meta)?).map_err(io_err(&meta))
    }

    /// Reads a dataset written by [`build_dataset`].
    pub fn load(dir: &Path) -> Result<Self, VisionError> {
        let meta_path = dir.join(META_FILE);
        let meta: DatasetMeta =
            serde_json::from_str(&fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?)?;
        let records: Vec<DatasetRecord> = read_csv(&dir.join(MANIFEST_FILE))?;
        if records.is_empty() {
            return Err(VisionError::EmptyDataset);
        }
        let index: HashMap<&str, usize> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.frame_path.as_str(), i))
            .collect();
        let mut parts: [Vec<usize>; 3] = Default::default();
        for (part, file) in parts.iter_mut().zip(SPLIT_FILES) {
            for r in read_csv::<DatasetRecord>(&dir.join(file))? {
                let i = index.get(r.frame_path.as_str()).ok_or_else(|| {
                    VisionError::Format(format!("{file} lists unknown frame {}", r.frame_path))
                })?;
                part.push(*i);
            }
        }
        let [train, val, test] = parts;
        let augmented = read_csv(&dir.join(AUGMENTED_FILE))?;
        Ok(Self {
            meta,
            records,
            augmented,
            split: Split { train, val, test },
        })
    }

    pub fn frame_path(dir: &Path, record: &DatasetRecord) -> PathBuf {
        dir.join(&record.frame_path)
    }

    /// Train-split base frames plus every variant derived from them.
    pub fn training_samples(&self) -> Vec<AreaSample> {
        let train: std::collections::HashSet<&str> = self
            .split
            .train
            .iter()
            .map(|&i| self.records[i].frame_path.as_str())
            .collect();
        self.split
            .train
            .iter()
            .map(|&i| self.records[i].area_sample())
            .chain(
                self.augmented
                    .iter()
                    .filter(|a| train.contains(a.source_frame.as_str()))
                    .map(|a| a.record().area_sample()),
            )
            .collect()
    }

    pub fn validation_samples(&self) -> Vec<AreaSample> {
        self.split.val.iter().map(|&i| self.records[i].area_sample()).collect()
    }

    pub fn test_samples(&self) -> Vec<AreaSample> {
        self.split.test.iter().map(|&i| self.records[i].area_sample()).collect()
    }

    pub fn test_records(&self) -> Vec<&DatasetRecord> {
        self.split.test.iter().map(|&i| &self.records[i]).collect()
    }
}
