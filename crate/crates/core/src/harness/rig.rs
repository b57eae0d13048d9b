use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::summary::{summarize, RunSummary, SummaryParams};
use super::telemetry::TelemetrySample;
use crate::estimation::{CurrentNoise, ForceChain, FtSensor, Measurement};
use crate::plant::{MotionProfile, Plant, PlantSample, TissueModel};
use crate::vision::{render_frame, Analysis, SceneGeometry, VisionPipeline, STROKE_MM};
use crate::HarnessError;

struct VisionState {
    pipeline: VisionPipeline,
    geometry: SceneGeometry,
    period_steps: u64,
    /// Analyses keyed by encoder count; the scene depends only on position.
    cache: HashMap<u32, Analysis>,
    last: Option<Analysis>,
}

/// Plant, sensing and vision stepped together, one telemetry row per step.
pub struct Rig {
    plant: Plant,
    chain: ForceChain,
    sensor: FtSensor,
    noise: CurrentNoise,
    rng: ChaCha8Rng,
    vision: Option<VisionState>,
    steps: u64,
}

impl std::fmt::Debug for Rig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rig")
            .field("time", &self.plant.time())
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

impl Rig {
    /// Validates `cfg`, builds the rig at rest at 0 mm and returns the
    /// telemetry row for `t = 0`.
    pub fn start(cfg: &ExperimentConfig) -> Result<(Self, TelemetrySample), HarnessError> {
        let tissue = cfg.validate()?;
        let plant = Plant::new(cfg.drivetrain.clone(), cfg.profile, tissue, 0.0)?.with_dt(cfg.dt)?;
        let chain = ForceChain::new(cfg.estimation.clone(), cfg.drivetrain.clone(), cfg.dt)?;
        let mut sensor_cfg = cfg.estimation.sensor.clone();
        sensor_cfg.seed = cfg.seed.wrapping_add(1);
        let sensor = FtSensor::new(sensor_cfg)?;
        let vision = if cfg.vision.enabled {
            let v = &cfg.vision;
            Some(VisionState {
                pipeline: VisionPipeline::new(&v.geometry, v.edge_threshold)?,
                geometry: v.geometry.clone(),
                period_steps: ((1.0 / (v.rate_hz * cfg.dt)).round() as u64).max(1),
                cache: HashMap::new(),
                last: None,
            })
        } else {
            None
        };
        let mut rig = Self {
            plant,
            chain,
            sensor,
            noise: cfg.estimation.current_noise,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            vision,
            steps: 0,
        };
        let first = rig.observe(rig.plant.sample())?;
        Ok((rig, first))
    }

    pub fn time(&self) -> f64 {
        self.plant.time()
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn tissue(&self) -> &TissueModel {
        self.plant.tissue()
    }

    /// Replaces the contact law mid-run.
    pub fn set_tissue(&mut self, tissue: TissueModel) -> Result<(), HarnessError> {
        Ok(self.plant.set_tissue(tissue)?)
    }

    pub fn set_profile(&mut self, profile: MotionProfile) -> Result<(), HarnessError> {
        Ok(self.plant.set_profile(profile)?)
    }

    pub fn command_move(&mut self, target_mm: f64) -> Result<(), HarnessError> {
        Ok(self.plant.command_move(target_mm)?)
    }

    pub fn is_moving(&self) -> bool {
        self.plant.is_moving()
    }

    /// Most recent vision result, if vision is enabled.
    pub fn last_analysis(&self) -> Option<&Analysis> {
        self.vision.as_ref().and_then(|v| v.last.as_ref())
    }

    pub fn step(&mut self) -> Result<TelemetrySample, HarnessError> {
        let s = self.plant.step();
        self.steps += 1;
        self.observe(s)
    }

    fn observe(&mut self, s: PlantSample) -> Result<TelemetrySample, HarnessError> {
        let dt = self.plant.drivetrain();
        let actual = dt.quantize(s.position_mm);
        let current = self.noise.sample(s.current_a, &mut self.rng);
        let raw = self.sensor.read(s.tissue_force_n, s.time_s);
        let out = self.chain.step(&Measurement {
            time: s.time_s,
            current_a: current,
            d_m: dt.radius_at(s.time_s),
            sensor_fz: raw.fz,
        })?;
        let counts = ((actual * 1000.0 / dt.linear_resolution_um).round()) as u32;
        let res_mm = dt.linear_resolution_um / 1000.0;
        let steps = self.steps;
        let analysis = match self.vision.as_mut() {
            Some(v) if steps % v.period_steps == 0 => {
                let a = match v.cache.get(&counts) {
                    Some(a) => a.clone(),
                    None => {
                        let pos = (f64::from(counts) * res_mm).clamp(0.0, STROKE_MM);
                        let a = v.pipeline.analyze(&render_frame(pos, &v.geometry)?)?;
                        v.cache.insert(counts, a.clone());
                        a
                    }
                };
                v.last = Some(a.clone());
                Some(a)
            }
            Some(v) => v.last.clone(),
            None => None,
        };
        Ok(TelemetrySample {
            time: s.time_s,
            commanded_pos: s.commanded_mm,
            actual_pos: actual,
            velocity: s.velocity_mm_s,
            current,
            f_current: out.f_current.value,
            f_sensor_raw: raw,
            f_sensor_filtered: out.f_sensor_filtered.value,
            f_fused: out.fused.value,
            deformation_class: analysis.as_ref().map(|a| a.class),
            deformation_pct: analysis.as_ref().map(|a| a.decided_pct),
            contour_area: analysis.as_ref().map(|a| a.area),
        })
    }
}

/// Telemetry and aggregates of one scheduled run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub telemetry: Vec<TelemetrySample>,
    pub summary: RunSummary,
    pub tissue: TissueModel,
}

/// Probe, dwell and retract on the configured schedule.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let (mut rig, first) = Rig::start(cfg)?;
    let tissue = rig.tissue().clone();
    let sch = &cfg.schedule;
    let steps = (sch.end_time_s / cfg.dt).round() as u64;
    let probe_step = (sch.probe_time_s / cfg.dt).round() as u64;
    let retract_step = (sch.retract_time_s / cfg.dt).round() as u64;
    let mut telemetry = Vec::with_capacity(steps as usize + 1);
    telemetry.push(first);
    for k in 0..steps {
        if k == probe_step {
            rig.command_move(sch.probe_target_mm)?;
        } else if k == retract_step {
            rig.command_move(sch.retract_target_mm)?;
        }
        telemetry.push(rig.step()?);
    }
    let summary = summarize(&telemetry, &SummaryParams::from_config(cfg, tissue.contact_depth_mm))?;
    Ok(RunOutput {
        telemetry,
        summary,
        tissue,
    })
}
