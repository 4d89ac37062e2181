//! Run configuration: a single TOML tree covering simulation, sensing,
//! rewards, networks, curiosity, and the three training stages.
//!
//! Files may pull in other files through a top-level `include` key
//! (string or array of strings, resolved relative to the including file);
//! later values override included ones table-by-table. Unknown keys are
//! rejected and every value is range-checked at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub sim: SimConfig,
    pub terrain: TerrainConfig,
    pub randomization: RandomizationConfig,
    pub push: PushConfig,
    pub sensing: SensingConfig,
    pub commands: CommandConfig,
    pub gait: GaitConfig,
    pub rewards: RewardConfig,
    pub networks: NetConfig,
    pub rnd: RndConfig,
    pub trainer: TrainerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out_dir: "runs/out".to_string(),
            sim: SimConfig::default(),
            terrain: TerrainConfig::default(),
            randomization: RandomizationConfig::default(),
            push: PushConfig::default(),
            sensing: SensingConfig::default(),
            commands: CommandConfig::default(),
            gait: GaitConfig::default(),
            rewards: RewardConfig::default(),
            networks: NetConfig::default(),
            rnd: RndConfig::default(),
            trainer: TrainerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Physics step, seconds. The control stack is built around a 1 kHz
    /// inner loop; the loader rejects anything else.
    pub dt: f64,
    /// Physics substeps per policy step (policy rate = 1/(dt*substeps)).
    pub substeps: u32,
    pub gravity: f64,
    pub episode_length_s: f64,
    /// Fall detection: |projected gravity xy| above this terminates.
    pub tilt_limit: f64,
    /// Fall detection: base origin closer than this to the terrain terminates.
    pub base_clearance_min: f64,
    /// Viscous joint damping (N·m·s/rad), integrated implicitly.
    pub joint_damping: f64,
    pub contact: ContactConfig,
    pub model: ModelConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.001,
            substeps: 10,
            gravity: 9.81,
            episode_length_s: 20.0,
            tilt_limit: 0.7,
            base_clearance_min: 0.05,
            joint_damping: 0.002,
            contact: ContactConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactConfig {
    /// Normal penalty-spring stiffness per foot corner (N/m).
    pub stiffness: f64,
    /// Normal damping per corner (N·s/m).
    pub damping: f64,
    /// Nominal friction coefficient; the per-episode draw scales it.
    pub friction: f64,
    /// Tangential viscous coefficient per corner, saturated at the cone.
    pub tangent_damping: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            stiffness: 2000.0,
            damping: 20.0,
            friction: 1.0,
            tangent_damping: 6.0,
        }
    }
}

/// Morphology of the miniature biped. Only the left leg is parameterized;
/// the right leg is its exact sagittal mirror. Per-joint arrays follow the
/// leg joint order: hip-yaw, hip-roll, hip-pitch, knee-pitch, ankle-pitch,
/// ankle-roll.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub torso_mass: f64,
    /// Torso box (x, y, z) extents, meters.
    pub torso_size: [f64; 3],
    pub hip_yaw_mass: f64,
    pub hip_roll_mass: f64,
    pub thigh_mass: f64,
    pub shank_mass: f64,
    pub ankle_mass: f64,
    pub foot_mass: f64,
    /// Hip-yaw joint offset from the base origin (left leg; +y).
    pub hip_offset_y: f64,
    pub hip_offset_z: f64,
    /// Successive joint drops along the leg chain, meters.
    pub hip_yaw_to_roll: f64,
    pub hip_roll_to_pitch: f64,
    pub thigh_length: f64,
    pub shank_length: f64,
    pub ankle_to_roll: f64,
    /// Sole plane below the ankle-roll joint.
    pub sole_drop: f64,
    /// Foot box (x, y) extents.
    pub foot_size: [f64; 2],
    /// Forward offset of the foot box center from the ankle-roll joint.
    pub foot_forward: f64,
    pub kp: [f64; 6],
    pub kd: [f64; 6],
    pub torque_limit: [f64; 6],
    /// Default joint posture for the left leg (right mirrors).
    pub q_default: [f64; 6],
    pub joint_lower: [f64; 6],
    pub joint_upper: [f64; 6],
    /// Nominal base height over the local terrain.
    pub h_target: f64,
    /// Base IMU mounting offset in the base frame.
    pub base_imu_offset: [f64; 3],
    /// Left-foot IMU mounting offset in the foot frame (right mirrors).
    pub foot_imu_offset: [f64; 3],
    /// Action-to-radians scale applied before the command filter.
    pub action_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            torso_mass: 0.91,
            torso_size: [0.08, 0.11, 0.10],
            hip_yaw_mass: 0.05,
            hip_roll_mass: 0.05,
            thigh_mass: 0.12,
            shank_mass: 0.10,
            ankle_mass: 0.03,
            foot_mass: 0.06,
            hip_offset_y: 0.032,
            hip_offset_z: 0.035,
            hip_yaw_to_roll: 0.012,
            hip_roll_to_pitch: 0.012,
            thigh_length: 0.055,
            shank_length: 0.055,
            ankle_to_roll: 0.010,
            sole_drop: 0.012,
            foot_size: [0.055, 0.030],
            foot_forward: 0.010,
            kp: [6.0, 6.0, 8.0, 8.0, 3.0, 3.0],
            kd: [0.10, 0.10, 0.15, 0.15, 0.01, 0.01],
            torque_limit: [1.5, 1.5, 2.5, 2.5, 1.5, 1.5],
            q_default: [0.0, 0.0, 0.3, -0.6, 0.3, 0.0],
            joint_lower: [-1.0, -0.8, -1.2, -2.0, -1.2, -0.8],
            joint_upper: [1.0, 0.8, 1.2, 0.3, 1.2, 0.8],
            h_target: 0.155,
            base_imu_offset: [0.0, 0.0, 0.02],
            foot_imu_offset: [0.01, 0.0, 0.005],
            action_scale: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainConfig {
    /// Terrain kinds used for the curriculum grid. Valid names: flat,
    /// rough, slope, stairs_up, stairs_down, discrete.
    pub kinds: Vec<String>,
    /// Highest difficulty level assigned (inclusive, 0..=9).
    pub max_level: u32,
    /// Square terrain side length, meters.
    pub size: f64,
    /// Heightfield cell size, meters.
    pub cell: f64,
    /// Slope angle at level 9, radians.
    pub slope_max: f64,
    /// Roughness amplitude at level 9, meters.
    pub rough_amp_max: f64,
    /// Stair rise at level 9, meters.
    pub stair_rise_max: f64,
    /// Stair run, meters.
    pub stair_run: f64,
    /// Discrete-step obstacle height at level 9, meters.
    pub discrete_height_max: f64,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        TerrainConfig {
            kinds: vec!["flat".to_string(), "rough".to_string()],
            max_level: 2,
            size: 3.0,
            cell: 0.02,
            slope_max: 0.35,
            rough_amp_max: 0.025,
            stair_rise_max: 0.03,
            stair_run: 0.08,
            discrete_height_max: 0.03,
        }
    }
}

/// Per-episode domain randomization ranges. Additive entries are drawn and
/// added to the nominal value; scaling entries multiply it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomizationConfig {
    pub enabled: bool,
    pub encoder_offset: [f64; 2],
    pub accel_offset: [f64; 2],
    pub gyro_offset: [f64; 2],
    pub added_mass: [f64; 2],
    pub com_displacement: [f64; 2],
    pub friction_scale: [f64; 2],
    pub restitution: [f64; 2],
    pub kp_factor: [f64; 2],
    pub kd_factor: [f64; 2],
    pub delay_ms: [u32; 2],
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        RandomizationConfig {
            enabled: true,
            encoder_offset: [-0.01, 0.01],
            accel_offset: [-0.1, 0.1],
            gyro_offset: [-0.005, 0.005],
            added_mass: [0.0, 0.2],
            com_displacement: [-0.05, 0.05],
            friction_scale: [0.1, 1.0],
            restitution: [0.0, 0.1],
            kp_factor: [0.9, 1.1],
            kd_factor: [0.5, 1.5],
            delay_ms: [0, 10],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PushConfig {
    pub enabled: bool,
    /// Seconds between pushes, drawn uniformly.
    pub interval_s: [f64; 2],
    pub duration_s: f64,
    /// Push force magnitude as a fraction of body weight.
    pub force_frac: [f64; 2],
    /// Push torque magnitude as a fraction of body weight times 1 m.
    pub torque_frac: [f64; 2],
}

impl Default for PushConfig {
    fn default() -> Self {
        PushConfig {
            enabled: true,
            interval_s: [4.0, 8.0],
            duration_s: 0.2,
            force_frac: [0.1, 0.3],
            torque_frac: [0.0, 0.01],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingConfig {
    /// Accelerometer measurement range, m/s² per axis.
    pub accel_clip: f64,
    /// Complementary-filter accelerometer correction gain per 1 ms step.
    pub filter_gain: f64,
    pub noise_enabled: bool,
    pub noise: NoiseConfig,
}

impl Default for SensingConfig {
    fn default() -> Self {
        SensingConfig {
            accel_clip: 40.0,
            filter_gain: 0.02,
            noise_enabled: true,
            noise: NoiseConfig::default(),
        }
    }
}

/// Uniform observation-noise scales (noise drawn on [-scale, +scale]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub accel: f64,
    pub gyro: f64,
    pub gravity: f64,
    pub joint_pos: f64,
    pub joint_vel: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            accel: 4.0,
            gyro: 0.1,
            gravity: 0.05,
            joint_pos: 0.05,
            joint_vel: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandConfig {
    pub vx: [f64; 2],
    pub vy: [f64; 2],
    pub wz: [f64; 2],
    pub resample_s: f64,
}

impl Default for CommandConfig {
    fn default() -> Self {
        CommandConfig {
            vx: [-0.08, 0.12],
            vy: [-0.05, 0.05],
            wz: [-0.5, 0.5],
            resample_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitConfig {
    pub period_s: f64,
    /// Stance fraction of the period per foot.
    pub duty: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        GaitConfig { period_s: 0.7, duty: 0.55 }
    }
}

/// Reward weights (one per term) plus the swing-clearance band. Expression
/// constants live with the expressions themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub lin_vel_tracking: f64,
    pub ang_vel_tracking: f64,
    pub base_rotation: f64,
    pub base_height: f64,
    pub lin_vel_penalty: f64,
    pub ang_vel_penalty: f64,
    pub contact_state: f64,
    pub feet_air_time: f64,
    pub feet_clearance: f64,
    pub stance_slip: f64,
    pub feet_distance: f64,
    pub knee_distance: f64,
    pub foot_knee_distance: f64,
    pub joint_position: f64,
    pub joint_velocity: f64,
    pub joint_acceleration: f64,
    pub joint_torque: f64,
    pub action_rate: f64,
    pub action_smoothness: f64,
    pub termination: f64,
    /// Swing-foot clearance band, meters.
    pub clearance_min: f64,
    pub clearance_max: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            lin_vel_tracking: 1.5,
            ang_vel_tracking: 1.0,
            base_rotation: -5.0,
            base_height: -0.2,
            lin_vel_penalty: -0.1,
            ang_vel_penalty: -0.2,
            contact_state: 0.3,
            feet_air_time: 1.0,
            feet_clearance: 0.2,
            stance_slip: -0.1,
            feet_distance: -2.0,
            knee_distance: -2.0,
            foot_knee_distance: -2.0,
            joint_position: -0.1,
            joint_velocity: -5.0e-4,
            joint_acceleration: -1.0e-7,
            joint_torque: -5.0e-5,
            action_rate: -0.01,
            action_smoothness: -0.01,
            termination: -200.0,
            clearance_min: 0.01,
            clearance_max: 0.04,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    /// Teacher privileged-history encoder hidden widths.
    pub teacher_encoder: Vec<usize>,
    /// Encoder output (latent) width.
    pub teacher_latent: usize,
    pub teacher_trunk: Vec<usize>,
    pub critic: Vec<usize>,
    pub student_trunk: Vec<usize>,
    pub tcn_channels: usize,
    pub tcn_kernel: usize,
    pub tcn_dilations: Vec<usize>,
    /// Student belief latent width.
    pub latent: usize,
    pub init_log_std: f64,
    pub log_std_min: f64,
    pub log_std_max: f64,
    pub scales: ObsScales,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            teacher_encoder: vec![128],
            teacher_latent: 64,
            teacher_trunk: vec![128, 128],
            critic: vec![128, 128],
            student_trunk: vec![128, 128],
            tcn_channels: 16,
            tcn_kernel: 5,
            tcn_dilations: vec![1, 3, 9, 27],
            latent: 32,
            init_log_std: -1.0,
            log_std_min: -4.0,
            log_std_max: 1.0,
            scales: ObsScales::default(),
        }
    }
}

/// Per-group input scaling applied inside the networks (observation
/// vectors themselves stay in physical units).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObsScales {
    pub command: f64,
    pub accel: f64,
    pub gyro: f64,
    pub gravity: f64,
    pub joint_pos: f64,
    pub joint_vel: f64,
    pub action: f64,
    pub lin_vel: f64,
    pub contact_force: f64,
    pub height_scan: f64,
    pub push: f64,
}

impl Default for ObsScales {
    fn default() -> Self {
        ObsScales {
            command: 2.0,
            accel: 0.1,
            gyro: 0.3,
            gravity: 1.0,
            joint_pos: 1.0,
            joint_vel: 0.05,
            action: 1.0,
            lin_vel: 2.0,
            contact_force: 0.1,
            height_scan: 5.0,
            push: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RndConfig {
    pub enabled: bool,
    /// Intrinsic reward weight.
    pub weight: f64,
    pub target_hidden: Vec<usize>,
    pub predictor_hidden: Vec<usize>,
    pub out_dim: usize,
    pub lr: f64,
    /// Normalize curiosity states by running mean/std.
    pub normalize: bool,
    /// Clamp for normalized curiosity-state entries.
    pub clamp: f64,
}

impl Default for RndConfig {
    fn default() -> Self {
        RndConfig {
            enabled: true,
            weight: 2.0,
            target_hidden: vec![64, 64],
            predictor_hidden: vec![64, 32],
            out_dim: 16,
            lr: 1.0e-4,
            normalize: true,
            clamp: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub kl_target: f64,
    pub epochs: u32,
    pub max_grad_norm: f64,
    pub bootstrap_timeouts: bool,
    pub lr_min: f64,
    pub lr_max: f64,
    /// Privileged-reconstruction loss weight during distillation.
    pub student_recon_weight: f64,
    pub teacher: StageConfig,
    pub student: StageConfig,
    pub finetune: StageConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            gamma: 0.99,
            lam: 0.95,
            clip: 0.2,
            entropy_coef: 0.005,
            value_coef: 1.0,
            kl_target: 0.01,
            epochs: 5,
            max_grad_norm: 1.0,
            bootstrap_timeouts: true,
            lr_min: 1.0e-5,
            lr_max: 1.0e-2,
            student_recon_weight: 1.0,
            teacher: StageConfig {
                envs: 64,
                steps: 24,
                minibatches: 6,
                iterations: 300,
                lr: LrMode::Adaptive,
                initial_lr: 1.0e-3,
                augmentation: true,
                rnd: true,
                checkpoint_every: 50,
            },
            student: StageConfig {
                envs: 32,
                steps: 24,
                minibatches: 6,
                iterations: 500,
                lr: LrMode::Fixed(5.0e-4),
                initial_lr: 5.0e-4,
                augmentation: true,
                rnd: false,
                checkpoint_every: 100,
            },
            finetune: StageConfig {
                envs: 32,
                steps: 24,
                minibatches: 6,
                iterations: 200,
                lr: LrMode::Adaptive,
                initial_lr: 3.0e-4,
                augmentation: true,
                rnd: false,
                checkpoint_every: 50,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub envs: usize,
    /// Policy steps collected per environment per iteration.
    pub steps: usize,
    pub minibatches: usize,
    pub iterations: u32,
    pub lr: LrMode,
    /// Starting rate when `lr = "adaptive"`.
    pub initial_lr: f64,
    pub augmentation: bool,
    pub rnd: bool,
    pub checkpoint_every: u32,
}

impl StageConfig {
    /// Samples collected per iteration before augmentation.
    pub fn batch_size(&self) -> usize {
        self.envs * self.steps
    }

    /// Samples entering the optimizer per iteration.
    pub fn effective_batch(&self) -> usize {
        if self.augmentation {
            2 * self.batch_size()
        } else {
            self.batch_size()
        }
    }
}

/// Learning-rate mode: `lr = "adaptive"` or `lr = 5.0e-4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrMode {
    Adaptive,
    Fixed(f64),
}

impl Serialize for LrMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LrMode::Adaptive => s.serialize_str("adaptive"),
            LrMode::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LrMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = LrMode;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"adaptive\" or a positive learning rate")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<LrMode, E> {
                if v == "adaptive" {
                    Ok(LrMode::Adaptive)
                } else {
                    Err(E::custom(format!("unknown learning-rate mode {v:?}")))
                }
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<LrMode, E> {
                Ok(LrMode::Fixed(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<LrMode, E> {
                Ok(LrMode::Fixed(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Training stage selector shared by the CLI and the trainer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Teacher,
    Student,
    Finetune,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Teacher => "teacher",
            Stage::Student => "student",
            Stage::Finetune => "finetune",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "teacher" => Ok(Stage::Teacher),
            "student" => Ok(Stage::Student),
            "finetune" => Ok(Stage::Finetune),
            other => Err(Error::config(format!("unknown stage {other:?}"))),
        }
    }
}

impl RunConfig {
    /// Load a config file, resolving includes and validating every value.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let value = load_merged(path, 0)?;
        let cfg: RunConfig = RunConfig::deserialize(value)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse from a TOML string (no includes). Errors carry line/column.
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn stage(&self, stage: Stage) -> &StageConfig {
        match stage {
            Stage::Teacher => &self.trainer.teacher,
            Stage::Student => &self.trainer.student,
            Stage::Finetune => &self.trainer.finetune,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(cond: bool, msg: &str) -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::config(msg.to_string()))
            }
        }
        fn range_ok(r: [f64; 2], name: &str) -> Result<()> {
            check(
                r[0].is_finite() && r[1].is_finite() && r[0] <= r[1],
                &format!("{name}: range must be finite with lo <= hi, got {r:?}"),
            )
        }

        let s = &self.sim;
        check(
            (s.dt - 0.001).abs() < 1e-12,
            "sim.dt: the control stack requires a 1 ms physics step",
        )?;
        check(s.substeps >= 1, "sim.substeps must be >= 1")?;
        check(s.gravity >= 0.0, "sim.gravity must be >= 0")?;
        check(s.episode_length_s > 0.0, "sim.episode_length_s must be > 0")?;
        check(s.tilt_limit > 0.0 && s.tilt_limit <= 1.0, "sim.tilt_limit must be in (0, 1]")?;
        check(s.joint_damping >= 0.0, "sim.joint_damping must be >= 0")?;
        check(s.contact.stiffness > 0.0, "sim.contact.stiffness must be > 0")?;
        check(
            s.contact.damping >= 0.5 * s.contact.stiffness * s.dt,
            "sim.contact.damping too low for a dissipative discrete contact; needs >= stiffness*dt/2",
        )?;
        check(s.contact.friction >= 0.0, "sim.contact.friction must be >= 0")?;
        check(s.contact.tangent_damping >= 0.0, "sim.contact.tangent_damping must be >= 0")?;

        let m = &s.model;
        for (mass, name) in [
            (m.torso_mass, "torso_mass"),
            (m.hip_yaw_mass, "hip_yaw_mass"),
            (m.hip_roll_mass, "hip_roll_mass"),
            (m.thigh_mass, "thigh_mass"),
            (m.shank_mass, "shank_mass"),
            (m.ankle_mass, "ankle_mass"),
            (m.foot_mass, "foot_mass"),
        ] {
            check(mass > 0.0, &format!("sim.model.{name} must be > 0"))?;
        }
        for i in 0..6 {
            check(m.kp[i] >= 0.0 && m.kd[i] >= 0.0, "sim.model PD gains must be >= 0")?;
            check(m.torque_limit[i] > 0.0, "sim.model.torque_limit entries must be > 0")?;
            check(
                m.joint_lower[i] < m.joint_upper[i],
                "sim.model joint limits must satisfy lower < upper",
            )?;
            check(
                m.q_default[i] >= m.joint_lower[i] && m.q_default[i] <= m.joint_upper[i],
                "sim.model.q_default must lie within the joint limits",
            )?;
        }
        check(m.h_target > 0.0, "sim.model.h_target must be > 0")?;
        check(m.action_scale > 0.0, "sim.model.action_scale must be > 0")?;

        let t = &self.terrain;
        check(!t.kinds.is_empty(), "terrain.kinds must not be empty")?;
        for k in &t.kinds {
            check(
                crate::sim::terrain::TerrainKind::parse(k).is_some(),
                &format!("terrain.kinds: unknown kind {k:?}"),
            )?;
        }
        check(t.max_level <= 9, "terrain.max_level must be in 0..=9")?;
        check(t.size > 0.5, "terrain.size must be > 0.5 m")?;
        check(t.cell > 0.0 && t.cell < t.size, "terrain.cell must be in (0, size)")?;

        let r = &self.randomization;
        range_ok(r.encoder_offset, "randomization.encoder_offset")?;
        range_ok(r.accel_offset, "randomization.accel_offset")?;
        range_ok(r.gyro_offset, "randomization.gyro_offset")?;
        range_ok(r.added_mass, "randomization.added_mass")?;
        range_ok(r.com_displacement, "randomization.com_displacement")?;
        range_ok(r.friction_scale, "randomization.friction_scale")?;
        range_ok(r.restitution, "randomization.restitution")?;
        range_ok(r.kp_factor, "randomization.kp_factor")?;
        range_ok(r.kd_factor, "randomization.kd_factor")?;
        check(r.added_mass[0] >= 0.0, "randomization.added_mass must be >= 0")?;
        check(r.friction_scale[0] >= 0.0, "randomization.friction_scale must be >= 0")?;
        check(
            r.restitution[0] >= 0.0 && r.restitution[1] <= 1.0,
            "randomization.restitution must lie in [0, 1]",
        )?;
        check(r.delay_ms[0] <= r.delay_ms[1], "randomization.delay_ms: lo <= hi")?;
        check(r.delay_ms[1] <= 50, "randomization.delay_ms above 50 ms is not supported")?;

        let p = &self.push;
        range_ok(p.interval_s, "push.interval_s")?;
        check(p.interval_s[0] > 0.0, "push.interval_s must be > 0")?;
        check(p.duration_s > 0.0, "push.duration_s must be > 0")?;
        range_ok(p.force_frac, "push.force_frac")?;
        range_ok(p.torque_frac, "push.torque_frac")?;

        let se = &self.sensing;
        check(se.accel_clip > 0.0, "sensing.accel_clip must be > 0")?;
        check(
            se.filter_gain > 0.0 && se.filter_gain < 1.0,
            "sensing.filter_gain must be in (0, 1)",
        )?;
        for (v, n) in [
            (se.noise.accel, "accel"),
            (se.noise.gyro, "gyro"),
            (se.noise.gravity, "gravity"),
            (se.noise.joint_pos, "joint_pos"),
            (se.noise.joint_vel, "joint_vel"),
        ] {
            check(v >= 0.0, &format!("sensing.noise.{n} must be >= 0"))?;
        }

        range_ok(self.commands.vx, "commands.vx")?;
        range_ok(self.commands.vy, "commands.vy")?;
        range_ok(self.commands.wz, "commands.wz")?;
        check(self.commands.resample_s > 0.0, "commands.resample_s must be > 0")?;

        check(self.gait.period_s > 0.0, "gait.period_s must be > 0")?;
        check(
            self.gait.duty > 0.0 && self.gait.duty <= 1.0,
            "gait.duty must be in (0, 1]",
        )?;

        check(
            self.rewards.clearance_min < self.rewards.clearance_max,
            "rewards.clearance_min must be < clearance_max",
        )?;

        let n = &self.networks;
        check(!n.teacher_trunk.is_empty(), "networks.teacher_trunk must not be empty")?;
        check(!n.critic.is_empty(), "networks.critic must not be empty")?;
        check(!n.student_trunk.is_empty(), "networks.student_trunk must not be empty")?;
        check(n.teacher_latent > 0, "networks.teacher_latent must be > 0")?;
        check(n.tcn_channels > 0, "networks.tcn_channels must be > 0")?;
        check(n.tcn_kernel >= 2, "networks.tcn_kernel must be >= 2")?;
        check(!n.tcn_dilations.is_empty(), "networks.tcn_dilations must not be empty")?;
        check(n.latent > 0, "networks.latent must be > 0")?;
        check(
            n.log_std_min < n.log_std_max,
            "networks.log_std_min must be < log_std_max",
        )?;
        check(
            n.init_log_std >= n.log_std_min && n.init_log_std <= n.log_std_max,
            "networks.init_log_std must lie within the clamp band",
        )?;
        // Receptive field of the dilated stack must cover the long history.
        let rf: usize = 1 + (n.tcn_kernel - 1) * n.tcn_dilations.iter().sum::<usize>();
        check(
            rf >= crate::obs::LONG_HISTORY,
            &format!(
                "networks.tcn_dilations: receptive field {rf} shorter than the {}-step history",
                crate::obs::LONG_HISTORY
            ),
        )?;

        let rn = &self.rnd;
        check(rn.weight >= 0.0, "rnd.weight must be >= 0")?;
        check(rn.out_dim > 0, "rnd.out_dim must be > 0")?;
        check(rn.lr > 0.0, "rnd.lr must be > 0")?;
        check(rn.clamp > 0.0, "rnd.clamp must be > 0")?;

        let tr = &self.trainer;
        check(tr.gamma > 0.0 && tr.gamma < 1.0, "trainer.gamma must be in (0, 1)")?;
        check(tr.lam >= 0.0 && tr.lam <= 1.0, "trainer.lam must be in [0, 1]")?;
        check(tr.clip > 0.0 && tr.clip < 1.0, "trainer.clip must be in (0, 1)")?;
        check(tr.entropy_coef >= 0.0, "trainer.entropy_coef must be >= 0")?;
        check(tr.value_coef > 0.0, "trainer.value_coef must be > 0")?;
        check(tr.kl_target > 0.0, "trainer.kl_target must be > 0")?;
        check(tr.epochs >= 1, "trainer.epochs must be >= 1")?;
        check(tr.max_grad_norm > 0.0, "trainer.max_grad_norm must be > 0")?;
        check(
            tr.lr_min > 0.0 && tr.lr_min < tr.lr_max,
            "trainer.lr_min must be in (0, lr_max)",
        )?;
        check(tr.student_recon_weight >= 0.0, "trainer.student_recon_weight must be >= 0")?;
        for (st, name) in [
            (&tr.teacher, "teacher"),
            (&tr.student, "student"),
            (&tr.finetune, "finetune"),
        ] {
            check(st.envs > 0, &format!("trainer.{name}.envs must be > 0"))?;
            check(st.steps > 0, &format!("trainer.{name}.steps must be > 0"))?;
            check(st.minibatches > 0, &format!("trainer.{name}.minibatches must be > 0"))?;
            check(st.iterations > 0, &format!("trainer.{name}.iterations must be > 0"))?;
            check(
                st.effective_batch() % st.minibatches == 0,
                &format!(
                    "trainer.{name}: minibatches ({}) must divide the batch after augmentation ({})",
                    st.minibatches,
                    st.effective_batch()
                ),
            )?;
            if let LrMode::Fixed(v) = st.lr {
                check(v > 0.0, &format!("trainer.{name}.lr must be > 0"))?;
            }
            check(st.initial_lr > 0.0, &format!("trainer.{name}.initial_lr must be > 0"))?;
            check(
                st.checkpoint_every >= 1,
                &format!("trainer.{name}.checkpoint_every must be >= 1"),
            )?;
        }
        Ok(())
    }
}

const MAX_INCLUDE_DEPTH: usize = 8;

fn load_merged(path: &Path, depth: usize) -> Result<toml::Value> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(Error::config(format!(
            "{}: include nesting deeper than {MAX_INCLUDE_DEPTH}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;

    let includes: Vec<PathBuf> = match value.as_table_mut().and_then(|t| t.remove("include")) {
        None => vec![],
        Some(toml::Value::String(s)) => vec![PathBuf::from(s)],
        Some(toml::Value::Array(a)) => {
            let mut v = Vec::new();
            for item in a {
                match item {
                    toml::Value::String(s) => v.push(PathBuf::from(s)),
                    other => {
                        return Err(Error::config(format!(
                            "{}: include entries must be strings, got {other}",
                            path.display()
                        )))
                    }
                }
            }
            v
        }
        Some(other) => {
            return Err(Error::config(format!(
                "{}: include must be a string or array of strings, got {other}",
                path.display()
            )))
        }
    };

    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut merged = toml::Value::Table(toml::map::Map::new());
    for inc in includes {
        let inc_path = if inc.is_absolute() { inc } else { base_dir.join(inc) };
        let inc_value = load_merged(&inc_path, depth + 1)?;
        merge_value(&mut merged, inc_value);
    }
    merge_value(&mut merged, value);
    Ok(merged)
}

/// Deep-merge `over` onto `base`: tables merge key-by-key, everything else
/// (including arrays) replaces wholesale.
fn merge_value(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge_value(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, over) => *slot = over,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn roundtrip_preserves_tree() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.to_toml_string().unwrap(), back.to_toml_string().unwrap());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml_str("definitely_not_a_key = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("definitely_not_a_key"), "{msg}");
    }

    #[test]
    fn bad_value_rejected_with_location() {
        let err = RunConfig::from_toml_str("[gait]\nduty = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("duty"), "{err}");
    }

    #[test]
    fn lr_mode_forms() {
        let cfg = RunConfig::from_toml_str("[trainer.teacher]\nenvs = 8\nsteps = 24\nminibatches = 6\niterations = 5\nlr = \"adaptive\"\ninitial_lr = 1e-3\naugmentation = true\nrnd = true\ncheckpoint_every = 5\n").unwrap();
        assert_eq!(cfg.trainer.teacher.lr, LrMode::Adaptive);
        let cfg = RunConfig::from_toml_str("[trainer.student]\nenvs = 8\nsteps = 24\nminibatches = 6\niterations = 5\nlr = 5.0e-4\ninitial_lr = 5e-4\naugmentation = true\nrnd = false\ncheckpoint_every = 5\n").unwrap();
        assert_eq!(cfg.trainer.student.lr, LrMode::Fixed(5.0e-4));
    }

    #[test]
    fn include_merging() {
        let dir = std::env::temp_dir().join(format!("footfall_cfg_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("base.cfg"), "seed = 7\n[gait]\nperiod_s = 0.8\n").unwrap();
        std::fs::write(
            dir.join("top.cfg"),
            "include = \"base.cfg\"\n[gait]\nduty = 0.6\n",
        )
        .unwrap();
        let cfg = RunConfig::load(dir.join("top.cfg")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.gait.period_s, 0.8);
        assert_eq!(cfg.gait.duty, 0.6);
        std::fs::remove_dir_all(&dir).ok();
    }
}
