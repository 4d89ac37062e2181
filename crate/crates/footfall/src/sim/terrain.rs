//! Procedural heightfield terrains with a 10-level difficulty curriculum.
//!
//! Every kind maps its level to a single difficulty parameter through a
//! linear schedule (level 0 is flat, level 9 reaches the configured
//! maximum), so difficulty is monotone by construction.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TerrainConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerrainKind {
    Flat,
    Rough,
    Slope,
    StairsUp,
    StairsDown,
    Discrete,
}

impl TerrainKind {
    pub fn parse(s: &str) -> Option<TerrainKind> {
        match s {
            "flat" => Some(TerrainKind::Flat),
            "rough" => Some(TerrainKind::Rough),
            "slope" => Some(TerrainKind::Slope),
            "stairs_up" => Some(TerrainKind::StairsUp),
            "stairs_down" => Some(TerrainKind::StairsDown),
            "discrete" => Some(TerrainKind::Discrete),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TerrainKind::Flat => "flat",
            TerrainKind::Rough => "rough",
            TerrainKind::Slope => "slope",
            TerrainKind::StairsUp => "stairs_up",
            TerrainKind::StairsDown => "stairs_down",
            TerrainKind::Discrete => "discrete",
        }
    }

    pub const ALL: [TerrainKind; 6] = [
        TerrainKind::Flat,
        TerrainKind::Rough,
        TerrainKind::Slope,
        TerrainKind::StairsUp,
        TerrainKind::StairsDown,
        TerrainKind::Discrete,
    ];
}

/// Square heightfield centered on the origin. Lookups outside the grid
/// clamp to the border.
#[derive(Debug, Clone)]
pub struct Terrain {
    pub kind: TerrainKind,
    pub level: u32,
    /// The level-scheduled difficulty parameter this field was built with
    /// (slope angle, roughness amplitude, stair rise, or step height).
    pub difficulty: f64,
    n: usize,
    cell: f64,
    half: f64,
    heights: Vec<f64>,
}

/// Maps (kind, level) to the difficulty parameter: a linear ramp hitting
/// the configured maximum at level 9. Flat is always zero.
pub fn difficulty_schedule(cfg: &TerrainConfig, kind: TerrainKind, level: u32) -> f64 {
    let frac = f64::from(level) / 9.0;
    match kind {
        TerrainKind::Flat => 0.0,
        TerrainKind::Rough => cfg.rough_amp_max * frac,
        TerrainKind::Slope => cfg.slope_max * frac,
        TerrainKind::StairsUp | TerrainKind::StairsDown => cfg.stair_rise_max * frac,
        TerrainKind::Discrete => cfg.discrete_height_max * frac,
    }
}

/// Radius around the spawn point kept flat for every kind except slopes.
const SPAWN_RADIUS: f64 = 0.25;

pub fn generate_terrain(
    cfg: &TerrainConfig,
    kind: TerrainKind,
    level: u32,
    seed: u64,
) -> Result<Terrain> {
    if level > 9 {
        return Err(Error::config(format!("terrain level {level} out of 0..=9")));
    }
    let n = (cfg.size / cfg.cell).round() as usize + 1;
    let half = cfg.cell * ((n - 1) as f64) / 2.0;
    let difficulty = difficulty_schedule(cfg, kind, level);
    let mut heights = vec![0.0; n * n];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        TerrainKind::Flat => {}
        TerrainKind::Rough => {
            let amp = difficulty;
            if amp > 0.0 {
                for (idx, h) in heights.iter_mut().enumerate() {
                    let (x, y) = index_xy(idx, n, cell_of(cfg), half);
                    let v = rng.gen_range(-amp..=amp);
                    if x.hypot(y) > SPAWN_RADIUS {
                        *h = v;
                    }
                }
            }
        }
        TerrainKind::Slope => {
            let s = difficulty.tan();
            for (idx, h) in heights.iter_mut().enumerate() {
                let (x, _) = index_xy(idx, n, cell_of(cfg), half);
                *h = s * x;
            }
        }
        TerrainKind::StairsUp | TerrainKind::StairsDown => {
            let rise = if kind == TerrainKind::StairsUp { difficulty } else { -difficulty };
            for (idx, h) in heights.iter_mut().enumerate() {
                let (x, y) = index_xy(idx, n, cell_of(cfg), half);
                let d = x.hypot(y);
                if d > SPAWN_RADIUS {
                    let steps = ((d - SPAWN_RADIUS) / cfg.stair_run).floor();
                    *h = rise * steps;
                }
            }
        }
        TerrainKind::Discrete => {
            let hmax = difficulty;
            if hmax > 0.0 {
                // Fixed number of box obstacles scattered outside spawn.
                for _ in 0..48 {
                    let cx = rng.gen_range(-half..=half);
                    let cy = rng.gen_range(-half..=half);
                    let wx = rng.gen_range(0.08..=0.25);
                    let wy = rng.gen_range(0.08..=0.25);
                    let hz = rng.gen_range(0.3 * hmax..=hmax)
                        * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    if cx.hypot(cy) < SPAWN_RADIUS + 0.15 {
                        continue;
                    }
                    for (idx, h) in heights.iter_mut().enumerate() {
                        let (x, y) = index_xy(idx, n, cell_of(cfg), half);
                        if (x - cx).abs() < wx / 2.0
                            && (y - cy).abs() < wy / 2.0
                            && x.hypot(y) > SPAWN_RADIUS
                        {
                            *h = hz;
                        }
                    }
                }
            }
        }
    }

    debug_assert!(heights.iter().all(|h| h.is_finite()));
    Ok(Terrain { kind, level, difficulty, n, cell: cfg.cell, half, heights })
}

fn cell_of(cfg: &TerrainConfig) -> f64 {
    cfg.cell
}

fn index_xy(idx: usize, n: usize, cell: f64, half: f64) -> (f64, f64) {
    let ix = idx % n;
    let iy = idx / n;
    (ix as f64 * cell - half, iy as f64 * cell - half)
}

impl Terrain {
    pub fn flat(cfg: &TerrainConfig) -> Terrain {
        generate_terrain(cfg, TerrainKind::Flat, 0, 0).expect("flat terrain")
    }

    /// Bilinear height lookup, clamped to the border outside the grid.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        let fx = ((x + self.half) / self.cell).clamp(0.0, (self.n - 1) as f64);
        let fy = ((y + self.half) / self.cell).clamp(0.0, (self.n - 1) as f64);
        let ix = (fx.floor() as usize).min(self.n - 2);
        let iy = (fy.floor() as usize).min(self.n - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let h00 = self.at(ix, iy);
        let h10 = self.at(ix + 1, iy);
        let h01 = self.at(ix, iy + 1);
        let h11 = self.at(ix + 1, iy + 1);
        h00 * (1.0 - tx) * (1.0 - ty)
            + h10 * tx * (1.0 - ty)
            + h01 * (1.0 - tx) * ty
            + h11 * tx * ty
    }

    fn at(&self, ix: usize, iy: usize) -> f64 {
        self.heights[iy * self.n + ix]
    }

    pub fn max_abs_height(&self) -> f64 {
        self.heights.iter().fold(0.0, |acc: f64, h| acc.max(h.abs()))
    }

    /// Largest absolute height change between adjacent cells.
    pub fn max_step(&self) -> f64 {
        let mut m = 0.0f64;
        for iy in 0..self.n {
            for ix in 0..self.n {
                let h = self.at(ix, iy);
                if ix + 1 < self.n {
                    m = m.max((self.at(ix + 1, iy) - h).abs());
                }
                if iy + 1 < self.n {
                    m = m.max((self.at(ix, iy + 1) - h).abs());
                }
            }
        }
        m
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Long-format CSV export (x,y,z per row) for inspection and plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,z")?;
        for (idx, h) in self.heights.iter().enumerate() {
            let (x, y) = index_xy(idx, self.n, self.cell, self.half);
            writeln!(w, "{x},{y},{h}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TerrainConfig {
        TerrainConfig { max_level: 9, ..TerrainConfig::default() }
    }

    #[test]
    fn level_zero_is_flat_for_every_kind() {
        for kind in TerrainKind::ALL {
            let t = generate_terrain(&cfg(), kind, 0, 42).unwrap();
            assert!(t.max_abs_height() < 0.01, "{:?} level 0 not flat", kind);
        }
    }

    #[test]
    fn slope_level_zero_has_zero_angle() {
        let t = generate_terrain(&cfg(), TerrainKind::Slope, 0, 5).unwrap();
        assert_eq!(t.difficulty, 0.0);
        assert_eq!(t.max_abs_height(), 0.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = generate_terrain(&cfg(), TerrainKind::StairsDown, 9, 7).unwrap();
        let b = generate_terrain(&cfg(), TerrainKind::StairsDown, 9, 7).unwrap();
        assert_eq!(a.heights, b.heights);
    }

    #[test]
    fn rough_amplitude_matches_schedule_oracle() {
        let c = cfg();
        let t = generate_terrain(&c, TerrainKind::Rough, 5, 3).unwrap();
        // Independent re-evaluation of the linear level schedule.
        let expect = c.rough_amp_max * 5.0 / 9.0;
        assert_eq!(t.difficulty, expect);
        assert!(t.max_abs_height() <= expect + 1e-12);
        // A large grid should get close to the bound.
        assert!(t.max_abs_height() > 0.9 * expect);
    }

    #[test]
    fn difficulty_monotone_in_level() {
        let c = cfg();
        for kind in TerrainKind::ALL {
            let mut prev_diff = -1.0;
            let mut prev_step = -1.0;
            for level in 0..=9 {
                let t = generate_terrain(&c, kind, level, 11).unwrap();
                assert!(t.difficulty >= prev_diff, "{kind:?} difficulty not monotone");
                if matches!(kind, TerrainKind::StairsUp | TerrainKind::StairsDown) {
                    assert!(t.max_step() >= prev_step - 1e-12, "{kind:?} step not monotone");
                    prev_step = t.max_step();
                }
                prev_diff = t.difficulty;
            }
        }
    }

    #[test]
    fn unknown_level_rejected() {
        assert!(generate_terrain(&cfg(), TerrainKind::Rough, 10, 0).is_err());
    }

    #[test]
    fn border_lookup_clamps() {
        let t = generate_terrain(&cfg(), TerrainKind::Slope, 9, 0).unwrap();
        let inside = t.height(1.49, 0.0);
        let outside = t.height(25.0, 0.0);
        assert!((inside - outside).abs() < 0.05);
        assert!(outside.is_finite());
    }

    #[test]
    fn spawn_region_flat_on_rough() {
        let t = generate_terrain(&cfg(), TerrainKind::Rough, 9, 123).unwrap();
        assert!(t.height(0.0, 0.0).abs() < 1e-12);
        assert!(t.height(0.1, 0.1).abs() < 1e-12);
    }
}
