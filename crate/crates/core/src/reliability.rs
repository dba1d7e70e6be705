//! Raw bit-error-rate (RBER) model and error injection.
//!
//! Per-mode RBER surfaces are log-linear interpolations over log(P/E cycles)
//! x log(retention days) between measured corner values, with a fixed
//! multiplier when the data randomizer is off. Margin-boosted SLC programming
//! ("enhanced" mode) gets its own curve over the programming-time ratio: it
//! decays log-linearly and hits an empirically error-free regime at ratio
//! >= 1.9, where the model returns an exact 0.0.

use crate::bits::Bits;
use crate::chip::ProgramMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// RBER of a mode's surface at the (min, max) corners of the P/E x retention
/// clamp region: min at (100 cycles, 1 day), max at (20000 cycles, 730 days).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Surface {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RberModel {
    pub slc: Surface,
    pub mlc: Surface,
    pub tlc: Surface,
    /// Multiplier applied when the randomizer is off (raw data layout).
    pub rand_off_mult_slc: f64,
    pub rand_off_mult_mlc: f64,
    pub rand_off_mult_tlc: f64,
    pub pec_clamp: (f64, f64),
    pub retention_clamp_days: (f64, f64),
    /// Enhanced-mode curve: RBER at nominal programming time (ratio 1.0).
    pub enhanced_base: f64,
    /// RBER at ratio 1.6 (one decade below base).
    pub enhanced_at_1_6: f64,
    /// RBER approached just below the zero-error threshold.
    pub enhanced_floor: f64,
    /// Programming-time ratio at and above which no errors occur.
    pub enhanced_zero_ratio: f64,
}

impl Default for RberModel {
    fn default() -> Self {
        RberModel {
            // MLC corners are measured; SLC/TLC corners are calibrated to sit
            // roughly a decade below/above the MLC surface.
            slc: Surface { min: 5.4e-5, max: 1.0e-3 },
            mlc: Surface { min: 8.6e-4, max: 1.6e-2 },
            tlc: Surface { min: 2.4e-3, max: 4.4e-2 },
            rand_off_mult_slc: 1.91,
            rand_off_mult_mlc: 4.92,
            rand_off_mult_tlc: 4.92,
            pec_clamp: (100.0, 20_000.0),
            retention_clamp_days: (1.0, 730.0),
            enhanced_base: 1.0e-6,
            enhanced_at_1_6: 1.0e-7,
            enhanced_floor: 1.0e-12,
            enhanced_zero_ratio: 1.9,
        }
    }
}

impl RberModel {
    /// RBER for a page programmed in `mode`. `esp_time_ratio` only matters for
    /// [`ProgramMode::Enhanced`]; the other modes use the wear/retention
    /// surface and the randomizer multiplier.
    pub fn rber(
        &self,
        mode: ProgramMode,
        randomized: bool,
        pec: f64,
        retention_days: f64,
        esp_time_ratio: f64,
    ) -> f64 {
        match mode {
            ProgramMode::Enhanced => self.enhanced_rber(esp_time_ratio),
            ProgramMode::Slc => {
                let m = if randomized { 1.0 } else { self.rand_off_mult_slc };
                self.surface_at(self.slc, pec, retention_days) * m
            }
            ProgramMode::Mlc => {
                let m = if randomized { 1.0 } else { self.rand_off_mult_mlc };
                self.surface_at(self.mlc, pec, retention_days) * m
            }
            ProgramMode::Tlc => {
                let m = if randomized { 1.0 } else { self.rand_off_mult_tlc };
                self.surface_at(self.tlc, pec, retention_days) * m
            }
        }
    }

    /// Enhanced-mode RBER over the programming-time ratio. Exactly 0.0 at and
    /// above the zero-error threshold.
    pub fn enhanced_rber(&self, time_ratio: f64) -> f64 {
        if time_ratio >= self.enhanced_zero_ratio {
            return 0.0;
        }
        let r = time_ratio.clamp(1.0, self.enhanced_zero_ratio);
        if r <= 1.6 {
            // one decade of improvement from ratio 1.0 to 1.6
            let t = (r - 1.0) / 0.6;
            log_lerp(self.enhanced_base, self.enhanced_at_1_6, t)
        } else {
            // steeper decay toward the floor just below the threshold
            let t = (r - 1.6) / (self.enhanced_zero_ratio - 1.6);
            log_lerp(self.enhanced_at_1_6, self.enhanced_floor, t)
        }
    }

    fn surface_at(&self, s: Surface, pec: f64, retention_days: f64) -> f64 {
        let pec = pec.clamp(self.pec_clamp.0, self.pec_clamp.1);
        let ret = retention_days.clamp(self.retention_clamp_days.0, self.retention_clamp_days.1);
        let u = (pec / self.pec_clamp.0).ln() / (self.pec_clamp.1 / self.pec_clamp.0).ln();
        let v = (ret / self.retention_clamp_days.0).ln()
            / (self.retention_clamp_days.1 / self.retention_clamp_days.0).ln();
        // equal-weight blend of the two stress axes, clamped to the corners
        log_lerp(s.min, s.max, 0.5 * u + 0.5 * v).clamp(s.min, s.max)
    }
}

fn log_lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (b / a).powf(t)
}

/// Flips each bit independently with probability `rate`, deterministically
/// under `seed`. Sampling uses geometric gap lengths, so cost is
/// O(flips), not O(bits). Returns the number of flips.
pub fn inject(bits: &mut Bits, rate: f64, seed: u64) -> usize {
    assert!((0.0..1.0).contains(&rate), "error rate must be in [0, 1)");
    if rate == 0.0 || bits.is_empty() {
        return 0;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let ln_keep = (1.0 - rate).ln();
    let mut flips = 0;
    let mut pos: usize = 0;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let gap = (u.ln() / ln_keep) as usize;
        pos = match pos.checked_add(gap) {
            Some(p) if p < bits.len() => p,
            _ => break,
        };
        bits.set(pos, !bits.get(pos));
        flips += 1;
        pos += 1;
        if pos >= bits.len() {
            break;
        }
    }
    flips
}
