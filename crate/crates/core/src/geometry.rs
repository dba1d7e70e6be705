//! Chip and SSD geometry.
//!
//! The addressing unit for sensing, programming, and erase is a 48-wordline
//! block (the physically contiguous group a multi-wordline sense can cover).
//! Default geometry: 8 channels x 8 dies x 2 planes, 8192 such blocks per
//! plane, 16 KiB pages (131072 bitlines).

use serde::{Deserialize, Serialize};

pub const WORDLINES_PER_BLOCK: u32 = 48;

/// Full SSD geometry. A [`ChipState`](crate::chip::ChipState) instantiates a
/// single die (`planes_per_die` planes); channel/die counts feed the system
/// timing model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChipGeometry {
    pub channels: u32,
    pub dies_per_channel: u32,
    pub planes_per_die: u32,
    pub blocks_per_plane: u32,
    pub wordlines_per_block: u32,
    /// Bits per page; must be a multiple of 8.
    pub bitlines: u32,
}

impl Default for ChipGeometry {
    fn default() -> Self {
        ChipGeometry {
            channels: 8,
            dies_per_channel: 8,
            planes_per_die: 2,
            blocks_per_plane: 8192,
            wordlines_per_block: WORDLINES_PER_BLOCK,
            bitlines: 131_072,
        }
    }
}

impl ChipGeometry {
    /// Single-die, single-plane geometry for unit tests and desk-scale runs.
    pub fn toy(bitlines: u32, blocks_per_plane: u32) -> Self {
        ChipGeometry {
            channels: 1,
            dies_per_channel: 1,
            planes_per_die: 1,
            blocks_per_plane,
            wordlines_per_block: WORDLINES_PER_BLOCK,
            bitlines,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.channels == 0
            || self.dies_per_channel == 0
            || self.planes_per_die == 0
            || self.blocks_per_plane == 0
            || self.wordlines_per_block == 0
            || self.bitlines == 0
        {
            return Err("all geometry fields must be nonzero".into());
        }
        if self.bitlines % 8 != 0 {
            return Err(format!("bitlines ({}) must be a multiple of 8", self.bitlines));
        }
        if self.wordlines_per_block > 64 {
            return Err("wordlines_per_block must fit a 64-bit mask".into());
        }
        Ok(())
    }

    pub fn dies(&self) -> u64 {
        self.channels as u64 * self.dies_per_channel as u64
    }

    pub fn planes_total(&self) -> u64 {
        self.dies() * self.planes_per_die as u64
    }

    pub fn page_bytes(&self) -> usize {
        self.bitlines as usize / 8
    }

    pub fn pages_per_plane(&self) -> u64 {
        self.blocks_per_plane as u64 * self.wordlines_per_block as u64
    }
}

/// Address of one page within a die.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageAddr {
    pub plane: u32,
    pub block: u32,
    pub wordline: u32,
}

impl PageAddr {
    pub fn new(plane: u32, block: u32, wordline: u32) -> Self {
        PageAddr { plane, block, wordline }
    }
}
