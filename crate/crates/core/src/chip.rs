//! Logical state of one NAND die: planes, blocks, pages, per-plane latch
//! banks, and the erase/program/read lifecycle.
//!
//! Pages are erase-before-program: an erased page senses as all ones and a
//! programmed page cannot be reprogrammed without erasing its block. Every
//! sensing operation draws a fresh error mask from the die's deterministic
//! seed stream, so two dies constructed with the same seed and driven by the
//! same operations observe identical error patterns.

use crate::bits::Bits;
use crate::geometry::{ChipGeometry, PageAddr};
use crate::reliability::{inject, RberModel};
use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};

/// Cell programming mode. `Enhanced` is margin-boosted single-level
/// programming: same one bit per cell as `Slc`, longer programming pulse,
/// far lower error rate (zero at a high enough time ratio).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProgramMode {
    Slc,
    Mlc,
    Tlc,
    Enhanced,
}

impl ProgramMode {
    fn to_u8(self) -> u8 {
        match self {
            ProgramMode::Slc => 0,
            ProgramMode::Mlc => 1,
            ProgramMode::Tlc => 2,
            ProgramMode::Enhanced => 3,
        }
    }

    fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => ProgramMode::Slc,
            1 => ProgramMode::Mlc,
            2 => ProgramMode::Tlc,
            3 => ProgramMode::Enhanced,
            _ => return None,
        })
    }
}

/// Per-program options. `time_ratio` is the programming-time ratio for
/// [`ProgramMode::Enhanced`] (>= 1.9 is the zero-error regime); other modes
/// ignore it. `randomized` records whether the data scrambler was on — bulk
/// bitwise processing requires raw (unrandomized) data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramOptions {
    pub randomized: bool,
    pub time_ratio: f64,
}

impl Default for ProgramOptions {
    fn default() -> Self {
        ProgramOptions { randomized: false, time_ratio: 1.9 }
    }
}

/// A programmed page. Erased pages are not materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub mode: ProgramMode,
    pub randomized: bool,
    pub time_ratio: f64,
    pub data: Bits,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BlockState {
    pub pe_cycles: u32,
    pub retention_days: f64,
    pub pages: Vec<Option<Page>>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PlaneState {
    pub s_latch: Bits,
    pub c_latch: Bits,
    pub blocks: Vec<BlockState>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ChipConfig {
    /// Maximum blocks one multi-wordline sense may span. The deployed limit
    /// is 4 (power-constrained); experiments may raise it up to 32.
    pub max_mws_blocks: u32,
    /// When false, sensing returns true cell contents (no error injection).
    pub inject_errors: bool,
}

impl Default for ChipConfig {
    fn default() -> Self {
        ChipConfig { max_mws_blocks: 4, inject_errors: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChipError {
    InvalidGeometry(String),
    AddressOutOfRange { plane: u32, block: u32, wordline: u32 },
    ProgramBeforeErase(PageAddr),
    DataLength { expected: usize, got: usize },
}

impl std::fmt::Display for ChipError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChipError::InvalidGeometry(m) => write!(f, "invalid geometry: {m}"),
            ChipError::AddressOutOfRange { plane, block, wordline } => {
                write!(f, "address out of range: plane {plane}, block {block}, wordline {wordline}")
            }
            ChipError::ProgramBeforeErase(a) => write!(
                f,
                "program before erase at plane {}, block {}, wordline {}",
                a.plane, a.block, a.wordline
            ),
            ChipError::DataLength { expected, got } => {
                write!(f, "page data length {got}, geometry wants {expected}")
            }
        }
    }
}

impl std::error::Error for ChipError {}

/// One die. Sensing operates on this state via the [`sensing`](crate::sensing)
/// module; channel/die parallelism is handled analytically by
/// [`system`](crate::system).
#[derive(Debug, Clone)]
pub struct ChipState {
    pub geometry: ChipGeometry,
    pub config: ChipConfig,
    pub rber: RberModel,
    pub(crate) planes: Vec<PlaneState>,
    seed: u64,
    draws: u64,
}

impl ChipState {
    pub fn new(geometry: ChipGeometry, seed: u64) -> Result<Self, ChipError> {
        Self::with_config(geometry, ChipConfig::default(), RberModel::default(), seed)
    }

    pub fn with_config(
        geometry: ChipGeometry,
        config: ChipConfig,
        rber: RberModel,
        seed: u64,
    ) -> Result<Self, ChipError> {
        geometry.validate().map_err(ChipError::InvalidGeometry)?;
        let bl = geometry.bitlines as usize;
        let planes = (0..geometry.planes_per_die)
            .map(|_| PlaneState {
                s_latch: Bits::zeros(bl),
                c_latch: Bits::zeros(bl),
                blocks: (0..geometry.blocks_per_plane)
                    .map(|_| BlockState {
                        pe_cycles: 0,
                        retention_days: 0.0,
                        pages: vec![None; geometry.wordlines_per_block as usize],
                    })
                    .collect(),
            })
            .collect();
        Ok(ChipState { geometry, config, rber, planes, seed, draws: 0 })
    }

    pub fn erase_block(&mut self, plane: u32, block: u32) -> Result<(), ChipError> {
        self.check_addr(plane, block, 0)?;
        let b = &mut self.planes[plane as usize].blocks[block as usize];
        b.pages.iter_mut().for_each(|p| *p = None);
        b.pe_cycles += 1;
        Ok(())
    }

    pub fn program_page(
        &mut self,
        addr: PageAddr,
        data: &Bits,
        mode: ProgramMode,
        opts: ProgramOptions,
    ) -> Result<(), ChipError> {
        self.check_addr(addr.plane, addr.block, addr.wordline)?;
        if data.len() != self.geometry.bitlines as usize {
            return Err(ChipError::DataLength {
                expected: self.geometry.bitlines as usize,
                got: data.len(),
            });
        }
        let slot = &mut self.planes[addr.plane as usize].blocks[addr.block as usize].pages
            [addr.wordline as usize];
        if slot.is_some() {
            return Err(ChipError::ProgramBeforeErase(addr));
        }
        *slot = Some(Page {
            mode,
            randomized: opts.randomized,
            time_ratio: opts.time_ratio,
            data: data.clone(),
        });
        Ok(())
    }

    /// Programmed page at `addr`, or `None` if erased.
    pub fn page(&self, addr: PageAddr) -> Result<Option<&Page>, ChipError> {
        self.check_addr(addr.plane, addr.block, addr.wordline)?;
        Ok(self.planes[addr.plane as usize].blocks[addr.block as usize].pages
            [addr.wordline as usize]
            .as_ref())
    }

    /// Set wear/retention state for a block (experiment control).
    pub fn set_block_stress(
        &mut self,
        plane: u32,
        block: u32,
        pe_cycles: u32,
        retention_days: f64,
    ) -> Result<(), ChipError> {
        self.check_addr(plane, block, 0)?;
        let b = &mut self.planes[plane as usize].blocks[block as usize];
        b.pe_cycles = pe_cycles;
        b.retention_days = retention_days;
        Ok(())
    }

    /// RBER currently in effect for the page at `addr` (0 when erased or when
    /// injection is disabled).
    pub fn page_rber(&self, addr: PageAddr) -> Result<f64, ChipError> {
        self.check_addr(addr.plane, addr.block, addr.wordline)?;
        if !self.config.inject_errors {
            return Ok(0.0);
        }
        let block = &self.planes[addr.plane as usize].blocks[addr.block as usize];
        Ok(match &block.pages[addr.wordline as usize] {
            None => 0.0,
            Some(p) => self.rber.rber(
                p.mode,
                p.randomized,
                block.pe_cycles as f64,
                block.retention_days,
                p.time_ratio,
            ),
        })
    }

    /// One array sense of a single page: true contents (all ones if erased)
    /// with a fresh error mask applied. Each call draws new errors.
    pub fn sensed_page(&mut self, addr: PageAddr) -> Result<Bits, ChipError> {
        let rate = self.page_rber(addr)?;
        let mut data = match self.page(addr)? {
            Some(p) => p.data.clone(),
            None => Bits::ones(self.geometry.bitlines as usize),
        };
        if rate > 0.0 {
            let seed = self.next_injection_seed();
            inject(&mut data, rate, seed);
        }
        Ok(data)
    }

    /// Plain page read, optionally in inverse-read mode (complemented sense).
    /// The error mask is drawn before complementing, so the inverse read of a
    /// page is the exact complement of the normal read at the same draw.
    pub fn read_page(&mut self, addr: PageAddr, inverse: bool) -> Result<Bits, ChipError> {
        let mut data = self.sensed_page(addr)?;
        if inverse {
            data.not_assign();
        }
        Ok(data)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn next_injection_seed(&mut self) -> u64 {
        let z = self.seed.wrapping_add(self.draws.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self.draws += 1;
        splitmix64(z)
    }

    pub(crate) fn check_plane(&self, plane: u32) -> Result<(), ChipError> {
        self.check_addr(plane, 0, 0)
    }

    fn check_addr(&self, plane: u32, block: u32, wordline: u32) -> Result<(), ChipError> {
        if plane >= self.geometry.planes_per_die
            || block >= self.geometry.blocks_per_plane
            || wordline >= self.geometry.wordlines_per_block
        {
            return Err(ChipError::AddressOutOfRange { plane, block, wordline });
        }
        Ok(())
    }

    /// States are equivalent if geometry, seed stream position, latches, and
    /// every block's wear and page contents match (the RBER model is config,
    /// not state).
    pub fn same_state(&self, other: &ChipState) -> bool {
        self.geometry == other.geometry
            && self.seed == other.seed
            && self.draws == other.draws
            && self.planes == other.planes
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

// ---------------------------------------------------------------------------
// Snapshot format: "FCSM" | version u16 | flags u8 | geometry 6xu32 |
// config (max_mws_blocks u32, inject u8) | seed u64 | draws u64 | per plane:
// latches, touched-block list, programmed-page list. All integers
// little-endian. flags bit 0 marks a compressed payload, which this build
// does not produce and refuses to read.
// ---------------------------------------------------------------------------

const SNAP_MAGIC: &[u8; 4] = b"FCSM";
const SNAP_VERSION: u16 = 1;

#[derive(Debug)]
pub enum SnapshotError {
    Io(io::Error),
    BadMagic,
    UnsupportedVersion(u16),
    UnsupportedCompression,
    Corrupt(String),
}

impl std::fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnapshotError::Io(e) => write!(f, "snapshot io: {e}"),
            SnapshotError::BadMagic => write!(f, "not a chip snapshot (bad magic)"),
            SnapshotError::UnsupportedVersion(v) => write!(f, "unsupported snapshot version {v}"),
            SnapshotError::UnsupportedCompression => {
                write!(f, "compressed snapshots are not supported by this build")
            }
            SnapshotError::Corrupt(m) => write!(f, "corrupt snapshot: {m}"),
        }
    }
}

impl std::error::Error for SnapshotError {}

impl From<io::Error> for SnapshotError {
    fn from(e: io::Error) -> Self {
        SnapshotError::Io(e)
    }
}

impl ChipState {
    pub fn save_snapshot<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(SNAP_MAGIC)?;
        w.write_all(&SNAP_VERSION.to_le_bytes())?;
        w.write_all(&[0u8])?; // flags: raw payload
        let g = &self.geometry;
        for v in [
            g.channels,
            g.dies_per_channel,
            g.planes_per_die,
            g.blocks_per_plane,
            g.wordlines_per_block,
            g.bitlines,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.config.max_mws_blocks.to_le_bytes())?;
        w.write_all(&[self.config.inject_errors as u8])?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.draws.to_le_bytes())?;
        for plane in &self.planes {
            w.write_all(&plane.s_latch.to_bytes())?;
            w.write_all(&plane.c_latch.to_bytes())?;
            let touched: Vec<(u32, &BlockState)> = plane
                .blocks
                .iter()
                .enumerate()
                .filter(|(_, b)| b.pe_cycles != 0 || b.retention_days != 0.0)
                .map(|(i, b)| (i as u32, b))
                .collect();
            w.write_all(&(touched.len() as u32).to_le_bytes())?;
            for (i, b) in touched {
                w.write_all(&i.to_le_bytes())?;
                w.write_all(&b.pe_cycles.to_le_bytes())?;
                w.write_all(&b.retention_days.to_le_bytes())?;
            }
            let mut pages: Vec<(u32, u32, &Page)> = Vec::new();
            for (bi, b) in plane.blocks.iter().enumerate() {
                for (wi, p) in b.pages.iter().enumerate() {
                    if let Some(p) = p {
                        pages.push((bi as u32, wi as u32, p));
                    }
                }
            }
            w.write_all(&(pages.len() as u32).to_le_bytes())?;
            for (bi, wi, p) in pages {
                w.write_all(&bi.to_le_bytes())?;
                w.write_all(&(wi as u16).to_le_bytes())?;
                w.write_all(&[p.mode.to_u8(), p.randomized as u8])?;
                w.write_all(&p.time_ratio.to_le_bytes())?;
                w.write_all(&p.data.to_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load_snapshot<R: Read>(r: &mut R, rber: RberModel) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAP_MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = read_u16(r)?;
        if version != SNAP_VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let flags = read_u8(r)?;
        if flags & 1 != 0 {
            return Err(SnapshotError::UnsupportedCompression);
        }
        if flags & !1 != 0 {
            return Err(SnapshotError::Corrupt(format!("unknown flags {flags:#x}")));
        }
        let geometry = ChipGeometry {
            channels: read_u32(r)?,
            dies_per_channel: read_u32(r)?,
            planes_per_die: read_u32(r)?,
            blocks_per_plane: read_u32(r)?,
            wordlines_per_block: read_u32(r)?,
            bitlines: read_u32(r)?,
        };
        geometry.validate().map_err(SnapshotError::Corrupt)?;
        let config = ChipConfig {
            max_mws_blocks: read_u32(r)?,
            inject_errors: read_u8(r)? != 0,
        };
        let seed = read_u64(r)?;
        let draws = read_u64(r)?;
        let mut chip = ChipState::with_config(geometry, config, rber, seed)
            .map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        chip.draws = draws;
        let latch_bytes = geometry.bitlines as usize / 8;
        for pi in 0..geometry.planes_per_die as usize {
            let mut buf = vec![0u8; latch_bytes];
            r.read_exact(&mut buf)?;
            chip.planes[pi].s_latch = Bits::from_bytes(&buf, geometry.bitlines as usize)
                .ok_or_else(|| SnapshotError::Corrupt("bad s-latch payload".into()))?;
            r.read_exact(&mut buf)?;
            chip.planes[pi].c_latch = Bits::from_bytes(&buf, geometry.bitlines as usize)
                .ok_or_else(|| SnapshotError::Corrupt("bad c-latch payload".into()))?;
            let n_touched = read_u32(r)?;
            for _ in 0..n_touched {
                let block = read_u32(r)?;
                if block >= geometry.blocks_per_plane {
                    return Err(SnapshotError::Corrupt(format!("block {block} out of range")));
                }
                let b = &mut chip.planes[pi].blocks[block as usize];
                b.pe_cycles = read_u32(r)?;
                b.retention_days = read_f64(r)?;
            }
            let n_pages = read_u32(r)?;
            for _ in 0..n_pages {
                let block = read_u32(r)?;
                let wl = read_u16(r)? as u32;
                if block >= geometry.blocks_per_plane || wl >= geometry.wordlines_per_block {
                    return Err(SnapshotError::Corrupt(format!(
                        "page address ({block}, {wl}) out of range"
                    )));
                }
                let mode = ProgramMode::from_u8(read_u8(r)?)
                    .ok_or_else(|| SnapshotError::Corrupt("unknown program mode".into()))?;
                let randomized = read_u8(r)? != 0;
                let time_ratio = read_f64(r)?;
                let mut data = vec![0u8; latch_bytes];
                r.read_exact(&mut data)?;
                let data = Bits::from_bytes(&data, geometry.bitlines as usize)
                    .ok_or_else(|| SnapshotError::Corrupt("bad page payload".into()))?;
                chip.planes[pi].blocks[block as usize].pages[wl as usize] =
                    Some(Page { mode, randomized, time_ratio, data });
            }
        }
        Ok(chip)
    }
}

fn read_u8<R: Read>(r: &mut R) -> io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u16<R: Read>(r: &mut R) -> io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}
