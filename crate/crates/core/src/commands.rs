//! Wire codec for the device command set.
//!
//! Three frame types, all integers little-endian:
//!
//! ```text
//! sense:   0xC5 | flags u8 | group { block u24 | wl-mask u48 } | 0x85 group ... | 0xD0
//! program: 0xC6 | block u24 | wordline u8 | page payload (fixed page size)
//! xor:     0xC7 | plane u8
//! ```
//!
//! The sense flags byte packs inverse / init-s / init-c / move in bits 0..=3;
//! bits 4..=7 are reserved zero. Block ids on the wire are die-global
//! (`plane * blocks_per_plane + block`). A sense frame carries at most
//! [`MAX_GROUPS`] groups — the codec rejects more regardless of how the
//! engine is configured — and every group must select a distinct block on
//! the same plane with a nonzero wordline mask.

use crate::geometry::{ChipGeometry, PageAddr};
use crate::sensing::{MwsFlags, MwsGroup, MwsTarget};
use serde::{Deserialize, Serialize};

pub const OP_SENSE: u8 = 0xC5;
pub const OP_PROGRAM: u8 = 0xC6;
pub const OP_LATCH_XOR: u8 = 0xC7;
pub const SEP_CONTINUE: u8 = 0x85;
pub const SEP_END: u8 = 0xD0;

/// Hard wire-format limit on blocks per sense frame.
pub const MAX_GROUPS: usize = 4;

const FLAG_INVERSE: u8 = 1 << 0;
const FLAG_INIT_S: u8 = 1 << 1;
const FLAG_INIT_C: u8 = 1 << 2;
const FLAG_MOVE: u8 = 1 << 3;

/// One decoded device command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommandFrame {
    Sense { flags: MwsFlags, target: MwsTarget },
    /// Margin-boosted single-level program of one page.
    Program { addr: PageAddr, payload: Vec<u8> },
    LatchXor { plane: u32 },
}

#[derive(Debug, PartialEq, Eq)]
pub enum CodecError {
    UnknownOpcode(u8),
    Truncated,
    ReservedFlagBits(u8),
    NoGroups,
    TooManyGroups(usize),
    DuplicateBlock(u32),
    EmptyWordlineMask(u32),
    WordlineMaskOutOfRange { block: u32, mask: u64 },
    BlockOutOfRange(u32),
    WordlineOutOfRange(u32),
    PlaneOutOfRange(u32),
    PlaneMismatch,
    BadSeparator(u8),
    PayloadLength { expected: usize, got: usize },
}

impl std::fmt::Display for CodecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use CodecError::*;
        match self {
            UnknownOpcode(op) => write!(f, "unknown opcode {op:#04x}"),
            Truncated => write!(f, "frame truncated"),
            ReservedFlagBits(b) => write!(f, "reserved flag bits set: {b:#04x}"),
            NoGroups => write!(f, "sense frame carries no groups"),
            TooManyGroups(n) => write!(f, "sense frame carries {n} groups, wire limit is {MAX_GROUPS}"),
            DuplicateBlock(b) => write!(f, "block {b} repeated in sense frame"),
            EmptyWordlineMask(b) => write!(f, "block {b} selects no wordlines"),
            WordlineMaskOutOfRange { block, mask } => {
                write!(f, "block {block} wordline mask {mask:#x} exceeds the block")
            }
            BlockOutOfRange(b) => write!(f, "die-global block {b} out of range"),
            WordlineOutOfRange(w) => write!(f, "wordline {w} out of range"),
            PlaneOutOfRange(p) => write!(f, "plane {p} out of range"),
            PlaneMismatch => write!(f, "sense groups span multiple planes"),
            BadSeparator(b) => write!(f, "expected group separator or terminator, found {b:#04x}"),
            PayloadLength { expected, got } => {
                write!(f, "program payload is {got} bytes, page size is {expected}")
            }
        }
    }
}

impl std::error::Error for CodecError {}

/// Geometry-bound encoder/decoder. The page size fixes the program payload
/// length; plane/block/wordline counts bound the address fields.
#[derive(Debug, Clone, Copy)]
pub struct Codec {
    pub planes: u32,
    pub blocks_per_plane: u32,
    pub wordlines_per_block: u32,
    pub page_bytes: usize,
}

impl Codec {
    pub fn for_geometry(g: &ChipGeometry) -> Self {
        Codec {
            planes: g.planes_per_die,
            blocks_per_plane: g.blocks_per_plane,
            wordlines_per_block: g.wordlines_per_block,
            page_bytes: g.page_bytes(),
        }
    }

    fn global_block(&self, plane: u32, block: u32) -> u32 {
        plane * self.blocks_per_plane + block
    }

    fn split_block(&self, global: u32) -> Result<(u32, u32), CodecError> {
        let plane = global / self.blocks_per_plane;
        if plane >= self.planes {
            return Err(CodecError::BlockOutOfRange(global));
        }
        Ok((plane, global % self.blocks_per_plane))
    }

    fn validate_sense(&self, target: &MwsTarget) -> Result<(), CodecError> {
        if target.plane >= self.planes {
            return Err(CodecError::PlaneOutOfRange(target.plane));
        }
        if target.groups.is_empty() {
            return Err(CodecError::NoGroups);
        }
        if target.groups.len() > MAX_GROUPS {
            return Err(CodecError::TooManyGroups(target.groups.len()));
        }
        let mut seen = Vec::with_capacity(target.groups.len());
        for g in &target.groups {
            if g.block >= self.blocks_per_plane {
                return Err(CodecError::BlockOutOfRange(
                    self.global_block(target.plane, g.block),
                ));
            }
            if seen.contains(&g.block) {
                return Err(CodecError::DuplicateBlock(g.block));
            }
            seen.push(g.block);
            if g.wordlines == 0 {
                return Err(CodecError::EmptyWordlineMask(g.block));
            }
            if self.wordlines_per_block < 64 && g.wordlines >> self.wordlines_per_block != 0 {
                return Err(CodecError::WordlineMaskOutOfRange {
                    block: g.block,
                    mask: g.wordlines,
                });
            }
        }
        Ok(())
    }

    pub fn encode(&self, frame: &CommandFrame, out: &mut Vec<u8>) -> Result<(), CodecError> {
        match frame {
            CommandFrame::Sense { flags, target } => {
                self.validate_sense(target)?;
                out.push(OP_SENSE);
                let mut fb = 0u8;
                if flags.inverse {
                    fb |= FLAG_INVERSE;
                }
                if flags.init_s {
                    fb |= FLAG_INIT_S;
                }
                if flags.init_c {
                    fb |= FLAG_INIT_C;
                }
                if flags.move_to_cache {
                    fb |= FLAG_MOVE;
                }
                out.push(fb);
                for (i, g) in target.groups.iter().enumerate() {
                    let global = self.global_block(target.plane, g.block);
                    out.extend_from_slice(&global.to_le_bytes()[..3]);
                    out.extend_from_slice(&g.wordlines.to_le_bytes()[..6]);
                    out.push(if i + 1 == target.groups.len() { SEP_END } else { SEP_CONTINUE });
                }
                Ok(())
            }
            CommandFrame::Program { addr, payload } => {
                if addr.plane >= self.planes {
                    return Err(CodecError::PlaneOutOfRange(addr.plane));
                }
                if addr.block >= self.blocks_per_plane {
                    return Err(CodecError::BlockOutOfRange(
                        self.global_block(addr.plane, addr.block),
                    ));
                }
                if addr.wordline >= self.wordlines_per_block || addr.wordline > 255 {
                    return Err(CodecError::WordlineOutOfRange(addr.wordline));
                }
                if payload.len() != self.page_bytes {
                    return Err(CodecError::PayloadLength {
                        expected: self.page_bytes,
                        got: payload.len(),
                    });
                }
                out.push(OP_PROGRAM);
                out.extend_from_slice(&self.global_block(addr.plane, addr.block).to_le_bytes()[..3]);
                out.push(addr.wordline as u8);
                out.extend_from_slice(payload);
                Ok(())
            }
            CommandFrame::LatchXor { plane } => {
                if *plane >= self.planes {
                    return Err(CodecError::PlaneOutOfRange(*plane));
                }
                out.push(OP_LATCH_XOR);
                out.push(*plane as u8);
                Ok(())
            }
        }
    }

    pub fn encode_to_vec(&self, frame: &CommandFrame) -> Result<Vec<u8>, CodecError> {
        let mut out = Vec::new();
        self.encode(frame, &mut out)?;
        Ok(out)
    }

    /// Decodes one frame from the front of `bytes`; returns it with the
    /// number of bytes consumed.
    pub fn decode(&self, bytes: &[u8]) -> Result<(CommandFrame, usize), CodecError> {
        let op = *bytes.first().ok_or(CodecError::Truncated)?;
        match op {
            OP_SENSE => {
                let fb = *bytes.get(1).ok_or(CodecError::Truncated)?;
                if fb & 0xF0 != 0 {
                    return Err(CodecError::ReservedFlagBits(fb));
                }
                let flags = MwsFlags {
                    inverse: fb & FLAG_INVERSE != 0,
                    init_s: fb & FLAG_INIT_S != 0,
                    init_c: fb & FLAG_INIT_C != 0,
                    move_to_cache: fb & FLAG_MOVE != 0,
                };
                let mut pos = 2;
                let mut plane = None;
                let mut groups = Vec::new();
                loop {
                    if groups.len() == MAX_GROUPS {
                        // a separator said another group follows
                        return Err(CodecError::TooManyGroups(MAX_GROUPS + 1));
                    }
                    let head = bytes.get(pos..pos + 9).ok_or(CodecError::Truncated)?;
                    let global =
                        u32::from_le_bytes([head[0], head[1], head[2], 0]);
                    let mut wl = [0u8; 8];
                    wl[..6].copy_from_slice(&head[3..9]);
                    let mask = u64::from_le_bytes(wl);
                    let (p, block) = self.split_block(global)?;
                    match plane {
                        None => plane = Some(p),
                        Some(p0) if p0 != p => return Err(CodecError::PlaneMismatch),
                        _ => {}
                    }
                    groups.push(MwsGroup { block, wordlines: mask });
                    pos += 9;
                    match *bytes.get(pos).ok_or(CodecError::Truncated)? {
                        SEP_END => {
                            pos += 1;
                            break;
                        }
                        SEP_CONTINUE => pos += 1,
                        other => return Err(CodecError::BadSeparator(other)),
                    }
                }
                let target = MwsTarget { plane: plane.unwrap(), groups };
                self.validate_sense(&target)?;
                Ok((CommandFrame::Sense { flags, target }, pos))
            }
            OP_PROGRAM => {
                let head = bytes.get(1..5).ok_or(CodecError::Truncated)?;
                let global = u32::from_le_bytes([head[0], head[1], head[2], 0]);
                let wordline = head[3] as u32;
                let (plane, block) = self.split_block(global)?;
                if wordline >= self.wordlines_per_block {
                    return Err(CodecError::WordlineOutOfRange(wordline));
                }
                let payload =
                    bytes.get(5..5 + self.page_bytes).ok_or(CodecError::Truncated)?.to_vec();
                Ok((
                    CommandFrame::Program { addr: PageAddr::new(plane, block, wordline), payload },
                    5 + self.page_bytes,
                ))
            }
            OP_LATCH_XOR => {
                let plane = *bytes.get(1).ok_or(CodecError::Truncated)? as u32;
                if plane >= self.planes {
                    return Err(CodecError::PlaneOutOfRange(plane));
                }
                Ok((CommandFrame::LatchXor { plane }, 2))
            }
            other => Err(CodecError::UnknownOpcode(other)),
        }
    }

    /// Decodes a stream of concatenated frames; the input must end exactly on
    /// a frame boundary.
    pub fn decode_all(&self, mut bytes: &[u8]) -> Result<Vec<CommandFrame>, CodecError> {
        let mut frames = Vec::new();
        while !bytes.is_empty() {
            let (frame, used) = self.decode(bytes)?;
            frames.push(frame);
            bytes = &bytes[used..];
        }
        Ok(frames)
    }
}
