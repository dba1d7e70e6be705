//! Multi-wordline sensing (MWS) and the per-bitline latch pipeline.
//!
//! One MWS activates up to four blocks of one plane simultaneously; within a
//! block any subset of the 48 wordlines may be selected. Bitline `j` senses
//!
//! ```text
//! raw_j = OR over groups g ( AND over selected wordlines w of g ( bit_j(g, w) ) )
//! ```
//!
//! i.e. wordlines in series AND, blocks in parallel OR. Inverse-read mode
//! complements that result at the sense amplifier. The sensing latch (`s`)
//! either captures the result or AND-accumulates it; the cache latch (`c`)
//! OR-accumulates moved `s` values and supports an in-latch XOR, which is how
//! multi-step expressions resolve without leaving the die.

use crate::bits::Bits;
use crate::chip::{ChipError, ChipState};
use crate::geometry::PageAddr;
use serde::{Deserialize, Serialize};

/// Wordline selection within one block: bit `w` of `wordlines` selects
/// wordline `w`. Must be nonzero and within the block's wordline count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MwsGroup {
    pub block: u32,
    pub wordlines: u64,
}

impl MwsGroup {
    pub fn new(block: u32, wordlines: &[u32]) -> Self {
        let mut mask = 0u64;
        for &w in wordlines {
            mask |= 1 << w;
        }
        MwsGroup { block, wordlines: mask }
    }

    pub fn wordline_count(&self) -> u32 {
        self.wordlines.count_ones()
    }

    pub fn iter_wordlines(&self) -> impl Iterator<Item = u32> + '_ {
        (0..64).filter(|w| self.wordlines >> w & 1 == 1)
    }
}

/// One multi-wordline sense: up to the configured block limit of groups on a
/// single plane, distinct blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MwsTarget {
    pub plane: u32,
    pub groups: Vec<MwsGroup>,
}

impl MwsTarget {
    pub fn single(plane: u32, block: u32, wordlines: &[u32]) -> Self {
        MwsTarget { plane, groups: vec![MwsGroup::new(block, wordlines)] }
    }

    /// Largest wordline count of any group (drives the intra-block latency).
    pub fn max_wordlines(&self) -> u32 {
        self.groups.iter().map(|g| g.wordline_count()).max().unwrap_or(0)
    }
}

/// Latch-control flags carried by one sense command, applied in this order:
/// sense (complement if `inverse`), update `s`, clear `c` if `init_c`, then
/// OR `s` into `c` if `move_to_cache`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MwsFlags {
    /// Complement the sensed result. Requires `init_s`: a complemented sense
    /// replaces `s`, it cannot AND-accumulate.
    pub inverse: bool,
    /// Load `s` with the sensed result instead of AND-accumulating into it.
    pub init_s: bool,
    /// Clear `c` before any move (clear-then-move within one command).
    pub init_c: bool,
    /// OR the updated `s` into `c`.
    pub move_to_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SenseError {
    Chip(ChipError),
    NoGroups,
    TooManyGroups { got: usize, max: u32 },
    DuplicateBlock(u32),
    EmptyWordlineMask(u32),
    WordlineMaskOutOfRange { block: u32, mask: u64 },
    InverseWithoutInitS,
}

impl std::fmt::Display for SenseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SenseError::Chip(e) => write!(f, "{e}"),
            SenseError::NoGroups => write!(f, "sense target has no block groups"),
            SenseError::TooManyGroups { got, max } => {
                write!(f, "sense target spans {got} blocks, limit is {max}")
            }
            SenseError::DuplicateBlock(b) => write!(f, "block {b} appears twice in sense target"),
            SenseError::EmptyWordlineMask(b) => {
                write!(f, "block {b} selects no wordlines")
            }
            SenseError::WordlineMaskOutOfRange { block, mask } => {
                write!(f, "block {block} wordline mask {mask:#x} exceeds the block")
            }
            SenseError::InverseWithoutInitS => {
                write!(f, "inverse sense must initialize the sensing latch")
            }
        }
    }
}

impl std::error::Error for SenseError {}

impl From<ChipError> for SenseError {
    fn from(e: ChipError) -> Self {
        SenseError::Chip(e)
    }
}

fn validate_target(chip: &ChipState, target: &MwsTarget) -> Result<(), SenseError> {
    chip.check_plane(target.plane)?;
    if target.groups.is_empty() {
        return Err(SenseError::NoGroups);
    }
    let max = chip.config.max_mws_blocks;
    if target.groups.len() > max as usize {
        return Err(SenseError::TooManyGroups { got: target.groups.len(), max });
    }
    let wl_limit = chip.geometry.wordlines_per_block;
    let mut seen = Vec::with_capacity(target.groups.len());
    for g in &target.groups {
        if g.block >= chip.geometry.blocks_per_plane {
            return Err(SenseError::Chip(ChipError::AddressOutOfRange {
                plane: target.plane,
                block: g.block,
                wordline: 0,
            }));
        }
        if seen.contains(&g.block) {
            return Err(SenseError::DuplicateBlock(g.block));
        }
        seen.push(g.block);
        if g.wordlines == 0 {
            return Err(SenseError::EmptyWordlineMask(g.block));
        }
        if wl_limit < 64 && g.wordlines >> wl_limit != 0 {
            return Err(SenseError::WordlineMaskOutOfRange { block: g.block, mask: g.wordlines });
        }
    }
    Ok(())
}

/// The array-level sense: OR over groups of AND over selected wordlines, with
/// per-page error injection (each page contributes one fresh sensing event).
/// Does not touch the latches.
pub fn raw_sense(chip: &mut ChipState, target: &MwsTarget) -> Result<Bits, SenseError> {
    validate_target(chip, target)?;
    let bl = chip.geometry.bitlines as usize;
    let mut result = Bits::zeros(bl);
    for g in &target.groups {
        let mut acc = Bits::ones(bl);
        for w in g.iter_wordlines() {
            let page = chip.sensed_page(PageAddr::new(target.plane, g.block, w))?;
            acc.and_assign(&page);
        }
        result.or_assign(&acc);
    }
    Ok(result)
}

/// One full sense command: array sense plus latch updates per `flags`.
pub fn mws_execute(
    chip: &mut ChipState,
    target: &MwsTarget,
    flags: MwsFlags,
) -> Result<(), SenseError> {
    if flags.inverse && !flags.init_s {
        return Err(SenseError::InverseWithoutInitS);
    }
    let mut sensed = raw_sense(chip, target)?;
    if flags.inverse {
        sensed.not_assign();
    }
    let plane = &mut chip.planes[target.plane as usize];
    if flags.init_s {
        plane.s_latch = sensed;
    } else {
        plane.s_latch.and_assign(&sensed);
    }
    if flags.init_c {
        plane.c_latch.fill(false);
    }
    if flags.move_to_cache {
        plane.c_latch.or_assign(&plane.s_latch);
    }
    Ok(())
}

/// In-latch XOR: `c := s XOR c`.
pub fn xor_latches(chip: &mut ChipState, plane: u32) -> Result<(), SenseError> {
    chip.check_plane(plane)?;
    let p = &mut chip.planes[plane as usize];
    p.c_latch.xor_assign(&p.s_latch);
    Ok(())
}

/// Copy of the cache latch (what a data-out transfer would ship).
pub fn read_cache(chip: &ChipState, plane: u32) -> Result<Bits, SenseError> {
    chip.check_plane(plane)?;
    Ok(chip.planes[plane as usize].c_latch.clone())
}

/// Copy of the sensing latch (test/debug visibility).
pub fn read_sensing(chip: &ChipState, plane: u32) -> Result<Bits, SenseError> {
    chip.check_plane(plane)?;
    Ok(chip.planes[plane as usize].s_latch.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chip::{ChipConfig, ProgramMode, ProgramOptions};
    use crate::geometry::ChipGeometry;
    use crate::reliability::RberModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const BL: usize = 8;

    /// Die with every page of the first `blocks` blocks programmed to random
    /// data in the error-free enhanced mode.
    fn programmed_chip(seed: u64, blocks: u32) -> (ChipState, ChaCha12Rng) {
        let g = ChipGeometry::toy(BL as u32, blocks.max(6));
        let mut chip = ChipState::new(g, seed).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xABCD);
        for b in 0..blocks {
            for w in 0..g.wordlines_per_block {
                let data = Bits::random(&mut rng, BL, 0.5);
                chip.program_page(
                    PageAddr::new(0, b, w),
                    &data,
                    ProgramMode::Enhanced,
                    ProgramOptions::default(),
                )
                .unwrap();
            }
        }
        (chip, rng)
    }

    /// Independent per-bit oracle for the array sense: direct boolean loops
    /// over stored page contents (erased pages read as one).
    fn naive_raw(chip: &ChipState, target: &MwsTarget) -> Vec<bool> {
        (0..BL)
            .map(|j| {
                target.groups.iter().any(|g| {
                    g.iter_wordlines().all(|w| {
                        match chip.page(PageAddr::new(target.plane, g.block, w)).unwrap() {
                            Some(p) => p.data.get(j),
                            None => true,
                        }
                    })
                })
            })
            .collect()
    }

    fn random_target(rng: &mut ChaCha12Rng, blocks: u32, max_groups: usize) -> MwsTarget {
        let n_groups = rng.gen_range(1..=max_groups);
        let mut avail: Vec<u32> = (0..blocks).collect();
        let mut groups = Vec::new();
        for _ in 0..n_groups {
            let block = avail.swap_remove(rng.gen_range(0..avail.len()));
            let n_wl: u32 = rng.gen_range(1..=48);
            let mut mask = 0u64;
            while mask.count_ones() < n_wl {
                mask |= 1 << rng.gen_range(0..48);
            }
            groups.push(MwsGroup { block, wordlines: mask });
        }
        MwsTarget { plane: 0, groups }
    }

    #[test]
    fn raw_sense_matches_per_bit_oracle() {
        let (mut chip, mut rng) = programmed_chip(1, 5);
        for _ in 0..500 {
            let target = random_target(&mut rng, 5, 4);
            let got = raw_sense(&mut chip, &target).unwrap();
            let want = naive_raw(&chip, &target);
            for j in 0..BL {
                assert_eq!(got.get(j), want[j], "bitline {j} target {target:?}");
            }
        }
    }

    #[test]
    fn erased_pages_sense_as_identity_in_and() {
        let g = ChipGeometry::toy(BL as u32, 2);
        let mut chip = ChipState::new(g, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for w in 0..4 {
            let data = Bits::random(&mut rng, BL, 0.5);
            chip.program_page(
                PageAddr::new(0, 0, w),
                &data,
                ProgramMode::Enhanced,
                ProgramOptions::default(),
            )
            .unwrap();
        }
        // wordlines 40..44 of block 0 are erased: AND-ing them in is identity
        let base = raw_sense(&mut chip, &MwsTarget::single(0, 0, &[0, 1, 2, 3])).unwrap();
        let mixed =
            raw_sense(&mut chip, &MwsTarget::single(0, 0, &[0, 1, 2, 3, 40, 41, 42, 43])).unwrap();
        assert_eq!(mixed, base);
        // a fully erased group saturates the OR with all ones
        let erased_group = MwsTarget {
            plane: 0,
            groups: vec![MwsGroup::new(0, &[0, 1]), MwsGroup::new(1, &[3, 4])],
        };
        assert_eq!(raw_sense(&mut chip, &erased_group).unwrap(), Bits::ones(BL));
    }

    /// Reference latch interpreter: straight-line per-bit state machine.
    struct NaiveLatches {
        s: Vec<bool>,
        c: Vec<bool>,
    }

    impl NaiveLatches {
        fn new() -> Self {
            NaiveLatches { s: vec![false; BL], c: vec![false; BL] }
        }

        fn step(&mut self, raw: &[bool], flags: MwsFlags) {
            for j in 0..BL {
                let n = if flags.inverse { !raw[j] } else { raw[j] };
                self.s[j] = if flags.init_s { n } else { self.s[j] && n };
                if flags.init_c {
                    self.c[j] = false;
                }
                if flags.move_to_cache {
                    self.c[j] = self.c[j] || self.s[j];
                }
            }
        }

        fn xor(&mut self) {
            for j in 0..BL {
                self.c[j] ^= self.s[j];
            }
        }
    }

    #[test]
    fn latch_sequences_match_reference_interpreter() {
        let (mut chip, mut rng) = programmed_chip(3, 5);
        for seq in 0..200 {
            // re-randomize latch start by an initializing first op
            let mut naive = NaiveLatches::new();
            chip.planes[0].s_latch = Bits::zeros(BL);
            chip.planes[0].c_latch = Bits::zeros(BL);
            for op in 0..6 {
                if op > 0 && rng.gen_bool(0.2) {
                    xor_latches(&mut chip, 0).unwrap();
                    naive.xor();
                    continue;
                }
                let target = random_target(&mut rng, 5, 4);
                let init_s = op == 0 || rng.gen_bool(0.5);
                let flags = MwsFlags {
                    inverse: init_s && rng.gen_bool(0.3),
                    init_s,
                    init_c: rng.gen_bool(0.3),
                    move_to_cache: rng.gen_bool(0.5),
                };
                let raw = naive_raw(&chip, &target);
                mws_execute(&mut chip, &target, flags).unwrap();
                naive.step(&raw, flags);
            }
            let s = read_sensing(&chip, 0).unwrap();
            let c = read_cache(&chip, 0).unwrap();
            for j in 0..BL {
                assert_eq!(s.get(j), naive.s[j], "seq {seq} s bit {j}");
                assert_eq!(c.get(j), naive.c[j], "seq {seq} c bit {j}");
            }
        }
    }

    #[test]
    fn and_accumulation_is_idempotent() {
        let (mut chip, _) = programmed_chip(4, 3);
        let t = MwsTarget::single(0, 1, &[0, 5, 9]);
        mws_execute(&mut chip, &t, MwsFlags { init_s: true, ..Default::default() }).unwrap();
        let once = read_sensing(&chip, 0).unwrap();
        mws_execute(&mut chip, &t, MwsFlags::default()).unwrap();
        assert_eq!(read_sensing(&chip, 0).unwrap(), once);
    }

    #[test]
    fn or_of_inverted_operands_via_inverse_sense() {
        // Operands stored complemented, one inverse intra-block sense:
        // s = NOT(AND over w of NOT x_w) = OR over w of x_w, for 1..=48 operands.
        let g = ChipGeometry::toy(BL as u32, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for n in 1..=48u32 {
            let mut chip = ChipState::new(g, n as u64).unwrap();
            let mut want = Bits::zeros(BL);
            for w in 0..n {
                let x = Bits::random(&mut rng, BL, 0.3);
                want.or_assign(&x);
                let mut stored = x.clone();
                stored.not_assign();
                chip.program_page(
                    PageAddr::new(0, 0, w),
                    &stored,
                    ProgramMode::Enhanced,
                    ProgramOptions::default(),
                )
                .unwrap();
            }
            let wls: Vec<u32> = (0..n).collect();
            let t = MwsTarget::single(0, 0, &wls);
            let flags = MwsFlags { inverse: true, init_s: true, ..Default::default() };
            mws_execute(&mut chip, &t, flags).unwrap();
            assert_eq!(read_sensing(&chip, 0).unwrap(), want, "n = {n}");
        }
    }

    #[test]
    fn move_or_accumulates_branches() {
        let (mut chip, _) = programmed_chip(6, 4);
        let t1 = MwsTarget::single(0, 0, &[0, 1]);
        let t2 = MwsTarget::single(0, 2, &[7]);
        let r1 = raw_sense(&mut chip, &t1).unwrap();
        let r2 = raw_sense(&mut chip, &t2).unwrap();
        mws_execute(
            &mut chip,
            &t1,
            MwsFlags { init_s: true, init_c: true, move_to_cache: true, ..Default::default() },
        )
        .unwrap();
        mws_execute(
            &mut chip,
            &t2,
            MwsFlags { init_s: true, move_to_cache: true, ..Default::default() },
        )
        .unwrap();
        let mut want = r1;
        want.or_assign(&r2);
        assert_eq!(read_cache(&chip, 0).unwrap(), want);
    }

    #[test]
    fn init_c_clears_before_move() {
        let (mut chip, _) = programmed_chip(7, 2);
        chip.planes[0].c_latch = Bits::ones(BL); // junk from a previous op
        let t = MwsTarget::single(0, 0, &[3, 4, 5]);
        mws_execute(
            &mut chip,
            &t,
            MwsFlags { init_s: true, init_c: true, move_to_cache: true, ..Default::default() },
        )
        .unwrap();
        // clear-then-move: c ends exactly equal to s, junk gone
        assert_eq!(read_cache(&chip, 0).unwrap(), read_sensing(&chip, 0).unwrap());
    }

    #[test]
    fn xor_latches_updates_cache() {
        let (mut chip, mut rng) = programmed_chip(8, 2);
        let s = Bits::random(&mut rng, BL, 0.5);
        let c = Bits::random(&mut rng, BL, 0.5);
        chip.planes[0].s_latch = s.clone();
        chip.planes[0].c_latch = c.clone();
        xor_latches(&mut chip, 0).unwrap();
        let mut want = c;
        want.xor_assign(&s);
        assert_eq!(read_cache(&chip, 0).unwrap(), want);
        assert_eq!(read_sensing(&chip, 0).unwrap(), s); // s untouched
    }

    #[test]
    fn validation_rejects_malformed_targets() {
        let (mut chip, _) = programmed_chip(9, 5);
        let t = MwsTarget { plane: 0, groups: (0..5).map(|b| MwsGroup::new(b, &[0])).collect() };
        assert!(matches!(
            raw_sense(&mut chip, &t),
            Err(SenseError::TooManyGroups { got: 5, max: 4 })
        ));
        let t = MwsTarget {
            plane: 0,
            groups: vec![MwsGroup::new(1, &[0]), MwsGroup::new(1, &[2])],
        };
        assert!(matches!(raw_sense(&mut chip, &t), Err(SenseError::DuplicateBlock(1))));
        let t = MwsTarget { plane: 0, groups: vec![MwsGroup { block: 0, wordlines: 0 }] };
        assert!(matches!(raw_sense(&mut chip, &t), Err(SenseError::EmptyWordlineMask(0))));
        let t = MwsTarget { plane: 0, groups: vec![MwsGroup { block: 0, wordlines: 1 << 48 }] };
        assert!(matches!(
            raw_sense(&mut chip, &t),
            Err(SenseError::WordlineMaskOutOfRange { .. })
        ));
        let t = MwsTarget { plane: 0, groups: vec![] };
        assert!(matches!(raw_sense(&mut chip, &t), Err(SenseError::NoGroups)));
        let t = MwsTarget::single(1, 0, &[0]);
        assert!(matches!(raw_sense(&mut chip, &t), Err(SenseError::Chip(_))));
        let t = MwsTarget::single(0, 99, &[0]);
        assert!(matches!(raw_sense(&mut chip, &t), Err(SenseError::Chip(_))));

        let flags = MwsFlags { inverse: true, init_s: false, ..Default::default() };
        let t = MwsTarget::single(0, 0, &[0]);
        assert!(matches!(
            mws_execute(&mut chip, &t, flags),
            Err(SenseError::InverseWithoutInitS)
        ));
    }

    #[test]
    fn engine_block_limit_is_configurable() {
        let g = ChipGeometry::toy(BL as u32, 10);
        let mut chip = ChipState::with_config(
            g,
            ChipConfig { max_mws_blocks: 8, ..Default::default() },
            RberModel::default(),
            1,
        )
        .unwrap();
        let t = MwsTarget { plane: 0, groups: (0..8).map(|b| MwsGroup::new(b, &[0])).collect() };
        assert!(raw_sense(&mut chip, &t).is_ok()); // erased blocks: all ones
        let t9 = MwsTarget { plane: 0, groups: (0..9).map(|b| MwsGroup::new(b, &[0])).collect() };
        assert!(matches!(raw_sense(&mut chip, &t9), Err(SenseError::TooManyGroups { .. })));
    }

    #[test]
    fn planes_have_independent_latches() {
        let g = ChipGeometry { planes_per_die: 2, ..ChipGeometry::toy(BL as u32, 2) };
        let mut chip = ChipState::new(g, 10).unwrap();
        let t = MwsTarget::single(1, 0, &[0]);
        mws_execute(
            &mut chip,
            &t,
            MwsFlags { init_s: true, init_c: true, move_to_cache: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(read_cache(&chip, 1).unwrap(), Bits::ones(BL)); // erased block
        assert_eq!(read_cache(&chip, 0).unwrap(), Bits::zeros(BL)); // untouched
    }
}
