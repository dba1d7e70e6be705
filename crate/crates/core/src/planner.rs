//! Compiles boolean expressions into fused multi-wordline sense plans.
//!
//! Compilation has two phases. [`Placement`] assigns every variable a page
//! (block, wordline) and a storage polarity, co-locating operands so the
//! compiler can fuse them: AND runs want their operands stacked in one block,
//! OR-of-literal factors want their operands stored complemented in one block
//! (a complemented sense of the stacked pages yields the OR). [`compile`]
//! then lowers the expression onto the latch machine:
//!
//! - an AND of up to 48 co-located pages is one sense group; AND chains
//!   longer than a block accumulate across frames through the sensing latch;
//! - an OR of single-block AND terms is one frame with one group per term;
//! - an AND of OR-of-literal factors is one complemented frame with one
//!   group per factor (at most four, distinct blocks);
//! - OR branches accumulate into the cache latch via per-branch moves;
//! - XOR computes one side into the cache latch, the other into the sensing
//!   latch, and finishes with the in-latch XOR; a complement (XNOR) folds
//!   into a single-frame side's inverse flag when possible.
//!
//! Anything that does not fit these forms falls back to host combine steps
//! over cache readouts, so every expression compiles and executes bit-exactly.

use crate::bits::Bits;
use crate::chip::{ChipError, ChipState, ProgramMode, ProgramOptions};
use crate::commands::{Codec, CodecError, CommandFrame, MAX_GROUPS};
use crate::expr::Expr;
use crate::geometry::{ChipGeometry, PageAddr};
use crate::sensing::{
    mws_execute, read_cache, xor_latches, MwsFlags, MwsGroup, MwsTarget, SenseError,
};
use crate::system::FrameShape;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, PartialEq)]
pub enum PlanError {
    EmptyOperandList,
    UnplacedVariable(String),
    MissingOperand(String),
    OutOfBlocks,
    MissingSlot(usize),
    ProgramInPlan,
    Sense(SenseError),
    Chip(ChipError),
}

impl std::fmt::Display for PlanError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanError::EmptyOperandList => write!(f, "operator with no operands"),
            PlanError::UnplacedVariable(v) => write!(f, "variable '{v}' has no placement"),
            PlanError::MissingOperand(v) => write!(f, "no operand data for variable '{v}'"),
            PlanError::OutOfBlocks => write!(f, "placement exceeds the plane's block count"),
            PlanError::MissingSlot(s) => write!(f, "host slot {s} read before it was written"),
            PlanError::ProgramInPlan => write!(f, "program command inside a compute plan"),
            PlanError::Sense(e) => write!(f, "sense: {e}"),
            PlanError::Chip(e) => write!(f, "chip: {e}"),
        }
    }
}

impl std::error::Error for PlanError {}

impl From<SenseError> for PlanError {
    fn from(e: SenseError) -> Self {
        PlanError::Sense(e)
    }
}

impl From<ChipError> for PlanError {
    fn from(e: ChipError) -> Self {
        PlanError::Chip(e)
    }
}

/// Normalized form: complements pushed to the leaves, NAND/NOR/XNOR folded
/// away, nested same-operator lists flattened, duplicate operands dropped.
/// XOR keeps an explicit complement flag instead of expanding.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Norm {
    Lit { var: String, neg: bool },
    And(Vec<Norm>),
    Or(Vec<Norm>),
    Xor { a: Box<Norm>, b: Box<Norm>, neg: bool },
}

fn normalize(e: &Expr, negated: bool) -> Result<Norm, PlanError> {
    Ok(match e {
        Expr::Var(v) => Norm::Lit { var: v.clone(), neg: negated },
        Expr::Not(x) => normalize(x, !negated)?,
        Expr::And(es) => nary(es, negated, true)?,
        Expr::Nand(es) => nary(es, !negated, true)?,
        Expr::Or(es) => nary(es, negated, false)?,
        Expr::Nor(es) => nary(es, !negated, false)?,
        Expr::Xor(a, b) => Norm::Xor {
            a: Box::new(normalize(a, false)?),
            b: Box::new(normalize(b, false)?),
            neg: negated,
        },
        Expr::Xnor(a, b) => Norm::Xor {
            a: Box::new(normalize(a, false)?),
            b: Box::new(normalize(b, false)?),
            neg: !negated,
        },
    })
}

fn nary(es: &[Expr], negated: bool, and_like: bool) -> Result<Norm, PlanError> {
    if es.is_empty() {
        return Err(PlanError::EmptyOperandList);
    }
    let make_and = and_like != negated;
    let mut items: Vec<Norm> = Vec::new();
    for e in es {
        let n = normalize(e, negated)?;
        match n {
            Norm::And(cs) if make_and => items.extend(cs),
            Norm::Or(cs) if !make_and => items.extend(cs),
            other => items.push(other),
        }
    }
    let mut seen: Vec<Norm> = Vec::new();
    items.retain(|n| {
        if seen.contains(n) {
            false
        } else {
            seen.push(n.clone());
            true
        }
    });
    Ok(if items.len() == 1 {
        items.pop().unwrap()
    } else if make_and {
        Norm::And(items)
    } else {
        Norm::Or(items)
    })
}

fn as_lit(n: &Norm) -> Option<(&str, bool)> {
    match n {
        Norm::Lit { var, neg } => Some((var, *neg)),
        _ => None,
    }
}

/// Where one variable's page lives and whether the stored image is the
/// complement of the operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarSlot {
    pub block: u32,
    pub wordline: u32,
    pub inverted: bool,
}

/// Operand layout on one plane, plus the program mode used to write it.
/// Defaults to reliability-enhanced single-bit programming at the zero-error
/// time ratio, so planned computation is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub plane: u32,
    pub mode: ProgramMode,
    pub options: ProgramOptions,
    slots: BTreeMap<String, VarSlot>,
    next_block: u32,
    next_wordline: u32,
    blocks_per_plane: u32,
    wordlines_per_block: u32,
}

impl Placement {
    pub fn empty(geometry: &ChipGeometry) -> Self {
        Placement {
            plane: 0,
            mode: ProgramMode::Enhanced,
            options: ProgramOptions::default(),
            slots: BTreeMap::new(),
            next_block: 0,
            next_wordline: 0,
            blocks_per_plane: geometry.blocks_per_plane,
            wordlines_per_block: geometry.wordlines_per_block,
        }
    }

    /// Lays out every variable of `expr` for fusion: each co-location run
    /// starts a fresh block, AND operands store their literal polarity,
    /// OR-of-literal factors store the complement.
    pub fn for_expr(expr: &Expr, geometry: &ChipGeometry) -> Result<Self, PlanError> {
        let mut pl = Placement::empty(geometry);
        let norm = normalize(expr, false)?;
        pl.hint(&norm)?;
        Ok(pl)
    }

    pub fn get(&self, var: &str) -> Option<&VarSlot> {
        self.slots.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &VarSlot)> {
        self.slots.iter()
    }

    pub fn var_count(&self) -> usize {
        self.slots.len()
    }

    pub fn blocks_used(&self) -> u32 {
        self.next_block + u32::from(self.next_wordline != 0)
    }

    fn hint(&mut self, n: &Norm) -> Result<(), PlanError> {
        match n {
            Norm::Lit { var, neg } => self.colocate(&[(var.clone(), *neg)]),
            Norm::Or(items) => {
                if items.iter().all(|i| as_lit(i).is_some()) {
                    let wanted: Vec<(String, bool)> = items
                        .iter()
                        .map(|i| {
                            let (v, neg) = as_lit(i).unwrap();
                            (v.to_string(), !neg)
                        })
                        .collect();
                    return self.colocate(&wanted);
                }
                for item in items {
                    if let Norm::And(fs) = item {
                        if fs.iter().all(|x| as_lit(x).is_some()) {
                            let wanted: Vec<(String, bool)> = fs
                                .iter()
                                .map(|x| {
                                    let (v, neg) = as_lit(x).unwrap();
                                    (v.to_string(), neg)
                                })
                                .collect();
                            self.colocate(&wanted)?;
                            continue;
                        }
                    }
                    self.hint(item)?;
                }
                Ok(())
            }
            Norm::And(items) => {
                let lits: Vec<(String, bool)> = items
                    .iter()
                    .filter_map(|i| as_lit(i).map(|(v, neg)| (v.to_string(), neg)))
                    .collect();
                if !lits.is_empty() {
                    self.colocate(&lits)?;
                }
                for item in items.iter().filter(|i| as_lit(i).is_none()) {
                    self.hint(item)?;
                }
                Ok(())
            }
            Norm::Xor { a, b, .. } => {
                self.hint(a)?;
                self.hint(b)
            }
        }
    }

    /// Places the listed variables contiguously starting at a fresh block,
    /// skipping variables that already have a slot (first placement wins).
    fn colocate(&mut self, wanted: &[(String, bool)]) -> Result<(), PlanError> {
        if wanted.iter().all(|(v, _)| self.slots.contains_key(v)) {
            return Ok(());
        }
        if self.next_wordline != 0 {
            self.next_block += 1;
            self.next_wordline = 0;
        }
        for (var, inverted) in wanted {
            if self.slots.contains_key(var) {
                continue;
            }
            if self.next_block >= self.blocks_per_plane {
                return Err(PlanError::OutOfBlocks);
            }
            self.slots.insert(
                var.clone(),
                VarSlot { block: self.next_block, wordline: self.next_wordline, inverted: *inverted },
            );
            self.next_wordline += 1;
            if self.next_wordline == self.wordlines_per_block {
                self.next_block += 1;
                self.next_wordline = 0;
            }
        }
        Ok(())
    }
}

/// Erases the blocks the placement occupies and programs every operand page
/// (complemented where the slot says so).
pub fn program_operands(
    chip: &mut ChipState,
    placement: &Placement,
    env: &BTreeMap<String, Bits>,
) -> Result<(), PlanError> {
    let mut blocks: Vec<u32> = placement.slots.values().map(|s| s.block).collect();
    blocks.sort_unstable();
    blocks.dedup();
    for b in blocks {
        chip.erase_block(placement.plane, b)?;
    }
    for (var, slot) in &placement.slots {
        let bits = env.get(var).ok_or_else(|| PlanError::MissingOperand(var.clone()))?;
        let mut stored = bits.clone();
        if slot.inverted {
            stored.not_assign();
        }
        let addr = PageAddr { plane: placement.plane, block: slot.block, wordline: slot.wordline };
        chip.program_page(addr, &stored, placement.mode, placement.options)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HostOp {
    And,
    Or,
    Xor,
    Not,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanStep {
    /// A wire-level command: sense, or in-latch XOR.
    Frame(CommandFrame),
    /// Transfer the cache latch to a host buffer slot.
    ReadCache { slot: usize },
    /// Combine host buffer slots (fallback path for shapes the latch machine
    /// cannot express).
    Host { op: HostOp, args: Vec<usize>, out: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanResult {
    /// Final value sits in the plane's cache latch.
    Cache,
    /// Final value sits in a host buffer slot.
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub plane: u32,
    pub steps: Vec<PlanStep>,
    pub result: PlanResult,
    slot_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanStats {
    pub sense_frames: usize,
    pub inverse_frames: usize,
    pub latch_xors: usize,
    pub cache_reads: usize,
    pub host_ops: usize,
    pub max_groups: u32,
    pub max_wordlines: u32,
}

impl Plan {
    pub fn sense_frames(&self) -> impl Iterator<Item = (&MwsFlags, &MwsTarget)> {
        self.steps.iter().filter_map(|s| match s {
            PlanStep::Frame(CommandFrame::Sense { flags, target }) => Some((flags, target)),
            _ => None,
        })
    }

    /// True when no step leaves the drive (no host combines or readouts
    /// besides the final result).
    pub fn is_fully_in_flash(&self) -> bool {
        self.result == PlanResult::Cache
            && self.steps.iter().all(|s| matches!(s, PlanStep::Frame(_)))
    }

    pub fn stats(&self) -> PlanStats {
        let mut st = PlanStats::default();
        for step in &self.steps {
            match step {
                PlanStep::Frame(CommandFrame::Sense { flags, target }) => {
                    st.sense_frames += 1;
                    st.inverse_frames += usize::from(flags.inverse);
                    st.max_groups = st.max_groups.max(target.groups.len() as u32);
                    st.max_wordlines = st.max_wordlines.max(target.max_wordlines());
                }
                PlanStep::Frame(CommandFrame::LatchXor { .. }) => st.latch_xors += 1,
                PlanStep::Frame(CommandFrame::Program { .. }) => {}
                PlanStep::ReadCache { .. } => st.cache_reads += 1,
                PlanStep::Host { .. } => st.host_ops += 1,
            }
        }
        st
    }

    /// Shape of each sense frame, for the timing model.
    pub fn frame_shapes(&self) -> Vec<FrameShape> {
        self.sense_frames()
            .map(|(_, t)| FrameShape {
                max_wordlines: t.max_wordlines(),
                blocks: t.groups.len() as u32,
            })
            .collect()
    }

    /// Serializes every wire-level step with the given codec.
    pub fn encode(&self, codec: &Codec) -> Result<Vec<u8>, CodecError> {
        let mut out = Vec::new();
        for step in &self.steps {
            if let PlanStep::Frame(frame) = step {
                codec.encode(frame, &mut out)?;
            }
        }
        Ok(out)
    }
}

/// Compiles `expr` against a placement. Fails only on structural problems
/// (unplaced variables, empty operator lists); inexpressible shapes fall back
/// to host steps instead of failing.
pub fn compile(expr: &Expr, placement: &Placement) -> Result<Plan, PlanError> {
    for v in expr.vars() {
        if placement.get(&v).is_none() {
            return Err(PlanError::UnplacedVariable(v));
        }
    }
    let norm = normalize(expr, false)?;
    let mut b = Builder { placement, steps: Vec::new(), slot_count: 0 };
    let value = b.compile_value(&norm)?;
    let result = match value {
        Value::Cache => PlanResult::Cache,
        Value::Slot(s) => PlanResult::Slot(s),
    };
    Ok(Plan { plane: placement.plane, steps: b.steps, result, slot_count: b.slot_count })
}

/// Runs a plan against the chip and returns the result page.
pub fn execute(chip: &mut ChipState, plan: &Plan) -> Result<Bits, PlanError> {
    let mut slots: Vec<Option<Bits>> = vec![None; plan.slot_count];
    let fetch = |slots: &[Option<Bits>], i: usize| {
        slots.get(i).and_then(|s| s.clone()).ok_or(PlanError::MissingSlot(i))
    };
    for step in &plan.steps {
        match step {
            PlanStep::Frame(CommandFrame::Sense { flags, target }) => {
                mws_execute(chip, target, *flags)?;
            }
            PlanStep::Frame(CommandFrame::LatchXor { plane }) => xor_latches(chip, *plane)?,
            PlanStep::Frame(CommandFrame::Program { .. }) => return Err(PlanError::ProgramInPlan),
            PlanStep::ReadCache { slot } => {
                slots[*slot] = Some(read_cache(chip, plan.plane)?);
            }
            PlanStep::Host { op, args, out } => {
                let mut r = fetch(&slots, args[0])?;
                match op {
                    HostOp::Not => r.not_assign(),
                    HostOp::And => {
                        for a in &args[1..] {
                            r.and_assign(&fetch(&slots, *a)?);
                        }
                    }
                    HostOp::Or => {
                        for a in &args[1..] {
                            r.or_assign(&fetch(&slots, *a)?);
                        }
                    }
                    HostOp::Xor => {
                        for a in &args[1..] {
                            r.xor_assign(&fetch(&slots, *a)?);
                        }
                    }
                }
                slots[*out] = Some(r);
            }
        }
    }
    match plan.result {
        PlanResult::Cache => Ok(read_cache(chip, plan.plane)?),
        PlanResult::Slot(s) => fetch(&slots, s),
    }
}

/// One sense frame before latch flags are assigned.
#[derive(Debug, Clone)]
struct FrameSpec {
    inverse: bool,
    groups: Vec<MwsGroup>,
}

#[derive(Clone, Copy)]
enum Value {
    Cache,
    Slot(usize),
}

struct Builder<'a> {
    placement: &'a Placement,
    steps: Vec<PlanStep>,
    slot_count: usize,
}

fn distinct_blocks(groups: &[MwsGroup]) -> bool {
    let mut blocks: Vec<u32> = groups.iter().map(|g| g.block).collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks.len() == groups.len()
}

impl Builder<'_> {
    fn new_slot(&mut self) -> usize {
        self.slot_count += 1;
        self.slot_count - 1
    }

    fn to_slot(&mut self, v: Value) -> usize {
        match v {
            Value::Slot(s) => s,
            Value::Cache => {
                let s = self.new_slot();
                self.steps.push(PlanStep::ReadCache { slot: s });
                s
            }
        }
    }

    fn push_frames(&mut self, specs: &[FrameSpec], first_of_value: bool, to_cache: bool) {
        let last = specs.len() - 1;
        for (i, spec) in specs.iter().enumerate() {
            let flags = MwsFlags {
                inverse: spec.inverse,
                init_s: i == 0,
                init_c: to_cache && first_of_value && i == 0,
                move_to_cache: to_cache && i == last,
            };
            let target = MwsTarget { plane: self.placement.plane, groups: spec.groups.clone() };
            self.steps.push(PlanStep::Frame(CommandFrame::Sense { flags, target }));
        }
    }

    /// Emits OR-accumulating chains: the first frame clears the cache latch,
    /// each chain's last frame moves its AND into it.
    fn emit_branches(&mut self, chains: &[Vec<FrameSpec>]) {
        for (ci, chain) in chains.iter().enumerate() {
            self.push_frames(chain, ci == 0, true);
        }
    }

    fn compile_value(&mut self, n: &Norm) -> Result<Value, PlanError> {
        if let Norm::Xor { a, b, neg } = n {
            return self.compile_xor(a, b, *neg);
        }
        if let Some(chains) = self.branches(n) {
            self.emit_branches(&chains);
            return Ok(Value::Cache);
        }
        let (op, items) = match n {
            Norm::And(items) => (HostOp::And, items),
            Norm::Or(items) => (HostOp::Or, items),
            // literals always chain, and XOR is handled above
            Norm::Lit { .. } | Norm::Xor { .. } => unreachable!(),
        };
        let mut args = Vec::new();
        for item in items {
            let v = self.compile_value(item)?;
            args.push(self.to_slot(v));
        }
        let out = self.new_slot();
        self.steps.push(PlanStep::Host { op, args, out });
        Ok(Value::Slot(out))
    }

    fn compile_xor(&mut self, a: &Norm, b: &Norm, neg: bool) -> Result<Value, PlanError> {
        let native = match (self.branches(a), self.chain(b)) {
            (Some(ca), Some(sb)) => Some((ca, sb)),
            _ => match (self.branches(b), self.chain(a)) {
                (Some(cb), Some(sa)) => Some((cb, sa)),
                _ => None,
            },
        };
        if let Some((mut c_side, mut s_side)) = native {
            let mut host_not = false;
            if neg {
                // absorb the complement into a single-frame side
                if s_side.len() == 1 {
                    s_side[0].inverse = !s_side[0].inverse;
                } else if c_side.len() == 1 && c_side[0].len() == 1 {
                    c_side[0][0].inverse = !c_side[0][0].inverse;
                } else {
                    host_not = true;
                }
            }
            self.emit_branches(&c_side);
            self.push_frames(&s_side, false, false);
            self.steps
                .push(PlanStep::Frame(CommandFrame::LatchXor { plane: self.placement.plane }));
            if host_not {
                let s = self.to_slot(Value::Cache);
                let out = self.new_slot();
                self.steps.push(PlanStep::Host { op: HostOp::Not, args: vec![s], out });
                return Ok(Value::Slot(out));
            }
            return Ok(Value::Cache);
        }
        let va = self.compile_value(a)?;
        let sa = self.to_slot(va);
        let vb = self.compile_value(b)?;
        let sb = self.to_slot(vb);
        let mut out = self.new_slot();
        self.steps.push(PlanStep::Host { op: HostOp::Xor, args: vec![sa, sb], out });
        if neg {
            let inner = out;
            out = self.new_slot();
            self.steps.push(PlanStep::Host { op: HostOp::Not, args: vec![inner], out });
        }
        Ok(Value::Slot(out))
    }

    /// OR-branch decomposition: the whole node as one chain if possible,
    /// otherwise one chain per OR operand, with adjacent single-frame
    /// non-complemented chains merged into shared frames.
    fn branches(&self, n: &Norm) -> Option<Vec<Vec<FrameSpec>>> {
        if let Some(ch) = self.chain(n) {
            return Some(vec![ch]);
        }
        let Norm::Or(items) = n else { return None };
        let chains: Vec<Vec<FrameSpec>> =
            items.iter().map(|i| self.chain(i)).collect::<Option<_>>()?;
        Some(merge_single_frames(chains))
    }

    /// Lowers one AND-shaped item (or a single factor) to a frame sequence
    /// whose values AND together through the sensing latch.
    fn chain(&self, item: &Norm) -> Option<Vec<FrameSpec>> {
        let factors: &[Norm] = match item {
            Norm::And(fs) => fs,
            other => std::slice::from_ref(other),
        };
        let mut factor_groups: Vec<MwsGroup> = Vec::new();
        let mut union_frames: Vec<Vec<MwsGroup>> = Vec::new();
        let mut accum: BTreeMap<u32, u64> = BTreeMap::new();
        for f in factors {
            match f {
                Norm::Lit { var, neg } => {
                    let s = self.placement.get(var)?;
                    if s.inverted == *neg {
                        *accum.entry(s.block).or_insert(0) |= 1 << s.wordline;
                    } else {
                        factor_groups
                            .push(MwsGroup { block: s.block, wordlines: 1 << s.wordline });
                    }
                }
                Norm::Or(children) => {
                    if let Some(g) = self.or_factor(children) {
                        factor_groups.push(g);
                    } else if let Some(gs) = self.union_groups(children) {
                        union_frames.push(gs);
                    } else {
                        return None;
                    }
                }
                Norm::And(_) | Norm::Xor { .. } => return None,
            }
        }
        if factor_groups.len() > MAX_GROUPS as usize || !distinct_blocks(&factor_groups) {
            return None;
        }
        let mut frames = Vec::new();
        if !factor_groups.is_empty() {
            frames.push(FrameSpec { inverse: true, groups: factor_groups });
        }
        frames.extend(union_frames.into_iter().map(|groups| FrameSpec { inverse: false, groups }));
        frames.extend(accum.into_iter().map(|(block, wordlines)| FrameSpec {
            inverse: false,
            groups: vec![MwsGroup { block, wordlines }],
        }));
        if frames.is_empty() {
            None
        } else {
            Some(frames)
        }
    }

    /// OR of literals as one complemented-storage group in a single block.
    fn or_factor(&self, children: &[Norm]) -> Option<MwsGroup> {
        let mut group: Option<MwsGroup> = None;
        for c in children {
            let (var, neg) = as_lit(c)?;
            let s = self.placement.get(var)?;
            if s.inverted == neg {
                return None; // needs the complement stored
            }
            match &mut group {
                None => group = Some(MwsGroup { block: s.block, wordlines: 1 << s.wordline }),
                Some(g) if g.block == s.block => g.wordlines |= 1 << s.wordline,
                _ => return None,
            }
        }
        group
    }

    /// OR of single-block AND terms as one multi-group frame.
    fn union_groups(&self, children: &[Norm]) -> Option<Vec<MwsGroup>> {
        if children.len() > MAX_GROUPS as usize {
            return None;
        }
        let mut groups: Vec<MwsGroup> = Vec::new();
        for c in children {
            let lits: &[Norm] = match c {
                Norm::And(fs) => fs,
                Norm::Lit { .. } => std::slice::from_ref(c),
                _ => return None,
            };
            let mut g: Option<MwsGroup> = None;
            for l in lits {
                let (var, neg) = as_lit(l)?;
                let s = self.placement.get(var)?;
                if s.inverted != neg {
                    return None; // needs the literal stored as-is
                }
                match &mut g {
                    None => g = Some(MwsGroup { block: s.block, wordlines: 1 << s.wordline }),
                    Some(g) if g.block == s.block => g.wordlines |= 1 << s.wordline,
                    _ => return None,
                }
            }
            groups.push(g?);
        }
        if distinct_blocks(&groups) {
            Some(groups)
        } else {
            None
        }
    }
}

/// Greedily merges adjacent single-frame non-complemented chains: their
/// frames' groups OR together, so a shared frame with up to four groups
/// replaces up to four separate senses.
fn merge_single_frames(chains: Vec<Vec<FrameSpec>>) -> Vec<Vec<FrameSpec>> {
    let mut out: Vec<Vec<FrameSpec>> = Vec::new();
    for ch in chains {
        if ch.len() == 1 && !ch[0].inverse {
            if let Some(last) = out.last_mut() {
                if last.len() == 1 && !last[0].inverse {
                    let mut combined = last[0].groups.clone();
                    combined.extend(ch[0].groups.iter().copied());
                    if combined.len() <= MAX_GROUPS as usize && distinct_blocks(&combined) {
                        last[0].groups = combined;
                        continue;
                    }
                }
            }
        }
        out.push(ch);
    }
    out
}
