//! Pipelined latency and energy accounting for four system organizations
//! running the same bulk bitwise job.
//!
//! - [`SystemKind::Osp`]: outside-storage processing — all operand pages move
//!   to the host, which computes in DRAM.
//! - [`SystemKind::Isp`]: in-storage processing — operand pages cross the
//!   flash channels to a controller-side bitwise accelerator; only results
//!   leave the SSD.
//! - [`SystemKind::SingleWl`]: in-flash processing that senses one wordline
//!   per array operation and combines pages in the latches.
//! - [`SystemKind::MultiWl`]: in-flash processing with multi-wordline,
//!   multi-block fused senses — entire AND/OR groups resolve in one sense.
//!
//! Latency uses a three-stage pipeline (array sensing per die, channel
//! transfer per channel, external link) where only the bottleneck stage runs
//! at full occupancy and the others contribute one fill/drain unit. Host-side
//! post-processing streams concurrently with the external link and is
//! reported but never serializes. In-flash chains serialize across the planes
//! of a die (one latch/cache path per die); plain page reads are multi-plane
//! concurrent.

use crate::geometry::ChipGeometry;
use crate::timing::{PowerParams, TimingParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    Osp,
    Isp,
    SingleWl,
    MultiWl,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] =
        [SystemKind::Osp, SystemKind::Isp, SystemKind::SingleWl, SystemKind::MultiWl];

    pub fn label(self) -> &'static str {
        match self {
            SystemKind::Osp => "osp",
            SystemKind::Isp => "isp",
            SystemKind::SingleWl => "single-wl",
            SystemKind::MultiWl => "multi-wl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "osp" => SystemKind::Osp,
            "isp" => SystemKind::Isp,
            "single-wl" | "pb" => SystemKind::SingleWl,
            "multi-wl" | "fc" => SystemKind::MultiWl,
            _ => return None,
        })
    }
}

/// Shape of one fused sense in a multi-wordline chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameShape {
    pub max_wordlines: u32,
    pub blocks: u32,
}

/// Volume description of one job, independent of system organization.
/// "Result page" means one page-sized slice of the output; every result page
/// runs the same per-chunk command chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkloadVolume {
    pub result_pages: u64,
    /// Pages the conventional systems must read (all operand slices).
    pub operand_pages: u64,
    /// Array senses per result page when sensing one wordline at a time.
    pub single_wl_senses: u32,
    /// Fused-sense shapes per result page for the multi-wordline chain.
    pub multi_wl_frames: Vec<FrameShape>,
    /// In-latch XOR micro-ops per result page (both in-flash modes).
    pub latch_xor_ops: u32,
}

/// One stage of the transfer pipeline.
#[derive(Debug, Clone, Copy)]
pub struct StageLoad {
    pub busy_us: f64,
    pub unit_us: f64,
}

/// Steady-state pipeline latency: for each stage, one fill unit from every
/// earlier stage + the stage's full occupancy + one drain unit from every
/// later stage; the overall latency is the worst stage's value.
pub fn pipeline_latency_us(stages: &[StageLoad]) -> f64 {
    (0..stages.len())
        .map(|i| {
            let fill: f64 = stages[..i].iter().map(|s| s.unit_us).sum();
            let drain: f64 = stages[i + 1..].iter().map(|s| s.unit_us).sum();
            fill + stages[i].busy_us + drain
        })
        .fold(0.0, f64::max)
}

/// Per-run timing/energy breakdown. Stage busy times are per bottleneck
/// instance (busiest die / busiest channel); energies are whole-job totals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    pub latency_us: f64,
    pub sense_busy_us: f64,
    pub channel_busy_us: f64,
    pub external_busy_us: f64,
    /// Host/accelerator streaming time, overlapped with transfers.
    pub compute_us: f64,
    pub energy_uj: f64,
    pub flash_uj: f64,
    pub channel_uj: f64,
    pub external_uj: f64,
    pub dram_uj: f64,
    pub compute_uj: f64,
    /// Total array sensing events (pages for plain reads, fused senses for
    /// multi-wordline chains).
    pub sensings: u64,
}

fn div_ceil_u64(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Evaluates one job on one system organization at full geometry.
pub fn evaluate(
    volume: &WorkloadVolume,
    kind: SystemKind,
    geometry: &ChipGeometry,
    timing: &TimingParams,
    power: &PowerParams,
) -> RunMetrics {
    let page_bytes = geometry.page_bytes() as u64;
    let dies = geometry.dies();
    let channels = geometry.channels as u64;
    let planes = geometry.planes_per_die as u64;
    let result_bytes = volume.result_pages * page_bytes;
    let operand_bytes = volume.operand_pages * page_bytes;
    let batch_unit_us = timing.channel_us(planes * page_bytes);
    let ext_unit_us = timing.external_us(planes * page_bytes);

    // --- sensing stage (per die) ---
    let (sense_busy_us, sense_unit_us, sensings, flash_uj) = match kind {
        SystemKind::Osp | SystemKind::Isp => {
            let pages_per_die = div_ceil_u64(volume.operand_pages, dies);
            let batches = div_ceil_u64(pages_per_die, planes); // multi-plane read
            let busy = batches as f64 * timing.t_read_us;
            let flash =
                volume.operand_pages as f64 * power.page_read_energy_uj(timing);
            (busy, timing.t_read_us, volume.operand_pages, flash)
        }
        SystemKind::SingleWl => {
            let chain_us = volume.single_wl_senses as f64 * timing.t_read_us
                + volume.latch_xor_ops as f64 * timing.t_latch_xor_us;
            let pages_per_die = div_ceil_u64(volume.result_pages, dies); // planes serialized
            let busy = pages_per_die as f64 * chain_us;
            let senses = volume.result_pages * volume.single_wl_senses as u64;
            let flash = senses as f64 * power.page_read_energy_uj(timing);
            (busy, chain_us, senses, flash)
        }
        SystemKind::MultiWl => {
            let chain_us: f64 = volume
                .multi_wl_frames
                .iter()
                .map(|f| timing.mws_us(f.max_wordlines, f.blocks))
                .sum::<f64>()
                + volume.latch_xor_ops as f64 * timing.t_latch_xor_us;
            let pages_per_die = div_ceil_u64(volume.result_pages, dies);
            let busy = pages_per_die as f64 * chain_us;
            let senses = volume.result_pages * volume.multi_wl_frames.len() as u64;
            let per_chain_uj: f64 = volume
                .multi_wl_frames
                .iter()
                .map(|f| power.sense_energy_uj(timing, f.max_wordlines, f.blocks))
                .sum();
            let flash = volume.result_pages as f64 * per_chain_uj;
            (busy, chain_us, senses, flash)
        }
    };

    // --- channel stage (per channel) and external stage (global) ---
    let (channel_pages, external_bytes) = match kind {
        SystemKind::Osp => (volume.operand_pages, operand_bytes),
        SystemKind::Isp => (volume.operand_pages, result_bytes),
        SystemKind::SingleWl | SystemKind::MultiWl => (volume.result_pages, result_bytes),
    };
    let channel_busy_us =
        timing.channel_us(div_ceil_u64(channel_pages, channels) * page_bytes);
    let external_busy_us = timing.external_us(external_bytes);

    let latency_us = pipeline_latency_us(&[
        StageLoad { busy_us: sense_busy_us, unit_us: sense_unit_us },
        StageLoad { busy_us: channel_busy_us, unit_us: batch_unit_us },
        StageLoad { busy_us: external_busy_us, unit_us: ext_unit_us },
    ]);

    // --- energy ---
    let channel_bytes = channel_pages * page_bytes;
    let channel_uj = channel_bytes as f64 * power.channel_pj_per_byte * 1e-6;
    let external_uj = external_bytes as f64 * power.external_pj_per_byte * 1e-6;
    let (dram_bytes, compute_uj, compute_bytes) = match kind {
        SystemKind::Osp => {
            // host reads every operand byte and writes results
            let uj = operand_bytes as f64 * power.host_pj_per_byte * 1e-6;
            (operand_bytes, uj, operand_bytes)
        }
        SystemKind::Isp => {
            // controller accelerator: one pairwise op per combine step
            let ops = (volume.single_wl_senses.saturating_sub(1) + volume.latch_xor_ops) as f64;
            let uj = result_bytes as f64 / 64.0 * power.accel_pj_per_64b * ops * 1e-6;
            (result_bytes, uj, result_bytes)
        }
        SystemKind::SingleWl | SystemKind::MultiWl => {
            // host only post-processes the result stream
            let uj = result_bytes as f64 * power.host_pj_per_byte * 1e-6;
            (result_bytes, uj, result_bytes)
        }
    };
    let dram_uj = dram_bytes as f64 * power.dram_pj_per_byte * 1e-6;
    let compute_us = timing.host_us(compute_bytes);
    let energy_uj = flash_uj + channel_uj + external_uj + dram_uj + compute_uj;

    RunMetrics {
        latency_us,
        sense_busy_us,
        channel_busy_us,
        external_busy_us,
        compute_us,
        energy_uj,
        flash_uj,
        channel_uj,
        external_uj,
        dram_uj,
        compute_uj,
        sensings,
    }
}
