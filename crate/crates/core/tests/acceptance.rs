//! Acceptance suite: nine release criteria, one pass/fail line each.
//!
//! Run with `cargo test --test acceptance` (or as part of the workspace test
//! run). The process exits nonzero if any criterion fails; tolerances are
//! pinned as constants next to each criterion.

use fcsim_core::commands::{Codec, CodecError, SEP_CONTINUE, SEP_END};
use fcsim_core::planner::{self, Placement};
use fcsim_core::sensing::MwsGroup;
use fcsim_core::workloads::{self, geometric_mean, WorkloadSpec};
use fcsim_core::{
    Bits, ChipGeometry, ChipState, CommandFrame, Expr, MwsFlags, MwsTarget, ProgramMode,
    RberModel, SystemKind,
};
use fcsim_core::geometry::PageAddr;
use fcsim_core::reliability::inject;
use fcsim_core::timing::{PowerParams, TimingParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

const RANDOM_EXPRESSIONS: usize = 10_000;
const RANDOM_EXPR_TIME_LIMIT_S: f64 = 300.0;
const TRANSFER_CHANNEL_TARGET_US: f64 = 27.0;
const TRANSFER_EXTERNAL_TARGET_US: f64 = 4.0;
const TRANSFER_TOL: f64 = 0.05;
const SENSE_CURVE_TOL: f64 = 0.01;
const ENERGY_RATIO_TARGET: f64 = 0.47;
const ENERGY_RATIO_TOL: f64 = 0.02;
const SPEEDUP_OVER_HOST_BAND: (f64, f64) = (16.0, 64.0);
const SPEEDUP_OVER_SINGLE_WL_BAND: (f64, f64) = (2.0, 6.0);
const BITMAP_36MO_SPEEDUP_BAND: (f64, f64) = (120.0, 280.0);
const AFFINE_TOL: f64 = 1e-9;
const INJECTION_BITS: usize = 10_000_000;
const INJECTION_RATE: f64 = 1e-3;
const INJECTION_TOL: f64 = 0.05;
const ZERO_ERROR_BITS: usize = 1_000_000_000;
const CODEC_ROUND_TRIPS: usize = 100_000;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// 1. Compiled plans match the reference evaluator bit-for-bit on
/// randomized expressions over a toy chip with exact-programming pages.
fn random_expressions_bit_exact() -> Result<String, String> {
    let start = Instant::now();
    let g = ChipGeometry::toy(64, 512);
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE);
    let pool: Vec<String> = (0..64).map(|i| format!("v{i}")).collect();
    for i in 0..RANDOM_EXPRESSIONS {
        let e = Expr::random(&mut rng, &pool, 3);
        let env: BTreeMap<String, Bits> = e
            .vars()
            .into_iter()
            .map(|v| (v, Bits::random(&mut rng, g.bitlines as usize, 0.5)))
            .collect();
        let placement =
            Placement::for_expr(&e, &g).map_err(|err| format!("placement #{i}: {err}"))?;
        let mut chip =
            ChipState::new(g.clone(), i as u64).map_err(|err| format!("chip #{i}: {err}"))?;
        planner::program_operands(&mut chip, &placement, &env)
            .map_err(|err| format!("program #{i}: {err}"))?;
        let plan =
            planner::compile(&e, &placement).map_err(|err| format!("compile #{i}: {err}"))?;
        let got =
            planner::execute(&mut chip, &plan).map_err(|err| format!("execute #{i}: {err}"))?;
        let want = e.eval(&env).map_err(|err| format!("eval #{i}: {err}"))?;
        if got != want {
            return Err(format!("mismatch at expression {i}: {e}"));
        }
    }
    let dt = start.elapsed().as_secs_f64();
    if dt > RANDOM_EXPR_TIME_LIMIT_S {
        return Err(format!("took {dt:.1} s, limit {RANDOM_EXPR_TIME_LIMIT_S} s"));
    }
    Ok(format!("{RANDOM_EXPRESSIONS} expressions bit-exact in {dt:.1} s"))
}

/// 2. The two-frame showcase plan: OR-factor operands stored complemented,
/// the complemented frame first, correct result.
fn showcase_plan_shape() -> Result<String, String> {
    let e = Expr::parse("(A1 | B1 & B2 & B3 & B4) & (C1 | C3) & (D2 | D4)").unwrap();
    let g = ChipGeometry::toy(64, 16);
    let placement = Placement::for_expr(&e, &g).map_err(|err| err.to_string())?;
    for v in ["C1", "C3", "D2", "D4"] {
        if !placement.get(v).unwrap().inverted {
            return Err(format!("{v} should be stored complemented"));
        }
    }
    let plan = planner::compile(&e, &placement).map_err(|err| err.to_string())?;
    let frames: Vec<(&MwsFlags, &MwsTarget)> = plan.sense_frames().collect();
    if frames.len() != 2 {
        return Err(format!("expected 2 sense frames, got {}", frames.len()));
    }
    if !(frames[0].0.inverse && frames[0].0.init_s && frames[0].0.init_c) {
        return Err(format!("first frame flags wrong: {:?}", frames[0].0));
    }
    if frames[1].0.inverse || !frames[1].0.move_to_cache {
        return Err(format!("second frame flags wrong: {:?}", frames[1].0));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let env: BTreeMap<String, Bits> = e
        .vars()
        .into_iter()
        .map(|v| (v, Bits::random(&mut rng, g.bitlines as usize, 0.5)))
        .collect();
    let mut chip = ChipState::new(g, 2).unwrap();
    planner::program_operands(&mut chip, &placement, &env).map_err(|err| err.to_string())?;
    let got = planner::execute(&mut chip, &plan).map_err(|err| err.to_string())?;
    if got != e.eval(&env).unwrap() {
        return Err("showcase result mismatch".into());
    }
    Ok("2 frames, complemented frame first, result correct".into())
}

/// 3. Transfer timeline: one 32 KiB die batch on the channel and on the
/// external link.
fn transfer_times() -> Result<String, String> {
    let t = TimingParams::default();
    let ch = t.channel_us(32 * 1024);
    let ext = t.external_us(32 * 1024);
    if rel(ch, TRANSFER_CHANNEL_TARGET_US) > TRANSFER_TOL {
        return Err(format!("channel batch {ch:.3} us, want {TRANSFER_CHANNEL_TARGET_US} ±5%"));
    }
    if rel(ext, TRANSFER_EXTERNAL_TARGET_US) > TRANSFER_TOL {
        return Err(format!("external batch {ext:.3} us, want {TRANSFER_EXTERNAL_TARGET_US} ±5%"));
    }
    Ok(format!("channel {ch:.2} us, external {ext:.3} us"))
}

/// 4. Fused-sense latency: fixed 25 us within the 4-block cap; characterized
/// raw curves at 32 blocks and 48 wordlines.
fn sense_latencies() -> Result<String, String> {
    let t = TimingParams::default();
    for wls in [1u32, 8, 48] {
        for blocks in 1..=4u32 {
            let v = t.mws_us(wls, blocks);
            if v != 25.0 {
                return Err(format!("{wls} wl / {blocks} blk deployed {v} us, want 25"));
            }
        }
    }
    let inter32 = t.mws_us(1, 32);
    if rel(inter32, 1.363 * 22.5) > SENSE_CURVE_TOL {
        return Err(format!("32-block sense {inter32} us, want {}", 1.363 * 22.5));
    }
    let intra48 = t.raw_sense_us(48, 1);
    if rel(intra48, 1.033 * 22.5) > SENSE_CURVE_TOL {
        return Err(format!("48-wordline raw sense {intra48} us, want {}", 1.033 * 22.5));
    }
    Ok(format!("cap 25 us, 32-block {inter32:.3} us, 48-wordline raw {intra48:.4} us"))
}

/// 5. A 4-block fused sense against four serial page reads of the same data.
fn fused_energy_ratio() -> Result<String, String> {
    let ratio = PowerParams::default().fused_vs_serial_energy_ratio(&TimingParams::default(), 4);
    if (ratio - ENERGY_RATIO_TARGET).abs() > ENERGY_RATIO_TOL {
        return Err(format!("ratio {ratio:.4}, want {ENERGY_RATIO_TARGET} ±{ENERGY_RATIO_TOL}"));
    }
    Ok(format!("4-block fused / serial energy = {ratio:.4}"))
}

/// 6. Sensing-count law: an n-operand co-located AND costs ceil(n/48)
/// senses, and the 1095-day bitmap query costs 23 against 1095 one-by-one.
fn sensing_count_law() -> Result<String, String> {
    let g = ChipGeometry::toy(64, 8);
    for n in 1..=200usize {
        let e = Expr::And((0..n).map(|i| Expr::var(&format!("v{i}"))).collect());
        let placement = Placement::for_expr(&e, &g).map_err(|err| err.to_string())?;
        let plan = planner::compile(&e, &placement).map_err(|err| err.to_string())?;
        let frames = plan.stats().sense_frames;
        if frames != n.div_ceil(48) {
            return Err(format!("{n}-operand AND compiled to {frames} senses"));
        }
    }
    let wl = workloads::build(
        WorkloadSpec::Bmi { users: 800_000_000, months: 36 },
        &ChipGeometry::default(),
    )
    .map_err(|err| err.to_string())?;
    let fused = wl.volume.multi_wl_frames.len();
    let serial = wl.volume.single_wl_senses;
    if fused != 23 || serial != 1095 {
        return Err(format!("36-month bitmap chain: {fused} fused vs {serial} serial"));
    }
    Ok(format!("ceil(n/48) for n = 1..=200; 36-month bitmap {fused} vs {serial}"))
}

/// 7. End-to-end speedup bands and exact monotonic trends across the nine
/// reference points.
fn end_to_end_trends() -> Result<String, String> {
    let g = ChipGeometry::default();
    let t = TimingParams::default();
    let p = PowerParams::default();
    let points = WorkloadSpec::reference_points();
    let systems = [SystemKind::Osp, SystemKind::SingleWl, SystemKind::MultiWl];
    let rows = workloads::run_points(&points, &systems, &g, &t, &p)
        .map_err(|err| err.to_string())?;
    let lat = |i: usize, s: usize| rows[3 * i + s].metrics.latency_us;
    let fc_over_osp: Vec<f64> = (0..points.len()).map(|i| lat(i, 0) / lat(i, 2)).collect();
    let fc_over_pb: Vec<f64> = (0..points.len()).map(|i| lat(i, 1) / lat(i, 2)).collect();
    let gm_osp = geometric_mean(&fc_over_osp);
    let gm_pb = geometric_mean(&fc_over_pb);
    if !(SPEEDUP_OVER_HOST_BAND.0..=SPEEDUP_OVER_HOST_BAND.1).contains(&gm_osp) {
        return Err(format!("mean speedup over host processing {gm_osp:.2} outside band"));
    }
    if !(SPEEDUP_OVER_SINGLE_WL_BAND.0..=SPEEDUP_OVER_SINGLE_WL_BAND.1).contains(&gm_pb) {
        return Err(format!("mean speedup over one-wordline sensing {gm_pb:.2} outside band"));
    }
    let bmi36 = fc_over_osp[2];
    if !(BITMAP_36MO_SPEEDUP_BAND.0..=BITMAP_36MO_SPEEDUP_BAND.1).contains(&bmi36) {
        return Err(format!("36-month bitmap speedup {bmi36:.1} outside band"));
    }
    if !(fc_over_pb[0] < fc_over_pb[1] && fc_over_pb[1] < fc_over_pb[2]) {
        return Err(format!(
            "bitmap speedup not increasing in months: {:?}",
            &fc_over_pb[..3]
        ));
    }
    // one-wordline clique-star latency is affine in clique size
    let pb_k: Vec<f64> = (5..9).map(|i| lat(i, 1)).collect(); // k = 8, 16, 32, 64
    let slope = (pb_k[1] - pb_k[0]) / 8.0;
    for (j, k) in [(2usize, 32.0), (3, 64.0)] {
        let want = pb_k[0] + slope * (k - 8.0);
        if rel(pb_k[j], want) > AFFINE_TOL {
            return Err(format!("clique-star latency not affine at k = {k}"));
        }
    }
    let senses_per_k = 3920.0 * 22.5; // result pages per die x one sense each
    if rel(slope, senses_per_k) > AFFINE_TOL {
        return Err(format!("affine slope {slope}, want {senses_per_k}"));
    }
    Ok(format!(
        "mean speedups {gm_osp:.1}x over host, {gm_pb:.2}x over one-wordline; 36-month bitmap {bmi36:.1}x"
    ))
}

/// 8. Error statistics: injection rate over ten million bits, exact zero
/// flips in the boosted-program regime over a billion bits, and the exact
/// scramble-off multipliers.
fn error_statistics() -> Result<String, String> {
    let mut page = Bits::zeros(INJECTION_BITS);
    let flips = inject(&mut page, INJECTION_RATE, 0xFA11);
    let expected = INJECTION_RATE * INJECTION_BITS as f64;
    if flips != page.count_ones() {
        return Err("flip count disagrees with buffer population".into());
    }
    if (flips as f64 - expected).abs() > INJECTION_TOL * expected {
        return Err(format!("{flips} flips over {INJECTION_BITS} bits, want {expected} ±5%"));
    }
    let model = RberModel::default();
    for ratio in [1.9, 2.0, 2.5] {
        if model.rber(ProgramMode::Enhanced, false, 20_000.0, 730.0, ratio) != 0.0 {
            return Err(format!("boosted program at ratio {ratio} not exactly zero"));
        }
    }
    let mut big = Bits::zeros(ZERO_ERROR_BITS);
    let rate = model.rber(ProgramMode::Enhanced, true, 20_000.0, 730.0, 1.9);
    let zero_flips = inject(&mut big, rate, 0x2E40);
    if zero_flips != 0 || big.count_ones() != 0 {
        return Err(format!("{zero_flips} flips over {ZERO_ERROR_BITS} bits, want exactly 0"));
    }
    for pec in [100.0, 3_000.0, 20_000.0] {
        for days in [1.0, 100.0, 730.0] {
            for (mode, mult) in
                [(ProgramMode::Slc, 1.91), (ProgramMode::Mlc, 4.92), (ProgramMode::Tlc, 4.92)]
            {
                let on = model.rber(mode, true, pec, days, 1.0);
                let off = model.rber(mode, false, pec, days, 1.0);
                if off.to_bits() != (on * mult).to_bits() {
                    return Err(format!(
                        "scramble-off multiplier not exact: {mode:?} pec {pec} days {days}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "{flips} flips at 1e-3 over 1e7 bits; 0 flips over 1e9 boosted bits; multipliers exact"
    ))
}

/// 9. Command codec: random frames survive a byte round-trip, and frames
/// over the 4-group limit are rejected on both paths.
fn codec_round_trips() -> Result<String, String> {
    let codec = Codec { planes: 4, blocks_per_plane: 4096, wordlines_per_block: 48, page_bytes: 8 };
    let mut rng = ChaCha12Rng::seed_from_u64(0xC0DEC);
    let wl_mask = |rng: &mut ChaCha12Rng| loop {
        let m = rng.gen::<u64>() & ((1 << 48) - 1);
        if m != 0 {
            break m;
        }
    };
    for i in 0..CODEC_ROUND_TRIPS {
        let frame = match rng.gen_range(0..10) {
            0 => CommandFrame::LatchXor { plane: rng.gen_range(0..codec.planes) },
            1 => CommandFrame::Program {
                addr: PageAddr {
                    plane: rng.gen_range(0..codec.planes),
                    block: rng.gen_range(0..codec.blocks_per_plane),
                    wordline: rng.gen_range(0..codec.wordlines_per_block),
                },
                payload: (0..codec.page_bytes).map(|_| rng.gen()).collect(),
            },
            _ => {
                let plane = rng.gen_range(0..codec.planes);
                let n = rng.gen_range(1..=4usize);
                let mut blocks: Vec<u32> = Vec::new();
                while blocks.len() < n {
                    let b = rng.gen_range(0..codec.blocks_per_plane);
                    if !blocks.contains(&b) {
                        blocks.push(b);
                    }
                }
                CommandFrame::Sense {
                    flags: MwsFlags {
                        inverse: rng.gen(),
                        init_s: rng.gen(),
                        init_c: rng.gen(),
                        move_to_cache: rng.gen(),
                    },
                    target: MwsTarget {
                        plane,
                        groups: blocks
                            .into_iter()
                            .map(|block| MwsGroup { block, wordlines: wl_mask(&mut rng) })
                            .collect(),
                    },
                }
            }
        };
        let bytes = codec.encode_to_vec(&frame).map_err(|err| format!("encode #{i}: {err}"))?;
        let (decoded, consumed) =
            codec.decode(&bytes).map_err(|err| format!("decode #{i}: {err}"))?;
        if decoded != frame || consumed != bytes.len() {
            return Err(format!("round-trip #{i} not lossless"));
        }
    }
    // five groups must fail encode
    let five = CommandFrame::Sense {
        flags: MwsFlags::default(),
        target: MwsTarget {
            plane: 0,
            groups: (0..5).map(|b| MwsGroup { block: b, wordlines: 1 }).collect(),
        },
    };
    match codec.encode_to_vec(&five) {
        Err(CodecError::TooManyGroups(5)) => {}
        other => return Err(format!("5-group encode: {other:?}")),
    }
    // and five groups on the wire must fail decode
    let mut raw = vec![0xC5, 0x00];
    for b in 0u32..5 {
        raw.extend_from_slice(&b.to_le_bytes()[..3]);
        raw.extend_from_slice(&1u64.to_le_bytes()[..6]);
        raw.push(if b == 4 { SEP_END } else { SEP_CONTINUE });
    }
    match codec.decode(&raw) {
        Err(CodecError::TooManyGroups(_)) => {}
        other => return Err(format!("5-group decode: {other:?}")),
    }
    Ok(format!("{CODEC_ROUND_TRIPS} frames lossless; 5-group frames rejected both ways"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<String, String>)> = vec![
        ("random expressions match the reference evaluator", random_expressions_bit_exact),
        ("showcase expression compiles to the two-frame plan", showcase_plan_shape),
        ("channel and external transfer times", transfer_times),
        ("fused-sense latency curve and cap", sense_latencies),
        ("fused-sense energy vs serial reads", fused_energy_ratio),
        ("sensing-count law for co-located ANDs", sensing_count_law),
        ("end-to-end speedup bands and trends", end_to_end_trends),
        ("error-injection statistics and exact regimes", error_statistics),
        ("command codec round-trips and group limit", codec_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS  {}  {name} — {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}  {name} — {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}
