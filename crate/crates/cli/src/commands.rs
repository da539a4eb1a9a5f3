use std::fs;
use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jrc_core::analysis::{
    background_scene, run_angle_sweep, run_comm_distance_sweep, run_radar_distance_sweep, run_two_target_report,
    DistanceSweep, SweepRecord, TwoTargetScenario,
};
use jrc_core::channel::{simulate_comm, simulate_radar, taper_for_fov, PointTarget, RxBaseband, Scene};
use jrc_core::dsp::db;
use jrc_core::frame::FrameLayout;
use jrc_core::io::{
    detections_to_jsonl, load_config, load_scene, max_payload_len, read_capture, read_feedback, read_iq, write_capture,
    write_feedback, DetectionRecord, FeedbackFile, ImageFile, IoError, IqSidecar, UdpIngest,
};
use jrc_core::radar::{range_angle_image, DetectMethod, RadarFrame, RadarProcessor, RangeAngleImage};
use jrc_core::rx::{NdpReport, Receiver, RxEvent, StreamReceiver};
use jrc_core::tx::{compute_steering, SteeringMatrix, SteeringSource, Transmitter, TxBaseband};
use jrc_core::{Mcs, SystemConfig, SPEED_OF_LIGHT};

use crate::{
    Class, Cli, Command, Link, LoopbackArgs, RadarArgs, RxArgs, SiCaptureArgs, SimulateArgs, SweepAngleArgs,
    SweepDistanceArgs, TwoTargetArgs, TxArgs,
};

const FEEDBACK_FILE: &str = "feedback.toml";
const IMAGE_FILE: &str = "image.csv";
const DETECTIONS_FILE: &str = "detections.jsonl";

struct Ctx {
    cfg: SystemConfig,
    seed: u64,
    out_dir: PathBuf,
}

impl Ctx {
    /// Path of an output file; creates the output directory.
    fn out(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn dir(&self) -> Result<&Path> {
        self.out("")?;
        Ok(&self.out_dir)
    }

    /// Independent noise seed for stream `k` of this run.
    fn seed_for(&self, k: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k)
    }

    fn mcs(&self, id: Option<u8>) -> Mcs {
        id.and_then(Mcs::from_id).unwrap_or(self.cfg.mcs)
    }
}

pub(crate) fn run(cli: Cli, config: &str) -> Result<()> {
    let cfg = load_config(config).with_context(|| format!("loading {config}")).context(Class::Config)?;
    let ctx = Ctx { cfg, seed: cli.seed, out_dir: cli.out_dir };
    let t0 = Instant::now();
    let name = format!("{:?}", cli.command).split(['(', ' ']).next().unwrap_or_default().to_lowercase();
    let result = match cli.command {
        Command::Tx(a) => tx(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Radar(a) => radar(&ctx, a),
        Command::Rx(a) => rx(&ctx, a),
        Command::Loopback(a) => loopback(&ctx, a),
        Command::SweepDistance(a) => sweep_distance(&ctx, a),
        Command::SweepAngle(a) => sweep_angle(&ctx, a),
        Command::TwoTarget(a) => two_target(&ctx, a),
        Command::SiCapture(a) => si_capture(&ctx, a),
    };
    log::info!("{name} finished in {:.3} s", t0.elapsed().as_secs_f64());
    result
}

fn iq_error(e: IoError) -> anyhow::Error {
    if e.is_malformed_input() {
        anyhow::Error::new(e).context(Class::MalformedIq)
    } else {
        e.into()
    }
}

fn scene_or(cfg: &SystemConfig, path: Option<&Path>, fallback: impl FnOnce() -> Scene) -> Result<Scene> {
    let Some(p) = path else { return Ok(fallback()) };
    let scene = load_scene(p).with_context(|| format!("loading scene {}", p.display())).context(Class::Config)?;
    scene.validate(cfg).with_context(|| format!("scene {}", p.display())).context(Class::Config)?;
    Ok(scene)
}

/// `SOURCE_DATE_EPOCH` when set, so repeated runs write identical files.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

/// 7-bit non-zero scrambler seed for frame `i`.
fn scrambler_seed(i: usize) -> u8 {
    1 + (i * 37 % 127) as u8
}

fn random_payloads(seed: u64, n: usize, len: usize) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..len).map(|_| rng.gen()).collect()).collect()
}

fn load_steering(cfg: &SystemConfig, path: &Path) -> Result<SteeringMatrix> {
    if !path.exists() {
        log::warn!("no channel feedback at {}; using identity steering", path.display());
        return Ok(SteeringMatrix::identity(cfg));
    }
    let fb = read_feedback(path).with_context(|| format!("reading feedback {}", path.display()))?;
    Ok(compute_steering(&fb.to_matrix(cfg)?, cfg)?)
}

fn steering_name(s: &SteeringMatrix) -> &'static str {
    match s.source {
        SteeringSource::Identity => "identity",
        SteeringSource::Feedback => "MRT",
    }
}

fn udp_payloads(addr: &str, n: usize, max_payload: usize, idle: Duration) -> Result<Vec<Vec<u8>>> {
    let ingest = UdpIngest::bind(addr, 64, max_payload).with_context(|| format!("binding {addr}"))?;
    println!("listening on {}", ingest.local_addr());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        match ingest.queue().pop_timeout(idle) {
            Some(p) => out.push(p),
            None => break,
        }
    }
    let c = ingest.shutdown();
    log::info!("datagrams {c:?}");
    if c.rejected_empty + c.rejected_oversize > 0 {
        log::warn!("rejected {} empty and {} oversize datagrams", c.rejected_empty, c.rejected_oversize);
    }
    if out.len() < n {
        log::warn!("received {} of {n} payloads before going idle", out.len());
    }
    Ok(out)
}

fn empty_baseband(cfg: &SystemConfig) -> TxBaseband {
    TxBaseband { chains: Vec::new(), sample_rate: cfg.bandwidth_hz, frames: Vec::new() }
}

fn tx(ctx: &Ctx, a: TxArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let mcs = ctx.mcs(a.mcs);
    let mut tx = Transmitter::new(cfg.clone());
    let mut bb = empty_baseband(cfg);
    if a.ndp {
        let (_, ndp) = tx.ndp()?;
        for _ in 0..a.frames {
            bb.append(&ndp);
        }
    } else {
        let fb = a.feedback.clone().unwrap_or_else(|| ctx.out_dir.join(FEEDBACK_FILE));
        tx.set_steering(load_steering(cfg, &fb)?);
        let payloads = if let Some(addr) = &a.udp {
            udp_payloads(addr, a.frames, max_payload_len(cfg, mcs), Duration::from_millis(a.udp_timeout_ms))?
        } else if let Some(p) = &a.payload {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            vec![bytes; a.frames]
        } else {
            random_payloads(ctx.seed, a.frames, a.payload_len)
        };
        for (i, p) in payloads.iter().enumerate() {
            bb.append(&tx.data(p, mcs, scrambler_seed(i))?.1);
        }
    }
    if bb.frames.is_empty() {
        bail!("no frames to write");
    }
    let markers: Vec<usize> = bb.frames.iter().map(|m| m.start).collect();
    let capture = RxBaseband { chains: bb.chains, sample_rate: bb.sample_rate, arrival_offset: 0 };
    write_capture(ctx.dir()?, &a.out_stem, &capture, cfg.carrier_hz, &markers)?;
    let kind = if a.ndp { "NDP" } else { "DATA" };
    println!(
        "{} {kind} frames, {} samples on {} chains, steering {}, written to {}",
        markers.len(),
        capture.chains[0].len(),
        capture.chains.len(),
        steering_name(tx.steering()),
        ctx.out_dir.join(format!("{}.ch*.cf32", a.out_stem)).display()
    );
    Ok(())
}

fn capture_paths(dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> =
        (0..).map(|k| dir.join(format!("{stem}.ch{k}.cf32"))).take_while(|p| p.exists()).collect();
    if paths.is_empty() {
        bail!("no capture {stem}.ch0.cf32 in {}", dir.display());
    }
    Ok(paths)
}

fn load_capture(cfg: &SystemConfig, dir: &Path, stem: &str) -> Result<(RxBaseband, Vec<IqSidecar>)> {
    let (rx, metas) = read_capture(&capture_paths(dir, stem)?).map_err(iq_error)?;
    if (rx.sample_rate - cfg.bandwidth_hz).abs() > 1e-6 * cfg.bandwidth_hz {
        bail!("capture sampled at {} Hz, configuration expects {} Hz", rx.sample_rate, cfg.bandwidth_hz);
    }
    Ok((rx, metas))
}

fn default_scene() -> Scene {
    Scene { targets: vec![PointTarget::new(6.0, 0.0, 1.0)], noise_power: 1e-6, ..Scene::default() }
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let (cap, metas) = load_capture(cfg, &ctx.out_dir, &a.input)?;
    if cap.chains.len() != cfg.n_tx {
        bail!("capture has {} chains, configuration has {} TX chains", cap.chains.len(), cfg.n_tx);
    }
    let markers = metas[0].frame_markers.clone();
    let scene = scene_or(cfg, a.scene.as_deref(), default_scene)?.with_seed(ctx.seed_for(0));
    let tx = TxBaseband { chains: cap.chains, sample_rate: cap.sample_rate, frames: Vec::new() };
    let (rx, markers, stem) = match a.link {
        Link::Radar => (simulate_radar(&tx, &scene, cfg)?, markers, a.out_stem.unwrap_or_else(|| "rx".into())),
        Link::Comm => {
            let rx = simulate_comm(&tx, a.distance, &scene, cfg)?;
            let shifted = markers.iter().map(|m| m + rx.arrival_offset).collect();
            (rx, shifted, a.out_stem.unwrap_or_else(|| "comm".into()))
        }
    };
    write_capture(ctx.dir()?, &stem, &rx, cfg.carrier_hz, &markers)?;
    println!(
        "{} samples on {} chains, written to {}",
        rx.len(),
        rx.chains.len(),
        ctx.out_dir.join(format!("{stem}.ch*.cf32")).display()
    );
    Ok(())
}

fn print_detections(records: &[DetectionRecord]) {
    println!("{:>5} {:>9} {:>10} {:>8}", "frame", "range_m", "angle_deg", "snr_db");
    for d in records {
        println!("{:>5} {:>9.3} {:>10.3} {:>8.2}", d.frame, d.range_m, d.angle_deg, d.snr_db);
    }
}

fn write_radar_outputs(ctx: &Ctx, image: &RangeAngleImage, records: &[DetectionRecord]) -> Result<()> {
    ImageFile::from_image(image).write(&ctx.out(IMAGE_FILE)?)?;
    fs::write(ctx.out(DETECTIONS_FILE)?, detections_to_jsonl(records))?;
    Ok(())
}

fn radar(ctx: &Ctx, a: RadarArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let (rx, metas) = load_capture(cfg, &ctx.out_dir, &a.input)?;
    if rx.chains.len() != cfg.n_rx {
        bail!("capture has {} chains, configuration has {} RX chains", rx.chains.len(), cfg.n_rx);
    }
    let frame_len = FrameLayout::new(cfg.n_tx, 0).n_samples(cfg);
    let starts: Vec<usize> = if metas[0].frame_markers.is_empty() {
        (0..rx.len() / frame_len).map(|i| i * frame_len).collect()
    } else {
        metas[0].frame_markers.clone()
    };
    if let Some(s) = starts.iter().find(|&&s| s + frame_len > rx.len()) {
        return Err(
            anyhow!("frame at sample {s} runs past the {} captured samples", rx.len()).context(Class::MalformedIq)
        );
    }
    if starts.len() <= a.capture_frames {
        bail!("{} frames in the capture, none left after {} capture frames", starts.len(), a.capture_frames);
    }
    let grid = Transmitter::new(cfg.clone()).ndp_grid()?;
    let mut proc = RadarProcessor::new(cfg.clone());
    if a.capture_frames > 0 {
        proc.si_mut().start_capture();
    }
    let mut records = Vec::new();
    let mut last: Option<RadarFrame> = None;
    for (i, &s) in starts.iter().enumerate() {
        let slice = RxBaseband {
            chains: rx.chains.iter().map(|c| c[s..s + frame_len].to_vec()).collect(),
            sample_rate: rx.sample_rate,
            arrival_offset: 0,
        };
        let frame = proc.process(&slice, &grid)?;
        if i < a.capture_frames {
            if i + 1 == a.capture_frames {
                proc.si_mut().stop_capture();
            }
            continue;
        }
        records.extend(frame.detections.iter().map(|d| DetectionRecord::new(i as u64, d)));
        last = Some(frame);
    }
    let last = last.expect("at least one frame after capture");
    write_radar_outputs(ctx, &last.image, &records)?;
    println!("{} frames imaged, {} detections", starts.len() - a.capture_frames, records.len());
    print_detections(&records);
    Ok(())
}

fn feedback_from(report: &NdpReport, cfg: &SystemConfig) -> Result<FeedbackFile> {
    Ok(FeedbackFile::from_estimate_at(&report.estimate, cfg, timestamp())?)
}

fn rx(ctx: &Ctx, a: RxArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let path = a.input.clone().unwrap_or_else(|| ctx.out_dir.join("comm.ch0.cf32"));
    let (samples, _) = read_iq(&path).map_err(iq_error).with_context(|| format!("reading {}", path.display()))?;
    let mut stream = StreamReceiver::new(cfg.clone());
    let mut events = Vec::new();
    for chunk in samples.chunks(a.chunk.max(1)) {
        events.extend(stream.push(chunk));
    }
    // trailing silence completes a frame that ends at the last sample
    events.extend(stream.push(&vec![Default::default(); 2 * cfg.symbol_len()]));
    let sink = match &a.udp_out {
        Some(addr) => {
            let s = UdpSocket::bind("0.0.0.0:0")?;
            s.connect(addr).with_context(|| format!("connecting to {addr}"))?;
            Some(s)
        }
        None => None,
    };
    let (mut ok, mut data, mut ndp, mut payloads) = (0usize, 0usize, 0usize, Vec::new());
    for e in &events {
        match e {
            RxEvent::Packet(p) => {
                data += 1;
                println!(
                    "frame {:>4} start {:>8} DATA mcs {} len {:>4} crc {} snr {:.2} dB cfo {:.0} Hz",
                    p.frame_index,
                    p.start,
                    p.mcs.id(),
                    p.payload.len(),
                    if p.crc_ok { "ok" } else { "bad" },
                    p.snr_db,
                    p.cfo_hz
                );
                if p.crc_ok {
                    ok += 1;
                    payloads.extend_from_slice(&p.payload);
                    if let Some(s) = &sink {
                        s.send(&p.payload)?;
                    }
                }
            }
            RxEvent::Feedback(r) => {
                ndp += 1;
                println!(
                    "frame {:>4} start {:>8} NDP snr {:.2} dB cfo {:.0} Hz",
                    r.frame_index, r.start, r.snr_db, r.cfo_hz
                );
                write_feedback(&ctx.out(FEEDBACK_FILE)?, &feedback_from(r, cfg)?)?;
            }
            RxEvent::Dropped { frame_index, start, reason } => {
                println!("frame {frame_index:>4} start {start:>8} dropped: {reason:?}");
            }
        }
    }
    if events.is_empty() {
        bail!("no frames found in {}", path.display());
    }
    fs::write(ctx.out("payloads.bin")?, &payloads)?;
    println!("{} frames: {data} DATA of which {ok} with valid CRC, {ndp} NDP", events.len());
    Ok(())
}

/// Two unit reflectors at 6 m and +-10 degrees over the scenario noise.
fn loopback_scene() -> Scene {
    Scene {
        targets: vec![PointTarget::new(6.0, -10.0, 1.0), PointTarget::new(6.0, 10.0, 1.0)],
        noise_power: 1e-4,
        ..Scene::default()
    }
}

struct CommOutcome {
    sounding: NdpReport,
    steering: &'static str,
    outcomes: Vec<Option<f64>>,
}

fn loopback(ctx: &Ctx, a: LoopbackArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let mcs = ctx.mcs(a.mcs);
    let radar_scene = scene_or(cfg, a.scene.as_deref(), loopback_scene)?.with_seed(ctx.seed_for(0));
    let comm_scene = Scene { noise_power: 10f64.powf(-a.snr_db / 10.0), cfo_hz: a.cfo_hz, ..Scene::default() };
    let payloads = random_payloads(ctx.seed, a.frames, a.payload_len);
    let mut tx = Transmitter::new(cfg.clone());
    let (grid, ndp) = tx.ndp()?;

    let t0 = Instant::now();
    let (radar, comm) = std::thread::scope(|s| {
        let radar = s.spawn(|| -> Result<RadarFrame> {
            let echo = simulate_radar(&ndp, &radar_scene, cfg)?;
            Ok(RadarProcessor::new(cfg.clone()).process(&echo, &grid)?)
        });
        let comm = s.spawn(|| -> Result<CommOutcome> {
            let heard = simulate_comm(&ndp, 1.0, &comm_scene.with_seed(ctx.seed_for(1)), cfg)?;
            let sounding = Receiver::new(cfg.clone())
                .receive(&heard.chains[0])
                .into_iter()
                .find_map(|e| if let RxEvent::Feedback(r) = e { Some(r) } else { None })
                .ok_or_else(|| anyhow!("sounding frame was not received"))?;
            tx.set_steering(compute_steering(&sounding.estimate.h, cfg)?);
            let mut outcomes = Vec::with_capacity(payloads.len());
            for (i, p) in payloads.iter().enumerate() {
                let (_, bb) = tx.data(p, mcs, scrambler_seed(i))?;
                let heard = simulate_comm(&bb, 1.0, &comm_scene.with_seed(ctx.seed_for(2 + i as u64)), cfg)?;
                let got = Receiver::new(cfg.clone()).receive(&heard.chains[0]).into_iter().find_map(|e| match e {
                    RxEvent::Packet(pk) if pk.crc_ok && &pk.payload == p => Some(pk.snr_db),
                    _ => None,
                });
                outcomes.push(got);
            }
            Ok(CommOutcome { sounding, steering: steering_name(tx.steering()), outcomes })
        });
        (radar.join().expect("radar thread"), comm.join().expect("comm thread"))
    });
    log::info!("tx, simulate, radar and rx took {:.3} s", t0.elapsed().as_secs_f64());
    let (frame, comm) = (radar?, comm?);

    write_feedback(&ctx.out(FEEDBACK_FILE)?, &feedback_from(&comm.sounding, cfg)?)?;
    let records: Vec<DetectionRecord> = frame.detections.iter().map(|d| DetectionRecord::new(0, d)).collect();
    write_radar_outputs(ctx, &frame.image, &records)?;

    let good: Vec<f64> = comm.outcomes.iter().flatten().copied().collect();
    let n = comm.outcomes.len();
    let per = if n == 0 { 0.0 } else { (n - good.len()) as f64 / n as f64 };
    println!(
        "sounding snr {:.2} dB, cfo {:.0} Hz, steering {}",
        comm.sounding.snr_db, comm.sounding.cfo_hz, comm.steering
    );
    println!("frames {n} ok {} PER {:.2} %", good.len(), 100.0 * per);
    if !good.is_empty() {
        let mean = db(good.iter().map(|s| 10f64.powf(s / 10.0)).sum::<f64>() / good.len() as f64);
        let (lo, hi) = good.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
        println!("comm snr mean {mean:.2} dB, min {lo:.2} dB, max {hi:.2} dB");
    }
    println!("radar detections {}", records.len());
    print_detections(&records);
    if per > a.max_per {
        bail!("packet error rate {:.2} % above the allowed {:.2} %", 100.0 * per, 100.0 * a.max_per);
    }
    if records.is_empty() {
        bail!("radar reported no detections");
    }
    Ok(())
}

fn axis(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) {
        bail!("need step > 0 and to >= from, got {from}..{to} step {step}");
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| from + i as f64 * step).collect())
}

fn sweep_table(records: &[SweepRecord], xname: &str) -> String {
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let mut out = format!("{xname},snr_db,estimate,repetitions\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.x, cell(r.snr_db), cell(r.estimate), r.repetitions));
    }
    out
}

fn seeds(ctx: &Ctx, n: u64) -> Vec<u64> {
    (0..n).map(|i| ctx.seed.wrapping_add(i)).collect()
}

fn sweep_distance(ctx: &Ctx, a: SweepDistanceArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let (from, to) = match a.link {
        Link::Radar => (a.from.unwrap_or(3.0), a.to.unwrap_or(12.0)),
        Link::Comm => (a.from.unwrap_or(3.5), a.to.unwrap_or(12.5)),
    };
    let ds = axis(from, to, a.step)?;
    let template = Scene { noise_power: a.noise_power, ..Scene::default() };
    let seeds = seeds(ctx, a.seeds);
    let (sweep, name): (DistanceSweep, &str) = match a.link {
        Link::Radar => (run_radar_distance_sweep(&ds, &template, cfg, &seeds, a.d0)?, "radar"),
        Link::Comm => (run_comm_distance_sweep(&ds, &template, cfg, &seeds, a.d0)?, "comm"),
    };
    fs::write(ctx.out(&format!("sweep_{name}.csv"))?, sweep_table(&sweep.records, "distance_m"))?;
    for g in &sweep.gaps {
        println!("no measurement at {g} m");
    }
    let fit = sweep.fit.ok_or_else(|| anyhow!("fewer than two distances were measured"))?;
    println!(
        "{name} path loss: alpha {:.4}, beta {:.3} dB at d0 {} m, residual {:.4} dB^2",
        fit.alpha, fit.beta, fit.d0, fit.residual
    );
    Ok(())
}

fn sweep_angle(ctx: &Ctx, a: SweepAngleArgs) -> Result<()> {
    let angles = axis(a.from, a.to, a.step)?;
    let q = a.fov_deg.map_or(0.0, |f| taper_for_fov(f / 2.0));
    let template = Scene { noise_power: a.noise_power, element_taper_q: q, ..Scene::default() };
    let sweep = run_angle_sweep(&angles, a.range, &template, &ctx.cfg, &seeds(ctx, a.seeds))?;
    fs::write(ctx.out("sweep_angle.csv")?, sweep_table(&sweep.records, "angle_deg"))?;
    let snrs: Vec<f64> = sweep.records.iter().filter_map(|r| r.snr_db).collect();
    let (lo, hi) = snrs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    println!("{} of {} bearings measured, snr {lo:.2}..{hi:.2} dB", snrs.len(), angles.len());
    match sweep.fov_3db {
        Some(f) => println!("3 dB field of view {f:.2} deg"),
        None => println!("3 dB field of view wider than the sweep"),
    }
    Ok(())
}

fn two_target(ctx: &Ctx, a: TwoTargetArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let mut scenario = TwoTargetScenario::paper(cfg).with_seed(ctx.seed);
    scenario.targets = vec![PointTarget::new(a.range, -a.angle, 1.0), PointTarget::new(a.range, a.angle, 1.0)];
    let report = run_two_target_report(&scenario, cfg)?;
    let records: Vec<DetectionRecord> = report.detections.iter().map(|d| DetectionRecord::new(0, d)).collect();
    write_radar_outputs(ctx, &report.frame.image, &records)?;
    print_detections(&records);
    for (d, (wr, wa)) in report.detections.iter().zip(&report.widths) {
        let show = |w: &Option<f64>| w.map_or("-".to_string(), |w| format!("{w:.3}"));
        println!("width at {:.3} m {:.3} deg: range {} m, angle {} deg", d.range_m, d.angle_deg, show(wr), show(wa));
    }
    if records.len() != 2 {
        bail!("{} detections, expected 2", records.len());
    }
    Ok(())
}

fn si_capture(ctx: &Ctx, a: SiCaptureArgs) -> Result<()> {
    let mut cfg = ctx.cfg.clone();
    if let Some(n) = a.frames {
        cfg.radar.si_window = n;
        cfg = cfg.validate().context(Class::Config)?;
    }
    let n = cfg.radar.si_window;
    let background = background_scene(a.range, a.above_db);
    let (grid, bb) = Transmitter::new(cfg.clone()).ndp()?;
    let mut proc = RadarProcessor::new(cfg.clone()).with_method(DetectMethod::GlobalPeak);
    proc.si_mut().start_capture();
    for k in 0..n as u64 {
        proc.process(&simulate_radar(&bb, &background.with_seed(ctx.seed_for(k)), &cfg)?, &grid)?;
    }
    proc.si_mut().stop_capture();
    let mut scene = background.with_seed(ctx.seed_for(n as u64));
    scene.targets.push(PointTarget::new(a.range, a.angle, 1.0));
    let frame = proc.process(&simulate_radar(&bb, &scene, &cfg)?, &grid)?;
    let raw = range_angle_image(&frame.raw, &cfg);
    let clean = &frame.image;

    let truth = clean.bin_of(a.range, a.angle);
    let near = |(r, c, _): (usize, usize, f64)| r.abs_diff(truth.0) <= 1 && c.abs_diff(truth.1) <= 1;
    let (before, after) = (near(raw.argmax()), near(clean.argmax()));
    let leakage = background.si_leakage.map(|s| s.delay_samples * SPEED_OF_LIGHT / (2.0 * cfg.bandwidth_hz));
    let statics: Vec<(f64, f64)> =
        leakage.map(|r| (r, 0.0)).into_iter().chain(background.clutter.iter().map(|c| (c.range, c.angle))).collect();
    let suppression = statics
        .iter()
        .map(|&(r, ang)| {
            let (br, bc) = clean.bin_of(r, ang);
            db(raw.power[br][bc] / clean.power[br][bc])
        })
        .fold(f64::INFINITY, f64::min);

    ImageFile::from_image(&raw).write(&ctx.out("image_raw.csv")?)?;
    ImageFile::from_image(clean).write(&ctx.out("image_clean.csv")?)?;
    println!("background frames {n}");
    println!("target is the image peak before removal: {}", if before { "yes" } else { "no" });
    println!("target is the image peak after removal: {}", if after { "yes" } else { "no" });
    println!("static scatterer suppression {suppression:.2} dB (weakest of {})", statics.len());
    if !after {
        bail!("target is not the image peak after background removal");
    }
    Ok(())
}
