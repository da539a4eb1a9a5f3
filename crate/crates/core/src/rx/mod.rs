//! SISO communication receiver.
//!
//! `dc_block -> detect_frame -> estimate_cfo -> fine timing -> LS from the
//! LTS -> header -> MIMO-preamble estimate -> equalize/STA -> demap ->
//! depuncture -> Viterbi -> descramble -> CRC`. NDP frames end after the
//! preamble and yield per-TX channel feedback instead of a packet.

mod decode;
mod equalize;
mod estimate;
mod sync;

pub use decode::{decide, decode_header, demap, depuncture, viterbi_decode, SoftBit};
pub use equalize::{equalize, estimate_snr, Equalized, PilotStats, SNR_CAP_DB};
pub use estimate::{ls_estimate, sta_update, ChannelEstimate, StaParams};
pub use sync::{
    cfo_out_of_range, dc_block, derotate, detect_frame, detect_metric, estimate_cfo, estimate_coarse_cfo,
    estimate_fine_cfo, find_plateau, fine_timing, lts_time, plateau_to_start, synchronize, SyncState,
};

use crate::config::{index_of, EstimatorKind, Mcs, SystemConfig};
use crate::dsp::UnitaryFft;
use crate::frame::{self, FrameKind, FrameLayout};
use crate::header::{Header, HeaderError};
use crate::tx::{crc_check, n_data_symbols, scramble, TAIL_BITS};
use crate::C64;

/// Slot power, relative to the LS noise variance, below which a MIMO
/// preamble slot is treated as empty.
const SLOT_GATE: f64 = 2.0;

/// One decoded DATA frame. Delivered even when the CRC fails.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPacket {
    pub frame_index: u64,
    /// Sample index of the frame start in the processed stream.
    pub start: usize,
    pub payload: Vec<u8>,
    pub mcs: Mcs,
    pub crc_ok: bool,
    pub seed: u8,
    /// Pilot-based SNR over the payload symbols.
    pub snr_db: f64,
    pub cfo_hz: f64,
    /// Decision-directed RMS error vector magnitude of the payload symbols.
    pub evm_rms: f64,
    /// Equalized payload symbols, data subcarriers in plan order.
    pub symbols: Vec<C64>,
}

/// Channel sounding result of one NDP.
#[derive(Debug, Clone, PartialEq)]
pub struct NdpReport {
    pub frame_index: u64,
    pub start: usize,
    /// `h[fft_bin][tx_chain]`.
    pub estimate: ChannelEstimate,
    /// SNR from the agreement of the two LTS copies.
    pub snr_db: f64,
    pub cfo_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DropReason {
    Header(HeaderError),
    CfoOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RxEvent {
    Packet(DecodedPacket),
    Feedback(NdpReport),
    Dropped { frame_index: u64, start: usize, reason: DropReason },
}

/// Outcome of scanning a buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub events: Vec<RxEvent>,
    /// Samples before this index are no longer needed.
    pub consumed: usize,
}

/// Stateless per-frame decoder plus a frame counter.
#[derive(Debug, Clone)]
pub struct Receiver {
    cfg: SystemConfig,
    fft: UnitaryFft,
    frame_index: u64,
}

impl Receiver {
    pub fn new(cfg: SystemConfig) -> Self {
        let fft = UnitaryFft::new(cfg.n_sc);
        Receiver { cfg, fft, frame_index: 0 }
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    /// Decode every complete frame in `stream`.
    pub fn receive(&mut self, stream: &[C64]) -> Vec<RxEvent> {
        self.scan(stream).events
    }

    /// Decode complete frames; stop at the first frame that runs past the
    /// end of `stream`.
    pub fn scan(&mut self, stream: &[C64]) -> ScanResult {
        let cfg = &self.cfg;
        let blocked = dc_block(stream, cfg.receiver.dc_block_len);
        let metric = detect_metric(&blocked, cfg.sts_period(), cfg.receiver.detect_window);
        let mut events = Vec::new();
        let mut from = 0usize;
        let mut consumed = metric.len();
        let l = cfg.symbol_len();
        let pre_len = FrameLayout::new(cfg.n_tx, 0).preamble().start * l;
        while let Some(plateau) = find_plateau(&metric, cfg.receiver.detect_threshold, cfg.receiver.plateau_len, from) {
            let Some(sync) = synchronize(stream, plateau, cfg) else {
                consumed = plateau;
                break;
            };
            match self.decode_frame(stream, &sync) {
                FrameOutcome::Incomplete => {
                    consumed = plateau;
                    break;
                }
                FrameOutcome::Done { event, end } => {
                    events.push(event);
                    self.frame_index += 1;
                    from = end.saturating_sub(cfg.sts_period());
                    consumed = from;
                }
                FrameOutcome::Dropped(reason) => {
                    events.push(RxEvent::Dropped { frame_index: self.frame_index, start: sync.frame_start, reason });
                    self.frame_index += 1;
                    from = sync.frame_start + pre_len;
                    consumed = from;
                }
            }
        }
        ScanResult { events, consumed: consumed.min(stream.len()) }
    }

    fn demod(&self, x: &[C64], symbol: usize) -> Vec<C64> {
        let cfg = &self.cfg;
        let s = symbol * cfg.symbol_len() + cfg.n_cp - cfg.receiver.timing_backoff.min(cfg.n_cp);
        let mut body = x[s..s + cfg.n_sc].to_vec();
        self.fft.forward(&mut body);
        body
    }

    fn decode_frame(&self, stream: &[C64], sync: &SyncState) -> FrameOutcome {
        let cfg = &self.cfg;
        if sync.cfo_out_of_range {
            return FrameOutcome::Dropped(DropReason::CfoOutOfRange(sync.coarse_cfo));
        }
        let l = cfg.symbol_len();
        let plan = cfg.plan();
        let start = sync.frame_start;
        let head_layout = FrameLayout::new(cfg.n_tx, 0);
        let head_end = start + (head_layout.header() + 1) * l;
        if head_end > stream.len() {
            return FrameOutcome::Incomplete;
        }
        let cfo = sync.cfo();
        let x = derotate(&stream[start..head_end], cfo, cfg.bandwidth_hz);

        let lts_known = frame::lts_symbol(cfg, &plan);
        let pilots = frame::pilot_values(cfg);
        let y_lts: Vec<Vec<C64>> = head_layout.lts().map(|s| self.demod(&x, s)).collect();
        let lts_refs: Vec<&[C64]> = y_lts.iter().map(|v| v.as_slice()).collect();
        let h_train = ls_estimate(&lts_refs, &lts_known, &plan.occupied);
        let known_pilots: Vec<C64> = plan.pilot.iter().zip(&pilots).map(|(_, p)| *p).collect();

        let eq = equalize(&self.demod(&x, head_layout.header()), &h_train, &plan, &known_pilots);
        let header = match decode_header(&eq.data, &eq.erased) {
            Ok(h) => h,
            Err(e) => return FrameOutcome::Dropped(DropReason::Header(e)),
        };

        let n_data = match header.kind {
            FrameKind::Ndp => 0,
            FrameKind::Data => n_data_symbols(header.payload_len, header.mcs, plan.data.len()),
        };
        let layout = FrameLayout::new(cfg.n_tx, n_data);
        let end = start + layout.n_samples(cfg);
        if end > stream.len() {
            return FrameOutcome::Incomplete;
        }
        let x = derotate(&stream[start..end], cfo, cfg.bandwidth_hz);

        let slots: Vec<Vec<C64>> = (0..cfg.n_tx)
            .map(|tx| {
                let y = self.demod(&x, layout.preamble_slot(tx));
                ls_estimate(&[&y], &lts_known, &plan.occupied)
            })
            .collect();
        let columns: Vec<Vec<C64>> = (0..cfg.n_sc).map(|b| slots.iter().map(|s| s[b]).collect()).collect();
        let estimate = ChannelEstimate::from_columns(columns, EstimatorKind::Ls);

        let event = match header.kind {
            FrameKind::Ndp => RxEvent::Feedback(NdpReport {
                frame_index: self.frame_index,
                start,
                estimate,
                snr_db: lts_snr(&y_lts, &plan.occupied),
                cfo_hz: cfo,
            }),
            FrameKind::Data => {
                let noise = lts_noise(&y_lts, &lts_known, &plan.occupied);
                let h0 = gated_effective(&slots, &plan.occupied, noise);
                RxEvent::Packet(self.decode_payload(&x, &layout, &header, h0, sync))
            }
        };
        FrameOutcome::Done { event, end }
    }

    fn decode_payload(
        &self,
        x: &[C64],
        layout: &FrameLayout,
        header: &Header,
        h0: Vec<C64>,
        sync: &SyncState,
    ) -> DecodedPacket {
        let cfg = &self.cfg;
        let plan = cfg.plan();
        let pilots = frame::pilot_values(cfg);
        let modulation = header.mcs.modulation;
        let sta = StaParams {
            alpha: cfg.receiver.sta_alpha,
            beta: cfg.receiver.sta_beta,
            phase_slope: linear_phase_slope(&h0, &plan.occupied, cfg.n_sc),
        };
        let soft = cfg.receiver.soft_decisions;

        let mut h = h0;
        let mut stats = PilotStats::default();
        let mut coded: Vec<SoftBit> = Vec::new();
        let mut symbols = Vec::with_capacity(layout.n_data * plan.data.len());
        let (mut evm_err, mut evm_ref) = (0.0, 0.0);
        for s in layout.data() {
            let y = self.demod(x, s);
            let eq = equalize(&y, &h, &plan, &pilots);
            stats.add(&eq, &pilots);
            let mut decided = vec![C64::new(0.0, 0.0); cfg.n_sc];
            let mut bins = Vec::with_capacity(plan.occupied.len());
            let rot = C64::from_polar(1.0, eq.cpe);
            for ((&b, v), erased) in plan.data.iter().zip(&eq.data).zip(&eq.erased) {
                if *erased {
                    coded.extend(std::iter::repeat_n(0.0, modulation.bits_per_symbol()));
                    continue;
                }
                coded.extend(demap(*v, modulation, soft, h[b].norm_sqr()));
                let d = decide(*v, modulation);
                evm_err += (v - d).norm_sqr();
                evm_ref += d.norm_sqr();
                decided[b] = d * rot;
            }
            symbols.extend_from_slice(&eq.data);
            if cfg.receiver.estimator == EstimatorKind::Sta {
                for (&b, p) in plan.pilot.iter().zip(&pilots) {
                    decided[b] = p * rot;
                }
                for &b in &plan.occupied {
                    if decided[b].norm_sqr() > 0.0 {
                        bins.push(b);
                    }
                }
                h = sta_update(&h, &y, &decided, &bins, &sta);
            }
        }

        let mother = depuncture(&coded, header.mcs.code_rate);
        let info = viterbi_decode(&mother);
        let (payload, seed, crc_ok) = unpack_info(&info, header.payload_len);
        DecodedPacket {
            frame_index: self.frame_index,
            start: sync.frame_start,
            payload,
            mcs: header.mcs,
            crc_ok,
            seed,
            snr_db: stats.snr_db(),
            cfo_hz: sync.cfo(),
            evm_rms: if evm_ref > 0.0 { (evm_err / evm_ref).sqrt() } else { 0.0 },
            symbols,
        }
    }
}

enum FrameOutcome {
    Incomplete,
    Done { event: RxEvent, end: usize },
    Dropped(DropReason),
}

/// Split decoded information bits into payload, seed and CRC verdict.
fn unpack_info(info: &[u8], payload_len: usize) -> (Vec<u8>, u8, bool) {
    let n_framed = 8 * (payload_len + 4);
    if info.len() < 8 + n_framed + TAIL_BITS {
        return (Vec::new(), 0, false);
    }
    let seed = crate::tx::bits_to_bytes(&info[..8])[0];
    let Ok(bits) = scramble(&info[8..8 + n_framed], seed) else {
        return (vec![0; payload_len], seed, false);
    };
    let framed = crate::tx::bits_to_bytes(&bits);
    let ok = crc_check(&framed);
    (framed[..payload_len].to_vec(), seed, ok)
}

/// Mean phase step between adjacent occupied subcarriers of `h`, radians.
fn linear_phase_slope(h: &[C64], bins: &[usize], n_sc: usize) -> f64 {
    let acc: C64 = bins
        .windows(2)
        .filter(|w| index_of(w[1], n_sc) - index_of(w[0], n_sc) == 1)
        .map(|w| h[w[1]] * h[w[0]].conj())
        .sum();
    if acc.norm() > 0.0 {
        acc.arg()
    } else {
        0.0
    }
}

/// Per-bin noise variance of a single-symbol LS estimate, from the
/// disagreement of the two LTS copies.
fn lts_noise(copies: &[Vec<C64>], known: &[C64], bins: &[usize]) -> f64 {
    if copies.len() < 2 || bins.is_empty() {
        return 0.0;
    }
    let sum: f64 = bins.iter().map(|&b| ((copies[0][b] - copies[1][b]) / known[b]).norm_sqr() / 2.0).sum();
    sum / bins.len() as f64
}

/// Sum of the per-slot estimates, leaving out slots whose mean power does
/// not clear twice the noise variance (chains the steering left silent).
fn gated_effective(slots: &[Vec<C64>], bins: &[usize], noise: f64) -> Vec<C64> {
    let mean_power = |s: &Vec<C64>| bins.iter().map(|&b| s[b].norm_sqr()).sum::<f64>() / bins.len().max(1) as f64;
    let active: Vec<&Vec<C64>> = slots.iter().filter(|s| mean_power(s) > SLOT_GATE * noise).collect();
    let chosen: Vec<&Vec<C64>> = if active.is_empty() { slots.iter().collect() } else { active };
    let n = slots.first().map_or(0, |s| s.len());
    (0..n).map(|b| chosen.iter().map(|s| s[b]).sum()).collect()
}

/// SNR from two noisy copies: signal `|mean|^2`, noise `|Y1 - Y2|^2 / 2`.
fn lts_snr(copies: &[Vec<C64>], bins: &[usize]) -> f64 {
    if copies.len() < 2 {
        return SNR_CAP_DB;
    }
    let (mut s, mut n) = (0.0, 0.0);
    for &b in bins {
        let (a, c) = (copies[0][b], copies[1][b]);
        s += ((a + c) / 2.0).norm_sqr();
        // the mean of two copies carries half the noise of one
        n += (a - c).norm_sqr() / 2.0;
    }
    let noise_of_mean = n / 2.0;
    estimate_snr((s - noise_of_mean).max(0.0), n)
}

/// Incremental wrapper over [`Receiver::scan`] for sample streams.
#[derive(Debug, Clone)]
pub struct StreamReceiver {
    rx: Receiver,
    buf: Vec<C64>,
    /// Absolute sample index of `buf[0]`.
    offset: u64,
    max_buffer: usize,
}

impl StreamReceiver {
    pub fn new(cfg: SystemConfig) -> Self {
        let max_frame = FrameLayout::new(cfg.n_tx, cfg.max_data_symbols).n_samples(&cfg);
        StreamReceiver { rx: Receiver::new(cfg), buf: Vec::new(), offset: 0, max_buffer: 2 * max_frame }
    }

    /// Append samples and return the events they complete. Frame `start`
    /// fields are relative to the beginning of the whole stream.
    pub fn push(&mut self, samples: &[C64]) -> Vec<RxEvent> {
        self.buf.extend_from_slice(samples);
        let ScanResult { mut events, consumed } = self.rx.scan(&self.buf);
        let offset = self.offset as usize;
        for e in events.iter_mut() {
            match e {
                RxEvent::Packet(p) => p.start += offset,
                RxEvent::Feedback(f) => f.start += offset,
                RxEvent::Dropped { start, .. } => *start += offset,
            }
        }
        // keep enough history for a plateau that straddles the boundary
        let keep_from = if events.is_empty() && consumed >= self.buf.len().saturating_sub(self.rx.cfg.symbol_len()) {
            self.buf.len().saturating_sub(self.rx.cfg.symbol_len() * 2)
        } else {
            consumed
        };
        let keep_from = keep_from.max(self.buf.len().saturating_sub(self.max_buffer));
        self.buf.drain(..keep_from);
        self.offset += keep_from as u64;
        events
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_comm, Scene};
    use crate::tx::{compute_steering, Transmitter, TxBaseband};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SystemConfig {
        SystemConfig::paper_defaults()
    }

    fn over_air(bb: &TxBaseband, snr_db: f64, cfo: f64, seed: u64, c: &SystemConfig) -> Vec<C64> {
        let s = Scene { noise_power: 10f64.powf(-snr_db / 10.0), cfo_hz: cfo, rng_seed: seed, ..Scene::default() };
        simulate_comm(bb, 1.0, &s, c).unwrap().chains.remove(0)
    }

    fn packets(events: Vec<RxEvent>) -> Vec<DecodedPacket> {
        events.into_iter().filter_map(|e| if let RxEvent::Packet(p) = e { Some(p) } else { None }).collect()
    }

    #[test]
    fn noiseless_loopback_every_mcs() {
        let c = cfg();
        let tx = Transmitter::new(c.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mcs in Mcs::ALL {
            for _ in 0..8 {
                let len = rng.gen_range(1..300);
                let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                let seed = rng.gen_range(1..128);
                let (_, bb) = tx.data(&payload, mcs, seed).unwrap();
                let r = over_air(&bb, 300.0, 0.0, 1, &c);
                let p = packets(Receiver::new(c.clone()).receive(&r));
                assert_eq!(p.len(), 1, "{mcs}");
                assert!(p[0].crc_ok, "{mcs}");
                assert_eq!(p[0].payload, payload);
                assert_eq!(p[0].mcs, mcs);
                assert_eq!(p[0].seed, seed);
            }
        }
    }

    #[test]
    fn ndp_identity_channel_feedback_is_ones() {
        let c = cfg();
        let (_, bb) = Transmitter::new(c.clone()).ndp().unwrap();
        let r = over_air(&bb, 300.0, 0.0, 2, &c);
        let ev = Receiver::new(c.clone()).receive(&r);
        let RxEvent::Feedback(f) = &ev[0] else { panic!("{ev:?}") };
        // the FFT window starts `timing_backoff` samples early
        let slope = -2.0 * std::f64::consts::PI * c.receiver.timing_backoff as f64 / 64.0;
        for &b in &c.plan().occupied {
            for tx in 0..4 {
                let want = C64::from_polar(1.0, slope * crate::config::index_of(b, 64) as f64);
                assert!((f.estimate.h[b][tx] - want).norm() < 1e-9);
            }
        }
        assert_eq!(f.snr_db, SNR_CAP_DB);
    }

    #[test]
    fn back_to_back_frames_and_streaming() {
        let c = cfg();
        let tx = Transmitter::new(c.clone());
        let mut bb = tx.ndp().unwrap().1;
        for i in 0..3u8 {
            bb.append(&tx.data(&[i; 40], Mcs::QPSK_3_4, 0x10 + i).unwrap().1);
        }
        let r = over_air(&bb, 30.0, 20e3, 3, &c);
        let batch = Receiver::new(c.clone()).receive(&r);
        assert_eq!(batch.len(), 4);
        let mut sr = StreamReceiver::new(c.clone());
        let mut streamed = Vec::new();
        for chunk in r.chunks(333) {
            streamed.extend(sr.push(chunk));
        }
        assert_eq!(streamed.len(), batch.len());
        for (a, b) in streamed.iter().zip(&batch) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noisy_packet_decodes_and_reports_snr() {
        let c = cfg();
        let (_, bb) = Transmitter::new(c.clone()).data(&[0x77; 500], Mcs::QPSK_1_2, 0x41).unwrap();
        let mut snrs = Vec::new();
        for seed in 0..10 {
            let r = over_air(&bb, 20.0, 0.0, seed, &c);
            let p = packets(Receiver::new(c.clone()).receive(&r));
            assert!(p[0].crc_ok);
            snrs.push(p[0].snr_db);
        }
        let mean = snrs.iter().sum::<f64>() / snrs.len() as f64;
        assert!((mean - 20.0).abs() < 1.5, "{mean}");
    }

    #[test]
    fn coding_gain_at_low_snr() {
        // uncoded QPSK bit error rate from the equalized symbols versus the
        // decoded one, same frames
        let c = cfg();
        let tx = Transmitter::new(c.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut coded_err, mut raw_err, mut n_bits, mut n_raw) = (0usize, 0usize, 0usize, 0usize);
        for seed in 0..20 {
            let payload: Vec<u8> = (0..200).map(|_| rng.gen()).collect();
            let stream = crate::tx::encode_payload(&payload, Mcs::QPSK_1_2, 0x33, 48).unwrap();
            let (_, bb) = tx.data(&payload, Mcs::QPSK_1_2, 0x33).unwrap();
            let r = over_air(&bb, 9.0, 0.0, 100 + seed, &c);
            let p = packets(Receiver::new(c.clone()).receive(&r));
            let Some(p) = p.first() else { continue };
            for (got, want) in p.payload.iter().zip(&payload) {
                coded_err += (got ^ want).count_ones() as usize;
            }
            n_bits += 8 * payload.len();
            for (sym, bits) in p.symbols.iter().zip(stream.bits.chunks(2)) {
                let dec = demap(*sym, crate::Modulation::Qpsk, false, 1.0);
                for (d, b) in dec.iter().zip(bits) {
                    raw_err += ((*d > 0.0) as u8 != *b) as usize;
                    n_raw += 1;
                }
            }
        }
        assert!(n_bits > 0 && n_raw > 0);
        let coded = coded_err as f64 / n_bits as f64;
        let raw = raw_err as f64 / n_raw as f64;
        assert!(coded < raw, "coded {coded} raw {raw}");
    }

    #[test]
    fn mrt_feedback_improves_snr() {
        let c = cfg();
        let mut gains = Vec::new();
        for seed in 0..6u64 {
            let mut tx = Transmitter::new(c.clone());
            let s =
                Scene { noise_power: 0.01, comm_angle: -25.0 + 10.0 * seed as f64, rng_seed: seed, ..Scene::default() };
            let ndp = simulate_comm(&tx.ndp().unwrap().1, 1.0, &s, &c).unwrap().chains.remove(0);
            let ev = Receiver::new(c.clone()).receive(&ndp);
            let RxEvent::Feedback(f) = &ev[0] else { panic!("{ev:?}") };
            let payload = [0x5a; 300];
            let id = simulate_comm(&tx.data(&payload, Mcs::QPSK_1_2, 7).unwrap().1, 1.0, &s.with_seed(seed + 50), &c)
                .unwrap();
            tx.set_steering(compute_steering(&f.estimate.h, &c).unwrap());
            let mrt = simulate_comm(&tx.data(&payload, Mcs::QPSK_1_2, 7).unwrap().1, 1.0, &s.with_seed(seed + 90), &c)
                .unwrap();
            let p_id = packets(Receiver::new(c.clone()).receive(&id.chains[0]));
            let p_mrt = packets(Receiver::new(c.clone()).receive(&mrt.chains[0]));
            assert!(p_id[0].crc_ok && p_mrt[0].crc_ok);
            gains.push(p_mrt[0].snr_db - p_id[0].snr_db);
        }
        // equal element gains: |h|^2 / |h_1|^2 = N_tx
        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
        assert!((mean - 10.0 * 4f64.log10()).abs() < 1.5, "{gains:?}");
    }

    #[test]
    fn deterministic() {
        let c = cfg();
        let (_, bb) = Transmitter::new(c.clone()).data(&[1, 2, 3], Mcs::QAM16_1_2, 0x12).unwrap();
        let r = over_air(&bb, 15.0, 5e4, 77, &c);
        assert_eq!(Receiver::new(c.clone()).receive(&r), Receiver::new(c.clone()).receive(&r));
    }
}
