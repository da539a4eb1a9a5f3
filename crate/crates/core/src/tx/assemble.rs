use crate::config::{Modulation, SystemConfig};
use crate::frame::{self, FrameGrid, FrameKind, FrameLayout};
use crate::header::{Header, HEADER_CODED_BITS};
use crate::C64;

use super::coding::conv_encode;
use super::mapper::map_symbols;
use super::{EncodedStream, SteeringMatrix, TxError};

/// BPSK rate-1/2 header symbols for the data subcarriers, in plan order.
pub fn build_header(header: &Header, cfg: &SystemConfig) -> Result<Vec<C64>, TxError> {
    let mut coded = conv_encode(&header.to_bits());
    debug_assert_eq!(coded.len(), HEADER_CODED_BITS);
    coded.resize(cfg.data_subcarriers.len(), 0);
    map_symbols(&coded, Modulation::Bpsk)
}

/// Lay out training, header, MIMO preamble and payload with precoding.
///
/// STS, LTS and header are sent unprecoded from the first two chains. The
/// MIMO preamble slot `l` is active only on chain `l` and carries the LTS;
/// for DATA frames it and every payload symbol are weighted per subcarrier by
/// the steering matrix.
pub fn assemble_frame(
    stream: Option<&EncodedStream>,
    kind: FrameKind,
    steering: &SteeringMatrix,
    cfg: &SystemConfig,
) -> Result<FrameGrid, TxError> {
    let stream = match (kind, stream) {
        (FrameKind::Data, None) => return Err(TxError::MissingStream),
        (FrameKind::Ndp, Some(_)) => return Err(TxError::UnexpectedStream),
        (_, s) => s,
    };
    let n_data = stream.map_or(0, |s| s.n_symbols);
    if n_data > cfg.max_data_symbols {
        return Err(TxError::FrameTooLong { n_symbols: n_data, max: cfg.max_data_symbols });
    }
    let plan = cfg.plan();
    let layout = FrameLayout::new(cfg.n_tx, n_data);
    let mut grid = FrameGrid::zeros(kind, layout, cfg.n_sc);

    let sts = frame::sts_symbol(cfg, &plan);
    let lts = frame::lts_symbol(cfg, &plan);
    let pilots = frame::pilot_values(cfg);

    let header = Header::new(stream.map_or(cfg.mcs, |s| s.mcs), stream.map_or(0, |s| s.source_len), kind)?;
    let mut header_sym = vec![C64::new(0.0, 0.0); cfg.n_sc];
    for (bin, v) in plan.data.iter().zip(build_header(&header, cfg)?) {
        header_sym[*bin] = v;
    }
    for (bin, v) in plan.pilot.iter().zip(&pilots) {
        header_sym[*bin] = *v;
    }

    let n_train = frame::training_chains(cfg);
    let scale = 1.0 / (n_train as f64).sqrt();
    for chain in grid.grid.iter_mut().take(n_train) {
        for s in layout.sts() {
            chain[s] = sts.iter().map(|v| v * scale).collect();
        }
        for s in layout.lts() {
            chain[s] = lts.iter().map(|v| v * scale).collect();
        }
        chain[layout.header()] = header_sym.iter().map(|v| v * scale).collect();
    }

    let precode = matches!(kind, FrameKind::Data);
    for l in 0..cfg.n_tx {
        let slot = layout.preamble_slot(l);
        for &bin in &plan.occupied {
            let w = if precode { steering.weight(bin, l) } else { C64::new(1.0, 0.0) };
            grid.grid[l][slot][bin] = lts[bin] * w;
        }
    }

    if let Some(stream) = stream {
        let symbols = map_symbols(&stream.bits, stream.mcs.modulation)?;
        let per_sym = plan.data.len();
        for (i, sym_idx) in layout.data().enumerate() {
            let mut freq = vec![C64::new(0.0, 0.0); cfg.n_sc];
            for (bin, v) in plan.data.iter().zip(&symbols[i * per_sym..(i + 1) * per_sym]) {
                freq[*bin] = *v;
            }
            for (bin, v) in plan.pilot.iter().zip(&pilots) {
                freq[*bin] = *v;
            }
            for l in 0..cfg.n_tx {
                for &bin in &plan.occupied {
                    grid.grid[l][sym_idx][bin] = freq[bin] * steering.weight(bin, l);
                }
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mcs;
    use crate::tx::{compute_steering, encode_payload};
    use rand::{Rng, SeedableRng};

    fn cfg() -> SystemConfig {
        SystemConfig::paper_defaults()
    }

    fn is_zero(s: &[C64]) -> bool {
        s.iter().all(|v| v.norm() == 0.0)
    }

    #[test]
    fn ndp_preamble_is_time_orthogonal() {
        let c = cfg();
        let g = assemble_frame(None, FrameKind::Ndp, &SteeringMatrix::identity(&c), &c).unwrap();
        assert_eq!(g.layout.preamble().len(), 4);
        assert_eq!(g.layout.n_data, 0);
        for slot in 0..4 {
            for chain in 0..4 {
                let s = g.symbol(chain, g.layout.preamble_slot(slot));
                assert_eq!(!is_zero(s), slot == chain, "slot {slot} chain {chain}");
            }
        }
    }

    #[test]
    fn training_only_on_first_two_chains() {
        let c = cfg();
        let g = assemble_frame(None, FrameKind::Ndp, &SteeringMatrix::identity(&c), &c).unwrap();
        for sym in 0..5 {
            assert!(!is_zero(g.symbol(0, sym)) && !is_zero(g.symbol(1, sym)));
            assert!(is_zero(g.symbol(2, sym)) && is_zero(g.symbol(3, sym)));
        }
    }

    #[test]
    fn identity_steering_puts_data_on_chain_one() {
        let c = cfg();
        let s = encode_payload(b"hello radar", Mcs::QPSK_1_2, 0x11, 48).unwrap();
        let g = assemble_frame(Some(&s), FrameKind::Data, &SteeringMatrix::identity(&c), &c).unwrap();
        let plan = c.plan();
        let syms = map_symbols(&s.bits, c.mcs.modulation).unwrap();
        for (i, sym) in g.layout.data().enumerate() {
            for chain in 1..4 {
                assert!(is_zero(g.symbol(chain, sym)));
            }
            for (j, &bin) in plan.data.iter().enumerate() {
                assert_eq!(g.symbol(0, sym)[bin], syms[i * 48 + j]);
            }
        }
    }

    #[test]
    fn guards_zero_everywhere() {
        let c = cfg();
        let s = encode_payload(&[1; 40], Mcs::QAM16_3_4, 0x22, 48).unwrap();
        let g = assemble_frame(Some(&s), FrameKind::Data, &SteeringMatrix::identity(&c), &c).unwrap();
        for chain in &g.grid {
            for sym in chain {
                for &b in &c.plan().guard {
                    assert_eq!(sym[b], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn power_invariant_to_steering() {
        let c = cfg();
        let s = encode_payload(&[9; 200], Mcs::QPSK_3_4, 0x33, 48).unwrap();
        let e_id = assemble_frame(Some(&s), FrameKind::Data, &SteeringMatrix::identity(&c), &c).unwrap().energy();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let fb: Vec<Vec<C64>> = (0..64)
            .map(|_| (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let mrt = compute_steering(&fb, &c).unwrap();
        let e_mrt = assemble_frame(Some(&s), FrameKind::Data, &mrt, &c).unwrap().energy();
        assert!((e_id - e_mrt).abs() / e_id < 1e-9);
    }

    #[test]
    fn kind_and_stream_must_agree() {
        let c = cfg();
        let id = SteeringMatrix::identity(&c);
        assert!(matches!(assemble_frame(None, FrameKind::Data, &id, &c), Err(TxError::MissingStream)));
        let s = encode_payload(&[1], Mcs::BPSK_1_2, 1, 48).unwrap();
        assert!(matches!(assemble_frame(Some(&s), FrameKind::Ndp, &id, &c), Err(TxError::UnexpectedStream)));
    }

    #[test]
    fn frame_too_long_rejected() {
        let c = SystemConfig { max_data_symbols: 10, ..cfg() };
        let s = encode_payload(&[1; 500], Mcs::BPSK_1_2, 1, 48).unwrap();
        let r = assemble_frame(Some(&s), FrameKind::Data, &SteeringMatrix::identity(&c), &c);
        assert!(matches!(r, Err(TxError::FrameTooLong { max: 10, .. })));
    }
}
