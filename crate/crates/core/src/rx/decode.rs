use crate::config::{CodeRate, Modulation};
use crate::header::{Header, HeaderError, HEADER_BITS, HEADER_CODED_BITS};
use crate::tx::{constellation, PUNCTURE_3_4};
use crate::C64;

use crate::tx::coding::branch_output;

const N_STATES: usize = 64;

/// Soft bit convention: positive favours `1`, negative `0`, zero is an
/// erasure. Hard decisions are `+-1`.
pub type SoftBit = f32;

/// Nearest constellation point.
pub fn decide(v: C64, modulation: Modulation) -> C64 {
    let pts = constellation(modulation);
    *pts.iter().min_by(|a, b| (v - *a).norm_sqr().total_cmp(&(v - *b).norm_sqr())).expect("non-empty constellation")
}

/// Demap one symbol to `bits_per_symbol` soft values, MSB first.
///
/// Hard mode returns `+-1` from the nearest point. Soft mode returns the
/// max-log difference `min_d2(b=0) - min_d2(b=1)` scaled by `reliability`
/// (typically `|h|^2`).
pub fn demap(v: C64, modulation: Modulation, soft: bool, reliability: f64) -> Vec<SoftBit> {
    let bps = modulation.bits_per_symbol();
    let pts = constellation(modulation);
    if !soft {
        let (idx, _) = pts
            .iter()
            .enumerate()
            .min_by(|a, b| (v - *a.1).norm_sqr().total_cmp(&(v - *b.1).norm_sqr()))
            .expect("non-empty constellation");
        return (0..bps).rev().map(|i| if (idx >> i) & 1 == 1 { 1.0 } else { -1.0 }).collect();
    }
    (0..bps)
        .rev()
        .map(|i| {
            let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
            for (idx, p) in pts.iter().enumerate() {
                let d = (v - p).norm_sqr();
                if (idx >> i) & 1 == 1 {
                    d1 = d1.min(d);
                } else {
                    d0 = d0.min(d);
                }
            }
            ((d0 - d1) * reliability) as SoftBit
        })
        .collect()
}

/// Reinsert punctured positions as erasures. `bits.len()` must be a multiple
/// of the kept bits per period.
pub fn depuncture(bits: &[SoftBit], rate: CodeRate) -> Vec<SoftBit> {
    match rate {
        CodeRate::Half => bits.to_vec(),
        CodeRate::ThreeQuarters => {
            let kept = PUNCTURE_3_4.iter().filter(|k| **k).count();
            let mut out = Vec::with_capacity(bits.len() / kept * PUNCTURE_3_4.len() + PUNCTURE_3_4.len());
            let mut it = bits.iter();
            'outer: loop {
                for &keep in &PUNCTURE_3_4 {
                    if keep {
                        match it.next() {
                            Some(b) => out.push(*b),
                            None => break 'outer,
                        }
                    } else {
                        out.push(0.0);
                    }
                }
            }
            // drop erasures appended after the last kept bit of a partial period
            while out.len() % 2 == 1 {
                out.pop();
            }
            out
        }
    }
}

/// Maximum-likelihood decoding of a zero-terminated rate-1/2 K=7 trellis with
/// full traceback. `coded` holds `(A, B)` pairs; returns one bit per pair,
/// tail included.
pub fn viterbi_decode(coded: &[SoftBit]) -> Vec<u8> {
    let steps = coded.len() / 2;
    if steps == 0 {
        return Vec::new();
    }
    // branch correlation for each (state, bit)
    let mut outputs = [[(0.0f32, 0.0f32); 2]; N_STATES];
    for (s, row) in outputs.iter_mut().enumerate() {
        for bit in 0..2u8 {
            let (a, b) = branch_output(s as u8, bit);
            row[bit as usize] = (if a == 1 { 1.0 } else { -1.0 }, if b == 1 { 1.0 } else { -1.0 });
        }
    }
    let mut metric = [f32::NEG_INFINITY; N_STATES];
    metric[0] = 0.0;
    let mut decisions: Vec<u64> = Vec::with_capacity(steps);
    for t in 0..steps {
        let (ra, rb) = (coded[2 * t], coded[2 * t + 1]);
        let mut next = [f32::NEG_INFINITY; N_STATES];
        let mut dec = 0u64;
        for ns in 0..N_STATES {
            let bit = (ns >> 5) & 1;
            let base = (ns & 31) << 1;
            let mut best = f32::NEG_INFINITY;
            let mut choice = 0u64;
            for x in 0..2 {
                let ps = base | x;
                let m = metric[ps];
                if m == f32::NEG_INFINITY {
                    continue;
                }
                let (oa, ob) = outputs[ps][bit];
                let cand = m + oa * ra + ob * rb;
                if cand > best {
                    best = cand;
                    choice = x as u64;
                }
            }
            next[ns] = best;
            dec |= choice << ns;
        }
        // renormalise so long frames keep f32 resolution
        let top = next.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        for m in next.iter_mut() {
            *m -= top;
        }
        metric = next;
        decisions.push(dec);
    }
    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        bits[t] = ((state >> 5) & 1) as u8;
        let x = ((decisions[t] >> state) & 1) as usize;
        state = ((state & 31) << 1) | x;
    }
    bits
}

/// Decode the header from its equalized BPSK data subcarriers.
pub fn decode_header(symbols: &[C64], erased: &[bool]) -> Result<Header, HeaderError> {
    let n = symbols.len().min(erased.len());
    if n < HEADER_CODED_BITS {
        return Err(HeaderError::Truncated(n));
    }
    let soft: Vec<SoftBit> = symbols
        .iter()
        .zip(erased)
        .take(HEADER_CODED_BITS)
        .map(|(v, e)| if *e { 0.0 } else { demap(*v, Modulation::Bpsk, false, 1.0)[0] })
        .collect();
    let bits = viterbi_decode(&soft);
    let mut arr = [0u8; HEADER_BITS];
    arr.copy_from_slice(&bits[..HEADER_BITS]);
    Header::from_bits(&arr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::{conv_encode, puncture};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn to_soft(bits: &[u8]) -> Vec<SoftBit> {
        bits.iter().map(|b| if *b == 1 { 1.0 } else { -1.0 }).collect()
    }

    fn hamming(a: &[u8], b: &[u8]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn viterbi_matches_exhaustive_ml() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let codebook: Vec<Vec<u8>> = (0..1u32 << 16)
            .map(|m| {
                let mut bits: Vec<u8> = (0..16).map(|i| ((m >> i) & 1) as u8).collect();
                bits.extend([0; 6]);
                conv_encode(&bits)
            })
            .collect();
        for _ in 0..50 {
            let msg: u32 = rng.gen_range(0..1 << 16);
            let mut rx = codebook[msg as usize].clone();
            let flips = rng.gen_range(1..=8);
            for _ in 0..flips {
                let i = rng.gen_range(0..rx.len());
                rx[i] ^= 1;
            }
            let best = codebook.iter().map(|c| hamming(c, &rx)).min().unwrap();
            let decoded = viterbi_decode(&to_soft(&rx));
            assert_eq!(&decoded[16..], &[0; 6]);
            let reencoded = conv_encode(&decoded);
            assert_eq!(hamming(&reencoded, &rx), best);
        }
    }

    #[test]
    fn short_header_rejected() {
        let v = vec![C64::new(1.0, 0.0); HEADER_CODED_BITS];
        assert_eq!(
            decode_header(&v[1..], &[false; HEADER_CODED_BITS]),
            Err(HeaderError::Truncated(HEADER_CODED_BITS - 1))
        );
        assert_eq!(decode_header(&v, &[false; 3]), Err(HeaderError::Truncated(3)));
    }

    #[test]
    fn depuncture_round_trip_with_erasures() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bits: Vec<u8> = (0..600).map(|_| rng.gen_range(0..2)).collect();
        let soft = to_soft(&bits);
        let p = puncture(&soft, CodeRate::ThreeQuarters).unwrap();
        let d = depuncture(&p, CodeRate::ThreeQuarters);
        assert_eq!(d.len(), soft.len());
        for (i, (a, b)) in d.iter().zip(&soft).enumerate() {
            if PUNCTURE_3_4[i % 6] {
                assert_eq!(a, b);
            } else {
                assert_eq!(*a, 0.0);
            }
        }
        assert_eq!(depuncture(&soft, CodeRate::Half), soft);
    }

    #[test]
    fn hard_demap_inverts_map() {
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
            for (idx, p) in constellation(m).iter().enumerate() {
                let bps = m.bits_per_symbol();
                let want: Vec<SoftBit> = (0..bps).rev().map(|i| if (idx >> i) & 1 == 1 { 1.0 } else { -1.0 }).collect();
                assert_eq!(demap(*p * 1.05, m, false, 1.0), want);
                let soft = demap(*p, m, true, 1.0);
                assert!(soft.iter().zip(&want).all(|(s, w)| s * w > 0.0));
            }
        }
    }

    proptest! {
        #[test]
        fn noiseless_round_trip(bits in proptest::collection::vec(0u8..2, 1..200), three_quarters in any::<bool>()) {
            let mut info = bits.clone();
            info.extend([0; 6]);
            let rate = if three_quarters { CodeRate::ThreeQuarters } else { CodeRate::Half };
            // pad so the mother code length is a whole puncturing period
            while (2 * info.len()) % 6 != 0 {
                info.push(0);
            }
            let coded = puncture(&conv_encode(&info), rate).unwrap();
            let decoded = viterbi_decode(&depuncture(&to_soft(&coded), rate));
            prop_assert_eq!(&decoded[..bits.len()], &bits[..]);
        }
    }
}
