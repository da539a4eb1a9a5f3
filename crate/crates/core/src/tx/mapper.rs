use crate::config::Modulation;
use crate::C64;

use super::TxError;

const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0]; // index = (b0 << 1) | b1, Gray

/// Unit-average-power Gray constellation, indexed by the symbol's bits read
/// MSB-first (`b0 b1 ...`).
pub fn constellation(modulation: Modulation) -> Vec<C64> {
    let bps = modulation.bits_per_symbol();
    (0..1usize << bps)
        .map(|v| {
            let bits: Vec<u8> = (0..bps).rev().map(|i| ((v >> i) & 1) as u8).collect();
            map_one(&bits, modulation)
        })
        .collect()
}

fn map_one(bits: &[u8], modulation: Modulation) -> C64 {
    let pm = |b: u8| if b & 1 == 1 { 1.0 } else { -1.0 };
    match modulation {
        Modulation::Bpsk => C64::new(pm(bits[0]), 0.0),
        Modulation::Qpsk => C64::new(pm(bits[0]), pm(bits[1])) / 2f64.sqrt(),
        Modulation::Qam16 => {
            let i = QAM16_LEVELS[(((bits[0] & 1) << 1) | (bits[1] & 1)) as usize];
            let q = QAM16_LEVELS[(((bits[2] & 1) << 1) | (bits[3] & 1)) as usize];
            C64::new(i, q) / 10f64.sqrt()
        }
    }
}

/// Gray-map a bit sequence (`0`/`1` per entry).
pub fn map_symbols(bits: &[u8], modulation: Modulation) -> Result<Vec<C64>, TxError> {
    let bps = modulation.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(TxError::BitCount { len: bits.len(), bits_per_symbol: bps });
    }
    Ok(bits.chunks_exact(bps).map(|c| map_one(c, modulation)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bpsk_convention() {
        let s = map_symbols(&[0, 1], Modulation::Bpsk).unwrap();
        assert_eq!(s, vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn qpsk_enumeration() {
        let r = 1.0 / 2f64.sqrt();
        let table = [
            ([0u8, 0], C64::new(-r, -r)),
            ([0, 1], C64::new(-r, r)),
            ([1, 0], C64::new(r, -r)),
            ([1, 1], C64::new(r, r)),
        ];
        for (bits, want) in table {
            let got = map_symbols(&bits, Modulation::Qpsk).unwrap()[0];
            assert!((got - want).norm() < 1e-15, "{bits:?}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let pts = constellation(m);
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts.iter().skip(i + 1).map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    if i != j && ((a - b).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{m:?}: {i} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn unit_mean_power() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
            let n = 10_000 * m.bits_per_symbol();
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let s = map_symbols(&bits, m).unwrap();
            let p = s.iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64;
            assert!((p - 1.0).abs() < 0.01, "{m:?} power {p}");
            let exact = constellation(m).iter().map(|v| v.norm_sqr()).sum::<f64>() / (1 << m.bits_per_symbol()) as f64;
            assert!((exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ragged_bits_rejected() {
        assert!(map_symbols(&[1, 0, 1], Modulation::Qpsk).is_err());
    }
}
