use crate::config::CodeRate;

use super::TxError;

pub const CONSTRAINT_LENGTH: usize = 7;
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
/// Generator polynomials, octal 133 and 171; bit 6 taps the current input.
pub const G0: u8 = 0o133;
pub const G1: u8 = 0o171;
/// Keep-mask over one period of the mother code output `A0 B0 A1 B1 A2 B2`.
pub const PUNCTURE_3_4: [bool; 6] = [true, true, true, false, false, true];

#[inline]
pub(crate) fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Output pair `(A, B)` for register state `state` (previous six inputs,
/// newest in bit 5) and input `bit`.
#[inline]
pub(crate) fn branch_output(state: u8, bit: u8) -> (u8, u8) {
    let reg = (bit << 6) | state;
    (parity(reg & G0), parity(reg & G1))
}

/// Rate-1/2, K = 7 feedforward encoder starting from the zero state.
///
/// Terminate the input with [`TAIL_BITS`] zeros to return the trellis to zero.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut state = 0u8;
    let mut out = Vec::with_capacity(2 * bits.len());
    for &b in bits {
        let b = b & 1;
        let (a, c) = branch_output(state, b);
        out.push(a);
        out.push(c);
        state = ((b << 6) | state) >> 1;
    }
    out
}

/// Delete mother-code bits for the requested rate.
pub fn puncture<T: Copy>(bits: &[T], rate: CodeRate) -> Result<Vec<T>, TxError> {
    match rate {
        CodeRate::Half => Ok(bits.to_vec()),
        CodeRate::ThreeQuarters => {
            if !bits.len().is_multiple_of(PUNCTURE_3_4.len()) {
                return Err(TxError::PunctureLength { len: bits.len(), period: PUNCTURE_3_4.len() });
            }
            Ok(bits.iter().zip(PUNCTURE_3_4.iter().cycle()).filter_map(|(b, keep)| keep.then_some(*b)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Shift-register reference with explicit delay taps.
    fn reference_encode(bits: &[u8]) -> Vec<u8> {
        let taps_a = [0usize, 2, 3, 5, 6];
        let taps_b = [0usize, 1, 2, 3, 6];
        let mut reg = [0u8; 7];
        let mut out = Vec::new();
        for &b in bits {
            reg.rotate_right(1);
            reg[0] = b;
            out.push(taps_a.iter().fold(0, |p, &t| p ^ reg[t]));
            out.push(taps_b.iter().fold(0, |p, &t| p ^ reg[t]));
        }
        out
    }

    #[test]
    fn zero_input_zero_output() {
        assert_eq!(conv_encode(&[0; 6]), vec![0; 12]);
    }

    #[test]
    fn impulse_response() {
        let input = [1, 0, 0, 0, 0, 0, 0];
        let want = reference_encode(&input);
        assert_eq!(want, vec![1, 1, 0, 1, 1, 1, 1, 1, 0, 0, 1, 0, 1, 1]);
        assert_eq!(conv_encode(&input), want);
    }

    #[test]
    fn matches_reference_on_random_input() {
        let bits: Vec<u8> = (0..500u32).map(|i| (i.wrapping_mul(2654435761u32) >> 13 & 1) as u8).collect();
        assert_eq!(conv_encode(&bits), reference_encode(&bits));
    }

    #[test]
    fn puncture_pattern() {
        let b = [1u8, 2, 3, 4, 5, 6];
        assert_eq!(puncture(&b, CodeRate::ThreeQuarters).unwrap(), vec![1, 2, 3, 6]);
        assert_eq!(puncture(&b, CodeRate::Half).unwrap(), b.to_vec());
        assert!(matches!(
            puncture(&b[..5], CodeRate::ThreeQuarters),
            Err(TxError::PunctureLength { len: 5, period: 6 })
        ));
    }
}
