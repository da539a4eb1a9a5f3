use super::TxError;

/// IEEE 802.3 CRC-32 (reflected, init and final XOR `0xFFFF_FFFF`).
pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

/// `payload || crc32(payload)`, CRC little-endian.
pub fn crc32_append(payload: &[u8]) -> Result<Vec<u8>, TxError> {
    if payload.is_empty() {
        return Err(TxError::EmptyPayload);
    }
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32(payload).to_le_bytes());
    Ok(out)
}

/// True when the trailing four bytes are the CRC of everything before them.
pub fn crc_check(bytes: &[u8]) -> bool {
    if bytes.len() < 5 {
        return false;
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    crc32(body).to_le_bytes() == tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bit-serial reference, independent of the table-driven implementation.
    fn crc32_bitwise(data: &[u8]) -> u32 {
        let mut crc = 0xFFFF_FFFFu32;
        for &byte in data {
            crc ^= byte as u32;
            for _ in 0..8 {
                let lsb = crc & 1;
                crc >>= 1;
                if lsb == 1 {
                    crc ^= 0xEDB8_8320;
                }
            }
        }
        !crc
    }

    #[test]
    fn check_value() {
        assert_eq!(crc32_bitwise(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        let framed = crc32_append(b"123456789").unwrap();
        assert_eq!(&framed[9..], &0xCBF4_3926u32.to_le_bytes());
    }

    #[test]
    fn residue_over_framed_message() {
        let framed = crc32_append(b"joint radar").unwrap();
        // CRC over payload || CRC(LE) is the fixed residue of the reflected CRC-32.
        assert_eq!(crc32_bitwise(&framed), 0x2144_DF1C);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(crc32_append(&[]), Err(TxError::EmptyPayload)));
    }

    proptest! {
        #[test]
        fn append_then_check(p in proptest::collection::vec(any::<u8>(), 1..300)) {
            prop_assert!(crc_check(&crc32_append(&p).unwrap()));
            prop_assert_eq!(crc32(&p), crc32_bitwise(&p));
        }

        #[test]
        fn single_bit_flip_detected(p in proptest::collection::vec(any::<u8>(), 1..100), pos in any::<usize>()) {
            let mut framed = crc32_append(&p).unwrap();
            let bit = pos % (framed.len() * 8);
            framed[bit / 8] ^= 1 << (bit % 8);
            prop_assert!(!crc_check(&framed));
        }
    }
}
