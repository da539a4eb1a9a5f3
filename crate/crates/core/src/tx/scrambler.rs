use super::TxError;

/// PRBS of the `x^7 + x^4 + 1` scrambler.
///
/// The seed's bit 6 is the oldest register cell (x^7) and bit 0 the newest.
pub fn prbs(seed: u8, n: usize) -> Result<Vec<u8>, TxError> {
    if seed == 0 || seed > 0x7f {
        return Err(TxError::BadSeed(seed));
    }
    let mut state = seed;
    Ok((0..n)
        .map(|_| {
            let b = ((state >> 6) ^ (state >> 3)) & 1;
            state = ((state << 1) | b) & 0x7f;
            b
        })
        .collect())
}

/// XOR with the PRBS; applying it twice with the same seed is the identity.
pub fn scramble(bits: &[u8], seed: u8) -> Result<Vec<u8>, TxError> {
    let seq = prbs(seed, bits.len())?;
    Ok(bits.iter().zip(seq).map(|(b, s)| (b & 1) ^ s).collect())
}
