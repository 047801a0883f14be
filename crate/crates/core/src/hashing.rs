//! Two-universal hashing over bit strings.
//!
//! The family is the set of binary Toeplitz matrices: a seed of `m + r - 1`
//! bits defines the `r × m` matrix `T[i][j] = seed[i - j + m - 1]`, and the
//! hash of `x ∈ {0,1}^m` is `T x` over GF(2). For `x ≠ x'` the collision
//! probability over a uniform seed is exactly `2^{-r}`.
//!
//! Bit strings are written as hex with the first bit as the most significant
//! bit of the first digit, zero-padded at the end.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Fixed-length bit string packed into 64-bit words; bit `i` lives in word
/// `i / 64` at position `i % 64`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len());
        for (i, b) in bits.iter().enumerate() {
            s.set(i, *b);
        }
        s
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = BitString { words: (0..len.div_ceil(64)).map(|_| rng.gen()).collect(), len };
        s.clear_tail();
        s
    }

    /// Low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut s = BitString::zeros(len);
        for i in 0..len {
            s.set(i, value >> (len - 1 - i) & 1 == 1);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.get(i);
        self.set(i, !b);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn extend(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch { expected: self.len, found: other.len });
        }
        Ok(BitString { words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(), len: self.len })
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        Ok(self.xor(other)?.count_ones())
    }

    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for (i, b) in self.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        let mut s = hex::encode(bytes);
        s.truncate(self.len.div_ceil(4));
        s
    }

    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        if text.len() != len.div_ceil(4) {
            return Err(Error::Parse(format!("{} hex digits cannot hold exactly {len} bits", text.len())));
        }
        let mut padded = text.to_string();
        if padded.len() % 2 == 1 {
            padded.push('0');
        }
        let bytes = hex::decode(&padded).map_err(|e| Error::Parse(format!("bad hex: {e}")))?;
        let mut s = BitString::zeros(len);
        for i in 0..bytes.len() * 8 {
            let bit = bytes[i / 8] & (0x80 >> (i % 8)) != 0;
            if i < len {
                s.set(i, bit);
            } else if bit {
                return Err(Error::Parse("nonzero padding bits".into()));
            }
        }
        Ok(s)
    }

    fn clear_tail(&mut self) {
        if !self.len.is_multiple_of(64) {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }

    /// 64 bits starting at `start`, zero beyond the end.
    fn window(&self, start: usize) -> u64 {
        let (w, s) = (start / 64, start % 64);
        let lo = self.words.get(w).copied().unwrap_or(0) >> s;
        let hi = if s == 0 { 0 } else { self.words.get(w + 1).copied().unwrap_or(0) << (64 - s) };
        lo | hi
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:{})", self.len, self.to_hex())
    }
}

#[derive(Serialize, Deserialize)]
struct BitStringRepr {
    len: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BitStringRepr { len: self.len, hex: self.to_hex() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BitStringRepr::deserialize(d)?;
        BitString::from_hex(&repr.hex, repr.len).map_err(serde::de::Error::custom)
    }
}

/// A member of the Toeplitz family mapping `input_len` bits to `output_len` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearHash {
    input_len: usize,
    output_len: usize,
    seed: BitString,
}

impl LinearHash {
    pub fn seed_len(input_len: usize, output_len: usize) -> usize {
        (input_len + output_len).saturating_sub(1)
    }

    /// Uniform draw from the family. A zero output length is allowed and
    /// yields the empty hash.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, input_len: usize, output_len: usize) -> Result<Self> {
        Self::check_lengths(input_len, output_len)?;
        let seed = BitString::random(Self::seed_len(input_len, output_len), rng);
        Ok(LinearHash { input_len, output_len, seed })
    }

    pub fn from_seed(input_len: usize, output_len: usize, seed: BitString) -> Result<Self> {
        Self::check_lengths(input_len, output_len)?;
        let want = Self::seed_len(input_len, output_len);
        if seed.len() != want {
            return Err(Error::DimensionMismatch { expected: want, found: seed.len() });
        }
        Ok(LinearHash { input_len, output_len, seed })
    }

    fn check_lengths(input_len: usize, output_len: usize) -> Result<()> {
        if output_len > input_len {
            return Err(Error::InvalidParameter(format!(
                "hash output {output_len} bits exceeds input {input_len} bits"
            )));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn seed(&self) -> &BitString {
        &self.seed
    }

    /// `T x` over GF(2).
    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.input_len {
            return Err(Error::DimensionMismatch { expected: self.input_len, found: x.len() });
        }
        let m = self.input_len;
        // out_i = ⊕_j seed[i + m - 1 - j] x_j = ⊕_k seed[i + k] rev_k, rev_k = x_{m-1-k}
        let mut rev = BitString::zeros(m);
        for j in 0..m {
            if x.get(j) {
                rev.set(m - 1 - j, true);
            }
        }
        let mut out = BitString::zeros(self.output_len);
        for i in 0..self.output_len {
            let mut acc = 0u64;
            for (w, word) in rev.words.iter().enumerate() {
                if *word != 0 {
                    acc ^= self.seed.window(i + 64 * w) & word;
                }
            }
            if acc.count_ones() % 2 == 1 {
                out.set(i, true);
            }
        }
        Ok(out)
    }
}

/// Fixed-width big-endian encoding of symbols from `{0, …, alphabet_size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolCodec {
    alphabet_size: usize,
    width: usize,
}

impl SymbolCodec {
    pub fn new(alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        let width = (usize::BITS - (alphabet_size - 1).leading_zeros()) as usize;
        Ok(SymbolCodec { alphabet_size, width })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// `⌈log2 |X|⌉` bits per symbol.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn encode(&self, symbols: &[usize]) -> Result<BitString> {
        let mut out = BitString::zeros(symbols.len() * self.width);
        for (i, s) in symbols.iter().enumerate() {
            if *s >= self.alphabet_size {
                return Err(Error::SymbolOutOfRange { symbol: *s, alphabet: self.alphabet_size });
            }
            for b in 0..self.width {
                if s >> (self.width - 1 - b) & 1 == 1 {
                    out.set(i * self.width + b, true);
                }
            }
        }
        Ok(out)
    }

    pub fn decode(&self, bits: &BitString) -> Result<Vec<usize>> {
        if self.width == 0 {
            return Err(Error::InvalidParameter("a one-symbol alphabet carries no bits to decode".into()));
        }
        if !bits.len().is_multiple_of(self.width) {
            return Err(Error::DimensionMismatch { expected: bits.len() / self.width * self.width, found: bits.len() });
        }
        (0..bits.len() / self.width)
            .map(|i| {
                let v = (0..self.width).fold(0usize, |acc, b| acc << 1 | bits.get(i * self.width + b) as usize);
                if v >= self.alphabet_size {
                    Err(Error::SymbolOutOfRange { symbol: v, alphabet: self.alphabet_size })
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Explicit matrix-vector product, written from the matrix definition.
    fn naive_eval(h: &LinearHash, x: &BitString) -> BitString {
        let (m, r) = (h.input_len(), h.output_len());
        let bits: Vec<bool> = (0..r)
            .map(|i| (0..m).fold(false, |acc, j| acc ^ (h.seed().get(i + m - 1 - j) & x.get(j))))
            .collect();
        BitString::from_bools(&bits)
    }

    #[test]
    fn draw_is_reproducible() {
        let a = LinearHash::draw(&mut ChaCha20Rng::seed_from_u64(7), 100, 30).unwrap();
        let b = LinearHash::draw(&mut ChaCha20Rng::seed_from_u64(7), 100, 30).unwrap();
        assert_eq!(a, b);
        assert!(LinearHash::draw(&mut ChaCha20Rng::seed_from_u64(7), 3, 4).is_err());
    }

    #[test]
    fn small_family_is_enumerable() {
        let seeds: std::collections::BTreeSet<String> = (0..8u64)
            .map(|s| LinearHash::from_seed(3, 1, BitString::from_u64(s, 3)).unwrap().seed().to_hex())
            .collect();
        assert_eq!(seeds.len(), 8);
        assert_eq!(LinearHash::seed_len(3, 1), 3);
    }

    #[test]
    fn seed_bits_are_unbiased() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let trials = 100_000;
        let (m, r) = (8, 4);
        let mut ones = vec![0usize; LinearHash::seed_len(m, r)];
        for _ in 0..trials {
            let h = LinearHash::draw(&mut rng, m, r).unwrap();
            for (i, b) in h.seed().iter().enumerate() {
                ones[i] += b as usize;
            }
        }
        let sigma = (0.25 / trials as f64).sqrt();
        for c in ones {
            assert!((c as f64 / trials as f64 - 0.5).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn eval_matches_matrix_definition() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for (m, r) in [(1, 1), (5, 3), (64, 64), (65, 1), (130, 70), (300, 129)] {
            let h = LinearHash::draw(&mut rng, m, r).unwrap();
            for _ in 0..5 {
                let x = BitString::random(m, &mut rng);
                assert_eq!(h.eval(&x).unwrap(), naive_eval(&h, &x), "m={m} r={r}");
            }
        }
    }

    #[test]
    fn eval_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let h = LinearHash::draw(&mut rng, 40, 12).unwrap();
        assert_eq!(h.eval(&BitString::zeros(40)).unwrap(), BitString::zeros(12));
        assert!(h.eval(&BitString::zeros(39)).is_err());
        let empty = LinearHash::draw(&mut rng, 10, 0).unwrap();
        assert!(empty.eval(&BitString::zeros(10)).unwrap().is_empty());
    }

    #[test]
    fn exhaustive_collision_bound_for_m4_r2() {
        let (m, r) = (4usize, 2usize);
        let seeds = 1u64 << LinearHash::seed_len(m, r);
        let table: Vec<Vec<BitString>> = (0..seeds)
            .map(|s| {
                let h = LinearHash::from_seed(m, r, BitString::from_u64(s, LinearHash::seed_len(m, r))).unwrap();
                (0..1u64 << m).map(|x| h.eval(&BitString::from_u64(x, m)).unwrap()).collect()
            })
            .collect();
        for x in 0..1usize << m {
            for y in x + 1..1usize << m {
                let collisions = table.iter().filter(|t| t[x] == t[y]).count();
                assert!(collisions as f64 / seeds as f64 <= 0.25, "{x} {y}");
            }
        }
    }

    #[test]
    fn codec_examples() {
        let bin = SymbolCodec::new(2).unwrap();
        assert_eq!(bin.encode(&[1, 0, 1]).unwrap(), BitString::from_bools(&[true, false, true]));
        let tern = SymbolCodec::new(3).unwrap();
        assert_eq!(tern.width(), 2);
        assert_eq!(tern.encode(&[2, 0, 1]).unwrap(), BitString::from_u64(0b10_00_01, 6));
        assert!(tern.encode(&[3]).is_err());
        assert_eq!(SymbolCodec::new(1).unwrap().width(), 0);
        assert_eq!(SymbolCodec::new(4).unwrap().width(), 2);
        assert_eq!(SymbolCodec::new(5).unwrap().width(), 3);
    }

    #[test]
    fn hex_is_msb_first() {
        let s = BitString::from_bools(&[true, false, false, false, true]);
        assert_eq!(s.to_hex(), "88");
        assert_eq!(BitString::from_hex("88", 5).unwrap(), s);
        assert!(BitString::from_hex("89", 5).is_err());
        assert!(BitString::from_hex("8", 5).is_err());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"len":5,"hex":"88"}"#);
        assert_eq!(serde_json::from_str::<BitString>(&json).unwrap(), s);
    }

    proptest! {
        #[test]
        fn eval_is_linear(seed in any::<u64>(), m in 1usize..200, frac in 0.0f64..=1.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let r = ((m as f64 * frac) as usize).max(1).min(m);
            let h = LinearHash::draw(&mut rng, m, r).unwrap();
            let x = BitString::random(m, &mut rng);
            let y = BitString::random(m, &mut rng);
            let lhs = h.eval(&x.xor(&y).unwrap()).unwrap();
            let rhs = h.eval(&x).unwrap().xor(&h.eval(&y).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn codec_round_trips(k in 2usize..20, symbols in prop::collection::vec(0usize..1000, 0..50)) {
            let codec = SymbolCodec::new(k).unwrap();
            let symbols: Vec<usize> = symbols.into_iter().map(|s| s % k).collect();
            let bits = codec.encode(&symbols).unwrap();
            prop_assert_eq!(bits.len(), symbols.len() * codec.width());
            prop_assert_eq!(codec.decode(&bits).unwrap(), symbols);
        }

        #[test]
        fn hex_round_trips(seed in any::<u64>(), len in 0usize..300) {
            let s = BitString::random(len, &mut ChaCha20Rng::seed_from_u64(seed));
            prop_assert_eq!(BitString::from_hex(&s.to_hex(), len).unwrap(), s);
        }
    }
}
