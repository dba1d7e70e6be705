//! Fixed-length bit vector backed by `u64` words.
//!
//! One value models the contents of a page (one bit per bitline) or a latch
//! bank. All bulk operations work word-at-a-time; bits past `len` in the last
//! word are kept zero so equality, popcount, and serialization stay honest.

use rand::Rng;

/// Fixed-length bit vector. Bit `i` of the vector is bit `i % 64` of word `i / 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bits { words: vec![u64::MAX; len.div_ceil(64)], len };
        b.mask_tail();
        b
    }

    /// Random vector where each bit is 1 with probability `density`.
    pub fn random<R: Rng>(rng: &mut R, len: usize, density: f64) -> Self {
        let mut b = Bits::zeros(len);
        for i in 0..len {
            if rng.gen::<f64>() < density {
                b.set(i, true);
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn fill(&mut self, v: bool) {
        let w = if v { u64::MAX } else { 0 };
        self.words.iter_mut().for_each(|x| *x = w);
        self.mask_tail();
    }

    pub fn and_assign(&mut self, other: &Bits) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &Bits) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn not_assign(&mut self) {
        self.words.iter_mut().for_each(|x| *x = !*x);
        self.mask_tail();
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &Bits) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Little-endian byte image, `len.div_ceil(8)` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len.div_ceil(8));
        for i in 0..self.len.div_ceil(8) {
            let w = self.words[i / 8];
            out.push((w >> (8 * (i % 8))) as u8);
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). Bits past `len` in the final
    /// byte must be zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut b = Bits::zeros(len);
        for (i, &byte) in bytes.iter().enumerate() {
            b.words[i / 8] |= (byte as u64) << (8 * (i % 8));
        }
        let canonical = b.clone_masked();
        if canonical.words != b.words {
            return None; // stray bits past `len`
        }
        Some(b)
    }

    fn clone_masked(&self) -> Bits {
        let mut c = self.clone();
        c.mask_tail();
        c
    }

    fn mask_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    fn check_len(&self, other: &Bits) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
    }
}

impl std::fmt::Debug for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bits[{};", self.len)?;
        for i in 0..self.len.min(64) {
            write!(f, "{}", self.get(i) as u8)?;
        }
        if self.len > 64 {
            write!(f, "..")?;
        }
        write!(f, "]")
    }
}
