//! Fixed-length bitmask over Gaussian indices.
//!
//! Bytes are laid out LSB-first: bit `k` lives in byte `k / 8` at position
//! `k % 8`, matching the on-disk mask rows.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmask {
    len: usize,
    bytes: Vec<u8>,
}

impl Bitmask {
    pub fn zeros(len: usize) -> Self {
        Bitmask { len, bytes: vec![0; len.div_ceil(8)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut m = Bitmask { len, bytes: vec![0xff; len.div_ceil(8)] };
        m.clear_padding();
        m
    }

    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut m = Bitmask { len, bytes };
        m.clear_padding();
        Some(m)
    }

    fn clear_padding(&mut self) {
        let used = self.len % 8;
        if used != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= (1u8 << used) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        debug_assert!(idx < self.len);
        self.bytes[idx / 8] & (1 << (idx % 8)) != 0
    }

    #[inline]
    pub fn set(&mut self, idx: usize, value: bool) {
        debug_assert!(idx < self.len);
        if value {
            self.bytes[idx / 8] |= 1 << (idx % 8);
        } else {
            self.bytes[idx / 8] &= !(1 << (idx % 8));
        }
    }

    pub fn popcount(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Bitwise OR with another mask of identical length.
    pub fn union(&self, other: &Bitmask) -> Bitmask {
        assert_eq!(self.len, other.len, "bitmask lengths differ");
        let bytes = self
            .bytes
            .iter()
            .zip(other.bytes.iter())
            .map(|(a, b)| a | b)
            .collect();
        Bitmask { len: self.len, bytes }
    }

    /// True when every set bit of `other` is also set here.
    pub fn contains(&self, other: &Bitmask) -> bool {
        assert_eq!(self.len, other.len, "bitmask lengths differ");
        self.bytes.iter().zip(other.bytes.iter()).all(|(a, b)| a & b == *b)
    }

    pub fn intersection_count(&self, other: &Bitmask) -> usize {
        assert_eq!(self.len, other.len, "bitmask lengths differ");
        self.bytes
            .iter()
            .zip(other.bytes.iter())
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_count(&self, other: &Bitmask) -> usize {
        assert_eq!(self.len, other.len, "bitmask lengths differ");
        self.bytes
            .iter()
            .zip(other.bytes.iter())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsb_first_layout() {
        let mut m = Bitmask::zeros(9);
        m.set(0, true);
        m.set(8, true);
        assert_eq!(m.bytes(), &[0b0000_0001, 0b0000_0001]);
        assert_eq!(m.popcount(), 2);
        assert!(m.get(0) && m.get(8) && !m.get(4));
    }

    #[test]
    fn ones_clears_padding_bits() {
        let m = Bitmask::ones(9);
        assert_eq!(m.bytes(), &[0xff, 0x01]);
        assert_eq!(m.popcount(), 9);
    }

    #[test]
    fn union_and_containment() {
        let mut a = Bitmask::zeros(12);
        let mut b = Bitmask::zeros(12);
        a.set(1, true);
        b.set(10, true);
        let u = a.union(&b);
        assert!(u.contains(&a) && u.contains(&b));
        assert_eq!(u.popcount(), 2);
        assert_eq!(u.intersection_count(&a), 1);
        assert_eq!(u.union_count(&a), 2);
        assert_eq!(u.iter_set().collect::<Vec<_>>(), vec![1, 10]);
    }

    #[test]
    fn from_bytes_validates_length() {
        assert!(Bitmask::from_bytes(9, vec![0, 0]).is_some());
        assert!(Bitmask::from_bytes(9, vec![0]).is_none());
    }
}
