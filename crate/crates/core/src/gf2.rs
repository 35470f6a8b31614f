//! Bit-packed vectors and linear systems over GF(2).
//!
//! Bit order is little-endian everywhere in the crate: bit `j` of the integer
//! label `i` is `(i >> j) & 1`, and bit `j` of a [`BitVec`] lives in word
//! `j / 64` at position `j % 64`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2). Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    /// Low `len` bits of `value`. `len` may exceed 64; high bits are zero.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.clear_tail();
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            v.set(j, b);
        }
        v
    }

    /// Parses a binary string written most-significant bit first, so the
    /// rightmost character is bit 0 (`"01"` is the label 1).
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = BitVec { len, words: (0..words_for(len)).map(|_| rng.random()).collect() };
        v.clear_tail();
        v
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        (self.words[j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, bit: bool) {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        let mask = 1u64 << (j % WORD);
        if bit {
            self.words[j / WORD] |= mask;
        } else {
            self.words[j / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, j: usize) {
        let b = self.get(j);
        self.set(j, !b);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + w.trailing_zeros() as usize)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let t = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(k * WORD + t)
            })
        })
    }

    /// The vector as an integer label. Only valid for `len <= 64`.
    pub fn as_u64(&self) -> u64 {
        assert!(self.len <= WORD, "as_u64 on a {}-bit vector", self.len);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn as_index(&self) -> usize {
        self.as_u64() as usize
    }

    fn check_len(&self, other: &BitVec) -> Result<()> {
        if self.len != other.len {
            return Err(Error::dim(format!("bit vectors of length {} and {}", self.len, other.len)));
        }
        Ok(())
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        self.check_len(other)?;
        let mut out = self.clone();
        out.xor_assign(other);
        Ok(out)
    }

    /// In-place xor; panics on length mismatch.
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and(&self, other: &BitVec) -> Result<BitVec> {
        self.check_len(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Ok(BitVec { len: self.len, words })
    }

    /// Concatenation `self || other`; bits of `other` follow at index `self.len()`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for j in self.iter_ones() {
            out.set(j, true);
        }
        for j in other.iter_ones() {
            out.set(self.len + j, true);
        }
        out
    }

    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        assert!(start + len <= self.len);
        let mut out = BitVec::zeros(len);
        for j in 0..len {
            if self.get(start + j) {
                out.set(j, true);
            }
        }
        out
    }

    /// Little-endian byte packing, hex encoded. Byte `k` carries bits `8k..8k+8`.
    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        self.words.iter().flat_map(|w| w.to_le_bytes()).take(nbytes).collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Parse(format!("{} bytes cannot hold exactly {len} bits", bytes.len())));
        }
        let mut v = Self::zeros(len);
        for (k, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            v.words[k] = u64::from_le_bytes(buf);
        }
        let expected_tail = v.words.clone();
        v.clear_tail();
        if v.words != expected_tail {
            return Err(Error::Parse(format!("nonzero padding bits beyond length {len}")));
        }
        Ok(v)
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Parse(format!("bad hex: {e}")))?;
        Self::from_bytes(&bytes, len)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Most-significant bit first, matching [`BitVec::from_bit_str`].
impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in (0..self.len).rev() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Inner product `sum_j a_j b_j mod 2`.
pub fn dot(a: &BitVec, b: &BitVec) -> Result<bool> {
    a.check_len(b)?;
    let ones: u32 = a.words.iter().zip(&b.words).map(|(x, y)| (x & y).count_ones()).sum();
    Ok(ones & 1 == 1)
}

/// Parity of `a & b` for integer labels.
#[inline]
pub fn dot_u64(a: u64, b: u64) -> bool {
    (a & b).count_ones() & 1 == 1
}

/// Linear system over GF(2): each row reads `coeff . x = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2System {
    n: usize,
    rows: Vec<(BitVec, bool)>,
}

impl Gf2System {
    pub fn new(n: usize) -> Self {
        Gf2System { n, rows: Vec::new() }
    }

    pub fn from_rows(n: usize, rows: Vec<(BitVec, bool)>) -> Result<Self> {
        let mut sys = Self::new(n);
        for (coeff, rhs) in rows {
            sys.push(coeff, rhs)?;
        }
        Ok(sys)
    }

    pub fn push(&mut self, coeff: BitVec, rhs: bool) -> Result<()> {
        if coeff.len() != self.n {
            return Err(Error::dim(format!("row of length {} in a system with n = {}", coeff.len(), self.n)));
        }
        self.rows.push((coeff, rhs));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[(BitVec, bool)] {
        &self.rows
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Unique(BitVec),
    Underdetermined { rank: usize },
    Inconsistent,
}

/// Gaussian elimination with first-nonzero pivoting.
///
/// The right-hand side is carried as an extra column `n` of an augmented row,
/// so the elimination is a single pass over packed words.
pub fn solve_system(sys: &Gf2System) -> Result<Solution> {
    if sys.rows.is_empty() {
        return Err(Error::dim("system has no rows"));
    }
    let n = sys.n;
    let mut rows: Vec<BitVec> = sys
        .rows
        .iter()
        .map(|(c, rhs)| {
            let mut aug = c.concat(&BitVec::zeros(1));
            aug.set(n, *rhs);
            aug
        })
        .collect();

    let mut pivot_cols = Vec::with_capacity(n);
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_assign(&pivot);
            }
        }
        pivot_cols.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let rank = r;

    // A row reduced to 0 = 1 is a contradiction.
    if rows[rank..].iter().any(|row| row.get(n)) {
        return Ok(Solution::Inconsistent);
    }
    if rank < n {
        return Ok(Solution::Underdetermined { rank });
    }
    let mut x = BitVec::zeros(n);
    for (row, &col) in rows.iter().zip(&pivot_cols) {
        x.set(col, row.get(n));
    }
    Ok(Solution::Unique(x))
}

/// Row rank over GF(2). An empty list has rank 0.
pub fn rank(rows: &[BitVec]) -> Result<usize> {
    let Some(first) = rows.first() else {
        return Ok(0);
    };
    let len = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != len) {
        return Err(Error::dim(format!("rows of length {len} and {}", bad.len())));
    }
    // Basis kept in echelon form keyed by leading bit.
    let mut basis: Vec<Option<BitVec>> = vec![None; len];
    let mut rank = 0;
    for row in rows {
        let mut v = row.clone();
        while let Some(lead) = v.first_one() {
            match &basis[lead] {
                Some(b) => v.xor_assign(b),
                None => {
                    basis[lead] = Some(v);
                    rank += 1;
                    break;
                }
            }
        }
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bv(s: &str) -> BitVec {
        BitVec::from_bit_str(s).unwrap()
    }

    #[test]
    fn dot_examples() {
        assert!(!dot(&bv("0000"), &bv("1011")).unwrap());
        assert!(dot(&bv("1100"), &bv("1010")).unwrap());
        assert!(dot(&bv("1110"), &bv("1110")).unwrap());
        assert!(matches!(dot(&bv("10"), &bv("101")), Err(Error::Dimension(_))));
    }

    #[test]
    fn solve_examples() {
        let sys = Gf2System::from_rows(2, vec![(bv("01"), false), (bv("10"), true)]).unwrap();
        assert_eq!(solve_system(&sys).unwrap(), Solution::Unique(bv("10")));

        let sys = Gf2System::from_rows(2, vec![(bv("10"), true)]).unwrap();
        assert_eq!(solve_system(&sys).unwrap(), Solution::Underdetermined { rank: 1 });

        let sys = Gf2System::from_rows(2, vec![(bv("10"), false), (bv("10"), true)]).unwrap();
        assert_eq!(solve_system(&sys).unwrap(), Solution::Inconsistent);
    }

    #[test]
    fn solve_rejects_empty_and_ragged() {
        assert!(solve_system(&Gf2System::new(3)).is_err());
        assert!(Gf2System::from_rows(3, vec![(bv("10"), true)]).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[bv("1000"), bv("0100")]).unwrap(), 2);
        assert_eq!(rank(&[bv("1100"), bv("0110"), bv("1010")]).unwrap(), 2);
        assert_eq!(rank(&[]).unwrap(), 0);
        assert!(rank(&[bv("10"), bv("100")]).is_err());
    }

    #[test]
    fn hex_layout() {
        let v = bv("1000000001");
        assert!(v.get(0) && v.get(9));
        assert_eq!(v.to_hex(), "0102");
        assert_eq!(BitVec::from_hex("0102", 10).unwrap(), v);
        // padding bit 10 set
        assert!(BitVec::from_hex("0106", 10).is_err());
        assert!(BitVec::from_hex("01", 10).is_err());
    }

    #[test]
    fn wide_vectors() {
        let mut v = BitVec::zeros(130);
        v.set(129, true);
        v.set(64, true);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![64, 129]);
        assert_eq!(v.first_one(), Some(64));
        assert_eq!(BitVec::from_hex(&v.to_hex(), 130).unwrap(), v);
    }

    /// Random full-rank square systems: solve, then substitute back.
    #[test]
    fn full_rank_systems_resubstitute() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6f2);
        let mut solved = 0;
        while solved < 10_000 {
            let n = 1 + solved % 16;
            let rows: Vec<BitVec> = (0..n).map(|_| BitVec::random(n, &mut rng)).collect();
            if rank(&rows).unwrap() < n {
                continue;
            }
            let x_true = BitVec::random(n, &mut rng);
            let sys = Gf2System::from_rows(
                n,
                rows.iter().map(|r| (r.clone(), dot(r, &x_true).unwrap())).collect(),
            )
            .unwrap();
            let Solution::Unique(x) = solve_system(&sys).unwrap() else {
                panic!("full-rank system not uniquely solved");
            };
            for (coeff, rhs) in sys.rows() {
                assert_eq!(dot(coeff, &x).unwrap(), *rhs);
            }
            solved += 1;
        }
    }

    fn vec_strategy(len: usize) -> impl Strategy<Value = BitVec> {
        prop::collection::vec(any::<bool>(), len).prop_map(|b| BitVec::from_bools(&b))
    }

    proptest! {
        #[test]
        fn dot_is_bilinear(len in 1usize..150, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = BitVec::random(len, &mut rng);
            let b = BitVec::random(len, &mut rng);
            let c = BitVec::random(len, &mut rng);
            let lhs = dot(&a.xor(&b).unwrap(), &c).unwrap();
            prop_assert_eq!(lhs, dot(&a, &c).unwrap() ^ dot(&b, &c).unwrap());
            prop_assert_eq!(dot(&a, &a).unwrap(), a.count_ones() % 2 == 1);
        }

        #[test]
        fn rank_invariant_under_row_ops(rows in prop::collection::vec(vec_strategy(12), 1..10),
                                        i in any::<prop::sample::Index>(),
                                        j in any::<prop::sample::Index>()) {
            let base = rank(&rows).unwrap();
            let mut rev = rows.clone();
            rev.reverse();
            prop_assert_eq!(rank(&rev).unwrap(), base);

            let (i, j) = (i.index(rows.len()), j.index(rows.len()));
            if i != j {
                let mut mixed = rows.clone();
                let rj = mixed[j].clone();
                mixed[i].xor_assign(&rj);
                prop_assert_eq!(rank(&mixed).unwrap(), base);
            }
            let mut dup = rows.clone();
            dup.extend(rows.iter().cloned());
            prop_assert_eq!(rank(&dup).unwrap(), base);
        }

        #[test]
        fn hex_round_trip(v in (0usize..300).prop_flat_map(vec_strategy)) {
            prop_assert_eq!(BitVec::from_hex(&v.to_hex(), v.len()).unwrap(), v);
        }
    }
}
