//! Bit combinatorics of indices and the geometry of the dyadic group.
//!
//! A point of `G` truncated at resolution `M` is the bit string
//! `x_0 .. x_{M-1}`; it is stored as the cell index `b = sum x_k 2^k`.

use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Largest resolution a point can carry.
pub const MAX_POINT_RESOLUTION: u32 = 63;

/// Variation `V(n) = n_0 + sum_{k>=1} |n_k - n_{k-1}|`, with `V(0) = 0`.
pub fn variation(n: u64) -> u32 {
    // bit k of n ^ (n << 1) is n_k xor n_{k-1}; bit 0 is n_0
    let wide = n as u128;
    (wide ^ (wide << 1)).count_ones()
}

/// `|n|`, the position of the top set bit. `None` for `n = 0`.
pub fn order(n: u64) -> Option<u32> {
    (n != 0).then(|| 63 - n.leading_zeros())
}

/// Maximal runs of 1-bits, lowest first, as inclusive `(l_i, m_i)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    blocks: Vec<(u32, u32)>,
}

impl BlockDecomposition {
    pub fn blocks(&self) -> &[(u32, u32)] {
        &self.blocks
    }

    /// Number of blocks `s`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `sum_i sum_{k=l_i}^{m_i} 2^k`.
    pub fn reconstruct(&self) -> u64 {
        self.blocks.iter().map(|&(l, m)| ((1u128 << (m + 1)) - (1u128 << l)) as u64).sum()
    }
}

pub fn block_decomposition(n: u64) -> Result<BlockDecomposition> {
    if n == 0 {
        return Err(Error::ZeroIndex(n));
    }
    let mut blocks = Vec::new();
    let mut rest = n;
    while rest != 0 {
        let l = rest.trailing_zeros();
        let run = (rest >> l).trailing_ones();
        let m = l + run - 1;
        blocks.push((l, m));
        rest = if m >= 63 { 0 } else { rest & !((1u64 << (m + 1)) - 1) };
    }
    Ok(BlockDecomposition { blocks })
}

/// `n^(i) = 2^{n_1} + ... + 2^{n_{i-1}}`, the sum of the `i - 1` lowest set bits.
pub fn prefix_part(n: u64, i: usize) -> Result<u64> {
    let s = n.count_ones() as usize;
    if i < 2 || i > s {
        return Err(Error::PrefixIndexOutOfRange { n, i, s });
    }
    let mut rest = n;
    let mut acc = 0;
    for _ in 0..i - 1 {
        let low = rest & rest.wrapping_neg();
        acc |= low;
        rest ^= low;
    }
    Ok(acc)
}

/// Membership in `A_{0,2}`: bits 0 and 2 set, bit 1 clear. The tail above
/// bit 2 may be empty, so 5 belongs.
pub fn in_a02(n: u64) -> bool {
    n & 0b111 == 0b101
}

/// A positive integer together with its binary structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitIndex(u64);

impl BitIndex {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroIndex(0));
        }
        Ok(BitIndex(n))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn bit(self, k: u32) -> u8 {
        if k >= 64 {
            0
        } else {
            ((self.0 >> k) & 1) as u8
        }
    }

    /// Bits `n_0 .. n_{|n|}`.
    pub fn bits(self) -> Vec<u8> {
        (0..=self.order()).map(|k| self.bit(k)).collect()
    }

    pub fn order(self) -> u32 {
        63 - self.0.leading_zeros()
    }

    pub fn variation(self) -> u32 {
        variation(self.0)
    }

    pub fn blocks(self) -> BlockDecomposition {
        block_decomposition(self.0).expect("BitIndex is positive")
    }

    /// Positions of the set bits, increasing.
    pub fn set_bits(self) -> Vec<u32> {
        (0..64).filter(|&k| self.bit(k) == 1).collect()
    }
}

/// A truncated element of `G`: coordinates `x_0 .. x_{M-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    resolution: u32,
    cell: u64,
}

impl DyadicPoint {
    pub fn new(resolution: u32, cell: u64) -> Result<Self> {
        if resolution > MAX_POINT_RESOLUTION {
            return Err(Error::ResolutionCap { requested: resolution, cap: MAX_POINT_RESOLUTION, mode: "point" });
        }
        if cell >> resolution != 0 {
            return Err(Error::IndexOutOfRange { index: cell, resolution });
        }
        Ok(DyadicPoint { resolution, cell })
    }

    pub fn zero(resolution: u32) -> Self {
        DyadicPoint::new(resolution, 0).expect("resolution within cap")
    }

    /// `e_k` at resolution `M`.
    pub fn unit(k: u32, resolution: u32) -> Result<Self> {
        if k >= resolution {
            return Err(Error::IndexOutOfRange { index: k as u64, resolution });
        }
        DyadicPoint::new(resolution, 1 << k)
    }

    pub fn from_coords(coords: &[u8]) -> Result<Self> {
        let mut cell = 0u64;
        for (k, &c) in coords.iter().enumerate() {
            match c {
                0 => {}
                1 if k < 64 => cell |= 1 << k,
                _ => return Err(Error::InvalidArgument(format!("coordinate {k} is {c}, not 0/1"))),
            }
        }
        DyadicPoint::new(coords.len() as u32, cell)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Cell index `sum x_k 2^k`.
    pub fn cell(&self) -> u64 {
        self.cell
    }

    pub fn coord(&self, k: u32) -> u8 {
        assert!(k < self.resolution, "coordinate {k} beyond resolution {}", self.resolution);
        ((self.cell >> k) & 1) as u8
    }

    pub fn coords(&self) -> Vec<u8> {
        (0..self.resolution).map(|k| self.coord(k)).collect()
    }

    /// Cell measure `2^-M`.
    pub fn measure(&self) -> Rational {
        Rational::pow2(-(self.resolution as i32))
    }

    /// Keep the first `resolution` coordinates.
    pub fn truncate(&self, resolution: u32) -> Self {
        let resolution = resolution.min(self.resolution);
        DyadicPoint { resolution, cell: self.cell & low_mask(resolution) }
    }

    /// Pad with zero coordinates up to `resolution`.
    pub fn extend(&self, resolution: u32) -> Result<Self> {
        DyadicPoint::new(resolution.max(self.resolution), self.cell)
    }
}

/// Coordinatewise mod-2 addition; the result has the larger resolution
/// (missing coordinates of the shorter point are read as 0).
impl Add for DyadicPoint {
    type Output = DyadicPoint;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: DyadicPoint) -> DyadicPoint {
        DyadicPoint { resolution: self.resolution.max(rhs.resolution), cell: self.cell ^ rhs.cell }
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ones: Vec<String> =
            (0..self.resolution).filter(|&k| self.coord(k) == 1).map(|k| format!("e_{k}")).collect();
        if ones.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", ones.join("+"))
        }
    }
}

pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// `I_N(x)`: points agreeing with the anchor on coordinates `0 .. N-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    depth: u32,
    anchor: DyadicPoint,
}

impl DyadicInterval {
    pub fn new(depth: u32, anchor: DyadicPoint) -> Result<Self> {
        if anchor.resolution < depth {
            return Err(Error::ResolutionTooSmall { needed: depth, actual: anchor.resolution });
        }
        Ok(DyadicInterval { depth, anchor: anchor.truncate(depth) })
    }

    /// `I_N = I_N(0)`.
    pub fn centered(depth: u32) -> Self {
        DyadicInterval { depth, anchor: DyadicPoint::zero(depth) }
    }

    /// The whole group, `I_0`.
    pub fn whole() -> Self {
        Self::centered(0)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn anchor(&self) -> DyadicPoint {
        self.anchor
    }

    pub fn measure(&self) -> Rational {
        Rational::pow2(-(self.depth as i32))
    }

    pub fn contains(&self, x: &DyadicPoint) -> bool {
        x.resolution >= self.depth && x.cell & low_mask(self.depth) == self.anchor.cell
    }

    /// Whether a cell index at any resolution `>= depth` lies in the interval.
    pub fn contains_cell(&self, cell: usize) -> bool {
        cell as u64 & low_mask(self.depth) == self.anchor.cell
    }

    /// Cell indices covered at `resolution` (must be `>= depth`).
    pub fn cells(&self, resolution: u32) -> impl Iterator<Item = usize> {
        assert!(resolution >= self.depth, "resolution {resolution} below interval depth {}", self.depth);
        let base = self.anchor.cell as usize;
        let step = 1usize << self.depth;
        (0..1usize << (resolution - self.depth)).map(move |j| base + j * step)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.anchor.cell == 0 {
            write!(f, "I_{}", self.depth)
        } else {
            write!(f, "I_{}({})", self.depth, self.anchor)
        }
    }
}

/// Disjoint cover of `G \ I_M`:
/// `I_{l+1}(e_k + e_l)` for `0 <= k < l <= M-1`, then `I_M(e_k)` for `k < M`.
pub fn complement_partition(m: u32) -> Result<Vec<DyadicInterval>> {
    if m == 0 {
        return Err(Error::EmptyComplement);
    }
    let mut out = Vec::with_capacity((m * (m - 1) / 2 + m) as usize);
    for k in 0..m.saturating_sub(1) {
        for l in k + 1..m {
            let anchor = DyadicPoint::new(l + 1, (1 << k) | (1 << l))?;
            out.push(DyadicInterval::new(l + 1, anchor)?);
        }
    }
    for k in 0..m {
        out.push(DyadicInterval::new(m, DyadicPoint::unit(k, m)?)?);
    }
    Ok(out)
}

/// Where a point outside `I_M` sits in [`complement_partition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplementCell {
    /// `x in I_{l+1}(e_k + e_l)`, `k < l < M`.
    Pair { k: u32, l: u32 },
    /// `x in I_M(e_k)`.
    Single { k: u32 },
}

/// Classifies `x` against the partition of `G \ I_M`.
pub fn classify_complement(x: &DyadicPoint, m: u32) -> Result<ComplementCell> {
    if x.resolution() < m {
        return Err(Error::ResolutionTooSmall { needed: m, actual: x.resolution() });
    }
    let low = x.cell() & low_mask(m);
    if low == 0 {
        return Err(Error::NotInComplement(m));
    }
    let k = low.trailing_zeros();
    let rest = low & (low - 1);
    if rest == 0 {
        Ok(ComplementCell::Single { k })
    } else {
        Ok(ComplementCell::Pair { k, l: rest.trailing_zeros() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variation_by_definition(n: u64) -> u32 {
        let bit = |k: u32| -> i64 {
            if k < 64 {
                ((n >> k) & 1) as i64
            } else {
                0
            }
        };
        let mut v = bit(0);
        for k in 1..=64 {
            v += (bit(k) - bit(k - 1)).abs();
        }
        v as u32
    }

    #[test]
    fn variation_examples() {
        assert_eq!(variation(0), 0);
        assert_eq!(variation(2), 2);
        assert_eq!(variation(5), 4);
        assert_eq!(variation(u64::MAX), 2);
    }

    #[test]
    fn variation_matches_definition() {
        for n in 0..=1u64 << 16 {
            assert_eq!(variation(n), variation_by_definition(n), "n = {n}");
        }
        for k in 1..64 {
            assert_eq!(variation(1 << k), 2);
            assert_eq!(variation((1 << k) - 1), 2);
        }
    }

    #[test]
    fn block_examples() {
        assert_eq!(block_decomposition(1).unwrap().blocks(), &[(0, 0)]);
        assert_eq!(block_decomposition(5).unwrap().blocks(), &[(0, 0), (2, 2)]);
        assert_eq!(block_decomposition(152).unwrap().blocks(), &[(3, 4), (7, 7)]);
        assert_eq!(block_decomposition(u64::MAX).unwrap().blocks(), &[(0, 63)]);
        assert!(matches!(block_decomposition(0), Err(Error::ZeroIndex(0))));
    }

    #[test]
    fn block_invariants_exhaustive() {
        for n in 1..=1u64 << 16 {
            let d = block_decomposition(n).unwrap();
            assert_eq!(d.reconstruct(), n);
            let s = d.len() as u32;
            let v = variation(n);
            assert!(s <= v && v <= 2 * s + 1, "n = {n}");
            for w in d.blocks().windows(2) {
                assert!(w[0].1 + 2 <= w[1].0, "n = {n}: {:?}", d.blocks());
            }
            assert!(d.blocks()[0].0 <= d.blocks()[0].1);
        }
    }

    #[test]
    fn prefix_part_examples() {
        assert_eq!(prefix_part(5, 2).unwrap(), 1);
        assert_eq!(prefix_part(7, 3).unwrap(), 3);
        assert!(matches!(prefix_part(2, 2), Err(Error::PrefixIndexOutOfRange { s: 1, .. })));
        assert!(prefix_part(7, 1).is_err());
        assert!(prefix_part(7, 4).is_err());
    }

    #[test]
    fn a02_examples() {
        assert!(in_a02(5));
        assert!(in_a02(13));
        assert!(!in_a02(7));
        assert!(!in_a02(4));
        assert!(in_a02(21));
    }

    #[test]
    fn bit_index() {
        let n = BitIndex::new(152).unwrap();
        assert_eq!(n.order(), 7);
        assert_eq!(n.bits(), vec![0, 0, 0, 1, 1, 0, 0, 1]);
        assert_eq!(n.set_bits(), vec![3, 4, 7]);
        assert_eq!(n.variation(), 4);
        assert!(BitIndex::new(0).is_err());
        for n in 1..5000u64 {
            let b = BitIndex::new(n).unwrap();
            assert!(1u64 << b.order() <= n && (n as u128) < 1u128 << (b.order() + 1));
        }
    }

    #[test]
    fn points_and_intervals() {
        let e1 = DyadicPoint::unit(1, 3).unwrap();
        assert_eq!(e1.coords(), vec![0, 1, 0]);
        assert_eq!(e1.measure(), Rational::new(1, 8));
        assert!(DyadicPoint::unit(3, 3).is_err());
        let x = DyadicPoint::unit(0, 3).unwrap() + e1;
        assert_eq!(x.cell(), 3);
        assert_eq!(x.to_string(), "e_0+e_1");

        let i = DyadicInterval::new(2, x).unwrap();
        assert_eq!(i.measure(), Rational::new(1, 4));
        assert!(i.contains(&DyadicPoint::new(4, 0b0111).unwrap()));
        assert!(!i.contains(&DyadicPoint::new(4, 0b0101).unwrap()));
        assert_eq!(i.cells(3).collect::<Vec<_>>(), vec![3, 7]);
        assert_eq!(i.to_string(), "I_2(e_0+e_1)");
    }

    #[test]
    fn complement_partition_small() {
        let p1 = complement_partition(1).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0], DyadicInterval::new(1, DyadicPoint::unit(0, 1).unwrap()).unwrap());

        let p2: Vec<String> = complement_partition(2).unwrap().iter().map(|i| i.to_string()).collect();
        assert_eq!(p2, vec!["I_2(e_0+e_1)", "I_2(e_0)", "I_2(e_1)"]);

        let p3 = complement_partition(3).unwrap();
        assert_eq!(p3.len(), 6);
        let total: Rational = p3.iter().map(|i| i.measure()).sum();
        assert_eq!(total, Rational::new(7, 8));

        assert!(matches!(complement_partition(0), Err(Error::EmptyComplement)));
    }

    #[test]
    fn complement_partition_exact_cover() {
        for m in 1..=10u32 {
            let parts = complement_partition(m).unwrap();
            assert_eq!(parts.len() as u32, m * (m - 1) / 2 + m);
            let r = m + 1;
            let mut hits = vec![0u32; 1 << r];
            for part in &parts {
                for c in part.cells(r) {
                    hits[c] += 1;
                }
            }
            for (cell, &h) in hits.iter().enumerate() {
                let in_im = cell & ((1 << m) - 1) == 0;
                assert_eq!(h, if in_im { 0 } else { 1 }, "M = {m}, cell {cell}");
            }
        }
    }

    #[test]
    fn classify_matches_partition() {
        let m = 5;
        let parts = complement_partition(m).unwrap();
        for cell in 1..1u64 << m {
            let x = DyadicPoint::new(m, cell).unwrap();
            let class = classify_complement(&x, m).unwrap();
            let expected = match class {
                ComplementCell::Pair { k, l } => {
                    DyadicInterval::new(l + 1, DyadicPoint::new(l + 1, (1 << k) | (1 << l)).unwrap()).unwrap()
                }
                ComplementCell::Single { k } => DyadicInterval::new(m, DyadicPoint::unit(k, m).unwrap()).unwrap(),
            };
            assert!(expected.contains(&x));
            assert_eq!(parts.iter().filter(|p| p.contains(&x)).count(), 1);
        }
        assert!(classify_complement(&DyadicPoint::zero(5), 5).is_err());
    }
}
