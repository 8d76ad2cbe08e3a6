//! Ternary cube algebra over fixed-width words.
//!
//! A cube is a `value`/`care` bit pair: positions with a care bit of 1 are
//! specified (must equal the value bit), positions with 0 are don't-cares.
//! Bit position 0 is the most significant bit of the word, so a prefix of
//! length `L` embeds as a cube whose care mask is `L` leading ones.

use std::fmt;

/// Maximum supported word width in bits.
pub const MAX_WIDTH: u32 = 64;

/// Mask with the low `width` bits set.
#[inline]
pub fn word_mask(width: u32) -> u64 {
    debug_assert!(width <= MAX_WIDTH);
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A ternary word: each position is 0, 1, or don't-care.
///
/// Don't-care positions carry a canonical 0 in `value`, so equality is
/// bitwise and cubes are usable as set/map keys.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TernaryCube {
    value: u64,
    care: u64,
    width: u32,
}

impl TernaryCube {
    /// Builds a cube, canonicalizing don't-care positions to 0.
    pub fn new(value: u64, care: u64, width: u32) -> Self {
        assert!(width >= 1 && width <= MAX_WIDTH, "width out of range");
        let m = word_mask(width);
        let care = care & m;
        TernaryCube {
            value: value & care,
            care,
            width,
        }
    }

    /// The cube matching every address of the given width.
    pub fn all_dont_care(width: u32) -> Self {
        TernaryCube::new(0, 0, width)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn care(&self) -> u64 {
        self.care
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of specified (cared-for) bit positions.
    pub fn specified_bits(&self) -> u32 {
        self.care.count_ones()
    }

    /// True iff `address` lies in this cube's address set.
    #[inline]
    pub fn matches(&self, address: u64) -> bool {
        (address & self.care) == self.value
    }

    /// True iff every address matching `other` also matches `self`.
    pub fn contains(&self, other: &TernaryCube) -> bool {
        debug_assert_eq!(self.width, other.width);
        (self.care & other.care) == self.care && (other.value & self.care) == self.value
    }

    /// True iff the two cubes share at least one address.
    pub fn intersects(&self, other: &TernaryCube) -> bool {
        debug_assert_eq!(self.width, other.width);
        let common = self.care & other.care;
        (self.value & common) == (other.value & common)
    }

    /// Distance-1 merge: if the cubes have equal care masks and differ in
    /// exactly one specified bit, returns the cube with that bit demoted to
    /// don't-care. The result's address set is exactly the union of the two.
    pub fn try_merge(&self, other: &TernaryCube) -> Option<TernaryCube> {
        debug_assert_eq!(self.width, other.width);
        if self.care != other.care {
            return None;
        }
        let diff = self.value ^ other.value;
        if diff.count_ones() != 1 {
            return None;
        }
        Some(TernaryCube::new(self.value, self.care & !diff, self.width))
    }

    /// The cube with the specified bit at `position` (0 = MSB) demoted to
    /// don't-care. Panics if the position is not specified.
    pub fn expand_at(&self, position: u32) -> TernaryCube {
        let bit = self.position_mask(position);
        assert!(self.care & bit != 0, "position not specified");
        TernaryCube::new(self.value, self.care & !bit, self.width)
    }

    /// Single-bit mask for `position`, counting from the MSB.
    #[inline]
    pub fn position_mask(&self, position: u32) -> u64 {
        debug_assert!(position < self.width);
        1u64 << (self.width - 1 - position)
    }

    /// Intersection of two cubes, if non-empty.
    pub fn intersect(&self, other: &TernaryCube) -> Option<TernaryCube> {
        if !self.intersects(other) {
            return None;
        }
        Some(TernaryCube::new(
            self.value | other.value,
            self.care | other.care,
            self.width,
        ))
    }

    /// Renders as `width` characters from {0, 1, -}.
    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.width as usize);
        for pos in 0..self.width {
            let bit = self.position_mask(pos);
            if self.care & bit == 0 {
                s.push('-');
            } else if self.value & bit != 0 {
                s.push('1');
            } else {
                s.push('0');
            }
        }
        s
    }

    /// Parses a string of {0, 1, -} characters.
    pub fn parse(s: &str) -> Result<TernaryCube, String> {
        let width = s.len() as u32;
        if width == 0 || width > MAX_WIDTH {
            return Err(format!("cube string length {} out of range", s.len()));
        }
        let mut value = 0u64;
        let mut care = 0u64;
        for (i, c) in s.chars().enumerate() {
            let bit = 1u64 << (width - 1 - i as u32);
            match c {
                '0' => care |= bit,
                '1' => {
                    care |= bit;
                    value |= bit;
                }
                '-' => {}
                other => return Err(format!("illegal character {:?} in cube", other)),
            }
        }
        Ok(TernaryCube::new(value, care, width))
    }

    /// Iterates every address in the cube. Intended for small widths only.
    pub fn addresses(&self) -> impl Iterator<Item = u64> + '_ {
        let free = !self.care & word_mask(self.width);
        let free_positions: Vec<u64> = (0..self.width)
            .map(|p| 1u64 << p)
            .filter(|b| free & b != 0)
            .collect();
        let count = 1u64 << free_positions.len();
        let value = self.value;
        (0..count).map(move |i| {
            let mut addr = value;
            for (j, bit) in free_positions.iter().enumerate() {
                if i >> j & 1 == 1 {
                    addr |= bit;
                }
            }
            addr
        })
    }
}

impl fmt::Debug for TernaryCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TernaryCube({})", self.render())
    }
}

impl fmt::Display for TernaryCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> TernaryCube {
        TernaryCube::parse(s).unwrap()
    }

    #[test]
    fn matches_definition() {
        assert!(c("010-----").matches(0b0101_1111));
        assert!(!c("010-----").matches(0b1101_1111));
        // all-don't-care matches anything
        assert!(c("--------").matches(0b1010_0110));
        assert!(c("--------").matches(0));
    }

    #[test]
    fn contains_direction() {
        assert!(c("01------").contains(&c("0100----")));
        assert!(!c("0100----").contains(&c("01------")));
        let x = c("0100----");
        assert!(x.contains(&x));
    }

    #[test]
    fn merge_adjacent() {
        assert_eq!(c("0100----").try_merge(&c("0101----")), Some(c("010-----")));
        assert_eq!(c("0100----").try_merge(&c("0111----")), None);
        assert_eq!(c("0100----").try_merge(&c("010-----")), None);
    }

    #[test]
    fn merge_union_exhaustive() {
        // at width 8, every successful merge yields exactly the union
        let a = c("0100----");
        let b = c("0101----");
        let m = a.try_merge(&b).unwrap();
        for addr in 0..256u64 {
            assert_eq!(m.matches(addr), a.matches(addr) || b.matches(addr));
        }
    }

    #[test]
    fn canonical_dont_care_zeroed() {
        let x = TernaryCube::new(0b1111_1111, 0b1111_0000, 8);
        assert_eq!(x.value(), 0b1111_0000);
        assert_eq!(x.render(), "1111----");
    }

    #[test]
    fn render_parse_round_trip() {
        for s in ["01001101", "----", "1-0-1-0-", "0"] {
            assert_eq!(c(s).render(), s);
        }
        assert!(TernaryCube::parse("01*").is_err());
    }

    #[test]
    fn address_enumeration() {
        let x = c("01--");
        let mut addrs: Vec<u64> = x.addresses().collect();
        addrs.sort_unstable();
        assert_eq!(addrs, vec![0b0100, 0b0101, 0b0110, 0b0111]);
    }
}
