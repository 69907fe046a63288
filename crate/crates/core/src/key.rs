use std::fmt;

const CHR_BITS: u32 = 8;
const INDEX_BITS: u32 = 64 - CHR_BITS;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

/// Opaque, totally ordered variable identifier.
///
/// Keys are usually built from a character tag and an index (`x7`, `m3`),
/// packed into a single `u64` so ordering is by tag first, then index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key(pub u64);

impl Key {
    pub fn symbol(chr: char, index: u64) -> Self {
        assert!(chr.is_ascii(), "symbol tag must be ASCII");
        assert!(index <= INDEX_MASK, "symbol index out of range");
        Key(((chr as u64) << INDEX_BITS) | index)
    }

    pub fn chr(self) -> Option<char> {
        let c = (self.0 >> INDEX_BITS) as u8;
        (c.is_ascii_graphic()).then_some(c as char)
    }

    pub fn index(self) -> u64 {
        self.0 & INDEX_MASK
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.chr() {
            Some(c) => write!(f, "{c}{}", self.index()),
            None => write!(f, "{}", self.0),
        }
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<u64> for Key {
    fn from(raw: u64) -> Self {
        Key(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_order_by_tag_then_index() {
        let a = Key::symbol('m', 2);
        let b = Key::symbol('m', 10);
        let c = Key::symbol('x', 0);
        assert!(a < b && b < c);
        assert_eq!(a.to_string(), "m2");
        assert_eq!(Key(5).to_string(), "5");
    }
}
