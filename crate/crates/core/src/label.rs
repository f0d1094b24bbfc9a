//! Node labels of the infinite plane binary tree.
//!
//! The root is `1`; the children of `n` are `2n` (left) and `2n + 1` (right).
//! Written in binary, a label is a leading `1` followed by the path from the
//! root, `0` for a left step and `1` for a right step. Parents are right shifts
//! and the depth is the index of the most significant bit.
//!
//! Labels are unbounded. Values below `2^64` are stored inline; deeper labels
//! spill into little-endian `u64` limbs.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::num::NonZeroU64;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Word(NonZeroU64),
    // little-endian, len >= 2, top limb non-zero
    Limbs(Box<[u64]>),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeLabel(Repr);

const ONE: NonZeroU64 = match NonZeroU64::new(1) {
    Some(v) => v,
    None => unreachable!(),
};

impl NodeLabel {
    pub const ROOT: NodeLabel = NodeLabel(Repr::Word(ONE));

    pub fn root() -> Self {
        Self::ROOT
    }

    pub fn from_u64(value: u64) -> Option<Self> {
        NonZeroU64::new(value).map(|v| NodeLabel(Repr::Word(v)))
    }

    fn from_limbs(mut limbs: Vec<u64>) -> Option<Self> {
        while limbs.last() == Some(&0) {
            limbs.pop();
        }
        match limbs.len() {
            0 => None,
            1 => Self::from_u64(limbs[0]),
            _ => Some(NodeLabel(Repr::Limbs(limbs.into_boxed_slice()))),
        }
    }

    /// The label reached by following `path` from the root.
    pub fn from_path<I: IntoIterator<Item = Side>>(path: I) -> Self {
        path.into_iter().fold(Self::ROOT, |n, side| n.child(side))
    }

    pub fn is_root(&self) -> bool {
        matches!(self.0, Repr::Word(v) if v.get() == 1)
    }

    /// The value as a `u64`, when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Word(v) => Some(v.get()),
            Repr::Limbs(_) => None,
        }
    }

    /// Little-endian limbs of the value.
    pub fn limbs(&self) -> Vec<u64> {
        match &self.0 {
            Repr::Word(v) => alloc::vec![v.get()],
            Repr::Limbs(l) => l.to_vec(),
        }
    }

    fn bit_len(&self) -> u32 {
        match &self.0 {
            Repr::Word(v) => 64 - v.leading_zeros(),
            Repr::Limbs(l) => {
                let top = l[l.len() - 1];
                (l.len() as u32 - 1) * 64 + (64 - top.leading_zeros())
            }
        }
    }

    /// Distance from the root.
    pub fn depth(&self) -> u32 {
        self.bit_len() - 1
    }

    fn bit(&self, i: u32) -> bool {
        match &self.0 {
            Repr::Word(v) => (v.get() >> i) & 1 == 1,
            Repr::Limbs(l) => (l[(i / 64) as usize] >> (i % 64)) & 1 == 1,
        }
    }

    pub fn child(&self, side: Side) -> Self {
        let low = matches!(side, Side::Right) as u64;
        match &self.0 {
            Repr::Word(v) if v.get() >> 63 == 0 => {
                NodeLabel(Repr::Word(NonZeroU64::new((v.get() << 1) | low).unwrap()))
            }
            _ => {
                let limbs = self.limbs();
                let mut out = Vec::with_capacity(limbs.len() + 1);
                let mut carry = low;
                for &w in &limbs {
                    out.push((w << 1) | carry);
                    carry = w >> 63;
                }
                if carry != 0 {
                    out.push(carry);
                }
                NodeLabel::from_limbs(out).unwrap()
            }
        }
    }

    pub fn left(&self) -> Self {
        self.child(Side::Left)
    }

    pub fn right(&self) -> Self {
        self.child(Side::Right)
    }

    pub fn children(&self) -> (Self, Self) {
        (self.left(), self.right())
    }

    pub fn parent(&self) -> Result<Self> {
        match &self.0 {
            Repr::Word(v) => Self::from_u64(v.get() >> 1).ok_or(Error::RootHasNoParent),
            Repr::Limbs(l) => {
                let mut out = alloc::vec![0u64; l.len()];
                for i in 0..l.len() {
                    let hi = if i + 1 < l.len() { l[i + 1] << 63 } else { 0 };
                    out[i] = (l[i] >> 1) | hi;
                }
                Ok(NodeLabel::from_limbs(out).unwrap())
            }
        }
    }

    /// The other child of this node's parent.
    pub fn sibling(&self) -> Result<Self> {
        let parent = self.parent()?;
        Ok(match self.side() {
            Some(Side::Left) => parent.right(),
            _ => parent.left(),
        })
    }

    /// Which child of its parent this node is; `None` for the root.
    pub fn side(&self) -> Option<Side> {
        if self.is_root() {
            None
        } else if self.bit(0) {
            Some(Side::Right)
        } else {
            Some(Side::Left)
        }
    }

    /// Steps from the root down to this node.
    pub fn path(&self) -> impl ExactSizeIterator<Item = Side> + '_ {
        let depth = self.depth();
        (0..depth).map(move |k| if self.bit(depth - 1 - k) { Side::Right } else { Side::Left })
    }

    /// The ancestor at depth `depth` (self when `depth == self.depth()`).
    pub fn ancestor_at(&self, depth: u32) -> Option<Self> {
        let own = self.depth();
        if depth > own {
            return None;
        }
        let shift = own - depth;
        match &self.0 {
            Repr::Word(v) => Self::from_u64(v.get() >> shift),
            Repr::Limbs(l) => {
                let (limb_shift, bit_shift) = ((shift / 64) as usize, shift % 64);
                let mut out = Vec::with_capacity(l.len() - limb_shift);
                for i in limb_shift..l.len() {
                    let mut w = l[i] >> bit_shift;
                    if bit_shift > 0 && i + 1 < l.len() {
                        w |= l[i + 1] << (64 - bit_shift);
                    }
                    out.push(w);
                }
                NodeLabel::from_limbs(out)
            }
        }
    }

    /// True when `self` lies on the path from the root to `other` (inclusive).
    pub fn is_ancestor_of(&self, other: &NodeLabel) -> bool {
        other.ancestor_at(self.depth()).as_ref() == Some(self)
    }
}

impl Default for NodeLabel {
    fn default() -> Self {
        Self::ROOT
    }
}

impl From<NonZeroU64> for NodeLabel {
    fn from(v: NonZeroU64) -> Self {
        NodeLabel(Repr::Word(v))
    }
}

impl Ord for NodeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Word(a), Repr::Word(b)) => a.cmp(b),
            (Repr::Word(_), Repr::Limbs(_)) => Ordering::Less,
            (Repr::Limbs(_), Repr::Word(_)) => Ordering::Greater,
            (Repr::Limbs(a), Repr::Limbs(b)) => {
                a.len().cmp(&b.len()).then_with(|| a.iter().rev().cmp(b.iter().rev()))
            }
        }
    }
}

impl PartialOrd for NodeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const TEN19: u64 = 10_000_000_000_000_000_000;

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Word(v) => write!(f, "{}", v),
            Repr::Limbs(l) => {
                // repeated division by 10^19, least significant chunk first
                let mut rest: Vec<u64> = l.to_vec();
                let mut chunks = Vec::new();
                while !rest.is_empty() {
                    let mut rem: u128 = 0;
                    for w in rest.iter_mut().rev() {
                        let cur = (rem << 64) | *w as u128;
                        *w = (cur / TEN19 as u128) as u64;
                        rem = cur % TEN19 as u128;
                    }
                    chunks.push(rem as u64);
                    while rest.last() == Some(&0) {
                        rest.pop();
                    }
                }
                let mut s = String::new();
                for (i, c) in chunks.iter().rev().enumerate() {
                    if i == 0 {
                        s.push_str(&alloc::format!("{}", c));
                    } else {
                        s.push_str(&alloc::format!("{:019}", c));
                    }
                }
                f.write_str(&s)
            }
        }
    }
}

impl fmt::Debug for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeLabel({})", self)
    }
}

impl FromStr for NodeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidLabel(s.into()));
        }
        if let Ok(v) = s.parse::<u64>() {
            return Self::from_u64(v).ok_or_else(|| Error::InvalidLabel(s.into()));
        }
        let mut limbs: Vec<u64> = Vec::new();
        let bytes = s.as_bytes();
        let head = bytes.len() % 19;
        let mut pieces = Vec::new();
        if head > 0 {
            pieces.push(&bytes[..head]);
        }
        pieces.extend(bytes[head..].chunks(19));
        for piece in pieces {
            let chunk: u64 = core::str::from_utf8(piece).unwrap().parse().unwrap();
            let mul = 10u64.pow(piece.len() as u32) as u128;
            let mut carry = chunk as u128;
            for w in limbs.iter_mut() {
                let cur = *w as u128 * mul + carry;
                *w = cur as u64;
                carry = cur >> 64;
            }
            if carry != 0 {
                limbs.push(carry as u64);
            }
        }
        Self::from_limbs(limbs).ok_or_else(|| Error::InvalidLabel(s.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn l(v: u64) -> NodeLabel {
        NodeLabel::from_u64(v).unwrap()
    }

    #[test]
    fn parent_children_depth() {
        assert_eq!(l(5).parent().unwrap(), l(2));
        assert_eq!(l(2).parent().unwrap(), l(1));
        assert_eq!(l(1).parent(), Err(Error::RootHasNoParent));
        assert_eq!(l(1).children(), (l(2), l(3)));
        assert_eq!(l(2).children(), (l(4), l(5)));
        assert_eq!(l(5).children(), (l(10), l(11)));
        assert_eq!(l(1).depth(), 0);
        assert_eq!(l(5).depth(), 2);
        assert_eq!(l(1024).depth(), 10);
    }

    #[test]
    fn path_of_five_is_left_right() {
        assert_eq!(l(5).path().collect::<Vec<_>>(), [Side::Left, Side::Right]);
        assert_eq!(NodeLabel::from_path([Side::Left, Side::Right]), l(5));
        assert_eq!(l(5).side(), Some(Side::Right));
        assert_eq!(l(5).sibling().unwrap(), l(4));
        assert_eq!(l(1).side(), None);
    }

    #[test]
    fn crosses_word_boundary() {
        let top = l(1 << 63);
        assert_eq!(top.depth(), 63);
        let deep = top.right();
        assert_eq!(deep.depth(), 64);
        assert_eq!(deep.to_u64(), None);
        assert_eq!(deep.parent().unwrap(), top);
        assert!(deep > l(u64::MAX));
        assert_eq!(deep.to_string(), "18446744073709551617");
        assert_eq!("18446744073709551617".parse::<NodeLabel>().unwrap(), deep);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("0".parse::<NodeLabel>().is_err());
        assert!("".parse::<NodeLabel>().is_err());
        assert!("12a".parse::<NodeLabel>().is_err());
        assert!("-3".parse::<NodeLabel>().is_err());
        assert_eq!("000012".parse::<NodeLabel>().unwrap(), l(12));
    }

    #[test]
    fn ancestors() {
        let n = l(0b1011_0110);
        assert_eq!(n.ancestor_at(0).unwrap(), l(1));
        assert_eq!(n.ancestor_at(3).unwrap(), l(0b1011));
        assert_eq!(n.ancestor_at(8), None);
        assert!(l(0b1011).is_ancestor_of(&n));
        assert!(!l(0b1010).is_ancestor_of(&n));
        assert!(n.is_ancestor_of(&n));
    }
}
