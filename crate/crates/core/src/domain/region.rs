use std::fmt;

use crate::error::{Error, Result};

use super::Pixel;

/// Axis-aligned rectangle of pixels: a superpixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region {
    pub top: usize,
    pub left: usize,
    pub h: usize,
    pub w: usize,
}

impl Region {
    pub const fn new(top: usize, left: usize, h: usize, w: usize) -> Self {
        Self { top, left, h, w }
    }

    pub const fn area(&self) -> usize {
        self.h * self.w
    }

    pub const fn bottom(&self) -> usize {
        self.top + self.h
    }

    pub const fn right(&self) -> usize {
        self.left + self.w
    }

    pub fn contains(&self, p: Pixel) -> bool {
        (self.top..self.bottom()).contains(&p.row) && (self.left..self.right()).contains(&p.col)
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        other.top >= self.top
            && other.left >= self.left
            && other.bottom() <= self.bottom()
            && other.right() <= self.right()
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.top < other.bottom()
            && other.top < self.bottom()
            && self.left < other.right()
            && other.left < self.right()
    }

    /// Whether the region can be split into four non-empty quadrants.
    pub const fn splittable(&self) -> bool {
        self.h >= 2 && self.w >= 2
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (self.top..self.bottom()).flat_map(move |row| (self.left..self.right()).map(move |col| Pixel::new(row, col)))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{} {}x{}]", self.top, self.left, self.h, self.w)
    }
}

/// A split of `parent` into four quadrants at an interior point.
///
/// Child order is fixed: top-left, top-right, bottom-left, bottom-right.
/// Split offsets are relative to the parent origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Partition {
    pub parent: Region,
    pub split_row: usize,
    pub split_col: usize,
    pub children: [Region; 4],
}

impl Partition {
    pub fn new(parent: Region, split_row: usize, split_col: usize) -> Result<Self> {
        if !parent.splittable() {
            return Err(Error::RegionTooSmall { h: parent.h, w: parent.w });
        }
        if split_row == 0 || split_row >= parent.h || split_col == 0 || split_col >= parent.w {
            return Err(Error::InvalidPartition(format!(
                "split ({split_row}, {split_col}) is not interior to {parent}"
            )));
        }
        let Region { top, left, h, w } = parent;
        let (sr, sc) = (split_row, split_col);
        Ok(Self {
            parent,
            split_row,
            split_col,
            children: [
                Region::new(top, left, sr, sc),
                Region::new(top, left + sc, sr, w - sc),
                Region::new(top + sr, left, h - sr, sc),
                Region::new(top + sr, left + sc, h - sr, w - sc),
            ],
        })
    }

    pub fn child(&self, idx: usize) -> Region {
        self.children[idx]
    }

    pub fn regions(&self, set: ChildSet) -> impl Iterator<Item = Region> + '_ {
        set.iter().map(move |i| self.children[i])
    }

    pub fn area_of(&self, set: ChildSet) -> usize {
        self.regions(set).map(|r| r.area()).sum()
    }
}

/// Subset of the four children of a partition, stored as a 4-bit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ChildSet(u8);

impl ChildSet {
    pub const EMPTY: Self = Self(0);
    pub const FULL: Self = Self(0b1111);

    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0b1111)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        indices.into_iter().fold(Self::EMPTY, |s, i| s.with(i))
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn contains(self, idx: usize) -> bool {
        idx < 4 && self.0 & (1 << idx) != 0
    }

    pub fn with(self, idx: usize) -> Self {
        assert!(idx < 4, "child index {idx} out of range");
        Self(self.0 | (1 << idx))
    }

    pub fn without(self, idx: usize) -> Self {
        Self(self.0 & !(1 << idx))
    }

    pub const fn complement(self) -> Self {
        Self(!self.0 & 0b1111)
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..4).filter(move |&i| self.contains(i))
    }
}

impl fmt::Display for ChildSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
