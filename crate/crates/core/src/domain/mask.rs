use super::{ChildSet, Partition, Pixel, Region};

/// Set of masked pixels over an `height x width` grid.
///
/// This is the canonical description of an occlusion: for a fixed input
/// image and mask color the mutant is fully determined by it, which makes it
/// the cache key for oracle lookups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelMask {
    height: usize,
    width: usize,
    words: Vec<u64>,
}

impl PixelMask {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            words: vec![0; (height * width).div_ceil(64)],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let mut m = Self::empty(height, width);
        m.insert_region(Region::new(0, 0, height, width));
        m
    }

    pub fn from_regions<'a>(height: usize, width: usize, regions: impl IntoIterator<Item = &'a Region>) -> Self {
        let mut m = Self::empty(height, width);
        for r in regions {
            m.insert_region(*r);
        }
        m
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn index(&self, p: Pixel) -> usize {
        debug_assert!(p.row < self.height && p.col < self.width);
        p.row * self.width + p.col
    }

    pub fn insert(&mut self, p: Pixel) {
        let i = self.index(p);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, p: Pixel) {
        let i = self.index(p);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, p: Pixel) -> bool {
        let i = self.index(p);
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn insert_region(&mut self, r: Region) {
        for row in r.top..r.bottom() {
            for col in r.left..r.right() {
                self.insert(Pixel::new(row, col));
            }
        }
    }

    pub fn union_with(&mut self, other: &PixelMask) {
        debug_assert_eq!(self.dims(), other.dims());
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Masked pixels in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Pixel> + '_ {
        let width = self.width;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let i = wi * 64 + b;
                Some(Pixel::new(i / width, i % width))
            })
        })
    }
}

/// Masking assignment over the superpixels of one partition.
///
/// `masked` indexes children of `partition`; `held` lists regions kept at
/// their original values while a sibling is refined; `background` lists
/// regions outside the current refinement scope that stay masked.
#[derive(Debug, Clone, PartialEq)]
pub struct MutantSpec {
    pub partition: Partition,
    pub masked: ChildSet,
    pub held: Vec<Region>,
    pub background: Vec<Region>,
}

impl MutantSpec {
    pub fn new(partition: Partition, masked: ChildSet, held: Vec<Region>, background: Vec<Region>) -> Self {
        debug_assert!(
            held.iter().all(|h| partition.regions(masked).all(|m| !m.intersects(h))),
            "held regions overlap masked children"
        );
        Self {
            partition,
            masked,
            held,
            background,
        }
    }

    /// Number of masked superpixels of the partition.
    pub fn diff(&self) -> usize {
        self.masked.len()
    }

    pub fn to_mask(&self, height: usize, width: usize) -> PixelMask {
        let mut m = PixelMask::from_regions(height, width, &self.background);
        for r in self.partition.regions(self.masked) {
            m.insert_region(r);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrants() -> Partition {
        Partition::new(Region::new(0, 0, 4, 4), 2, 2).unwrap()
    }

    #[test]
    fn diff_is_masked_count() {
        let p = quadrants();
        for (bits, expected) in [(0b0000, 0), (0b0101, 2), (0b1111, 4)] {
            let m = MutantSpec::new(p, ChildSet::from_bits(bits), vec![], vec![]);
            assert_eq!(m.diff(), expected);
        }
    }

    #[test]
    fn mask_iterates_row_major() {
        let mut m = PixelMask::empty(3, 30);
        m.insert(Pixel::new(2, 29));
        m.insert(Pixel::new(0, 1));
        m.insert(Pixel::new(1, 5));
        let got: Vec<_> = m.iter().collect();
        assert_eq!(got, vec![Pixel::new(0, 1), Pixel::new(1, 5), Pixel::new(2, 29)]);
        assert_eq!(m.count(), 3);
        m.remove(Pixel::new(1, 5));
        assert!(!m.contains(Pixel::new(1, 5)));
    }

    #[test]
    fn spec_mask_covers_children_and_background() {
        let p = Partition::new(Region::new(0, 0, 4, 2), 2, 1).unwrap();
        let bg = Region::new(0, 2, 4, 2);
        let m = MutantSpec::new(p, ChildSet::from_indices([3]), vec![], vec![bg]).to_mask(4, 4);
        assert_eq!(m.count(), 2 + 8);
        assert!(m.contains(Pixel::new(3, 1)));
        assert!(!m.contains(Pixel::new(3, 0)));
    }
}
