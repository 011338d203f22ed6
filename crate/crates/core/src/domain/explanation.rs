use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::oracle::Label;

use super::{Config, Pixel, PixelMask};

const MAGIC: &[u8; 4] = b"RXE1";
const FLAG_SUFFICIENT: u8 = 0b01;
const FLAG_DEGENERATE: u8 = 0b10;

/// A pixel subset certified (or not) to reproduce `label` on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub pixels: BTreeSet<Pixel>,
    pub label: Label,
    pub sufficient: bool,
    /// The fully masked image already yields `label`.
    pub degenerate_empty: bool,
}

impl Explanation {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Mask covering every pixel *not* in the explanation.
    pub fn complement_mask(&self, height: usize, width: usize) -> PixelMask {
        let mut m = PixelMask::full(height, width);
        for &p in &self.pixels {
            m.remove(p);
        }
        m
    }

    /// 8-bit grayscale rendering: 255 inside the explanation, 0 elsewhere.
    pub fn mask_image(&self, height: usize, width: usize) -> Vec<u8> {
        let mut out = vec![0u8; height * width];
        for p in &self.pixels {
            out[p.row * width + p.col] = 255;
        }
        out
    }

    /// Encodes the `RXE1` artifact.
    ///
    /// Layout (all integers little-endian): magic `RXE1`, height u32, width
    /// u32, label u32, flags u8 (bit0 sufficient, bit1 degenerate_empty),
    /// header length u32 plus that many UTF-8 bytes of config tokens, run
    /// count u32, then the run lengths as u32. Runs alternate between pixels
    /// outside and inside the explanation in row-major order, starting with
    /// an outside run (possibly of length zero).
    pub fn to_rxe(&self, height: usize, width: usize, config: Option<&Config>) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(height as u32).to_le_bytes());
        out.extend_from_slice(&(width as u32).to_le_bytes());
        out.extend_from_slice(&self.label.to_le_bytes());
        let mut flags = 0;
        if self.sufficient {
            flags |= FLAG_SUFFICIENT;
        }
        if self.degenerate_empty {
            flags |= FLAG_DEGENERATE;
        }
        out.push(flags);
        let header = config.map(Config::to_header).unwrap_or_default();
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());

        let runs = run_lengths(&self.mask_image(height, width));
        out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
        for r in runs {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    /// Decodes an `RXE1` artifact into the explanation, its dimensions and
    /// the embedded config (if any).
    pub fn from_rxe(bytes: &[u8]) -> Result<(Self, (usize, usize), Option<Config>)> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("missing RXE1 magic".into()));
        }
        let height = cur.u32()? as usize;
        let width = cur.u32()? as usize;
        let label = cur.u32()?;
        let flags = cur.take(1)?[0];
        let hlen = cur.u32()? as usize;
        let header = std::str::from_utf8(cur.take(hlen)?).map_err(|e| Error::Format(e.to_string()))?;
        let config = if header.is_empty() {
            None
        } else {
            Some(Config::from_header(header)?)
        };
        let nruns = cur.u32()? as usize;
        let mut pixels = BTreeSet::new();
        let mut idx = 0usize;
        for i in 0..nruns {
            let len = cur.u32()? as usize;
            if i % 2 == 1 {
                for j in idx..idx + len {
                    pixels.insert(Pixel::new(j / width, j % width));
                }
            }
            idx += len;
        }
        if idx != height * width || cur.pos != bytes.len() {
            return Err(Error::Format(format!(
                "RXE1 runs cover {idx} pixels, expected {}",
                height * width
            )));
        }
        let e = Self {
            pixels,
            label,
            sufficient: flags & FLAG_SUFFICIENT != 0,
            degenerate_empty: flags & FLAG_DEGENERATE != 0,
        };
        Ok((e, (height, width), config))
    }
}

fn run_lengths(mask: &[u8]) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = 0u8;
    let mut len = 0u32;
    for &v in mask {
        let v = u8::from(v != 0) * 255;
        if v == current {
            len += 1;
        } else {
            runs.push(len);
            current = v;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated RXE1".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn run_lengths_start_outside() {
        assert_eq!(run_lengths(&[255, 255, 0, 255]), vec![0, 2, 1, 1]);
        assert_eq!(run_lengths(&[0, 0, 0]), vec![3]);
    }

    #[test]
    fn complement_mask_excludes_explanation() {
        let e = Explanation {
            pixels: [Pixel::new(1, 1)].into(),
            label: 3,
            sufficient: true,
            degenerate_empty: false,
        };
        let m = e.complement_mask(2, 2);
        assert_eq!(m.count(), 3);
        assert!(!m.contains(Pixel::new(1, 1)));
    }

    proptest! {
        #[test]
        fn rxe_round_trip(h in 1usize..9, w in 1usize..9, bits in proptest::collection::vec(any::<bool>(), 64),
                          label in any::<u32>(), sufficient in any::<bool>()) {
            let pixels = (0..h * w).filter(|&i| bits[i]).map(|i| Pixel::new(i / w, i % w)).collect();
            let e = Explanation { pixels, label, sufficient, degenerate_empty: !sufficient };
            let cfg = Config::default();
            let (back, dims, got) = Explanation::from_rxe(&e.to_rxe(h, w, Some(&cfg))).unwrap();
            prop_assert_eq!(back, e);
            prop_assert_eq!(dims, (h, w));
            prop_assert_eq!(got, Some(cfg));
        }
    }
}
