use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{Config, Pixel};

const TEXT_MAGIC: &str = "REXMAP";
const TEXT_VERSION: &str = "v1";
const BINARY_MAGIC: &[u8; 4] = b"RXM1";

/// Per-pixel accumulated responsibility.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
    iterations_done: usize,
}

impl ResponsibilityMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0.0; height * width],
            iterations_done: 0,
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>, iterations_done: usize) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::InvalidMap(format!(
                "{height}x{width} map needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        let map = Self {
            height,
            width,
            values,
            iterations_done,
        };
        map.check()?;
        Ok(map)
    }

    /// Finite and non-negative everywhere.
    pub fn check(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            Some(i) => Err(Error::InvalidMap(format!(
                "value {} at ({}, {})",
                self.values[i],
                i / self.width,
                i % self.width
            ))),
            None => Ok(()),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Raw accumulated sums, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iterations_done(&self) -> usize {
        self.iterations_done
    }

    pub fn get(&self, p: Pixel) -> f64 {
        self.values[p.row * self.width + p.col]
    }

    pub(crate) fn add(&mut self, p: Pixel, amount: f64) {
        self.values[p.row * self.width + p.col] += amount;
    }

    pub(crate) fn set_iterations_done(&mut self, n: usize) {
        self.iterations_done = n;
    }

    /// Sums divided by the number of completed iterations.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.iterations_done.max(1) as f64;
        self.values.iter().map(|v| v / n).collect()
    }

    /// Pixel with the largest value; ties go to the first pixel in row-major order.
    pub fn argmax(&self) -> Pixel {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        Pixel::new(best / self.width, best % self.width)
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Text form: `REXMAP v1 <height> <width> runs=<n> [config tokens]`
    /// followed by one line of space-separated values per row.
    pub fn to_text(&self, config: Option<&Config>) -> String {
        let mut out = String::with_capacity(self.values.len() * 8 + 64);
        write!(
            out,
            "{TEXT_MAGIC} {TEXT_VERSION} {} {} runs={}",
            self.height, self.width, self.iterations_done
        )
        .unwrap();
        if let Some(cfg) = config {
            out.push(' ');
            out.push_str(&cfg.to_header());
        }
        out.push('\n');
        for row in self.values.chunks(self.width) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<(Self, Option<Config>)> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty REXMAP file".into()))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some(TEXT_MAGIC) || tokens.next() != Some(TEXT_VERSION) {
            return Err(Error::Format("missing `REXMAP v1` header".into()));
        }
        let dim = |t: Option<&str>| -> Result<usize> {
            t.and_then(|s| s.parse().ok())
                .filter(|&d: &usize| d > 0)
                .ok_or_else(|| Error::Format("bad REXMAP dimensions".into()))
        };
        let height = dim(tokens.next())?;
        let width = dim(tokens.next())?;
        let mut runs = 0;
        let mut cfg_tokens = Vec::new();
        for t in tokens {
            match t.strip_prefix("runs=") {
                Some(n) => runs = n.parse().map_err(|_| Error::Format(format!("bad token `{t}`")))?,
                None => cfg_tokens.push(t),
            }
        }
        let config = if cfg_tokens.is_empty() {
            None
        } else {
            Some(Config::from_header(&cfg_tokens.join(" "))?)
        };
        let mut values = Vec::with_capacity(height * width);
        for (r, line) in lines.by_ref().take(height).enumerate() {
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad value `{tok}` on row {r}")))?,
                );
            }
            if values.len() - before != width {
                return Err(Error::Format(format!("row {r} has {} values, expected {width}", values.len() - before)));
            }
        }
        if values.len() != height * width {
            return Err(Error::Format("truncated REXMAP body".into()));
        }
        Ok((Self::from_values(height, width, values, runs)?, config))
    }

    /// Binary form: magic `RXM1`, height and width as u32 LE, then f64 LE values row-major.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.values.len() * 8);
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != BINARY_MAGIC {
            return Err(Error::Format("missing RXM1 magic".into()));
        }
        let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[12..];
        if height == 0 || width == 0 || body.len() != height * width * 8 {
            return Err(Error::Format(format!(
                "RXM1 body of {} bytes does not match {height}x{width}",
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_values(height, width, values, 0)
    }

    /// Min-max scaled values in `[0, 1]`; a constant map scales to all zeros.
    pub fn normalized(&self) -> Vec<f64> {
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        if span.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return vec![0.0; self.values.len()];
        }
        self.values.iter().map(|v| (v - min) / span).collect()
    }

    /// RGB8 heatmap over the min-max scaled map using a black-red-yellow-white ramp.
    pub fn heatmap_rgb(&self) -> Vec<u8> {
        self.normalized().into_iter().flat_map(heat_ramp).collect()
    }
}

fn heat_ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * 3.0;
    let channel = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    [channel(t), channel(t - 1.0), channel(t - 2.0)]
}
