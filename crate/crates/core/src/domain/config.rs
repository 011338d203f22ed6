use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::MaskColor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueStrategy {
    /// Passing combinations ordered by ascending area.
    #[default]
    Area,
}

impl FromStr for QueueStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "area" => Ok(Self::Area),
            other => Err(Error::Config(format!("unknown queue strategy `{other}`"))),
        }
    }
}

impl fmt::Display for QueueStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("area")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitDistribution {
    #[default]
    Uniform,
}

impl FromStr for SplitDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown split distribution `{other}`"))),
        }
    }
}

impl fmt::Display for SplitDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("uniform")
    }
}

/// Run configuration. Every field is serialized into artifact headers so a
/// run can be replayed from its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub iterations: usize,
    pub superpixels: usize,
    pub min_superpixel_px: usize,
    pub mask_color: MaskColor,
    pub seed: u64,
    pub queue_strategy: QueueStrategy,
    pub queue_len: usize,
    pub call_budget: u64,
    pub extraction_chunk: usize,
    pub insertion_steps: usize,
    pub distribution: SplitDistribution,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            iterations: 20,
            superpixels: 4,
            min_superpixel_px: 10,
            mask_color: MaskColor::black(3),
            seed: 0,
            queue_strategy: QueueStrategy::Area,
            queue_len: 1,
            call_budget: 100_000,
            extraction_chunk: 1,
            insertion_steps: 100,
            distribution: SplitDistribution::Uniform,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.superpixels != 4 {
            return bad("only 4 superpixels per partition are supported");
        }
        if self.min_superpixel_px == 0 {
            return bad("min_superpixel_px must be at least 1");
        }
        if self.queue_len == 0 {
            return bad("queue_len must be at least 1");
        }
        if self.call_budget == 0 {
            return bad("call_budget must be at least 1");
        }
        if self.extraction_chunk == 0 {
            return bad("extraction_chunk must be at least 1");
        }
        if self.insertion_steps == 0 {
            return bad("insertion_steps must be at least 1");
        }
        Ok(())
    }

    /// `key=value` tokens, space separated, in a fixed order.
    pub fn to_header(&self) -> String {
        let color: Vec<String> = self.mask_color.values().iter().map(|v| v.to_string()).collect();
        format!(
            "iterations={} superpixels={} min_superpixel={} mask_color={} seed={} strategy={} \
             queue_len={} budget={} chunk={} insertion_steps={} distribution={}",
            self.iterations,
            self.superpixels,
            self.min_superpixel_px,
            color.join(","),
            self.seed,
            self.queue_strategy,
            self.queue_len,
            self.call_budget,
            self.extraction_chunk,
            self.insertion_steps,
            self.distribution,
        )
    }

    /// Parses tokens written by [`Config::to_header`]. Unknown keys are
    /// rejected; missing keys keep their defaults.
    pub fn from_header(header: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed config token `{token}`")))?;
            let num = |v: &str| v.parse::<u64>().map_err(|e| Error::Config(format!("{key}: {e}")));
            match key {
                "iterations" => cfg.iterations = num(value)? as usize,
                "superpixels" => cfg.superpixels = num(value)? as usize,
                "min_superpixel" => cfg.min_superpixel_px = num(value)? as usize,
                "mask_color" => cfg.mask_color = parse_color(value)?,
                "seed" => cfg.seed = num(value)?,
                "strategy" => cfg.queue_strategy = value.parse()?,
                "queue_len" => cfg.queue_len = num(value)? as usize,
                "budget" => cfg.call_budget = num(value)?,
                "chunk" => cfg.extraction_chunk = num(value)? as usize,
                "insertion_steps" => cfg.insertion_steps = num(value)? as usize,
                "distribution" => cfg.distribution = value.parse()?,
                _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `r,g,b` or a single gray value.
pub fn parse_color(s: &str) -> Result<MaskColor> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Config(format!("mask color `{s}`: {e}")))?;
    Ok(MaskColor::new(values)?)
}
