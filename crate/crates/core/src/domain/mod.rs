//! Domain types shared by every stage of the pipeline.

mod config;
mod explanation;
mod image;
mod map;
mod mask;
mod region;

pub use config::{parse_color, Config, QueueStrategy, SplitDistribution};
pub use explanation::Explanation;
pub use image::{validate_image, Image, ImageError, MaskColor, Pixel};
pub use map::ResponsibilityMap;
pub use mask::{MutantSpec, PixelMask};
pub use region::{ChildSet, Partition, Region};
