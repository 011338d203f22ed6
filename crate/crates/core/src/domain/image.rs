use std::fmt;

use thiserror::Error;

use super::{PixelMask, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive (got {height}x{width})")]
    EmptyDimensions { height: usize, width: usize },

    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),

    #[error("dimension mismatch: {height}x{width}x{channels} needs {expected} values, got {actual}")]
    DimensionMismatch {
        height: usize,
        width: usize,
        channels: usize,
        expected: usize,
        actual: usize,
    },

    #[error("intensity {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f32 },

    #[error("intensity at index {index} is NaN")]
    NotANumber { index: usize },

    #[error("mask color has {actual} channels, image has {expected}")]
    ColorChannels { expected: usize, actual: usize },
}

/// A pixel coordinate, ordered row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Dense row-major, channel-interleaved image with intensities in `[0, 1]`.
///
/// Construction always validates, so every `Image` value upholds its
/// invariants and can be shared freely between workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self, ImageError> {
        validate_image(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self, ImageError> {
        let len = height.saturating_mul(width).saturating_mul(channels);
        Self::new(height, width, channels, vec![value; len])
    }

    /// Builds an image by evaluating `f(row, col, channel)` for every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(height * width * channels);
        for row in 0..height {
            for col in 0..width {
                for ch in 0..channels {
                    data.push(f(row, col, ch));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    /// Converts 8-bit samples to normalized intensities (`v / 255`).
    pub fn from_u8(height: usize, width: usize, channels: usize, bytes: &[u8]) -> Result<Self, ImageError> {
        let data = bytes.iter().map(|&b| f32::from(b) / 255.0).collect();
        Self::new(height, width, channels, data)
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// The whole-image rectangle.
    pub fn bounds(&self) -> Region {
        Region::new(0, 0, self.height, self.width)
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Mean intensity over channels.
    pub fn intensity(&self, row: usize, col: usize) -> f32 {
        let px = self.pixel(row, col);
        px.iter().sum::<f32>() / px.len() as f32
    }

    /// Copy of `self` with every pixel in `mask` replaced by `color`.
    pub fn masked(&self, mask: &PixelMask, color: &MaskColor) -> Self {
        debug_assert_eq!(mask.dims(), self.dims());
        debug_assert_eq!(color.channels(), self.channels);
        let mut data = self.data.clone();
        for p in mask.iter() {
            let start = (p.row * self.width + p.col) * self.channels;
            data[start..start + self.channels].copy_from_slice(color.values());
        }
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        }
    }
}

/// Checks every `Image` invariant, returning the image unchanged on success.
pub fn validate_image(img: Image) -> Result<Image, ImageError> {
    if img.height == 0 || img.width == 0 {
        return Err(ImageError::EmptyDimensions {
            height: img.height,
            width: img.width,
        });
    }
    if img.channels != 1 && img.channels != 3 {
        return Err(ImageError::UnsupportedChannels(img.channels));
    }
    let expected = img.height * img.width * img.channels;
    if img.data.len() != expected {
        return Err(ImageError::DimensionMismatch {
            height: img.height,
            width: img.width,
            channels: img.channels,
            expected,
            actual: img.data.len(),
        });
    }
    for (index, &value) in img.data.iter().enumerate() {
        if value.is_nan() {
            return Err(ImageError::NotANumber { index });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(ImageError::OutOfRange { index, value });
        }
    }
    Ok(img)
}

/// Per-channel occlusion color.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskColor(Vec<f32>);

impl MaskColor {
    pub fn new(values: Vec<f32>) -> Result<Self, ImageError> {
        if values.len() != 1 && values.len() != 3 {
            return Err(ImageError::UnsupportedChannels(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if value.is_nan() {
                return Err(ImageError::NotANumber { index });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(ImageError::OutOfRange { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn black(channels: usize) -> Self {
        Self(vec![0.0; channels])
    }

    /// Adapts a color to an image's channel count: a single value is
    /// broadcast, a 3-channel color is averaged down to gray.
    pub fn for_channels(&self, channels: usize) -> Result<Self, ImageError> {
        match (self.0.len(), channels) {
            (a, b) if a == b => Ok(self.clone()),
            (1, 3) => Ok(Self(vec![self.0[0]; 3])),
            (3, 1) => Ok(Self(vec![self.0.iter().sum::<f32>() / 3.0])),
            (a, b) => Err(ImageError::ColorChannels { expected: b, actual: a }),
        }
    }

    pub fn channels(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn check_for(&self, img: &Image) -> Result<(), ImageError> {
        if self.0.len() == img.channels() {
            Ok(())
        } else {
            Err(ImageError::ColorChannels {
                expected: img.channels(),
                actual: self.0.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_minimal_well_formed_image() {
        let img = Image::new(2, 2, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(img.pixel_count(), 4);
        assert_eq!(img.intensity(1, 1), 1.0);
    }

    #[test]
    fn rejects_short_data() {
        let err = Image::new(2, 2, 1, vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, ImageError::DimensionMismatch { expected: 4, actual: 3, .. }));
    }

    #[test]
    fn rejects_out_of_range_and_nan() {
        let err = Image::new(1, 1, 3, vec![0.0, 1.5, 0.0]).unwrap_err();
        assert!(matches!(err, ImageError::OutOfRange { index: 1, .. }));
        let err = Image::new(1, 1, 1, vec![f32::NAN]).unwrap_err();
        assert!(matches!(err, ImageError::NotANumber { index: 0 }));
    }

    #[test]
    fn rejects_two_channels() {
        assert!(matches!(
            Image::new(1, 1, 2, vec![0.0, 0.0]),
            Err(ImageError::UnsupportedChannels(2))
        ));
    }

    #[test]
    fn u8_conversion_divides_by_255() {
        let img = Image::from_u8(1, 2, 1, &[0, 255]).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
        assert_eq!(img.to_u8(), vec![0, 255]);
    }

    #[test]
    fn color_broadcasts_between_gray_and_rgb() {
        let gray = MaskColor::new(vec![0.5]).unwrap();
        assert_eq!(gray.for_channels(3).unwrap().values(), &[0.5, 0.5, 0.5]);
        assert!(MaskColor::new(vec![2.0]).is_err());
    }
}
