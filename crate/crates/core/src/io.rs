//! PNG input and output.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::domain::{Image, PixelMask};
use crate::error::{Error, Result};

fn format_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Loads an 8-bit image; grayscale files stay single-channel, everything
/// else becomes RGB. Alpha is dropped.
pub fn load_image(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| format_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            Ok(Image::from_u8(h, w, 1, img.to_luma8().as_raw())?)
        }
        other => Ok(Image::from_u8(h, w, 3, other.to_rgb8().as_raw())?),
    }
}

pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    let (h, w) = img.dims();
    let bytes = img.to_u8();
    match img.channels() {
        1 => save_gray(path, h, w, bytes),
        _ => save_rgb(path, h, w, bytes),
    }
}

pub fn save_gray(path: &Path, height: usize, width: usize, bytes: Vec<u8>) -> Result<()> {
    GrayImage::from_raw(width as u32, height as u32, bytes)
        .ok_or_else(|| format_error(path, "buffer does not match dimensions"))?
        .save(path)
        .map_err(|e| format_error(path, e))
}

pub fn save_rgb(path: &Path, height: usize, width: usize, bytes: Vec<u8>) -> Result<()> {
    RgbImage::from_raw(width as u32, height as u32, bytes)
        .ok_or_else(|| format_error(path, "buffer does not match dimensions"))?
        .save(path)
        .map_err(|e| format_error(path, e))
}

/// Loads a binary mask: pixels with luma above 127 are set.
pub fn load_mask(path: &Path, height: usize, width: usize) -> Result<PixelMask> {
    let img = image::open(path).map_err(|e| format_error(path, e))?.to_luma8();
    if (img.height() as usize, img.width() as usize) != (height, width) {
        return Err(Error::DimensionMismatch {
            expected: format!("{height}x{width}"),
            actual: format!("{}x{}", img.height(), img.width()),
        });
    }
    let mut mask = PixelMask::empty(height, width);
    for (x, y, p) in img.enumerate_pixels() {
        if p.0[0] > 127 {
            mask.insert(crate::domain::Pixel::new(y as usize, x as usize));
        }
    }
    Ok(mask)
}
