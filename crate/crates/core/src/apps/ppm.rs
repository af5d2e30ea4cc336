//! Binary PPM (P6) images as pixel rows in [0, 1].

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageReader, RgbImage};
use ndarray::Array2;

use crate::error::{Error, Result};

/// An RGB image flattened row-major into `width·height` rows of 3 channels.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Array2<f64>,
}

impl PixelImage {
    pub fn new(width: u32, height: u32, pixels: Array2<f64>) -> Result<Self> {
        let expected = ((width * height) as usize, 3);
        if pixels.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: pixels.dim(),
            });
        }
        Ok(PixelImage { width, height, pixels })
    }

    fn from_rgb(img: &RgbImage) -> Self {
        let pixels = Array2::from_shape_fn(((img.width() * img.height()) as usize, 3), |(k, ch)| {
            f64::from(img.as_raw()[3 * k + ch]) / 255.0
        });
        PixelImage {
            width: img.width(),
            height: img.height(),
            pixels,
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<PixelImage> {
    let img = ImageReader::open(path)?.with_guessed_format()?.decode()?.to_rgb8();
    Ok(PixelImage::from_rgb(&img))
}

pub fn write_ppm(path: impl AsRef<Path>, image: &PixelImage) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    let encoder = PnmEncoder::new(out).with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary));
    encoder.write_image(&image.to_bytes(), image.width, image.height, ExtendedColorType::Rgb8)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let pixels = Array2::from_shape_fn((6, 3), |(k, ch)| ((k * 3 + ch) as f64 * 13.0 % 256.0) / 255.0);
        let img = PixelImage::new(3, 2, pixels).unwrap();
        write_ppm(&path, &img).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P6"));
        let back = read_ppm(&path).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.height, 2);
        assert!((&back.pixels - &img.pixels).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn rejects_wrong_shape() {
        assert!(PixelImage::new(2, 2, Array2::zeros((3, 3))).is_err());
    }
}
