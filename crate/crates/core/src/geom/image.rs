use crate::error::{Error, Result};
use crate::geom::Intrinsics;

/// Row-major 8-bit image. Pixel `(i, j)` (column, row) covers the continuous
/// square `[i, i+1) × [j, j+1)` with center `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
    /// Set on images produced by [`flip_view`]: the virtual view of the source.
    pub flipped: bool,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        ImageGrid {
            width,
            height,
            channels,
            data: vec![0; width * height * channels],
            flipped: false,
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::ShapeError(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        Ok(ImageGrid {
            width,
            height,
            channels,
            data,
            flipped: false,
        })
    }

    pub fn get(&self, col: usize, row: usize, channel: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn set(&mut self, col: usize, row: usize, channel: usize, value: u8) {
        self.data[(row * self.width + col) * self.channels + channel] = value;
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Column reversal: column `i` moves to `W − 1 − i`.
    pub fn flipped_horizontally(&self) -> ImageGrid {
        let mut out = ImageGrid::new(self.width, self.height, self.channels);
        let c = self.channels;
        for row in 0..self.height {
            let base = row * self.width * c;
            for col in 0..self.width {
                let src = base + col * c;
                let dst = base + (self.width - 1 - col) * c;
                out.data[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
            }
        }
        out.flipped = !self.flipped;
        out
    }
}

/// Flips an image and its mirror mask horizontally to form the virtual view.
pub fn flip_view(img: &ImageGrid, mask: &ImageGrid) -> Result<(ImageGrid, ImageGrid)> {
    if !img.same_shape(mask) {
        return Err(Error::ShapeError(format!(
            "image is {}x{} but mask is {}x{}",
            img.width, img.height, mask.width, mask.height
        )));
    }
    Ok((img.flipped_horizontally(), mask.flipped_horizontally()))
}

/// [`flip_view`] with a warning when the intrinsics break flip equivalence.
pub fn flip_view_checked(img: &ImageGrid, mask: &ImageGrid, k: &Intrinsics) -> Result<(ImageGrid, ImageGrid)> {
    if !k.is_centered() {
        log::warn!(
            "principal point cx = {} is not W/2 = {}; the flipped view is only approximately the virtual camera image",
            k.cx,
            k.width as f64 / 2.0
        );
    }
    flip_view(img, mask)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn double_flip_is_identity(w in 1usize..20, h in 1usize..20, c in 1usize..4, seed in any::<u64>()) {
            let data = (0..w * h * c).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
            let img = ImageGrid::from_data(w, h, c, data).unwrap();
            let once = img.flipped_horizontally();
            prop_assert!(once.same_shape(&img));
            for col in 0..w {
                prop_assert_eq!(once.get(w - 1 - col, h - 1, 0), img.get(col, h - 1, 0));
            }
            prop_assert_eq!(once.flipped_horizontally(), img);
        }
    }
}
