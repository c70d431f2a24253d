//! Pixel grids, multi-channel images and their file formats (PGM P5, PNG).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 2-D array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid {width}x{height} needs {} cells, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        let w = self.width;
        self.data[y * w + x] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn map_indexed<U>(&self, mut f: impl FnMut(usize, usize, &T) -> U) -> Grid<U> {
        let w = self.width;
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().enumerate().map(|(i, v)| f(i % w, i / w, v)).collect(),
        }
    }

    /// Cell at `(x+dx, y+dy)` with coordinates clamped to the grid (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> &T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        &self.data[cy * self.width + cx]
    }
}

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Interleaved image with 1 (gray) or 3 (RGB) channels, values in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image must have at least one pixel"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "image {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_gray(grid: Grid<f64>) -> Result<Self> {
        let (w, h) = (grid.width(), grid.height());
        Self::new(w, h, 1, grid.into_vec())
    }

    /// Grayscale image from a closure over pixel coordinates.
    pub fn gray_from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    /// Luma of pixel `p`.
    pub fn intensity(&self, p: usize) -> f64 {
        let px = self.pixel(p);
        if self.channels == 1 {
            px[0]
        } else {
            px.iter().zip(LUMA_WEIGHTS).map(|(v, w)| v * w).sum()
        }
    }

    pub fn to_gray(&self) -> Grid<f64> {
        let data = (0..self.pixel_count()).map(|p| self.intensity(p)).collect();
        Grid {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn channel_means(&self) -> Vec<f64> {
        let n = self.pixel_count() as f64;
        (0..self.channels)
            .map(|c| self.data.iter().skip(c).step_by(self.channels).sum::<f64>() / n)
            .collect()
    }
}

/// Reads a PGM (P5) or 8-bit gray/RGB PNG file.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode()?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        image::DynamicImage::ImageLuma8(buf) => {
            Image::new(w, h, 1, buf.into_raw().into_iter().map(f64::from).collect())
        }
        image::DynamicImage::ImageRgb8(buf) => Image::new(w, h, 3, buf.into_raw().into_iter().map(f64::from).collect()),
        other if other.color().has_color() => {
            let buf = other.to_rgb8();
            Image::new(w, h, 3, buf.into_raw().into_iter().map(f64::from).collect())
        }
        other => {
            let buf = other.to_luma8();
            Image::new(w, h, 1, buf.into_raw().into_iter().map(f64::from).collect())
        }
    }
}

/// Binary PGM (P5) bytes.
pub fn pgm_bytes(grid: &Grid<u8>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend_from_slice(grid.data());
    out
}

pub fn write_pgm(path: impl AsRef<Path>, grid: &Grid<u8>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&pgm_bytes(grid)).map_err(|e| Error::io(path, e))
}

/// Writes a grayscale or RGB image, rounding and clamping to 8 bits. Gray goes to PGM,
/// RGB to PNG.
pub fn write_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img.data().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    if img.channels() == 1 {
        write_pgm(path, &Grid::from_vec(img.width(), img.height(), bytes)?)
    } else {
        let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, bytes)
            .ok_or_else(|| Error::invalid("rgb buffer size mismatch"))?;
        buf.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Min-max normalisation of reals to `0..=255`. A constant input maps to all zeros.
pub fn normalize_to_u8(values: &Grid<f64>) -> Grid<u8> {
    let (lo, hi) = values
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    values.map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    })
}
