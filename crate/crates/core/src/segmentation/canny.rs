use std::collections::VecDeque;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Grid;

/// Magnitudes at or below this are treated as zero when computing percentiles.
const MAGNITUDE_EPS: f64 = 1e-6;
/// Relative slack on the thresholds so that ridge values differing only by rounding
/// land on the same side.
const THRESHOLD_SLACK: f64 = 1e-9;

/// Which magnitudes the percentile thresholds are taken over (zeros always excluded).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdSource {
    /// Gradient magnitudes before thinning.
    #[default]
    Gradient,
    /// Magnitudes that survive non-maximum suppression.
    Thinned,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CannyConfig {
    pub sigma: f64,
    pub ksize: usize,
    pub pct_lower: f64,
    pub pct_upper: f64,
    pub threshold_source: ThresholdSource,
}

impl Default for CannyConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            ksize: 5,
            pct_lower: 75.0,
            pct_upper: 90.0,
            threshold_source: ThresholdSource::Gradient,
        }
    }
}

/// Binary edge grid together with the magnitude thresholds that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    pub edges: Grid<bool>,
    pub t_lower: f64,
    pub t_upper: f64,
}

impl EdgeMap {
    pub fn count(&self) -> usize {
        self.edges.data().iter().filter(|&&e| e).count()
    }
}

pub struct Gradients {
    pub magnitude: Grid<f64>,
    /// Gradient orientation folded into `[0, π)`.
    pub direction: Grid<f64>,
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Vec<f64>> {
    if ksize.is_multiple_of(2) {
        return Err(Error::invalid(format!("Gaussian kernel size must be odd, got {ksize}")));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid(format!("Gaussian sigma must be positive, got {sigma}")));
    }
    let r = (ksize / 2) as f64;
    let taps: Vec<f64> = (0..ksize)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_smooth(img: &Grid<f64>, sigma: f64, ksize: usize) -> Result<Grid<f64>> {
    let k = gaussian_kernel(sigma, ksize)?;
    let r = (ksize / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let pass = |src: &Grid<f64>, horizontal: bool| -> Grid<f64> {
        let mut out = vec![0.0; w * h];
        out.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
            for (x, cell) in row.iter_mut().enumerate() {
                *cell = k
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let d = i as isize - r;
                        let v = if horizontal {
                            src.get_clamped(x as isize + d, y as isize)
                        } else {
                            src.get_clamped(x as isize, y as isize + d)
                        };
                        c * v
                    })
                    .sum();
            }
        });
        Grid::from_vec(w, h, out).expect("same shape")
    };
    Ok(pass(&pass(img, true), false))
}

pub fn sobel_gradients(img: &Grid<f64>) -> Gradients {
    let (w, h) = (img.width(), img.height());
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![0.0; w * h];
    mag.par_chunks_mut(w.max(1))
        .zip(dir.par_chunks_mut(w.max(1)))
        .enumerate()
        .for_each(|(y, (mrow, drow))| {
            let y = y as isize;
            for x in 0..w {
                let x = x as isize;
                let p = |dx: isize, dy: isize| *img.get_clamped(x + dx, y + dy);
                let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
                let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
                mrow[x as usize] = gx.hypot(gy);
                let mut theta = gy.atan2(gx);
                if theta < 0.0 {
                    theta += PI;
                }
                if theta >= PI {
                    theta -= PI;
                }
                drow[x as usize] = theta;
            }
        });
    Gradients {
        magnitude: Grid::from_vec(w, h, mag).expect("same shape"),
        direction: Grid::from_vec(w, h, dir).expect("same shape"),
    }
}

/// Quantizes an orientation in `[0, π)` to 0, 1, 2, 3 (0°, 45°, 90°, 135°).
pub fn direction_bin(theta: f64) -> usize {
    ((theta / (PI / 4.0)).round() as usize) % 4
}

/// Keeps a pixel only if it is a local maximum along its quantized gradient direction.
/// A pixel must strictly beat the neighbour behind it and at least match the one ahead,
/// so plateaus two pixels wide keep one pixel.
pub fn non_max_suppression(mag: &Grid<f64>, dir: &Grid<f64>) -> Result<Grid<f64>> {
    if !mag.same_shape(dir) {
        return Err(Error::invalid("magnitude and direction grids differ in shape"));
    }
    let (w, h) = (mag.width() as isize, mag.height() as isize);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            *mag.get(x as usize, y as usize)
        }
    };
    Ok(mag.map_indexed(|x, y, &m| {
        let (x, y) = (x as isize, y as isize);
        let (dx, dy) = match direction_bin(*dir.get(x as usize, y as usize)) {
            0 => (1, 0),
            1 => (1, 1),
            2 => (0, 1),
            _ => (-1, 1),
        };
        let behind = at(x - dx, y - dy);
        let ahead = at(x + dx, y + dy);
        if m > behind && m >= ahead {
            m
        } else {
            0.0
        }
    }))
}

/// Linear-interpolated percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = p / 100.0 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Hysteresis with thresholds at percentiles of the nonzero thinned magnitudes.
pub fn double_threshold_hysteresis(thinned: &Grid<f64>, pct_lower: f64, pct_upper: f64) -> Result<EdgeMap> {
    hysteresis_with_reference(thinned, thinned.data(), pct_lower, pct_upper)
}

/// Hysteresis on `thinned` with thresholds at percentiles of the nonzero `reference`
/// magnitudes.
pub fn hysteresis_with_reference(
    thinned: &Grid<f64>,
    reference: &[f64],
    pct_lower: f64,
    pct_upper: f64,
) -> Result<EdgeMap> {
    if !(0.0..=100.0).contains(&pct_lower) || !(0.0..=100.0).contains(&pct_upper) || pct_lower >= pct_upper {
        return Err(Error::invalid(format!(
            "percentiles must satisfy 0 <= lower < upper <= 100, got {pct_lower} and {pct_upper}"
        )));
    }
    let mut nonzero: Vec<f64> = reference.iter().copied().filter(|&m| m > MAGNITUDE_EPS).collect();
    let (w, h) = (thinned.width(), thinned.height());
    let mut edges = Grid::new(w, h, false);
    if nonzero.is_empty() {
        return Ok(EdgeMap {
            edges,
            t_lower: 0.0,
            t_upper: 0.0,
        });
    }
    nonzero.sort_by(f64::total_cmp);
    let t_lower = percentile(&nonzero, pct_lower);
    let t_upper = percentile(&nonzero, pct_upper);
    let lo = t_lower * (1.0 - THRESHOLD_SLACK);
    let hi = t_upper * (1.0 - THRESHOLD_SLACK);
    let weak = |m: f64| m > MAGNITUDE_EPS && m >= lo;

    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let m = *thinned.get(x, y);
            if m > MAGNITUDE_EPS && m >= hi {
                edges.set(x, y, true);
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (nx, ny) in neighbours8(x, y, w, h) {
            if !*edges.get(nx, ny) && weak(*thinned.get(nx, ny)) {
                edges.set(nx, ny, true);
                queue.push_back((nx, ny));
            }
        }
    }
    Ok(EdgeMap {
        edges,
        t_lower,
        t_upper,
    })
}

/// Dilation with a `ksize`×`ksize` square whose anchor is its top-left cell.
pub fn dilate_edges(map: &EdgeMap, ksize: usize) -> Result<EdgeMap> {
    if ksize == 0 {
        return Err(Error::invalid("dilation size must be at least 1"));
    }
    let (w, h) = (map.edges.width(), map.edges.height());
    let mut out = Grid::new(w, h, false);
    for y in 0..h {
        for x in 0..w {
            if *map.edges.get(x, y) {
                for yy in y..(y + ksize).min(h) {
                    for xx in x..(x + ksize).min(w) {
                        out.set(xx, yy, true);
                    }
                }
            }
        }
    }
    Ok(EdgeMap {
        edges: out,
        t_lower: map.t_lower,
        t_upper: map.t_upper,
    })
}

/// Smoothing, gradients, thinning and hysteresis (no dilation).
pub fn detect_edges(gray: &Grid<f64>, cfg: &CannyConfig) -> Result<EdgeMap> {
    let smooth = gaussian_smooth(gray, cfg.sigma, cfg.ksize)?;
    let g = sobel_gradients(&smooth);
    let thin = non_max_suppression(&g.magnitude, &g.direction)?;
    let reference = match cfg.threshold_source {
        ThresholdSource::Gradient => g.magnitude.data(),
        ThresholdSource::Thinned => thin.data(),
    };
    hysteresis_with_reference(&thin, reference, cfg.pct_lower, cfg.pct_upper)
}

pub(crate) fn neighbours8(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let (x, y) = (x as isize, y as isize);
    (-1..=1)
        .flat_map(move |dy| (-1..=1).map(move |dx| (x + dx, y + dy)))
        .filter(move |&(nx, ny)| (nx, ny) != (x, y) && nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize)
        .map(|(nx, ny)| (nx as usize, ny as usize))
}

pub(crate) fn neighbours4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let (x, y) = (x as isize, y as isize);
    [(0, -1), (-1, 0), (1, 0), (0, 1)]
        .into_iter()
        .map(move |(dx, dy)| (x + dx, y + dy))
        .filter(move |&(nx, ny)| nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize)
        .map(|(nx, ny)| (nx as usize, ny as usize))
}
