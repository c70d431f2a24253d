use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, ValueFunction};
use crate::raster::Image;

/// Value substituted for pixels outside the coalition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// Per-channel mean of the image.
    #[default]
    Mean,
    Zero,
}

impl std::str::FromStr for BaselineMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "zero" => Ok(Self::Zero),
            other => Err(Error::invalid(format!("unknown baseline mode {other:?}"))),
        }
    }
}

impl BaselineMode {
    pub fn values_for(self, image: &Image) -> Vec<f64> {
        match self {
            Self::Mean => image.channel_means(),
            Self::Zero => vec![0.0; image.channels()],
        }
    }
}

/// Game over the pixels of an image: a coalition keeps its pixels, every other pixel is
/// replaced by the baseline, and the scorer is applied to the result.
pub struct MaskedImageGame<S> {
    image: Image,
    baseline: Vec<f64>,
    mode: BaselineMode,
    scorer: S,
}

/// Builds the pixel game for `image`. The scorer must be a pure function of the image.
pub fn make_masked_image_game<S>(image: Image, mode: BaselineMode, scorer: S) -> Result<MaskedImageGame<S>>
where
    S: Fn(&Image) -> f64 + Send + Sync,
{
    if image.pixel_count() == 0 {
        return Err(Error::invalid("zero-sized image"));
    }
    let baseline = mode.values_for(&image);
    Ok(MaskedImageGame {
        image,
        baseline,
        mode,
        scorer,
    })
}

impl<S> MaskedImageGame<S>
where
    S: Fn(&Image) -> f64 + Send + Sync,
{
    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    pub fn baseline_mode(&self) -> BaselineMode {
        self.mode
    }

    /// The perturbed input seen by the scorer for `coalition`.
    pub fn masked_image(&self, coalition: &CoalitionMask) -> Image {
        let c = self.image.channels();
        let mut data = Vec::with_capacity(self.image.data().len());
        for _ in 0..self.image.pixel_count() {
            data.extend_from_slice(&self.baseline);
        }
        for p in coalition.iter() {
            data[p * c..(p + 1) * c].copy_from_slice(self.image.pixel(p));
        }
        Image::new(self.image.width(), self.image.height(), c, data).expect("same shape as source")
    }

    pub fn score_image(&self, image: &Image) -> f64 {
        (self.scorer)(image)
    }
}

impl<S> ValueFunction<f64> for MaskedImageGame<S>
where
    S: Fn(&Image) -> f64 + Send + Sync,
{
    fn n_features(&self) -> usize {
        self.image.pixel_count()
    }

    fn evaluate(&self, coalition: &CoalitionMask) -> f64 {
        (self.scorer)(&self.masked_image(coalition))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixel_sum(img: &Image) -> f64 {
        img.data().iter().sum()
    }

    #[test]
    fn white_image_zero_baseline() {
        let img = Image::new(2, 2, 1, vec![255.0; 4]).unwrap();
        let game = make_masked_image_game(img, BaselineMode::Zero, pixel_sum).unwrap();
        assert_eq!(game.evaluate(&CoalitionMask::full(4)), 4.0 * 255.0);
        assert_eq!(game.evaluate(&CoalitionMask::empty(4)), 0.0);
    }

    #[test]
    fn mean_baseline_single_pixel() {
        // Pixels 10,20,30,40 have mean 25; keeping (0,0) gives 10 + 3*25.
        let img = Image::new(2, 2, 1, vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let game = make_masked_image_game(img, BaselineMode::Mean, pixel_sum).unwrap();
        assert_eq!(game.evaluate(&CoalitionMask::from_indices(4, [0])), 85.0);
        assert_eq!(game.evaluate(&CoalitionMask::empty(4)), 100.0);
    }

    #[test]
    fn full_mask_scores_the_original_image() {
        let img = Image::new(3, 1, 3, (0..9).map(f64::from).collect()).unwrap();
        let game = make_masked_image_game(img.clone(), BaselineMode::Mean, pixel_sum).unwrap();
        assert_eq!(game.evaluate(&CoalitionMask::full(3)), pixel_sum(&img));
        let mean_img = Image::new(3, 1, 3, [3.0, 4.0, 5.0].repeat(3)).unwrap();
        assert_eq!(game.evaluate(&CoalitionMask::empty(3)), pixel_sum(&mean_img));
    }

    #[test]
    fn nonnegative_linear_scorer_is_monotone() {
        let img = Image::gray_from_fn(3, 3, |x, y| (x * 30 + y * 7) as f64).unwrap();
        let weights: Vec<f64> = (0..9).map(|i| (i % 4) as f64).collect();
        let w = weights.clone();
        let game = make_masked_image_game(img, BaselineMode::Zero, move |im: &Image| {
            im.data().iter().zip(&w).map(|(a, b)| a * b).sum()
        })
        .unwrap();
        for s in 0..512u64 {
            for t in 0..512u64 {
                if s & !t == 0 {
                    let fs = game.evaluate(&CoalitionMask::from_bits(9, s));
                    let ft = game.evaluate(&CoalitionMask::from_bits(9, t));
                    assert!(fs <= ft);
                }
            }
        }
    }

    #[test]
    fn evaluation_is_bit_identical() {
        let img = Image::gray_from_fn(4, 4, |x, y| ((x * 13 + y * 29) % 256) as f64 / 3.0).unwrap();
        let game = make_masked_image_game(img, BaselineMode::Mean, |im: &Image| {
            im.data().iter().map(|v| v.sqrt()).sum()
        })
        .unwrap();
        for bits in 0..1u64 << 16 {
            let m = CoalitionMask::from_bits(16, bits);
            if bits % 97 == 0 {
                assert_eq!(game.evaluate(&m).to_bits(), game.evaluate(&m).to_bits());
            }
        }
    }
}
