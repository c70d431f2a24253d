//! Synthetic games with known attributions and small deterministic image scorers.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BaselineMode, CoalitionMask, TableGame, ValueFunction, TABLE_GAME_MAX_FEATURES};
use crate::raster::Image;
use crate::scalar::Scalar;

/// Parameters of a synthetic game, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameSpec {
    /// `v(S) = Σ_{i∈S} c_i`.
    Additive { weights: Vec<f64> },
    /// `v(S) = 1` when `carrier ⊆ S`.
    Unanimity { n: usize, carrier: Vec<usize> },
    /// `v(S) = 1` when `S` holds a strict majority of the `n` players.
    Majority { n: usize },
    /// `v(S) = Σ c` over listed pairs with both ends in `S`.
    CrossGroupInteraction { n: usize, pairs: Vec<(usize, usize, f64)> },
    /// Independent uniform `[-1, 1]` value per coalition, `v(∅) = 0`.
    RandomSeeded { n: usize, seed: u64 },
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// A game built from a [`GameSpec`]; evaluates in any [`Scalar`].
#[derive(Clone, Debug)]
pub struct SyntheticGame {
    spec: GameSpec,
    n: usize,
    table: Option<TableGame<f64>>,
}

pub fn make_synthetic_game(spec: GameSpec) -> Result<SyntheticGame> {
    let n = match &spec {
        GameSpec::Additive { weights } => weights.len(),
        GameSpec::Unanimity { n, carrier } => {
            if carrier.is_empty() || carrier.iter().any(|&i| i >= *n) {
                return Err(Error::invalid(
                    "unanimity carrier must be a non-empty subset of the players",
                ));
            }
            *n
        }
        GameSpec::Majority { n } => *n,
        GameSpec::CrossGroupInteraction { n, pairs } => {
            if pairs.iter().any(|&(a, b, _)| a >= *n || b >= *n || a == b) {
                return Err(Error::invalid("interaction pairs must join two distinct players"));
            }
            *n
        }
        GameSpec::RandomSeeded { n, .. } => {
            if *n > TABLE_GAME_MAX_FEATURES {
                return Err(Error::invalid(format!(
                    "random games are tabulated; at most {TABLE_GAME_MAX_FEATURES} players"
                )));
            }
            *n
        }
    };
    if n == 0 {
        return Err(Error::invalid("a game needs at least one player"));
    }
    let table = match &spec {
        GameSpec::RandomSeeded { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut values: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            values[0] = 0.0;
            Some(TableGame::new(*n, values)?)
        }
        _ => None,
    };
    Ok(SyntheticGame { spec, n, table })
}

impl SyntheticGame {
    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn value(&self, s: &CoalitionMask) -> f64 {
        match &self.spec {
            GameSpec::Additive { weights } => s.iter().map(|i| weights[i]).sum(),
            GameSpec::Unanimity { carrier, .. } => carrier.iter().all(|&i| s.contains(i)) as u8 as f64,
            GameSpec::Majority { n } => (2 * s.count() > *n) as u8 as f64,
            GameSpec::CrossGroupInteraction { pairs, .. } => pairs
                .iter()
                .filter(|&&(a, b, _)| s.contains(a) && s.contains(b))
                .map(|&(_, _, c)| c)
                .sum(),
            GameSpec::RandomSeeded { .. } => *self.table.as_ref().expect("tabulated").value_of_bits(s.low_bits()),
        }
    }

    /// Shapley values known in closed form, where the kind has one.
    pub fn closed_form_shapley(&self) -> Option<Vec<f64>> {
        let n = self.n;
        match &self.spec {
            GameSpec::Additive { weights } => Some(weights.clone()),
            GameSpec::Unanimity { carrier, .. } => {
                let set: BTreeSet<usize> = carrier.iter().copied().collect();
                let share = 1.0 / set.len() as f64;
                Some((0..n).map(|i| if set.contains(&i) { share } else { 0.0 }).collect())
            }
            GameSpec::Majority { n } => Some(vec![1.0 / *n as f64; *n]),
            GameSpec::CrossGroupInteraction { pairs, .. } => {
                let mut phi = vec![0.0; n];
                for &(a, b, c) in pairs {
                    phi[a] += c / 2.0;
                    phi[b] += c / 2.0;
                }
                Some(phi)
            }
            GameSpec::RandomSeeded { .. } => None,
        }
    }
}

impl<T: Scalar> ValueFunction<T> for SyntheticGame {
    fn n_features(&self) -> usize {
        self.n
    }

    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        T::from_real(self.value(coalition))
    }
}

/// Built-in scorers over masked images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyScorer {
    /// `Σ w_p · x_p` over the intensities of the masked image.
    PixelSumWeighted { weights: Vec<f64> },
    /// Mean masked intensity over a fixed set of pixels.
    TemplateMean { region: Vec<usize> },
    /// Number of regions whose pixels are all retained.
    GroupAnd { regions: Vec<Vec<usize>> },
    /// Mean original intensity of the retained pixels; the baseline intensity when none are.
    RetainedMean,
}

/// Pixel game of an image under a [`ToyScorer`].
#[derive(Clone, Debug)]
pub struct ToyImageGame {
    scorer: ToyScorer,
    intensity: Vec<f64>,
    baseline: Vec<f64>,
}

impl ToyImageGame {
    pub fn new(image: &Image, mode: BaselineMode, scorer: ToyScorer) -> Result<Self> {
        let n = image.pixel_count();
        let in_range = |p: &usize| *p < n;
        match &scorer {
            ToyScorer::PixelSumWeighted { weights } if weights.len() != n => {
                return Err(Error::invalid(format!("{} weights for {n} pixels", weights.len())));
            }
            ToyScorer::TemplateMean { region } if region.is_empty() || !region.iter().all(in_range) => {
                return Err(Error::invalid("template region must be a non-empty set of pixels"));
            }
            ToyScorer::GroupAnd { regions } => validate_regions(regions, n)?,
            _ => {}
        }
        let intensity: Vec<f64> = (0..n).map(|p| image.intensity(p)).collect();
        let base = mode.values_for(image);
        let base_intensity = if base.len() == 3 {
            crate::raster::LUMA_WEIGHTS.iter().zip(&base).map(|(w, v)| w * v).sum()
        } else {
            base[0]
        };
        Ok(Self {
            scorer,
            intensity,
            baseline: vec![base_intensity; n],
        })
    }

    pub fn scorer(&self) -> &ToyScorer {
        &self.scorer
    }

    fn masked(&self, s: &CoalitionMask, p: usize) -> f64 {
        if s.contains(p) {
            self.intensity[p]
        } else {
            self.baseline[p]
        }
    }
}

impl ValueFunction<f64> for ToyImageGame {
    fn n_features(&self) -> usize {
        self.intensity.len()
    }

    fn evaluate(&self, s: &CoalitionMask) -> f64 {
        match &self.scorer {
            ToyScorer::PixelSumWeighted { weights } => {
                weights.iter().enumerate().map(|(p, w)| w * self.masked(s, p)).sum()
            }
            ToyScorer::TemplateMean { region } => {
                region.iter().map(|&p| self.masked(s, p)).sum::<f64>() / region.len() as f64
            }
            ToyScorer::GroupAnd { regions } => {
                regions.iter().filter(|r| r.iter().all(|&p| s.contains(p))).count() as f64
            }
            ToyScorer::RetainedMean => match s.count() {
                0 => self.baseline[0],
                k => s.iter().map(|p| self.intensity[p]).sum::<f64>() / k as f64,
            },
        }
    }
}

fn validate_regions(regions: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in regions {
        if r.is_empty() {
            return Err(Error::invalid("group regions must be non-empty"));
        }
        for &p in r {
            if p >= n {
                return Err(Error::invalid(format!("pixel {p} outside a {n}-pixel image")));
            }
            if !seen.insert(p) {
                return Err(Error::invalid(format!("pixel {p} appears in two regions")));
            }
        }
    }
    Ok(())
}

/// Scorer that pays 1 per region whose pixels are all kept.
pub fn make_group_and_scorer(regions: Vec<Vec<usize>>, n_pixels: usize) -> Result<ToyScorer> {
    validate_regions(&regions, n_pixels)?;
    Ok(ToyScorer::GroupAnd { regions })
}

/// Pixel indices of the rectangle `x0..=x1 × y0..=y1` in an image of width `width`.
pub fn rect_pixels(width: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Vec<usize> {
    (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| y * width + x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapley::exact_shapley;

    fn shapley(spec: GameSpec) -> Vec<f64> {
        exact_shapley::<f64, _>(&make_synthetic_game(spec).unwrap())
            .unwrap()
            .scores
    }

    #[test]
    fn unanimity_on_two_of_four() {
        let phi = shapley(GameSpec::Unanimity {
            n: 4,
            carrier: vec![0, 1],
        });
        let want = [0.5, 0.5, 0.0, 0.0];
        assert!(phi.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn majority_of_three() {
        let phi = shapley(GameSpec::Majority { n: 3 });
        assert!(phi.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn random_games_repeat_with_the_seed() {
        let a = make_synthetic_game(GameSpec::RandomSeeded { n: 5, seed: 9 }).unwrap();
        let b = make_synthetic_game(GameSpec::RandomSeeded { n: 5, seed: 9 }).unwrap();
        let c = make_synthetic_game(GameSpec::RandomSeeded { n: 5, seed: 10 }).unwrap();
        assert_eq!(a.table, b.table);
        assert_ne!(a.table, c.table);
        assert_eq!(a.value(&CoalitionMask::empty(5)), 0.0);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = GameSpec::CrossGroupInteraction {
            n: 4,
            pairs: vec![(0, 3, 2.0)],
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"cross_group_interaction\""));
        assert_eq!(GameSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn group_and_needs_the_whole_region() {
        let img = Image::new(4, 4, 1, vec![0.0; 16]).unwrap();
        let region = rect_pixels(4, 1, 1, 2, 2);
        let scorer = make_group_and_scorer(vec![region.clone()], 16).unwrap();
        let game = ToyImageGame::new(&img, BaselineMode::Zero, scorer).unwrap();
        assert_eq!(game.evaluate(&CoalitionMask::full(16)), 1.0);
        let partial = CoalitionMask::from_indices(16, region[1..].iter().copied());
        assert_eq!(game.evaluate(&partial), 0.0);
        assert!(make_group_and_scorer(vec![vec![1, 2], vec![2, 3]], 16).is_err());
    }

    #[test]
    fn retained_mean_ignores_dropped_pixels() {
        let img = Image::new(2, 1, 1, vec![40.0, 240.0]).unwrap();
        let game = ToyImageGame::new(&img, BaselineMode::Mean, ToyScorer::RetainedMean).unwrap();
        assert_eq!(game.evaluate(&CoalitionMask::from_indices(2, [1])), 240.0);
        assert_eq!(game.evaluate(&CoalitionMask::full(2)), 140.0);
        assert_eq!(game.evaluate(&CoalitionMask::empty(2)), 140.0);
    }
}
