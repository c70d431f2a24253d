use crate::error::Result;
use crate::game::BaselineMode;
use crate::hierarchy_tools::{axis_aligned_hierarchy, check_t_property, TPropertyReport};
use crate::models::{ToyImageGame, ToyScorer};
use crate::owen::PartitionHierarchy;
use crate::raster::Image;
use crate::segmentation::{build_hierarchy, BuiltHierarchy, HierarchyConfig};

pub const COUNTEREXAMPLE_SIZE: usize = 32;
pub const COUNTEREXAMPLE_TAU: f64 = 140.0;

/// A bright object straddling tile borders, scored by mean retained intensity.
pub struct Counterexample {
    pub image: Image,
    pub game: ToyImageGame,
    pub tau: f64,
    pub axis_aligned: PartitionHierarchy,
    pub axis_report: TPropertyReport,
    pub built: BuiltHierarchy,
    pub built_report: TPropertyReport,
}

/// 32×32 image, background 40, a 6×6 object of 240 at x,y ∈ 9..15.
///
/// The object fills most of the 8×8 tile at (8, 8), which therefore scores above
/// `tau`, while that tile's 16×16 parent is mostly background and scores far below it.
/// The edge-driven hierarchy keeps the object as one segment and passes.
pub fn prop4_counterexample() -> Result<Counterexample> {
    let size = COUNTEREXAMPLE_SIZE;
    let image = Image::gray_from_fn(size, size, |x, y| {
        if (9..15).contains(&x) && (9..15).contains(&y) {
            240.0
        } else {
            40.0
        }
    })?;
    let game = ToyImageGame::new(&image, BaselineMode::Mean, ToyScorer::RetainedMean)?;
    let tau = COUNTEREXAMPLE_TAU;
    let axis_aligned = axis_aligned_hierarchy(size, size, &[2, 2, 2])?;
    let axis_report = check_t_property(&axis_aligned, &game, tau)?;
    let built = build_hierarchy(&image, &game, &HierarchyConfig::default())?;
    let built_report = check_t_property(&built.hierarchy, &game, tau)?;
    Ok(Counterexample {
        image,
        game,
        tau,
        axis_aligned,
        axis_report,
        built,
        built_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_fails_and_built_passes() {
        let c = prop4_counterexample().unwrap();
        assert!(!c.axis_report.pass);
        assert!(c.built_report.pass, "{:?}", c.built_report.violations);
        let v = &c.axis_report.violations[0];
        assert!((v.child_score - 152.5).abs() < 1e-9);
        assert!((v.parent_score - 17440.0 / 256.0).abs() < 1e-9);
        let parent = c.axis_aligned.node(v.parent);
        assert_eq!(parent.members.len(), 256);
        assert_eq!(parent.members[0], 0);
    }
}
