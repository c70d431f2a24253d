//! Agreement between a per-pixel attribution map and ground truth.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, ValueFunction};
use crate::raster::{read_image, Grid};

/// Inclusive pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    fn check(&self, width: usize, height: usize) -> Result<()> {
        if self.x0 > self.x1 || self.y0 > self.y1 || self.x1 >= width || self.y1 >= height {
            return Err(Error::invalid(format!(
                "bounding box {self:?} is empty or outside {width}x{height}"
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for BBox {
    type Err = Error;
    /// `x0,y0,x1,y1`
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("bounding box must be x0,y0,x1,y1, got {s:?}")))?;
        match v[..] {
            [x0, y0, x1, y1] => Ok(Self { x0, y0, x1, y1 }),
            _ => Err(Error::invalid(format!("bounding box must be x0,y0,x1,y1, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthMask {
    pub mask: Grid<bool>,
    pub bbox: Option<BBox>,
}

impl GroundTruthMask {
    pub fn new(mask: Grid<bool>, bbox: Option<BBox>) -> Result<Self> {
        if let Some(b) = bbox {
            b.check(mask.width(), mask.height())?;
            let hit = (b.y0..=b.y1).any(|y| (b.x0..=b.x1).any(|x| *mask.get(x, y)));
            if !hit {
                return Err(Error::invalid("bounding box contains no mask pixel"));
            }
        }
        Ok(Self { mask, bbox })
    }

    /// Reads a PGM/PNG mask; any nonzero pixel is positive.
    pub fn load(path: impl AsRef<Path>, bbox: Option<BBox>) -> Result<Self> {
        let img = read_image(path)?;
        let gray = img.to_gray();
        Self::new(gray.map(|&v| v > 0.0), bbox)
    }

    pub fn positives(&self) -> usize {
        self.mask.data().iter().filter(|&&m| m).count()
    }
}

fn same_shape(attr: &Grid<f64>, mask: &Grid<bool>) -> Result<()> {
    if !attr.same_shape(mask) {
        return Err(Error::invalid(format!(
            "attribution is {}x{}, mask is {}x{}",
            attr.width(),
            attr.height(),
            mask.width(),
            mask.height()
        )));
    }
    Ok(())
}

/// Pixel indices by descending attribution; equal values keep scan order.
pub fn rank_descending(attr: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..attr.len()).collect();
    order.sort_by(|&a, &b| attr[b].total_cmp(&attr[a]).then(a.cmp(&b)));
    order
}

/// Share of positive attribution mass that falls inside the mask.
pub fn ebpg(attr: &Grid<f64>, mask: &Grid<bool>) -> Result<f64> {
    same_shape(attr, mask)?;
    let (mut inside, mut total) = (0.0, 0.0);
    for (a, &m) in attr.data().iter().zip(mask.data()) {
        let e = a.max(0.0);
        total += e;
        if m {
            inside += e;
        }
    }
    Ok(if total > 0.0 { inside / total } else { 0.0 })
}

/// The `k` highest-attributed pixels as a binary map.
pub fn top_k_mask(attr: &Grid<f64>, k: usize) -> Grid<bool> {
    let mut out = Grid::new(attr.width(), attr.height(), false);
    for p in rank_descending(attr.data()).into_iter().take(k) {
        out.data_mut()[p] = true;
    }
    out
}

fn confusion(attr: &Grid<f64>, mask: &Grid<bool>) -> Result<(usize, usize, usize)> {
    same_shape(attr, mask)?;
    let k = mask.data().iter().filter(|&&m| m).count();
    if k == 0 {
        return Err(Error::invalid("ground-truth mask is empty"));
    }
    let pred = top_k_mask(attr, k);
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&p, &m) in pred.data().iter().zip(mask.data()) {
        match (p, m) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    Ok((tp, fp, fn_))
}

/// Intersection over union of the area-matched binarization and the mask.
pub fn miou(attr: &Grid<f64>, mask: &Grid<bool>) -> Result<f64> {
    let (tp, fp, fn_) = confusion(attr, mask)?;
    Ok(tp as f64 / (tp + fp + fn_) as f64)
}

/// Fraction of the top-n pixels (n = box area) that lie inside the box. Pixels tied
/// with the n-th value share the remaining slots in proportion.
pub fn bbox_score(attr: &Grid<f64>, bbox: &BBox) -> Result<f64> {
    bbox.check(attr.width(), attr.height())?;
    let n = bbox.area();
    let w = attr.width();
    let data = attr.data();
    let order = rank_descending(data);
    let cut = data[order[n - 1]];
    let inside = |p: usize| bbox.contains(p % w, p / w);
    let above: Vec<usize> = order.iter().copied().filter(|&p| data[p] > cut).collect();
    let tied: Vec<usize> = order.iter().copied().filter(|&p| data[p] == cut).collect();
    let slots = (n - above.len()) as f64;
    let tied_inside = tied.iter().filter(|&&p| inside(p)).count() as f64;
    let above_inside = above.iter().filter(|&&p| inside(p)).count() as f64;
    let hits = above_inside + tied_inside * slots / tied.len() as f64;
    Ok(hits / n as f64)
}

/// F1 of the area-matched binarization, and the rank AUC of attribution against the mask.
pub fn f1_and_auc(attr: &Grid<f64>, mask: &Grid<bool>) -> Result<(f64, f64)> {
    same_shape(attr, mask)?;
    let pos = mask.data().iter().filter(|&&m| m).count();
    let neg = mask.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("mask must contain both positive and negative pixels"));
    }
    let (tp, fp, fn_) = confusion(attr, mask)?;
    let f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;

    // Mann-Whitney U with mid-ranks for ties.
    let mut order: Vec<usize> = (0..attr.len()).collect();
    order.sort_by(|&a, &b| attr.data()[a].total_cmp(&attr.data()[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && attr.data()[order[j + 1]] == attr.data()[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &p in &order[i..=j] {
            if mask.data()[p] {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok((f1, u / (pos as f64 * neg as f64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AopcParams {
    pub max_fraction: f64,
    pub steps: usize,
}

impl Default for AopcParams {
    fn default() -> Self {
        Self {
            max_fraction: 0.1,
            steps: 10,
        }
    }
}

/// Number of pixels removed at each step `1..=steps`.
pub fn aopc_removal_counts(n: usize, params: &AopcParams) -> Vec<usize> {
    (1..=params.steps)
        .map(|k| ((k as f64 / params.steps as f64) * params.max_fraction * n as f64).round() as usize)
        .map(|c| c.min(n))
        .collect()
}

/// Mean drop of the game value as the most-attributed pixels are removed.
pub fn aopc<V: ValueFunction<f64> + ?Sized>(vf: &V, attr: &[f64], params: &AopcParams) -> Result<f64> {
    aopc_with_order(vf, &rank_descending(attr), params)
}

/// AOPC for an explicit removal order.
pub fn aopc_with_order<V: ValueFunction<f64> + ?Sized>(vf: &V, order: &[usize], params: &AopcParams) -> Result<f64> {
    let n = vf.n_features();
    if order.len() != n {
        return Err(Error::invalid(format!(
            "ordering has {} entries for {n} features",
            order.len()
        )));
    }
    if params.steps == 0 {
        return Err(Error::invalid("AOPC needs at least one step"));
    }
    if !(0.0..=1.0).contains(&params.max_fraction) {
        return Err(Error::invalid("AOPC max fraction must lie in [0, 1]"));
    }
    let full = CoalitionMask::full(n);
    let f_full = vf.evaluate(&full);
    let drops: Vec<f64> = aopc_removal_counts(n, params)
        .par_iter()
        .map(|&c| {
            let mut kept = full.clone();
            for &p in &order[..c] {
                kept = kept.without(p);
            }
            f_full - vf.evaluate(&kept)
        })
        .collect();
    Ok(drops.iter().sum::<f64>() / params.steps as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ebpg: f64,
    pub miou: f64,
    pub bbox: Option<f64>,
    pub f1: f64,
    pub auc: f64,
    pub aopc: Option<f64>,
    pub binarization: String,
    pub aopc_params: Option<AopcParams>,
    pub mask_positives: usize,
    pub pixels: usize,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "ebpg,miou,bbox,f1,auc,aopc";

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{}",
            self.ebpg,
            self.miou,
            opt(self.bbox),
            self.f1,
            self.auc,
            opt(self.aopc)
        )
    }
}

/// Every mask-based metric; AOPC needs a game and is added by the caller.
pub fn evaluate_metrics(attr: &Grid<f64>, truth: &GroundTruthMask) -> Result<MetricsReport> {
    let (f1, auc) = f1_and_auc(attr, &truth.mask)?;
    Ok(MetricsReport {
        ebpg: ebpg(attr, &truth.mask)?,
        miou: miou(attr, &truth.mask)?,
        bbox: truth.bbox.map(|b| bbox_score(attr, &b)).transpose()?,
        f1,
        auc,
        aopc: None,
        binarization: "top-k, k = mask area".into(),
        aopc_params: None,
        mask_positives: truth.positives(),
        pixels: attr.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize, v: Vec<f64>) -> Grid<f64> {
        Grid::from_vec(w, h, v).unwrap()
    }

    fn mask(w: usize, h: usize, on: &[usize]) -> Grid<bool> {
        let mut m = Grid::new(w, h, false);
        for &p in on {
            m.data_mut()[p] = true;
        }
        m
    }

    #[test]
    fn perfect_attribution() {
        let m = mask(4, 4, &[5, 6, 9, 10]);
        let a = m.map(|&b| b as u8 as f64);
        assert_eq!(miou(&a, &m).unwrap(), 1.0);
        assert_eq!(f1_and_auc(&a, &m).unwrap(), (1.0, 1.0));
        assert_eq!(ebpg(&a, &m).unwrap(), 1.0);
    }

    #[test]
    fn half_overlap_iou() {
        let m = mask(4, 1, &[0, 1]);
        let a = grid(4, 1, vec![0.0, 1.0, 1.0, 0.0]);
        assert!((miou(&a, &m).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_ranking_has_zero_auc() {
        let m = mask(4, 1, &[0, 1]);
        let a = grid(4, 1, vec![0.0, 0.1, 0.5, 0.9]);
        assert_eq!(f1_and_auc(&a, &m).unwrap().1, 0.0);
    }

    #[test]
    fn uniform_attribution() {
        let m = mask(4, 4, &[0, 1, 4, 5]);
        let a = grid(4, 4, vec![1.0; 16]);
        assert_eq!(ebpg(&a, &m).unwrap(), 0.25);
        assert_eq!(f1_and_auc(&a, &m).unwrap().1, 0.5);
        let b = BBox {
            x0: 0,
            y0: 0,
            x1: 1,
            y1: 1,
        };
        assert_eq!(bbox_score(&a, &b).unwrap(), 0.25);
    }

    #[test]
    fn negative_energy_only() {
        let m = mask(2, 1, &[0]);
        assert_eq!(ebpg(&grid(2, 1, vec![-1.0, -2.0]), &m).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let m = mask(2, 2, &[]);
        let a = grid(2, 2, vec![0.0; 4]);
        assert!(miou(&a, &m).is_err());
        assert!(f1_and_auc(&a, &mask(2, 2, &[0, 1, 2, 3])).is_err());
        assert!(ebpg(&grid(1, 4, vec![0.0; 4]), &m).is_err());
        assert!(bbox_score(
            &a,
            &BBox {
                x0: 1,
                y0: 0,
                x1: 0,
                y1: 0
            }
        )
        .is_err());
        assert!("1,2,3".parse::<BBox>().is_err());
    }

    #[test]
    fn half_of_top_n_inside() {
        let a = grid(4, 1, vec![1.0, 0.0, 2.0, 0.0]);
        let b = BBox {
            x0: 0,
            y0: 0,
            x1: 1,
            y1: 0,
        };
        assert_eq!(bbox_score(&a, &b).unwrap(), 0.5);
    }
}
