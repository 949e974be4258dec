//! Face landmark point sets: midpoint augmentation, k-NN hypergraph
//! construction and colour-space conversion.

use std::fmt;
use std::io::BufRead;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

/// Number of landmarks produced by the standard 68-point face annotation.
pub const N_LANDMARKS: usize = 68;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
    Depth,
    Hue,
    Saturation,
    Value,
}

/// Ordered list of the per-point signal channels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChannelLayout(pub Vec<Channel>);

impl ChannelLayout {
    pub fn rgb_depth() -> Self {
        Self(vec![Channel::R, Channel::G, Channel::B, Channel::Depth])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, c: Channel) -> Option<usize> {
        self.0.iter().position(|&x| x == c)
    }

    pub fn indices_of(&self, cs: &[Channel]) -> Result<Vec<usize>> {
        cs.iter()
            .map(|&c| {
                self.index_of(c)
                    .ok_or_else(|| Error::InvalidPoints(format!("channel {c:?} missing from layout {self}")))
            })
            .collect()
    }
}

impl fmt::Display for ChannelLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|c| format!("{c:?}")).collect();
        write!(f, "[{}]", names.join(","))
    }
}

/// Points with coordinates (one row each) and per-point channel values.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Array2<f64>,
    channels: Array2<f64>,
    layout: ChannelLayout,
}

impl PointSet {
    pub fn new(coords: Array2<f64>, channels: Array2<f64>, layout: ChannelLayout) -> Result<Self> {
        if coords.nrows() != channels.nrows() {
            return Err(Error::InvalidPoints(format!(
                "{} coordinates but {} channel rows",
                coords.nrows(),
                channels.nrows()
            )));
        }
        if channels.ncols() != layout.len() {
            return Err(Error::InvalidPoints(format!(
                "{} channel columns for layout {layout}",
                channels.ncols()
            )));
        }
        if coords.iter().chain(channels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoints("non-finite coordinate or channel".into()));
        }
        Ok(Self { coords, channels, layout })
    }

    /// Points without any channels.
    pub fn from_coords(coords: Array2<f64>) -> Self {
        let n = coords.nrows();
        Self {
            coords,
            channels: Array2::zeros((n, 0)),
            layout: ChannelLayout::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    pub fn coords(&self) -> ArrayView2<'_, f64> {
        self.coords.view()
    }

    pub fn channels(&self) -> ArrayView2<'_, f64> {
        self.channels.view()
    }

    pub fn layout(&self) -> &ChannelLayout {
        &self.layout
    }

    /// Columns of the named channels, in the requested order.
    pub fn select_channels(&self, cs: &[Channel]) -> Result<Array2<f64>> {
        let idx = self.layout.indices_of(cs)?;
        Ok(self.channels.select(ndarray::Axis(1), &idx))
    }

    /// Same points with coordinates replaced.
    pub fn with_coords(&self, coords: Array2<f64>) -> Result<Self> {
        Self::new(coords, self.channels.clone(), self.layout.clone())
    }

    /// Rows reordered so that point `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = self.coords.clone();
        let mut channels = self.channels.clone();
        for (i, &p) in perm.iter().enumerate() {
            coords.row_mut(p).assign(&self.coords.row(i));
            channels.row_mut(p).assign(&self.channels.row(i));
        }
        Self {
            coords,
            channels,
            layout: self.layout.clone(),
        }
    }

    /// The first `n` points.
    pub fn head(&self, n: usize) -> Self {
        Self {
            coords: self.coords.slice(s![..n, ..]).to_owned(),
            channels: self.channels.slice(s![..n, ..]).to_owned(),
            layout: self.layout.clone(),
        }
    }
}

fn sq_dist(coords: ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    coords
        .row(i)
        .iter()
        .zip(coords.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The `k` nearest other points to each point under squared Euclidean
/// distance, ties going to the smaller index.
pub fn knn_indices(coords: ArrayView2<'_, f64>, k: usize) -> Vec<Vec<usize>> {
    let n = coords.nrows();
    (0..n)
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (sq_dist(coords, i, j), j)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            let k = k.min(cand.len());
            if k < cand.len() {
                cand.select_nth_unstable_by(k, cmp);
                cand.truncate(k);
            }
            cand.sort_unstable_by(cmp);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub k_interp: usize,
    pub dedup_tolerance: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            k_interp: 1,
            dedup_tolerance: 0.5,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_interp < 1 {
            return Err(Error::Config("k_interp must be >= 1".into()));
        }
        if !(self.dedup_tolerance >= 0.0) {
            return Err(Error::Config("dedup_tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Which parent pairs generate the interpolated points, in output order.
///
/// Planning on a reference face and applying the same plan to every sample
/// keeps vertex counts and vertex correspondence identical across samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub n_original: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl AugmentationPlan {
    /// Finds neighbouring pairs and drops those whose midpoint lies within
    /// `dedup_tolerance` of an earlier point (original or midpoint).
    pub fn build(pts: &PointSet, cfg: &AugmentationConfig) -> Result<Self> {
        cfg.validate()?;
        let n = pts.len();
        if n < 2 {
            return Err(Error::InvalidPoints(format!("augmentation needs >= 2 points, got {n}")));
        }
        let coords = pts.coords();
        let knn = knn_indices(coords, cfg.k_interp.min(n - 1));
        let mut candidates: Vec<(usize, usize)> = knn
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i.min(j), i.max(j))))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let tol2 = cfg.dedup_tolerance * cfg.dedup_tolerance;
        let mut kept: Vec<Vec<f64>> = coords.rows().into_iter().map(|r| r.to_vec()).collect();
        let mut pairs = Vec::new();
        for (i, j) in candidates {
            let mid: Vec<f64> = coords.row(i).iter().zip(coords.row(j)).map(|(a, b)| 0.5 * (a + b)).collect();
            let collides = kept
                .iter()
                .any(|p| p.iter().zip(&mid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= tol2);
            if !collides {
                kept.push(mid);
                pairs.push((i, j));
            }
        }
        Ok(Self { n_original: n, pairs })
    }

    pub fn total(&self) -> usize {
        self.n_original + self.pairs.len()
    }

    /// Keeps only the first `total - n_original` midpoints.
    pub fn truncated(mut self, total: usize) -> Self {
        self.pairs.truncate(total.saturating_sub(self.n_original));
        self
    }

    /// Appends the planned midpoints to `pts`, averaging coordinates and channels.
    pub fn apply(&self, pts: &PointSet) -> Result<PointSet> {
        if pts.len() != self.n_original {
            return Err(Error::InvalidPoints(format!(
                "plan expects {} points, got {}",
                self.n_original,
                pts.len()
            )));
        }
        let total = self.total();
        let mut coords = Array2::zeros((total, pts.coords.ncols()));
        let mut channels = Array2::zeros((total, pts.channels.ncols()));
        coords.slice_mut(s![..self.n_original, ..]).assign(&pts.coords);
        channels.slice_mut(s![..self.n_original, ..]).assign(&pts.channels);
        for (m, &(i, j)) in self.pairs.iter().enumerate() {
            let row = self.n_original + m;
            for (dst, (a, b)) in coords.row_mut(row).iter_mut().zip(pts.coords.row(i).iter().zip(pts.coords.row(j))) {
                *dst = (a + b) / 2.0;
            }
            for (dst, (a, b)) in channels
                .row_mut(row)
                .iter_mut()
                .zip(pts.channels.row(i).iter().zip(pts.channels.row(j)))
            {
                *dst = (a + b) / 2.0;
            }
        }
        PointSet::new(coords, channels, pts.layout.clone())
    }
}

/// Originals first, then de-duplicated midpoints of k-NN pairs ordered by `(i, j)`.
pub fn augment_landmarks(pts: &PointSet, cfg: &AugmentationConfig) -> Result<PointSet> {
    AugmentationPlan::build(pts, cfg)?.apply(pts)
}

/// Smallest `k_interp` in `1..=10` whose augmented count reaches `target_total`.
///
/// Returns `(k_interp, achieved_count)`.
pub fn calibrate_k_interp(template: &PointSet, target_total: usize, dedup_tolerance: f64) -> Result<(usize, usize)> {
    const RANGE: (usize, usize) = (1, 10);
    let mut best = 0;
    for k in RANGE.0..=RANGE.1 {
        let cfg = AugmentationConfig {
            k_interp: k,
            dedup_tolerance,
        };
        let count = AugmentationPlan::build(template, &cfg)?.total();
        if count >= target_total {
            return Ok((k, count));
        }
        best = best.max(count);
    }
    Err(Error::Calibration {
        lo: RANGE.0,
        hi: RANGE.1,
        target: target_total,
        best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergraphConfig {
    pub k_nn: usize,
}

/// One unit-weight hyperedge per point: the point and its `k_nn` nearest neighbours.
pub fn build_knn_hypergraph(pts: &PointSet, cfg: &HypergraphConfig) -> Result<Hypergraph> {
    let n = pts.len();
    if cfg.k_nn < 1 || n <= cfg.k_nn {
        return Err(Error::Config(format!("k_nn = {} needs 1 <= k_nn < n_points = {n}", cfg.k_nn)));
    }
    let edges = knn_indices(pts.coords(), cfg.k_nn)
        .into_iter()
        .enumerate()
        .map(|(i, mut nbrs)| {
            nbrs.push(i);
            nbrs
        })
        .collect();
    Hypergraph::with_unit_weights(n, edges)
}

/// Hexagonal RGB to HSV with every component in `[0, 1]`.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    ((hue / 6.0).rem_euclid(1.0), sat, max)
}

/// Appends Hue, Saturation and Value channels computed from R, G, B.
pub fn rgb_to_hsv_channels(pts: &PointSet) -> Result<PointSet> {
    let rgb = pts.layout.indices_of(&[Channel::R, Channel::G, Channel::B])?;
    let n = pts.len();
    let c = pts.channels.ncols();
    let mut channels = Array2::zeros((n, c + 3));
    channels.slice_mut(s![.., ..c]).assign(&pts.channels);
    for i in 0..n {
        let row = pts.channels.row(i);
        let (h, s_, v) = rgb_to_hsv(row[rgb[0]], row[rgb[1]], row[rgb[2]]);
        channels[[i, c]] = h;
        channels[[i, c + 1]] = s_;
        channels[[i, c + 2]] = v;
    }
    let mut layout = pts.layout.clone();
    layout.0.extend([Channel::Hue, Channel::Saturation, Channel::Value]);
    PointSet::new(pts.coords.clone(), channels, layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Print,
    Replay,
    Mask,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Genuine, Label::Print, Label::Replay, Label::Mask];

    pub fn is_genuine(self) -> bool {
        self == Label::Genuine
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::Print => "print",
            Label::Replay => "replay",
            Label::Mask => "mask",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkPoint {
    pub xy: [f64; 2],
    pub rgb: [f64; 3],
    pub depth: f64,
}

/// One line of a landmark sample file.
///
/// `subject` is optional on input; samples without it are treated as their
/// own subject when splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSample {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub label: Label,
    pub points: Vec<LandmarkPoint>,
}

impl LandmarkSample {
    pub fn subject_id(&self) -> &str {
        self.subject.as_deref().unwrap_or(&self.id)
    }

    /// Checks point count and value ranges.
    pub fn validate(&self) -> Result<()> {
        if self.points.len() < N_LANDMARKS {
            return Err(Error::InvalidPoints(format!(
                "sample {} has {} points, need at least {N_LANDMARKS}",
                self.id,
                self.points.len()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            let unit = p.rgb.iter().chain(std::iter::once(&p.depth)).all(|v| (0.0..=1.0).contains(v));
            if !p.xy.iter().all(|v| v.is_finite()) || !unit {
                return Err(Error::InvalidPoints(format!("sample {} point {i} out of range", self.id)));
            }
        }
        Ok(())
    }

    /// Coordinates `(x, y)` with channels `[R, G, B, Depth]`.
    pub fn to_point_set(&self) -> Result<PointSet> {
        self.validate()?;
        let n = self.points.len();
        let mut coords = Array2::zeros((n, 2));
        let mut channels = Array2::zeros((n, 4));
        for (i, p) in self.points.iter().enumerate() {
            coords[[i, 0]] = p.xy[0];
            coords[[i, 1]] = p.xy[1];
            for c in 0..3 {
                channels[[i, c]] = p.rgb[c];
            }
            channels[[i, 3]] = p.depth;
        }
        PointSet::new(coords, channels, ChannelLayout::rgb_depth())
    }
}

/// Samples read from a JSON-lines stream plus the number of rejected lines.
#[derive(Debug, Default)]
pub struct Ingested {
    pub samples: Vec<LandmarkSample>,
    pub rejected: usize,
}

/// Reads landmark samples, skipping (and counting) malformed lines.
pub fn read_samples<R: BufRead>(reader: R) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LandmarkSample>(&line)
            .map_err(Error::from)
            .and_then(|s| s.validate().map(|_| s))
        {
            Ok(s) => out.samples.push(s),
            Err(e) => {
                eprintln!("warning: rejecting line {}: {e}", lineno + 1);
                out.rejected += 1;
            }
        }
    }
    Ok(out)
}

pub fn write_samples<W: std::io::Write>(mut out: W, samples: &[LandmarkSample]) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
