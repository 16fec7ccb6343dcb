//! Domain types shared across the toolkit: frame geometry, per-CTU saliency,
//! QP buckets, fitted model coefficients and per-frame control plans.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CTU_SIZE: usize = 64;

/// CTU grid of one frame. Edge CTUs are clipped to the frame bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameLayout {
    width: usize,
    height: usize,
    ctu_size: usize,
    ctu_cols: usize,
    ctu_rows: usize,
}

impl FrameLayout {
    pub fn new(width: usize, height: usize, ctu_size: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if ctu_size < 8 || !ctu_size.is_power_of_two() {
            return Err(Error::validation(format!(
                "CTU size must be a power of two >= 8, got {ctu_size}"
            )));
        }
        Ok(FrameLayout {
            width,
            height,
            ctu_size,
            ctu_cols: width.div_ceil(ctu_size),
            ctu_rows: height.div_ceil(ctu_size),
        })
    }

    pub fn with_default_ctu(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, DEFAULT_CTU_SIZE)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ctu_size(&self) -> usize {
        self.ctu_size
    }

    pub fn ctu_cols(&self) -> usize {
        self.ctu_cols
    }

    pub fn ctu_rows(&self) -> usize {
        self.ctu_rows
    }

    /// Total CTU count N.
    pub fn num_ctus(&self) -> usize {
        self.ctu_cols * self.ctu_rows
    }

    /// Raster index of the CTU covering pixel `(x, y)`.
    #[inline]
    pub fn ctu_at(&self, x: usize, y: usize) -> usize {
        (y / self.ctu_size) * self.ctu_cols + x / self.ctu_size
    }

    /// Pixel rectangle `(x0, y0, w, h)` of CTU `n`, clipped to the frame.
    pub fn ctu_rect(&self, n: usize) -> (usize, usize, usize, usize) {
        let x0 = (n % self.ctu_cols) * self.ctu_size;
        let y0 = (n / self.ctu_cols) * self.ctu_size;
        let w = self.ctu_size.min(self.width - x0);
        let h = self.ctu_size.min(self.height - y0);
        (x0, y0, w, h)
    }
}

/// Per-CTU saliency weights of one frame, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    layout: FrameLayout,
    weights: Vec<f64>,
    sum: f64,
}

impl SaliencyMap {
    pub fn new(layout: FrameLayout, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != layout.num_ctus() {
            return Err(Error::validation(format!(
                "saliency map has {} weights but layout has {} CTUs",
                weights.len(),
                layout.num_ctus()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::validation(format!(
                "saliency weight {w} at index {i} is outside [0, 1]"
            )));
        }
        let sum = weights.iter().sum();
        Ok(SaliencyMap { layout, weights, sum })
    }

    pub fn uniform(layout: FrameLayout, w: f64) -> Result<Self> {
        Self::new(layout, vec![w; layout.num_ctus()])
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    /// CTU indices in ascending saliency order; equal weights keep index order.
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut keys = self.order_keys();
        keys.sort_unstable();
        keys.into_iter().map(|(_, i)| i).collect()
    }

    /// `(key, index)` pairs whose natural order is ascending saliency with
    /// ties broken by index.
    pub fn order_keys(&self) -> Vec<(u64, usize)> {
        // Bit patterns of non-negative floats sort like their values.
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &w)| ((w + 0.0).to_bits(), i))
            .collect()
    }

    /// Same weights multiplied by `lambda` (which must keep them in range).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.layout,
            self.weights.iter().map(|w| w * lambda).collect(),
        )
    }
}

/// Scales raw nonnegative saliency by its per-frame maximum.
///
/// An all-zero input is passed through unchanged.
pub fn normalize_saliency(layout: FrameLayout, raw: &[f64]) -> Result<SaliencyMap> {
    if let Some((index, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, v)| **v < 0.0 || v.is_nan())
    {
        return Err(Error::NegativeSaliency { index, value });
    }
    let max = raw.iter().copied().fold(0.0_f64, f64::max);
    let weights = if max > 0.0 {
        raw.iter().map(|&v| v / max).collect()
    } else {
        vec![0.0; raw.len()]
    };
    SaliencyMap::new(layout, weights)
}

/// One of the four QP ranges the complexity coefficients are trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QpBucket {
    Qp22,
    Qp27,
    Qp32,
    Qp37,
}

impl QpBucket {
    pub const ALL: [QpBucket; 4] = [QpBucket::Qp22, QpBucket::Qp27, QpBucket::Qp32, QpBucket::Qp37];

    pub fn value(self) -> u8 {
        match self {
            QpBucket::Qp22 => 22,
            QpBucket::Qp27 => 27,
            QpBucket::Qp32 => 32,
            QpBucket::Qp37 => 37,
        }
    }

    pub fn from_value(v: u8) -> Option<Self> {
        QpBucket::ALL.into_iter().find(|b| b.value() == v)
    }
}

impl fmt::Display for QpBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Maps a frame QP onto its training bucket. Each bucket covers five QPs
/// (the base QP plus the hierarchical offsets 0..=4); values outside
/// `[22, 41]` clamp to the nearest bucket.
pub fn qp_bucket(qp: i32) -> Result<QpBucket> {
    if !(0..=51).contains(&qp) {
        return Err(Error::validation(format!("QP {qp} outside [0, 51]")));
    }
    Ok(match qp {
        ..=26 => QpBucket::Qp22,
        27..=31 => QpBucket::Qp27,
        32..=36 => QpBucket::Qp32,
        _ => QpBucket::Qp37,
    })
}

/// Complexity coefficients of one QP bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketCoeffs {
    /// Slope of the per-CTU deblocking share in saliency.
    pub a: f64,
    /// Intercept of the per-CTU deblocking share.
    pub b: f64,
    /// Per-level motion-compensation share.
    pub c: f64,
}

/// Fitted model coefficients: the global cubic `h` for the MC distortion
/// ratio and per-bucket complexity coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParamsRepr", into = "ModelParamsRepr")]
pub struct ModelParams {
    pub h: [f64; 3],
    pub buckets: BTreeMap<QpBucket, BucketCoeffs>,
}

#[derive(Serialize, Deserialize)]
struct ModelParamsRepr {
    h: [f64; 3],
    buckets: BTreeMap<String, BucketCoeffs>,
}

impl TryFrom<ModelParamsRepr> for ModelParams {
    type Error = Error;

    fn try_from(r: ModelParamsRepr) -> Result<Self> {
        let mut buckets = BTreeMap::new();
        for (k, v) in r.buckets {
            let bucket = k
                .parse::<u8>()
                .ok()
                .and_then(QpBucket::from_value)
                .ok_or_else(|| Error::format("model params", format!("unknown QP bucket {k:?}")))?;
            buckets.insert(bucket, v);
        }
        let params = ModelParams { h: r.h, buckets };
        params.validate()?;
        Ok(params)
    }
}

impl From<ModelParams> for ModelParamsRepr {
    fn from(p: ModelParams) -> Self {
        ModelParamsRepr {
            h: p.h,
            buckets: p
                .buckets
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

impl ModelParams {
    /// Published coefficients trained on HM 16.0 decoding times.
    pub fn table3() -> Self {
        let rows = [
            (QpBucket::Qp22, 0.3041, 0.0255, 0.0351),
            (QpBucket::Qp27, 0.3874, 0.0433, 0.0520),
            (QpBucket::Qp32, 0.4101, 0.0459, 0.0665),
            (QpBucket::Qp37, 0.4347, 0.0576, 0.0792),
        ];
        ModelParams {
            h: [0.1040, -0.2737, 0.2184],
            buckets: rows
                .into_iter()
                .map(|(k, a, b, c)| (k, BucketCoeffs { a, b, c }))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [h1, h2, h3] = self.h;
        let at3 = 27.0 * h1 + 9.0 * h2 + 3.0 * h3;
        if !h1.is_finite() || !h2.is_finite() || !h3.is_finite() || (at3 - 1.0).abs() > 0.01 {
            return Err(Error::validation(format!(
                "cubic coefficients give ratio(3) = {at3}, expected 1 +/- 0.01"
            )));
        }
        for (bucket, c) in &self.buckets {
            if !(c.a > 0.0 && c.b > 0.0 && c.c > 0.0) {
                return Err(Error::validation(format!(
                    "bucket {bucket}: coefficients must be positive, got a={} b={} c={}",
                    c.a, c.b, c.c
                )));
            }
        }
        Ok(())
    }

    pub fn coeffs(&self, bucket: QpBucket) -> Result<&BucketCoeffs> {
        self.buckets
            .get(&bucket)
            .ok_or_else(|| Error::validation(format!("model params have no bucket {bucket}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Which branch of the two-branch optimization produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Only deblocking is disabled; motion compensation is untouched.
    #[serde(rename = "df")]
    DfOnly,
    /// Deblocking disabled everywhere and MC simplified on some CTUs.
    #[serde(rename = "df+mc")]
    DfPlusMc,
}

/// Per-CTU decisions for one frame.
///
/// `f[n] == 1` disables deblocking of CTU `n`; `g[n]` is the number of samples
/// out of each aligned 2x2 group that are NN-copied instead of motion
/// compensated.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    pub f: Vec<u8>,
    pub g: Vec<u8>,
    pub predicted_reduction: f64,
    pub branch: Branch,
}

impl ControlPlan {
    /// Plan that changes nothing.
    pub fn identity(n: usize) -> Self {
        ControlPlan {
            f: vec![0; n],
            g: vec![0; n],
            predicted_reduction: 0.0,
            branch: Branch::DfOnly,
        }
    }

    /// All deblocking disabled, all CTUs at level `g`.
    pub fn uniform(n: usize, f: u8, g: u8) -> Self {
        ControlPlan {
            f: vec![f; n],
            g: vec![g; n],
            predicted_reduction: 0.0,
            branch: if g > 0 { Branch::DfPlusMc } else { Branch::DfOnly },
        }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.f.iter().all(|&f| f == 0) && self.g.iter().all(|&g| g == 0)
    }

    /// Shape checks only: lengths, value domains and predicted range.
    pub fn validate_shape(&self, n: usize) -> Result<()> {
        if self.f.len() != n || self.g.len() != n {
            return Err(Error::validation(format!(
                "plan has {} f / {} g entries, layout has {n} CTUs",
                self.f.len(),
                self.g.len()
            )));
        }
        if let Some(i) = self.f.iter().position(|&f| f > 1) {
            return Err(Error::validation(format!("f[{i}] = {} is not binary", self.f[i])));
        }
        if let Some(i) = self.g.iter().position(|&g| g > 3) {
            return Err(Error::validation(format!("g[{i}] = {} is outside 0..=3", self.g[i])));
        }
        Ok(())
    }

    /// Full invariant check for plans produced by the planner.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_shape(n)?;
        match self.branch {
            Branch::DfOnly if self.g.iter().any(|&g| g != 0) => {
                return Err(Error::validation("DF-only plan has nonzero g"));
            }
            Branch::DfPlusMc if self.f.iter().any(|&f| f != 1) => {
                return Err(Error::validation("DF+MC plan leaves deblocking enabled on some CTU"));
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.predicted_reduction) {
            return Err(Error::validation(format!(
                "predicted reduction {} is outside [0, 1]",
                self.predicted_reduction
            )));
        }
        Ok(())
    }
}
