//! Binned summaries, kernel density estimates and small descriptive helpers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("bin spec needs lo < hi and width > 0 (got lo={lo}, hi={hi}, width={width})")]
    BadBins { lo: f64, hi: f64, width: f64 },
    #[error("need >= 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sample has zero spread; bandwidth undefined")]
    ZeroSpread,
}

/// Equal-width bins over `[lo, hi]`; values outside are clipped into the edge bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self {
            lo: -2.5,
            hi: 2.5,
            width: 0.25,
        }
    }
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self, StatsError> {
        let spec = Self { lo, hi, width };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && self.width > 0.0 {
            Ok(())
        } else {
            Err(StatsError::BadBins {
                lo: self.lo,
                hi: self.hi,
                width: self.width,
            })
        }
    }

    pub fn n_bins(&self) -> usize {
        (((self.hi - self.lo) / self.width) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i >= self.n_bins() {
            self.hi
        } else {
            self.lo + i as f64 * self.width
        }
    }

    pub fn index(&self, x: f64) -> usize {
        let raw = ((x - self.lo) / self.width).floor();
        if raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.n_bins() - 1)
        }
    }
}

/// Streaming mean / variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn std(&self) -> Option<f64> {
        (self.n > 1).then(|| (self.m2 / (self.n - 1) as f64).sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// Mean of the x values that fell in the bin.
    pub x_mean: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Per-bin mean / std / count of `y` over bins of `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinnedCurve {
    pub spec: BinSpec,
    pub bins: Vec<Bin>,
}

impl BinnedCurve {
    pub fn from_points(spec: BinSpec, points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let n = spec.n_bins();
        let mut xs = vec![Welford::default(); n];
        let mut ys = vec![Welford::default(); n];
        for (x, y) in points {
            let i = spec.index(x);
            xs[i].push(x);
            ys[i].push(y);
        }
        let bins = (0..n)
            .map(|i| Bin {
                lo: spec.edge(i),
                hi: spec.edge(i + 1),
                count: ys[i].count(),
                x_mean: xs[i].mean(),
                mean: ys[i].mean(),
                std: ys[i].std(),
            })
            .collect();
        Self { spec, bins }
    }

    pub fn total_count(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn populated(&self) -> impl Iterator<Item = &Bin> {
        self.bins.iter().filter(|b| b.count > 0)
    }

    /// Ordinary least-squares slope of bin means against bin x-means,
    /// over bins holding at least `min_count` observations.
    pub fn slope(&self, min_count: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .bins
            .iter()
            .filter(|b| b.count >= min_count)
            .filter_map(|b| Some((b.x_mean?, b.mean?)))
            .collect();
        ols_slope(&pts)
    }
}

pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Linear-interpolation quantile of an ascending-sorted sample
/// (the "type 7" definition used by R and numpy).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`,
/// falling back to `sd` when the IQR vanishes.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64, StatsError> {
    if sample.len() < 2 {
        return Err(StatsError::TooFewPoints(sample.len()));
    }
    let mut w = Welford::default();
    sample.iter().for_each(|&x| w.push(x));
    let sd = w.std().unwrap_or(0.0);
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75).unwrap() - quantile_sorted(&sorted, 0.25).unwrap();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread <= 0.0 {
        return Err(StatsError::ZeroSpread);
    }
    Ok(0.9 * spread * (sample.len() as f64).powf(-0.2))
}

/// Evenly spaced grid `lo, lo + step, ..., hi` (inclusive).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Gaussian KDE of `sample` evaluated on `points`.
pub fn gaussian_kde(sample: &[f64], points: &[f64]) -> Result<Vec<f64>, StatsError> {
    let h = silverman_bandwidth(sample)?;
    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(points
        .iter()
        .map(|&x| {
            norm * sample
                .iter()
                .map(|&s| (-0.5 * ((x - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect())
}

/// Exact empirical CDF: one `(value, fraction <= value)` step per distinct value.
pub fn ecdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    out
}
