//! Depthwise 1-D convolution with max-pooling over a block's three
//! embedding matrices.
//!
//! Each feature map has its own filters. A filter of width `v` slides down
//! the `n` rows (valid convolution, stride 1) and the largest response is
//! kept. The pooled values are laid out map by map, and within a map by
//! filter group in configuration order.

use rand::Rng;

use crate::embedding::BlockTensor;
use crate::tensor::{axpy, dot, Matrix, ShapeError};

/// `count` filters of one width, stored as `count × width × k` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGroup {
    pub width: usize,
    pub count: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl FilterGroup {
    pub fn zeros(width: usize, count: usize, k: usize) -> Self {
        Self {
            width,
            count,
            weights: vec![0.0; count * width * k],
            bias: vec![0.0; count],
        }
    }

    fn filter(&self, f: usize) -> &[f64] {
        let len = self.weights.len() / self.count;
        &self.weights[f * len..(f + 1) * len]
    }

    fn filter_mut(&mut self, f: usize) -> &mut [f64] {
        let len = self.weights.len() / self.count;
        &mut self.weights[f * len..(f + 1) * len]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilterBank {
    k: usize,
    relu: bool,
    maps: [Vec<FilterGroup>; 3],
}

/// Forward values and the winning window of every pooled output.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub features: Vec<f64>,
    argmax: Vec<usize>,
}

/// Response of one filter to every window of `m`.
pub fn conv_feature(m: &Matrix, filter: &Matrix, bias: f64) -> Result<Vec<f64>, ShapeError> {
    let (n, k, v) = (m.rows(), m.cols(), filter.rows());
    if filter.cols() != k {
        return Err(ShapeError(format!("filter has {} columns, input has {k}", filter.cols())));
    }
    if v == 0 || v > n {
        return Err(ShapeError(format!("filter width {v} does not fit {n} rows")));
    }
    let data = m.as_slice();
    Ok((0..=n - v)
        .map(|j| dot(filter.as_slice(), &data[j * k..(j + v) * k]) + bias)
        .collect())
}

/// Max over windows of `m` for one filter, returning `(value, start row)`.
/// `live` is one past the last nonzero row: every window starting at or
/// after it is all zero and responds with exactly `bias`.
fn pool(m: &Matrix, live: usize, filter: &[f64], width: usize, bias: f64) -> (f64, usize) {
    let k = m.cols();
    let windows = m.rows() + 1 - width;
    let data = m.as_slice();
    let mut best = (f64::NEG_INFINITY, 0);
    for j in 0..windows.min(live) {
        let value = dot(filter, &data[j * k..(j + width) * k]) + bias;
        if value > best.0 {
            best = (value, j);
        }
    }
    if windows > live && bias > best.0 {
        best = (bias, live);
    }
    best
}

impl ConvFilterBank {
    /// Random filters for every `(width, count)` pair on each of the three
    /// maps. Widths larger than `n` are dropped with a warning.
    pub fn new<R: Rng>(
        n: usize,
        k: usize,
        widths: &[usize],
        counts: &[usize],
        relu: bool,
        rng: &mut R,
    ) -> Result<Self, ShapeError> {
        let mut bank = Self::zeros(n, k, widths, counts, relu)?;
        for g in bank.maps.iter_mut().flatten() {
            let bound = (6.0 / (g.width * k + 1) as f64).sqrt();
            g.weights.iter_mut().for_each(|x| *x = rng.gen_range(-bound..=bound));
        }
        Ok(bank)
    }

    /// Same shapes as [`ConvFilterBank::new`], all parameters zero.
    pub fn zeros(
        n: usize,
        k: usize,
        widths: &[usize],
        counts: &[usize],
        relu: bool,
    ) -> Result<Self, ShapeError> {
        if widths.len() != counts.len() {
            return Err(ShapeError(format!(
                "{} filter widths but {} filter counts",
                widths.len(),
                counts.len()
            )));
        }
        if k == 0 || widths.iter().chain(counts).any(|&x| x == 0) {
            return Err(ShapeError("filter widths, counts and dimension must be positive".into()));
        }
        let kept: Vec<(usize, usize)> = widths
            .iter()
            .zip(counts)
            .filter(|&(&w, _)| {
                if w > n {
                    log::warn!("encoder: skipping filter width {w}, blocks have only {n} rows");
                }
                w <= n
            })
            .map(|(&w, &c)| (w, c))
            .collect();
        if kept.is_empty() {
            return Err(ShapeError(format!("no filter width fits {n} rows")));
        }
        let maps = std::array::from_fn(|_| {
            kept.iter()
                .map(|&(width, count)| FilterGroup::zeros(width, count, k))
                .collect()
        });
        Ok(Self { k, relu, maps })
    }

    pub fn from_groups(k: usize, relu: bool, maps: [Vec<FilterGroup>; 3]) -> Result<Self, ShapeError> {
        for g in maps.iter().flatten() {
            if g.width == 0 || g.count == 0 {
                return Err(ShapeError("empty filter group".into()));
            }
            if g.weights.len() != g.count * g.width * k || g.bias.len() != g.count {
                return Err(ShapeError(format!(
                    "filter group of width {} has {} weights and {} biases",
                    g.width,
                    g.weights.len(),
                    g.bias.len()
                )));
            }
        }
        Ok(Self { k, relu, maps })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn relu(&self) -> bool {
        self.relu
    }

    pub fn maps(&self) -> &[Vec<FilterGroup>; 3] {
        &self.maps
    }

    pub fn maps_mut(&mut self) -> &mut [Vec<FilterGroup>; 3] {
        &mut self.maps
    }

    /// Length of the encoded feature vector.
    pub fn output_len(&self) -> usize {
        self.maps.iter().flatten().map(|g| g.count).sum()
    }

    pub fn max_width(&self) -> usize {
        self.maps.iter().flatten().map(|g| g.width).max().unwrap_or(0)
    }

    pub fn zeros_like(&self) -> Self {
        let maps = self.maps.clone().map(|groups| {
            groups
                .into_iter()
                .map(|g| FilterGroup::zeros(g.width, g.count, self.k))
                .collect()
        });
        Self { maps, ..*self }
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.maps
            .iter()
            .flatten()
            .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.maps
            .iter_mut()
            .flatten()
            .flat_map(|g| [g.weights.as_mut_slice(), g.bias.as_mut_slice()])
    }

    fn check(&self, t: &BlockTensor) -> Result<(), ShapeError> {
        if t.dim() != self.k {
            return Err(ShapeError(format!(
                "block tensor has dimension {}, encoder expects {}",
                t.dim(),
                self.k
            )));
        }
        if self.max_width() > t.rows() {
            return Err(ShapeError(format!(
                "filter width {} does not fit {} rows",
                self.max_width(),
                t.rows()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, t: &BlockTensor) -> Result<Vec<f64>, ShapeError> {
        self.encode_cached(t).map(|e| e.features)
    }

    pub fn encode_cached(&self, t: &BlockTensor) -> Result<Encoded, ShapeError> {
        self.check(t)?;
        let mut features = Vec::with_capacity(self.output_len());
        let mut argmax = Vec::with_capacity(self.output_len());
        for (m, groups) in t.maps.iter().zip(&self.maps) {
            let live = m.nonzero_rows();
            for g in groups {
                for f in 0..g.count {
                    let (value, at) = pool(m, live, g.filter(f), g.width, g.bias[f]);
                    features.push(if self.relu { value.max(0.0) } else { value });
                    argmax.push(at);
                }
            }
        }
        Ok(Encoded { features, argmax })
    }

    /// Accumulates into `grads` the gradient of a loss whose gradient with
    /// respect to the encoded features is `d_out`, and optionally into
    /// `d_input` its gradient with respect to the block tensor.
    pub fn backward(
        &self,
        t: &BlockTensor,
        enc: &Encoded,
        d_out: &[f64],
        grads: &mut ConvFilterBank,
        mut d_input: Option<&mut BlockTensor>,
    ) {
        assert_eq!(d_out.len(), enc.features.len());
        let k = self.k;
        let mut idx = 0;
        for (i, m) in t.maps.iter().enumerate() {
            for (gi, g) in self.maps[i].iter().enumerate() {
                let span = g.width * k;
                for f in 0..g.count {
                    let d = d_out[idx];
                    let (at, value) = (enc.argmax[idx], enc.features[idx]);
                    idx += 1;
                    if d == 0.0 || (self.relu && value <= 0.0) {
                        continue;
                    }
                    let window = &m.as_slice()[at * k..at * k + span];
                    let grad_group = &mut grads.maps[i][gi];
                    axpy(d, window, grad_group.filter_mut(f));
                    grad_group.bias[f] += d;
                    if let Some(dm) = d_input.as_deref_mut() {
                        let rows = &mut dm.maps[i].as_mut_slice()[at * k..at * k + span];
                        axpy(d, g.filter(f), rows);
                    }
                }
            }
        }
    }
}
