use rand::Rng;

use crate::tensor::{sigmoid, Matrix, ShapeError};

/// One LSTM direction. Gate rows are stacked in the order input, forget,
/// output, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub wx: Matrix,
    pub wh: Matrix,
    pub bias: Vec<f64>,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    cell_tanh: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

impl Lstm {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = (1.0 / hidden as f64).sqrt();
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(1.0);
        Self {
            wx: Matrix::uniform(4 * hidden, input, bound, rng),
            wh: Matrix::uniform(4 * hidden, hidden, bound, rng),
            bias,
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            wx: Matrix::zeros(4 * hidden, input),
            wh: Matrix::zeros(4 * hidden, hidden),
            bias: vec![0.0; 4 * hidden],
        }
    }

    pub fn input_size(&self) -> usize {
        self.wx.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.wh.cols()
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        [self.wx.as_slice(), self.wh.as_slice(), self.bias.as_slice()].into_iter()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        [
            self.wx.as_mut_slice(),
            self.wh.as_mut_slice(),
            self.bias.as_mut_slice(),
        ]
        .into_iter()
    }

    /// Runs the recurrence from zero states and returns every hidden state.
    pub fn forward<X: AsRef<[f64]>>(&self, xs: &[X]) -> Result<(Vec<Vec<f64>>, LstmCache), ShapeError> {
        let h = self.hidden_size();
        let mut cache = LstmCache::default();
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in xs {
            let x = x.as_ref();
            if x.len() != self.input_size() {
                return Err(ShapeError(format!(
                    "LSTM input has {} values, expected {}",
                    x.len(),
                    self.input_size()
                )));
            }
            let mut z = self.bias.clone();
            self.wx.mul_vec_add(x, &mut z);
            self.wh.mul_vec_add(&h_prev, &mut z);
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = if j < 3 * h { sigmoid(*zj) } else { zj.tanh() };
            }
            let (i, rest) = z.split_at(h);
            let (f, rest) = rest.split_at(h);
            let (o, g) = rest.split_at(h);
            let c: Vec<f64> = (0..h).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
            let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let out: Vec<f64> = o.iter().zip(&tc).map(|(o, t)| o * t).collect();
            h_prev.clone_from(&out);
            c_prev.clone_from(&c);
            cache.gates.push(z);
            cache.cells.push(c);
            cache.cell_tanh.push(tc);
            cache.outputs.push(out);
        }
        Ok((cache.outputs.clone(), cache))
    }

    /// Backpropagation through time. `d_hs[t]` is the loss gradient with
    /// respect to the `t`-th output; returns the gradients of the inputs.
    pub fn backward<X: AsRef<[f64]>>(
        &self,
        xs: &[X],
        cache: &LstmCache,
        d_hs: &[&[f64]],
        grads: &mut Lstm,
    ) -> Vec<Vec<f64>> {
        let h = self.hidden_size();
        let steps = xs.len();
        let zeros = vec![0.0; h];
        let mut dxs = vec![vec![0.0; self.input_size()]; steps];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t];
            let tc = &cache.cell_tanh[t];
            let c_prev = if t > 0 { &cache.cells[t - 1] } else { &zeros };
            let h_prev = if t > 0 { &cache.outputs[t - 1] } else { &zeros };
            for j in 0..h {
                let (i, f, o, g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let dh = d_hs[t][j] + dh_next[j];
                let dc = dh * o * (1.0 - tc[j] * tc[j]) + dc_next[j];
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dh * tc[j] * o * (1.0 - o);
                dz[3 * h + j] = dc * i * (1.0 - g * g);
                dc_next[j] = dc * f;
            }
            grads.wx.add_outer(&dz, xs[t].as_ref());
            grads.wh.add_outer(&dz, h_prev);
            grads.bias.iter_mut().zip(&dz).for_each(|(b, d)| *b += d);
            self.wx.mul_t_vec_add(&dz, &mut dxs[t]);
            dh_next.fill(0.0);
            self.wh.mul_t_vec_add(&dz, &mut dh_next);
        }
        dxs
    }
}

/// Forward and backward LSTMs with concatenated outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

#[derive(Debug, Clone, Default)]
pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

impl BiLstm {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let fwd = Lstm::new(input, hidden, rng);
        let bwd = Lstm::new(input, hidden, rng);
        Self { fwd, bwd }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            fwd: Lstm::zeros(self.input_size(), self.hidden_size()),
            bwd: Lstm::zeros(self.input_size(), self.hidden_size()),
        }
    }

    pub fn input_size(&self) -> usize {
        self.fwd.input_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size()
    }

    /// Width of each output state.
    pub fn output_size(&self) -> usize {
        2 * self.hidden_size()
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.fwd.params().chain(self.bwd.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.fwd.params_mut().chain(self.bwd.params_mut())
    }

    pub fn forward<X: AsRef<[f64]>>(&self, xs: &[X]) -> Result<(Vec<Vec<f64>>, BiLstmCache), ShapeError> {
        let rev: Vec<&[f64]> = xs.iter().rev().map(AsRef::as_ref).collect();
        let (hf, fwd) = self.fwd.forward(xs)?;
        let (hb, bwd) = self.bwd.forward(&rev)?;
        let hs = hf
            .into_iter()
            .zip(hb.into_iter().rev())
            .map(|(mut f, b)| {
                f.extend(b);
                f
            })
            .collect();
        Ok((hs, BiLstmCache { fwd, bwd }))
    }

    pub fn backward<X: AsRef<[f64]>>(
        &self,
        xs: &[X],
        cache: &BiLstmCache,
        d_hs: &[Vec<f64>],
        grads: &mut BiLstm,
    ) -> Vec<Vec<f64>> {
        let h = self.hidden_size();
        let rev: Vec<&[f64]> = xs.iter().rev().map(AsRef::as_ref).collect();
        let d_fwd: Vec<&[f64]> = d_hs.iter().map(|d| &d[..h]).collect();
        let d_bwd: Vec<&[f64]> = d_hs.iter().rev().map(|d| &d[h..]).collect();
        let mut dxs = self.fwd.backward(xs, &cache.fwd, &d_fwd, &mut grads.fwd);
        let dx_rev = self.bwd.backward(&rev, &cache.bwd, &d_bwd, &mut grads.bwd);
        for (dx, db) in dxs.iter_mut().zip(dx_rev.iter().rev()) {
            dx.iter_mut().zip(db).for_each(|(a, b)| *a += b);
        }
        dxs
    }
}
