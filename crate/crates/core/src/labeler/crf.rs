use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabelerError, LABELS};
use crate::tensor::{log_sum_exp, Matrix, ShapeError};

/// Per-position label scores.
pub type Emission = [f64; LABELS];

/// Label-to-label log potentials plus the boundary terms at either end of
/// the chain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Transitions {
    /// `matrix[a][b]` scores label `a` followed by label `b`.
    pub matrix: [[f64; LABELS]; LABELS],
    pub start: [f64; LABELS],
    pub stop: [f64; LABELS],
}

/// Posterior label probabilities from forward-backward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    pub log_partition: f64,
    /// `nodes[t][y]`: probability that position `t` has label `y`.
    pub nodes: Vec<[f64; LABELS]>,
    /// `edges[t][a][b]`: probability of labels `a, b` at positions `t, t+1`.
    pub edges: Vec<[[f64; LABELS]; LABELS]>,
}

impl Transitions {
    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        [self.matrix.as_flattened(), &self.start[..], &self.stop[..]].into_iter()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        [self.matrix.as_flattened_mut(), &mut self.start[..], &mut self.stop[..]].into_iter()
    }

    /// Total score of one labeling, boundary terms included.
    pub fn score(&self, emissions: &[Emission], labels: &[Label]) -> f64 {
        let Some((&first, _)) = labels.split_first() else {
            return 0.0;
        };
        let last = labels[labels.len() - 1];
        let mut s = self.start[first.index()] + self.stop[last.index()];
        for (t, &y) in labels.iter().enumerate() {
            s += emissions[t][y.index()];
            if t > 0 {
                s += self.matrix[labels[t - 1].index()][y.index()];
            }
        }
        s
    }

    fn forward_table(&self, emissions: &[Emission]) -> Vec<[f64; LABELS]> {
        let mut alpha: Vec<[f64; LABELS]> = Vec::with_capacity(emissions.len());
        for (t, e) in emissions.iter().enumerate() {
            let row = std::array::from_fn(|b| {
                if t == 0 {
                    self.start[b] + e[b]
                } else {
                    let prev = &alpha[t - 1];
                    let terms: [f64; LABELS] = std::array::from_fn(|a| prev[a] + self.matrix[a][b]);
                    log_sum_exp(&terms) + e[b]
                }
            });
            alpha.push(row);
        }
        alpha
    }

    fn backward_table(&self, emissions: &[Emission]) -> Vec<[f64; LABELS]> {
        let m = emissions.len();
        let mut beta = vec![[0.0; LABELS]; m];
        if m == 0 {
            return beta;
        }
        beta[m - 1] = self.stop;
        for t in (0..m - 1).rev() {
            let next = beta[t + 1];
            let e = &emissions[t + 1];
            beta[t] = std::array::from_fn(|a| {
                let terms: [f64; LABELS] = std::array::from_fn(|b| self.matrix[a][b] + e[b] + next[b]);
                log_sum_exp(&terms)
            });
        }
        beta
    }

    /// Log of the summed exponentiated scores of every labeling. An empty
    /// chain has the single empty labeling with score 0.
    pub fn log_partition(&self, emissions: &[Emission]) -> f64 {
        let Some(last) = self.forward_table(emissions).pop() else {
            return 0.0;
        };
        let terms: [f64; LABELS] = std::array::from_fn(|y| last[y] + self.stop[y]);
        log_sum_exp(&terms)
    }

    /// Highest-scoring labeling and its score. Ties go to the lower label
    /// index at the final position and at every backpointer.
    pub fn viterbi(&self, emissions: &[Emission]) -> (Vec<Label>, f64) {
        let m = emissions.len();
        if m == 0 {
            return (Vec::new(), 0.0);
        }
        let mut delta: [f64; LABELS] = std::array::from_fn(|y| self.start[y] + emissions[0][y]);
        let mut back: Vec<[usize; LABELS]> = Vec::with_capacity(m - 1);
        for e in &emissions[1..] {
            let mut ptr = [0; LABELS];
            let next = std::array::from_fn(|b| {
                let (arg, best) = argmax((0..LABELS).map(|a| delta[a] + self.matrix[a][b]));
                ptr[b] = arg;
                best + e[b]
            });
            back.push(ptr);
            delta = next;
        }
        let (mut y, score) = argmax((0..LABELS).map(|y| delta[y] + self.stop[y]));
        let mut path = vec![Label::from_index(y)];
        for ptr in back.iter().rev() {
            y = ptr[y];
            path.push(Label::from_index(y));
        }
        path.reverse();
        (path, score)
    }

    pub fn marginals(&self, emissions: &[Emission]) -> Marginals {
        let alpha = self.forward_table(emissions);
        let beta = self.backward_table(emissions);
        let log_partition = self.log_partition(emissions);
        let nodes = alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| std::array::from_fn(|y| (a[y] + b[y] - log_partition).exp()))
            .collect();
        let edges = (1..emissions.len())
            .map(|t| {
                std::array::from_fn(|a| {
                    std::array::from_fn(|b| {
                        (alpha[t - 1][a] + self.matrix[a][b] + emissions[t][b] + beta[t][b]
                            - log_partition)
                            .exp()
                    })
                })
            })
            .collect();
        Marginals {
            log_partition,
            nodes,
            edges,
        }
    }

    /// Negative log-likelihood of `gold`, with its gradients with respect to
    /// the emissions and (accumulated into `grads`) the transitions.
    pub fn nll_backward(
        &self,
        emissions: &[Emission],
        gold: &[Label],
        grads: &mut Transitions,
    ) -> Result<(f64, Vec<Emission>), LabelerError> {
        if gold.len() != emissions.len() {
            return Err(LabelerError::LengthMismatch {
                labels: gold.len(),
                blocks: emissions.len(),
            });
        }
        if gold.is_empty() {
            return Ok((0.0, Vec::new()));
        }
        let marg = self.marginals(emissions);
        let nll = marg.log_partition - self.score(emissions, gold);
        let mut d_em = marg.nodes.clone();
        for (d, y) in d_em.iter_mut().zip(gold) {
            d[y.index()] -= 1.0;
        }
        for (pair, w) in marg.edges.iter().zip(gold.windows(2)) {
            for a in 0..LABELS {
                for b in 0..LABELS {
                    grads.matrix[a][b] += pair[a][b];
                }
            }
            grads.matrix[w[0].index()][w[1].index()] -= 1.0;
        }
        let (first, last) = (gold[0].index(), gold[gold.len() - 1].index());
        for y in 0..LABELS {
            grads.start[y] += marg.nodes[0][y];
            grads.stop[y] += marg.nodes[gold.len() - 1][y];
        }
        grads.start[first] -= 1.0;
        grads.stop[last] -= 1.0;
        Ok((nll, d_em))
    }
}

/// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// Affine emission layer over Bi-LSTM states, and the transition scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Crf {
    pub emit_w: Matrix,
    pub emit_b: Vec<f64>,
    pub transitions: Transitions,
}

impl Crf {
    pub fn new<R: Rng>(input: usize, rng: &mut R) -> Self {
        let bound = (1.0 / input as f64).sqrt();
        Self {
            emit_w: Matrix::uniform(LABELS, input, bound, rng),
            emit_b: vec![0.0; LABELS],
            transitions: Transitions::default(),
        }
    }

    pub fn zeros(input: usize) -> Self {
        Self {
            emit_w: Matrix::zeros(LABELS, input),
            emit_b: vec![0.0; LABELS],
            transitions: Transitions::default(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.emit_w.cols()
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        [self.emit_w.as_slice(), self.emit_b.as_slice()]
            .into_iter()
            .chain(self.transitions.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        [self.emit_w.as_mut_slice(), self.emit_b.as_mut_slice()]
            .into_iter()
            .chain(self.transitions.params_mut())
    }

    pub fn emissions<H: AsRef<[f64]>>(&self, hs: &[H]) -> Result<Vec<Emission>, ShapeError> {
        hs.iter()
            .map(|h| {
                let h = h.as_ref();
                if h.len() != self.input_size() {
                    return Err(ShapeError(format!(
                        "emission input has {} values, expected {}",
                        h.len(),
                        self.input_size()
                    )));
                }
                let mut e = [self.emit_b[0], self.emit_b[1]];
                self.emit_w.mul_vec_add(h, &mut e);
                Ok(e)
            })
            .collect()
    }

    pub fn log_partition<H: AsRef<[f64]>>(&self, hs: &[H]) -> Result<f64, ShapeError> {
        Ok(self.transitions.log_partition(&self.emissions(hs)?))
    }

    pub fn viterbi<H: AsRef<[f64]>>(&self, hs: &[H]) -> Result<(Vec<Label>, f64), ShapeError> {
        Ok(self.transitions.viterbi(&self.emissions(hs)?))
    }

    pub fn sequence_nll<H: AsRef<[f64]>>(&self, hs: &[H], gold: &[Label]) -> Result<f64, LabelerError> {
        if gold.len() != hs.len() {
            return Err(LabelerError::LengthMismatch {
                labels: gold.len(),
                blocks: hs.len(),
            });
        }
        let em = self.emissions(hs)?;
        Ok(self.transitions.log_partition(&em) - self.transitions.score(&em, gold))
    }

    /// NLL of `gold`; accumulates parameter gradients into `grads` and
    /// returns the gradients with respect to the input states.
    pub fn backward<H: AsRef<[f64]>>(
        &self,
        hs: &[H],
        gold: &[Label],
        grads: &mut Crf,
    ) -> Result<(f64, Vec<Vec<f64>>), LabelerError> {
        let em = self.emissions(hs)?;
        let (nll, d_em) = self.transitions.nll_backward(&em, gold, &mut grads.transitions)?;
        let d_hs = hs
            .iter()
            .zip(&d_em)
            .map(|(h, d)| {
                grads.emit_w.add_outer(d, h.as_ref());
                grads.emit_b.iter_mut().zip(d).for_each(|(b, x)| *b += x);
                let mut dh = vec![0.0; self.input_size()];
                self.emit_w.mul_t_vec_add(d, &mut dh);
                dh
            })
            .collect();
        Ok((nll, d_hs))
    }
}
