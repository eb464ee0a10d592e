//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtext::dom::{DomChild, DomNode, TagGroup, TagGroups};
use semtext::embedding::BlockTensor;
use semtext::labeler::{Emission, Label, Transitions};
use semtext::model::{ModelConfig, ModelParams};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/html")
}

/// Every HTML fixture as (file name, raw bytes), sorted by name.
pub fn fixtures() -> Vec<(String, Vec<u8>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "html"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect()
}

pub fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_dir().join(name)).unwrap()
}

const BOUNDARY: char = '\u{1}';

fn flatten(node: &DomNode, groups: &TagGroups, out: &mut String) {
    for child in &node.children {
        match child {
            DomChild::Text(t) => out.push_str(t),
            DomChild::Element(e) => match groups.classify(&e.tag) {
                TagGroup::Group1 => {}
                TagGroup::Group2 if e.tag == "br" => out.push(' '),
                TagGroup::Group2 => flatten(e, groups, out),
                TagGroup::Group3 => {
                    out.push(BOUNDARY);
                    flatten(e, groups, out);
                    out.push(BOUNDARY);
                }
            },
        }
    }
}

/// Expected search-phase texts: character data cut at every block-level
/// boundary, whitespace-normalized, keeping pieces with a letter or digit.
pub fn partition_oracle(root: &DomNode) -> Vec<String> {
    let mut flat = String::new();
    flatten(root, TagGroups::builtin(), &mut flat);
    flat.split(BOUNDARY)
        .map(|piece| piece.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|piece| piece.chars().any(char::is_alphanumeric))
        .collect()
}

/// Exhaustive CRF quantities over all 2^m labelings.
pub struct BruteForce {
    pub log_partition: f64,
    pub best: Vec<Label>,
    pub best_score: f64,
    /// P(label at t = MAIN).
    pub main_marginals: Vec<f64>,
}

pub fn path_score(t: &Transitions, em: &[Emission], labels: &[Label]) -> f64 {
    let mut s = 0.0;
    for (i, (e, y)) in em.iter().zip(labels).enumerate() {
        s += e[y.index()];
        if i == 0 {
            s += t.start[y.index()];
        } else {
            s += t.matrix[labels[i - 1].index()][y.index()];
        }
    }
    if let Some(last) = labels.last() {
        s += t.stop[last.index()];
    }
    s
}

pub fn labeling(bits: usize, m: usize) -> Vec<Label> {
    // Bit m-1-i is position i, so enumeration order matches lexicographic order.
    (0..m)
        .map(|i| Label::from_index((bits >> (m - 1 - i)) & 1))
        .collect()
}

pub fn brute_force(t: &Transitions, em: &[Emission]) -> BruteForce {
    let m = em.len();
    let scores: Vec<(Vec<Label>, f64)> = (0..1usize << m)
        .map(|bits| {
            let y = labeling(bits, m);
            let s = path_score(t, em, &y);
            (y, s)
        })
        .collect();
    let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = scores.iter().map(|s| (s.1 - max).exp()).sum();
    let log_partition = max + total.ln();
    let (best, best_score) = scores
        .iter()
        .fold(None::<&(Vec<Label>, f64)>, |acc, s| match acc {
            Some(a) if a.1 >= s.1 => Some(a),
            _ => Some(s),
        })
        .map(|(y, s)| (y.clone(), *s))
        .unwrap();
    let mut main_marginals = vec![0.0; m];
    for (y, s) in &scores {
        let p = (s - log_partition).exp();
        for (acc, l) in main_marginals.iter_mut().zip(y) {
            if *l == Label::Main {
                *acc += p;
            }
        }
    }
    BruteForce {
        log_partition,
        best,
        best_score,
        main_marginals,
    }
}

pub fn random_transitions<R: Rng>(rng: &mut R, scale: f64) -> Transitions {
    let mut t = Transitions::default();
    for x in t.params_mut().flatten() {
        *x = rng.gen_range(-scale..scale);
    }
    t
}

pub fn random_emissions<R: Rng>(rng: &mut R, m: usize, scale: f64) -> Vec<Emission> {
    (0..m)
        .map(|_| [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)])
        .collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// `||a - b|| / (||a|| + ||b||)`, 0 when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = norm(a) + norm(b);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub const FD_STEP: f64 = 1e-5;

/// Central differences of `loss` over the `count` scalars reached by `slot`.
pub fn finite_differences<T: Clone>(
    base: &T,
    count: usize,
    slot: impl Fn(&mut T, usize) -> &mut f64,
    loss: impl Fn(&T) -> f64,
) -> Vec<f64> {
    let mut probe = base.clone();
    (0..count)
        .map(|i| {
            let orig = *slot(&mut probe, i);
            *slot(&mut probe, i) = orig + FD_STEP;
            let up = loss(&probe);
            *slot(&mut probe, i) = orig - FD_STEP;
            let down = loss(&probe);
            *slot(&mut probe, i) = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn tensor_slot(ts: &mut Vec<BlockTensor>, i: usize) -> &mut f64 {
    ts.iter_mut()
        .flat_map(|t| t.maps.iter_mut().flat_map(|m| m.as_mut_slice().iter_mut()))
        .nth(i)
        .unwrap()
}

pub fn param_slot(p: &mut ModelParams, i: usize) -> &mut f64 {
    p.params_mut().flat_map(|s| s.iter_mut()).nth(i).unwrap()
}

pub fn small_config() -> ModelConfig {
    ModelConfig {
        n: 6,
        k: 3,
        widths: vec![2, 3],
        counts: vec![2, 2],
        hidden: 3,
        ..ModelConfig::default()
    }
}

/// A random tensor whose maps have between 0 and `n` filled rows.
pub fn random_tensor<R: Rng>(rng: &mut R, n: usize, k: usize) -> BlockTensor {
    let mut t = BlockTensor::zeros(n, k);
    for map in &mut t.maps {
        let rows = rng.gen_range(0..=n);
        for r in 0..rows {
            map.row_mut(r)
                .iter_mut()
                .for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
    }
    t
}

/// A randomly initialised small model with non-trivial transitions and
/// biases, plus a random sequence and gold labeling.
pub fn gradient_instance(seed: u64) -> (ModelParams, Vec<BlockTensor>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = small_config();
    let (n, k) = (config.n, config.k);
    let mut p = ModelParams::new(config, &mut rng).unwrap();
    for x in p.crf.transitions.params_mut().flatten() {
        *x = rng.gen_range(-1.0..1.0);
    }
    for x in p.encoder.params_mut().flatten() {
        *x += rng.gen_range(-0.1..0.1);
    }
    for x in p.crf.emit_b.iter_mut() {
        *x = rng.gen_range(-0.5..0.5);
    }
    let m = rng.gen_range(1..=5);
    let tensors = (0..m).map(|_| random_tensor(&mut rng, n, k)).collect();
    let gold = (0..m)
        .map(|_| Label::from_index(rng.gen_range(0..2)))
        .collect();
    (p, tensors, gold)
}

/// Relative errors of the analytic gradient against finite differences,
/// over (encoder, lstm, crf) parameters and the input tensors.
pub struct GradientReport {
    pub encoder: f64,
    pub lstm: f64,
    pub crf: f64,
    pub inputs: f64,
}

impl GradientReport {
    pub fn worst(&self) -> f64 {
        self.encoder.max(self.lstm).max(self.crf).max(self.inputs)
    }
}

pub fn check_gradients(seed: u64) -> GradientReport {
    let (p, tensors, gold) = gradient_instance(seed);
    let mut grads = p.zeros_like();
    let mut d_inputs: Vec<BlockTensor> = tensors
        .iter()
        .map(|t| BlockTensor::zeros(t.rows(), t.dim()))
        .collect();
    p.backprop(&tensors, &gold, &mut grads, Some(&mut d_inputs))
        .unwrap();
    let analytic: Vec<f64> = grads.params().flatten().copied().collect();
    let numeric = finite_differences(&p, p.param_count(), param_slot, |q| {
        q.loss(&tensors, &gold).unwrap()
    });
    let enc = p.encoder.params().map(<[f64]>::len).sum::<usize>();
    let lstm = p.lstm.params().map(<[f64]>::len).sum::<usize>();
    let segment = |r: std::ops::Range<usize>| rel_err(&analytic[r.clone()], &numeric[r]);

    let input_count: usize = tensors.iter().map(|t| 3 * t.rows() * t.dim()).sum();
    let numeric_inputs = finite_differences(&tensors, input_count, tensor_slot, |ts| {
        p.loss(ts, &gold).unwrap()
    });
    // Windows over all-zero padding tie at the bias, where pooling has a
    // kink; compare only entries in rows that carry data.
    let live: Vec<bool> = tensors
        .iter()
        .flat_map(|t| {
            t.maps.iter().flat_map(|m| {
                let live = m.nonzero_rows();
                (0..m.rows() * m.cols()).map(move |i| i / m.cols() < live)
            })
        })
        .collect();
    let analytic_inputs: Vec<f64> = d_inputs
        .iter()
        .flat_map(|t| t.maps.iter().flat_map(|m| m.as_slice().iter().copied()))
        .zip(&live)
        .filter_map(|(x, &keep)| keep.then_some(x))
        .collect();
    let numeric_inputs: Vec<f64> = numeric_inputs
        .into_iter()
        .zip(&live)
        .filter_map(|(x, &keep)| keep.then_some(x))
        .collect();

    GradientReport {
        encoder: segment(0..enc),
        lstm: segment(enc..enc + lstm),
        crf: segment(enc + lstm..analytic.len()),
        inputs: rel_err(&analytic_inputs, &numeric_inputs),
    }
}
