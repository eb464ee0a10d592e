//! The vectorised recurrence against a scalar transcription.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtext::labeler::{BiLstm, Lstm};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One unit at a time, gates read from rows `gate * hidden + unit`.
fn scalar_lstm(l: &Lstm, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let hidden = l.hidden_size();
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut out = Vec::new();
    for x in xs {
        let pre = |gate: usize, unit: usize| {
            let row = gate * hidden + unit;
            let mut s = l.bias[row];
            for (col, xv) in x.iter().enumerate() {
                s += l.wx.get(row, col) * xv;
            }
            for (col, hv) in h.iter().enumerate() {
                s += l.wh.get(row, col) * hv;
            }
            s
        };
        let mut next_h = vec![0.0; hidden];
        let mut next_c = vec![0.0; hidden];
        for u in 0..hidden {
            let input = logistic(pre(0, u));
            let forget = logistic(pre(1, u));
            let output = logistic(pre(2, u));
            let cand = pre(3, u).tanh();
            next_c[u] = forget * c[u] + input * cand;
            next_h[u] = output * next_c[u].tanh();
        }
        h = next_h;
        c = next_c;
        out.push(h.clone());
    }
    out
}

fn inputs(rng: &mut ChaCha8Rng, steps: usize, d: usize) -> Vec<Vec<f64>> {
    (0..steps)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect()
}

#[test]
fn two_step_recurrence() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let l = Lstm::new(4, 3, &mut rng);
        let xs = inputs(&mut rng, 2, 4);
        let (hs, _) = l.forward(&xs).unwrap();
        for (a, b) in hs.iter().flatten().zip(scalar_lstm(&l, &xs).iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn longer_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let l = Lstm::new(5, 6, &mut rng);
    let xs = inputs(&mut rng, 30, 5);
    let (hs, _) = l.forward(&xs).unwrap();
    for (a, b) in hs.iter().flatten().zip(scalar_lstm(&l, &xs).iter().flatten()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn bidirectional_concatenates_reversed_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let bi = BiLstm::new(3, 2, &mut rng);
    let xs = inputs(&mut rng, 5, 3);
    let (hs, _) = bi.forward(&xs).unwrap();
    let fwd = scalar_lstm(&bi.fwd, &xs);
    let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let mut bwd = scalar_lstm(&bi.bwd, &rev);
    bwd.reverse();
    for (t, h) in hs.iter().enumerate() {
        assert_eq!(h.len(), 4);
        let expected: Vec<f64> = fwd[t].iter().chain(&bwd[t]).copied().collect();
        for (a, b) in h.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn initialisation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let l = Lstm::new(7, 5, &mut rng);
    let bound = (1.0f64 / 5.0).sqrt();
    assert!(l.wx.as_slice().iter().chain(l.wh.as_slice()).all(|w| w.abs() <= bound));
    assert_eq!(&l.bias[5..10], &[1.0; 5]);
    assert!(l.bias[..5].iter().chain(&l.bias[10..]).all(|&b| b == 0.0));
    let (hs, _) = l.forward(&Vec::<Vec<f64>>::new()).unwrap();
    assert!(hs.is_empty());
}
