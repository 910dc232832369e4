use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topirank_core::embeddings::LayeredEmbeddings;
use topirank_core::matching::{interest_features, semantic_features, translation_matrix, KernelBank};

const MUS: [f64; 11] = [-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
const SIGMAS: [f64; 11] = [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 1e-3];

fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for k in 0..a.len() {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

fn k(z: usize, x: f64) -> f64 {
    (-(x - MUS[z]).powi(2) / (2.0 * SIGMAS[z] * SIGMAS[z])).exp()
}

fn vector(e: &LayeredEmbeddings, l: usize, t: usize) -> Vec<f64> {
    e.vector(l, t).iter().map(|&v| v as f64).collect()
}

fn semantic_oracle(q: &LayeredEmbeddings, d: &LayeredEmbeddings) -> Vec<f64> {
    let mut out = Vec::new();
    for l in 0..q.layers() {
        for z in 0..11 {
            let mut phi = 0.0;
            for i in 0..q.tokens() {
                let mut s = 0.0;
                for j in 0..d.tokens() {
                    s += k(z, naive_cos(&vector(q, l, i), &vector(d, l, j)));
                }
                phi += s.max(1e-10).ln();
            }
            out.push(phi);
        }
    }
    out
}

fn random_embeddings(rng: &mut ChaCha8Rng, layers: usize, tokens: usize, dim: usize) -> LayeredEmbeddings {
    let data = (0..layers * tokens * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    LayeredEmbeddings::new(layers, tokens, dim, data).unwrap()
}

#[test]
fn semantic_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bank = KernelBank::default();
    for _ in 0..200 {
        let layers = rng.random_range(1..=3);
        let dim = rng.random_range(2..=6);
        let (m, n) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let q = random_embeddings(&mut rng, layers, m, dim);
        let mut d = random_embeddings(&mut rng, layers, n, dim);
        if rng.random_bool(0.3) {
            // give the exact-match kernel something to find
            let mut data = d.as_slice().to_vec();
            for l in 0..layers {
                let src = (l * q.tokens()) * dim;
                let dst = (l * d.tokens()) * dim;
                data[dst..dst + dim].copy_from_slice(&q.as_slice()[src..src + dim]);
            }
            d = LayeredEmbeddings::new(layers, d.tokens(), dim, data).unwrap();
        }
        let got = semantic_features(&q, &d, &bank).unwrap().phi;
        let want = semantic_oracle(&q, &d);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
        }
    }
}

#[test]
fn interest_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let bank = KernelBank::default();
    for _ in 0..200 {
        let t = rng.random_range(2..=8);
        let p: Vec<f64> = (0..t).map(|_| rng.random::<f64>()).collect();
        let td: Vec<f64> = if rng.random_bool(0.2) {
            p.iter().map(|x| x * 3.0).collect()
        } else {
            (0..t).map(|_| rng.random::<f64>()).collect()
        };
        let got = interest_features(&p, &td, &bank).unwrap();
        let m = naive_cos(&p, &td);
        assert!((got.similarity - m).abs() < 1e-12);
        for z in 0..11 {
            let want = k(z, m).max(1e-10).ln();
            assert!((got.theta[z] - want).abs() <= 1e-9, "z={z}: {} vs {want}", got.theta[z]);
        }
    }
}

#[test]
fn translation_matrix_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let dim = rng.random_range(1..=8);
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=6);
        let q: Vec<f32> = (0..m * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let d: Vec<f32> = (0..n * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let tm = translation_matrix(&q, &d, dim).unwrap();
        assert_eq!((tm.rows, tm.cols), (m, n));
        for i in 0..m {
            for j in 0..n {
                let a: Vec<f64> = q[i * dim..(i + 1) * dim].iter().map(|&v| v as f64).collect();
                let b: Vec<f64> = d[j * dim..(j + 1) * dim].iter().map(|&v| v as f64).collect();
                assert!((tm.get(i, j) - naive_cos(&a, &b)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn hand_computed_single_pair() {
    // one query token, one doc token at cosine 0.5
    let q = LayeredEmbeddings::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
    let d = LayeredEmbeddings::new(1, 1, 2, vec![0.5, 0.75f32.sqrt()]).unwrap();
    let phi = semantic_features(&q, &d, &KernelBank::default()).unwrap().phi;
    // kernel centered on 0.5 sees distance ~0
    assert!(phi[7].abs() < 1e-6);
    // neighbours at ±0.2: -(0.2)^2 / 0.02 = -2
    assert!((phi[6] + 2.0).abs() < 1e-6);
    assert!((phi[8] + 2.0).abs() < 1e-6);
    // exact-match kernel far below the floor
    assert_eq!(phi[10], 1e-10f64.ln());
}

fn embeddings_strategy() -> impl Strategy<Value = (LayeredEmbeddings, LayeredEmbeddings, Vec<usize>)> {
    (1usize..=3, 1usize..=5, 1usize..=5, 2usize..=6).prop_flat_map(|(layers, m, n, dim)| {
        (
            prop::collection::vec(-1.0f32..1.0, layers * m * dim),
            prop::collection::vec(-1.0f32..1.0, layers * n * dim),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(qd, dd, perm)| {
                (
                    LayeredEmbeddings::new(layers, m, dim, qd).unwrap(),
                    LayeredEmbeddings::new(layers, n, dim, dd).unwrap(),
                    perm,
                )
            })
    })
}

fn permute_tokens(e: &LayeredEmbeddings, perm: &[usize]) -> LayeredEmbeddings {
    let mut data = Vec::with_capacity(e.as_slice().len());
    for l in 0..e.layers() {
        for &t in perm {
            data.extend_from_slice(e.vector(l, t));
        }
    }
    LayeredEmbeddings::new(e.layers(), e.tokens(), e.dim(), data).unwrap()
}

proptest! {
    #[test]
    fn doc_token_order_does_not_matter((q, d, perm) in embeddings_strategy()) {
        let bank = KernelBank::default();
        let a = semantic_features(&q, &d, &bank).unwrap().phi;
        let b = semantic_features(&q, &permute_tokens(&d, &perm), &bank).unwrap().phi;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn positive_scaling_does_not_matter((q, d, _) in embeddings_strategy(), k in -8i32..8, c in 0.01f32..100.0) {
        let bank = KernelBank::default();
        let a = semantic_features(&q, &d, &bank).unwrap().phi;
        // powers of two scale f32 values exactly
        let p = 2f32.powi(k);
        let b = semantic_features(&q.scaled(p), &d.scaled(p), &bank).unwrap().phi;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
        // arbitrary factors round each value, moving cosines by ~1e-7
        let c = semantic_features(&q.scaled(c), &d.scaled(c), &bank).unwrap().phi;
        for (x, y) in a.iter().zip(&c) {
            prop_assert!((x - y).abs() <= 1e-3 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn interest_features_are_finite(p in prop::collection::vec(0.0f64..1.0, 5), t in prop::collection::vec(0.0f64..1.0, 5)) {
        let f = interest_features(&p, &t, &KernelBank::default()).unwrap();
        prop_assert!(f.theta.iter().all(|v| v.is_finite() && *v <= 0.0));
        prop_assert!((-1.0..=1.0).contains(&f.similarity));
    }
}
