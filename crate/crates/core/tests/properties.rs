use proptest::prelude::*;
use rand::Rng;

use gigvad::gig::{
    enhance, global_pattern, video_level_loss, AffineHead, FeatureMaps, GpcVector, HeadParams, VideoLabels,
};
use gigvad::inference::{
    gaussian_smooth, roc_auc, score_video, window_ranges, FrameScoreSeries, ScoreConfig,
};
use gigvad::head::predict;
use gigvad::numerics::ops::{reduce_max, sigmoid_scalar};
use gigvad::numerics::{GradTape, Tensor};
use gigvad::objectives::{multiclass_loss, segment_overall_loss, sparsity_loss, total_loss, Lambdas};
use gigvad::rng::{stream, tag};
use gigvad::spatial::{consensus, relation_scores, select_topk, ConsensusScore, SegmentScores};
use gigvad::training::{
    dropout, sample_segments, synthetic_backbone, BackboneConfig, Mode, VideoSpec,
};

fn tensor(shape: Vec<usize>) -> impl Strategy<Value = Tensor> {
    let n = shape.iter().product::<usize>();
    prop::collection::vec(-5.0f64..5.0, n).prop_map(move |d| Tensor::new(shape.clone(), d).unwrap())
}

fn dims4() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 4)
}

fn maps() -> impl Strategy<Value = FeatureMaps> {
    dims4().prop_flat_map(tensor).prop_map(|t| FeatureMaps::new(t).unwrap())
}

fn unit_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(0.0f64..1.0, rows * cols)
        .prop_map(move |d| Tensor::new(vec![rows, cols], d).unwrap())
}

proptest! {
    #[test]
    fn sigmoid_open_interval(x in -30.0f64..30.0) {
        let s = sigmoid_scalar(x);
        prop_assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn sigmoid_closed_interval_everywhere(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = sigmoid_scalar(x);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn reduce_max_matches_scan(
        (shape, mask) in (prop::collection::vec(1usize..=4, 1..=4))
            .prop_flat_map(|s| { let r = s.len(); (Just(s), prop::collection::vec(any::<bool>(), r)) }),
        seed in any::<u64>(),
    ) {
        let mut rng = stream(seed, &[]);
        let n: usize = shape.iter().product();
        // coarse values so ties are common
        let data: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
        let x = Tensor::new(shape.clone(), data.clone()).unwrap();
        let axes: Vec<usize> = (0..shape.len()).filter(|&a| mask[a]).collect();
        let got = reduce_max(&x, &axes).unwrap();

        let kept: Vec<usize> = (0..shape.len()).filter(|a| !axes.contains(a)).collect();
        let out_len: usize = kept.iter().map(|&a| shape[a]).product();
        let mut want = vec![f64::NEG_INFINITY; out_len];
        for (flat, &v) in data.iter().enumerate() {
            let mut rem = flat;
            let mut idx = vec![0; shape.len()];
            for a in (0..shape.len()).rev() {
                idx[a] = rem % shape[a];
                rem /= shape[a];
            }
            let mut o = 0;
            for &a in &kept {
                o = o * shape[a] + idx[a];
            }
            if v > want[o] {
                want[o] = v;
            }
        }
        prop_assert_eq!(got.values.data(), want.as_slice());
    }

    #[test]
    fn fan_out_doubles_gradient(x in tensor(vec![2, 3])) {
        let mut tape = GradTape::new();
        let v = tape.leaf(x.clone());
        let s = tape.sigmoid(v).unwrap();
        let once = tape.sum(s).unwrap();
        let twice = tape.add(once, once).unwrap();
        let g1 = tape.backward(once).unwrap().get(v).unwrap().clone();
        let g2 = tape.backward(twice).unwrap().get(v).unwrap().clone();
        for (a, b) in g1.data().iter().zip(g2.data()) {
            prop_assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn global_pattern_matches_loops(x in maps()) {
        let (t, w, h, d) = x.dims();
        let data = x.tensor().data();
        let g = global_pattern(&x);
        for c in 0..d {
            let mut best = f64::NEG_INFINITY;
            for s in 0..t {
                for i in 0..w {
                    for j in 0..h {
                        best = best.max(data[((s * w + i) * h + j) * d + c]);
                    }
                }
            }
            prop_assert_eq!(g.g.data()[c], best);
        }
    }

    #[test]
    fn enhance_identity_and_amplification(x in maps(), g_seed in any::<u64>()) {
        let d = x.channels();
        let mut rng = stream(g_seed, &[]);
        let g = GpcVector { g: Tensor::new(vec![d], (0..d).map(|_| rng.random_range(-20.0..20.0)).collect()).unwrap() };
        let e = enhance(&x, &g).unwrap();
        for (i, (&xe, &xi)) in e.tensor().data().iter().zip(x.tensor().data()).enumerate() {
            let factor = 1.0 + sigmoid_scalar(g.g.data()[i % d]);
            prop_assert!(factor > 1.0 && factor < 2.0);
            prop_assert_eq!(xe, factor * xi);
        }
    }

    #[test]
    fn enhance_monotone_for_nonnegative(x in maps(), bump in 0.0f64..3.0, at in any::<prop::sample::Index>()) {
        let pos = FeatureMaps::new(x.tensor().map(f64::abs).unwrap()).unwrap();
        let g = global_pattern(&pos);
        let mut raised = pos.tensor().clone();
        let i = at.index(raised.len());
        raised.data_mut()[i] += bump;
        let raised = FeatureMaps::new(raised).unwrap();
        let a = enhance(&pos, &g).unwrap();
        let b = enhance(&raised, &g).unwrap();
        for (u, v) in a.tensor().data().iter().zip(b.tensor().data()) {
            prop_assert!(v >= u);
        }
    }

    #[test]
    fn video_loss_nonnegative(s in 0.0f64..=1.0, y in any::<bool>()) {
        prop_assert!(video_level_loss(s, y) >= 0.0);
    }

    #[test]
    fn relation_bounded_and_scale_free(x in maps(), alpha in 0.01f64..100.0, beta in 0.01f64..100.0) {
        let g = global_pattern(&x);
        let xhat = enhance(&x, &g).unwrap();
        let r = relation_scores(&g, &xhat).unwrap();
        prop_assert!(r.r.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        let g2 = GpcVector { g: g.g.map(|v| alpha * v).unwrap() };
        let x2 = FeatureMaps::new(xhat.tensor().map(|v| beta * v).unwrap()).unwrap();
        let r2 = relation_scores(&g2, &x2).unwrap();
        for (a, b) in r.r.data().iter().zip(r2.r.data()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn topk_all_is_mean(x in (1usize..=4, 1usize..=4, 1usize..=4).prop_flat_map(|(w, h, d)| tensor(vec![w, h, d])),
                        seed in any::<u64>()) {
        let (w, h, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let mut rng = stream(seed, &[]);
        let r = Tensor::new(vec![w, h], (0..w * h).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let got = select_topk(&x, &r, w * h).unwrap();
        for c in 0..d {
            let mean = (0..w * h).map(|cell| x.data()[cell * d + c]).sum::<f64>() / (w * h) as f64;
            prop_assert!((got.data()[c] - mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn consensus_monotone_in_entries(s in (1usize..=8, 2usize..=4).prop_flat_map(|(t, m)| unit_matrix(t, m)),
                                     p_frac in 0.0f64..1.0, at in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
        let t = s.shape()[0];
        let p = 1 + ((t - 1) as f64 * p_frac) as usize;
        let base = consensus(&SegmentScores { s: s.clone() }, p).unwrap();
        let mut raised = s.clone();
        let i = at.index(raised.len());
        raised.data_mut()[i] += bump;
        let after = consensus(&SegmentScores { s: raised }, p).unwrap();
        for (a, b) in base.s_t.data().iter().zip(after.s_t.data()) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn consensus_ignores_segment_order(s in (1usize..=8, 2usize..=4).prop_flat_map(|(t, m)| unit_matrix(t, m)),
                                       p_frac in 0.0f64..1.0, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let (t, m) = (s.shape()[0], s.shape()[1]);
        let p = 1 + ((t - 1) as f64 * p_frac) as usize;
        let mut order: Vec<usize> = (0..t).collect();
        order.shuffle(&mut stream(seed, &[]));
        let permuted: Vec<f64> = order.iter().flat_map(|&r| s.data()[r * m..(r + 1) * m].to_vec()).collect();
        let a = consensus(&SegmentScores { s: s.clone() }, p).unwrap();
        let b = consensus(&SegmentScores { s: Tensor::new(vec![t, m], permuted).unwrap() }, p).unwrap();
        // the picked multiset is order independent; its sum is not bitwise
        for (u, v) in a.s_t.data().iter().zip(b.s_t.data()) {
            prop_assert!((u - v).abs() <= 1e-15);
        }
    }

    #[test]
    fn losses_nonnegative(s in (1usize..=8).prop_flat_map(|t| unit_matrix(t, 4)),
                          y in prop::collection::vec(any::<bool>(), 3), gs in 0.0f64..=1.0) {
        let labels = VideoLabels::new(y).unwrap();
        let seg = SegmentScores { s };
        let cs = consensus(&seg, 1).unwrap();
        let b = total_loss(
            multiclass_loss(&cs, &labels).unwrap(),
            segment_overall_loss(&cs, labels.y_star()),
            video_level_loss(gs, labels.y_star()),
            sparsity_loss(&seg),
            Lambdas::default(),
        ).unwrap();
        for v in [b.l_s, b.l_s_star, b.l_g_star, b.l_sparse, b.l_vs, b.total] {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn multiclass_loss_channel_equivariant(s_t in prop::collection::vec(0.0f64..1.0, 4),
                                           y in prop::collection::vec(any::<bool>(), 3), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..3).collect();
        perm.shuffle(&mut stream(seed, &[]));
        let cs = |v: Vec<f64>| ConsensusScore { s_star: v[1..].iter().copied().fold(0.0, f64::max), s_t: Tensor::new(vec![4], v).unwrap(), p: 1 };
        let mut s2 = vec![s_t[0]];
        s2.extend(perm.iter().map(|&c| s_t[1 + c]));
        let y2: Vec<bool> = perm.iter().map(|&c| y[c]).collect();
        let a = multiclass_loss(&cs(s_t), &VideoLabels::new(y).unwrap()).unwrap();
        let b = multiclass_loss(&cs(s2), &VideoLabels::new(y2).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-15);
    }

    #[test]
    fn smoothing_commutes_with_shift(x in prop::collection::vec(0.0f64..1.0, 1..60), c in -5.0f64..5.0) {
        let a = gaussian_smooth(&x, 2.0).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let b = gaussian_smooth(&shifted, 2.0).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u + c - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn auc_invariant_under_cube(scores in prop::collection::vec(-2.0f64..2.0, 2..80), seed in any::<u64>()) {
        let mut rng = stream(seed, &[]);
        let mut labels: Vec<bool> = scores.iter().map(|_| rng.random::<bool>()).collect();
        labels[0] = true;
        labels[1] = false;
        let cubed: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
        // cubing can merge distinct floats only below ~1e-100; inputs are far from that
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&cubed, &labels).unwrap());
    }
}

#[test]
fn sparsity_step_lowers_segment_scores() {
    let mut rng = stream(5, &[]);
    for _ in 0..50 {
        let xs = Tensor::new(vec![6, 5], (0..30).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let head = AffineHead::init(4, 5, &mut rng);
        let overall = |w: &Tensor, b: &Tensor| {
            let h = AffineHead { weight: w.clone(), bias: b.clone() };
            let s = h.apply(&xs).unwrap().map(sigmoid_scalar).unwrap();
            sparsity_loss(&SegmentScores { s })
        };
        let mut tape = GradTape::new();
        let (w, b, x) = (tape.leaf(head.weight.clone()), tape.leaf(head.bias.clone()), tape.leaf(xs.clone()));
        let logits = tape.affine(w, b, x).unwrap();
        let seg = tape.sigmoid(logits).unwrap();
        let anomaly = tape.narrow_last(seg, 1, 3).unwrap();
        let per_seg = tape.reduce_max(anomaly, &[1]).unwrap();
        let loss = tape.sum(per_seg).unwrap();
        if tape.selection_margin() < 1e-3 {
            continue;
        }
        let grads = tape.backward(loss).unwrap();
        let lr = 1e-3;
        let step = |p: &Tensor, g: &Tensor| p.zip_map(g, |a, b| a - lr * b).unwrap();
        let before = overall(&head.weight, &head.bias);
        let after = overall(&step(&head.weight, grads.get(w).unwrap()), &step(&head.bias, grads.get(b).unwrap()));
        assert!(after < before, "{after} >= {before}");
    }
}

#[test]
fn dropout_preserves_expectation() {
    let mut rng = stream(9, &[]);
    let x = Tensor::full(&[100_000], 0.7);
    let y = dropout(&x, 0.5, Mode::Train, &mut rng).unwrap();
    let mean = y.data().iter().sum::<f64>() / 1e5;
    assert!((mean - 0.7).abs() <= 0.007, "{mean}");
    assert_eq!(dropout(&x, 0.5, Mode::Eval, &mut rng).unwrap(), x);
}

#[test]
fn random_labels_average_half_auc() {
    let mut rng = stream(13, &[]);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let mut total = 0.0;
    for _ in 0..100 {
        let labels: Vec<bool> = (0..10_000).map(|_| rng.random::<bool>()).collect();
        total += roc_auc(&scores, &labels).unwrap();
    }
    let mean = total / 100.0;
    assert!((mean - 0.5).abs() <= 0.05, "{mean}");
}

#[test]
fn score_video_independent_of_window_order() {
    let mut rng = stream(21, &[]);
    let params = HeadParams::init(2, 8, &mut rng).unwrap();
    let labels = VideoLabels::from_classes(2, &[2]).unwrap();
    let video = VideoSpec::new(3, 41, labels, vec![gigvad::training::AnomalySpan { class: 2, start: 10, end: 25 }]).unwrap();
    let cfg = ScoreConfig::new(2, BackboneConfig { channels: 8, ..BackboneConfig::default() });
    let got = score_video(&video, &params, 77, &cfg).unwrap();

    let mut sums = vec![0.0; 41 * 3];
    let mut counts = vec![0.0; 41];
    for (start, end) in window_ranges(41, 6, 3).into_iter().rev() {
        let mut wrng = stream(77, &[tag::WINDOW, 3, start as u64]);
        let clips: Vec<Vec<usize>> = sample_segments(end - start + 1, 1, 6, 1, &mut wrng)
            .into_iter()
            .map(|s| s.into_iter().map(|f| f + start).collect())
            .collect();
        let x = synthetic_backbone(&clips, &video, &cfg.backbone, 77).unwrap();
        let row = predict(&params, &x, 2, 1).unwrap().consensus.s_t;
        for f in start..=end {
            counts[f] += 1.0;
            for c in 0..3 {
                sums[f * 3 + c] += row.data()[c];
            }
        }
    }
    let want: Vec<f64> = sums.iter().enumerate().map(|(i, s)| s / counts[i / 3]).collect();
    let want = FrameScoreSeries::new(3, want).unwrap();
    for f in 0..41 {
        for (a, b) in got.frame(f).iter().zip(want.frame(f)) {
            assert!((a - b).abs() <= 1e-15);
        }
    }
}
