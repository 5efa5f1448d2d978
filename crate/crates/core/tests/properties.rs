//! Property tests against independent brute-force oracles.

use efs_core::dataset::{ClassLegend, ClassificationMap, SampleSet};
use efs_core::ensemble::{fuse_maps, majority_vote_pixel};
use efs_core::eval::{confusion_matrix, kappa, pairwise_kappa, pearson_correlation, z_test, ConfusionMatrix};
use efs_core::linalg::{Cholesky, Matrix};
use efs_core::separability::{
    bhattacharyya, divergence, multiclass_separability, transform_statistics, transformed_divergence,
    SeparabilityIndex, SeparabilityOptions,
};
use efs_core::stats::{estimate_class_statistics, project_to_subset, regularize_covariance, BandSubset, ClassStatistics, StatisticsSet};
use efs_core::subset::{enumerate_band_subsets, rank_subsets, SearchOptions};
use efs_core::svm::GaussianMlClassifier;
use efs_core::ClassId;
use proptest::prelude::*;

fn legend(k: usize) -> ClassLegend {
    ClassLegend::from_names((0..k).map(|i| format!("class{i:02}"))).unwrap()
}

/// Two-pass covariance, written independently of the crate's estimator.
fn two_pass(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let cov = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect();
    (mean, cov)
}

fn rows_strategy(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), 2..30)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Random SPD matrix `B Bᵀ + 0.5 I`.
fn spd_strategy(d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_map(move |v| {
        let b = Matrix::from_row_major(d, v).unwrap();
        b.matmul(&b.transpose()).add_diagonal(0.5)
    })
}

fn class_strategy(d: usize) -> impl Strategy<Value = ClassStatistics> {
    (prop::collection::vec(-5.0f64..5.0, d), spd_strategy(d))
        .prop_map(|(mean, cov)| ClassStatistics::new(0, 10, mean, cov).unwrap())
}

fn pair_strategy() -> impl Strategy<Value = (ClassStatistics, ClassStatistics)> {
    (1usize..5).prop_flat_map(|d| (class_strategy(d), class_strategy(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn covariance_matches_two_pass_oracle(rows in (1usize..5).prop_flat_map(rows_strategy)) {
        let d = rows[0].len();
        let mut s = SampleSet::new(d);
        for r in &rows {
            s.push(r, 0).unwrap();
        }
        let st = estimate_class_statistics(&s, &legend(1)).unwrap();
        let (mean, cov) = two_pass(&rows);
        let c = st.class(0);
        for i in 0..d {
            prop_assert!(close(c.mean[i], mean[i], 1e-10));
            for j in 0..d {
                prop_assert!(close(c.covariance[(i, j)], cov[i][j], 1e-10), "{} vs {}", c.covariance[(i, j)], cov[i][j]);
            }
        }
        prop_assert!(c.covariance.is_symmetric(1e-12));
    }

    #[test]
    fn projection_commutes_with_estimation(
        rows in rows_strategy(4),
        mask in prop::collection::vec(any::<bool>(), 4),
    ) {
        let bands: Vec<usize> = (0..4).filter(|&i| mask[i]).collect();
        prop_assume!(!bands.is_empty());
        let subset = BandSubset::new(bands.clone(), 4).unwrap();
        let mut s = SampleSet::new(4);
        for r in &rows {
            s.push(r, 0).unwrap();
        }
        let full = estimate_class_statistics(&s, &legend(1)).unwrap();
        let projected_stats = project_to_subset(&full, &subset).unwrap();
        let direct = estimate_class_statistics(&s.project(&bands).unwrap(), &legend(1)).unwrap();
        prop_assert_eq!(projected_stats, direct);
    }

    #[test]
    fn regularisation_is_idempotent(m in (1usize..6).prop_flat_map(spd_strategy)) {
        let once = regularize_covariance(&m).unwrap();
        prop_assert_eq!(&once, &m);
        prop_assert_eq!(regularize_covariance(&once).unwrap(), once);
    }

    #[test]
    fn regularised_low_rank_matrices_factor(v in prop::collection::vec(-3.0f64..3.0, 1..5)) {
        // rank-one v vᵀ
        let d = v.len();
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = v[i] * v[j];
            }
        }
        let r = regularize_covariance(&m).unwrap();
        prop_assert!(Cholesky::factor(&r).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn indices_are_symmetric_and_bounded((a, b) in pair_strategy()) {
        let ab = [bhattacharyya(&a, &b).unwrap(), divergence(&a, &b).unwrap(), transformed_divergence(&a, &b).unwrap()];
        let ba = [bhattacharyya(&b, &a).unwrap(), divergence(&b, &a).unwrap(), transformed_divergence(&b, &a).unwrap()];
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
            prop_assert!(*x >= 0.0);
        }
        prop_assert!(ab[2] <= 2000.0);
    }

    #[test]
    fn indices_invariant_under_linear_maps(
        (a, b) in pair_strategy(),
        seed in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let d = a.dim();
        // well-conditioned: identity plus a small perturbation
        let mut map = Matrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                map[(i, j)] += 0.4 * seed[i * 4 + j];
            }
        }
        let det_ok = Cholesky::factor(&map.matmul(&map.transpose())).is_ok();
        prop_assume!(det_ok);
        let (ta, tb) = (transform_statistics(&a, &map), transform_statistics(&b, &map));
        let b0 = bhattacharyya(&a, &b).unwrap();
        let b1 = bhattacharyya(&ta, &tb).unwrap();
        let d0 = divergence(&a, &b).unwrap();
        let d1 = divergence(&ta, &tb).unwrap();
        prop_assert!(close(b0, b1, 1e-8), "B {b0} vs {b1}");
        prop_assert!(close(d0, d1, 1e-8), "D {d0} vs {d1}");
    }
}

#[test]
fn indices_increase_with_mean_separation() {
    let class = |m: f64| ClassStatistics::new(0, 1, vec![m], Matrix::from_rows(&[&[2.0]]).unwrap()).unwrap();
    let base = class(0.0);
    let mut last = [0.0f64; 3];
    for step in 1..=12 {
        let other = class(step as f64 * 0.5);
        let now = [
            bhattacharyya(&base, &other).unwrap(),
            divergence(&base, &other).unwrap(),
            transformed_divergence(&base, &other).unwrap(),
        ];
        for (n, l) in now.iter().zip(&last) {
            assert!(n > l, "{now:?} after {last:?}");
        }
        last = now;
    }
}

/// Three 1-D classes scored by listing the pairs by hand.
#[test]
fn multiclass_mean_over_explicit_pairs() {
    let params = [(0.0, 1.0), (2.0, 1.0), (0.0, 4.0)];
    let classes: Vec<ClassStatistics> = params
        .iter()
        .enumerate()
        .map(|(i, &(m, v))| ClassStatistics::new(i as ClassId, 5, vec![m], Matrix::from_rows(&[&[v]]).unwrap()).unwrap())
        .collect();
    let set = StatisticsSet::new(classes).unwrap();
    // D(0,1) = 4; D(0,2) = 1.125; D(1,2) = 1/2(-3)(1/4 - 1) + 1/2 (1 + 1/4) 4 = 1.125 + 2.5
    let want = (4.0 + 1.125 + 3.625) / 3.0;
    let got = multiclass_separability(&set, &BandSubset::full(1), SeparabilityIndex::Divergence, &SeparabilityOptions::default())
        .unwrap()
        .value;
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

fn ranking_fixture() -> StatisticsSet {
    // 5 bands, 3 classes, distinct per-band separations
    let gaps = [0.3, 1.7, 0.9, 2.4, 0.05];
    let classes = (0..3)
        .map(|c| {
            let mean: Vec<f64> = gaps.iter().map(|g| g * c as f64).collect();
            let cov = efs_core::synth::banded_covariance(&[1.0, 1.2, 0.8, 1.5, 1.0], 0.3 + 0.1 * c as f64);
            ClassStatistics::new(c as ClassId, 50, mean, cov).unwrap()
        })
        .collect();
    StatisticsSet::new(classes).unwrap()
}

#[test]
fn ranking_equals_brute_force_resort() {
    let st = ranking_fixture();
    let opts = SearchOptions::default();
    for idx in SeparabilityIndex::ALL {
        for k in 1..=5 {
            let r = rank_subsets(&st, k, idx, &opts).unwrap();
            // score in reverse enumeration order, then sort independently
            let mut oracle: Vec<(Vec<usize>, f64)> = enumerate_band_subsets(5, k)
                .unwrap()
                .into_iter()
                .rev()
                .map(|s| {
                    let v = multiclass_separability(&st, &s, idx, &opts.separability).unwrap().value;
                    (s.indices().to_vec(), v)
                })
                .collect();
            oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let got: Vec<(Vec<usize>, f64)> = r.entries.iter().map(|(s, v)| (s.indices().to_vec(), *v)).collect();
            assert_eq!(got, oracle);
            assert!(r.entries.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}

#[test]
fn band_carrying_all_separation_tops_every_ranking() {
    // classes differ only in band 2; other bands identically distributed
    let mk = |c: ClassId, m: f64| {
        let mut mean = vec![1.0; 4];
        mean[2] = m;
        ClassStatistics::new(c, 10, mean, efs_core::synth::banded_covariance(&[1.0, 2.0, 1.0, 0.5], 0.0)).unwrap()
    };
    let st = StatisticsSet::new(vec![mk(0, 0.0), mk(1, 3.0)]).unwrap();
    for idx in SeparabilityIndex::ALL {
        for k in 1..=3 {
            let r = rank_subsets(&st, k, idx, &SearchOptions::default()).unwrap();
            let best = r.entries[0].1;
            for (s, v) in &r.entries {
                if *v == best {
                    assert!(s.indices().contains(&2), "{idx} k={k}: {s}");
                }
            }
            assert!(r.entries[0].0.indices().contains(&2));
        }
    }
}

/// Exhaustive mode oracle over all 3^5 five-voter label vectors.
#[test]
fn majority_vote_matches_mode_enumeration() {
    let legend = legend(3);
    let mut columns: Vec<Vec<ClassId>> = vec![Vec::new(); 5];
    let mut expected = Vec::new();
    for code in 0..243u32 {
        let mut c = code;
        let mut labels = [0 as ClassId; 5];
        for l in labels.iter_mut() {
            *l = (c % 3) as ClassId;
            c /= 3;
        }
        let counts: Vec<usize> = (0..3).map(|k| labels.iter().filter(|&&l| l == k).count()).collect();
        let top = *counts.iter().max().unwrap();
        let mode = counts.iter().position(|&n| n == top).unwrap() as ClassId;
        assert_eq!(majority_vote_pixel(&labels).unwrap(), mode, "{labels:?}");
        for (col, l) in columns.iter_mut().zip(labels) {
            col.push(l);
        }
        expected.push(mode);
    }
    let maps: Vec<ClassificationMap> = columns
        .into_iter()
        .map(|labels| ClassificationMap::new(243, 1, labels, legend.clone()).unwrap())
        .collect();
    assert_eq!(fuse_maps(&maps).unwrap().labels(), expected.as_slice());
}

proptest! {
    #[test]
    fn fusion_is_permutation_invariant(
        cols in prop::collection::vec(prop::collection::vec(0u16..4, 12), 1..7),
        rot in 0usize..7,
    ) {
        let legend = legend(4);
        let maps: Vec<ClassificationMap> = cols.iter().map(|c| ClassificationMap::new(4, 3, c.clone(), legend.clone()).unwrap()).collect();
        let mut shuffled = maps.clone();
        shuffled.rotate_left(rot % maps.len());
        shuffled.reverse();
        prop_assert_eq!(fuse_maps(&maps).unwrap(), fuse_maps(&shuffled).unwrap());
    }

    #[test]
    fn vote_unanimity_and_monotonicity(labels in prop::collection::vec(0u16..5, 1..9), l in 0u16..5) {
        prop_assert_eq!(majority_vote_pixel(&vec![l; labels.len()]).unwrap(), l);
        let winner = majority_vote_pixel(&labels).unwrap();
        let mut more = labels.clone();
        more.push(winner);
        prop_assert_eq!(majority_vote_pixel(&more).unwrap(), winner);
    }

    #[test]
    fn kappa_invariant_under_relabelling(
        pairs in prop::collection::vec((0u16..3, 0u16..3), 5..60),
        perm_choice in 0usize..6,
    ) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let p = perms[perm_choice];
        let (pred, refr): (Vec<u16>, Vec<u16>) = pairs.iter().copied().unzip();
        let a = kappa(&confusion_matrix(&pred, &refr, 3).unwrap());
        let pred2: Vec<u16> = pred.iter().map(|&l| p[l as usize]).collect();
        let ref2: Vec<u16> = refr.iter().map(|&l| p[l as usize]).collect();
        let b = kappa(&confusion_matrix(&pred2, &ref2, 3).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pairwise_kappa_symmetric(a in prop::collection::vec(0u16..3, 10), b in prop::collection::vec(0u16..3, 10)) {
        let legend = legend(3);
        let ma = ClassificationMap::new(5, 2, a, legend.clone()).unwrap();
        let mb = ClassificationMap::new(5, 2, b, legend).unwrap();
        prop_assert_eq!(pairwise_kappa(&ma, &mb).unwrap(), pairwise_kappa(&mb, &ma).unwrap());
    }

    #[test]
    fn z_test_antisymmetric(p1 in 0.0f64..=1.0, n1 in 1u64..5000, p2 in 0.0f64..=1.0, n2 in 1u64..5000) {
        let a = z_test(p1, n1, p2, n2).unwrap();
        let b = z_test(p2, n2, p1, n1).unwrap();
        prop_assert!(a.z == -b.z || (a.z == 0.0 && b.z == 0.0));
        prop_assert_eq!(a.significant, a.z.abs() > 1.96);
    }

    #[test]
    fn pearson_affine_behaviour(
        xs in prop::collection::vec(-100.0f64..100.0, 3..20),
        noise in prop::collection::vec(-100.0f64..100.0, 20),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| 0.3 * x + n).collect();
        let r = match pearson_correlation(&xs, &ys) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let xs2: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let ys_neg: Vec<f64> = ys.iter().map(|y| -scale * y).collect();
        prop_assert!((pearson_correlation(&xs2, &ys).unwrap() - r).abs() < 1e-10);
        prop_assert!((pearson_correlation(&xs, &ys_neg).unwrap() + r).abs() < 1e-10);
        prop_assert!((-1.0..=1.0).contains(&r));
    }
}

#[test]
fn cross_tab_kappa_for_small_maps() {
    let legend = legend(2);
    let a = ClassificationMap::new(10, 1, vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 0], legend.clone()).unwrap();
    let b = ClassificationMap::new(10, 1, vec![0, 0, 1, 0, 1, 1, 0, 1, 1, 1], legend).unwrap();
    // a rows, b columns: [[3, 2], [1, 4]]
    let hand = ConfusionMatrix::from_counts(2, vec![3, 2, 1, 4]).unwrap();
    assert_eq!(pairwise_kappa(&a, &b).unwrap(), kappa(&hand));
    // p_o = 0.7, p_e = (5*4 + 5*6)/100 = 0.5
    assert!((kappa(&hand) - 0.4).abs() < 1e-12);
}

#[test]
fn confusion_matrix_ignores_sample_order() {
    let pred = [0u16, 1, 2, 2, 1, 0, 1];
    let refr = [0u16, 1, 1, 2, 0, 0, 2];
    let a = confusion_matrix(&pred, &refr, 3).unwrap();
    let order = [6, 2, 4, 0, 5, 1, 3];
    let p2: Vec<u16> = order.iter().map(|&i| pred[i]).collect();
    let r2: Vec<u16> = order.iter().map(|&i| refr[i]).collect();
    assert_eq!(a, confusion_matrix(&p2, &r2, 3).unwrap());
}

#[test]
fn ml_baseline_matches_brute_force_likelihood() {
    let st = ranking_fixture();
    let ml = GaussianMlClassifier::from_statistics(st.classes()).unwrap();
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 3.0
    };
    for _ in 0..500 {
        let x: Vec<f64> = (0..5).map(|_| next()).collect();
        // full Gaussian log density via explicit inverse and determinant
        let lls: Vec<f64> = st
            .classes()
            .iter()
            .map(|c| {
                let chol = Cholesky::factor(&c.covariance).unwrap();
                let inv = chol.inverse();
                let diff: Vec<f64> = x.iter().zip(&c.mean).map(|(a, b)| a - b).collect();
                let maha: f64 = (0..5).map(|i| (0..5).map(|j| diff[i] * inv[(i, j)] * diff[j]).sum::<f64>()).sum();
                -0.5 * maha - 0.5 * chol.log_det() - 2.5 * (2.0 * std::f64::consts::PI).ln()
            })
            .collect();
        let best = lls.iter().enumerate().fold(0, |b, (i, v)| if *v > lls[b] { i } else { b });
        assert_eq!(ml.predict(&x).unwrap() as usize, best);
    }
}

#[test]
fn ml_with_equal_spherical_covariances_is_nearest_mean() {
    let means = [[0.0, 0.0, 0.0], [3.0, 1.0, -1.0], [-2.0, 2.5, 0.5], [1.0, -2.0, 2.0]];
    let classes: Vec<ClassStatistics> = means
        .iter()
        .enumerate()
        .map(|(i, m)| ClassStatistics::new(i as ClassId, 9, m.to_vec(), Matrix::identity(3).scale(2.0)).unwrap())
        .collect();
    let ml = GaussianMlClassifier::from_statistics(&classes).unwrap();
    for a in -6..=6 {
        for b in -6..=6 {
            let x = [a as f64 * 0.55, b as f64 * 0.45, (a - b) as f64 * 0.3];
            let dist: Vec<f64> = means.iter().map(|m| m.iter().zip(&x).map(|(u, v)| (u - v) * (u - v)).sum()).collect();
            let nearest = dist.iter().enumerate().fold(0, |b, (i, v)| if *v < dist[b] { i } else { b });
            assert_eq!(ml.predict(&x).unwrap() as usize, nearest);
        }
    }
}
