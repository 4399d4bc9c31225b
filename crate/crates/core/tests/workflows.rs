use denseset::datagen::sample_in_ball;
use denseset::dense_ball::BallSearchParams;
use denseset::geometry::ceil_count;
use denseset::greedy_union::{BallLearner, EllipsoidLearner};
use denseset::spectral::mean_cov;
use denseset::{
    coverage_count, dense_ball, dense_ellipsoid, fit_conformal, gen_clusters, gen_pancake, gen_planted, greedy_union,
    min_enclosing_ball, opt_k_ball, sym_eig, volume_ratio_per_dim, Ellipsoid, GreedyParams, PointSet,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn tiny_planted_instance_against_the_oracle() {
    let inst = gen_planted(12, 3, 0.5, 1.0, 3.0, 11).unwrap();
    assert_eq!(inst.inlier_indices.len(), 6);
    let opt = opt_k_ball(&inst.points, 6).unwrap();
    assert!(opt.radius().unwrap() <= 1.0 + 1e-9);
    let b = dense_ball(&inst.points, &BallSearchParams::new(0.5, 0.2)).unwrap();
    assert!(volume_ratio_per_dim(&b, &opt).unwrap() <= 2.0 + 1e-9);
    assert!(coverage_count(&b, &inst.points).unwrap() >= 5);
}

#[test]
fn full_coverage_planted_instance() {
    let inst = gen_planted(10, 2, 1.0, 1.5, 3.0, 4).unwrap();
    let meb = min_enclosing_ball(&inst.points).unwrap();
    assert!(meb.radius().unwrap() <= 1.5 * (1.0 + 1e-9));
    assert_eq!(coverage_count(&meb, &inst.points).unwrap(), 10);
}

#[test]
fn pancake_inliers_are_flat() {
    for seed in 0..20 {
        let inst = gen_pancake(400, 16, 1, 0.5, seed).unwrap();
        let d = inst.points.dim();
        let (_, cov) = mean_cov(inst.inlier_indices.iter().map(|&i| inst.points.row(i)), d).unwrap();
        let vals = sym_eig(&cov, d).unwrap().0;
        assert!(vals[0] >= 100.0 * vals[1], "seed {seed}: {} vs {}", vals[0], vals[1]);
        assert!(inst.inlier_indices.iter().all(|&i| inst.planted.contains(inst.points.row(i)).unwrap()));
    }
}

#[test]
fn union_of_balls_on_clusters() {
    let inst = gen_clusters(150, 2, 3, 0.6, 8.0, 21).unwrap();
    let params = GreedyParams::new(0.6, 0.2, 3);
    let base = BallLearner {
        template: BallSearchParams::new(0.5, 0.5),
    };
    let out = greedy_union(&inst.points, &params, &base).unwrap();
    assert!(out.coverage as f64 > 0.6 * 150.0);
    assert!(out.union.members().iter().all(Ellipsoid::is_ball));
    // The union should not be wildly larger than the planted clusters.
    let planted_log: f64 = inst.planted.iter().map(|b| b.log_volume().exp()).sum::<f64>().ln();
    let per_dim = ((out.union.log_volume_upper() - planted_log) / 2.0).exp();
    let envelope = 4.0 * (3.0f64 / 0.2).ln() / 0.2;
    assert!(per_dim <= envelope, "{per_dim} > {envelope}");
}

#[test]
fn greedy_rounds_are_disjoint() {
    let inst = gen_clusters(90, 3, 2, 0.5, 6.0, 5).unwrap();
    let out = greedy_union(&inst.points, &GreedyParams::new(0.5, 0.2, 2), &EllipsoidLearner { tau_hat: None }).unwrap();
    let need = ceil_count(0.5 * 0.2 / 8.0, 90);
    assert!(out.rounds.iter().all(|r| r.marginal >= need));
    assert_eq!(
        out.rounds.iter().map(|r| r.marginal).sum::<usize>(),
        coverage_count(&out.union, &inst.points).unwrap()
    );
}

#[test]
fn conformal_coverage_on_iid_data() {
    let (d, n, alpha, gamma, trials): (usize, usize, f64, f64, u64) = (8, 2000, 0.1, 0.05, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let origin = vec![0.0; d];
    let rows: Vec<Vec<f64>> = (0..n).map(|_| sample_in_ball(&mut rng, &origin, 1.0)).collect();
    let y = PointSet::from_rows(&rows).unwrap();
    let mut hits = 0;
    let mut worst_ratio: f64 = 0.0;
    let planted = Ellipsoid::ball(origin.clone(), (1.0 - alpha + gamma).powf(1.0 / d as f64)).unwrap();
    for t in 0..trials {
        let p = fit_conformal(&y, alpha, gamma, 64, t).unwrap();
        let fresh = sample_in_ball(&mut rng, &origin, 1.0);
        if p.predict_contains(&fresh).unwrap() {
            hits += 1;
        }
        if t < 5 {
            worst_ratio = worst_ratio.max(volume_ratio_per_dim(&p.prediction_set(), &planted).unwrap());
        }
    }
    let rate = hits as f64 / trials as f64;
    let floor = 0.9 - 2.0 * (0.9f64 * 0.1 / trials as f64).sqrt();
    assert!(rate >= floor, "coverage {rate} < {floor}");
    assert!(worst_ratio <= 1.5, "per-dim ratio {worst_ratio}");
}

#[test]
fn predict_contains_matches_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..100).map(|_| sample_in_ball(&mut rng, &[1.0, 2.0, 3.0], 2.0)).collect();
    let y = PointSet::from_rows(&rows).unwrap();
    let p = fit_conformal(&y, 0.2, 0.1, 32, 1).unwrap();
    let set = p.base.scale(p.grid[p.chosen_index]).unwrap();
    for _ in 0..1000 {
        let q = sample_in_ball(&mut rng, &[1.0, 2.0, 3.0], 4.0);
        assert_eq!(p.predict_contains(&q).unwrap(), set.contains(&q).unwrap());
    }
    assert!(p.predict_contains(p.base.center()).unwrap());
}

#[test]
fn ellipsoid_is_never_worse_than_the_coarse_floor() {
    for seed in 0..5 {
        let inst = gen_planted(200, 8, 0.5, 1.0, 3.0, seed).unwrap();
        let e = dense_ellipsoid(&inst.points, 0.5, 0.2, None).unwrap();
        assert!(volume_ratio_per_dim(&e, &inst.planted).unwrap() <= 2.0);
    }
}
