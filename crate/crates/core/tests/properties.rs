use denseset::dense_ball::BallSearchParams;
use denseset::dense_ellipsoid::{ellipsoid_shape, precondition};
use denseset::geometry::ceil_count;
use denseset::linalg::norm_sq;
use denseset::spectral::mean_cov;
use denseset::{
    coverage_count, dense_ball, dense_ellipsoid, summarize, sym_eig, CoverageSet, Ellipsoid, PointSet, SetRecord,
};
use proptest::prelude::*;

fn points(max_n: usize, max_d: usize) -> impl Strategy<Value = PointSet> {
    (2..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| PointSet::new(v, d).unwrap())
    })
}

/// Points inside `B(0, 1)`.
fn unit_points(max_n: usize, max_d: usize) -> impl Strategy<Value = PointSet> {
    points(max_n, max_d).prop_map(|y| {
        let d = y.dim();
        let mut flat = Vec::new();
        for r in y.rows() {
            let len = norm_sq(r).sqrt().max(10.0);
            flat.extend(r.iter().map(|x| x / len));
        }
        PointSet::new(flat, d).unwrap()
    })
}

fn ball_for(y: &PointSet, r: f64, seed: usize) -> Ellipsoid {
    Ellipsoid::ball(y.row(seed % y.len()).to_vec(), r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_never_loses_points(y in points(30, 4), r in 0.0f64..20.0, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let e = ball_for(&y, r, 0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c_lo = coverage_count(&e.scale(lo).unwrap(), &y).unwrap();
        let c_hi = coverage_count(&e.scale(hi).unwrap(), &y).unwrap();
        prop_assert!(c_lo <= c_hi);
        prop_assert!(c_hi <= y.len());
    }

    #[test]
    fn union_covers_at_least_each_member(y in points(30, 3), r1 in 0.0f64..10.0, r2 in 0.0f64..10.0) {
        let a = ball_for(&y, r1, 0);
        let b = ball_for(&y, r2, 1);
        let u = CoverageSet::from_members(vec![a.clone(), b.clone()]).unwrap();
        let cu = coverage_count(&u, &y).unwrap();
        prop_assert!(cu >= coverage_count(&a, &y).unwrap());
        prop_assert!(cu >= coverage_count(&b, &y).unwrap());
        prop_assert!(cu <= y.len());
    }

    #[test]
    fn stretch_adds_log_factors(y in points(3, 4), f in prop::collection::vec(0.1f64..5.0, 4)) {
        let d = y.dim();
        let axes: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let e = Ellipsoid::new(y.row(0).to_vec(), axes.clone(), vec![1.0; d]).unwrap();
        let s = Ellipsoid::new(y.row(0).to_vec(), axes, f[..d].to_vec()).unwrap();
        let added: f64 = f[..d].iter().map(|x| x.ln()).sum();
        prop_assert!((s.log_volume() - e.log_volume() - added).abs() <= 1e-9);
    }

    #[test]
    fn few_directions_carry_large_variance(y in unit_points(40, 10)) {
        let s = summarize(&y).unwrap();
        for q in 1..=8usize {
            prop_assert!(denseset::count_eigs_above(&s, 1.0 / q as f64) <= q);
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(y in points(20, 6)) {
        let d = y.dim();
        let (_, cov) = mean_cov(y.rows(), d).unwrap();
        let (vals, vecs) = sym_eig(&cov, d).unwrap();
        let scale = cov.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..d {
            for j in 0..d {
                let r: f64 = (0..d).map(|k| vals[k] * vecs[k * d + i] * vecs[k * d + j]).sum();
                prop_assert!((r - cov[i * d + j]).abs() <= 1e-9 * scale);
            }
        }
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn shape_and_preconditioning(y in unit_points(40, 12), tau in 1.0f64..3.0) {
        let d = y.dim();
        let s = summarize(&y).unwrap();
        let shape = ellipsoid_shape(&s, 1.0, tau).unwrap();
        // At most d / tau^2 directions can carry variance tau^2 / d.
        prop_assert!(shape.stretched() as f64 <= d as f64 / (tau * tau) + 1.0);
        let per_dim = (shape.log_det_half() / d as f64).exp();
        prop_assert!(per_dim <= (d as f64).powf(1.0 / (2.0 * tau * tau)) * (1.0 + 1e-9));
        let z = precondition(&y, &shape).unwrap();
        for (a, b) in y.rows().zip(z.rows()) {
            prop_assert!(norm_sq(b) <= norm_sq(a) * (1.0 + 1e-12) + 1e-15);
        }
        let lam = summarize(&z).unwrap().lambda_max();
        prop_assert!(lam <= tau * tau / d as f64 + 1e-9);
    }

    #[test]
    fn learners_meet_coverage(y in points(24, 3), delta in 0.3f64..0.9, gamma in 0.05f64..0.5) {
        let need = ceil_count((1.0 - gamma) * delta, y.len());
        let b = dense_ball(&y, &BallSearchParams::new(delta, gamma)).unwrap();
        let e = dense_ellipsoid(&y, delta, gamma, None).unwrap();
        prop_assert!(coverage_count(&b, &y).unwrap() >= need);
        prop_assert!(coverage_count(&e, &y).unwrap() >= need);
        let (lv, re) = (e.log_volume(), e.recomputed_log_volume());
        // Coincident points give a zero-volume set: both sides are -inf.
        prop_assert!(lv == re || (lv - re).abs() <= 1e-9);
        for out in [b, e] {
            let back = SetRecord::from_json(&out.to_record(None).to_json().unwrap()).unwrap();
            prop_assert_eq!(back.to_ellipsoid().unwrap(), out);
        }
    }
}
