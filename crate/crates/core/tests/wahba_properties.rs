use nalgebra::{DMatrix, Matrix3, Matrix3xX, SymmetricEigen, Vector3};
use proptest::prelude::*;
use so3me::so3::{exp_so3, principal_angle, RotationMatrix};
use so3me::wahba::{
    construct_weights, critical_points, k_matrix, potential_error, s_k, s_l, wahba_cost, BodyVectorSet,
    DirectionEnsemble, TargetEigenvalues, WeightedEnsemble,
};

fn rotation() -> impl Strategy<Value = RotationMatrix> {
    prop::array::uniform3(-3.0..3.0f64).prop_map(|v| exp_so3(&Vector3::from(v)))
}

fn ensemble() -> impl Strategy<Value = DirectionEnsemble> {
    (3usize..=9).prop_flat_map(|k| prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), k)).prop_filter_map(
        "full rank unit columns",
        |cols| {
            let cols: Vec<Vector3<f64>> = cols.into_iter().map(Vector3::from).collect();
            if cols.iter().any(|c| c.norm() < 0.1) {
                return None;
            }
            let e = DirectionEnsemble::from_directions(&cols.iter().map(|c| c.normalize()).collect::<Vec<_>>()).ok()?;
            (e.smallest_singular_value() > 1e-2).then_some(e)
        },
    )
}

fn targets() -> impl Strategy<Value = TargetEigenvalues> {
    prop::array::uniform3(0.1..50.0f64).prop_filter_map("distinct", |d| TargetEigenvalues::new(d).ok())
}

fn sorted_eigenvalues(m: Matrix3<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn k_has_target_spectrum(e in ensemble(), d in targets()) {
        let w = construct_weights(&e, d).unwrap();
        let assembled = e.matrix() * w.matrix() * e.matrix().transpose();
        let mut want = d.values().to_vec();
        want.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in sorted_eigenvalues(assembled).iter().zip(&want) {
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
        let wm = w.matrix();
        prop_assert!((wm - wm.transpose()).norm() <= 1e-12 * wm.norm());
        prop_assert!(SymmetricEigen::new(wm.clone()).eigenvalues.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn noise_free_cost_equals_potential(e in ensemble(), r in rotation(), r_hat in rotation()) {
        let set = WeightedEnsemble::new(e, TargetEigenvalues::default()).unwrap();
        let u = BodyVectorSet::exact(&r, &set.ensemble);
        let q = r * r_hat.transpose();
        let cost = wahba_cost(&r_hat, &u, &set.ensemble, &set.weights);
        prop_assert!((cost - potential_error(&q, &set.k)).abs() <= 1e-10);
    }

    #[test]
    fn cost_is_permutation_invariant(e in ensemble(), r in rotation(), r_hat in rotation(), seed in any::<u64>()) {
        let set = WeightedEnsemble::new(e, TargetEigenvalues::default()).unwrap();
        let k = set.ensemble.len();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut s = seed;
        for i in (1..k).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let p = DMatrix::from_fn(k, k, |i, j| if perm[j] == i { 1.0 } else { 0.0 });
        let u = BodyVectorSet::exact(&r, &set.ensemble).rotated(&exp_so3(&Vector3::new(0.01, -0.02, 0.015)));
        let before = wahba_cost(&r_hat, &u, &set.ensemble, &set.weights);

        let e_perm = Matrix3xX::from_iterator(k, (set.ensemble.matrix() * &p).iter().copied());
        let u_perm = BodyVectorSet::from_columns(Matrix3xX::from_iterator(k, (u.matrix() * &p).iter().copied()), true);
        let w_perm = p.transpose() * set.weights.matrix() * &p;
        // Evaluate ½⟨E − R̂U, (E − R̂U)W⟩ directly on the permuted data.
        let diff = &e_perm - r_hat.matrix() * u_perm.matrix();
        let after = 0.5 * (diff.transpose() * &diff * w_perm).trace();
        prop_assert!((before - after).abs() <= 1e-10 * (1.0 + before));
    }

    #[test]
    fn potential_is_bounded(e in ensemble(), q in rotation()) {
        let k = k_matrix(&e, &construct_weights(&e, TargetEigenvalues::default()).unwrap()).unwrap();
        let p = potential_error(&q, &k);
        prop_assert!(p >= -1e-12 && p <= 2.0 * k.matrix().trace() + 1e-12);
    }

    #[test]
    fn s_k_matches_finite_differences(e in ensemble(), q in rotation(), a in prop::array::uniform3(-1.0..1.0f64)) {
        let k = k_matrix(&e, &construct_weights(&e, TargetEigenvalues::default()).unwrap()).unwrap();
        let a = Vector3::from(a);
        let eps = 1e-5;
        let f = |t: f64| potential_error(&(exp_so3(&(a * t)) * q), &k);
        let left = (f(eps) - f(-eps)) / (2.0 * eps);
        prop_assert!((left + s_k(&q, &k).dot(&a)).abs() <= 1e-6);
        // Right perturbation Q exp(εa) = exp(ε Qa) Q.
        let g = |t: f64| potential_error(&(q * exp_so3(&(a * t))), &k);
        let right = (g(eps) - g(-eps)) / (2.0 * eps);
        prop_assert!((right + s_k(&q, &k).dot(&q.rotate(&a))).abs() <= 1e-6);
    }

    #[test]
    fn s_l_matches_finite_differences(e in ensemble(), r in rotation(), r_hat in rotation(), a in prop::array::uniform3(-1.0..1.0f64)) {
        let set = WeightedEnsemble::new(e, TargetEigenvalues::default()).unwrap();
        let u = BodyVectorSet::exact(&r, &set.ensemble);
        let a = Vector3::from(a);
        let eps = 1e-5;
        let f = |t: f64| set.cost(&(r_hat * exp_so3(&(a * t))), &u);
        let slope = (f(eps) - f(-eps)) / (2.0 * eps);
        prop_assert!((slope - s_l(&r_hat, &set.ensemble, &set.weights, &u).dot(&a)).abs() <= 1e-6);
    }

    #[test]
    fn critical_points_are_stationary(e in ensemble(), d in targets()) {
        let k = k_matrix(&e, &construct_weights(&e, d).unwrap()).unwrap();
        let points = critical_points(&k);
        let values: Vec<f64> = points.iter().map(|q| potential_error(q, &k)).collect();
        prop_assert_eq!(values[0], 0.0);
        for (q, v) in points.iter().zip(&values).skip(1) {
            prop_assert!(*v > 0.0);
            let m = q.matrix();
            prop_assert!((m.transpose() * m - Matrix3::identity()).norm() <= 1e-12);
            prop_assert!((m.determinant() - 1.0).abs() <= 1e-12);
        }
        for q in &points {
            prop_assert!(s_k(q, &k).norm() <= 1e-12 * k.matrix().norm().max(1.0));
        }
    }
}

#[test]
fn gradient_vanishes_only_near_critical_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let e = DirectionEnsemble::new(Matrix3xX::from_column_slice(&[
        0.6,
        0.8,
        0.0,
        -0.48,
        0.36,
        0.8,
        0.0,
        0.0,
        1.0,
        0.5773502691896258,
        0.5773502691896258,
        0.5773502691896258,
    ]))
    .unwrap();
    let k = k_matrix(&e, &construct_weights(&e, TargetEigenvalues::default()).unwrap()).unwrap();
    let points = critical_points(&k);
    let mut checked = 0;
    while checked < 1000 {
        let v = Vector3::new(rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
        if v.norm() > std::f64::consts::PI {
            continue;
        }
        let q = exp_so3(&v);
        if points.iter().any(|c| principal_angle(&(c.transpose() * q)) <= 0.1) {
            continue;
        }
        checked += 1;
        assert!(s_k(&q, &k).norm() > 0.0);
    }
}
