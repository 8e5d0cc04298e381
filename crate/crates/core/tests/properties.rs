use chanest::channel::{add_noise, phase_vector, steering_vector, unambiguous_range, PathParams, WaveformConfig};
use chanest::crb::{commutation_matrix, khatri_rao, kron, kron_identity_apply};
use chanest::estimator::PathEstimate;
use chanest::harness::{compute_rmse, match_paths};
use chanest::tensor::{msvd, Mode, Tensor3};
use chanest::{CMatrix, CVector, Complex64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
}

fn tensor(max: usize) -> impl Strategy<Value = Tensor3> {
    (1..=max, 1..=max, 1..=max).prop_flat_map(|(a, b, d)| {
        prop::collection::vec(complex(), a * b * d).prop_map(move |v| Tensor3::from_vec([a, b, d], v).unwrap())
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(complex(), rows * cols).prop_map(move |v| CMatrix::from_vec(rows, cols, v))
}

fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && (a - b).norm() <= tol * (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_inverts_unfold(t in tensor(6)) {
        for mode in Mode::ALL {
            let back = Tensor3::fold(&t.unfold(mode), mode, t.dims()).unwrap();
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn unfolding_places_every_entry(t in tensor(5)) {
        let [a, b, d] = t.dims();
        let u1 = t.unfold(Mode::One);
        let u2 = t.unfold(Mode::Two);
        let u3 = t.unfold(Mode::Three);
        for i in 0..a {
            for j in 0..b {
                for k in 0..d {
                    let x = t.get(i, j, k);
                    prop_assert_eq!(u1[(i, j + b * k)], x);
                    prop_assert_eq!(u2[(j, i + a * k)], x);
                    prop_assert_eq!(u3[(k, i + a * j)], x);
                }
            }
        }
    }

    #[test]
    fn mode_product_matches_entrywise_sum(
        (t, m) in tensor(4).prop_flat_map(|t| {
            let n = t.dims()[1];
            (Just(t), (1..5usize).prop_flat_map(move |r| matrix(r, n)))
        })
    ) {
        let p = t.mode_product(&m, Mode::Two).unwrap();
        let [a, b, d] = t.dims();
        prop_assert_eq!(p.dims(), [a, m.nrows(), d]);
        for i in 0..a {
            for r in 0..m.nrows() {
                for k in 0..d {
                    let mut s = c(0.0, 0.0);
                    for j in 0..b {
                        s += m[(r, j)] * t.get(i, j, k);
                    }
                    prop_assert!((p.get(i, r, k) - s).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn msvd_is_exact_and_all_orthogonal(t in tensor(6)) {
        let r = msvd(&t).unwrap();
        let back = r.tucker.reconstruct().unwrap();
        prop_assert!(back.sub(&t).unwrap().frobenius_norm() <= 1e-10 * (1.0 + t.frobenius_norm()));
        for mode in Mode::ALL {
            let u = r.factor(mode);
            let g = u.adjoint() * u;
            prop_assert!(close(&g, &CMatrix::identity(g.nrows(), g.ncols()), 1e-10));
            // Distinct core slabs are orthogonal and their norms decrease.
            let cu = r.core().unfold(mode);
            let gram = &cu * cu.adjoint();
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    if i != j {
                        prop_assert!(gram[(i, j)].norm() <= 1e-9 * (1.0 + t.norm_sqr()));
                    }
                }
            }
            let sv = &r.mode_singular_values[mode.axis()];
            prop_assert!(sv.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
    }

    #[test]
    fn commutation_transposes(m in 1..6usize, n in 1..6usize, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = CMatrix::from_fn(m, n, |_, _| c(rand::Rng::random(&mut rng), rand::Rng::random(&mut rng)));
        let k = commutation_matrix(m, n).unwrap();
        let v = CVector::from_column_slice(s.as_slice());
        let st = s.transpose();
        let kv = k.apply(&v).unwrap();
        prop_assert_eq!(kv.as_slice(), st.as_slice());
        prop_assert_eq!(&k.to_dense() * &v, CVector::from_column_slice(st.as_slice()));
    }

    #[test]
    fn khatri_rao_columns_are_kronecker(a in matrix(3, 4), b in matrix(2, 4)) {
        let kr = khatri_rao(&a, &b).unwrap();
        for j in 0..4 {
            let col = kron(&a.columns(j, 1).into_owned(), &b.columns(j, 1).into_owned());
            prop_assert!(close(&kr.columns(j, 1).into_owned(), &col, 1e-14));
        }
    }

    #[test]
    fn kronecker_mixed_product(a in matrix(2, 3), b in matrix(3, 2), cm in matrix(3, 2), d in matrix(2, 2)) {
        let lhs = kron(&a, &b) * kron(&cm, &d);
        let rhs = kron(&(&a * &cm), &(&b * &d));
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn kron_identity_apply_matches_dense(a in matrix(3, 2), n in 1..4usize, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = CVector::from_fn(2 * n, |_, _| c(rand::Rng::random(&mut rng), 0.5));
        let dense = kron(&a, &CMatrix::identity(n, n)) * &v;
        let fast = kron_identity_apply(&a, n, &v).unwrap();
        prop_assert!((dense - fast).norm() < 1e-12);
    }

    #[test]
    fn steering_has_unit_modulus_and_mirror_symmetry(theta in -1.5..1.5f64, half in 0..15usize) {
        let n = 2 * half + 1;
        let a = steering_vector(theta, n).unwrap();
        let mirrored = steering_vector(-theta, n).unwrap();
        for i in 0..n {
            prop_assert!((a[i].norm() - 1.0).abs() < 1e-14);
            prop_assert!((mirrored[i] - a[i].conj()).norm() < 1e-14);
            prop_assert!((a[i] - a[n - 1 - i].conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn phase_signature_repeats_every_unambiguous_range(d in 0.0..100.0f64, n_s in 1..64usize) {
        let cfg = WaveformConfig::new(60e9, n_s, 100e6, 4).unwrap();
        let p = phase_vector(d, &cfg);
        let q = phase_vector(d + unambiguous_range(&cfg), &cfg);
        prop_assert!((p - q).norm() < 1e-9 * n_s as f64);
    }

    #[test]
    fn added_noise_realizes_the_snr(t in tensor(5), snr in -10.0..60.0f64, seed in any::<u64>()) {
        prop_assume!(t.norm_sqr() > 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (y, sigma2) = add_noise(&t, snr, &mut rng).unwrap();
        let noise = y.sub(&t).unwrap().norm_sqr();
        prop_assert!((t.norm_sqr() / noise / 10f64.powf(snr / 10.0) - 1.0).abs() < 1e-9);
        prop_assert!((sigma2 * t.len() as f64 / noise - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rmse_of_scaled_errors_scales(errs in prop::collection::vec(-1.0..1.0f64, 1..50), k in 0.1..10.0f64) {
        let scaled: Vec<f64> = errs.iter().map(|e| e * k).collect();
        let r = compute_rmse(&errs).unwrap();
        prop_assert!((compute_rmse(&scaled).unwrap() - k * r).abs() <= 1e-12 * (1.0 + k * r));
        let max = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        prop_assert!(r <= max + 1e-15);
    }

    #[test]
    fn matching_follows_a_permutation_of_estimates(
        truth in prop::collection::vec((-1.4..1.4f64, -1.4..1.4f64, 1.0..50.0f64), 1..5),
        shift in 0..5usize,
    ) {
        let paths: Vec<PathParams> = truth
            .iter()
            .map(|&(r, t, d)| PathParams::new(r, t, d, c(1.0, 0.0)).unwrap())
            .collect();
        let n = paths.len();
        let estimates: Vec<PathEstimate> = (0..n)
            .map(|i| {
                let p = &paths[(i + shift) % n];
                PathEstimate {
                    theta_rx: p.theta_rx + 1e-6,
                    theta_tx: p.theta_tx,
                    distance: p.distance,
                    gain: p.gain,
                    core_energy: 1.0,
                }
            })
            .collect();
        let m = match_paths(&paths, &estimates, 50.0);
        for (i, slot) in m.iter().enumerate() {
            let e = &estimates[slot.unwrap()];
            let p = &paths[i];
            // Identical true paths may swap; the matched estimate must still coincide.
            prop_assert!((e.theta_rx - p.theta_rx - 1e-6).abs() < 1e-12);
            prop_assert_eq!(e.distance, p.distance);
        }
    }
}
