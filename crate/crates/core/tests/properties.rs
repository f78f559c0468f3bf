use mimo_ncs::analysis::{self, StateSpace};
use mimo_ncs::codesign::{self, CoDesign};
use mimo_ncs::cyclic;
use mimo_ncs::majorize::{self, Relation};
use mimo_ncs::numerics;
use mimo_ncs::plantmodel::{topological_entropy, ChannelEnsemble, Plant};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

/// Well-conditioned similarity `I + 0.3·N` with `N` entries in [-1, 1].
fn similarity(n: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::identity(n, n) + DMatrix::from_iterator(n, n, entries.iter().map(|e| 0.3 * e))
}

fn eigenvalue() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.3f64, 0.3..3.0f64]
}

/// Diagonalizable plant with distinct or doubled eigenvalues and as many
/// inputs as the largest multiplicity (plus possibly one).
fn plant() -> impl Strategy<Value = Plant> {
    (2usize..=5)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(eigenvalue(), n),
                any::<bool>(),
                prop::collection::vec(-1.0..1.0f64, n * n),
                prop::collection::vec(-1.0..1.0f64, n * 2),
                1usize..=2,
            )
        })
        .prop_map(|(mut lam, double, v, b, extra)| {
            let n = lam.len();
            if double {
                lam[1] = lam[0];
            }
            let mult = if double { 2 } else { 1 };
            let m = mult.max(extra);
            let t = similarity(n, &v);
            let a = &t * diag(&lam) * t.clone().try_inverse().unwrap();
            let bm = DMatrix::from_iterator(n, m, b.iter().copied().take(n * m))
                + DMatrix::from_element(n, m, 0.1);
            Plant::new(a, bm).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_checks_ignore_permutations(
        x in prop::collection::vec(0.0..10.0f64, 1..6),
        y in prop::collection::vec(0.0..10.0f64, 1..6),
        shift in 0usize..6,
    ) {
        let l = x.len().min(y.len());
        let (x, y) = (&x[..l], &y[..l]);
        let mut xr = x.to_vec();
        xr.rotate_left(shift % l);
        let mut yr = y.to_vec();
        yr.reverse();
        for rel in [
            Relation::Majorize,
            Relation::WeakBelow,
            Relation::WeakAbove,
            Relation::StrictWeakBelow,
            Relation::StrictWeakAbove,
        ] {
            let a = majorize::check_order(x, y, rel).unwrap();
            let b = majorize::check_order(&xr, &yr, rel).unwrap();
            prop_assert_eq!(a.holds, b.holds);
        }
    }

    #[test]
    fn schur_horn_spectrum_is_preserved(
        lambda in prop::collection::vec(0.0..10.0f64, 1..4),
        extra in 0usize..3,
        mix in prop::collection::vec(0.0..1.0f64, 8),
    ) {
        let m = lambda.len();
        let l = m + extra;
        let mut gamma = lambda.clone();
        gamma.resize(l, 0.0);
        // T-transforms keep gamma inside the permutohedron
        for (k, t) in mix.iter().enumerate() {
            let (i, j) = (k % l, (k * 3 + 1) % l);
            if i != j {
                let (gi, gj) = (gamma[i], gamma[j]);
                gamma[i] = t * gi + (1.0 - t) * gj;
                gamma[j] = (1.0 - t) * gi + t * gj;
            }
        }
        let u = majorize::schur_horn_isometry(&lambda, &gamma).unwrap();
        let g = &u * diag(&lambda) * u.transpose();
        let mut eig: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let mut want = lambda.clone();
        want.resize(l, 0.0);
        want.sort_by(|a, b| b.total_cmp(a));
        for (e, w) in eig.iter().zip(&want) {
            prop_assert!((e - w).abs() < 1e-7, "{:?} vs {:?}", eig, want);
        }
    }

    #[test]
    fn entropy_is_similarity_invariant(
        lam in prop::collection::vec(eigenvalue(), 1..6),
        v in prop::collection::vec(-1.0..1.0f64, 25),
    ) {
        let n = lam.len();
        let t = similarity(n, &v[..n * n]);
        let a = diag(&lam);
        let b = &t * &a * t.clone().try_inverse().unwrap();
        let ha = topological_entropy(&a).unwrap().value;
        let hb = topological_entropy(&b).unwrap().value;
        prop_assert!((ha - hb).abs() < 1e-8 * (1.0 + ha));
    }

    #[test]
    fn decomposition_round_trips(p in plant(), seed in 0u64..4) {
        let d = cyclic::cyclic_decompose(&p, seed).unwrap();
        let report = cyclic::verify_decomposition(&p, &d);
        prop_assert!(report.passed(), "{}", report.summary());
        let p_inv = d.p.clone().try_inverse().unwrap();
        let back = &d.p * d.block_diagonal() * &p_inv;
        let scale = p.a().amax().max(1.0);
        prop_assert!((back - p.a()).amax() < 1e-7 * scale);
        prop_assert_eq!(d.k(), cyclic::cyclic_index(p.a()).unwrap());
    }

    #[test]
    fn aggregate_norm_sums_entry_norms(
        lam in prop::collection::vec(-3.0..-0.3f64, 1..5),
        v in prop::collection::vec(-1.0..1.0f64, 16),
        bc in prop::collection::vec(-1.0..1.0f64, 24),
    ) {
        let n = lam.len();
        let t = similarity(n, &v[..n * n]);
        let a = &t * diag(&lam) * t.clone().try_inverse().unwrap();
        let b = DMatrix::from_iterator(n, 3, bc.iter().copied().take(3 * n));
        let c = DMatrix::from_iterator(2, n, bc.iter().rev().copied().take(2 * n));
        let ss = StateSpace::new(a, b, c).unwrap();
        let total = analysis::h2_norm_squared(&ss).unwrap();
        let entries = analysis::h2_gramian_entrywise(&ss).unwrap().sum();
        prop_assert!((total - entries).abs() < 1e-9 * (1.0 + total));
    }
}

fn example() -> (Plant, ChannelEnsemble) {
    let p = Plant::new(
        diag(&[4.0, 2.0, 1.0, 1.0]),
        DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0]),
    )
    .unwrap();
    let ch = ChannelEnsemble::awgn(vec![9.1, 3.1, 4.1], vec![1.0; 3]).unwrap();
    (p, ch)
}

#[test]
fn channel_powers_shrink_with_epsilon() {
    let (p, ch) = example();
    let base = codesign::codesign(&p, &ch).unwrap();
    let mut last = vec![f64::INFINITY; 3];
    for eps in [1.0, 0.5, 0.25, 0.125, 0.1, 0.0625, 0.01] {
        let (t, r) = codesign::synthesize_codec(&ch, &base.u, eps).unwrap();
        let cd = CoDesign {
            t,
            r,
            epsilon: eps,
            ..base.clone()
        };
        let q = analysis::channel_powers_awgn(&p, &cd, &[1.0; 3]).unwrap();
        // the first subchannel carries the fast block and dominates
        assert!(q[0] < last[0], "eps {eps}: {q:?} after {last:?}");
        last = q;
    }
    // in the limit the powers approach twice the intermediate vector
    for (q, g) in last.iter().zip(&base.gamma) {
        assert!((q - 2.0 * g).abs() < 0.01, "{last:?} vs {:?}", base.gamma);
    }
}

#[test]
fn reference_gain_is_reproduced() {
    let (p, ch) = example();
    let cd = codesign::codesign(&p, &ch).unwrap();
    let want = DMatrix::from_row_slice(2, 4, &[-40.0, 36.0, -10.0, 0.0, 0.0, 0.0, 0.0, -2.0]);
    assert!((&cd.f - want).amax() < 1e-9);
    let spectrum = numerics::eigenvalues(&(p.a() + p.b() * &cd.f)).unwrap();
    let mut re: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    for (got, want) in re.iter().zip([-4.0, -2.0, -1.0, -1.0]) {
        assert!((got - want).abs() < 1e-6);
    }
}

#[test]
fn fading_design_is_mean_square_stable() {
    let (p, _) = example();
    let ch = ChannelEnsemble::fading(vec![2.0, 0.6, 0.9], vec![0.35, 0.2, 0.25]).unwrap();
    let cd = codesign::codesign(&p, &ch).unwrap();
    assert!(codesign::codec_residual(&ch, &cd.t, &cd.r) < 1e-10);
    let rate = analysis::covariance_decay_rate(&p, &cd, &ch).unwrap();
    assert!(rate < 0.0);
    let t_end = analysis::default_horizon(&p, &cd, &ch).unwrap();
    let dt = analysis::default_dt(&p, &cd).unwrap();
    let c = analysis::ms_consistency(&p, &cd, &ch, t_end, dt).unwrap();
    assert!(c.ms_norm < 1.0);
    assert!(c.decay_ratio < 1e-3, "{c:?}");
}
