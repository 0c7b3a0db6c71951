use bivzip::dist::{bzip_cdf, bzip_cov, bzip_pmf, frechet_bounds};
use bivzip::estimate::{loglik, profile_phi};
use bivzip::shock::{bp_cdf, bp_pmf};
use bivzip::simulate::sample;
use bivzip::{BpParams, DependenceKind, ModelParams, TruncationPolicy, ZipMarginal};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = DependenceKind> {
    prop_oneof![
        Just(DependenceKind::Positive),
        Just(DependenceKind::Negative)
    ]
}

fn model() -> impl Strategy<Value = ModelParams> {
    (
        0.05f64..8.0,
        0.05f64..8.0,
        0.0f64..=1.0,
        0.0f64..0.95,
        kind(),
    )
        .prop_map(|(l1, l2, t, phi, k)| ModelParams::new(l1, l2, t, phi, k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn table_normalizes_and_margins_are_zip(m in model()) {
        let table = m.pmf_table(&TruncationPolicy::default());
        let (n1, n2) = table.dims();
        let (l1, l2) = m.lambdas();
        let z1 = ZipMarginal::new(l1, m.phi).unwrap();
        let z2 = ZipMarginal::new(l2, m.phi).unwrap();
        let mut total = 0.0;
        for i in 0..n1 {
            let row: f64 = (0..n2).map(|j| table.get(i, j)).sum();
            prop_assert!((row - z1.pmf(i as u64)).abs() < 1e-8);
            total += row;
        }
        for j in 0..n2 {
            let col: f64 = (0..n1).map(|i| table.get(i, j)).sum();
            prop_assert!((col - z2.pmf(j as u64)).abs() < 1e-8);
        }
        prop_assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cdf_is_monotone_and_within_frechet_bounds(m in model(), x1 in 0i64..12, x2 in 0i64..12) {
        let h = bzip_cdf(x1, x2, &m);
        prop_assert!(h >= bzip_cdf(x1 - 1, x2, &m) - 1e-12);
        prop_assert!(h >= bzip_cdf(x1, x2 - 1, &m) - 1e-12);
        let (l1, l2) = m.lambdas();
        let b = frechet_bounds(x1, x2, l1, l2, m.phi).unwrap();
        prop_assert!(b.lower - 1e-12 <= h && h <= b.upper + 1e-12);
    }

    #[test]
    fn rectangle_masses_recover_pmf(m in model(), x1 in 0i64..10, x2 in 0i64..10) {
        let rect = bzip_cdf(x1, x2, &m) - bzip_cdf(x1 - 1, x2, &m) - bzip_cdf(x1, x2 - 1, &m) + bzip_cdf(x1 - 1, x2 - 1, &m);
        prop_assert!((rect - bzip_pmf(x1 as u64, x2 as u64, &m)).abs() < 1e-12);
    }

    #[test]
    fn latent_cdf_is_cumulative_pmf(l1 in 0.05f64..6.0, l2 in 0.05f64..6.0, t in 0.0f64..=1.0, k in kind(), x1 in 0u64..8, x2 in 0u64..8) {
        let p = BpParams::new(l1, l2, t, k).unwrap();
        let acc: f64 = (0..=x1).flat_map(|i| (0..=x2).map(move |j| (i, j))).map(|(i, j)| bp_pmf(i, j, &p)).sum();
        prop_assert!((acc - bp_cdf(x1 as i64, x2 as i64, &p)).abs() < 1e-12);
    }

    #[test]
    fn covariance_sign_follows_kind_without_inflation(l1 in 0.1f64..6.0, l2 in 0.1f64..6.0, t in 0.05f64..=1.0, k in kind()) {
        let m = ModelParams::new(l1, l2, t, 0.0, k).unwrap();
        let c = bzip_cov(&m, &TruncationPolicy::default());
        match k {
            DependenceKind::Positive => prop_assert!(c > 0.0),
            DependenceKind::Negative => prop_assert!(c <= 1e-12),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_fits_support(m in model(), seed in any::<u64>()) {
        let a = sample(&m, 200, seed).unwrap();
        prop_assert_eq!(&a, &sample(&m, 200, seed).unwrap());
        prop_assert!(loglik(&m, &a).is_finite());
    }

    #[test]
    fn profile_phi_matches_zero_frequency(f00 in 0.0f64..0.999, n in 1usize..500, frac in 0.0f64..=1.0) {
        let m0 = ((n as f64) * frac).floor() as usize;
        let phi = profile_phi(f00, m0, n).unwrap();
        prop_assert!(phi <= 1.0 && phi >= -f00 / (1.0 - f00) - 1e-12);
        prop_assert!((phi + (1.0 - phi) * f00 - m0 as f64 / n as f64).abs() < 1e-9);
    }
}
