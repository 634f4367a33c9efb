use proptest::prelude::*;
use simplex_core::constants::{rate_function, ExtReal, RateKind};
use simplex_core::oracle::max_spacing_cdf;
use simplex_core::sampling::{sample_simplex, Construction, RandomStream};
use simplex_core::statistics::lq_norm;
use simplex_core::Error;

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 1..40)
}

proptest! {
    #[test]
    fn norm_is_homogeneous(x in vector(), c in -50f64..50.0, q in prop_oneof![1f64..8.0, Just(f64::INFINITY)]) {
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let lhs = lq_norm(&scaled, q).unwrap();
        let rhs = c.abs() * lq_norm(&x, q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn norm_decreases_in_q(x in vector(), q1 in 1f64..6.0, dq in 0f64..6.0) {
        let a = lq_norm(&x, q1).unwrap();
        let b = lq_norm(&x, q1 + dq).unwrap();
        let c = lq_norm(&x, f64::INFINITY).unwrap();
        prop_assert!(a >= b * (1.0 - 1e-12));
        prop_assert!(b >= c * (1.0 - 1e-12));
    }

    #[test]
    fn simplex_points_are_reproducible_and_valid(seed: u64, stream: u64, n in 1usize..300, spacings: bool) {
        let construction = if spacings { Construction::Spacings } else { Construction::Exponential };
        let s = RandomStream::with_stream(seed, stream);
        let a = sample_simplex(&mut s.rng(), n, true, construction).unwrap();
        let b = sample_simplex(&mut s.rng(), n, true, construction).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.coords().iter().sum::<f64>().abs() <= 1e-12 * n as f64);
        prop_assert!(a.coords().iter().all(|z| *z >= -1.0 / n as f64 && *z <= 1.0));
    }

    #[test]
    fn rates_are_monotone(z1 in 0f64..20.0, dz in 0f64..20.0, p in 1f64..5.0) {
        for (kind, p) in [(RateKind::SimplexSup, None), (RateKind::Mdp, None), (RateKind::LpSup, Some(p))] {
            let a = rate_function(kind, 1.0 + z1, p).unwrap();
            let b = rate_function(kind, 1.0 + z1 + dz, p).unwrap();
            match (a, b) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => prop_assert!(a <= b),
                _ => prop_assert!(false, "finite rates expected above 1"),
            }
        }
    }

    #[test]
    fn spacing_cdf_is_monotone(n in 2u64..400, s1 in 0f64..1.0, ds in 0f64..0.5) {
        // Near s = 1/n the series cancels beyond f64 precision and the oracle refuses.
        let eval = |s: f64| match max_spacing_cdf(n, s) {
            Ok(r) => Some(r.value),
            Err(Error::Numerical(_)) => None,
            Err(e) => panic!("{e}"),
        };
        let (a, b) = match (eval(s1), eval((s1 + ds).min(1.0))) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(()),
        };
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b + 1e-12);
    }
}
