use netmoment::estimator::{beta_jacobian, moment_residual_f, pair_indices, potential};
use netmoment::graph::{pair_count, pair_index, pairs};
use netmoment::io::{derive_pair_covariates, read_edges, read_pair_covariates, write_edges, write_pair_covariates, NodeAttrs, Transform};
use netmoment::simulator::{generate, BetaRule, CovariateRule, Dependence, GenSpec};
use netmoment::{check_balanced_class, EdgeFamily, NetworkData, Params};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = EdgeFamily> {
    prop_oneof![Just(EdgeFamily::Logistic), Just(EdgeFamily::Poisson), Just(EdgeFamily::Probit)]
}

fn network(max_n: usize, max_p: usize) -> impl Strategy<Value = NetworkData> {
    (3..=max_n, 1..=max_p).prop_flat_map(|(n, p)| {
        let m = pair_count(n);
        (prop::collection::vec(0.0..1.0f64, m), prop::collection::vec(-2.0..2.0f64, m * p))
            .prop_map(move |(w, z)| NetworkData::new(n, p, w, z).unwrap())
    })
}

fn params_for(data: &NetworkData) -> impl Strategy<Value = Params> {
    (prop::collection::vec(-2.0..2.0f64, data.n()), prop::collection::vec(-1.0..1.0f64, data.p()))
        .prop_map(|(beta, gamma)| Params { beta, gamma })
}

proptest! {
    #[test]
    fn mean_derivatives_are_finite_and_increasing(fam in family(), pi in -30.0..30.0f64, step in 1e-3..1.0f64) {
        let d = fam.mu_derivs(pi).unwrap();
        prop_assert!(d.d1 > 0.0 && d.d1.is_finite() && d.d2.is_finite() && d.d3.is_finite());
        prop_assert!(fam.mu(pi + step).unwrap() >= fam.mu(pi).unwrap());
    }

    #[test]
    fn pair_index_is_a_bijection(n in 2usize..60) {
        let idx: Vec<usize> = pairs(n).map(|(i, j)| pair_index(i, j)).collect();
        prop_assert_eq!(idx, (0..pair_count(n)).collect::<Vec<_>>());
        for (i, j) in pairs(n) {
            prop_assert_eq!(pair_index(i, j), pair_index(j, i));
        }
    }

    #[test]
    fn negated_degree_jacobian_is_balanced(
        fam in family(),
        (data, params) in network(12, 2).prop_flat_map(|d| { let p = params_for(&d); (Just(d), p) })
    ) {
        let neg_v = -beta_jacobian(&data, fam, &params).unwrap();
        prop_assert!(check_balanced_class(&neg_v).unwrap().is_member);
    }

    #[test]
    fn degree_residuals_sum_to_twice_pair_residuals(
        fam in family(),
        (data, params) in network(10, 2).prop_flat_map(|d| { let p = params_for(&d); (Just(d), p) })
    ) {
        let f = moment_residual_f(&data, fam, &params).unwrap();
        let pis = pair_indices(&data, &params).unwrap();
        let pair_sum: f64 = data.weights().iter().zip(&pis).map(|(a, pi)| a - fam.mu(*pi).unwrap()).sum();
        prop_assert!((f.iter().sum::<f64>() - 2.0 * pair_sum).abs() < 1e-9 * (1.0 + pair_sum.abs()));
    }

    #[test]
    fn potential_increases_along_degree_residual(
        fam in family(),
        (data, params) in network(8, 1).prop_flat_map(|d| { let p = params_for(&d); (Just(d), p) })
    ) {
        let f = moment_residual_f(&data, fam, &params).unwrap();
        let norm: f64 = f.iter().map(|v| v * v).sum();
        prop_assume!(norm > 1e-6);
        let t = 1e-6 / norm.sqrt();
        let moved = Params {
            beta: params.beta.iter().zip(&f).map(|(b, g)| b + t * g).collect(),
            gamma: params.gamma.clone(),
        };
        prop_assert!(potential(&data, fam, &moved).unwrap() > potential(&data, fam, &params).unwrap());
    }

    #[test]
    fn derived_covariates_match_direct_formula(
        rows in (2usize..12, 1usize..4).prop_flat_map(|(n, q)| prop::collection::vec(prop::collection::vec(-3i32..3, q), n))
    ) {
        let attrs = NodeAttrs { rows: rows.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect() };
        let dist = derive_pair_covariates(&attrs, Transform::EuclideanDistance).unwrap();
        let matched = derive_pair_covariates(&attrs, Transform::MatchIndicator).unwrap();
        for (i, j) in pairs(rows.len()) {
            let k = pair_index(i, j);
            let d2: f64 = attrs.rows[i].iter().zip(&attrs.rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!((dist[k] - d2.sqrt()).abs() < 1e-12);
            prop_assert_eq!(matched[k], if rows[i] == rows[j] { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn edge_export_round_trips(data in network(15, 3)) {
        let mut edges = Vec::new();
        let mut covs = Vec::new();
        write_edges(&data, &mut edges).unwrap();
        write_pair_covariates(&data, &mut covs).unwrap();
        let (n, p, z) = read_pair_covariates(covs.as_slice()).unwrap();
        let w = read_edges(edges.as_slice(), n).unwrap();
        prop_assert_eq!(NetworkData::new(n, p, w, z).unwrap(), data);
    }

    #[test]
    fn generator_is_reproducible(fam in family(), seed in any::<u64>(), stream in any::<u64>(), n in 2usize..20) {
        let spec = GenSpec {
            n,
            family: fam,
            beta: BetaRule::Uniform { bound: 1.0 },
            gamma_star: vec![0.3],
            covariates: CovariateRule::IidUniform { p: 1, low: -1.0, high: 1.0 },
            dependence: Dependence::Independent,
            noise_free: false,
            seed,
            stream,
        };
        let a = generate(&spec).unwrap();
        prop_assert_eq!(&a, &generate(&spec).unwrap());
        prop_assert!(a.check_support(fam).is_ok());
    }
}
