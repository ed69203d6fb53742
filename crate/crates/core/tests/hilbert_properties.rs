use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use qlink_core::hilbert::{
    embed, hermitian_eigenvalues, ladder_operator, max_abs, number_operator, parity_operator,
    partial_trace, projector_low_excitation, projector_target, sigma_minus, DensityMatrix, Factor,
    HilbertLayout, Operator,
};

/// Direct index summation: ρ_keep[a, b] = Σ_t ρ[(a, t), (b, t)].
fn partial_trace_oracle(rho: &DMatrix<C>, dims: &[usize], keep: &[usize]) -> DMatrix<C> {
    let n: usize = dims.iter().product();
    let kept: usize = keep.iter().map(|&k| dims[k]).product();
    let digits = |mut i: usize| -> Vec<usize> {
        let mut out = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = i % dims[k];
            i /= dims[k];
        }
        out
    };
    let kept_index = |dg: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + dg[k]);
    let mut out = DMatrix::zeros(kept, kept);
    for i in 0..n {
        for j in 0..n {
            let (di, dj) = (digits(i), digits(j));
            let traced_equal = (0..dims.len())
                .filter(|k| !keep.contains(k))
                .all(|k| di[k] == dj[k]);
            if traced_equal {
                out[(kept_index(&di), kept_index(&dj))] += rho[(i, j)];
            }
        }
    }
    out
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| C::new(re, im)).collect())
}

fn random_density(dim: usize) -> impl Strategy<Value = DMatrix<C>> {
    complex_vec(dim * dim).prop_filter_map("non-zero", move |v| {
        let a = DMatrix::from_vec(dim, dim, v);
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        (tr.re > 1e-6).then(|| rho / tr)
    })
}

fn random_operator(dim: usize) -> impl Strategy<Value = DMatrix<C>> {
    complex_vec(dim * dim).prop_map(move |v| DMatrix::from_vec(dim, dim, v))
}

#[test]
fn pure_state_partial_traces_match_index_summation() {
    let dims = [2usize, 3, 2];
    let psi = DVector::from_fn(12, |i, _| {
        C::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())
    });
    let psi = &psi / C::new(psi.norm(), 0.0);
    let rho = &psi * psi.adjoint();
    let dm = DensityMatrix::new(dims.to_vec(), rho.clone()).unwrap();
    for keep in [
        vec![0],
        vec![1],
        vec![2],
        vec![0, 1],
        vec![0, 2],
        vec![1, 2],
    ] {
        let lib = partial_trace(&dm, &keep).unwrap();
        let oracle = partial_trace_oracle(&rho, &dims, &keep);
        assert!(max_abs(&(&lib.matrix - &oracle)) < 1e-14, "keep {keep:?}");
        assert!((lib.trace().re - 1.0).abs() < 1e-12);
        assert!(hermitian_eigenvalues(&lib.matrix)[0] > -1e-12);
        lib.validate().unwrap();
    }
}

#[test]
fn reduced_states_of_the_full_layout() {
    let layout = HilbertLayout::with_reference(3).unwrap();
    let psi = DVector::from_fn(layout.dim(), |i, _| {
        C::new(1.0 / (1.0 + i as f64), 0.1 * i as f64)
    });
    let psi = &psi / C::new(psi.norm(), 0.0);
    let rho = &psi * psi.adjoint();
    let dm = DensityMatrix::new(layout.dims().to_vec(), rho.clone()).unwrap();
    for keep in [vec![3], vec![0, 3], vec![1, 2]] {
        let lib = partial_trace(&dm, &keep).unwrap();
        let oracle = partial_trace_oracle(&rho, &layout.dims(), &keep);
        assert!(max_abs(&(&lib.matrix - &oracle)) < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_preserves_trace_and_positivity(rho in random_density(12), which in 0usize..6) {
        let dims = [2usize, 3, 2];
        let keep = [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]][which].clone();
        let dm = DensityMatrix::new(dims.to_vec(), rho.clone()).unwrap();
        let red = partial_trace(&dm, &keep).unwrap();
        prop_assert!((red.trace() - C::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(hermitian_eigenvalues(&red.matrix)[0] > -1e-12);
        prop_assert!(max_abs(&(&red.matrix - partial_trace_oracle(&rho, &dims, &keep))) < 1e-13);
    }

    #[test]
    fn embedding_is_a_homomorphism(d in 2usize..5, a in random_operator(2), b in random_operator(2)) {
        let layout = HilbertLayout::with_reference(d).unwrap();
        for f in [Factor::Reference, Factor::Qubit1, Factor::Qubit2] {
            let lhs = embed(&a, f, &layout).unwrap() * embed(&b, f, &layout).unwrap();
            let rhs = embed(&(&a * &b), f, &layout).unwrap();
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
        // Operators on different factors commute.
        let x = embed(&a, Factor::Qubit1, &layout).unwrap();
        let y = embed(&b, Factor::Qubit2, &layout).unwrap();
        prop_assert!(max_abs(&(&x * &y - &y * &x)) < 1e-12);
    }

    #[test]
    fn projectors_are_nested_and_idempotent(d in 2usize..8, with_ref in any::<bool>()) {
        let layout = HilbertLayout::new(d, with_ref).unwrap();
        let low = projector_low_excitation(&layout);
        let target = projector_target(&layout);
        for p in [&low, &target] {
            prop_assert!(max_abs(&(p * p - p)) == 0.0);
            prop_assert!(max_abs(&(p - p.adjoint())) == 0.0);
        }
        // target ⊆ N ≤ 1
        prop_assert!(max_abs(&(&low * &target - &target)) == 0.0);
        let parity = parity_operator(&layout);
        let id = Operator::identity(layout.dim(), layout.dim());
        prop_assert!(max_abs(&(&parity * &parity - id)) == 0.0);
    }

    #[test]
    fn index_round_trip(d in 2usize..10, r in 0usize..2, q1 in 0usize..2, m in 0usize..10, q2 in 0usize..2) {
        prop_assume!(m < d);
        let layout = HilbertLayout::with_reference(d).unwrap();
        let n = layout.index(r, q1, m, q2);
        prop_assert_eq!(layout.decompose(n), [r, q1, m, q2]);
        prop_assert_eq!(layout.excitations(n), q1 + m + q2);
        prop_assert_eq!(n, ((r * 2 + q1) * d + m) * 2 + q2);
    }

    #[test]
    fn number_operator_matches_ladder_construction(d in 2usize..7) {
        let layout = HilbertLayout::system(d).unwrap();
        let a = ladder_operator(d).unwrap();
        let s = sigma_minus();
        let n_ic = embed(&(a.adjoint() * &a), Factor::Interconnect, &layout).unwrap();
        let n_1 = embed(&(s.adjoint() * &s), Factor::Qubit1, &layout).unwrap();
        let n_2 = embed(&(s.adjoint() * &s), Factor::Qubit2, &layout).unwrap();
        prop_assert!(max_abs(&(n_ic + n_1 + n_2 - number_operator(&layout))) < 1e-14);
    }
}
