mod common;

use common::{assert_multiset_match, diag, load, max_abs_diff, oracle_stack_block};
use luequiv::cli::cmd_hosvd;
use luequiv::linalg::CMatrix;
use luequiv::tensor::mode_gram;
use luequiv::{build_mode_stack, compare, reduce_state, to_hosvd, ClusterOrder, Tolerances, VerdictKind};

const EX1: [([usize; 3], f64); 6] = [
    ([1, 1, 1], 1.0 / 6.0),
    ([1, 2, 3], 1.0 / 4.0),
    ([1, 3, 2], 1.0 / 12.0),
    ([2, 1, 2], 1.0 / 8.0),
    ([2, 2, 1], 1.0 / 24.0),
    ([2, 3, 3], 1.0 / 3.0),
];

const EX2: [([usize; 3], f64); 9] = [
    ([1, 1, 3], 2.0 / 15.0),
    ([1, 2, 1], 1.0 / 6.0),
    ([1, 3, 2], 1.0 / 15.0),
    ([2, 1, 2], 1.0 / 5.0),
    ([2, 2, 3], 1.0 / 15.0),
    ([2, 3, 1], 1.0 / 10.0),
    ([3, 1, 1], 1.0 / 15.0),
    ([3, 2, 2], 1.0 / 15.0),
    ([3, 3, 3], 2.0 / 15.0),
];

fn amplitudes<const N: usize>(kets: &[([usize; 3], f64); N]) -> Vec<(&[usize], f64)> {
    kets.iter().map(|(k, p)| (&k[..], p.sqrt())).collect()
}

/// 1-based index clusters of a diagonal spectrum, in index order.
fn index_clusters(values: &[f64]) -> Vec<Vec<usize>> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (j, &v) in values.iter().enumerate() {
        match out.iter_mut().find(|(w, _)| (w - v).abs() < 1e-12) {
            Some((_, members)) => members.push(j + 1),
            None => out.push((v, vec![j + 1])),
        }
    }
    out.into_iter().map(|(_, m)| m).collect()
}

fn oracle_stack(kets: &[(&[usize], f64)], grams: &[Vec<f64>], m: usize) -> Vec<CMatrix> {
    let mut blocks = Vec::new();
    for i in (1..=3).filter(|&i| i != m) {
        for cluster in index_clusters(&grams[i - 1]) {
            blocks.push(oracle_stack_block(kets, grams[m - 1].len(), m, i, &cluster));
        }
    }
    blocks
}

#[test]
fn example1_grams_and_symmetry() {
    let psi = load("example1.state");
    let report = cmd_hosvd(&psi, &Tolerances::default()).unwrap();
    let s = &report.states[0];
    assert!(s.hosvd.already_hosvd);
    let expected = [diag(&[0.5, 0.5]), diag(&[7. / 24., 7. / 24., 5. / 12.]), diag(&[5. / 24., 5. / 24., 7. / 12.])];
    for (g, e) in s.grams.iter().zip(&expected) {
        assert!(max_abs_diff(&g.to_matrix(), e) < 1e-12);
    }
    let sizes: Vec<Vec<usize>> = s.hosvd.symmetry.iter().map(|g| g.block_sizes.clone()).collect();
    assert_eq!(sizes, vec![vec![2], vec![2, 1], vec![2, 1]]);
}

#[test]
fn example1_stacks_match_printed_blocks() {
    let psi = load("example1.state");
    let tol = Tolerances::default();
    let h = to_hosvd(&psi, &tol, ClusterOrder::PreserveInput).unwrap();
    let printed = [
        vec![diag(&[5. / 12., 1. / 6.]), diag(&[1. / 12., 1. / 3.]), diag(&[1. / 4., 1. / 6.]), diag(&[1. / 4., 1. / 3.])],
        vec![diag(&[7. / 24., 7. / 24., 5. / 12.]), diag(&[7. / 24., 1. / 24., 1. / 12.]), diag(&[0., 1. / 4., 1. / 3.])],
        vec![diag(&[5. / 24., 5. / 24., 7. / 12.]), diag(&[5. / 24., 1. / 8., 1. / 4.]), diag(&[0., 1. / 12., 1. / 3.])],
    ];
    for m in 1..=3 {
        let stack = build_mode_stack(&h, m).unwrap();
        for (p, c) in printed[m - 1].iter().zip(&stack.blocks) {
            assert!(max_abs_diff(p, c) < 1e-12, "mode {m}: printed {p} computed {c}");
        }
        assert_eq!(stack.len(), printed[m - 1].len());
    }
    let r = reduce_state(&h, tol.cluster).unwrap();
    for u in &r.transforms {
        assert!(max_abs_diff(u, &CMatrix::identity(u.nrows(), u.ncols())) < 1e-12);
    }
    let phases: Vec<usize> = r.residual.iter().map(|g| g.num_classes()).collect();
    assert!(r.is_diagonal());
    assert_eq!(phases, vec![2, 3, 3]);
}

#[test]
fn example1_stacks_match_independent_oracle() {
    let psi = load("example1.state");
    let h = to_hosvd(&psi, &Tolerances::default(), ClusterOrder::PreserveInput).unwrap();
    let grams = vec![vec![0.5, 0.5], vec![7. / 24., 7. / 24., 5. / 12.], vec![5. / 24., 5. / 24., 7. / 12.]];
    let kets = amplitudes(&EX1);
    for m in 1..=3 {
        let stack = build_mode_stack(&h, m).unwrap();
        let oracle = oracle_stack(&kets, &grams, m);
        assert_eq!(stack.len(), oracle.len());
        for (c, o) in stack.blocks.iter().zip(&oracle) {
            assert!(max_abs_diff(c, o) < 1e-12);
        }
    }
}

#[test]
fn example2_grams_stacks_and_residual() {
    let psi = load("example2.state");
    let tol = Tolerances::default();
    let grams = vec![vec![11. / 30., 11. / 30., 4. / 15.], vec![2. / 5., 3. / 10., 3. / 10.], vec![1. / 3., 1. / 3., 1. / 3.]];
    for m in 1..=3 {
        assert!(max_abs_diff(&mode_gram(&psi, m).unwrap(), &diag(&grams[m - 1])) < 1e-12);
    }
    let h = to_hosvd(&psi, &tol, ClusterOrder::PreserveInput).unwrap();
    assert!(h.already_hosvd);
    let printed = [
        vec![diag(&[11. / 30., 11. / 30., 4. / 15.]), diag(&[2. / 15., 1. / 5., 1. / 15.]), diag(&[7. / 30., 1. / 6., 1. / 5.])],
        vec![diag(&[2. / 5., 3. / 10., 3. / 10.]), diag(&[1. / 15., 1. / 15., 2. / 15.]), diag(&[1. / 3., 7. / 30., 1. / 6.])],
        vec![
            diag(&[4. / 15., 4. / 15., 1. / 5.]),
            diag(&[1. / 15., 1. / 15., 2. / 15.]),
            diag(&[1. / 15., 1. / 5., 2. / 15.]),
            diag(&[4. / 15., 2. / 15., 1. / 5.]),
        ],
    ];
    let kets = amplitudes(&EX2);
    for m in 1..=3 {
        let stack = build_mode_stack(&h, m).unwrap();
        assert_multiset_match(&printed[m - 1], &stack.blocks, 1e-12);
        for (c, o) in stack.blocks.iter().zip(oracle_stack(&kets, &grams, m)) {
            assert!(max_abs_diff(c, &o) < 1e-12);
        }
    }
    let r = reduce_state(&h, tol.cluster).unwrap();
    assert!(r.is_diagonal());
    assert_eq!(r.residual.iter().map(|g| g.num_classes()).sum::<usize>(), 9);
}

#[test]
fn example2_as_printed_does_not_match_its_displays() {
    // With |323⟩ the mode-3 Gram is diag(1/3, 4/15, 2/5), and |323⟩ shares
    // its mode-1 rest (2,3) with |223⟩ and its mode-2 rest (3,3) with |333⟩,
    // which puts 1/15 and √2/15 off the diagonals of the first two Grams.
    let psi = load("example2_printed.state");
    assert!(max_abs_diff(&mode_gram(&psi, 3).unwrap(), &diag(&[1. / 3., 4. / 15., 2. / 5.])) < 1e-12);
    let mut g1 = diag(&[11. / 30., 11. / 30., 4. / 15.]);
    g1[(1, 2)] = (1.0 / 15.0).into();
    g1[(2, 1)] = (1.0 / 15.0).into();
    assert!(max_abs_diff(&mode_gram(&psi, 1).unwrap(), &g1) < 1e-12);
    let mut g2 = diag(&[2. / 5., 3. / 10., 3. / 10.]);
    g2[(1, 2)] = (2f64.sqrt() / 15.0).into();
    g2[(2, 1)] = (2f64.sqrt() / 15.0).into();
    assert!(max_abs_diff(&mode_gram(&psi, 2).unwrap(), &g2) < 1e-12);
    let report = cmd_hosvd(&psi, &Tolerances::default()).unwrap();
    assert!(!report.states[0].hosvd.already_hosvd);
}

#[test]
fn product_and_ghz_spectra() {
    let tol = Tolerances::default();
    let p = load("product.state");
    let h = to_hosvd(&p, &tol, ClusterOrder::Descending).unwrap();
    for (s, &d) in h.spectra.iter().zip(p.dims()) {
        assert_eq!(s.multiplicities, vec![1, d - 1]);
        assert!((s.values[0] - 1.0).abs() < 1e-12 && s.values[1].abs() < 1e-12);
    }
    let ghz = load("ghz.state");
    let h = to_hosvd(&ghz, &tol, ClusterOrder::Descending).unwrap();
    for s in &h.spectra {
        assert_eq!(s.multiplicities, vec![2]);
        assert!((s.values[0] - 0.5).abs() < 1e-12);
    }
    let v = compare(&ghz, &ghz, &tol).unwrap();
    assert_eq!(v.kind, VerdictKind::Equivalent);
}

#[test]
fn example1_with_swapped_coefficients_is_inequivalent() {
    // Swapping the amplitudes of |123⟩ and |132⟩ moves weight 1/4 ↔ 1/12
    // between mode-2 indices 2 and 3: mode-2 Gram becomes
    // diag(7/24, 1/8, 7/12), whose spectrum differs from (5/12, 7/24, 7/24).
    let psi = load("example1.state");
    let mut coeffs = psi.coeffs().to_vec();
    let a = psi.flat_index_1based(&[1, 2, 3]).unwrap();
    let b = psi.flat_index_1based(&[1, 3, 2]).unwrap();
    coeffs.swap(a, b);
    let phi = luequiv::PureState::new(psi.dims().to_vec(), coeffs).unwrap();
    assert!(max_abs_diff(&mode_gram(&phi, 2).unwrap(), &diag(&[7. / 24., 1. / 8., 7. / 12.])) < 1e-12);
    let v = compare(&psi, &phi, &Tolerances::default()).unwrap();
    assert_eq!(v.kind, VerdictKind::Inequivalent);
    assert!(matches!(v.reason, Some(luequiv::Reason::Spectra { mode: 2 })));
}
