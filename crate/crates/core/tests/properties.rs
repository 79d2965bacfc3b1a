use nalgebra::DMatrix;
use proptest::prelude::*;

use nlep::cheb::{colleague_matrix, ChebApprox};
use nlep::counting::{count_arg_det, count_trace, Contour, CountOptions};
use nlep::grid::{self, Grid};
use nlep::linalg::{self, c64, CMat, C64};
use nlep::linear::{bauer_fike_disks, bauer_fike_sharp_disks, eigen_basis, in_union, Disk};
use nlep::matfun::{Domain, MatFun, ScalarTerm, Term};
use nlep::pseudo::rank_one_singularizer;
use nlep::special::lambert::{branch_index, lambert_w};
use nlep::special::transfer::transfer_matrix;

fn cplx() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c64(a, b))
}

fn cmat(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(cplx(), n * n).prop_map(move |v| CMat::from_row_slice(n, n, &v))
}

fn sized_cmat() -> impl Strategy<Value = CMat> {
    (1usize..=4).prop_flat_map(cmat)
}

/// `diag(prod_k (z - r_jk))` built from per-row root lists.
fn diag_poly(roots: &[Vec<C64>]) -> MatFun {
    let n = roots.len();
    let terms = roots
        .iter()
        .enumerate()
        .map(|(j, rs)| {
            let mut coeffs = vec![c64(1.0, 0.0)];
            for &r in rs {
                let mut next = vec![c64(0.0, 0.0); coeffs.len() + 1];
                for (k, &c) in coeffs.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * r;
                }
                coeffs = next;
            }
            let mut m = CMat::zeros(n, n);
            m[(j, j)] = c64(1.0, 0.0);
            Term::new(ScalarTerm::Polynomial(coeffs), m)
        })
        .collect();
    MatFun::split(n, terms, Domain::WholePlane).unwrap()
}

/// `A - z I` as a split-form function.
fn shifted(a: &CMat) -> MatFun {
    let n = a.nrows();
    let terms = vec![
        Term::new(ScalarTerm::constant(c64(1.0, 0.0)), a.clone()),
        Term::new(ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(-1.0, 0.0)]), linalg::identity(n)),
    ];
    MatFun::split(n, terms, Domain::WholePlane).unwrap()
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_eval_is_linear(a in cmat(3), b in cmat(3), c in cplx(), z in cplx()) {
        let f1 = MatFun::split(3, vec![Term::new(ScalarTerm::ExpScaled(c), a)], Domain::WholePlane).unwrap();
        let f2 = MatFun::split(3, vec![Term::new(ScalarTerm::Polynomial(vec![c, c64(1.0, 0.0)]), b)], Domain::WholePlane).unwrap();
        let sum = f1.add(&f2).unwrap();
        let lhs = sum.eval(z).unwrap();
        let rhs = f1.eval(z).unwrap() + f2.eval(z).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * (1.0 + linalg::norm_fro(&rhs)));
    }

    #[test]
    fn diagonal_split_resums_exactly(a in cmat(3), c in cplx(), z in cplx()) {
        let f = MatFun::split(3, vec![
            Term::new(ScalarTerm::ExpMinusOne(c), a.clone()),
            Term::new(ScalarTerm::Polynomial(vec![c, c]), a.transpose()),
        ], Domain::WholePlane).unwrap();
        let (d, e) = f.diagonal_split(z).unwrap();
        let mut back = e.clone();
        for (j, dj) in d.iter().enumerate() {
            back[(j, j)] += dj;
        }
        prop_assert_eq!(back, f.eval(z).unwrap());
    }

    #[test]
    fn scalar_derivatives_match_differences(c in cplx(), z in cplx()) {
        let zs = z + c64(3.0, 0.0);
        for s in [
            ScalarTerm::Polynomial(vec![c, c64(1.0, 0.0), c]),
            ScalarTerm::ExpScaled(c),
            ScalarTerm::ExpMinusOne(c),
            ScalarTerm::SqrtPrincipal,
            ScalarTerm::RationalPole(c64(-4.0, 0.0)),
        ] {
            let h = 1e-5;
            let fd = (s.eval(zs + h).unwrap() - s.eval(zs - h).unwrap()) / (2.0 * h);
            let d = s.deriv(zs).unwrap();
            prop_assert!((fd - d).norm() <= 1e-6 * d.norm().max(1.0), "{s:?} at {zs}: {fd} vs {d}");
        }
    }

    #[test]
    fn eigenvalues_lie_in_gershgorin_union(a in sized_cmat(), alpha in 0.0..=1.0f64) {
        let n = a.nrows();
        let mut e = a.clone();
        for j in 0..n {
            e[(j, j)] = c64(0.0, 0.0);
        }
        for lam in linalg::eigenvalues(&a).unwrap() {
            let d: Vec<C64> = (0..n).map(|j| a[(j, j)] - lam).collect();
            let best = grid::margins(&d, &e, alpha).into_iter().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(best >= -1e-9 * (1.0 + linalg::norm2(&a)), "eigenvalue {lam} outside union, margin {best}");
        }
    }

    #[test]
    fn gershgorin_union_ignores_symmetric_permutation(a in cmat(4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let t = shifted(&a);
        let g = Grid::new(-3.0, 3.0, -3.0, 3.0, 13, 13).unwrap();
        let f0 = grid::gershgorin_field(&t, &g, 0.5).unwrap();
        let f1 = grid::gershgorin_field(&t.permuted(&perm).unwrap(), &g, 0.5).unwrap();
        for (x, y) in f0.values.iter().zip(&f1.values) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn bauer_fike_disks_contain_perturbed_spectrum(a in sized_cmat(), e in prop::collection::vec(cplx(), 16), scale in 0.0..0.3f64) {
        let n = a.nrows();
        let e = CMat::from_fn(n, n, |i, j| e[i * 4 + j] * scale);
        let f = DMatrix::from_fn(n, n, |i, j| e[(i, j)].norm());
        let Ok(basis) = eigen_basis(&a) else { return Ok(()) };
        prop_assume!(basis.sec.iter().all(|s| *s < 1e6));
        // boundary hits are exact in the worst case, so allow rounding
        let widen = |ds: Vec<Disk>| -> Vec<Disk> {
            ds.into_iter().map(|d| Disk::new(d.center, d.radius * (1.0 + 1e-9) + 1e-12, d.label).unwrap()).collect()
        };
        let plain = widen(bauer_fike_disks(&a, &f).unwrap());
        let sharp = widen(bauer_fike_sharp_disks(&a, &f).unwrap());
        for lam in linalg::eigenvalues(&(&a + &e)).unwrap() {
            prop_assert!(in_union(&plain, lam), "{lam} outside Bauer-Fike disks");
            prop_assert!(in_union(&sharp, lam), "{lam} outside sharp disks");
        }
        prop_assert!(basis.sec.iter().all(|s| *s >= 1.0 - 1e-12));
    }

    #[test]
    fn secants_are_one_for_hermitian(b in cmat(4)) {
        let h = &b + b.adjoint();
        let basis = eigen_basis(&h).unwrap();
        let gaps = basis.values.iter().enumerate().flat_map(|(i, x)| basis.values[i + 1..].iter().map(move |y| (x - y).norm()));
        prop_assume!(gaps.fold(f64::INFINITY, f64::min) > 1e-3);
        for s in &basis.sec {
            prop_assert!((s - 1.0).abs() <= 1e-8, "sec {s}");
        }
    }

    #[test]
    fn singularizer_has_norm_sigma_min(t in sized_cmat()) {
        let s = linalg::sigma_min(&t);
        let e0 = rank_one_singularizer(&t);
        prop_assert!((linalg::norm2(&e0) - s).abs() <= 1e-10 * (1.0 + linalg::norm2(&t)));
        prop_assert!(linalg::sigma_min(&(&t + &e0)) <= 1e-10 * (1.0 + linalg::norm2(&t)));
    }

    #[test]
    fn lambert_w_residual_and_branch(re in -20.0..20.0f64, im in -20.0..20.0f64, k in -3i64..=3) {
        let z = c64(re, im);
        prop_assume!(z.norm() > 1e-3 && (z + (-1.0f64).exp()).norm() > 1e-3);
        let w = lambert_w(k, z).unwrap();
        prop_assert!((w * w.exp() - z).norm() <= 1e-12 * z.norm().max(1.0) * (1.0 + w.norm()));
        prop_assert_eq!(branch_index(w, z), k);
    }

    #[test]
    fn transfer_matrix_is_unimodular_and_composes(cr in -1e3..1e3f64, ci in -1e3..1e3f64, x1 in 0.0..1.5f64, x2 in 0.0..1.5f64) {
        let c = c64(cr, ci) * 0.1;
        let t = transfer_matrix(c, x1 + x2);
        prop_assert!((t.determinant() - 1.0).norm() <= 1e-12 * t.norm_squared().max(1.0));
        let prod = transfer_matrix(c, x2) * transfer_matrix(c, x1);
        let scale = t.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!((prod - t).iter().all(|z| z.norm() <= 1e-10 * scale));
    }

    #[test]
    fn cheb_map_round_trips(lo in -10.0..0.0f64, w in 0.1..20.0f64, z in cplx()) {
        let ch = ChebApprox::from_scalar(&ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(1.0, 0.0)]), lo, lo + w, 3).unwrap();
        prop_assert!((ch.to_z(ch.to_x(z)) - z).norm() <= 1e-12 * (1.0 + z.norm() + lo.abs() + w));
    }

    #[test]
    fn colleague_roots_map_to_polynomial_roots(roots in prop::collection::vec(-0.9..0.9f64, 3), lo in -5.0..5.0f64, w in 0.5..4.0f64) {
        let mut sorted = roots.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|p| p[1] - p[0] > 0.05));
        let zr: Vec<C64> = sorted.iter().map(|x| c64(lo + w * (x + 1.0) / 2.0, 0.0)).collect();
        let t = diag_poly(&[zr.clone()]);
        let ch = ChebApprox::from_matfun(&t, lo, lo + w, 3).unwrap();
        let c = colleague_matrix(&ch).unwrap();
        let mut got: Vec<f64> = linalg::eigenvalues(&c).unwrap().iter().map(|&x| ch.to_z(x).re).collect();
        got.sort_by(f64::total_cmp);
        for (g, r) in got.iter().zip(&zr) {
            prop_assert!((g - r.re).abs() <= 1e-8 * (1.0 + r.re.abs()), "{g} vs {}", r.re);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn count_methods_agree_with_root_oracle(
        roots in prop::collection::vec(prop::collection::vec(cplx(), 1..=3), 1..=3),
        cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.3..2.0f64,
    ) {
        let center = c64(cx, cy);
        let all: Vec<C64> = roots.iter().flatten().copied().collect();
        prop_assume!(all.iter().all(|z| ((z - center).norm() - r).abs() > 0.05));
        let expected = all.iter().filter(|z| (*z - center).norm() < r).count() as i64;
        let t = diag_poly(&roots);
        let contour = Contour::circle(center, r, 96).unwrap();
        let arg = count_arg_det(&t, &contour, &CountOptions::default()).unwrap();
        let tr = count_trace(&t, &contour, 4, 16, 1 << 12).unwrap();
        prop_assert_eq!(arg.count, expected);
        prop_assert_eq!(tr.count, expected);
    }

    #[test]
    fn counts_are_additive_over_disjoint_contours(
        left in prop::collection::vec((-2.8..-0.2f64, -0.8..0.8f64), 0..=3),
        right in prop::collection::vec((0.2..2.8f64, -0.8..0.8f64), 0..=3),
    ) {
        let zs: Vec<C64> = left.iter().chain(&right).map(|&(a, b)| c64(a, b)).collect();
        prop_assume!(!zs.is_empty());
        let t = diag_poly(&[zs.clone()]);
        let opts = CountOptions::default();
        let c1 = count_arg_det(&t, &Contour::rectangle(c64(-3.0, -1.0), c64(-0.1, 1.0)).unwrap(), &opts).unwrap();
        let c2 = count_arg_det(&t, &Contour::rectangle(c64(0.1, -1.0), c64(3.0, 1.0)).unwrap(), &opts).unwrap();
        let both = count_arg_det(&t, &Contour::ellipse(c64(0.0, 0.0), 4.0, 2.0, 128).unwrap(), &opts).unwrap();
        prop_assert_eq!(c1.count, left.len() as i64);
        prop_assert_eq!(c2.count, right.len() as i64);
        prop_assert_eq!(c1.count + c2.count, both.count);
    }

    #[test]
    fn count_survives_small_contour_jitter(a in cmat(3), jitter in prop::collection::vec(cplx(), 64)) {
        let t = shifted(&a);
        let contour = Contour::circle(c64(0.0, 0.0), 2.0, 64).unwrap();
        let lams = linalg::eigenvalues(&a).unwrap();
        let gap = lams.iter().map(|z| (z.norm() - 2.0).abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 0.1);
        let dz: Vec<C64> = jitter.iter().map(|z| z * (0.25 * gap.min(0.2) / 2.0_f64.hypot(2.0))).collect();
        let base = count_arg_det(&t, &contour, &CountOptions::default()).unwrap();
        let moved = count_arg_det(&t, &contour.perturbed(&dz).unwrap(), &CountOptions::default()).unwrap();
        prop_assert_eq!(base.count, lams.iter().filter(|z| z.norm() < 2.0).count() as i64);
        prop_assert_eq!(base.count, moved.count);
    }
}
