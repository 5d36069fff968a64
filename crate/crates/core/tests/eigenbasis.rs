use ks_blowup::eigenbasis::*;
use ks_blowup::{Dim, Error};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn zpoly(c: &[i64]) -> ExactPoly {
    ExactPoly::from_ints(Var::Z, c)
}

fn ypoly(c: &[(i64, i64)]) -> ExactPoly {
    ExactPoly::new(Var::Y, c.iter().map(|&(p, q)| frac(p, q)).collect())
}

fn h_listing(dim: Dim) -> Vec<ExactPoly> {
    match dim {
        Dim::Three => vec![
            zpoly(&[1]),
            zpoly(&[-6, 1]),
            zpoly(&[60, -20, 1]),
            zpoly(&[-840, 420, -42, 1]),
            zpoly(&[15120, -10080, 1512, -72, 1]),
            zpoly(&[-332640, 277200, -55440, 3960, -110, 1]),
            zpoly(&[8648640, -8648640, 2162160, -205920, 8580, -156, 1]),
        ],
        Dim::Four => vec![
            zpoly(&[1]),
            zpoly(&[-8, 1]),
            zpoly(&[96, -24, 1]),
            zpoly(&[-1536, 576, -48, 1]),
            zpoly(&[30720, -15360, 1920, -80, 1]),
        ],
    }
}

#[test]
fn recurrence_values_from_listing() {
    assert_eq!(recurrence_coefficient(Dim::Three, 1, 0).unwrap(), rat(-6));
    assert_eq!(recurrence_coefficient(Dim::Three, 2, 1).unwrap(), rat(-20));
    for n in 0..10 {
        assert_eq!(recurrence_coefficient(Dim::Four, n, n).unwrap(), rat(1));
    }
    assert!(matches!(
        recurrence_coefficient(Dim::Four, 2, 3),
        Err(Error::Argument(_))
    ));
}

#[test]
fn eigenpolynomials_match_listing() {
    for dim in Dim::all() {
        for (n, expected) in h_listing(dim).iter().enumerate() {
            let h = kummer_eigenpoly(dim, n);
            assert_eq!(&h, expected, "d={dim} n={n}");
            assert_eq!(h.degree(), Some(n));
            assert_eq!(h.leading(), rat(1));
            for k in 0..=n {
                assert_eq!(recurrence_coefficient(dim, n, k).unwrap(), h.coeff(k));
            }
        }
    }
}

#[test]
fn kummer_relation_holds_exactly() {
    for dim in Dim::all() {
        let two_d = rat(2 * dim.d() as i64);
        for n in 0..=8 {
            let h = kummer_eigenpoly(dim, n);
            let h1 = h.derivative();
            let h2 = h1.derivative();
            let z = zpoly(&[0, 1]);
            let lhs = &(&(&z * &h2).scale(&rat(4)) + &(&h1.scale(&two_d) - &(&z * &h1)))
                + &h.scale(&rat(n as i64));
            assert!(lhs.is_zero(), "d={dim} n={n}: {lhs}");
        }
    }
}

#[test]
fn density_eigenrelation() {
    // Delta_d phi - alpha y phi' = -2 n alpha phi
    for dim in Dim::all() {
        let alpha = dim.alpha();
        for n in 0..=8 {
            let phi = kummer_eigenpoly(dim, n).z_to_y(&two_alpha(dim)).unwrap();
            let lhs = &radial_apply(&phi, RadialOp::Laplacian(dim.d())).unwrap()
                - &radial_apply(&phi, RadialOp::Euler).unwrap().scale(&alpha);
            let rhs = phi.scale(&(-rat(2 * n as i64) * &alpha));
            assert_eq!(lhs, rhs, "d={dim} n={n}");
        }
    }
}

#[test]
fn partial_mass_eigenrelation() {
    // Delta_{d+2} varphi - (1/2l) y varphi' + (n/l) varphi = 0
    for dim in Dim::all() {
        let l = rat(dim.ell() as i64);
        for n in 0..=8 {
            let p = partial_mass_eigen(dim, n);
            let out = &(&radial_apply(&p, RadialOp::Laplacian(dim.d() + 2)).unwrap()
                - &radial_apply(&p, RadialOp::Euler).unwrap().scale(&(rat(1) / &l)).scale(&frac(1, 2)))
                + &p.scale(&(rat(n as i64) / &l));
            assert!(out.is_zero(), "d={dim} n={n}");
        }
    }
}

#[test]
fn partial_mass_listings() {
    assert_eq!(
        partial_mass_eigen(Dim::Three, 3),
        ypoly(&[(-280, 1), (0, 1), (28, 1), (0, 1), (-2, 3), (0, 1), (1, 243)])
    );
    assert_eq!(
        partial_mass_eigen(Dim::Four, 2),
        ypoly(&[(24, 1), (0, 1), (-2, 1), (0, 1), (1, 32)])
    );
    for dim in Dim::all() {
        assert_eq!(
            partial_mass_eigen(dim, 0),
            ExactPoly::constant(Var::Y, frac(1, dim.d() as i64))
        );
    }
}

#[test]
fn partial_mass_matches_density_relation() {
    // d varphi + y varphi' = phi
    for dim in Dim::all() {
        for n in 0..=6 {
            let p = partial_mass_eigen(dim, n);
            let w = &p.scale(&rat(dim.d() as i64)) + &radial_apply(&p, RadialOp::Euler).unwrap();
            let phi = kummer_eigenpoly(dim, n).z_to_y(&two_alpha(dim)).unwrap();
            assert_eq!(w, phi);
        }
    }
}

#[test]
fn conversion_matrices() {
    for dim in Dim::all() {
        let sys = EigenSystem::new(dim, 10);
        let d = sys.d_matrix();
        let dinv = sys.dinv_matrix();
        for i in 0..=10 {
            for j in 0..=i {
                let prod = (j..=i).fold(BigRational::zero(), |acc, k| acc + &d[i][k] * &dinv[k][j]);
                assert_eq!(prod, if i == j { rat(1) } else { rat(0) });
                assert_eq!(dinv[i][j], d[i][j].abs(), "Dinv = |D| at ({i},{j})");
            }
        }
        for n in 0..=8 {
            let g = sys.monomial_to_eigen(&ExactPoly::monomial(Var::Z, n, rat(1))).unwrap();
            for (k, gk) in g.iter().enumerate() {
                assert_eq!(gk, &recurrence_coefficient(dim, n, k).unwrap().abs());
            }
        }
    }
}

#[test]
fn monomial_to_eigen_examples() {
    let sys = EigenSystem::new(Dim::Three, 12);
    assert_eq!(sys.monomial_to_eigen(&zpoly(&[0, 1])).unwrap(), vec![rat(6), rat(1)]);
    assert_eq!(sys.monomial_to_eigen(&zpoly(&[1])).unwrap(), vec![rat(1)]);
    let big = ExactPoly::monomial(Var::Z, 13, rat(1));
    assert!(matches!(
        sys.monomial_to_eigen(&big),
        Err(Error::DegreeOverflow { degree: 13, cap: 12 })
    ));
}

#[test]
fn moments_against_quadrature() {
    // Oracle: composite Simpson on int z^{b+k} e^{-z/4} / int z^b e^{-z/4}.
    fn quad(e: f64) -> f64 {
        let (n, top) = (400_000, 400.0);
        let h = top / n as f64;
        let f = |z: f64| if z == 0.0 { 0.0 } else { z.powf(e) * (-z / 4.0).exp() };
        let mut acc = f(0.0) + f(top);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }
    for (b, k, expected) in [(0.5, 1, 6.0), (1.0, 1, 8.0)] {
        let oracle = quad(b + k as f64) / quad(b);
        assert!((oracle - expected).abs() < 1e-3, "oracle {oracle}");
        let beta = if b == 0.5 { frac(1, 2) } else { rat(1) };
        assert_eq!(normalized_moment(&beta, k), rat(expected as i64));
    }
    assert_eq!(normalized_moment(&frac(3, 2), 0), rat(1));
}

#[test]
fn orthogonality_both_weights() {
    for dim in Dim::all() {
        for n in 0..=8 {
            for m in 0..n {
                let (hn, hm) = (kummer_eigenpoly(dim, n), kummer_eigenpoly(dim, m));
                assert!(inner_product(dim, Weight::W, &hn, &hm).unwrap().is_zero());
                let (pn, pm) = (partial_mass_eigen(dim, n), partial_mass_eigen(dim, m));
                assert!(rho_inner_y(dim, &pn, &pm).unwrap().is_zero(), "d={dim} {n},{m}");
            }
        }
    }
    let h1 = kummer_eigenpoly(Dim::Three, 1);
    assert_eq!(inner_product(Dim::Three, Weight::W, &h1, &h1).unwrap(), rat(24));
    let sys = EigenSystem::new(Dim::Three, 12);
    assert_eq!(sys.norm_w(1).unwrap(), rat(24));
    assert!(sys.norm_rho(3).unwrap() > rat(0));
}

#[test]
fn nonlocal_expansion_listing() {
    let d3 = ExactPoly::new(
        Var::Z,
        vec![
            rat(705600),
            rat(-940800),
            rat(364560),
            rat(-57792),
            frac(12628, 3),
            frac(-416, 3),
            frac(5, 3),
        ],
    );
    assert_eq!(nonlocal_expand(Dim::Three).unwrap(), d3);
    let d4 = ExactPoly::new(Var::Z, vec![rat(9216), rat(-5760), rat(1056), rat(-70), frac(3, 2)]);
    assert_eq!(nonlocal_expand(Dim::Four).unwrap(), d4);
    for dim in Dim::all() {
        assert_eq!(
            nonlocal_expand_with(dim, &ExactPoly::one(Var::Z)).unwrap(),
            ExactPoly::one(Var::Z)
        );
    }
}

#[test]
fn constants_b_and_c() {
    assert_eq!(compute_b(Dim::Three).unwrap(), rat(39360));
    assert_eq!(compute_b(Dim::Four).unwrap(), rat(576));
    // Oracle: (2 alpha)^l d^{l+1} / (B (d + 2l)) evaluated by hand.
    // d=3: (1/3)^3 * 81 / (39360 * 9) = 3 / 354240 = 1/118080
    assert_eq!(compute_c(Dim::Three).unwrap(), frac(1, 118080));
    // d=4: (1/2)^2 * 64 / (576 * 8) = 16 / 4608 = 1/288
    assert_eq!(compute_c(Dim::Four).unwrap(), frac(1, 288));
    for dim in Dim::all() {
        let (d, l) = (dim.d() as i64, dim.ell() as i64);
        let b = compute_b(dim).unwrap();
        let alt = rat(d.pow(l as u32 + 1)) / (b * rat(d + 2 * l) * rat(l.pow(l as u32)));
        assert_eq!(compute_c(dim).unwrap(), alt);
    }
}

#[test]
fn b_agrees_with_rho_projection() {
    for dim in Dim::all() {
        let phi = partial_mass_eigen(dim, dim.ell() as usize);
        let q = &(&phi * &phi).scale(&rat(dim.d() as i64))
            + &(&phi * &radial_apply(&phi, RadialOp::Euler).unwrap());
        assert_eq!(rho_projection(dim, &q, &phi).unwrap(), compute_b(dim).unwrap());
    }
}

#[test]
fn residual_polynomial_listing() {
    let b3 = rat(39360);
    let phi6 = partial_mass_eigen(Dim::Three, 3);
    let rest3 = ypoly(&[
        (235200, 1),
        (0, 1),
        (-62720, 1),
        (0, 1),
        (17360, 3),
        (0, 1),
        (-19264, 81),
        (0, 1),
        (1148, 243),
        (0, 1),
        (-4, 243),
    ]);
    assert_eq!(
        build_residual_poly(Dim::Three).unwrap(),
        &phi6.scale(&-b3) + &rest3
    );
    let b2 = rat(576);
    let phi4 = partial_mass_eigen(Dim::Four, 2);
    let rest2 = ypoly(&[(2304, 1), (0, 1), (-480, 1), (0, 1), (33, 1), (0, 1), (-1, 8)]);
    assert_eq!(build_residual_poly(Dim::Four).unwrap(), &phi4.scale(&-b2) + &rest2);
}

#[test]
fn residual_projection_vanishes() {
    for dim in Dim::all() {
        let p = build_residual_poly(dim).unwrap();
        let phi = partial_mass_eigen(dim, dim.ell() as usize);
        assert!(rho_projection(dim, &p, &phi).unwrap().is_zero());
    }
}

#[test]
fn wrong_b_breaks_the_cancellation() {
    let dim = Dim::Four;
    let p = build_residual_poly_with(dim, &rat(577)).unwrap();
    let phi = partial_mass_eigen(dim, 2);
    assert!(!rho_projection(dim, &p, &phi).unwrap().is_zero());
}

#[test]
fn radial_operator_examples() {
    for dim in Dim::all() {
        let y2 = ExactPoly::monomial(Var::Y, 2, rat(1));
        let n = dim.d() + 2;
        assert_eq!(
            radial_apply(&y2, RadialOp::Laplacian(n)).unwrap(),
            ExactPoly::constant(Var::Y, rat(2 * n as i64))
        );
    }
    let y4 = ExactPoly::monomial(Var::Y, 4, rat(1));
    assert_eq!(
        radial_apply(&y4, RadialOp::Euler).unwrap(),
        ExactPoly::monomial(Var::Y, 4, rat(4))
    );
    let odd = ExactPoly::monomial(Var::Y, 3, rat(1));
    assert!(matches!(radial_apply(&odd, RadialOp::Euler), Err(Error::Argument(_))));
}

#[test]
fn repeated_calls_are_identical() {
    for dim in Dim::all() {
        assert_eq!(build_residual_poly(dim).unwrap(), build_residual_poly(dim).unwrap());
        assert_eq!(compute_c(dim).unwrap(), compute_c(dim).unwrap());
    }
}

#[test]
fn rho_mass_matches_quadrature() {
    for dim in Dim::all() {
        let l = dim.ell_f64();
        let n = 200_000;
        let top = 60.0;
        let h = top / n as f64;
        let f = |y: f64| y.powf(dim.d_f64() + 1.0) * (-y * y / (4.0 * l)).exp();
        let sum: f64 = (1..n).map(|i| f(i as f64 * h)).sum::<f64>() * h + 0.5 * h * f(top);
        assert!((sum / rho_mass(dim) - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn eigen_round_trip(coeffs in prop::collection::vec((-40i64..40, 1i64..6), 1..9), d4 in any::<bool>()) {
        let dim = if d4 { Dim::Four } else { Dim::Three };
        let sys = EigenSystem::new(dim, 12);
        let p = ExactPoly::new(Var::Z, coeffs.into_iter().map(|(a, b)| frac(a, b)).collect());
        let g = sys.monomial_to_eigen(&p).unwrap();
        prop_assert_eq!(sys.eigen_to_monomial(&g).unwrap(), p);
    }
}
