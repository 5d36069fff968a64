use ks_blowup::profile::*;
use ks_blowup::{Dim, Error};
use proptest::prelude::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Independent oracle: plain bisection on the implicit equation.
fn bisect_q(c: f64, d: f64, l: i32, xi: f64) -> f64 {
    let g = |q: f64| c * xi.powi(2 * l) * q.powi(l) + d * q - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0 / d);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if g(m) > 0.0 {
            hi = m
        } else {
            lo = m
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn q_at_origin() {
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        assert_eq!(p.q_of_xi(0.0).unwrap(), 1.0 / dim.d_f64());
        assert_eq!(p.q_prime(0.0).unwrap(), 0.0);
        assert_eq!(p.f_of_xi(0.0).unwrap(), 1.0);
    }
}

#[test]
fn implicit_residual_and_monotonicity() {
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        let mut prev = f64::INFINITY;
        for xi in log_grid(1e-6, 1e6, 600) {
            let q = p.q_of_xi(xi).unwrap();
            assert!(p.implicit_residual(xi, q).abs() <= 1e-12, "xi={xi}");
            assert!(q > 0.0 && q <= 1.0 / dim.d_f64());
            assert!(q <= prev);
            prev = q;
        }
    }
}

#[test]
fn profile_ode_pointwise() {
    // d Q (Q - 1/d) + (Q - 1/2) xi Q' = 0
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        let d = dim.d_f64();
        for xi in log_grid(1e-3, 1e3, 300) {
            let q = p.q_of_xi(xi).unwrap();
            let qp = p.q_prime(xi).unwrap();
            let r = -d * q * p.q_deficit(xi).unwrap() + (q - 0.5) * xi * qp;
            assert!(r.abs() < 1e-10, "xi={xi} r={r}");
        }
    }
}

#[test]
fn taylor_ratio_near_origin() {
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        let (d, l) = (dim.d_f64(), dim.ell() as i32);
        let xi = 1e-3;
        let target = p.c / d.powi(l + 1);
        let ratio = p.q_deficit(xi).unwrap() / xi.powi(2 * l);
        assert!((ratio / target - 1.0).abs() < 1e-6);
        let f_target = p.c * (d + 2.0 * l as f64) / d.powi(l + 1);
        let b_form = (1.0 / l as f64).powi(l) / p.b;
        assert!((f_target / b_form - 1.0).abs() < 1e-12);
        let f_ratio = p.f_deficit(xi).unwrap() / xi.powi(2 * l);
        assert!((f_ratio / f_target - 1.0).abs() < 1e-6);
    }
}

#[test]
fn large_xi_limits() {
    // c_3^{-1/3} = 118080^{1/3} = 49.0598...; the commonly quoted 49.0516 is a rounding slip.
    for (dim, expect) in [(Dim::Three, 49.0598), (Dim::Four, 16.9706)] {
        let p = ProfileParams::new(dim).unwrap();
        let l = dim.ell() as i32;
        let xi = 1e3;
        let oracle = bisect_q(p.c, dim.d_f64(), l, xi);
        let q = p.q_of_xi(xi).unwrap();
        assert!((q / oracle - 1.0).abs() < 1e-12);
        assert!((p.q_tail_constant() - expect).abs() < 1e-4);
        assert!((xi * xi * q / p.q_tail_constant() - 1.0).abs() < 5e-3);
        let f_lim = (dim.d_f64() - 2.0) * p.q_tail_constant();
        let f = p.f_of_xi(xi).unwrap();
        assert!((xi * xi * f / f_lim - 1.0).abs() < 1e-2);
    }
}

#[test]
fn q_prime_against_finite_differences() {
    let p = ProfileParams::new(Dim::Four).unwrap();
    let h = 1e-5;
    let fd = (p.q_of_xi(1.0 + h).unwrap() - p.q_of_xi(1.0 - h).unwrap()) / (2.0 * h);
    assert!((p.q_prime(1.0).unwrap() - fd).abs() < 1e-8);
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        for i in 1..=1000 {
            let xi = 0.1 * i as f64;
            assert!(p.q_prime(xi).unwrap() < 0.0);
            let h = 1e-4 * xi.max(1.0);
            let fd2 = (p.q_prime(xi + h).unwrap() - p.q_prime(xi - h).unwrap()) / (2.0 * h);
            let q2 = p.q_second(xi).unwrap();
            assert!((q2 - fd2).abs() <= 1e-6 * q2.abs().max(1e-3), "xi={xi}");
        }
    }
}

#[test]
fn f_matches_partial_mass_relation() {
    // F = d Q + xi Q' is the density of the partial mass xi^d Q
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        let d = dim.d_f64();
        for xi in [0.3, 1.0, 2.5, 7.0] {
            let h = 1e-5;
            let m = |x: f64| x.powf(d) * p.q_of_xi(x).unwrap();
            let fd = (m(xi + h) - m(xi - h)) / (2.0 * h) / xi.powf(d - 1.0);
            assert!((fd - p.f_of_xi(xi).unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn f_satisfies_integrated_density_ode() {
    // Differentiating the Q equation gives the F equation in partial-mass form:
    // -xi F'/2 - F + F^2 + xi Q F' ... checked through m = xi^d Q:
    // -xi m'/2 + (d-2)/2 m + m m'/xi^{d-1} = 0.
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        let d = dim.d_f64();
        for xi in [0.2, 0.9, 3.0, 11.0] {
            let q = p.q_of_xi(xi).unwrap();
            let m = xi.powf(d) * q;
            let mp = xi.powf(d - 1.0) * p.f_of_xi(xi).unwrap();
            let r = -0.5 * xi * mp + 0.5 * (d - 2.0) * m + m * mp / xi.powf(d - 1.0);
            assert!(r.abs() < 1e-10 * m.max(1.0), "xi={xi} r={r}");
        }
    }
}

#[test]
fn psi_examples() {
    let prof = Profile::new(Dim::Three).unwrap();
    for s in [10.0, 50.0, 400.0] {
        let expect = 1.0 / 3.0 + 280.0 / (39360.0 * s);
        assert!((prof.psi(0.0, s).unwrap() - expect).abs() < 1e-15);
    }
    for dim in Dim::all() {
        let prof = Profile::new(dim).unwrap();
        let l = dim.ell_f64();
        for s in [20.0f64, 100.0] {
            let y = 2.0 * s.powf(1.0 / (2.0 * l)) * 1.0001;
            assert_eq!(prof.psi(y, s).unwrap(), prof.params.q_of_xi(prof.xi(y, s)).unwrap());
            for y in [0.0, 0.5, 3.0, y * 0.7] {
                let lhs = prof.psi(y, s).unwrap()
                    - prof.params.q_of_xi(prof.xi(y, s)).unwrap()
                    - prof.psi_hat(y, s).unwrap();
                assert!(lhs.abs() <= 4.0 * f64::EPSILON);
            }
        }
        // s (Psi(1,s) - Q(s^{-1/2l})) -> -phi_tilde(1)/B
        let target = -prof.phi_tilde(1.0) / prof.params.b;
        let s = 1e6;
        let got = s * (prof.psi(1.0, s).unwrap() - prof.params.q_of_xi(prof.xi(1.0, s)).unwrap());
        assert!((got - target).abs() < 1e-9 * target.abs().max(1.0));
    }
    assert!(matches!(prof.psi(1.0, 0.0), Err(Error::Argument(_))));
}

#[test]
fn psi_derivatives_against_finite_differences() {
    for dim in Dim::all() {
        let prof = Profile::new(dim).unwrap();
        let s = 60.0f64;
        let edge = s.powf(1.0 / (2.0 * dim.ell_f64()));
        for y in [0.7, 2.0, 1.3 * edge, 1.8 * edge, 3.0 * edge] {
            let j = prof.psi_jet(y, s).unwrap();
            let h = 1e-4;
            let f = |y: f64, s: f64| prof.psi(y, s).unwrap();
            let fy = (f(y + h, s) - f(y - h, s)) / (2.0 * h);
            let fyy = (f(y + h, s) - 2.0 * f(y, s) + f(y - h, s)) / (h * h);
            let fs = (f(y, s + h) - f(y, s - h)) / (2.0 * h);
            assert!((j.vy - fy).abs() < 1e-8, "vy at {y}");
            assert!((j.vyy - fyy).abs() < 1e-5, "vyy at {y}");
            assert!((j.vs - fs).abs() < 1e-9, "vs at {y}");
        }
    }
}

#[test]
fn ehat_matches_direct_evaluation() {
    for dim in Dim::all() {
        let prof = Profile::new(dim).unwrap();
        let d = dim.d_f64();
        let s = 80.0;
        for y in [0.5, 2.0, 4.0, 7.5] {
            let j = prof.psi_jet(y, s).unwrap();
            let direct = j.vyy + (d + 1.0) / y * j.vy - 0.5 * y * j.vy - j.v + d * j.v * j.v
                + y * j.v * j.vy
                - j.vs;
            let e = prof.ehat(y, s).unwrap();
            assert!((e - direct).abs() < 1e-12, "y={y} {e} {direct}");
        }
    }
}

#[test]
fn cutoff_examples() {
    let c = CutoffSpec::new(3.0).unwrap();
    assert_eq!(c.chi(0.0), 1.0);
    assert_eq!(c.chi(3.0), 1.0);
    assert_eq!(c.chi(6.0), 0.0);
    assert_eq!(c.chi(100.0), 0.0);
    let mid = c.chi(4.5);
    assert!(mid > 0.0 && mid < 1.0);
    let mut prev = 1.0;
    for i in 0..=300 {
        let v = c.chi(3.0 + i as f64 / 100.0);
        assert!(v <= prev);
        prev = v;
    }
    assert!(CutoffSpec::new(0.0).is_err());
}

#[test]
fn final_profile_examples() {
    let p4 = ProfileParams::new(Dim::Four).unwrap();
    assert!((p4.final_profile_constant() - 48.0).abs() < 1e-12);
    let p3 = ProfileParams::new(Dim::Three).unwrap();
    assert!((p3.final_profile_constant() - 236160f64.cbrt()).abs() < 1e-9);
    assert!((p3.final_profile_constant() - 61.80).abs() < 0.02);
    for p in [p3, p4] {
        let l = p.dim.ell_f64();
        let k = |r: f64| p.final_profile(r).unwrap() * r * r / r.ln().abs().powf(1.0 / l);
        assert!((k(0.5) / k(1e-6) - 1.0).abs() < 1e-12);
        assert!(p.final_profile(1.0).is_err());
        assert!(p.final_profile(0.0).is_err());
    }
}

#[test]
fn matched_final_profile_approaches_formula() {
    // The matched form converges to the closed form only logarithmically in r.
    for dim in Dim::all() {
        let p = ProfileParams::new(dim).unwrap();
        let r1 = p.final_profile_matched(1e-6, 60.0).unwrap() / p.final_profile(1e-6).unwrap();
        let r2 = p.final_profile_matched(1e-60, 60.0).unwrap() / p.final_profile(1e-60).unwrap();
        assert!((r2 - 1.0).abs() < (r1 - 1.0).abs());
        assert!((r2 - 1.0).abs() < 0.1, "ratio {r2}");
    }
}

proptest! {
    #[test]
    fn residual_bound_anywhere(lx in -14.0f64..14.0, d4 in any::<bool>()) {
        let dim = if d4 { Dim::Four } else { Dim::Three };
        let p = ProfileParams::new(dim).unwrap();
        let xi = lx.exp();
        let q = p.q_of_xi(xi).unwrap();
        prop_assert!(p.implicit_residual(xi, q).abs() <= p.root_tol);
    }
}
