use std::sync::Arc;

use ks_blowup::profile::{CutoffSpec, Profile, ProfileParams, Smoothness};
use ks_blowup::sim::transform::{self, to_physical, to_selfsimilar, v_from_w, w_from_v};
use ks_blowup::sim::{
    estimate_blowup_time, make_initial_data, Boundary, Frame, Grid, Integrator, RadialState, Representation,
    Scheme, SimConfig,
};
use ks_blowup::{Dim, Error};
use proptest::prelude::*;

fn integrator(grid: &Arc<Grid>, dim: Dim, frame: Frame, bc: Boundary) -> Integrator {
    Integrator::new(Scheme::new(grid.clone(), dim, frame, bc).unwrap())
}

fn constant_state(grid: &Arc<Grid>, frame: Frame, t: f64, c: f64) -> RadialState {
    RadialState::from_fn(frame, t, grid.clone(), |_| c).unwrap()
}

#[test]
fn steady_state_preserved_over_ten_thousand_steps() {
    for dim in Dim::all() {
        let d = dim.d_f64();
        let grid = Arc::new(Grid::uniform(200, 20.0).unwrap());
        for bc in [Boundary::Neumann, Boundary::Value { value: 1.0 / d }] {
            let mut it = integrator(&grid, dim, Frame::SelfSimilar, bc);
            let mut st = constant_state(&grid, Frame::SelfSimilar, 1.0, 1.0 / d);
            for _ in 0..10_000 {
                it.step(&mut st, 1e-3).unwrap();
            }
            let err = st.values.iter().fold(0.0f64, |m, v| m.max((v - 1.0 / d).abs()));
            assert!(err <= 1e-10, "{dim:?} {bc:?}: {err:e}");
        }
    }
}

#[test]
fn zero_is_fixed_in_both_frames() {
    let grid = Arc::new(Grid::uniform(64, 8.0).unwrap());
    for frame in [Frame::SelfSimilar, Frame::Physical] {
        let scheme = Scheme::new(grid.clone(), Dim::Four, frame, Boundary::Neumann).unwrap();
        let st = constant_state(&grid, frame, 1.0, 0.0);
        assert!(scheme.rhs(&st).unwrap().iter().all(|x| *x == 0.0));
    }
}

#[test]
fn steady_rhs_vanishes() {
    let grid = Arc::new(Grid::uniform(64, 8.0).unwrap());
    let scheme = Scheme::new(grid.clone(), Dim::Three, Frame::SelfSimilar, Boundary::Neumann).unwrap();
    let st = constant_state(&grid, Frame::SelfSimilar, 1.0, 1.0 / 3.0);
    assert!(scheme.rhs(&st).unwrap().iter().all(|x| x.abs() < 1e-12));
}

fn bernoulli(v0: f64, d: f64, sigma: f64) -> f64 {
    1.0 / (d + (1.0 / v0 - d) * sigma.exp())
}

fn constant_error(dt: f64) -> f64 {
    let grid = Arc::new(Grid::uniform(32, 4.0).unwrap());
    let mut it = integrator(&grid, Dim::Four, Frame::SelfSimilar, Boundary::Neumann);
    let mut st = constant_state(&grid, Frame::SelfSimilar, 50.0, 0.1);
    it.advance_to(&mut st, 51.0, dt, 1.0).unwrap();
    let exact = bernoulli(0.1, 4.0, 1.0);
    st.values.iter().fold(0.0f64, |m, v| m.max((v - exact).abs()))
}

#[test]
fn constant_field_matches_bernoulli_closed_form() {
    let err = constant_error(1e-4);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn temporal_order_is_two() {
    let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| constant_error(dt)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.4, "errors {e:?}");
    }
}

#[test]
fn physical_constant_field_blows_up_at_one_over_d_v0() {
    let (d, v0) = (4.0, 0.1);
    let grid = Arc::new(Grid::uniform(32, 1.0).unwrap());
    let mut it = integrator(&grid, Dim::Four, Frame::Physical, Boundary::Neumann);
    let mut st = constant_state(&grid, Frame::Physical, 0.0, v0);
    let (mut ts, mut sup) = (vec![0.0], vec![v0]);
    for k in 1..=40 {
        it.advance_to(&mut st, 2.0 * k as f64 / 40.0, 1e-4, 0.4).unwrap();
        ts.push(st.time);
        sup.push(st.sup_abs());
    }
    let t = st.time;
    let exact = v0 / (1.0 - d * v0 * t);
    assert!((st.values[0] - exact).abs() < 1e-6 * exact, "{} vs {exact}", st.values[0]);
    let est = estimate_blowup_time(&ts, &sup, 20).unwrap();
    assert!((est.t_blow - 1.0 / (d * v0)).abs() < 1e-6, "{est:?}");
}

#[test]
fn tiny_absolute_times_are_stepped_not_skipped() {
    // the same blowup as above rescaled by 1e20: v -> 1e20 v, t -> 1e-20 t
    let (d, v0, scale) = (4.0, 0.1, 1e20);
    let grid = Arc::new(Grid::uniform(32, 1.0).unwrap());
    let mut it = integrator(&grid, Dim::Four, Frame::Physical, Boundary::Neumann);
    let mut st = constant_state(&grid, Frame::Physical, 0.0, v0 * scale);
    let steps = it.advance_to(&mut st, 2.0 / scale, 1e-4 / scale, 0.4).unwrap();
    assert!(steps >= 2000, "{steps}");
    let exact = v0 * scale / (1.0 - d * v0 * 2.0);
    assert!((st.values[0] - exact).abs() < 1e-6 * exact, "{} vs {exact}", st.values[0]);
}

#[test]
fn cfl_violation_is_a_configuration_error() {
    let grid = Arc::new(Grid::uniform(100, 50.0).unwrap());
    let mut it = integrator(&grid, Dim::Four, Frame::SelfSimilar, Boundary::Neumann);
    let mut st = RadialState::from_fn(Frame::SelfSimilar, 1.0, grid.clone(), |y| 0.25 * (-y * y).exp()).unwrap();
    assert!(matches!(it.step(&mut st, 10.0), Err(Error::Config(_))));
    assert!(matches!(it.step(&mut st, -1.0), Err(Error::Config(_))));
}

#[test]
fn non_finite_field_is_state_corruption() {
    let grid = Arc::new(Grid::uniform(32, 4.0).unwrap());
    let st = RadialState {
        frame: Frame::SelfSimilar,
        time: 1.0,
        grid: grid.clone(),
        values: (0..33).map(|i| if i == 7 { f64::NAN } else { 0.0 }).collect(),
    };
    let scheme = Scheme::new(grid, Dim::Four, Frame::SelfSimilar, Boundary::Neumann).unwrap();
    assert!(matches!(scheme.rhs(&st), Err(Error::StateCorruption { node: 7, .. })));
}

/// `rhs(Psi) - d_s Psi` on the grid against the pointwise `E_hat`.
fn ehat_discrepancy(dim: Dim, s: f64, n: usize) -> f64 {
    // a C^3 cutoff keeps the centered second difference second order at the cutoff edges
    let cutoff = CutoffSpec {
        k: 1.0,
        smoothness: Smoothness::C3,
    };
    let profile = Profile::with(ProfileParams::new(dim).unwrap(), cutoff).unwrap();
    let y_max = 20.0 * s.powf(1.0 / (2.0 * dim.ell_f64()));
    let grid = Arc::new(Grid::uniform(n, y_max).unwrap());
    let st = RadialState::from_fn(Frame::SelfSimilar, s, grid.clone(), |y| profile.psi(y, s).unwrap()).unwrap();
    let scheme = Scheme::new(grid.clone(), dim, Frame::SelfSimilar, Boundary::Profile).unwrap();
    let r = scheme.rhs(&st).unwrap();
    let mut worst = 0.0f64;
    for (i, &y) in grid.nodes().iter().enumerate().take(n - 1) {
        let ps = profile.psi_jet(y, s).unwrap().vs;
        let e = profile.ehat(y, s).unwrap();
        worst = worst.max((r[i] - ps - e).abs());
    }
    worst
}

#[test]
fn rhs_of_ansatz_reproduces_ehat_with_second_order_in_space() {
    for dim in Dim::all() {
        let coarse = ehat_discrepancy(dim, 100.0, 1000);
        let fine = ehat_discrepancy(dim, 100.0, 2000);
        assert!(fine < 1e-5, "{dim:?}: {fine:e}");
        let ratio = coarse / fine;
        assert!(ratio > 3.0 && ratio < 5.0, "{dim:?}: ratio {ratio}");
    }
}

#[test]
fn self_similar_and_physical_rhs_agree_under_frame_change() {
    // d_t v_p = e^{2s} (v + y v_y / 2 + d_s v)
    let s = 0.7;
    let grid = Arc::new(Grid::uniform(400, 10.0).unwrap());
    let st = RadialState::from_fn(Frame::SelfSimilar, s, grid.clone(), |y| 0.25 + 0.05 * (-y * y / 4.0).exp()).unwrap();
    let ss = Scheme::new(grid.clone(), Dim::Four, Frame::SelfSimilar, Boundary::Neumann).unwrap();
    let r_ss = ss.rhs(&st).unwrap();
    let phys = to_physical(&st, 1.0).unwrap();
    let ps = Scheme::new(phys.grid.clone(), Dim::Four, Frame::Physical, Boundary::Neumann).unwrap();
    let r_ph = ps.rhs(&phys).unwrap();
    let vy = grid.derivative(&st.values);
    let e2s = (2.0 * s).exp();
    for i in 0..grid.len() - 1 {
        let y = grid.nodes()[i];
        let pred = e2s * (st.values[i] + 0.5 * y * vy[i] + r_ss[i]);
        assert!((pred - r_ph[i]).abs() < 1e-4 * e2s, "node {i}: {pred} vs {}", r_ph[i]);
    }
}

#[test]
fn physical_evolution_maps_onto_self_similar_evolution() {
    let dim = Dim::Four;
    let (s0, s1) = (0.0, 0.5);
    let grid = Arc::new(Grid::uniform(600, 12.0).unwrap());
    let init = |y: f64| 0.25 + 0.01 * (-y * y).exp();
    let mut ss = RadialState::from_fn(Frame::SelfSimilar, s0, grid.clone(), init).unwrap();
    integrator(&grid, dim, Frame::SelfSimilar, Boundary::Neumann)
        .advance_to(&mut ss, s1, 1e-3, 0.4)
        .unwrap();

    let mut ph = to_physical(&RadialState::from_fn(Frame::SelfSimilar, s0, grid.clone(), init).unwrap(), 1.0).unwrap();
    let pgrid = ph.grid.clone();
    integrator(&pgrid, dim, Frame::Physical, Boundary::Neumann)
        .advance_to(&mut ph, 1.0 - (-s1 as f64).exp(), 1e-3 * (-s1 as f64).exp(), 0.4)
        .unwrap();
    let back = to_selfsimilar(&ph, 1.0).unwrap();
    assert!((back.time - s1).abs() < 1e-12);
    for (i, &y) in grid.nodes().iter().enumerate().filter(|(_, y)| **y < 5.0) {
        let v = back.grid.interpolate(&back.values, y);
        assert!((v - ss.values[i]).abs() < 2e-5, "y {y}: {v} vs {}", ss.values[i]);
    }
}

#[test]
fn transforms_match_known_pairs() {
    for dim in Dim::all() {
        let d = dim.d_f64();
        let profile = Profile::new(dim).unwrap();
        let grid = Arc::new(Grid::uniform(4000, 40.0).unwrap());
        let st = RadialState::from_fn(Frame::SelfSimilar, 10.0, grid.clone(), |_| 1.0 / d).unwrap();
        let w = transform::transform(&st, d, Representation::W);
        assert!(w.values.iter().all(|x| (x - 1.0).abs() < 1e-12));

        // v = varphi_2n gives w = phi_2n = H_n(2 alpha y^2)
        for n in 0..4 {
            let vp = profile.varphi(n);
            let v: Vec<f64> = grid.nodes().iter().map(|&y| vp.eval(y)).collect();
            let w = w_from_v(&grid, &v, d);
            let h = ks_blowup::eigenbasis::kummer_eigenpoly(dim, n);
            for (i, &y) in grid.nodes().iter().enumerate().step_by(97).filter(|(_, y)| **y < 6.0) {
                let exact = h.eval_f64(2.0 * dim.alpha_f64() * y * y);
                assert!((w[i] - exact).abs() < 1e-4 * exact.abs().max(1.0), "{dim:?} n={n} y={y}");
            }
        }

        // v = Q(xi) gives w = F(xi)
        let p = &profile.params;
        let v: Vec<f64> = grid.nodes().iter().map(|&y| p.q_of_xi(y).unwrap()).collect();
        let w = w_from_v(&grid, &v, d);
        for (i, &y) in grid.nodes().iter().enumerate().take(3999).step_by(50) {
            assert!((w[i] - p.f_of_xi(y).unwrap()).abs() < 1e-5, "{dim:?} xi={y}");
        }

        // round trip v -> w -> v: trapezoid error is O(h^2 / y^2) relative
        let back = v_from_w(&grid, &w, d);
        let h = grid.h(0);
        for ((a, b), y) in v.iter().zip(&back).zip(grid.nodes()).skip(1) {
            assert!((a - b).abs() < 2.0 * h * h * (1.0 + 1.0 / (y * y)), "{dim:?} y={y}: {a} {b}");
        }
    }
}

#[test]
fn u_representation_rescales_to_physical_variables() {
    let grid = Arc::new(Grid::uniform(100, 10.0).unwrap());
    let s = 2.0;
    let st = RadialState::from_fn(Frame::SelfSimilar, s, grid, |_| 0.25).unwrap();
    let u = transform::transform(&st, 4.0, Representation::U);
    assert!((u.nodes[100] - 10.0 * (-1.0f64).exp()).abs() < 1e-12);
    assert!(u.values.iter().all(|x| (x - s.exp()).abs() < 1e-12));
}

#[test]
fn initial_data_without_perturbation_is_the_ansatz() {
    let cfg = SimConfig {
        d: Dim::Four,
        s0: 50.0,
        horizon: 5.0,
        dy: 0.1,
        ..SimConfig::default()
    };
    let st = make_initial_data(&cfg).unwrap();
    let profile = Profile::new(Dim::Four).unwrap();
    for (y, v) in st.grid.nodes().iter().zip(&st.values) {
        assert_eq!(*v, profile.psi(*y, 50.0).unwrap());
    }
}

#[test]
fn initial_data_rejects_short_grid() {
    let cfg = SimConfig {
        y_max: Some(3.0),
        diagnostics: false,
        dy: 0.05,
        ..SimConfig::default()
    };
    assert!(matches!(make_initial_data(&cfg), Err(Error::Config(_))));
}

#[test]
fn blowup_fit_on_exact_ode_data() {
    let u0 = 2.5;
    let t: Vec<f64> = (0..40).map(|i| 0.009 * i as f64).collect();
    let u: Vec<f64> = t.iter().map(|t| u0 / (1.0 - u0 * t)).collect();
    let e = estimate_blowup_time(&t, &u, 30).unwrap();
    assert!((e.t_blow - 1.0 / u0).abs() < 1e-8);

    // shrinking windows converge
    let noisy: Vec<f64> = t.iter().map(|t| 1.0 / ((1.0 - t) + 0.05 * (1.0 - t).powi(2))).collect();
    let ests: Vec<f64> = [32, 16, 8, 4]
        .iter()
        .map(|&w| estimate_blowup_time(&t, &noisy, w).unwrap().t_blow)
        .collect();
    for w in ests.windows(3) {
        assert!((w[2] - w[1]).abs() <= (w[1] - w[0]).abs() + 1e-12, "{ests:?}");
    }
}

#[test]
fn stepping_is_deterministic() {
    let run = || {
        let grid = Arc::new(Grid::uniform(200, 20.0).unwrap());
        let mut it = integrator(&grid, Dim::Three, Frame::SelfSimilar, Boundary::Profile);
        let p = Profile::new(Dim::Three).unwrap();
        let mut st = RadialState::from_fn(Frame::SelfSimilar, 20.0, grid, |y| p.psi(y, 20.0).unwrap()).unwrap();
        it.advance_to(&mut st, 20.5, 1e-2, 0.4).unwrap();
        st.values
    };
    let (a, b) = (run(), run());
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positive_density_gives_increasing_mass(amp in 0.0f64..2.0, width in 0.5f64..4.0) {
        let grid = Arc::new(Grid::uniform(200, 10.0).unwrap());
        let w: Vec<f64> = grid.nodes().iter().map(|y| amp * (-y * y / width).exp() + 1e-3).collect();
        let v = v_from_w(&grid, &w, 4.0);
        let m = transform::m_from_v(&grid, &v, 4.0);
        prop_assert!(m.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn origin_rhs_is_finite_for_smooth_fields(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let grid = Arc::new(Grid::uniform(64, 6.0).unwrap());
        let st = RadialState::from_fn(Frame::SelfSimilar, 1.0, grid.clone(), |y| a + b * (-y * y).exp()).unwrap();
        let scheme = Scheme::new(grid, Dim::Four, Frame::SelfSimilar, Boundary::Neumann).unwrap();
        prop_assert!(scheme.rhs(&st).unwrap()[0].is_finite());
    }
}
