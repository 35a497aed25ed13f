use sigma_vortex::asymptotics::*;
use sigma_vortex::config::{validate_config, BetaParam, RawConfig, VortexConfig};
use sigma_vortex::grid::{radial_grid_for, Mesh, RadialGrid};
use sigma_vortex::solver::*;

fn double_pole() -> VortexConfig<f64> {
    validate_config(&RawConfig::coincident(2, 0.5)).unwrap()
}

fn anchor(r_max: f64, nodes: usize) -> Anchor<f64, RadialGrid<f64>> {
    let c = double_pole();
    Anchor::new(&c, radial_grid_for(&c, r_max, nodes).unwrap(), &SolveOptions::default()).unwrap()
}

#[test]
fn constant_field_has_its_value_as_far_limit() {
    let radii: Vec<f64> = (0..200).map(|k| 50.0 * k as f64).collect();
    let w = vec![1.0; radii.len()];
    let v = vec![3.0; radii.len()];
    let ff = extract_bbeta(&radii, &w, &v, [120.0, 2000.0], 1e4, 10.0, 3.0).unwrap();
    assert_eq!(ff.value, 3.0);
    assert_eq!(ff.uncertainty, 0.0);
}

#[test]
fn annulus_outside_the_grid_is_rejected() {
    let radii = [0.0, 1.0, 2.0];
    let v = [0.0; 3];
    assert!(extract_bbeta(&radii, &radii, &v, [100.0, 6000.0], 1e4, 10.0, 3.0).is_err());
    assert!(extract_bbeta(&radii, &radii, &v, [10.0, 200.0], 1e4, 10.0, 3.0).is_err());
}

#[test]
fn far_limit_is_annulus_independent() {
    let c = double_pole();
    let s = solve_radial(&c, BetaParam::new(3.0, &c).unwrap(), 1e4, 2001, &SolveOptions::default()).unwrap();
    let radii = s.mesh.radii();
    let (w, v) = (s.mesh.volumes(), &s.result.v);
    let r0 = c.r0();
    let near = extract_bbeta(&radii, w, v, [1e2, 2e2], 1e4, r0, 3.0).unwrap();
    let far = extract_bbeta(&radii, w, v, [1e3, 2e3], 1e4, r0, 3.0).unwrap();
    let gap = (near.extrapolated - far.extrapolated).abs();
    assert!(gap <= near.uncertainty + far.uncertainty, "{near:?} {far:?}");
    // the annulus values approach the closure's limit
    assert!((far.extrapolated - s.result.b_beta).abs() <= far.uncertainty + 1e-6);
}

#[test]
fn synthetic_decay_fits() {
    let radii: Vec<f64> = (0..=100).map(|k| 100.0 * 10f64.powf(k as f64 / 100.0)).collect();
    let fast: Vec<f64> = radii.iter().map(|r| 2.0 + 1.0 / r).collect();
    let fit = fit_decay(&radii, &fast, 2.0, 3.0, [1e2, 1e3], 1e-12).unwrap();
    assert!((fit.slope + 1.0).abs() < 0.02);
    assert!(fit.pass);
    assert!((fit.threshold + 0.45).abs() < 1e-15);
    for beta in [2.2, 2.6, 3.0] {
        assert!(fit_decay(&radii, &fast, 2.0, beta, [1e2, 1e3], 1e-12).unwrap().pass);
    }
    let slow: Vec<f64> = radii.iter().map(|r| 2.0 + r.powf(-0.3)).collect();
    assert!(!fit_decay(&radii, &slow, 2.0, 3.0, [1e2, 1e3], 1e-12).unwrap().pass);
    let tiny: Vec<f64> = radii.iter().map(|r| 2.0 + 1e-12 / r).collect();
    assert!(matches!(
        fit_decay(&radii, &tiny, 2.0, 3.0, [1e2, 1e3], 1e-8),
        Err(sigma_vortex::error::AnalysisError::BelowNoiseFloor { .. })
    ));
}

#[test]
fn solution_decay_beats_the_bound_at_beta_three() {
    let c = double_pole();
    let s = solve_radial(&c, BetaParam::new(3.0, &c).unwrap(), 1e4, 2001, &SolveOptions::default()).unwrap();
    let fit = fit_decay(&s.mesh.radii(), &s.result.v, s.result.b_beta, 3.0, [1e2, 1e3], 1e-8).unwrap();
    assert!(fit.pass, "slope {}", fit.slope);
    assert!(fit.slope <= -0.45);
}

#[test]
fn shift_constants_are_positive_and_flag_divergence() {
    let a = anchor(1e4, 2001);
    let k = a.constants;
    assert!(k.d2 > 0.0 && k.d2.is_finite());
    assert!(k.d4 > 0.0 && k.d4.is_finite());
    // both integrate e^{-v1}, which is not integrable at a pole
    assert!(k.d1.is_infinite() && k.d3.is_infinite());
    assert!(k.pole_integral.is_infinite());
    assert!(k.d2 < std::f64::consts::TAU * 4.0);
    assert_eq!(k.b0, a.solution.b_beta);
}

#[test]
fn pole_integral_diverges_like_inverse_square_cutoff() {
    // inside B_{ϱ/2}, e^{-v1} = (ϱ/r)^4, so the shell δ < r < 2δ carries
    // 3π ϱ^4 / (4 δ²): the integral over B_{r0} minus B_δ grows without bound
    let a = anchor(1e4, 4001);
    let radii = a.mesh.radii();
    let v1 = &a.data.fields().v1;
    let w = a.mesh.volumes();
    let r0 = a.config.r0();
    let cut = |delta: f64| -> f64 {
        (0..radii.len()).filter(|&i| radii[i] >= delta && radii[i] < r0).map(|i| w[i] * (-v1[i]).exp()).sum()
    };
    for delta in [0.1, 0.08, 0.06] {
        let shell = cut(delta) - cut(2.0 * delta);
        let exact = 0.75 * std::f64::consts::PI * 0.5f64.powi(4) / (delta * delta);
        assert!((shell - exact).abs() < 0.1 * exact, "delta {delta}: {shell} vs {exact}");
    }
}

#[test]
fn shift_constants_survive_doubling_rmax() {
    let (a, b) = (anchor(5e3, 2001), anchor(1e4, 2101));
    for (x, y) in [(a.constants.d2, b.constants.d2), (a.constants.d4, b.constants.d4)] {
        assert!((x - y).abs() <= 1e-2 * y, "{x} vs {y}");
    }
}

#[test]
fn shifts_are_nonpositive_and_follow_the_formulas() {
    let a = anchor(1e4, 2001);
    let k = a.constants;
    for beta in [2.001, 2.01, 2.5, 3.0, 3.5, 3.99, 3.999] {
        let (r_sub, sub, r_sup, sup) = tau_formulas(beta, 2, &k);
        assert!(sub <= 0.0 && sup <= 0.0);
        if beta >= 3.0 {
            assert_eq!((r_sub, r_sup), (TauRule::Tau0, TauRule::Tau1));
            let expected = ((4.0 - beta).ln() + (std::f64::consts::TAU / k.d2).ln()).min(0.0);
            assert_eq!(sup, expected);
        } else {
            assert_eq!((r_sub, r_sup), (TauRule::Tau2, TauRule::Tau3));
        }
    }
    // near the upper end the super-solution shift follows ln ε
    let (_, _, _, t2) = tau_formulas(3.99, 2, &k);
    let (_, _, _, t3) = tau_formulas(3.999, 2, &k);
    assert!((t2 - t3 - 10f64.ln()).abs() < 1e-12);
}

#[test]
fn sub_shifts_at_the_ends() {
    let a = anchor(1e4, 2001);
    let c = &a.config;
    let tau = |beta: f64| {
        let d = a.data_at(BetaParam::new(beta, c).unwrap()).unwrap();
        a.construct(&d).unwrap().sub_choice.tau
    };
    let upper: Vec<f64> = [3.9, 3.99, 3.999].iter().map(|&b| tau(b)).collect();
    let lower: Vec<f64> = [2.1, 2.01, 2.001].iter().map(|&b| tau(b)).collect();
    assert!(upper.windows(2).all(|w| w[1] < w[0] - 1.0), "{upper:?}");
    // at the lower end the mass tends to 4π, so the mass-balance shift stays
    // bounded; the formula value itself is -inf because d3 is
    assert!(lower.windows(2).all(|w| w[1] < w[0] && w[1] > w[0] - 1.0), "{lower:?}");
    for beta in [2.1, 2.01, 3.9, 3.99] {
        assert_eq!(tau_formulas(beta, 2, &a.constants).1, f64::NEG_INFINITY);
    }
}

#[test]
fn constructions_bracket_the_solution() {
    let a = anchor(1e4, 2001);
    for beta in [2.01, 2.5, 3.0, 3.5, 3.99] {
        let d = a.data_at(BetaParam::new(beta, &a.config).unwrap()).unwrap();
        let s = a.construct(&d).unwrap();
        let p = Problem::new(&a.mesh, &d);
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert!(s.brackets(&r.v, 1e-9), "beta {beta}");
        assert!(s.sub.t <= 1e-10 && s.sup.t >= -1e-10, "beta {beta}: t {} {}", s.sub.t, s.sup.t);
        // the barriers are genuine discrete sub/super-solutions
        let (mut lo, mut hi) = (vec![0.0; p.len()], vec![0.0; p.len()]);
        p.residual(&s.sub.field, &mut lo);
        p.residual(&s.sup.field, &mut hi);
        let scale = p.scale(&s.sup.field);
        assert!(lo.iter().zip(&scale).all(|(n, s)| *n <= 1e-9 * s));
        assert!(hi.iter().zip(&scale).all(|(n, s)| *n >= -1e-9 * s));
    }
}

#[test]
fn constructed_barriers_squeeze_to_the_solution() {
    let a = anchor(1e3, 401);
    let d = a.data_at(BetaParam::new(3.5, &a.config).unwrap()).unwrap();
    let s = a.construct(&d).unwrap();
    let p = Problem::new(&a.mesh, &d);
    let bracket = Bracket { lower: s.sub.clone(), upper: s.sup.clone() };
    let opts = SolveOptions { method: Method::Monotone, tol: 1e-9, ..SolveOptions::default() };
    let via = solve_with_bracket(&p, &bracket, &opts).unwrap();
    let direct = solve(&p, &SolveOptions::default()).unwrap();
    let gap = via.v.iter().zip(&direct.v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap}");
}

fn fake_record(endpoint: Endpoint, offsets: &[f64]) -> SweepRecord {
    let points = DEFAULT_EPSILONS
        .iter()
        .zip(offsets)
        .map(|(&e, &o)| {
            let b = e.ln() + o;
            SweepPoint {
                beta: endpoint.beta(2, e),
                epsilon: e,
                b_beta: Some(b),
                b_over_logeps: Some(b / e.ln()),
                decay_slope: None,
                decay_pass: None,
                mass_defect: None,
                iterations: None,
                runtime_s: 0.0,
                grid: String::new(),
                error: None,
            }
        })
        .collect();
    SweepRecord { endpoint, points }
}

#[test]
fn verdict_accepts_a_bounded_offset() {
    let v = fake_record(Endpoint::Upper, &[0.5, 0.7, 0.8, 0.85]).verdict();
    assert!(v.band_pass && v.ratio_trend_pass && v.pass && v.b_decreasing);
}

#[test]
fn verdict_rejects_doubled_logarithm() {
    let offsets: Vec<f64> = DEFAULT_EPSILONS.iter().map(|e| e.ln() + 1.0).collect();
    let v = fake_record(Endpoint::Lower, &offsets).verdict();
    assert!(!v.band_pass && !v.ratio_trend_pass && !v.pass);
}

#[test]
fn verdict_marks_failed_points() {
    let mut rec = fake_record(Endpoint::Upper, &[0.5, 0.7, 0.8, 0.85]);
    rec.points[1].b_beta = None;
    rec.points[1].error = Some("boom".into());
    let v = rec.verdict();
    assert_eq!(v.failures, 1);
    assert!(!v.pass);
}

#[test]
fn sweep_is_sorted_and_deterministic() {
    let c = double_pole();
    let opts = SweepOptions::default();
    let a = sweep_endpoints(&c, &[1e-1, 1e-2], Endpoint::Upper, &opts).unwrap();
    let b = sweep_endpoints(&c, &[1e-1, 1e-2], Endpoint::Upper, &opts).unwrap();
    assert!(a.points.windows(2).all(|w| w[0].beta < w[1].beta));
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!(p.b_beta.map(f64::to_bits), q.b_beta.map(f64::to_bits));
    }
    let low = sweep_endpoints(&c, &[1e-1, 1e-2], Endpoint::Lower, &opts).unwrap();
    assert!(low.points.windows(2).all(|w| w[0].beta < w[1].beta));
}

#[test]
fn sweep_rejects_bad_epsilon_lists() {
    let c = double_pole();
    let o = SweepOptions::default();
    assert!(sweep_endpoints(&c, &[1e-2, 1e-1], Endpoint::Upper, &o).is_err());
    assert!(sweep_endpoints(&c, &[0.0], Endpoint::Upper, &o).is_err());
    assert!(sweep_endpoints(&c, &[], Endpoint::Upper, &o).is_err());
}

#[test]
fn sweep_keeps_failed_points() {
    let c = double_pole();
    let o = SweepOptions { nodes: 2, ..SweepOptions::default() };
    let rec = sweep_endpoints(&c, &[1e-1], Endpoint::Upper, &o).unwrap();
    assert!(rec.points[0].error.is_some() && rec.points[0].b_beta.is_none());
}

#[test]
fn upper_endpoint_far_limit_is_negative_and_decreasing() {
    let c = double_pole();
    let rec = sweep_endpoints(&c, &[1e-1, 1e-3, 1e-4], Endpoint::Upper, &SweepOptions::default()).unwrap();
    let pts = rec.by_epsilon();
    let b: Vec<f64> = pts.iter().map(|p| p.b_beta.unwrap()).collect();
    assert!(b[1] < 0.0);
    assert!(b.windows(2).all(|w| w[1] < w[0]));
    let low = sweep_endpoints(&c, &[1e-1, 1e-4], Endpoint::Lower, &SweepOptions::default()).unwrap();
    let lb: Vec<f64> = low.by_epsilon().iter().map(|p| p.b_beta.unwrap()).collect();
    assert!(lb[1] < lb[0]);
}
