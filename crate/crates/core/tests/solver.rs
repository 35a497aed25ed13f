use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigma_vortex::config::{validate_config, BetaParam, RawConfig, VortexConfig};
use sigma_vortex::grid::{radial_grid_for, DiskOptions, Mesh, RadialGrid};
use sigma_vortex::singular::{assemble, SingularData};
use sigma_vortex::solver::*;

fn double_pole() -> VortexConfig<f64> {
    validate_config(&RawConfig::coincident(2, 0.5)).unwrap()
}

fn setup(beta: f64, r_max: f64, nodes: usize) -> (RadialGrid<f64>, SingularData<f64>) {
    let c = double_pole();
    let g = radial_grid_for(&c, r_max, nodes).unwrap();
    let d = assemble(&c, BetaParam::new(beta, &c).unwrap(), &g).unwrap();
    (g, d)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn radial_mass_identity() {
    let c = double_pole();
    for beta in [2.5, 3.0, 3.5] {
        let s = solve_radial(&c, BetaParam::new(beta, &c).unwrap(), 1e4, 2001, &SolveOptions::default()).unwrap();
        let r = &s.result;
        assert!(r.converged);
        assert!(r.residual < 1e-8, "{}", r.residual);
        assert!(r.relative_mass_defect() < 1e-8, "beta={beta}: {}", r.relative_mass_defect());
        let mu = 2.0 * std::f64::consts::PI * (4.0 - beta);
        assert!((r.interior_mass + r.exterior_mass - mu).abs() < 1e-3 * mu);
        // the flux recomputed from u = u0 + v carries the same mass
        assert!((r.flux - r.interior_mass).abs() < 1e-10 * mu);
        assert!(r.exterior_mass > 0.0);
    }
}

#[test]
fn one_sided_monotone_limits_agree() {
    let (g, d) = setup(3.0, 1e4, 1001);
    let p = Problem::new(&g, &d);
    let b = constant_bracket(&p).unwrap();
    let up = monotone_iterate(&p, &b.upper.field, Direction::FromAbove, LambdaPolicy::Adaptive, 1e-11, 200).unwrap();
    let lo = monotone_iterate(&p, &b.lower.field, Direction::FromBelow, LambdaPolicy::Adaptive, 1e-11, 200).unwrap();
    assert!(up.converged && lo.converged);
    assert!(sup_diff(&up.field, &lo.field) < 1e-6);
    // iterates move monotonically: each recorded update came with no violation,
    // and the limits stay inside the starting bracket
    assert!(b.contains(&up.field, 1e-12) && b.contains(&lo.field, 1e-12));
}

#[test]
fn exact_solution_is_a_fixed_point() {
    let (g, d) = setup(3.0, 1e3, 501);
    let p = Problem::new(&g, &d);
    let sol = solve(&p, &SolveOptions { tol: 1e-12, ..Default::default() }).unwrap();
    for policy in [LambdaPolicy::Adaptive, LambdaPolicy::Fixed(1.0)] {
        let out = monotone_iterate(&p, &sol.v, Direction::FromAbove, policy, 1e-9, 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.log.len(), 1);
    }
}

#[test]
fn fixed_lambda_iterates_decrease_from_a_super_solution() {
    let (g, d) = setup(3.0, 1e3, 301);
    let p = Problem::new(&g, &d);
    let b = constant_bracket(&p).unwrap();
    let out = monotone_iterate(&p, &b.upper.field, Direction::FromAbove, LambdaPolicy::Fixed(1.0), 1e-9, 30).unwrap();
    let updates: Vec<f64> = out.log.iter().map(|l| l.update).collect();
    assert!(updates.iter().all(|u| u.is_finite()));
    assert!(out.field.iter().zip(&b.upper.field).all(|(a, u)| a <= u));
}

#[test]
fn newton_matches_monotone_limit() {
    let (g, d) = setup(3.0, 1e3, 401);
    let p = Problem::new(&g, &d);
    let b = constant_bracket(&p).unwrap();
    let mono = solve_with_bracket(&p, &b, &SolveOptions { method: Method::Monotone, tol: 1e-12, ..Default::default() })
        .unwrap();
    let newton =
        solve_with_bracket(&p, &b, &SolveOptions { method: Method::Newton, tol: 1e-11, ..Default::default() }).unwrap();
    assert!(sup_diff(&mono.v, &newton.v) < 1e-8);
    assert!(newton.iterations.iter().all(|l| l.kind == StepKind::Newton));
}

#[test]
fn newton_converges_quadratically() {
    let (g, d) = setup(3.0, 1e4, 1001);
    let p = Problem::new(&g, &d);
    let b = constant_bracket(&p).unwrap();
    let start = monotone_iterate(&p, &b.upper.field, Direction::FromAbove, LambdaPolicy::Fixed(1.0), 0.0, 3).unwrap();
    let out = newton_solve(&p, &start.field, 1e-13, 30).unwrap();
    let floor = p.roundoff_floor(&out.field);
    let res: Vec<f64> = std::iter::once(p.residual_norm(&start.field))
        .chain(out.log.iter().map(|l| l.residual))
        .filter(|&r| r > 1e3 * floor)
        .collect();
    assert!(res.len() >= 3, "{res:?}");
    let n = res.len();
    let order = (res[n - 1] / res[n - 2]).ln() / (res[n - 2] / res[n - 3]).ln();
    assert!(order >= 1.7, "order {order}: {res:?}");
}

#[test]
fn hybrid_solution_lies_in_its_bracket() {
    let (g, d) = setup(3.5, 1e4, 1001);
    let p = Problem::new(&g, &d);
    let b = constant_bracket(&p).unwrap();
    assert!(bracket::is_barrier(&p, &b.upper.field, Side::Super));
    assert!(bracket::is_barrier(&p, &b.lower.field, Side::Sub));
    let s = solve_with_bracket(&p, &b, &SolveOptions::default()).unwrap();
    assert!(b.contains(&s.v, 1e-10));
}

#[test]
fn comparison_of_ordered_barriers() {
    // strict super above strict sub everywhere, far-field constants ordered
    let (g, d) = setup(2.5, 1e4, 801);
    let p = Problem::new(&g, &d);
    let base = vec![0.0; g.len()];
    let tau = mass_shift(&p, &base);
    let hi = bracket::construct_side(&p, &base, tau + 1.0, Side::Super).unwrap();
    let lo = bracket::construct_side(&p, &base, tau - 1.0, Side::Sub).unwrap();
    assert!(hi.t > 0.0 && lo.t < 0.0);
    assert!(lo.field.iter().zip(&hi.field).all(|(l, h)| *l <= h + 1e-8));
    assert!(p.far_limit(&lo.field) < p.far_limit(&hi.field));
}

#[test]
fn doubling_rmax_moves_b_by_a_truncation_amount() {
    let c = double_pole();
    let beta = BetaParam::new(3.0, &c).unwrap();
    let opts = SolveOptions::default();
    let b1 = solve_radial(&c, beta, 1e3, 1601, &opts).unwrap().result.b_beta;
    let b2 = solve_radial(&c, beta, 2e3, 1701, &opts).unwrap().result.b_beta;
    let b4 = solve_radial(&c, beta, 4e3, 1801, &opts).unwrap().result.b_beta;
    // the exterior branch is exact up to the logistic saturation, so the
    // changes are at the level of discretization error and shrink with R
    assert!((b1 - b2).abs() < 1e-3, "{b1} {b2}");
    assert!((b2 - b4).abs() < 1e-3, "{b2} {b4}");
}

#[test]
fn energy_gradient_is_the_residual() {
    let (g, d) = setup(3.0, 200.0, 401);
    let p = Problem::new(&g, &d);
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..8 {
        let w: Vec<f64> = sol.v.iter().map(|&x| x + rng.gen_range(-1.0..1.0)).collect();
        let dir: Vec<f64> = (0..w.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut n = vec![0.0; w.len()];
        p.residual(&w, &mut n);
        let exact: f64 = n.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let h = 1e-4;
        let shifted = |s: f64| p.energy(&w.iter().zip(&dir).map(|(a, b)| a + s * b).collect::<Vec<_>>());
        let fd = (8.0 * (shifted(h) - shifted(-h)) - (shifted(2.0 * h) - shifted(-2.0 * h))) / (12.0 * h);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
    }
}

#[test]
fn energy_constant_shift_derivative_is_the_mass_defect() {
    let (g, d) = setup(3.0, 200.0, 401);
    let p = Problem::new(&g, &d);
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    let w: Vec<f64> = sol.v.iter().map(|x| x - 0.3).collect();
    let h = 1e-4;
    let at = |c: f64| p.energy(&w.iter().map(|x| x + c).collect::<Vec<_>>());
    let fd = (at(h) - at(-h)) / (2.0 * h);
    let defect = p.mass_defect(&w);
    assert!((fd - defect).abs() < 1e-6 * defect.abs().max(1.0), "{fd} {defect}");
}

#[test]
fn converged_field_is_a_local_energy_minimum() {
    let (g, d) = setup(3.0, 200.0, 401);
    let p = Problem::new(&g, &d);
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    let e0 = p.energy(&sol.v);
    let radii = g.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let center: f64 = rng.gen_range(0.0..20.0);
        let width: f64 = rng.gen_range(0.5..5.0);
        for eps in [1e-2, -1e-2] {
            let w: Vec<f64> =
                sol.v.iter().zip(radii).map(|(v, r)| v + eps * (-((r - center) / width).powi(2)).exp()).collect();
            assert!(p.energy(&w) >= e0);
        }
    }
}

#[test]
fn nonlinearity_bounds_hold() {
    let (g, d) = setup(3.0, 1e3, 301);
    let p = Problem::new(&g, &d);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 1..g.len() {
        let v: f64 = rng.gen_range(-30.0..30.0);
        let f = p.f(i, v);
        let df = p.df(i, v);
        assert!(f > 0.0 && f < 4.0 || f == 0.0 && v + d.log_weight()[i] < -700.0);
        assert!((0.0..=1.0).contains(&df));
        assert!((df - f * (1.0 - f / 4.0)).abs() < 1e-14);
    }
    // pole node: saturated
    assert_eq!(p.f(0, 0.0), 4.0);
    assert_eq!(p.df(0, 0.0), 0.0);
}

#[test]
fn radial_and_disk_agree() {
    let raw = RawConfig { poles: vec![[0.0, 0.0], [0.0, 0.0]], varrho: Some(0.8), ..Default::default() };
    let c: VortexConfig<f64> = validate_config(&raw).unwrap();
    let beta = BetaParam::new(3.0, &c).unwrap();
    let r_max = 44.0;
    let radial = solve_radial(&c, beta, r_max, 2001, &SolveOptions::default()).unwrap();
    let disk =
        solve_disk(&c, beta, DiskOptions::new(r_max, 0.1), &SolveOptions { tol: 1e-8, ..Default::default() }).unwrap();
    assert!(disk.result.converged);
    assert!(disk.result.relative_mass_defect() < 1e-6);
    let db = (radial.result.b_beta - disk.result.b_beta).abs();
    assert!(db <= 5e-3, "radial {} disk {}", radial.result.b_beta, disk.result.b_beta);
    // symmetric configuration: the exterior flux is nearly uniform on the ring
    let p = disk.problem();
    let ext = p.exterior();
    let ring: Vec<f64> = disk.mesh.boundary().iter().map(|&(i, _)| ext.mass(disk.result.v[i])).collect();
    let (lo, hi) = ring.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi - lo < 1e-2 * hi, "{lo} {hi}");
}
