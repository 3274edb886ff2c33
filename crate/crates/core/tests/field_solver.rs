mod common;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylus_core::field_solver::*;
use stylus_core::model::*;

use common::*;

fn coaxial(a_um: f64, b_um: f64, len_um: f64) -> Vec<Electrode> {
    let t = 5.0;
    vec![
        Electrode {
            role: Role::Rf,
            shape: Shape::Tube { inner_radius_um: 0.0, outer_radius_um: a_um, z_bottom_um: -len_um / 2.0, z_top_um: len_um / 2.0 },
        },
        Electrode {
            role: Role::CenterGround,
            shape: Shape::Tube { inner_radius_um: b_um, outer_radius_um: b_um + t, z_bottom_um: -len_um / 2.0, z_top_um: len_um / 2.0 },
        },
    ]
}

fn coax_opts(level: u32) -> SolverOptions {
    let mut o = SolverOptions::level(level);
    o.mesh = o.mesh.with_focus([200.0, 0.0]);
    o
}

fn coaxial_error(level: u32) -> f64 {
    let (a, b) = (100.0, 300.0);
    let opts = coax_opts(level);
    let basis = BasisSet::solve_electrodes(&coaxial(a, b, 6000.0), &opts).unwrap();
    let v = Voltages::single(Role::Rf, 1.0);
    [150.0, 200.0, 250.0]
        .iter()
        .map(|&r| {
            let s = eval(&basis, &v, &Vector3::new(r * 1e-6, 0.0, 0.0)).unwrap();
            let exact = (b / r).ln() / (b / a).ln();
            (s.potential - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

#[test]
fn coaxial_capacitor_matches_log_profile() {
    assert!(coaxial_error(2) < 0.01, "error {}", coaxial_error(2));
}

#[test]
fn coaxial_error_halves_with_refinement() {
    let (a, b) = (100.0, 300.0);
    let probes: Vec<Vector3<f64>> = [150.0, 200.0, 250.0].iter().map(|r| Vector3::new(r * 1e-6, 0.0, 0.0)).collect();
    let rows = convergence_study(&coaxial(a, b, 6000.0), &coax_opts(2), &[2, 3, 4], &probes).unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| r.bc_rms_error).collect();
    for w in errs.windows(2) {
        assert!(w[1] <= 0.5 * w[0], "boundary errors {errs:?}");
    }
    assert!(rows[1].max_change.unwrap() > rows[2].max_change.unwrap());
}

#[test]
fn convergence_needs_two_levels() {
    let g = preset_geometry(1).unwrap();
    assert!(convergence_study_geometry(&g, &SolverOptions::default(), &[2], &[]).is_err());
}

#[test]
fn ring_far_field_decays_as_inverse_distance() {
    let ring = vec![Electrode {
        role: Role::Rf,
        shape: Shape::Tube { inner_radius_um: 300.0, outer_radius_um: 350.0, z_bottom_um: 0.0, z_top_um: 50.0 },
    }];
    let basis = BasisSet::solve_electrodes(&ring, &SolverOptions::level(2)).unwrap();
    let v = Voltages::single(Role::Rf, 1.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..=10)
        .map(|k| {
            let r = 2e-2 * 10f64.powf(k as f64 / 10.0);
            let phi = eval(&basis, &v, &Vector3::new(0.6 * r, 0.0, 0.8 * r)).unwrap().potential;
            (r.ln(), phi.ln())
        })
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn zero_voltages_give_zero_field() {
    let (_, f) = preset_field(2, false);
    let s = eval(f.as_ref(), &Voltages::new(), &Vector3::new(1e-4, 2e-4, 1.6e-3)).unwrap();
    assert_eq!(s.potential, 0.0);
    assert_eq!(s.field, Vector3::zeros());
    assert_eq!(s.hessian, nalgebra::Matrix3::zeros());
}

#[test]
fn boundary_fidelity_and_laplace_residual() {
    for id in 1..=3 {
        let (_, f) = preset_field(id, false);
        let d = f.basis().diagnostics();
        assert!(d.bc_fraction_within_tol >= 0.99, "preset {id}: {d:?}");
        assert!(d.laplace_residual_max < 1e-3, "preset {id}: {d:?}");
        assert!(d.laplace_probes > 10);
    }
}

#[test]
fn superposition_is_linear() {
    let (_, f) = preset_field(3, true);
    let p = Vector3::new(5e-5, -3e-5, 1.9e-3);
    let v = Voltages::new().with(Role::Rf, 1.3).with(Role::CompA, 0.4).with(Role::CenterGround, -0.2);
    let w = Voltages::new().with(Role::Rf, -0.7).with(Role::CompC, 0.9).with(Role::OuterGroundPlane, 0.3);
    let a = eval(f.as_ref(), &v, &p).unwrap();
    let b = eval(f.as_ref(), &w, &p).unwrap();
    let c = eval(f.as_ref(), &v.plus(&w), &p).unwrap();
    let close = |x: f64, y: f64, scale: f64| (x - y).abs() <= 1e-12 * scale;
    assert!(close(a.potential + b.potential, c.potential, c.potential.abs().max(1.0)));
    let fs = c.field.norm();
    for i in 0..3 {
        assert!(close(a.field[i] + b.field[i], c.field[i], fs));
    }
}

#[test]
fn common_offset_shifts_potential_only() {
    let (g, f) = preset_field(1, true);
    let p = Vector3::new(2e-5, 1e-5, 1.3e-3);
    let v = Voltages::new().with(Role::Rf, 1.0).with(Role::CompB, 0.25);
    let shifted: Voltages = g.electrodes.iter().map(|e| (e.role, v.get(e.role) + 1.0)).collect();
    let a = eval(f.as_ref(), &v, &p).unwrap();
    let b = eval(f.as_ref(), &shifted, &p).unwrap();
    assert!((b.potential - a.potential - 1.0).abs() < 1e-12);
    assert!((b.field - a.field).norm() <= 1e-12 * a.field.norm());
}

#[test]
fn field_matches_potential_differences() {
    let (_, f) = preset_field(2, true);
    let v = Voltages::new().with(Role::Rf, 1.0).with(Role::CompD, 0.5);
    let p = Vector3::new(6e-5, 4e-5, 1.55e-3);
    let s = eval(f.as_ref(), &v, &p).unwrap();
    let h = 1e-7;
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = h;
        let fd = -(f.field_many(&[&v], &(p + e))[0].0 - f.field_many(&[&v], &(p - e))[0].0) / (2.0 * h);
        assert!((fd - s.field[i]).abs() <= 1e-4 * s.field.norm(), "component {i}: {fd} vs {}", s.field[i]);
    }
}

#[test]
fn axis_field_has_no_transverse_part() {
    let (_, f) = preset_field(3, false);
    let v = Voltages::new().with(Role::Rf, 1.0).with(Role::CenterGround, 0.3);
    for z in [1.7e-3, 1.9e-3, 2.4e-3] {
        let s = eval(f.as_ref(), &v, &Vector3::new(0.0, 0.0, z)).unwrap();
        assert!(s.field.x.hypot(s.field.y) <= 1e-3 * s.field.norm().max(1.0));
    }
}

#[test]
fn earnshaw_trace_vanishes() {
    let (_, f) = preset_field(2, false);
    let v = Voltages::single(Role::Rf, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 100 {
        let p = Vector3::new(rng.random_range(-4e-4..4e-4), rng.random_range(-4e-4..4e-4), rng.random_range(1.42e-3..2.2e-3));
        if f.contains(&p) {
            continue;
        }
        let s = eval(f.as_ref(), &v, &p).unwrap();
        assert!(s.hessian.trace().abs() <= 1e-3 * s.hessian.norm(), "at {p:?}: {}", s.hessian.trace() / s.hessian.norm());
        assert!((s.hessian - s.hessian.transpose()).norm() == 0.0);
        checked += 1;
    }
}

#[test]
fn axisymmetric_potential_ignores_azimuth() {
    let (_, f) = preset_field(1, false);
    let v = Voltages::new().with(Role::Rf, 1.0).with(Role::CenterGround, 0.2);
    let r = 1.5e-4;
    let base = eval(f.as_ref(), &v, &Vector3::new(r, 0.0, 1.3e-3)).unwrap().potential;
    for k in 1..8 {
        let t = k as f64 * 0.7;
        let p = eval(f.as_ref(), &v, &Vector3::new(r * t.cos(), r * t.sin(), 1.3e-3)).unwrap().potential;
        assert!((p - base).abs() <= 1e-3 * base.abs());
    }
}

#[test]
fn conductor_interior_is_rejected() {
    let (_, f) = preset_field(1, false);
    let inside = Vector3::new(3.0e-4, 0.0, 1.0e-3);
    assert!(matches!(eval(f.as_ref(), &Voltages::new(), &inside), Err(stylus_core::TrapError::InsideConductor(_))));
}

#[test]
fn solve_is_deterministic() {
    let g = preset_geometry(1).unwrap();
    let a = solve_basis(&g, &SolverOptions::level(1)).unwrap();
    let b = solve_basis(&g, &SolverOptions::level(1)).unwrap();
    assert_eq!(a.density(Role::Rf), b.density(Role::Rf));
}

#[test]
fn potential_csv_has_header_and_rows() {
    let (_, f) = preset_field(1, false);
    let pts = [Vector3::new(0.0, 0.0, 1.3e-3), Vector3::new(3.0e-4, 0.0, 1.0e-3)];
    let csv = potential_grid_csv(f.as_ref(), &Voltages::single(Role::Rf, 1.0), &pts);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x_um,y_um,z_um,phi_v,ex_v_per_m,ey_v_per_m,ez_v_per_m");
    assert_eq!(lines.len(), 2);
}
