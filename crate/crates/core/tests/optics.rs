use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylus_core::model::{preset_geometry, Role};
use stylus_core::optics::*;

const TABLE_H_UM: [f64; 3] = [168.0, 244.0, 290.0];
const TABLE_FRACTION: [f64; 3] = [0.714, 0.906, 0.956];

/// Open fraction when everything below the cone through the rf top edge is blocked.
fn cone_oracle(id: u32, h_um: f64) -> f64 {
    let g = preset_geometry(id).unwrap();
    let below = g.center_ground_top_um() + h_um - g.rf_top_um();
    let alpha = g.rf_outer_radius_um().unwrap().atan2(below);
    1.0 - 0.5 * (1.0 - alpha.cos())
}

fn raycast(rays: u64, seed: u64) -> SolidAngleMethod {
    SolidAngleMethod::Raycast { rays, seed }
}

#[test]
fn empty_scene_is_open() {
    let s = ObstructionScene::empty([0.0, 0.0, 1e-3]);
    assert_eq!(accessible_solid_angle(&s, SolidAngleMethod::Analytic).unwrap().fraction, 1.0);
    assert_eq!(accessible_solid_angle(&s, raycast(100_000, 3)).unwrap().fraction, 1.0);
}

#[test]
fn preset_fractions_match_table_and_cone_oracle() {
    for id in 1..=3u32 {
        let k = id as usize - 1;
        let g = preset_geometry(id).unwrap();
        let scene = ObstructionScene::table_scene(&g, TABLE_H_UM[k]).unwrap();
        let exact = accessible_solid_angle(&scene, SolidAngleMethod::Analytic).unwrap().fraction;
        let mc = accessible_solid_angle(&scene, raycast(1_000_000, 11)).unwrap();
        assert!((exact - cone_oracle(id, TABLE_H_UM[k])).abs() < 1e-9, "preset {id}: {exact}");
        assert!((exact - TABLE_FRACTION[k]).abs() <= 0.015, "preset {id}: {exact}");
        assert!(mc.std_error <= 0.002);
        assert!((mc.fraction - exact).abs() <= 3.0 * mc.std_error, "preset {id}: {} vs {exact}", mc.fraction);
    }
}

#[test]
fn preset1_blocked_cone() {
    let g = preset_geometry(1).unwrap();
    let scene = ObstructionScene::table_scene(&g, 168.0).unwrap();
    let f = accessible_solid_angle(&scene, SolidAngleMethod::Analytic).unwrap().fraction;
    let alpha = 355f64.atan2(168.0);
    assert!((alpha.to_degrees() - 64.7).abs() < 0.05);
    assert!((1.0 - f - 0.5 * (1.0 - alpha.cos())).abs() < 1e-9);
}

#[test]
fn excluded_roles_add_no_occluders() {
    let g = preset_geometry(2).unwrap();
    let scene = ObstructionScene::table_scene(&g, 244.0).unwrap();
    assert!(scene.occluders.iter().all(|o| !TABLE_EXCLUSIONS.contains(&o.role)));
    let full = ObstructionScene::from_geometry(&g, [0.0, 0.0, g.center_ground_top_um() + 244.0], &[], true).unwrap();
    assert!(full.occluders.iter().any(|o| o.role == Role::CompA));
    let a = accessible_solid_angle(&full, raycast(200_000, 5)).unwrap().fraction;
    let b = accessible_solid_angle(&scene, raycast(200_000, 5)).unwrap().fraction;
    assert!(a <= b);
}

#[test]
fn adding_occluders_never_opens_access() {
    let g = preset_geometry(1).unwrap();
    let mut scene = ObstructionScene::table_scene(&g, 168.0).unwrap();
    let z = scene.viewpoint[2];
    let extra = [
        Occluder { role: Role::AuxiliaryPlane, shape: OccluderShape::Rod { center: [4e-4, 1e-4], radius: 1e-4, z_min: z - 1e-3, z_max: z + 5e-4 } },
        Occluder { role: Role::AuxiliaryPlane, shape: OccluderShape::Annulus { z: z + 1e-3, inner_radius: 2e-4, outer_radius: 3e-3 } },
        Occluder { role: Role::AuxiliaryPlane, shape: OccluderShape::Wall { radius: 2e-3, z_min: z - 1e-4, z_max: z + 1e-4 } },
    ];
    let mut last = accessible_solid_angle(&scene, raycast(200_000, 9)).unwrap();
    for o in extra {
        scene = scene.with_occluder(o);
        let next = accessible_solid_angle(&scene, raycast(200_000, 9)).unwrap();
        assert!(next.escaped <= last.escaped);
        last = next;
    }
}

#[test]
fn raycast_is_reproducible_and_spread_is_binomial() {
    let g = preset_geometry(1).unwrap();
    let scene = ObstructionScene::table_scene(&g, 168.0).unwrap();
    let a = accessible_solid_angle(&scene, raycast(131_072, 42)).unwrap();
    let b = accessible_solid_angle(&scene, raycast(131_072, 42)).unwrap();
    assert_eq!(a, b);
    let n = 20_000u64;
    let runs: Vec<f64> = (0..40).map(|s| accessible_solid_angle(&scene, raycast(n, s)).unwrap().fraction).collect();
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    let sd = (runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64).sqrt();
    let expected = (mean * (1.0 - mean) / n as f64).sqrt();
    assert!((0.6..1.5).contains(&(sd / expected)), "spread {sd} vs {expected}");
}

#[test]
fn viewpoint_inside_occluder_is_rejected() {
    let g = preset_geometry(1).unwrap();
    let (ri, ro) = match g.electrode(Role::CenterGround).unwrap().shape {
        stylus_core::model::Shape::Tube { inner_radius_um, outer_radius_um, .. } => (inner_radius_um, outer_radius_um),
        _ => unreachable!(),
    };
    let wall = [0.5 * (ri + ro), 0.0, g.center_ground_top_um() - 50.0];
    assert!(matches!(
        ObstructionScene::from_geometry(&g, wall, &TABLE_EXCLUSIONS, true),
        Err(stylus_core::TrapError::InsideConductor(_))
    ));
    assert!(ObstructionScene::from_geometry(&g, [0.0, 0.0, g.center_ground_top_um() - 50.0], &TABLE_EXCLUSIONS, true).is_ok());
}

#[test]
fn hit_map_matches_estimate() {
    let g = preset_geometry(3).unwrap();
    let scene = ObstructionScene::table_scene(&g, 290.0).unwrap();
    let hits = hit_map(&scene, 70_000, 4).unwrap();
    let est = accessible_solid_angle(&scene, raycast(70_000, 4)).unwrap();
    assert_eq!(hits.iter().filter(|h| h.blocked_by.is_none()).count() as u64, est.escaped);
    assert!(hit_map_csv(&hits[..3]).starts_with("theta,phi,blocked_by\n"));
}

/// Fraction of directions from the focus that meet the paraboloid
/// `r^2 = 4 f (z + f)` below `z = (depth - 1) f` and outside the hole.
fn paraboloid_oracle(depth_to_f: f64, hole: f64, rays: usize) -> f64 {
    let f = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut hit = 0usize;
    for _ in 0..rays {
        let c: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - c * c).sqrt();
        let d = Vector3::new(s * phi.cos(), s * phi.sin(), c);
        let (a, b, k) = (d.x * d.x + d.y * d.y, -4.0 * f * d.z, -4.0 * f * f);
        let t = if a < 1e-15 { -k / b } else { (-b + (b * b - 4.0 * a * k).sqrt()) / (2.0 * a) };
        let p = d * t;
        let in_hole = (-d.z).clamp(-1.0, 1.0).acos() < hole;
        if t > 0.0 && p.z <= (depth_to_f - 1.0) * f && !in_hole {
            hit += 1;
        }
    }
    hit as f64 / rays as f64
}

#[test]
fn mirror_rim_angle() {
    let m = MirrorSpec::new(1e-3, 6.0, 0.0).unwrap();
    assert!((mirror_geometry(&m).cos() - 5.0 / 7.0).abs() < 1e-12);
    assert!((mirror_geometry(&m).to_degrees() - 44.42).abs() < 0.01);
    let m2 = MirrorSpec::new(1e-3, 2.0, 0.0).unwrap();
    assert!((mirror_geometry(&m2) - 8f64.sqrt().atan()).abs() < 1e-12);
    let deep = MirrorSpec::new(1e-3, 1e8, 0.0).unwrap();
    assert!(mirror_geometry(&deep) < 1e-3);
    assert!(MirrorSpec::new(1e-3, 0.9, 0.0).is_err());
    assert!(MirrorSpec::new(1e-3, 6.0, 1.6).is_err());
}

#[test]
fn mirror_interception_matches_ray_oracle() {
    let bare = MirrorSpec::new(2e-3, 6.0, 0.0).unwrap();
    let frac = mirror_solid_angle(&bare);
    assert!((frac - 6.0 / 7.0).abs() < 1e-12);
    assert!((frac - paraboloid_oracle(6.0, 0.0, 400_000)).abs() < 0.003);
    let holed = MirrorSpec::hole_for_fraction(2e-3, 6.0, 0.81).unwrap();
    assert!((holed.vertex_hole_half_angle.to_degrees() - 25.0).abs() < 0.5);
    assert!((mirror_solid_angle(&holed) - 0.81).abs() < 1e-9);
    assert!((mirror_solid_angle(&holed) - paraboloid_oracle(6.0, holed.vertex_hole_half_angle, 400_000)).abs() < 0.003);
}

#[test]
fn mirror_partitions_the_sphere() {
    for d in [1.5, 2.0, 6.0, 40.0] {
        let m = MirrorSpec::new(1e-3, d, 0.0).unwrap();
        let open_cap = 0.5 * (1.0 - mirror_geometry(&m).cos());
        assert!((mirror_solid_angle(&m) + open_cap - 1.0).abs() < 1e-12);
    }
}

#[test]
fn dipole_collection() {
    let m = MirrorSpec::new(1e-3, 6.0, 0.0).unwrap();
    assert!((dipole_collection_efficiency(&m) - 324.0 / 343.0).abs() < 1e-12);
    let deep = MirrorSpec::new(1e-3, 1e12, 0.0).unwrap();
    assert!((dipole_collection_efficiency(&deep) - 1.0).abs() < 1e-6);
    let holed = MirrorSpec::new(1e-3, 6.0, 25f64.to_radians()).unwrap();
    assert!(dipole_collection_efficiency(&holed) >= 0.938);
    for d in [1.2, 2.0, 6.0, 40.0] {
        let m = MirrorSpec::new(1e-3, d, 0.0).unwrap();
        assert!(mirror_geometry(&m) < std::f64::consts::FRAC_PI_2);
        assert!(dipole_collection_efficiency(&m) >= mirror_solid_angle(&m));
    }
}

#[test]
fn cavity_and_pair_rate() {
    assert!((cavity_coupling_efficiency(4.5).unwrap() - 0.9).abs() < 1e-12);
    assert_eq!(cavity_coupling_efficiency(0.0).unwrap(), 0.0);
    assert!((cooperativity_for_efficiency(0.9).unwrap() - 4.5).abs() < 1e-12);
    assert!(cooperativity_for_efficiency(1.0).is_err());
    assert!(cavity_coupling_efficiency(-1.0).is_err());

    let old = CollectionChannel::new(0.0002, 0.2);
    let new = CollectionChannel::new(0.9446, 1.0);
    assert_eq!(pair_rate_boost(&old, &old).unwrap(), 1.0);
    let r = pair_rate_boost(&old, &new).unwrap();
    assert!((r / 5.58e8 - 1.0).abs() < 0.01, "{r}");
    assert!(r > 5e4);
    let doubled = pair_rate_boost(&CollectionChannel::new(0.0002, 0.1), &new).unwrap();
    assert!((doubled / r - 4.0).abs() < 1e-9);
    assert!(pair_rate_boost(&CollectionChannel::new(0.0, 0.2), &new).is_err());
}
