use std::path::PathBuf;

use choreo_core::platform::{
    ecl_lookup, ecl_synthesize, forward_kinematics, ik_solve, kinesphere, load_platform,
    nearest_key, requested_keys, Ecl, EclError, EclKey, JointConfig, PlatformSpec,
};
use choreo_core::score::{enumerate_directions, Reach};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn arm3() -> PlatformSpec {
    load_platform(fixture("arm3.eurdf.json")).unwrap()
}

fn spatial3() -> PlatformSpec {
    load_platform(fixture("spatial3.eurdf.json")).unwrap()
}

fn config_in_limits(spec: &PlatformSpec) -> impl Strategy<Value = JointConfig> {
    let ranges: Vec<_> = spec
        .links()
        .iter()
        .map(|l| l.limits.0..=l.limits.1)
        .collect();
    ranges.prop_map(JointConfig)
}

proptest! {
    #[test]
    fn fk_preserves_link_lengths(q in config_in_limits(&spatial3())) {
        let spec = spatial3();
        let ends = forward_kinematics(&spec, &q).unwrap();
        for (i, link) in spec.links().iter().enumerate() {
            let start = link.parent.map_or(spec.root(), |p| ends[p]);
            prop_assert!(((ends[i] - start).norm() - link.length).abs() <= 1e-9);
        }
    }

    #[test]
    fn base_rotation_is_equivariant(q in config_in_limits(&arm3()), theta in -1.0f64..1.0) {
        for spec in [arm3(), spatial3()] {
            let mut q = JointConfig(q.0.iter().map(|a| a * 0.5).collect());
            q.0.truncate(spec.link_count());
            while q.len() < spec.link_count() { q.0.push(0.0); }
            let before = forward_kinematics(&spec, &q).unwrap();
            let mut turned = q.clone();
            turned.0[0] += theta;
            let after = forward_kinematics(&spec, &turned).unwrap();
            let rot = Rotation3::from_axis_angle(&spec.links()[0].axis, theta);
            for (b, a) in before.iter().zip(&after) {
                let expected = spec.root() + rot * (b - spec.root());
                prop_assert!((a - expected).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn ik_results_are_sound(r in 0.05f64..2.95, phi in -std::f64::consts::PI..std::f64::consts::PI) {
        let spec = arm3();
        let target = Vector3::new(r * phi.cos(), r * phi.sin(), 0.0);
        let q = ik_solve(&spec, "arm", target, &spec.rest_config()).unwrap();
        prop_assert!(spec.within_limits(&q));
        let end = forward_kinematics(&spec, &q).unwrap()[2];
        prop_assert!((end - target).norm() <= 1e-3 * 3.0);
    }
}

#[test]
fn kinesphere_nesting() {
    for spec in [arm3(), spatial3()] {
        let arm = kinesphere(&spec, "arm").unwrap();
        let fore = kinesphere(&spec, "forearm").unwrap();
        assert!(fore.radius <= arm.radius);
        assert!(fore.radius > 0.0);
    }
}

#[test]
fn spatial_arm_covers_near_and_mid() {
    let spec = spatial3();
    let (ecl, _) = ecl_synthesize(&spec);
    for reach in [Reach::Near, Reach::Mid] {
        for d in enumerate_directions() {
            let key = EclKey::new("arm", d, reach);
            assert!(ecl.get(&key).is_some(), "missing {key}");
        }
    }
    for q in ecl.entries.values() {
        assert!(spec.within_limits(q));
    }
}

#[test]
fn requested_keys_do_not_depend_on_the_platform() {
    let a = requested_keys(&arm3());
    let b = requested_keys(&spatial3());
    assert_eq!(a, b);
    assert_eq!(a.len(), 2 * 26 * 3);
}

#[test]
fn synthesized_libraries_reload() {
    let spec = arm3();
    let (ecl, _) = ecl_synthesize(&spec);
    assert_eq!(Ecl::from_json_str(&ecl.to_json(), &spec).unwrap(), ecl);
}

fn small_ecl() -> impl Strategy<Value = (Ecl, EclKey)> {
    let dirs = enumerate_directions();
    let key = (0..26usize, 0..3usize);
    (
        proptest::collection::vec(key.clone(), 0..8),
        key,
    )
        .prop_map(move |(present, (d, r))| {
            let mut ecl = Ecl::new("p");
            for (d, r) in present {
                ecl.entries.insert(
                    EclKey::new("arm", dirs[d], Reach::from_index(r).unwrap()),
                    JointConfig(vec![]),
                );
            }
            (ecl, EclKey::new("arm", dirs[d], Reach::from_index(r).unwrap()))
        })
}

proptest! {
    #[test]
    fn suggestion_maximizes_cosine((ecl, key) in small_ecl()) {
        match ecl_lookup(&ecl, &key.label, key.direction, key.reach) {
            Ok(_) => prop_assert!(ecl.get(&key).is_some()),
            Err(EclError::Missing { suggestion, .. }) => {
                let want = key.direction.vector();
                match suggestion {
                    None => prop_assert!(ecl.is_empty()),
                    Some(s) => {
                        prop_assert!(ecl.get(&s).is_some());
                        let best = ecl
                            .entries
                            .keys()
                            .map(|k| want.dot(&k.direction.vector()))
                            .fold(f64::NEG_INFINITY, f64::max);
                        prop_assert!((want.dot(&s.direction.vector()) - best).abs() <= 1e-12);
                        prop_assert_eq!(Some(s), nearest_key(&ecl, &key));
                    }
                }
            }
        }
    }
}
