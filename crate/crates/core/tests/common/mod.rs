//! Shared fixtures: analytic clouds and test arms.

#![allow(dead_code)]

use nalgebra::{Isometry3, Point3, Translation3, Vector3};
use surfplan_core::kinematics::{Joint, KinematicChain};
use surfplan_core::surface::{IngestOptions, PointCloud, SurfaceIndex};

/// Regular grid on z = 0 covering `[0, extent] x [0, extent]`.
pub fn plane_cloud(per_side: usize, extent: f64) -> SurfaceIndex {
    let step = extent / (per_side - 1) as f64;
    let mut points = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            points.push(Point3::new(i as f64 * step, j as f64 * step, 0.0));
        }
    }
    let cloud = PointCloud::build(
        points,
        Point3::new(0.5 * extent, 0.5 * extent, 10.0 * extent),
        &IngestOptions::default(),
    )
    .unwrap();
    SurfaceIndex::build(cloud).unwrap()
}

/// Near-uniform unit-sphere sample (Fibonacci spiral), viewpoint far out on
/// +z so upper-hemisphere normals orient outward.
pub fn unit_sphere_cloud(n: usize) -> SurfaceIndex {
    let golden = core::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let theta = golden * i as f64;
        points.push(Point3::new(r * theta.cos(), r * theta.sin(), z));
    }
    let cloud = PointCloud::build(points, Point3::new(0.0, 0.0, 50.0), &IngestOptions::default())
        .unwrap();
    SurfaceIndex::build(cloud).unwrap()
}

/// Cylinder of the given radius about the z axis, arc centred on +x,
/// viewpoint far out on +x.
pub fn cylinder_cloud(radius: f64, height: f64, arc: f64, n_theta: usize, n_z: usize) -> SurfaceIndex {
    let mut points = Vec::with_capacity(n_theta * n_z);
    for i in 0..n_theta {
        let theta = -0.5 * arc + arc * i as f64 / (n_theta - 1) as f64;
        for j in 0..n_z {
            let z = height * j as f64 / (n_z - 1) as f64;
            points.push(Point3::new(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let cloud = PointCloud::build(
        points,
        Point3::new(50.0 * radius, 0.0, 0.5 * height),
        &IngestOptions::default(),
    )
    .unwrap();
    SurfaceIndex::build(cloud).unwrap()
}

/// Planar 2R arm, both links 1 m, axes +z, generous limits.
pub fn two_r_planar() -> KinematicChain {
    KinematicChain::new(
        vec![
            Joint {
                origin: Isometry3::identity(),
                axis: Vector3::z(),
                lower: -6.3,
                upper: 6.3,
            },
            Joint {
                origin: Translation3::new(1.0, 0.0, 0.0).into(),
                axis: Vector3::z(),
                lower: -6.3,
                upper: 6.3,
            },
        ],
        Translation3::new(1.0, 0.0, 0.0).into(),
    )
    .unwrap()
}

/// 3R arm with all axes vertical, links in a horizontal plane at z = 0.3 and
/// the tool dropping back to z = 0: every point of a z = 0 plane within the
/// reach annulus is touchable with the tool axis pointing straight down,
/// which makes IK trivial over the whole workspace.
pub fn three_r_drop_arm() -> KinematicChain {
    KinematicChain::new(
        vec![
            Joint {
                origin: Translation3::new(0.0, 0.0, 0.3).into(),
                axis: Vector3::z(),
                lower: -6.3,
                upper: 6.3,
            },
            Joint {
                origin: Translation3::new(0.45, 0.0, 0.0).into(),
                axis: Vector3::z(),
                lower: -6.3,
                upper: 6.3,
            },
            Joint {
                origin: Translation3::new(0.45, 0.0, 0.0).into(),
                axis: Vector3::z(),
                lower: -6.3,
                upper: 6.3,
            },
        ],
        // Tool z axis flipped to point downward (rotation about x by pi),
        // tip back on the z = 0 plane.
        Isometry3::from_parts(
            Translation3::new(0.35, 0.0, -0.3),
            nalgebra::UnitQuaternion::from_axis_angle(&nalgebra::Vector3::x_axis(), core::f64::consts::PI),
        ),
        )
    .unwrap()
}

/// Deterministic pseudo-random 7-DOF chain: varied axes and origins,
/// moderate limits. `salt` varies the geometry.
pub fn random_seven_dof(salt: u64) -> KinematicChain {
    // Tiny splitmix-style generator; fixed here so the chain is stable
    // across runs without pulling in an RNG.
    let mut state = salt.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    };
    let axes = [
        Vector3::z(),
        Vector3::y(),
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        Vector3::y(),
        Vector3::x(),
    ];
    let joints = axes
        .iter()
        .map(|axis| {
            let t = Translation3::new(
                0.1 + 0.2 * next(),
                0.1 * (next() - 0.5),
                0.1 + 0.2 * next(),
            );
            let rot = nalgebra::UnitQuaternion::from_euler_angles(
                0.4 * (next() - 0.5),
                0.4 * (next() - 0.5),
                0.4 * (next() - 0.5),
            );
            Joint {
                origin: Isometry3::from_parts(t, rot),
                axis: *axis,
                lower: -2.9,
                upper: 2.9,
            }
        })
        .collect();
    KinematicChain::new(joints, Translation3::new(0.0, 0.0, 0.1).into()).unwrap()
}
