//! Robot-description fixtures: the 7-DOF chain against an independently
//! computed forward-kinematics oracle, located errors for malformed files,
//! and exact native round-trips.

use nalgebra::{Matrix3, Point3};
use proptest::prelude::*;
use surfplan_cli::robot::{
    parse_native, parse_urdf_subset, serialize_native, RobotError, SourceFormat,
};
use surfplan_core::kinematics::{forward_kinematics, JointConfig};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn panda_like_urdf_parses_to_seven_dof() {
    let desc = parse_urdf_subset(&fixture("panda_like.urdf")).unwrap();
    assert_eq!(desc.name, "panda_like");
    assert_eq!(desc.chain.dof(), 7);
    assert_eq!(desc.source_format, SourceFormat::UrdfSubset);
    // Flange folded into the tool transform.
    assert!(desc.tool.is_some());
    assert_eq!(desc.tool.as_ref().unwrap().xyz, [0.0, 0.0, 0.107]);
}

#[test]
fn panda_like_fk_zero_matches_external_oracle() {
    // Expected pose computed independently (matrix composition in numpy):
    // position (0.088, 0, 0.926), orientation = 180 degrees about x.
    let desc = parse_urdf_subset(&fixture("panda_like.urdf")).unwrap();
    let pose = forward_kinematics(&desc.chain, &JointConfig(vec![0.0; 7]));
    assert!((pose.position - Point3::new(0.088, 0.0, 0.926)).norm() <= 1e-9);
    let expected_rot = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, -1.0));
    assert!((pose.orientation.to_rotation_matrix().into_inner() - expected_rot).norm() <= 1e-9);
}

#[test]
fn panda_like_fk_bent_matches_external_oracle() {
    // Same oracle at a bent configuration.
    let desc = parse_urdf_subset(&fixture("panda_like.urdf")).unwrap();
    let q = JointConfig(vec![0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.8]);
    let pose = forward_kinematics(&desc.chain, &q);
    let expected = Point3::new(0.4737240401117622, 0.0, 0.5155132061520504);
    assert!(
        (pose.position - expected).norm() <= 1e-9,
        "got {:?}",
        pose.position
    );
}

#[test]
fn two_r_urdf_fk_zero_is_summed_origins() {
    let desc = parse_urdf_subset(&fixture("two_r.urdf")).unwrap();
    assert_eq!(desc.chain.dof(), 2);
    let pose = forward_kinematics(&desc.chain, &JointConfig(vec![0.0, 0.0]));
    assert!((pose.position - Point3::new(2.0, 0.0, 0.0)).norm() <= 1e-9);
}

#[test]
fn malformed_fixture_error_is_located() {
    match parse_urdf_subset(&fixture("malformed.urdf")) {
        Err(RobotError::Xml { line, .. }) => assert!(line > 1),
        other => panic!("expected located xml error, got {other:?}"),
    }
}

#[test]
fn native_drop_arm_fixture() {
    let desc = parse_native(&fixture("drop_arm.robot")).unwrap();
    assert_eq!(desc.chain.dof(), 3);
    let pose = forward_kinematics(&desc.chain, &JointConfig(vec![0.0, 0.0, 0.0]));
    assert!((pose.position - Point3::new(1.25, 0.0, 0.0)).norm() <= 1e-12);
    // Tool points straight down.
    assert!((pose.tool_axis() - nalgebra::Vector3::new(0.0, 0.0, -1.0)).norm() <= 1e-12);
}

#[test]
fn urdf_chains_round_trip_through_native_exactly() {
    for file in ["panda_like.urdf", "two_r.urdf"] {
        let desc = parse_urdf_subset(&fixture(file)).unwrap();
        let canonical = serialize_native(&desc);
        let reparsed = parse_native(&canonical).unwrap();
        assert_eq!(desc.joints, reparsed.joints, "{file}");
        assert_eq!(desc.tool, reparsed.tool, "{file}");
        // Canonical form is a fixed point of parse . serialize.
        assert_eq!(canonical, serialize_native(&reparsed), "{file}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // Parsers must fail cleanly on arbitrary junk, never panic.
    #[test]
    fn native_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_native(&text);
    }

    #[test]
    fn urdf_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_urdf_subset(&text);
    }

    // Structured-ish native lines: parser accepts or rejects with a line
    // number, and every accepted description round-trips exactly.
    #[test]
    fn native_accepted_inputs_round_trip(
        joints in prop::collection::vec(
            (
                -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0,
                -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0,
                0u8..3,
                -3.0f64..0.0, 0.001f64..3.0,
            ),
            1..6,
        )
    ) {
        let mut text = String::new();
        for (tx, ty, tz, r, p, y, axis, lower, upper) in &joints {
            let axis = match axis { 0 => "1 0 0", 1 => "0 1 0", _ => "0 0 1" };
            text.push_str(&format!("revolute {tx} {ty} {tz} {r} {p} {y} {axis} {lower} {upper}\n"));
        }
        let desc = parse_native(&text).unwrap();
        let reparsed = parse_native(&serialize_native(&desc)).unwrap();
        prop_assert_eq!(&desc.joints, &reparsed.joints);
        let q = JointConfig(vec![0.1; desc.chain.dof()]);
        let a = forward_kinematics(&desc.chain, &q);
        let b = forward_kinematics(&reparsed.chain, &q);
        prop_assert_eq!(a.position, b.position);
    }
}
