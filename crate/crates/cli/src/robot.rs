//! Robot descriptions: a URDF-subset XML reader and a minimal native line
//! format, both producing the same serial [`KinematicChain`].
//!
//! The native format is one joint per line, `#` comments allowed:
//!
//! ```text
//! revolute tx ty tz roll pitch yaw ax ay az lower upper
//! tool tx ty tz roll pitch yaw
//! ```
//!
//! SI units and radians; RPY is fixed-axis XYZ (URDF convention). The raw
//! numbers of every joint are kept verbatim so `parse(serialize(d))`
//! reproduces the description exactly.

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use surfplan_core::kinematics::{ChainError, Joint, KinematicChain};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    UrdfSubset,
    Native,
}

/// One parsed joint, raw field values preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub xyz: [f64; 3],
    pub rpy: [f64; 3],
    pub axis: [f64; 3],
    pub lower: f64,
    pub upper: f64,
}

/// Fixed transform after the last joint, raw field values preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec {
    pub xyz: [f64; 3],
    pub rpy: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct RobotDescription {
    pub name: String,
    pub joints: Vec<JointSpec>,
    pub tool: Option<ToolSpec>,
    pub source_format: SourceFormat,
    pub chain: KinematicChain,
}

#[derive(Debug, Error)]
pub enum RobotError {
    #[error("xml parse error at line {line}: {message}")]
    Xml { line: usize, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error("line {line}: unsupported joint type `{joint_type}` (joint `{name}`)")]
    UnsupportedJoint {
        line: usize,
        joint_type: String,
        name: String,
    },
    #[error("unsupported kinematic topology: {message}")]
    UnsupportedTopology { message: String },
    #[error("invalid chain: {0}")]
    Chain(#[from] ChainError),
}

const CONTINUOUS_LIMIT: f64 = 4.0 * std::f64::consts::PI;

fn isometry(xyz: &[f64; 3], rpy: &[f64; 3]) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(xyz[0], xyz[1], xyz[2]),
        UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    )
}

/// Unit axis for the chain; leaves already-unit input bit-for-bit intact so
/// round-trips are exact.
fn unit_axis(raw: [f64; 3], location: &dyn Fn() -> String) -> Result<[f64; 3], RobotError> {
    let v = Vector3::new(raw[0], raw[1], raw[2]);
    let norm = v.norm();
    if norm < 1e-9 {
        return Err(RobotError::Schema {
            location: location(),
            message: "joint axis must be non-zero".into(),
        });
    }
    if (norm - 1.0).abs() <= 1e-9 {
        Ok(raw)
    } else {
        let u = v / norm;
        Ok([u.x, u.y, u.z])
    }
}

fn build_chain(joints: &[JointSpec], tool: &Option<ToolSpec>) -> Result<KinematicChain, RobotError> {
    if joints.is_empty() {
        return Err(RobotError::Schema {
            location: "chain".into(),
            message: "no revolute joints; a chain needs at least one".into(),
        });
    }
    let chain_joints = joints
        .iter()
        .map(|s| Joint {
            origin: isometry(&s.xyz, &s.rpy),
            axis: Vector3::new(s.axis[0], s.axis[1], s.axis[2]),
            lower: s.lower,
            upper: s.upper,
        })
        .collect();
    let tool_iso = tool
        .as_ref()
        .map(|t| isometry(&t.xyz, &t.rpy))
        .unwrap_or_else(Isometry3::identity);
    Ok(KinematicChain::new(chain_joints, tool_iso)?)
}

// ---------------------------------------------------------------------------
// URDF subset
// ---------------------------------------------------------------------------

struct UrdfJoint {
    line: usize,
    name: String,
    joint_type: String,
    parent: String,
    child: String,
    xyz: [f64; 3],
    rpy: [f64; 3],
    axis: Option<[f64; 3]>,
    limit: Option<(f64, f64)>,
}

/// Parses the kinematics subset of a URDF: the unique root-to-tip serial
/// chain of revolute/continuous/fixed joints. Meshes, inertials and
/// transmissions are ignored; prismatic or floating joints and branching
/// trees are rejected.
pub fn parse_urdf_subset(text: &str) -> Result<RobotDescription, RobotError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| RobotError::Xml {
        line: e.pos().row as usize,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "robot" {
        return Err(RobotError::Schema {
            location: "document root".into(),
            message: format!("expected <robot>, found <{}>", root.tag_name().name()),
        });
    }
    let name = root.attribute("name").unwrap_or("robot").to_string();

    let line_of = |node: &roxmltree::Node| doc.text_pos_at(node.range().start).row as usize;
    let mut joints = Vec::new();
    for node in root.children().filter(|n| n.has_tag_name("joint")) {
        joints.push(parse_urdf_joint(&doc, &node, line_of(&node))?);
    }
    if joints.is_empty() {
        return Err(RobotError::Schema {
            location: "robot".into(),
            message: "no joints found".into(),
        });
    }

    // Serial topology: every link may parent at most one joint, and exactly
    // one link (the root) is never a child.
    let mut by_parent: std::collections::BTreeMap<&str, usize> = Default::default();
    for (i, j) in joints.iter().enumerate() {
        if by_parent.insert(j.parent.as_str(), i).is_some() {
            return Err(RobotError::UnsupportedTopology {
                message: format!("link `{}` parents more than one joint", j.parent),
            });
        }
    }
    let children: std::collections::BTreeSet<&str> =
        joints.iter().map(|j| j.child.as_str()).collect();
    let mut roots = joints
        .iter()
        .filter(|j| !children.contains(j.parent.as_str()))
        .map(|j| j.parent.as_str());
    let root_link = roots.next().ok_or_else(|| RobotError::UnsupportedTopology {
        message: "no root link: the joint graph contains a cycle".into(),
    })?;
    if let Some(other) = roots.next() {
        return Err(RobotError::UnsupportedTopology {
            message: format!("multiple root links (`{root_link}`, `{other}`)"),
        });
    }

    // Walk the chain, folding fixed joints into the next revolute origin.
    let mut specs: Vec<JointSpec> = Vec::new();
    let mut pending: Option<Isometry3<f64>> = None;
    let mut current = root_link;
    while let Some(&idx) = by_parent.get(current) {
        let j = &joints[idx];
        match j.joint_type.as_str() {
            "fixed" => {
                let t = isometry(&j.xyz, &j.rpy);
                pending = Some(pending.map_or(t, |p| p * t));
            }
            "revolute" | "continuous" => {
                let location = || format!("joint `{}` (line {})", j.name, j.line);
                let axis_raw = j.axis.ok_or_else(|| RobotError::Schema {
                    location: location(),
                    message: "revolute joint without <axis>".into(),
                })?;
                let axis = unit_axis(axis_raw, &location)?;
                let (lower, upper) = if j.joint_type == "continuous" {
                    (-CONTINUOUS_LIMIT, CONTINUOUS_LIMIT)
                } else {
                    j.limit.ok_or_else(|| RobotError::Schema {
                        location: location(),
                        message: "revolute joint without <limit lower upper>".into(),
                    })?
                };
                if lower >= upper {
                    return Err(RobotError::Schema {
                        location: location(),
                        message: format!("limit lower {lower} >= upper {upper}"),
                    });
                }
                let (xyz, rpy) = match pending.take() {
                    // Raw passthrough when nothing was folded.
                    None => (j.xyz, j.rpy),
                    Some(p) => decompose(p * isometry(&j.xyz, &j.rpy)),
                };
                specs.push(JointSpec {
                    xyz,
                    rpy,
                    axis,
                    lower,
                    upper,
                });
            }
            other => {
                return Err(RobotError::UnsupportedJoint {
                    line: j.line,
                    joint_type: other.to_string(),
                    name: j.name.clone(),
                });
            }
        }
        current = j.child.as_str();
    }

    let tool = pending.map(|p| {
        let (xyz, rpy) = decompose(p);
        ToolSpec { xyz, rpy }
    });
    let chain = build_chain(&specs, &tool)?;
    Ok(RobotDescription {
        name,
        joints: specs,
        tool,
        source_format: SourceFormat::UrdfSubset,
        chain,
    })
}

fn decompose(iso: Isometry3<f64>) -> ([f64; 3], [f64; 3]) {
    let t = iso.translation;
    let (r, p, y) = iso.rotation.euler_angles();
    ([t.x, t.y, t.z], [r, p, y])
}

fn parse_urdf_joint(
    doc: &roxmltree::Document,
    node: &roxmltree::Node,
    line: usize,
) -> Result<UrdfJoint, RobotError> {
    let name = node.attribute("name").unwrap_or("<unnamed>").to_string();
    let location = || format!("joint `{name}` (line {line})");
    let joint_type = node
        .attribute("type")
        .ok_or_else(|| RobotError::Schema {
            location: location(),
            message: "joint without type attribute".into(),
        })?
        .to_string();

    let find = |tag: &str| node.children().find(|c| c.has_tag_name(tag));
    let attr_triple = |n: &roxmltree::Node, attr: &str| -> Result<Option<[f64; 3]>, RobotError> {
        match n.attribute(attr) {
            None => Ok(None),
            Some(s) => {
                let line = doc.text_pos_at(n.range().start).row as usize;
                parse_triple(s)
                    .map(Some)
                    .map_err(|message| RobotError::Parse { line, message })
            }
        }
    };

    let (mut xyz, mut rpy) = ([0.0; 3], [0.0; 3]);
    if let Some(origin) = find("origin") {
        if let Some(v) = attr_triple(&origin, "xyz")? {
            xyz = v;
        }
        if let Some(v) = attr_triple(&origin, "rpy")? {
            rpy = v;
        }
    }
    let axis = match find("axis") {
        Some(a) => attr_triple(&a, "xyz")?,
        None => None,
    };
    let limit = match find("limit") {
        Some(l) => {
            let lline = doc.text_pos_at(l.range().start).row as usize;
            let get = |attr: &str| -> Result<f64, RobotError> {
                let s = l.attribute(attr).ok_or_else(|| RobotError::Schema {
                    location: location(),
                    message: format!("<limit> without {attr}"),
                })?;
                parse_float(s).map_err(|message| RobotError::Parse {
                    line: lline,
                    message,
                })
            };
            Some((get("lower")?, get("upper")?))
        }
        None => None,
    };
    let link_name = |tag: &str| -> Result<String, RobotError> {
        find(tag)
            .and_then(|n| n.attribute("link").map(str::to_string))
            .ok_or_else(|| RobotError::Schema {
                location: location(),
                message: format!("joint without <{tag} link=..>"),
            })
    };
    Ok(UrdfJoint {
        line,
        name: name.clone(),
        joint_type,
        parent: link_name("parent")?,
        child: link_name("child")?,
        xyz,
        rpy,
        axis,
        limit,
    })
}

fn parse_float(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(format!("expected 3 numbers, got {} in `{s}`", parts.len()));
    }
    Ok([
        parse_float(parts[0])?,
        parse_float(parts[1])?,
        parse_float(parts[2])?,
    ])
}

// ---------------------------------------------------------------------------
// Native line format
// ---------------------------------------------------------------------------

pub fn parse_native(text: &str) -> Result<RobotDescription, RobotError> {
    let mut joints: Vec<JointSpec> = Vec::new();
    let mut tool: Option<ToolSpec> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let numbers = |expected: usize| -> Result<Vec<f64>, RobotError> {
            if fields.len() != expected + 1 {
                return Err(RobotError::Parse {
                    line,
                    message: format!(
                        "`{}` takes {expected} fields, got {}",
                        fields[0],
                        fields.len() - 1
                    ),
                });
            }
            fields[1..]
                .iter()
                .map(|s| parse_float(s).map_err(|message| RobotError::Parse { line, message }))
                .collect()
        };
        match fields[0] {
            "revolute" => {
                if tool.is_some() {
                    return Err(RobotError::Parse {
                        line,
                        message: "joint after the tool line".into(),
                    });
                }
                let v = numbers(11)?;
                if v[9] >= v[10] {
                    return Err(RobotError::Parse {
                        line,
                        message: format!("limit lower {} >= upper {}", v[9], v[10]),
                    });
                }
                let location = || format!("line {line}");
                let axis = unit_axis([v[6], v[7], v[8]], &location)?;
                joints.push(JointSpec {
                    xyz: [v[0], v[1], v[2]],
                    rpy: [v[3], v[4], v[5]],
                    axis,
                    lower: v[9],
                    upper: v[10],
                });
            }
            "tool" => {
                if tool.is_some() {
                    return Err(RobotError::Parse {
                        line,
                        message: "more than one tool line".into(),
                    });
                }
                let v = numbers(6)?;
                tool = Some(ToolSpec {
                    xyz: [v[0], v[1], v[2]],
                    rpy: [v[3], v[4], v[5]],
                });
            }
            other => {
                return Err(RobotError::Parse {
                    line,
                    message: format!("unknown keyword `{other}`"),
                });
            }
        }
    }
    let chain = build_chain(&joints, &tool)?;
    Ok(RobotDescription {
        name: "robot".into(),
        joints,
        tool,
        source_format: SourceFormat::Native,
        chain,
    })
}

/// Canonical native form: raw numbers, shortest round-trip float formatting.
pub fn serialize_native(desc: &RobotDescription) -> String {
    let mut out = String::new();
    for j in &desc.joints {
        out.push_str(&format!(
            "revolute {} {} {} {} {} {} {} {} {} {} {}\n",
            j.xyz[0], j.xyz[1], j.xyz[2], j.rpy[0], j.rpy[1], j.rpy[2], j.axis[0], j.axis[1],
            j.axis[2], j.lower, j.upper
        ));
    }
    if let Some(t) = &desc.tool {
        out.push_str(&format!(
            "tool {} {} {} {} {} {}\n",
            t.xyz[0], t.xyz[1], t.xyz[2], t.rpy[0], t.rpy[1], t.rpy[2]
        ));
    }
    out
}

/// Reads a robot description, dispatching on the declared format.
pub fn parse(text: &str, format: SourceFormat) -> Result<RobotDescription, RobotError> {
    match format {
        SourceFormat::UrdfSubset => parse_urdf_subset(text),
        SourceFormat::Native => parse_native(text),
    }
}
