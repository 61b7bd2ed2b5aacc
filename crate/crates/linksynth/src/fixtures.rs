//! Canned linkage topologies used by tests, the scripted agent backend,
//! and topology enumeration.

use crate::linkage::{Branch, Joint, Linkage};

/// Minimal four-bar: ground pins `a`/`d`, crank `b`, coupler joint `c`.
pub fn four_bar() -> Linkage {
    Linkage {
        name: "four-bar".into(),
        target: "c".into(),
        joints: vec![
            Joint::fixed("a", 0.0, 0.0),
            Joint::fixed("d", 5.0, 0.0),
            Joint::crank("b", "a", 2.0, 0.0),
            Joint::revolute("c", "b", "d", 4.5, 4.0, Branch::Positive),
        ],
        intent: String::new(),
    }
}

/// Crank-rocker four-bar satisfying the Grashof condition, so the crank
/// completes full revolutions and every joint path closes.
pub fn grashof_four_bar() -> Linkage {
    let mut l = four_bar();
    l.name = "grashof-four-bar".into();
    l
}

/// The immobile six-link/six-joint case: three ground pins but only six
/// declared joints, giving Grübler mobility 3.
pub fn six_link_six_joint() -> Linkage {
    Linkage {
        name: "six-link-six-joint".into(),
        target: "e".into(),
        joints: vec![
            Joint::fixed("a", 0.0, 0.0),
            Joint::fixed("g1", 4.0, 0.0),
            Joint::fixed("g2", 2.0, -3.0),
            Joint::crank("b", "a", 1.5, 0.0),
            Joint::revolute("c", "b", "g1", 3.5, 3.0, Branch::Positive),
            Joint::revolute("e", "c", "g2", 3.0, 3.5, Branch::Positive),
        ],
        intent: String::new(),
    }
}

/// The corrected six-link chain with a seventh ground pin, restoring
/// single-DOF mobility under the Grübler count.
pub fn six_link_seven_joint() -> Linkage {
    let mut l = six_link_six_joint();
    l.name = "six-link-seven-joint".into();
    l.joints.insert(3, Joint::fixed("g3", 0.0, -3.0));
    l
}
