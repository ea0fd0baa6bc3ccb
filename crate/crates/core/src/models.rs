//! Models bundled with the crate, compiled in from `models/*.vty`.
//!
//! These are the worked examples the rest of the library leans on: small
//! affine and projective spaces with known counts, the quadric cone with
//! its two small resolutions, a blow-up, and a pair of isomorphic plane
//! cubics. Load one by name with [`load`], or list them with [`names`].

use crate::geomdsl::{parse_model, Model};

static TABLE: &[(&str, &str)] = &[
    ("a1", include_str!("../models/a1.vty")),
    ("a2", include_str!("../models/a2.vty")),
    ("gm", include_str!("../models/gm.vty")),
    ("parabola", include_str!("../models/parabola.vty")),
    ("ellaff", include_str!("../models/ellaff.vty")),
    ("p1", include_str!("../models/p1.vty")),
    ("p2", include_str!("../models/p2.vty")),
    ("p1xp1", include_str!("../models/p1xp1.vty")),
    ("ell", include_str!("../models/ell.vty")),
    ("conifold", include_str!("../models/conifold.vty")),
    ("conifold_res1", include_str!("../models/conifold_res1.vty")),
    ("conifold_res2", include_str!("../models/conifold_res2.vty")),
    ("blowup_a2", include_str!("../models/blowup_a2.vty")),
    ("curve_a", include_str!("../models/curve_a.vty")),
    ("curve_b", include_str!("../models/curve_b.vty")),
];

/// Names of all bundled models, in a fixed order.
pub fn names() -> Vec<&'static str> {
    TABLE.iter().map(|&(n, _)| n).collect()
}

/// Source text of a bundled model.
pub fn source(name: &str) -> Option<&'static str> {
    TABLE.iter().find(|&&(n, _)| n == name).map(|&(_, s)| s)
}

/// Parses a bundled model. The sources ship with the crate, so a parse
/// failure here is a packaging bug, not an input error.
pub fn load(name: &str) -> Option<Model> {
    source(name).map(|s| parse_model(s).expect("bundled model parses"))
}
