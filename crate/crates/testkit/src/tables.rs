//! Values printed in the reference tables, copied verbatim.

/// Team assignment table: category → `(team, percent)` in printed rank
/// order. An empty list is printed as "n.a.".
pub const TEAM_TABLE: &[(&str, &[(&str, u64)])] = &[
    ("Business", &[("Business", 28), ("Support", 28), ("Mobile", 28)]),
    ("Operation", &[("Mobile", 43), ("Support", 41)]),
    ("Tutorial", &[("Support", 54), ("Mobile", 30)]),
    ("Navigation", &[("Support", 35), ("Mobile", 35)]),
    ("Algorithms", &[("Routing", 42), ("Support", 28)]),
    ("Consequences", &[("Mobile", 88)]),
    ("Unexpected system behavior", &[("Mobile", 42), ("Routing", 33)]),
    ("Bugs & Crashes", &[("Mobile", 57)]),
    ("User Interface", &[("UI/UX", 55), ("Mobile", 36)]),
    ("Privacy", &[("Mobile", 75), ("Meta", 25)]),
    ("Security", &[]),
    ("Meta information", &[("Mobile", 36), ("Support", 36)]),
    ("Terminology", &[]),
    ("System-specific elements", &[("Support", 75), ("Mobile", 25)]),
];

/// Detection precision/recall/F1 per class: `(class, P, R, F1)`.
pub const DETECTION_PRF: &[(&str, f64, f64, f64)] = &[
    ("Explicit", 0.8276, 0.1765, 0.2909),
    ("Implicit", 0.1333, 0.1818, 0.1538),
    ("Potential", 0.2106, 0.6519, 0.3184),
    ("None", 0.9858, 0.8124, 0.8901),
];

/// Category filter evaluation: `(filter, P, R, F-β)` at β = 0.2.
pub const FILTER_FBETA: &[(&str, f64, f64, f64)] = &[("Fine filter", 0.6727, 0.2341, 0.5126), ("Coarse filter", 0.5079, 0.4051, 0.4873)];

/// Resolved confirmed needs: `(resolved, total, displayed percent)`.
pub const ADDRESSABILITY: (u64, u64, &str) = (139, 158, "88%");

/// κ values quoted with their interpretation.
pub const KAPPA_BANDS: &[(f64, &str)] = &[(0.61, "Substantial"), (0.39, "Fair"), (0.558, "Moderate")];
