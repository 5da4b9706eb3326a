//! The enumeration oracle's counts on the shipped fixture, frozen. A change
//! here means the fixture or the oracle changed, not the generator.

#[path = "support/oracle.rs"]
mod oracle;

use std::path::PathBuf;

use oracle::Expect;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

const FROZEN: &[(&str, usize, usize, usize)] = &[
    ("L01", 72, 61, 61),
    ("L02", 12, 12, 126),
    ("L03", 72, 0, 0),
    ("L04", 54, 18, 18),
    ("L05", 12, 12, 35),
    ("L06", 54, 18, 18),
    ("L07", 95, 18, 18),
    ("L08", 54, 36, 36),
    ("L09", 95, 16, 16),
    ("L10", 95, 1, 1),
    ("L11", 12, 12, 95),
    ("L12", 72, 50, 50),
    ("L13", 72, 22, 22),
    ("L14", 36, 0, 0),
    ("L15", 36, 4, 4),
    ("L16", 36, 4, 4),
    ("L17", 36, 4, 4),
    ("L18", 12, 0, 0),
];

#[test]
fn per_lf_counts_are_frozen() {
    let got = oracle::expected_per_template(&fixtures());
    assert_eq!(got.len(), 34);
    for (t, (lf, e)) in &got {
        let &(_, records, answered, evidences) = FROZEN
            .iter()
            .find(|f| f.0 == lf)
            .unwrap_or_else(|| panic!("{t} uses unfrozen {lf}"));
        assert_eq!(
            *e,
            Expect {
                records,
                answered,
                evidences
            },
            "{t} ({lf})"
        );
    }
}

#[test]
fn per_strategy_totals_are_frozen() {
    let s = oracle::expected_per_strategy(&fixtures());
    let e = |records, answered, evidences| Expect {
        records,
        answered,
        evidences,
    };
    assert_eq!(s["attribute"], e(324, 229, 457));
    assert_eq!(s["relation"], e(964, 270, 270));
    assert_eq!(s["operator"], e(298, 103, 232));
    assert_eq!(s["class"], e(180, 20, 20));
}
