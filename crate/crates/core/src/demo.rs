//! Knowledge bases bundled with the shell.

use crate::kb::{parse_kb, KnowledgeBase};

/// Site of a hydrocarbon play: the XX rule fragment.
pub const XX_KB: &str = include_str!("../kb/xx.kb");

/// Two-partition fiberglass troubleshooting fragment.
pub const OASES_KB: &str = include_str!("../kb/oases.kb");

/// Answer script for the XX worked example up to the distance answer.
pub const XX_TABLE_SCRIPT: &str = include_str!("../kb/xx_table.script");

/// Answer script for a complete XX consultation.
pub const XX_FULL_SCRIPT: &str = include_str!("../kb/xx_full.script");

pub fn xx() -> KnowledgeBase {
    parse_kb(XX_KB).expect("bundled XX knowledge base parses")
}

pub fn oases() -> KnowledgeBase {
    parse_kb(OASES_KB).expect("bundled OASES knowledge base parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{serialize_kb, validate_kb};

    #[test]
    fn bundled_kbs_validate_without_errors() {
        for kb in [xx(), oases()] {
            let d = validate_kb(&kb);
            assert!(d.iter().all(|d| !d.is_error()), "{d:?}");
            assert!(d.is_empty(), "{d:?}");
        }
    }

    #[test]
    fn bundled_kbs_round_trip() {
        for kb in [xx(), oases()] {
            assert_eq!(parse_kb(&serialize_kb(&kb)).unwrap(), kb);
        }
    }
}
