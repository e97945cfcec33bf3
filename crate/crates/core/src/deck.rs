//! Deck-of-cards scoring: ordered classes separated by blank cards.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeckError {
    #[error("ranking has no classes")]
    Empty,
    #[error("class {0} is empty")]
    EmptyClass(usize),
    #[error("expected {expected} blank counts between classes, got {got}")]
    BlankCount { expected: usize, got: usize },
    #[error("item '{0}' appears more than once")]
    Duplicate(String),
}

/// Classes ordered from worst to best. `blanks[s]` is the number of blank
/// cards between class `s` and class `s + 1`; `zero_gap` is the number
/// between the zero level and the worst class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardRanking {
    pub classes: Vec<Vec<String>>,
    #[serde(default)]
    pub blanks: Vec<u32>,
    #[serde(default)]
    pub zero_gap: u32,
}

/// Item scores; the zero level sits at 0.
pub type ScoreTable = BTreeMap<String, u64>;

impl CardRanking {
    /// Singleton classes with no blank cards.
    pub fn from_order<S: Into<String>>(items: impl IntoIterator<Item = S>) -> Self {
        let classes: Vec<Vec<String>> = items.into_iter().map(|s| vec![s.into()]).collect();
        let blanks = vec![0; classes.len().saturating_sub(1)];
        CardRanking {
            classes,
            blanks,
            zero_gap: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DeckError> {
        if self.classes.is_empty() {
            return Err(DeckError::Empty);
        }
        if let Some(s) = self.classes.iter().position(Vec::is_empty) {
            return Err(DeckError::EmptyClass(s));
        }
        if self.blanks.len() != self.classes.len() - 1 {
            return Err(DeckError::BlankCount {
                expected: self.classes.len() - 1,
                got: self.blanks.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for item in self.classes.iter().flatten() {
            if !seen.insert(item.as_str()) {
                return Err(DeckError::Duplicate(item.clone()));
            }
        }
        Ok(())
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().flatten().map(String::as_str)
    }

    /// Score of each class: `v_s = Σ_{z<s} (e_z + 1)` with `e_0` the zero gap.
    pub fn class_scores(&self) -> Result<Vec<u64>, DeckError> {
        self.validate()?;
        let mut v = self.zero_gap as u64 + 1;
        let mut out = Vec::with_capacity(self.classes.len());
        for s in 0..self.classes.len() {
            if s > 0 {
                v += self.blanks[s - 1] as u64 + 1;
            }
            out.push(v);
        }
        Ok(out)
    }
}

pub fn score(ranking: &CardRanking) -> Result<ScoreTable, DeckError> {
    let scores = ranking.class_scores()?;
    let mut table = ScoreTable::new();
    for (class, v) in ranking.classes.iter().zip(scores) {
        for item in class {
            table.insert(item.clone(), v);
        }
    }
    Ok(table)
}

/// Places `upper` above `lower` with `bridge` blank cards between lower's
/// best class and upper's worst class. Lower's zero level is kept; upper's
/// is dropped.
pub fn merge(lower: &CardRanking, upper: &CardRanking, bridge: u32) -> Result<CardRanking, DeckError> {
    lower.validate()?;
    upper.validate()?;
    let below: BTreeSet<&str> = lower.items().collect();
    if let Some(dup) = upper.items().find(|i| below.contains(i)) {
        return Err(DeckError::Duplicate(dup.to_string()));
    }
    let mut classes = lower.classes.clone();
    classes.extend(upper.classes.iter().cloned());
    let mut blanks = lower.blanks.clone();
    blanks.push(bridge);
    blanks.extend(&upper.blanks);
    Ok(CardRanking {
        classes,
        blanks,
        zero_gap: lower.zero_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(classes: &[&[&str]], blanks: &[u32], zero_gap: u32) -> CardRanking {
        CardRanking {
            classes: classes
                .iter()
                .map(|c| c.iter().map(|s| s.to_string()).collect())
                .collect(),
            blanks: blanks.to_vec(),
            zero_gap,
        }
    }

    #[test]
    fn singleton_classes_without_blanks() {
        let r = CardRanking::from_order(["a", "b", "c"]);
        let s = score(&r).unwrap();
        assert_eq!((s["a"], s["b"], s["c"]), (1, 2, 3));
    }

    #[test]
    fn ties_share_a_score() {
        let r = ranking(&[&["a", "b"], &["c"]], &[4], 1);
        let s = score(&r).unwrap();
        assert_eq!((s["a"], s["b"], s["c"]), (2, 2, 7));
    }

    #[test]
    fn malformed_rankings() {
        assert_eq!(score(&ranking(&[], &[], 0)), Err(DeckError::Empty));
        assert_eq!(score(&ranking(&[&["a"], &[]], &[0], 0)), Err(DeckError::EmptyClass(1)));
        assert_eq!(
            score(&ranking(&[&["a"], &["b"]], &[], 0)),
            Err(DeckError::BlankCount { expected: 1, got: 0 })
        );
        assert_eq!(
            score(&ranking(&[&["a"], &["a"]], &[0], 0)),
            Err(DeckError::Duplicate("a".into()))
        );
    }

    #[test]
    fn merge_of_two_singletons() {
        let m = merge(&ranking(&[&["a"]], &[], 0), &ranking(&[&["b"]], &[], 3), 0).unwrap();
        let s = score(&m).unwrap();
        assert_eq!(s["b"] - s["a"], 1);
        assert_eq!(m.classes.len(), 2);
    }

    #[test]
    fn merge_rejects_overlap_and_empty() {
        let a = ranking(&[&["a"]], &[], 0);
        assert!(matches!(merge(&a, &a, 1), Err(DeckError::Duplicate(_))));
        assert!(matches!(merge(&a, &ranking(&[], &[], 0), 1), Err(DeckError::Empty)));
    }

    #[test]
    fn json_layout() {
        let r: CardRanking = serde_json::from_str(
            r#"{"classes":[["x8"],["x7"],["x5"],["x6"]],"blanks":[3,2,5],"zero_gap":2}"#,
        )
        .unwrap();
        let s = score(&r).unwrap();
        assert_eq!((s["x8"], s["x7"], s["x5"], s["x6"]), (3, 7, 10, 16));
    }
}
