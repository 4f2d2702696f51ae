//! Parsing of free-form chat responses into structured answers.
//!
//! Chat models rarely answer with a bare token, so these parsers scan the
//! text instead of comparing it. They are deliberately conservative: when
//! a response matches nothing it becomes "unparseable" and is excluded
//! from votes rather than guessed at.

use serde::{Deserialize, Serialize};

/// One pair-query response after parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Yes,
    No,
    Unparseable,
}

/// Outcome of majority voting over a pair's trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Yes,
    No,
    Abstain,
}

/// Extracts a yes/no answer: the first standalone `yes` or `no` word
/// (case-insensitive) wins, so "Yes, they do" and "No. Different fields."
/// both parse while "Y" or "maybe" do not.
pub fn parse_yes_no(text: &str) -> Vote {
    for word in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        if word.eq_ignore_ascii_case("yes") {
            return Vote::Yes;
        }
        if word.eq_ignore_ascii_case("no") {
            return Vote::No;
        }
    }
    Vote::Unparseable
}

/// Maps a response onto a class list: the class whose name occurs earliest
/// in the text wins; at equal positions the longer name wins (so a class
/// that is a prefix of another cannot shadow it). Matching ignores case
/// and treats `_` as a space on both sides. Returns `None` when no class
/// name occurs.
pub fn parse_class_label(text: &str, class_names: &[String]) -> Option<usize> {
    let haystack = fold(text);
    let mut best: Option<(usize, usize, usize)> = None; // (pos, -len as sort by len desc, idx)
    for (idx, name) in class_names.iter().enumerate() {
        let needle = fold(name);
        if needle.is_empty() {
            continue;
        }
        if let Some(pos) = haystack.find(&needle) {
            let candidate = (pos, usize::MAX - needle.len(), idx);
            if best.is_none_or(|b| candidate < b) {
                best = Some(candidate);
            }
        }
    }
    best.map(|(_, _, idx)| idx)
}

fn fold(s: &str) -> String {
    s.chars()
        .map(|c| if c == '_' { ' ' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Majority over parsed votes; unparseable responses do not count. A tie,
/// including the all-unparseable case, abstains, leaving the pair out of
/// the ratio instead of inventing an answer.
pub fn majority_vote(votes: &[Vote]) -> Decision {
    let yes = votes.iter().filter(|v| **v == Vote::Yes).count();
    let no = votes.iter().filter(|v| **v == Vote::No).count();
    match yes.cmp(&no) {
        std::cmp::Ordering::Greater => Decision::Yes,
        std::cmp::Ordering::Less => Decision::No,
        std::cmp::Ordering::Equal => Decision::Abstain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn yes_no_variants() {
        assert_eq!(parse_yes_no("Yes"), Vote::Yes);
        assert_eq!(parse_yes_no("yes."), Vote::Yes);
        assert_eq!(parse_yes_no("  YES, same class"), Vote::Yes);
        assert_eq!(parse_yes_no("No"), Vote::No);
        assert_eq!(parse_yes_no("No, they differ."), Vote::No);
        assert_eq!(parse_yes_no("Answer: no"), Vote::No);
    }

    #[test]
    fn yes_no_rejects_ambiguity_and_substrings() {
        assert_eq!(parse_yes_no(""), Vote::Unparseable);
        assert_eq!(parse_yes_no("maybe"), Vote::Unparseable);
        // "Nose" and "yesterday" contain the letters but are not answers.
        assert_eq!(parse_yes_no("Nose to tail"), Vote::Unparseable);
        assert_eq!(parse_yes_no("yesterday"), Vote::Unparseable);
        // First standalone token wins.
        assert_eq!(parse_yes_no("no... well, yes"), Vote::No);
    }

    #[test]
    fn class_label_matches_name_in_prose() {
        let classes: Vec<String> = ["Rule_Learning", "Neural_Networks", "Theory"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            parse_class_label("The category is Neural_Networks.", &classes),
            Some(1)
        );
        // Underscore folding: prose uses spaces.
        assert_eq!(
            parse_class_label("it belongs to neural networks", &classes),
            Some(1)
        );
        assert_eq!(parse_class_label("THEORY", &classes), Some(2));
        assert_eq!(parse_class_label("none of these", &classes), None);
    }

    #[test]
    fn class_label_earliest_then_longest() {
        let classes: Vec<String> = ["Art", "Art History"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        // Both match at position 0; the longer name wins.
        assert_eq!(parse_class_label("Art History it is", &classes), Some(1));
        // Earlier position beats longer name elsewhere.
        assert_eq!(parse_class_label("Art, not Art History", &classes), Some(0));
    }

    #[test]
    fn majority_vote_rules() {
        use Vote::*;
        assert_eq!(majority_vote(&[Yes, Yes, No]), Decision::Yes);
        assert_eq!(majority_vote(&[No, No, Yes, No, Yes]), Decision::No);
        assert_eq!(majority_vote(&[Yes, No]), Decision::Abstain);
        assert_eq!(
            majority_vote(&[Unparseable, Unparseable]),
            Decision::Abstain
        );
        assert_eq!(
            majority_vote(&[Yes, Unparseable, Unparseable]),
            Decision::Yes
        );
        assert_eq!(majority_vote(&[]), Decision::Abstain);
    }

    proptest! {
        #[test]
        fn majority_vote_is_order_invariant(mut votes in proptest::collection::vec(
            prop_oneof![Just(Vote::Yes), Just(Vote::No), Just(Vote::Unparseable)], 0..9)
        ) {
            let before = majority_vote(&votes);
            votes.reverse();
            prop_assert_eq!(majority_vote(&votes), before);
        }

        #[test]
        fn majority_vote_matches_counting(votes in proptest::collection::vec(
            prop_oneof![Just(Vote::Yes), Just(Vote::No), Just(Vote::Unparseable)], 0..9)
        ) {
            let yes = votes.iter().filter(|v| **v == Vote::Yes).count();
            let no = votes.iter().filter(|v| **v == Vote::No).count();
            let expected = if yes > no { Decision::Yes } else if no > yes { Decision::No } else { Decision::Abstain };
            prop_assert_eq!(majority_vote(&votes), expected);
        }

        #[test]
        fn parse_yes_no_never_panics(s in "\\PC*") {
            let _ = parse_yes_no(&s);
        }
    }
}
