use std::sync::LazyLock;

use regex::Regex;

use super::{RepoRecord, RepoStatus};

macro_rules! re {
    ($name:ident, $pat:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| Regex::new($pat).expect("valid regex"));
    };
}

re!(SCRIPT_STYLE, r"(?is)<(script|style)\b[^>]*>.*?</\s*(script|style)\s*>");
re!(HTML_COMMENT, r"(?s)<!--.*?-->");
re!(AUTOLINK, r"<(?:https?|ftp|mailto):[^>\s]*>");
re!(HTML_TAG, r"</?[A-Za-z][A-Za-z0-9-]*(?:\s[^<>]*)?/?>");
re!(FENCE, r"(?m)^[ \t]*(?:```|~~~)[^\n]*$");
re!(IMAGE, r"!\[([^\]\n]*)\]\([^)\n]*\)");
re!(INLINE_LINK, r"\[([^\]\n]*)\]\([^)\n]*\)");
re!(REF_LINK, r"\[([^\]\n]+)\]\[[^\]\n]*\]");
re!(REF_DEF, r"(?m)^[ \t]*\[[^\]\n]+\]:[ \t]*\S+[^\n]*$");
re!(HEADING, r"(?m)^[ \t]*#{1,6}(?:[ \t]+|$)");
re!(RULE, r"(?m)^[ \t]*(?:(?:[-*_=][ \t]*){3,})$");
re!(BLOCKQUOTE, r"(?m)^[ \t]*(?:>[ \t]?)+");
re!(LIST_MARKER, r"(?m)^[ \t]*(?:[-*+]|\d{1,9}[.)])[ \t]+");
re!(EMPHASIS, r"\*+|~~+|`+|\|");

fn clean_pass(input: &str) -> String {
    let s = SCRIPT_STYLE.replace_all(input, " ");
    let s = HTML_COMMENT.replace_all(&s, " ");
    let s = AUTOLINK.replace_all(&s, " ");
    let s = HTML_TAG.replace_all(&s, " ");
    let s = FENCE.replace_all(&s, "");
    let s = IMAGE.replace_all(&s, "$1");
    let s = INLINE_LINK.replace_all(&s, "$1");
    let s = REF_LINK.replace_all(&s, "$1");
    let s = REF_DEF.replace_all(&s, "");
    let s = RULE.replace_all(&s, "");
    let s = HEADING.replace_all(&s, "");
    let s = BLOCKQUOTE.replace_all(&s, "");
    let s = LIST_MARKER.replace_all(&s, "");
    let s = EMPHASIS.replace_all(&s, " ");
    s.split_whitespace()
        .map(|tok| tok.trim_matches('_'))
        .filter(|tok| !tok.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Strips HTML and Markdown markup from README text.
///
/// Tag contents survive (except inside `script`/`style`), link and image
/// text is kept while URLs are dropped, fenced code bodies stay as plain
/// text, and whitespace runs collapse to single spaces. The result is a
/// fixed point: cleaning it again changes nothing.
pub fn clean_text(raw_markup: &str) -> String {
    let mut current = clean_pass(raw_markup);
    // Each pass only removes characters, so this settles quickly.
    for _ in 0..16 {
        let next = clean_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Phrases that mark a repository as abandoned, matched case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeprecationLexicon {
    phrases: Vec<String>,
}

impl Default for DeprecationLexicon {
    fn default() -> Self {
        Self::new(["no longer maintained", "deprecated", "has been removed", "repository is archived"])
    }
}

impl DeprecationLexicon {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            phrases: phrases
                .into_iter()
                .map(|p| p.as_ref().trim().to_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// The first phrase found in `text`, if any.
    pub fn find(&self, text: &str) -> Option<&str> {
        let lowered = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        self.phrases
            .iter()
            .find(|p| lowered.contains(p.as_str()))
            .map(String::as_str)
    }
}

/// Flags a record as deprecated when its README or description contains a
/// lexicon phrase; otherwise returns it unchanged.
pub fn mark_deprecated(record: &RepoRecord, lexicon: &DeprecationLexicon) -> RepoRecord {
    let hit = lexicon.find(&record.cleaned_readme).is_some() || lexicon.find(record.description_text()).is_some();
    let mut out = record.clone();
    if hit {
        out.status = RepoStatus::Deprecated;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::record;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        assert_eq!(clean_text(""), "");
    }

    #[test]
    fn heading_tags_and_whitespace() {
        assert_eq!(clean_text("# Title\n\n<b>hi</b>   there"), "Title hi there");
    }

    #[test]
    fn links_keep_text_drop_url() {
        assert_eq!(clean_text("[docs](http://x.y) **now**"), "docs now");
    }

    #[test]
    fn images_badges_and_code() {
        let md = "[![Build](https://ci/badge.svg)](https://ci)\n```rust\nfn main() {}\n```\n> quoted _text_ and `code`";
        assert_eq!(clean_text(md), "Build fn main() {} quoted text and code");
    }

    #[test]
    fn script_and_style_bodies_are_dropped() {
        let html = "<p>Keep</p><script>var x = 1;</script><style>p { color: red }</style><!-- note -->done";
        assert_eq!(clean_text(html), "Keep done");
    }

    #[test]
    fn identifiers_with_underscores_survive() {
        assert_eq!(clean_text("call snake_case_fn now"), "call snake_case_fn now");
    }

    #[test]
    fn lists_and_reference_links() {
        let md = "- first item\n* second\n1. third\n\nSee [the guide][g].\n\n[g]: https://example.com/guide";
        assert_eq!(clean_text(md), "first item second third See the guide.");
    }

    #[test]
    fn deprecation_phrases() {
        let lex = DeprecationLexicon::default();
        let mut r = record("a", None);
        r.cleaned_readme = "This repository is no longer maintained".into();
        assert_eq!(mark_deprecated(&r, &lex).status, RepoStatus::Deprecated);

        let mut r = record("b", None);
        r.cleaned_readme = "Fast JSON parser".into();
        assert_eq!(mark_deprecated(&r, &lex).status, RepoStatus::Active);

        let mut r = record("c", None);
        r.description = Some("DEPRECATED — use v2".into());
        assert_eq!(mark_deprecated(&r, &lex).status, RepoStatus::Deprecated);
    }

    #[test]
    fn custom_lexicon() {
        let lex = DeprecationLexicon::new(["moved to"]);
        let mut r = record("a", None);
        r.cleaned_readme = "Project MOVED  TO gitlab".into();
        assert_eq!(mark_deprecated(&r, &lex).status, RepoStatus::Deprecated);
        r.cleaned_readme = "deprecated".into();
        assert_eq!(mark_deprecated(&r, &lex).status, RepoStatus::Active);
    }

    proptest! {
        #[test]
        fn clean_text_is_idempotent(s in "[ -~\\n\\t]{0,200}") {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once.clone());
            prop_assert!(!once.contains("  "));
            prop_assert_eq!(once.trim(), once.as_str());
        }

        #[test]
        fn clean_text_idempotent_on_markup_alphabet(s in "[#*_\\[\\]()<>!`~ab /\\n-]{0,120}") {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once);
        }
    }
}
