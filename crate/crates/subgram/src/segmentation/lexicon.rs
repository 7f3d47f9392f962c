//! External segmentation lexicons: the interchange format for supervised
//! and unsupervised morphological segmenter outputs.
//!
//! File format, one word per line:
//! `word<TAB>sub1 sub2 ...<TAB>tag1 tag2 ...` — the tag column is present
//! for supervised segmenters and absent otherwise.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Tag assigned to a word that falls back to a single-unit segmentation.
pub const FALLBACK_TAG: &str = "root";
/// Tag assigned to an inserted whole-word token.
pub const WORD_TOKEN_TAG: &str = "word";

#[derive(Debug, Clone)]
struct LexiconEntry {
    subwords: Vec<String>,
    tags: Option<Vec<String>>,
}

/// Word -> segmentation map loaded from a segmenter output file.
#[derive(Debug, Clone)]
pub struct SegmentationLexicon {
    entries: HashMap<String, LexiconEntry>,
    tagged: bool,
}

impl SegmentationLexicon {
    pub fn load(path: &Path) -> Result<SegmentationLexicon> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut entries = HashMap::new();
        let mut tagged: Option<bool> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::parse(
                    path,
                    format!("line {}: expected 2 or 3 tab-separated columns", lineno + 1),
                ));
            }
            let word = fields[0].to_string();
            let subwords: Vec<String> = fields[1].split_whitespace().map(str::to_string).collect();
            if subwords.is_empty() {
                return Err(Error::parse(
                    path,
                    format!("line {}: empty segmentation", lineno + 1),
                ));
            }
            let tags = if fields.len() == 3 {
                let tags: Vec<String> = fields[2].split_whitespace().map(str::to_string).collect();
                if tags.len() != subwords.len() {
                    return Err(Error::parse(
                        path,
                        format!(
                            "line {}: {} tags for {} subwords",
                            lineno + 1,
                            tags.len(),
                            subwords.len()
                        ),
                    ));
                }
                Some(tags)
            } else {
                None
            };
            let has_tags = tags.is_some();
            match tagged {
                None => tagged = Some(has_tags),
                Some(t) if t != has_tags => {
                    return Err(Error::parse(
                        path,
                        format!("line {}: mixed tagged and untagged entries", lineno + 1),
                    ));
                }
                Some(_) => {}
            }
            entries.insert(word, LexiconEntry { subwords, tags });
        }
        if entries.is_empty() {
            return Err(Error::parse(path, "empty lexicon"));
        }
        Ok(SegmentationLexicon {
            entries,
            tagged: tagged.unwrap_or(false),
        })
    }

    /// Builds a lexicon in memory; all entries must agree on tag presence.
    pub fn from_entries<I>(items: I) -> Result<SegmentationLexicon>
    where
        I: IntoIterator<Item = (String, Vec<String>, Option<Vec<String>>)>,
    {
        let mut entries = HashMap::new();
        let mut tagged: Option<bool> = None;
        for (word, subwords, tags) in items {
            if let Some(tags) = &tags {
                if tags.len() != subwords.len() {
                    return Err(Error::InvalidConfig(format!(
                        "lexicon entry `{word}`: tag and subword counts differ"
                    )));
                }
            }
            let has_tags = tags.is_some();
            if *tagged.get_or_insert(has_tags) != has_tags {
                return Err(Error::InvalidConfig(
                    "mixed tagged and untagged lexicon entries".into(),
                ));
            }
            entries.insert(word, LexiconEntry { subwords, tags });
        }
        if entries.is_empty() {
            return Err(Error::InvalidConfig("empty lexicon".into()));
        }
        Ok(SegmentationLexicon {
            entries,
            tagged: tagged.unwrap_or(false),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        for word in words {
            let entry = &self.entries[word];
            match &entry.tags {
                Some(tags) => writeln!(
                    out,
                    "{word}\t{}\t{}",
                    entry.subwords.join(" "),
                    tags.join(" ")
                ),
                None => writeln!(out, "{word}\t{}", entry.subwords.join(" ")),
            }
            .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn is_tagged(&self) -> bool {
        self.tagged
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact lookup; a miss falls back to the whole word as a single
    /// `root`-tagged unit so OOV words never fail.
    pub fn segment(&self, word: &str) -> (Vec<String>, Option<Vec<String>>) {
        match self.entries.get(word) {
            Some(entry) => (entry.subwords.clone(), entry.tags.clone()),
            None => (
                vec![word.to_string()],
                self.tagged.then(|| vec![FALLBACK_TAG.to_string()]),
            ),
        }
    }

    /// Sorted set of all tags in the lexicon plus the fallback and
    /// word-token tags. Empty for untagged lexicons.
    pub fn tag_inventory(&self) -> Vec<String> {
        if !self.tagged {
            return Vec::new();
        }
        let mut tags: BTreeSet<String> = self
            .entries
            .values()
            .flat_map(|e| e.tags.iter().flatten().cloned())
            .collect();
        tags.insert(FALLBACK_TAG.to_string());
        tags.insert(WORD_TOKEN_TAG.to_string());
        tags.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SegmentationLexicon {
        SegmentationLexicon::from_entries([
            (
                "dishonestly".to_string(),
                vec!["dis".into(), "honest".into(), "ly".into()],
                Some(vec!["prefix".into(), "root".into(), "suffix".into()]),
            ),
            (
                "unkind".to_string(),
                vec!["un".into(), "kind".into()],
                Some(vec!["prefix".into(), "root".into()]),
            ),
        ])
        .unwrap()
    }

    #[test]
    fn supervised_lookup() {
        let lex = sample();
        let (subwords, tags) = lex.segment("dishonestly");
        assert_eq!(subwords, vec!["dis", "honest", "ly"]);
        assert_eq!(tags.unwrap(), vec!["prefix", "root", "suffix"]);
    }

    #[test]
    fn unsupervised_lookup() {
        let lex = SegmentationLexicon::from_entries([(
            "dishonestly".to_string(),
            vec!["dishonest".into(), "ly".into()],
            None,
        )])
        .unwrap();
        let (subwords, tags) = lex.segment("dishonestly");
        assert_eq!(subwords, vec!["dishonest", "ly"]);
        assert!(tags.is_none());
    }

    #[test]
    fn miss_falls_back_to_whole_word() {
        let lex = sample();
        let (subwords, tags) = lex.segment("zzzz");
        assert_eq!(subwords, vec!["zzzz"]);
        assert_eq!(tags.unwrap(), vec![FALLBACK_TAG]);
    }

    #[test]
    fn tag_inventory_includes_fallback_and_word() {
        let tags = sample().tag_inventory();
        assert_eq!(tags, vec!["prefix", "root", "suffix", "word"]);
    }

    #[test]
    fn file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.txt");
        sample().save(&path).unwrap();
        let loaded = SegmentationLexicon::load(&path).unwrap();
        assert!(loaded.is_tagged());
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.segment("unkind").0, vec!["un", "kind"]);

        // Tag/subword arity mismatch is rejected.
        std::fs::write(&path, "w\ta b\tx\n").unwrap();
        assert!(SegmentationLexicon::load(&path).is_err());
        // Mixed tagged/untagged entries are rejected.
        std::fs::write(&path, "w\ta b\tx y\nv\tc d\n").unwrap();
        assert!(SegmentationLexicon::load(&path).is_err());
    }
}
