//! Byte pair encoding: merge-rule learning over a weighted word-type
//! corpus and greedy rule application.
//!
//! Each word is split into characters followed by a terminal `</w>`
//! marker, so learned merges can distinguish suffixes from word-internal
//! fragments. The marker is stripped from emitted subword surfaces.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Terminal symbol appended to every word before merging.
pub const WORD_END: &str = "</w>";

/// Ordered list of merge rules; rank = list index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

impl MergeTable {
    pub fn new(merges: Vec<(String, String)>) -> MergeTable {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MergeTable { merges, ranks }
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks
            .get(&(left.to_string(), right.to_string()))
            .copied()
    }

    /// One merge per line, `left<SPACE>right`, rank = line number.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (left, right) in &self.merges {
            writeln!(out, "{left} {right}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<MergeTable> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut merges = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (left, right) = line.split_once(' ').ok_or_else(|| {
                Error::parse(path, format!("line {}: expected `left right`", lineno + 1))
            })?;
            merges.push((left.to_string(), right.to_string()));
        }
        Ok(MergeTable::new(merges))
    }
}

/// Tie-break key: the bare end-of-word marker sorts after every other
/// symbol so that character merges win ties against marker merges.
fn symbol_key(s: &str) -> (bool, &str) {
    (s == WORD_END, s)
}

fn pair_key(pair: &(String, String)) -> ((bool, &str), (bool, &str)) {
    (symbol_key(&pair.0), symbol_key(&pair.1))
}

/// Heap entry ordered by count descending, then lexicographically
/// smallest pair first (with the marker sorting last).
struct Candidate {
    count: u64,
    pair: (String, String),
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.count == other.count && self.pair == other.pair
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| pair_key(&other.pair).cmp(&pair_key(&self.pair)))
    }
}

fn word_symbols(word: &str) -> Vec<String> {
    word.chars()
        .map(|c| c.to_string())
        .chain(std::iter::once(WORD_END.to_string()))
        .collect()
}

/// Learns up to `n_merges` merge rules from word types weighted by their
/// corpus counts. Each rule is the most frequent adjacent symbol pair
/// after applying all earlier rules; training stops early once no pair
/// occurs at least twice.
pub fn train_bpe(counts: &HashMap<String, u64>, n_merges: usize) -> Result<MergeTable> {
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut words: Vec<(Vec<String>, u64)> = counts
        .iter()
        .filter(|(w, &c)| !w.is_empty() && c > 0)
        .map(|(w, &c)| (word_symbols(w), c))
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut pair_counts: HashMap<(String, String), u64> = HashMap::new();
    let mut occurs_in: HashMap<(String, String), HashSet<usize>> = HashMap::new();
    for (idx, (symbols, count)) in words.iter().enumerate() {
        for window in symbols.windows(2) {
            let pair = (window[0].clone(), window[1].clone());
            *pair_counts.entry(pair.clone()).or_insert(0) += count;
            occurs_in.entry(pair).or_default().insert(idx);
        }
    }
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(pair, &count)| Candidate {
            count,
            pair: pair.clone(),
        })
        .collect();

    let mut merges = Vec::new();
    while merges.len() < n_merges {
        // Pop until the top entry reflects a current count.
        let best = loop {
            match heap.pop() {
                Some(c) if pair_counts.get(&c.pair) == Some(&c.count) => break Some(c),
                Some(_) => continue,
                None => break None,
            }
        };
        let best = match best {
            Some(c) if c.count >= 2 => c,
            _ => break,
        };
        let (left, right) = best.pair.clone();
        let merged = format!("{left}{right}");
        merges.push((left.clone(), right.clone()));

        let affected = occurs_in.remove(&best.pair).unwrap_or_default();
        let mut touched: HashSet<(String, String)> = HashSet::new();
        for idx in affected {
            let count = words[idx].1;
            let symbols = &mut words[idx].0;
            if !symbols.windows(2).any(|w| w[0] == left && w[1] == right) {
                continue; // stale occurrence record
            }
            // Retract the word's old pair statistics, merge, re-add.
            for window in symbols.windows(2) {
                let pair = (window[0].clone(), window[1].clone());
                let entry = pair_counts.get_mut(&pair).expect("pair was counted");
                *entry -= count;
                if *entry == 0 {
                    pair_counts.remove(&pair);
                }
                touched.insert(pair);
            }
            merge_in_place(symbols, &left, &right, &merged);
            for window in symbols.windows(2) {
                let pair = (window[0].clone(), window[1].clone());
                *pair_counts.entry(pair.clone()).or_insert(0) += count;
                occurs_in.entry(pair.clone()).or_default().insert(idx);
                touched.insert(pair);
            }
        }
        for pair in touched {
            if let Some(&count) = pair_counts.get(&pair) {
                heap.push(Candidate { count, pair });
            }
        }
    }
    Ok(MergeTable::new(merges))
}

fn merge_in_place(symbols: &mut Vec<String>, left: &str, right: &str, merged: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i] == left && symbols[i + 1] == right {
            symbols[i] = merged.to_string();
            symbols.remove(i + 1);
        } else {
            i += 1;
        }
        // After a merge the new symbol may pair with the next one, so the
        // index is not advanced.
    }
}

/// Segments a word by greedily applying merges in rank order until no
/// rule applies, then strips the end-of-word marker from the surfaces.
pub fn apply_bpe(word: &str, merges: &MergeTable) -> Vec<String> {
    if word.is_empty() {
        return Vec::new();
    }
    let mut symbols = word_symbols(word);
    loop {
        let mut best: Option<(usize, usize)> = None; // (rank, position)
        for (i, window) in symbols.windows(2).enumerate() {
            if let Some(rank) = merges.rank(&window[0], &window[1]) {
                if best.is_none_or(|(r, _)| rank < r) {
                    best = Some((rank, i));
                }
            }
        }
        let Some((rank, _)) = best else { break };
        let (left, right) = merges.merges()[rank].clone();
        let merged = format!("{left}{right}");
        merge_in_place(&mut symbols, &left, &right, &merged);
    }
    symbols
        .into_iter()
        .filter_map(|s| {
            let stripped = s.strip_suffix(WORD_END).unwrap_or(&s);
            if stripped.is_empty() {
                None
            } else {
                Some(stripped.to_string())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(entries: &[(&str, u64)]) -> HashMap<String, u64> {
        entries.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    /// Independent oracle: recount every adjacent pair from scratch after
    /// each merge and pick the winner by the same tie-break.
    fn oracle_merges(counts: &HashMap<String, u64>, n_merges: usize) -> Vec<(String, String)> {
        let mut words: Vec<(Vec<String>, u64)> = counts
            .iter()
            .filter(|(w, &c)| !w.is_empty() && c > 0)
            .map(|(w, &c)| (word_symbols(w), c))
            .collect();
        let mut merges = Vec::new();
        for _ in 0..n_merges {
            let mut tally: HashMap<(String, String), u64> = HashMap::new();
            for (symbols, count) in &words {
                for window in symbols.windows(2) {
                    *tally
                        .entry((window[0].clone(), window[1].clone()))
                        .or_insert(0) += count;
                }
            }
            let best = tally.iter().max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| pair_key(pb).cmp(&pair_key(pa)))
            });
            let Some((pair, &count)) = best else { break };
            if count < 2 {
                break;
            }
            let (left, right) = pair.clone();
            let merged = format!("{left}{right}");
            for (symbols, _) in &mut words {
                merge_in_place(symbols, &left, &right, &merged);
            }
            merges.push((left, right));
        }
        merges
    }

    #[test]
    fn single_pair_corpus() {
        let table = train_bpe(&counts(&[("aa", 3)]), 1).unwrap();
        assert_eq!(table.merges(), &[("a".to_string(), "a".to_string())]);
    }

    #[test]
    fn matches_recount_oracle() {
        let c = counts(&[("low", 5), ("lower", 2), ("lowest", 1)]);
        let table = train_bpe(&c, 2).unwrap();
        assert_eq!(table.merges(), oracle_merges(&c, 2).as_slice());

        let c = counts(&[
            ("hug", 10),
            ("pug", 5),
            ("pun", 12),
            ("bun", 4),
            ("hugs", 5),
        ]);
        let table = train_bpe(&c, 12).unwrap();
        assert_eq!(table.merges(), oracle_merges(&c, 12).as_slice());
    }

    #[test]
    fn merge_count_is_bounded() {
        let c = counts(&[("ababab", 4), ("ba", 9)]);
        let table = train_bpe(&c, 10_000).unwrap();
        assert!(table.len() <= 10_000);
    }

    #[test]
    fn stops_when_no_pair_repeats() {
        let c = counts(&[("ab", 1), ("cd", 1)]);
        let table = train_bpe(&c, 10).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn rejects_empty_corpus() {
        assert!(matches!(
            train_bpe(&HashMap::new(), 5),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn prefix_property() {
        let c = counts(&[("low", 5), ("lower", 2), ("lowest", 3), ("newest", 6)]);
        let full = train_bpe(&c, 12).unwrap();
        for k in 0..full.len() {
            let partial = train_bpe(&c, k).unwrap();
            assert_eq!(partial.merges(), &full.merges()[..k]);
        }
    }

    #[test]
    fn apply_trivial_cases() {
        let empty = MergeTable::default();
        assert_eq!(apply_bpe("a", &empty), vec!["a"]);
        assert_eq!(apply_bpe("abc", &empty), vec!["a", "b", "c"]);

        let table = train_bpe(&counts(&[("abab", 5)]), 3).unwrap();
        assert_eq!(apply_bpe("a", &table), vec!["a"]);
    }

    #[test]
    fn apply_uses_rank_order() {
        // Rules: (a,b) then (ab,c); "abc" must become ["abc"].
        let table = MergeTable::new(vec![("a".into(), "b".into()), ("ab".into(), "c".into())]);
        assert_eq!(apply_bpe("abc", &table), vec!["abc"]);
        // Lower rank applies first even when a higher-rank rule matches
        // earlier in the word.
        let table = MergeTable::new(vec![("b".into(), "c".into()), ("a".into(), "b".into())]);
        assert_eq!(apply_bpe("abc", &table), vec!["a", "bc"]);
    }

    #[test]
    fn save_load_round_trip() {
        let c = counts(&[("low", 5), ("lowest", 4), ("slow", 7)]);
        let table = train_bpe(&c, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("merges.txt");
        table.save(&path).unwrap();
        let loaded = MergeTable::load(&path).unwrap();
        assert_eq!(loaded, table);
        // Applying before and after serialization must agree.
        for word in ["low", "lowest", "slower", "glows"] {
            assert_eq!(apply_bpe(word, &table), apply_bpe(word, &loaded));
        }
        // Byte-exact round trip of the file itself.
        let text = std::fs::read(&path).unwrap();
        let path2 = dir.path().join("merges2.txt");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path2).unwrap(), text);
    }

    proptest! {
        /// Concatenating the segmentation reproduces the word.
        #[test]
        fn segmentation_concatenates_to_word(word in "[a-z]{1,20}") {
            let c = counts(&[("lowest", 5), ("lower", 9), ("widest", 4), ("abba", 3)]);
            let table = train_bpe(&c, 20).unwrap();
            let units = apply_bpe(&word, &table);
            prop_assert_eq!(units.concat(), word);
        }

        #[test]
        fn trainer_matches_oracle_on_random_corpora(
            words in proptest::collection::hash_map("[a-d]{1,6}", 1u64..20, 1..12),
            n in 1usize..15,
        ) {
            let table = train_bpe(&words, n).unwrap();
            let expected = oracle_merges(&words, n);
            prop_assert_eq!(table.merges(), expected.as_slice());
        }
    }
}
