//! Tokenization, vocabulary construction, labeled datasets and synonym
//! augmentation.
//!
//! Text is split on whitespace and punctuation and lowercased. A
//! [`UserDictionary`] may be supplied to glue multi-token terms back together
//! with a greedy longest match, so that a term such as `acute brain syndrome`
//! survives as a single token.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

/// Token id used for words that are not in the vocabulary.
pub const OOV: usize = usize::MAX;

/// Separator placed between the parts of a dictionary term that was merged
/// into one token.
pub const TERM_JOINER: &str = " ";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("vocabulary is empty after applying min_count = {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("a labeled dataset needs at least two classes, found {found}")]
    TooFewClasses { found: usize },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("dictionary line {line}: empty entry")]
    EmptyDictionaryEntry { line: usize },
    #[error("dictionary line {line}: duplicate entry `{term}`")]
    DuplicateDictionaryEntry { line: usize, term: String },
    #[error("synonym line {line}: `{word}` is listed as its own synonym")]
    SelfSynonym { line: usize, word: String },
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

type Result<T> = std::result::Result<T, CorpusError>;

/// Multi-token terms that tokenization keeps together.
#[derive(Debug, Clone, Default)]
pub struct UserDictionary {
    terms: HashSet<String>,
    longest: usize,
}

impl UserDictionary {
    /// Builds a dictionary from raw terms; each term is tokenized with the
    /// plain tokenizer so that matching is insensitive to case and spacing.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut dict = UserDictionary::default();
        for (i, term) in terms.into_iter().enumerate() {
            dict.insert(term.as_ref(), i + 1)?;
        }
        Ok(dict)
    }

    fn insert(&mut self, term: &str, line: usize) -> Result<()> {
        let parts = split_plain(term);
        if parts.is_empty() {
            return Err(CorpusError::EmptyDictionaryEntry { line });
        }
        let joined = parts.join(TERM_JOINER);
        if !self.terms.insert(joined.clone()) {
            return Err(CorpusError::DuplicateDictionaryEntry { line, term: joined });
        }
        self.longest = self.longest.max(parts.len());
        Ok(())
    }

    /// Reads one term per line. Blank lines are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut dict = UserDictionary::default();
        for (i, line) in read_lines(path)?.into_iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            dict.insert(&line, i + 1)?;
        }
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }
}

fn split_plain(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits `text` into lowercased tokens. With a dictionary, the longest run
/// of consecutive tokens that forms a dictionary term is merged first.
pub fn tokenize(text: &str, dict: Option<&UserDictionary>) -> Vec<String> {
    let plain = split_plain(text);
    let dict = match dict {
        Some(d) if d.longest > 1 => d,
        _ => return plain,
    };

    let mut out = Vec::with_capacity(plain.len());
    let mut i = 0;
    while i < plain.len() {
        let max_span = dict.longest.min(plain.len() - i);
        let matched = (2..=max_span).rev().find_map(|span| {
            let candidate = plain[i..i + span].join(TERM_JOINER);
            dict.contains(&candidate).then_some((span, candidate))
        });
        match matched {
            Some((span, term)) => {
                out.push(term);
                i += span;
            }
            None => {
                out.push(plain[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Bidirectional word/id map with corpus frequencies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from words in id order. Every count must be at
    /// least 1 and words must be unique.
    pub fn from_words_and_counts(words: Vec<String>, counts: Vec<u64>) -> Option<Self> {
        if words.len() != counts.len() || counts.contains(&0) {
            return None;
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return None;
            }
        }
        Some(Vocabulary {
            words,
            counts,
            index,
        })
    }

    /// Vocabulary of words with unknown frequencies (each counted once).
    pub fn from_words(words: Vec<String>) -> Option<Self> {
        let counts = vec![1; words.len()];
        Self::from_words_and_counts(words, counts)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn count(&self, id: usize) -> Option<u64> {
        self.counts.get(id).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Maps tokens to ids, using [`OOV`] for unknown tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(OOV))
            .collect()
    }

    /// Maps ids back to words; unknown ids become `<unk>`.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&id| self.word(id).unwrap_or("<unk>").to_string())
            .collect()
    }
}

/// Counts tokens and keeps those seen at least `min_count` times. Ids are
/// assigned by descending frequency, ties broken lexicographically.
pub fn build_vocabulary<S: AsRef<str>>(sentences: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(CorpusError::InvalidMinCount);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for sentence in sentences {
        for token in sentence {
            *counts.entry(token.as_ref()).or_default() += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    if entries.is_empty() {
        return Err(CorpusError::EmptyVocabulary { min_count });
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let (words, counts): (Vec<String>, Vec<u64>) =
        entries.into_iter().map(|(w, c)| (w.to_string(), c)).unzip();
    Ok(
        Vocabulary::from_words_and_counts(words, counts)
            .expect("unique words with positive counts"),
    )
}

/// Unlabeled sentences as id sequences, for embedding training.
#[derive(Debug, Clone)]
pub struct TokenizedCorpus {
    sentences: Vec<Vec<usize>>,
    vocabulary: Vocabulary,
}

impl TokenizedCorpus {
    /// Encodes sentences against `vocabulary`. Tokens outside the vocabulary
    /// are dropped, and sentences left empty are not stored.
    pub fn new<S: AsRef<str>>(sentences: &[Vec<S>], vocabulary: Vocabulary) -> Self {
        let sentences = sentences
            .iter()
            .map(|s| {
                s.iter()
                    .filter_map(|t| vocabulary.id(t.as_ref()))
                    .collect::<Vec<_>>()
            })
            .filter(|s| !s.is_empty())
            .collect();
        TokenizedCorpus {
            sentences,
            vocabulary,
        }
    }

    /// Builds a corpus from id sequences that already refer to `vocabulary`.
    /// Panics if an id is out of range.
    pub fn from_ids(sentences: Vec<Vec<usize>>, vocabulary: Vocabulary) -> Self {
        assert!(
            sentences.iter().flatten().all(|&id| id < vocabulary.len()),
            "token id out of range"
        );
        let sentences = sentences.into_iter().filter(|s| !s.is_empty()).collect();
        TokenizedCorpus {
            sentences,
            vocabulary,
        }
    }

    /// Tokenizes raw text lines and builds the vocabulary from them.
    pub fn from_texts<S: AsRef<str>>(
        texts: &[S],
        dict: Option<&UserDictionary>,
        min_count: u64,
    ) -> Result<Self> {
        let tokenized: Vec<Vec<String>> =
            texts.iter().map(|t| tokenize(t.as_ref(), dict)).collect();
        let vocab = build_vocabulary(&tokenized, min_count)?;
        Ok(Self::new(&tokenized, vocab))
    }

    pub fn sentences(&self) -> &[Vec<usize>] {
        &self.sentences
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Example with its label still in string form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedExample {
    pub label: String,
    pub tokens: Vec<String>,
}

impl TokenizedExample {
    pub fn new(label: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenizedExample {
            label: label.into(),
            tokens,
        }
    }
}

/// Lexicographically ordered label names mapped to `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let names: BTreeSet<String> = labels.into_iter().map(|l| l.as_ref().to_string()).collect();
        if names.len() < 2 {
            return Err(CorpusError::TooFewClasses { found: names.len() });
        }
        Ok(LabelSet {
            names: names.into_iter().collect(),
        })
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(label)).ok()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub label: usize,
}

/// Examples as id sequences with integer labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    pub examples: Vec<Example>,
    pub num_classes: usize,
    pub label_names: Vec<String>,
    pub oov_marker: usize,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Dataset with the examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            num_classes: self.num_classes,
            label_names: self.label_names.clone(),
            oov_marker: self.oov_marker,
        }
    }
}

/// Result of encoding, with the number of examples dropped for having no
/// tokens.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub dataset: LabeledDataset,
    pub skipped_empty: usize,
}

/// Encodes tokenized examples with an existing label set. Examples with no
/// tokens are skipped and counted; examples whose tokens are all unknown are
/// kept.
pub fn encode_tokenized(
    examples: &[TokenizedExample],
    vocab: &Vocabulary,
    labels: &LabelSet,
) -> Result<EncodedDataset> {
    let mut out = Vec::with_capacity(examples.len());
    let mut skipped = 0;
    for ex in examples {
        let label = labels
            .id(&ex.label)
            .ok_or_else(|| CorpusError::UnknownLabel(ex.label.clone()))?;
        if ex.tokens.is_empty() {
            skipped += 1;
            continue;
        }
        out.push(Example {
            tokens: vocab.encode(&ex.tokens),
            label,
        });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} example(s) with empty text");
    }
    Ok(EncodedDataset {
        dataset: LabeledDataset {
            examples: out,
            num_classes: labels.len(),
            label_names: labels.names().to_vec(),
            oov_marker: OOV,
        },
        skipped_empty: skipped,
    })
}

/// Tokenizes and encodes `(label, text)` pairs. Labels are numbered in
/// lexicographic order.
pub fn encode_dataset<L: AsRef<str>, T: AsRef<str>>(
    raw: &[(L, T)],
    vocab: &Vocabulary,
    dict: Option<&UserDictionary>,
) -> Result<EncodedDataset> {
    let examples: Vec<TokenizedExample> = raw
        .iter()
        .map(|(l, t)| TokenizedExample::new(l.as_ref(), tokenize(t.as_ref(), dict)))
        .collect();
    let labels = LabelSet::from_labels(examples.iter().map(|e| e.label.as_str()))?;
    encode_tokenized(&examples, vocab, &labels)
}

/// Word to synonym lists, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    map: HashMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `synonym` for `word`. Both are lowercased; repeated pairs are
    /// ignored. A word may not be its own synonym.
    pub fn insert(&mut self, word: &str, synonym: &str) -> std::result::Result<(), String> {
        let word = word.trim().to_lowercase();
        let synonym = synonym.trim().to_lowercase();
        if word == synonym {
            return Err(word);
        }
        let list = self.map.entry(word).or_default();
        if !list.contains(&synonym) {
            list.push(synonym);
        }
        Ok(())
    }

    /// Reads `word<TAB>synonym` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut table = SynonymTable::new();
        for (i, line) in read_lines(path)?.into_iter().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, syn) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: "expected `word<TAB>synonym`".into(),
            })?;
            table
                .insert(word, syn)
                .map_err(|word| CorpusError::SelfSynonym { line: i + 1, word })?;
        }
        Ok(table)
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.map.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Adds synonym-substituted copies of each example. Every new example swaps
/// exactly one position for one synonym; positions are visited left to right
/// and synonyms in table order until `max_new_per_example` copies exist.
/// Originals are kept and each is followed by its copies.
pub fn augment_with_synonyms(
    dataset: &[TokenizedExample],
    table: &SynonymTable,
    max_new_per_example: usize,
) -> Vec<TokenizedExample> {
    let mut out = Vec::with_capacity(dataset.len());
    for ex in dataset {
        out.push(ex.clone());
        let mut added = 0;
        'positions: for (pos, token) in ex.tokens.iter().enumerate() {
            for syn in table.synonyms(token) {
                if added == max_new_per_example {
                    break 'positions;
                }
                let mut tokens = ex.tokens.clone();
                tokens[pos] = syn.clone();
                out.push(TokenizedExample {
                    label: ex.label.clone(),
                    tokens,
                });
                added += 1;
            }
        }
    }
    out
}

/// Raw `(label, text)` pairs read from a dataset file.
pub type RawDataset = Vec<(String, String)>;

/// Reads a `label<TAB>text` file. Lines starting with `#` and blank lines are
/// ignored. A line with a label but empty text is kept (encoding skips it).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            file: path.display().to_string(),
            line: i + 1,
            message: "expected `label<TAB>text`".into(),
        })?;
        let label = label.trim();
        if label.is_empty() {
            return Err(CorpusError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: "empty label".into(),
            });
        }
        out.push((label.to_string(), text.to_string()));
    }
    Ok(out)
}

/// Reads a text file as lines.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    BufReader::new(file)
        .lines()
        .collect::<io::Result<Vec<_>>>()
        .map_err(io_err)
}
