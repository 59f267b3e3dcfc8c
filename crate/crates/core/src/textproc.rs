//! Lyric text to vowel sequence matrix: hangul medial extraction for Korean
//! and pronouncing-dictionary lookup for English.

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Alignment unit granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Syllable,
    Word,
}

/// Supported lyric languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Kr,
    En,
}

impl std::str::FromStr for Language {
    type Err = Error;
    fn from_str(s: &str) -> Result<Language> {
        match s.to_ascii_lowercase().as_str() {
            "kr" | "ko" | "korean" => Ok(Language::Kr),
            "en" | "english" => Ok(Language::En),
            other => Err(Error::invalid("language", format!("unknown language `{other}`"))),
        }
    }
}

/// Korean vowel classes, in table order.
pub const KR_CLASSES: [&str; 7] = ["a", "e", "i", "o", "u", "ʌ", "ɯ"];

/// English vowel classes: 10 monophthongs then 5 diphthongs.
pub const EN_CLASSES: [&str; 15] = [
    "ɔ", "ɑ", "i", "u", "ɛ", "ɪ", "ʊ", "ʌ", "ə", "æ", "eɪ", "aɪ", "oʊ", "aʊ", "ɔɪ",
];

/// Ordered vowel-class labels for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VowelClassTable {
    pub language: Language,
    pub classes: Vec<&'static str>,
}

impl VowelClassTable {
    pub fn korean() -> Self {
        VowelClassTable {
            language: Language::Kr,
            classes: KR_CLASSES.to_vec(),
        }
    }

    pub fn english() -> Self {
        VowelClassTable {
            language: Language::En,
            classes: EN_CLASSES.to_vec(),
        }
    }

    pub fn for_language(language: Language) -> Self {
        match language {
            Language::Kr => Self::korean(),
            Language::En => Self::english(),
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|&c| c == label)
    }
}

/// Provenance of one row of the vowel sequence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitRecord {
    pub unit_kind: UnitKind,
    pub source_text: String,
    pub word_index: usize,
    pub syllable_index: usize,
    pub line_index: usize,
}

/// Logical M×L matrix assigning one vowel class to each syllable position.
/// Every row sums to exactly 1.
#[derive(Debug, Clone)]
pub struct VowelSequenceMatrix<T> {
    pub a: Array2<T>,
    pub labels: Vec<usize>,
    pub units: Vec<UnitRecord>,
    pub table: VowelClassTable,
}

impl<T: Real> VowelSequenceMatrix<T> {
    pub fn n_units(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.a.ncols()
    }
}

/// Hangul syllable block range.
const HANGUL_BASE: u32 = 0xAC00;
const HANGUL_LAST: u32 = 0xD7A3;
const MEDIAL_COUNT: u32 = 21;
const FINAL_COUNT: u32 = 28;

/// Medial (jungseong) index to Korean vowel class index. Each of the 21
/// medials folds onto its nucleus monophthong: glide onsets are treated as
/// consonant-like, the nucleus dominates the sung vowel.
/// Order: ㅏㅐㅑㅒㅓㅔㅕㅖㅗㅘㅙㅚㅛㅜㅝㅞㅟㅠㅡㅢㅣ.
const MEDIAL_TO_CLASS: [usize; 21] = [
    0, // ㅏ -> a
    1, // ㅐ -> e
    0, // ㅑ -> a
    1, // ㅒ -> e
    5, // ㅓ -> ʌ
    1, // ㅔ -> e
    5, // ㅕ -> ʌ
    1, // ㅖ -> e
    3, // ㅗ -> o
    0, // ㅘ -> a
    1, // ㅙ -> e
    1, // ㅚ -> e
    3, // ㅛ -> o
    4, // ㅜ -> u
    5, // ㅝ -> ʌ
    1, // ㅞ -> e
    2, // ㅟ -> i
    4, // ㅠ -> u
    6, // ㅡ -> ɯ
    2, // ㅢ -> i
    2, // ㅣ -> i
];

/// Medial index of a hangul syllable code point, or None outside the block.
pub fn medial_index(cp: u32) -> Option<u32> {
    if (HANGUL_BASE..=HANGUL_LAST).contains(&cp) {
        Some(((cp - HANGUL_BASE) / FINAL_COUNT) % MEDIAL_COUNT)
    } else {
        None
    }
}

/// Extract the vowel class of each hangul syllable block in `text`,
/// skipping every other code point. One unit per syllable block.
pub fn decompose_hangul(text: &str) -> Result<(Vec<&'static str>, Vec<UnitRecord>)> {
    let mut labels = Vec::new();
    let mut units = Vec::new();
    for (line_index, line) in text.lines().enumerate() {
        for (word_index, word) in line.split_whitespace().enumerate() {
            let mut syllable_index = 0;
            for ch in word.chars() {
                let Some(medial) = medial_index(ch as u32) else {
                    continue;
                };
                let class = MEDIAL_TO_CLASS[medial as usize];
                labels.push(KR_CLASSES[class]);
                units.push(UnitRecord {
                    unit_kind: UnitKind::Syllable,
                    source_text: ch.to_string(),
                    word_index,
                    syllable_index,
                    line_index,
                });
                syllable_index += 1;
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyVowelSequence);
    }
    Ok((labels, units))
}

/// Pronouncing dictionary: uppercase word to its pronunciations in file
/// order, phones in ARPAbet.
#[derive(Debug, Clone, Default)]
pub struct PronouncingDictionary {
    entries: HashMap<String, Vec<Vec<String>>>,
}

impl PronouncingDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All pronunciations for a word (case-insensitive).
    pub fn lookup(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries.get(&word.to_uppercase()).map(|v| v.as_slice())
    }
}

/// Parse a CMU-format dictionary file: `WORD  PH1 PH2 ...` lines with
/// `WORD(n)` alternates and `;;;` comments.
pub fn load_cmudict(path: &Path) -> Result<PronouncingDictionary> {
    let text = std::fs::read_to_string(path)?;
    parse_cmudict(&text, path)
}

pub fn parse_cmudict(text: &str, origin: &Path) -> Result<PronouncingDictionary> {
    let mut entries: HashMap<String, Vec<Vec<String>>> = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut parts = line.split_whitespace();
        let Some(head) = parts.next() else { continue };
        let word = match head.find('(') {
            Some(pos) => &head[..pos],
            None => head,
        };
        let phones: Vec<String> = parts.map(|p| p.to_string()).collect();
        if phones.is_empty() {
            continue;
        }
        entries.entry(word.to_uppercase()).or_default().push(phones);
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            context: origin.display().to_string(),
            reason: "dictionary has zero entries".to_string(),
        });
    }
    Ok(PronouncingDictionary { entries })
}

/// Map one ARPAbet vowel phone (with optional stress digit) to its class
/// label. Consonant phones return None.
fn arpabet_vowel(phone: &str) -> Option<&'static str> {
    let (base, stress) = match phone.char_indices().last() {
        Some((i, c)) if c.is_ascii_digit() => (&phone[..i], Some(c)),
        _ => (phone, None),
    };
    let label = match base {
        "AO" => "ɔ",
        "AA" => "ɑ",
        "IY" => "i",
        "UW" => "u",
        "EH" => "ɛ",
        "IH" => "ɪ",
        "UH" => "ʊ",
        // Stress disambiguates ARPAbet's collapsed AH: unstressed schwa,
        // stressed strut vowel.
        "AH" => {
            if stress == Some('0') {
                "ə"
            } else {
                "ʌ"
            }
        }
        "ER" => "ə",
        "AE" => "æ",
        "EY" => "eɪ",
        "AY" => "aɪ",
        "OW" => "oʊ",
        "AW" => "aʊ",
        "OY" => "ɔɪ",
        _ => return None,
    };
    Some(label)
}

/// Vowel class labels of a word's first dictionary pronunciation.
pub fn word_to_vowels(word: &str, dict: &PronouncingDictionary) -> Result<Vec<&'static str>> {
    let prons = dict
        .lookup(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    Ok(prons[0].iter().filter_map(|p| arpabet_vowel(p)).collect())
}

/// Strip punctuation from the edges of a lyric token, keeping inner
/// apostrophes.
pub fn clean_word(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
}

/// Extraction result for an English lyric text: one label per vowel slot,
/// plus the words the dictionary did not know (skipped).
pub struct EnglishVowels {
    pub labels: Vec<&'static str>,
    pub units: Vec<UnitRecord>,
    pub oov_words: Vec<String>,
}

/// Convert English lyrics via the pronouncing dictionary. Out-of-vocabulary
/// words are skipped and reported; the caller decides whether that is fatal.
pub fn english_to_vowels(text: &str, dict: &PronouncingDictionary) -> Result<EnglishVowels> {
    let mut labels = Vec::new();
    let mut units = Vec::new();
    let mut oov_words = Vec::new();
    let mut word_index = 0;
    for (line_index, line) in text.lines().enumerate() {
        for token in line.split_whitespace() {
            let word = clean_word(token);
            if word.is_empty() {
                continue;
            }
            match word_to_vowels(word, dict) {
                Ok(vowels) => {
                    for (syllable_index, label) in vowels.into_iter().enumerate() {
                        labels.push(label);
                        units.push(UnitRecord {
                            unit_kind: UnitKind::Syllable,
                            source_text: word.to_string(),
                            word_index,
                            syllable_index,
                            line_index,
                        });
                    }
                    word_index += 1;
                }
                Err(Error::OutOfVocabulary(w)) => {
                    oov_words.push(w);
                    word_index += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyVowelSequence);
    }
    Ok(EnglishVowels {
        labels,
        units,
        oov_words,
    })
}

/// Build the logical matrix A from a label sequence: `A[m, l] = 1` iff the
/// m-th label is class l.
pub fn build_matrix<T: Real>(
    labels: &[&str],
    table: &VowelClassTable,
) -> Result<VowelSequenceMatrix<T>> {
    let units = labels
        .iter()
        .enumerate()
        .map(|(i, l)| UnitRecord {
            unit_kind: UnitKind::Syllable,
            source_text: l.to_string(),
            word_index: i,
            syllable_index: 0,
            line_index: 0,
        })
        .collect();
    build_matrix_with_units(labels, units, table)
}

/// [`build_matrix`] with explicit per-row provenance records.
pub fn build_matrix_with_units<T: Real>(
    labels: &[&str],
    units: Vec<UnitRecord>,
    table: &VowelClassTable,
) -> Result<VowelSequenceMatrix<T>> {
    if labels.is_empty() {
        return Err(Error::EmptyVowelSequence);
    }
    if labels.len() != units.len() {
        return Err(Error::shape(
            "build_matrix",
            format!("{} units", labels.len()),
            format!("{} units", units.len()),
        ));
    }
    let mut indices = Vec::with_capacity(labels.len());
    for &label in labels {
        let idx = table
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        indices.push(idx);
    }
    let mut a = Array2::zeros((labels.len(), table.len()));
    for (m, &l) in indices.iter().enumerate() {
        a[[m, l]] = T::one();
    }
    Ok(VowelSequenceMatrix {
        a,
        labels: indices,
        units,
        table: table.clone(),
    })
}

/// Number of vowel classes with at least one occurrence (L').
pub fn distinct_classes<T: Real>(matrix: &VowelSequenceMatrix<T>) -> usize {
    (0..matrix.a.ncols())
        .filter(|&l| matrix.a.column(l).iter().any(|&v| v > T::zero()))
        .count()
}
