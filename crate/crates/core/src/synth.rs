//! Synthetic labeled corpora with a known set of planted dangerous words.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean, LabeledCorpus, RawLists};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_vulnerable: usize,
    pub n_benign: usize,
    /// Words whose presence marks a vulnerable name.
    pub planted_dangerous: Vec<String>,
    /// Size of each class's background vocabulary.
    pub vocab_size: usize,
    pub min_terms: usize,
    pub max_terms: usize,
    /// Probability that a vulnerable name carries a dangerous word.
    pub signal_strength: f64,
    /// Fraction of the background vocabulary shared by both classes; 0 makes
    /// the vocabularies disjoint.
    pub overlap: f64,
    /// Probability that a signal-carrying name uses a fresh, never repeated
    /// word instead of a planted one. Higher values mean a more varied
    /// dangerous vocabulary.
    pub diversity: f64,
    /// Join terms in camelCase instead of with underscores.
    pub camel_case: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            n_vulnerable: 40,
            n_benign: 200,
            planted_dangerous: ["overflow", "parse", "copy", "decode", "read"]
                .map(String::from)
                .to_vec(),
            vocab_size: 60,
            min_terms: 2,
            max_terms: 4,
            signal_strength: 1.0,
            overlap: 1.0,
            diversity: 0.0,
            camel_case: false,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synth(m));
        for (name, p) in [
            ("signal_strength", self.signal_strength),
            ("overlap", self.overlap),
            ("diversity", self.diversity),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        if self.n_vulnerable == 0 || self.n_benign == 0 {
            return bad("name counts must be positive".into());
        }
        if self.min_terms == 0 || self.min_terms > self.max_terms {
            return bad(format!(
                "terms per name must satisfy 1 <= min <= max, got {}..={}",
                self.min_terms, self.max_terms
            ));
        }
        if self.vocab_size < self.max_terms {
            return bad(format!(
                "vocabulary of {} words is too small for names of {} terms",
                self.vocab_size, self.max_terms
            ));
        }
        if self.signal_strength > 0.0 && self.planted_dangerous.is_empty() && self.diversity < 1.0 {
            return bad("signal requested but no planted words given".into());
        }
        for w in &self.planted_dangerous {
            if w.is_empty() || !w.chars().all(|c| c.is_ascii_lowercase()) {
                return bad(format!("planted word `{w}` must be non-empty lowercase ASCII"));
            }
            if w.starts_with('w') && w.len() == 4 || w.starts_with('f') && w.len() == 5 {
                return bad(format!("planted word `{w}` may collide with generated vocabulary"));
            }
        }
        Ok(())
    }
}

/// Lowercase letters-only word for index `i` with the given prefix and width.
fn coded_word(prefix: char, mut i: usize, width: usize) -> String {
    let mut letters = vec![b'a'; width];
    for slot in letters.iter_mut().rev() {
        *slot = b'a' + (i % 26) as u8;
        i /= 26;
    }
    let mut s = String::with_capacity(width + 1);
    s.push(prefix);
    s.push_str(std::str::from_utf8(&letters).expect("ascii"));
    s
}

fn join(terms: &[String], camel: bool) -> String {
    if !camel {
        return terms.join("_");
    }
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        if i == 0 {
            out.push_str(t);
        } else {
            let mut chars = t.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        }
    }
    out
}

/// A generated corpus and the dangerous words planted in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub corpus: LabeledCorpus,
    pub planted: BTreeSet<String>,
}

/// Generates a corpus; identical specs give identical corpora.
pub fn generate(spec: &SynthSpec) -> Result<Synthesized> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let shared = (spec.overlap * spec.vocab_size as f64).round() as usize;
    let words: Vec<String> = (0..2 * spec.vocab_size - shared)
        .map(|i| coded_word('w', i, 3))
        .collect();
    let vulnerable_vocab = &words[..spec.vocab_size];
    let benign_vocab = &words[spec.vocab_size - shared..];
    let planted: Vec<String> = spec.planted_dangerous.clone();

    let mut fresh = 0usize;
    let mut make_name = |rng: &mut ChaCha8Rng, vocab: &[String], signal: bool| -> Vec<String> {
        let n = rng.gen_range(spec.min_terms..=spec.max_terms);
        let mut terms: Vec<String> = vocab.choose_multiple(rng, n).cloned().collect();
        if signal {
            let word = if planted.is_empty() || rng.gen_bool(spec.diversity) {
                fresh += 1;
                coded_word('f', fresh, 4)
            } else {
                planted.choose(rng).expect("non-empty").clone()
            };
            let slot = rng.gen_range(0..terms.len());
            terms[slot] = word;
        }
        terms
    };

    let attempts = 100 * (spec.n_vulnerable + spec.n_benign);
    let mut vulnerable = BTreeSet::new();
    let mut tries = 0;
    while vulnerable.len() < spec.n_vulnerable {
        let signal = rng.gen_bool(spec.signal_strength);
        vulnerable.insert(join(&make_name(&mut rng, vulnerable_vocab, signal), spec.camel_case));
        tries += 1;
        if tries > attempts {
            return Err(Error::Synth(format!(
                "vocabulary too small for {} distinct vulnerable names",
                spec.n_vulnerable
            )));
        }
    }
    let mut benign = BTreeSet::new();
    tries = 0;
    while benign.len() < spec.n_benign {
        let name = join(&make_name(&mut rng, benign_vocab, false), spec.camel_case);
        if !vulnerable.contains(&name) {
            benign.insert(name);
        }
        tries += 1;
        if tries > attempts {
            return Err(Error::Synth(format!(
                "vocabulary too small for {} distinct benign names",
                spec.n_benign
            )));
        }
    }

    let corpus = clean(&RawLists {
        vulnerable: vulnerable.into_iter().collect(),
        benign: benign.into_iter().collect(),
        source_label: format!("synth-{}", spec.seed),
    })?;
    Ok(Synthesized {
        corpus,
        planted: spec.planted_dangerous.iter().cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitter::split;

    #[test]
    fn deterministic() {
        let spec = SynthSpec::default();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec {
            seed: 1,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap().corpus, generate(&other).unwrap().corpus);
    }

    #[test]
    fn sizes_and_signal() {
        let s = generate(&SynthSpec::default()).unwrap();
        assert_eq!(s.corpus.vulnerable().len(), 40);
        assert_eq!(s.corpus.benign().len(), 200);
        for name in s.corpus.vulnerable() {
            assert!(split(name).iter().any(|t| s.planted.contains(t)), "{name}");
        }
        for name in s.corpus.benign() {
            assert!(!split(name).iter().any(|t| s.planted.contains(t)), "{name}");
        }
    }

    #[test]
    fn disjoint_vocabularies() {
        let s = generate(&SynthSpec {
            overlap: 0.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let v: BTreeSet<String> = s.corpus.vulnerable().iter().flat_map(|n| split(n)).collect();
        let b: BTreeSet<String> = s.corpus.benign().iter().flat_map(|n| split(n)).collect();
        assert!(v.is_disjoint(&b));
    }

    #[test]
    fn camel_case_names_split_back() {
        let s = generate(&SynthSpec {
            camel_case: true,
            ..SynthSpec::default()
        })
        .unwrap();
        for name in s.corpus.vulnerable() {
            assert!(!name.contains('_'));
            let terms = crate::splitter::split_with(name, crate::splitter::SplitOptions { fold_case: true });
            assert!(terms.iter().any(|t| s.planted.contains(t)), "{name}");
        }
    }

    #[test]
    fn invalid_specs() {
        let base = SynthSpec::default();
        assert!(generate(&SynthSpec {
            vocab_size: 3,
            ..base.clone()
        })
        .is_err());
        assert!(generate(&SynthSpec {
            signal_strength: 1.5,
            ..base.clone()
        })
        .is_err());
        assert!(generate(&SynthSpec {
            min_terms: 0,
            ..base.clone()
        })
        .is_err());
        assert!(generate(&SynthSpec {
            n_benign: 10_000,
            vocab_size: 4,
            min_terms: 1,
            max_terms: 1,
            ..base
        })
        .is_err());
    }
}
