//! Synthetic corpora with planted topics. Every passage of a topic carries
//! the topic's core tokens plus a sample of its vocabulary; each passage also
//! gets tokens that occur nowhere else.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Corpus, Passage};

use super::template::is_stopword;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const FILLER: &[&str] = &["the", "of", "and", "a", "is", "in", "with", "for"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub n_topics: usize,
    pub passages_per_topic: usize,
    /// Tokens shared by every passage of a topic.
    pub core_tokens: usize,
    pub vocab_per_topic: usize,
    /// Vocabulary tokens drawn per passage.
    pub vocab_per_passage: usize,
    /// Tokens found only in one passage.
    pub unique_tokens: usize,
    pub filler_tokens: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_topics: 20,
            passages_per_topic: 8,
            core_tokens: 2,
            vocab_per_topic: 12,
            vocab_per_passage: 4,
            unique_tokens: 2,
            filler_tokens: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// Planted topic of each passage, in corpus order.
    pub topic_of: Vec<usize>,
    pub core_tokens: Vec<Vec<String>>,
}

fn fresh_word(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let mut w = String::with_capacity(6);
        for _ in 0..3 {
            w.push(*CONSONANTS.choose(rng).expect("non-empty") as char);
            w.push(*VOWELS.choose(rng).expect("non-empty") as char);
        }
        if !is_stopword(&w) && used.insert(w.clone()) {
            return w;
        }
    }
}

pub fn synth_corpus(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut used = HashSet::new();
    let mut passages = Vec::with_capacity(spec.n_topics * spec.passages_per_topic);
    let mut topic_of = Vec::with_capacity(passages.capacity());
    let mut cores = Vec::with_capacity(spec.n_topics);
    for t in 0..spec.n_topics {
        let core: Vec<String> = (0..spec.core_tokens)
            .map(|_| fresh_word(&mut rng, &mut used))
            .collect();
        let vocab: Vec<String> = (0..spec.vocab_per_topic)
            .map(|_| fresh_word(&mut rng, &mut used))
            .collect();
        for p in 0..spec.passages_per_topic {
            let mut words: Vec<String> = core.clone();
            words.extend(
                vocab
                    .choose_multiple(&mut rng, spec.vocab_per_passage.min(vocab.len()))
                    .cloned(),
            );
            words.extend((0..spec.unique_tokens).map(|_| fresh_word(&mut rng, &mut used)));
            words.extend(
                (0..spec.filler_tokens)
                    .map(|_| FILLER[rng.random_range(0..FILLER.len())].to_string()),
            );
            words.shuffle(&mut rng);
            passages.push(Passage::new(format!("t{t:03}-p{p:03}"), words.join(" ")));
            topic_of.push(t);
        }
        cores.push(core);
    }
    SynthCorpus {
        corpus: Corpus::new(passages).expect("generated ids are distinct"),
        topic_of,
        core_tokens: cores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let spec = SynthSpec {
            n_topics: 3,
            passages_per_topic: 4,
            ..SynthSpec::default()
        };
        let a = synth_corpus(&spec);
        let b = synth_corpus(&spec);
        assert_eq!(a.corpus.len(), 12);
        assert_eq!(a.corpus.passages(), b.corpus.passages());
        assert_eq!(a.topic_of[5], 1);
        for (p, &t) in a.corpus.iter().zip(&a.topic_of) {
            for core in &a.core_tokens[t] {
                assert!(p.text.split(' ').any(|w| w == core));
            }
        }
    }
}
