//! Deterministic synthetic corpus generator.
//!
//! Produces topical documents over a small English vocabulary: each
//! document draws words from one topic mixed with shared function words,
//! both under Zipf-like frequencies. That is no language model, but it
//! yields the distributional structure the toolkit cares about — words from
//! one topic cooccur far more than chance, function words cooccur with
//! everything — at corpus sizes tests can afford to regenerate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

/// Topic vocabularies; every document samples content words from one topic.
pub const TOPICS: &[(&str, &[&str])] = &[
    ("animals", &[
        "cat", "dog", "horse", "cow", "sheep", "pig", "goat", "rabbit", "mouse", "fox",
        "wolf", "bear", "deer", "lion", "tiger", "monkey", "bird", "snake", "frog", "chicken",
        "duck", "owl",
    ]),
    ("food", &[
        "bread", "cheese", "butter", "milk", "egg", "meat", "soup", "rice", "bean", "apple",
        "pear", "plum", "grape", "honey", "salt", "sugar", "flour", "cake", "pie", "tea",
        "coffee", "wine",
    ]),
    ("weather", &[
        "rain", "snow", "wind", "storm", "cloud", "sun", "fog", "ice", "frost", "thunder",
        "lightning", "hail", "mist", "drizzle", "breeze", "gale", "heat", "cold", "damp",
        "flood", "drought", "sky",
    ]),
    ("body", &[
        "head", "hand", "foot", "arm", "leg", "eye", "ear", "nose", "mouth", "tooth",
        "hair", "skin", "bone", "blood", "heart", "lung", "brain", "finger", "thumb", "knee",
        "elbow", "shoulder",
    ]),
    ("family", &[
        "mother", "father", "sister", "brother", "son", "daughter", "uncle", "aunt", "cousin",
        "grandmother", "grandfather", "wife", "husband", "baby", "child", "parent", "twin",
        "nephew", "niece", "bride", "groom", "orphan",
    ]),
    ("house", &[
        "door", "window", "roof", "wall", "floor", "ceiling", "kitchen", "bedroom", "chair",
        "table", "bed", "lamp", "stove", "oven", "stairs", "cellar", "attic", "fence", "gate",
        "porch", "chimney", "hearth",
    ]),
    ("clothing", &[
        "shirt", "coat", "hat", "shoe", "sock", "dress", "skirt", "glove", "scarf", "belt",
        "button", "collar", "sleeve", "pocket", "boot", "sandal", "jacket", "sweater", "cap",
        "ribbon", "cloak", "apron",
    ]),
    ("water", &[
        "river", "lake", "sea", "ocean", "stream", "pond", "wave", "tide", "shore", "beach",
        "island", "bay", "harbor", "current", "fish", "boat", "sail", "anchor", "oar", "net",
        "reef", "marsh",
    ]),
    ("travel", &[
        "road", "path", "bridge", "train", "wagon", "cart", "ship", "port", "journey", "map",
        "compass", "mile", "inn", "traveler", "luggage", "ticket", "station", "track", "wheel",
        "carriage", "voyage", "lantern",
    ]),
    ("work", &[
        "tool", "hammer", "nail", "saw", "axe", "plow", "field", "farm", "harvest", "seed",
        "crop", "barn", "mill", "forge", "smith", "trade", "craft", "labor", "wage", "task",
        "skill", "workshop",
    ]),
    ("music", &[
        "song", "tune", "fiddle", "drum", "horn", "flute", "harp", "bell", "choir", "singer",
        "melody", "rhythm", "dance", "note", "chord", "string", "pipe", "concert", "band",
        "verse", "hymn", "ballad",
    ]),
    ("school", &[
        "book", "page", "pen", "ink", "paper", "lesson", "teacher", "pupil", "desk", "chalk",
        "slate", "letter", "word", "number", "sum", "grammar", "history", "geography", "class",
        "exam", "prize", "library",
    ]),
    ("war", &[
        "soldier", "sword", "shield", "spear", "arrow", "bow", "battle", "army", "fort",
        "castle", "siege", "banner", "trumpet", "cavalry", "infantry", "general", "captain",
        "enemy", "victory", "defeat", "truce", "camp",
    ]),
    ("law", &[
        "judge", "court", "jury", "witness", "crime", "theft", "trial", "verdict", "prison",
        "guard", "lawyer", "oath", "evidence", "fine", "sentence", "justice", "sheriff",
        "constable", "warrant", "appeal", "pardon", "clerk",
    ]),
    ("church", &[
        "priest", "altar", "prayer", "psalm", "bible", "saint", "angel", "heaven", "soul",
        "spirit", "blessing", "parish", "chapel", "steeple", "candle", "incense", "sermon",
        "monk", "nun", "abbey", "pilgrim", "faith",
    ]),
    ("plants", &[
        "tree", "oak", "pine", "birch", "willow", "leaf", "root", "branch", "bark", "flower",
        "rose", "lily", "fern", "moss", "grass", "hay", "vine", "berry", "thorn", "orchard",
        "meadow", "hedge",
    ]),
];

/// Function words shared across all topics.
pub const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "a", "to", "in", "is", "was", "it", "for", "that", "as", "with",
    "on", "at", "by", "from", "he", "she", "they", "we", "you", "his", "her", "their",
    "this", "but", "not", "all", "one", "two", "when", "then", "there", "here", "out",
    "up", "down", "over", "under", "after", "before", "more", "most", "some", "if", "so",
    "what", "who", "how", "why", "which", "into", "about", "them", "its",
];

/// Share of positions holding a function word instead of a topic word.
const FUNCTION_RATE: f64 = 0.35;

/// Generates exactly `n_tokens` whitespace-separated tokens, one document
/// per line, deterministically from the seed.
pub fn generate_corpus(n_tokens: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let func_zipf = Zipf::new(FUNCTION_WORDS.len() as f64, 1.3).unwrap();
    let topic_zipfs: Vec<Zipf<f64>> = TOPICS
        .iter()
        .map(|(_, words)| Zipf::new(words.len() as f64, 1.05).unwrap())
        .collect();
    let mut out = String::with_capacity(n_tokens * 6);
    let mut emitted = 0;
    while emitted < n_tokens {
        let topic = rng.random_range(0..TOPICS.len());
        let doc_len = rng.random_range(30..=70).min(n_tokens - emitted);
        for k in 0..doc_len {
            let word = if rng.random_bool(FUNCTION_RATE) {
                FUNCTION_WORDS[func_zipf.sample(&mut rng) as usize - 1]
            } else {
                TOPICS[topic].1[topic_zipfs[topic].sample(&mut rng) as usize - 1]
            };
            if k > 0 {
                out.push(' ');
            }
            out.push_str(word);
        }
        out.push('\n');
        emitted += doc_len;
    }
    out
}
