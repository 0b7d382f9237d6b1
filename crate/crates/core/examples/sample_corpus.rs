//! Regenerates the bundled sample corpus:
//!
//! ```text
//! cargo run -p lre-core --example sample_corpus -- [tokens] [seed] [out]
//! ```
//!
//! Defaults reproduce `data/sample_corpus.txt` byte for byte.

use lre_core::synth::generate_corpus;

fn main() {
    let mut args = std::env::args().skip(1);
    let tokens: usize = args
        .next()
        .map(|s| s.parse().expect("token count"))
        .unwrap_or(100_000);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(42);
    let out = args
        .next()
        .unwrap_or_else(|| "data/sample_corpus.txt".to_string());
    std::fs::write(&out, generate_corpus(tokens, seed)).expect("write corpus");
    eprintln!("wrote {tokens} tokens to {out}");
}
