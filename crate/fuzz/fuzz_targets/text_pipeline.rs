//! Text pipeline on arbitrary UTF-8: stoplist parsing, tokenization,
//! stemming, vocabulary construction, and tf-idf encoding, including the
//! out-of-vocabulary path.

#![no_main]

use gazsl::text::{encode_tfidf, parse_stoplist, process_text, Vocabulary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let stoplist = parse_stoplist(text);

    // Two documents from the two halves of the input give the vocabulary a
    // chance at distinct document frequencies.
    let half = text.len() / 2;
    let mid = (half..text.len())
        .find(|&i| text.is_char_boundary(i))
        .unwrap_or(text.len());
    let first = process_text(&text[..mid], &stoplist);
    let second = process_text(&text[mid..], &stoplist);

    if let Ok(vocab) = Vocabulary::build(&[first.clone(), second]) {
        let encoded = encode_tfidf(&first, &vocab);
        let _ = encoded.to_dense();
    }
});
