//! Classic Porter stemmer (the original 1980 rule set, all five steps).
//!
//! Within each rule group the longest matching suffix is selected first and
//! its condition alone decides whether anything happens; shorter suffixes in
//! the same group are not retried. That detail matters: "feed" matches EED
//! (measure 0, so no change) and must not fall through to the ED rule.
//!
//! Only ASCII lowercase words are stemmed; anything else is returned
//! unchanged, since the tokenizer can legitimately produce words in other
//! scripts that these rules were never meant for.

/// Stem one lowercase word.
pub fn porter_stem(word: &str) -> String {
    if word.len() < 1 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut s = Stemmer {
        b: word.as_bytes().to_vec(),
        end: word.len(),
        j: 0,
    };
    s.step1ab();
    if s.end > 0 {
        s.step1c();
        s.step2();
        s.step3();
        s.step4();
        s.step5();
    }
    s.b.truncate(s.end);
    String::from_utf8(s.b).expect("stemmer operates on ASCII")
}

struct Stemmer {
    b: Vec<u8>,
    /// Length of the live word: the word is `b[..end]`.
    end: usize,
    /// Stem boundary set by the last successful `ends` call: stem is `b[..j]`.
    j: usize,
}

impl Stemmer {
    fn is_cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_cons(i - 1),
            _ => true,
        }
    }

    /// The measure m of `b[..upto]`: the number of vowel-consonant
    /// alternations, per the [C](VC)^m[V] decomposition.
    fn measure(&self, upto: usize) -> usize {
        let mut n = 0;
        let mut i = 0;
        while i < upto && self.is_cons(i) {
            i += 1;
        }
        loop {
            while i < upto && !self.is_cons(i) {
                i += 1;
            }
            if i >= upto {
                return n;
            }
            n += 1;
            while i < upto && self.is_cons(i) {
                i += 1;
            }
            if i >= upto {
                return n;
            }
        }
    }

    fn vowel_in(&self, upto: usize) -> bool {
        (0..upto).any(|i| !self.is_cons(i))
    }

    /// *d: the word ends in a double consonant.
    fn ends_double_cons(&self) -> bool {
        self.end >= 2 && self.b[self.end - 1] == self.b[self.end - 2] && self.is_cons(self.end - 1)
    }

    /// *o at index `i`: consonant-vowel-consonant ending where the final
    /// consonant is not w, x or y.
    fn cvc_at(&self, i: usize) -> bool {
        i >= 2
            && self.is_cons(i)
            && !self.is_cons(i - 1)
            && self.is_cons(i - 2)
            && !matches!(self.b[i], b'w' | b'x' | b'y')
    }

    /// Suffix test; on success records the stem boundary in `self.j`.
    fn ends(&mut self, suffix: &[u8]) -> bool {
        if suffix.len() > self.end {
            return false;
        }
        if &self.b[self.end - suffix.len()..self.end] == suffix {
            self.j = self.end - suffix.len();
            true
        } else {
            false
        }
    }

    /// Replace the suffix after the recorded stem boundary.
    fn set_to(&mut self, replacement: &[u8]) {
        self.b.truncate(self.j);
        self.b.extend_from_slice(replacement);
        self.end = self.j + replacement.len();
    }

    /// Plurals and -ed / -ing.
    fn step1ab(&mut self) {
        if self.b[self.end - 1] == b's' {
            if self.ends(b"sses") {
                self.end -= 2;
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if self.end == 1 {
                // Bare "s": the S rule has no condition and the stem is null.
                self.end = 0;
            } else if self.b[self.end - 2] != b's' {
                self.end -= 1;
            }
        }
        if self.end == 0 {
            return;
        }
        if self.ends(b"eed") {
            if self.measure(self.j) > 0 {
                self.end -= 1;
            }
        } else if (self.ends(b"ed") || self.ends(b"ing")) && self.vowel_in(self.j) {
            self.end = self.j;
            if self.ends(b"at") {
                self.set_to(b"ate");
            } else if self.ends(b"bl") {
                self.set_to(b"ble");
            } else if self.ends(b"iz") {
                self.set_to(b"ize");
            } else if self.ends_double_cons() {
                let c = self.b[self.end - 1];
                if c != b'l' && c != b's' && c != b'z' {
                    self.end -= 1;
                }
            } else if self.measure(self.end) == 1 && self.end >= 1 && self.cvc_at(self.end - 1) {
                self.j = self.end;
                self.set_to(b"e");
            }
        }
    }

    /// y -> i when the stem contains a vowel.
    fn step1c(&mut self) {
        if self.ends(b"y") && self.vowel_in(self.j) {
            self.b[self.end - 1] = b'i';
        }
    }

    /// Apply the longest matching rule of a (suffix, replacement) table,
    /// guarded by m(stem) > 0. Tables are ordered longest suffix first.
    fn rule_table(&mut self, rules: &[(&[u8], &[u8])]) {
        for &(s1, s2) in rules {
            if self.ends(s1) {
                if self.measure(self.j) > 0 {
                    self.set_to(s2);
                }
                return;
            }
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ational", b"ate"),
            (b"ization", b"ize"),
            (b"iveness", b"ive"),
            (b"fulness", b"ful"),
            (b"ousness", b"ous"),
            (b"tional", b"tion"),
            (b"biliti", b"ble"),
            (b"entli", b"ent"),
            (b"ousli", b"ous"),
            (b"ation", b"ate"),
            (b"alism", b"al"),
            (b"aliti", b"al"),
            (b"iviti", b"ive"),
            (b"enci", b"ence"),
            (b"anci", b"ance"),
            (b"izer", b"ize"),
            (b"abli", b"able"),
            (b"alli", b"al"),
            (b"ator", b"ate"),
            (b"eli", b"e"),
        ];
        self.rule_table(RULES);
    }

    fn step3(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"icate", b"ic"),
            (b"ative", b""),
            (b"alize", b"al"),
            (b"iciti", b"ic"),
            (b"ical", b"ic"),
            (b"ness", b""),
            (b"ful", b""),
        ];
        self.rule_table(RULES);
    }

    /// Strip residual suffixes when m(stem) > 1. ION additionally requires
    /// the stem to end in s or t.
    fn step4(&mut self) {
        const SUFFIXES: &[&[u8]] = &[
            b"ement", b"ance", b"ence", b"able", b"ible", b"ment", b"ant", b"ent", b"ion", b"ism",
            b"ate", b"iti", b"ous", b"ive", b"ize", b"al", b"er", b"ic", b"ou",
        ];
        for &s1 in SUFFIXES {
            if self.ends(s1) {
                let ion_ok = s1 != b"ion"
                    || (self.j >= 1 && matches!(self.b[self.j - 1], b's' | b't'));
                if self.measure(self.j) > 1 && ion_ok {
                    self.end = self.j;
                }
                return;
            }
        }
    }

    /// Final -e removal and -ll reduction.
    fn step5(&mut self) {
        if self.b[self.end - 1] == b'e' {
            let m = self.measure(self.end - 1);
            let keeps_cvc_e = self.end >= 2 && self.cvc_at(self.end - 2);
            if m > 1 || (m == 1 && !keeps_cvc_e) {
                self.end -= 1;
            }
        }
        if self.end == 0 {
            return;
        }
        if self.b[self.end - 1] == b'l' && self.ends_double_cons() && self.measure(self.end) > 1 {
            self.end -= 1;
        }
    }
}
