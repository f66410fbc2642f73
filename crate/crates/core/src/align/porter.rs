//! Classic Porter suffix-stripping stemmer (the original five-step rule set,
//! including the `abli -> able` variant of step 2). Operates on lowercase ASCII;
//! any other input is returned unchanged.

struct Word {
    b: Vec<u8>,
}

impl Word {
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_consonant(i - 1),
            _ => true,
        }
    }

    /// Measure of the prefix `b[..len]`: the number of VC sequences.
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut prev_vowel = false;
        for i in 0..len {
            let c = self.is_consonant(i);
            if c && prev_vowel {
                m += 1;
            }
            prev_vowel = !c;
        }
        m
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_consonant(i))
    }

    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// `*o`: prefix ends consonant-vowel-consonant and the last consonant is not w, x or y.
    fn ends_cvc(&self, len: usize) -> bool {
        len >= 3
            && self.is_consonant(len - 3)
            && !self.is_consonant(len - 2)
            && self.is_consonant(len - 1)
            && !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(&self, suffix: &str) -> bool {
        self.b.ends_with(suffix.as_bytes())
    }

    fn stem_len(&self, suffix: &str) -> usize {
        self.b.len() - suffix.len()
    }

    fn replace_suffix(&mut self, suffix: &str, replacement: &str) {
        let keep = self.stem_len(suffix);
        self.b.truncate(keep);
        self.b.extend_from_slice(replacement.as_bytes());
    }

    /// Applies the first rule whose suffix matches; stops there whether or not
    /// the condition on the remaining stem holds.
    fn apply_rules(&mut self, rules: &[(&str, &str)], cond: impl Fn(&Word, usize) -> bool) {
        for (suffix, replacement) in rules {
            if self.ends_with(suffix) {
                let stem = self.stem_len(suffix);
                if cond(self, stem) {
                    self.replace_suffix(suffix, replacement);
                }
                return;
            }
        }
    }

    fn step1a(&mut self) {
        self.apply_rules(&[("sses", "ss"), ("ies", "i"), ("ss", "ss"), ("s", "")], |_, _| true);
    }

    fn step1b(&mut self) {
        if self.ends_with("eed") {
            let stem = self.stem_len("eed");
            if self.measure(stem) > 0 {
                self.replace_suffix("eed", "ee");
            }
            return;
        }
        let removed = ["ed", "ing"].into_iter().find(|s| self.ends_with(s) && self.has_vowel(self.stem_len(s)));
        let Some(suffix) = removed else { return };
        self.replace_suffix(suffix, "");

        if self.ends_with("at") || self.ends_with("bl") || self.ends_with("iz") {
            self.b.push(b'e');
            return;
        }
        let len = self.b.len();
        if self.ends_double_consonant(len) {
            if !matches!(self.b[len - 1], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else if self.measure(len) == 1 && self.ends_cvc(len) {
            self.b.push(b'e');
        }
    }

    fn step1c(&mut self) {
        if self.ends_with("y") && self.has_vowel(self.b.len() - 1) {
            let last = self.b.len() - 1;
            self.b[last] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ];
        self.apply_rules(RULES, |w, stem| w.measure(stem) > 0);
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_rules(RULES, |w, stem| w.measure(stem) > 0);
    }

    fn step4(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("al", ""),
            ("ance", ""),
            ("ence", ""),
            ("er", ""),
            ("ic", ""),
            ("able", ""),
            ("ible", ""),
            ("ant", ""),
            ("ement", ""),
            ("ment", ""),
            ("ent", ""),
            ("ion", ""),
            ("ou", ""),
            ("ism", ""),
            ("ate", ""),
            ("iti", ""),
            ("ous", ""),
            ("ive", ""),
            ("ize", ""),
        ];
        let cond = |w: &Word, stem: usize| {
            if w.measure(stem) <= 1 {
                return false;
            }
            // (*S or *T) ION
            if w.b.len() - stem == 3 && w.b[stem..] == *b"ion" {
                return stem > 0 && matches!(w.b[stem - 1], b's' | b't');
            }
            true
        };
        self.apply_rules(RULES, cond);
    }

    fn step5a(&mut self) {
        if self.ends_with("e") {
            let stem = self.b.len() - 1;
            let m = self.measure(stem);
            if m > 1 || (m == 1 && !self.ends_cvc(stem)) {
                self.b.pop();
            }
        }
    }

    fn step5b(&mut self) {
        let len = self.b.len();
        if self.ends_with("ll") && self.measure(len - 1) > 1 {
            self.b.pop();
        }
    }
}

/// Porter stem of a single lowercase word.
pub fn stem(word: &str) -> String {
    if word.is_empty() || !word.bytes().all(|c| c.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = Word { b: word.as_bytes().to_vec() };
    w.step1a();
    w.step1b();
    w.step1c();
    w.step2();
    w.step3();
    w.step4();
    w.step5a();
    w.step5b();
    String::from_utf8(w.b).expect("ascii in, ascii out")
}

/// Re-applies [`stem`] until the word stops changing.
///
/// Every pass either shortens the word or performs one of the irreversible
/// same-length rewrites (`y -> i`, `abli -> able`), so the loop terminates.
pub fn stem_to_fixpoint(word: &str) -> String {
    let mut current = word.to_string();
    loop {
        let next = stem(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}
