//! Porter suffix-stripping stemmer.
//!
//! `porter_step` is one pass of the classic algorithm (with the `bli`/`logi`
//! departures of the reference C release). `stem` repeats passes until the
//! output stops changing, which makes it idempotent; a single Porter pass is
//! not (`agreed` -> `agre` -> `agr`).

/// Stems a token. Input is lowercased first; tokens that are not purely
/// ASCII-alphabetic or are shorter than three letters are only lowercased.
pub fn stem(token: &str) -> String {
    let mut current = token.to_lowercase();
    loop {
        let next = porter_step(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// A single pass of the Porter algorithm over a lowercase word.
pub fn porter_step(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w).expect("ascii in, ascii out")
}

fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `w`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut i = 0;
    let n = w.len();
    while i < n && is_cons(w, i) {
        i += 1;
    }
    loop {
        while i < n && !is_cons(w, i) {
            i += 1;
        }
        if i >= n {
            return m;
        }
        while i < n && is_cons(w, i) {
            i += 1;
        }
        m += 1;
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

fn double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// consonant-vowel-consonant ending, where the last consonant is not w, x or y.
fn cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn stem_of<'a>(w: &'a [u8], suffix: &str) -> Option<&'a [u8]> {
    w.strip_suffix(suffix.as_bytes())
}

fn replace_suffix(w: &mut Vec<u8>, suffix_len: usize, with: &str) {
    w.truncate(w.len() - suffix_len);
    w.extend_from_slice(with.as_bytes());
}

fn step1a(w: &mut Vec<u8>) {
    if w.ends_with(b"sses") {
        replace_suffix(w, 4, "ss");
    } else if w.ends_with(b"ies") {
        replace_suffix(w, 3, "i");
    } else if w.ends_with(b"ss") {
    } else if w.ends_with(b"s") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if let Some(base) = stem_of(w, "eed") {
        if measure(base) > 0 {
            w.pop();
        }
        return;
    }
    let cut = if stem_of(w, "ed").is_some_and(has_vowel) {
        2
    } else if stem_of(w, "ing").is_some_and(has_vowel) {
        3
    } else {
        return;
    };
    w.truncate(w.len() - cut);
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    let n = w.len();
    if w.ends_with(b"y") && has_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

/// Replaces the first matching suffix if the remaining stem has measure
/// greater than `min_measure`. Stops at the first suffix match either way.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str)], min_measure: usize) {
    for &(suffix, replacement) in rules {
        if let Some(base) = stem_of(w, suffix) {
            if measure(base) > min_measure {
                replace_suffix(w, suffix.len(), replacement);
            }
            return;
        }
    }
}

const STEP2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("bli", "ble"),
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
    ("logi", "log"),
];

const STEP3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize",
];

fn step2(w: &mut Vec<u8>) {
    // Longest-match semantics: when several suffixes match, the longest one
    // decides. Sorting by length keeps the table readable above.
    let mut rules = STEP2.to_vec();
    rules.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
    apply_rules(w, &rules, 0);
}

fn step3(w: &mut Vec<u8>) {
    let mut rules = STEP3.to_vec();
    rules.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
    apply_rules(w, &rules, 0);
}

fn step4(w: &mut Vec<u8>) {
    let mut suffixes = STEP4.to_vec();
    suffixes.sort_by_key(|s| std::cmp::Reverse(s.len()));
    for suffix in suffixes {
        if let Some(base) = stem_of(w, suffix) {
            let ok = measure(base) > 1
                && (suffix != "ion" || base.last().is_some_and(|&c| c == b's' || c == b't'));
            if ok {
                let keep = base.len();
                w.truncate(keep);
            }
            return;
        }
    }
}

fn step5(w: &mut Vec<u8>) {
    if let Some(base) = stem_of(w, "e") {
        let m = measure(base);
        if m > 1 || (m == 1 && !cvc(base)) {
            w.pop();
        }
    }
    if measure(w) > 1 && double_cons(w) && w.ends_with(b"l") {
        w.pop();
    }
}
