//! Porter suffix-stripping stemmer.
//!
//! Classic five-step Porter algorithm over ASCII lowercase words. Each step
//! finds the longest suffix it knows; if that suffix's condition on the
//! remaining stem fails, the step ends without trying shorter suffixes.
//! Words of one or two letters, and tokens containing anything but ASCII
//! lowercase letters (e.g. digit strings), are returned unchanged.

/// Stems one lowercase word (`"running"` → `"run"`, `"cats"` → `"cat"`).
pub fn stem(word: &str) -> String {
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
    step5a(&mut w);
    step5b(&mut w);
    String::from_utf8(w).expect("stemmer operates on ASCII")
}

/// A letter is a consonant unless it is a/e/i/o/u, or a `y` that follows a
/// consonant (such a `y` acts as a vowel, as in "syzygy").
fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// The measure `m` of a word: the number of vowel→consonant transitions,
/// i.e. `m` in the form `[C](VC)^m[V]`.
fn measure(w: &[u8]) -> usize {
    let n = w.len();
    let mut m = 0;
    let mut i = 0;
    while i < n && is_consonant(w, i) {
        i += 1;
    }
    loop {
        while i < n && !is_consonant(w, i) {
            i += 1;
        }
        if i >= n {
            return m;
        }
        m += 1;
        while i < n && is_consonant(w, i) {
            i += 1;
        }
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// Stem ends consonant-vowel-consonant where the final consonant is not
/// `w`, `x`, or `y` ("*o" in Porter's notation).
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix.as_bytes()
}

fn replace_suffix(w: &mut Vec<u8>, suffix: &str, replacement: &str) {
    let keep = w.len() - suffix.len();
    w.truncate(keep);
    w.extend_from_slice(replacement.as_bytes());
}

/// Plurals: SSES→SS, IES→I, SS→SS, S→"".
fn step1a(w: &mut Vec<u8>) {
    if ends_with(w, "sses") {
        replace_suffix(w, "sses", "ss");
    } else if ends_with(w, "ies") {
        replace_suffix(w, "ies", "i");
    } else if ends_with(w, "ss") {
        // unchanged
    } else if ends_with(w, "s") {
        replace_suffix(w, "s", "");
    }
}

/// Past tense / gerund: EED, ED, ING, with cleanup of the exposed stem.
fn step1b(w: &mut Vec<u8>) {
    if ends_with(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            replace_suffix(w, "eed", "ee");
        }
        return;
    }
    let stripped = if ends_with(w, "ed") && has_vowel(&w[..w.len() - 2]) {
        replace_suffix(w, "ed", "");
        true
    } else if ends_with(w, "ing") && has_vowel(&w[..w.len() - 3]) {
        replace_suffix(w, "ing", "");
        true
    } else {
        false
    };
    if stripped {
        if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
            w.push(b'e');
        } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.pop();
        } else if measure(w) == 1 && ends_cvc(w) {
            w.push(b'e');
        }
    }
}

/// Terminal Y → I when the stem contains a vowel ("happy" → "happi").
fn step1c(w: &mut Vec<u8>) {
    if ends_with(w, "y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// Applies the longest matching suffix rule whose stem has measure greater
/// than `min_measure`; stops after the first (longest) match either way.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str)], min_measure: usize) {
    for (suffix, replacement) in rules {
        if ends_with(w, suffix) {
            if measure(&w[..w.len() - suffix.len()]) > min_measure {
                replace_suffix(w, suffix, replacement);
            }
            return;
        }
    }
}

/// Double suffixes → single ("-ization" → "-ize", "-ational" → "-ate", ...).
fn step2(w: &mut Vec<u8>) {
    // Ordered longest suffix first so the longest match wins.
    const RULES: &[(&str, &str)] = &[
        ("ational", "ate"),
        ("ization", "ize"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("biliti", "ble"),
        ("tional", "tion"),
        ("entli", "ent"),
        ("ousli", "ous"),
        ("ation", "ate"),
        ("alism", "al"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("ator", "ate"),
        ("eli", "e"),
    ];
    apply_rules(w, RULES, 0);
}

/// "-icate", "-ative", "-alize", "-ful", "-ness", ... → shorter forms.
fn step3(w: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ness", ""),
        ("ful", ""),
    ];
    apply_rules(w, RULES, 0);
}

/// Drops residual suffixes on long stems (measure > 1); "-ion" only after
/// `s` or `t`.
fn step4(w: &mut Vec<u8>) {
    const RULES: &[&str] = &[
        "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism", "ate", "iti", "ous",
        "ive", "ize", "ion", "al", "er", "ic", "ou",
    ];
    for suffix in RULES {
        if ends_with(w, suffix) {
            let stem = &w[..w.len() - suffix.len()];
            let allowed = if *suffix == "ion" {
                !stem.is_empty() && matches!(stem[stem.len() - 1], b's' | b't')
            } else {
                true
            };
            if allowed && measure(stem) > 1 {
                replace_suffix(w, suffix, "");
            }
            return;
        }
    }
}

/// Removes a terminal "e" from long stems, and from "cvc"-violating short
/// ones ("probate" → "probat", "cease" → "ceas", but "rate" stays).
fn step5a(w: &mut Vec<u8>) {
    if ends_with(w, "e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

/// "-ll" → "-l" on long stems ("controll" → "control").
fn step5b(w: &mut Vec<u8>) {
    if measure(w) > 1 && ends_double_consonant(w) && w[w.len() - 1] == b'l' {
        w.pop();
    }
}
