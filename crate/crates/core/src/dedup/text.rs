//! String primitives: Levenshtein distance and American Soundex.

/// Edit distance over Unicode scalar values (unit-cost insert, delete,
/// substitute).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`; two empty strings are identical.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max as f64
}

fn soundex_digit(c: char) -> Option<char> {
    Some(match c {
        'b' | 'f' | 'p' | 'v' => '1',
        'c' | 'g' | 'j' | 'k' | 'q' | 's' | 'x' | 'z' => '2',
        'd' | 't' => '3',
        'l' => '4',
        'm' | 'n' => '5',
        'r' => '6',
        _ => return None,
    })
}

/// American Soundex: first letter plus three digits. Non-ASCII-letters are
/// skipped; `h` and `w` do not separate equal codes, vowels do. Returns
/// `None` when the input has no ASCII letter.
pub fn soundex(word: &str) -> Option<String> {
    let mut letters = word
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase());
    let first = letters.next()?;
    let mut code = String::with_capacity(4);
    code.push(first.to_ascii_uppercase());
    let mut last = soundex_digit(first);
    for c in letters {
        match soundex_digit(c) {
            Some(d) => {
                if last != Some(d) {
                    code.push(d);
                    if code.len() == 4 {
                        break;
                    }
                }
                last = Some(d);
            }
            None if c == 'h' || c == 'w' => {}
            None => last = None,
        }
    }
    while code.len() < 4 {
        code.push('0');
    }
    Some(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain recursive definition, exponential but obviously correct.
    fn lev_oracle(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = lev_oracle(ra, rb) + usize::from(x != y);
                sub.min(lev_oracle(ra, b) + 1).min(lev_oracle(a, rb) + 1)
            }
        }
    }

    #[test]
    fn levenshtein_matches_recursive_oracle() {
        let words = ["", "a", "jon", "john", "smith", "smyth", "kitten", "sitting", "ab", "ba"];
        for a in words {
            for b in words {
                let ca: Vec<char> = a.chars().collect();
                let cb: Vec<char> = b.chars().collect();
                assert_eq!(levenshtein(a, b), lev_oracle(&ca, &cb), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn jon_smith_vs_john_smith() {
        assert_eq!(levenshtein("jon smith", "john smith"), 1);
        assert!((edit_similarity("jon smith", "john smith") - 0.9).abs() < 1e-12);
        assert_eq!(edit_similarity("", ""), 1.0);
    }

    #[test]
    fn soundex_reference_codes() {
        for (w, code) in [
            ("Robert", "R163"),
            ("Rupert", "R163"),
            ("Rubin", "R150"),
            ("Ashcraft", "A261"),
            ("Ashcroft", "A261"),
            ("Tymczak", "T522"),
            ("Pfister", "P236"),
            ("Honeyman", "H555"),
            ("Lee", "L000"),
            ("Gutierrez", "G362"),
            ("Jackson", "J250"),
        ] {
            assert_eq!(soundex(w).as_deref(), Some(code), "{w}");
        }
        assert_eq!(soundex("123"), None);
        assert_eq!(soundex("O'Brien"), soundex("obrien"));
    }
}
