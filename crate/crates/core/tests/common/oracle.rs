//! Brute-force reference answers, kept independent of the library: the
//! question text is parsed here by scanning for quoted characters and the
//! answers are computed with plain loops over `chars()`. Only valid for
//! words that are already NFC (the generators in these tests ensure that).

#![allow(dead_code)]

fn quoted(q: &str) -> Vec<char> {
    let cs: Vec<char> = q.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 2 < cs.len() {
        if cs[i] == '\'' && cs[i + 2] == '\'' {
            out.push(cs[i + 1]);
            i += 3;
        } else {
            i += 1;
        }
    }
    out
}

fn yes_no(b: bool) -> String {
    if b { "Yes" } else { "No" }.to_string()
}

fn count(word: &[char], c: char) -> usize {
    let mut n = 0;
    for &w in word {
        if w == c {
            n += 1;
        }
    }
    n
}

fn first(word: &[char], c: char) -> Option<usize> {
    for (i, &w) in word.iter().enumerate() {
        if w == c {
            return Some(i + 1);
        }
    }
    None
}

/// `None` when the question cannot be answered for this word.
pub fn naive_answer(question: &str, word: &str) -> Option<String> {
    let w: Vec<char> = word.chars().collect();
    let q = quoted(question);
    if question == "What is this word?" {
        Some(word.to_string())
    } else if question.starts_with("Is the character ") {
        Some(yes_no(count(&w, q[0]) > 0))
    } else if question.starts_with("How many times does ") {
        Some(count(&w, q[0]).to_string())
    } else if let Some(rest) = question.strip_prefix("What is the character at position ") {
        let p: usize = rest.trim_end_matches('?').parse().ok()?;
        if p >= 1 && p <= w.len() {
            Some(w[p - 1].to_string())
        } else {
            None
        }
    } else if question.starts_with("Does '") {
        let (x, y) = (first(&w, q[0])?, first(&w, q[1])?);
        Some(yes_no(x < y))
    } else if question == "What is the total number of characters?" {
        Some(w.len().to_string())
    } else if question == "Is there any repeated character?" {
        let mut rep = false;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                rep |= w[i] == w[j];
            }
        }
        Some(yes_no(rep))
    } else if question.starts_with("Does this word start with ") {
        Some(yes_no(*w.first()? == q[0]))
    } else if question.starts_with("Does this word end with ") {
        Some(yes_no(*w.last()? == q[0]))
    } else {
        None
    }
}

/// Recursive edit distance straight from the recurrence, memoized on
/// suffix offsets so exhaustive sweeps stay tractable.
pub fn brute_levenshtein(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == a.len() {
            b.len() - j
        } else if j == b.len() {
            a.len() - i
        } else {
            let cost = usize::from(a[i] != b[j]);
            (go(a, b, i + 1, j + 1, memo) + cost)
                .min(go(a, b, i + 1, j, memo) + 1)
                .min(go(a, b, i, j + 1, memo) + 1)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, 0, 0, &mut memo)
}
