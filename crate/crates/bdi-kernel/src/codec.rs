//! Field escaping shared by every line-oriented format (trace, journal, dump,
//! verdict and report lines).
//!
//! A field never contains a raw `|`, `,`, `=`, `%`, CR or LF; those bytes are
//! percent-encoded so a record always occupies exactly one line and splits
//! unambiguously on its separators.

/// Percent-encode the reserved separator bytes of `raw`.
pub fn escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        match ch {
            '%' => out.push_str("%25"),
            '|' => out.push_str("%7C"),
            ',' => out.push_str("%2C"),
            '=' => out.push_str("%3D"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            _ => out.push(ch),
        }
    }
    out
}

/// Inverse of [`escape`]. Returns `None` on a malformed escape sequence.
pub fn unescape(field: &str) -> Option<String> {
    if !field.contains('%') {
        return Some(field.to_string());
    }
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(ch) = chars.next() {
        if ch != '%' {
            out.push(ch);
            continue;
        }
        let hi = chars.next()?;
        let lo = chars.next()?;
        let decoded = match (hi, lo.to_ascii_uppercase()) {
            ('2', '5') => '%',
            ('7', 'C') => '|',
            ('2', 'C') => ',',
            ('3', 'D') => '=',
            ('0', 'A') => '\n',
            ('0', 'D') => '\r',
            _ => return None,
        };
        out.push(decoded);
    }
    Some(out)
}

/// Render ordered `key=value` pairs as `k=v,k=v` with escaped values.
pub fn encode_pairs<'a, I>(pairs: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut out = String::new();
    for (i, (k, v)) in pairs.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(k);
        out.push('=');
        out.push_str(&escape(v));
    }
    out
}

/// Parse the `k=v,k=v` form produced by [`encode_pairs`].
pub fn decode_pairs(text: &str) -> Option<Vec<(String, String)>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split(',')
        .map(|pair| {
            let (k, v) = pair.split_once('=')?;
            if k.is_empty() {
                return None;
            }
            Some((k.to_string(), unescape(v)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reserved_bytes_are_encoded() {
        assert_eq!(escape("a|b,c=d%e\nf"), "a%7Cb%2Cc%3Dd%25e%0Af");
        assert_eq!(unescape("%7C").as_deref(), Some("|"));
        assert_eq!(unescape("%zz"), None);
        assert_eq!(unescape("%2"), None);
    }

    #[test]
    fn empty_pairs() {
        assert_eq!(encode_pairs(std::iter::empty()), "");
        assert_eq!(decode_pairs(""), Some(vec![]));
        assert_eq!(decode_pairs("novalue"), None);
    }

    proptest! {
        #[test]
        fn escape_round_trips(s in ".*") {
            let e = escape(&s);
            prop_assert!(!e.contains('|') && !e.contains(',') && !e.contains('\n'));
            prop_assert_eq!(unescape(&e), Some(s));
        }

        #[test]
        fn pairs_round_trip(pairs in proptest::collection::vec(("[a-z_]{1,8}", ".*"), 0..6)) {
            let text = encode_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())));
            prop_assert_eq!(decode_pairs(&text), Some(pairs));
        }
    }
}
