/// Default truncation length, in tokens.
pub const DEFAULT_MAX_LEN: usize = 20;

/// Lowercases `text`, splits on whitespace and detaches leading and trailing
/// non-alphanumeric characters as one-character tokens. The result is
/// truncated to `max_len` tokens.
pub fn tokenize(text: &str, max_len: usize) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for word in lower.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let start = chars
            .iter()
            .position(|c| c.is_alphanumeric())
            .unwrap_or(chars.len());
        let end = chars
            .iter()
            .rposition(|c| c.is_alphanumeric())
            .map_or(start, |i| i + 1);
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        out.extend(chars[end.max(start)..].iter().map(|c| c.to_string()));
        if out.len() >= max_len {
            break;
        }
    }
    out.truncate(max_len);
    out
}
