//! String-pattern helpers shared by the detectors. Inputs are compared in
//! lowercase; keyword lists are stored lowercase.

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// First keyword that occurs anywhere in `text`.
pub fn find_substring<'k>(text: &str, keywords: &'k [String]) -> Option<&'k str> {
    let text = text.to_lowercase();
    keywords
        .iter()
        .find(|k| !k.is_empty() && text.contains(k.as_str()))
        .map(String::as_str)
}

/// True when `needle` occurs in `haystack` with no letter or digit directly
/// before or after it.
pub fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let mut from = 0;
    while let Some(at) = haystack[from..].find(needle) {
        let start = from + at;
        let end = start + needle.len();
        let before = haystack[..start].chars().next_back();
        let after = haystack[end..].chars().next();
        if !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char) {
            return true;
        }
        from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// First keyword that occurs in `text` as a whole word.
pub fn find_word<'k>(text: &str, keywords: &'k [String]) -> Option<&'k str> {
    let text = text.to_lowercase();
    keywords
        .iter()
        .find(|k| contains_word(&text, k))
        .map(String::as_str)
}

/// Address match that does not fire inside longer addresses or names:
/// `0.0.0.0` but not `10.0.0.0`, `::` but not `::1` or `$::fact`.
pub fn find_address<'k>(text: &str, addresses: &'k [String]) -> Option<&'k str> {
    let text = text.to_lowercase();
    addresses
        .iter()
        .find(|a| contains_address(&text, a))
        .map(String::as_str)
}

fn contains_address(text: &str, addr: &str) -> bool {
    if addr.is_empty() {
        return false;
    }
    let colon_form = addr.contains(':');
    let mut from = 0;
    while let Some(at) = text[from..].find(addr) {
        let start = from + at;
        let end = start + addr.len();
        let before = text[..start].chars().next_back();
        let after = text[end..].chars().next();
        let bad_before = before.is_some_and(|c| c.is_alphanumeric() || matches!(c, '.' | '_' | ':'));
        let bad_after = after.is_some_and(|c| {
            c.is_alphanumeric() || c == '_' || c == '.' || (colon_form && c == ':')
        });
        if !bad_before && !bad_after {
            return true;
        }
        from = start + 1;
    }
    false
}

/// Hosts of every `http://` URL in `text`, lowercased.
pub fn http_hosts(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut hosts = Vec::new();
    let mut from = 0;
    while let Some(at) = lower[from..].find("http://") {
        let start = from + at + "http://".len();
        let rest = &lower[start..];
        let host = if rest.starts_with('[') {
            rest.find(']').map_or(rest, |e| &rest[..=e])
        } else {
            let end = rest
                .find(['/', ':', '?', '#', '\'', '"', ' ', '}', ')', ','])
                .unwrap_or(rest.len());
            &rest[..end]
        };
        let host = host.rsplit('@').next().unwrap_or(host);
        hosts.push(host.to_string());
        from = start;
    }
    hosts
}

pub const LOOPBACK_HOSTS: [&str; 3] = ["localhost", "127.0.0.1", "[::1]"];

/// URLs (`scheme://...`) found in `text`, up to the next whitespace or quote.
pub fn urls(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(at) = text[from..].find("://") {
        let sep = from + at;
        let start = text[..sep]
            .rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '+' || c == '.' || c == '-'))
            .map_or(0, |i| i + 1);
        let end = text[sep..]
            .find(|c: char| c.is_whitespace() || matches!(c, '\'' | '"' | ',' | ']' | ')' | '}'))
            .map_or(text.len(), |i| sep + i);
        if start < sep {
            out.push(&text[start..end]);
        }
        from = end.max(sep + 3);
    }
    out
}

/// Extension of a URL path that appears in `extensions`; longest match wins.
pub fn download_extension<'k>(url: &str, extensions: &'k [String]) -> Option<&'k str> {
    let path = url.split(['?', '#']).next().unwrap_or(url).to_lowercase();
    extensions
        .iter()
        .filter(|e| !e.is_empty() && path.ends_with(e.as_str()))
        .max_by_key(|e| e.len())
        .map(String::as_str)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kws(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn whole_words() {
        assert!(contains_word("todo: fix", "todo"));
        assert!(!contains_word("mastodon service", "todo"));
        assert!(contains_word("digest/md5", "md5"));
        assert!(!contains_word("md5sum", "md5"));
        assert!(contains_word("use sha-1 here", "sha-1"));
        assert!(!contains_word("description", "des"));
        assert_eq!(find_word("# FIXME later", &kws(&["todo", "fixme"])), Some("fixme"));
    }

    #[test]
    fn addresses() {
        let a = kws(&["0.0.0.0", "::"]);
        assert_eq!(find_address("0.0.0.0", &a), Some("0.0.0.0"));
        assert_eq!(find_address("'0.0.0.0:8080'", &a), Some("0.0.0.0"));
        assert_eq!(find_address("10.0.0.0", &a), None);
        assert_eq!(find_address("127.0.0.1", &a), None);
        assert_eq!(find_address("'::'", &a), Some("::"));
        assert_eq!(find_address("[::]:80", &a), Some("::"));
        assert_eq!(find_address("::1", &a), None);
        assert_eq!(find_address("$::osfamily", &a), None);
    }

    #[test]
    fn http_host_extraction() {
        assert_eq!(http_hosts("url=http://ex.com/file.tgz"), ["ex.com"]);
        assert_eq!(http_hosts("'http://127.0.0.1:8080/health'"), ["127.0.0.1"]);
        assert_eq!(http_hosts("http://[::1]/x and http://a.b"), ["[::1]", "a.b"]);
        assert!(http_hosts("https://ex.com").is_empty());
    }

    #[test]
    fn url_extensions() {
        let ext = kws(&[".tar", ".tar.gz", ".rpm"]);
        let found = urls("url=http://ex.com/pkg.rpm dest=/tmp/pkg.rpm");
        assert_eq!(found, ["http://ex.com/pkg.rpm"]);
        assert_eq!(download_extension(found[0], &ext), Some(".rpm"));
        assert_eq!(download_extension("https://x/a.tar.gz?sig=1", &ext), Some(".tar.gz"));
        assert_eq!(download_extension("https://x/a.txt", &ext), None);
    }
}
