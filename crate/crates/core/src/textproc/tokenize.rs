use super::{normalize, Sentence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Char offsets into the document.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub norm: String,
    pub(crate) byte_start: usize,
    pub(crate) byte_end: usize,
}

impl Token {
    /// Word tokens carry a non-empty normalized form; punctuation tokens
    /// normalize to the empty string.
    pub fn is_word(&self) -> bool {
        !self.norm.is_empty()
    }

    pub fn byte_range(&self) -> std::ops::Range<usize> {
        self.byte_start..self.byte_end
    }
}

/// Splits one sentence of `text` into tokens. Runs of alphanumeric
/// characters form a token; every other non-whitespace character is a
/// token of its own.
pub fn tokenize(text: &str, sentence: &Sentence) -> Vec<Token> {
    let base_byte = sentence.byte_range().start;
    let slice = sentence.text(text);
    let mut tokens = Vec::new();
    let mut ci = sentence.start;
    // (char start, byte start) of the alphanumeric run in progress
    let mut run: Option<(usize, usize)> = None;

    let flush = |run: &mut Option<(usize, usize)>, end_c: usize, end_b: usize, out: &mut Vec<Token>| {
        if let Some((sc, sb)) = run.take() {
            let surface = &text[sb..end_b];
            out.push(Token {
                start: sc,
                end: end_c,
                surface: surface.to_string(),
                norm: normalize(surface),
                byte_start: sb,
                byte_end: end_b,
            });
        }
    };

    for (off, c) in slice.char_indices() {
        let b = base_byte + off;
        if c.is_alphanumeric() {
            if run.is_none() {
                run = Some((ci, b));
            }
        } else {
            flush(&mut run, ci, b, &mut tokens);
            if !c.is_whitespace() {
                let end_b = b + c.len_utf8();
                let surface = &text[b..end_b];
                tokens.push(Token {
                    start: ci,
                    end: ci + 1,
                    surface: surface.to_string(),
                    norm: normalize(surface),
                    byte_start: b,
                    byte_end: end_b,
                });
            }
        }
        ci += 1;
    }
    flush(&mut run, ci, base_byte + slice.len(), &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn whole(text: &str) -> Sentence {
        Sentence::new(text, 0, 0, text.chars().count()).unwrap()
    }

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text, &whole(text)).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn hyphenated() {
        assert_eq!(surfaces("type-2 diabetes"), vec!["type", "-", "2", "diabetes"]);
    }

    #[test]
    fn single_word() {
        let toks = tokenize("asthma", &whole("asthma"));
        assert_eq!(toks.len(), 1);
        assert_eq!((toks[0].start, toks[0].end), (0, 6));
        assert_eq!(toks[0].norm, "asthma");
    }

    #[test]
    fn whitespace_only() {
        let text = "  ";
        let s = Sentence::new(text, 0, 0, 2).unwrap();
        assert!(tokenize(text, &s).is_empty());
    }

    #[test]
    fn offsets_are_document_relative() {
        let text = "Intro. Has Asthma, now.";
        let s = Sentence::new(text, 1, 7, 23).unwrap();
        let toks = tokenize(text, &s);
        assert_eq!(toks[1].surface, "Asthma");
        assert_eq!((toks[1].start, toks[1].end), (11, 17));
        assert_eq!(toks[1].norm, "asthma");
        assert_eq!(toks[2].surface, ",");
        assert!(!toks[2].is_word());
    }

    #[test]
    fn multibyte_chars() {
        let text = "naïve café";
        let toks = tokenize(text, &whole(text));
        assert_eq!((toks[1].start, toks[1].end), (6, 10));
        assert_eq!(&text[toks[1].byte_range()], "café");
    }
}
