//! Parsing of `--chinese-ranges` values like `4E00-9FFF,3400-4DBF`.

use anyhow::{bail, Context, Result};

use csc_core::surgeon::CodepointRange;

pub fn parse_ranges(spec: &str) -> Result<Vec<CodepointRange>> {
    let mut ranges = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let Some((start, end)) = part.split_once('-') else {
            bail!("range {part:?} is not of the form LO-HI");
        };
        let parse = |s: &str| -> Result<u32> {
            let s = s.trim().trim_start_matches("U+").trim_start_matches("0x");
            u32::from_str_radix(s, 16).with_context(|| format!("bad hex codepoint {s:?}"))
        };
        ranges.push(CodepointRange { start: parse(start)?, end: parse(end)? });
    }
    Ok(ranges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hex_pairs() {
        let r = parse_ranges("4E00-9FFF,U+3400-U+4DBF").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].start, 0x4e00);
        assert_eq!(r[1].end, 0x4dbf);
    }

    #[test]
    fn rejects_junk() {
        assert!(parse_ranges("nope").is_err());
        assert!(parse_ranges("4E00").is_err());
    }
}
