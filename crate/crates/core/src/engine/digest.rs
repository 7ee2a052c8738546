//! FNV-1a digests over the canonical text form of a unit result.

use std::fmt::Write;

use crate::catalog::Solution;

use super::RpStats;

const FNV_OFFSET: u64 = 14_695_981_039_346_656_037;
const FNV_PRIME: u64 = 1_099_511_628_211;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// The byte stream a unit digest is taken over:
///
/// ```text
/// N;p;r_p;flags\n
/// a,b,c,d,e,f,g\n      (one line per solution, canonical order)
/// pairs=<n>;probes=<n>;hits=<n>\n
/// ```
pub fn canonical_stream(bound: u32, p: u32, r_p: u32, flags: u32, solutions: &[Solution], stats: &RpStats) -> String {
    let mut out = format!("{bound};{p};{r_p};{flags}\n");
    for s in solutions {
        let t = s.terms();
        let _ = writeln!(out, "{},{},{},{},{},{},{}", t[0], t[1], t[2], t[3], t[4], t[5], t[6]);
    }
    let _ = writeln!(out, "pairs={};probes={};hits={}", stats.pairs, stats.probes, stats.hits);
    out
}

pub fn digest_result(bound: u32, p: u32, r_p: u32, flags: u32, solutions: &[Solution], stats: &RpStats) -> u64 {
    fnv1a64(canonical_stream(bound, p, r_p, flags, solutions, stats).as_bytes())
}

/// Digest of a contiguous run of units: FNV-1a over one
/// `rp=<r> digest=<16 hex>` line per unit, ascending by `r_p`.
pub fn digest_range<I>(units: I) -> u64
where
    I: IntoIterator<Item = (u32, u64)>,
{
    let mut text = String::new();
    for (r_p, d) in units {
        let _ = writeln!(text, "rp={r_p} digest={d:016x}");
    }
    fnv1a64(text.as_bytes())
}

pub fn format_digest(d: u64) -> String {
    format!("{d:016x}")
}

/// Parses exactly sixteen hex digits.
pub fn parse_digest(s: &str) -> Option<u64> {
    if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Byte-at-a-time reference written against the published FNV-1a
    // definition, kept separate from the implementation above.
    fn reference(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (u128::from(h ^ u64::from(b)) * 0x100_0000_01b3 % (1u128 << 64)) as u64
        })
    }

    #[test]
    fn known_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        for s in ["", "a", "foobar", "1200;929;0;1\n"] {
            assert_eq!(fnv1a64(s.as_bytes()), reference(s.as_bytes()));
        }
    }

    #[test]
    fn empty_result_digest() {
        let stream = canonical_stream(100, 11, 5, 1, &[], &RpStats::default());
        assert_eq!(stream, "100;11;5;1\npairs=0;probes=0;hits=0\n");
        let d = digest_result(100, 11, 5, 1, &[], &RpStats::default());
        assert_eq!(d, reference(stream.as_bytes()));
        assert_eq!(d, 0x7a7e_9162_6fe3_3a40);
    }

    #[test]
    fn digest_text_form() {
        assert_eq!(format_digest(0xab), "00000000000000ab");
        assert_eq!(parse_digest("00000000000000ab"), Some(0xab));
        assert_eq!(parse_digest("ab"), None);
        assert_eq!(parse_digest("00000000000000zz"), None);
        assert_eq!(parse_digest("+0000000000000ab"), None);
    }
}
