use std::collections::BTreeSet;

use eulersieve::catalog::{self, Solution};
use eulersieve::engine::checkpoint::{replay, Checkpoint, CheckpointHeader};
use eulersieve::engine::digest::{canonical_stream, digest_result, fnv1a64, format_digest, parse_digest};
use eulersieve::engine::{search_batch, search_rp, RpStats, SearchFlags};
use eulersieve::numthy::{
    gcd_all, is_prime, pow6_mod, select_prime, sixth, Mod7Tables, PrimeModulus, RootTable, MAX_TERM,
};
use eulersieve::worknet::partition;
use proptest::prelude::*;

fn first() -> Solution {
    Solution::from_terms([1117, 770, 1092, 861, 602, 212, 84]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pow6_mod_agrees_with_exact(x in 0..=MAX_TERM, m in 2u32..) {
        prop_assert_eq!(
            u128::from(pow6_mod(u64::from(x), u64::from(m)).unwrap()),
            sixth(x) % u128::from(m)
        );
    }

    #[test]
    fn selected_primes_are_minimal(target in 0u64..2_000_000) {
        let p = u64::from(select_prime(target).unwrap());
        prop_assert!(p >= target.max(11));
        prop_assert!(is_prime(p) && p % 3 == 2);
        for q in target.max(11)..p {
            prop_assert!(!(is_prime(q) && q % 3 == 2), "{} skipped", q);
        }
    }

    #[test]
    fn root_tables_invert_sixth_powers(m in 2u32..3000) {
        let t = RootTable::build(m).unwrap();
        let mut total = 0;
        for w in t.residues() {
            for &x in t.roots(w) {
                prop_assert_eq!(pow6_mod(u64::from(x), u64::from(m)).unwrap(), u64::from(w));
                total += 1;
            }
        }
        prop_assert_eq!(total, m as usize);
    }

    #[test]
    fn canonicalize_ignores_order_within_sides(
        lhs_swap in any::<bool>(),
        perm in Just([0usize, 1, 2, 3, 4]).prop_shuffle(),
        k in 1u32..100,
    ) {
        let base = first().scaled(k).unwrap();
        let [a, b] = base.lhs();
        let r = base.rhs();
        let lhs = if lhs_swap { [b, a] } else { [a, b] };
        let rhs = [r[perm[0]], r[perm[1]], r[perm[2]], r[perm[3]], r[perm[4]]];
        let c = Solution::canonicalize(lhs, rhs).unwrap();
        prop_assert_eq!(c, base);
        prop_assert_eq!(Solution::canonicalize(c.lhs(), c.rhs()).unwrap(), c);
        prop_assert_eq!(c.is_primitive(), k == 1);
        prop_assert!(catalog::verify(&c, 250_000).passed());
    }

    #[test]
    fn trivial_identities_are_trivial(x in 0u32..5000, y in 0u32..5000) {
        let s = Solution::canonicalize([x, y], [x, y, 0, 0, 0]).unwrap();
        prop_assert!(s.is_trivial());
    }

    #[test]
    fn gcd_divides_every_term(terms in prop::collection::vec(0u32..100_000, 1..8)) {
        let g = gcd_all(&terms).unwrap();
        if g == 0 {
            prop_assert!(terms.iter().all(|&t| t == 0));
        } else {
            prop_assert!(terms.iter().all(|&t| t % g == 0));
        }
    }

    #[test]
    fn any_byte_change_changes_the_digest(
        bound in 1u32..5000,
        r_p in 0u32..1000,
        pairs in any::<u64>(),
        probes in any::<u64>(),
        pos in any::<prop::sample::Index>(),
        delta in 1u8..=255,
    ) {
        let stats = RpStats { pairs, probes, hits: 3, confirmed: 3 };
        let sols = [first()];
        let stream = canonical_stream(bound, 1009, r_p, 1, &sols, &stats);
        let d = digest_result(bound, 1009, r_p, 1, &sols, &stats);
        prop_assert_eq!(d, fnv1a64(stream.as_bytes()));
        let mut bytes = stream.into_bytes();
        let i = pos.index(bytes.len());
        bytes[i] = bytes[i].wrapping_add(delta);
        prop_assert_ne!(fnv1a64(&bytes), d);
        prop_assert_eq!(parse_digest(&format_digest(d)), Some(d));
    }

    #[test]
    fn partition_tiles_the_residues(p in 2u32..100_000, chunk in 1u32..5000) {
        let units = partition(1200, p, chunk, SearchFlags::default());
        prop_assert_eq!(units.len() as u32, p.div_ceil(chunk));
        let mut next = 0;
        for u in &units {
            prop_assert_eq!(u.rp_begin, next);
            prop_assert!(u.rp_end > u.rp_begin && u.rp_end - u.rp_begin <= chunk);
            next = u.rp_end;
        }
        prop_assert_eq!(next, p);
        let ids: BTreeSet<&str> = units.iter().map(|u| u.id.as_str()).collect();
        prop_assert_eq!(ids.len(), units.len());
    }

    #[test]
    fn checkpoint_survives_any_truncation(cut in 0usize..400) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt");
        let header = CheckpointHeader { bound: 1200, p: 929, flags: 1 };
        {
            let mut ck = Checkpoint::open(&path, header).unwrap();
            ck.append(3, 0xabc, &[]).unwrap();
            ck.append(7, 0xdef, &[first()]).unwrap();
            ck.append(9, 0x123, &[first(), first().scaled(2).unwrap()]).unwrap();
        }
        let full = std::fs::read_to_string(&path).unwrap();
        let cut = cut.min(full.len());
        let header_len = full.find('\n').unwrap() + 1;
        prop_assume!(cut >= header_len);
        std::fs::write(&path, &full[..cut]).unwrap();
        let (_, completed, good) = replay(&full[..cut]).unwrap();
        prop_assert!(good <= cut);
        let ck = Checkpoint::open(&path, header).unwrap();
        prop_assert_eq!(ck.completed(), &completed);
        // Whatever survived is a prefix of what was written.
        let (_, all, _) = replay(&full).unwrap();
        for (r, unit) in &completed {
            prop_assert_eq!(Some(unit), all.get(r));
        }
        prop_assert_eq!(std::fs::read_to_string(&path).unwrap(), &full[..good]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn batched_search_equals_per_residue(
        bound in 60u32..220,
        p_target in 11u64..80,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6),
        t_filter in any::<bool>(),
        include_imprimitive in any::<bool>(),
    ) {
        let p = select_prime(p_target).unwrap();
        let pm = PrimeModulus::new(p, bound).unwrap();
        let m7 = Mod7Tables::global();
        let flags = SearchFlags { t_filter, include_imprimitive };
        let residues: Vec<u32> = picks
            .iter()
            .map(|i| i.index(p as usize) as u32)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let batch = search_batch(bound, flags, &pm, m7, &residues);
        for (r, res) in residues.iter().zip(&batch) {
            prop_assert_eq!(res, &search_rp(bound, flags, &pm, m7, *r));
        }
    }
}
