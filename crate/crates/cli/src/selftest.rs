//! Built-in property checks, one pass/fail line each; exercises the oracle,
//! the sketch primitives, linearity, merging, and (unless --quick) a full
//! encode/decode/verify round trip.

use std::collections::BTreeMap;

use num::bigint::BigUint;
use num::rational::BigRational;
use num::BigInt;

use cutsketch_core::bank::SamplerBank;
use cutsketch_core::config::SketchConfig;
use cutsketch_core::hypergraph::{Hyperedge, Hypergraph, Partition};
use cutsketch_core::l0::{ExponentMap, L0Decode, L0Family, OneSparseTester, OstDecode};
use cutsketch_core::oracle;
use cutsketch_core::prf::{Prf, Tag};
use cutsketch_core::recovery::{recover, RepCursor};
use cutsketch_core::sparsify::sparsify;
use cutsketch_core::stream::{stream_encode, StreamUpdate};

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn edge(vs: &[u32]) -> Hyperedge {
    Hyperedge::new(vs.to_vec()).unwrap()
}

fn check(name: &str, ok: bool, detail: &str) -> bool {
    if ok {
        println!("PASS {name}");
    } else {
        println!("FAIL {name}: {detail}");
    }
    ok
}

fn joined_triangles() -> Hypergraph {
    let mut h = Hypergraph::new(6);
    for e in [[0, 1], [1, 2], [0, 2], [3, 4], [4, 5], [3, 5], [2, 3]] {
        h.add_edge(edge(&e), 1).unwrap();
    }
    h
}

pub fn run(quick: bool) -> bool {
    let mut ok = true;

    // oracle sanity: triangle strengths and joined-triangle bridge
    {
        let h = joined_triangles();
        let (phi, _) = oracle::min_normalized_kcut(&h, 12).unwrap();
        let strengths = oracle::strength_recursive(&h, 12).unwrap();
        let bridge = strengths.strength(&edge(&[2, 3])).cloned();
        let inner = strengths.strength(&edge(&[0, 1])).cloned();
        ok &= check(
            "oracle-strengths",
            phi == rat(1, 1) && bridge == Some(rat(1, 1)) && inner == Some(rat(3, 2)),
            &format!("phi {phi}, bridge {bridge:?}, inner {inner:?}"),
        );
        let equiv = strengths.iter().all(|(e, lam)| {
            oracle::strength_characterization(&h, e, 12).as_ref() == Ok(lam)
        });
        ok &= check("oracle-two-routes-agree", equiv, "recursive != characterization");
    }

    // 1-sparse recovery over a small universe
    {
        let map = ExponentMap::new(Prf::new(&[1u8; 32], &Tag::new("selftest-exp")));
        let mut bad = 0;
        for id in 0..256u32 {
            let mut t = OneSparseTester::new(7919);
            t.update(&map, &BigUint::from(id), 2);
            match t.decode(&map) {
                OstDecode::OneSparse { id: got, weight: 2 } if got == BigUint::from(id) => {}
                _ => bad += 1,
            }
        }
        ok &= check("one-sparse-exhaustive", bad == 0, &format!("{bad} misdecodes"));
    }

    // l0 sampler returns true support elements, using the config-default
    // sampler shape (c_sampler, delta)
    {
        let map = ExponentMap::new(Prf::new(&[2u8; 32], &Tag::new("selftest-exp")));
        let shape_cfg = SketchConfig::new(16, 64, 4, rat(1, 2), [2u8; 32]);
        let mut bad = 0;
        let mut none = 0;
        for trial in 0..50u8 {
            let fam = L0Family::new(
                shape_cfg.sampler_params(64),
                Prf::new(&[trial; 32], &Tag::new("selftest-l0")),
            );
            let mut s = fam.new_sampler();
            let support: Vec<u32> = (0..20).map(|i| i * 7 + 3).collect();
            for &id in &support {
                fam.update(&mut s, &map, &BigUint::from(id), 1);
            }
            match fam.decode(&s, &map) {
                L0Decode::Sample { id, .. } => {
                    let got = u32::try_from(&id).unwrap_or(u32::MAX);
                    if !support.contains(&got) {
                        bad += 1;
                    }
                }
                L0Decode::Fail => none += 1,
                L0Decode::Empty => bad += 1,
            }
        }
        ok &= check(
            "l0-sampler-support",
            bad == 0 && none <= 6,
            &format!("{bad} bad, {none} failed of 50"),
        );
    }

    // linearity: permutation invariance and insert-then-delete
    {
        let mut cfg = SketchConfig::new(6, 16, 3, rat(1, 2), [3u8; 32]);
        cfg.rep_cap = 8;
        cfg.min_reps = 2;
        cfg.conn_offset_override = Some(3);
        let ups = vec![
            StreamUpdate::insert(edge(&[0, 1])),
            StreamUpdate::insert(edge(&[2, 3, 4])),
            StreamUpdate::insert(edge(&[1, 5])),
        ];
        let (b1, c1) = stream_encode(&ups, &cfg).unwrap();
        let rev: Vec<_> = ups.iter().rev().cloned().collect();
        let (b2, c2) = stream_encode(&rev, &cfg).unwrap();
        let perm_ok = b1.to_bytes() == b2.to_bytes() && c1.to_bytes() == c2.to_bytes();
        let cancel = vec![
            StreamUpdate::insert(edge(&[0, 1, 2])),
            StreamUpdate::delete(edge(&[0, 1, 2])),
        ];
        let (b3, _) = stream_encode(&cancel, &cfg).unwrap();
        let cancel_ok = b3.to_bytes() == SamplerBank::new(&cfg).to_bytes();
        ok &= check(
            "linearity",
            perm_ok && cancel_ok,
            &format!("perm {perm_ok}, cancel {cancel_ok}"),
        );

        // merge homomorphism
        let mut whole = SamplerBank::new(&cfg);
        let mut pa = SamplerBank::new(&cfg);
        let mut pb = SamplerBank::new(&cfg);
        for e in [edge(&[0, 1]), edge(&[1, 2])] {
            whole.encode_update(&e, 1).unwrap();
            pa.encode_update(&e, 1).unwrap();
        }
        for e in [edge(&[3, 4]), edge(&[0, 5])] {
            whole.encode_update(&e, 1).unwrap();
            pb.encode_update(&e, 1).unwrap();
        }
        pa.merge_from(&pb).unwrap();
        ok &= check(
            "merge-homomorphism",
            pa.to_bytes() == whole.to_bytes(),
            "merged bytes differ from union encoding",
        );
    }

    // recovery soundness on a fixed partition
    {
        let mut cfg = SketchConfig::new(6, 16, 3, rat(1, 2), [4u8; 32]);
        cfg.rep_cap = 32;
        let h = joined_triangles();
        let mut bank = SamplerBank::new(&cfg);
        for (e, w) in h.edges() {
            bank.encode_update(e, w as i64).unwrap();
        }
        let p = Partition::new(vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let mut cursor = RepCursor::new();
        let out = recover(&bank, &mut cursor, 0, &p, &BTreeMap::new(), &rat(1, 1));
        let found_bridge = out.recovered.contains_key(&edge(&[2, 3]));
        let sound = out.recovered.keys().all(|e| *e == edge(&[2, 3]));
        ok &= check(
            "recovery-crossing-set",
            found_bridge && sound,
            &format!("recovered {:?}", out.recovered.keys().collect::<Vec<_>>()),
        );
    }

    if !quick {
        // end-to-end: encode, decode, verify exactly
        let cfg = SketchConfig::new(6, 16, 3, rat(1, 2), [5u8; 32]);
        let h = joined_triangles();
        let updates: Vec<StreamUpdate> = h
            .edges()
            .map(|(e, _)| StreamUpdate::insert(e.clone()))
            .collect();
        let (bank, conn) = stream_encode(&updates, &cfg).unwrap();
        match sparsify(&bank, &conn) {
            Ok(sp) => {
                let hs = sp.to_hypergraph().unwrap();
                let report =
                    oracle::verify_sparsifier(&h, &hs, &rat(1, 2), true, 12, 20).unwrap();
                ok &= check(
                    "end-to-end",
                    report.ok,
                    &format!("worst ratio {:?}", report.worst_ratio),
                );
            }
            Err(e) => {
                ok &= check("end-to-end", false, &e.to_string());
            }
        }
    }

    ok
}
