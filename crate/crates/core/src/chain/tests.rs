use super::*;
use crate::acc::{Construction, Multiset};
use crate::hash::{hash_parts, Digest};
use crate::testutil::{capacity, params};
use crate::transform::{describe_element, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain(c: Construction, schema: Schema, mode: IndexMode, skip_len: u8) -> Chain {
    let cfg = ChainConfig::new(c, capacity(c), schema).with_mode(mode).with_skip_len(skip_len);
    Chain::new(cfg, params(c)).unwrap()
}

fn worked_block_objects() -> Vec<TemporalObject> {
    vec![
        TemporalObject::new(1, vec![], vec!["Sedan", "Benz"]),
        TemporalObject::new(1, vec![], vec!["Sedan", "Audi"]),
        TemporalObject::new(1, vec![], vec!["Van", "Benz"]),
        TemporalObject::new(1, vec![], vec!["Van", "BMW"]),
    ]
}

fn names(w: &Multiset) -> Vec<String> {
    w.iter().map(|(e, n)| format!("{}x{n}", describe_element(e))).collect()
}

#[test]
fn worked_block_pairing() {
    let mut ch = chain(Construction::Acc2, Schema::default(), IndexMode::Intra, 5);
    let b = ch.append(worked_block_objects()).unwrap().clone();
    let ix = b.index.as_ref().unwrap();
    assert_eq!(ix.nodes.len(), 7);
    assert_eq!(ix.nodes[4].kind, NodeKind::Branch(0, 1));
    assert_eq!(ix.nodes[5].kind, NodeKind::Branch(2, 3));
    assert_eq!(ix.root().kind, NodeKind::Branch(4, 5));
    assert_eq!(names(&ix.nodes[4].w), ["\"Audi\"x1", "\"Benz\"x1", "\"Sedan\"x2"]);
    assert_eq!(b.header.merkle_root, ix.root().hash);
}

#[test]
fn single_object_root_is_leaf() {
    let mut ch = chain(Construction::Acc1, Schema::default(), IndexMode::Intra, 5);
    let o = TemporalObject::new(3, vec![], vec!["x"]);
    let b = ch.append(vec![o.clone()]).unwrap();
    let ix = b.index.as_ref().unwrap();
    assert_eq!(ix.nodes.len(), 1);
    assert_eq!(ix.root().inner, o.id());
    assert_eq!(b.header.merkle_root, ix.root().hash);
}

/// Rebuilds every node field from the leaves.
fn recompute(b: &Block, acc: &crate::acc::Accumulator, schema: &Schema, digests: bool) {
    let ix = b.index.as_ref().unwrap();
    for n in &ix.nodes {
        match n.kind {
            NodeKind::Leaf(i) => {
                let o = &b.objects[i as usize];
                let w = o.transformed(schema).unwrap();
                assert_eq!(n.w, w);
                assert_eq!(n.inner, o.id());
                let d = acc.setup(&w).unwrap();
                assert_eq!(n.digest, Some(d));
                assert_eq!(n.hash, hash_parts(&[&o.id(), &d.to_bytes()]));
            }
            NodeKind::Branch(l, r) => {
                let (nl, nr) = (ix.node(l), ix.node(r));
                assert_eq!(n.inner, hash_parts(&[&nl.hash, &nr.hash]));
                if digests {
                    let w = nl.w.sum(&nr.w);
                    assert_eq!(n.w, w);
                    let d = acc.setup(&w).unwrap();
                    assert_eq!(n.digest, Some(d));
                    assert_eq!(n.hash, hash_parts(&[&n.inner, &d.to_bytes()]));
                } else {
                    assert_eq!(n.digest, None);
                    assert_eq!(n.hash, n.inner);
                }
            }
        }
    }
}

fn random_objects(rng: &mut ChaCha8Rng, n: usize, t: u64) -> Vec<TemporalObject> {
    const WORDS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
    (0..n)
        .map(|_| {
            let k = rng.gen_range(0..4);
            TemporalObject::new(
                t,
                vec![rng.gen_range(0..16), rng.gen_range(0..16)],
                (0..k).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect(),
            )
        })
        .collect()
}

#[test]
fn random_blocks_satisfy_node_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for c in [Construction::Acc1, Construction::Acc2] {
        for mode in [IndexMode::Nil, IndexMode::Intra] {
            let mut ch = chain(c, Schema::integer(&[4, 4]), mode, 5);
            let objs = random_objects(&mut rng, 8, 10);
            let b = ch.append(objs).unwrap().clone();
            recompute(&b, ch.accumulator(), &ch.config().schema, mode != IndexMode::Nil);
        }
    }
}

#[test]
fn skip_entries_follow_convention() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for c in [Construction::Acc1, Construction::Acc2] {
        let mut ch = chain(c, Schema::integer(&[4, 4]), IndexMode::Both, 2);
        for i in 1..=6 {
            let objs = random_objects(&mut rng, 1, i * 10);
            ch.append(objs).unwrap();
        }
        let acc = ch.accumulator();
        let ks: Vec<Vec<u64>> = ch.blocks().iter().map(|b| b.skips.iter().map(|s| s.k).collect()).collect();
        assert_eq!(ks, vec![vec![], vec![], vec![], vec![2], vec![2], vec![2, 4], vec![2, 4]]);
        for b in ch.blocks() {
            for s in &b.skips {
                let span: Vec<&Block> = (b.height - s.k..b.height).rev().map(|h| &**ch.block(h).unwrap()).collect();
                let w = span.iter().fold(Multiset::new(), |acc, x| acc.sum(&x.index.as_ref().unwrap().root().w));
                assert_eq!(s.w, w);
                assert_eq!(s.digest, acc.setup(&w).unwrap());
                let hashes: Vec<Digest> = span.iter().map(|x| x.hash()).collect();
                let joined: Vec<u8> = hashes.concat();
                assert_eq!(s.pre_skipped_hash, crate::hash::hash_bytes(&joined));
                assert_eq!(s.hash, hash_parts(&[&s.pre_skipped_hash, &s.digest.to_bytes()]));
            }
            let joined: Vec<u8> = b.skips.iter().flat_map(|s| s.hash).collect();
            assert_eq!(b.header.skip_list_root, crate::hash::hash_bytes(&joined));
        }
        // Block 6, k = 2 covers blocks 4 and 5.
        let b6 = ch.block(6).unwrap();
        let expect = ch.block(4).unwrap().root_summary().unwrap().0.sum(ch.block(5).unwrap().root_summary().unwrap().0);
        assert_eq!(b6.skip(2).unwrap().w, expect);
        assert!(validate_headers(&ch.headers(), 0).is_ok());
    }
}

#[test]
fn genesis_shape() {
    let ch = chain(Construction::Acc2, Schema::default(), IndexMode::Both, 5);
    let g = ch.block(0).unwrap();
    assert!(g.objects.is_empty() && g.skips.is_empty() && g.index.is_none());
    assert_eq!(g.header.skip_list_root, crate::hash::hash_bytes(b""));
    assert_eq!(g.header.nonce, 0);
}

#[test]
fn mining_guards() {
    let mut ch = chain(Construction::Acc2, Schema::integer(&[4]), IndexMode::Intra, 5);
    assert!(matches!(ch.append(vec![]), Err(ChainError::EmptyBlock)));
    ch.append(vec![TemporalObject::new(10, vec![1], vec![])]).unwrap();
    assert!(matches!(
        ch.append(vec![TemporalObject::new(9, vec![1], vec![])]),
        Err(ChainError::Timestamp { t: 9, prev: 10 })
    ));
    assert!(matches!(ch.append(vec![TemporalObject::new(11, vec![16], vec![])]), Err(ChainError::Transform(_))));
    assert!(Chain::new(ChainConfig::new(Construction::Acc1, 7, Schema::default()), params(Construction::Acc1)).is_err());
}

#[test]
fn proof_of_work_difficulty() {
    let mut cfg = ChainConfig::new(Construction::Acc2, capacity(Construction::Acc2), Schema::default());
    cfg.difficulty = 8;
    let mut ch = Chain::new(cfg, params(Construction::Acc2)).unwrap();
    ch.append(vec![TemporalObject::new(1, vec![], vec!["a"])]).unwrap();
    assert!(validate_headers(&ch.headers(), 8).is_ok());
    assert!(ch.headers().iter().all(|h| crate::hash::leading_zero_bits(&h.hash()) >= 8));
}

#[test]
fn store_round_trip_and_block_codec() {
    let dir = tempfile::tempdir().unwrap();
    let c = Construction::Acc2;
    let cfg = ChainConfig::new(c, capacity(c), Schema::integer(&[4, 4])).with_skip_len(2);
    let mut store = ChainStore::create(dir.path(), cfg.clone(), params(c)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 1..=5 {
        store.append(random_objects(&mut rng, 3, i)).unwrap();
    }
    let reopened = ChainStore::open(dir.path()).unwrap();
    assert_eq!(reopened.chain().blocks(), store.chain().blocks());
    assert!(ChainStore::create(dir.path(), cfg, params(c)).is_err());
    let light = LightClientFiles::load(dir.path()).unwrap();
    assert_eq!(light.headers, store.chain().headers());
    for b in store.chain().blocks() {
        assert_eq!(&Block::decode(store.chain().accumulator(), &b.encode()).unwrap(), &**b);
    }
}

#[test]
fn sum_and_union_agree_on_disjointness() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let schema = Schema::integer(&[4, 4]);
    for _ in 0..200 {
        let objs = random_objects(&mut rng, 2, 1);
        let a = objs[0].transformed(&schema).unwrap();
        let b = objs[1].transformed(&schema).unwrap();
        let sum = a.sum(&b);
        let union: Multiset = a.support().chain(b.support()).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let probe = random_objects(&mut rng, 1, 1)[0].transformed(&schema).unwrap();
        assert_eq!(sum.is_disjoint(&probe), union.is_disjoint(&probe));
    }
}

#[test]
fn ads_size_grows_with_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sizes = Vec::new();
    let batches: Vec<Vec<TemporalObject>> = (1..=8).map(|i| random_objects(&mut rng, 4, i)).collect();
    for mode in IndexMode::ALL {
        let mut ch = chain(Construction::Acc2, Schema::integer(&[4, 4]), mode, 3);
        for b in &batches {
            ch.append(b.clone()).unwrap();
        }
        sizes.push(ch.blocks().iter().map(|b| b.ads_bytes()).sum::<usize>());
    }
    assert!(sizes[0] < sizes[1] && sizes[1] < sizes[2], "{sizes:?}");
}
