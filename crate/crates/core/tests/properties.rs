use std::collections::BTreeSet;

use proptest::prelude::*;

use macdoall::channel::{resolve, ChannelKind, Payload};
use macdoall::config::{AdversaryConfig, LabelName, RunConfig};
use macdoall::engine::{trace_to_jsonl, verify_reliability};
use macdoall::ids::{StationId, TaskId};
use macdoall::math::CoinBank;
use macdoall::poset::{generate, PosetFamily};
use macdoall::protocols::{build, segments, ProtocolKind, ProtocolOptions};

fn protocol() -> impl Strategy<Value = ProtocolKind> {
    prop::sample::select(ProtocolKind::ALL.to_vec())
}

fn random_poset() -> impl Strategy<Value = PosetFamily> {
    (1usize..=8, 0.0f64..=1.0, any::<u64>()).prop_map(|(f, edge_density, seed)| {
        PosetFamily::Random {
            f,
            edge_density,
            seed,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chain_cover_matches_antichain(family in random_poset()) {
        let poset = generate(&family).unwrap();
        let antichain = poset.max_antichain().unwrap();
        let cover = poset.min_chain_cover().unwrap();
        prop_assert_eq!(antichain.len(), cover.len());
        for &a in &antichain {
            for &b in &antichain {
                prop_assert!(!poset.comparable(a, b));
            }
        }
        // Each chain meets the antichain exactly once.
        for chain in &cover.chains {
            prop_assert_eq!(chain.iter().filter(|s| antichain.contains(s)).count(), 1);
        }
    }

    #[test]
    fn legality_is_monotone(family in random_poset(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..8)) {
        let poset = generate(&family).unwrap();
        let elems = poset.elements().to_vec();
        let small: BTreeSet<StationId> = picks.iter().map(|i| *i.get(&elems)).collect();
        let mut large = small.clone();
        large.extend(elems.iter().take(elems.len() / 2).copied());
        for &s in &elems {
            if poset.crash_is_legal(&small, s).unwrap() {
                prop_assert!(poset.crash_is_legal(&large, s).unwrap());
            }
        }
    }

    #[test]
    fn linear_extension_is_a_legal_batch(family in random_poset(), cut in any::<prop::sample::Index>()) {
        let poset = generate(&family).unwrap();
        let order = poset.topological_order();
        let prefix = &order[..cut.index(order.len() + 1)];
        let mut reversed = prefix.to_vec();
        reversed.reverse();
        let applied = poset.validate_batch(&BTreeSet::new(), &reversed).unwrap();
        prop_assert_eq!(applied.len(), prefix.len());
    }

    #[test]
    fn resolution_ignores_transmitter_order(ids in prop::collection::btree_set(1u32..64, 0..6), rotate in 0usize..6) {
        let mut senders: Vec<(StationId, Payload)> = ids
            .iter()
            .map(|&i| (StationId(i), Payload::station(StationId(i), 64)))
            .collect();
        for kind in [ChannelKind::NoCollisionDetection, ChannelKind::CollisionDetection, ChannelKind::Beeping] {
            let before = resolve(kind, &senders);
            if !senders.is_empty() {
                let k = rotate % senders.len();
                senders.rotate_left(k);
            }
            prop_assert_eq!(resolve(kind, &senders), before);
        }
    }

    #[test]
    fn dense_segments_tile_the_list(n in 1usize..60, m in 1usize..400) {
        let segs = segments(n, m);
        prop_assert_eq!(segs.len(), n);
        let mut hit = vec![false; m];
        for (offset, len) in segs {
            for x in 0..len {
                hit[(offset + x) % m] = true;
            }
        }
        let covered = hit.iter().filter(|&&h| h).count();
        if n * (n + 1) / 2 >= m {
            prop_assert_eq!(covered, m);
        } else {
            prop_assert_eq!(covered, n * (n + 1) / 2);
            prop_assert!(hit[..covered].iter().all(|&h| h));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_deterministic_and_reliable(
        kind in protocol(),
        p in 1usize..12,
        t in 1usize..40,
        seed in any::<u64>(),
        rate in 0.0f64..0.5,
    ) {
        let mut cfg = RunConfig::new(kind, p, t, seed);
        cfg.adversary = AdversaryConfig::new(LabelName::StronglyAdaptive, p - 1, "FrontierRandom");
        cfg.adversary.strategy.params = serde_json::json!({ "rate": rate });
        cfg.adversary.strategy.seed = seed.rotate_left(7);
        if kind == ProtocolKind::Gilet {
            cfg.adversary.label = LabelName::DelayedReaction;
            cfg.adversary.delay = Some(1);
        }
        let (a, ma) = cfg.run().unwrap();
        let (b, mb) = cfg.run().unwrap();
        prop_assert_eq!(ma, mb);
        prop_assert_eq!(trace_to_jsonl(&a), trace_to_jsonl(&b));
        let report = verify_reliability(&a, t);
        prop_assert!(report.passed(), "{:?}", report.violations);
    }

    /// Replaying only the broadcast feedback on a fresh automaton reproduces
    /// every intent and protocol event: shared state never depends on which
    /// stations crashed.
    #[test]
    fn shared_state_follows_feedback_only(
        kind in protocol(),
        p in 1usize..10,
        t in 1usize..30,
        seed in any::<u64>(),
    ) {
        let mut cfg = RunConfig::new(kind, p, t, seed);
        cfg.adversary = AdversaryConfig::new(LabelName::StronglyAdaptive, p - 1, "FrontierRandom");
        cfg.adversary.strategy.seed = seed ^ 0x55;
        let (trace, _) = cfg.run().unwrap();
        let mut replica = build(kind, p, t, cfg.channel(), ProtocolOptions::default()).unwrap();
        let mut coins = CoinBank::new(seed, p);
        for rec in &trace.rounds {
            let live: Vec<StationId> = rec.intents.keys().copied().collect();
            let intents = replica.intents(rec.round, &live, &mut coins);
            prop_assert_eq!(intents.into_iter().collect::<std::collections::BTreeMap<_, _>>(), rec.intents.clone());
            let events = replica.observe(rec.round, rec.feedback);
            prop_assert_eq!(&events, &rec.events);
        }
        prop_assert!(replica.halted());
        prop_assert!(replica.shared_view().tasks.iter().all(|x: &TaskId| x.0 as usize <= t));
    }
}
