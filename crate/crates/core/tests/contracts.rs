use std::process::Command;

use macdoall::adversary::{make_strategy, AdversarySpec, StrategyConfig};
use macdoall::channel::ChannelKind;
use macdoall::engine::{ExecutionTrace, Simulation};
use macdoall::ids::StationId;
use macdoall::math::CoinBank;
use macdoall::protocols::{build, ProtocolKind, ProtocolOptions};

fn run_with_coins(
    kind: ProtocolKind,
    p: usize,
    t: usize,
    delay: u64,
    seed: u64,
    coins: CoinBank,
) -> ExecutionTrace {
    let channel = kind.native_channel();
    let protocol = build(kind, p, t, channel, ProtocolOptions::default()).unwrap();
    let spec = if delay == 0 {
        AdversarySpec::strongly_adaptive(p, p - 1).unwrap()
    } else {
        AdversarySpec::delayed(p, p - 1, delay).unwrap()
    };
    let strategy = make_strategy(&StrategyConfig::named("LoneTransmitterKiller")).unwrap();
    Simulation::new(protocol, spec, strategy, channel, p, t, seed)
        .unwrap()
        .with_coins(coins)
        .run()
        .unwrap()
        .0
}

fn crashes_through(trace: &ExecutionTrace, last: u64) -> Vec<(u64, Vec<StationId>)> {
    trace
        .rounds
        .iter()
        .filter(|r| r.round <= last && !r.crashes_applied.is_empty())
        .map(|r| (r.round, r.crashes_applied.clone()))
        .collect()
}

/// A `c`-delayed strategy deciding at round `r` cannot depend on coins tossed
/// at round `r` or later, so re-drawing every coin from round `R` on leaves
/// all crashes that take effect up to round `R + c` unchanged.
#[test]
fn delayed_strategies_cannot_see_fresh_coins() {
    let mut differences_seen = 0;
    for kind in [
        ProtocolKind::Robal,
        ProtocolKind::Grubtech,
        ProtocolKind::Gilet,
    ] {
        for seed in 0..30u64 {
            for delay in [1u64, 2] {
                let (p, t) = (16, 16);
                let base = run_with_coins(kind, p, t, delay, seed, CoinBank::new(seed, p));
                let from = 1 + seed % 12;
                let perturbed = run_with_coins(
                    kind,
                    p,
                    t,
                    delay,
                    seed,
                    CoinBank::new(seed, p).with_perturbation(from, 99),
                );
                assert_eq!(
                    crashes_through(&base, from + delay),
                    crashes_through(&perturbed, from + delay),
                    "{kind:?} seed {seed} delay {delay} from {from}"
                );
                if base.rounds != perturbed.rounds {
                    differences_seen += 1;
                }
            }
        }
    }
    assert!(differences_seen > 0, "perturbation never changed a run");
}

/// Without a delay the strategy reads the current coins, so the same
/// perturbation does change same-round crashes for some seed.
#[test]
fn zero_delay_strategies_do_see_fresh_coins() {
    let (p, t) = (16, 16);
    let changed = (0..40u64).any(|seed| {
        let from = 1 + seed % 12;
        let base = run_with_coins(
            ProtocolKind::Grubtech,
            p,
            t,
            0,
            seed,
            CoinBank::new(seed, p),
        );
        let perturbed = run_with_coins(
            ProtocolKind::Grubtech,
            p,
            t,
            0,
            seed,
            CoinBank::new(seed, p).with_perturbation(from, 99),
        );
        crashes_through(&base, from) != crashes_through(&perturbed, from)
    });
    assert!(changed);
}

#[test]
fn beeping_runs_groups_together_only_with_noise_detection() {
    for channel in [ChannelKind::CollisionDetection, ChannelKind::Beeping] {
        assert!(build(
            ProtocolKind::GroupsTogether,
            4,
            4,
            channel,
            ProtocolOptions::default()
        )
        .is_ok());
    }
    assert!(build(
        ProtocolKind::GroupsTogether,
        4,
        4,
        ChannelKind::NoCollisionDetection,
        ProtocolOptions::default()
    )
    .is_err());
}

fn cli(args: &[&str], dir: &std::path::Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_macdoall"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn cli_run_and_poset_check() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("two_lists.json"),
        r#"{"protocol":"two_lists","p":1,"t":1}"#,
    )
    .unwrap();
    let (code, out) = cli(
        &["run", "--config", "two_lists.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let value: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(
        value["metrics"],
        serde_json::json!({"work": 3, "time": 3, "energy": 1})
    );
    let trace = std::fs::read_to_string(dir.path().join("o/trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 3);

    std::fs::write(
        dir.path().join("chain5.json"),
        r#"{"family":"chain","size":5}"#,
    )
    .unwrap();
    let (code, out) = cli(&["poset-check", "chain5.json"], dir.path());
    assert_eq!(code, 0);
    let value: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(value["thickness"], 1);
    assert_eq!(value["chains"], 1);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"protocol":"nope","p":1,"t":1}"#,
    )
    .unwrap();
    assert_eq!(cli(&["run", "--config", "bad.json"], dir.path()).0, 2);
    assert_eq!(cli(&["run", "--config", "missing.json"], dir.path()).0, 2);
    std::fs::write(
        dir.path().join("capped.json"),
        r#"{"protocol":"two_lists","p":4,"t":64,"round_cap":5}"#,
    )
    .unwrap();
    assert_eq!(cli(&["run", "--config", "capped.json"], dir.path()).0, 1);
}

#[test]
fn cli_sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.json"),
        r#"{"name":"tl","protocol":"two_lists","grid":{"p":[4,8,16],"t":["p","4p"]},"seeds_per_cell":2}"#,
    )
    .unwrap();
    let (code, out) = cli(
        &["sweep", "--config", "sweep.json", "--out", "res"],
        dir.path(),
    );
    assert_eq!(code, 0, "{out}");
    let csv = std::fs::read_to_string(dir.path().join("res/tl.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "protocol,channel,adversary,strategy,p,t,f,k,seed,work,time,energy"
    );
    assert_eq!(csv.lines().count(), 1 + 6 * 2);
    let (code, out) = cli(
        &["fit", "res/tl.json", "--bound", "two_lists_ceil"],
        dir.path(),
    );
    assert_eq!(code, 0, "{out}");
    let fit: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(fit["spread"].as_f64().unwrap() < 4.0);
}
