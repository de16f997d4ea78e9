use cqbl_core::channel_spec::ChannelSpec;
use cqbl_core::operator::QuantumChannel;
use cqbl_core::random::{random_channel, random_density, rng};
use cqbl_core::region::{check_degraded, degradation_residual, CqBroadcastChannel, DEGRADED_TOL};
use cqbl_core::Error;

fn random_degraded(seed: u64) -> (CqBroadcastChannel, QuantumChannel) {
    let mut g = rng(seed);
    let b: Vec<_> = (0..3).map(|_| random_density(&mut g, 2, 2)).collect();
    let n = random_channel(&mut g, 2, 3, 2);
    (CqBroadcastChannel::degraded_product(&b, &n).unwrap(), n)
}

#[test]
fn spec_round_trips_through_json() {
    for seed in 0..5 {
        let (ch, n) = random_degraded(seed);
        let text = ChannelSpec::from_channel(&ch, Some(&n)).to_json();
        let back = ChannelSpec::from_json(&text).unwrap();
        let (ch2, map) = back.validate().unwrap();
        for (a, b) in ch.states().iter().zip(ch2.states()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
        assert!(degradation_residual(&ch2, &map.unwrap()).unwrap() < 1e-12);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn wrong_declared_map_is_refused() {
    let (ch, _) = random_degraded(11);
    let (_, other) = random_degraded(12);
    let spec = ChannelSpec::from_channel(&ch, Some(&other));
    assert!(matches!(spec.validate(), Err(Error::Infeasible(_))));
}

#[test]
fn unknown_fields_are_rejected() {
    let (ch, _) = random_degraded(3);
    let mut v: serde_json::Value = serde_json::from_str(&ChannelSpec::from_channel(&ch, None).to_json()).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(ChannelSpec::from_json(&v.to_string()).is_err());
}

#[test]
fn degradedness_search_finds_a_map() {
    let (ch, _) = random_degraded(5);
    let rep = check_degraded(&ch, DEGRADED_TOL).unwrap();
    assert!(rep.degraded, "residual {}", rep.residual);
    assert!(rep.residual <= DEGRADED_TOL);
}

#[test]
fn swapping_a_strictly_noisier_receiver_breaks_degradedness() {
    let ch = CqBroadcastChannel::bsc_cascade(0.05, 0.2).unwrap();
    assert!(check_degraded(&ch, DEGRADED_TOL).unwrap().degraded);
    let rep = check_degraded(&ch.swapped(), DEGRADED_TOL).unwrap();
    assert!(!rep.degraded);
    assert!(rep.residual > 0.1);
}
