use gimli_sifa::depend::{oracle_bit, reduce_layout, target_window, trace, BitRef, Target};
use gimli_sifa::gimli::{Key, Nonce, Row, SpBoxVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flip(key: &mut Key, nonce: &mut Nonce, r: BitRef) {
    match r {
        BitRef::Key { word, bit } => key.0[word as usize] ^= 1 << bit,
        BitRef::Nonce { word, bit } => nonce.0[word as usize] ^= 1 << bit,
        BitRef::Constant { .. } => unreachable!(),
    }
}

fn all_inputs() -> Vec<BitRef> {
    let mut v: Vec<BitRef> = (0..8)
        .flat_map(|w| (0..32).map(move |b| BitRef::key(w, b)))
        .collect();
    v.extend((0..4).flat_map(|w| (0..32).map(move |b| BitRef::nonce(w, b))));
    v
}

#[test]
fn expressions_match_the_oracle_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for variant in [SpBoxVariant::Official, SpBoxVariant::Paper] {
        for round in [23, 22, 21] {
            for row in Row::ALL {
                let t = Target::new(round, row, rng.random_range(0..4), rng.random_range(0..32));
                let e = trace(&t, variant).unwrap();
                for _ in 0..300 {
                    let (k, n) = (Key(rng.random()), Nonce(rng.random()));
                    assert_eq!(
                        e.eval(&k, &n),
                        oracle_bit(&k, &n, &t, variant),
                        "{t} {variant}"
                    );
                }
            }
        }
    }
}

#[test]
fn untraced_inputs_never_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inputs = all_inputs();
    for round in [23, 22, 21] {
        let t = Target::b07(round);
        let leaves = trace(&t, SpBoxVariant::Official).unwrap().leaves();
        for _ in 0..20 {
            let (k, n) = (Key(rng.random()), Nonce(rng.random()));
            let v = oracle_bit(&k, &n, &t, SpBoxVariant::Official);
            for &r in inputs.iter().filter(|r| !leaves.contains(r)) {
                let (mut k2, mut n2) = (k, n);
                flip(&mut k2, &mut n2, r);
                assert_eq!(
                    oracle_bit(&k2, &n2, &t, SpBoxVariant::Official),
                    v,
                    "{t} {r:?}"
                );
            }
        }
    }
}

#[test]
fn every_traced_key_bit_matters_for_some_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for round in [23, 22] {
        let t = Target::b07(round);
        let e = trace(&t, SpBoxVariant::Official).unwrap();
        for r in e.key_bits() {
            let hit = (0..2000).any(|_| {
                let (k, n) = (Key(rng.random()), Nonce(rng.random()));
                let (mut k2, mut n2) = (k, n);
                flip(&mut k2, &mut n2, r);
                oracle_bit(&k, &n, &t, SpBoxVariant::Official)
                    != oracle_bit(&k2, &n2, &t, SpBoxVariant::Official)
            });
            assert!(hit, "{t}: {r:?} never influences the bit");
        }
    }
}

#[test]
fn induced_hypothesis_predicts_the_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for round in [23, 22, 21] {
        let window =
            target_window(&Target::new(round, Row::B, 0, 0), 8, SpBoxVariant::Official).unwrap();
        for _ in 0..50 {
            let k = Key(rng.random());
            for bit in &window {
                let h = bit.layout.induced(&k);
                for _ in 0..20 {
                    let n = Nonce(rng.random());
                    assert_eq!(
                        bit.layout.evaluate(h, &n),
                        oracle_bit(&k, &n, &bit.target, SpBoxVariant::Official)
                    );
                }
            }
        }
    }
}

#[test]
fn key_bit_counts() {
    let count = |r, v| trace(&Target::b07(r), v).unwrap().key_bits().len();
    assert_eq!(count(23, SpBoxVariant::Official), 2);
    assert_eq!(count(22, SpBoxVariant::Official), 11);
    assert_eq!(count(21, SpBoxVariant::Official), 35);
    assert_eq!(count(20, SpBoxVariant::Official), 117);
    assert_eq!(count(21, SpBoxVariant::Paper), 37);
    assert_eq!(count(20, SpBoxVariant::Paper), 113);
}

#[test]
fn layouts_of_the_b07_targets() {
    let layout = |r| reduce_layout(&trace(&Target::b07(r), SpBoxVariant::Official).unwrap());
    let l23 = layout(23);
    assert_eq!(l23.parameter_count(), 2);
    let names: Vec<String> = (0..2).map(|i| l23.param_name(i)).collect();
    assert_eq!(names, ["k0.30", "k4.6"]);
    assert_eq!(layout(22).parameter_count(), 6);
    let l21 = layout(21);
    assert_eq!((l21.unique_bits().len(), l21.groups().len()), (15, 7));
    assert!(layout(20).parameter_count() > 26);
}

#[test]
fn unsupported_targets_are_rejected() {
    assert!(trace(&Target::b07(19), SpBoxVariant::Official).is_err());
    assert!(trace(&Target::b07(24), SpBoxVariant::Official).is_err());
    assert!(trace(&Target::new(22, Row::A, 4, 0), SpBoxVariant::Official).is_err());
    assert!(trace(&Target::new(22, Row::A, 0, 32), SpBoxVariant::Official).is_err());
}
