mod common;

use common::{context, Fixture};
use phc_core::crypto::{lsag_sign, lsag_verify, schnorr_sign, schnorr_verify, GroupParams, KeyPair};
use phc_core::issuance::{recovery_hash, verify_ring, EnrollmentRequest, EpochRing};
use phc_core::wallet::{create_delegation, create_presentation};
use phc_core::wire::{Wire, WireEnvelope, WireError};
use phc_core::{RingSignature, SchnorrSignature};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn params() -> GroupParams {
    GroupParams::test256()
}

fn roundtrip<T: Wire + PartialEq + std::fmt::Debug>(value: &T, params: &GroupParams) {
    let json = value.to_json(params);
    let text = serde_json::to_string(&json).unwrap();
    let back = T::from_json(serde_json::from_str(&text).unwrap(), params).unwrap();
    assert_eq!(&back, value);
}

fn flip_hex(s: &str, at: usize) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let i = at % chars.len();
    chars[i] = if chars[i] == '0' { '1' } else { '0' };
    chars.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schnorr_roundtrip(seed in any::<u64>(), msg in proptest::collection::vec(any::<u8>(), 0..64)) {
        let p = params();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = KeyPair::generate(&p, &mut rng);
        let sig = schnorr_sign(&p, &p.generator(), kp.secret(), &msg, &mut rng).unwrap();
        roundtrip(&sig, &p);
    }

    #[test]
    fn ring_signature_roundtrip_and_tamper(seed in any::<u64>(), n in 1usize..6, at in any::<usize>()) {
        let p = params();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let keys: Vec<KeyPair> = (0..n).map(|_| KeyPair::generate(&p, &mut rng)).collect();
        let ring: Vec<_> = keys.iter().map(|k| k.public().clone()).collect();
        let signer = seed as usize % n;
        let sig = lsag_sign(&p, &ring, signer, keys[signer].secret(), b"ctx", b"msg", &mut rng).unwrap();
        roundtrip(&sig, &p);

        let mut doc = sig.to_doc(&p);
        doc.c1 = flip_hex(&doc.c1, at);
        match RingSignature::from_doc(&doc, &p) {
            Ok(tampered) => prop_assert!(!lsag_verify(&p, &ring, b"ctx", b"msg", &tampered).map(|v| v.valid).unwrap_or(false)),
            Err(WireError::Malformed(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn ring_and_presentation_roundtrip(seed in any::<u64>(), n in 1usize..5) {
        let mut fx = Fixture::new(1, seed);
        let creds: Vec<_> = (0..n).map(|i| fx.enroll(0, &format!("root-{i}"))).collect();
        let ring = fx.issuers[0].current_ring_snapshot();
        roundtrip(&ring, &fx.params);
        let pres = create_presentation(&creds[0], &ring, &context(&creds[0], "svc", [3; 16]), &mut fx.rng).unwrap();
        roundtrip(&pres, &fx.params);
        let agent = KeyPair::generate(&fx.params, &mut fx.rng);
        let att = create_delegation(&creds[0], &context(&creds[0], "svc", [0; 16]), agent.public(), "post", seed, &mut fx.rng).unwrap();
        roundtrip(&att, &fx.params);
        let req = EnrollmentRequest {
            root_id: format!("root-{seed}"),
            public_key: agent.public().clone(),
            recovery_hash: recovery_hash("root", &seed.to_be_bytes()),
            reenroll_ticket: if seed % 2 == 0 { Some([seed as u8; 16]) } else { None },
        };
        roundtrip(&req, &fx.params);
    }

    #[test]
    fn tampered_ring_key_fails_verification(seed in any::<u64>(), at in any::<usize>()) {
        let mut fx = Fixture::new(1, seed);
        for i in 0..3 {
            fx.enroll(0, &format!("root-{i}"));
        }
        let ring = fx.issuers[0].current_ring_snapshot();
        let mut doc = ring.to_doc(&fx.params);
        doc.cohorts[0][at % 3] = flip_hex(&doc.cohorts[0][at % 3], at / 3);
        if let Ok(tampered) = EpochRing::from_doc(&doc, &fx.params) {
            prop_assert!(!verify_ring(&fx.params, fx.issuers[0].public_key(), &tampered));
        }
    }
}

#[test]
fn envelope_rejects_unknown_version_and_kind() {
    let p = params();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let kp = KeyPair::generate(&p, &mut rng);
    let sig = schnorr_sign(&p, &p.generator(), kp.secret(), b"m", &mut rng).unwrap();
    let env = WireEnvelope::new("schnorr", &sig.to_doc(&p));
    let doc = env.clone().open::<<SchnorrSignature as Wire>::Doc>("schnorr").unwrap();
    let back = SchnorrSignature::from_doc(&doc, &p).unwrap();
    assert!(schnorr_verify(&p, &p.generator(), kp.public(), b"m", &back));
    assert!(matches!(env.clone().open::<serde_json::Value>("ring"), Err(WireError::Malformed(_))));
    let mut future = env;
    future.version = 2;
    assert_eq!(future.open::<serde_json::Value>("schnorr").unwrap_err(), WireError::UnsupportedVersion(2));
}

#[test]
fn params_mismatch_is_reported() {
    let fx = Fixture::new(1, 5);
    let ring = fx.issuers[0].current_ring_snapshot();
    let doc = ring.to_doc(&fx.params);
    let toy = GroupParams::toy23();
    assert!(matches!(EpochRing::from_doc(&doc, &toy), Err(WireError::ParamsMismatch { .. })));
}

#[test]
fn uppercase_and_short_hex_are_malformed() {
    let p = params();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let kp = KeyPair::generate(&p, &mut rng);
    let sig = lsag_sign(&p, &[kp.public().clone()], 0, kp.secret(), b"c", b"m", &mut rng).unwrap();
    let mut doc = sig.to_doc(&p);
    doc.tag = doc.tag.to_uppercase();
    assert!(RingSignature::from_doc(&doc, &p).is_err());
    let mut doc = sig.to_doc(&p);
    doc.tag.pop();
    assert!(RingSignature::from_doc(&doc, &p).is_err());
}
