use super::hash::{hash_to_scalar, DOMAIN_SCHNORR};
use super::{CryptoError, GroupElement, GroupParams, Scalar};
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

/// Fiat-Shamir Schnorr signature `(c, s)` over an arbitrary subgroup base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchnorrSignature {
    pub c: Scalar,
    pub s: Scalar,
}

impl SchnorrSignature {
    pub fn from_hex(params: &GroupParams, c: &str, s: &str) -> Result<Self, CryptoError> {
        Ok(Self {
            c: params.scalar_from_hex(c)?,
            s: params.scalar_from_hex(s)?,
        })
    }
}

fn challenge(
    params: &GroupParams,
    base: &GroupElement,
    public: &GroupElement,
    commitment: &BigUint,
    message: &[u8],
) -> Scalar {
    hash_to_scalar(
        DOMAIN_SCHNORR,
        &[
            &params.element_bytes(base),
            &params.element_bytes(public),
            &params.residue_bytes(commitment),
            message,
        ],
        params,
    )
}

/// Signs with secret `x` for the public key `base^x`.
pub fn schnorr_sign<R: RngCore + CryptoRng + ?Sized>(
    params: &GroupParams,
    base: &GroupElement,
    secret: &Scalar,
    message: &[u8],
    rng: &mut R,
) -> Result<SchnorrSignature, CryptoError> {
    if secret.is_zero() {
        return Err(CryptoError::ZeroSecret);
    }
    let public = params.trusted_element(params.pow_base(base, secret));
    let k = params.random_nonzero_scalar(rng);
    let commitment = params.pow_base(base, &k);
    let c = challenge(params, base, &public, &commitment, message);
    let s = params.scalar_sub(&k, &params.scalar_mul(secret, &c));
    Ok(SchnorrSignature { c, s })
}

/// Recomputes the commitment as `base^s * public^c` and checks the challenge.
pub fn schnorr_verify(
    params: &GroupParams,
    base: &GroupElement,
    public: &GroupElement,
    message: &[u8],
    sig: &SchnorrSignature,
) -> bool {
    if sig.c.value() >= params.q() || sig.s.value() >= params.q() {
        return false;
    }
    if !params.is_member(base.value()) || !params.is_member(public.value()) {
        return false;
    }
    let commitment = params.mul(&params.pow_base(base, &sig.s), &params.pow(public.value(), &sig.c));
    challenge(params, base, public, &commitment, message) == sig.c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{context_base, KeyPair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_generator_signature() {
        let params = GroupParams::toy23();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let g = params.generator();
        let public = params.element(BigUint::from(18u8)).unwrap();
        for _ in 0..20 {
            let sig = schnorr_sign(&params, &g, &params.scalar_u64(3), b"snapshot", &mut rng).unwrap();
            assert!(schnorr_verify(&params, &g, &public, b"snapshot", &sig));
        }
    }

    #[test]
    fn round_trip_over_context_base() {
        let params = GroupParams::test256();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let kp = KeyPair::generate(&params, &mut rng);
        let h = context_base(&params, b"svc").unwrap();
        let tag = params.element(params.pow(h.value(), kp.secret())).unwrap();
        let sig = schnorr_sign(&params, &h, kp.secret(), b"delegate", &mut rng).unwrap();
        assert!(schnorr_verify(&params, &h, &tag, b"delegate", &sig));
        assert!(!schnorr_verify(&params, &h, &tag, b"delegatf", &sig));
        assert!(!schnorr_verify(&params, &params.generator(), &tag, b"delegate", &sig));
        assert!(!schnorr_verify(&params, &h, kp.public(), b"delegate", &sig));
    }

    #[test]
    fn zero_secret_rejected() {
        let params = GroupParams::toy23();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert_eq!(
            schnorr_sign(&params, &params.generator(), &params.scalar_u64(0), b"m", &mut rng),
            Err(CryptoError::ZeroSecret)
        );
    }
}
