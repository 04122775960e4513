use super::fixed_base::FixedBaseTable;
use super::hash::{hash_to_group, hash_to_scalar, DOMAIN_CHAIN, DOMAIN_CTX};
use super::{CryptoError, GroupElement, GroupParams, KeyPair, Scalar};
use crate::encoding::Encoder;
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use std::collections::HashSet;

/// Ring size at which per-signature fixed-base tables for `h` and the tag
/// start paying for their construction.
const TABLE_THRESHOLD: usize = 4;

/// A linkable ring signature: the chain seed, one response per ring member,
/// and the context-scoped tag `h^x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSignature {
    c1: Scalar,
    s: Vec<Scalar>,
    tag: GroupElement,
}

impl RingSignature {
    /// Reassembles a signature from decoded parts, rejecting out-of-range
    /// scalars and a tag outside the subgroup.
    pub fn from_hex_parts(
        params: &GroupParams,
        c1: &str,
        s: &[String],
        tag: &str,
    ) -> Result<Self, CryptoError> {
        let malformed = |what: &str| CryptoError::MalformedSignature(what.to_owned());
        Ok(Self {
            c1: params.scalar_from_hex(c1).map_err(|_| malformed("chain seed"))?,
            s: s.iter()
                .map(|v| params.scalar_from_hex(v))
                .collect::<Result<_, _>>()
                .map_err(|_| malformed("response scalar"))?,
            tag: params.element_from_hex(tag).map_err(|_| malformed("tag"))?,
        })
    }

    pub fn chain_seed(&self) -> &Scalar {
        &self.c1
    }

    pub fn responses(&self) -> &[Scalar] {
        &self.s
    }

    pub fn tag(&self) -> &GroupElement {
        &self.tag
    }

    pub fn ring_size(&self) -> usize {
        self.s.len()
    }
}

/// Outcome of verification. The tag is the caller's pseudonym under the
/// signing context; it is meaningful only when `valid`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub valid: bool,
    pub tag: GroupElement,
}

/// Operations performed by the verifier, recorded without operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyStep {
    PowGenerator,
    PowMember,
    PowContext,
    PowTag,
    Mul,
    Hash,
}

/// The context base `h = hash_to_group("PHC/ctx", [ctx])`.
pub fn context_base(params: &GroupParams, ctx: &[u8]) -> Result<GroupElement, CryptoError> {
    hash_to_group(DOMAIN_CTX, &[ctx], params)
}

/// Pseudonym equality: two tags link iff they are the same element.
pub fn tags_link(a: &GroupElement, b: &GroupElement) -> bool {
    a == b
}

fn check_ring(ring: &[GroupElement]) -> Result<(), CryptoError> {
    if ring.is_empty() {
        return Err(CryptoError::EmptyRing);
    }
    let mut seen = HashSet::with_capacity(ring.len());
    if !ring.iter().all(|y| seen.insert(y)) {
        return Err(CryptoError::DuplicateRingMember);
    }
    Ok(())
}

fn ring_bytes(params: &GroupParams, ring: &[GroupElement]) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.count(ring.len());
    for y in ring {
        enc.bytes(&params.element_bytes(y));
    }
    enc.finish()
}

/// Exponentiation by a base that is fixed for the whole chain.
enum FixedPow<'a> {
    Table(FixedBaseTable),
    Plain(&'a BigUint),
}

impl<'a> FixedPow<'a> {
    fn new(params: &GroupParams, base: &'a GroupElement, max_bits: u64, uses: usize) -> Self {
        if uses >= TABLE_THRESHOLD {
            FixedPow::Table(FixedBaseTable::with_context(params.montgomery().clone(), base.value(), max_bits, 4))
        } else {
            FixedPow::Plain(base.value())
        }
    }

    fn pow(&self, params: &GroupParams, e: &Scalar) -> BigUint {
        match self {
            FixedPow::Table(t) => t.pow(e.value()),
            FixedPow::Plain(b) => params.pow(b, e),
        }
    }
}

/// Shared state of one chain evaluation.
struct Chain<'a> {
    params: &'a GroupParams,
    ring: &'a [GroupElement],
    ring_bytes: Vec<u8>,
    tag_bytes: Vec<u8>,
    message: &'a [u8],
    h_pow: FixedPow<'a>,
    tag_pow: FixedPow<'a>,
}

impl<'a> Chain<'a> {
    fn new(
        params: &'a GroupParams,
        ring: &'a [GroupElement],
        h: &'a GroupElement,
        tag: &'a GroupElement,
        message: &'a [u8],
    ) -> Self {
        // Chain challenges are SHA-256 outputs reduced mod q, so they never
        // exceed 256 bits even when q is much larger.
        let challenge_bits = params.q().bits().min(256);
        Self {
            params,
            ring,
            ring_bytes: ring_bytes(params, ring),
            tag_bytes: params.element_bytes(tag),
            message,
            h_pow: FixedPow::new(params, h, params.q().bits(), ring.len()),
            tag_pow: FixedPow::new(params, tag, challenge_bits, ring.len()),
        }
    }

    fn challenge(&self, z: &BigUint, z_ctx: &BigUint) -> Scalar {
        hash_to_scalar(
            DOMAIN_CHAIN,
            &[
                &self.ring_bytes,
                &self.tag_bytes,
                self.message,
                &self.params.residue_bytes(z),
                &self.params.residue_bytes(z_ctx),
            ],
            self.params,
        )
    }

    /// One link: `c' = H(g^s * y_i^c, h^s * tag^c)`.
    fn link(
        &self,
        i: usize,
        s: &Scalar,
        c: &Scalar,
        trace: &mut Option<&mut Vec<VerifyStep>>,
    ) -> Scalar {
        let p = self.params;
        let mut note = |step| {
            if let Some(t) = trace.as_deref_mut() {
                t.push(step);
            }
        };
        let gs = p.pow_g(s);
        note(VerifyStep::PowGenerator);
        let yc = p.pow(self.ring[i].value(), c);
        note(VerifyStep::PowMember);
        let z = p.mul(&gs, &yc);
        note(VerifyStep::Mul);
        let hs = self.h_pow.pow(p, s);
        note(VerifyStep::PowContext);
        let tc = self.tag_pow.pow(p, c);
        note(VerifyStep::PowTag);
        let z_ctx = p.mul(&hs, &tc);
        note(VerifyStep::Mul);
        let next = self.challenge(&z, &z_ctx);
        note(VerifyStep::Hash);
        next
    }
}

/// Signs `message` as an anonymous member of `ring`, exposing the tag
/// `hash_to_group(ctx)^x`.
pub fn lsag_sign<R: RngCore + CryptoRng + ?Sized>(
    params: &GroupParams,
    ring: &[GroupElement],
    signer_index: usize,
    secret: &Scalar,
    ctx: &[u8],
    message: &[u8],
    rng: &mut R,
) -> Result<RingSignature, CryptoError> {
    let h = context_base(params, ctx)?;
    sign_with_base(params, ring, signer_index, secret, &h, message, rng)
}

/// Signing with an explicit tag base instead of one derived from a context.
pub(crate) fn sign_with_base<R: RngCore + CryptoRng + ?Sized>(
    params: &GroupParams,
    ring: &[GroupElement],
    signer_index: usize,
    secret: &Scalar,
    h: &GroupElement,
    message: &[u8],
    rng: &mut R,
) -> Result<RingSignature, CryptoError> {
    check_ring(ring)?;
    let n = ring.len();
    if signer_index >= n {
        return Err(CryptoError::InvalidIndex {
            index: signer_index,
            len: n,
        });
    }
    let keypair = KeyPair::from_secret(params, secret.clone())?;
    if keypair.public() != &ring[signer_index] {
        return Err(CryptoError::KeyMismatch);
    }

    let tag = params.trusted_element(params.pow(h.value(), secret));
    let chain = Chain::new(params, ring, h, &tag, message);

    let u = params.random_nonzero_scalar(rng);
    let mut c: Vec<Option<Scalar>> = vec![None; n];
    let mut i = (signer_index + 1) % n;
    c[i] = Some(chain.challenge(&params.pow_g(&u), &chain.h_pow.pow(params, &u)));

    let mut s: Vec<Option<Scalar>> = vec![None; n];
    while i != signer_index {
        let s_i = params.random_scalar(rng);
        let next = chain.link(i, &s_i, c[i].as_ref().unwrap(), &mut None);
        s[i] = Some(s_i);
        i = (i + 1) % n;
        c[i] = Some(next);
    }
    let c_pi = c[signer_index].as_ref().unwrap();
    s[signer_index] = Some(params.scalar_sub(&u, &params.scalar_mul(secret, c_pi)));

    Ok(RingSignature {
        c1: c[0].take().unwrap(),
        s: s.into_iter().map(Option::unwrap).collect(),
        tag,
    })
}

/// Verifies a ring signature and returns its tag.
pub fn lsag_verify(
    params: &GroupParams,
    ring: &[GroupElement],
    ctx: &[u8],
    message: &[u8],
    sig: &RingSignature,
) -> Result<Verification, CryptoError> {
    let h = context_base(params, ctx)?;
    verify_inner(params, ring, &h, message, sig, None)
}

pub(crate) fn verify_with_base(
    params: &GroupParams,
    ring: &[GroupElement],
    h: &GroupElement,
    message: &[u8],
    sig: &RingSignature,
) -> Result<Verification, CryptoError> {
    verify_inner(params, ring, h, message, sig, None)
}

/// [`lsag_verify`] that also records the sequence of group operations.
pub fn lsag_verify_traced(
    params: &GroupParams,
    ring: &[GroupElement],
    ctx: &[u8],
    message: &[u8],
    sig: &RingSignature,
    trace: &mut Vec<VerifyStep>,
) -> Result<Verification, CryptoError> {
    let h = context_base(params, ctx)?;
    verify_inner(params, ring, &h, message, sig, Some(trace))
}

fn verify_inner(
    params: &GroupParams,
    ring: &[GroupElement],
    h: &GroupElement,
    message: &[u8],
    sig: &RingSignature,
    mut trace: Option<&mut Vec<VerifyStep>>,
) -> Result<Verification, CryptoError> {
    check_ring(ring)?;
    if sig.s.len() != ring.len() {
        return Err(CryptoError::MalformedSignature(format!(
            "{} responses for a ring of {}",
            sig.s.len(),
            ring.len()
        )));
    }
    if !params.is_member(sig.tag.value()) {
        return Err(CryptoError::MalformedSignature("tag".into()));
    }
    if std::iter::once(&sig.c1)
        .chain(&sig.s)
        .any(|v| v.value() >= params.q())
    {
        return Err(CryptoError::MalformedSignature("unreduced scalar".into()));
    }

    let chain = Chain::new(params, ring, h, &sig.tag, message);
    let mut c = sig.c1.clone();
    for (i, s_i) in sig.s.iter().enumerate() {
        c = chain.link(i, s_i, &c, &mut trace);
    }
    Ok(Verification {
        valid: c == sig.c1,
        tag: sig.tag.clone(),
    })
}
