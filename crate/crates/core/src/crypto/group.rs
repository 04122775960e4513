use super::fixed_base::FixedBaseTable;
use super::mont::Montgomery;
use super::primes::{is_probable_prime, small_primes, MR_ROUNDS};
use super::CryptoError;
use crate::encoding::{fixed_width, from_hex, to_hex, width_of};
use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Named parameter sets.
pub const PRESETS: &[&str] = &["toy-23", "test-256", "modp-2048"];

const TEST_256_P: &str = "ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff72ef";

// RFC 3526, group 14.
const MODP_2048_P: &str = "\
ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74\
020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f1437\
4fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7ed\
ee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05\
98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb\
9ed529077096966d670c354e4abc9804f1746c08ca18217c32905e462e36ce3b\
e39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718\
3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff";

/// Default attempt budget for safe-prime search.
pub const DEFAULT_GENERATION_ATTEMPTS: u64 = 2_000_000;

/// A prime-order subgroup of the integers modulo a safe prime `p = 2q + 1`,
/// generated by `g = 4`.
///
/// Cloning is cheap; the generator's fixed-base table is built lazily and
/// shared by every clone.
#[derive(Clone)]
pub struct GroupParams {
    inner: Arc<Inner>,
}

struct Inner {
    name: String,
    p: BigUint,
    q: BigUint,
    g: BigUint,
    element_width: usize,
    scalar_width: usize,
    mont: Arc<Montgomery>,
    g_table: OnceLock<FixedBaseTable>,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("name", &self.inner.name)
            .field("bits", &self.inner.p.bits())
            .finish()
    }
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.p == other.inner.p && self.inner.g == other.inner.g)
    }
}

impl Eq for GroupParams {}

impl GroupParams {
    fn new_unchecked(name: &str, p: BigUint, g: BigUint) -> Self {
        let q: BigUint = (&p - 1u32) >> 1;
        let mont = Arc::new(Montgomery::new(&p));
        Self {
            inner: Arc::new(Inner {
                name: name.to_owned(),
                element_width: width_of(&p),
                scalar_width: width_of(&q),
                p,
                q,
                g,
                mont,
                g_table: OnceLock::new(),
            }),
        }
    }

    /// Looks up a named preset. Presets are process-wide singletons so the
    /// generator table is only ever built once per preset.
    pub fn preset(name: &str) -> Result<Self, CryptoError> {
        static TOY: OnceLock<GroupParams> = OnceLock::new();
        static TEST: OnceLock<GroupParams> = OnceLock::new();
        static MODP: OnceLock<GroupParams> = OnceLock::new();
        let hex_p = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).expect("preset constant");
        let four = BigUint::from(4u8);
        Ok(match name {
            "toy-23" => TOY
                .get_or_init(|| Self::new_unchecked(name, BigUint::from(23u8), four))
                .clone(),
            "test-256" => TEST
                .get_or_init(|| Self::new_unchecked(name, hex_p(TEST_256_P), four))
                .clone(),
            "modp-2048" => MODP
                .get_or_init(|| Self::new_unchecked(name, hex_p(MODP_2048_P), four))
                .clone(),
            other => return Err(CryptoError::UnknownPreset(other.to_owned())),
        })
    }

    pub fn toy23() -> Self {
        Self::preset("toy-23").unwrap()
    }

    pub fn test256() -> Self {
        Self::preset("test-256").unwrap()
    }

    pub fn modp2048() -> Self {
        Self::preset("modp-2048").unwrap()
    }

    /// Builds parameters from explicit values after checking every invariant.
    pub fn from_parts(name: &str, p: BigUint, g: BigUint) -> Result<Self, CryptoError> {
        if !p.bit(0) || p.bits() < 3 {
            return Err(CryptoError::InvalidParams("p must be an odd prime above 3".into()));
        }
        let params = Self::new_unchecked(name, p, g);
        params.validate()?;
        Ok(params)
    }

    /// Re-checks the invariants: `p` and `q` prime, `p = 2q + 1`,
    /// `g^q = 1` and `g != 1`.
    pub fn validate(&self) -> Result<(), CryptoError> {
        let Inner { p, q, g, .. } = &*self.inner;
        let bad = |m: &str| Err(CryptoError::InvalidParams(m.to_owned()));
        if p.is_even() || *p != q * 2u32 + 1u32 {
            return bad("p is not 2q + 1");
        }
        let mut rng = ChaCha20Rng::from_seed(*b"phc group parameter validation!!");
        if !is_probable_prime(q, MR_ROUNDS, &mut rng) {
            return bad("q is not prime");
        }
        if !is_probable_prime(p, MR_ROUNDS, &mut rng) {
            return bad("p is not prime");
        }
        if g.is_one() || g.is_zero() || g >= p || !g.modpow(q, p).is_one() {
            return bad("g does not generate the order-q subgroup");
        }
        Ok(())
    }

    /// Searches for a random safe prime of exactly `bit_length` bits.
    pub fn generate<R: RngCore + ?Sized>(bit_length: u64, rng: &mut R) -> Result<Self, CryptoError> {
        Self::generate_with_budget(bit_length, rng, DEFAULT_GENERATION_ATTEMPTS)
    }

    pub fn generate_with_budget<R: RngCore + ?Sized>(
        bit_length: u64,
        rng: &mut R,
        max_attempts: u64,
    ) -> Result<Self, CryptoError> {
        if bit_length < 16 || bit_length % 2 != 0 {
            return Err(CryptoError::InvalidBitLength(bit_length));
        }
        let q_bits = bit_length - 1;
        for _ in 0..max_attempts {
            let mut q = rng.gen_biguint(q_bits);
            q.set_bit(q_bits - 1, true);
            q.set_bit(0, true);
            let p: BigUint = &q * 2u32 + 1u32;
            if !passes_sieve(&q) || !passes_sieve(&p) {
                continue;
            }
            if is_probable_prime(&q, MR_ROUNDS, rng) && is_probable_prime(&p, MR_ROUNDS, rng) {
                let hex = to_hex(&p, width_of(&p));
                let name = format!("gen-{bit_length}-{}", &hex[..hex.len().min(8)]);
                return Self::from_parts(&name, p, BigUint::from(4u8));
            }
        }
        Err(CryptoError::GenerationTimeout {
            attempts: max_attempts,
        })
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn p(&self) -> &BigUint {
        &self.inner.p
    }

    pub fn q(&self) -> &BigUint {
        &self.inner.q
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.inner.g.clone())
    }

    /// Byte width of encoded group elements.
    pub fn element_width(&self) -> usize {
        self.inner.element_width
    }

    /// Byte width of encoded scalars.
    pub fn scalar_width(&self) -> usize {
        self.inner.scalar_width
    }

    pub fn bits(&self) -> u64 {
        self.inner.p.bits()
    }

    // ---- scalars ----

    /// Reduces an arbitrary integer modulo `q`.
    pub fn scalar(&self, v: BigUint) -> Scalar {
        Scalar(v % &self.inner.q)
    }

    pub fn scalar_u64(&self, v: u64) -> Scalar {
        self.scalar(BigUint::from(v))
    }

    /// Accepts an already-reduced integer; rejects values `>= q`.
    pub fn scalar_canonical(&self, v: BigUint) -> Result<Scalar, CryptoError> {
        if v >= self.inner.q {
            return Err(CryptoError::ScalarOutOfRange);
        }
        Ok(Scalar(v))
    }

    pub fn random_scalar<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.inner.q))
    }

    /// Uniform in `[1, q-1]`.
    pub fn random_nonzero_scalar<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.inner.q))
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.inner.q)
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let q = &self.inner.q;
        Scalar((&a.0 + q - &b.0) % q)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar(&a.0 * &b.0 % &self.inner.q)
    }

    pub fn scalar_hex(&self, s: &Scalar) -> String {
        to_hex(&s.0, self.inner.scalar_width)
    }

    pub fn scalar_from_hex(&self, s: &str) -> Result<Scalar, CryptoError> {
        let v = from_hex(s, self.inner.scalar_width).ok_or(CryptoError::ScalarOutOfRange)?;
        self.scalar_canonical(v)
    }

    pub fn scalar_bytes(&self, s: &Scalar) -> Vec<u8> {
        fixed_width(&s.0, self.inner.scalar_width)
    }

    // ---- elements ----

    /// Validates subgroup membership: value in `[2, p-1]` with `value^q = 1`.
    ///
    /// For a safe prime the order-`q` subgroup is exactly the quadratic
    /// residues, so membership is decided by a Jacobi symbol rather than a
    /// full exponentiation.
    pub fn element(&self, v: BigUint) -> Result<GroupElement, CryptoError> {
        if self.is_member(&v) {
            Ok(GroupElement(v))
        } else {
            Err(CryptoError::NotInGroup)
        }
    }

    pub fn is_member(&self, v: &BigUint) -> bool {
        let p = &self.inner.p;
        v > &BigUint::one() && v < p && jacobi(v, p) == 1
    }

    pub fn element_hex(&self, e: &GroupElement) -> String {
        to_hex(&e.0, self.inner.element_width)
    }

    pub fn element_from_hex(&self, s: &str) -> Result<GroupElement, CryptoError> {
        let v = from_hex(s, self.inner.element_width).ok_or(CryptoError::NotInGroup)?;
        self.element(v)
    }

    pub fn element_bytes(&self, e: &GroupElement) -> Vec<u8> {
        fixed_width(&e.0, self.inner.element_width)
    }

    /// Fixed-width encoding of a raw residue, for intermediate values that
    /// may legitimately equal one.
    pub fn residue_bytes(&self, v: &BigUint) -> Vec<u8> {
        fixed_width(v, self.inner.element_width)
    }

    // ---- arithmetic ----

    pub(crate) fn montgomery(&self) -> &Arc<Montgomery> {
        &self.inner.mont
    }

    pub(crate) fn g_table(&self) -> &FixedBaseTable {
        self.inner
            .g_table
            .get_or_init(|| FixedBaseTable::with_context(self.inner.mont.clone(), &self.inner.g, self.inner.q.bits(), 6))
    }

    /// `g^e mod p` via the cached generator table.
    pub fn pow_g(&self, e: &Scalar) -> BigUint {
        self.g_table().pow(&e.0)
    }

    pub fn pow(&self, base: &BigUint, e: &Scalar) -> BigUint {
        // num-bigint's own windowed Montgomery ladder wins at large sizes.
        if self.inner.mont.limbs() > 8 {
            base.modpow(&e.0, &self.inner.p)
        } else {
            self.inner.mont.pow(base, &e.0)
        }
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.inner.p
    }

    /// `base^e` for any base, using the generator table when `base = g`.
    pub fn pow_base(&self, base: &GroupElement, e: &Scalar) -> BigUint {
        if base.0 == self.inner.g {
            self.pow_g(e)
        } else {
            self.pow(&base.0, e)
        }
    }

    /// Wraps a residue known to be a nonidentity subgroup member, such as a
    /// member raised to a nonzero exponent.
    pub(crate) fn trusted_element(&self, v: BigUint) -> GroupElement {
        debug_assert!(self.is_member(&v));
        GroupElement(v)
    }
}

fn passes_sieve(n: &BigUint) -> bool {
    small_primes().iter().all(|&p| {
        let r = (n % p).to_u32().unwrap();
        r != 0 || *n == BigUint::from(p)
    })
}

/// Jacobi symbol `(a / n)` for odd positive `n`.
fn jacobi(a: &BigUint, n: &BigUint) -> i8 {
    let mut a = a % n;
    let mut n = n.clone();
    let mut t = 1i8;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            a >>= tz;
            let r = (&n & BigUint::from(7u8)).to_u8().unwrap();
            if tz % 2 == 1 && (r == 3 || r == 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        let a3 = (&a & BigUint::from(3u8)).to_u8().unwrap();
        let n3 = (&n & BigUint::from(3u8)).to_u8().unwrap();
        if a3 == 3 && n3 == 3 {
            t = -t;
        }
        a %= &n;
    }
    if n.is_one() {
        t
    } else {
        0
    }
}

/// An exponent reduced modulo the subgroup order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({:x})", self.0)
    }
}

/// A nonidentity member of the prime-order subgroup.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({:x})", self.0)
    }
}

/// A secret exponent in `[1, q-1]` and its public key `g^secret`.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    secret: Scalar,
    public: GroupElement,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let secret = params.random_nonzero_scalar(rng);
        Self::from_secret(params, secret).expect("nonzero by construction")
    }

    pub fn from_secret(params: &GroupParams, secret: Scalar) -> Result<Self, CryptoError> {
        if secret.is_zero() {
            return Err(CryptoError::ZeroSecret);
        }
        let public = params.trusted_element(params.pow_g(&secret));
        Ok(Self { secret, public })
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }

    pub fn public(&self) -> &GroupElement {
        &self.public
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn toy_preset_matches_hand_computation() {
        let params = GroupParams::toy23();
        assert_eq!(params.p(), &BigUint::from(23u8));
        assert_eq!(params.q(), &BigUint::from(11u8));
        assert_eq!(params.generator().value(), &BigUint::from(4u8));
        assert!(trial_prime(23) && trial_prime(11));
        // 4^11 by repeated multiplication.
        let mut acc = 1u64;
        for _ in 0..11 {
            acc = acc * 4 % 23;
        }
        assert_eq!(acc, 1);
        params.validate().unwrap();
    }

    #[test]
    fn larger_presets_validate() {
        GroupParams::test256().validate().unwrap();
        let modp = GroupParams::modp2048();
        assert_eq!(modp.bits(), 2048);
        modp.validate().unwrap();
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(
            GroupParams::preset("p-521"),
            Err(CryptoError::UnknownPreset(_))
        ));
    }

    #[test]
    fn generated_params_pass_trial_division() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let params = GroupParams::generate(16, &mut rng).unwrap();
        let p = params.p().to_u64().unwrap();
        let q = params.q().to_u64().unwrap();
        assert_eq!(params.bits(), 16);
        assert!(trial_prime(p) && trial_prime(q));
        assert_eq!(p, 2 * q + 1);
        assert!(params.generator().value().modpow(params.q(), params.p()).is_one());

        let mut again = ChaCha20Rng::seed_from_u64(1);
        assert_eq!(GroupParams::generate(16, &mut again).unwrap(), params);
    }

    #[test]
    fn generation_rejects_bad_lengths_and_times_out() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert_eq!(
            GroupParams::generate(15, &mut rng).unwrap_err(),
            CryptoError::InvalidBitLength(15)
        );
        assert_eq!(
            GroupParams::generate(8, &mut rng).unwrap_err(),
            CryptoError::InvalidBitLength(8)
        );
        assert_eq!(
            GroupParams::generate_with_budget(512, &mut rng, 1).unwrap_err(),
            CryptoError::GenerationTimeout { attempts: 1 }
        );
    }

    #[test]
    fn from_parts_rejects_non_safe_primes() {
        // 29 is prime but 14 is not.
        assert!(GroupParams::from_parts("x", BigUint::from(29u8), BigUint::from(4u8)).is_err());
        // g = 1 is not a generator.
        assert!(GroupParams::from_parts("x", BigUint::from(23u8), BigUint::one()).is_err());
    }

    #[test]
    fn keygen_examples() {
        let params = GroupParams::toy23();
        let kp = KeyPair::from_secret(&params, params.scalar_u64(1)).unwrap();
        assert_eq!(kp.public().value(), &BigUint::from(4u8));
        let kp = KeyPair::from_secret(&params, params.scalar_u64(3)).unwrap();
        assert_eq!(kp.public().value(), &BigUint::from(18u8));
        assert_eq!(
            KeyPair::from_secret(&params, params.scalar_u64(0)).unwrap_err(),
            CryptoError::ZeroSecret
        );
    }

    #[test]
    fn membership_agrees_with_exponent_check() {
        let params = GroupParams::toy23();
        for v in 0u32..30 {
            let v = BigUint::from(v);
            let by_exp = v > BigUint::one()
                && v < *params.p()
                && v.modpow(params.q(), params.p()).is_one();
            assert_eq!(params.is_member(&v), by_exp, "v = {v}");
        }
        let params = GroupParams::test256();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v = rng.gen_biguint_below(params.p());
            let by_exp = v > BigUint::one() && v.modpow(params.q(), params.p()).is_one();
            assert_eq!(params.is_member(&v), by_exp);
        }
    }

    #[test]
    fn scalar_arithmetic_and_hex() {
        let params = GroupParams::toy23();
        let a = params.scalar_u64(7);
        let b = params.scalar_u64(9);
        assert_eq!(params.scalar_add(&a, &b), params.scalar_u64(5));
        assert_eq!(params.scalar_sub(&a, &b), params.scalar_u64(9));
        assert_eq!(params.scalar_mul(&a, &b), params.scalar_u64(8));
        assert_eq!(params.scalar_u64(25), params.scalar_u64(3));
        assert_eq!(params.scalar_hex(&a), "07");
        assert_eq!(params.scalar_from_hex("07").unwrap(), a);
        assert_eq!(params.scalar_from_hex("0b"), Err(CryptoError::ScalarOutOfRange));
        assert_eq!(params.element_from_hex("01"), Err(CryptoError::NotInGroup));
        assert_eq!(params.element_from_hex("05"), Err(CryptoError::NotInGroup));
        assert_eq!(params.element_hex(&params.element_from_hex("12").unwrap()), "12");
    }
}
