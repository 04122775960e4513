use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use std::sync::OnceLock;

/// Miller-Rabin rounds; each round has error at most 1/4, so 40 rounds
/// bound the false-positive rate by 2^-80.
pub(crate) const MR_ROUNDS: usize = 40;

pub(crate) fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        const LIMIT: usize = 2000;
        let mut sieve = vec![true; LIMIT];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i < LIMIT {
            if sieve[i] {
                let mut j = i * i;
                while j < LIMIT {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..LIMIT).filter(|&i| sieve[i]).map(|i| i as u32).collect()
    })
}

/// `Some(verdict)` when trial division by the small-prime table settles
/// primality, `None` when a probabilistic test is still required.
pub(crate) fn trial_division(n: &BigUint) -> Option<bool> {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return Some(false);
        }
    }
    for &p in small_primes() {
        let p_big = BigUint::from(p);
        if *n == p_big {
            return Some(true);
        }
        if (n % p).is_zero() {
            return Some(false);
        }
    }
    let bound = *small_primes().last().unwrap() as u64;
    if n.to_u64().is_some_and(|v| v < bound * bound) {
        return Some(true);
    }
    None
}

/// Probabilistic primality test: trial division, then Miller-Rabin with
/// random bases drawn from `rng`.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    if let Some(verdict) = trial_division(n) {
        return verdict;
    }
    miller_rabin(n, rounds, rng)
}

fn miller_rabin<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    let n_minus_one = n - &one;
    let mut d = n_minus_one.clone();
    let mut r = 0u64;
    while d.is_even() {
        d >>= 1;
        r += 1;
    }
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..r {
            x = &x * &x % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
