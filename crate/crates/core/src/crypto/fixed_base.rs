use num_bigint::BigUint;
use std::sync::Arc;

use super::mont::Montgomery;

/// Precomputed powers of one base for exponents of bounded bit length.
///
/// Entry `(j, d)` holds `base^(d * 2^(w*j))`, so evaluating an exponent
/// costs one modular multiplication per nonzero `w`-bit digit and no
/// squarings. Building the table costs `windows * (2^w - 1)` multiplications.
/// Entries are kept in Montgomery form.
#[derive(Clone)]
pub struct FixedBaseTable {
    ctx: Arc<Montgomery>,
    window: u32,
    windows: usize,
    table: Vec<Vec<u64>>,
}

impl std::fmt::Debug for FixedBaseTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FixedBaseTable")
            .field("window", &self.window)
            .field("windows", &self.windows)
            .finish_non_exhaustive()
    }
}

impl FixedBaseTable {
    /// Table modulo an odd `modulus`.
    pub fn new(base: &BigUint, modulus: &BigUint, max_bits: u64, window: u32) -> Self {
        Self::with_context(Arc::new(Montgomery::new(modulus)), base, max_bits, window)
    }

    pub(crate) fn with_context(ctx: Arc<Montgomery>, base: &BigUint, max_bits: u64, window: u32) -> Self {
        assert!((1..=8).contains(&window), "window must be 1..=8 bits");
        let windows = (max_bits as usize).div_ceil(window as usize).max(1);
        let per = (1usize << window) - 1;
        let mut table = Vec::with_capacity(windows * per);
        let mut column_base = ctx.to_mont(base);
        for _ in 0..windows {
            let mut acc = column_base.clone();
            table.push(acc.clone());
            for _ in 1..per {
                acc = ctx.mul(&acc, &column_base);
                table.push(acc.clone());
            }
            // base^(2^(w*(j+1))) = base^((2^w - 1) * 2^(w*j)) * base^(2^(w*j))
            column_base = ctx.mul(&acc, &column_base);
        }
        Self {
            ctx,
            window,
            windows,
            table,
        }
    }

    pub fn max_bits(&self) -> u64 {
        (self.windows * self.window as usize) as u64
    }

    pub fn pow(&self, exponent: &BigUint) -> BigUint {
        assert!(
            exponent.bits() <= self.max_bits(),
            "exponent exceeds table capacity"
        );
        let per = (1usize << self.window) - 1;
        let limbs = exponent.to_u64_digits();
        let mut acc: Option<Vec<u64>> = None;
        let mut tmp = vec![0u64; self.ctx.limbs()];
        for j in 0..self.windows {
            let d = digit(&limbs, j * self.window as usize, self.window);
            if d == 0 {
                continue;
            }
            let entry = &self.table[j * per + d - 1];
            match acc.as_mut() {
                None => acc = Some(entry.clone()),
                Some(a) => {
                    self.ctx.mul_into(a, entry, &mut tmp);
                    std::mem::swap(a, &mut tmp);
                }
            }
        }
        self.ctx.from_mont(&acc.unwrap_or_else(|| self.ctx.one()))
    }
}

fn digit(limbs: &[u64], bit: usize, width: u32) -> usize {
    let limb = bit / 64;
    let offset = bit % 64;
    let lo = limbs.get(limb).copied().unwrap_or(0) >> offset;
    let hi = if offset + width as usize > 64 {
        limbs.get(limb + 1).copied().unwrap_or(0) << (64 - offset)
    } else {
        0
    };
    ((lo | hi) & ((1u64 << width) - 1)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::RandBigInt;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn matches_modpow() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let modulus = BigUint::parse_bytes(b"ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff72ef", 16).unwrap();
        for window in [1, 3, 4, 5, 7, 8] {
            let base = rng.gen_biguint_below(&modulus);
            let table = FixedBaseTable::new(&base, &modulus, 256, window);
            for _ in 0..20 {
                let e = rng.gen_biguint(256);
                assert_eq!(table.pow(&e), base.modpow(&e, &modulus));
            }
            assert_eq!(table.pow(&BigUint::from(0u8)), BigUint::one());
        }
    }

    #[test]
    fn toy_modulus() {
        let m = BigUint::from(23u8);
        let t = FixedBaseTable::new(&BigUint::from(4u8), &m, 4, 2);
        for e in 0u32..16 {
            assert_eq!(t.pow(&BigUint::from(e)), BigUint::from(4u8).modpow(&BigUint::from(e), &m));
        }
    }

    #[test]
    #[should_panic]
    fn rejects_oversized_exponent() {
        let m = BigUint::from(23u8);
        FixedBaseTable::new(&BigUint::from(4u8), &m, 4, 2).pow(&BigUint::from(16u8));
    }
}
