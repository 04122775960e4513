use num_bigint::BigUint;
use num_traits::Zero;

const STACK_LIMBS: usize = 66;

/// Montgomery arithmetic modulo a fixed odd modulus, on little-endian
/// 64-bit limbs. Values in Montgomery form are `a * R mod n` with
/// `R = 2^(64 * limbs)`.
#[derive(Debug, Clone)]
pub struct Montgomery {
    modulus: BigUint,
    n: Vec<u64>,
    n0inv: u64,
    r2: Vec<u64>,
    one: Vec<u64>,
}

impl Montgomery {
    pub fn new(modulus: &BigUint) -> Self {
        assert!(modulus.bit(0) && modulus.bits() > 1, "Montgomery modulus must be odd and greater than 1");
        let n = modulus.to_u64_digits();
        let s = n.len();
        // Newton iteration for n[0]^-1 mod 2^64.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n[0].wrapping_mul(inv)));
        }
        let r = BigUint::from(1u8) << (64 * s);
        let r2 = (&r * &r) % modulus;
        let one = &r % modulus;
        Self {
            modulus: modulus.clone(),
            n0inv: inv.wrapping_neg(),
            r2: limbs(&r2, s),
            one: limbs(&one, s),
            n,
        }
    }

    pub fn limbs(&self) -> usize {
        self.n.len()
    }

    pub fn one(&self) -> Vec<u64> {
        self.one.clone()
    }

    pub fn to_mont(&self, a: &BigUint) -> Vec<u64> {
        let reduced = if a >= &self.modulus { a % &self.modulus } else { a.clone() };
        let mut out = vec![0; self.limbs()];
        self.mul_into(&limbs(&reduced, self.limbs()), &self.r2, &mut out);
        out
    }

    pub fn from_mont(&self, a: &[u64]) -> BigUint {
        let mut unit = vec![0; self.limbs()];
        unit[0] = 1;
        let mut out = vec![0; self.limbs()];
        self.mul_into(a, &unit, &mut out);
        BigUint::from_slice(&to_u32(&out))
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.limbs()];
        self.mul_into(a, b, &mut out);
        out
    }

    /// `out = a * b / R mod n` (coarsely integrated operand scanning).
    pub fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let s = self.limbs();
        if s + 2 <= 8 {
            let mut t = [0u64; 8];
            cios(&self.n, self.n0inv, a, b, &mut t[..s + 2]);
            finish(&self.n, &t[..s + 2], out);
        } else if s + 2 <= STACK_LIMBS {
            let mut t = [0u64; STACK_LIMBS];
            cios(&self.n, self.n0inv, a, b, &mut t[..s + 2]);
            finish(&self.n, &t[..s + 2], out);
        } else {
            let mut t = vec![0u64; s + 2];
            cios(&self.n, self.n0inv, a, b, &mut t);
            finish(&self.n, &t, out);
        }
    }

    /// `base^exp mod n` with a left-to-right sliding window.
    pub fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        if exp.is_zero() {
            return BigUint::from(1u8) % &self.modulus;
        }
        let bits = exp.bits() as usize;
        let w = match bits {
            0..=24 => 1,
            25..=80 => 3,
            81..=240 => 4,
            241..=672 => 5,
            _ => 6,
        };
        let b = self.to_mont(base);
        // Odd powers b^1, b^3, ..., b^(2^w - 1).
        let b2 = self.mul(&b, &b);
        let mut odd = Vec::with_capacity(1 << (w - 1));
        odd.push(b.clone());
        for i in 1..(1 << (w - 1)) {
            let next = self.mul(&odd[i - 1], &b2);
            odd.push(next);
        }
        let e = exp.to_u64_digits();
        let bit = |i: usize| (e[i / 64] >> (i % 64)) & 1 == 1;
        let mut acc: Option<Vec<u64>> = None;
        let mut tmp = vec![0u64; self.limbs()];
        let mut i = bits as isize - 1;
        while i >= 0 {
            if !bit(i as usize) {
                if let Some(a) = acc.as_mut() {
                    self.mul_into(a, a, &mut tmp);
                    std::mem::swap(a, &mut tmp);
                }
                i -= 1;
                continue;
            }
            // Longest window ending in a set bit.
            let mut low = (i - w as isize + 1).max(0);
            while !bit(low as usize) {
                low += 1;
            }
            let mut value = 0usize;
            for j in (low..=i).rev() {
                value = (value << 1) | bit(j as usize) as usize;
            }
            let width = (i - low + 1) as usize;
            match acc.as_mut() {
                None => acc = Some(odd[value >> 1].clone()),
                Some(a) => {
                    for _ in 0..width {
                        self.mul_into(a, a, &mut tmp);
                        std::mem::swap(a, &mut tmp);
                    }
                    self.mul_into(a, &odd[value >> 1], &mut tmp);
                    std::mem::swap(a, &mut tmp);
                }
            }
            i = low - 1;
        }
        self.from_mont(&acc.expect("exponent is nonzero"))
    }
}

fn cios(n: &[u64], n0inv: u64, a: &[u64], b: &[u64], t: &mut [u64]) {
    let s = n.len();
    for &bi in b.iter().take(s) {
        let mut carry = 0u128;
        for j in 0..s {
            let v = t[j] as u128 + (a[j] as u128) * (bi as u128) + carry;
            t[j] = v as u64;
            carry = v >> 64;
        }
        let v = t[s] as u128 + carry;
        t[s] = v as u64;
        t[s + 1] = (v >> 64) as u64;

        let m = t[0].wrapping_mul(n0inv);
        let v = t[0] as u128 + (m as u128) * (n[0] as u128);
        let mut carry = v >> 64;
        for j in 1..s {
            let v = t[j] as u128 + (m as u128) * (n[j] as u128) + carry;
            t[j - 1] = v as u64;
            carry = v >> 64;
        }
        let v = t[s] as u128 + carry;
        t[s - 1] = v as u64;
        t[s] = t[s + 1] + (v >> 64) as u64;
    }
}

fn finish(n: &[u64], t: &[u64], out: &mut [u64]) {
    let s = n.len();
    if t[s] != 0 || !lt(&t[..s], n) {
        let mut borrow = 0u64;
        for j in 0..s {
            let (d1, b1) = t[j].overflowing_sub(n[j]);
            let (d2, b2) = d1.overflowing_sub(borrow);
            out[j] = d2;
            borrow = (b1 | b2) as u64;
        }
    } else {
        out.copy_from_slice(&t[..s]);
    }
}

fn lt(a: &[u64], b: &[u64]) -> bool {
    for j in (0..a.len()).rev() {
        if a[j] != b[j] {
            return a[j] < b[j];
        }
    }
    false
}

fn limbs(v: &BigUint, s: usize) -> Vec<u64> {
    let mut d = v.to_u64_digits();
    d.resize(s, 0);
    d
}

fn to_u32(v: &[u64]) -> Vec<u32> {
    v.iter().flat_map(|&x| [x as u32, (x >> 32) as u32]).collect()
}
