//! Arithmetic modulo a 64-bit prime.

/// Mersenne prime 2^61 - 1.
pub const P61: u64 = (1 << 61) - 1;

pub fn add(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

pub fn sub(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + p as u128 - b as u128) % p as u128) as u64
}

pub fn mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, b, p);
        }
        b = mul(b, b, p);
        e >>= 1;
    }
    acc
}

/// Inverse by Fermat; `a` must be nonzero mod `p`.
pub fn inv(a: u64, p: u64) -> u64 {
    pow(a, p - 2, p)
}
