//! Arithmetic in Z_d.

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn is_prime(d: u32) -> bool {
    if d < 2 {
        return false;
    }
    let d = d as u64;
    let mut p = 2;
    while p * p <= d {
        if d % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

/// Units of Z_d in increasing order.
pub fn units(d: u32) -> Vec<u32> {
    (1..d).filter(|&a| gcd(a as u64, d as u64) == 1).collect()
}

pub fn is_unit(a: u32, d: u32) -> bool {
    a < d && gcd(a as u64, d as u64) == 1
}

/// Multiplicative inverse of a unit `a` modulo `d`.
pub fn inv_mod(a: u32, d: u32) -> Option<u32> {
    let (mut r0, mut r1) = (d as i64, (a % d) as i64);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(d as i64) as u32)
}

#[inline]
pub fn mul_mod(a: u32, b: u32, d: u32) -> u32 {
    ((a as u64 * b as u64) % d as u64) as u32
}

#[inline]
pub fn add_mod(a: u32, b: u32, d: u32) -> u32 {
    ((a as u64 + b as u64) % d as u64) as u32
}

#[inline]
pub fn sub_mod(a: u32, b: u32, d: u32) -> u32 {
    ((a as u64 + d as u64 - (b % d) as u64) % d as u64) as u32
}
