//! Reference implementations shared by the integration tests. They follow
//! the block definitions literally and share no code with the crate.

#![allow(dead_code)]

pub fn fact(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// Binary words in length-lexicographic order, concatenated.
pub fn champernowne(len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 64);
    let mut width = 1u32;
    while out.len() < len {
        for v in 0u64..(1u64 << width) {
            for b in (0..width).rev() {
                out.push(((v >> b) & 1) as u8);
            }
            if out.len() >= len {
                break;
            }
        }
        width += 1;
    }
    out.truncate(len);
    out
}

pub struct Construction<'a> {
    pub k: u32,
    pub prefix: Vec<u8>,
    pub gamma: &'a dyn Fn(u64) -> u8,
    pub alpha: &'a dyn Fn(u64) -> u8,
    /// `x_i(n)` for `i >= 1`.
    pub family: &'a dyn Fn(u32, u64) -> u8,
}

fn b_block(g: &dyn Fn(u64) -> u8, i: u64, j: u32, out: &mut Vec<u8>) {
    let h = fact(j) / 2;
    for r in 0..=j as u64 {
        for w in 0..h {
            out.push(g(i + r * (h - 1) + w));
        }
    }
}

fn bhat_block(g: &dyn Fn(u64) -> u8, i: u64, j: u32, out: &mut Vec<u8>) {
    let half = fact(j + 1) / 2;
    b_block(g, i, j, out);
    let start = out.len();
    b_block(g, i + half, j, out);
    for b in &mut out[start..] {
        *b ^= 1;
    }
}

impl Construction<'_> {
    /// The first `len` bits, stage by stage.
    pub fn materialize(&self, len: usize) -> Vec<u8> {
        let mut out = self.prefix.clone();
        let mut m = self.k;
        while out.len() < len {
            let f = fact(m);
            for n in 0..f {
                out.push((self.alpha)(n));
            }
            for s in 0..m as u64 {
                let bit = (self.gamma)(s);
                out.extend(std::iter::repeat_n(bit, fact(m - 1) as usize));
            }
            for r in 1..m as usize {
                for _ in 0..fact(m - 2) {
                    out.extend(std::iter::repeat_n(0, r));
                    out.extend(std::iter::repeat_n(1, r));
                }
            }
            for i in 1..=m - 3 {
                let x = |n: u64| (self.family)(i, n);
                bhat_block(&x, 4 * f + (i as u64 - 1) * f, m - 1, &mut out);
            }
            m += 1;
        }
        out.truncate(len);
        out
    }
}

/// Number of positions where `a[s..s+n)` and `b[t..t+n)` differ, as the
/// numerator of the truncated distance at precision `n`.
pub fn dyadic_numerator(a: &[u8], s: usize, b: &[u8], t: usize, n: usize) -> num_bigint::BigUint {
    let mut acc = num_bigint::BigUint::from(0u32);
    for i in 0..n {
        acc <<= 1;
        if a[s + i] != b[t + i] {
            acc += 1u32;
        }
    }
    acc
}

pub fn all_ones(n: u32) -> num_bigint::BigUint {
    (num_bigint::BigUint::from(1u32) << n) - 1u32
}

/// `g` on numerators over a fixed odd denominator `q`.
pub fn g_step(p: i64, q: i64) -> i64 {
    if 2 * p <= -q {
        2 * p + 2 * q
    } else if p <= 0 {
        -2 * p
    } else {
        -p
    }
}

/// Source bits needed to materialise `len` bits: stage `m` reads below
/// `2 (m+1)!`.
pub fn source_len(len: usize) -> usize {
    let mut m = 5;
    while (fact(m + 1) as usize) < len {
        m += 1;
    }
    2 * fact(m + 1) as usize + 64
}
