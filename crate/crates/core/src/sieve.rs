//! Sieved tables of `d_k(n)` and their on-disk format.
//!
//! A table costs 4 bytes per entry for the counts plus 1/8 byte per entry
//! for prefix checkpoints; construction temporarily needs one more byte per
//! entry for prime exponents.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Largest `k` supported by the sieve.
pub const MAX_K: u32 = 6;
/// Largest table the sieve will build.
pub const MAX_LIMIT: u64 = 1_000_000_000;
/// Prefix sums are stored every this many entries.
const CHECKPOINT_STRIDE: u64 = 64;

/// On-disk magic for cached tables.
pub const DKLB_MAGIC: [u8; 4] = *b"DKLB";
pub const DKLB_VERSION: u16 = 1;
pub const DKLB_HEADER_LEN: usize = 4 + 2 + 1 + 8;

/// Exact values of `d_k(n)` for `1 <= n <= limit`.
///
/// Immutable once built; share it by reference across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorTable {
    k: u32,
    limit: u64,
    // values[0] is unused and always zero.
    values: Vec<u32>,
    checkpoints: Vec<u64>,
}

/// How to build the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SieveMethod {
    /// Linear sieve using `d_k(p^e) = C(e+k-1, k-1)`.
    #[default]
    Linear,
    /// `k - 1` successive Dirichlet convolutions with the constant-one function.
    Convolution,
}

fn check_args(k: u32, limit: u64) -> Result<()> {
    if limit == 0 {
        return Err(Error::EmptyDomain("sieve limit must be at least 1".into()));
    }
    if !(1..=MAX_K).contains(&k) {
        return Err(Error::Unsupported(format!(
            "d_k for k = {k}; supported 1..={MAX_K}"
        )));
    }
    if limit > MAX_LIMIT {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds {MAX_LIMIT} (about 4.1 bytes per entry)"
        )));
    }
    Ok(())
}

/// Builds the table of `d_k(n)` for `n <= limit` with the linear sieve.
pub fn sieve_dk(k: u32, limit: u64) -> Result<DivisorTable> {
    DivisorTable::build(k, limit, SieveMethod::Linear)
}

impl DivisorTable {
    pub fn build(k: u32, limit: u64, method: SieveMethod) -> Result<Self> {
        check_args(k, limit)?;
        let values = match method {
            SieveMethod::Linear => linear_sieve(k, limit as usize)?,
            SieveMethod::Convolution => convolution_sieve(k, limit as usize)?,
        };
        Ok(Self::from_values(k, values))
    }

    fn from_values(k: u32, values: Vec<u32>) -> Self {
        let limit = values.len() as u64 - 1;
        let mut checkpoints = Vec::with_capacity((limit / CHECKPOINT_STRIDE + 1) as usize);
        let mut acc = 0u64;
        for (n, &v) in values.iter().enumerate() {
            acc += v as u64;
            if (n as u64).is_multiple_of(CHECKPOINT_STRIDE) {
                checkpoints.push(acc);
            }
        }
        Self {
            k,
            limit,
            values,
            checkpoints,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// `d_k(n)`; panics when `n` is zero or above the limit.
    #[inline]
    pub fn get(&self, n: u64) -> u32 {
        assert!(
            n >= 1 && n <= self.limit,
            "index {n} outside [1, {}]",
            self.limit
        );
        self.values[n as usize]
    }

    /// Values for `n = 1..=limit`.
    pub fn values(&self) -> &[u32] {
        &self.values[1..]
    }

    /// `D_k(n) = Σ_{m<=n} d_k(m)`, with `D_k(0) = 0`.
    #[inline]
    pub fn summatory(&self, n: u64) -> u64 {
        assert!(n <= self.limit, "index {n} beyond limit {}", self.limit);
        let j = n / CHECKPOINT_STRIDE;
        let base = j * CHECKPOINT_STRIDE;
        let tail: u64 = self.values[base as usize + 1..=n as usize]
            .iter()
            .map(|&v| v as u64)
            .sum();
        self.checkpoints[j as usize] + tail
    }

    /// Iterator over `(n, D_k(n))` for `n` in `from..=to`.
    pub fn prefix_iter(&self, from: u64, to: u64) -> impl Iterator<Item = (u64, u64)> + '_ {
        let start = from.max(1);
        let mut acc = self.summatory(start - 1);
        (start..=to.min(self.limit)).map(move |n| {
            acc += self.values[n as usize] as u64;
            (n, acc)
        })
    }

    /// Writes the DKLB format: magic, version (u16), k (u8), limit (u64),
    /// then `limit` little-endian u32 values.
    pub fn write_dklb<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&DKLB_MAGIC)?;
        w.write_all(&DKLB_VERSION.to_le_bytes())?;
        w.write_all(&[self.k as u8])?;
        w.write_all(&self.limit.to_le_bytes())?;
        let mut buf = Vec::with_capacity(1 << 16);
        for chunk in self.values[1..].chunks(1 << 14) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a DKLB stream; `Domain` errors report a malformed header and
    /// `Validation` errors a body that violates table invariants.
    pub fn read_dklb<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; DKLB_HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|e| Error::Validation(format!("short header: {e}")))?;
        if header[..4] != DKLB_MAGIC {
            return Err(Error::Validation("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != DKLB_VERSION {
            return Err(Error::Validation(format!(
                "format version {version}, expected {DKLB_VERSION}"
            )));
        }
        let k = header[6] as u32;
        let limit = u64::from_le_bytes(header[7..15].try_into().unwrap());
        check_args(k, limit).map_err(|e| Error::Validation(e.to_string()))?;

        let mut values = vec![0u32; limit as usize + 1];
        let mut buf = vec![0u8; 4 << 14];
        let mut n = 1usize;
        while n <= limit as usize {
            let take = (limit as usize + 1 - n).min(1 << 14);
            let bytes = &mut buf[..4 * take];
            r.read_exact(bytes)
                .map_err(|e| Error::Validation(format!("truncated body at entry {n}: {e}")))?;
            for (i, c) in bytes.chunks_exact(4).enumerate() {
                values[n + i] = u32::from_le_bytes(c.try_into().unwrap());
            }
            n += take;
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Validation("trailing bytes after table body".into()));
        }
        if values[1] != 1 || values.iter().skip(1).any(|&v| v == 0) {
            return Err(Error::Validation(
                "table violates d_k(n) >= 1, d_k(1) = 1".into(),
            ));
        }
        Ok(Self::from_values(k, values))
    }
}

fn binom_row(k: u32, max_e: usize) -> Vec<u64> {
    // C(e + k - 1, k - 1) for e = 0..=max_e
    (0..=max_e as u64)
        .map(|e| {
            let mut c = 1u64;
            for i in 1..k as u64 {
                c = c * (e + i) / i;
            }
            c
        })
        .collect()
}

fn linear_sieve(k: u32, n: usize) -> Result<Vec<u32>> {
    let mut values = vec![0u32; n + 1];
    values[1] = 1;
    if k == 1 {
        values[1..].fill(1);
        return Ok(values);
    }
    let mut exp = vec![0u8; n + 1];
    let binom = binom_row(k, 64);
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if values[i] == 0 {
            values[i] = k;
            exp[i] = 1;
            primes.push(i as u32);
        }
        let vi = values[i] as u64;
        for &p in &primes {
            let ip = i * p as usize;
            if ip > n {
                break;
            }
            if i % p as usize == 0 {
                let e = exp[i] as usize;
                exp[ip] = exp[i] + 1;
                let v = vi / binom[e] * binom[e + 1];
                values[ip] = u32::try_from(v)
                    .map_err(|_| Error::Overflow(format!("d_{k}({ip}) = {v} exceeds u32")))?;
                break;
            }
            exp[ip] = 1;
            let v = vi * k as u64;
            values[ip] = u32::try_from(v)
                .map_err(|_| Error::Overflow(format!("d_{k}({ip}) = {v} exceeds u32")))?;
        }
    }
    Ok(values)
}

fn convolution_sieve(k: u32, n: usize) -> Result<Vec<u32>> {
    let mut cur = vec![1u32; n + 1];
    cur[0] = 0;
    for _ in 1..k {
        let mut next = vec![0u32; n + 1];
        for a in 1..=n {
            let va = cur[a];
            let mut m = a;
            while m <= n {
                next[m] = next[m]
                    .checked_add(va)
                    .ok_or_else(|| Error::Overflow(format!("d_{k}({m}) exceeds u32")))?;
                m += a;
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Primes up to `n` (Eratosthenes, odd-only).
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n / 2 + 1];
    let mut out = vec![2u64];
    let mut i = 3usize;
    while i <= n {
        if !composite[i / 2] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j / 2] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let t = sieve_dk(2, 100).unwrap();
        assert_eq!(t.get(6), 4);
        assert_eq!(t.get(1), 1);
        let t3 = sieve_dk(3, 10).unwrap();
        assert_eq!(t3.get(4), 6);
        let t4 = sieve_dk(4, 100).unwrap();
        assert_eq!(t4.get(97), 4);
    }

    #[test]
    fn zero_limit_is_empty_domain() {
        assert!(matches!(sieve_dk(2, 0), Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn k_out_of_range_is_unsupported() {
        assert!(matches!(sieve_dk(7, 10), Err(Error::Unsupported(_))));
        assert!(matches!(sieve_dk(0, 10), Err(Error::Unsupported(_))));
    }

    #[test]
    fn linear_and_convolution_agree() {
        for k in 1..=6 {
            let a = DivisorTable::build(k, 5000, SieveMethod::Linear).unwrap();
            let b = DivisorTable::build(k, 5000, SieveMethod::Convolution).unwrap();
            assert_eq!(a, b, "k = {k}");
        }
    }

    #[test]
    fn summatory_matches_running_sum() {
        let t = sieve_dk(3, 1000).unwrap();
        let mut acc = 0u64;
        for n in 1..=1000 {
            acc += t.get(n) as u64;
            assert_eq!(t.summatory(n), acc);
        }
        assert_eq!(t.summatory(0), 0);
        let it: Vec<_> = t.prefix_iter(100, 105).collect();
        assert_eq!(it[0], (100, t.summatory(100)));
        assert_eq!(it[5], (105, t.summatory(105)));
    }

    #[test]
    fn dklb_round_trip() {
        let t = sieve_dk(3, 777).unwrap();
        let mut buf = Vec::new();
        t.write_dklb(&mut buf).unwrap();
        assert_eq!(buf.len(), DKLB_HEADER_LEN + 4 * 777);
        assert_eq!(&buf[..4], b"DKLB");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(buf[6], 3);
        assert_eq!(u64::from_le_bytes(buf[7..15].try_into().unwrap()), 777);
        assert_eq!(u32::from_le_bytes(buf[15..19].try_into().unwrap()), 1);
        let back = DivisorTable::read_dklb(&buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn dklb_rejects_bad_magic_version_and_truncation() {
        let t = sieve_dk(2, 50).unwrap();
        let mut buf = Vec::new();
        t.write_dklb(&mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(DivisorTable::read_dklb(&bad[..]).is_err());

        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(DivisorTable::read_dklb(&bad[..]).is_err());

        assert!(DivisorTable::read_dklb(&buf[..buf.len() - 3]).is_err());

        let mut long = buf.clone();
        long.push(0);
        assert!(DivisorTable::read_dklb(&long[..]).is_err());
    }

    #[test]
    fn primes_small() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(primes_up_to(1_000_000).len(), 78498);
    }
}
