//! Ultrametric address arithmetic on the hierarchical lattice of order `N`.
//!
//! A vertex is a finite base-`N` digit sequence `(x_1, x_2, ...)`,
//! identified with the nonnegative integer label `sum x_i N^(i-1)`.
//! The distance between two vertices is the largest index at which
//! their digits differ, which makes the label intervals
//! `[b*N^r, (b+1)*N^r)` exactly the balls of radius `r`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `base^exp` with overflow reported as a capacity error.
pub fn upow(base: u64, exp: u32) -> Result<u64> {
    base.checked_pow(exp)
        .ok_or_else(|| Error::Capacity(format!("{base}^{exp} exceeds u64")))
}

fn check_order(order: u32) -> Result<()> {
    if order < 2 {
        return Err(Error::Parameter(format!("order must be >= 2, got {order}")));
    }
    Ok(())
}

/// A vertex of the lattice: the order `N` plus its integer label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Address {
    order: u32,
    label: u64,
}

impl Address {
    pub fn new(order: u32, label: u64) -> Result<Self> {
        check_order(order)?;
        Ok(Address { order, label })
    }

    /// Build an address from its digit sequence, least significant first.
    pub fn from_digits(order: u32, digits: &[u8]) -> Result<Self> {
        check_order(order)?;
        let mut label: u64 = 0;
        for (i, &d) in digits.iter().enumerate() {
            if u32::from(d) >= order {
                return Err(Error::Parameter(format!(
                    "digit {d} at index {} out of range for order {order}",
                    i + 1
                )));
            }
            let weight = upow(order as u64, i as u32)?;
            label = label
                .checked_add(u64::from(d).checked_mul(weight).ok_or_else(|| {
                    Error::Capacity("digit sequence exceeds u64 label range".into())
                })?)
                .ok_or_else(|| Error::Capacity("digit sequence exceeds u64 label range".into()))?;
        }
        Ok(Address { order, label })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn label(&self) -> u64 {
        self.label
    }

    /// Digit sequence, least significant first, trailing zeros dropped.
    pub fn digits(&self) -> Vec<u8> {
        let n = self.order as u64;
        let mut x = self.label;
        let mut out = Vec::new();
        while x > 0 {
            out.push((x % n) as u8);
            x /= n;
        }
        out
    }

    /// Ultrametric distance: the largest index at which the digits differ.
    pub fn distance(&self, other: &Address) -> Result<u32> {
        if self.order != other.order {
            return Err(Error::Parameter(format!(
                "mixed orders: {} vs {}",
                self.order, other.order
            )));
        }
        let n = self.order as u64;
        let (mut a, mut b) = (self.label, other.label);
        let mut d = 0;
        while a != b {
            a /= n;
            b /= n;
            d += 1;
        }
        Ok(d)
    }
}

/// A ball of radius `r`: the `N^r` addresses agreeing with the anchor
/// on all digits beyond index `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    order: u32,
    radius: u32,
    base: u64,
}

impl Ball {
    pub fn new(anchor: &Address, radius: u32) -> Result<Self> {
        let size = upow(anchor.order() as u64, radius)?;
        let base = anchor.label() - anchor.label() % size;
        Ok(Ball {
            order: anchor.order(),
            radius,
            base,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Label of the smallest member.
    pub fn base_label(&self) -> u64 {
        self.base
    }

    pub fn len(&self) -> Result<u64> {
        upow(self.order as u64, self.radius)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, a: &Address) -> bool {
        if a.order() != self.order {
            return false;
        }
        let size = match upow(self.order as u64, self.radius) {
            Ok(s) => s,
            Err(_) => return false,
        };
        a.label() >= self.base && a.label() < self.base + size
    }

    /// All members in label order. `cap` bounds the enumeration size;
    /// exceeding it is a capacity error, never a truncation.
    pub fn members(&self, cap: u64) -> Result<Vec<Address>> {
        let size = self.len()?;
        if size > cap {
            return Err(Error::Capacity(format!(
                "ball of radius {} holds {size} addresses, cap is {cap}",
                self.radius
            )));
        }
        (self.base..self.base + size)
            .map(|l| Address::new(self.order, l))
            .collect()
    }
}

/// Number of vertices at distance exactly `k` from any fixed vertex:
/// `(N-1) * N^(k-1)`.
pub fn shell_size(order: u32, k: u32) -> Result<u64> {
    check_order(order)?;
    if k == 0 {
        return Err(Error::Parameter("shell index k must be >= 1".into()));
    }
    upow(order as u64, k - 1)?
        .checked_mul(order as u64 - 1)
        .ok_or_else(|| Error::Capacity("shell size exceeds u64".into()))
}

/// Number of unordered pairs at distance exactly `k` inside a ball of
/// radius `n`: `N^n * (N-1) * N^(k-1) / 2`.
pub fn pair_count(order: u32, n: u32, k: u32) -> Result<u64> {
    check_order(order)?;
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "distance class k={k} outside 1..={n}"
        )));
    }
    let prod = upow(order as u64, n)? as u128 * shell_size(order, k)? as u128;
    u64::try_from(prod / 2).map_err(|_| Error::Capacity("pair count exceeds u64".into()))
}

fn unrank_subball_pair(order: u32, mut q: u64) -> (u64, u64) {
    // Lexicographic unranking of (i1, i2) with 0 <= i1 < i2 < N.
    let n = order as u64;
    let mut i1 = 0;
    loop {
        let block = n - 1 - i1;
        if q < block {
            return (i1, i1 + 1 + q);
        }
        q -= block;
        i1 += 1;
    }
}

/// Decode the `j`-th unordered pair at distance `k` inside the ball of
/// radius `n` around the origin.
///
/// The bijection is frozen for reproducibility of skip-sampled
/// configurations: index `j` is split ball-major over the `N^(n-k)`
/// radius-`k` balls, then over the `C(N,2)` ordered sub-ball pairs
/// `(i1, i2)` in lexicographic order, then `o1`-major over the two
/// offsets in `[0, N^(k-1))`. The returned labels satisfy `u < v` and
/// `distance(u, v) = k`.
pub fn decode_pair(order: u32, n: u32, k: u32, j: u64) -> Result<(Address, Address)> {
    let total = pair_count(order, n, k)?;
    if j >= total {
        return Err(Error::Parameter(format!(
            "pair index {j} out of range 0..{total}"
        )));
    }
    let nn = order as u64;
    let sub = upow(nn, k - 1)?; // size of a radius-(k-1) sub-ball
    let per_ball = nn * (nn - 1) / 2 * sub * sub;
    let ball = j / per_ball;
    let rem = j % per_ball;
    let (i1, i2) = unrank_subball_pair(order, rem / (sub * sub));
    let rem2 = rem % (sub * sub);
    let (o1, o2) = (rem2 / sub, rem2 % sub);
    let base = ball * sub * nn;
    let u = base + i1 * sub + o1;
    let v = base + i2 * sub + o2;
    Ok((Address::new(order, u)?, Address::new(order, v)?))
}
