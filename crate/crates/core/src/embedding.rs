//! The stationary embedding of the lattice into the integers.
//!
//! A digit state `gamma_1..gamma_L` picks, at each level `r`, which of
//! the `N` radius-`(r-1)` sub-balls of the radius-`r` ball around the
//! origin holds the origin. Embedded, this places vertex 0 at offset
//! `sum gamma_r N^(r-1)` within the `N^L` consecutive integers covering
//! the radius-`L` ball, and the Kakutani-Von Neumann transformation
//! (the base-`N` odometer) translates the embedding by exactly +1.
//!
//! Digits are tracked to a finite length `L`. A carry past digit `L`
//! is an explicit error rather than a silent wrap, so every check in
//! this module is exact on the period-`N^L` odometer orbit.

use crate::error::{Error, Result};
use crate::lattice::{upow, Address};
use crate::rng::{stream, Purpose};
use rand::Rng;
use serde::Serialize;
use std::io::Write;

/// The first `L` digits `gamma_1..gamma_L` of a base-`N` expansion,
/// least significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitState {
    order: u32,
    digits: Vec<u8>,
}

impl DigitState {
    pub fn new(order: u32, digits: Vec<u8>) -> Result<Self> {
        if order < 2 {
            return Err(Error::Parameter(format!("order must be >= 2, got {order}")));
        }
        if digits.is_empty() {
            return Err(Error::Parameter("digit state needs at least one digit".into()));
        }
        if let Some(&d) = digits.iter().find(|&&d| u32::from(d) >= order) {
            return Err(Error::Parameter(format!(
                "digit {d} out of range for order {order}"
            )));
        }
        Ok(DigitState { order, digits })
    }

    pub fn zero(order: u32, len: usize) -> Result<Self> {
        DigitState::new(order, vec![0; len])
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Append one more tracked digit (the new most significant one).
    pub fn extend(&self, digit: u8) -> Result<Self> {
        let mut digits = self.digits.clone();
        digits.push(digit);
        DigitState::new(self.order, digits)
    }
}

/// One step of the Kakutani-Von Neumann transformation: with
/// `Y = min{n : gamma_n != N-1}`, zero the digits before `Y` and
/// increment digit `Y`. Errors when every tracked digit equals `N-1`;
/// the caller must extend the state.
pub fn kvn_step(d: &DigitState) -> Result<DigitState> {
    let top = (d.order - 1) as u8;
    let y = d
        .digits
        .iter()
        .position(|&g| g != top)
        .ok_or(Error::CarryOverflow(d.len()))?;
    let mut digits = d.digits.clone();
    for g in &mut digits[..y] {
        *g = 0;
    }
    digits[y] += 1;
    Ok(DigitState {
        order: d.order,
        digits,
    })
}

/// `kvn_step` with wrap-around: the all-`(N-1)` state maps to all
/// zeros, closing the period-`N^L` orbit.
pub fn kvn_step_cyclic(d: &DigitState) -> DigitState {
    kvn_step(d).unwrap_or_else(|_| DigitState {
        order: d.order,
        digits: vec![0; d.len()],
    })
}

/// Index of the length-`m` interval holding the state:
/// `k = sum_{r=1}^{m} gamma_r N^(m-r)` (most significant digit first).
pub fn interval_index(d: &DigitState, m: usize) -> Result<u64> {
    if m > d.len() {
        return Err(Error::Parameter(format!(
            "interval depth {m} exceeds tracked length {}",
            d.len()
        )));
    }
    let mut k = 0u64;
    for &g in &d.digits[..m] {
        k = k * d.order as u64 + g as u64;
    }
    Ok(k)
}

/// Fraction of `j in [0, steps)` with the `j`-th odometer iterate of
/// `d0` in the interval `I_{m,k}`. Over a full period `steps = N^L`
/// the count is exactly `N^(L-m)` for every `k`.
pub fn orbit_frequency(d0: &DigitState, m: usize, k: u64, steps: u64) -> Result<f64> {
    let period = upow(d0.order as u64, d0.len() as u32)?;
    if steps == 0 || steps > period {
        return Err(Error::Parameter(format!(
            "steps {steps} outside 1..={period}"
        )));
    }
    if k >= upow(d0.order as u64, m as u32)? {
        return Err(Error::Parameter(format!("interval index {k} out of range")));
    }
    let mut state = d0.clone();
    let mut hits = 0u64;
    for _ in 0..steps {
        if interval_index(&state, m)? == k {
            hits += 1;
        }
        state = kvn_step_cyclic(&state);
    }
    Ok(hits as f64 / steps as f64)
}

/// Offset of vertex 0 within the `N^L` consecutive integers covering
/// the radius-`L` ball: `sum gamma_r N^(r-1)`.
pub fn zero_position(d: &DigitState) -> Result<u64> {
    let n = d.order as u64;
    let mut pos = 0u64;
    for (r, &g) in d.digits.iter().enumerate() {
        pos += g as u64 * upow(n, r as u32)?;
    }
    Ok(pos)
}

/// Integer window covered by the embedding:
/// `[-zero_position, N^L - 1 - zero_position]`.
pub fn window(d: &DigitState) -> Result<(i64, i64)> {
    let size = upow(d.order as u64, d.len() as u32)?;
    if size > i64::MAX as u64 {
        return Err(Error::Capacity(format!("window of {size} integers exceeds i64")));
    }
    let zp = zero_position(d)? as i64;
    Ok((-zp, size as i64 - 1 - zp))
}

/// The address embedded at integer `z`. Digit `r` of the address is the
/// position digit rotated by `gamma_r`: `x_r = (pos_r - gamma_r) mod N`
/// where `pos = z + zero_position`. This convention is frozen; it makes
/// `address_at(0)` the origin and maps every radius-`r` ball onto `N^r`
/// consecutive integers.
pub fn address_at(d: &DigitState, z: i64) -> Result<Address> {
    let (lo, hi) = window(d)?;
    if z < lo || z > hi {
        return Err(Error::Window(z));
    }
    let n = d.order as u64;
    let mut pos = (z - lo) as u64; // z + zero_position
    let mut digits = Vec::with_capacity(d.len());
    for &g in &d.digits {
        let pos_r = (pos % n) as u8;
        digits.push((pos_r + d.order as u8 - g) % d.order as u8);
        pos /= n;
    }
    Address::from_digits(d.order, &digits)
}

/// One lag of a stationarity report.
#[derive(Debug, Clone, Serialize)]
pub struct LagComparison {
    pub lag: u64,
    /// Total-variation distance between the empirical distance laws at
    /// the two base points.
    pub tv: f64,
    /// Largest per-distance z-score between the two samples.
    pub max_z: f64,
    pub ok: bool,
}

/// Translation-invariance check of the pair-distance process.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub order: u32,
    pub tracked_len: usize,
    pub trials: u64,
    pub base_points: (i64, i64),
    pub lags: Vec<LagComparison>,
    pub max_tv: f64,
    pub ok: bool,
}

impl StationarityReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "lag,tv,max_z,ok")?;
        for l in &self.lags {
            writeln!(w, "{},{},{},{}", l.lag, l.tv, l.max_z, l.ok as u8)?;
        }
        Ok(())
    }
}

fn random_state<R: Rng>(order: u32, len: usize, rng: &mut R) -> DigitState {
    DigitState {
        order,
        digits: (0..len).map(|_| rng.gen_range(0..order) as u8).collect(),
    }
}

/// Distance observed between the vertices embedded at `z` and `z + lag`,
/// extending the state with further uniform digits whenever either
/// endpoint falls outside the current window.
fn lag_distance<R: Rng>(d: &DigitState, z: i64, lag: u64, rng: &mut R) -> Result<u32> {
    let mut state = d.clone();
    loop {
        let (lo, hi) = window(&state)?;
        let z2 = z
            .checked_add(lag as i64)
            .ok_or_else(|| Error::Parameter("lag overflows i64".into()))?;
        if z >= lo && z2 <= hi {
            let a = address_at(&state, z)?;
            let b = address_at(&state, z2)?;
            return a.distance(&b);
        }
        state = state.extend(rng.gen_range(0..state.order) as u8)?;
    }
}

/// Compare the empirical law of `d(address_at(z), address_at(z+h))`
/// at two base points for each lag `h`, over `trials` uniform digit
/// states. Translation invariance predicts identical laws; each lag is
/// tested per distance value at 3 standard errors, and the largest
/// total-variation discrepancy is reported.
pub fn stationarity_check(order: u32, tracked_len: usize, trials: u64, seed: u64) -> Result<StationarityReport> {
    if tracked_len < 2 {
        return Err(Error::Parameter("tracked length must be >= 2".into()));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let period = upow(order as u64, tracked_len as u32)?;
    let max_lag = period / order as u64; // N^(L-1)
    let mut lags: Vec<u64> = vec![1, 2];
    if max_lag > 2 {
        lags.push(max_lag);
    }
    lags.dedup();
    let base_points = (0i64, 1 - (period as i64) / 2);
    let mut rng = stream(seed, 0, 0, Purpose::Experiment);
    let mut out = Vec::new();
    let mut max_tv = 0.0f64;
    let mut all_ok = true;
    for &lag in &lags {
        // histogram per base point, indexed by distance (cap generous:
        // extension can push distances past tracked_len)
        let depth = tracked_len + 66;
        let mut h1 = vec![0u64; depth];
        let mut h2 = vec![0u64; depth];
        for _ in 0..trials {
            let d = random_state(order, tracked_len, &mut rng);
            h1[lag_distance(&d, base_points.0, lag, &mut rng)? as usize] += 1;
            let d = random_state(order, tracked_len, &mut rng);
            h2[lag_distance(&d, base_points.1, lag, &mut rng)? as usize] += 1;
        }
        let n = trials as f64;
        let mut tv = 0.0;
        let mut max_z = 0.0f64;
        for i in 0..depth {
            let (p, q) = (h1[i] as f64 / n, h2[i] as f64 / n);
            tv += (p - q).abs() / 2.0;
            let var = p * (1.0 - p) / n + q * (1.0 - q) / n;
            if var > 0.0 {
                max_z = max_z.max((p - q).abs() / var.sqrt());
            } else if p != q {
                max_z = f64::INFINITY;
            }
        }
        let ok = max_z <= 3.0;
        all_ok &= ok;
        max_tv = max_tv.max(tv);
        out.push(LagComparison {
            lag,
            tv,
            max_z,
            ok,
        });
    }
    Ok(StationarityReport {
        order,
        tracked_len,
        trials,
        base_points,
        lags: out,
        max_tv,
        ok: all_ok,
    })
}
