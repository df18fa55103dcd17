//! Percolation configuration samplers on the ball of radius `n` around
//! the origin.
//!
//! Two samplers draw from the same measure: a dense one that flips every
//! pair, and a geometric-skip one whose cost is proportional to the
//! expected number of edges. The mixed site-bond variant additionally
//! closes each vertex independently with probability `gamma` and keeps
//! only edges between open vertices.

use crate::error::{Error, Result};
use crate::lattice::{decode_pair, pair_count, upow};
use crate::rng::{stream, Purpose};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Largest ball we will materialize: `N^n` must stay below this.
pub const VERTEX_CAPACITY: u64 = 1 << 27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercolationParams {
    /// Lattice order `N`.
    pub order: u32,
    pub alpha: f64,
    pub beta: f64,
    /// Ball radius `n`; the configuration lives on labels `[0, N^n)`.
    pub radius: u32,
    /// Vertex-closure probability of the mixed model; 0 disables the mask.
    pub gamma: f64,
    pub seed: u64,
    pub replicate: u64,
}

impl PercolationParams {
    pub fn new(order: u32, alpha: f64, beta: f64, radius: u32) -> Self {
        PercolationParams {
            order,
            alpha,
            beta,
            radius,
            gamma: 0.0,
            seed: 0,
            replicate: 0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::Parameter(format!(
                "order must be >= 2, got {}",
                self.order
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Parameter(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Parameter(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Parameter(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Number of vertices `N^n`, checked against [`VERTEX_CAPACITY`].
    pub fn vertex_count(&self) -> Result<u64> {
        let size = upow(self.order as u64, self.radius)?;
        if size > VERTEX_CAPACITY {
            return Err(Error::Capacity(format!(
                "ball holds {size} vertices, capacity is {VERTEX_CAPACITY}"
            )));
        }
        Ok(size)
    }
}

/// One sampled realization: sorted deduplicated edge list plus the
/// optional open-vertex mask of the mixed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub params: PercolationParams,
    /// Unordered label pairs `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(u64, u64)>,
    /// Present iff `gamma > 0`; `true` means open.
    pub open_mask: Option<Vec<bool>>,
}

impl Configuration {
    pub fn is_open(&self, label: u64) -> bool {
        match &self.open_mask {
            Some(mask) => mask[label as usize],
            None => true,
        }
    }

    /// Write the documented edge-list format:
    /// a parameter header row, an optional `open_mask` bit-string row,
    /// then sorted `u,v` rows.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let p = &self.params;
        writeln!(w, "N,n,alpha,beta,gamma,seed,replicate")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.order, p.radius, p.alpha, p.beta, p.gamma, p.seed, p.replicate
        )?;
        if let Some(mask) = &self.open_mask {
            let bits: String = mask.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(w, "open_mask,{bits}")?;
        }
        writeln!(w, "u,v")?;
        for &(u, v) in &self.edges {
            writeln!(w, "{u},{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format("unexpected end of configuration file".into()))?
                .map_err(Error::Io)
        };
        let header = next()?;
        if header.trim() != "N,n,alpha,beta,gamma,seed,replicate" {
            return Err(Error::Format(format!("bad header: {header}")));
        }
        let vals = next()?;
        let f: Vec<&str> = vals.trim().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Format(format!("bad parameter row: {vals}")));
        }
        let parse_err = |s: &str| Error::Format(format!("bad number: {s}"));
        let params = PercolationParams {
            order: f[0].parse().map_err(|_| parse_err(f[0]))?,
            radius: f[1].parse().map_err(|_| parse_err(f[1]))?,
            alpha: f[2].parse().map_err(|_| parse_err(f[2]))?,
            beta: f[3].parse().map_err(|_| parse_err(f[3]))?,
            gamma: f[4].parse().map_err(|_| parse_err(f[4]))?,
            seed: f[5].parse().map_err(|_| parse_err(f[5]))?,
            replicate: f[6].parse().map_err(|_| parse_err(f[6]))?,
        };
        let mut line = next()?;
        let mut open_mask = None;
        if let Some(bits) = line.trim().strip_prefix("open_mask,") {
            open_mask = Some(bits.chars().map(|c| c == '1').collect());
            line = next()?;
        }
        if line.trim() != "u,v" {
            return Err(Error::Format(format!("expected edge header, got: {line}")));
        }
        let mut edges = Vec::new();
        for l in lines {
            let l = l?;
            let t = l.trim();
            if t.is_empty() {
                continue;
            }
            let (u, v) = t
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad edge row: {t}")))?;
            edges.push((
                u.parse().map_err(|_| parse_err(u))?,
                v.parse().map_err(|_| parse_err(v))?,
            ));
        }
        Ok(Configuration {
            params,
            edges,
            open_mask,
        })
    }
}

/// `p_k = 1 - exp(-alpha / beta^k)`, evaluated through `expm1` so the
/// complement stays accurate for small `alpha / beta^k`.
pub fn edge_prob(alpha: f64, beta: f64, k: u32) -> f64 {
    -(-alpha * beta.powi(-(k as i32))).exp_m1()
}

#[derive(Clone, Copy)]
enum Method {
    Naive,
    Skip,
}

fn draw_open_mask(params: &PercolationParams, size: u64) -> Option<Vec<bool>> {
    if params.gamma == 0.0 {
        return None;
    }
    let mut rng = stream(params.seed, params.replicate, 0, Purpose::Mask);
    Some((0..size).map(|_| rng.gen::<f64>() >= params.gamma).collect())
}

/// Geometric gap to the next present index: `1 + floor(ln U / ln(1-p))`.
fn geometric_gap<R: Rng>(rng: &mut R, log1mp: f64) -> u64 {
    let u: f64 = rng.gen();
    if u <= 0.0 {
        return u64::MAX;
    }
    let g = (u.ln() / log1mp).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        1 + g as u64
    }
}

/// Indices of present pairs in `[0, total)` for one distance class,
/// in increasing order.
fn class_indices<R: Rng>(rng: &mut R, total: u64, p: f64, method: Method) -> Vec<u64> {
    if p <= 0.0 {
        return Vec::new();
    }
    match method {
        Method::Naive => (0..total).filter(|_| rng.gen::<f64>() < p).collect(),
        Method::Skip if p <= 0.5 => {
            let log1mp = (-p).ln_1p();
            let mut out = Vec::new();
            let mut cur: u64 = 0; // 1-based cursor over indices
            loop {
                let gap = geometric_gap(rng, log1mp);
                cur = match cur.checked_add(gap) {
                    Some(c) => c,
                    None => break,
                };
                if cur > total {
                    break;
                }
                out.push(cur - 1);
            }
            out
        }
        Method::Skip => {
            // Dense class: skip-sample the absent indices instead.
            let q = 1.0 - p;
            if q <= 0.0 {
                return (0..total).collect();
            }
            let log1mq = (-q).ln_1p();
            let mut absent = Vec::new();
            let mut cur: u64 = 0;
            loop {
                let gap = geometric_gap(rng, log1mq);
                cur = match cur.checked_add(gap) {
                    Some(c) => c,
                    None => break,
                };
                if cur > total {
                    break;
                }
                absent.push(cur - 1);
            }
            let mut out = Vec::with_capacity((total - absent.len() as u64) as usize);
            let mut next_absent = absent.iter().copied().peekable();
            for j in 0..total {
                if next_absent.peek() == Some(&j) {
                    next_absent.next();
                } else {
                    out.push(j);
                }
            }
            out
        }
    }
}

fn sample(params: &PercolationParams, method: Method) -> Result<Configuration> {
    params.validate()?;
    let size = params.vertex_count()?;
    let open_mask = draw_open_mask(params, size);
    let mut edges = Vec::new();
    for k in 1..=params.radius {
        let p = edge_prob(params.alpha, params.beta, k);
        let total = pair_count(params.order, params.radius, k)?;
        let mut rng = stream(params.seed, params.replicate, k as u64, Purpose::Edges);
        for j in class_indices(&mut rng, total, p, method) {
            let (u, v) = decode_pair(params.order, params.radius, k, j)?;
            let (u, v) = (u.label(), v.label());
            if let Some(mask) = &open_mask {
                if !mask[u as usize] || !mask[v as usize] {
                    continue;
                }
            }
            edges.push((u, v));
        }
    }
    edges.sort_unstable();
    debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
    Ok(Configuration {
        params: *params,
        edges,
        open_mask,
    })
}

/// Dense sampler: every pair of each distance class is flipped
/// independently with probability `p_k`.
pub fn sample_ball_naive(params: &PercolationParams) -> Result<Configuration> {
    sample(params, Method::Naive)
}

/// Sparse sampler with the same distribution: present pair indices are
/// generated by geometric gap jumps per distance class (classes with
/// `p_k > 1/2` sample absent pairs instead), then decoded through the
/// frozen pair bijection. Expected cost is the expected edge count.
pub fn sample_ball_skip(params: &PercolationParams) -> Result<Configuration> {
    sample(params, Method::Skip)
}

/// Mixed site-bond sampler; requires `gamma > 0`. Uses the skip sampler
/// for the edge layer.
pub fn sample_mixed(params: &PercolationParams) -> Result<Configuration> {
    if params.gamma <= 0.0 {
        return Err(Error::Parameter(format!(
            "mixed sampler requires gamma > 0, got {}",
            params.gamma
        )));
    }
    sample(params, Method::Skip)
}
