//! Canonical signatures for rooted balls.
//!
//! A signature is a 64-bit structural hash plus, for balls small enough to
//! canonicalize exactly, a byte encoding with the property that two balls
//! get the same encoding if and only if they are isomorphic as rooted
//! (optionally feature-labelled) graphs.
//!
//! The hash runs `radius` rounds of colour refinement seeded by hop
//! distance from the root, then folds the final colours order-invariantly.
//! Isomorphic balls therefore always collide; distinct balls collide only
//! with hash-collision probability. The exact path resolves the remaining
//! ambiguity by refinement with individualization: whenever refinement
//! stalls on a non-trivial colour class it branches on each member,
//! deduplicating branches whose refined colourings are indistinguishable,
//! and keeps the lexicographically smallest adjacency encoding.

use gnnlab_graph::RootedBall;

/// Largest ball, in nodes, for which the exact canonical encoding is built.
pub const MAX_EXACT_NODES: usize = 16;

/// Quantization width used for feature-aware signatures.
pub const DEFAULT_FEATURE_BITS: u32 = 4;

const DEPTH_TAG: u64 = 0x5b1d_90e7_44c2_a6f3;
const NEIGH_TAG: u64 = 0xc3a5_c85c_97cb_3127;
const HASH_TAG: u64 = 0x2545_f491_4f6c_dd1d;
const INDIV_TAG: u64 = 0x9ae1_6a3b_2f90_404f;

/// Identity of a rooted ball up to isomorphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BallSignature {
    pub radius: usize,
    pub hash: u64,
    /// Canonical byte encoding, present when the ball has at most
    /// [`MAX_EXACT_NODES`] nodes. Equal encodings mean isomorphic balls.
    pub exact: Option<Vec<u8>>,
}

impl BallSignature {
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn key(&self) -> SigKey {
        SigKey {
            hash: self.hash,
            exact: self.exact.clone(),
        }
    }
}

/// Map key for census tallies: the hash plus the exact encoding when known.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SigKey {
    pub hash: u64,
    pub exact: Option<Vec<u8>>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix(h: u64, v: u64) -> u64 {
    splitmix64(h ^ splitmix64(v))
}

/// Maps a feature value to the integer lattice with `bits` fractional bits.
/// Values that quantize to 0 are indistinguishable from absent entries.
pub fn quantize_feature(value: f64, bits: u32) -> i64 {
    (value * (1u64 << bits) as f64).round() as i64
}

fn initial_colors(ball: &RootedBall, attributed: bool, bits: u32) -> Vec<u64> {
    let n = ball.node_count();
    let mut colors = Vec::with_capacity(n);
    for v in 0..n {
        let mut c = mix(DEPTH_TAG, ball.depth_of[v] as u64);
        if attributed {
            for &(col, val) in ball.features.row(v) {
                let q = quantize_feature(val, bits);
                if q != 0 {
                    c = mix(c, mix(col as u64 + 1, q as u64));
                }
            }
        }
        colors.push(c);
    }
    colors
}

fn refine_step(ball: &RootedBall, colors: &[u64]) -> Vec<u64> {
    let n = ball.node_count();
    let mut next = Vec::with_capacity(n);
    let mut buf: Vec<u64> = Vec::new();
    for v in 0..n {
        buf.clear();
        buf.extend(ball.neighbors(v).iter().map(|&u| colors[u as usize]));
        buf.sort_unstable();
        let mut h = mix(NEIGH_TAG, colors[v]);
        h = mix(h, buf.len() as u64);
        for &c in &buf {
            h = mix(h, c);
        }
        next.push(h);
    }
    next
}

/// Relabels colours by first occurrence so partitions can be compared
/// independently of the hash values that carry them.
fn partition_of(colors: &[u64]) -> Vec<u32> {
    let mut seen: Vec<u64> = Vec::new();
    colors
        .iter()
        .map(|&c| match seen.iter().position(|&s| s == c) {
            Some(i) => i as u32,
            None => {
                seen.push(c);
                (seen.len() - 1) as u32
            }
        })
        .collect()
}

fn refine_to_stable(ball: &RootedBall, mut colors: Vec<u64>) -> Vec<u64> {
    let mut part = partition_of(&colors);
    loop {
        let next = refine_step(ball, &colors);
        let next_part = partition_of(&next);
        let stable = next_part == part;
        colors = next;
        part = next_part;
        if stable {
            return colors;
        }
    }
}

fn wl_hash(ball: &RootedBall, attributed: bool, bits: u32) -> u64 {
    let mut colors = initial_colors(ball, attributed, bits);
    for _ in 0..ball.radius {
        colors = refine_step(ball, &colors);
    }
    let mut h = mix(HASH_TAG, ball.radius as u64);
    h = mix(h, ball.node_count() as u64);
    h = mix(h, colors[0]);
    colors.sort_unstable();
    for &c in &colors {
        h = mix(h, c);
    }
    h
}

struct Canonizer<'a> {
    ball: &'a RootedBall,
    adj: Vec<u16>,
    init_rank: Vec<u8>,
    header: Vec<u8>,
    best: Option<Vec<u8>>,
}

impl<'a> Canonizer<'a> {
    fn new(ball: &'a RootedBall, initial: &[u64]) -> Self {
        let n = ball.node_count();
        let mut adj = vec![0u16; n];
        for v in 0..n {
            for &u in ball.neighbors(v) {
                adj[v] |= 1 << u;
            }
        }
        let mut distinct: Vec<u64> = initial.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let init_rank: Vec<u8> = initial
            .iter()
            .map(|c| distinct.binary_search(c).unwrap() as u8)
            .collect();
        let mut header = vec![ball.radius as u8, n as u8, distinct.len() as u8];
        for c in &distinct {
            header.extend_from_slice(&c.to_le_bytes());
        }
        Canonizer {
            ball,
            adj,
            init_rank,
            header,
            best: None,
        }
    }

    fn encode(&self, order: &[usize]) -> Vec<u8> {
        let n = order.len();
        let mut pos = vec![0usize; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let mut out = self.header.clone();
        for &v in order {
            out.push(self.init_rank[v]);
        }
        for &v in order {
            let mut mask = 0u16;
            for u in 0..n {
                if self.adj[v] & (1 << u) != 0 {
                    mask |= 1 << pos[u];
                }
            }
            out.extend_from_slice(&mask.to_le_bytes());
        }
        out
    }

    /// `colors` must already be refined to a stable partition.
    fn search(&mut self, colors: &[u64]) {
        let n = colors.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| colors[v]);

        let mut cell: Option<(usize, usize)> = None;
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && colors[order[j]] == colors[order[i]] {
                j += 1;
            }
            if j - i > 1 {
                let better = match cell {
                    None => true,
                    Some((s, e)) => {
                        (j - i, colors[order[i]]) < (e - s, colors[order[s]])
                    }
                };
                if better {
                    cell = Some((i, j));
                }
            }
            i = j;
        }

        match cell {
            None => {
                let enc = self.encode(&order);
                if self.best.as_ref().map_or(true, |b| enc < *b) {
                    self.best = Some(enc);
                }
            }
            Some((s, e)) => {
                let mut seen: Vec<u64> = Vec::new();
                for idx in s..e {
                    let m = order[idx];
                    let mut branched = colors.to_vec();
                    branched[m] = mix(INDIV_TAG, branched[m]);
                    let refined = refine_to_stable(self.ball, branched);
                    let mut fold: Vec<u64> = refined.clone();
                    fold.sort_unstable();
                    let mut key = mix(HASH_TAG, refined[0]);
                    for &c in &fold {
                        key = mix(key, c);
                    }
                    if seen.contains(&key) {
                        continue;
                    }
                    seen.push(key);
                    self.search(&refined);
                }
            }
        }
    }
}

fn canonical_encoding(ball: &RootedBall, attributed: bool, bits: u32) -> Vec<u8> {
    let initial = initial_colors(ball, attributed, bits);
    let mut canon = Canonizer::new(ball, &initial);
    let stable = refine_to_stable(ball, initial);
    canon.search(&stable);
    canon.best.expect("search always records one ordering")
}

/// Computes the signature of a rooted ball.
///
/// With `attributed` set, node features quantized to `bits` fractional bits
/// join the hop distance in the initial colours, so feature-relabelled balls
/// separate. Structural signatures ignore features entirely.
pub fn ball_signature(ball: &RootedBall, attributed: bool, bits: u32) -> BallSignature {
    let hash = wl_hash(ball, attributed, bits);
    let exact = (ball.node_count() <= MAX_EXACT_NODES)
        .then(|| canonical_encoding(ball, attributed, bits));
    BallSignature {
        radius: ball.radius,
        hash,
        exact,
    }
}
