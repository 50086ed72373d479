//! Layered exact-repair codes over the duplicated 3-combination block
//! design, with a coset-coding precoder that makes them secure against an
//! eavesdropper observing all repair traffic toward ℓ nodes.
//!
//! The base construction lists every 3-subset {b1 < b2 < b3} of the n nodes
//! as a block; each block carries an independent (3,2) MDS codeword: node
//! b1 stores X, b2 stores Y, b3 stores X+Y. A helper repairs a failed node
//! by sending, for every shared block, its own symbol of that block, so any
//! two members of a block restore the third. This gives
//! α = C(n−1,2), β = n−2 and a source dimension T = 2·C(n,3).
//!
//! Security is added by re-expressing the T source coordinates through a
//! random invertible precoder whose first B_s = 2·C(n−ℓ,3) inputs are the
//! message and the rest are uniform keys. A candidate precoder is accepted
//! only after an exhaustive check that every ℓ-subset of nodes leaks
//! nothing about the message; failing candidates are redrawn, and when the
//! retry budget at one prime is exhausted the field is escalated along a
//! fixed prime ladder.

use crate::entoracle;
use crate::exactfield::{
    is_prime, random_matrix_with_rng, ratio, uniform_mod, FieldError, FieldMatrix,
};
use crate::regioncalc::RatePoint;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PRIME: u64 = 1009;
/// Field escalation sequence used when a prime's retry budget runs out.
pub const DEFAULT_PRIME_LADDER: [u64; 4] = [1009, 2003, 4001, 8009];
pub const DEFAULT_MAX_RETRIES: u32 = 8;
pub const CODE_DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("n must be at least {min}, got {n}")]
    InvalidN { n: usize, min: usize },
    #[error("ell must satisfy 1 <= ell <= n-3, got ell={ell} for n={n} (zero secrecy capacity for this construction)")]
    InvalidEll { n: usize, ell: usize },
    #[error("secrecy verification failed after {retries} retries per prime up to p={max_prime}")]
    SecrecyUnachievable { retries: u32, max_prime: u64 },
    #[error("insufficient nodes: have {have}, need {need}")]
    InsufficientNodes { have: usize, need: usize },
    #[error("invalid node index {0}")]
    InvalidNode(usize),
    #[error("malformed code document: {0}")]
    Malformed(String),
    #[error("unsupported code document version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// C(n, r) in u64; the parameter ranges here are small.
pub fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All k-subsets of {1, ..., n} in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::with_capacity(binomial(n as u64, k as u64) as usize);
    let mut cur: Vec<usize> = (1..=k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k + 1 {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// The exhaustive list of 3-subsets of {1, ..., n}, lexicographically
/// sorted. Every pair of nodes shares exactly n−2 blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDesign {
    n: usize,
    blocks: Vec<[usize; 3]>,
}

impl BlockDesign {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[[usize; 3]] {
        &self.blocks
    }

    /// Indices of blocks containing node v, in block order. This is also
    /// the row order of node v's storage map.
    pub fn blocks_containing(&self, v: usize) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(&v))
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of blocks that intersect the given node set.
    pub fn blocks_touching(&self, set: &[usize]) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.iter().any(|v| set.contains(v)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Enumerates the block design for n nodes. Requires n ≥ 3.
pub fn build_design(n: usize) -> Result<BlockDesign, CodeError> {
    if n < 3 {
        return Err(CodeError::InvalidN { n, min: 3 });
    }
    let blocks = k_subsets(n, 3)
        .into_iter()
        .map(|s| [s[0], s[1], s[2]])
        .collect();
    Ok(BlockDesign { n, blocks })
}

/// A linear exact-repair storage code over GF(p) with k = d = n−1.
///
/// `node_maps[i]` gives the α functionals of the source vector stored at
/// node i+1; `repair_maps` holds, for each ordered pair (i, j) with i ≠ j,
/// the β functionals node i sends to repair node j. The source vector has
/// length T; its first B_s coordinates are the message and the remaining
/// T − B_s are uniform keys (B_s = T means no key, i.e. no secrecy).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearStorageCode {
    p: u64,
    n: usize,
    ell: usize,
    b_s: usize,
    t: usize,
    node_maps: Vec<FieldMatrix>,
    repair_maps: Vec<FieldMatrix>, // (i-1)*n + (j-1); diagonal entries are 0-row
}

impl LinearStorageCode {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of wiretap nodes the code was built for; 0 for the plain
    /// layered code.
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn b_s(&self) -> usize {
        self.b_s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.n - 1
    }

    pub fn d(&self) -> usize {
        self.n - 1
    }

    pub fn alpha(&self) -> usize {
        self.node_maps[0].rows()
    }

    pub fn beta(&self) -> usize {
        self.n - 2
    }

    /// Storage map of node i (1-based).
    pub fn node_map(&self, i: usize) -> Result<&FieldMatrix, CodeError> {
        if i == 0 || i > self.n {
            return Err(CodeError::InvalidNode(i));
        }
        Ok(&self.node_maps[i - 1])
    }

    /// Repair map for the message sent by node i to repair node j
    /// (1-based). The diagonal i = j is the empty (0-row) functional.
    pub fn repair_map(&self, i: usize, j: usize) -> Result<&FieldMatrix, CodeError> {
        if i == 0 || i > self.n {
            return Err(CodeError::InvalidNode(i));
        }
        if j == 0 || j > self.n {
            return Err(CodeError::InvalidNode(j));
        }
        Ok(&self.repair_maps[(i - 1) * self.n + (j - 1)])
    }

    /// The message functional: the first B_s source coordinates.
    pub fn message_map(&self) -> FieldMatrix {
        let mut data = vec![0u64; self.b_s * self.t];
        for r in 0..self.b_s {
            data[r * self.t + r] = 1;
        }
        FieldMatrix::new(self.b_s, self.t, self.p, data).expect("well-formed by construction")
    }

    /// Assembles a code directly from its parts without structural
    /// validation. Intended for tests and fixtures; everything else should
    /// go through the constructors or `deserialize_code`.
    #[doc(hidden)]
    pub fn from_parts_unchecked(
        p: u64,
        n: usize,
        ell: usize,
        b_s: usize,
        t: usize,
        node_maps: Vec<FieldMatrix>,
        repair_maps: Vec<FieldMatrix>,
    ) -> Self {
        Self {
            p,
            n,
            ell,
            b_s,
            t,
            node_maps,
            repair_maps,
        }
    }
}

fn block_row(t: usize, block_index: usize, member_slot: usize) -> Vec<u64> {
    let mut row = vec![0u64; t];
    match member_slot {
        0 => row[2 * block_index] = 1,
        1 => row[2 * block_index + 1] = 1,
        _ => {
            row[2 * block_index] = 1;
            row[2 * block_index + 1] = 1;
        }
    }
    row
}

/// Builds the plain (non-secure) layered code: B_s = T, no key symbols.
pub fn build_layered_code(n: usize, p: u64) -> Result<LinearStorageCode, CodeError> {
    if n < 4 {
        return Err(CodeError::InvalidN { n, min: 4 });
    }
    let design = build_design(n)?;
    layered_code_from_blocks(n, p, design.blocks())
}

/// Layered-code construction over an explicit block list. Exists so tests
/// can build deliberately incomplete (asymmetric) designs.
pub(crate) fn layered_code_from_blocks(
    n: usize,
    p: u64,
    blocks: &[[usize; 3]],
) -> Result<LinearStorageCode, CodeError> {
    if !is_prime(p) {
        return Err(CodeError::Field(FieldError::NonPrimeModulus(p)));
    }
    let t = 2 * blocks.len();

    let mut node_maps = Vec::with_capacity(n);
    for v in 1..=n {
        let rows: Vec<Vec<u64>> = blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(&v))
            .map(|(bi, b)| {
                let slot = b.iter().position(|&x| x == v).expect("member");
                block_row(t, bi, slot)
            })
            .collect();
        node_maps.push(FieldMatrix::from_rows(&rows, t, p)?);
    }

    let mut repair_maps = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                repair_maps.push(FieldMatrix::zeros(0, t, p)?);
                continue;
            }
            let rows: Vec<Vec<u64>> = blocks
                .iter()
                .enumerate()
                .filter(|(_, b)| b.contains(&i) && b.contains(&j))
                .map(|(bi, b)| {
                    let slot = b.iter().position(|&x| x == i).expect("member");
                    block_row(t, bi, slot)
                })
                .collect();
            repair_maps.push(FieldMatrix::from_rows(&rows, t, p)?);
        }
    }

    Ok(LinearStorageCode {
        p,
        n,
        ell: 0,
        b_s: t,
        t,
        node_maps,
        repair_maps,
    })
}

/// Message dimension of the secure construction: B_s = 2·C(n−ℓ, 3).
pub fn secure_message_dim(n: usize, ell: usize) -> Result<usize, CodeError> {
    if n < 4 {
        return Err(CodeError::InvalidN { n, min: 4 });
    }
    if ell == 0 {
        return Ok(2 * binomial(n as u64, 3) as usize);
    }
    if ell + 3 > n {
        return Err(CodeError::InvalidEll { n, ell });
    }
    Ok(2 * binomial((n - ell) as u64, 3) as usize)
}

/// Re-expresses the source coordinates of a base layered code through an
/// invertible T×T precoder whose first B_s input coordinates become the
/// message and the rest keys. Performs no secrecy verification; see
/// [`secure_precode`] for the verified constructor.
pub fn apply_precoder(
    base: &LinearStorageCode,
    ell: usize,
    precoder: &FieldMatrix,
) -> Result<LinearStorageCode, CodeError> {
    let b_s = secure_message_dim(base.n, ell)?;
    if ell == 0 || ell + 3 > base.n {
        return Err(CodeError::InvalidEll { n: base.n, ell });
    }
    if precoder.rows() != base.t || precoder.cols() != base.t {
        return Err(CodeError::Malformed(format!(
            "precoder must be {0}x{0}",
            base.t
        )));
    }
    // invertibility gives both reconstruction and a well-defined key split
    precoder.invert().map_err(|_| {
        CodeError::Malformed("precoder is singular".into())
    })?;
    let node_maps = base
        .node_maps
        .iter()
        .map(|m| m.mul(precoder))
        .collect::<Result<Vec<_>, _>>()?;
    let repair_maps = base
        .repair_maps
        .iter()
        .map(|m| m.mul(precoder))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LinearStorageCode {
        p: base.p,
        n: base.n,
        ell,
        b_s,
        t: base.t,
        node_maps,
        repair_maps,
    })
}

/// Outcome metadata for a successful secure construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecureBuildInfo {
    /// Total precoder draws across all primes tried.
    pub attempts: u32,
    /// Field the returned code lives in.
    pub prime: u64,
}

/// Draws random invertible precoders until the resulting code passes the
/// exhaustive secrecy check over all C(n, ℓ) wiretap sets, escalating the
/// prime along `DEFAULT_PRIME_LADDER` when the per-prime retry budget is
/// exhausted. Deterministic for a fixed seed.
pub fn secure_precode(
    base: &LinearStorageCode,
    ell: usize,
    seed: u64,
    max_retries: u32,
) -> Result<LinearStorageCode, CodeError> {
    secure_precode_with_ladder(base, ell, seed, max_retries, &DEFAULT_PRIME_LADDER)
        .map(|(code, _)| code)
}

pub fn secure_precode_with_ladder(
    base: &LinearStorageCode,
    ell: usize,
    seed: u64,
    max_retries: u32,
    ladder: &[u64],
) -> Result<(LinearStorageCode, SecureBuildInfo), CodeError> {
    if ell == 0 || ell + 3 > base.n {
        return Err(CodeError::InvalidEll { n: base.n, ell });
    }
    let mut primes = vec![base.p];
    primes.extend(ladder.iter().copied().filter(|&q| q > base.p));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut attempts = 0u32;
    for &p in &primes {
        let base_p = if p == base.p {
            base.clone()
        } else {
            build_layered_code(base.n, p)?
        };
        for _ in 0..max_retries {
            attempts += 1;
            let cand = random_matrix_with_rng(base_p.t, base_p.t, p, &mut rng)
                .map_err(CodeError::Field)?;
            if cand.rank() < base_p.t {
                continue;
            }
            let code = apply_precoder(&base_p, ell, &cand)?;
            let secure = entoracle::security_violation_witness(&code)
                .map_err(|e| CodeError::Malformed(e.to_string()))?
                .is_none();
            if secure {
                return Ok((code, SecureBuildInfo { attempts, prime: p }));
            }
        }
    }
    Err(CodeError::SecrecyUnachievable {
        retries: max_retries,
        max_prime: *primes.last().expect("at least the base prime"),
    })
}

/// The block-argument security test: the repair traffic toward a wiretap
/// set determines exactly the content of the blocks that intersect it, so
/// the message is hidden iff the key-part submatrix of the precoder
/// restricted to those block coordinates has full row rank (it is square,
/// hence invertible, when |L| = ℓ). Works from the stored maps alone: node
/// b1's and b2's rows of a block are the precoder images of that block's
/// two coordinates.
pub fn wiretap_key_block_invertible(
    code: &LinearStorageCode,
    l_set: &[usize],
) -> Result<bool, CodeError> {
    for &v in l_set {
        if v == 0 || v > code.n {
            return Err(CodeError::InvalidNode(v));
        }
    }
    let design = build_design(code.n)?;
    let touched = design.blocks_touching(l_set);
    if touched.is_empty() {
        return Ok(true);
    }
    if code.b_s == code.t {
        // no key symbols at all; any touched block exposes message content
        return Ok(false);
    }
    let positions: Vec<Vec<usize>> = (0..=code.n)
        .map(|v| if v == 0 { Vec::new() } else { design.blocks_containing(v) })
        .collect();
    let mut rows: Vec<Vec<u64>> = Vec::with_capacity(2 * touched.len());
    for &bi in &touched {
        let b = design.blocks()[bi];
        // the first two members hold the block's pure X and Y coordinates
        for &v in &b[..2] {
            let row_idx = positions[v]
                .iter()
                .position(|&x| x == bi)
                .expect("block contains v");
            rows.push(code.node_maps[v - 1].row(row_idx).to_vec());
        }
    }
    let observed = FieldMatrix::from_rows(&rows, code.t, code.p)?;
    let key_part = observed.col_slice(code.b_s, code.t);
    Ok(key_part.rank() == observed.rows())
}

/// Normalized operating point (α/B_s, β/B_s) of a code.
pub fn achieved_point(code: &LinearStorageCode) -> Result<RatePoint, CodeError> {
    if code.b_s == 0 {
        return Err(CodeError::InvalidEll {
            n: code.n,
            ell: code.ell,
        });
    }
    RatePoint::new(
        ratio(code.alpha() as i64, code.b_s as i64),
        ratio(code.beta() as i64, code.b_s as i64),
    )
    .map_err(|e| CodeError::Malformed(e.to_string()))
}

/// The operating point of the (n, ℓ) secure layered construction, straight
/// from the closed forms α = C(n−1,2), β = n−2, B_s = 2·C(n−ℓ,3).
/// ℓ = 0 gives the plain layered point.
pub fn secure_point(n: usize, ell: usize) -> Result<RatePoint, CodeError> {
    let b_s = secure_message_dim(n, ell)? as i64;
    let alpha = binomial(n as u64 - 1, 2) as i64;
    let beta = n as i64 - 2;
    RatePoint::new(ratio(alpha, b_s), ratio(beta, b_s))
        .map_err(|e| CodeError::Malformed(e.to_string()))
}

/// A concrete realization: one source vector and every node's stored
/// symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeState {
    pub source: Vec<u64>,
    pub node_symbols: Vec<Vec<u64>>,
}

impl CodeState {
    /// Message part of the source vector.
    pub fn message<'a>(&'a self, code: &LinearStorageCode) -> &'a [u64] {
        &self.source[..code.b_s]
    }
}

/// Encodes a state from an explicit source vector.
pub fn encode_from_source(
    code: &LinearStorageCode,
    source: Vec<u64>,
) -> Result<CodeState, CodeError> {
    if source.len() != code.t {
        return Err(CodeError::Malformed(format!(
            "source vector must have length {}, got {}",
            code.t,
            source.len()
        )));
    }
    let node_symbols = code
        .node_maps
        .iter()
        .map(|m| m.apply(&source))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CodeState {
        source,
        node_symbols,
    })
}

/// Encodes a uniformly random state, deterministic per seed.
pub fn encode_state(code: &LinearStorageCode, seed: u64) -> Result<CodeState, CodeError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let source = (0..code.t).map(|_| uniform_mod(&mut rng, code.p)).collect();
    encode_from_source(code, source)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairOutcome {
    /// Total symbols shipped by the d = n−1 helpers; always d·β.
    pub downloaded_symbols: usize,
    /// The regenerated content of the failed node, in its row order.
    pub recovered: Vec<u64>,
}

/// Simulates the repair of node j: every helper sends its β symbols of the
/// blocks it shares with j, and each shared block's (3,2) relation yields
/// the failed symbol. Works purely from stored node symbols.
pub fn repair_node(
    code: &LinearStorageCode,
    state: &CodeState,
    j: usize,
) -> Result<RepairOutcome, CodeError> {
    if j == 0 || j > code.n {
        return Err(CodeError::InvalidNode(j));
    }
    let design = build_design(code.n)?;
    let positions: Vec<Vec<usize>> = (0..=code.n)
        .map(|v| if v == 0 { Vec::new() } else { design.blocks_containing(v) })
        .collect();

    // helper i's message toward j, assembled from i's stored symbols
    let symbol_of = |v: usize, bi: usize| -> u64 {
        let row = positions[v].iter().position(|&x| x == bi).expect("member");
        state.node_symbols[v - 1][row]
    };

    let mut downloaded = 0usize;
    for (i, blocks_of_i) in positions.iter().enumerate().skip(1) {
        if i != j {
            // one symbol per block shared with j
            downloaded += blocks_of_i
                .iter()
                .filter(|&&bi| design.blocks()[bi].contains(&j))
                .count();
        }
    }

    let p = code.p;
    let mut recovered = Vec::with_capacity(code.alpha());
    for &bi in &positions[j] {
        let b = design.blocks()[bi];
        let slot = b.iter().position(|&x| x == j).expect("member");
        let others: Vec<usize> = b.iter().copied().filter(|&v| v != j).collect();
        let (u, v) = (others[0], others[1]);
        let (su, sv) = (symbol_of(u, bi), symbol_of(v, bi));
        // slots within the block are (X, Y, X+Y)
        let u_slot = b.iter().position(|&x| x == u).unwrap();
        let mut x = 0u64;
        let mut y = 0u64;
        let mut xy = 0u64;
        match (u_slot, slot) {
            // failed slot 0: helpers hold Y and X+Y
            (1, 0) => {
                y = su;
                xy = sv;
            }
            // failed slot 1: helpers hold X and X+Y
            (0, 1) => {
                x = su;
                xy = sv;
            }
            // failed slot 2: helpers hold X and Y
            (0, 2) => {
                x = su;
                y = sv;
            }
            _ => unreachable!("block members are sorted"),
        }
        let value = match slot {
            0 => (xy + p - y) % p,
            1 => (xy + p - x) % p,
            _ => (x + y) % p,
        };
        recovered.push(value);
    }

    Ok(RepairOutcome {
        downloaded_symbols: downloaded,
        recovered,
    })
}

/// Recovers the message from the stored symbols of exactly k = n−1 nodes
/// by solving the stacked linear system for the full source vector.
pub fn reconstruct_message(
    code: &LinearStorageCode,
    state: &CodeState,
    k_set: &[usize],
) -> Result<Vec<u64>, CodeError> {
    let mut nodes: Vec<usize> = k_set.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    for &v in &nodes {
        if v == 0 || v > code.n {
            return Err(CodeError::InvalidNode(v));
        }
    }
    if nodes.len() < code.k() {
        return Err(CodeError::InsufficientNodes {
            have: nodes.len(),
            need: code.k(),
        });
    }
    let maps: Vec<&FieldMatrix> = nodes.iter().map(|&v| &code.node_maps[v - 1]).collect();
    let stacked = FieldMatrix::stack(&maps)?;
    let mut rhs = Vec::with_capacity(stacked.rows());
    for &v in &nodes {
        rhs.extend_from_slice(&state.node_symbols[v - 1]);
    }
    let source = stacked.solve(&rhs)?;
    Ok(source[..code.b_s].to_vec())
}

#[derive(Serialize, Deserialize)]
struct RepairMapEntry {
    from: usize,
    to: usize,
    entries: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct CodeDocument {
    version: u32,
    p: u64,
    n: usize,
    ell: usize,
    #[serde(rename = "B_s")]
    b_s: usize,
    #[serde(rename = "T")]
    t: usize,
    node_maps: Vec<Vec<u64>>,
    repair_maps: Vec<RepairMapEntry>,
}

/// Serializes a code to its versioned JSON document. The output is
/// canonical: the same code always produces the same bytes.
pub fn serialize_code(code: &LinearStorageCode) -> String {
    let doc = CodeDocument {
        version: CODE_DOCUMENT_VERSION,
        p: code.p,
        n: code.n,
        ell: code.ell,
        b_s: code.b_s,
        t: code.t,
        node_maps: code.node_maps.iter().map(|m| m.data().to_vec()).collect(),
        repair_maps: (1..=code.n)
            .flat_map(|i| (1..=code.n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| RepairMapEntry {
                from: i,
                to: j,
                entries: code.repair_maps[(i - 1) * code.n + (j - 1)].data().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("document serialization cannot fail")
}

/// Parses and validates a code document. Validation covers the schema
/// (dimensions, field, entry ranges) and the structural invariants: every
/// repair row must lie in the sending node's row space, and every node must
/// be regenerable from the traffic toward it.
pub fn deserialize_code(text: &str) -> Result<LinearStorageCode, CodeError> {
    let doc: CodeDocument =
        serde_json::from_str(text).map_err(|e| CodeError::Malformed(e.to_string()))?;
    if doc.version != CODE_DOCUMENT_VERSION {
        return Err(CodeError::UnsupportedVersion(doc.version));
    }
    if doc.n < 4 {
        return Err(CodeError::InvalidN { n: doc.n, min: 4 });
    }
    if !is_prime(doc.p) {
        return Err(CodeError::Field(FieldError::NonPrimeModulus(doc.p)));
    }
    let t = 2 * binomial(doc.n as u64, 3) as usize;
    if doc.t != t {
        return Err(CodeError::Malformed(format!(
            "T must be {} for n={}, got {}",
            t, doc.n, doc.t
        )));
    }
    let b_s = secure_message_dim(doc.n, doc.ell)?;
    if doc.b_s != b_s {
        return Err(CodeError::Malformed(format!(
            "B_s must be {} for (n={}, ell={}), got {}",
            b_s, doc.n, doc.ell, doc.b_s
        )));
    }
    let alpha = binomial(doc.n as u64 - 1, 2) as usize;
    let beta = doc.n - 2;
    if doc.node_maps.len() != doc.n {
        return Err(CodeError::Malformed(format!(
            "expected {} node maps, got {}",
            doc.n,
            doc.node_maps.len()
        )));
    }
    let mut node_maps = Vec::with_capacity(doc.n);
    for (i, entries) in doc.node_maps.iter().enumerate() {
        if entries.len() != alpha * t {
            return Err(CodeError::Malformed(format!(
                "node map {} must have {} entries, got {}",
                i + 1,
                alpha * t,
                entries.len()
            )));
        }
        node_maps.push(FieldMatrix::new(alpha, t, doc.p, entries.clone())?);
    }
    let mut repair_maps: Vec<Option<FieldMatrix>> = vec![None; doc.n * doc.n];
    for e in &doc.repair_maps {
        if e.from == 0 || e.from > doc.n || e.to == 0 || e.to > doc.n || e.from == e.to {
            return Err(CodeError::Malformed(format!(
                "invalid repair map pair ({}, {})",
                e.from, e.to
            )));
        }
        if e.entries.len() != beta * t {
            return Err(CodeError::Malformed(format!(
                "repair map ({}, {}) must have {} entries, got {}",
                e.from,
                e.to,
                beta * t,
                e.entries.len()
            )));
        }
        let idx = (e.from - 1) * doc.n + (e.to - 1);
        if repair_maps[idx].is_some() {
            return Err(CodeError::Malformed(format!(
                "duplicate repair map ({}, {})",
                e.from, e.to
            )));
        }
        repair_maps[idx] = Some(FieldMatrix::new(beta, t, doc.p, e.entries.clone())?);
    }
    let mut maps = Vec::with_capacity(doc.n * doc.n);
    for i in 1..=doc.n {
        for j in 1..=doc.n {
            if i == j {
                maps.push(FieldMatrix::zeros(0, t, doc.p)?);
            } else {
                maps.push(repair_maps[(i - 1) * doc.n + (j - 1)].take().ok_or_else(
                    || CodeError::Malformed(format!("missing repair map ({i}, {j})")),
                )?);
            }
        }
    }
    let code = LinearStorageCode {
        p: doc.p,
        n: doc.n,
        ell: doc.ell,
        b_s: doc.b_s,
        t: doc.t,
        node_maps,
        repair_maps: maps,
    };
    validate_structure(&code)?;
    Ok(code)
}

/// Checks that repair messages are functions of stored content and that
/// every node is regenerable from the traffic toward it.
pub fn validate_structure(code: &LinearStorageCode) -> Result<(), CodeError> {
    for i in 1..=code.n {
        let node = &code.node_maps[i - 1];
        let node_rank = node.rank();
        for j in 1..=code.n {
            if i == j {
                continue;
            }
            let rep = &code.repair_maps[(i - 1) * code.n + (j - 1)];
            let stacked = FieldMatrix::stack(&[node, rep])?;
            if stacked.rank() != node_rank {
                return Err(CodeError::Malformed(format!(
                    "repair map ({i}, {j}) is not a function of node {i}'s content"
                )));
            }
        }
    }
    for j in 1..=code.n {
        let incoming: Vec<&FieldMatrix> = (1..=code.n)
            .filter(|&i| i != j)
            .map(|i| &code.repair_maps[(i - 1) * code.n + (j - 1)])
            .collect();
        let traffic = FieldMatrix::stack(&incoming)?;
        let with_node = FieldMatrix::stack(&[&traffic, &code.node_maps[j - 1]])?;
        if with_node.rank() != traffic.rank() {
            return Err(CodeError::Malformed(format!(
                "node {j} cannot be regenerated from its repair traffic"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfield::rat;

    #[test]
    fn design_enumeration() {
        let d = build_design(4).unwrap();
        assert_eq!(
            d.blocks(),
            &[[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]]
        );
        let d = build_design(5).unwrap();
        assert_eq!(d.blocks().len(), 10);
        let with_pair = d
            .blocks()
            .iter()
            .filter(|b| b.contains(&1) && b.contains(&2))
            .count();
        assert_eq!(with_pair, 3); // n - 2
        assert_eq!(build_design(7).unwrap().blocks().len(), 35);
        assert!(build_design(2).is_err());
    }

    #[test]
    fn every_pair_shares_exactly_n_minus_2_blocks() {
        for n in 4..=8 {
            let d = build_design(n).unwrap();
            for a in 1..=n {
                for b in a + 1..=n {
                    let count = d
                        .blocks()
                        .iter()
                        .filter(|blk| blk.contains(&a) && blk.contains(&b))
                        .count();
                    assert_eq!(count, n - 2);
                }
            }
        }
    }

    #[test]
    fn layered_dimensions() {
        let code = build_layered_code(7, DEFAULT_PRIME).unwrap();
        assert_eq!(code.alpha(), 15);
        assert_eq!(code.beta(), 5);
        assert_eq!(code.t(), 70);
        assert_eq!(code.b_s(), 70);
        let pt = achieved_point(&code).unwrap();
        assert_eq!(pt.alpha_bar, ratio(15, 70));
        assert_eq!(pt.beta_bar, ratio(5, 70));

        let code = build_layered_code(5, DEFAULT_PRIME).unwrap();
        assert_eq!(code.alpha(), 6);
        assert_eq!(code.beta(), 3);
        assert_eq!(code.t(), 20);
    }

    #[test]
    fn layered_regeneration_invariant() {
        for n in 5..=8 {
            let code = build_layered_code(n, DEFAULT_PRIME).unwrap();
            validate_structure(&code).unwrap();
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(binomial(6, 0), 1);
    }

    #[test]
    fn k_subsets_lexicographic() {
        let subs = k_subsets(4, 2);
        assert_eq!(
            subs,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        assert_eq!(k_subsets(7, 2).len(), 21);
    }

    #[test]
    fn secure_dimensions_and_invalid_ell() {
        let base = build_layered_code(7, DEFAULT_PRIME).unwrap();
        let code = secure_precode(&base, 2, 42, DEFAULT_MAX_RETRIES).unwrap();
        assert_eq!(code.b_s(), 20); // 2 * C(5,3)
        assert_eq!(code.ell(), 2);
        let pt = achieved_point(&code).unwrap();
        assert_eq!(pt.alpha_bar, ratio(3, 4));
        assert_eq!(pt.beta_bar, ratio(1, 4));

        let base5 = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let code = secure_precode(&base5, 1, 7, DEFAULT_MAX_RETRIES).unwrap();
        assert_eq!(code.b_s(), 8); // 2 * C(4,3)
        let pt = achieved_point(&code).unwrap();
        assert_eq!(pt.alpha_bar, ratio(6, 8));
        assert_eq!(pt.beta_bar, ratio(3, 8));

        match secure_precode(&base5, 3, 7, DEFAULT_MAX_RETRIES) {
            Err(CodeError::InvalidEll { n: 5, ell: 3 }) => {}
            other => panic!("expected InvalidEll, got {other:?}"),
        }
    }

    #[test]
    fn secure_point_formula_matches_construction() {
        for (n, ell) in [(5usize, 1usize), (5, 2), (6, 2), (7, 1), (7, 2)] {
            let base = build_layered_code(n, DEFAULT_PRIME).unwrap();
            let code = secure_precode(&base, ell, 11, DEFAULT_MAX_RETRIES).unwrap();
            assert_eq!(
                achieved_point(&code).unwrap(),
                secure_point(n, ell).unwrap(),
                "({n},{ell})"
            );
        }
        // ell = 0 is the plain layered point
        let base = build_layered_code(6, DEFAULT_PRIME).unwrap();
        assert_eq!(
            achieved_point(&base).unwrap(),
            secure_point(6, 0).unwrap()
        );
    }

    #[test]
    fn gap_to_corner_matches_closed_form() {
        // alpha_bar - alpha_hat = (4l+2-n)(n-1) / (2(n-l)(n-l-1)(n-l-2))
        for n in 5..=9usize {
            for ell in 1..=n - 3 {
                let pt = secure_point(n, ell).unwrap();
                let corner =
                    crate::regioncalc::corner_point(n as u64 - 1, n as u64 - 1, ell as u64)
                        .unwrap();
                let gap = pt.alpha_bar.clone() - corner.alpha_bar.clone();
                let (ni, li) = (n as i64, ell as i64);
                let expect = rat(4 * li + 2 - ni) * rat(ni - 1)
                    / (rat(2) * rat(ni - li) * rat(ni - li - 1) * rat(ni - li - 2));
                assert_eq!(gap, expect, "({n},{ell})");
            }
        }
        // spot value: n=7, ell=1
        let gap = secure_point(7, 1).unwrap().alpha_bar
            - crate::regioncalc::corner_point(6, 6, 1).unwrap().alpha_bar;
        assert_eq!(gap, ratio(-1, 40));
    }

    #[test]
    fn encode_is_deterministic_and_linear() {
        let code = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let a = encode_state(&code, 5).unwrap();
        let b = encode_state(&code, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.node_symbols[0].len(), 6);

        let zero = encode_from_source(&code, vec![0; code.t()]).unwrap();
        assert!(zero.node_symbols.iter().all(|s| s.iter().all(|&x| x == 0)));
    }

    #[test]
    fn repair_recovers_each_node() {
        for n in [5usize, 6] {
            let code = build_layered_code(n, DEFAULT_PRIME).unwrap();
            let state = encode_state(&code, 99).unwrap();
            for j in 1..=n {
                let out = repair_node(&code, &state, j).unwrap();
                assert_eq!(out.downloaded_symbols, (n - 1) * (n - 2)); // d * beta
                assert_eq!(out.recovered, state.node_symbols[j - 1], "node {j}");
            }
        }
        let code = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let state = encode_state(&code, 1).unwrap();
        let out = repair_node(&code, &state, 3).unwrap();
        assert_eq!(out.downloaded_symbols, 12);

        let zero = encode_from_source(&code, vec![0; code.t()]).unwrap();
        let out = repair_node(&code, &zero, 2).unwrap();
        assert!(out.recovered.iter().all(|&x| x == 0));
    }

    #[test]
    fn repair_recovers_on_secure_code() {
        let base = build_layered_code(6, DEFAULT_PRIME).unwrap();
        let code = secure_precode(&base, 2, 3, DEFAULT_MAX_RETRIES).unwrap();
        let state = encode_state(&code, 17).unwrap();
        for j in 1..=6 {
            let out = repair_node(&code, &state, j).unwrap();
            assert_eq!(out.recovered, state.node_symbols[j - 1]);
        }
    }

    #[test]
    fn reconstruction_from_any_k_nodes() {
        let code = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let state = encode_state(&code, 8).unwrap();
        let msg = reconstruct_message(&code, &state, &[1, 2, 3, 4]).unwrap();
        assert_eq!(msg, state.message(&code));

        let base = build_layered_code(6, DEFAULT_PRIME).unwrap();
        let code = secure_precode(&base, 1, 23, DEFAULT_MAX_RETRIES).unwrap();
        let state = encode_state(&code, 4).unwrap();
        for k_set in k_subsets(6, 5) {
            let msg = reconstruct_message(&code, &state, &k_set).unwrap();
            assert_eq!(msg, state.message(&code), "K = {k_set:?}");
        }

        match reconstruct_message(&code, &state, &[1, 2, 3, 4]) {
            Err(CodeError::InsufficientNodes { have: 4, need: 5 }) => {}
            other => panic!("expected InsufficientNodes, got {other:?}"),
        }
    }

    #[test]
    fn serialization_round_trip() {
        let base = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let code = secure_precode(&base, 1, 31, DEFAULT_MAX_RETRIES).unwrap();
        let doc = serialize_code(&code);
        let back = deserialize_code(&doc).unwrap();
        assert_eq!(back, code);
        // canonical bytes
        assert_eq!(serialize_code(&back), doc);
    }

    #[test]
    fn truncated_document_is_malformed() {
        let base = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let doc = serialize_code(&base);
        let cut = &doc[..doc.len() / 2];
        match deserialize_code(cut) {
            Err(CodeError::Malformed(_)) => {}
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_version_rejected() {
        let base = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let doc = serialize_code(&base).replace("\"version\":1", "\"version\":9");
        match deserialize_code(&doc) {
            Err(CodeError::UnsupportedVersion(9)) => {}
            other => panic!("expected UnsupportedVersion, got {other:?}"),
        }
    }

    #[test]
    fn repair_row_outside_node_space_rejected_on_load() {
        let base = build_layered_code(5, DEFAULT_PRIME).unwrap();
        let mut doc: CodeDocument = serde_json::from_str(&serialize_code(&base)).unwrap();
        // make the first entry of repair map (1,2) a coordinate node 1 does
        // not store: block {2,3,4} is index C(4,2)=6... easier: point the
        // row at the last source coordinate, which belongs to block {3,4,5}
        let t = doc.t;
        doc.repair_maps[0].entries[..t].fill(0);
        doc.repair_maps[0].entries[t - 1] = 1;
        let text = serde_json::to_string(&doc).unwrap();
        match deserialize_code(&text) {
            Err(CodeError::Malformed(msg)) => {
                assert!(msg.contains("not a function"), "{msg}");
            }
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn block_test_matches_rank_test_even_for_bad_precoders() {
        let base = build_layered_code(5, DEFAULT_PRIME).unwrap();
        // identity precoder leaves the message in plain sight
        let identity = FieldMatrix::identity(base.t(), base.p()).unwrap();
        let insecure = apply_precoder(&base, 1, &identity).unwrap();
        for l in 1..=5 {
            assert!(!wiretap_key_block_invertible(&insecure, &[l]).unwrap());
        }
        let good = secure_precode(&base, 1, 2, DEFAULT_MAX_RETRIES).unwrap();
        for l in 1..=5 {
            assert!(wiretap_key_block_invertible(&good, &[l]).unwrap());
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let base = build_layered_code(6, DEFAULT_PRIME).unwrap();
        let a = secure_precode(&base, 2, 77, DEFAULT_MAX_RETRIES).unwrap();
        let b = secure_precode(&base, 2, 77, DEFAULT_MAX_RETRIES).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize_code(&a), serialize_code(&b));
    }

    #[test]
    fn exhausted_retry_budget_reports_unachievable() {
        let base = build_layered_code(5, DEFAULT_PRIME).unwrap();
        match secure_precode_with_ladder(&base, 1, 4, 0, &[]) {
            Err(CodeError::SecrecyUnachievable {
                retries: 0,
                max_prime: DEFAULT_PRIME,
            }) => {}
            other => panic!("expected SecrecyUnachievable, got {other:?}"),
        }
    }

    #[test]
    fn prime_ladder_escalates_past_tiny_fields() {
        // over GF(2) and GF(3) a random square key submatrix is singular
        // often enough that a 1-draw budget forces escalation up the ladder;
        // this seed walks all three rungs
        let base = build_layered_code(5, 2).unwrap();
        let (code, info) =
            secure_precode_with_ladder(&base, 1, 0, 1, &[2, 3, DEFAULT_PRIME]).unwrap();
        assert_eq!(info.prime, DEFAULT_PRIME);
        assert_eq!(info.attempts, 3);
        assert_eq!(code.p(), info.prime);
        assert_eq!(code.b_s(), 8);
        for l in 1..=5 {
            assert!(wiretap_key_block_invertible(&code, &[l]).unwrap());
        }
    }
}
