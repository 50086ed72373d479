//! Rank-based entropy oracle for linear storage codes.
//!
//! Every variable of a code — the message M, a node's content W_i, a repair
//! message S_i^j — is a linear function of the uniform source vector, so the
//! joint entropy of any set of them, in field-symbol units, is the rank of
//! their stacked coefficient matrix. This module evaluates entropies,
//! conditional entropies and mutual informations that way, and uses them to
//! verify the defining properties of a secure storage code, entropy
//! symmetry under node relabeling, and a catalog of converse-proof
//! inequalities on concrete codes.

use crate::exactfield::{rat, rat_str, ratio, uniform_mod, FieldMatrix, Rational};
use crate::layeredcode::{k_subsets, LinearStorageCode};
use crate::regioncalc;
use num_traits::Zero;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use std::cell::RefCell;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid variable reference: {0}")]
    BadIndex(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Field(#[from] crate::exactfield::FieldError),
}

/// A random variable of the code: the message, a node's stored content, or
/// one repair message. `Repair { from: i, to: i }` is the empty functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Msg,
    Node(usize),
    Repair { from: usize, to: usize },
}

/// Convenience constructors for the variable families used throughout.
pub fn w_of(nodes: impl IntoIterator<Item = usize>) -> Vec<VarRef> {
    nodes.into_iter().map(VarRef::Node).collect()
}

/// S^j: all repair messages toward node j (helpers are everyone else).
pub fn s_to(n: usize, j: usize) -> Vec<VarRef> {
    (1..=n)
        .filter(|&i| i != j)
        .map(|i| VarRef::Repair { from: i, to: j })
        .collect()
}

/// S^{[l]}: all repair traffic toward nodes 1..=l.
pub fn s_upto(n: usize, l: usize) -> Vec<VarRef> {
    (1..=l).flat_map(|j| s_to(n, j)).collect()
}

/// S_i^A: repair messages from node i toward each node in A.
pub fn s_from(i: usize, to: impl IntoIterator<Item = usize>) -> Vec<VarRef> {
    to.into_iter()
        .map(|j| VarRef::Repair { from: i, to: j })
        .collect()
}

pub fn union(a: &[VarRef], b: &[VarRef]) -> Vec<VarRef> {
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    out
}

/// Memoizing entropy oracle over one immutable code.
pub struct Oracle<'a> {
    code: &'a LinearStorageCode,
    msg_map: FieldMatrix,
    cache: RefCell<HashMap<Vec<VarRef>, usize>>,
}

impl<'a> Oracle<'a> {
    pub fn new(code: &'a LinearStorageCode) -> Self {
        Self {
            code,
            msg_map: code.message_map(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn code(&self) -> &LinearStorageCode {
        self.code
    }

    fn canonical(&self, vars: &[VarRef]) -> Result<Vec<VarRef>, OracleError> {
        let n = self.code.n();
        let mut out = Vec::with_capacity(vars.len());
        for &v in vars {
            match v {
                VarRef::Msg => out.push(v),
                VarRef::Node(i) => {
                    if i == 0 || i > n {
                        return Err(OracleError::BadIndex(format!("node {i} of {n}")));
                    }
                    out.push(v);
                }
                VarRef::Repair { from, to } => {
                    if from == 0 || from > n || to == 0 || to > n {
                        return Err(OracleError::BadIndex(format!(
                            "repair pair ({from}, {to}) of {n}"
                        )));
                    }
                    // S_i^i is a constant: it carries no information
                    if from != to {
                        out.push(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Rank of the stacked functional matrix of the given variables.
    pub fn rank_of(&self, vars: &[VarRef]) -> Result<usize, OracleError> {
        let key = self.canonical(vars)?;
        if let Some(&r) = self.cache.borrow().get(&key) {
            return Ok(r);
        }
        let mats: Vec<&FieldMatrix> = key
            .iter()
            .map(|v| match v {
                VarRef::Msg => Ok(&self.msg_map),
                VarRef::Node(i) => self.code.node_map(*i),
                VarRef::Repair { from, to } => self.code.repair_map(*from, *to),
            })
            .collect::<Result<_, _>>()
            .map_err(|e| OracleError::BadIndex(e.to_string()))?;
        let rank = if mats.is_empty() {
            0
        } else {
            FieldMatrix::stack(&mats)?.rank()
        };
        self.cache.borrow_mut().insert(key, rank);
        Ok(rank)
    }

    /// H(vars) in field-symbol units; always a nonnegative integer for
    /// linear functionals.
    pub fn entropy(&self, vars: &[VarRef]) -> Result<Rational, OracleError> {
        Ok(rat(self.rank_of(vars)? as i64))
    }

    /// H(A | C) = H(A ∪ C) − H(C).
    pub fn cond_entropy(&self, a: &[VarRef], c: &[VarRef]) -> Result<Rational, OracleError> {
        Ok(self.entropy(&union(a, c))? - self.entropy(c)?)
    }

    /// I(A; B | C) = H(A|C) + H(B|C) − H(A ∪ B | C).
    pub fn cond_mutual_information(
        &self,
        a: &[VarRef],
        b: &[VarRef],
        c: &[VarRef],
    ) -> Result<Rational, OracleError> {
        Ok(self.cond_entropy(a, c)? + self.cond_entropy(b, c)? - self.cond_entropy(&union(a, b), c)?)
    }
}

/// Joint entropy of a variable set, in field symbols.
pub fn joint_entropy(code: &LinearStorageCode, vars: &[VarRef]) -> Result<Rational, OracleError> {
    Oracle::new(code).entropy(vars)
}

/// Returns (H(A|C), I(A;B|C)).
pub fn cond_mutual(
    code: &LinearStorageCode,
    a: &[VarRef],
    b: &[VarRef],
    c: &[VarRef],
) -> Result<(Rational, Rational), OracleError> {
    let o = Oracle::new(code);
    Ok((o.cond_entropy(a, c)?, o.cond_mutual_information(a, b, c)?))
}

/// First wiretap set (if any) whose observation leaks message information,
/// over all C(n, ℓ) candidate sets for the code's ℓ.
pub fn security_violation_witness(
    code: &LinearStorageCode,
) -> Result<Option<Vec<usize>>, OracleError> {
    let o = Oracle::new(code);
    let msg = [VarRef::Msg];
    for l_set in k_subsets(code.n(), code.ell()) {
        let obs: Vec<VarRef> = l_set.iter().flat_map(|&j| s_to(code.n(), j)).collect();
        let leak = o.cond_mutual_information(&msg, &obs, &[])?;
        if !leak.is_zero() {
            return Ok(Some(l_set));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FamilyOutcome {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<String>,
}

impl FamilyOutcome {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SdssReport {
    pub reconstruction: FamilyOutcome,
    pub regeneration: FamilyOutcome,
    pub security: FamilyOutcome,
}

impl SdssReport {
    pub fn pass(&self) -> bool {
        self.reconstruction.pass() && self.regeneration.pass() && self.security.pass()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization cannot fail")
    }
}

/// Verifies the three defining properties on a concrete code: every k-set
/// of nodes reconstructs the message, every node regenerates from the
/// traffic toward it, and no ℓ-set observation reveals anything about the
/// message. Failures are reported with their witness sets, never raised.
pub fn check_sdss(code: &LinearStorageCode) -> Result<SdssReport, OracleError> {
    check_sdss_at(code, code.ell())
}

/// Same as [`check_sdss`] but with an explicit wiretap size, so a plain
/// layered code can be tested against an eavesdropper it was not built for.
pub fn check_sdss_at(code: &LinearStorageCode, ell: usize) -> Result<SdssReport, OracleError> {
    let n = code.n();
    let k = code.k();
    if ell >= n {
        return Err(OracleError::BadIndex(format!("ell {ell} of {n}")));
    }
    let o = Oracle::new(code);
    let msg = [VarRef::Msg];

    let mut reconstruction = FamilyOutcome {
        name: "reconstruction".into(),
        checked: 0,
        violations: Vec::new(),
    };
    for k_set in k_subsets(n, k) {
        reconstruction.checked += 1;
        let w = w_of(k_set.iter().copied());
        let h = o.cond_entropy(&msg, &w)?;
        if !h.is_zero() {
            reconstruction
                .violations
                .push(format!("H(M|W_K) = {} for K = {k_set:?}", rat_str(&h)));
        }
    }

    let mut regeneration = FamilyOutcome {
        name: "regeneration".into(),
        checked: 0,
        violations: Vec::new(),
    };
    for j in 1..=n {
        regeneration.checked += 1;
        let h = o.cond_entropy(&w_of([j]), &s_to(n, j))?;
        if !h.is_zero() {
            regeneration
                .violations
                .push(format!("H(W_{j}|S^{j}) = {}", rat_str(&h)));
        }
    }

    let mut security = FamilyOutcome {
        name: "security".into(),
        checked: 0,
        violations: Vec::new(),
    };
    for l_set in k_subsets(n, ell) {
        security.checked += 1;
        let obs: Vec<VarRef> = l_set.iter().flat_map(|&j| s_to(n, j)).collect();
        let leak = o.cond_mutual_information(&msg, &obs, &[])?;
        if !leak.is_zero() {
            security
                .violations
                .push(format!("I(M;Y_L) = {} for L = {l_set:?}", rat_str(&leak)));
        }
    }

    Ok(SdssReport {
        reconstruction,
        regeneration,
        security,
    })
}

#[derive(Debug, Clone)]
pub struct SymmetryConfig {
    /// Exhaustive check covers every variable subset up to this size.
    pub subset_size_limit: usize,
    /// Random full permutations added on top of all transpositions.
    pub extra_permutations: usize,
    /// Subset sizes for the sampled stage.
    pub sampled_sizes: Vec<usize>,
    /// Number of sampled (subset, permutation) pairs.
    pub sampled_pairs: usize,
    pub seed: u64,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        Self {
            subset_size_limit: 2,
            extra_permutations: 4,
            sampled_sizes: vec![3, 4],
            sampled_pairs: 100,
            seed: 0xC0DE,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SymmetryViolation {
    pub subset: Vec<String>,
    pub permutation: Vec<usize>,
    pub h_original: u64,
    pub h_permuted: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SymmetryReport {
    pub exhaustive_checked: usize,
    pub sampled_checked: usize,
    pub violations: Vec<SymmetryViolation>,
}

impl SymmetryReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization cannot fail")
    }
}

fn apply_perm(perm: &[usize], v: VarRef) -> VarRef {
    match v {
        VarRef::Msg => VarRef::Msg,
        VarRef::Node(i) => VarRef::Node(perm[i - 1]),
        VarRef::Repair { from, to } => VarRef::Repair {
            from: perm[from - 1],
            to: perm[to - 1],
        },
    }
}

fn random_permutation(n: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = uniform_mod(rng, (i + 1) as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Checks H(X_A) = H(π(X_A)) over the code's storage and repair variables:
/// exhaustively for subsets up to `subset_size_limit` against every
/// transposition (plus sampled full permutations), then on sampled larger
/// subsets. Entirely deterministic for a fixed seed.
pub fn check_symmetry(
    code: &LinearStorageCode,
    cfg: &SymmetryConfig,
) -> Result<SymmetryReport, OracleError> {
    let n = code.n();
    let o = Oracle::new(code);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    let mut universe: Vec<VarRef> = (1..=n).map(VarRef::Node).collect();
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                universe.push(VarRef::Repair { from: i, to: j });
            }
        }
    }

    let mut perms: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut p: Vec<usize> = (1..=n).collect();
            p.swap(a, b);
            perms.push(p);
        }
    }
    for _ in 0..cfg.extra_permutations {
        perms.push(random_permutation(n, &mut rng));
    }

    let mut report = SymmetryReport {
        exhaustive_checked: 0,
        sampled_checked: 0,
        violations: Vec::new(),
    };

    let check_one = |report: &mut SymmetryReport,
                     subset: &[VarRef],
                     perm: &[usize]|
     -> Result<(), OracleError> {
        let permuted: Vec<VarRef> = subset.iter().map(|&v| apply_perm(perm, v)).collect();
        let h0 = o.rank_of(subset)?;
        let h1 = o.rank_of(&permuted)?;
        if h0 != h1 {
            report.violations.push(SymmetryViolation {
                subset: subset.iter().map(|v| v.to_string()).collect(),
                permutation: perm.to_vec(),
                h_original: h0 as u64,
                h_permuted: h1 as u64,
            });
        }
        Ok(())
    };

    // exhaustive stage over subset indices
    let m = universe.len();
    for size in 1..=cfg.subset_size_limit.min(m) {
        for idx in k_subsets(m, size) {
            let subset: Vec<VarRef> = idx.iter().map(|&i| universe[i - 1]).collect();
            for perm in &perms {
                report.exhaustive_checked += 1;
                check_one(&mut report, &subset, perm)?;
            }
        }
    }

    // sampled stage at the larger sizes
    if !cfg.sampled_sizes.is_empty() {
        for s in 0..cfg.sampled_pairs {
            let size = cfg.sampled_sizes[s % cfg.sampled_sizes.len()].min(m);
            // sample distinct indices
            let mut picked: Vec<usize> = Vec::with_capacity(size);
            while picked.len() < size {
                let c = uniform_mod(&mut rng, m as u64) as usize;
                if !picked.contains(&c) {
                    picked.push(c);
                }
            }
            let subset: Vec<VarRef> = picked.iter().map(|&i| universe[i]).collect();
            let perm = random_permutation(n, &mut rng);
            report.sampled_checked += 1;
            check_one(&mut report, &subset, &perm)?;
        }
    }

    Ok(report)
}

/// Evaluates H(T | S^L) after verifying that T determines the content of
/// some k-set of nodes; for every valid secure code this value is at least
/// B_s.
pub fn sc_outer_eval(
    code: &LinearStorageCode,
    t_set: &[VarRef],
    l_nodes: &[usize],
) -> Result<Rational, OracleError> {
    let n = code.n();
    let o = Oracle::new(code);
    let determines_some_k_set = k_subsets(n, code.k()).into_iter().any(|k_set| {
        let w = w_of(k_set.iter().copied());
        o.cond_entropy(&w, t_set)
            .map(|h| h.is_zero())
            .unwrap_or(false)
    });
    if !determines_some_k_set {
        return Err(OracleError::PreconditionUnmet(
            "T does not determine any k-set of nodes".into(),
        ));
    }
    let obs: Vec<VarRef> = l_nodes.iter().flat_map(|&j| s_to(n, j)).collect();
    o.cond_entropy(t_set, &obs)
}

#[derive(Debug, Clone)]
pub struct CatalogItem {
    pub name: String,
    pub indices: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub slack: Rational,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogReport {
    pub items: Vec<CatalogItem>,
}

impl CatalogReport {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.items
                .iter()
                .map(|i| {
                    serde_json::json!({
                        "name": i.name,
                        "indices": i.indices,
                        "lhs": rat_str(&i.lhs),
                        "rhs": rat_str(&i.rhs),
                        "slack": rat_str(&i.slack),
                        "pass": i.pass,
                    })
                })
                .collect(),
        )
    }
}

/// Evaluates both sides of every catalogued converse-proof inequality on a
/// concrete k = d = n−1 code with ℓ ≥ 1. Every item must hold with
/// nonnegative exact slack.
pub fn check_inequality_catalog(code: &LinearStorageCode) -> Result<CatalogReport, OracleError> {
    let n = code.n();
    let k = code.k();
    let d = code.d();
    let ell = code.ell();
    if ell == 0 {
        return Err(OracleError::NotApplicable(
            "the inequality catalog needs a secure code (ell >= 1)".into(),
        ));
    }
    let o = Oracle::new(code);
    let alpha = rat(code.alpha() as i64);
    let b_s = rat(code.b_s() as i64);
    let gam = regioncalc::gamma(k as u64, d as u64, ell as u64)
        .map_err(|e| OracleError::NotApplicable(e.to_string()))? as i64;

    let mut items: Vec<CatalogItem> = Vec::new();
    let mut push = |name: &str, indices: String, lhs: Rational, rhs: Rational| {
        let slack = rhs.clone() - lhs.clone();
        items.push(CatalogItem {
            name: name.into(),
            indices,
            pass: slack >= Rational::zero(),
            lhs,
            rhs,
            slack,
        });
    };

    // H(S^j | S^{[j-1]})
    let s_cond = |j: usize| -> Result<Rational, OracleError> {
        o.cond_entropy(&s_to(n, j), &s_upto(n, j - 1))
    };
    // H(S_n^{[t]})
    let sn_up = |t: usize| -> Result<Rational, OracleError> { o.entropy(&s_from(n, 1..=t)) };

    let w_tail_cond_sl = o.cond_entropy(&w_of(ell + 1..=k), &s_upto(n, ell))?;

    // conditional-entropy chain bound: H(W_[l+1:k] | S^[l]) against the
    // three-way average over t
    for t in 0..ell {
        let coeff3 = ratio((d + 1 - t) as i64, 3);
        let coeff6 = ratio((d + 1 - t) as i64, 6);
        let mut rhs = coeff3.clone() * alpha.clone() - coeff3 * sn_up(t)? + coeff6 * s_cond(t + 1)?;
        for i in t + 1..=ell {
            rhs -= s_cond(i)?;
        }
        push(
            "lemma1_k_eq_d",
            format!("t={t}"),
            w_tail_cond_sl.clone(),
            rhs,
        );
    }

    // H(S^{t+1} | S^{[t]}) <= (d-t) H(S_n^{t+1} | S_n^{[t]})
    for t in 0..=k - 2 {
        let rhs = rat((d - t) as i64) * (sn_up(t + 1)? - sn_up(t)?);
        push("repair_share_bound", format!("t={t}"), s_cond(t + 1)?, rhs);
    }

    // revised bound with the quarter coefficient
    {
        let mut rhs = ratio((k - ell + 1) as i64, 2) * alpha.clone()
            + ratio((k as i64) - (ell as i64) - 2, 4) * s_cond(ell)?;
        for i in ell - 1..=k - 1 {
            rhs -= ratio(1, 2) * sn_up(i)?;
        }
        push(
            "lemma3_revised",
            format!("ell={ell}"),
            w_tail_cond_sl.clone(),
            rhs,
        );
    }

    // exact peel-off step: H(W_[l+1:k]|S^[l]) + H(S^l|S^[l-1]) = H(W_[l:k]|S^[l-1])
    {
        let lhs = w_tail_cond_sl.clone() + s_cond(ell)?;
        let rhs = o.cond_entropy(&w_of(ell..=k), &s_upto(n, ell - 1))?;
        push("induction_peel", format!("ell={ell}"), lhs, rhs);
    }

    // chain bound via repair shares only
    {
        let mut rhs = -rat((n - ell - 1) as i64) * sn_up(ell)?;
        for i in ell + 1..=k {
            rhs += sn_up(i)?;
        }
        push(
            "repair_chain_bound",
            format!("ell={ell}"),
            w_tail_cond_sl.clone(),
            rhs,
        );
    }

    // per-variable bounds behind the k < d machinery, evaluated with the
    // t_y convention
    for y in ell + 1..=k {
        for t_y in ell..y {
            let cond = union(&s_upto(n, t_y), &w_of(t_y + 1..=y - 1));
            let lhs = o.cond_entropy(&s_to(n, y), &cond)?;
            let rhs = ratio((d + 1 - y) as i64, (d - t_y) as i64) * s_cond(t_y + 1)?;
            push("lemma4_s_bound", format!("y={y},t_y={t_y}"), lhs, rhs);

            let lhs = o.cond_entropy(&w_of([y]), &cond)?;
            let rhs = if t_y <= y - 2 {
                alpha.clone() - sn_up(y - 2)?
                    + ratio((d + 1 - y) as i64, (d + 1 - t_y) as i64) * s_cond(t_y)?
                    - s_cond(y - 1)?
            } else {
                alpha.clone() - sn_up(y - 1)?
            };
            push("lemma4_w_bound", format!("y={y},t_y={t_y}"), lhs, rhs);
        }
    }

    // outer-bound intermediates: secrecy capacity against repair shares
    {
        let rhs = ratio(gam, ell as i64) * sn_up(ell)?;
        push("optimality_t1", format!("ell={ell}"), b_s.clone(), rhs);

        let rhs = alpha.clone() + ratio(gam - d as i64, ell as i64) * sn_up(ell)?;
        push("optimality_t2", format!("ell={ell}"), b_s.clone(), rhs);
    }

    // Han's inequality instances: H(S_n^{[i]})/i <= H(S_n^{[j]})/j, i >= j
    for i in 2..=k {
        for j in 1..i {
            let lhs = sn_up(i)? / rat(i as i64);
            let rhs = sn_up(j)? / rat(j as i64);
            push("han_ratio", format!("i={i},j={j}"), lhs, rhs);
        }
    }

    Ok(CatalogReport { items })
}

impl std::fmt::Display for VarRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarRef::Msg => write!(f, "M"),
            VarRef::Node(i) => write!(f, "W{i}"),
            VarRef::Repair { from, to } => write!(f, "S{from}^{to}"),
        }
    }
}
