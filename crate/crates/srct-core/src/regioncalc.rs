//! Closed-form storage–bandwidth computations for an (n, k, d, ℓ) secure
//! distributed storage system with repair-eavesdropping: the secrecy
//! coefficient Γ, the corner point (α̂, β̂) = (d/Γ, 1/Γ), the wiretap
//! thresholds ℓ̂ and ℓ*, membership tests, outer bounds, and sweeps.
//!
//! Everything here is integer or exact-rational arithmetic; the ℓ* test in
//! particular is done in squared integer form so no square root is ever
//! evaluated numerically.

use crate::exactfield::{rat, rat_str, ratio, Rational};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// The parameter tuple (n, k, d, ℓ) every computation is indexed by.
///
/// Validity: 1 ≤ ℓ < k ≤ d ≤ n−1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: u64,
    pub k: u64,
    pub d: u64,
    pub ell: u64,
}

impl SystemParams {
    pub fn new(n: u64, k: u64, d: u64, ell: u64) -> Result<Self, RegionError> {
        if !(1 <= ell && ell < k && k <= d && d <= n.saturating_sub(1)) {
            return Err(RegionError::InvalidParams(format!(
                "need 1 <= ell < k <= d <= n-1, got (n={n}, k={k}, d={d}, ell={ell})"
            )));
        }
        Ok(Self { n, k, d, ell })
    }
}

/// A normalized operating point (ᾱ, β̄) = (α/B_s, β/B_s), both positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatePoint {
    pub alpha_bar: Rational,
    pub beta_bar: Rational,
}

impl RatePoint {
    pub fn new(alpha_bar: Rational, beta_bar: Rational) -> Result<Self, RegionError> {
        if alpha_bar <= Rational::zero() || beta_bar <= Rational::zero() {
            return Err(RegionError::InvalidParams(
                "rate point coordinates must be positive".into(),
            ));
        }
        Ok(Self { alpha_bar, beta_bar })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingleCorner {
    Yes,
    No,
    Unknown,
}

impl std::fmt::Display for SingleCorner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SingleCorner::Yes => write!(f, "yes"),
            SingleCorner::No => write!(f, "no"),
            SingleCorner::Unknown => write!(f, "unknown"),
        }
    }
}

/// Binding outer bound for the tuple: either the slanted bound
/// ᾱ + (Γ−d)·β̄ ≥ 1 (when Γ > d) or the vertical bound ᾱ ≥ α̂ (when Γ ≤ d).
/// Both always come paired with β̄ ≥ β̂.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OuterBound {
    Linear { coefficient: u64 },
    Vertical { alpha_hat: Rational },
}

/// Everything the region computation knows about one parameter tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionVerdict {
    pub params: SystemParams,
    pub gamma: u64,
    pub corner: RatePoint,
    pub in_ps: bool,
    pub ell_hat: u64,
    pub ell_star: u64,
    pub single_corner: SingleCorner,
    pub outer_bound: OuterBound,
}

impl RegionVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let outer = match &self.outer_bound {
            OuterBound::Linear { coefficient } => serde_json::json!({
                "type": "linear",
                "coefficient": coefficient,
            }),
            OuterBound::Vertical { alpha_hat } => serde_json::json!({
                "type": "vertical",
                "alpha_hat": rat_str(alpha_hat),
            }),
        };
        serde_json::json!({
            "schema_version": 1,
            "params": {
                "n": self.params.n,
                "k": self.params.k,
                "d": self.params.d,
                "ell": self.params.ell,
            },
            "gamma": self.gamma,
            "corner": {
                "alpha": rat_str(&self.corner.alpha_bar),
                "beta": rat_str(&self.corner.beta_bar),
            },
            "in_ps": self.in_ps,
            "ell_hat": self.ell_hat,
            "ell_star": self.ell_star,
            "single_corner": self.single_corner.to_string(),
            "outer_bound": outer,
        })
    }
}

/// Γ_{k,d,ℓ} = Σ_{i=ℓ}^{k−1} (d − i), computed by direct summation.
pub fn gamma(k: u64, d: u64, ell: u64) -> Result<u64, RegionError> {
    if !(ell < k && k <= d) {
        return Err(RegionError::InvalidParams(format!(
            "gamma needs ell < k <= d, got (k={k}, d={d}, ell={ell})"
        )));
    }
    Ok((ell..k).map(|i| d - i).sum())
}

/// The corner point (α̂, β̂) = (d/Γ, 1/Γ) in lowest terms.
pub fn corner_point(k: u64, d: u64, ell: u64) -> Result<RatePoint, RegionError> {
    let g = gamma(k, d, ell)?;
    RatePoint::new(ratio(d as i64, g as i64), ratio(1, g as i64))
}

/// Threshold ℓ̂ = ⌈(d−1)/4⌉ for the k = d case. Requires d ≥ 2.
pub fn ell_hat_kd(d: u64) -> u64 {
    (d - 1).div_ceil(4)
}

/// Membership in 𝒫_s for k < d: ℓ = k−1 always qualifies, otherwise the
/// case split on k−ℓ decides with exact integer arithmetic.
pub fn in_ps(k: u64, d: u64, ell: u64) -> Result<bool, RegionError> {
    if !(k < d && 1 <= ell && ell < k) {
        return Err(RegionError::InvalidParams(format!(
            "in_ps needs k < d and 1 <= ell < k, got (k={k}, d={d}, ell={ell})"
        )));
    }
    let (k, d, ell) = (k as i128, d as i128, ell as i128);
    Ok(if ell == k - 1 {
        true
    } else if ell == k - 2 {
        4 * k >= d + 7
    } else if ell == k - 3 {
        3 * k >= d + 8
    } else {
        // ell <= k-4: g(ell) >= 0, doubled to stay in integers
        2 * d * (d - ell - 1) >= (2 * d - k - ell + 1) * (2 * d + k - 3 * ell - 5)
    })
}

/// ℓ̂(k, d) = min{ℓ ≥ 1 : (k,d,ℓ) ∈ 𝒫_s} for k < d. The scan always
/// terminates because ℓ = k−1 qualifies.
pub fn ell_hat(k: u64, d: u64) -> Result<u64, RegionError> {
    if !(2 <= k && k < d) {
        return Err(RegionError::InvalidParams(format!(
            "ell_hat needs 2 <= k < d, got (k={k}, d={d})"
        )));
    }
    for ell in 1..k {
        if in_ps(k, d, ell)? {
            return Ok(ell);
        }
    }
    unreachable!("ell = k-1 is always a member")
}

/// ℓ* = min{ℓ' ≥ 1 : Γ_{k,d,ℓ'} ≤ d + √(dℓ')}, tested purely in integers
/// as Γ ≤ d or (Γ−d)² ≤ d·ℓ'.
pub fn ell_star(k: u64, d: u64) -> Result<u64, RegionError> {
    if !(2 <= k && k <= d) {
        return Err(RegionError::InvalidParams(format!(
            "ell_star needs 2 <= k <= d, got (k={k}, d={d})"
        )));
    }
    for ell in 1..k {
        let g = gamma(k, d, ell)?;
        let ok = g <= d || {
            let excess = (g - d) as u128;
            excess * excess <= d as u128 * ell as u128
        };
        if ok {
            return Ok(ell);
        }
    }
    unreachable!("Gamma_(k,d,k-1) = d-k+1 <= d always satisfies the condition")
}

/// g(ℓ) = d(d−ℓ−1) − ½(2d−k−ℓ+1)(2d+k−3ℓ−5) as an exact rational,
/// defined for 1 ≤ ℓ ≤ k−4.
pub fn g_eval(k: u64, d: u64, ell: u64) -> Result<Rational, RegionError> {
    if !(1 <= ell && ell + 4 <= k && k <= d) {
        return Err(RegionError::InvalidParams(format!(
            "g is defined for 1 <= ell <= k-4, got (k={k}, d={d}, ell={ell})"
        )));
    }
    let (k, d, ell) = (k as i64, d as i64, ell as i64);
    Ok(rat(d) * rat(d - ell - 1)
        - ratio(1, 2) * rat(2 * d - k - ell + 1) * rat(2 * d + k - 3 * ell - 5))
}

/// The binding outer bound for the tuple.
pub fn outer_bound(k: u64, d: u64, ell: u64) -> Result<OuterBound, RegionError> {
    let g = gamma(k, d, ell)?;
    Ok(if g > d {
        OuterBound::Linear { coefficient: g - d }
    } else {
        OuterBound::Vertical {
            alpha_hat: ratio(d as i64, g as i64),
        }
    })
}

/// Single membership predicate across both regimes: Theorem-1 threshold at
/// k = d, the 𝒫_s case split for k < d.
pub fn single_corner_membership(k: u64, d: u64, ell: u64) -> Result<bool, RegionError> {
    if k == d {
        if !(1 <= ell && ell < k) {
            return Err(RegionError::InvalidParams(format!(
                "need 1 <= ell < k, got (k={k}, d={d}, ell={ell})"
            )));
        }
        Ok(ell >= ell_hat_kd(d))
    } else {
        in_ps(k, d, ell)
    }
}

/// Full verdict for a parameter tuple. Independent of n for n ≥ d+1.
pub fn region_report(params: &SystemParams) -> Result<RegionVerdict, RegionError> {
    let SystemParams { k, d, ell, .. } = *params;
    let member = single_corner_membership(k, d, ell)?;
    let single_corner = if k == d {
        if member {
            SingleCorner::Yes
        } else {
            // Theorem-1 is an iff at k = d, so "not a member" really means
            // the region has more than one corner.
            SingleCorner::No
        }
    } else if member {
        SingleCorner::Yes
    } else {
        // the k < d condition is sufficient only
        SingleCorner::Unknown
    };
    Ok(RegionVerdict {
        params: *params,
        gamma: gamma(k, d, ell)?,
        corner: corner_point(k, d, ell)?,
        in_ps: member,
        ell_hat: if k == d { ell_hat_kd(d) } else { ell_hat(k, d)? },
        ell_star: ell_star(k, d)?,
        single_corner,
        outer_bound: outer_bound(k, d, ell)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub d: u64,
    pub k: u64,
    pub ell: u64,
    pub gamma: u64,
    pub in_ps: bool,
    pub ell_hat: u64,
    pub ell_star: u64,
    pub single_corner: SingleCorner,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCounterexample {
    pub kind: String,
    pub d: u64,
    pub k: u64,
    pub ell: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub counterexamples: Vec<SweepCounterexample>,
    /// (k, d, ell_star - ell_hat) with the largest threshold gap seen.
    pub largest_gap: Option<(u64, u64, u64)>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,k,ell,gamma,in_ps,ell_hat,ell_star,single_corner\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.d, r.k, r.ell, r.gamma, r.in_ps, r.ell_hat, r.ell_star, r.single_corner
            ));
        }
        out
    }
}

/// Sweeps every valid (k, d, ℓ) with d ≤ d_max in lexicographic (d, k, ℓ)
/// order, recording (a) failures of upward closure of membership in ℓ and
/// (b) tuples with ℓ ≥ ℓ* that are not members. Both lists are expected to
/// be empty.
pub fn sweep_consistency(d_max: u64) -> Result<SweepReport, RegionError> {
    let mut rows = Vec::new();
    let mut counterexamples = Vec::new();
    let mut largest_gap: Option<(u64, u64, u64)> = None;
    for d in 2..=d_max {
        for k in 2..=d {
            let eh = if k == d { ell_hat_kd(d) } else { ell_hat(k, d)? };
            let es = ell_star(k, d)?;
            let gap = es.saturating_sub(eh);
            if largest_gap.is_none_or(|(_, _, g)| gap > g) {
                largest_gap = Some((k, d, gap));
            }
            for ell in 1..k {
                let member = single_corner_membership(k, d, ell)?;
                let single_corner = if member {
                    SingleCorner::Yes
                } else if k == d {
                    SingleCorner::No
                } else {
                    SingleCorner::Unknown
                };
                rows.push(SweepRow {
                    d,
                    k,
                    ell,
                    gamma: gamma(k, d, ell)?,
                    in_ps: member,
                    ell_hat: eh,
                    ell_star: es,
                    single_corner,
                });
                if member && ell + 1 < k && !single_corner_membership(k, d, ell + 1)? {
                    counterexamples.push(SweepCounterexample {
                        kind: "upward_closure".into(),
                        d,
                        k,
                        ell,
                    });
                }
                if ell >= es && !member {
                    counterexamples.push(SweepCounterexample {
                        kind: "pr_subset".into(),
                        d,
                        k,
                        ell,
                    });
                }
            }
        }
    }
    Ok(SweepReport {
        rows,
        counterexamples,
        largest_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfield::rat;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(6, 6, 1).unwrap(), 15); // 5+4+3+2+1
        for (k, d) in [(4u64, 9u64), (6, 6), (10, 12)] {
            assert_eq!(gamma(k, d, k - 1).unwrap(), d - k + 1);
        }
        let g = gamma(31, 32, 22).unwrap();
        assert_eq!(g, 54);
        // boundary for ell* = 22: (Gamma - d)^2 <= d*ell
        assert!((g - 32) * (g - 32) <= 32 * 22);
        assert!(gamma(6, 5, 1).is_err());
        assert!(gamma(6, 6, 6).is_err());
    }

    #[test]
    fn gamma_matches_closed_form_up_to_60() {
        for d in 2..=60u64 {
            for k in 2..=d {
                for ell in 0..k {
                    let by_sum = gamma(k, d, ell).unwrap();
                    let closed = (k - ell) * (2 * d - k - ell + 1) / 2;
                    assert_eq!(by_sum, closed, "({k},{d},{ell})");
                }
            }
        }
    }

    #[test]
    fn corner_point_examples() {
        // independent summation oracle for Gamma
        let g: u64 = (2..6u64).map(|i| 6 - i).sum();
        assert_eq!(g, 10);
        let c = corner_point(6, 6, 2).unwrap();
        assert_eq!(c.alpha_bar, ratio(3, 5));
        assert_eq!(c.beta_bar, ratio(1, 10));

        let c = corner_point(31, 32, 22).unwrap();
        assert_eq!(c.alpha_bar, ratio(16, 27));
        assert_eq!(c.beta_bar, ratio(1, 54));

        for (k, d) in [(3u64, 7u64), (5, 5), (9, 11)] {
            let c = corner_point(k, d, k - 1).unwrap();
            assert_eq!(c.alpha_bar, ratio(d as i64, (d - k + 1) as i64));
            assert_eq!(c.beta_bar, ratio(1, (d - k + 1) as i64));
        }
    }

    #[test]
    fn ell_hat_kd_examples() {
        assert_eq!(ell_hat_kd(6), 2);
        assert_eq!(ell_hat_kd(5), 1);
        assert_eq!(ell_hat_kd(32), 8);
    }

    #[test]
    fn in_ps_examples() {
        assert!(in_ps(31, 32, 12).unwrap());
        assert!(!in_ps(31, 32, 11).unwrap());
        for (k, d) in [(3u64, 5u64), (10, 20), (31, 32)] {
            assert!(in_ps(k, d, k - 1).unwrap());
        }
        // ell = k-2 and 4k >= d+7
        assert!(in_ps(5, 6, 3).unwrap());
        assert!(in_ps(6, 6, 2).is_err()); // k = d routes elsewhere
    }

    #[test]
    fn ell_hat_examples() {
        assert_eq!(ell_hat(31, 32).unwrap(), 12);
        // only ell = k-1 qualifies: k=3, d=8 has 4k < d+7 at ell=1
        assert!(!in_ps(3, 8, 1).unwrap());
        assert_eq!(ell_hat(3, 8).unwrap(), 2);
        for (k, d) in [(4u64, 9u64), (7, 8), (12, 30)] {
            assert!(ell_hat(k, d).unwrap() < k);
        }
    }

    #[test]
    fn ell_star_examples() {
        assert_eq!(ell_star(31, 32).unwrap(), 22);
        // Gamma_{2,d,1} = d-1 <= d already
        assert_eq!(ell_star(2, 5).unwrap(), 1);
    }

    #[test]
    fn ell_hat_below_ell_star_up_to_60() {
        for d in 3..=60u64 {
            for k in 2..d {
                assert!(
                    ell_hat(k, d).unwrap() <= ell_star(k, d).unwrap(),
                    "({k},{d})"
                );
            }
        }
    }

    #[test]
    fn g_eval_examples() {
        assert!(g_eval(31, 32, 12).unwrap() >= rat(0));
        assert!(g_eval(31, 32, 11).unwrap() < rat(0));
        // g(k-4) = (2k-d-6)(d-k+3) + 1/2, checked across a grid
        for d in 5..=40u64 {
            for k in 5..=d {
                let lhs = g_eval(k, d, k - 4).unwrap();
                let (ki, di) = (k as i64, d as i64);
                let rhs = rat(2 * ki - di - 6) * rat(di - ki + 3) + ratio(1, 2);
                assert_eq!(lhs, rhs, "({k},{d})");
            }
        }
        assert!(g_eval(6, 6, 3).is_err());
    }

    #[test]
    fn in_ps_agrees_with_g_sign() {
        for d in 6..=40u64 {
            for k in 5..d {
                for ell in 1..=k - 4 {
                    let by_g = g_eval(k, d, ell).unwrap() >= rat(0);
                    assert_eq!(in_ps(k, d, ell).unwrap(), by_g, "({k},{d},{ell})");
                }
            }
        }
    }

    #[test]
    fn outer_bound_examples() {
        assert_eq!(
            outer_bound(31, 32, 12).unwrap(),
            OuterBound::Linear { coefficient: 177 }
        );
        assert_eq!(
            outer_bound(6, 6, 5).unwrap(),
            OuterBound::Vertical { alpha_hat: rat(6) }
        );
    }

    #[test]
    fn corner_meets_outer_bound_with_equality() {
        for d in 2..=25u64 {
            for k in 2..=d {
                for ell in 1..k {
                    let c = corner_point(k, d, ell).unwrap();
                    match outer_bound(k, d, ell).unwrap() {
                        OuterBound::Linear { coefficient } => {
                            let lhs = c.alpha_bar.clone()
                                + rat(coefficient as i64) * c.beta_bar.clone();
                            assert_eq!(lhs, rat(1), "({k},{d},{ell})");
                        }
                        OuterBound::Vertical { alpha_hat } => {
                            assert_eq!(c.alpha_bar, alpha_hat, "({k},{d},{ell})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn region_report_examples() {
        let v = region_report(&SystemParams::new(7, 6, 6, 2).unwrap()).unwrap();
        assert_eq!(v.single_corner, SingleCorner::Yes);
        assert_eq!(v.corner.alpha_bar, ratio(3, 5));
        assert_eq!(v.corner.beta_bar, ratio(1, 10));

        let v = region_report(&SystemParams::new(7, 6, 6, 1).unwrap()).unwrap();
        assert_eq!(v.single_corner, SingleCorner::No);

        let v = region_report(&SystemParams::new(33, 31, 32, 11).unwrap()).unwrap();
        assert_eq!(v.single_corner, SingleCorner::Unknown);
        assert_eq!(v.ell_hat, 12);
        assert_eq!(v.ell_star, 22);
    }

    #[test]
    fn region_report_is_invariant_in_n() {
        for (k, d, ell) in [(6u64, 6u64, 2u64), (31, 32, 12), (5, 9, 3)] {
            let a = region_report(&SystemParams::new(d + 1, k, d, ell).unwrap()).unwrap();
            let b = region_report(&SystemParams::new(d + 5, k, d, ell).unwrap()).unwrap();
            assert_eq!(a.gamma, b.gamma);
            assert_eq!(a.corner, b.corner);
            assert_eq!(a.in_ps, b.in_ps);
            assert_eq!(a.single_corner, b.single_corner);
            assert_eq!(a.ell_hat, b.ell_hat);
            assert_eq!(a.ell_star, b.ell_star);
            assert_eq!(a.outer_bound, b.outer_bound);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SystemParams::new(7, 6, 6, 0).is_err());
        assert!(SystemParams::new(7, 6, 6, 6).is_err());
        assert!(SystemParams::new(6, 6, 6, 2).is_err()); // n must exceed d
        assert!(SystemParams::new(7, 7, 6, 2).is_err());
    }

    #[test]
    fn sweep_small_and_medium() {
        let tiny = sweep_consistency(3).unwrap();
        assert!(tiny.counterexamples.is_empty());
        assert_eq!(tiny.rows.len(), 4); // (2,2,1), (3,2,1), (3,3,1), (3,3,2)

        let report = sweep_consistency(40).unwrap();
        assert!(report.counterexamples.is_empty());
        let row = report
            .rows
            .iter()
            .find(|r| r.d == 32 && r.k == 31 && r.ell == 12)
            .unwrap();
        assert!(row.in_ps);
        assert_eq!(row.ell_star - row.ell_hat, 10);
        let csv = report.to_csv();
        assert!(csv.starts_with("d,k,ell,gamma,in_ps,ell_hat,ell_star,single_corner\n"));
    }

    #[test]
    fn upward_closure_exhaustive_to_60() {
        for d in 2..=60u64 {
            for k in 2..=d {
                for ell in 1..k.saturating_sub(1) {
                    if single_corner_membership(k, d, ell).unwrap() {
                        assert!(
                            single_corner_membership(k, d, ell + 1).unwrap(),
                            "closure fails at ({k},{d},{ell})"
                        );
                    }
                }
            }
        }
    }
}
