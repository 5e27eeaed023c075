//! Closed-form error bounds for RR-Independent and RR-Ind-Joint, and the
//! crossover thresholds between them. Natural logarithms throughout.

use serde::Serialize;

use crate::error::{Error, Result};

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::OutOfRange(format!(
            "domain size must be at least 2, got {d}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::OutOfRange(format!(
            "{name} must be positive, got {v}"
        )));
    }
    Ok(())
}

/// Upper bound `V² / d` on the MSE of RR-Independent for a pair of attributes
/// with Cramér's V `v`.
pub fn bound_mse_rr_ind(v: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!(
            "Cramér's V must lie in [0, 1], got {v}"
        )));
    }
    check_d(d)?;
    Ok(v * v / d as f64)
}

/// Max-cell error bound of RR-Independent: `max(d^{-w}, 1/d - d^{-w})`.
pub fn bound_avd_rr_ind(d_star: usize, w: usize) -> Result<f64> {
    check_d(d_star)?;
    if w == 0 {
        return Err(Error::OutOfRange("w must be at least 1".into()));
    }
    Ok(rr_ind_bound(d_star as f64, w as f64))
}

fn rr_ind_bound(d: f64, w: f64) -> f64 {
    let corner = d.powf(-w);
    corner.max(1.0 / d - corner)
}

/// Max-cell error bound of RR-Ind-Joint: `(1 + (d-1)/e^{ε/w})^w d^w / n`
/// where `ε` is the total budget over the `w` attributes.
pub fn bound_avd_ind_joint(d: usize, w: usize, epsilon_total: f64, n: usize) -> Result<f64> {
    check_d(d)?;
    if w == 0 || n == 0 {
        return Err(Error::OutOfRange("w and n must be at least 1".into()));
    }
    check_positive("epsilon", epsilon_total)?;
    Ok(ind_joint_bound(d as f64, w as f64, epsilon_total, n as f64))
}

fn ind_joint_numerator(d: f64, w: f64, epsilon_total: f64) -> f64 {
    let spread = (d - 1.0) * (-epsilon_total / w).exp();
    ((1.0 + spread) * d).powf(w)
}

fn ind_joint_bound(d: f64, w: f64, epsilon_total: f64, n: f64) -> f64 {
    ind_joint_numerator(d, w, epsilon_total) / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Records needed before RR-Ind-Joint's bound drops below RR-Independent's.
    pub n_star: f64,
    /// Total budget above which RR-Ind-Joint's bound wins at the given `n`, `w`.
    /// `+inf` when no budget suffices.
    #[serde(serialize_with = "serialize_lossy")]
    pub eps_star: f64,
    /// Largest subset width at which RR-Ind-Joint can still win at the given `n`.
    pub w_star: f64,
    /// False when the logarithm defining `eps_star` had a nonpositive argument.
    pub eps_star_finite: bool,
}

// JSON has no infinity; emit null instead.
fn serialize_lossy<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Crossover thresholds at `(n, d, w, ε)`. `w` may be fractional.
pub fn compute_thresholds(n: usize, d: usize, w: f64, epsilon_total: f64) -> Result<Thresholds> {
    check_d(d)?;
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    check_positive("w", w)?;
    check_positive("epsilon", epsilon_total)?;
    let (n, d) = (n as f64, d as f64);

    let n_star = ind_joint_numerator(d, w, epsilon_total) / rr_ind_bound(d, w);

    let gap = 1.0 / d - d.powf(-w);
    let inner = gap.powf(1.0 / w) * n.powf(1.0 / w) / d - 1.0;
    let (eps_star, eps_star_finite) = if inner > 0.0 {
        (w * ((d - 1.0) / inner).ln(), true)
    } else {
        (f64::INFINITY, false)
    };

    let w_star = (n.ln() - d.ln()) / (d * d).ln();
    Ok(Thresholds {
        n_star,
        eps_star,
        w_star,
        eps_star_finite,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound_rr_ind: f64,
    pub bound_ind_joint: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_bound_rr_ind: Option<f64>,
    pub n: usize,
    pub w: usize,
    pub d_max: usize,
    pub epsilon_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cramers_v: Option<f64>,
}

pub fn bound_report(
    n: usize,
    w: usize,
    d_max: usize,
    epsilon_total: f64,
    cramers_v: Option<f64>,
) -> Result<BoundReport> {
    Ok(BoundReport {
        bound_rr_ind: bound_avd_rr_ind(d_max, w)?,
        bound_ind_joint: bound_avd_ind_joint(d_max, w, epsilon_total, n)?,
        mse_bound_rr_ind: cramers_v.map(|v| bound_mse_rr_ind(v, d_max)).transpose()?,
        n,
        w,
        d_max,
        epsilon_total,
        cramers_v,
    })
}
