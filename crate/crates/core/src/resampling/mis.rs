//! Multiple importance sampling weights used during resampling.
//!
//! Pairwise weights (used when more than two techniques are combined) follow
//! this scheme, with canonical confidence `M_c`, neighbor confidences `M_i`,
//! `k` neighbors and `M_tot = M_c + sum M_i`. Each neighbor is paired with the
//! canonical technique, which lends it a `M_c / k` share of its confidence:
//!
//! ```text
//! share_i  = (M_i + M_c / k) / M_tot
//! m_i(x)   = share_i * M_i p_i(x) / (M_i p_i(x) + (M_c / k) p_c(x))
//! m_c(x)   = sum_i share_i * (M_c / k) p_c(x) / (M_i p_i(x) + (M_c / k) p_c(x))
//! ```
//!
//! The shares sum to one and each pair splits its share, so the weights form a
//! partition of unity wherever `p_c(x) > 0`. A neighbor weight needs one cross
//! evaluation and the canonical weight needs `k`, so the total is `O(k)`.
//! With `k = 1` the scheme reduces to the confidence-weighted balance heuristic.

/// Balance heuristic `q_j / sum_k q_k`; zero when every technique has zero density.
pub fn balance(q_values: &[f64], j: usize) -> f64 {
    let total: f64 = q_values.iter().sum();
    if total > 0.0 {
        q_values[j] / total
    } else {
        0.0
    }
}

/// Inputs to the two-technique temporal MIS weights.
///
/// `p_hat_self` is the target of the technique that produced the candidate,
/// expressed in the candidate's domain (Jacobian adjusted by the caller);
/// `p_hat_other` is the competing technique's target at the candidate, or
/// `None` when no valid shift exists between the two domains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MisContext {
    pub p_hat_self: f64,
    pub p_hat_other: Option<f64>,
    pub m_self: f64,
    pub m_other: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TemporalRole {
    /// The current frame's own sample.
    Current,
    /// The previous frame's sample, shifted into the current domain.
    Previous,
}

/// Confidence-weighted balance heuristic between a current and a previous reservoir.
pub fn temporal(ctx: &MisContext, role: TemporalRole) -> f64 {
    let Some(p_other) = ctx.p_hat_other else {
        return match role {
            TemporalRole::Current => 1.0,
            TemporalRole::Previous => 0.0,
        };
    };
    let own = ctx.m_self * ctx.p_hat_self;
    let denom = own + ctx.m_other * p_other;
    if denom > 0.0 {
        own / denom
    } else {
        0.0
    }
}

/// Pairwise MIS weight. `confidences[0]` belongs to the canonical technique and
/// `confidences[1 + i]` to neighbor `i`; `which == 0` asks for the canonical weight
/// and `which == 1 + i` for neighbor `i`.
///
/// All target values are evaluated at the same candidate, in the canonical domain.
pub fn pairwise(p_hat_canonical: f64, p_hat_neighbors: &[f64], confidences: &[f64], which: usize) -> f64 {
    assert_eq!(confidences.len(), p_hat_neighbors.len() + 1);
    let m_c = confidences[0];
    let m_n = &confidences[1..];
    let m_total: f64 = confidences.iter().sum();
    if which == 0 {
        pairwise_canonical(p_hat_canonical, p_hat_neighbors, m_c, m_n, m_total)
    } else {
        pairwise_neighbor(
            p_hat_canonical,
            p_hat_neighbors[which - 1],
            m_c,
            m_n[which - 1],
            m_total,
            p_hat_neighbors.len(),
        )
    }
}

pub fn pairwise_canonical(p_c: f64, p_neighbors: &[f64], m_c: f64, m_neighbors: &[f64], m_total: f64) -> f64 {
    let k = p_neighbors.len();
    if k == 0 {
        return 1.0;
    }
    if m_total <= 0.0 {
        return 0.0;
    }
    let lent = m_c / k as f64;
    p_neighbors
        .iter()
        .zip(m_neighbors)
        .map(|(&p_i, &m_i)| {
            let share = (m_i + lent) / m_total;
            let c = lent * p_c;
            let denom = c + m_i * p_i;
            if denom > 0.0 {
                share * c / denom
            } else {
                0.0
            }
        })
        .sum()
}

pub fn pairwise_neighbor(p_c: f64, p_i: f64, m_c: f64, m_i: f64, m_total: f64, k: usize) -> f64 {
    if m_total <= 0.0 || k == 0 {
        return 0.0;
    }
    let lent = m_c / k as f64;
    let share = (m_i + lent) / m_total;
    let own = m_i * p_i;
    let denom = own + lent * p_c;
    if denom > 0.0 {
        share * own / denom
    } else {
        0.0
    }
}
