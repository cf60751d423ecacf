use rand::Rng;

use super::mis::{self, MisContext, TemporalRole};
use super::{Reservoir, ShiftResult};
use crate::error::Result;

/// What the combination procedures need to know about pixels and samples.
pub trait ResamplingDomain {
    type Sample: Clone;
    type Pixel: Copy;

    /// Target function of `pixel` evaluated at `sample`.
    fn target(&self, pixel: Self::Pixel, sample: &Self::Sample) -> f64;

    /// Maps `sample` from the domain of `from` into the domain of `to`.
    fn shift(&self, sample: &Self::Sample, from: Self::Pixel, to: Self::Pixel) -> ShiftResult<Self::Sample>;
}

/// Combines the current reservoir `r_i` with the previous-frame reservoir `r_j`.
///
/// The previous reservoir's confidence is clamped to `m_cap`; the result has
/// `m = r_i.m + min(r_j.m, m_cap)` and a contribution weight finalized for pixel `i`.
pub fn combine_temporal<D, R>(
    domain: &D,
    pixel_i: D::Pixel,
    r_i: &Reservoir<D::Sample>,
    pixel_j: D::Pixel,
    r_j: &Reservoir<D::Sample>,
    m_cap: f64,
    rng: &mut R,
) -> Result<Reservoir<D::Sample>>
where
    D: ResamplingDomain,
    R: Rng + ?Sized,
{
    let m_j = r_j.m.min(m_cap);
    let mut out = Reservoir::new();

    match &r_i.sample {
        Some(x_i) => {
            let p_i = domain.target(pixel_i, x_i);
            let back = domain.shift(x_i, pixel_i, pixel_j);
            let p_other = back.valid.then(|| domain.target(pixel_j, &back.sample) * back.jacobian);
            let m_i = mis::temporal(
                &MisContext {
                    p_hat_self: p_i,
                    p_hat_other: p_other,
                    m_self: r_i.m,
                    m_other: m_j,
                },
                TemporalRole::Current,
            );
            out.update(x_i.clone(), sanitize(m_i * p_i * r_i.w), rng)?;
        }
        None => burn(rng),
    }

    match &r_j.sample {
        Some(x_j) => {
            let shifted = domain.shift(x_j, pixel_j, pixel_i);
            if shifted.valid && shifted.jacobian > 0.0 {
                let p_cross = domain.target(pixel_i, &shifted.sample);
                let p_self = domain.target(pixel_j, x_j) / shifted.jacobian;
                let m = mis::temporal(
                    &MisContext {
                        p_hat_self: p_self,
                        p_hat_other: Some(p_cross),
                        m_self: m_j,
                        m_other: r_i.m,
                    },
                    TemporalRole::Previous,
                );
                let w = m * p_cross * r_j.w * shifted.jacobian;
                out.update(shifted.sample, sanitize(w), rng)?;
            } else {
                burn(rng);
            }
        }
        None => burn(rng),
    }

    out.m = r_i.m + m_j;
    let p = out.sample.as_ref().map_or(0.0, |s| domain.target(pixel_i, s));
    out.finalize(p);
    Ok(out)
}

/// Merges `neighbors` into the canonical reservoir `r` of `pixel`.
///
/// Two techniques use the balance heuristic; more use pairwise MIS. With no
/// neighbors the input is returned unchanged.
pub fn combine_spatial<D, R>(
    domain: &D,
    pixel: D::Pixel,
    r: &Reservoir<D::Sample>,
    neighbors: &[(D::Pixel, &Reservoir<D::Sample>)],
    rng: &mut R,
) -> Result<Reservoir<D::Sample>>
where
    D: ResamplingDomain,
    R: Rng + ?Sized,
{
    let k = neighbors.len();
    if k == 0 {
        return Ok(r.clone());
    }
    let m_c = r.m;
    let m_n: Vec<f64> = neighbors.iter().map(|(_, n)| n.m).collect();
    let m_total = m_c + m_n.iter().sum::<f64>();
    let mut out = Reservoir::new();

    match &r.sample {
        Some(x_c) => {
            let p_c = domain.target(pixel, x_c);
            let p_n: Vec<f64> = neighbors
                .iter()
                .map(|&(q, _)| {
                    let s = domain.shift(x_c, pixel, q);
                    if s.valid {
                        domain.target(q, &s.sample) * s.jacobian
                    } else {
                        0.0
                    }
                })
                .collect();
            let m = if k == 1 {
                mis::balance(&[m_c * p_c, m_n[0] * p_n[0]], 0)
            } else {
                mis::pairwise_canonical(p_c, &p_n, m_c, &m_n, m_total)
            };
            out.update(x_c.clone(), sanitize(m * p_c * r.w), rng)?;
        }
        None => burn(rng),
    }

    for (idx, &(q, rq)) in neighbors.iter().enumerate() {
        let Some(x_q) = &rq.sample else {
            burn(rng);
            continue;
        };
        let shifted = domain.shift(x_q, q, pixel);
        if !(shifted.valid && shifted.jacobian > 0.0) {
            burn(rng);
            continue;
        }
        let p_cross = domain.target(pixel, &shifted.sample);
        let p_self = domain.target(q, x_q) / shifted.jacobian;
        let m = if k == 1 {
            mis::balance(&[m_n[0] * p_self, m_c * p_cross], 0)
        } else {
            mis::pairwise_neighbor(p_cross, p_self, m_c, m_n[idx], m_total, k)
        };
        let w = m * p_cross * rq.w * shifted.jacobian;
        out.update(shifted.sample, sanitize(w), rng)?;
    }

    out.m = m_total;
    let p = out.sample.as_ref().map_or(0.0, |s| domain.target(pixel, s));
    out.finalize(p);
    Ok(out)
}

/// Non-finite weights (from degenerate geometry) are dropped rather than propagated.
fn sanitize(w: f64) -> f64 {
    if w.is_finite() && w > 0.0 {
        w
    } else {
        0.0
    }
}

/// Keeps random consumption fixed when a participant has nothing to offer.
fn burn<R: Rng + ?Sized>(rng: &mut R) {
    let _: f64 = rng.random();
}
