use super::{Letter, TracePoly};
use crate::error::{Error, Result};
use crate::intertwine::TimeVector;

/// Rewrites a polynomial in `B(t_1), ..., B(t_n)` of one Brownian motion as a
/// polynomial in its independent increments.
///
/// `(k,1)` becomes `(1,1)(2,1)...(k,1)` and `(k,*)` becomes `(k,*)...(1,*)`;
/// the returned times are `t_1, t_2 - t_1, ..., t_n - t_{n-1}`.
pub fn expand_increments(p: &TracePoly, times: &[f64]) -> Result<(TracePoly, TimeVector)> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::UnsortedTimes);
    }
    let n = times.len() as u16;
    if let Some(index) = p.indices().into_iter().find(|&j| j == 0 || j > n) {
        return Err(Error::UnknownIndex { index });
    }
    let expanded = p.substitute(|l| {
        if l.star {
            (1..=l.index).rev().map(Letter::adjoint).collect()
        } else {
            (1..=l.index).map(Letter::plain).collect()
        }
    });
    let increments: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| if k == 0 { t } else { t - times[k - 1] })
        .collect();
    Ok((expanded, TimeVector::from_slice(&increments)?))
}
