//! Time-stamped solution snapshots shared by the solvers and the reference cache.

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// One time level: position coefficients and, when known, velocity coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub u: SpectralField,
    pub ut: Option<SpectralField>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<Snapshot>) -> Self {
        Trajectory { snapshots }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Snapshot whose time stamp is within `tol` of `t`.
    pub fn at(&self, t: f64, tol: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - t).abs() <= tol)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }
}

fn scale_check(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("time rescaling needs eps in (0, 1], got {eps}")));
    }
    Ok(())
}

/// Relabels a weak-form trajectory `u(x, t)` as the oscillatory `v(x, s)` with
/// `s = eps^beta t`; velocities become `v_s = eps^{-beta} u_t`.
pub fn rescale_time(weak: &Trajectory, eps: f64, beta: f64) -> Result<Trajectory> {
    scale_check(eps)?;
    let scale = eps.powf(beta);
    Ok(Trajectory::new(
        weak.snapshots
            .iter()
            .map(|s| Snapshot {
                time: s.time * scale,
                u: s.u.clone(),
                ut: s.ut.as_ref().map(|v| v.scaled(1.0 / scale)),
            })
            .collect(),
    ))
}

/// Inverse of [`rescale_time`].
pub fn unscale_time(osc: &Trajectory, eps: f64, beta: f64) -> Result<Trajectory> {
    scale_check(eps)?;
    let scale = eps.powf(beta);
    Ok(Trajectory::new(
        osc.snapshots
            .iter()
            .map(|s| Snapshot { time: s.time / scale, u: s.u.clone(), ut: s.ut.as_ref().map(|v| v.scaled(scale)) })
            .collect(),
    ))
}
