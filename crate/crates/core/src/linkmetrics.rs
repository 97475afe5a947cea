//! Receiver noise, per-link SINR and the assignment objective.
//!
//! A link is a tuple `(user u, branch f, AP a, wavelength w)`. Its SINR is
//!
//! ```text
//!                         R[u,f,a,w] S[u,f,a,w]
//! ------------------------------------------------------------------------------
//! sum_{b!=a} sum_{m!=u} sum_g R[u,f,b,w] S[m,g,b,w]
//!   + sum_{b!=a} N[u,f,b,w] (1 - sum_{m!=u} sum_g S[m,g,b,w])  +  sigma
//! ```
//!
//! so a co-wavelength AP serving another user interferes with its full signal,
//! an idle co-wavelength AP (or one serving only `u` itself) contributes its
//! illumination noise, and unassigned tuples have SINR 0.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{AssignmentTensor, Tensor4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("link index ({0}, {1}, {2}, {3}) out of range")]
    IndexOutOfRange(usize, usize, usize, usize),
    #[error("tensor shapes do not agree: {0:?} vs {1:?}")]
    ShapeMismatch([usize; 4], [usize; 4]),
    #[error("AP {ap} wavelength {wavelength} is assigned to more than one other user")]
    OverAssigned { ap: usize, wavelength: usize },
}

pub type Result<T> = core::result::Result<T, LinkError>;

fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(LinkError::NonPositive { what, value })
    }
}

/// Mean-square receiver noise current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        Ok(NoiseModel { sigma: positive("sigma", sigma)? })
    }

    pub fn from_receiver(noise_density: f64, bandwidth: f64) -> Result<Self> {
        Ok(NoiseModel { sigma: receiver_noise_variance(noise_density, bandwidth)? })
    }
}

/// `density^2 * bandwidth`, in A^2.
pub fn receiver_noise_variance(noise_density: f64, bandwidth: f64) -> Result<f64> {
    let d = positive("noise density", noise_density)?;
    let b = positive("bandwidth", bandwidth)?;
    Ok(d * d * b)
}

pub fn to_db(linear: f64) -> Result<f64> {
    Ok(10.0 * libm::log10(positive("linear ratio", linear)?))
}

pub fn from_db(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// SINR threshold and assignment weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrParams {
    /// Weight per assigned link in the objective.
    pub k: f64,
    pub threshold_db: f64,
    /// Linear threshold, `10^(threshold_db / 10)`.
    pub z: f64,
}

impl SinrParams {
    pub fn new(threshold_db: f64, k: f64) -> Result<Self> {
        positive("K", k)?;
        if !threshold_db.is_finite() {
            return Err(LinkError::NonPositive { what: "threshold", value: threshold_db });
        }
        Ok(SinrParams { k, threshold_db, z: from_db(threshold_db) })
    }

    /// 13.8 dB (BER 1e-4 for OOK) and `K = 1000`.
    pub fn reference() -> Self {
        SinrParams::new(13.8, 1000.0).expect("constants are valid")
    }
}

/// Index of one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub user: usize,
    pub branch: usize,
    pub ap: usize,
    pub wavelength: usize,
}

impl Link {
    pub const fn new(user: usize, branch: usize, ap: usize, wavelength: usize) -> Self {
        Link { user, branch, ap, wavelength }
    }
}

fn check_shapes(r: &Tensor4, n: &Tensor4, s: &AssignmentTensor) -> Result<()> {
    if r.dims() != n.dims() {
        return Err(LinkError::ShapeMismatch(r.dims(), n.dims()));
    }
    if r.dims() != s.dims() {
        return Err(LinkError::ShapeMismatch(r.dims(), s.dims()));
    }
    Ok(())
}

/// SINR of one link, evaluated term by term with explicit loops.
pub fn sinr(r: &Tensor4, n: &Tensor4, s: &AssignmentTensor, sigma: f64, link: Link) -> Result<f64> {
    check_shapes(r, n, s)?;
    positive("sigma", sigma)?;
    let Link { user: u, branch: f, ap: a, wavelength: w } = link;
    if !r.in_bounds(u, f, a, w) {
        return Err(LinkError::IndexOutOfRange(u, f, a, w));
    }
    if !s.get(u, f, a, w) {
        return Ok(0.0);
    }
    let [nu, nf, na, _] = r.dims();
    let indicator = |m: usize, g: usize, b: usize| if s.get(m, g, b, w) { 1.0 } else { 0.0 };

    let mut interference = 0.0;
    for b in (0..na).filter(|&b| b != a) {
        for m in (0..nu).filter(|&m| m != u) {
            for g in 0..nf {
                interference += r.get(u, f, b, w) * indicator(m, g, b);
            }
        }
    }
    let mut noise = 0.0;
    for b in (0..na).filter(|&b| b != a) {
        let mut others = 0.0;
        for m in (0..nu).filter(|&m| m != u) {
            for g in 0..nf {
                others += indicator(m, g, b);
            }
        }
        let idle = 1.0 - others;
        if idle != 0.0 && idle != 1.0 {
            return Err(LinkError::OverAssigned { ap: b, wavelength: w });
        }
        noise += n.get(u, f, b, w) * idle;
    }
    Ok(r.get(u, f, a, w) / (interference + noise + sigma))
}

/// [`sinr`] for every tuple.
pub fn sinr_tensor(r: &Tensor4, n: &Tensor4, s: &AssignmentTensor, sigma: f64) -> Result<Tensor4> {
    check_shapes(r, n, s)?;
    let mut out = Tensor4::zeros(r.dims());
    for (u, f, a, w) in s.ones() {
        out.set(u, f, a, w, sinr(r, n, s, sigma, Link::new(u, f, a, w))?);
    }
    Ok(out)
}

/// `sum over all tuples of (gamma + K * S)`, accumulated in index order.
pub fn objective_value(gammas: &Tensor4, s: &AssignmentTensor, k: f64) -> Result<f64> {
    if gammas.dims() != s.dims() {
        return Err(LinkError::ShapeMismatch(gammas.dims(), s.dims()));
    }
    Ok(gammas
        .as_slice()
        .iter()
        .zip(s.as_slice())
        .fold(0.0, |acc, (&g, &on)| acc + (g + if on { k } else { 0.0 })))
}

/// Which user (if any) holds each `(AP, wavelength)` slot.
///
/// Evaluates the same sums as [`sinr`] but skips the zero terms, which leaves
/// every partial sum bit-identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    n_aps: usize,
    n_wavelengths: usize,
    holder: Vec<Option<usize>>,
}

impl Occupancy {
    pub fn empty(n_aps: usize, n_wavelengths: usize) -> Self {
        Occupancy { n_aps, n_wavelengths, holder: vec![None; n_aps * n_wavelengths] }
    }

    /// Fails if some slot is held by two users or twice by one user.
    pub fn from_assignment(s: &AssignmentTensor) -> Result<Self> {
        let [_, _, na, nw] = s.dims();
        let mut occ = Occupancy::empty(na, nw);
        for (u, _, a, w) in s.ones() {
            let slot = &mut occ.holder[a * nw + w];
            if slot.is_some() {
                return Err(LinkError::OverAssigned { ap: a, wavelength: w });
            }
            *slot = Some(u);
        }
        Ok(occ)
    }

    #[inline]
    pub fn holder(&self, ap: usize, wavelength: usize) -> Option<usize> {
        self.holder[ap * self.n_wavelengths + wavelength]
    }

    #[inline]
    pub fn set(&mut self, ap: usize, wavelength: usize, user: Option<usize>) {
        self.holder[ap * self.n_wavelengths + wavelength] = user;
    }

    /// SINR of `link` assuming it is assigned.
    #[inline]
    pub fn link_sinr(&self, r: &Tensor4, n: &Tensor4, sigma: f64, link: Link) -> f64 {
        let Link { user: u, branch: f, ap: a, wavelength: w } = link;
        let mut interference = 0.0;
        let mut noise = 0.0;
        for b in (0..self.n_aps).filter(|&b| b != a) {
            match self.holder(b, w) {
                Some(m) if m != u => interference += r.get(u, f, b, w),
                _ => noise += n.get(u, f, b, w),
            }
        }
        r.get(u, f, a, w) / (interference + noise + sigma)
    }
}
