//! Periodic SVD sampling of the stacked channel, phase calibration against a
//! reference sample, and per-subcarrier EZF precoder extraction.
//!
//! The thin SVD of the tall `(N_f N_t) x M` channel is computed through the
//! `M x M` Gram matrix `H^H H`: its eigenvectors are the right singular
//! vectors, its eigenvalues the squared singular values, and `u_m = H v_m /
//! sigma_m`. With `M <= 4` this is both faster and better conditioned than
//! bidiagonalizing the tall matrix.

use crate::channel::{vector_subcarrier_slice, ChannelBlock};
use crate::linalg::{all_finite, hermitian_eigen_desc};
use crate::real::{cabs, cone, creal, real, unit_phase};
use crate::{CMat, CVec, Cx, Error, Real, Result};

/// Calibrated M-truncated eigenvectors of one channel sample.
#[derive(Debug, Clone)]
pub struct EigenSample<T: Real> {
    /// `(N_f N_t) x M` calibrated eigenvectors, unit columns.
    pub u: CMat<T>,
    /// Singular values; descending at the window reference, afterwards kept
    /// in the reference's stream order even if values cross.
    pub sigma: Vec<T>,
    /// Eigenvalues `chi_m = sigma_m^2` of `H H^H` on the retained subspace.
    pub chi: Vec<T>,
    /// Subframe the sample was taken at.
    pub subframe: usize,
    /// Columns whose calibration was undefined (zero overlap with the
    /// reference); they are left unrotated.
    pub uncalibrated: Vec<usize>,
}

/// Periodic SVD schedule inside one interpolation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdSchedule {
    /// First subframe of the window.
    pub t_in: usize,
    /// SVD cycle length in subframes.
    pub t_svd: usize,
    /// Number of SVD samples per window.
    pub n_svd: usize,
}

impl SvdSchedule {
    pub fn new(t_in: usize, t_svd: usize, n_svd: usize) -> Result<Self> {
        if t_svd == 0 {
            return Err(Error::Config("SVD cycle must be at least 1 subframe".into()));
        }
        if n_svd < 2 {
            return Err(Error::Config("schedule needs at least two samples".into()));
        }
        Ok(Self { t_in, t_svd, n_svd })
    }

    /// Last subframe of the window.
    pub fn t_ed(&self) -> usize {
        self.t_in + (self.n_svd - 1) * self.t_svd
    }

    /// Window length `T_egsp = N_svd * T_svd` in subframes.
    pub fn t_egsp(&self) -> usize {
        self.n_svd * self.t_svd
    }

    /// Subframes carrying an SVD sample.
    pub fn sample_subframes(&self) -> Vec<usize> {
        (0..self.n_svd).map(|k| self.t_in + k * self.t_svd).collect()
    }

    /// True when `t` is a sample subframe of this window.
    pub fn is_sample(&self, t: usize) -> bool {
        t >= self.t_in && t <= self.t_ed() && (t - self.t_in) % self.t_svd == 0
    }

    /// Check the prediction-order constraint `N_svd >= 2 L`.
    pub fn check_order(&self, l: usize) -> Result<()> {
        if self.n_svd < 2 * l {
            return Err(Error::Order(format!(
                "N_svd = {} violates N_svd >= 2 L_svd = {}",
                self.n_svd,
                2 * l
            )));
        }
        Ok(())
    }
}

/// Raw thin SVD of a channel block via the Gram matrix.
///
/// Returns `(U, sigma, chi)` with `H = U diag(sigma) V^H` up to numerical
/// error; columns of zero singular value are zeroed.
pub fn svd_truncate<T: Real>(block: &ChannelBlock<T>) -> Result<(CMat<T>, Vec<T>, Vec<T>)> {
    let h = &block.h;
    if !all_finite(h) {
        return Err(Error::Degenerate("channel block has non-finite entries".into()));
    }
    let m = h.ncols();
    let gram = h.adjoint() * h;
    let (mut chi, v) = hermitian_eigen_desc(gram);
    for c in chi.iter_mut() {
        *c = c.max(T::zero());
    }
    let sigma: Vec<T> = chi.iter().map(|&c| c.sqrt()).collect();
    let mut u = CMat::zeros(h.nrows(), m);
    let tiny = sigma[0] * real(1e-14);
    for col in 0..m {
        if sigma[col] > tiny && sigma[col] > T::zero() {
            let uc = h * v.column(col) / creal(sigma[col]);
            u.set_column(col, &uc);
        }
    }
    Ok((u, sigma, chi))
}

/// Rotate each column of `raw` so its inner product with the matching
/// reference column is real and nonnegative: `u_cal = Delta * u` with
/// `Delta = (u^H u_ref) / |u^H u_ref|`.
///
/// Columns with zero overlap are reported and left unrotated.
pub fn phase_calibrate<T: Real>(
    raw: &CMat<T>,
    reference: &CMat<T>,
) -> Result<(CMat<T>, Vec<usize>)> {
    if raw.shape() != reference.shape() {
        return Err(Error::Dimension(format!(
            "calibration shapes differ: {:?} vs {:?}",
            raw.shape(),
            reference.shape()
        )));
    }
    let mut out = raw.clone();
    let mut undefined = Vec::new();
    for m in 0..raw.ncols() {
        // Delta = u^H u_ref / |u^H u_ref|; dotc conjugates its receiver.
        let overlap = raw.column(m).dotc(&reference.column(m));
        let scale = raw.column(m).norm() * reference.column(m).norm();
        if cabs(overlap) <= scale * real(1e-14) {
            undefined.push(m);
            continue;
        }
        let delta = unit_phase(overlap);
        let rotated = raw.column(m) * delta;
        out.set_column(m, &rotated);
    }
    Ok((out, undefined))
}

/// Greedy stream tracking: permute the sample's columns so each reference
/// stream keeps its identity across the window even if singular values
/// cross. Reference streams are matched in rank order to the unused sample
/// column of largest overlap.
fn align_streams<T: Real>(
    u: &mut CMat<T>,
    sigma: &mut [T],
    chi: &mut [T],
    reference: &CMat<T>,
) {
    let m = u.ncols();
    let mut taken = vec![false; m];
    let mut perm = vec![0usize; m];
    for r in 0..m {
        let mut best = (T::zero() - T::one(), r);
        for c in 0..m {
            if taken[c] {
                continue;
            }
            let overlap = cabs(u.column(c).dotc(&reference.column(r)));
            if overlap > best.0 {
                best = (overlap, c);
            }
        }
        taken[best.1] = true;
        perm[r] = best.1;
    }
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return;
    }
    let u_old = u.clone();
    let sigma_old = sigma.to_vec();
    let chi_old = chi.to_vec();
    for (dst, &src) in perm.iter().enumerate() {
        u.set_column(dst, &u_old.column(src));
        sigma[dst] = sigma_old[src];
        chi[dst] = chi_old[src];
    }
}

/// Take one calibrated eigen sample of a channel block. With a reference,
/// streams are first aligned to the reference ordering, then phase
/// calibrated.
pub fn eigen_sample<T: Real>(
    block: &ChannelBlock<T>,
    reference: Option<&CMat<T>>,
) -> Result<EigenSample<T>> {
    let (mut u_raw, mut sigma, mut chi) = svd_truncate(block)?;
    let (u, uncalibrated) = match reference {
        Some(r) => {
            align_streams(&mut u_raw, &mut sigma, &mut chi, r);
            phase_calibrate(&u_raw, r)?
        }
        None => (u_raw, Vec::new()),
    };
    Ok(EigenSample {
        u,
        sigma,
        chi,
        subframe: block.subframe,
        uncalibrated,
    })
}

/// Periodic calibrated eigen samples over one window. The first sample is
/// the calibration reference for the rest of the window.
pub fn sample_eigenvectors<T: Real>(
    trajectory: &[ChannelBlock<T>],
    schedule: &SvdSchedule,
) -> Result<Vec<EigenSample<T>>> {
    let block_at = |t: usize| -> Result<&ChannelBlock<T>> {
        trajectory
            .iter()
            .find(|b| b.subframe == t)
            .ok_or_else(|| Error::Schedule(format!("no channel block at subframe {t}")))
    };
    let mut samples = Vec::with_capacity(schedule.n_svd);
    let mut reference: Option<CMat<T>> = None;
    for t in schedule.sample_subframes() {
        let sample = eigen_sample(block_at(t)?, reference.as_ref())?;
        if reference.is_none() {
            reference = Some(sample.u.clone());
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Per-subcarrier EZF precoders from the UEs' dominant eigenvectors.
///
/// `dominant` holds one stacked `(N_f N_t)` eigenvector per UE. The length
/// `N_t` slices at subcarrier `f` are stacked into `U_f` and the returned
/// precoders are the columns of `U_f (U_f^H U_f)^{-1}`, each normalized to
/// unit power. A rank-deficient Gram is diagonally loaded with
/// `1e-12 * trace`.
pub fn ezf_precoders<T: Real>(
    dominant: &[CVec<T>],
    f: usize,
    n_t: usize,
    n_f: usize,
) -> Result<Vec<CVec<T>>> {
    let k = dominant.len();
    if k == 0 {
        return Err(Error::Dimension("EZF needs at least one UE".into()));
    }
    if f >= n_f {
        return Err(Error::Dimension(format!("subcarrier {f} out of range {n_f}")));
    }
    let mut stack = CMat::<T>::zeros(n_t, k);
    for (col, vec) in dominant.iter().enumerate() {
        if vec.len() != n_t * n_f {
            return Err(Error::Dimension(format!(
                "eigenvector length {} does not match N_t * N_f = {}",
                vec.len(),
                n_t * n_f
            )));
        }
        stack.set_column(col, &vector_subcarrier_slice(vec, f, n_t, n_f));
    }
    let mut gram = stack.adjoint() * &stack;
    let lu = gram.clone().lu();
    let inv = match lu.try_inverse() {
        Some(inv) => inv,
        None => {
            log::warn!("EZF Gram is rank deficient at subcarrier {f}; applying diagonal loading");
            let trace = (0..k).fold(T::zero(), |acc, i| acc + gram[(i, i)].re);
            let load = creal(trace.max(T::one()) * real(1e-12));
            for i in 0..k {
                gram[(i, i)] += load;
            }
            gram.clone()
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::Degenerate("EZF Gram not invertible after loading".into()))?
        }
    };
    let zf = stack * inv;
    Ok((0..k)
        .map(|col| {
            let g = zf.column(col).into_owned();
            let n = g.norm();
            if n > T::zero() {
                g / creal(n)
            } else {
                g
            }
        })
        .collect())
}
