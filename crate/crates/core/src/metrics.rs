//! Spectral efficiency, prediction-error metrics and the per-scheme FLOP
//! model.

use crate::real::real;
use crate::{CMat, CVec, Error, Real, Result};

/// Per-UE link gains at one (subframe, subcarrier) point: desired power
/// `||h_k g_k||^2` and inter-UE interference `sum_{j != k} ||h_k g_j||^2`.
#[derive(Debug, Clone)]
pub struct LinkGains<T: Real> {
    pub signal: Vec<T>,
    pub interference: Vec<T>,
}

/// Evaluate `||h_k g_j||^2` terms for all UE pairs at one point.
///
/// `slices[k]` is the true `M x N_t` channel of UE `k` at this subcarrier;
/// `precoders[j]` the unit-norm transmit vector of UE `j`.
pub fn link_gains<T: Real>(slices: &[CMat<T>], precoders: &[CVec<T>]) -> Result<LinkGains<T>> {
    let k = slices.len();
    if precoders.len() != k {
        return Err(Error::Dimension(format!(
            "{k} channel slices but {} precoders",
            precoders.len()
        )));
    }
    let mut signal = vec![T::zero(); k];
    let mut interference = vec![T::zero(); k];
    for (ue, slice) in slices.iter().enumerate() {
        for (j, g) in precoders.iter().enumerate() {
            if slice.ncols() != g.len() {
                return Err(Error::Dimension(format!(
                    "slice is {}x{} but precoder has length {}",
                    slice.nrows(),
                    slice.ncols(),
                    g.len()
                )));
            }
            let p = (slice * g).norm_squared();
            if j == ue {
                signal[ue] = p;
            } else {
                interference[ue] += p;
            }
        }
    }
    Ok(LinkGains {
        signal,
        interference,
    })
}

/// Sum spectral efficiency at one point:
/// `sum_k log2(1 + s_k / (noise + i_k))`, SINR capped at `max_sinr`.
pub fn sum_se<T: Real>(gains: &LinkGains<T>, noise_var: T, max_sinr: T) -> T {
    let two = real::<T>(2.0);
    gains
        .signal
        .iter()
        .zip(&gains.interference)
        .map(|(&s, &i)| {
            let denom = noise_var + i;
            let sinr = if denom > T::zero() {
                (s / denom).min(max_sinr)
            } else {
                max_sinr
            };
            (T::one() + sinr).ln() / two.ln()
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Averaged spectral efficiency over (t, f) points for a list of SNRs.
#[derive(Debug, Clone)]
pub struct SeReport<T: Real> {
    pub snr_db: Vec<f64>,
    /// Mean sum SE per SNR point, bits/s/Hz.
    pub sum_se: Vec<T>,
    /// Mean per-UE SE per SNR point.
    pub per_ue: Vec<Vec<T>>,
    /// Number of (t, f) points averaged.
    pub points: usize,
}

/// Accumulates SE over evaluation points for several SNRs at once.
#[derive(Debug, Clone)]
pub struct SeAccumulator<T: Real> {
    snr_db: Vec<f64>,
    noise_var: Vec<T>,
    max_sinr: T,
    sums: Vec<T>,
    per_ue: Vec<Vec<T>>,
    points: usize,
}

impl<T: Real> SeAccumulator<T> {
    /// `noise_at(snr_db)` fixes the noise power per SNR point; `max_sinr_db`
    /// caps the per-UE SINR (guards the zero-noise, zero-interference case).
    pub fn new(snr_db: &[f64], noise_var: Vec<T>, max_sinr_db: f64, ues: usize) -> Self {
        Self {
            snr_db: snr_db.to_vec(),
            noise_var,
            max_sinr: real(10f64.powf(max_sinr_db / 10.0)),
            sums: vec![T::zero(); snr_db.len()],
            per_ue: vec![vec![T::zero(); ues]; snr_db.len()],
            points: 0,
        }
    }

    pub fn add(&mut self, gains: &LinkGains<T>) {
        let two_ln = real::<T>(2.0).ln();
        for (idx, &nv) in self.noise_var.iter().enumerate() {
            for (ue, (&s, &i)) in gains.signal.iter().zip(&gains.interference).enumerate() {
                let denom = nv + i;
                let sinr = if denom > T::zero() {
                    (s / denom).min(self.max_sinr)
                } else {
                    self.max_sinr
                };
                let se = (T::one() + sinr).ln() / two_ln;
                self.sums[idx] += se;
                self.per_ue[idx][ue] += se;
            }
        }
        self.points += 1;
    }

    pub fn report(&self) -> SeReport<T> {
        let n = real::<T>(self.points.max(1) as f64);
        SeReport {
            snr_db: self.snr_db.clone(),
            sum_se: self.sums.iter().map(|&s| s / n).collect(),
            per_ue: self
                .per_ue
                .iter()
                .map(|row| row.iter().map(|&s| s / n).collect())
                .collect(),
            points: self.points,
        }
    }
}

/// Phase-invariant eigenvector NMSE:
/// `min_phi ||u - e^{j phi} v||^2 / ||u||^2 = (||u||^2 + ||v||^2 - 2 |<u, v>|) / ||u||^2`.
pub fn eigen_nmse<T: Real>(true_u: &CVec<T>, est_u: &CVec<T>) -> Result<T> {
    if true_u.len() != est_u.len() {
        return Err(Error::Dimension("eigen NMSE needs equal lengths".into()));
    }
    let nu = true_u.norm_squared();
    if nu == T::zero() {
        return Err(Error::Degenerate("reference eigenvector is zero".into()));
    }
    let nv = est_u.norm_squared();
    let cross = crate::real::cabs(true_u.dotc(est_u));
    Ok(((nu + nv - real::<T>(2.0) * cross) / nu).max(T::zero()))
}

/// Mean phase-invariant NMSE over the columns of two eigenmatrices.
pub fn eigen_nmse_matrix<T: Real>(true_u: &CMat<T>, est_u: &CMat<T>) -> Result<T> {
    if true_u.shape() != est_u.shape() {
        return Err(Error::Dimension("eigen NMSE needs equal shapes".into()));
    }
    let m = true_u.ncols();
    let mut acc = T::zero();
    let mut counted = 0usize;
    for c in 0..m {
        let tu = true_u.column(c).into_owned();
        if tu.norm_squared() == T::zero() {
            continue;
        }
        acc += eigen_nmse(&tu, &est_u.column(c).into_owned())?;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::Degenerate("all reference streams are zero".into()));
    }
    Ok(acc / real(counted as f64))
}

/// Channel NMSE `||h - h_hat||^2 / ||h||^2` over a whole block.
pub fn channel_nmse<T: Real>(true_h: &CMat<T>, est_h: &CMat<T>) -> Result<T> {
    if true_h.shape() != est_h.shape() {
        return Err(Error::Dimension("channel NMSE needs equal shapes".into()));
    }
    let denom = true_h.norm_squared();
    if denom == T::zero() {
        return Err(Error::Degenerate("reference channel is zero".into()));
    }
    Ok((true_h - est_h).norm_squared() / denom)
}

/// Precoding schemes covered by the FLOP model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlopScheme {
    FullTime,
    Periodic,
    Agmi,
    Wiener,
    Egvp,
}

/// Parameters of the closed-form FLOP model, counted per EGVP interval
/// (`T_egsp = N_svd * T_svd` subframes).
#[derive(Debug, Clone, Copy)]
pub struct FlopParams {
    pub n_t: usize,
    pub n_f: usize,
    /// UE antenna count (retained streams).
    pub m: usize,
    pub n_svd: usize,
    pub t_svd: usize,
    /// SVD cost constant: one tall complex SVD costs `c_svd * n * m^2`.
    pub c_svd: f64,
    /// Linear-algebra cost constant for the per-subframe update terms.
    pub c_lin: f64,
}

impl FlopParams {
    pub fn new(n_t: usize, n_f: usize, m: usize, n_svd: usize, t_svd: usize) -> Self {
        Self {
            n_t,
            n_f,
            m,
            n_svd,
            t_svd,
            c_svd: 14.0,
            c_lin: 8.0,
        }
    }
}

/// Closed-form FLOPs per EGVP interval for one scheme.
///
/// - full-time: `c_svd N_svd T_svd M (N_f N_t)^2` (an SVD per subframe),
/// - periodic / AGMI: `c_svd N_svd M (N_f N_t)^2` (an SVD per sample),
/// - Wiener: periodic + `c_lin N_svd^2 T_svd^2 N_f N_t`,
/// - EGVP: periodic + `c_lin N_svd T_svd M^2 N_f N_t`.
pub fn flop_count(scheme: FlopScheme, p: &FlopParams) -> f64 {
    let dim = (p.n_f * p.n_t) as f64;
    let (n_svd, t_svd, m) = (p.n_svd as f64, p.t_svd as f64, p.m as f64);
    let periodic = p.c_svd * n_svd * m * dim * dim;
    match scheme {
        FlopScheme::FullTime => periodic * t_svd,
        FlopScheme::Periodic | FlopScheme::Agmi => periodic,
        FlopScheme::Wiener => periodic + p.c_lin * n_svd * n_svd * t_svd * t_svd * dim,
        FlopScheme::Egvp => periodic + p.c_lin * n_svd * t_svd * m * m * dim,
    }
}
