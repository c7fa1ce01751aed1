//! Eigenvector prediction across SVD gaps.
//!
//! A calibrated eigenvector is a linear combination of the per-UE-antenna
//! channels, `u_m = sum_j a_{m,j} h_j`, with channel weights `a_{m,j} =
//! <h_j, u_m> / chi_m`. The weights evolve as a low-order sum of complex
//! exponentials driven by Doppler differences, so fitting them on the
//! periodic SVD samples lets the precoder be reconstructed at every subframe
//! in between from the weights and the current CSI.

use crate::channel::ChannelBlock;
use crate::eigen::{sample_eigenvectors, EigenSample, SvdSchedule};
use crate::expfit::{mdl_order, pencil_fit, ExpModel, OrderMode, SampleSeries};
use crate::real::{creal, real};
use crate::{CMat, Error, Real, Result, SPEED_OF_LIGHT};

/// Channel weight matrix `A(t)`: entry `(j, m)` holds `a_{m,j}(t)`, so that
/// `U_M(t) = [h_1 ... h_M] A(t)`.
#[derive(Debug, Clone)]
pub struct WeightMatrix<T: Real> {
    pub a: CMat<T>,
    pub subframe: usize,
}

/// Result of decomposing one eigen sample into channel weights.
#[derive(Debug, Clone)]
pub struct DecomposeOutcome<T: Real> {
    pub weights: WeightMatrix<T>,
    /// Relative reconstruction residual `||H A - U|| / ||U||`.
    pub residual: T,
    /// Streams dropped because their eigenvalue was (near) zero.
    pub dropped: Vec<usize>,
}

/// Decompose a calibrated eigen sample into channel weights against the CSI
/// of the same subframe: `a_{m,j} = <h_j, u_m> / chi_m`.
pub fn decompose_weights<T: Real>(
    sample: &EigenSample<T>,
    block: &ChannelBlock<T>,
) -> Result<DecomposeOutcome<T>> {
    if sample.u.shape() != block.h.shape() {
        return Err(Error::Dimension(format!(
            "eigen sample {:?} does not match channel block {:?}",
            sample.u.shape(),
            block.h.shape()
        )));
    }
    let m = sample.u.ncols();
    let chi_max = sample.chi.iter().cloned().fold(T::zero(), T::max);
    if chi_max <= T::zero() {
        return Err(Error::Degenerate("all eigenvalues are zero".into()));
    }
    let eps = chi_max * real(1e-12);

    // Column m of A is H^H u_m / chi_m.
    let mut a = block.h.adjoint() * &sample.u;
    let mut dropped = Vec::new();
    for col in 0..m {
        if sample.chi[col] <= eps {
            log::warn!(
                "stream {col} has vanishing eigenvalue at subframe {}; weight undefined",
                sample.subframe
            );
            dropped.push(col);
            for row in 0..m {
                a[(row, col)] = crate::real::czero();
            }
        } else {
            let inv = creal(T::one() / sample.chi[col]);
            for row in 0..m {
                a[(row, col)] *= inv;
            }
        }
    }
    let rec = &block.h * &a;
    let residual = crate::linalg::rel_err(&rec, &sample.u);
    Ok(DecomposeOutcome {
        weights: WeightMatrix {
            a,
            subframe: sample.subframe,
        },
        residual,
        dropped,
    })
}

/// One fitted exponential model per weight trajectory.
#[derive(Debug, Clone)]
pub struct WeightModelBank<T: Real> {
    /// `models[j][m]` fits the trajectory of `a_{m,j}`.
    pub models: Vec<Vec<ExpModel<T>>>,
    /// Subframe of the first fitted sample.
    pub t_in: usize,
    /// Sample spacing in subframes.
    pub t_svd: usize,
    /// Number of fitted samples.
    pub n_samples: usize,
}

impl<T: Real> WeightModelBank<T> {
    pub fn dim(&self) -> usize {
        self.models.len()
    }

    /// Last subframe covered by the fitted window.
    pub fn t_ed(&self) -> usize {
        self.t_in + (self.n_samples - 1) * self.t_svd
    }
}

/// Fit one exponential model per weight-matrix entry over the window's
/// samples. Poles are projected onto the unit circle before any evaluation,
/// matching the undamped weight model.
pub fn fit_weight_models<T: Real>(
    samples: &[WeightMatrix<T>],
    t_svd: usize,
    mode: OrderMode,
) -> Result<WeightModelBank<T>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Order("weight fitting needs at least two samples".into()));
    }
    if n < 2 * mode.max_order() {
        return Err(Error::Order(format!(
            "N_svd = {n} violates N_svd >= 2 L_svd = {}",
            2 * mode.max_order()
        )));
    }
    let m = samples[0].a.nrows();
    let t_in = samples[0].subframe;
    for (k, s) in samples.iter().enumerate() {
        if s.a.nrows() != m || s.a.ncols() != m {
            return Err(Error::Dimension("weight matrices must share dimension".into()));
        }
        if s.subframe != t_in + k * t_svd {
            return Err(Error::Schedule(format!(
                "weight sample {k} at subframe {} is not on the T_svd grid",
                s.subframe
            )));
        }
    }

    let spacing = real::<T>(t_svd as f64);
    let mut models = Vec::with_capacity(m);
    for j in 0..m {
        let mut row = Vec::with_capacity(m);
        for col in 0..m {
            let series = SampleSeries::new(
                samples.iter().map(|s| s.a[(j, col)]).collect(),
                spacing,
            )?;
            let order = match mode {
                OrderMode::Fixed(l) => l,
                OrderMode::Mdl { l_max } => mdl_order(&series, l_max)?.order,
            };
            let mut model = pencil_fit(&series, order)?;
            model.project_to_unit_circle();
            row.push(model);
        }
        models.push(row);
    }
    Ok(WeightModelBank {
        models,
        t_in,
        t_svd,
        n_samples: n,
    })
}

/// Weights evaluated at one subframe.
#[derive(Debug, Clone)]
pub struct InterpolatedWeights<T: Real> {
    pub weights: WeightMatrix<T>,
    /// Set when `t_p` lies outside the fitted window (extrapolation).
    pub extrapolated: bool,
}

/// Evaluate the fitted weight models at subframe `t_p`.
pub fn interpolate_weights<T: Real>(
    bank: &WeightModelBank<T>,
    t_p: usize,
) -> Result<InterpolatedWeights<T>> {
    let m = bank.dim();
    if m == 0 {
        return Err(Error::Degenerate("empty model bank".into()));
    }
    let offset = real::<T>(t_p as f64 - bank.t_in as f64);
    let mut a = CMat::zeros(m, m);
    for j in 0..m {
        for col in 0..m {
            a[(j, col)] = bank.models[j][col].evaluate(offset);
        }
    }
    let extrapolated = t_p < bank.t_in || t_p > bank.t_ed();
    Ok(InterpolatedWeights {
        weights: WeightMatrix { a, subframe: t_p },
        extrapolated,
    })
}

/// Reconstruct eigenvectors from interpolated weights and the CSI of the
/// target subframe: `u_m = sum_j a_{m,j} h_j`, renormalized to unit columns
/// for precoding. Returns the matrix and the list of degenerate (zero)
/// streams.
pub fn reconstruct_eigenvector<T: Real>(
    weights: &WeightMatrix<T>,
    block: &ChannelBlock<T>,
) -> Result<(CMat<T>, Vec<usize>)> {
    let m = weights.a.nrows();
    if block.h.ncols() != m {
        return Err(Error::Dimension(format!(
            "weights are {m}x{m} but block has {} columns",
            block.h.ncols()
        )));
    }
    let mut u = &block.h * &weights.a;
    let mut degenerate = Vec::new();
    for col in 0..m {
        let n = u.column(col).norm();
        if n > T::zero() {
            let scaled = u.column(col) / creal(n);
            u.set_column(col, &scaled);
        } else {
            degenerate.push(col);
        }
    }
    if degenerate.len() == m {
        return Err(Error::Degenerate("reconstruction produced only zero streams".into()));
    }
    Ok((u, degenerate))
}

/// Upper bound on the SVD cycle from the Nyquist rate of the largest
/// Doppler: `T_svd <= c / (2 v_max f0)`, expressed in whole subframes
/// (nearest count, at least one). `None` when the UE is static.
pub fn max_svd_cycle(v_max_mps: f64, f0: f64, delta_t: f64) -> Option<u64> {
    if v_max_mps <= 0.0 {
        return None;
    }
    let bound_seconds = SPEED_OF_LIGHT / (2.0 * v_max_mps * f0);
    Some((bound_seconds / delta_t).round().max(1.0) as u64)
}

/// Where an entry of the reconstructed trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSource {
    /// Subframe carried an SVD sample; the calibrated sample is passed
    /// through unchanged.
    Sample,
    /// Subframe was reconstructed from interpolated weights and CSI.
    Interpolated,
}

/// Eigenvector trajectory over one window.
#[derive(Debug, Clone)]
pub struct EigenTrajectory<T: Real> {
    pub t_in: usize,
    /// One `(N_f N_t) x M` matrix per subframe in `[t_in, t_ed]`.
    pub vectors: Vec<CMat<T>>,
    pub sources: Vec<EigenSource>,
}

impl<T: Real> EigenTrajectory<T> {
    pub fn at(&self, t: usize) -> Option<&CMat<T>> {
        t.checked_sub(self.t_in).and_then(|i| self.vectors.get(i))
    }
}

/// Options for one EGVP interval run.
#[derive(Debug, Clone, Copy)]
pub struct EgvpOptions {
    pub order: OrderMode,
}

impl Default for EgvpOptions {
    fn default() -> Self {
        Self {
            order: OrderMode::Fixed(3),
        }
    }
}

/// Run the EGVP pipeline over one `T_egsp` window: sample, decompose, fit,
/// and fill every SVD gap with a reconstructed eigenvector. Sample subframes
/// pass the calibrated samples through unchanged.
///
/// `trajectory` must contain channel blocks for every subframe in
/// `[t_in, t_ed]`; these are the CSI the base station acts on (true,
/// stale, or predicted, depending on the scenario).
pub fn run_egvp_interval<T: Real>(
    trajectory: &[ChannelBlock<T>],
    schedule: &SvdSchedule,
    opts: &EgvpOptions,
) -> Result<EigenTrajectory<T>> {
    schedule.check_order(opts.order.max_order())?;
    let samples = sample_eigenvectors(trajectory, schedule)?;

    let block_at = |t: usize| -> Result<&ChannelBlock<T>> {
        trajectory
            .iter()
            .find(|b| b.subframe == t)
            .ok_or_else(|| Error::Schedule(format!("no channel block at subframe {t}")))
    };

    let mut weight_samples = Vec::with_capacity(samples.len());
    for s in &samples {
        weight_samples.push(decompose_weights(s, block_at(s.subframe)?)?.weights);
    }
    let bank = fit_weight_models(&weight_samples, schedule.t_svd, opts.order)?;

    let mut vectors = Vec::with_capacity(schedule.t_egsp());
    let mut sources = Vec::with_capacity(schedule.t_egsp());
    for t in schedule.t_in..=schedule.t_ed() {
        if schedule.is_sample(t) {
            let idx = (t - schedule.t_in) / schedule.t_svd;
            vectors.push(samples[idx].u.clone());
            sources.push(EigenSource::Sample);
        } else {
            let interp = interpolate_weights(&bank, t)?;
            let (u, _) = reconstruct_eigenvector(&interp.weights, block_at(t)?)?;
            vectors.push(u);
            sources.push(EigenSource::Interpolated);
        }
    }
    Ok(EigenTrajectory {
        t_in: schedule.t_in,
        vectors,
        sources,
    })
}
