//! Fast Matrix Pencil Prediction (FMPP) of angle-delay-bin amplitudes.
//!
//! Each active angle-delay bin carries an amplitude trajectory
//! `eta(t) = sum_l lambda_l e^{j omega_l t}`. FMPP estimates the poles from
//! the pencil of two shifted Hankel matrices and propagates the last
//! amplitudes forward by `T_d` subframes through the pole recursion
//! `eta_{s} = eta_0 Z2^{-1} Z0^{s} Z2`, without ever solving for the
//! amplitudes themselves. Pole powers use repeated squaring, giving the
//! `L_ce log T_d` term of the complexity model.

use crate::channel::{AngleDelayTransform, ChannelBlock};
use crate::expfit::OrderMode;
use crate::linalg::{eigenvalues, numerical_rank, pinv};
use crate::real::{cpowu, czero, real};
use crate::{CMat, CVec, Cx, Error, Real, Result};

/// CSI delay budget in subframes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DelayBudget {
    /// Signal transmission delay.
    pub t_trs: usize,
    /// SVD computation delay.
    pub t_svd: usize,
    /// Weight-interpolation delay (EGVP only).
    pub t_int: usize,
}

impl DelayBudget {
    /// Total delay `T_d = T_trs + T_svd + T_int`.
    pub fn total(&self) -> usize {
        self.t_trs + self.t_svd + self.t_int
    }
}

/// The two shifted Hankel matrices of the pencil, each
/// `(N_ce - L_ce) x L_ce`; `eta1` leads `eta0` by one sample and columns run
/// backwards in time.
pub fn build_hankel_pair<T: Real>(
    series: &[Cx<T>],
    l_ce: usize,
) -> Result<(CMat<T>, CMat<T>)> {
    let n = series.len();
    if l_ce == 0 {
        return Err(Error::Order("prediction order must be at least 1".into()));
    }
    if n < 2 * l_ce {
        return Err(Error::Order(format!(
            "FMPP needs N_ce >= 2 L_ce samples, got N_ce = {n}, L_ce = {l_ce}"
        )));
    }
    let rows = n - l_ce;
    let eta0 = CMat::from_fn(rows, l_ce, |i, j| series[l_ce - 1 + i - j]);
    let eta1 = CMat::from_fn(rows, l_ce, |i, j| series[l_ce + i - j]);
    Ok((eta0, eta1))
}

/// Predict the amplitude `T_d` subframes past the last sample of `series`.
///
/// Poles come from the eigenvalues of `pinv(eta0) eta1`; when the pencil
/// rank falls below `L_ce` the order is reduced to the detected rank. The
/// prediction is the last-row/first-column element of
/// `eta0 Z2^{-1} Z0^{T_d + 1} Z2`.
pub fn fmpp_predict<T: Real>(series: &[Cx<T>], l_ce: usize, t_d: usize) -> Result<Cx<T>> {
    let n = series.len();
    let energy = series
        .iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b);
    if energy == T::zero() {
        return Ok(czero());
    }
    let (eta0, eta1) = build_hankel_pair(series, l_ce)?;

    let rank = numerical_rank(&eta0, real(1e-10)).max(1);
    if rank < l_ce {
        log::debug!("FMPP pencil rank {rank} below requested order {l_ce}; reducing");
        return fmpp_predict(series, rank, t_d);
    }

    let pencil = pinv(&eta0, real(1e-12))? * &eta1;
    let poles = eigenvalues(pencil)?;

    // Z2 is the L x L Vandermonde of the estimated poles with columns
    // running backwards: Z2[l][j] = z_l^{L - 1 - j}.
    let l = poles.len();
    let mut z2 = CMat::<T>::zeros(l, l);
    for (li, &z) in poles.iter().enumerate() {
        for j in 0..l {
            z2[(li, j)] = cpowu(z, (l - 1 - j) as u64);
        }
    }
    let z2_inv = pinv(&z2, real(1e-12))?;
    let mut z0_pow = CMat::<T>::zeros(l, l);
    for (li, &z) in poles.iter().enumerate() {
        z0_pow[(li, li)] = cpowu(z, t_d as u64 + 1);
    }

    let last_row = eta0.row(eta0.nrows() - 1).into_owned();
    let advanced = last_row * z2_inv * z0_pow * z2;
    Ok(advanced[(0, 0)])
}

/// Angle-delay amplitude histories of one UE over `N_ce` uplink samples.
#[derive(Debug, Clone)]
pub struct AmplitudeHistory<T: Real> {
    /// Per UE antenna: bins x N_ce amplitude matrix.
    pub eta: Vec<CMat<T>>,
    /// Subframe of the first history sample.
    pub t_start: usize,
    /// History spacing in subframes.
    pub spacing: usize,
    /// Bins retained by the energy threshold; all others are frozen at zero.
    pub active_bins: Vec<usize>,
}

impl<T: Real> AmplitudeHistory<T> {
    /// Subframe of the newest history sample.
    pub fn t_last(&self) -> usize {
        self.t_start + (self.eta[0].ncols() - 1) * self.spacing
    }
}

/// Project consecutive channel blocks into the angle-delay domain and retain
/// the bins that carry at least `threshold` of the total energy.
pub fn build_amplitude_history<T: Real>(
    blocks: &[ChannelBlock<T>],
    transform: &AngleDelayTransform<T>,
    threshold: T,
) -> Result<AmplitudeHistory<T>> {
    if blocks.len() < 2 {
        return Err(Error::Order("history needs at least two samples".into()));
    }
    let spacing = blocks[1].subframe - blocks[0].subframe;
    for w in blocks.windows(2) {
        if w[1].subframe - w[0].subframe != spacing {
            return Err(Error::Schedule("history samples must be uniformly spaced".into()));
        }
    }
    let m = blocks[0].h.ncols();
    let bins = blocks[0].h.nrows();
    let n_ce = blocks.len();

    let mut eta = vec![CMat::<T>::zeros(bins, n_ce); m];
    for (k, block) in blocks.iter().enumerate() {
        let g = transform.project_block(block)?;
        for ant in 0..m {
            for b in 0..bins {
                eta[ant][(b, k)] = g[(b, ant)];
            }
        }
    }

    let mut bin_energy = vec![T::zero(); bins];
    let mut total = T::zero();
    for ant_eta in &eta {
        for b in 0..bins {
            for k in 0..n_ce {
                let e = ant_eta[(b, k)].norm_sqr();
                bin_energy[b] += e;
                total += e;
            }
        }
    }
    let cut = total * threshold;
    let active_bins: Vec<usize> = (0..bins).filter(|&b| bin_energy[b] >= cut).collect();

    Ok(AmplitudeHistory {
        eta,
        t_start: blocks[0].subframe,
        spacing,
        active_bins,
    })
}

/// Predicted channel block `T_d` subframes past the newest history sample:
/// every active bin is advanced with [`fmpp_predict`], inactive bins stay
/// zero, and the result is mapped back with the inverse transform.
pub fn predict_channel<T: Real>(
    history: &AmplitudeHistory<T>,
    transform: &AngleDelayTransform<T>,
    order: OrderMode,
    t_d: usize,
    ue: usize,
) -> Result<ChannelBlock<T>> {
    let m = history.eta.len();
    let bins = history.eta[0].nrows();
    let n_ce = history.eta[0].ncols();
    let (n_t, n_f) = transform.dims();
    if bins != n_t * n_f {
        return Err(Error::Dimension(format!(
            "history has {bins} bins, transform expects {}",
            n_t * n_f
        )));
    }

    let mut h = CMat::<T>::zeros(bins, m);
    for ant in 0..m {
        let mut g_hat = CVec::<T>::zeros(bins);
        for &b in &history.active_bins {
            let series: Vec<Cx<T>> = (0..n_ce).map(|k| history.eta[ant][(b, k)]).collect();
            let l = order.select(&series, real::<T>(history.spacing as f64))?;
            g_hat[b] = fmpp_predict(&series, l, t_d)?;
        }
        h.set_column(ant, &transform.inverse(&g_hat)?);
    }
    Ok(ChannelBlock {
        h,
        subframe: history.t_last() + t_d,
        ue,
    })
}

/// Analytic FLOP counts (unit constants) of classic Matrix Pencil versus
/// FMPP for predicting all `N_t N_f` bins by `T_d` subframes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopComparison {
    pub mp: f64,
    pub fmpp: f64,
}

impl FlopComparison {
    pub fn ratio(&self) -> f64 {
        self.fmpp / self.mp
    }
}

/// `MP = N_t N_f (N_ce^2 + L_ce^2 + L_ce log T_d)` versus
/// `FMPP = N_t N_f (L_ce^2 (N_ce - L_ce) + L_ce log T_d)`.
pub fn flop_compare_mp_fmpp(
    n_ce: usize,
    l_ce: usize,
    t_d: usize,
    n_t: usize,
    n_f: usize,
) -> Result<FlopComparison> {
    if n_ce < 2 * l_ce {
        return Err(Error::Order(format!(
            "comparison needs N_ce >= 2 L_ce, got N_ce = {n_ce}, L_ce = {l_ce}"
        )));
    }
    let bins = (n_t * n_f) as f64;
    let (nc, lc) = (n_ce as f64, l_ce as f64);
    let log_t = if t_d > 1 { (t_d as f64).log2() } else { 0.0 };
    Ok(FlopComparison {
        mp: bins * (nc * nc + lc * lc + lc * log_t),
        fmpp: bins * (lc * lc * (nc - lc) + lc * log_t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synthesize_channel, ArrayGeometry, GridConfig, Path, PathSet, Steering};
    use crate::metrics::channel_nmse;
    use crate::real::{cabs, cone, creal, expj};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn hankel_pair_indexing() {
        let series = [creal::<f64>(1.0), creal(2.0), creal(3.0)];
        let (eta0, eta1) = build_hankel_pair(&series, 1).unwrap();
        assert_eq!(eta0.shape(), (2, 1));
        assert_eq!(eta0[(0, 0)], creal::<f64>(1.0));
        assert_eq!(eta0[(1, 0)], creal::<f64>(2.0));
        assert_eq!(eta1[(0, 0)], creal::<f64>(2.0));
        assert_eq!(eta1[(1, 0)], creal::<f64>(3.0));
    }

    #[test]
    fn hankel_boundary_shapes_square() {
        let series: Vec<Cx<f64>> = (0..6).map(|k| expj(0.2 * k as f64)).collect();
        let (eta0, eta1) = build_hankel_pair(&series, 3).unwrap();
        assert_eq!(eta0.shape(), (3, 3));
        assert_eq!(eta1.shape(), (3, 3));
    }

    #[test]
    fn hankel_constant_series_shift_equal() {
        let series = [cone::<f64>(); 5];
        let (eta0, eta1) = build_hankel_pair(&series, 2).unwrap();
        assert_eq!(eta0, eta1);
    }

    #[test]
    fn short_series_rejected() {
        let series = [cone::<f64>(); 3];
        assert!(build_hankel_pair(&series, 2).is_err());
    }

    #[test]
    fn static_pole_prediction_holds_last_sample() {
        let series = [Cx::new(0.7_f64, -0.2); 4];
        for t_d in [0usize, 1, 5, 50] {
            let p = fmpp_predict(&series, 1, t_d).unwrap();
            assert!(cabs(p - series[3]) < 1e-10, "t_d = {t_d}");
        }
    }

    #[test]
    fn single_pole_closed_form() {
        // prediction must equal y2 (y2 / y1)^{T_d}, including |z| != 1
        let y1 = Cx::new(2.0_f64, 0.5);
        let y2 = Cx::new(1.4, -0.3);
        let z = y2 / y1;
        for t_d in [0usize, 1, 3, 7] {
            let p = fmpp_predict(&[y1, y2], 1, t_d).unwrap();
            let expected = y2 * cpowu(z, t_d as u64);
            assert!(cabs(p - expected) < 1e-10, "t_d = {t_d}");
        }
    }

    #[test]
    fn two_exponentials_exact_long_horizon() {
        let amps = [Cx::new(1.0_f64, 0.3), Cx::new(-0.5, 0.8)];
        let omegas = [0.4, -0.9];
        let series: Vec<Cx<f64>> = (0..5)
            .map(|k| {
                amps.iter()
                    .zip(&omegas)
                    .map(|(&a, &w)| a * expj(w * k as f64))
                    .fold(czero(), |acc, v| acc + v)
            })
            .collect();
        let t_d = 10usize;
        let truth: Cx<f64> = amps
            .iter()
            .zip(&omegas)
            .map(|(&a, &w)| a * expj(w * (4 + t_d) as f64))
            .fold(czero(), |acc, v| acc + v);
        let p = fmpp_predict(&series, 2, t_d).unwrap();
        assert!(cabs(p - truth) < 1e-8, "err {}", cabs(p - truth));
    }

    #[test]
    fn rank_collapse_reduces_order() {
        // one exponential, order three requested
        let series: Vec<Cx<f64>> = (0..8).map(|k| expj(0.5 * k as f64)).collect();
        let p = fmpp_predict(&series, 3, 4).unwrap();
        assert!(cabs(p - expj(0.5 * 11.0)) < 1e-8);
    }

    fn on_grid_path_set(
        rng: &mut ChaCha12Rng,
        geo: &ArrayGeometry,
        grid: &GridConfig,
        paths: usize,
        m: usize,
        omega_max: f64,
    ) -> PathSet<f64> {
        // one path per distinct bin, a single Doppler per bin
        let n_t = geo.n_t();
        let n_f = grid.n_f;
        let total = n_t * n_f;
        let mut idx: Vec<usize> = (0..total).collect();
        for i in 0..paths {
            let j = rng.gen_range(i..total);
            idx.swap(i, j);
        }
        let paths: Vec<Path<f64>> = (0..paths)
            .map(|p| {
                let bin = idx[p];
                let (ka, kd) = (bin / n_f, bin % n_f);
                let omega = rng.gen_range(-omega_max..omega_max);
                Path {
                    gains: (0..m)
                        .map(|_| {
                            Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        })
                        .collect(),
                    dopplers: vec![omega; m],
                    delay: kd as f64 / (n_f as f64 * grid.delta_f),
                    steering: Steering::OnGrid {
                        spatial_freq: ka as f64 / n_t as f64,
                    },
                }
            })
            .collect();
        PathSet {
            paths,
            ue_antennas: m,
        }
    }

    #[test]
    fn on_grid_channel_predicted_exactly_and_delay_invariant() {
        let geo = ArrayGeometry::new(1, 16, 1).unwrap();
        let grid = GridConfig::new(8, 30e3, 0.5e-3, 3.5e9).unwrap();
        let transform = AngleDelayTransform::new(&grid, &geo);
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let ps = on_grid_path_set(&mut rng, &geo, &grid, 12, 2, 0.3);

        let blocks: Vec<ChannelBlock<f64>> =
            (0..2).map(|t| synthesize_channel(&ps, &geo, &grid, t)).collect();
        let history = build_amplitude_history(&blocks, &transform, 1e-9).unwrap();

        let mut nmses = Vec::new();
        for t_d in 1..=6usize {
            let pred =
                predict_channel(&history, &transform, OrderMode::Fixed(1), t_d, 0).unwrap();
            let truth = synthesize_channel(&ps, &geo, &grid, 1 + t_d);
            assert_eq!(pred.subframe, truth.subframe);
            let nmse = channel_nmse(&truth.h, &pred.h).unwrap();
            assert!(nmse <= 1e-10, "t_d = {t_d}: nmse {nmse}");
            nmses.push(nmse);
        }
        let spread = nmses.iter().cloned().fold(0.0f64, f64::max)
            - nmses.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-7, "delay spread {spread}");
    }

    #[test]
    fn static_channel_any_delay() {
        let geo = ArrayGeometry::new(1, 4, 1).unwrap();
        let grid = GridConfig::new(4, 30e3, 0.5e-3, 3.5e9).unwrap();
        let transform = AngleDelayTransform::new(&grid, &geo);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let ps = on_grid_path_set(&mut rng, &geo, &grid, 5, 1, 0.0);
        let blocks: Vec<ChannelBlock<f64>> =
            (0..3).map(|t| synthesize_channel(&ps, &geo, &grid, t)).collect();
        let history = build_amplitude_history(&blocks, &transform, 1e-9).unwrap();
        let current = &blocks[2];
        for t_d in [1usize, 9, 25] {
            let pred =
                predict_channel(&history, &transform, OrderMode::Fixed(1), t_d, 0).unwrap();
            let err = (&pred.h - &current.h).norm() / current.h.norm();
            assert!(err < 1e-9, "t_d = {t_d}: err {err}");
        }
    }

    #[test]
    fn bin_permutation_leaves_channel_unchanged() {
        let geo = ArrayGeometry::new(1, 8, 1).unwrap();
        let grid = GridConfig::new(4, 30e3, 0.5e-3, 3.5e9).unwrap();
        let transform = AngleDelayTransform::new(&grid, &geo);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let ps = on_grid_path_set(&mut rng, &geo, &grid, 6, 1, 0.2);
        let blocks: Vec<ChannelBlock<f64>> =
            (0..4).map(|t| synthesize_channel(&ps, &geo, &grid, t)).collect();
        let mut history = build_amplitude_history(&blocks, &transform, 1e-9).unwrap();
        let a = predict_channel(&history, &transform, OrderMode::Fixed(1), 3, 0).unwrap();
        history.active_bins.reverse();
        let b = predict_channel(&history, &transform, OrderMode::Fixed(1), 3, 0).unwrap();
        assert!((a.h - b.h).norm() < 1e-12);
    }

    #[test]
    fn reciprocity_is_identity() {
        // TDD: uplink and downlink trajectories coincide, so predictions do too
        let geo = ArrayGeometry::new(1, 4, 1).unwrap();
        let grid = GridConfig::new(4, 30e3, 0.5e-3, 3.5e9).unwrap();
        let transform = AngleDelayTransform::new(&grid, &geo);
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let ps = on_grid_path_set(&mut rng, &geo, &grid, 4, 2, 0.25);
        let uplink: Vec<ChannelBlock<f64>> =
            (0..3).map(|t| synthesize_channel(&ps, &geo, &grid, t)).collect();
        let downlink = uplink.clone();
        let hu = build_amplitude_history(&uplink, &transform, 1e-9).unwrap();
        let hd = build_amplitude_history(&downlink, &transform, 1e-9).unwrap();
        let pu = predict_channel(&hu, &transform, OrderMode::Fixed(1), 4, 0).unwrap();
        let pd = predict_channel(&hd, &transform, OrderMode::Fixed(1), 4, 0).unwrap();
        assert_eq!(pu.h, pd.h);
    }

    #[test]
    fn flop_comparison_examples() {
        let c = flop_compare_mp_fmpp(7, 3, 5, 16, 8).unwrap();
        assert!(c.fmpp < c.mp, "fmpp {} mp {}", c.fmpp, c.mp);

        // boundary L_ce = N_ce / 2: both finite
        let b = flop_compare_mp_fmpp(6, 3, 1, 4, 4).unwrap();
        assert!(b.mp.is_finite() && b.fmpp.is_finite());
        assert!(b.ratio() > 0.0);
    }

    #[test]
    fn flop_margin_matches_symbolic_difference() {
        // mp - fmpp = N_t N_f (N_ce^2 + L^2 + L^3 - L^2 N_ce)
        let (n_t, n_f) = (8usize, 4usize);
        for l in 1..=5usize {
            for n_ce in (2 * l)..=(2 * l + 6) {
                let c = flop_compare_mp_fmpp(n_ce, l, 9, n_t, n_f).unwrap();
                let (nc, lc) = (n_ce as f64, l as f64);
                let expected = (n_t * n_f) as f64
                    * (nc * nc + lc * lc + lc * lc * lc - lc * lc * nc);
                assert!(
                    ((c.mp - c.fmpp) - expected).abs() < 1e-9,
                    "L = {l}, N_ce = {n_ce}"
                );
            }
        }
    }

    #[test]
    fn order_violation_rejected() {
        assert!(flop_compare_mp_fmpp(5, 3, 1, 4, 4).is_err());
        assert!(fmpp_predict(&[cone::<f64>(); 5], 3, 1).is_err());
    }

    #[test]
    fn zero_series_predicts_zero() {
        let p = fmpp_predict(&[czero::<f64>(); 6], 2, 3).unwrap();
        assert_eq!(p, czero::<f64>());
    }
}
