//! Complex-exponential model estimation: Matrix Pencil pole/amplitude
//! recovery, MDL model-order detection, and model evaluation.
//!
//! A fitted model represents `y(t) = sum_l b_l z_l^{t / step}` with poles
//! `z_l` given per sample step. The pencil uses a balanced Hankel window
//! (length `ceil(N/2)`), rank-L truncation via the SVD, and recovers poles as
//! the dominant eigenvalues of the shifted/unshifted pencil. Amplitudes come
//! from a Vandermonde least-squares fit against the full series.

use crate::linalg::{eigenvalues, lstsq, pinv, rank_truncate, vandermonde};
use crate::real::{cabs, carg, cone, cpowf, creal, czero, real, unit_phase};
use crate::{CMat, CVec, Cx, Error, Real, Result};

/// One `b * z^t` term.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm<T: Real> {
    pub amplitude: Cx<T>,
    /// Pole per sample step, `z = e^{j omega * step}` for undamped content.
    pub pole: Cx<T>,
}

/// Sum of complex exponentials fitted to a uniformly sampled series.
#[derive(Debug, Clone)]
pub struct ExpModel<T: Real> {
    pub terms: Vec<ExpTerm<T>>,
    /// Spacing of the fitted grid in subframes.
    pub sample_step: T,
    /// Relative fit residual on the input series.
    pub residual: T,
    /// Set when rank collapse forced fewer terms than requested.
    pub reduced_order: bool,
}

impl<T: Real> ExpModel<T> {
    /// Constant model `y(t) = b`.
    pub fn constant(b: Cx<T>, sample_step: T) -> Self {
        Self {
            terms: vec![ExpTerm {
                amplitude: b,
                pole: cone(),
            }],
            sample_step,
            residual: T::zero(),
            reduced_order: false,
        }
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    /// `sum_l b_l z_l^{t / sample_step}` with `t` in subframes measured from
    /// the first fitted sample.
    pub fn evaluate(&self, t: T) -> Cx<T> {
        let x = t / self.sample_step;
        self.terms
            .iter()
            .fold(czero(), |acc, term| acc + term.amplitude * cpowf(term.pole, x))
    }

    /// Project every pole onto the unit circle (`|z| := 1`), keeping phases.
    /// Prevents exponential blowup when extrapolating an undamped model.
    pub fn project_to_unit_circle(&mut self) {
        for term in &mut self.terms {
            term.pole = unit_phase(term.pole);
        }
    }
}

/// Uniformly spaced complex series.
#[derive(Debug, Clone)]
pub struct SampleSeries<T: Real> {
    pub values: Vec<Cx<T>>,
    /// Sample spacing in subframes.
    pub spacing: T,
}

impl<T: Real> SampleSeries<T> {
    pub fn new(values: Vec<Cx<T>>, spacing: T) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Order("series needs at least two samples".into()));
        }
        if spacing <= T::zero() {
            return Err(Error::Config("sample spacing must be positive".into()));
        }
        Ok(Self { values, spacing })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Tunables for the pencil fit.
#[derive(Debug, Clone)]
pub struct PencilOptions<T: Real> {
    /// Poles are clipped into `|z| in [1 - damp, 1 + damp]`.
    pub damp_band: T,
    /// Poles closer than this phase distance (rad) are merged.
    pub merge_tol: T,
    /// Relative singular-value threshold for rank detection.
    pub rank_rel_tol: T,
}

impl<T: Real> Default for PencilOptions<T> {
    fn default() -> Self {
        Self {
            damp_band: real(0.1),
            merge_tol: real(1e-6),
            rank_rel_tol: real(1e-10),
        }
    }
}

/// Hankel data matrix `Y[i][j] = y[i + j]` of shape `(N - w) x (w + 1)`.
fn hankel<T: Real>(y: &[Cx<T>], window: usize) -> CMat<T> {
    let n = y.len();
    CMat::from_fn(n - window, window + 1, |i, j| y[i + j])
}

/// Fit `order` complex exponentials with the Matrix Pencil method.
pub fn pencil_fit<T: Real>(series: &SampleSeries<T>, order: usize) -> Result<ExpModel<T>> {
    pencil_fit_with(series, order, &PencilOptions::default())
}

/// [`pencil_fit`] with explicit tolerances.
pub fn pencil_fit_with<T: Real>(
    series: &SampleSeries<T>,
    order: usize,
    opts: &PencilOptions<T>,
) -> Result<ExpModel<T>> {
    let n = series.len();
    if order == 0 {
        return Err(Error::Order("pencil order must be at least 1".into()));
    }
    if n < 2 * order {
        return Err(Error::Order(format!(
            "pencil needs N >= 2L samples, got N = {n}, L = {order}"
        )));
    }
    let y = &series.values;
    let energy = y.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
    if energy == T::zero() {
        let mut model = ExpModel::constant(czero(), series.spacing);
        model.reduced_order = order > 1;
        return Ok(model);
    }

    // Balanced pencil window, clamped so both pencil matrices keep rank L.
    let window = n.div_ceil(2).clamp(order, n - order);
    let data = hankel(y, window);

    // Rank-L truncation filters noise before the pencil is formed.
    let svd = data.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(T::zero(), T::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > smax * opts.rank_rel_tol)
        .count();
    let eff_order = order.min(rank.max(1));
    let reduced = eff_order < order;
    let filtered = rank_truncate(&data, eff_order)?;

    let rows = filtered.nrows();
    let y0 = filtered.view((0, 0), (rows, window)).into_owned();
    let y1 = filtered.view((0, 1), (rows, window)).into_owned();

    // Poles are the dominant eigenvalues of pinv(Y0) * Y1; the remaining
    // eigenvalues of the rank-deficient product sit at zero.
    let pencil = pinv(&y0, real(1e-12))? * y1;
    let mut eig = eigenvalues(pencil)?;
    eig.sort_by(|a, b| {
        cabs(*b)
            .partial_cmp(&cabs(*a))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    eig.truncate(eff_order);

    let mut poles = merge_close_poles(&eig, opts.merge_tol);
    for z in &mut poles {
        *z = clamp_modulus(*z, opts.damp_band);
    }

    // Amplitudes by least squares on the full series.
    let vmat = vandermonde(&poles, n);
    let rhs = CVec::from_column_slice(y);
    let amps = lstsq(&vmat, &rhs)?;
    let fitted = &vmat * &amps;
    let residual = (&fitted - &rhs).norm() / rhs.norm();

    Ok(ExpModel {
        terms: poles
            .iter()
            .zip(amps.iter())
            .map(|(&pole, &amplitude)| ExpTerm { amplitude, pole })
            .collect(),
        sample_step: series.spacing,
        residual,
        reduced_order: reduced || poles.len() < order,
    })
}

fn clamp_modulus<T: Real>(z: Cx<T>, band: T) -> Cx<T> {
    let r = cabs(z);
    let lo = T::one() - band;
    let hi = T::one() + band;
    if r == T::zero() {
        creal(lo)
    } else if r < lo {
        z * creal(lo / r)
    } else if r > hi {
        z * creal(hi / r)
    } else {
        z
    }
}

fn merge_close_poles<T: Real>(poles: &[Cx<T>], tol: T) -> Vec<Cx<T>> {
    let mut kept: Vec<Cx<T>> = Vec::with_capacity(poles.len());
    for &z in poles {
        let close = kept.iter().any(|&k| {
            let mut d = (carg(z) - carg(k)).abs();
            if d > T::pi() {
                d = T::two_pi() - d;
            }
            d < tol && (cabs(z) - cabs(k)).abs() < tol.max(real(1e-6))
        });
        if !close {
            kept.push(z);
        }
    }
    kept
}

/// How the model order of a trajectory is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMode {
    /// One fixed order for every trajectory.
    Fixed(usize),
    /// MDL-selected order per trajectory, capped at `l_max`.
    Mdl { l_max: usize },
}

impl OrderMode {
    /// Largest order this mode can produce.
    pub fn max_order(&self) -> usize {
        match *self {
            OrderMode::Fixed(l) => l,
            OrderMode::Mdl { l_max } => l_max,
        }
    }

    /// Order to use for a specific series.
    pub fn select<T: Real>(&self, series: &[Cx<T>], spacing: T) -> Result<usize> {
        match *self {
            OrderMode::Fixed(l) => Ok(l),
            OrderMode::Mdl { l_max } => {
                let s = SampleSeries::new(series.to_vec(), spacing)?;
                Ok(mdl_order(&s, l_max)?.order)
            }
        }
    }
}

/// MDL order selection result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdlSelection {
    pub order: usize,
    /// Set when the singular-value gap at the chosen order is weak, e.g. for
    /// pure noise input.
    pub low_confidence: bool,
}

/// Detect the exponential model order with the MDL information criterion
/// applied to the Hankel singular spectrum. Returns an order in
/// `[1, l_max]`; ties break toward the smallest order.
pub fn mdl_order<T: Real>(series: &SampleSeries<T>, l_max: usize) -> Result<MdlSelection> {
    let n = series.len();
    if l_max == 0 {
        return Err(Error::Order("MDL needs l_max >= 1".into()));
    }
    if n < 2 * l_max {
        return Err(Error::Order(format!(
            "MDL needs N >= 2 * l_max samples, got N = {n}, l_max = {l_max}"
        )));
    }
    let window = n.div_ceil(2).clamp(l_max, n - l_max);
    let data = hankel(&series.values, window);
    let n_snap = data.nrows();
    let svd = data.svd(false, false);
    let q = svd.singular_values.len();

    let lam_max = svd.singular_values.iter().cloned().fold(T::zero(), T::max);
    if lam_max == T::zero() {
        return Ok(MdlSelection {
            order: 1,
            low_confidence: true,
        });
    }
    let floor = lam_max * lam_max * real(1e-30);
    let lambda: Vec<T> = svd
        .singular_values
        .iter()
        .map(|&s| (s * s).max(floor))
        .collect();

    let k_max = l_max.min(q - 1);
    let ln_snap = real::<T>(n_snap as f64).ln();
    let mut best = (1usize, T::max_value().unwrap_or_else(|| real(f64::MAX)));
    for k in 1..=k_max {
        let rest = &lambda[k..];
        let m = real::<T>(rest.len() as f64);
        let mean_ln = rest.iter().map(|l| l.ln()).fold(T::zero(), |a, b| a + b) / m;
        let mean = rest.iter().fold(T::zero(), |a, &b| a + b) / m;
        let crit = -real::<T>(n_snap as f64) * m * (mean_ln - mean.ln())
            + real::<T>(0.5) * real::<T>((k * (2 * q - k)) as f64) * ln_snap;
        if crit < best.1 {
            best = (k, crit);
        }
    }

    let order = best.0;
    let low_confidence = if order < q {
        lambda[order - 1] / lambda[order] < real(10.0)
    } else {
        true
    };
    Ok(MdlSelection {
        order,
        low_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::expj;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synth(amps: &[Cx<f64>], omegas: &[f64], n: usize) -> Vec<Cx<f64>> {
        (0..n)
            .map(|k| {
                amps.iter()
                    .zip(omegas)
                    .map(|(&b, &w)| b * expj(w * k as f64))
                    .fold(czero(), |a, b| a + b)
            })
            .collect()
    }

    /// Unit-modulus phases with pairwise separation of at least `sep` rad.
    fn separated_phases(rng: &mut ChaCha12Rng, count: usize, sep: f64) -> Vec<f64> {
        let mut phases: Vec<f64> = Vec::new();
        while phases.len() < count {
            let cand = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let ok = phases.iter().all(|&p| {
                let mut d = (cand - p).abs();
                if d > std::f64::consts::PI {
                    d = std::f64::consts::TAU - d;
                }
                d >= sep
            });
            if ok {
                phases.push(cand);
            }
        }
        phases
    }

    fn match_poles(model: &ExpModel<f64>, omegas: &[f64], amps: &[Cx<f64>]) -> (f64, f64) {
        // greedy matching by pole distance; returns (max pole err, max amp err)
        let mut pole_err: f64 = 0.0;
        let mut amp_err: f64 = 0.0;
        for (&w, &b) in omegas.iter().zip(amps) {
            let target = expj(w);
            let best = model
                .terms
                .iter()
                .min_by(|x, y| {
                    cabs(x.pole - target)
                        .partial_cmp(&cabs(y.pole - target))
                        .unwrap()
                })
                .unwrap();
            pole_err = pole_err.max(cabs(best.pole - target));
            amp_err = amp_err.max(cabs(best.amplitude - b));
        }
        (pole_err, amp_err)
    }

    #[test]
    fn single_pole_three_samples() {
        let y = synth(&[cone()], &[0.3], 3);
        let series = SampleSeries::new(y, 1.0).unwrap();
        let model = pencil_fit(&series, 1).unwrap();
        assert_eq!(model.order(), 1);
        assert!(cabs(model.terms[0].pole - expj(0.3)) < 1e-9);
        assert!(cabs(model.terms[0].amplitude - cone::<f64>()) < 1e-9);
    }

    #[test]
    fn constant_series_is_dc() {
        let series = SampleSeries::new(vec![creal(2.0); 4], 1.0).unwrap();
        let model = pencil_fit(&series, 1).unwrap();
        assert!(cabs(model.terms[0].pole - cone::<f64>()) < 1e-10);
        assert!(cabs(model.terms[0].amplitude - creal::<f64>(2.0)) < 1e-10);
    }

    #[test]
    fn three_exponentials_from_seven_samples() {
        let amps = [
            Cx::new(1.0, 0.5),
            Cx::new(-0.3, 0.8),
            Cx::new(0.6, -0.2),
        ];
        let omegas = [0.25, -0.9, 1.7];
        let y = synth(&amps, &omegas, 7);
        let series = SampleSeries::new(y, 1.0).unwrap();
        let model = pencil_fit(&series, 3).unwrap();
        let (pe, ae) = match_poles(&model, &omegas, &amps);
        assert!(pe < 1e-7, "pole err {pe}");
        assert!(ae < 1e-7, "amp err {ae}");
        assert!(model.residual < 1e-9);
    }

    #[test]
    fn exact_recovery_up_to_order_five() {
        // N = 2L + 1 noise-free samples, min pole separation 0.05 rad
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for order in 1..=5usize {
            for _ in 0..20 {
                let omegas = separated_phases(&mut rng, order, 0.05);
                let amps: Vec<Cx<f64>> = (0..order)
                    .map(|_| {
                        Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                            + creal(1.5)
                    })
                    .collect();
                let y = synth(&amps, &omegas, 2 * order + 1);
                let series = SampleSeries::new(y, 1.0).unwrap();
                let model = pencil_fit(&series, order).unwrap();
                let (pe, ae) = match_poles(&model, &omegas, &amps);
                assert!(pe < 1e-7, "L = {order}: pole err {pe}");
                assert!(ae < 1e-6, "L = {order}: amp err {ae}");
            }
        }
    }

    #[test]
    fn under_sampled_rejected() {
        let series = SampleSeries::new(vec![cone(); 5], 1.0).unwrap();
        assert!(matches!(pencil_fit(&series, 3), Err(Error::Order(_))));
    }

    #[test]
    fn rank_collapse_flags_reduced_order() {
        // single exponential but L = 2 requested
        let y = synth(&[cone()], &[0.4], 8);
        let series = SampleSeries::new(y, 1.0).unwrap();
        let model = pencil_fit(&series, 2).unwrap();
        assert!(model.reduced_order);
        assert_eq!(model.order(), 1);
        assert!(cabs(model.terms[0].pole - expj(0.4)) < 1e-9);
    }

    #[test]
    fn all_zero_series_returns_zero_model() {
        let series = SampleSeries::new(vec![czero(); 6], 1.0).unwrap();
        let model = pencil_fit(&series, 2).unwrap();
        assert_eq!(model.order(), 1);
        assert_eq!(model.terms[0].amplitude, czero::<f64>());
    }

    #[test]
    fn shift_covariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let omegas = [0.2, -0.7];
        let amps = [Cx::new(0.9, 0.1), Cx::new(-0.4, 0.6)];
        let y = synth(&amps, &omegas, 9);
        let phi = rng.gen_range(0.0..1.0);
        let shifted: Vec<Cx<f64>> = y
            .iter()
            .enumerate()
            .map(|(k, &v)| v * expj(phi * k as f64))
            .collect();
        let base = pencil_fit(&SampleSeries::new(y, 1.0).unwrap(), 2).unwrap();
        let shift = pencil_fit(&SampleSeries::new(shifted, 1.0).unwrap(), 2).unwrap();
        for term in &base.terms {
            let moved = term.pole * expj(phi);
            let best = shift
                .terms
                .iter()
                .map(|t| cabs(t.pole - moved))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "pole shift mismatch {best}");
        }
    }

    #[test]
    fn scale_equivariance() {
        let omegas = [0.5, -1.1];
        let amps = [Cx::new(1.0, 0.0), Cx::new(0.2, -0.6)];
        let y = synth(&amps, &omegas, 9);
        let c = Cx::new(-1.3, 0.7);
        let scaled: Vec<Cx<f64>> = y.iter().map(|&v| v * c).collect();
        let base = pencil_fit(&SampleSeries::new(y, 1.0).unwrap(), 2).unwrap();
        let big = pencil_fit(&SampleSeries::new(scaled, 1.0).unwrap(), 2).unwrap();
        for term in &base.terms {
            let best = big
                .terms
                .iter()
                .min_by(|a, b| {
                    cabs(a.pole - term.pole)
                        .partial_cmp(&cabs(b.pole - term.pole))
                        .unwrap()
                })
                .unwrap();
            assert!(cabs(best.pole - term.pole) < 1e-9);
            assert!(cabs(best.amplitude - term.amplitude * c) < 1e-8);
        }
    }

    #[test]
    fn evaluate_identity_and_self_consistency() {
        let model = ExpModel::<f64>::constant(cone(), 1.0);
        for t in [0.0, 3.5, 100.0] {
            assert!(cabs(model.evaluate(t) - cone::<f64>()) < 1e-12);
        }

        let omegas = [0.3, -0.8, 1.2];
        let amps = [Cx::new(0.7, 0.2), Cx::new(-0.5, 0.4), Cx::new(0.1, -0.9)];
        let y = synth(&amps, &omegas, 9);
        let series = SampleSeries::new(y.clone(), 1.0).unwrap();
        let model = pencil_fit(&series, 3).unwrap();
        for (k, &v) in y.iter().enumerate() {
            assert!(cabs(model.evaluate(k as f64) - v) < 1e-8, "sample {k}");
        }
        // midpoint between samples matches the ground-truth synthesis
        let truth = |t: f64| {
            amps.iter()
                .zip(&omegas)
                .map(|(&b, &w)| b * expj(w * t))
                .fold(czero(), |a, b| a + b)
        };
        for t in [0.5, 2.5, 6.5] {
            assert!(cabs(model.evaluate(t) - truth(t)) < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn fractional_steps_respect_sample_spacing() {
        // spacing 5 subframes; evaluating at multiples of 5 hits the samples
        let omegas = [0.7];
        let amps = [creal(1.0)];
        let y = synth(&amps, &omegas, 5);
        let series = SampleSeries::new(y.clone(), 5.0).unwrap();
        let model = pencil_fit(&series, 1).unwrap();
        for (k, &v) in y.iter().enumerate() {
            assert!(cabs(model.evaluate(5.0 * k as f64) - v) < 1e-9);
        }
    }

    #[test]
    fn unit_circle_projection() {
        let mut model = ExpModel::<f64>::constant(cone(), 1.0);
        model.terms[0].pole = Cx::new(0.95, 0.0) * expj(0.4);
        model.project_to_unit_circle();
        assert!((cabs(model.terms[0].pole) - 1.0).abs() < 1e-12);
        assert!((carg(model.terms[0].pole) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mdl_detects_noise_free_order() {
        let y = synth(
            &[cone(), Cx::new(0.4, 0.6)],
            &[0.4, -0.9],
            12,
        );
        let series = SampleSeries::new(y, 1.0).unwrap();
        let sel = mdl_order(&series, 5).unwrap();
        assert_eq!(sel.order, 2);
        assert!(!sel.low_confidence);
    }

    #[test]
    fn mdl_pure_noise_bounded_and_flagged() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let y: Vec<Cx<f64>> = (0..12)
            .map(|_| {
                Cx::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let series = SampleSeries::new(y, 1.0).unwrap();
        let sel = mdl_order(&series, 5).unwrap();
        assert!(sel.order >= 1 && sel.order <= 5);
        assert!(sel.low_confidence);
    }

    #[test]
    fn mdl_monte_carlo_at_40_db() {
        let amps = [cone(), Cx::new(0.8, -0.3), Cx::new(-0.5, 0.5)];
        let omegas = [0.35, -0.75, 1.45];
        let snr_lin = 1e4; // 40 dB
        let mut hits = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let clean = synth(&amps, &omegas, 15);
            let power: f64 =
                clean.iter().map(|z| z.norm_sqr()).sum::<f64>() / clean.len() as f64;
            let sigma = (power / snr_lin / 2.0).sqrt();
            let noisy: Vec<Cx<f64>> = clean
                .iter()
                .map(|&z| {
                    z + Cx::new(
                        sigma * StandardNormal.sample::<f64, _>(&mut rng),
                        sigma * StandardNormal.sample::<f64, _>(&mut rng),
                    )
                })
                .collect();
            let series = SampleSeries::new(noisy, 1.0).unwrap();
            if mdl_order(&series, 5).unwrap().order == 3 {
                hits += 1;
            }
        }
        assert!(hits >= 90, "MDL found order 3 in only {hits}/100 trials");
    }

    #[test]
    fn mdl_all_zero_series() {
        let series = SampleSeries::new(vec![czero::<f64>(); 10], 1.0).unwrap();
        let sel = mdl_order(&series, 4).unwrap();
        assert_eq!(sel.order, 1);
        assert!(sel.low_confidence);
    }

    #[test]
    fn generic_f32_fit_works() {
        let y: Vec<Cx<f32>> = (0..5)
            .map(|k| expj(0.3_f32 * k as f32))
            .collect();
        let series = SampleSeries::new(y, 1.0_f32).unwrap();
        let model = pencil_fit(&series, 1).unwrap();
        assert!(cabs(model.terms[0].pole - expj(0.3_f32)) < 1e-5);
    }
}
