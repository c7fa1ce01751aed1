//! Time-evolving wideband multipath channel synthesis and the Kronecker-DFT
//! angle-delay transform.
//!
//! A channel column is a sum over paths of `gain * e^{j omega t} * d`, where
//! `d = alpha (x) tau` combines a transmit-array steering vector `alpha`
//! (length `N_t`) with a delay phase ramp `tau` over subcarriers (length
//! `N_f`). The stacked index is antenna-major: entry `n = a * N_f + f`.
//!
//! The angle-delay transform is the unitary Kronecker product of an
//! `N_t`-point DFT (antenna axis) and an `N_f`-point DFT (subcarrier axis).
//! On-grid paths land on a single transform bin, which the property tests
//! exploit.

use crate::real::{cabs, cone, czero, expj, real};
use crate::{CMat, CVec, Cx, Error, Real, Result, SPEED_OF_LIGHT};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Uniform planar array at the base station, `N_t = n_v * n_h * n_pl`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    /// Vertical element count.
    pub n_v: usize,
    /// Horizontal element count.
    pub n_h: usize,
    /// Polarization count (1 or 2).
    pub n_pl: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayGeometry {
    /// Half-wavelength UPA.
    pub fn new(n_v: usize, n_h: usize, n_pl: usize) -> Result<Self> {
        let g = Self {
            n_v,
            n_h,
            n_pl,
            spacing: 0.5,
        };
        g.validate()?;
        Ok(g)
    }

    /// Total transmit antenna count.
    pub fn n_t(&self) -> usize {
        self.n_v * self.n_h * self.n_pl
    }

    fn validate(&self) -> Result<()> {
        if self.n_v == 0 || self.n_h == 0 {
            return Err(Error::Config("array must have at least one element".into()));
        }
        if !(1..=2).contains(&self.n_pl) {
            return Err(Error::Config("polarization count must be 1 or 2".into()));
        }
        Ok(())
    }
}

/// Time-frequency grid: one channel sample per resource block and subframe.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Resource-block (subcarrier) count `N_f`.
    pub n_f: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Subframe duration in seconds.
    pub delta_t: f64,
    /// Carrier frequency in Hz.
    pub f0: f64,
}

impl GridConfig {
    pub fn new(n_f: usize, delta_f: f64, delta_t: f64, f0: f64) -> Result<Self> {
        if n_f == 0 || delta_f <= 0.0 || delta_t <= 0.0 || f0 <= 0.0 {
            return Err(Error::Config("grid parameters must be strictly positive".into()));
        }
        Ok(Self {
            n_f,
            delta_f,
            delta_t,
            f0,
        })
    }

    /// Largest Doppler angular frequency in rad/subframe for speed `v` (m/s).
    pub fn max_doppler(&self, speed_mps: f64) -> f64 {
        2.0 * std::f64::consts::PI * speed_mps * self.f0 / SPEED_OF_LIGHT * self.delta_t
    }
}

/// Spatial signature of a path: either physical UPA angles or a point on the
/// flattened antenna DFT grid (test mode).
#[derive(Debug, Clone)]
pub enum Steering<T: Real> {
    /// Physical path with zenith/azimuth angles and per-polarization gains.
    Upa {
        zenith: T,
        azimuth: T,
        /// Unit-modulus gain per polarization branch.
        pol_gains: Vec<Cx<T>>,
    },
    /// `alpha[a] = e^{2 pi j a nu}` over the flattened antenna index.
    OnGrid {
        /// Spatial frequency in cycles per antenna index.
        spatial_freq: T,
    },
}

/// One multipath component shared by the `M` UE antennas; gain and Doppler
/// may differ per UE antenna.
#[derive(Debug, Clone)]
pub struct Path<T: Real> {
    /// Complex gain per UE antenna.
    pub gains: Vec<Cx<T>>,
    /// Doppler in rad/subframe per UE antenna.
    pub dopplers: Vec<T>,
    /// Propagation delay in seconds.
    pub delay: T,
    /// Spatial signature.
    pub steering: Steering<T>,
}

/// Ground-truth multipath parameters for one UE.
#[derive(Debug, Clone)]
pub struct PathSet<T: Real> {
    pub paths: Vec<Path<T>>,
    /// UE antenna count `M`.
    pub ue_antennas: usize,
}

impl<T: Real> PathSet<T> {
    /// Largest |Doppler| over all paths and antennas, rad/subframe.
    pub fn max_doppler(&self) -> T {
        self.paths
            .iter()
            .flat_map(|p| p.dopplers.iter())
            .fold(T::zero(), |acc, &w| acc.max(w.abs()))
    }
}

/// Stacked wideband channel of one UE at one subframe: `(N_f * N_t) x M`.
#[derive(Debug, Clone)]
pub struct ChannelBlock<T: Real> {
    /// Column `m` is the channel of UE antenna `m` over all (antenna,
    /// subcarrier) pairs, antenna-major.
    pub h: CMat<T>,
    /// Subframe index.
    pub subframe: usize,
    /// UE identifier.
    pub ue: usize,
}

impl<T: Real> ChannelBlock<T> {
    /// `M x N_t` channel slice at subcarrier `f` (rows are UE antennas).
    pub fn subcarrier_slice(&self, f: usize, n_t: usize, n_f: usize) -> CMat<T> {
        let m = self.h.ncols();
        CMat::from_fn(m, n_t, |row, a| self.h[(a * n_f + f, row)])
    }
}

/// Length-`N_t` slice of a stacked vector at subcarrier `f`.
pub fn vector_subcarrier_slice<T: Real>(v: &CVec<T>, f: usize, n_t: usize, n_f: usize) -> CVec<T> {
    CVec::from_fn(n_t, |a, _| v[a * n_f + f])
}

/// Controls for the random path generator.
#[derive(Debug, Clone)]
pub struct PathGenConfig {
    /// Path count `P`.
    pub paths: usize,
    /// UE speed in m/s.
    pub speed_mps: f64,
    /// UE antenna count `M`.
    pub ue_antennas: usize,
    /// RMS delay spread in seconds; delays drawn uniform on [0, 2*spread].
    pub delay_spread: f64,
    /// `Some(jitter)` places each path on a distinct angle-delay grid bin,
    /// displaced by at most `jitter` bins in each axis. `None` draws
    /// physical angles.
    pub grid_snap: Option<f64>,
}

impl PathGenConfig {
    pub fn new(paths: usize, speed_mps: f64, ue_antennas: usize, delay_spread: f64) -> Self {
        Self {
            paths,
            speed_mps,
            ue_antennas,
            delay_spread,
            grid_snap: None,
        }
    }

    /// Snap paths onto the transform grid with the given per-axis jitter.
    pub fn with_grid_snap(mut self, jitter: f64) -> Self {
        self.grid_snap = Some(jitter);
        self
    }
}

fn complex_gaussian<T: Real, R: Rng>(rng: &mut R) -> Cx<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cx::new(real(re / 2f64.sqrt()), real(im / 2f64.sqrt()))
}

/// Draw a seeded multipath parameter set.
///
/// Per-antenna gains follow an exponential delay-power profile and are
/// normalized so that the realized total path power per UE antenna is one,
/// which keeps `E{||h_m||^2} = N_f * N_t`. Dopplers are shared across UE
/// antennas and bounded by the grid's maximum Doppler for the given speed.
pub fn generate_path_set<T: Real, R: Rng>(
    rng: &mut R,
    cfg: &PathGenConfig,
    geometry: &ArrayGeometry,
    grid: &GridConfig,
) -> Result<PathSet<T>> {
    geometry.validate()?;
    if cfg.paths == 0 {
        return Err(Error::Config("path count must be at least 1".into()));
    }
    if cfg.speed_mps < 0.0 {
        return Err(Error::Config("speed must be nonnegative".into()));
    }
    let m = cfg.ue_antennas;
    let n_t = geometry.n_t();
    let n_f = grid.n_f;
    let omega_max = grid.max_doppler(cfg.speed_mps);

    // Distinct grid bins for snapped paths (one path per bin while possible).
    let grid_bins: Vec<(usize, usize)> = if cfg.grid_snap.is_some() {
        let total = n_t * n_f;
        let mut idx: Vec<usize> = (0..total).collect();
        for i in 0..cfg.paths.min(total) {
            let j = rng.gen_range(i..total);
            idx.swap(i, j);
        }
        (0..cfg.paths)
            .map(|i| {
                let b = idx[i % total];
                (b / n_f, b % n_f)
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut paths = Vec::with_capacity(cfg.paths);
    let mut raw_power = vec![T::zero(); m];
    for p in 0..cfg.paths {
        let (delay, steering) = match cfg.grid_snap {
            Some(jitter) => {
                let (ka, kd) = grid_bins[p];
                let ja: f64 = if jitter > 0.0 {
                    rng.gen_range(-jitter..jitter)
                } else {
                    0.0
                };
                let jd: f64 = if jitter > 0.0 {
                    rng.gen_range(-jitter..jitter)
                } else {
                    0.0
                };
                let nu = (ka as f64 + ja) / n_t as f64;
                let delay = ((kd as f64 + jd).rem_euclid(n_f as f64)) / (n_f as f64 * grid.delta_f);
                (
                    delay,
                    Steering::OnGrid {
                        spatial_freq: real(nu),
                    },
                )
            }
            None => {
                let zenith = rng.gen_range(std::f64::consts::FRAC_PI_4..3.0 * std::f64::consts::FRAC_PI_4);
                let azimuth = rng.gen_range(-std::f64::consts::FRAC_PI_3..std::f64::consts::FRAC_PI_3);
                let pol_gains = (0..geometry.n_pl)
                    .map(|_| expj(real::<T>(rng.gen_range(0.0..std::f64::consts::TAU))))
                    .collect();
                let delay = rng.gen_range(0.0..2.0 * cfg.delay_spread.max(f64::MIN_POSITIVE));
                (
                    delay,
                    Steering::Upa {
                        zenith: real(zenith),
                        azimuth: real(azimuth),
                        pol_gains,
                    },
                )
            }
        };

        // One physical Doppler per path, shared by the co-located UE antennas.
        let rel = rng.gen_range(0.0..std::f64::consts::TAU);
        let omega = omega_max * rel.cos();

        let profile = (-delay / cfg.delay_spread.max(f64::MIN_POSITIVE)).exp().sqrt();
        let gains: Vec<Cx<T>> = (0..m)
            .map(|ant| {
                let g = complex_gaussian::<T, _>(rng) * real::<T>(profile);
                raw_power[ant] += g.norm_sqr();
                g
            })
            .collect();

        paths.push(Path {
            gains,
            dopplers: vec![real(omega); m],
            delay: real(delay),
            steering,
        });
    }

    // Normalize realized per-antenna power to one.
    for ant in 0..m {
        let total = raw_power[ant].sqrt();
        if total > T::zero() {
            let scale = T::one() / total;
            for path in &mut paths {
                path.gains[ant] *= scale;
            }
        }
    }

    Ok(PathSet {
        paths,
        ue_antennas: m,
    })
}

/// Angle-delay signature `d = alpha (x) tau` of one path, length `N_t * N_f`.
pub fn signature<T: Real>(path: &Path<T>, geometry: &ArrayGeometry, grid: &GridConfig) -> CVec<T> {
    let n_t = geometry.n_t();
    let n_f = grid.n_f;
    let alpha = steering_vector(&path.steering, geometry);
    let tau = delay_vector(path.delay, grid);
    let mut d = CVec::zeros(n_t * n_f);
    for a in 0..n_t {
        for f in 0..n_f {
            d[a * n_f + f] = alpha[a] * tau[f];
        }
    }
    d
}

fn steering_vector<T: Real>(steering: &Steering<T>, geometry: &ArrayGeometry) -> CVec<T> {
    let n_t = geometry.n_t();
    match steering {
        Steering::OnGrid { spatial_freq } => {
            CVec::from_fn(n_t, |a, _| expj(T::two_pi() * *spatial_freq * real(a as f64)))
        }
        Steering::Upa {
            zenith,
            azimuth,
            pol_gains,
        } => {
            // alpha = pol (x) horizontal (x) vertical, half-wavelength phase
            // increments per axis.
            let kh = T::two_pi() * real::<T>(geometry.spacing) * zenith.sin() * azimuth.sin();
            let kv = T::two_pi() * real::<T>(geometry.spacing) * zenith.cos();
            CVec::from_fn(n_t, |a, _| {
                let v = a % geometry.n_v;
                let hh = (a / geometry.n_v) % geometry.n_h;
                let pl = a / (geometry.n_v * geometry.n_h);
                let gain = pol_gains.get(pl).copied().unwrap_or_else(cone);
                gain * expj(kh * real(hh as f64) + kv * real(v as f64))
            })
        }
    }
}

fn delay_vector<T: Real>(delay: T, grid: &GridConfig) -> CVec<T> {
    let base = T::two_pi() * delay * real(grid.f0);
    let step = T::two_pi() * delay * real(grid.delta_f);
    CVec::from_fn(grid.n_f, |f, _| expj(base + step * real(f as f64)))
}

/// Precomputed per-path signatures for fast repeated synthesis over time.
pub struct ChannelSynthesizer<T: Real> {
    signatures: CMat<T>,
    path_set: PathSet<T>,
    ue: usize,
}

impl<T: Real> ChannelSynthesizer<T> {
    pub fn new(path_set: PathSet<T>, geometry: &ArrayGeometry, grid: &GridConfig) -> Self {
        let n = geometry.n_t() * grid.n_f;
        let mut signatures = CMat::zeros(n, path_set.paths.len());
        for (p, path) in path_set.paths.iter().enumerate() {
            signatures.set_column(p, &signature(path, geometry, grid));
        }
        Self {
            signatures,
            path_set,
            ue: 0,
        }
    }

    pub fn with_ue(mut self, ue: usize) -> Self {
        self.ue = ue;
        self
    }

    pub fn path_set(&self) -> &PathSet<T> {
        &self.path_set
    }

    /// Channel block at subframe `t`.
    pub fn at(&self, t: usize) -> ChannelBlock<T> {
        let p = self.path_set.paths.len();
        let m = self.path_set.ue_antennas;
        let tt = real::<T>(t as f64);
        let mut coeff = CMat::<T>::zeros(p, m);
        for (pi, path) in self.path_set.paths.iter().enumerate() {
            for ant in 0..m {
                coeff[(pi, ant)] = path.gains[ant] * expj(path.dopplers[ant] * tt);
            }
        }
        ChannelBlock {
            h: &self.signatures * coeff,
            subframe: t,
            ue: self.ue,
        }
    }
}

/// Evaluate the channel of one UE at subframe `t` directly from the path set.
pub fn synthesize_channel<T: Real>(
    path_set: &PathSet<T>,
    geometry: &ArrayGeometry,
    grid: &GridConfig,
    t: usize,
) -> ChannelBlock<T> {
    ChannelSynthesizer::new(path_set.clone(), geometry, grid).at(t)
}

/// Unitary angle-delay transform, held in factored Kronecker form.
///
/// `W = W1^H (x) W2` with `W1` the `N_t`-point forward DFT over the antenna
/// axis and `W2` the `N_f`-point conjugate DFT over the subcarrier axis
/// (both normalized). Projection computes `g = W^H h` and inverse `h = W g`
/// without materializing the `(N_f N_t)^2` matrix.
pub struct AngleDelayTransform<T: Real> {
    w1: CMat<T>,
    w2: CMat<T>,
    n_t: usize,
    n_f: usize,
}

impl<T: Real> AngleDelayTransform<T> {
    pub fn new(grid: &GridConfig, geometry: &ArrayGeometry) -> Self {
        let n_t = geometry.n_t();
        let n_f = grid.n_f;
        let s1 = real::<T>(1.0 / (n_t as f64).sqrt());
        let s2 = real::<T>(1.0 / (n_f as f64).sqrt());
        let w1 = CMat::from_fn(n_t, n_t, |k, a| {
            expj(-T::two_pi() * real::<T>((k * a) as f64) / real((n_t) as f64)) * s1
        });
        let w2 = CMat::from_fn(n_f, n_f, |k, f| {
            expj(T::two_pi() * real::<T>((k * f) as f64) / real((n_f) as f64)) * s2
        });
        Self { w1, w2, n_t, n_f }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_t, self.n_f)
    }

    /// Flat bin index of (angle bin, delay bin).
    pub fn bin_index(&self, angle_bin: usize, delay_bin: usize) -> usize {
        angle_bin * self.n_f + delay_bin
    }

    fn to_grid(&self, v: &CVec<T>) -> CMat<T> {
        // column-major over (fast = subcarrier/delay, slow = antenna/angle)
        CMat::from_fn(self.n_f, self.n_t, |f, a| v[a * self.n_f + f])
    }

    fn to_vec(&self, m: &CMat<T>) -> CVec<T> {
        CVec::from_fn(self.n_t * self.n_f, |n, _| m[(n % self.n_f, n / self.n_f)])
    }

    /// `g = W^H h`.
    pub fn project(&self, h: &CVec<T>) -> Result<CVec<T>> {
        if h.len() != self.n_t * self.n_f {
            return Err(Error::Dimension(format!(
                "projection expects length {}, got {}",
                self.n_t * self.n_f,
                h.len()
            )));
        }
        let x = self.to_grid(h);
        let g = self.w2.adjoint() * x * self.w1.transpose();
        Ok(self.to_vec(&g))
    }

    /// `h = W g`, the inverse of [`Self::project`].
    pub fn inverse(&self, g: &CVec<T>) -> Result<CVec<T>> {
        if g.len() != self.n_t * self.n_f {
            return Err(Error::Dimension(format!(
                "inverse expects length {}, got {}",
                self.n_t * self.n_f,
                g.len()
            )));
        }
        let gm = self.to_grid(g);
        let x = &self.w2 * gm * self.w1.conjugate();
        Ok(self.to_vec(&x))
    }

    /// Project every column of a channel block: returns bins x M.
    pub fn project_block(&self, block: &ChannelBlock<T>) -> Result<CMat<T>> {
        let m = block.h.ncols();
        let mut g = CMat::zeros(self.n_t * self.n_f, m);
        for c in 0..m {
            g.set_column(c, &self.project(&block.h.column(c).into_owned())?);
        }
        Ok(g)
    }

    /// Dense `W` for small sizes (tests only; quadratic in `N_t N_f`).
    pub fn to_dense(&self) -> CMat<T> {
        let w1h = self.w1.adjoint();
        let n = self.n_t * self.n_f;
        CMat::from_fn(n, n, |row, col| {
            let (a, f) = (row / self.n_f, row % self.n_f);
            let (ka, kd) = (col / self.n_f, col % self.n_f);
            w1h[(a, ka)] * self.w2[(f, kd)]
        })
    }
}

/// `g_m = W^H h_m` for every UE antenna column of a block.
pub fn project_to_angle_delay<T: Real>(
    transform: &AngleDelayTransform<T>,
    block: &ChannelBlock<T>,
) -> Result<CMat<T>> {
    transform.project_block(block)
}
