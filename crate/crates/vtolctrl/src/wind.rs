//! Reproducible Dryden wind-turbulence realizations.
//!
//! The shaping filters follow the low-altitude (< 1000 ft) military-handbook
//! Dryden family: scale lengths `L_w = h`,
//! `L_u = L_v = h / (0.177 + 0.000823 h_ft)^1.2` and intensities
//! `sigma_w = 0.1 W20`, `sigma_u = sigma_v = sigma_w / (0.177 + 0.000823 h_ft)^0.4`,
//! with `h_ft` the altitude in feet. Filter gains are normalized so that the
//! steady-state output variance under the unit-intensity continuous white
//! noise convention (discrete samples of variance `1/dt`) equals the design
//! `sigma^2` for the three velocity channels; the angular channels carry the
//! variance implied by their spectra.
//!
//! Randomness comes from an xorshift64* generator with the Box-Muller
//! transform. The algorithm identity is part of the interface: a fixed
//! `(params, seed)` pair reproduces a bitwise-identical realization.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_exp, Matrix, Tolerances};
use crate::models::{FlightMode, LinearModel};

pub const FEET_PER_METER: f64 = 1.0 / 0.3048;

/// Largest admissible discretization step for the shaping filters, s.
pub const MAX_FILTER_DT: f64 = 0.01;

/// Turbulence configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrydenParams {
    /// Mean wind speed at 20 ft, m/s.
    pub mean_wind_20ft: f64,
    /// Altitude above ground, m.
    pub altitude: f64,
    /// Wing span, m.
    pub wingspan: f64,
    /// Relative airspeed used to form the filter time constants, m/s.
    pub airspeed: f64,
    /// Sample interval, s.
    pub dt: f64,
    /// Generator seed.
    pub seed: u64,
}

impl DrydenParams {
    /// Defaults for one of the built-in flight conditions. Hover has zero
    /// trim airspeed, which would degenerate the Dryden time constants, so
    /// the mean wind speed stands in as the relative airspeed there.
    pub fn for_mode(mode: FlightMode) -> Self {
        let airspeed = match mode {
            FlightMode::Level => 22.49,
            FlightMode::Hover => 10.0,
        };
        DrydenParams {
            mean_wind_20ft: 10.0,
            altitude: 50.0,
            wingspan: 1.2,
            airspeed,
            dt: 0.002,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.airspeed.is_nan() || self.airspeed <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "dryden.airspeed".into(),
                message: "must be positive".into(),
            });
        }
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "dryden.dt".into(),
                message: "must be positive".into(),
            });
        }
        if self.mean_wind_20ft < 0.0 {
            return Err(Error::InvalidConfig {
                field: "dryden.mean_wind_20ft".into(),
                message: "must be nonnegative".into(),
            });
        }
        Ok(())
    }
}

/// One seeded gust time series; all channels share the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GustRealization {
    pub times: Vec<f64>,
    /// Linear gust components, m/s.
    pub u_g: Vec<f64>,
    pub v_g: Vec<f64>,
    pub w_g: Vec<f64>,
    /// Angular gust components, rad/s.
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    pub r_g: Vec<f64>,
}

impl GustRealization {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// xorshift64* generator. Zero seeds are remapped to a fixed odd constant so
/// the shift register never locks onto the all-zero state.
#[derive(Debug, Clone)]
pub struct Rng64 {
    state: u64,
    cached_normal: Option<f64>,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64 {
            state: if seed == 0 {
                0x9e37_79b9_7f4a_7c15
            } else {
                seed
            },
            cached_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform draw strictly inside (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the Box-Muller transform (pairs are cached).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Continuous shaping filter `x' = A x + B w`, outputs `y = C x` (one row
/// per gust channel the block produces).
#[derive(Debug, Clone)]
pub struct ShapingFilter {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

impl ShapingFilter {
    /// Stationary output variances under unit-intensity white noise, one per
    /// output row, from the state covariance `A P + P A^T + B B^T = 0`.
    pub fn output_variances(&self, tol: &Tolerances) -> Result<Vec<f64>> {
        let q = (&self.b * &self.b.transpose()).symmetrized();
        let p = crate::synthesis::solve_lyapunov(&self.a.transpose(), &q, tol)?;
        let cov = &(&self.c * &p) * &self.c.transpose();
        Ok((0..self.c.rows()).map(|i| cov[(i, i)]).collect())
    }
}

/// The four shaping blocks. The vertical/pitch and lateral/yaw blocks each
/// produce two correlated outputs, mirroring how the angular-rate spectra
/// derive from the corresponding velocity spectra.
#[derive(Debug, Clone)]
pub struct DrydenFilters {
    /// Outputs `[u_g]`.
    pub u: ShapingFilter,
    /// Outputs `[v_g, r_g]`.
    pub vr: ShapingFilter,
    /// Outputs `[w_g, q_g]`.
    pub wq: ShapingFilter,
    /// Outputs `[p_g]`.
    pub p: ShapingFilter,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_w: f64,
    pub sigma_p: f64,
    pub length_u: f64,
    pub length_v: f64,
    pub length_w: f64,
}

/// First-order block `K / (1 + T s)` with unit-white-noise output variance
/// `K^2 / (2 T)`.
fn first_order(gain: f64, time_constant: f64) -> ShapingFilter {
    ShapingFilter {
        a: Matrix::diag(&[-1.0 / time_constant]),
        b: Matrix::col_vec(&[gain / time_constant]),
        c: Matrix::diag(&[1.0]),
    }
}

/// Velocity filter `K (1 + sqrt(3) T s) / (1 + T s)^2` cascaded with the
/// washed-out rate channel `(s / V) / (1 + T_rate s)`; outputs
/// `[velocity, rate]`.
fn velocity_rate_block(gain: f64, t: f64, t_rate: f64, airspeed: f64) -> ShapingFilter {
    let c1 = gain / (t * t);
    let c2 = 3.0f64.sqrt() * gain / t;
    let vt = airspeed * t_rate;
    let a = Matrix::from_rows(&[
        &[0.0, 1.0, 0.0],
        &[-1.0 / (t * t), -2.0 / t, 0.0],
        &[-c2 / (vt * t * t), (c1 - 2.0 * c2 / t) / vt, -1.0 / t_rate],
    ]);
    let b = Matrix::col_vec(&[0.0, 1.0, c2 / vt]);
    let c = Matrix::from_rows(&[&[c1, c2, 0.0], &[0.0, 0.0, 1.0]]);
    ShapingFilter { a, b, c }
}

/// Builds the continuous Dryden shaping filters for the given parameters.
pub fn dryden_filters(params: &DrydenParams) -> Result<DrydenFilters> {
    params.validate()?;
    let v = params.airspeed;
    let b_span = params.wingspan;
    let h = params.altitude;
    let h_ft = h * FEET_PER_METER;

    let low_alt = 0.177 + 0.000823 * h_ft;
    let length_w = h;
    let length_u = h / low_alt.powf(1.2);
    let length_v = length_u;

    let sigma_w = 0.1 * params.mean_wind_20ft;
    let sigma_u = sigma_w / low_alt.powf(0.4);
    let sigma_v = sigma_u;

    let t_u = length_u / v;
    let t_v = length_v / v;
    let t_w = length_w / v;
    let t_p = 4.0 * b_span / (std::f64::consts::PI * v);
    let t_q = t_p;
    let t_r = 3.0 * b_span / (std::f64::consts::PI * v);

    // roll-rate intensity from the handbook spectrum integral
    let pi = std::f64::consts::PI;
    let sigma_p_sq = sigma_w * sigma_w / (2.0 * length_w)
        * 0.8
        * (2.0 * pi * length_w / (4.0 * b_span)).powf(1.0 / 3.0)
        * pi
        * pi
        / (8.0 * b_span);
    let sigma_p = sigma_p_sq.sqrt();

    Ok(DrydenFilters {
        u: first_order(sigma_u * (2.0 * t_u).sqrt(), t_u),
        vr: velocity_rate_block(sigma_v * t_v.sqrt(), t_v, t_r, v),
        wq: velocity_rate_block(sigma_w * t_w.sqrt(), t_w, t_q, v),
        p: first_order(sigma_p * (2.0 * t_p).sqrt(), t_p),
        sigma_u,
        sigma_v,
        sigma_w,
        sigma_p,
        length_u,
        length_v,
        length_w,
    })
}

/// One discretized shaping block with its running state.
#[derive(Debug, Clone)]
struct DiscreteBlock {
    ad: Matrix,
    bd: Matrix,
    c: Matrix,
    state: Vec<f64>,
}

impl DiscreteBlock {
    /// Exact zero-order-hold discretization through the augmented matrix
    /// exponential `exp([[A, B], [0, 0]] dt) = [[Ad, Bd], [0, I]]`.
    fn new(filter: &ShapingFilter, dt: f64, tol: &Tolerances) -> Result<Self> {
        let n = filter.a.rows();
        let mut aug = Matrix::zeros(n + 1, n + 1);
        aug.set_block(0, 0, &filter.a);
        aug.set_block(0, n, &filter.b);
        let e = mat_exp(&aug, dt, tol)?;
        Ok(DiscreteBlock {
            ad: e.block(0, 0, n, n),
            bd: e.block(0, n, n, 1),
            c: filter.c.clone(),
            state: vec![0.0; n],
        })
    }

    fn step(&mut self, white: f64) -> Vec<f64> {
        let mut next = self.ad.matvec(&self.state);
        for (i, x) in next.iter_mut().enumerate() {
            *x += self.bd[(i, 0)] * white;
        }
        self.state = next;
        self.c.matvec(&self.state)
    }

    fn outputs(&self) -> Vec<f64> {
        self.c.matvec(&self.state)
    }
}

/// Streaming gust generator: holds the discretized filters, their states and
/// the seeded noise source.
#[derive(Debug, Clone)]
pub struct GustGenerator {
    blocks: [DiscreteBlock; 4],
    rng: Rng64,
    noise_scale: f64,
    dt: f64,
    step_count: usize,
}

/// Gust sample `[u_g, v_g, w_g, p_g, q_g, r_g]`.
pub type GustSample = [f64; 6];

impl GustGenerator {
    pub fn new(params: &DrydenParams) -> Result<Self> {
        if params.dt > MAX_FILTER_DT {
            return Err(Error::StepTooLarge {
                dt: params.dt,
                limit: MAX_FILTER_DT,
            });
        }
        let tol = Tolerances::default();
        let filters = dryden_filters(params)?;
        Ok(GustGenerator {
            blocks: [
                DiscreteBlock::new(&filters.u, params.dt, &tol)?,
                DiscreteBlock::new(&filters.vr, params.dt, &tol)?,
                DiscreteBlock::new(&filters.wq, params.dt, &tol)?,
                DiscreteBlock::new(&filters.p, params.dt, &tol)?,
            ],
            rng: Rng64::new(params.seed),
            // continuous white-noise convention: sample variance 1/dt
            noise_scale: 1.0 / params.dt.sqrt(),
            dt: params.dt,
            step_count: 0,
        })
    }

    /// Current outputs without advancing.
    pub fn current(&self) -> GustSample {
        self.collect()
    }

    /// Advances every block one step, each with its own white sample, drawn
    /// in the fixed order u, v/r, w/q, p.
    pub fn step(&mut self) -> GustSample {
        for i in 0..4 {
            let white = self.rng.next_normal() * self.noise_scale;
            self.blocks[i].step(white);
        }
        self.step_count += 1;
        self.collect()
    }

    fn collect(&self) -> GustSample {
        let u = self.blocks[0].outputs();
        let vr = self.blocks[1].outputs();
        let wq = self.blocks[2].outputs();
        let p = self.blocks[3].outputs();
        [u[0], vr[0], wq[0], p[0], wq[1], vr[1]]
    }

    pub fn time(&self) -> f64 {
        self.step_count as f64 * self.dt
    }
}

/// Generates a realization on `0..=round(t_final/dt)` steps, starting from
/// quiescent filters.
pub fn generate(params: &DrydenParams, t_final: f64) -> Result<GustRealization> {
    let mut gen = GustGenerator::new(params)?;
    let n_steps = (t_final / params.dt).round() as usize;
    let cap = n_steps + 1;
    let mut out = GustRealization {
        times: Vec::with_capacity(cap),
        u_g: Vec::with_capacity(cap),
        v_g: Vec::with_capacity(cap),
        w_g: Vec::with_capacity(cap),
        p_g: Vec::with_capacity(cap),
        q_g: Vec::with_capacity(cap),
        r_g: Vec::with_capacity(cap),
    };
    let push = |t: f64, s: GustSample, out: &mut GustRealization| {
        out.times.push(t);
        out.u_g.push(s[0]);
        out.v_g.push(s[1]);
        out.w_g.push(s[2]);
        out.p_g.push(s[3]);
        out.q_g.push(s[4]);
        out.r_g.push(s[5]);
    };
    push(0.0, gen.current(), &mut out);
    for k in 1..=n_steps {
        let s = gen.step();
        push(k as f64 * params.dt, s, &mut out);
    }
    Ok(out)
}

/// Scalar disturbance series feeding the model's `Bw` column: the pitch-rate
/// gust for both built-in models (hover routes the same scalar into all
/// three rate rows through its one-column `Bw`).
pub fn disturbance_channel(realization: &GustRealization, model: &LinearModel) -> Vec<f64> {
    match model.trim.flight_mode {
        FlightMode::Level | FlightMode::Hover => realization.q_g.clone(),
    }
}

/// Non-default widened mode: the three angular series for a 3-column `Bw`.
pub fn angular_channels(realization: &GustRealization) -> [Vec<f64>; 3] {
    [
        realization.p_g.clone(),
        realization.q_g.clone(),
        realization.r_g.clone(),
    ]
}

/// Writes a gust CSV: a unit comment line, then `t,u_g,v_g,w_g,p_g,q_g,r_g`.
pub fn write_gust_csv(realization: &GustRealization, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# t in s; u_g,v_g,w_g in m/s; p_g,q_g,r_g in rad/s")?;
    writeln!(f, "t,u_g,v_g,w_g,p_g,q_g,r_g")?;
    for i in 0..realization.len() {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            realization.times[i],
            realization.u_g[i],
            realization.v_g[i],
            realization.w_g[i],
            realization.p_g[i],
            realization.q_g[i],
            realization.r_g[i],
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_level_model;

    fn level_params() -> DrydenParams {
        DrydenParams::for_mode(FlightMode::Level)
    }

    #[test]
    fn sigma_w_is_tenth_of_mean_wind() {
        let f = dryden_filters(&level_params()).unwrap();
        assert!((f.sigma_w - 1.0).abs() < 1e-12);
        assert!(f.sigma_u > f.sigma_w); // low altitude inflates the lateral intensities
    }

    #[test]
    fn zero_mean_wind_means_zero_gusts() {
        let mut params = level_params();
        params.mean_wind_20ft = 0.0;
        params.seed = 7;
        let r = generate(&params, 1.0).unwrap();
        assert!(r.u_g.iter().all(|&x| x == 0.0));
        assert!(r.q_g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn doubling_airspeed_halves_time_constants() {
        let slow = dryden_filters(&level_params()).unwrap();
        let mut fast_params = level_params();
        fast_params.airspeed *= 2.0;
        let fast = dryden_filters(&fast_params).unwrap();
        // first-order u block: a00 = -1/T
        assert!((fast.u.a[(0, 0)] / slow.u.a[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((fast.p.a[(0, 0)] / slow.p.a[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_seed_reproduces_bitwise() {
        let params = level_params();
        let a = generate(&params, 5.0).unwrap();
        let b = generate(&params, 5.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut params = level_params();
        let a = generate(&params, 5.0).unwrap();
        params.seed = 2;
        let b = generate(&params, 5.0).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn step_too_large_is_rejected() {
        let mut params = level_params();
        params.dt = 0.02;
        assert!(matches!(
            GustGenerator::new(&params),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn velocity_variances_match_design_sigma() {
        let tol = Tolerances::default();
        let f = dryden_filters(&level_params()).unwrap();
        let u_var = f.u.output_variances(&tol).unwrap()[0];
        assert!((u_var - f.sigma_u * f.sigma_u).abs() < 1e-9 * f.sigma_u * f.sigma_u);
        let wq = f.wq.output_variances(&tol).unwrap();
        assert!((wq[0] - f.sigma_w * f.sigma_w).abs() < 1e-9);
        let vr = f.vr.output_variances(&tol).unwrap();
        assert!((vr[0] - f.sigma_v * f.sigma_v).abs() < 1e-9);
        let p_var = f.p.output_variances(&tol).unwrap()[0];
        assert!((p_var - f.sigma_p * f.sigma_p).abs() < 1e-9);
    }

    #[test]
    fn level_channel_is_pitch_rate_gust() {
        let params = level_params();
        let r = generate(&params, 1.0).unwrap();
        let model = build_level_model();
        assert_eq!(disturbance_channel(&r, &model), r.q_g);
    }

    #[test]
    fn long_run_is_stationary_with_near_zero_mean() {
        let mut params = level_params();
        params.dt = 0.01;
        params.seed = 3;
        let n = 1_000_000usize;
        let mut gen = GustGenerator::new(&params).unwrap();
        let mut mean = [0.0f64; 6];
        let mut first = [0.0f64; 6];
        let mut total = [0.0f64; 6];
        for k in 0..n {
            let s = gen.step();
            for i in 0..6 {
                mean[i] += s[i];
                total[i] += s[i] * s[i];
                if k < n / 2 {
                    first[i] += s[i] * s[i];
                }
            }
        }
        let t_total = n as f64 * params.dt;
        let f = dryden_filters(&params).unwrap();
        // correlation times: L/V for the velocity channels, the washout
        // constants for the angular ones
        let t_corr = [
            f.length_u / params.airspeed,
            f.length_v / params.airspeed,
            f.length_w / params.airspeed,
            4.0 * params.wingspan / (std::f64::consts::PI * params.airspeed),
            4.0 * params.wingspan / (std::f64::consts::PI * params.airspeed),
            3.0 * params.wingspan / (std::f64::consts::PI * params.airspeed),
        ];
        for i in 0..6 {
            let sigma = (total[i] / n as f64).sqrt();
            let m = mean[i] / n as f64;
            let se = sigma * (2.0 * t_corr[i] / t_total).sqrt();
            assert!(
                m.abs() <= 3.0 * se,
                "channel {i}: mean {m} vs 3 SE {}",
                3.0 * se
            );

            let v1 = first[i] / (n / 2) as f64;
            let v2 = (total[i] - first[i]) / (n / 2) as f64;
            let rel = (v1 - v2).abs() / v1.max(v2);
            assert!(rel < 0.10, "channel {i}: halves differ by {rel:.3}");
        }
    }

    #[test]
    fn hover_angular_channels_are_three_distinct_series_with_design_variance() {
        let mut params = DrydenParams::for_mode(FlightMode::Hover);
        params.dt = 0.01;
        params.seed = 3;
        let r = generate(&params, 8000.0).unwrap();
        let [p, q, rr] = angular_channels(&r);
        assert_eq!(p.len(), r.len());
        assert_ne!(p, q);
        assert_ne!(q, rr);

        // sample variances against the filters' stationary covariances
        let tol = Tolerances::default();
        let f = dryden_filters(&params).unwrap();
        let design_p = f.p.output_variances(&tol).unwrap()[0];
        let design_q = f.wq.output_variances(&tol).unwrap()[1];
        let design_r = f.vr.output_variances(&tol).unwrap()[1];
        for (series, design) in [(&p, design_p), (&q, design_q), (&rr, design_r)] {
            let var = series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64;
            let rel = (var - design).abs() / design;
            assert!(
                rel < 0.08,
                "variance {var:.5} vs design {design:.5} ({rel:.3})"
            );
        }
    }

    #[test]
    fn gust_csv_has_unit_comment_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gusts.csv");
        let params = level_params();
        let r = generate(&params, 0.1).unwrap();
        write_gust_csv(&r, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# t in s"));
        assert_eq!(lines.next().unwrap(), "t,u_g,v_g,w_g,p_g,q_g,r_g");
        assert_eq!(text.lines().count(), 2 + r.len());
    }

    #[test]
    fn rng_uniform_is_in_open_unit_interval() {
        let mut rng = Rng64::new(123);
        for _ in 0..10_000 {
            let u = rng.next_uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = Rng64::new(99);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = rng.next_normal();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean = {mean}");
        assert!((var - 1.0).abs() < 0.02, "var = {var}");
    }
}
