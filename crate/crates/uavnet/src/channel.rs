//! Radio propagation and link-quality math.
//!
//! Air-to-ground links mix line-of-sight and non-line-of-sight free-space
//! path loss with an elevation-angle-dependent probability; terrestrial
//! links follow a power-law loss. SINR over noise plus all non-serving
//! stations and the Shannon formula close the chain from transmit power to
//! per-user rate. Everything here is a pure function of its inputs.

use crate::error::{Error, Result};

/// Propagation speed used in the free-space term (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Channel-environment constants.
///
/// `a`/`b` shape the elevation-angle S-curve of the LoS probability;
/// `eta_*_db` are the excess losses over free space for the two propagation
/// conditions. Terrestrial links use `terrestrial_eta_db + 10·alpha·log10(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvParams {
    pub a: f64,
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub carrier_hz: f64,
    pub terrestrial_alpha: f64,
    pub terrestrial_eta_db: f64,
    /// Per-UE channel bandwidth.
    pub bandwidth_hz: f64,
    /// Noise power over that bandwidth.
    pub noise_dbm: f64,
    /// Optional coverage cutoff: a serving link whose path loss exceeds this
    /// carries zero rate. Disabled by default.
    pub pl_max_db: Option<f64>,
}

impl EnvParams {
    /// Urban environment constants at 2 GHz with a 1 MHz per-UE channel and
    /// thermal noise (-174 dBm/Hz + 10·log10(B)).
    pub fn urban() -> Self {
        Self {
            a: 9.61,
            b: 0.43,
            eta_los_db: 0.1,
            eta_nlos_db: 20.0,
            carrier_hz: 2.0e9,
            terrestrial_alpha: 3.5,
            terrestrial_eta_db: 30.0,
            bandwidth_hz: 1.0e6,
            noise_dbm: -114.0,
            pl_max_db: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::Config(format!(
                "S-curve parameters must be positive (a={}, b={})",
                self.a, self.b
            )));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::Config(format!(
                "carrier_hz must be positive, got {}",
                self.carrier_hz
            )));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth_hz must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if self.eta_nlos_db < self.eta_los_db {
            return Err(Error::Config(format!(
                "eta_nlos_db ({}) must be >= eta_los_db ({})",
                self.eta_nlos_db, self.eta_los_db
            )));
        }
        if !(self.terrestrial_alpha >= 2.0) {
            return Err(Error::Config(format!(
                "terrestrial_alpha must be >= 2, got {}",
                self.terrestrial_alpha
            )));
        }
        Ok(())
    }
}

impl Default for EnvParams {
    fn default() -> Self {
        Self::urban()
    }
}

/// Whether small-scale fading is realized or fixed at its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    /// Every link gain is exactly 1 (the exponential mean). Evaluations and
    /// baselines use this so all policies share one objective.
    Deterministic,
    /// Unit-mean exponential power gain drawn per link.
    Rayleigh,
}

impl FadingMode {
    pub fn name(self) -> &'static str {
        match self {
            FadingMode::Deterministic => "deterministic",
            FadingMode::Rayleigh => "rayleigh",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(FadingMode::Deterministic),
            "rayleigh" => Ok(FadingMode::Rayleigh),
            other => Err(Error::Config(format!(
                "unknown fading mode {other:?} (expected \"deterministic\" or \"rayleigh\")"
            ))),
        }
    }
}

/// One directional link: transmit power, path loss, and realized fading gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub path_loss_db: f64,
    /// Small-scale power gain; exactly 1 in deterministic mode.
    pub fading_linear: f64,
}

impl LinkBudget {
    pub fn received_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm - self.path_loss_db) * self.fading_linear
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Elevation angle in degrees seen from a ground point at horizontal
/// distance `r_m` toward a platform at height `h_m`; 90 when r = 0.
fn elevation_deg(r_m: f64, h_m: f64) -> f64 {
    if r_m == 0.0 {
        90.0
    } else {
        (h_m / r_m).atan().to_degrees()
    }
}

/// Probability of a line-of-sight link between a ground user at horizontal
/// distance `r_m` and a platform at height `h_m`.
pub fn los_probability(r_m: f64, h_m: f64, env: &EnvParams) -> Result<f64> {
    if !h_m.is_finite() || h_m <= 0.0 {
        return Err(Error::Domain(format!(
            "platform height must be positive, got {h_m}"
        )));
    }
    if !r_m.is_finite() || r_m < 0.0 {
        return Err(Error::Domain(format!(
            "horizontal distance must be >= 0, got {r_m}"
        )));
    }
    let theta = elevation_deg(r_m, h_m);
    Ok(1.0 / (1.0 + env.a * (-env.b * (theta - env.a)).exp()))
}

/// Free-space path loss in dB at distance `d_m` and carrier `carrier_hz`.
pub fn free_space_pl_db(d_m: f64, carrier_hz: f64) -> Result<f64> {
    if !d_m.is_finite() || d_m <= 0.0 {
        return Err(Error::Domain(format!(
            "distance must be positive, got {d_m}"
        )));
    }
    if !carrier_hz.is_finite() || carrier_hz <= 0.0 {
        return Err(Error::Domain(format!(
            "carrier frequency must be positive, got {carrier_hz}"
        )));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * carrier_hz * d_m / SPEED_OF_LIGHT).log10())
}

/// Mean air-to-ground path loss in dB: the LoS/NLoS free-space losses mixed
/// by the LoS probability, with slant distance sqrt(h² + r²).
pub fn a2g_mean_pl_db(r_m: f64, h_m: f64, env: &EnvParams) -> Result<f64> {
    let p_los = los_probability(r_m, h_m, env)?;
    let d = (h_m * h_m + r_m * r_m).sqrt();
    let fspl = free_space_pl_db(d, env.carrier_hz)?;
    Ok(p_los * (fspl + env.eta_los_db) + (1.0 - p_los) * (fspl + env.eta_nlos_db))
}

/// Terrestrial path loss in dB: eta + 10·alpha·log10(r).
pub fn terrestrial_pl_db(r_m: f64, env: &EnvParams) -> Result<f64> {
    if !r_m.is_finite() || r_m <= 0.0 {
        return Err(Error::Domain(format!(
            "terrestrial link distance must be positive, got {r_m}"
        )));
    }
    Ok(env.terrestrial_eta_db + 10.0 * env.terrestrial_alpha * r_m.log10())
}

/// Linear SINR: serving received power over noise plus the sum of all
/// interferers' received powers. An empty interferer list yields pure SNR.
pub fn sinr_linear(signal: &LinkBudget, interferers: &[LinkBudget], noise_dbm: f64) -> f64 {
    let noise_w = dbm_to_watts(noise_dbm);
    let interference_w: f64 = interferers.iter().map(LinkBudget::received_watts).sum();
    signal.received_watts() / (noise_w + interference_w)
}

/// Shannon rate in bits/s over `bandwidth_hz` at the given linear SINR.
pub fn rate_bps(sinr: f64, bandwidth_hz: f64) -> Result<f64> {
    if !sinr.is_finite() || sinr < 0.0 {
        return Err(Error::Domain(format!("SINR must be >= 0, got {sinr}")));
    }
    Ok(bandwidth_hz * (1.0 + sinr).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn urban() -> EnvParams {
        EnvParams::urban()
    }

    #[test]
    fn los_probability_at_theta_equal_a_is_one_over_one_plus_a() {
        let env = urban();
        // r chosen so the elevation angle is exactly a degrees.
        let h = 100.0;
        let r = h / (env.a.to_radians().tan());
        let p = los_probability(r, h, &env).unwrap();
        assert!(
            (p - 1.0 / (1.0 + env.a)).abs() < 1e-12,
            "p={p}, expected {}",
            1.0 / (1.0 + env.a)
        );
        // Independently evaluated: 1/10.61.
        assert!((p - 0.0942507068803016).abs() < 1e-12);
    }

    #[test]
    fn los_probability_overhead_is_nearly_one() {
        let env = urban();
        let p = los_probability(0.0, 100.0, &env).unwrap();
        // 1 - 9.336e-15 by direct evaluation at theta = 90.
        assert!(p < 1.0);
        assert!(1.0 - p < 1e-12, "1-p = {}", 1.0 - p);
    }

    #[test]
    fn nlos_probability_complements_los() {
        let env = urban();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let r = rng.gen::<f64>() * 5000.0;
            let h = 1.0 + rng.gen::<f64>() * 500.0;
            let p = los_probability(r, h, &env).unwrap();
            let p_nlos = 1.0 - p;
            assert!((p + p_nlos - 1.0).abs() < 1e-15);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn los_probability_monotone_in_height_and_distance() {
        let env = urban();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let r = 1.0 + rng.gen::<f64>() * 3000.0;
            let h = 10.0 + rng.gen::<f64>() * 300.0;
            let dh = 1.0 + rng.gen::<f64>() * 50.0;
            let dr = 1.0 + rng.gen::<f64>() * 500.0;
            let p = los_probability(r, h, &env).unwrap();
            assert!(los_probability(r, h + dh, &env).unwrap() > p);
            assert!(los_probability(r + dr, h, &env).unwrap() < p);
        }
    }

    #[test]
    fn los_probability_rejects_bad_height() {
        let env = urban();
        assert!(los_probability(10.0, 0.0, &env).is_err());
        assert!(los_probability(10.0, -5.0, &env).is_err());
        assert!(los_probability(-1.0, 10.0, &env).is_err());
    }

    #[test]
    fn free_space_reference_value() {
        // 20·log10(4π·2e9/3e8) evaluated independently.
        let pl = free_space_pl_db(1.0, 2.0e9).unwrap();
        assert!(
            (pl - 38.46237209932830).abs() < 1e-10,
            "pl(1m, 2GHz) = {pl}"
        );
    }

    #[test]
    fn free_space_decade_and_doubling() {
        let base = free_space_pl_db(1.0, 2.0e9).unwrap();
        let decade = free_space_pl_db(10.0, 2.0e9).unwrap();
        assert!((decade - base - 20.0).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let d = 0.5 + rng.gen::<f64>() * 2000.0;
            let f = 1.0e8 + rng.gen::<f64>() * 1.0e10;
            let step = free_space_pl_db(2.0 * d, f).unwrap() - free_space_pl_db(d, f).unwrap();
            assert!((step - 20.0 * 2f64.log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn free_space_rejects_nonpositive_distance() {
        assert!(free_space_pl_db(0.0, 2.0e9).is_err());
        assert!(free_space_pl_db(-1.0, 2.0e9).is_err());
    }

    #[test]
    fn a2g_overhead_reference_value() {
        let env = urban();
        let pl = a2g_mean_pl_db(0.0, 100.0, &env).unwrap();
        // P_LoS·(FSPL+0.1) + P_NLoS·(FSPL+20) at theta = 90, evaluated
        // independently: 78.56237209932849.
        assert!((pl - 78.56237209932849).abs() < 1e-6, "pl = {pl}");
    }

    #[test]
    fn a2g_is_the_probability_mix_of_the_two_branches() {
        let env = urban();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let r = rng.gen::<f64>() * 4000.0;
            let h = 10.0 + rng.gen::<f64>() * 400.0;
            // Two branches computed here, not through a2g_mean_pl_db.
            let d = (h * h + r * r).sqrt();
            let fspl =
                20.0 * (4.0 * std::f64::consts::PI * env.carrier_hz * d / SPEED_OF_LIGHT).log10();
            let p = los_probability(r, h, &env).unwrap();
            let expected = p * (fspl + env.eta_los_db) + (1.0 - p) * (fspl + env.eta_nlos_db);
            let got = a2g_mean_pl_db(r, h, &env).unwrap();
            assert!((got - expected).abs() < 1e-12);
            // Convex combination bounds.
            assert!(got >= fspl + env.eta_los_db && got <= fspl + env.eta_nlos_db);
        }
    }

    #[test]
    fn a2g_strictly_increasing_in_distance() {
        let env = urban();
        let h = 100.0;
        let mut prev = a2g_mean_pl_db(0.0, h, &env).unwrap();
        for i in 1..400 {
            let r = i as f64 * 10.0;
            let pl = a2g_mean_pl_db(r, h, &env).unwrap();
            assert!(pl > prev, "pl({r}) = {pl} not > pl(prev) = {prev}");
            prev = pl;
        }
    }

    #[test]
    fn terrestrial_reference_values() {
        let env = urban();
        assert!((terrestrial_pl_db(1.0, &env).unwrap() - 30.0).abs() < 1e-12);
        assert!((terrestrial_pl_db(10.0, &env).unwrap() - 65.0).abs() < 1e-12);
        assert!((terrestrial_pl_db(100.0, &env).unwrap() - 100.0).abs() < 1e-12);
        assert!(terrestrial_pl_db(0.0, &env).is_err());
    }

    #[test]
    fn sinr_reference_value() {
        // 30 dBm through 70 dB loss over -60 dBm noise: 1e-7 W / 1e-9 W.
        let signal = LinkBudget {
            tx_power_dbm: 30.0,
            path_loss_db: 70.0,
            fading_linear: 1.0,
        };
        let sinr = sinr_linear(&signal, &[], -60.0);
        assert!((sinr - 100.0).abs() / 100.0 < 1e-9, "sinr = {sinr}");
    }

    #[test]
    fn sinr_decreases_with_any_interferer() {
        let signal = LinkBudget {
            tx_power_dbm: 30.0,
            path_loss_db: 70.0,
            fading_linear: 1.0,
        };
        let base = sinr_linear(&signal, &[], -90.0);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let interferer = LinkBudget {
                tx_power_dbm: rng.gen::<f64>() * 40.0,
                path_loss_db: 40.0 + rng.gen::<f64>() * 120.0,
                fading_linear: 0.01 + rng.gen::<f64>(),
            };
            assert!(sinr_linear(&signal, &[interferer], -90.0) < base);
        }
    }

    #[test]
    fn sinr_symmetric_interferer_tends_to_one() {
        let link = LinkBudget {
            tx_power_dbm: 30.0,
            path_loss_db: 70.0,
            fading_linear: 1.0,
        };
        let sinr = sinr_linear(&link, &[link], -200.0);
        assert!((sinr - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rate_reference_values() {
        assert!((rate_bps(1.0, 1.0e6).unwrap() - 1.0e6).abs() < 1e-6);
        assert!((rate_bps(3.0, 1.0e6).unwrap() - 2.0e6).abs() < 1e-6);
        assert_eq!(rate_bps(0.0, 1.0e6).unwrap(), 0.0);
        assert!(rate_bps(-0.1, 1.0e6).is_err());
    }

    #[test]
    fn rate_monotone_in_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let s = rng.gen::<f64>() * 1e6;
            let bump = rng.gen::<f64>() * 1e3;
            assert!(rate_bps(s + bump, 1e6).unwrap() >= rate_bps(s, 1e6).unwrap());
        }
    }

    #[test]
    fn unit_conversions_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let dbm = -150.0 + rng.gen::<f64>() * 200.0;
            let back = watts_to_dbm(dbm_to_watts(dbm));
            assert!((back - dbm).abs() / dbm.abs().max(1.0) < 1e-12);

            let x = 10f64.powf(-12.0 + rng.gen::<f64>() * 24.0);
            let back = db_to_linear(linear_to_db(x));
            assert!((back - x).abs() / x < 1e-12);
        }
    }

    #[test]
    fn env_validation_catches_bad_values() {
        let mut env = urban();
        env.a = 0.0;
        assert!(env.validate().is_err());
        let mut env = urban();
        env.eta_nlos_db = env.eta_los_db - 1.0;
        assert!(env.validate().is_err());
        let mut env = urban();
        env.terrestrial_alpha = 1.5;
        assert!(env.validate().is_err());
        assert!(urban().validate().is_ok());
    }
}
