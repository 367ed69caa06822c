//! Seven-cell hexagonal layout with path loss, log-normal shadowing and
//! Rayleigh fading.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dbm_to_watts, db_to_linear, NetworkInstance};

/// Per-BS power consumption model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    /// Active-mode circuit power, watts.
    pub p_act: f64,
    /// Sleep-mode circuit power, watts.
    pub p_slp: f64,
    /// Power-amplifier efficiency.
    pub eta: f64,
    pub p_max_dbm: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self { p_act: 6.8, p_slp: 4.3, eta: 0.25, p_max_dbm: 43.0 }
    }
}

impl PowerModel {
    /// Implementation power entering the optimization objective, which counts
    /// radiated power at unit weight and therefore scales circuit power by `eta`.
    pub fn implementation_power(&self) -> f64 {
        (self.p_act - self.p_slp) * self.eta
    }

    pub fn p_max_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.p_act >= self.p_slp && self.p_slp >= 0.0) {
            return Err("power model requires p_act >= p_slp >= 0".into());
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err("power model requires 0 < eta <= 1".into());
        }
        if !self.p_max_dbm.is_finite() {
            return Err("p_max_dbm must be finite".into());
        }
        Ok(())
    }
}

/// How the configured shadowing figure is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingConvention {
    /// `shadowing_db` is the standard deviation of the dB-domain Gaussian.
    #[default]
    StdDev,
    /// `shadowing_db` is the variance (dB^2) of the dB-domain Gaussian.
    Variance,
}

/// Channel and layout parameters for [`generate_hexnet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub cell_radius_km: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub antenna_gain_dbi: f64,
    pub shadowing_db: f64,
    pub shadowing: ShadowingConvention,
    pub noise_dbm: f64,
    pub antennas_per_bs: usize,
    pub min_distance_km: f64,
    /// SINR target applied to every user.
    pub sinr_db: f64,
    /// Number of cells the seven BSs are split into (BS `l` joins cell `l % cells`).
    pub cells: usize,
    pub power: PowerModel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            cell_radius_km: 1.0,
            pathloss_intercept_db: 148.1,
            pathloss_slope_db: 37.6,
            antenna_gain_dbi: 9.0,
            shadowing_db: 8.0,
            shadowing: ShadowingConvention::StdDev,
            noise_dbm: -143.0,
            antennas_per_bs: 2,
            min_distance_km: 0.01,
            sinr_db: 5.0,
            cells: 1,
            power: PowerModel::default(),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cell_radius_km > 0.0) {
            return Err("cell_radius_km must be positive".into());
        }
        if !(self.min_distance_km > 0.0) {
            return Err("min_distance_km must be positive".into());
        }
        if self.antennas_per_bs == 0 {
            return Err("antennas_per_bs must be at least 1".into());
        }
        if !(self.shadowing_db >= 0.0) {
            return Err("shadowing_db must be nonnegative".into());
        }
        if self.cells == 0 || self.cells > NUM_HEX_BS {
            return Err(format!("cells must be in 1..={NUM_HEX_BS}"));
        }
        for (name, v) in [
            ("pathloss_intercept_db", self.pathloss_intercept_db),
            ("pathloss_slope_db", self.pathloss_slope_db),
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("noise_dbm", self.noise_dbm),
            ("sinr_db", self.sinr_db),
        ] {
            if !v.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
        self.power.validate()
    }

    /// Path loss in dB at distance `d_km`, clamped to the minimum distance.
    pub fn path_loss_db(&self, d_km: f64) -> f64 {
        self.pathloss_intercept_db + self.pathloss_slope_db * d_km.max(self.min_distance_km).log10()
    }

    fn shadowing_std_db(&self) -> f64 {
        match self.shadowing {
            ShadowingConvention::StdDev => self.shadowing_db,
            ShadowingConvention::Variance => self.shadowing_db.sqrt(),
        }
    }
}

pub const NUM_HEX_BS: usize = 7;

/// Positions of one generated drop, in km.
#[derive(Debug, Clone, PartialEq)]
pub struct HexDrop {
    pub instance: NetworkInstance,
    pub bs_xy: Vec<(f64, f64)>,
    pub user_xy: Vec<(f64, f64)>,
}

/// BS sites: the origin plus six neighbours at distance `sqrt(3) R`.
pub fn hex_sites(radius_km: f64) -> Vec<(f64, f64)> {
    let d = 3f64.sqrt() * radius_km;
    std::iter::once((0.0, 0.0))
        .chain((0..6).map(|i| {
            let ang = std::f64::consts::FRAC_PI_6 + i as f64 * std::f64::consts::FRAC_PI_3;
            (d * ang.cos(), d * ang.sin())
        }))
        .collect()
}

/// Flat-topped hexagon of circumradius `r` centred at `c`.
fn in_hexagon(p: (f64, f64), c: (f64, f64), r: f64) -> bool {
    let x = (p.0 - c.0).abs();
    let y = (p.1 - c.1).abs();
    let s3 = 3f64.sqrt();
    y <= s3 / 2.0 * r && s3 * x + y <= s3 * r
}

/// Generates a seven-cell drop with `users` uniformly placed users.
pub fn generate_hexnet(seed: u64, users: usize, cfg: &ChannelConfig) -> NetworkInstance {
    generate_hexnet_drop(seed, users, cfg).instance
}

pub fn generate_hexnet_drop(seed: u64, users: usize, cfg: &ChannelConfig) -> HexDrop {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let r = cfg.cell_radius_km;
    let sites = hex_sites(r);
    let extent = 3f64.sqrt() * r + r;

    let user_xy: Vec<(f64, f64)> = (0..users)
        .map(|_| loop {
            let p = (rng.gen_range(-extent..extent), rng.gen_range(-extent..extent));
            if sites.iter().any(|&c| in_hexagon(p, c, r)) {
                break p;
            }
        })
        .collect();

    let shadow_std = cfg.shadowing_std_db();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = vec![vec![Vec::new(); users]; NUM_HEX_BS];
    for (l, &site) in sites.iter().enumerate() {
        for (k, &u) in user_xy.iter().enumerate() {
            let d = ((u.0 - site.0).powi(2) + (u.1 - site.1).powi(2)).sqrt();
            let shadow: f64 = shadow_std * rng.sample::<f64, _>(StandardNormal);
            let gain_db = -cfg.path_loss_db(d) + cfg.antenna_gain_dbi + shadow;
            let amplitude = 10f64.powf(gain_db / 20.0);
            h[l][k] = (0..cfg.antennas_per_bs)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re * half, im * half) * amplitude
                })
                .collect();
        }
    }

    let cells = cfg.cells.max(1);
    let cell_of_bs: Vec<usize> = (0..NUM_HEX_BS).map(|l| l % cells).collect();
    let cell_of_user: Vec<usize> = user_xy
        .iter()
        .map(|u| {
            let nearest = (0..NUM_HEX_BS)
                .min_by(|&a, &b| {
                    let da = (u.0 - sites[a].0).powi(2) + (u.1 - sites[a].1).powi(2);
                    let db = (u.0 - sites[b].0).powi(2) + (u.1 - sites[b].1).powi(2);
                    da.total_cmp(&db)
                })
                .expect("seven sites");
            cell_of_bs[nearest]
        })
        .collect();

    let instance = NetworkInstance {
        antennas: vec![cfg.antennas_per_bs; NUM_HEX_BS],
        gamma: vec![db_to_linear(cfg.sinr_db); users],
        sigma2: vec![dbm_to_watts(cfg.noise_dbm); users],
        p_max: vec![cfg.power.p_max_watts(); NUM_HEX_BS],
        pi: vec![cfg.power.implementation_power(); NUM_HEX_BS],
        cell_of_bs,
        cell_of_user,
        h,
    };
    HexDrop { instance, bs_xy: sites, user_xy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_constants() {
        let cfg = ChannelConfig::default();
        assert_eq!(cfg.pathloss_intercept_db, 148.1);
        assert_eq!(cfg.pathloss_slope_db, 37.6);
        assert_eq!(cfg.antenna_gain_dbi, 9.0);
        assert_eq!(cfg.shadowing_db, 8.0);
        assert_eq!(cfg.noise_dbm, -143.0);
        assert_eq!(cfg.power.p_max_dbm, 43.0);
        assert_eq!(cfg.power.p_act, 6.8);
        assert_eq!(cfg.power.p_slp, 4.3);
        assert_eq!(cfg.power.eta, 0.25);
        assert_abs_diff_eq!(cfg.power.implementation_power(), 0.625, epsilon = 1e-12);
        assert_eq!(cfg.path_loss_db(1.0), 148.1);
    }

    #[test]
    fn layout_shape() {
        let inst = generate_hexnet(0, 6, &ChannelConfig::default());
        assert_eq!(inst.num_bs(), 7);
        assert_eq!(inst.num_users(), 6);
        assert!(inst.antennas.iter().all(|&n| n == 2));
        assert!(inst.pi.iter().all(|&p| (p - 0.625).abs() < 1e-12));
        assert!(inst.cell_of_bs.iter().chain(&inst.cell_of_user).all(|&c| c == 0));
        inst.validate().unwrap();
    }

    #[test]
    fn users_lie_inside_the_region() {
        let cfg = ChannelConfig::default();
        let drop = generate_hexnet_drop(3, 200, &cfg);
        for &u in &drop.user_xy {
            assert!(drop.bs_xy.iter().any(|&c| in_hexagon(u, c, 1.0)));
        }
        let neighbour = drop.bs_xy[1];
        assert_abs_diff_eq!((neighbour.0.powi(2) + neighbour.1.powi(2)).sqrt(), 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn reproducible_for_seed() {
        let cfg = ChannelConfig::default();
        let a = generate_hexnet(42, 5, &cfg);
        let b = generate_hexnet(42, 5, &cfg);
        assert_eq!(a, b);
        let c = generate_hexnet(43, 5, &cfg);
        assert_ne!(a, c);
    }

    #[test]
    fn multi_cell_assignment() {
        let cfg = ChannelConfig { cells: 7, ..ChannelConfig::default() };
        let inst = generate_hexnet(1, 7, &cfg);
        assert_eq!(inst.cell_of_bs, (0..7).collect::<Vec<_>>());
        assert!(inst.cell_of_user.iter().all(|&c| c < 7));
    }

    #[test]
    fn channel_magnitude_is_plausible() {
        // Even at the 10 m floor with strong shadowing the gain stays far below unity.
        let inst = generate_hexnet(0, 6, &ChannelConfig::default());
        for row in &inst.h {
            for v in row {
                for c in v {
                    assert!(c.norm() < 1.0 && c.norm() > 0.0);
                }
            }
        }
    }
}
