use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::{ChannelSpec, Profile};
use crate::config::LinkConfig;
use crate::error::{PhyError, Result};
use crate::grid::Grid;

/// Diagonal loading added to the pilot covariance before inversion.
pub const LMMSE_RIDGE: f64 = 1e-9;

/// Least-squares estimates on the DMRS symbols.
#[derive(Debug, Clone)]
pub struct PilotEstimate {
    /// DMRS symbol indices, ascending.
    pub rows: Vec<usize>,
    pub subcarriers: usize,
    pub antennas: usize,
    /// Indexed `(row position, subcarrier, antenna)`.
    pub h: Vec<Complex64>,
    pub err_var: Vec<f64>,
}

impl PilotEstimate {
    fn index(&self, p: usize, n: usize, r: usize) -> usize {
        (p * self.subcarriers + n) * self.antennas + r
    }

    pub fn get(&self, p: usize, n: usize, r: usize) -> Complex64 {
        self.h[self.index(p, n, r)]
    }
}

/// Channel estimate on every resource element.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h: Grid,
    /// Estimation error variance, indexed like `h`.
    pub err_var: Vec<f64>,
}

/// `h = y p* / |p|^2` on every pilot element; error variance `n0 / |p|^2`.
pub fn ls_estimate(rx: &Grid, pilot: &Grid, dmrs_symbols: &[usize], n0: f64) -> Result<PilotEstimate> {
    if rx.symbols() != pilot.symbols() || rx.subcarriers() != pilot.subcarriers() {
        return Err(PhyError::SizeMismatch {
            what: "pilot grid elements",
            expected: rx.symbols() * rx.subcarriers(),
            got: pilot.symbols() * pilot.subcarriers(),
        });
    }
    let mut rows = dmrs_symbols.to_vec();
    rows.sort_unstable();
    let (n_total, r_total) = (rx.subcarriers(), rx.antennas());
    let mut h = Vec::with_capacity(rows.len() * n_total * r_total);
    let mut err_var = Vec::with_capacity(h.capacity());
    for &m in &rows {
        for n in 0..n_total {
            let p = pilot.get(m, n, 0);
            let power = p.norm_sqr();
            if power == 0.0 {
                return Err(PhyError::ZeroPilot {
                    symbol: m,
                    subcarrier: n,
                });
            }
            for r in 0..r_total {
                h.push(rx.get(m, n, r) * p.conj() / power);
                err_var.push(n0 / power);
            }
        }
    }
    Ok(PilotEstimate {
        rows,
        subcarriers: n_total,
        antennas: r_total,
        h,
        err_var,
    })
}

/// Linear interpolation in time between DMRS symbols, holding the nearest
/// estimate beyond the outermost ones. Pilots occupy every subcarrier, so
/// nothing is interpolated in frequency.
pub fn interpolate_linear(est: &PilotEstimate, symbols: usize) -> ChannelEstimate {
    let (n_total, r_total) = (est.subcarriers, est.antennas);
    let mut h = Grid::zeros(symbols, n_total, r_total);
    let mut err_var = vec![0.0; symbols * n_total * r_total];
    let rows = &est.rows;
    for m in 0..symbols {
        // (row position, weight) pairs
        let anchors: [(usize, f64); 2] = match rows.iter().position(|&p| p >= m) {
            None => [(rows.len() - 1, 1.0), (rows.len() - 1, 0.0)],
            Some(0) => [(0, 1.0), (0, 0.0)],
            Some(b) if rows[b] == m => [(b, 1.0), (b, 0.0)],
            Some(b) => {
                let (lo, hi) = (rows[b - 1] as f64, rows[b] as f64);
                let w = (m as f64 - lo) / (hi - lo);
                [(b - 1, 1.0 - w), (b, w)]
            }
        };
        for n in 0..n_total {
            for r in 0..r_total {
                let mut v = Complex64::new(0.0, 0.0);
                let mut e = 0.0;
                for &(p, w) in &anchors {
                    let i = est.index(p, n, r);
                    v += est.h[i] * w;
                    e += w * w * est.err_var[i];
                }
                let i = h.index(m, n, r);
                h.data_mut()[i] = v;
                err_var[i] = e;
            }
        }
    }
    ChannelEstimate { h, err_var }
}

/// Second-order channel statistics assumed by the Wiener interpolator.
///
/// Frequency correlation follows an exponential power delay profile,
/// `1 / (1 + j 2 pi df dn tau_rms)`; time correlation follows the Jakes
/// spectrum, `J0(2 pi f_d dm T_sym)`. With several delay spreads or Doppler
/// values the correlations are averaged over them.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub delay_spreads_s: Vec<f64>,
    pub dopplers_hz: Vec<f64>,
}

impl CovarianceModel {
    /// Statistics of the realized channel.
    pub fn matched(spec: &ChannelSpec) -> Self {
        let (ds, fd) = match spec.profile {
            Profile::Awgn => (0.0, 0.0),
            Profile::Flat => (0.0, spec.doppler_hz),
            _ => (spec.delay_spread_s, spec.doppler_hz),
        };
        CovarianceModel {
            delay_spreads_s: vec![ds],
            dopplers_hz: vec![fd],
        }
    }

    /// Statistics averaged over uniform grids spanning both ranges.
    pub fn averaged(delay_spread_s: (f64, f64), doppler_hz: (f64, f64), points: usize) -> Self {
        let points = points.max(1);
        let span = |(lo, hi): (f64, f64)| -> Vec<f64> {
            if points == 1 {
                return vec![(lo + hi) / 2.0];
            }
            (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect()
        };
        CovarianceModel {
            delay_spreads_s: span(delay_spread_s),
            dopplers_hz: span(doppler_hz),
        }
    }

    pub fn freq_corr(&self, dn: i64, subcarrier_spacing_hz: f64) -> Complex64 {
        let sum: Complex64 = self
            .delay_spreads_s
            .iter()
            .map(|&tau| {
                Complex64::new(1.0, 0.0)
                    / Complex64::new(1.0, 2.0 * PI * subcarrier_spacing_hz * dn as f64 * tau)
            })
            .sum();
        sum / self.delay_spreads_s.len() as f64
    }

    pub fn time_corr(&self, dm: i64, symbol_duration_s: f64) -> f64 {
        let sum: f64 = self
            .dopplers_hz
            .iter()
            .map(|&fd| libm::j0(2.0 * PI * fd * dm as f64 * symbol_duration_s))
            .sum();
        sum / self.dopplers_hz.len() as f64
    }
}

/// Joint time-frequency Wiener interpolation of the pilot estimates.
///
/// The covariance is the Kronecker product of the time and frequency
/// correlations, so the pilot system is diagonalized by the product of the
/// two eigenbases and solved without forming it.
pub fn interpolate_lmmse(
    est: &PilotEstimate,
    cov: &CovarianceModel,
    cfg: &LinkConfig,
) -> Result<ChannelEstimate> {
    let (m_total, n_total, r_total) = (cfg.symbols, est.subcarriers, est.antennas);
    let p_total = est.rows.len();
    let noise = est.err_var.iter().sum::<f64>() / est.err_var.len().max(1) as f64;
    let t_sym = cfg.symbol_duration_s();
    let scs = cfg.subcarrier_spacing_hz;

    let rf = DMatrix::from_fn(n_total, n_total, |i, j| cov.freq_corr(i as i64 - j as i64, scs));
    let eig_f = SymmetricEigen::new(rf);
    let (u, lambda) = (eig_f.eigenvectors, eig_f.eigenvalues);
    let rt_pp = DMatrix::from_fn(p_total, p_total, |i, j| {
        cov.time_corr(est.rows[i] as i64 - est.rows[j] as i64, t_sym)
    });
    let eig_t = SymmetricEigen::new(rt_pp);
    let (v, sigma) = (eig_t.eigenvectors, eig_t.eigenvalues);
    let rt_mp = DMatrix::from_fn(m_total, p_total, |m, p| {
        cov.time_corr(m as i64 - est.rows[p] as i64, t_sym)
    });
    // time factor of the cross-covariance in the eigenbasis
    let a = &rt_mp * &v;

    let mut denom = DMatrix::<f64>::zeros(p_total, n_total);
    for p in 0..p_total {
        for k in 0..n_total {
            let d = sigma[p] * lambda[k] + noise + LMMSE_RIDGE;
            if !(d > 0.0) || !d.is_finite() {
                return Err(PhyError::IllConditioned);
            }
            denom[(p, k)] = d;
        }
    }

    let mut h = Grid::zeros(m_total, n_total, r_total);
    let vc = v.map(|x| Complex64::new(x, 0.0));
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let u_conj = u.map(|z| z.conj());
    let u_t = u.transpose();
    for r in 0..r_total {
        let x = DMatrix::from_fn(p_total, n_total, |p, n| est.get(p, n, r));
        let mut z = vc.transpose() * x * &u_conj;
        for p in 0..p_total {
            for k in 0..n_total {
                z[(p, k)] *= lambda[k] / denom[(p, k)];
            }
        }
        let out = &ac * z * &u_t;
        for m in 0..m_total {
            for n in 0..n_total {
                h.set(m, n, r, out[(m, n)]);
            }
        }
    }

    // posterior variance: 1 - sum_{p,k} a_mp^2 |u_nk|^2 lambda_k^2 / denom_pk
    let u_abs2 = u.map(|z| z.norm_sqr());
    let mut coef = DMatrix::<f64>::zeros(p_total, n_total);
    for p in 0..p_total {
        for k in 0..n_total {
            coef[(p, k)] = lambda[k] * lambda[k] / denom[(p, k)];
        }
    }
    let explained = a.map(|x| x * x) * coef * u_abs2.transpose();
    let mut err_var = vec![0.0; m_total * n_total * r_total];
    for m in 0..m_total {
        for n in 0..n_total {
            let e = (1.0 - explained[(m, n)]).max(0.0);
            for r in 0..r_total {
                err_var[h.index(m, n, r)] = e;
            }
        }
    }
    if h.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PhyError::IllConditioned);
    }
    Ok(ChannelEstimate { h, err_var })
}
