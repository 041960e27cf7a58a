//! Jumps of the configurational entropy and power-law exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, weighted_line_fit};

/// One rapid rise of the running maximum of `S_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub sector_seed: u64,
    /// `sqrt(t_start * t_end)`.
    pub tau_j: f64,
    pub height: f64,
}

/// Options of [`detect_jumps`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpOptions {
    /// Interval length in decades.
    pub dlog: f64,
    /// Smallest rise of the running maximum per interval.
    pub min_step: f64,
    /// Shift of the first interval boundary, in decades.
    pub anchor_shift: f64,
}

impl Default for JumpOptions {
    fn default() -> Self {
        JumpOptions {
            dlog: 0.25,
            min_step: 0.05,
            anchor_shift: 0.0,
        }
    }
}

/// Running maximum sampled at interval boundaries `t_min 10^(k dlog)`.
fn boundary_maxima(times: &[f64], values: &[f64], opts: &JumpOptions) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let mut cummax = f64::NEG_INFINITY;
    let mut i = 0;
    let mut k = 0;
    loop {
        let b = t0 * 10f64.powf(opts.anchor_shift + k as f64 * opts.dlog);
        if b > t1 * (1.0 + 1e-12) {
            break;
        }
        while i < times.len() && times[i] <= b * (1.0 + 1e-12) {
            cummax = cummax.max(values[i]);
            i += 1;
        }
        if cummax.is_finite() {
            out.push((b, cummax));
        }
        k += 1;
    }
    out
}

/// Jumps of one sector's (smoothed) `S_C` series.
pub fn detect_jumps(times: &[f64], values: &[f64], sector_seed: u64, opts: &JumpOptions) -> Vec<JumpEvent> {
    if times.len() < 2 || times.len() != values.len() {
        return Vec::new();
    }
    let m = boundary_maxima(times, values, opts);
    let mut out = Vec::new();
    let mut k = 0;
    while k + 1 < m.len() {
        if m[k + 1].1 - m[k].1 >= opts.min_step {
            let start = k;
            while k + 1 < m.len() && m[k + 1].1 - m[k].1 >= opts.min_step {
                k += 1;
            }
            out.push(JumpEvent {
                sector_seed,
                tau_j: (m[start].0 * m[k].0).sqrt(),
                height: m[k].1 - m[start].1,
            });
        } else {
            k += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Histogram,
    HistogramMle,
    EntropyFit,
}

impl FitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMethod::Histogram => "histogram",
            FitMethod::HistogramMle => "histogram_mle",
            FitMethod::EntropyFit => "entropy_fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub alpha_err: f64,
    pub method: FitMethod,
    pub window: (f64, f64),
    pub s_inf: Option<f64>,
    pub s0: Option<f64>,
    /// Root-mean-square residual of the fitted curve.
    pub residual_rms: f64,
    pub points: usize,
}

/// Height-weighted histogram of jump times per unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpHistogram {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn jump_histogram(events: &[JumpEvent], bins_per_decade: usize) -> JumpHistogram {
    let lo = events.iter().map(|e| e.tau_j).fold(f64::INFINITY, f64::min).log10().floor();
    let hi = events.iter().map(|e| e.tau_j).fold(0.0, f64::max).log10().ceil().max(lo + 1.0);
    let nb = ((hi - lo) * bins_per_decade as f64).round() as usize;
    let mut weight = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for e in events {
        let x = (e.tau_j.log10() - lo) * bins_per_decade as f64;
        let i = (x.floor() as usize).min(nb - 1);
        weight[i] += e.height;
        counts[i] += 1;
    }
    let edge = |i: usize| 10f64.powf(lo + i as f64 / bins_per_decade as f64);
    JumpHistogram {
        centers: (0..nb).map(|i| (edge(i) * edge(i + 1)).sqrt()).collect(),
        density: (0..nb).map(|i| weight[i] / (edge(i + 1) - edge(i))).collect(),
        counts,
    }
}

/// `P(tau) ~ tau^-(alpha+1)` from a weighted straight-line fit to the
/// log-log histogram, weighted by bin counts.
pub fn fit_jump_histogram(events: &[JumpEvent], bins_per_decade: usize) -> Result<PowerLawFit> {
    if events.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "histogram fit needs at least 100 jumps, got {}",
            events.len()
        )));
    }
    let h = jump_histogram(events, bins_per_decade);
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..h.centers.len() {
        if h.counts[i] > 0 && h.density[i] > 0.0 {
            x.push(h.centers[i].log10());
            y.push(h.density[i].log10());
            w.push(h.counts[i] as f64);
        }
    }
    if x.len() < 5 {
        return Err(Error::InsufficientData(format!("only {} populated bins", x.len())));
    }
    let f = weighted_line_fit(&x, &y, &w).ok_or_else(|| Error::DegenerateFit("histogram line fit".into()))?;
    Ok(PowerLawFit {
        alpha: -f.slope - 1.0,
        alpha_err: f.slope_err,
        method: FitMethod::Histogram,
        window: (10f64.powf(x[0]), 10f64.powf(x[x.len() - 1])),
        s_inf: None,
        s0: None,
        residual_rms: f.scale.sqrt(),
        points: x.len(),
    })
}

/// Height-weighted maximum-likelihood exponent of a power law truncated to
/// `[tau_min, tau_max]` of the events.
pub fn fit_jump_mle(events: &[JumpEvent]) -> Result<PowerLawFit> {
    if events.len() < 100 {
        return Err(Error::InsufficientData(format!("MLE needs at least 100 jumps, got {}", events.len())));
    }
    let a = events.iter().map(|e| e.tau_j).fold(f64::INFINITY, f64::min);
    let b = events.iter().map(|e| e.tau_j).fold(0.0, f64::max);
    let (la, lb) = (a.ln(), b.ln());
    let w: Vec<f64> = events.iter().map(|e| e.height).collect();
    let sw = pairwise_sum(&w);
    let mean_ln = pairwise_sum(&events.iter().map(|e| e.height * e.tau_j.ln()).collect::<Vec<_>>()) / sw;
    // ln Z(beta) with Z = int_a^b t^-beta dt; g = 1 - beta.
    let ln_z = |beta: f64| {
        let g = 1.0 - beta;
        if g.abs() < 1e-8 {
            (lb - la).ln()
        } else {
            let (x, y) = (g * lb, g * la);
            // ln |e^x - e^y| - ln |g|
            let (hi, lo) = if x > y { (x, y) } else { (y, x) };
            hi + (-(lo - hi).exp()).ln_1p() - g.abs().ln()
        }
    };
    let nll = |beta: f64| beta * mean_ln + ln_z(beta);
    let beta = golden_min(nll, -3.0, 5.0, 1e-10);
    let h = 1e-4;
    let curv = (nll(beta + h) - 2.0 * nll(beta) + nll(beta - h)) / (h * h);
    let n_eff = sw * sw / pairwise_sum(&w.iter().map(|x| x * x).collect::<Vec<_>>());
    Ok(PowerLawFit {
        alpha: beta - 1.0,
        alpha_err: 1.0 / (n_eff * curv).sqrt(),
        method: FitMethod::HistogramMle,
        window: (a, b),
        s_inf: None,
        s0: None,
        residual_rms: f64::NAN,
        points: events.len(),
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Least-squares `(S_inf, S_0)` and residual sum of squares at fixed alpha.
fn linear_part(t: &[f64], y: &[f64], alpha: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = t.iter().map(|t| t.powf(-alpha)).collect();
    let n = t.len() as f64;
    let sx = pairwise_sum(&x);
    let sy = pairwise_sum(y);
    let sxx = pairwise_sum(&x.iter().map(|v| v * v).collect::<Vec<_>>());
    let sxy = pairwise_sum(&x.iter().zip(y).map(|(a, b)| a * b).collect::<Vec<_>>());
    let det = n * sxx - sx * sx;
    // y = c0 + c1 x, with S_inf = c0 and S_0 = -c1.
    let c1 = (n * sxy - sx * sy) / det;
    let c0 = (sy - c1 * sx) / n;
    let rss = pairwise_sum(
        &x.iter()
            .zip(y)
            .map(|(xi, yi)| (yi - c0 - c1 * xi).powi(2))
            .collect::<Vec<_>>(),
    );
    (c0, -c1, rss)
}

/// Fits `S(t) = S_inf - S_0 t^-alpha` on `[t_lo, t_hi]`. The default upper
/// bound drops the last half-decade of the series.
pub fn fit_entropy_powerlaw(times: &[f64], values: &[f64], t_lo: f64, t_hi: Option<f64>) -> Result<PowerLawFit> {
    const ALPHA_MIN: f64 = 1e-5;
    const ALPHA_MAX: f64 = 4.0;
    let t_max = *times.last().ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    let t_hi = t_hi.unwrap_or(t_max / 10f64.sqrt());
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < 5 {
        return Err(Error::InsufficientData(format!("{} points in the fit window", t.len())));
    }
    let scan: Vec<f64> = (0..=240)
        .map(|i| ALPHA_MIN * (ALPHA_MAX / ALPHA_MIN).powf(i as f64 / 240.0))
        .collect();
    let rss: Vec<f64> = scan.iter().map(|&a| linear_part(&t, &y, a).2).collect();
    let best = (0..scan.len()).min_by(|&a, &b| rss[a].total_cmp(&rss[b])).unwrap();
    if best == 0 || best == scan.len() - 1 {
        return Err(Error::NoConvergence(format!(
            "best initial exponent {} sits at the edge of [{ALPHA_MIN}, {ALPHA_MAX}]",
            scan[best]
        )));
    }
    let (la, lb) = (scan[best - 1].ln(), scan[best + 1].ln());
    let alpha = golden_min(|la| linear_part(&t, &y, la.exp()).2, la, lb, 1e-14).exp();
    let (s_inf, s0, rss) = linear_part(&t, &y, alpha);

    // Covariance from the Jacobian of (S_inf, S_0, alpha).
    let n = t.len();
    let mut jtj = [[0.0f64; 3]; 3];
    for &ti in &t {
        let x = ti.powf(-alpha);
        let row = [1.0, -x, s0 * x * ti.ln()];
        for r in 0..3 {
            for c in 0..3 {
                jtj[r][c] += row[r] * row[c];
            }
        }
    }
    let sigma2 = rss / (n as f64 - 3.0).max(1.0);
    let var_alpha = sigma2 * inverse3(&jtj).map_or(f64::NAN, |inv| inv[2][2]);
    Ok(PowerLawFit {
        alpha,
        alpha_err: var_alpha.max(0.0).sqrt(),
        method: FitMethod::EntropyFit,
        window: (t[0], t[n - 1]),
        s_inf: Some(s_inf),
        s0: Some(s0),
        residual_rms: (rss / n as f64).sqrt(),
        points: n,
    })
}

fn inverse3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |r: usize, k: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        m[r1][k1] * m[r2][k2] - m[r1][k2] * m[r2][k1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for k in 0..3 {
            inv[k][r] = c(r, k) / det;
        }
    }
    Some(inv)
}
