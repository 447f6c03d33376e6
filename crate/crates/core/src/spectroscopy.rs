//! Gaussian-windowed Fourier spectra of autocorrelation functions.
//!
//! `SP(E) = Re int e^{i (E + E0) tau} A(tau) w(tau) dtau` over the whole real
//! line, with `A(-tau) = conj(A(tau))` and `w(tau) = exp(-tau^2 / (2 sigma^2))`.
//! An eigenvalue `E_nu` in `A` shows up as a peak at `E_nu - E0` of width
//! `1/sigma`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::{uniform_step, SpectrumSeries, TimeSeries};

/// Transform of a series sampled uniformly from `tau = 0`.
///
/// With `normalize` the result is divided by `2 pi`, so that its integral
/// over energy equals `A(0)`.
pub fn windowed_fourier<T: Real>(
    series: &TimeSeries<T>,
    sigma: T,
    energies: &[T],
    shift: T,
    normalize: bool,
) -> Result<SpectrumSeries<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::Config(format!("window width must be positive, got {sigma}")));
    }
    let h = uniform_step(&series.tau)?;
    if sigma < h * T::of(3.0) {
        log::warn!("window under-resolved: sigma = {sigma} is less than three grid steps ({h})");
    }
    let n = series.len();
    let two_sigma2 = T::of(2.0) * sigma * sigma;
    // trapezoid weights times the window, folded with the Hermitian half
    let weighted: Vec<Complex<T>> = series
        .tau
        .iter()
        .zip(&series.values)
        .enumerate()
        .map(|(k, (&t, &a))| {
            let trap = if k == 0 || k + 1 == n { T::of(0.5) } else { T::one() };
            a * (h * trap * (-t * t / two_sigma2).exp())
        })
        .collect();
    let scale = if normalize { T::one() / T::TAU() } else { T::one() };
    let values = energies
        .par_iter()
        .map(|&e| {
            let omega = e + shift;
            let sum: T = series
                .tau
                .iter()
                .zip(&weighted)
                .map(|(&t, &a)| (Complex::from_polar(T::one(), omega * t) * a).re)
                .sum();
            T::of(2.0) * sum * scale
        })
        .collect();
    Ok(SpectrumSeries {
        energy: energies.to_vec(),
        values,
        sigma,
        shift,
    })
}

/// A refined local maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    pub position: T,
    pub height: T,
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in units of the spacing from the middle one.
fn parabola_vertex<T: Real>(left: T, mid: T, right: T) -> (T, T) {
    let denom = left - mid * T::of(2.0) + right;
    if denom == T::zero() {
        return (T::zero(), mid);
    }
    let offset = T::of(0.5) * (left - right) / denom;
    let height = mid - T::of(0.25) * (left - right) * offset;
    (offset, height)
}

/// Interior local maxima above `floor`, refined by parabolic interpolation.
pub fn extract_peaks<T: Real>(spectrum: &SpectrumSeries<T>, floor: T) -> Vec<Peak<T>> {
    let v = &spectrum.values;
    let e = &spectrum.energy;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > floor)
        .map(|i| {
            let (offset, height) = parabola_vertex(v[i - 1], v[i], v[i + 1]);
            let step = if offset >= T::zero() { e[i + 1] - e[i] } else { e[i] - e[i - 1] };
            Peak {
                position: e[i] + offset * step,
                height,
            }
        })
        .collect()
}

/// Shift `delta` with `b(E) ~ a(E - delta)`, searched over `|delta| <= window`
/// by maximizing the cross-correlation.
pub fn estimate_shift<T: Real>(a: &SpectrumSeries<T>, b: &SpectrumSeries<T>, window: T) -> Result<T> {
    if a.energy.len() != b.energy.len() || a.energy.len() < 3 {
        return Err(Error::InvalidGrid("spectra must share an energy grid".into()));
    }
    let h = a.energy[1] - a.energy[0];
    let tol = T::of(1e-9) * h;
    let shared = a.energy.iter().zip(&b.energy).all(|(x, y)| (*x - *y).abs() <= tol)
        && a.energy.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol * T::of(10.0));
    if !shared || !(h > T::zero()) {
        return Err(Error::InvalidGrid("spectra must share a uniform energy grid".into()));
    }
    let n = a.values.len() as isize;
    let max_lag = ((window / h).floor().to_isize().unwrap_or(0)).min(n - 1).max(1);
    let corr = |lag: isize| -> T {
        (0..n)
            .filter(|&i| i + lag >= 0 && i + lag < n)
            .map(|i| a.values[i as usize] * b.values[(i + lag) as usize])
            .sum()
    };
    let lags: Vec<isize> = (-max_lag..=max_lag).collect();
    let c: Vec<T> = lags.iter().map(|&l| corr(l)).collect();
    let (best, &cmax) = c
        .iter()
        .enumerate()
        .fold((0, &c[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    let cmin = c.iter().copied().fold(T::infinity(), T::min);
    if !(cmax - cmin > T::of(1e-12) * cmax.abs().max(T::of(1e-300))) || !(cmax > T::zero()) {
        return Err(Error::FlatCorrelation);
    }
    let offset = if best > 0 && best + 1 < c.len() {
        parabola_vertex(c[best - 1], c[best], c[best + 1]).0
    } else {
        T::zero()
    };
    Ok((T::of(lags[best] as f64) + offset) * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::uniform_grid;
    use num_complex::Complex64;

    fn series(f: impl Fn(f64) -> Complex64, step: f64, stop: f64) -> TimeSeries<f64> {
        let tau = uniform_grid(0.0, stop, step).unwrap();
        let values = tau.iter().map(|&t| f(t)).collect();
        TimeSeries::new(tau, values)
    }

    #[test]
    fn single_line_peak_and_width() {
        let e1 = 3.2;
        let s = series(|t| Complex64::from_polar(1.0, -e1 * t), 0.05, 60.0);
        let grid = uniform_grid(2.0, 4.5, 0.01).unwrap();
        let sp = windowed_fourier(&s, 10.0, &grid, 0.5, true).unwrap();
        let peaks = extract_peaks(&sp, 0.1);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].position - (e1 - 0.5)).abs() < 0.001);
        // Gaussian of area 1 and width 1/sigma
        let expect = 10.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((peaks[0].height - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn constant_series_peaks_at_minus_shift() {
        let s = series(|_| Complex64::new(1.0, 0.0), 0.1, 50.0);
        let grid = uniform_grid(-2.0, 2.0, 0.01).unwrap();
        let sp = windowed_fourier(&s, 8.0, &grid, 0.7, false).unwrap();
        let peaks = extract_peaks(&sp, 1.0);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].position + 0.7).abs() < 0.001);
    }

    #[test]
    fn normalized_mass() {
        let s = series(
            |t| Complex64::from_polar(0.3, -t) + Complex64::from_polar(0.6, 2.0 * t),
            0.05,
            80.0,
        );
        let grid = uniform_grid(-5.0, 5.0, 0.005).unwrap();
        let sp = windowed_fourier(&s, 12.0, &grid, 0.0, true).unwrap();
        let mass: f64 = sp.values.iter().sum::<f64>() * 0.005;
        assert!((mass - 0.9).abs() < 1e-6, "{mass}");
        let peaks = extract_peaks(&sp, 0.1);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].position + 2.0).abs() < 5e-4 && (peaks[1].position - 1.0).abs() < 5e-4);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let s = TimeSeries::new(vec![0.0, 0.1, 0.3], vec![Complex64::new(1.0, 0.0); 3]);
        assert_eq!(windowed_fourier(&s, 1.0, &[0.0], 0.0, false), Err(Error::NonUniformGrid));
    }

    #[test]
    fn linear_in_the_series() {
        let a = series(|t| Complex64::from_polar(1.0, -0.4 * t), 0.1, 20.0);
        let b = series(|t| Complex64::new((0.3 * t).cos(), 0.2 * t.sin()), 0.1, 20.0);
        let mix = TimeSeries::new(
            a.tau.clone(),
            a.values.iter().zip(&b.values).map(|(x, y)| x * 2.0 - y * 0.5).collect(),
        );
        let grid = uniform_grid(-1.0, 1.0, 0.1).unwrap();
        let sa = windowed_fourier(&a, 5.0, &grid, 0.0, false).unwrap();
        let sb = windowed_fourier(&b, 5.0, &grid, 0.0, false).unwrap();
        let sm = windowed_fourier(&mix, 5.0, &grid, 0.0, false).unwrap();
        for i in 0..grid.len() {
            assert!((sm.values[i] - (2.0 * sa.values[i] - 0.5 * sb.values[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_recovery() {
        let a_series = series(
            |t| Complex64::from_polar(0.5, -1.3 * t) + Complex64::from_polar(0.5, -2.1 * t),
            0.05,
            100.0,
        );
        let grid = uniform_grid(-2.0, 5.0, 0.007).unwrap();
        let a = windowed_fourier(&a_series, 15.0, &grid, 0.0, true).unwrap();
        assert!(estimate_shift(&a, &a, 1.0).unwrap().abs() < 1e-9);
        let b = windowed_fourier(&a_series, 15.0, &grid, -0.9, true).unwrap();
        let d = estimate_shift(&a, &b, 1.5).unwrap();
        assert!((d - 0.9).abs() < 0.0007, "{d}");
    }

    #[test]
    fn flat_correlation_is_an_error() {
        let grid = uniform_grid(0.0, 1.0, 0.1).unwrap();
        let flat = SpectrumSeries {
            energy: grid.clone(),
            values: vec![0.0; grid.len()],
            sigma: 1.0,
            shift: 0.0,
        };
        assert_eq!(estimate_shift(&flat, &flat, 0.5), Err(Error::FlatCorrelation));
    }
}
