//! Fourier-side diagnostics: spectra, band energies, the shift functional
//! ρ(u, s) = ∫(u(x−s) − u(x))² dx and the Volterra residual
//! ∂_x w − (γ'_ε ∗ u − γ_ε(0) u) with w = γ_ε ∗ u.
//!
//! Amplitudes follow the analytic transform û(ξ) = ∫u e^{−iξx} dx sampled at
//! ξ_m = 2πm/L; energies are measured against dξ/2π, i.e. with the weight
//! Δξ̃ = 1/L, which makes the discrete Parseval identity
//! Σ|û_m|²Δξ̃ = Σ|u_j|²Δx exact.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{DiscreteKernel, KernelSpec};
use crate::nonlocal::nonlocal_impact;

/// Fields must decay to this fraction of their peak at both edges before a
/// spectrum is taken; padding below that periodizes the tail energies.
const EDGE_DECAY: f64 = 1e-8;

/// Discrete Fourier representation of a grid function.
#[derive(Clone, Debug)]
pub struct Spectrum {
    freqs: Vec<f64>,
    amps: Vec<Complex64>,
    dx: f64,
    domain_length: f64,
}

impl Spectrum {
    /// Angular frequencies ξ_m = 2πm/L in ascending order.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// Quadrature weight of the spectral measure dξ/2π.
    pub fn dxi(&self) -> f64 {
        1.0 / self.domain_length
    }

    /// Total energy Σ|û_m|²Δξ̃ (= ‖u‖²_{L²} by Parseval).
    pub fn energy(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dxi()
    }

    /// Spectrum CSV: "xi,re,im,abs2", 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "xi,re,im,abs2")?;
        for (xi, a) in self.freqs.iter().zip(&self.amps) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                xi,
                a.re,
                a.im,
                a.norm_sqr()
            )?;
        }
        Ok(())
    }
}

/// Discrete transform û(ξ_m) = Δx Σ_j u_j e^{−iξ_m x_j} over the symmetric
/// index range. Requires the field to decay at both boundaries.
pub fn spectrum(f: &GridFunction) -> Result<Spectrum> {
    let peak = f.max_abs();
    let n = f.len();
    let edge = f.values()[0].abs().max(f.values()[n - 1].abs());
    if peak > 0.0 && edge > EDGE_DECAY * peak {
        return Err(Error::Padding { edge, peak });
    }
    let dx = f.grid().dx();
    let length = f.grid().length();

    let mut buf: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let m_lo = -(n as i64) / 2;
    let x0 = f.grid().x_left() + 0.5 * dx;
    let mut freqs = Vec::with_capacity(n);
    let mut amps = Vec::with_capacity(n);
    for k in 0..n {
        let m = m_lo + k as i64;
        let xi = 2.0 * std::f64::consts::PI * m as f64 / length;
        let idx = ((m % n as i64 + n as i64) % n as i64) as usize;
        let phase = Complex64::new(0.0, -xi * x0).exp();
        freqs.push(xi);
        amps.push(dx * phase * buf[idx]);
    }
    let s = Spectrum {
        freqs,
        amps,
        dx,
        domain_length: length,
    };
    debug_assert!({
        let direct = f.l2_norm_sq();
        (s.energy() - direct).abs() <= 1e-10 * direct.max(1e-300)
    });
    Ok(s)
}

/// Band energy Σ_{|εξ_m| ≥ δ} |û_m|²Δξ̃.
///
/// The band must be resolvable: δ/ε may not exceed the Nyquist frequency
/// π/Δx, otherwise the discrete sum would silently under-report the tail.
pub fn tail_energy(s: &Spectrum, eps: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !(eps > 0.0) {
        return Err(Error::Validation(format!(
            "tail_energy requires eps > 0 and delta > 0 (got {eps}, {delta})"
        )));
    }
    let cut = delta / eps;
    let nyquist = std::f64::consts::PI / s.dx;
    if cut > nyquist * (1.0 + 1e-9) {
        return Err(Error::UnresolvedBand {
            delta,
            cut,
            nyquist,
        });
    }
    let dxi = s.dxi();
    Ok(s
        .freqs
        .iter()
        .zip(&s.amps)
        .filter(|(xi, _)| (eps * **xi).abs() >= delta * (1.0 - 1e-12))
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        * dxi)
}

/// ρ at an integer cell shift: Σ_j (u_{j+shift} − u_j)² Δx, edge-extended.
pub fn rho_at_cells(u: &GridFunction, shift: i64) -> f64 {
    let vals = u.values();
    let n = vals.len() as i64;
    let dx = u.grid().dx();
    let mut acc = 0.0;
    for j in 0..n {
        let idx = (j + shift).clamp(0, n - 1) as usize;
        let d = vals[idx] - vals[j as usize];
        acc += d * d;
    }
    acc * dx
}

/// ρ(u, s) = Σ_j (u_{j−k} − u_j)² Δx with k = round(s/Δx) the nearest-cell
/// shift.
pub fn rho(u: &GridFunction, s: f64) -> f64 {
    let k = (s / u.grid().dx()).round() as i64;
    rho_at_cells(u, -k)
}

#[derive(Clone, Copy, Debug)]
pub struct RhoBound {
    /// Quadrature of ∫ ρ(u, s) γ'_ε(s) ds over the truncated support.
    pub lhs: f64,
    /// 2·TV(u₀).
    pub rhs: f64,
    pub pass: bool,
}

/// Check ∫ρ(u, s)γ'_ε(s)ds ≤ 2 TV(u₀). The shift grid sits at cell
/// multiples, the γ'_ε weight uses exact cell integrals, and the two are
/// paired by the trapezoid rule in the shift variable.
pub fn rho_gamma_bound(
    u: &GridFunction,
    spec: &KernelSpec,
    eps: f64,
    u0_tv: f64,
) -> Result<RhoBound> {
    let dx = u.grid().dx();
    let kernel = spec.discretize(eps, dx, 1e-10)?;
    let wd = kernel.deriv_weights();
    let mut lhs = 0.0;
    let mut rho_prev = 0.0; // ρ at shift 0
    for (k, &w) in wd.iter().enumerate() {
        let rho_next = rho_at_cells(u, (k + 1) as i64);
        lhs += 0.5 * (rho_prev + rho_next) * w;
        rho_prev = rho_next;
    }
    let rhs = 2.0 * u0_tv;
    Ok(RhoBound {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-8),
    })
}

/// Sup-norm residual of the Volterra identity
/// ∂_x w = γ'_ε ∗ u − γ_ε(0) u with w = Γ ∗ u: the x-derivative is the
/// centered difference of the discrete impact and the derivative convolution
/// uses the cell integrals of γ'_ε. First-order accurate, O(Δx/ε).
pub fn volterra_residual(u: &GridFunction, kernel: &DiscreteKernel) -> Result<f64> {
    let w = nonlocal_impact(u, kernel)?;
    let n = u.len();
    let dx = u.grid().dx();
    let vals = u.values();
    let wd = kernel.deriv_weights();
    let g0 = kernel.gamma_eps_at_zero();
    let mut sup: f64 = 0.0;
    for j in 1..n - 1 {
        let dxw = (w.values()[j + 1] - w.values()[j - 1]) / (2.0 * dx);
        let mut conv = 0.0;
        for (k, &wk) in wd.iter().enumerate() {
            let idx = (j + k).min(n - 1);
            conv += wk * vals[idx];
        }
        sup = sup.max((dxw - (conv - g0 * vals[j])).abs());
    }
    Ok(sup)
}

/// Sup-norm residual of the exponential-kernel identity ε ∂_x w = w − u.
pub fn exp_identity_residual(u: &GridFunction, kernel: &DiscreteKernel) -> Result<f64> {
    let w = nonlocal_impact(u, kernel)?;
    let n = u.len();
    let dx = u.grid().dx();
    let eps = kernel.eps();
    let mut sup: f64 = 0.0;
    for j in 1..n - 1 {
        let dxw = (w.values()[j + 1] - w.values()[j - 1]) / (2.0 * dx);
        let res = eps * dxw - (w.values()[j] - u.values()[j]);
        sup = sup.max(res.abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::KernelSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump_field(n: usize, dx: f64) -> GridFunction {
        let g = Grid::new(-(n as f64) * dx / 2.0, dx, n).unwrap();
        GridFunction::from_fn(g, |x| {
            let s = x / 0.8;
            if s.abs() < 1.0 {
                0.7 * (1.0 - 1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let g = Grid::new(0.0, 0.1, 32).unwrap();
        let s = spectrum(&GridFunction::zeros(g)).unwrap();
        assert!(s.amps().iter().all(|a| a.norm() == 0.0));
        assert_eq!(s.energy(), 0.0);
    }

    #[test]
    fn impulse_spectrum_is_flat() {
        let dx = 0.05;
        let g = Grid::new(-1.0, dx, 40).unwrap();
        let mut u = GridFunction::zeros(g);
        u.values_mut()[20] = 1.0 / dx;
        let s = spectrum(&u).unwrap();
        for a in s.amps() {
            assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn parseval_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [64usize, 97, 128] {
            let g = Grid::new(-1.0, 2.0 / n as f64, n).unwrap();
            let mut vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            vals[0] = 0.0;
            vals[n - 1] = 0.0;
            let u = GridFunction::new(g, vals).unwrap();
            let s = spectrum(&u).unwrap();
            assert_relative_eq!(s.energy(), u.l2_norm_sq(), max_relative = 1e-10);
        }
    }

    #[test]
    fn spectrum_is_conjugate_symmetric() {
        let u = bump_field(100, 0.05);
        let s = spectrum(&u).unwrap();
        let n = s.freqs().len();
        for k in 0..n {
            let xi = s.freqs()[k];
            if let Some(pos) = s.freqs().iter().position(|&f| (f + xi).abs() < 1e-12) {
                let a = s.amps()[k];
                let b = s.amps()[pos];
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-10);
                assert_abs_diff_eq!(a.im, -b.im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn non_decaying_field_is_a_padding_error() {
        let g = Grid::new(0.0, 0.1, 16).unwrap();
        let u = GridFunction::new(g, vec![0.5; 16]).unwrap();
        assert!(matches!(spectrum(&u), Err(Error::Padding { .. })));
    }

    #[test]
    fn tail_energy_limits() {
        let u = bump_field(200, 0.02);
        let s = spectrum(&u).unwrap();
        let eps = 0.1;
        // delta -> 0+ recovers the whole energy up to the zero mode, whose
        // share (∫u)²/L vanishes as the padding grows
        let all = tail_energy(&s, eps, 1e-12).unwrap();
        let dc = u.mass() * u.mass() / u.grid().length();
        assert_relative_eq!(all, u.l2_norm_sq() - dc, max_relative = 1e-10);
        let wide = bump_field(800, 0.02);
        let sw = spectrum(&wide).unwrap();
        let all_wide = tail_energy(&sw, eps, 1e-12).unwrap();
        assert!(
            (wide.l2_norm_sq() - all_wide) < (u.l2_norm_sq() - all) * 0.3,
            "zero-mode share must shrink with padding"
        );
        // band beyond Nyquist is unresolvable
        let nyq = std::f64::consts::PI / s.dx();
        assert!(matches!(
            tail_energy(&s, eps, 1.01 * eps * nyq),
            Err(Error::UnresolvedBand { .. })
        ));
        // nested bands: tail decreases in delta
        let mut prev = f64::INFINITY;
        for i in 1..=10 {
            let delta = 0.05 * i as f64;
            let t = tail_energy(&s, eps, delta).unwrap();
            assert!(t <= prev + 1e-15);
            prev = t;
        }
    }

    #[test]
    fn rho_examples() {
        let dx = 0.1;
        let g = Grid::new(-2.0, dx, 40).unwrap();
        let step = GridFunction::from_fn(g, |x| if x < 0.0 { 0.0 } else { 0.6 }).unwrap();
        assert_eq!(rho(&step, 0.0), 0.0);
        // one-cell shift of a step of height a: a² dx
        assert_relative_eq!(rho(&step, dx), 0.36 * dx, epsilon = 1e-13);
        assert_relative_eq!(rho(&step, -dx), 0.36 * dx, epsilon = 1e-13);
        // nearest-cell rounding
        assert_relative_eq!(rho(&step, 1.4 * dx), 0.36 * dx, epsilon = 1e-13);
    }

    #[test]
    fn rho_symmetry_up_to_edge_effects() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Grid::new(0.0, 0.05, 60).unwrap();
        for _ in 0..20 {
            let vals: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..1.0)).collect();
            let u = GridFunction::new(g, vals).unwrap();
            let bound = 2.0 * g.dx() * u.max_abs() * u.max_abs();
            assert!((rho(&u, g.dx()) - rho(&u, -g.dx())).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn rho_matches_its_fourier_form() {
        // ρ(u, s) = Σ 2(1 − cos(s ξ)) |û|² Δξ̃ on padded fields
        let u = bump_field(256, 0.02);
        let s = spectrum(&u).unwrap();
        let dx = u.grid().dx();
        for &k in &[1i64, 3, 7, 20] {
            let shift = k as f64 * dx;
            let direct = rho(&u, shift);
            let fourier: f64 = s
                .freqs()
                .iter()
                .zip(s.amps())
                .map(|(xi, a)| 2.0 * (1.0 - (shift * xi).cos()) * a.norm_sqr())
                .sum::<f64>()
                * s.dxi();
            assert_relative_eq!(direct, fourier, max_relative = 1e-8);
        }
    }

    #[test]
    fn rho_bound_on_constant_field() {
        let g = Grid::new(0.0, 0.01, 100).unwrap();
        let u = GridFunction::new(g, vec![0.4; 100]).unwrap();
        let b = rho_gamma_bound(&u, &KernelSpec::exponential(), 0.1, 0.0).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert!(b.pass);
    }

    #[test]
    fn rho_bound_on_riemann_datum() {
        // pure step of height 0.6: ∫ρ γ'_ε ds = 0.36 ∫|s|γ'_ε(s) ds = 0.36
        // for the exponential kernel, comfortably below 2·0.6
        let dx = 0.005;
        let g = Grid::new(-2.0, dx, 800).unwrap();
        let u = GridFunction::from_fn(g, |x| if x < 0.0 { 0.2 } else { 0.8 }).unwrap();
        let b = rho_gamma_bound(&u, &KernelSpec::exponential(), 0.1, 0.6).unwrap();
        assert!(b.lhs >= 0.0);
        assert!(b.lhs <= 1.2, "lhs = {}", b.lhs);
        assert!(b.pass);
        assert_relative_eq!(b.lhs, 0.36, max_relative = 0.05);
    }

    #[test]
    fn volterra_residual_vanishes_on_constants() {
        let k = KernelSpec::exponential().discretize(0.1, 0.005, 1e-10).unwrap();
        let g = Grid::new(0.0, 0.005, 400).unwrap();
        let u = GridFunction::new(g, vec![0.37; 400]).unwrap();
        let r = volterra_residual(&u, &k).unwrap();
        assert!(r <= 1e-12, "residual {r:e}");
    }

    #[test]
    fn volterra_residual_halves_with_dx() {
        let eps = 0.1;
        let mut residuals = Vec::new();
        for &ratio in &[20.0, 40.0, 80.0] {
            let dx = eps / ratio;
            let n = (5.0 / dx) as usize;
            let g = Grid::new(-2.0, dx, n).unwrap();
            let u = GridFunction::from_fn(g, |x| {
                let s = x / 0.5;
                if s.abs() < 1.0 {
                    0.8 * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            })
            .unwrap();
            let k = KernelSpec::hat().discretize(eps, dx, 1e-10).unwrap();
            residuals.push(volterra_residual(&u, &k).unwrap());
        }
        for pair in residuals.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                (1.7..=2.3).contains(&ratio),
                "halving ratio {ratio}, residuals {residuals:?}"
            );
        }
    }

    #[test]
    fn spectrum_csv_has_expected_header() {
        let u = bump_field(64, 0.05);
        let s = spectrum(&u).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("xi,re,im,abs2\n"));
        assert_eq!(text.lines().count(), 65);
    }
}
