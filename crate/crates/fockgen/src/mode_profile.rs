//! Gaussian mode profile along the atomic trajectory: coupling strength,
//! pulse areas, and the symmetric-window solver.
//!
//! Positions are measured from the cavity axis (`r = 0` at the mode
//! center). The atom crosses the mode at constant velocity, so a path
//! `[r_start, r_end]` maps to an interaction time `(r_end - r_start) / v`
//! and the pulse area is the coupling integrated along the path.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::erf;

/// Relative tolerance to which the window solver reproduces its target
/// pulse area.
pub const WINDOW_SOLVE_REL_TOL: f64 = 1e-12;

/// Physical constants of the cavity crossing, strict SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Vacuum Rabi frequency at the cavity center, rad/s.
    pub omega0: f64,
    /// Gaussian mode waist, m.
    pub waist: f64,
    /// Atomic velocity, m/s.
    pub velocity: f64,
    /// Cavity field damping time, s.
    pub t_cav: f64,
    /// Stark on/off switching time, s.
    pub t_switch: f64,
    /// Per-atom transit slot, s.
    pub tau_bar: f64,
}

impl CavityParams {
    pub fn new(
        omega0: f64,
        waist: f64,
        velocity: f64,
        t_cav: f64,
        t_switch: f64,
        tau_bar: f64,
    ) -> Result<Self> {
        let params = CavityParams {
            omega0,
            waist,
            velocity,
            t_cav,
            t_switch,
            tau_bar,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega0", self.omega0),
            ("waist", self.waist),
            ("velocity", self.velocity),
            ("t_cav", self.t_cav),
            ("t_switch", self.t_switch),
            ("tau_bar", self.tau_bar),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        for (name, value) in &fields[..4] {
            if *value <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.t_switch < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "t_switch must be nonnegative, got {}",
                self.t_switch
            )));
        }
        if self.tau_bar <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tau_bar must be positive, got {}",
                self.tau_bar
            )));
        }
        Ok(())
    }

    /// Pulse area accumulated over a full transit of the mode,
    /// `Ω₀ √π w / v`. No window can deliver more than this.
    pub fn full_transit_area(&self) -> f64 {
        self.omega0 * PI.sqrt() * self.waist / self.velocity
    }
}

impl Default for CavityParams {
    /// Typical microwave cavity-QED numbers: Ω₀ = 2π·47 kHz, w = 6 mm,
    /// v = 500 m/s, t_cav = 123 ms, t_switch = 1 μs, τ̄ = 10 μs.
    fn default() -> Self {
        CavityParams {
            omega0: 2.0 * PI * 47e3,
            waist: 6e-3,
            velocity: 500.0,
            t_cav: 123e-3,
            t_switch: 1e-6,
            tau_bar: 10e-6,
        }
    }
}

/// One resonant interaction window: the atom is Stark-tuned into resonance
/// at `r_start` and back out at `r_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseWindow {
    /// 1-based position of the atom in the injection sequence.
    pub atom_index: usize,
    /// Stark-on position relative to the cavity axis, m.
    pub r_start: f64,
    /// Stark-off position, m.
    pub r_end: f64,
    /// Window duration `(r_end - r_start) / v`, s.
    pub duration: f64,
    /// Pulse area the window was solved for, rad.
    pub target_area: f64,
}

/// Coupling strength at position `r` from the cavity axis:
/// `Ω₀ exp(−r²/w²)`. Strictly positive and even in `r`.
pub fn coupling_at(params: &CavityParams, r: f64) -> f64 {
    params.omega0 * (-(r * r) / (params.waist * params.waist)).exp()
}

/// Pulse area accumulated between `r_start` and `r_end`, in closed form:
///
/// ```text
/// θ = (Ω₀ √π w / 2v) [erf(r_end/w) − erf(r_start/w)]
/// ```
///
/// Monotone increasing in `r_end` and additive over adjacent intervals.
/// Reversed bounds yield the negated area.
pub fn pulse_area_closed(params: &CavityParams, r_start: f64, r_end: f64) -> f64 {
    let scale = 0.5 * params.omega0 * PI.sqrt() * params.waist / params.velocity;
    scale * (erf(r_end / params.waist) - erf(r_start / params.waist))
}

/// Pulse area by adaptive Simpson quadrature of the mode profile along the
/// path. Independent of [`pulse_area_closed`] (no error function involved);
/// serves as its cross-check.
///
/// The result is within `abs_tol` of the true integral, or
/// [`Error::QuadratureFailure`] if the evaluation budget runs out first.
pub fn pulse_area_numeric(
    params: &CavityParams,
    r_start: f64,
    r_end: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !(abs_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "abs_tol must be positive, got {abs_tol}"
        )));
    }
    if !(r_end >= r_start) {
        return Err(Error::InvalidArgument(format!(
            "r_end ({r_end}) must be >= r_start ({r_start})"
        )));
    }
    if r_start == r_end {
        return Ok(0.0);
    }
    let f = |r: f64| coupling_at(params, r) / params.velocity;
    let mut budget = EVAL_BUDGET;
    let mid = 0.5 * (r_start + r_end);
    let (fa, fm, fb) = (f(r_start), f(mid), f(r_end));
    let whole = simpson(r_start, r_end, fa, fm, fb);
    adaptive_simpson(
        &f,
        r_start,
        r_end,
        fa,
        fm,
        fb,
        whole,
        abs_tol,
        &mut budget,
    )
    .ok_or(Error::QuadratureFailure { abs_tol })
}

const EVAL_BUDGET: u64 = 20_000_000;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    budget: &mut u64,
) -> Option<f64> {
    if *budget < 2 {
        return None;
    }
    *budget -= 2;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // 15 = 2^4 - 1 from the Richardson error estimate of Simpson's rule.
    if delta.abs() <= 15.0 * tol || (m <= a || b <= m) {
        return Some(left + right + delta / 15.0);
    }
    let half_tol = 0.5 * tol;
    let l = adaptive_simpson(f, a, m, fa, flm, fm, left, half_tol, budget)?;
    let r = adaptive_simpson(f, m, b, fm, frm, fb, right, half_tol, budget)?;
    Some(l + r)
}

/// Solve for the symmetric window `[-a, +a]` whose closed-form pulse area
/// equals `theta_target`, by bisection on the monotone area function.
///
/// Fails with [`Error::InfeasibleTarget`] when the target is at or above
/// the full-transit area, and [`Error::InvalidArgument`] for a
/// nonpositive target.
pub fn solve_symmetric_window(
    params: &CavityParams,
    atom_index: usize,
    theta_target: f64,
) -> Result<PulseWindow> {
    if !theta_target.is_finite() || theta_target <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "theta_target must be positive and finite, got {theta_target}"
        )));
    }
    let max_area = params.full_transit_area();
    if theta_target >= max_area {
        return Err(Error::InfeasibleTarget {
            atom_index,
            theta: theta_target,
            max_area,
        });
    }

    let area_of = |a: f64| pulse_area_closed(params, -a, a);

    // Bracket the half-width, then bisect to floating-point convergence.
    let mut hi = params.waist;
    while area_of(hi) < theta_target {
        hi *= 2.0;
    }
    let mut lo = 0.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if area_of(mid) < theta_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);

    debug_assert!({
        let achieved = area_of(a);
        (achieved - theta_target).abs() <= WINDOW_SOLVE_REL_TOL * theta_target
    });

    Ok(PulseWindow {
        atom_index,
        r_start: -a,
        r_end: a,
        duration: 2.0 * a / params.velocity,
        target_area: theta_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn coupling_peaks_at_center() {
        let p = CavityParams::default();
        assert_eq!(coupling_at(&p, 0.0), p.omega0);
    }

    #[test]
    fn coupling_drops_to_inverse_e_at_waist() {
        let p = CavityParams::default();
        let expected = p.omega0 * (-1.0_f64).exp();
        assert_relative_eq!(coupling_at(&p, p.waist), expected, max_relative = 1e-15);
        // 2pi x 17.29 kHz for the default setup
        assert_abs_diff_eq!(
            coupling_at(&p, p.waist) / (2.0 * PI),
            17290.33373505779,
            epsilon = 1e-6
        );
    }

    #[test]
    fn coupling_is_even() {
        let p = CavityParams::default();
        for i in 0..100 {
            let r = 1e-4 * i as f64;
            assert_eq!(coupling_at(&p, r), coupling_at(&p, -r));
        }
    }

    #[test]
    fn empty_interval_has_zero_area() {
        let p = CavityParams::default();
        assert_eq!(pulse_area_closed(&p, 1e-3, 1e-3), 0.0);
        assert_eq!(pulse_area_numeric(&p, 1e-3, 1e-3, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn full_transit_area_matches_gaussian_integral() {
        // Ω₀ √π w / v for the default parameters; frozen from an
        // independent evaluation of the Gaussian integral.
        let p = CavityParams::default();
        assert_abs_diff_eq!(p.full_transit_area(), 6.281073980426165, epsilon = 1e-12);
        // erf saturates: ±10 w covers the whole mode
        let wide = pulse_area_closed(&p, -10.0 * p.waist, 10.0 * p.waist);
        assert_relative_eq!(wide, p.full_transit_area(), max_relative = 1e-15);
    }

    #[test]
    fn three_waist_window_is_nearly_full_transit() {
        let p = CavityParams::default();
        let area = pulse_area_closed(&p, -3.0 * p.waist, 3.0 * p.waist);
        // erf(3) ≈ 0.99998
        assert_relative_eq!(area, p.full_transit_area(), max_relative = 1e-4);
    }

    #[test]
    fn closed_matches_numeric_on_paper_window() {
        let p = CavityParams::default();
        let closed = pulse_area_closed(&p, -1.35e-3, 1.35e-3);
        let numeric = pulse_area_numeric(&p, -1.35e-3, 1.35e-3, 1e-13).unwrap();
        assert_relative_eq!(closed, numeric, max_relative = 1e-10);
    }

    #[test]
    fn area_is_additive() {
        let p = CavityParams::default();
        let (a, b, c) = (-2.3e-3, 0.4e-3, 5.1e-3);
        let split = pulse_area_closed(&p, a, b) + pulse_area_closed(&p, b, c);
        assert_relative_eq!(split, pulse_area_closed(&p, a, c), max_relative = 1e-12);
    }

    #[test]
    fn quadrature_rejects_bad_arguments() {
        let p = CavityParams::default();
        assert!(matches!(
            pulse_area_numeric(&p, 0.0, 1e-3, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            pulse_area_numeric(&p, 1e-3, 0.0, 1e-12),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pi_half_window_matches_worked_example() {
        // Frozen by inverting erf(a/w) = (π/2) / (Ω₀√π w/v): a ≈ 1.352 mm,
        // duration ≈ 5.41 μs.
        let p = CavityParams::default();
        let win = solve_symmetric_window(&p, 1, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(win.r_end, 1.3523424542607036e-3, epsilon = 1e-9);
        assert_abs_diff_eq!(win.duration, 5.4093698170428145e-6, epsilon = 1e-12);
        assert_eq!(win.r_start, -win.r_end);
        assert_eq!(win.atom_index, 1);
        // achieved area reproduces the target
        let achieved = pulse_area_closed(&p, win.r_start, win.r_end);
        assert_relative_eq!(achieved, FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn second_atom_window() {
        // θ = π/(2√2) → a ≈ 0.949 mm, duration ≈ 3.79 μs (frozen from the
        // same erf inversion, cross-checked by quadrature below).
        let p = CavityParams::default();
        let theta = FRAC_PI_2 / 2.0_f64.sqrt();
        let win = solve_symmetric_window(&p, 2, theta).unwrap();
        assert_abs_diff_eq!(win.r_end, 9.481347883743122e-4, epsilon = 1e-9);
        assert_abs_diff_eq!(win.duration, 3.7925391534972487e-6, epsilon = 1e-12);
        let numeric = pulse_area_numeric(&p, win.r_start, win.r_end, 1e-13).unwrap();
        assert_relative_eq!(numeric, theta, max_relative = 1e-10);
    }

    #[test]
    fn infeasible_target_is_rejected() {
        let p = CavityParams::default();
        // 7 rad > 6.281 rad full-transit maximum
        match solve_symmetric_window(&p, 1, 7.0) {
            Err(Error::InfeasibleTarget {
                atom_index,
                theta,
                max_area,
            }) => {
                assert_eq!(atom_index, 1);
                assert_eq!(theta, 7.0);
                assert_abs_diff_eq!(max_area, 6.281073980426165, epsilon = 1e-12);
            }
            other => panic!("expected InfeasibleTarget, got {other:?}"),
        }
        assert!(matches!(
            solve_symmetric_window(&p, 1, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            solve_symmetric_window(&p, 1, -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn duration_grows_with_target_area() {
        let p = CavityParams::default();
        let mut last = 0.0;
        for k in 1..=20 {
            let theta = 0.3 * k as f64;
            let win = solve_symmetric_window(&p, 1, theta).unwrap();
            assert!(win.duration > last);
            last = win.duration;
        }
    }

    #[test]
    fn param_validation() {
        assert!(CavityParams::new(0.0, 6e-3, 500.0, 0.1, 1e-6, 1e-5).is_err());
        assert!(CavityParams::new(1.0, 6e-3, 500.0, 0.1, -1e-6, 1e-5).is_err());
        assert!(CavityParams::new(1.0, f64::NAN, 500.0, 0.1, 1e-6, 1e-5).is_err());
        assert!(CavityParams::new(1.0, 6e-3, 500.0, 0.1, 0.0, 1e-5).is_ok());
    }
}
