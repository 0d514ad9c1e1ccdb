//! Schedule compilation and the ideal (noise-free) protocol run.
//!
//! Building |N⟩ takes N excited atoms in sequence; atom n gets the pulse
//! area π/(2√n), which makes its emission probability exactly one. The
//! compiler solves each area for a symmetric Stark window centered in the
//! atom's transit slot and checks that window plus switching margins fit.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use crate::error::{Error, Result};
use crate::hilbert::{
    fock_fidelity, jc_propagate, EmissionKraus, FieldDensityMatrix, JointState,
};
use crate::mode_profile::{solve_symmetric_window, CavityParams, PulseWindow};

/// Pulse area that empties atom n's excitation into the field with
/// certainty when it meets exactly n−1 photons: π/(2√n).
pub fn target_area(atom_index: usize) -> f64 {
    FRAC_PI_2 / (atom_index as f64).sqrt()
}

/// Compiled injection plan for one run: per-atom windows on the slot grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    params: CavityParams,
    n_target: usize,
    windows: Vec<PulseWindow>,
    injection_times: Vec<f64>,
    total_time: f64,
}

impl Schedule {
    /// Degenerate schedule with no atoms; running it leaves the vacuum
    /// untouched.
    pub fn empty(params: CavityParams) -> Self {
        Schedule {
            params,
            n_target: 0,
            windows: Vec::new(),
            injection_times: Vec::new(),
            total_time: 0.0,
        }
    }

    pub fn params(&self) -> &CavityParams {
        &self.params
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn windows(&self) -> &[PulseWindow] {
        &self.windows
    }

    /// Entry time of each atom; atom i enters as atom i−1 exits.
    pub fn injection_times(&self) -> &[f64] {
        &self.injection_times
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Absolute Stark-on/off times of window `idx` (0-based). The window
    /// is centered in its slot, so the atom crosses the axis mid-slot.
    pub fn window_times(&self, idx: usize) -> (f64, f64) {
        let w = &self.windows[idx];
        let axis_crossing = self.injection_times[idx] + 0.5 * self.params.tau_bar;
        (
            axis_crossing + w.r_start / self.params.velocity,
            axis_crossing + w.r_end / self.params.velocity,
        )
    }

    /// Flat text serialization: a parameter header line, then one window
    /// per line as `atom_index theta_rad r_start_m r_end_m t_on_s t_off_s`.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# fockgen schedule n_target={} omega0_rad_s={:.11e} waist_m={:.11e} \
             velocity_m_s={:.11e} t_cav_s={:.11e} t_switch_s={:.11e} tau_bar_s={:.11e} \
             total_time_s={:.11e}",
            self.n_target,
            self.params.omega0,
            self.params.waist,
            self.params.velocity,
            self.params.t_cav,
            self.params.t_switch,
            self.params.tau_bar,
            self.total_time,
        )?;
        for (idx, w) in self.windows.iter().enumerate() {
            let (t_on, t_off) = self.window_times(idx);
            writeln!(
                out,
                "{} {:.11e} {:.11e} {:.11e} {:.11e} {:.11e}",
                w.atom_index, w.target_area, w.r_start, w.r_end, t_on, t_off
            )?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to Vec");
        String::from_utf8(buf).expect("schedule text is ASCII")
    }
}

/// Time budget of a compiled schedule against cavity decoherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    /// Total generation time N·τ̄, s.
    pub total_time: f64,
    /// Decoherence time t_cav/N, s.
    pub t_d: f64,
    /// Ratio t_d / total_time.
    pub margin: f64,
    /// total_time < t_d.
    pub feasible: bool,
    /// Every gap between consecutive Stark windows is at least t_switch.
    pub switch_feasible: bool,
}

/// Compile the N-atom schedule: areas π/(2√n), symmetric windows centered
/// in consecutive τ̄ slots, total time N·τ̄.
///
/// Fails if some window cannot deliver its area
/// ([`Error::InfeasibleTarget`]) or does not fit in the slot with a
/// switching margin on both sides ([`Error::SlotOverflow`]).
pub fn compile_schedule(params: &CavityParams, n_target: usize) -> Result<Schedule> {
    params.validate()?;
    if n_target == 0 {
        return Err(Error::InvalidArgument(
            "n_target must be at least 1; use Schedule::empty for a no-op plan".into(),
        ));
    }
    let mut windows = Vec::with_capacity(n_target);
    let mut injection_times = Vec::with_capacity(n_target);
    for atom in 1..=n_target {
        let window = solve_symmetric_window(params, atom, target_area(atom))?;
        if window.duration + 2.0 * params.t_switch > params.tau_bar {
            return Err(Error::SlotOverflow {
                atom_index: atom,
                window_s: window.duration,
                t_switch_s: params.t_switch,
                slot_s: params.tau_bar,
            });
        }
        windows.push(window);
        injection_times.push((atom - 1) as f64 * params.tau_bar);
    }
    Ok(Schedule {
        params: *params,
        n_target,
        windows,
        injection_times,
        total_time: n_target as f64 * params.tau_bar,
    })
}

/// Outcome of the noise-free protocol.
#[derive(Debug, Clone)]
pub struct IdealRun {
    /// Field state after all atoms have been traced out.
    pub field: FieldDensityMatrix,
    /// Joint (field ⊗ last atom) state along the all-emissions branch;
    /// `None` for an empty schedule.
    pub final_joint: Option<JointState>,
    /// Emission probability of each atom, conditioned on all previous
    /// emissions.
    pub per_step_emission: Vec<f64>,
}

/// Run the compiled schedule on the vacuum with exact per-atom channels.
///
/// With the π/(2√n) areas every atom emits with certainty, so the field
/// ends in |N⟩ and [`fock_fidelity`] of the result is 1 (to round-off).
pub fn run_ideal(schedule: &Schedule) -> Result<IdealRun> {
    let n = schedule.n_target;
    let mut field = FieldDensityMatrix::vacuum(n);
    let mut success = FieldDensityMatrix::vacuum(n);
    let mut success_trace = 1.0;
    let mut joint: Option<JointState> = None;
    let mut per_step_emission = Vec::with_capacity(n);

    for window in &schedule.windows {
        let kraus = EmissionKraus::new(n, window.target_area);
        field = kraus.apply(&field)?;
        success = kraus.apply_emit(&success)?;
        let trace = success.trace();
        per_step_emission.push(trace / success_trace);
        success_trace = trace;

        // Pure-state record along the all-|g⟩ branch.
        let state = match joint.take() {
            None => JointState::fresh_excited(n),
            Some(prev) => prev.reload_excited(),
        };
        joint = Some(jc_propagate(&state, window.target_area)?);
    }

    Ok(IdealRun {
        field,
        final_joint: joint,
        per_step_emission,
    })
}

/// Compare the schedule's total time against the decoherence budget
/// t_d = t_cav / N and check the switching gaps between windows.
pub fn decoherence_budget(params: &CavityParams, schedule: &Schedule) -> BudgetReport {
    let total_time = schedule.total_time;
    let t_d = params.t_cav / schedule.n_target as f64;
    let switch_feasible = (1..schedule.windows.len()).all(|i| {
        let (_, prev_off) = schedule.window_times(i - 1);
        let (next_on, _) = schedule.window_times(i);
        next_on - prev_off >= params.t_switch
    });
    BudgetReport {
        total_time,
        t_d,
        margin: t_d / total_time,
        feasible: total_time < t_d,
        switch_feasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn six_atoms_take_sixty_microseconds() {
        let params = CavityParams::default();
        let schedule = compile_schedule(&params, 6).unwrap();
        assert_eq!(schedule.windows().len(), 6);
        assert_abs_diff_eq!(schedule.total_time(), 60e-6, epsilon = 1e-18);
        let report = decoherence_budget(&params, &schedule);
        assert_abs_diff_eq!(report.t_d, 20.5e-3, epsilon = 1e-12);
        assert!(report.feasible);
        assert!(report.switch_feasible);
    }

    #[test]
    fn single_atom_schedule_matches_worked_example() {
        let params = CavityParams::default();
        let schedule = compile_schedule(&params, 1).unwrap();
        let w = &schedule.windows()[0];
        assert_abs_diff_eq!(w.target_area, std::f64::consts::FRAC_PI_2, epsilon = 0.0);
        assert_abs_diff_eq!(w.duration, 5.4093698170428145e-6, epsilon = 1e-12);
    }

    #[test]
    fn areas_follow_inverse_sqrt_and_durations_decrease() {
        let params = CavityParams::default();
        let schedule = compile_schedule(&params, 3).unwrap();
        for (i, w) in schedule.windows().iter().enumerate() {
            let n = i + 1;
            assert_eq!(w.atom_index, n);
            assert_eq!(w.target_area, target_area(n));
        }
        assert!(schedule.windows()[0].duration > schedule.windows()[1].duration);
        assert!(schedule.windows()[1].duration > schedule.windows()[2].duration);
    }

    #[test]
    fn injection_grid_is_uniform() {
        let params = CavityParams::default();
        let schedule = compile_schedule(&params, 5).unwrap();
        let times = schedule.injection_times();
        for (i, t) in times.iter().enumerate() {
            assert_abs_diff_eq!(*t, i as f64 * params.tau_bar, epsilon = 1e-18);
        }
    }

    #[test]
    fn short_slot_overflows() {
        let params = CavityParams {
            tau_bar: 2e-6,
            ..CavityParams::default()
        };
        // the π/2 window alone takes 5.41 μs
        match compile_schedule(&params, 6) {
            Err(Error::SlotOverflow { atom_index: 1, .. }) => {}
            other => panic!("expected SlotOverflow for atom 1, got {other:?}"),
        }
    }

    #[test]
    fn n_zero_is_rejected_by_compile() {
        assert!(matches!(
            compile_schedule(&CavityParams::default(), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ideal_run_reaches_unit_fidelity() {
        let params = CavityParams::default();
        for n in 1..=10 {
            let schedule = compile_schedule(&params, n).unwrap();
            let run = run_ideal(&schedule).unwrap();
            let f = fock_fidelity(&run.field, n).unwrap();
            assert!((f - 1.0).abs() < 1e-10, "N={n}: fidelity {f}");
            for p in &run.per_step_emission {
                assert!((p - 1.0).abs() < 1e-10);
            }
            // all-|g⟩ pure branch agrees with the channel route
            let joint = run.final_joint.unwrap();
            assert!((joint.amp_g()[n].norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_schedule_leaves_vacuum() {
        let schedule = Schedule::empty(CavityParams::default());
        let run = run_ideal(&schedule).unwrap();
        assert_eq!(fock_fidelity(&run.field, 0).unwrap(), 1.0);
        assert!(run.final_joint.is_none());
        assert!(run.per_step_emission.is_empty());
    }

    #[test]
    fn contrived_cavity_fails_budget() {
        let params = CavityParams {
            t_cav: 50e-6,
            ..CavityParams::default()
        };
        let schedule = compile_schedule(&params, 6).unwrap();
        let report = decoherence_budget(&params, &schedule);
        assert_abs_diff_eq!(report.t_d, 50e-6 / 6.0, epsilon = 1e-18);
        assert!(!report.feasible);
    }

    #[test]
    fn ten_atom_budget_matches_the_quoted_decoherence_time() {
        let params = CavityParams::default();
        let schedule = compile_schedule(&params, 10).unwrap();
        let report = decoherence_budget(&params, &schedule);
        assert_abs_diff_eq!(report.t_d, 12.3e-3, epsilon = 1e-12);
    }

    #[test]
    fn windows_fit_between_switches() {
        let params = CavityParams::default();
        let schedule = compile_schedule(&params, 8).unwrap();
        for i in 0..8 {
            let (t_on, t_off) = schedule.window_times(i);
            let slot_start = schedule.injection_times()[i];
            let slot_end = slot_start + params.tau_bar;
            assert!(t_on - slot_start >= params.t_switch);
            assert!(slot_end - t_off >= params.t_switch);
        }
    }

    #[test]
    fn schedule_text_round_trips_key_fields() {
        let schedule = compile_schedule(&CavityParams::default(), 2).unwrap();
        let text = schedule.to_text();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# fockgen schedule n_target=2"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 2);
        for (i, row) in rows.iter().enumerate() {
            let cols: Vec<&str> = row.split_whitespace().collect();
            assert_eq!(cols.len(), 6);
            assert_eq!(cols[0].parse::<usize>().unwrap(), i + 1);
            let theta: f64 = cols[1].parse().unwrap();
            assert_abs_diff_eq!(theta, target_area(i + 1), epsilon = 1e-12);
            let t_on: f64 = cols[4].parse().unwrap();
            let t_off: f64 = cols[5].parse().unwrap();
            assert!(t_off > t_on);
        }
    }
}
