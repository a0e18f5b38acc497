//! Time integration of the gradient-flow Cauchy problem
//! `x'(t) + L(x(t)) ∋ h(t)`, `x(0) = x0`.
//!
//! The default scheme is implicit Euler: each step is one resolvent solve at
//! `λ = dt` with the forcing replaced by its exact interval average, which
//! makes the discrete component-mean conservation identity hold to solver
//! tolerance. The explicit scheme advances along the minimal section of
//! `h - L(x)` and exists to validate the right-derivative formula.

use std::io::Write;

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Potential};
use crate::projection::{self, FaceProduct};
use crate::resolvent::{prox, ProxParams};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Implicit,
    Explicit,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::Implicit => "implicit",
            Scheme::Explicit => "explicit",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scheme> {
        match s {
            "implicit" => Ok(Scheme::Implicit),
            "explicit" => Ok(Scheme::Explicit),
            other => Err(Error::invalid(format!(
                "unknown scheme {other:?}; expected implicit or explicit"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub energy: f64,
    pub component_means: Vec<f64>,
    /// Resolvent residual of the step producing this state (0 for the
    /// initial state; the projection gap for explicit steps).
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Potential>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub scheme: Scheme,
    pub p: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Potential {
        self.states.last().expect("trajectory is never empty")
    }
}

/// One implicit Euler step: the resolvent at `λ = dt` of
/// `x_k + ∫ h` over the step (the exact interval average of the forcing).
/// A positive `eps_reg` solves `x + dt (εx + L(x)) ∋ x_k + ∫h` instead, via
/// the rescaled resolvent.
pub fn step_implicit(
    g: &Hypergraph,
    x_k: &[f64],
    h_integral: &[f64],
    dt: f64,
    p: f64,
    eps_reg: f64,
    params: &ProxParams,
) -> Result<(Potential, f64)> {
    let y0: Vec<f64> = x_k.iter().zip(h_integral).map(|(x, h)| x + h).collect();
    let (y, lambda) = if eps_reg > 0.0 {
        let d = 1.0 + dt * eps_reg;
        (y0.iter().map(|v| v / d).collect::<Vec<f64>>(), dt / d)
    } else {
        (y0, dt)
    };
    let res = prox(g, &y, lambda, p, params)?;
    Ok((res.x, res.residual))
}

/// One explicit Euler step along the minimal section:
/// `x_{k+1} = x_k + dt (h(t_k) - L(x_k))°`, computed by projecting `h(t_k)`
/// onto the subdifferential set at `x_k`.
pub fn step_explicit(
    g: &Hypergraph,
    x_k: &[f64],
    h_at_t: &[f64],
    dt: f64,
    p: f64,
    tol_active: f64,
) -> Result<(Potential, f64)> {
    let face = FaceProduct::at(g, x_k, p, tol_active);
    let proj = projection::project(&face, h_at_t, 1e-22, projection::default_max_iter(&face))?;
    let x_next: Vec<f64> = x_k
        .iter()
        .zip(h_at_t)
        .zip(&proj.point)
        .map(|((x, h), l)| x + dt * (h - l))
        .collect();
    Ok((x_next, proj.gap))
}

/// Integrates on the uniform grid `t_k = k T / N` with `N = round(T/dt)`.
/// `eps_reg > 0` adds the strongly monotone regularization term used by the
/// periodic solver (implicit scheme only).
pub fn integrate(
    g: &Hypergraph,
    x0: &[f64],
    h: &Signal,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
    p: f64,
    eps_reg: f64,
    params: &ProxParams,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("T and dt must be positive"));
    }
    if dt > t_end {
        return Err(Error::invalid("dt must not exceed T"));
    }
    if x0.len() != g.vertex_count() {
        return Err(Error::invalid("initial datum length does not match vertex count"));
    }
    h.check_dim(g.vertex_count())?;
    if eps_reg > 0.0 && scheme == Scheme::Explicit {
        return Err(Error::invalid("the regularized flow uses the implicit scheme"));
    }
    let n = g.vertex_count();
    let steps = ((t_end / dt).round() as usize).max(1);
    let partition = g.connected_components();

    let mut times = Vec::with_capacity(steps + 1);
    let mut states: Vec<Potential> = Vec::with_capacity(steps + 1);
    let mut diagnostics = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.to_vec());
    diagnostics.push(StepDiagnostics {
        energy: crate::energy::energy(g, x0, p),
        component_means: partition.component_means(x0),
        residual: 0.0,
    });

    for k in 0..steps {
        let t0 = t_end * k as f64 / steps as f64;
        let t1 = if k + 1 == steps {
            t_end
        } else {
            t_end * (k + 1) as f64 / steps as f64
        };
        let x_k = states.last().unwrap();
        let (x_next, residual) = match scheme {
            Scheme::Implicit => {
                let hint = h.integral(t0, t1, n);
                step_implicit(g, x_k, &hint, t1 - t0, p, eps_reg, params)?
            }
            Scheme::Explicit => {
                let hval = h.eval(t0, n);
                let tol = crate::energy::default_active_tol(x_k);
                step_explicit(g, x_k, &hval, t1 - t0, p, tol)?
            }
        };
        times.push(t1);
        diagnostics.push(StepDiagnostics {
            energy: crate::energy::energy(g, &x_next, p),
            component_means: partition.component_means(&x_next),
            residual,
        });
        states.push(x_next);
    }
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        scheme,
        p,
    })
}

/// Solves the Cauchy problem on `[0, T]`.
pub fn solve_cauchy(
    g: &Hypergraph,
    x0: &[f64],
    h: &Signal,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
    p: f64,
    params: &ProxParams,
) -> Result<Trajectory> {
    integrate(g, x0, h, t_end, dt, scheme, p, 0.0, params)
}

/// Upper bound on `X(t) = |x(t) - x̄_0|²` for the unforced flow, by exponent
/// branch: algebraic decay with finite extinction for `p < 2`, exponential
/// for `p = 2`, algebraic for `p > 2`.
pub fn decay_envelope(x0_sq: f64, p: f64, c: f64, t: f64) -> f64 {
    if x0_sq <= 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        x0_sq * (-2.0 * t / c).exp()
    } else if p < 2.0 {
        let base = x0_sq.powf((2.0 - p) / 2.0) - (2.0 - p) * t / c;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(2.0 / (2.0 - p))
        }
    } else {
        let base = x0_sq.powf(-(p - 2.0) / 2.0) + (p - 2.0) * t / c;
        base.powf(-2.0 / (p - 2.0))
    }
}

/// Lower bound on `X(t)` from the coarse per-edge estimate
/// `f_e(x) ≤ √n |x - x̄_0|`, which gives `X' ≥ -K X^{p/2}` with
/// `K = 2 p (#E) n^(p/2) max_e w(e)`; same ODE shapes as the upper envelope
/// with the larger constant.
pub fn lower_envelope(x0_sq: f64, p: f64, t: f64, n: usize, num_edges: usize, max_w: f64) -> f64 {
    if x0_sq <= 0.0 {
        return 0.0;
    }
    let k = 2.0 * p * num_edges as f64 * (n as f64).powf(p / 2.0) * max_w;
    if p == 2.0 {
        x0_sq * (-k * t).exp()
    } else if p < 2.0 {
        let base = x0_sq.powf((2.0 - p) / 2.0) - (2.0 - p) * k * t / 2.0;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(2.0 / (2.0 - p))
        }
    } else {
        let base = x0_sq.powf(-(p - 2.0) / 2.0) + (p - 2.0) * k * t / 2.0;
        base.powf(-2.0 / (p - 2.0))
    }
}

/// Extinction time of the upper envelope for `p < 2`.
pub fn extinction_time(x0_sq: f64, p: f64, c: f64) -> f64 {
    debug_assert!(p < 2.0);
    c * x0_sq.powf((2.0 - p) / 2.0) / (2.0 - p)
}

/// Closed-form solution of the unforced 4-vertex instance
/// (`E = {V}`, `w ≡ 1`, `p = 2`, `x0 = (2, 1, -1, -2)`): the extremes decay
/// at rate 2 until they absorb the middles at `t0 = ln(2)/2`, after which
/// all four decay together at rate 1.
pub fn reference_solution_4vertex(t: f64) -> Potential {
    let t0 = 0.5 * std::f64::consts::LN_2;
    if t <= t0 {
        let a = 2.0 * (-2.0 * t).exp();
        vec![a, 1.0, -1.0, -a]
    } else {
        let a = std::f64::consts::SQRT_2 * (-t).exp();
        vec![a, a, -a, -a]
    }
}

/// First grid time at which any edge's active sets differ from the previous
/// node's (an active-set merge or swap), or None.
pub fn first_active_set_change(g: &Hypergraph, traj: &Trajectory, tol_rel: f64) -> Option<f64> {
    let mut prev: Option<Vec<(Vec<usize>, Vec<usize>)>> = None;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let tol = tol_rel * (1.0 + x.iter().fold(0.0_f64, |a, &v| a.max(v.abs())));
        let sets: Vec<(Vec<usize>, Vec<usize>)> = (0..g.edge_count())
            .map(|e| {
                let f = crate::energy::edge_face(g, x, e, tol);
                (f.argmax, f.argmin)
            })
            .collect();
        if let Some(p) = &prev {
            if *p != sets {
                return Some(*t);
            }
        }
        prev = Some(sets);
    }
    None
}

/// CSV with header `t,x_1,...,x_n,energy,residual`, one row per grid node,
/// 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    let n = traj.states[0].len();
    write!(out, "t")?;
    for i in 1..=n {
        write!(out, ",x_{i}")?;
    }
    writeln!(out, ",energy,residual")?;
    for ((t, x), d) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        write!(out, "{t:.16e}")?;
        for v in x {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out, ",{:.16e},{:.16e}", d.energy, d.residual)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::{l2_dist, linf_dist};

    fn four_vertex() -> Hypergraph {
        Hypergraph::new(4, vec![(vec![0, 1, 2, 3], 1.0)]).unwrap()
    }

    #[test]
    fn implicit_step_keeps_constants() {
        let g = four_vertex();
        let x = [0.4; 4];
        let (x1, _) =
            step_implicit(&g, &x, &[0.0; 4], 0.01, 2.0, 0.0, &ProxParams::default()).unwrap();
        assert!(l2_dist(&x1, &x) < 1e-12);
    }

    #[test]
    fn implicit_step_matches_resolvent_closed_form() {
        let g = four_vertex();
        let x = [2.0, 1.0, -1.0, -2.0];
        let dt = 0.25;
        let (x1, _) = step_implicit(&g, &x, &[0.0; 4], dt, 2.0, 0.0, &ProxParams::default()).unwrap();
        let want = crate::resolvent::four_vertex_prox_reference(dt);
        assert!(l2_dist(&x1, &want) < 1e-9);
    }

    #[test]
    fn explicit_step_examples() {
        let g = four_vertex();
        // On the symmetric state the minimal section is the state itself.
        let x = [1.0, 1.0, -1.0, -1.0];
        let dt = 0.125;
        let (x1, _) = step_explicit(&g, &x, &[0.0; 4], dt, 2.0, 1e-9).unwrap();
        let want: Vec<f64> = x.iter().map(|v| v - dt * v).collect();
        assert!(l2_dist(&x1, &want) < 1e-9);
        // Singleton face: only the extremes move.
        let x = [2.0, 1.0, -1.0, -2.0];
        let (x1, _) = step_explicit(&g, &x, &[0.0; 4], dt, 2.0, 1e-9).unwrap();
        assert!(l2_dist(&x1, &[2.0 - 4.0 * dt, 1.0, -1.0, -2.0 + 4.0 * dt]) < 1e-9);
        // Constants stay put for p > 1.
        let x = [0.3; 4];
        let (x1, _) = step_explicit(&g, &x, &[0.0; 4], dt, 2.0, 1e-9).unwrap();
        assert!(l2_dist(&x1, &x) < 1e-15);
    }

    #[test]
    fn cauchy_zero_eigenspace_is_stationary() {
        let g = Hypergraph::new(4, vec![(vec![0, 1], 1.0), (vec![2, 3], 1.0)]).unwrap();
        let part = g.connected_components();
        let x0 = part.piecewise_constant(&[2.0, -0.5]);
        for scheme in [Scheme::Implicit, Scheme::Explicit] {
            let traj = solve_cauchy(
                &g,
                &x0,
                &Signal::Zero,
                0.5,
                0.05,
                scheme,
                2.0,
                &ProxParams::default(),
            )
            .unwrap();
            for s in &traj.states {
                assert!(l2_dist(s, &x0) < 1e-10);
            }
        }
    }

    #[test]
    fn cauchy_tracks_reference_solution() {
        let g = four_vertex();
        let dt = 1e-2;
        let traj = solve_cauchy(
            &g,
            &[2.0, 1.0, -1.0, -2.0],
            &Signal::Zero,
            1.0,
            dt,
            Scheme::Implicit,
            2.0,
            &ProxParams::default(),
        )
        .unwrap();
        let mut worst = 0.0_f64;
        for (t, x) in traj.times.iter().zip(&traj.states) {
            worst = worst.max(linf_dist(x, &reference_solution_4vertex(*t)));
        }
        assert!(worst < 5.0 * dt, "worst error {worst}");
    }

    #[test]
    fn implicit_energy_never_increases_without_forcing() {
        let g = Hypergraph::new(
            5,
            vec![(vec![0, 1, 2], 0.8), (vec![1, 3], 1.4), (vec![2, 3, 4], 0.3)],
        )
        .unwrap();
        let traj = solve_cauchy(
            &g,
            &[0.9, -0.3, 0.1, 0.7, -1.2],
            &Signal::Zero,
            1.0,
            0.02,
            Scheme::Implicit,
            1.5,
            &ProxParams::default(),
        )
        .unwrap();
        for w in traj.diagnostics.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-10);
        }
    }

    #[test]
    fn reference_solution_boundary_values() {
        assert_eq!(reference_solution_4vertex(0.0), vec![2.0, 1.0, -1.0, -2.0]);
        let t0 = 0.5 * std::f64::consts::LN_2;
        // Both branches meet at (1, 1, -1, -1).
        let before = reference_solution_4vertex(t0);
        let after = reference_solution_4vertex(t0 + 1e-15);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((before[0] - 1.0).abs() < 1e-12);
        assert!((before[1] - 1.0).abs() < 1e-12);
        let far = reference_solution_4vertex(40.0);
        assert!(far.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn envelope_shapes() {
        // p = 2 at t = 0 returns X0.
        assert_eq!(decay_envelope(3.0, 2.0, 64.0, 0.0), 3.0);
        assert_eq!(lower_envelope(3.0, 2.0, 0.0, 4, 1, 1.0), 3.0);
        // p = 1 extinguishes exactly at C sqrt(X0).
        let (x0, c) = (2.25, 12.0);
        let t_star = extinction_time(x0, 1.0, c);
        assert!((t_star - c * x0.sqrt()).abs() < 1e-12);
        assert!(decay_envelope(x0, 1.0, c, t_star) <= 1e-28);
        assert_eq!(decay_envelope(x0, 1.0, c, t_star * 1.0000001), 0.0);
        // p = 3 decreases but never reaches zero.
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let v = decay_envelope(1.5, 3.0, 10.0, k as f64);
            assert!(v > 0.0 && v <= prev);
            prev = v;
        }
        // p = 2 lower-envelope closed form.
        let v = lower_envelope(1.5, 2.0, 0.3, 4, 2, 1.25);
        let k = 2.0 * 2.0 * 2.0 * 4.0 * 1.25;
        assert!((v - 1.5 * (-k * 0.3_f64).exp()).abs() < 1e-12);
        // The lower envelope sits below the upper one.
        for k in 0..=20 {
            let t = 0.1 * k as f64;
            let lo = lower_envelope(1.5, 1.5, t, 4, 2, 1.25);
            let hi = decay_envelope(1.5, 1.5, 90.0, t);
            assert!(lo <= hi + 1e-12);
        }
    }

    #[test]
    fn csv_shape_and_determinism() {
        let g = four_vertex();
        let traj = solve_cauchy(
            &g,
            &[2.0, 1.0, -1.0, -2.0],
            &Signal::Zero,
            0.1,
            0.05,
            Scheme::Implicit,
            2.0,
            &ProxParams::default(),
        )
        .unwrap();
        let mut a = Vec::new();
        write_trajectory_csv(&traj, &mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,x_2,x_3,x_4,energy,residual");
        assert_eq!(text.lines().count(), 1 + traj.times.len());
        let mut b = Vec::new();
        write_trajectory_csv(&traj, &mut b).unwrap();
        assert_eq!(text.as_bytes(), b.as_slice());
    }

    #[test]
    fn merge_detection_on_paper_instance() {
        let g = four_vertex();
        let dt = 1e-3;
        let traj = solve_cauchy(
            &g,
            &[2.0, 1.0, -1.0, -2.0],
            &Signal::Zero,
            0.6,
            dt,
            Scheme::Implicit,
            2.0,
            &ProxParams::default(),
        )
        .unwrap();
        let t_merge = first_active_set_change(&g, &traj, 1e-9).unwrap();
        let t0 = 0.5 * std::f64::consts::LN_2;
        assert!(
            (t_merge - t0).abs() <= 2.0 * dt,
            "merge at {t_merge}, expected near {t0}"
        );
    }
}
