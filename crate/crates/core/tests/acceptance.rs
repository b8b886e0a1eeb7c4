//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion misses its tolerance or its runtime budget.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use wavepacket::evolution::{closed_form_lambda, solve_lambda, uniform_grid, IntegratorOptions};
use wavepacket::grid::{phase_aligned_l2_distance, Axis};
use wavepacket::invariants::{frozen_width_det_expected, frozen_width_matrix, matrix_from_state};
use wavepacket::kernels::{apply_kernel, satisfies_kernel_odes, Direction, ProbeGrid, SymplecticParams, TdKernel, TdKernelParams};
use wavepacket::oracle::{split_step, GridState};
use wavepacket::packet::{evaluate_wavefunction, moments_from_lambda, propagate_analytic, GaussianPacket};
use wavepacket::scenario::{builtin, builtin_names};
use wavepacket::sweep::{invariant_sweep, SweepCase};
use wavepacket::system::{validate_packet, Constants, FrequencyLaw, InitialPacket, SystemSpec};
use wavepacket::wigner::{phase_space_axes, wigner_gaussian, wigner_numeric, wigner_pointmap, PhaseSpaceGrid};
use wavepacket::Moments;

/// `(label, value, lower, upper)`; a measurement passes when it lies in
/// `[lower, upper]`.
type Measure = (&'static str, f64, f64, f64);
type Outcome = Result<Vec<Measure>, String>;

fn at_most(label: &'static str, value: f64, tol: f64) -> Outcome {
    Ok(vec![(label, value, f64::NEG_INFINITY, tol)])
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn unit() -> Constants {
    Constants::default()
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn spreading() -> Outcome {
    let p = InitialPacket::new(0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let c = unit();
    let traj = solve_lambda(&SystemSpec::free(c), &p, &[0.0, 0.5, 1.0, 2.0], IntegratorOptions::default()).map_err(|e| e.to_string())?;
    let v0 = moments_from_lambda(&traj.samples[0].lambda, &c).var_x;
    let err = worst(traj.samples[1..].iter().map(|s| {
        let t = s.t();
        let expected = v0 * (1.0 + t * t);
        (moments_from_lambda(&s.lambda, &c).var_x / expected - 1.0).abs()
    }));
    at_most("max relative error", err, 1e-9)
}

fn invariant_cases() -> Vec<SweepCase> {
    let c = unit();
    let mk = |law: FrequencyLaw, a0: f64| SweepCase {
        system: SystemSpec::new(c, law).unwrap(),
        packet: InitialPacket::new(0.0, 1.0, a0).unwrap(),
        t_end: 10.0,
        dt: 1e-3,
    };
    vec![
        mk(FrequencyLaw::Free, 1.0),
        mk(FrequencyLaw::ConstantOmega { omega: 1.0 }, 1.0),
        mk(FrequencyLaw::ConstantOmega { omega: 1.0 }, 2.0),
        mk(FrequencyLaw::ModulatedOmega { omega0: 1.0, epsilon: 0.3, gamma: 1.3 }, 1.0),
    ]
}

fn symplecticity() -> Outcome {
    let results: Result<Vec<_>, _> = invariant_sweep(&invariant_cases()).into_iter().collect();
    let results = results.map_err(|e| e.to_string())?;
    at_most("max |det M - 1|", worst(results.iter().map(|r| r.max_det_drift)), 1e-9)
}

fn ermakov() -> Outcome {
    let results: Result<Vec<_>, _> = invariant_sweep(&invariant_cases()).into_iter().collect();
    let results = results.map_err(|e| e.to_string())?;
    let drift = worst(results.iter().map(|r| r.max_ermakov_rel_drift));
    let identity = worst(results.iter().map(|r| r.max_det_identity_error.unwrap_or(f64::INFINITY)));
    Ok(vec![
        ("max relative drift of I_L", drift, f64::NEG_INFINITY, 1e-8),
        ("max |det M - 2(m/a0p0)^2 I_L|", identity, f64::NEG_INFINITY, 1e-9),
    ])
}

fn frozen_width() -> Outcome {
    let free = SystemSpec::free(unit());
    let mut err: f64 = 0.0;
    for a0 in [1.0, 2.0] {
        for t in [1.0, 4.0] {
            let m = frozen_width_matrix(&free, a0, t).map_err(|e| e.to_string())?;
            if m.canonical {
                return Err("frozen-width matrix marked canonical".into());
            }
            err = err.max((m.det() - frozen_width_det_expected(a0, t)).abs());
        }
    }
    // spot values of 1 + (t/α₀²)²
    err = err.max((frozen_width_matrix(&free, 1.0, 1.0).unwrap().det() - 2.0).abs());
    err = err.max((frozen_width_matrix(&free, 1.0, 4.0).unwrap().det() - 17.0).abs());
    err = err.max((frozen_width_matrix(&free, 2.0, 4.0).unwrap().det() - 2.0).abs());
    at_most("max |det - (1 + (t/a0^2)^2)|", err, 1e-12)
}

fn uncertainty() -> Outcome {
    let mut err: f64 = 0.0;
    for name in builtin_names() {
        let cfg = builtin(name).map_err(|e| e.to_string())?;
        let sys = cfg.system_spec().map_err(|e| e.to_string())?;
        let c = cfg.constants;
        let grid = uniform_grid(cfg.time.t_end, cfg.time.dt).unwrap();
        let traj = solve_lambda(&sys, &cfg.packet, &grid, IntegratorOptions { dt: cfg.time.dt }).map_err(|e| e.to_string())?;
        for s in &traj.samples {
            let m = moments_from_lambda(&s.lambda, &c);
            err = err.max((m.determinant() - 0.25 * c.hbar * c.hbar).abs());
            let p_phi = 0.5 * c.hbar * s.lambda.alpha * s.lambda.alpha * s.lambda.phi_dot;
            err = err.max((p_phi - 0.5 * c.hbar).abs());
        }
    }
    at_most("max error of product and p_phi", err, 1e-10)
}

fn triangle() -> Outcome {
    let c = unit();
    let axis = Axis::span(-20.0, 20.0, 1024).unwrap();
    let p = InitialPacket::new(0.0, 1.0, 1.0).unwrap();
    let mut err: f64 = 0.0;
    for sys in [SystemSpec::free(c), SystemSpec::oscillator(c, 1.0).unwrap()] {
        let traj = solve_lambda(&sys, &p, &uniform_grid(1.0, 1e-3).unwrap(), IntegratorOptions::default()).map_err(|e| e.to_string())?;
        let last = traj.samples.len() - 1;
        let analytic = evaluate_wavefunction(&propagate_analytic(&traj, last).unwrap(), axis).value;
        let psi0 = evaluate_wavefunction(&GaussianPacket::initial(&p, &c).unwrap(), axis).value;
        let params = TdKernelParams::from_state(&traj.samples[last].lambda, p.alpha0, Direction::Forward).map_err(|e| e.to_string())?;
        let kernel = apply_kernel(&TdKernel::new(params, c).map_err(|e| e.to_string())?, &psi0, axis).value;
        let oracle = split_step(&GridState { grid: psi0, t: 0.0 }, &sys, 1e-3, 1000).map_err(|e| e.to_string())?.value.grid;
        for (a, b) in [(&analytic, &kernel), (&analytic, &oracle), (&kernel, &oracle)] {
            err = err.max(phase_aligned_l2_distance(a, b).map_err(|e| e.to_string())?.0);
        }
    }
    at_most("max phase-aligned L2 distance", err, 1e-5)
}

fn density(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn wigner_transport() -> Outcome {
    let c = unit();
    let axis = Axis::span(-20.0, 20.0, 1024).unwrap();
    let p = InitialPacket::new(0.0, 1.0, 1.0).unwrap();
    let (v0x, v0p) = validate_packet(&p, &c).unwrap();
    let w0 = wigner_gaussian(Moments { var_x: v0x, var_p: v0p, corr: 0.0 }, p.x0, p.p0, &c).unwrap();
    let mut err: f64 = 0.0;
    for sys in [SystemSpec::free(c), SystemSpec::oscillator(c, 1.0).unwrap()] {
        let traj = solve_lambda(&sys, &p, &uniform_grid(1.0, 1e-3).unwrap(), IntegratorOptions::default()).map_err(|e| e.to_string())?;
        let s = traj.samples.last().unwrap();
        let psi = evaluate_wavefunction(&propagate_analytic(&traj, traj.samples.len() - 1).unwrap(), axis).value;
        let m = moments_from_lambda(&s.lambda, &c);
        let (mx, mp) = (s.classical.eta, s.classical.eta_dot * c.mass);
        let (xa, pa) = phase_space_axes(mx, mp, &m, 256, 256, 8.0).unwrap();
        let num = wigner_numeric(&psi, xa, pa, &c).map_err(|e| e.to_string())?;
        if num.has_warnings() {
            return Err(format!("{:?}", num.warnings));
        }
        let num = num.value;
        let closed = wigner_gaussian(m, mx, mp, &c).map_err(|e| e.to_string())?.sample(xa, pa);
        let matrix = matrix_from_state(&s.lambda, p.alpha0).map_err(|e| e.to_string())?;
        let moved = PhaseSpaceGrid::from_fn(xa, pa, |x, q| wigner_pointmap(|x, q| w0.eval(x, q), &matrix, &c, x, q).unwrap());
        err = err.max(num.max_abs_diff(&closed).unwrap());
        err = err.max(num.max_abs_diff(&moved).unwrap());
        err = err.max((num.integral() - 1.0).abs());
        err = err.max(worst(num.marginal_x().iter().enumerate().map(|(i, v)| (v - density(xa.point(i), mx, m.var_x)).abs())));
        err = err.max(worst(num.marginal_p().iter().enumerate().map(|(j, v)| (v - density(pa.point(j), mp, m.var_p)).abs())));
    }
    at_most("max abs deviation", err, 1e-5)
}

/// Fixed parameter lattice: `a`, `b`, `d` from the tables below, `c = (ad − 1)/b`.
const LATTICE_A: [f64; 4] = [-1.2, -0.4, 0.4, 1.2];
const LATTICE_B: [f64; 5] = [0.15, -0.6, 1.1, -2.0, 0.35];
const LATTICE_D: [f64; 5] = [0.7, -0.3, 1.5, 0.0, -1.1];

fn kernel_equations() -> Outcome {
    let mut err: f64 = 0.0;
    let probe = ProbeGrid::default();
    let consts = [unit(), Constants::new(0.6, 2.0).unwrap()];
    for i in 0..20 {
        let (a, b, d) = (LATTICE_A[i % 4], LATTICE_B[i / 4], LATTICE_D[(3 * i) % 5]);
        let params = SymplecticParams::from_abd(a, b, d).map_err(|e| e.to_string())?;
        let (r1, r2) = satisfies_kernel_odes(&params, &probe, &consts[i % 2]).map_err(|e| e.to_string())?;
        err = err.max(r1).max(r2);
    }
    at_most("max residual", err, 1e-5)
}

fn oracle_order() -> Outcome {
    let c = unit();
    let p = InitialPacket::new(0.5, 1.0, 1.6).unwrap();
    let axis = Axis::span(-20.0, 20.0, 1024).unwrap();
    let sys = SystemSpec::oscillator(c, 1.0).unwrap();
    let traj = solve_lambda(&sys, &p, &uniform_grid(1.0, 1e-3).unwrap(), IntegratorOptions::default()).map_err(|e| e.to_string())?;
    let exact = evaluate_wavefunction(&propagate_analytic(&traj, traj.samples.len() - 1).unwrap(), axis).value;
    let s0 = GridState { grid: evaluate_wavefunction(&GaussianPacket::initial(&p, &c).unwrap(), axis).value, t: 0.0 };
    let e = |dt: f64, n: usize| -> Result<f64, String> {
        let out = split_step(&s0, &sys, dt, n).map_err(|e| e.to_string())?.value;
        Ok(phase_aligned_l2_distance(&out.grid, &exact).map_err(|e| e.to_string())?.0)
    };
    let ratio = e(0.01, 100)? / e(0.005, 200)?;
    Ok(vec![("error ratio dt/(dt/2)", ratio, 3.5, 4.5)])
}

fn small_omega() -> Outcome {
    let c = unit();
    let p = InitialPacket::new(0.0, 1.0, 1.0).unwrap();
    let ho = SystemSpec::oscillator(c, 1e-6).unwrap();
    let free = SystemSpec::free(c);
    let traj = solve_lambda(&ho, &p, &[0.0, 1.0], IntegratorOptions::default()).map_err(|e| e.to_string())?;
    let m_ho = matrix_from_state(&traj.samples[1].lambda, 1.0).map_err(|e| e.to_string())?;
    let m_fr = matrix_from_state(&closed_form_lambda(&free, &p, 1.0).unwrap(), 1.0).unwrap();
    let (a, b) = (m_ho.entries(), m_fr.entries());
    at_most("max entry difference", worst((0..4).map(|k| (a[k / 2][k % 2] - b[k / 2][k % 2]).abs())), 1e-5)
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "free-motion spreading law", budget: Duration::from_secs(1), run: spreading },
        Criterion { id: 2, name: "symplecticity of M(t)", budget: Duration::from_secs(5), run: symplecticity },
        Criterion { id: 3, name: "Ermakov invariant and determinant identity", budget: Duration::from_secs(5), run: ermakov },
        Criterion { id: 4, name: "frozen-width determinant", budget: Duration::from_secs(1), run: frozen_width },
        Criterion { id: 5, name: "invariant uncertainty product and p_phi", budget: Duration::from_secs(2), run: uncertainty },
        Criterion { id: 6, name: "kernel / analytic / oracle agreement", budget: Duration::from_secs(30), run: triangle },
        Criterion { id: 7, name: "Wigner transport equivalence", budget: Duration::from_secs(60), run: wigner_transport },
        Criterion { id: 8, name: "kernel defining equations", budget: Duration::from_secs(5), run: kernel_equations },
        Criterion { id: 9, name: "oracle convergence order", budget: Duration::from_secs(30), run: oracle_order },
        Criterion { id: 10, name: "small-frequency continuity", budget: Duration::from_secs(1), run: small_omega },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(measures) => {
                let ok = measures.iter().all(|&(_, v, lo, hi)| v >= lo && v <= hi) && elapsed <= c.budget;
                let parts: Vec<String> = measures
                    .iter()
                    .map(|&(label, v, lo, hi)| {
                        if lo.is_finite() {
                            format!("{label} = {v:.4} in [{lo}, {hi}]")
                        } else {
                            format!("{label} = {v:.3e} <= {hi:.0e}")
                        }
                    })
                    .collect();
                (ok, parts.join("; "))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} | {} [{:.3}s, budget {}s]",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
