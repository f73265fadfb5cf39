//! One function per subcommand. Sweeps run on the supplied pool and are
//! collected in grid order.

use crss_core::crss::{
    ansatz_minimal_infidelity, gaussian_moments, proximity_error_analytic, r_threshold, truncation_points, CrssAnsatz, CrssParams,
    LogCoefficients,
};
use crss_core::numeric::linear_fit;
use crss_core::observables::{
    exact_squeezing_minimum, lowering_variance, optimal_dipole_quadrature, optimal_squeezing, squeezing_parameter,
    steady_state_xi_sq,
};
use crss_core::spin::{build_operators, Spin, SpinExpectation};
use crss_core::superradiance::{
    crss_amplitude, critical_drive, steady_state_general, steady_state_resonant, steadystate_infidelity,
    DensityMatrix, DriveParams, SteadyStateOptions,
};
use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::output::{Cell, CommandResult, Table};
use crate::{invalid, Command, LabError, Mode, Params, Result};

const DEFAULT_R_STEP: f64 = 0.02;
const DEFAULT_R_MAX: f64 = 0.98;
const UNDERFLOW: f64 = 1e-14;

pub fn dispatch(command: &Command, p: &mut Params, pool: &ThreadPool) -> Result<CommandResult> {
    match command {
        Command::Coeffs { .. } => coeffs(p),
        Command::Errormap => errormap(p, pool),
        Command::SqueezeScan => squeeze_scan(p, pool),
        Command::Minsqueeze => minsqueeze(p, pool),
        Command::Infidelity => infidelity(p, pool),
        Command::SteadyState => steady_state(p),
        Command::Observables => observables(p),
    }
}

fn spin_of(j: f64) -> Result<Spin> {
    let twice = 2.0 * j;
    if !(twice >= 1.0) || twice.fract() != 0.0 || twice > u32::MAX as f64 {
        return invalid(format!("j = {j} must be a positive integer or half-integer"));
    }
    Ok(Spin::from_twice(twice as u32)?)
}

fn require(value: Option<f64>, flag: &str) -> Result<f64> {
    value.ok_or_else(|| LabError::Invalid(format!("--{flag} is required")))
}

fn check_open_unit(r: f64, flag: &str) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return invalid(format!("--{flag} = {r} must lie in (0, 1)"));
    }
    Ok(())
}

/// `r_min, r_min + step, ...` up to `r_max`, as exact multiples of the step.
pub fn r_grid(p: &mut Params) -> Result<Vec<f64>> {
    let step = *p.r_step.get_or_insert(DEFAULT_R_STEP);
    let lo = *p.r_min.get_or_insert(step);
    let hi = *p.r_max.get_or_insert(DEFAULT_R_MAX);
    if !(step > 0.0) {
        return invalid(format!("--r-step = {step} must be positive"));
    }
    check_open_unit(lo, "r-min")?;
    check_open_unit(hi, "r-max")?;
    if hi < lo {
        return invalid(format!("--r-max {hi} below --r-min {lo}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

fn j_list(p: &mut Params, default: &[f64]) -> Result<Vec<(f64, Spin)>> {
    let list = p.j_list.get_or_insert_with(|| default.to_vec()).clone();
    list.into_iter().map(|j| Ok((j, spin_of(j)?))).collect()
}

fn gamma_of(p: &mut Params) -> Result<f64> {
    let g = *p.gamma.get_or_insert(1.0);
    if !(g > 0.0) {
        return invalid(format!("--gamma = {g} must be positive"));
    }
    Ok(g)
}

fn liouvillian_options(p: &Params) -> SteadyStateOptions {
    let mut opts = SteadyStateOptions::default();
    if let Some(cap) = p.liouvillian_j_cap {
        opts.j_cap = cap;
    }
    opts
}

fn first_error<T>(results: Vec<crss_core::Result<T>>) -> Result<Vec<T>> {
    results.into_iter().map(|r| r.map_err(LabError::from)).collect()
}

fn coeffs(p: &mut Params) -> Result<CommandResult> {
    let j = require(p.j, "j")?;
    let r = require(p.r, "r")?;
    let phi = *p.phi.get_or_insert(0.0);
    let spin = spin_of(j)?;
    check_open_unit(r, "r")?;
    let mut out = CommandResult::default();
    if p.normalized.unwrap_or(false) {
        let ansatz = CrssAnsatz::new(CrssParams::new(spin, r, phi)?)?;
        let g = gaussian_moments(spin, r)?;
        if !g.valid {
            out.notes.push("sqrt(1-r^2) j^(1/3) < 1: Gaussian profile outside its validity range".into());
        }
        let mut t = Table::new("coeffs.csv", &["m", "abs_am", "gaussian_fit"]);
        for (i, a) in ansatz.state().amps().iter().enumerate() {
            let m = spin.m(i);
            t.push(vec![Cell::Exact(m), a.norm().into(), g.density(m).sqrt().into()]);
        }
        out.tables.push(t);
    } else {
        let c = LogCoefficients::new(spin, r, phi)?;
        let tp = truncation_points(spin, r)?;
        out.notes.push(format!("truncation points m_- = {}, m_+ = {}", tp.m_minus(), tp.m_plus()));
        let mut t = Table::new("coeffs.csv", &["m", "abs_ratio", "ln_abs_ratio"]);
        for (i, f) in c.f().iter().enumerate() {
            t.push(vec![Cell::Exact(spin.m(i)), f.exp().into(), (*f).into()]);
        }
        out.tables.push(t);
    }
    Ok(out)
}

fn errormap(p: &mut Params, pool: &ThreadPool) -> Result<CommandResult> {
    let default: Vec<f64> = (1..=20).map(|k| 10.0 * k as f64).collect();
    let js = j_list(p, &default)?;
    let rs = r_grid(p)?;
    let cells: Vec<(f64, Spin, f64)> = js.iter().flat_map(|&(j, s)| rs.iter().map(move |&r| (j, s, r))).collect();
    let values: Vec<[f64; 2]> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(_, spin, r)| {
                let num = CrssParams::new(spin, r, 0.0)
                    .and_then(CrssAnsatz::new)
                    .map(|a| a.error().ln_epsilon)
                    .unwrap_or(f64::NAN);
                let ana = proximity_error_analytic(spin, r).map(|e| e.ln_epsilon).unwrap_or(f64::NAN);
                [num, ana]
            })
            .collect()
    });
    let mut out = CommandResult::default();
    let mut map = Table::new("errormap.csv", &["j", "r", "eps_numeric", "eps_analytic", "ln_eps_numeric", "ln_eps_analytic"]);
    for (&(j, _, r), v) in cells.iter().zip(&values) {
        out.warnings += v.iter().filter(|x| x.is_nan()).count() as u64;
        map.push(vec![Cell::Exact(j), r.into(), v[0].exp().into(), v[1].exp().into(), v[0].into(), v[1].into()]);
    }
    let thresholds = pool.install(|| js.par_iter().map(|&(_, s)| r_threshold(s)).collect::<Vec<_>>());
    let mut trace = Table::new("rj.csv", &["j", "r_j", "r_j_asymptotic", "bracketed"]);
    for (&(j, _), t) in js.iter().zip(thresholds) {
        match t {
            Ok(t) => trace.push(vec![
                Cell::Exact(j),
                t.r_j.into(),
                t.asymptotic.into(),
                Cell::Int(t.bracketed as i64),
            ]),
            Err(_) => {
                out.warnings += 1;
                trace.push(vec![Cell::Exact(j), f64::NAN.into(), f64::NAN.into(), Cell::Int(0)]);
            }
        }
    }
    out.tables.extend([map, trace]);
    Ok(out)
}

/// Exact steady-state `ξ²` at `Ω = r Ω_c(Δ, γ)`.
fn exact_xi_sq(spin: Spin, r: f64, delta: f64, gamma: f64, opts: &SteadyStateOptions) -> crss_core::Result<f64> {
    if delta == 0.0 {
        return steady_state_xi_sq(spin, r);
    }
    let omega = r * critical_drive(spin.n_atoms(), delta, gamma);
    let drive = DriveParams::new(Complex64::new(omega, 0.0), delta, gamma)?;
    let rho = steady_state_general(spin, &drive, opts)?;
    Ok(squeezing_parameter(&rho)?.xi_sq)
}

fn squeeze_scan(p: &mut Params, pool: &ThreadPool) -> Result<CommandResult> {
    let j = *p.j.get_or_insert(25.0);
    let spin = spin_of(j)?;
    let delta = *p.delta.get_or_insert(0.0);
    let gamma = gamma_of(p)?;
    let opts = liouvillian_options(p);
    if delta != 0.0 && j > opts.j_cap {
        return invalid(format!("--delta != 0 needs j <= {} (vectorized Liouvillian cap)", opts.j_cap));
    }
    let rs = r_grid(p)?;
    let r_j = r_threshold(spin)?.r_j;
    let mut points = rs.clone();
    points.push(r_j);
    let xi = first_error(pool.install(|| points.par_iter().map(|&r| exact_xi_sq(spin, r, delta, gamma, &opts)).collect()))?;
    let mut t = Table::new("squeeze-scan.csv", &["r", "xi_exact", "xi_crss", "kind"]);
    for (k, (&r, &x)) in points.iter().zip(&xi).enumerate() {
        let kind = if k == rs.len() { "r_j" } else { "scan" };
        t.push(vec![r.into(), x.into(), (1.0 - r * r).sqrt().into(), Cell::Text(kind.into())]);
    }
    Ok(CommandResult { tables: vec![t], ..Default::default() })
}

fn slope_row(name: &str, points: &[(f64, f64)]) -> Vec<Cell> {
    let usable: Vec<&(f64, f64)> = points.iter().filter(|(_, y)| y.is_finite() && *y > 0.0).collect();
    let (slope, intercept) = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|(j, _)| j.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|(_, v)| v.ln()).collect();
        linear_fit(&x, &y)
    } else {
        (f64::NAN, f64::NAN)
    };
    let j_min = usable.iter().map(|(j, _)| *j).fold(f64::NAN, f64::min);
    let j_max = usable.iter().map(|(j, _)| *j).fold(f64::NAN, f64::max);
    vec![
        Cell::Text(name.into()),
        Cell::Int(usable.len() as i64),
        Cell::Exact(j_min),
        Cell::Exact(j_max),
        slope.into(),
        intercept.into(),
    ]
}

fn minsqueeze(p: &mut Params, pool: &ThreadPool) -> Result<CommandResult> {
    let js = j_list(p, &[25.0, 36.0, 50.0, 72.0, 100.0])?;
    let rs = r_grid(p)?;
    let cap = *p.exact_j_cap.get_or_insert(200.0);
    let rows = first_error(pool.install(|| {
        js.par_iter()
            .map(|&(j, spin)| -> crss_core::Result<_> {
                let exact = if j <= cap { Some(exact_squeezing_minimum(spin, &rs)?) } else { None };
                Ok((exact, optimal_squeezing(spin)?))
            })
            .collect()
    }))?;
    let mut t = Table::new(
        "minsqueeze.csv",
        &["j", "xi_min_exact", "r_at_min_exact", "xi_min_crss", "r_j", "xi_min_refined", "r_at_min_refined"],
    );
    let (mut exact_pts, mut crss_pts) = (Vec::new(), Vec::new());
    for (&(j, _), (exact, opt)) in js.iter().zip(&rows) {
        let (xe, re, xr, rr) = match exact {
            Some(e) => (e.grid_xi_sq, e.grid_r, e.refined_xi_sq, e.refined_r),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        exact_pts.push((j, xe));
        crss_pts.push((j, opt.xi_min));
        t.push(vec![
            Cell::Exact(j),
            xe.into(),
            re.into(),
            opt.xi_min.into(),
            opt.threshold.r_j.into(),
            xr.into(),
            rr.into(),
        ]);
    }
    let mut s = Table::new("slopes.csv", &["series", "points", "j_min", "j_max", "slope", "intercept"]);
    s.push(slope_row("xi_min_exact", &exact_pts));
    s.push(slope_row("xi_min_crss", &crss_pts));
    let notes = if js.iter().any(|&(j, _)| j > cap) {
        vec![format!("exact scans skipped above j = {cap}; xi_min_exact is NaN there")]
    } else {
        Vec::new()
    };
    Ok(CommandResult { tables: vec![t, s], warnings: 0, notes })
}

fn infidelity(p: &mut Params, pool: &ThreadPool) -> Result<CommandResult> {
    let mode = p.mode.ok_or_else(|| LabError::Invalid("--mode is required (ansatz-vs-min | ansatz-vs-steady)".into()))?;
    let default: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
    let js = j_list(p, &default)?;
    let rs = r_grid(p)?;
    let cells: Vec<(f64, Spin, f64)> = js.iter().flat_map(|&(j, s)| rs.iter().map(move |&r| (j, s, r))).collect();
    let values = first_error(pool.install(|| {
        cells
            .par_iter()
            .map(|&(_, spin, r)| match mode {
                Mode::AnsatzVsMin => CrssParams::new(spin, r, 0.0).and_then(|c| ansatz_minimal_infidelity(&c)),
                Mode::AnsatzVsSteady => steadystate_infidelity(spin, r),
            })
            .collect()
    }))?;
    let column = match mode {
        Mode::AnsatzVsMin => "one_minus_overlap",
        Mode::AnsatzVsSteady => "jr_scaled_infidelity",
    };
    let mut t = Table::new("infidelity.csv", &["j", "r", column, "underflow"]);
    let mut flagged = 0;
    for (&(j, _, r), &v) in cells.iter().zip(&values) {
        let under = v.abs() < UNDERFLOW;
        flagged += under as usize;
        t.push(vec![Cell::Exact(j), r.into(), (if under { 0.0 } else { v }).into(), Cell::Int(under as i64)]);
    }
    let notes = vec![format!("{flagged} cells below {UNDERFLOW:e} reported as 0 with underflow = 1")];
    Ok(CommandResult { tables: vec![t], warnings: 0, notes })
}

/// Drive from `--omega` if given, else `Ω = r Ω_c`.
fn drive_of(p: &mut Params, spin: Spin) -> Result<DriveParams> {
    let delta = *p.delta.get_or_insert(0.0);
    let gamma = gamma_of(p)?;
    let omega_c = critical_drive(spin.n_atoms(), delta, gamma);
    let omega = match (p.omega, p.r) {
        (Some(o), _) => o,
        (None, Some(r)) => r * omega_c,
        (None, None) => return invalid("--r or --omega is required"),
    };
    if !(omega.abs() < omega_c) {
        return invalid(format!("|omega| = {} must be below the critical drive {omega_c}", omega.abs()));
    }
    p.r = Some(omega.abs() / omega_c);
    Ok(DriveParams::new(Complex64::new(omega, 0.0), delta, gamma)?)
}

fn steady_density(spin: Spin, drive: &DriveParams, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    if drive.delta == 0.0 {
        Ok(steady_state_resonant(spin, crss_amplitude(drive)?)?.to_density()?)
    } else {
        Ok(steady_state_general(spin, drive, opts)?)
    }
}

fn steady_state(p: &mut Params) -> Result<CommandResult> {
    let spin = spin_of(require(p.j, "j")?)?;
    let drive = drive_of(p, spin)?;
    let rho = steady_density(spin, &drive, &liouvillian_options(p))?;
    let mut t = Table::new("steady-state.csv", &["row_m", "col_m", "re", "im"]);
    let n = spin.dim();
    for a in 0..n {
        for b in 0..n {
            let v = rho.rho()[(a, b)];
            t.push(vec![Cell::Exact(spin.m(a)), Cell::Exact(spin.m(b)), v.re.into(), v.im.into()]);
        }
    }
    Ok(CommandResult { tables: vec![t], ..Default::default() })
}

fn observables(p: &mut Params) -> Result<CommandResult> {
    let spin = spin_of(require(p.j, "j")?)?;
    let drive = drive_of(p, spin)?;
    let alpha = crss_amplitude(&drive)?;
    let params = CrssParams::from_alpha(spin, alpha)?;
    let ansatz = CrssAnsatz::new(params)?;
    let err = ansatz.error();
    let threshold = r_threshold(spin)?;
    let ops = build_operators(spin);
    let mut rows: Vec<(&str, f64)> = vec![
        ("j", spin.j()),
        ("r", params.r()),
        ("alpha_re", alpha.re),
        ("alpha_im", alpha.im),
        ("delta", drive.delta),
        ("gamma", drive.gamma),
        ("eps_ansatz", err.epsilon),
        ("ln_eps_ansatz", err.ln_epsilon),
        ("eps_analytic", proximity_error_analytic(spin, params.r())?.epsilon),
        ("r_j", threshold.r_j),
        ("r_j_asymptotic", threshold.asymptotic),
        ("xi_sq_crss", (1.0 - params.r() * params.r()).sqrt()),
        ("xi_sq_ansatz", squeezing_parameter(ansatz.state())?.xi_sq),
        ("abs_var_lowering_ansatz", lowering_variance(ansatz.state())?.norm()),
    ];
    let opts = liouvillian_options(p);
    let steady = if drive.delta == 0.0 || spin.j() <= opts.j_cap {
        Some(steady_density(spin, &drive, &opts)?)
    } else {
        None
    };
    let mut notes = Vec::new();
    match &steady {
        Some(rho) => {
            let q = optimal_dipole_quadrature(rho)?;
            rows.extend([
                ("xi_sq_steady", squeezing_parameter(rho)?.xi_sq),
                ("mean_jz_steady", rho.expect(ops.jz())?.re),
                ("purity_steady", rho.purity()),
                ("fidelity_steady_ansatz", rho.fidelity(ansatz.state())?),
                ("min_dipole_variance_steady", q.variance),
                ("min_dipole_angle_steady", q.phi),
                ("dipole_threshold_steady", q.threshold),
                ("abs_var_lowering_steady", lowering_variance(rho)?.norm()),
            ]);
        }
        None => notes.push(format!("steady-state quantities skipped: delta != 0 and j > {}", opts.j_cap)),
    }
    let mut t = Table::new("observables.csv", &["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![Cell::Text(k.into()), v.into()]);
    }
    Ok(CommandResult { tables: vec![t], warnings: 0, notes })
}
