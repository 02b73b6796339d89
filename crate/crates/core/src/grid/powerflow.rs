//! Newton–Raphson AC power flow in polar coordinates.
//!
//! The slack bus fixes 1.0 pu at 0 rad; every other bus is PQ. Each solve
//! starts flat, so the result depends only on the grid and the setpoints.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Grid, GridError, GridState, SetpointProposal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Max per-bus |ΔP|, |ΔQ| in pu.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlow {
    /// Reported state; out-of-service buses read 0.0.
    pub state: GridState,
    /// Electrical bus voltages, including junction voltages of out-of-service buses.
    pub phasors: Vec<Complex64>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

pub fn admittance_matrix(grid: &Grid) -> DMatrix<Complex64> {
    let n = grid.bus_count();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for line in &grid.lines {
        let (i, j) = (line.from_bus, line.to_bus);
        let yl = line.admittance();
        y[(i, i)] += yl;
        y[(j, j)] += yl;
        y[(i, j)] -= yl;
        y[(j, i)] -= yl;
    }
    y
}

/// Computed complex power injection S_i = V_i · conj(Σ_k Y_ik V_k).
pub fn calculated_injections(y: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let current: Complex64 = (0..n).map(|k| y[(i, k)] * v[k]).sum();
            v[i] * current.conj()
        })
        .collect()
}

pub fn solve_power_flow(grid: &Grid, setpoints: &SetpointProposal) -> Result<PowerFlow, GridError> {
    solve_power_flow_with(grid, setpoints, SolverOptions::default())
}

pub fn solve_power_flow_with(
    grid: &Grid,
    setpoints: &SetpointProposal,
    options: SolverOptions,
) -> Result<PowerFlow, GridError> {
    grid.check_proposal(setpoints)?;
    let n = grid.bus_count();
    let slack = grid.slack_index();
    let y = admittance_matrix(grid);
    let scheduled = grid.injections(setpoints);

    let pq: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = pq.len();
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];

    let mut iterations = 0;
    let mut max_mismatch;
    loop {
        let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
        let calc = calculated_injections(&y, &v);
        let mut mismatch = DVector::zeros(2 * m);
        max_mismatch = 0.0f64;
        for (r, &i) in pq.iter().enumerate() {
            let d = scheduled[i] - calc[i];
            mismatch[r] = d.re;
            mismatch[m + r] = d.im;
            let norm = d.norm();
            if norm.is_nan() || max_mismatch.is_nan() {
                max_mismatch = f64::NAN;
            } else {
                max_mismatch = max_mismatch.max(norm);
            }
        }
        if !max_mismatch.is_finite() {
            return Err(GridError::NonConvergence { iterations, mismatch: max_mismatch });
        }
        if max_mismatch < options.tolerance {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(GridError::NonConvergence { iterations, mismatch: max_mismatch });
        }

        let jac = jacobian(&y, &vm, &va, &calc, &pq);
        let step = jac
            .lu()
            .solve(&mismatch)
            .ok_or(GridError::NonConvergence { iterations, mismatch: max_mismatch })?;
        for (r, &i) in pq.iter().enumerate() {
            va[i] += step[r];
            vm[i] += step[m + r];
        }
        iterations += 1;
    }

    let phasors: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
    let voltages = grid
        .buses
        .iter()
        .zip(&vm)
        .map(|(b, &mag)| if b.in_service { mag } else { 0.0 })
        .collect();
    Ok(PowerFlow {
        state: GridState { voltages, in_service: grid.node_in_service(), step: 0 },
        phasors,
        iterations,
        max_mismatch,
    })
}

fn jacobian(
    y: &DMatrix<Complex64>,
    vm: &[f64],
    va: &[f64],
    calc: &[Complex64],
    pq: &[usize],
) -> DMatrix<f64> {
    let m = pq.len();
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    for (r, &i) in pq.iter().enumerate() {
        for (c, &k) in pq.iter().enumerate() {
            let (g, b) = (y[(i, k)].re, y[(i, k)].im);
            if i == k {
                let (p, q) = (calc[i].re, calc[i].im);
                jac[(r, c)] = -q - b * vm[i] * vm[i];
                jac[(r, m + c)] = p / vm[i] + g * vm[i];
                jac[(m + r, c)] = p - g * vm[i] * vm[i];
                jac[(m + r, m + c)] = q / vm[i] - b * vm[i];
            } else {
                let t = va[i] - va[k];
                let (s, co) = t.sin_cos();
                jac[(r, c)] = vm[i] * vm[k] * (g * s - b * co);
                jac[(r, m + c)] = vm[i] * (g * co + b * s);
                jac[(m + r, c)] = -vm[i] * vm[k] * (g * co + b * s);
                jac[(m + r, m + c)] = vm[i] * (g * s - b * co);
            }
        }
    }
    jac
}
