mod common;

use hybrid_vvc::grid::{build_benchmark_grid, solve_power_flow, GridConfig, Line, Setpoint, SetpointProposal, Topology};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_grid(buses: usize) -> hybrid_vvc::grid::Grid {
    let config = GridConfig { node_count: buses, topology: Some(Topology::Chain), ..GridConfig::default() };
    build_benchmark_grid(&config).unwrap()
}

#[test]
fn two_bus_matches_closed_form_and_gauss_seidel() {
    let mut grid = small_grid(2);
    grid.lines[0] = Line { from_bus: 0, to_bus: 1, resistance: 0.01, reactance: 0.05 };
    grid.base_demand[1] = Complex64::new(0.5, 0.2);
    let zero = SetpointProposal::zeros(2);
    let pf = solve_power_flow(&grid, &zero).unwrap();

    // |V|^4 + (2(rP + xQ) - 1)|V|^2 + (r^2 + x^2)(P^2 + Q^2) = 0, upper root
    let (r, x, p, q): (f64, f64, f64, f64) = (0.01, 0.05, 0.5, 0.2);
    let b = 2.0 * (r * p + x * q) - 1.0;
    let c = (r * r + x * x) * (p * p + q * q);
    let v_closed = ((-b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt();

    let gs = common::gauss_seidel(&grid, &zero, 100_000).unwrap();
    assert!((pf.state.voltages[1] - v_closed).abs() < 1e-9, "{} vs {v_closed}", pf.state.voltages[1]);
    assert!((pf.phasors[1] - gs[1]).norm() < 1e-6);
}

#[test]
fn newton_raphson_agrees_with_gauss_seidel_on_random_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    for case in 0..1000 {
        let buses = rng.random_range(2..=3);
        let mut grid = small_grid(buses);
        if buses == 3 && rng.random_bool(0.5) {
            // close the loop 0-2 to exercise a meshed case
            grid.lines.push(Line { from_bus: 0, to_bus: 2, resistance: 0.0, reactance: 0.0 });
        }
        for line in &mut grid.lines {
            line.resistance = rng.random_range(0.002..0.05);
            line.reactance = rng.random_range(0.01..0.1);
        }
        for d in grid.base_demand.iter_mut().skip(1) {
            *d = Complex64::new(rng.random_range(-0.5..1.0), rng.random_range(-0.3..0.4));
        }
        let proposal = SetpointProposal(
            (0..grid.actuators.len())
                .map(|_| Setpoint { p: rng.random_range(0.0..0.3), q: rng.random_range(-0.2..0.2) })
                .collect(),
        );
        let nr = solve_power_flow(&grid, &proposal).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let gs = common::gauss_seidel(&grid, &proposal, 200_000).unwrap_or_else(|| panic!("case {case}: oracle diverged"));
        for (i, (a, b)) in nr.phasors.iter().zip(&gs).enumerate() {
            assert!((a.norm() - b.norm()).abs() < 1e-6, "case {case} bus {i}: {a} vs {b}");
        }
        compared += 1;
    }
    assert_eq!(compared, 1000);
}

#[test]
fn benchmark_feeder_residual_below_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = GridConfig::default();
    let mut grid = build_benchmark_grid(&config).unwrap();
    let mut solved = 0;
    for _ in 0..300 {
        for d in grid.base_demand.iter_mut().skip(1) {
            let p = rng.random_range(config.profile_p[0]..=config.profile_p[1]);
            *d = Complex64::new(p, 0.3 * p);
        }
        let proposal = SetpointProposal(
            grid.actuators
                .iter()
                .map(|a| Setpoint {
                    p: rng.random_range(a.p_bounds[0]..=a.p_bounds[1]) * 0.1,
                    q: rng.random_range(a.q_bounds[0]..=a.q_bounds[1]) * 0.2,
                })
                .collect(),
        );
        if let Ok(pf) = solve_power_flow(&grid, &proposal) {
            assert!(common::max_mismatch(&grid, &proposal, &pf.phasors) < 1e-8);
            assert!(pf.max_mismatch < 1e-8);
            solved += 1;
        }
    }
    assert!(solved > 250, "only {solved} of 300 solved");
}
