//! Property suites shared by the `properties` target and the acceptance run.
//! Inputs are random or closed-form only; nothing here reads tabulated prices.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rklfd_core::analytic;
use rklfd_core::heston::{assemble_heston, heston_rkl_price, Grid2D, HestonModel, HestonRun};
use rklfd_core::lcp::{brennan_schwartz_solve, psor_solve, TridiagonalSystem};
use rklfd_core::payoff::payoff_values;
use rklfd_core::pde1d::assemble_bs;
use rklfd_core::poly::Family;
use rklfd_core::{march_1d, BSModel, Grid1D, LcpStrategy, Obstacle, Payoff, PsorConfig, SchemeKind, SchemeSelector, TimeAxis};

pub type Suite = (&'static str, fn() -> Result<(), String>);

pub const ALL: [Suite; 6] = [
    ("row-sum invariants", row_sums),
    ("projection dominance", projection_dominance),
    ("american >= european", american_dominates_european),
    ("brennan-schwartz == psor", brennan_schwartz_matches_psor),
    ("european closed form", european_closed_form),
    ("polynomial derivatives", polynomial_derivatives),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Strictly increasing grid on `[0, top]` graded towards `top * centre`.
fn graded_grid(m: usize, top: f64, grading: f64) -> Grid1D {
    let nodes = (0..=m)
        .map(|i| {
            let u = i as f64 / m as f64;
            top * (u + grading * (u - 0.5).powi(3) * 4.0 / 3.0 - grading * u / 3.0)
        })
        .collect();
    Grid1D::new(nodes).unwrap()
}

fn heston_params() -> impl Strategy<Value = HestonModel> {
    (0.2f64..6.0, 0.01f64..0.3, 0.1f64..1.0, -0.95f64..0.95, -0.02f64..0.12, 0.0f64..0.05).prop_map(
        |(kappa, theta, sigma, rho, r, q)| HestonModel {
            kappa,
            theta,
            sigma,
            rho,
            r,
            q,
            v0: theta,
        },
    )
}

pub fn row_sums() -> Result<(), String> {
    runner(64)
        .run(
            &(0.05f64..0.9, -0.05f64..0.15, 0.0f64..0.1, 3usize..150, 0.0f64..0.9),
            |(sigma, r, q, m, grading)| {
                let grid = graded_grid(m, 300.0, grading);
                let op = assemble_bs(&BSModel::constant(sigma, r, q), &grid, 0.0);
                for (i, s) in op.row_sums().iter().enumerate() {
                    let scale = op.diag[i].abs().max(1.0);
                    ensure((s + r).abs() <= 1e-12 * scale, || format!("row {i}: sum {s}, r {r}"))?;
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    runner(32)
        .run(&(heston_params(), 3usize..24, 3usize..16), |(model, m, n)| {
            let grid = Grid2D::uniform(200.0, 1.0, m, n).unwrap();
            let op = assemble_heston(&model, &grid);
            for idx in 0..grid.len() {
                let s = op.row_sum(idx);
                let scale = op.b[idx].abs().max(1.0);
                ensure((s + model.r).abs() <= 1e-12 * scale, || format!("node {idx}: sum {s}"))?;
            }
            ensure(op.beta_x.iter().chain(&op.beta_v).all(|b| *b >= 1.0), || "beta < 1".into())
        })
        .map_err(|e| e.to_string())
}

pub fn projection_dominance() -> Result<(), String> {
    runner(48)
        .run(
            &(0.05f64..0.6, 0.0f64..0.12, 50.0f64..150.0, 1usize..40, 0usize..4),
            |(sigma, r, strike, steps, which)| {
                let grid = Grid1D::uniform(0.0, 3.0 * strike, 120).unwrap();
                let payoff = Payoff::Put { strike };
                let f = payoff_values(&payoff, &grid);
                let scheme = match which {
                    0 => SchemeSelector::rkl(0.0),
                    1 => SchemeSelector::rkl(10.0),
                    2 => SchemeSelector::implicit(SchemeKind::Cn, LcpStrategy::BrennanSchwartz),
                    _ => SchemeSelector::implicit(SchemeKind::Ran, LcpStrategy::Psor(PsorConfig::default())),
                };
                // SOR needs the one-sided far row diagonally dominant: r x_max k / (2 h) < 0.45
                let steps = if which == 3 { steps.max((0.5 * 0.5 * r * 120.0 / 0.45).ceil() as usize) } else { steps };
                let time = TimeAxis::uniform(steps, 0.5).unwrap();
                let sol = march_1d(&BSModel::constant(sigma, r, 0.0), &grid, &time, f.clone(), Some(&f), &scheme)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                for (i, (v, p)) in sol.values.iter().zip(&f).enumerate() {
                    ensure(v >= p, || format!("node {i}: {v} < payoff {p}"))?;
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    runner(12)
        .run(&(heston_params(), 2usize..12), |(model, steps)| {
            let grid = Grid2D::uniform(250.0, 0.8, 30, 12).unwrap();
            let put = Payoff::Put { strike: 100.0 };
            let time = TimeAxis::uniform(steps, 0.25).unwrap();
            let sol = heston_rkl_price(&model, &grid, &put, &time, &HestonRun::default())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            for (k, v) in sol.values.iter().enumerate() {
                let x = grid.x.nodes()[k % grid.x.len()];
                ensure(*v >= put.value(x), || format!("node {k}: {v} below exercise value"))?;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn american_dominates_european() -> Result<(), String> {
    runner(48)
        .run(
            &(0.1f64..0.6, 0.0f64..0.12, 0.0f64..0.06, 80.0f64..120.0, any::<bool>(), any::<bool>()),
            |(sigma, r, q, strike, is_put, explicit)| {
                let grid = Grid1D::uniform(0.0, 3.0 * strike, 150).unwrap();
                let payoff = if is_put {
                    Payoff::Put { strike }
                } else {
                    Payoff::Call { strike }
                };
                let f = payoff_values(&payoff, &grid);
                let model = BSModel::constant(sigma, r, q);
                let time = TimeAxis::uniform(20, 1.0).unwrap();
                let scheme = if explicit {
                    SchemeSelector::rkl(0.0)
                } else {
                    SchemeSelector::implicit(SchemeKind::Ran, LcpStrategy::BrennanSchwartz)
                };
                let run = |obs: Option<&[f64]>| {
                    march_1d(&model, &grid, &time, f.clone(), obs, &scheme).map_err(|e| TestCaseError::fail(e.to_string()))
                };
                let am = run(Some(&f))?;
                let eu = run(None)?;
                for (i, (a, e)) in am.values.iter().zip(&eu.values).enumerate() {
                    ensure(*a >= e - 1e-12 * e.abs().max(1.0), || format!("node {i}: american {a} < european {e}"))?;
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn brennan_schwartz_matches_psor() -> Result<(), String> {
    runner(64)
        .run(
            &(0.1f64..0.6, 0.0f64..0.12, 0.0f64..0.05, 0.001f64..0.05, 0.05f64..1.0, 40usize..200),
            |(sigma, r, q, k, tau, m)| {
                let strike = 100.0;
                let grid = Grid1D::uniform(0.0, 4.0 * strike, m).unwrap();
                let op = assemble_bs(&BSModel::constant(sigma, r, q), &grid, 0.0);
                // keep the one-sided far row diagonally dominant, which SOR needs
                let drift = -op.lower[m];
                let k = if drift > 0.0 { k.min(0.45 / drift) } else { k };
                let sys = TridiagonalSystem::implicit(&op, k);
                let payoff = Payoff::Put { strike };
                let obs = payoff_values(&payoff, &grid);
                // continuation value of the European contract one step earlier
                let rhs: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .map(|&x| analytic::european(&payoff, x, tau, sigma, r, q))
                    .collect();
                let cfg = PsorConfig::default();
                let a = brennan_schwartz_solve(&sys, &rhs, Obstacle::Lower(&obs)).map_err(|e| TestCaseError::fail(e.to_string()))?;
                let b = psor_solve(&sys, &rhs, Obstacle::Lower(&obs), &cfg, None).map_err(|e| TestCaseError::fail(e.to_string()))?;
                let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                ensure(diff <= 10.0 * cfg.tolerance, || format!("max difference {diff:e}"))
            },
        )
        .map_err(|e| e.to_string())
}

pub fn european_closed_form() -> Result<(), String> {
    runner(16)
        .run(
            &(0.15f64..0.45, 0.0f64..0.08, 0.25f64..1.0, any::<bool>(), 0usize..3),
            |(sigma, r, maturity, is_put, which)| {
                let strike = 100.0;
                let grid = Grid1D::uniform(0.0, 400.0, 400).unwrap();
                let payoff = if is_put {
                    Payoff::Put { strike }
                } else {
                    Payoff::Call { strike }
                };
                let f = payoff_values(&payoff, &grid);
                let scheme = match which {
                    0 => SchemeSelector::rkl(0.0),
                    1 => SchemeSelector::rkl(20.0),
                    _ => SchemeSelector::implicit(SchemeKind::Ran, LcpStrategy::BrennanSchwartz),
                };
                let time = TimeAxis::uniform(100, maturity).unwrap();
                let sol = march_1d(&BSModel::constant(sigma, r, 0.0), &grid, &time, f, None, &scheme)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                for (i, &x) in grid.nodes().iter().enumerate() {
                    if !(60.0..=160.0).contains(&x) {
                        continue;
                    }
                    let exact = analytic::european(&payoff, x, maturity, sigma, r, 0.0);
                    let err = (sol.values[i] - exact).abs();
                    ensure(err < 1e-2, || format!("x={x}: {} vs {exact}", sol.values[i]))?;
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn polynomial_derivatives() -> Result<(), String> {
    runner(256)
        .run(
            &(2usize..40, -1.0f64..1.1, any::<bool>()),
            |(n, w, legendre)| {
                let fam = if legendre { Family::Legendre } else { Family::Chebyshev };
                let h = 1e-4;
                let p = |x: f64| fam.eval(n, x);
                // fourth-order central differences
                let fd = |g: &dyn Fn(f64) -> f64| (-g(w + 2.0 * h) + 8.0 * g(w + h) - 8.0 * g(w - h) + g(w - 2.0 * h)) / (12.0 * h);
                let at = p(w);
                let d1 = fd(&|x| p(x).value);
                let d2 = fd(&|x| p(x).d1);
                let scale = 1.0 + at.value.abs() + at.d1.abs() + at.d2.abs();
                ensure((d1 - at.d1).abs() <= 1e-6 * scale, || format!("n={n} w={w}: d1 {} vs fd {d1}", at.d1))?;
                ensure((d2 - at.d2).abs() <= 1e-6 * scale, || format!("n={n} w={w}: d2 {} vs fd {d2}", at.d2))
            },
        )
        .map_err(|e| e.to_string())
}
