//! Acceptance criteria. Each test prints one PASS/FAIL line with the measured
//! quantity and its threshold, then asserts.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rkhs_core::collocation::gram_schmidt_beta;
use rkhs_core::kernel_space::{
    poly_derivative, w23_inner_product_with_breaks, DEFAULT_QUADRATURE_TOL,
};
use rkhs_core::problem_model::{example1, example2, example3};
use rkhs_core::reference_oracle;
use rkhs_core::rhs_expr::{parse, BinOp, Constant, Expr, Func, Var};
use rkhs_core::{
    error_report, residual_sup_norm, solve_linear, solve_nonlinear, uniform_points,
    CollocationBasis, Interval, NonlinearOptions, ProblemSpec, RkhsSolution, W23Kernel, TABLE_GRID,
};

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {id} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn unit_kernel() -> Arc<W23Kernel> {
    Arc::new(W23Kernel::new(Interval::unit()).unwrap())
}

fn rkhs_solve(p: &ProblemSpec, n: usize) -> RkhsSolution {
    let basis = Arc::new(CollocationBasis::uniform(unit_kernel(), p.k, n).unwrap());
    if p.is_linear() {
        solve_linear(p, basis).unwrap()
    } else {
        solve_nonlinear(p, basis, &NonlinearOptions::default()).unwrap()
    }
}

/// Within one unit of the last tabulated digit. The reference columns mix
/// rounding (-0.98939248 as -0.9893925) and truncation (-0.68661195 as
/// -0.6866119), so half a unit is too strict for either convention alone.
fn matches_printed(computed: f64, printed: f64, decimals: i32) -> bool {
    (computed - printed).abs() < 10f64.powi(-decimals)
}

fn table_check(id: u32, p: ProblemSpec, printed: [f64; 6], decimals: i32) {
    let sol = rkhs_solve(&p, 100);
    let report = error_report(&sol, &p, &TABLE_GRID).unwrap();
    let exact_ok = report
        .rows
        .iter()
        .zip(printed)
        .all(|(row, want)| matches_printed(row.exact, want, decimals));
    let max_abs = report.max_absolute_error.unwrap();
    verdict(
        id,
        &format!("table reproduction for {}", p.name),
        exact_ok && max_abs <= 1e-5,
        format!(
            "exact column matches printed digits: {exact_ok}; max abs error {max_abs:.3e} (<= 1e-5)"
        ),
    );
}

#[test]
fn criterion_1_table_1() {
    let start = Instant::now();
    let p = example1();
    let sol = rkhs_solve(&p, 100);
    let report = error_report(&sol, &p, &TABLE_GRID).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let printed = [0.029696, 0.135168, 0.340992, 0.671744, 1.152000, 1.806336];
    let exact_ok = report
        .rows
        .iter()
        .zip(printed)
        .all(|(row, want)| matches_printed(row.exact, want, 6));
    let max_abs = report.max_absolute_error.unwrap();
    verdict(
        1,
        "table reproduction for ex1 (linear path, n = 100)",
        exact_ok && max_abs <= 1e-5 && elapsed <= 5.0,
        format!(
            "exact column to 6 decimals: {exact_ok}; max abs error {max_abs:.3e} (<= 1e-5); \
             runtime {elapsed:.2} s (<= 5 s)"
        ),
    );
}

#[test]
fn criterion_2_table_2() {
    let printed = [
        -0.0505556, -0.1949792, -0.4146786, -0.6866119, -0.9893925, -1.3063163,
    ];
    table_check(2, example2(), printed, 7);
}

#[test]
fn criterion_3_table_3() {
    let printed = [0.960585, 0.851420, 0.696344, 0.525504, 0.365931, 0.235123];
    table_check(3, example3(), printed, 6);
}

#[test]
fn criterion_4_convergence_trend() {
    let mut all = true;
    let mut details = Vec::new();
    for p in [example1(), example2(), example3()] {
        let mut errors = Vec::new();
        let mut residuals = Vec::new();
        for n in [25, 50, 100] {
            let sol = rkhs_solve(&p, n);
            let r = error_report(&sol, &p, &TABLE_GRID).unwrap();
            errors.push(r.max_absolute_error.unwrap());
            residuals.push(residual_sup_norm(&sol, &p, 200).unwrap());
        }
        let ok =
            errors.windows(2).all(|w| w[0] > w[1]) && residuals.windows(2).all(|w| w[0] > w[1]);
        all &= ok;
        details.push(format!(
            "{}: err {:.2e} > {:.2e} > {:.2e}, residual {:.2e} > {:.2e} > {:.2e}",
            p.name, errors[0], errors[1], errors[2], residuals[0], residuals[1], residuals[2]
        ));
    }
    verdict(
        4,
        "convergence trend n = 25, 50, 100",
        all,
        details.join("; "),
    );
}

#[test]
fn criterion_5_kernel_properties() {
    let kernel = unit_kernel();

    let grid: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let mut symmetry: f64 = 0.0;
    for &x in &grid {
        for &y in &grid {
            let d = kernel.eval(x, y, 0).unwrap() - kernel.eval(y, x, 0).unwrap();
            symmetry = symmetry.max(d.abs());
        }
    }

    type Derivatives = fn(usize, f64) -> f64;
    let tests: [(&str, Derivatives); 3] = [
        ("y^2", |m, y| match m {
            0 => y * y,
            1 => 2.0 * y,
            2 => 2.0,
            _ => 0.0,
        }),
        ("y^3", |m, y| match m {
            0 => y.powi(3),
            1 => 3.0 * y * y,
            2 => 6.0 * y,
            _ => 6.0,
        }),
        ("y^2 e^y", |m, y| {
            let e = y.exp();
            match m {
                0 => y * y * e,
                1 => (y * y + 2.0 * y) * e,
                2 => (y * y + 4.0 * y + 2.0) * e,
                _ => (y * y + 6.0 * y + 6.0) * e,
            }
        }),
    ];
    let mut reproducing: f64 = 0.0;
    for (_, u) in &tests {
        for i in 0..20 {
            let x = (i as f64 + 0.5) / 20.0;
            let section = kernel.section(x);
            let ip = w23_inner_product_with_breaks(
                u,
                &section,
                kernel.interval(),
                DEFAULT_QUADRATURE_TOL,
                &[x],
            )
            .unwrap();
            reproducing = reproducing.max((ip - u(0, x)).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut conditions: f64 = 0.0;
    for _ in 0..20 {
        let x: f64 = rng.gen_range(0.0..=1.0);
        let c = kernel.coefficients(x).unwrap();
        let lo = |t: f64, m: usize| poly_derivative(&c.below, t, m);
        let hi = |t: f64, m: usize| poly_derivative(&c.above, t, m);
        let mut residuals = vec![
            lo(0.0, 0),
            lo(0.0, 1),
            lo(0.0, 2) - lo(0.0, 3),
            hi(1.0, 3),
            hi(1.0, 4),
            hi(1.0, 5),
        ];
        for m in 0..5 {
            residuals.push(lo(x, m) - hi(x, m));
        }
        residuals.push(hi(x, 5) - lo(x, 5) + 1.0);
        for r in residuals {
            conditions = conditions.max(r.abs());
        }
    }

    let printed = |x: f64, y: f64| -> f64 {
        y * y * (y.powi(3) - 5.0 * x * y * y + 10.0 * x * x * (3.0 + y)) / 120.0
    };
    let mut closed_form: f64 = 0.0;
    for &x in &grid {
        for &y in grid.iter().filter(|&&y| y <= x) {
            closed_form = closed_form.max((kernel.eval(x, y, 0).unwrap() - printed(x, y)).abs());
        }
    }

    verdict(
        5,
        "kernel property suite",
        symmetry <= 1e-10 && reproducing <= 1e-8 && conditions <= 1e-9 && closed_form <= 1e-10,
        format!(
            "symmetry {symmetry:.1e} (<= 1e-10); reproducing {reproducing:.1e} (<= 1e-8); \
             12 conditions {conditions:.1e} (<= 1e-9); closed form {closed_form:.1e} (<= 1e-10)"
        ),
    );
}

#[test]
fn criterion_6_orthonormalization() {
    let kernel = unit_kernel();
    let big = CollocationBasis::uniform(kernel.clone(), 2.0, 100).unwrap();
    let defect = big.orthonormality_defect();

    let mut recurrence: f64 = 0.0;
    for n in 1..=6 {
        let b = CollocationBasis::uniform(kernel.clone(), 2.0, n).unwrap();
        let gs = gram_schmidt_beta(b.gram()).unwrap();
        recurrence = recurrence.max((gs - b.beta()).amax());
    }

    let mut quadrature: f64 = 0.0;
    for n in 1..=8 {
        let b = CollocationBasis::uniform(kernel.clone(), 2.0, n).unwrap();
        let nodes = b.points().as_slice().to_vec();
        for i in 0..n {
            for j in 0..=i {
                let fi = |m: usize, x: f64| b.psibar(i, x, m);
                let fj = |m: usize, x: f64| b.psibar(j, x, m);
                let ip = w23_inner_product_with_breaks(
                    &fi,
                    &fj,
                    kernel.interval(),
                    DEFAULT_QUADRATURE_TOL,
                    &nodes,
                )
                .unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                quadrature = quadrature.max((ip - want).abs());
            }
        }
    }

    verdict(
        6,
        "orthonormalization suite",
        defect <= 1e-8 && recurrence <= 1e-8 && quadrature <= 1e-5,
        format!(
            "|beta G beta^T - I| (n = 100) {defect:.1e} (<= 1e-8); Cholesky vs recurrence (n <= 6) \
             {recurrence:.1e} (<= 1e-8); quadrature orthonormality (n <= 8) {quadrature:.1e} (<= 1e-5)"
        ),
    );
}

#[test]
fn criterion_7_oracle_cross_check() {
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for p in [example1(), example2(), example3()] {
        let sol = rkhs_solve(&p, 100);
        let oracle = reference_oracle::integrate(&p, 1e-10, 1_000_000).unwrap();
        let dev = TABLE_GRID
            .iter()
            .map(|&x| (sol.evaluate(x, 0).unwrap() - oracle.value(x).unwrap()).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        details.push(format!("{} {dev:.2e}", p.name));
    }
    verdict(
        7,
        "RKHS vs reference integrator (n = 100, tol 1e-10)",
        worst <= 1e-4,
        format!("max deviation {} (<= 1e-4)", details.join(", ")),
    );
}

#[test]
fn criterion_8_manufactured_solution() {
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for k in [1.0f64, 2.0, 8.0] {
        let a = 0.0;
        let g = move |x: f64| 2.0 + k / x * 2.0 * (x - a);
        let p = ProblemSpec::new(
            "manufactured",
            k,
            Interval::unit(),
            0.0,
            0.0,
            Arc::new(move |x, _| Ok(g(x))),
        )
        .unwrap()
        .with_affine(Arc::new(move |x| Ok(g(x))), Arc::new(|_| Ok(0.0)));
        let sol = rkhs_solve(&p, 100);
        let pts = uniform_points(&p.interval, 100).unwrap();
        let err = pts
            .as_slice()
            .iter()
            .map(|&x| (sol.evaluate(x, 0).unwrap() - (x - a).powi(2)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        details.push(format!("k = {k}: {err:.2e}"));
    }
    verdict(
        8,
        "manufactured v = (x - a)^2 recovered at nodes (n = 100)",
        worst <= 1e-8,
        format!("max nodal error {} (<= 1e-8)", details.join(", ")),
    );
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => Expr::Num(rng.gen_range(0.0..100.0)),
            1 => Expr::Num(rng.gen_range(0..10) as f64),
            2 => Expr::Var(if rng.gen_bool(0.5) { Var::X } else { Var::U }),
            3 => Expr::Const(if rng.gen_bool(0.5) {
                Constant::Pi
            } else {
                Constant::E
            }),
            _ => Expr::Num(rng.gen_range(1e-9..1e-3)),
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::Neg(Box::new(random_expr(rng, depth - 1))),
        1 => {
            let funcs = [
                Func::Exp,
                Func::Ln,
                Func::Sin,
                Func::Cos,
                Func::Sinh,
                Func::Cosh,
                Func::Sqrt,
                Func::Abs,
            ];
            Expr::Call(
                funcs[rng.gen_range(0..funcs.len())],
                Box::new(random_expr(rng, depth - 1)),
            )
        }
        _ => {
            let ops = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];
            Expr::Binary(
                ops[rng.gen_range(0..ops.len())],
                Box::new(random_expr(rng, depth - 1)),
                Box::new(random_expr(rng, depth - 1)),
            )
        }
    }
}

#[test]
fn criterion_9_parser_suite() {
    let ev = |s: &str| parse(s).unwrap().eval(0.0, 0.0).unwrap();
    let precedence = ev("2+3*4") == 14.0 && ev("2^3^2") == 512.0;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut round_trip = true;
    for _ in 0..2000 {
        let e = random_expr(&mut rng, 5);
        round_trip &= parse(&e.to_string()).as_ref() == Ok(&e);
    }

    let malformed = [
        "",
        "2 +",
        "2*pi*u*ln(u",
        "(x))",
        "x + y",
        "foo(x)",
        "3 $ 4",
        "* x",
        "x u",
        "1..2",
    ];
    let positioned = malformed
        .iter()
        .all(|s| matches!(parse(s), Err(e) if e.offset <= s.len()));

    let alphabet: Vec<char> = "0123456789.+-*/^() xuepilnsqrtabcoh$,e".chars().collect();
    let mut fuzz_ok = true;
    for _ in 0..100_000 {
        let len = rng.gen_range(0..24);
        let s: String = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        let outcome = std::panic::catch_unwind(|| match parse(&s) {
            Ok(e) => {
                let _ = e.eval(0.3, 0.7);
                true
            }
            Err(err) => err.offset <= s.len(),
        });
        fuzz_ok &= outcome.unwrap_or(false);
    }

    verdict(
        9,
        "parser suite",
        precedence && round_trip && positioned && fuzz_ok,
        format!(
            "precedence {precedence}; round trip (2000 random trees) {round_trip}; \
             10 malformed inputs positioned {positioned}; 1e5 fuzz strings without panic {fuzz_ok}"
        ),
    );
}
