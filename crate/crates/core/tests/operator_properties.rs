use std::sync::Arc;

use bessel_harmonic::conv::{convolve, make_kernel, KernelFamily, Profile};
use bessel_harmonic::operators::{
    commutator_field, convolution_field, hardy_operators, hl_maximal, maximal, rho_variation, rho_variation_row,
    square_function, KernelTensor, OperatorField, TimeGrid,
};
use bessel_harmonic::{GridFunction, LambdaSpace, LogGrid};
use proptest::prelude::*;

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// At λ = 1, τ_x(φ_t)(y) = (2xy)^{-1} ∫_{|x−y|}^{x+y} φ_t(z) z dz.
fn brute_tau(s: &LambdaSpace, phi: &Profile, t: f64, x: f64, y: f64) -> f64 {
    simpson((x - y).abs(), x + y, 400, |z| phi.dilated(s, t, z) * z) / (2.0 * x * y)
}

fn bump(y: f64) -> f64 {
    let u = (y - 1.0) / 0.3;
    if u.abs() < 1.0 {
        (1.0 - u * u).powi(3)
    } else {
        0.0
    }
}

#[test]
fn field_and_commutator_match_brute_force() {
    let s = LambdaSpace::new(1.0).unwrap();
    let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
    let grid = Arc::new(LogGrid::new(0.05, 20.0, 64).unwrap());
    let f = GridFunction::from_fn(grid.clone(), bump).unwrap();
    let b = GridFunction::from_fn(grid.clone(), |y| y).unwrap();
    for tgrid in [
        TimeGrid::aligned(&grid, 0.2, 3.0).unwrap(),
        TimeGrid::new(0.2, 3.0, 16).unwrap(),
    ] {
        let tgrid = Arc::new(tgrid);
        let tensor = KernelTensor::build(&s, &p, grid.clone(), tgrid.clone()).unwrap();
        let field = tensor.field(&f).unwrap();
        let comm = tensor.commutator_field(&f, &b, 1, 2000).unwrap();
        let nt = tgrid.len();
        for &(xi, tj) in &[(0.5, 0), (1.0, nt / 2), (1.3, nt - 1), (4.0, 3), (0.9, nt - 2)] {
            let i = grid.nodes().partition_point(|&v| v < xi);
            let (x, t) = (grid.nodes()[i], tgrid.nodes()[tj]);
            // The oracle integrates the grid model of f, so only the quadrature is compared.
            let want = simpson(0.6, 1.4, 4000, |y| {
                f.interpolate(y) * brute_tau(&s, &p, t, x, y) * y * y
            });
            let got = field.get(i, tj);
            assert!((got - want).abs() < 1e-7 * want.abs(), "x={x} t={t}: {got} vs {want}");
            let g = f.zip_with(&b, |v, y| (y - x) * v).unwrap();
            let want = simpson(0.6, 1.4, 4000, |y| {
                g.interpolate(y) * brute_tau(&s, &p, t, x, y) * y * y
            });
            let got = comm.get(i, tj);
            assert!(
                (got - want).abs() < 1e-7 * field.get(i, tj),
                "commutator x={x} t={t}: {got} vs {want}"
            );
        }
        let flat = GridFunction::from_fn(grid.clone(), |_| 3.0).unwrap();
        let zero = tensor.commutator_field(&f, &flat, 2, 2000).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn heat_field_follows_the_semigroup() {
    let s = LambdaSpace::new(0.6).unwrap();
    let w = make_kernel(&s, &KernelFamily::Heat).unwrap();
    let grid = Arc::new(LogGrid::new(1e-3, 30.0, 96).unwrap());
    let a = 0.7;
    let f = GridFunction::from_fn(grid.clone(), |x| w.dilated(&s, a, x)).unwrap();
    let tgrid = Arc::new(TimeGrid::aligned(&grid, 0.1, 5.0).unwrap());
    let field = convolution_field(&s, &f, &w, tgrid.clone()).unwrap();
    for (j, &t) in tgrid.nodes().iter().enumerate() {
        let direct = [0, tgrid.len() / 2, tgrid.len() - 1]
            .contains(&j)
            .then(|| convolve(&s, &f, &w, t).unwrap());
        let peak = w.dilated(&s, (a * a + t * t).sqrt(), 0.0);
        for (i, &x) in grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, &x)| (0.01..4.0).contains(&x))
        {
            let got = field.get(i, j);
            // Linear interpolation in ln y at 96 points per decade limits this to O(h²).
            let want = w.dilated(&s, (a * a + t * t).sqrt(), x);
            assert!((got - want).abs() < 3e-4 * peak, "x={x} t={t}: {got} vs {want}");
            if let Some(d) = &direct {
                assert!((got - d.values()[i]).abs() < 1e-9 * peak, "x={x} t={t}");
            }
        }
    }
}

#[test]
fn constant_input_gives_the_kernel_mass() {
    let s = LambdaSpace::new(2.0).unwrap();
    let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
    let grid = Arc::new(LogGrid::new(1e-4, 1e4, 32).unwrap());
    let one = GridFunction::from_fn(grid.clone(), |_| 1.0).unwrap();
    let tgrid = Arc::new(TimeGrid::aligned(&grid, 0.01, 1.0).unwrap());
    let field = convolution_field(&s, &one, &p, tgrid).unwrap();
    for (i, &x) in grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, &x)| (0.1..10.0).contains(&x))
    {
        for &v in field.row(i) {
            assert!((v - 1.0).abs() < 2e-3, "x={x}: {v}");
        }
    }
}

#[test]
fn poisson_maximal_is_dominated_by_hl() {
    let s = LambdaSpace::new(1.0).unwrap();
    let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
    let mut constants = Vec::new();
    for ppd in [16, 32] {
        let grid = Arc::new(LogGrid::new(1e-2, 1e2, ppd).unwrap());
        let tgrid = Arc::new(TimeGrid::aligned(&grid, 1e-2, 1e2).unwrap());
        let tensor = KernelTensor::build(&s, &p, grid.clone(), tgrid).unwrap();
        let mut c = 0.0f64;
        for g in [
            bump as fn(f64) -> f64,
            |y| if (1.0..2.0).contains(&y) { 1.0 } else { 0.0 },
        ] {
            let f = GridFunction::from_fn(grid.clone(), g).unwrap();
            let star = maximal(&tensor.field(&f).unwrap());
            let m = hl_maximal(&s, &f).unwrap();
            for (a, b) in star.iter().zip(m.lower.values()) {
                if *b > 0.0 {
                    c = c.max(a / b);
                }
            }
        }
        constants.push(c);
    }
    assert!(
        constants[0] < 2.0 && (constants[0] / constants[1] - 1.0).abs() < 0.05,
        "{constants:?}"
    );
}

#[test]
fn commutator_maximal_bounded_by_weighted_hl() {
    let s = LambdaSpace::new(1.0).unwrap();
    let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
    let grid = Arc::new(LogGrid::new(0.05, 20.0, 16).unwrap());
    let f = GridFunction::from_fn(grid.clone(), bump).unwrap();
    let b = GridFunction::from_fn(grid.clone(), |y| y.ln()).unwrap();
    let tgrid = Arc::new(TimeGrid::aligned(&grid, 0.05, 20.0).unwrap());
    let star = maximal(&commutator_field(&s, &f, &b, 1, &p, tgrid).unwrap());
    for (i, &x) in grid.nodes().iter().enumerate() {
        let bx = b.values()[i];
        let g = f.zip_with(&b, |v, bv| (bv - bx).abs() * v).unwrap();
        let m = hl_maximal(&s, &g).unwrap().upper.values()[i];
        assert!(star[i] <= 1.05 * m + 1e-15, "x={x}: {} vs {m}", star[i]);
    }
}

#[test]
fn hl_dominates_the_function() {
    let s = LambdaSpace::new(0.6).unwrap();
    let grid = Arc::new(LogGrid::new(1e-2, 1e2, 32).unwrap());
    let f = GridFunction::from_fn(grid, |y| (3.0 * y).sin() / (1.0 + y)).unwrap();
    let m = hl_maximal(&s, &f).unwrap();
    for ((v, lo), hi) in f.values().iter().zip(m.lower.values()).zip(m.upper.values()) {
        assert!(*lo >= v.abs() && hi >= lo);
    }
    let (h0, hinf) = hardy_operators(&s, &f.abs()).unwrap();
    assert!(h0.values().iter().chain(hinf.values()).all(|&v| v >= 0.0));
}

#[test]
fn field_csv_layout() {
    let x = Arc::new(LogGrid::new(1.0, 10.0, 16).unwrap());
    let t = Arc::new(TimeGrid::new(0.1, 1.0, 16).unwrap());
    let values: Vec<f64> = (0..x.len() * t.len()).map(|k| k as f64 * 0.25).collect();
    let field = OperatorField::new(x.clone(), t.clone(), values).unwrap();
    let mut buf = Vec::new();
    field.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), t.len() + 1);
    let header: Vec<f64> = lines[0].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(header, x.nodes());
    for (j, line) in lines[1..].iter().enumerate() {
        let cells: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cells[0], t.nodes()[j]);
        for i in 0..x.len() {
            assert_eq!(cells[i + 1], field.get(i, j));
        }
    }
    assert!(OperatorField::new(x.clone(), t.clone(), vec![0.0; 3]).is_err());
    assert!(OperatorField::new(x.clone(), t.clone(), vec![f64::NAN; x.len() * t.len()]).is_err());
}

fn random_field(values: Vec<f64>) -> OperatorField {
    let x = Arc::new(LogGrid::from_nodes(vec![1.0, 2.0, 4.0]).unwrap());
    let t = Arc::new(TimeGrid::new(0.01, 1.0, 16).unwrap());
    OperatorField::new(x, t, values).unwrap()
}

fn field_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 3 * 33)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn reducers_are_sublinear(a in field_values(), b in field_values()) {
        let sum: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
        let (fa, fb, fs) = (random_field(a), random_field(b), random_field(sum));
        let checks = [
            (maximal(&fs), maximal(&fa), maximal(&fb)),
            (square_function(&fs), square_function(&fa), square_function(&fb)),
            (rho_variation(&fs, 3.0).unwrap(), rho_variation(&fa, 3.0).unwrap(), rho_variation(&fb, 3.0).unwrap()),
        ];
        for (s, x, y) in checks {
            for i in 0..3 {
                prop_assert!(s[i] <= x[i] + y[i] + 1e-9);
            }
        }
    }

    #[test]
    fn reducers_are_monotone(a in field_values(), scale in prop::collection::vec(1.0f64..2.0, 3 * 33)) {
        let bigger: Vec<f64> = a.iter().zip(&scale).map(|(u, s)| u * s).collect();
        let (fa, fb) = (random_field(a), random_field(bigger));
        for (x, y) in maximal(&fa).iter().zip(maximal(&fb).iter()) {
            prop_assert!(x <= y);
        }
        for (x, y) in square_function(&fa).iter().zip(square_function(&fb).iter()) {
            prop_assert!(*x <= y + 1e-12);
        }
    }

    #[test]
    fn variation_orders(row in prop::collection::vec(-3.0f64..3.0, 2..40), rho in 2.1f64..6.0) {
        let v = rho_variation_row(&row, rho).unwrap();
        let v2 = rho_variation_row(&row, rho + 1.0).unwrap();
        prop_assert!(v2 <= v * (1.0 + 1e-12));
        for w in row.windows(2) {
            prop_assert!((w[1] - w[0]).abs() <= v * (1.0 + 1e-12));
        }
        let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= (hi - lo) * (1.0 - 1e-12) - 1e-300);
        let flat = vec![row[0]; row.len()];
        prop_assert_eq!(rho_variation_row(&flat, rho).unwrap(), 0.0);
    }
}
