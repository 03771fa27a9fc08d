use std::sync::Arc;

use bessel_harmonic::conv::{bochner_riesz, make_kernel, KernelFamily, Profile, Translator};
use bessel_harmonic::hankel::{convolution_constant, hankel_transform, spectral_multiplier};
use bessel_harmonic::{lp_norm, GridFunction, LambdaSpace, LogGrid};

const LAMBDAS: [f64; 3] = [0.6, 1.0, 2.0];

fn space(l: f64) -> LambdaSpace {
    LambdaSpace::new(l).unwrap()
}

fn sampled(p: &Profile, s: &LambdaSpace, scale: f64, grid: &Arc<LogGrid>) -> GridFunction {
    GridFunction::from_fn(grid.clone(), |x| p.dilated(s, scale, x)).unwrap()
}

fn sup_error(f: &GridFunction, want: impl Fn(f64) -> f64, keep: impl Fn(f64) -> bool) -> (f64, f64) {
    f.nodes()
        .iter()
        .zip(f.values())
        .filter(|(&x, _)| keep(x))
        .map(|(&x, &v)| ((v - want(x)).abs(), x))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

#[test]
fn heat_and_poisson_goldens() {
    let input = Arc::new(LogGrid::new(1e-5, 1e2, 2048).unwrap());
    let out = Arc::new(LogGrid::new(1e-4, 10.0, 64).unwrap());
    for l in LAMBDAS {
        let s = space(l);
        let c = convolution_constant(&s);
        let w = make_kernel(&s, &KernelFamily::Heat).unwrap();
        let hw = hankel_transform(&s, &sampled(&w, &s, 1.0, &input), out.clone()).unwrap();
        let (err, x) = sup_error(&hw.function, |x| (-0.5 * x * x).exp() / c, |_| true);
        assert!(err < 1e-7, "heat lambda={l}: {err:e} at {x}");

        let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
        let hp = hankel_transform(&s, &sampled(&p, &s, 1.0, &input), out.clone()).unwrap();
        let (err, x) = sup_error(&hp.function, |x| (-x).exp() / c, |_| true);
        assert!(err < 1e-7, "poisson lambda={l}: {err:e} at {x}");
    }
}

#[test]
fn bochner_riesz_and_stein_goldens() {
    let input = Arc::new(LogGrid::new(1e-5, 1e2, 2048).unwrap());
    let out = Arc::new(LogGrid::new(1e-3, 10.0, 64).unwrap());
    let away = |x: f64| (x - 1.0).abs() >= 0.05;
    for l in LAMBDAS {
        let s = space(l);
        let alpha = l + 3.0;
        let br = make_kernel(&s, &KernelFamily::BochnerRiesz(alpha)).unwrap();
        let h = hankel_transform(&s, &sampled(&br, &s, 1.0, &input), out.clone()).unwrap();
        let (err, x) = sup_error(&h.function, |x| (1.0 - x * x).max(0.0).powf(alpha), away);
        assert!(err < 1e-5, "bochner-riesz lambda={l}: {err:e} at {x}");
    }
    let s = space(1.0);
    let alpha = 5.0;
    let stein = make_kernel(&s, &KernelFamily::SteinBR(alpha)).unwrap();
    let h = hankel_transform(&s, &sampled(&stein, &s, 1.0, &input), out).unwrap();
    let want = |x: f64| 2.0 * alpha * x * x * (1.0 - x * x).max(0.0).powf(alpha - 1.0);
    let (err, x) = sup_error(&h.function, want, away);
    assert!(err < 1e-5, "stein: {err:e} at {x}");
}

#[test]
fn transform_is_an_involution() {
    let grid = Arc::new(LogGrid::new(1e-4, 40.0, 256).unwrap());
    let s = space(0.6);
    let f = GridFunction::from_fn(grid.clone(), |x| {
        x * x * (-x * x).exp() + (-(x - 2.0).powi(2) * 4.0).exp()
    })
    .unwrap();
    let once = hankel_transform(&s, &f, grid.clone()).unwrap();
    let twice = hankel_transform(&s, &once.function, grid.clone()).unwrap();
    let (err, x) = sup_error(&twice.function, |x| f.interpolate(x), |x| x <= 10.0);
    assert!(err < 1e-7, "{err:e} at {x}");
}

#[test]
fn plancherel_and_convolution_theorem() {
    let input = Arc::new(LogGrid::new(1e-5, 1e2, 1024).unwrap());
    let spectral = Arc::new(LogGrid::new(1e-5, 60.0, 256).unwrap());
    let wide = Arc::new(LogGrid::new(1e-5, 1e5, 256).unwrap());
    let sample = Arc::new(LogGrid::new(0.02, 5.0, 16).unwrap());
    for l in LAMBDAS {
        let s = space(l);
        let c = convolution_constant(&s);
        let tr = Translator::new(s, 24).unwrap();
        let w = make_kernel(&s, &KernelFamily::Heat).unwrap();
        let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
        let battery = [(&w, 1.0), (&w, 0.5), (&p, 1.0), (&p, 0.5)];
        let transforms: Vec<GridFunction> = battery
            .iter()
            .map(|&(k, a)| {
                hankel_transform(&s, &sampled(k, &s, a, &input), spectral.clone())
                    .unwrap()
                    .function
            })
            .collect();

        for (&(k, a), hf) in battery.iter().zip(&transforms) {
            let direct = lp_norm(&s, &sampled(k, &s, a, &wide), 2.0, None).unwrap().value;
            let image = lp_norm(&s, hf, 2.0, None).unwrap().value;
            assert!(
                (image / direct - 1.0).abs() < 1e-6,
                "plancherel {} a={a} lambda={l}: {image} vs {direct}",
                k.label()
            );
        }

        // Self-inverse transform: f # g = h(c·hf·hg).
        for (i, j) in [(0, 2), (1, 0), (3, 2)] {
            let product = transforms[i].zip_with(&transforms[j], |u, v| c * u * v).unwrap();
            let back = hankel_transform(&s, &product, sample.clone()).unwrap().function;
            let (fi, ai) = battery[i];
            let (gj, aj) = battery[j];
            for (&x, &v) in sample.nodes().iter().zip(back.values()) {
                let direct = tr.convolve_profiles(fi, ai, gj, aj, x);
                assert!(
                    (v / direct - 1.0).abs() < 1e-6,
                    "{}_{ai} # {}_{aj} at x={x}, lambda={l}: {v} vs {direct}",
                    fi.label(),
                    gj.label()
                );
            }
        }
    }
}

#[test]
fn bochner_riesz_mean_matches_spectral_multiplier() {
    let s = space(1.0);
    let grid = Arc::new(LogGrid::new(1e-3, 20.0, 96).unwrap());
    let f = GridFunction::from_fn(grid.clone(), |x| (-(x - 1.5).powi(2)).exp()).unwrap();
    let (alpha, t) = (4.0, 2.0);
    let spectral = spectral_multiplier(&s, |u| (1.0 - u / (t * t)).max(0.0).powf(alpha), &f).unwrap();
    let direct = bochner_riesz(&s, &f, alpha, t).unwrap();
    let peak = direct.max_abs();
    for (i, &x) in grid.nodes().iter().enumerate() {
        if (0.01..=10.0).contains(&x) {
            let (a, b) = (spectral.function.values()[i], direct.values()[i]);
            assert!((a - b).abs() <= 1e-6 * peak, "x={x}: {a} vs {b}");
        }
    }
}
