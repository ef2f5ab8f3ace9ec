use dpdenoise_core::grid::{add_gaussian_noise, NoiseSpec};
use dpdenoise_core::solver::SolverConfig;
use dpdenoise_core::synth::make_step;
use dpdenoise_core::weight::{
    build_weight_adaptive, build_weight_noisy, eval_weight_function, rescale_weight_spec, WeightFamily, WeightSpec,
};
use dpdenoise_core::ScalarField;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = WeightFamily> {
    prop_oneof![
        (0.01f64..1e4, 0.01f64..1e4).prop_map(|(a, b)| WeightFamily::W1 { a, b }),
        (0.01f64..1e4, 0.01f64..1e4).prop_map(|(a, b)| WeightFamily::W2 { a, b }),
        (0.01f64..1e4, 0.001f64..10.0).prop_map(|(height, cutoff)| WeightFamily::W3 { height, cutoff }),
    ]
}

proptest! {
    #[test]
    fn profiles_are_nonincreasing_and_compactly_supported(f in family()) {
        let spec = WeightSpec::new(f, 0.0).unwrap();
        let c = f.cutoff();
        prop_assert!(f.at_zero() > 0.0);
        let mut prev = f64::INFINITY;
        for k in 0..=400 {
            let x = 2.0 * c * k as f64 / 400.0;
            let v = eval_weight_function(&spec, x).unwrap();
            prop_assert!(v >= 0.0 && v <= prev, "x = {x}");
            prev = v;
        }
        prop_assert_eq!(spec.eval(c * (1.0 + 1e-12) + 1e-300), 0.0);
        prop_assert_eq!(spec.eval(10.0 * c), 0.0);
    }

    #[test]
    fn zero_crossing_sits_at_cutoff(f in family()) {
        let c = f.cutoff();
        match f {
            WeightFamily::W3 { height, .. } => {
                prop_assert_eq!(f.eval(c), height);
                prop_assert_eq!(f.eval(c.next_up()), 0.0);
            }
            _ => {
                prop_assert_eq!(f.eval(c), 0.0);
                // a - b x rounds to zero within a few ulps of a / b
                prop_assert!(f.eval(c * (1.0 - 1e-12)) > 0.0);
            }
        }
    }

    #[test]
    fn rescaling_is_pointwise(f in family(), alpha in 0.01f64..100.0, beta in 0.01f64..100.0) {
        let spec = WeightSpec::new(f, 1.5).unwrap();
        let scaled = rescale_weight_spec(&spec, alpha, beta).unwrap();
        prop_assert_eq!(scaled.mollify_radius, 1.5);
        for k in 0..200 {
            let x = 1.5 * f.cutoff() / beta * k as f64 / 200.0;
            let want = alpha * spec.eval(beta * x);
            let got = scaled.eval(x);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(alpha * f.at_zero()));
        }
    }
}

#[test]
fn negative_arguments_are_rejected() {
    let spec = WeightSpec::new(WeightFamily::W1 { a: 1.0, b: 1.0 }, 0.0).unwrap();
    assert!(eval_weight_function(&spec, -1e-9).is_err());
    assert!(eval_weight_function(&spec, f64::NAN).is_err());
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(WeightSpec::new(WeightFamily::W1 { a: 0.0, b: 1.0 }, 0.0).is_err());
    assert!(WeightSpec::new(WeightFamily::W3 { height: 1.0, cutoff: -1.0 }, 0.0).is_err());
    assert!(WeightSpec::new(WeightFamily::W2 { a: 1.0, b: 1.0 }, -0.5).is_err());
    let spec = WeightSpec::new(WeightFamily::W2 { a: 1.0, b: 1.0 }, 0.0).unwrap();
    assert!(rescale_weight_spec(&spec, 0.0, 1.0).is_err());
}

#[test]
fn adaptive_weight_vanishes_at_the_jump() {
    let clean = make_step(64).unwrap();
    let noisy = add_gaussian_noise(&clean, NoiseSpec::new(0.02, 4).unwrap()).unwrap();
    let spec = WeightSpec::new(WeightFamily::W1 { a: 50.0, b: 500.0 }, 1.0).unwrap();
    let w = build_weight_adaptive(&noisy, 0.1, &spec, &SolverConfig::default()).unwrap();
    assert!(w.report.rof_converged);
    assert_eq!(w.weight.values()[31], 0.0);
    assert!(w.weight.values()[5] > 0.0 && w.weight.values()[58] > 0.0);
    assert!(w.report.support_fraction > 0.8 && w.report.support_fraction < 1.0);
}

#[test]
fn noisy_weight_of_flat_datum_is_constant() {
    let g = ScalarField::constant(9, 7, 0.3).unwrap();
    let spec = WeightSpec::new(WeightFamily::W3 { height: 4.0, cutoff: 0.1 }, 2.0).unwrap();
    let w = build_weight_noisy(&g, &spec).unwrap();
    assert!(w.weight.values().iter().all(|&v| v == 4.0));
}
