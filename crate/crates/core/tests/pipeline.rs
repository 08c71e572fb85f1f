use bisobolev::linalg2::NormKind;
use bisobolev::maps::{from_spec, MapOracle};
use bisobolev::pipeline::{build_approximant, label_area_fractions, ApproxParams, Approximant};
use proptest::prelude::*;

fn build(spec: &str, r: f64) -> Approximant {
    let o = from_spec(spec, None).unwrap();
    build_approximant(o.as_ref(), r, &ApproxParams::default()).unwrap()
}

fn check_report_invariants(a: &Approximant) {
    let e = &a.report.errors;
    let sum = e.linf_forward + e.linf_inverse + e.l1_grad_forward.value + e.l1_grad_inverse.value;
    assert!((e.total_eta - sum).abs() <= 1e-15 * sum.max(1.0), "{} != {sum}", e.total_eta);
    assert_eq!(a.report.valid, a.map.validate_homeomorphism().is_homeomorphism);
    assert_eq!(a.report.num_triangles, a.map.num_triangles());
}

fn check_boundary_fidelity(o: &dyn MapOracle, a: &Approximant) {
    let src = a.map.source();
    for (v, on) in src.is_boundary_vertex().into_iter().enumerate() {
        if on {
            assert_eq!(a.map.image_vertices()[v], o.eval(src.vertices()[v]).unwrap());
        }
    }
}

#[test]
fn smooth_builtins_satisfy_report_invariants_and_energy_identity() {
    for spec in ["identity", "shear:s=0.7", "sine_warp:a=0.1", "radial:alpha=2", "cantor:depth=2"] {
        let o = from_spec(spec, None).unwrap();
        for r in [1.0 / 8.0, 1.0 / 16.0] {
            let a = build_approximant(o.as_ref(), r, &ApproxParams::default()).unwrap();
            check_report_invariants(&a);
            check_boundary_fidelity(o.as_ref(), &a);
            assert!(a.report.valid, "{spec} at r = {r}");
            for kind in NormKind::ALL {
                let e = a.map.w11_energy(kind);
                assert!(a.map.energy_identity_gap(kind).unwrap() <= 1e-9 * e, "{spec} at r = {r}");
            }
        }
    }
}

#[test]
fn negligible_fraction_decreases_with_r() {
    for spec in ["identity", "shear:s=0.7", "sine_warp:a=0.1", "radial:alpha=2"] {
        let f: Vec<[f64; 3]> =
            [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0].iter().map(|&r| label_area_fractions(&build(spec, r))).collect();
        let rest: Vec<f64> = f.iter().map(|[g, b, _]| 1.0 - g - b).collect();
        assert!(rest.windows(2).all(|w| w[1] < w[0]), "{spec}: {rest:?}");
        assert!(f.windows(2).all(|w| w[1][2] <= w[0][2]), "{spec}: {f:?}");
    }
}

#[test]
fn sine_sup_error_scales_like_r_squared() {
    let ratios: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&r| build("sine_warp:a=0.1", r).report.errors.linf_forward / (r * r))
        .collect();
    assert!(ratios.iter().all(|&q| q > 0.0));
    assert!(ratios[2] <= 2.0 * ratios[0], "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn affine_maps_are_reproduced(
        m11 in 0.5f64..2.0, m12 in -0.8f64..0.8, m21 in -0.8f64..0.8, m22 in 0.5f64..2.0,
        b1 in -1.0f64..1.0, b2 in -1.0f64..1.0, k in 2u32..5,
    ) {
        prop_assume!(m11 * m22 - m12 * m21 > 0.1);
        let spec = format!("affine:m11={m11},m12={m12},m21={m21},m22={m22},b1={b1},b2={b2}");
        let o = from_spec(&spec, None).unwrap();
        let r = 1.0 / (1u32 << k) as f64;
        let a = build_approximant(o.as_ref(), r, &ApproxParams::default()).unwrap();
        prop_assert!(a.report.valid);
        prop_assert!(a.report.errors.total_eta <= 1e-9, "eta {}", a.report.errors.total_eta);
        for (p, q) in a.map.source().vertices().iter().zip(a.map.image_vertices()) {
            prop_assert_eq!(*q, o.eval(*p).unwrap());
        }
    }
}
