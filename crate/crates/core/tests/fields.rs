use lighttrap_core::{
    field_eval, make_bump_perturbed, make_gaussian, AzimuthalWindow, BumpPerturbation, GaussianRadialField,
    IndexField, SwitchableGaussianField,
};

fn shipped_fields() -> Vec<(&'static str, IndexField)> {
    let reference = make_gaussian(3.8, 1.0, 1.0).unwrap();
    let ring = make_bump_perturbed(&reference, BumpPerturbation::axisymmetric(0.05, 1.0, 0.2)).unwrap();
    let local = make_bump_perturbed(
        &reference,
        BumpPerturbation {
            delta_n: -0.1,
            r_p: 0.9,
            s_p: 0.3,
            azimuth: Some(AzimuthalWindow {
                phi_p: 1.0,
                width: 0.4,
            }),
        },
    )
    .unwrap();
    let switchable = IndexField::Switchable(
        SwitchableGaussianField::new(GaussianRadialField::new(3.8, 1.0, 1.0).unwrap(), 5.0, 2.0).unwrap(),
    );
    vec![
        ("constant", IndexField::constant(1.5).unwrap()),
        ("reference", reference),
        ("pure", make_gaussian(1.0, 0.0, 1.0).unwrap()),
        ("wide", make_gaussian(2.5, 1.2, 3.0).unwrap()),
        ("ring bump", ring),
        ("azimuthal bump", local),
        ("switchable", switchable),
    ]
}

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[test]
fn partials_match_central_differences() {
    let h: f64 = 1e-5;
    for (name, field) in shipped_fields() {
        for [r, phi, z, t] in field.sample_grid() {
            let a = field_eval(&field, r, phi, z, t).unwrap();
            let n = |r, phi, z, t| field_eval(&field, r, phi, z, t).unwrap().n;
            let fd = [
                central(|x| n(x, phi, z, t), r, h.min(r / 2.0)),
                central(|x| n(r, x, z, t), phi, h),
                central(|x| n(r, phi, x, t), z, h),
                central(|x| n(r, phi, z, x), t, h),
            ];
            let an = [a.dn_dr, a.dn_dphi, a.dn_dz, a.dn_dt];
            for k in 0..4 {
                let err = (an[k] - fd[k]).abs();
                assert!(
                    err <= 1e-6 * an[k].abs() + 1e-9,
                    "{name} partial {k} at {:?}: analytic {} fd {}",
                    [r, phi, z, t],
                    an[k],
                    fd[k]
                );
            }
        }
    }
}

#[test]
fn every_shipped_field_is_positive_on_its_grid() {
    for (name, field) in shipped_fields() {
        for [r, phi, z, t] in field.sample_grid() {
            assert!(field_eval(&field, r, phi, z, t).unwrap().n > 0.0, "{name}");
        }
    }
}

#[test]
fn radial_static_fields_have_only_radial_gradient() {
    for (name, field) in shipped_fields() {
        if !field.is_radial_static() {
            continue;
        }
        for [r, phi, z, t] in field.sample_grid() {
            let s = field_eval(&field, r, phi, z, t).unwrap();
            assert_eq!((s.dn_dphi, s.dn_dz, s.dn_dt), (0.0, 0.0, 0.0), "{name}");
        }
    }
}

#[test]
fn gaussian_shape() {
    for (n_a, n_c, sigma) in [(3.8, 1.0, 1.0), (1.0, 0.0, 1.0), (2.5, 1.2, 3.0)] {
        let g = make_gaussian(n_a, n_c, sigma).unwrap();
        assert_eq!(g.radial(0.0).0, n_a);
        assert!((g.radial(8.0 * sigma).0 - n_c).abs() < 1e-27);
        let mut prev = f64::INFINITY;
        for [r, ..] in g.sample_grid().into_iter().step_by(40) {
            let n = g.radial(r).0;
            // Past ~6σ the excess drops below one ulp of n_C.
            if (n - n_c).abs() > 1e-15 * n_c.max(1.0) {
                assert!(n < prev, "not decreasing at r = {r}");
            }
            prev = n;
        }
    }
}

#[test]
fn zero_bump_is_bit_identical() {
    for (_, base) in shipped_fields().into_iter().filter(|(_, f)| f.is_radial_static()) {
        let zero = make_bump_perturbed(&base, BumpPerturbation::axisymmetric(0.0, 1.0, 0.2)).unwrap();
        for [r, phi, z, t] in base.sample_grid() {
            assert_eq!(
                field_eval(&base, r, phi, z, t).unwrap(),
                field_eval(&zero, r, phi, z, t).unwrap()
            );
        }
    }
}

#[test]
fn switchable_matches_limits_exactly() {
    let base = GaussianRadialField::new(3.8, 1.0, 1.0).unwrap();
    let sw = IndexField::Switchable(SwitchableGaussianField::new(base, 5.0, 2.0).unwrap());
    let on = IndexField::Gaussian(base);
    let off = IndexField::constant(1.0).unwrap();
    for [r, phi, z, _] in sw.sample_grid() {
        for t in [-3.0, 0.0, 4.999] {
            assert_eq!(
                field_eval(&sw, r, phi, z, t).unwrap(),
                field_eval(&on, r, phi, z, t).unwrap()
            );
        }
        for t in [7.001, 20.0] {
            let s = field_eval(&sw, r, phi, z, t).unwrap();
            assert_eq!(s, field_eval(&off, r, phi, z, t).unwrap());
        }
    }
}
