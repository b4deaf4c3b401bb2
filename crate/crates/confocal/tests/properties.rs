use confocal::algebra3d::{cancel, Tag};
use confocal::poly::Poly;
use confocal::reflection::{build_drc, mirror};
use confocal::trajectory::simulate;
use confocal::{vector, ConfocalFamily, DirectedLine, Vector};
use proptest::prelude::*;

fn family(d: usize) -> ConfocalFamily {
    ConfocalFamily::new((1..=d).map(|i| i as f64).collect()).unwrap()
}

fn unit_ball(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d).prop_filter("inside", |u| u.iter().map(|x| x * x).sum::<f64>() < 0.8)
}

fn direction(d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1.0f64..1.0, d)
        .prop_filter("not tiny", |u| u.iter().map(|x| x * x).sum::<f64>() > 0.01)
        .prop_map(|u| Vector::from_vec(u).normalize())
}

fn scaled(f: &ConfocalFamily, u: &[f64]) -> Vector {
    Vector::from_iterator(u.len(), u.iter().zip(f.a()).map(|(x, a)| x * a.sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coordinates_round_trip(d in 2usize..5, seed in prop::collection::vec(-2.0f64..2.0, 4)) {
        let f = family(d);
        let x = Vector::from_iterator(d, seed.iter().take(d).copied());
        prop_assume!(x.iter().all(|c| c.abs() > 1e-6));
        let ec = f.elliptic_coordinates(&x).unwrap();
        for w in ec.lambda.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let signs: Vec<f64> = x.iter().map(|c| c.signum()).collect();
        let y = f.point_from_elliptic(&ec.lambda, &signs).unwrap();
        prop_assert!((&y - &x).amax() < 1e-9 * x.amax().max(1.0));
    }

    #[test]
    fn mirror_is_an_involution(v in direction(3), n in direction(3)) {
        let w = mirror(&v, &n);
        prop_assert!((w.norm() - 1.0).abs() < 1e-12);
        prop_assert!((mirror(&w, &n) - &v).norm() < 1e-12);
        prop_assert!((w.dot(&n) + v.dot(&n)).abs() < 1e-12);
    }

    #[test]
    fn caustics_survive_reflections(d in 2usize..5, u in unit_ball(4), v in direction(4)) {
        let f = family(d);
        let x = scaled(&f, &u[..d]);
        let v = Vector::from_iterator(d, v.iter().take(d).copied());
        prop_assume!(v.norm() > 0.1);
        let t = simulate(&f, 0.0, &x, &v, 25).unwrap();
        prop_assert!(t.caustic_drift().unwrap() < 1e-8);
        for p in &t.points[1..] {
            prop_assert!(f.value(0.0, p).abs() < 1e-9);
        }
    }

    #[test]
    fn drc_tangent_planes_form_a_pencil(u in unit_ball(3), v in direction(3), lam1 in -0.5f64..0.95, lam2 in 1.05f64..1.95, i1 in 0usize..2, i2 in 0usize..2) {
        let f = family(3);
        let l = DirectedLine::new(&scaled(&f, &u), &v).unwrap();
        if let Ok(q) = build_drc(&f, lam1, lam2, &l, i1, i2) {
            prop_assert!(q.pencil().ratio < 1e-9);
        }
    }

    #[test]
    fn cancel_removes_paired_tags(lams in prop::collection::vec(-1.0f64..3.0, 0..6), idx in prop::collection::vec(0usize..2, 6)) {
        let tags: Vec<Tag> = lams.iter().zip(&idx).map(|(l, i)| Tag { lam: *l, idx: *i }).collect();
        let mut both = tags.clone();
        both.extend(tags.iter().rev().map(|t| t.tau()));
        prop_assert!(cancel(&both).is_empty());
        let once = cancel(&tags);
        prop_assert_eq!(cancel(&once).len(), once.len());
    }

    #[test]
    fn polynomial_roots_are_recovered(roots in prop::collection::vec(-3.0f64..3.0, 1..5)) {
        let mut r = roots.clone();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(r.windows(2).all(|w| w[1] - w[0] > 1e-2));
        let p = Poly::from_root_factors(&r);
        let found = p.real_roots(1e-8);
        prop_assert_eq!(found.len(), r.len());
        for (a, b) in found.iter().zip(&r) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }
}

#[test]
fn line_distance_ignores_parametrisation() {
    let a = DirectedLine::new(&vector(&[0.0, 1.0, 0.0]), &vector(&[1.0, 0.0, 0.0])).unwrap();
    let b = DirectedLine::new(&vector(&[5.0, 1.0, 0.0]), &vector(&[3.0, 0.0, 0.0])).unwrap();
    assert!(a.distance(&b) < 1e-12);
    assert!(a.distance(&a.reversed()) > 1.0);
}
