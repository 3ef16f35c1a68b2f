mod common;

use common::{direct_concurrence, ginibre, random_pure_product, random_unitary2, rng};
use hjent::qboltz::DensityMatrix;
use hjent::witnesses::linalg::kron2;
use hjent::witnesses::{concurrence, concurrence_nested_sqrt, negativity};

#[test]
fn concurrence_routes_agree() {
    let mut r = rng(1);
    for k in 0..1000 {
        let rho = ginibre(&mut r, k % 2 == 0);
        let a = concurrence(&rho).unwrap();
        let b = concurrence_nested_sqrt(&rho).unwrap();
        assert!((a - b).abs() < 1e-9, "state {k}: {a} vs {b}");
        if k % 2 == 0 {
            let d = direct_concurrence(&rho);
            assert!((a - d).abs() < 1e-7, "state {k}: {a} vs direct {d}");
        }
    }
}

#[test]
fn ppt_and_concurrence_agree_on_random_states() {
    let mut r = rng(2);
    let mut entangled = 0;
    for k in 0..1000 {
        let rho = ginibre(&mut r, false);
        let cc = concurrence(&rho).unwrap() > 1e-8;
        let nn = negativity(&rho).unwrap() > 1e-8;
        assert_eq!(cc, nn, "state {k}");
        entangled += cc as usize;
    }
    assert!(
        entangled > 50 && entangled < 950,
        "{entangled} entangled states"
    );
}

#[test]
fn local_unitaries_leave_witnesses_unchanged() {
    let mut r = rng(3);
    for _ in 0..200 {
        let rho = ginibre(&mut r, false);
        let u = kron2(&random_unitary2(&mut r), &random_unitary2(&mut r));
        let rotated = DensityMatrix::new(u * rho.matrix() * u.adjoint()).unwrap();
        assert!((concurrence(&rho).unwrap() - concurrence(&rotated).unwrap()).abs() < 1e-9);
        assert!((negativity(&rho).unwrap() - negativity(&rotated).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn werner_family_matches_closed_form() {
    for k in 0..=100 {
        let p = k as f64 / 100.0;
        let rho = DensityMatrix::werner(p);
        let expected = ((3.0 * p - 1.0) / 2.0).max(0.0);
        assert!(
            (concurrence(&rho).unwrap() - expected).abs() <= 1e-6,
            "p = {p}"
        );
        assert!(
            (direct_concurrence(&rho) - expected).abs() <= 1e-6,
            "p = {p}"
        );
        assert!(
            (negativity(&rho).unwrap() - ((3.0 * p - 1.0) / 4.0).max(0.0)).abs() <= 1e-9,
            "p = {p}"
        );
    }
}

#[test]
fn product_states_have_no_entanglement() {
    let mut r = rng(4);
    for _ in 0..200 {
        let rho = random_pure_product(&mut r);
        assert!(concurrence(&rho).unwrap() <= 1e-9);
        assert!(negativity(&rho).unwrap() <= 1e-9);
    }
}
