use lgtt::poly::UPoly;
use lgtt::spectral::{assemble_twisted_laplacian, harmonic_dimension, lowest_eigenpairs, SpectralGrid};
use lgtt::C64;
use std::time::Instant;

#[test]
fn ladder_for_quadratic_with_tau_two() {
    let t0 = Instant::now();
    let g = SpectralGrid::new(6.0, 1.0 / 16.0).unwrap();
    let f = UPoly::from_real(&[0.0, 0.0, 2.0]);
    let op = assemble_twisted_laplacian(&f, 1, &g, false).unwrap();
    let res = lowest_eigenpairs(&op, 5, 1e-8).unwrap();
    assert!(t0.elapsed().as_secs() < 600);
    for (l, e) in res.eigenvalues.iter().zip([0.0, 4.0, 4.0, 8.0, 8.0]) {
        assert!((l - e).abs() < 0.02 * 4.0, "{l} vs {e}");
    }
}

#[test]
fn cubic_kernel_pair() {
    let t0 = Instant::now();
    let g = SpectralGrid::new(3.0, 1.0 / 16.0).unwrap();
    let f = UPoly::new(vec![C64::new(0.0, 0.0), C64::new(-3.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    let op = assemble_twisted_laplacian(&f, 1, &g, false).unwrap();
    let res = lowest_eigenpairs(&op, 4, 1e-8).unwrap();
    assert!(t0.elapsed().as_secs() < 300);
    assert_eq!(harmonic_dimension(&res, 0.3, 10.0).unwrap(), 2);
}

#[test]
fn frame_gram_and_bilinear_pairing() {
    use lgtt::spectral::{harmonic_frame, EigenOptions};
    let t0 = Instant::now();
    let t = C64::new(-1.0, 0.3);
    let f = UPoly::new(vec![C64::new(0.0, 0.0), t, C64::new(0.0, 0.0), C64::new(1.0 / 3.0, 0.0)]);
    let frame = [UPoly::from_real(&[1.0]), UPoly::from_real(&[0.0, 1.0])];
    let g = SpectralGrid::new(3.5, 1.0 / 16.0).unwrap();
    let hf = harmonic_frame(&f, &frame, &g, 1e-9, &EigenOptions::default()).unwrap();
    assert!(t0.elapsed().as_secs() < 120);
    assert!((&hf.gram - hf.gram.adjoint()).norm() < 1e-6 * hf.gram.norm());
    assert!(hf.gram.clone().cholesky().is_some());
    let r = (-t).sqrt();
    let pts = [r, -r];
    let eta = |a: usize, b: usize| -> C64 { pts.iter().map(|&p| frame[a].eval(p) * frame[b].eval(p) / (p * 2.0)).sum() };
    for a in 0..2 {
        for b in 0..2 {
            let want = -eta(a, b) * std::f64::consts::PI;
            assert!((hf.bilinear[(a, b)] - want).norm() < 0.01 * std::f64::consts::PI, "{a}{b}");
        }
    }
}

#[test]
fn quadratic_frame_norm_matches_closed_form() {
    use lgtt::spectral::{harmonic_frame, EigenOptions};
    // α = e^{−2|τ||z|²}(dz − (τ̄/|τ|)dz̄) has ‖α‖² = π/(2|τ|)
    for tau in [C64::new(1.0, 0.0), C64::new(0.0, 2.0)] {
        let f = UPoly::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), tau]);
        let g = SpectralGrid::new(4.0, 1.0 / 16.0).unwrap();
        let hf = harmonic_frame(&f, &[UPoly::from_real(&[1.0])], &g, 1e-9, &EigenOptions::default()).unwrap();
        let want = std::f64::consts::PI / (2.0 * tau.norm());
        assert!((hf.gram[(0, 0)].re - want).abs() < 0.01 * want, "{} vs {want}", hf.gram[(0, 0)]);
    }
}

#[test]
fn ground_form_matches_the_closed_form_zero_mode() {
    use lgtt::spectral::oscillator_groundform_complex;
    let tau = C64::new(1.0, 0.0);
    let g = SpectralGrid::new(4.0, 1.0 / 16.0).unwrap();
    let f = UPoly::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), tau]);
    let op = assemble_twisted_laplacian(&f, 1, &g, false).unwrap();
    let res = lowest_eigenpairs(&op, 1, 1e-10).unwrap();
    let want = oscillator_groundform_complex(tau, &g).unwrap();
    let ov = res.eigenfields[0].inner(&want).norm() / res.eigenfields[0].norm();
    assert!(ov > 0.999, "overlap {ov}");
}
