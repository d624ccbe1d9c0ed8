use lgtt::frobenius::{an_family, ttstar_residuals, TtStarOptions};
use lgtt::spectral::{EigenOptions, SpectralGrid};
use lgtt::C64;

#[test]
fn cecotti_vafa_residual_shrinks_with_the_stencil() {
    let t = vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.3)];
    let fam = an_family(2, &t, C64::new(1.0, 0.0)).unwrap();
    let opts = TtStarOptions {
        direction: 1,
        deltas: vec![0.2, 0.1],
        grid: SpectralGrid::new(3.5, 1.0 / 16.0).unwrap(),
        tol: 1e-10,
        eigen: EigenOptions::default(),
    };
    let rows = ttstar_residuals(&fam, &[(fam.tau, t.clone())], &opts).unwrap();
    for r in &rows {
        eprintln!("delta {} cv {:.4e} fantastic {:.4e}", r.delta, r.cv_relative(), r.fantastic_relative());
    }
    assert!(rows[0].cv_relative() < 0.05 && rows[1].cv_relative() < 0.05);
    assert!(rows[1].cv_relative() < rows[0].cv_relative());
    assert!(rows[1].fantastic_relative() < rows[0].fantastic_relative());
}
