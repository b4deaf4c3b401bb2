//! Intersection points of segments of one elliptic billiard trajectory lie on
//! confocal conics; which kind depends on the caustic and on `k`.
//!
//! ```bash
//! cargo run --example grid
//! ```

use confocal::grid::{classify_grid, collect_grid, GridMode, GridRelation};
use confocal::trajectory::simulate;
use confocal::ConfocalFamily;

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0])?;
    for alpha in [0.4, 1.5] {
        let x = f.point_from_elliptic(&[0.0, if alpha < 1.0 { 1.6 } else { 1.8 }], &[1.0, 1.0])?;
        let v = f.direction_from_caustics(&x, &[alpha], &[1.0, 1.0])?;
        let v = if v.dot(&x) > 0.0 { -v } else { v };
        let t = simulate(&f, 0.0, &x, &v, 30)?;
        println!("caustic {alpha}");
        for mode in [GridMode::Difference, GridMode::Sum] {
            for k in 1..=4 {
                let mut g = collect_grid(&t, None, k, mode, 15)?;
                g.fit(&f)?;
                let lam = g.fitted_lambda.unwrap_or(f64::NAN);
                let c = classify_grid(&f, alpha, GridRelation::Single { mode, k }, lam)?;
                println!(
                    "  {mode:?} k={k}: {:>2} points on lambda={lam:.8} ({:?}, table says {:?})",
                    g.points.len(),
                    c.observed,
                    c.predicted
                );
            }
        }
    }
    Ok(())
}
