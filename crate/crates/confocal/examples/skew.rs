//! Skewness of corresponding segments of two trajectories with the same caustics.
//!
//! ```bash
//! cargo run --example skew
//! ```

use confocal::grid::grid_skew_profile;
use confocal::reflection::mirror;
use confocal::trajectory::simulate;
use confocal::ConfocalFamily;

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let x = f.point_from_elliptic(&[0.2, 1.2, 2.5], &[1.0, 1.0, -1.0])?;
    let v = f.direction_from_caustics(&x, &[0.5, 1.5], &[1.0, -1.0, 1.0])?;
    let a = simulate(&f, 0.0, &x, &v, 12)?;

    // b starts on a after one virtual reflection, so the pair meets
    let p = a.directed(0).point_at(0.1);
    let mu = f.elliptic_coordinates(&p)?.lambda[1];
    let b = simulate(&f, 0.0, &p, &mirror(&a.directions[0], &f.unit_normal(mu, &p)?), 12)?;

    let y = f.point_from_elliptic(&[0.35, 1.1, 2.2], &[-1.0, 1.0, 1.0])?;
    let u = f.direction_from_caustics(&y, &[0.5, 1.5], &[-1.0, 1.0, 1.0])?;
    let c = simulate(&f, 0.0, &y, &u, 12)?;

    for (name, other) in [("same", &a), ("meeting", &b), ("generic", &c)] {
        let prof = grid_skew_profile(&a, other, 0..11)?;
        println!(
            "{name:>8}: s={} constant={} quadrics {:?} spread {:.1e}",
            prof.classes[0].s, prof.s_constant, prof.classes[0].connecting_quadrics, prof.quadric_spread
        );
    }
    Ok(())
}
