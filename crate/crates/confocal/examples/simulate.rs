//! Billiard inside an ellipsoid: the caustics of every segment stay fixed.
//!
//! ```bash
//! cargo run --example simulate
//! ```

use confocal::trajectory::{simulate, time_reversal_gap};
use confocal::{vector, ConfocalFamily};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let start = vector(&[0.1, -0.3, 0.2]);
    let dir = vector(&[0.6, 0.5, -0.4]);
    let t = simulate(&f, 0.0, &start, &dir, 200)?;

    println!("caustics {:?}", t.caustics.alpha);
    for k in [1, 10, 100, 200] {
        let p = &t.points[k];
        println!("bounce {k:>3}: ({:+.6}, {:+.6}, {:+.6})", p[0], p[1], p[2]);
    }
    println!("caustic drift      {:.2e}", t.caustic_drift()?);
    println!("time reversal gap  {:.2e}", time_reversal_gap(&t)?);
    Ok(())
}
