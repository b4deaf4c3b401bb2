//! Period three in an ellipsoid with one caustic held fixed.
//!
//! ```bash
//! cargo run --example cayley_space
//! ```

use confocal::cayley::{caustic_search, cayley_periodic};
use confocal::{CausticSet, ConfocalFamily};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 3.0, 4.0])?;
    let s = caustic_search(&f, 0.0, 3, (1.05, 1.5), Some(5.0 / 6.0))?;
    println!("caustics {:?}", s.alpha);
    println!("coordinate mismatch after 3 bounces {:.1e}", s.lambda_gap.unwrap_or(f64::NAN));
    println!("closure gap after 6 bounces {:.1e}", s.geometric_gap_2n.unwrap_or(f64::NAN));

    let rep = cayley_periodic(&f, &CausticSet::new(s.alpha.clone(), &f), 3)?;
    println!("{}x{} matrix, singular values {:?}", rep.rows, rep.cols, rep.singular_values);
    println!("satisfied {} with deficiency {:.1e}", rep.satisfied, rep.deficiency);
    Ok(())
}
