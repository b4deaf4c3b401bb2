//! Weak periodicity. With `s = -1` and length `2n` the matrices are the
//! periodic ones with reversed columns; with `s = 0` the last segment meets
//! the first one reflected through the centre.
//!
//! ```bash
//! cargo run --example cayley_weak
//! ```

use confocal::cayley::{caustic_search, cayley_periodic, cayley_weak, central_meet_search};
use confocal::{CausticSet, ConfocalFamily};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0])?;
    let s = caustic_search(&f, 0.0, 4, (1e-6, 1.0 - 1e-6), None)?;
    let c = CausticSet::new(s.alpha.clone(), &f);
    let p = cayley_periodic(&f, &c, 4)?;
    let w = cayley_weak(&f, &c, 8, -1, 0.0)?;
    println!("periodic {:?}", p.matrix);
    println!("weak     {:?}", w.matrix);
    println!("same after column reversal: {}", w.columns_reversed() == p.matrix);

    let g = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let m = central_meet_search(&g, 0.0, 6, (1.1, 1.5), 0.9)?;
    let rep = cayley_weak(&g, &CausticSet::new(m.alpha.clone(), &g), 6, 0, 0.0)?;
    println!("s=0, r=6: caustics {:?}, meeting gap {:.1e}", m.alpha, m.gap);
    println!("weak condition satisfied {} (deficiency {:.1e})", rep.satisfied, rep.deficiency);
    Ok(())
}
