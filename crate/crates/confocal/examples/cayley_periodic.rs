//! Periodic trajectories in an ellipse: search the caustic, then confirm it
//! with the Hankel rank test and a moved caustic that fails it.
//!
//! ```bash
//! cargo run --example cayley_periodic
//! ```

use confocal::cayley::{caustic_search, cayley_periodic};
use confocal::{CausticSet, ConfocalFamily};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0])?;
    for n in 3..=7 {
        let s = caustic_search(&f, 0.0, n, (1e-6, 1.0 - 1e-6), None)?;
        let on = cayley_periodic(&f, &CausticSet::new(s.alpha.clone(), &f), n)?;
        let off = cayley_periodic(&f, &CausticSet::new(vec![s.alpha[0] + 1e-2], &f), n)?;
        println!(
            "n={n}  alpha={:.10}  closure gap {:.1e}  deficiency {:.1e} ({})  moved {:.1e} ({})",
            s.alpha[0], s.closure_gap, on.deficiency, on.satisfied, off.deficiency, off.satisfied
        );
    }
    Ok(())
}
