//! Write an SVG of a period-three orbit with its caustic.
//!
//! ```bash
//! cargo run --example render -- orbit.svg
//! ```

use confocal::cayley::{caustic_search, search_start};
use confocal::cli_io::{render_svg, Scene};
use confocal::trajectory::simulate;
use confocal::ConfocalFamily;

fn main() -> confocal::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "orbit.svg".into());
    let f = ConfocalFamily::new(vec![1.0, 2.0])?;
    let s = caustic_search(&f, 0.0, 3, (1e-6, 1.0 - 1e-6), None)?;
    let (x, v) = search_start(&f, 0.0, &s.alpha)?;
    let t = simulate(&f, 0.0, &x, &v, 3)?;
    let svg = render_svg(&Scene::from_trajectory(&t, 0.0));
    std::fs::write(&path, svg).map_err(|e| confocal::Error::Io(e.to_string()))?;
    println!("wrote {path}");
    Ok(())
}
