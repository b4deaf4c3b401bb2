//! The cube-shaped configuration of eight lines built from three reflections.
//!
//! ```bash
//! cargo run --example star
//! ```

use confocal::algebra3d::AlgebraContext;
use confocal::{ConfocalFamily, DirectedLine};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let x = f.point_from_elliptic(&[0.2, 1.2, 2.5], &[1.0, 1.0, -1.0])?;
    let v = f.direction_from_caustics(&x, &[0.5, 1.5], &[1.0, -1.0, 1.0])?;
    let ctx = AlgebraContext::new(&f, 0.5, 1.5, &DirectedLine::new(&x, &v)?)?;

    let st = ctx.star_configuration(ctx.tag_on_o(-0.8, 0)?, ctx.tag_on_o(0.3, 1)?, ctx.tag_on_o(1.1, 2)?)?;
    for (k, r) in st.triplet_collinearity.iter().enumerate() {
        println!("line {k}: touching points collinear to {r:.1e}");
    }
    for (k, p) in st.quadruplet_pencils.iter().enumerate() {
        println!("face {k}: planes in a pencil to {:.1e}", p.ratio);
    }
    println!("all checks at 1e-9: {}", st.all_pass(1e-9));
    Ok(())
}
