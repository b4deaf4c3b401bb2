//! Double reflection configuration: four lines, four tangent planes in one pencil.
//!
//! ```bash
//! cargo run --example drc
//! ```

use confocal::reflection::{build_drc, drc_symmetry_gap, LawVariant};
use confocal::{vector, ConfocalFamily, DirectedLine};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let l1 = DirectedLine::new(&vector(&[0.1, 0.2, -0.1]), &vector(&[0.3, -0.8, 0.5]))?;
    let q = build_drc(&f, 0.2, 1.3, &l1, 1, 0)?;

    for (name, p) in ["x1", "y1", "y2", "x2"].iter().zip(&q.points) {
        println!("{name} = ({:+.6}, {:+.6}, {:+.6})", p[0], p[1], p[2]);
    }
    let pencil = q.pencil();
    println!("tangent planes: rank {}, ratio {:.1e}", pencil.rank, pencil.ratio);
    println!("reflection laws {:?}", q.law_checks(&f, LawVariant::Metric)?);
    println!("rebuilt from any seed, max distance {:.1e}", drc_symmetry_gap(&f, &q)?);
    Ok(())
}
