//! Jacobi elliptic coordinates and the caustics of a line.
//!
//! ```bash
//! cargo run --example elliptic_coordinates
//! ```

use confocal::{vector, ConfocalFamily, DirectedLine};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let x = vector(&[0.4, -0.7, 1.1]);
    let ec = f.elliptic_coordinates(&x)?;
    println!("lambda = {:?}", ec.lambda);

    let signs: Vec<f64> = x.iter().map(|c| c.signum()).collect();
    let back = f.point_from_elliptic(&ec.lambda, &signs)?;
    println!("reconstruction error {:.2e}", (&back - &x).norm());

    let l = DirectedLine::new(&x, &vector(&[1.0, 0.2, -0.5]))?;
    let c = f.caustics_of_line(&l.line())?;
    println!("caustics of the line {:?}, ordering holds: {}", c.alpha, c.ordering_holds(&f));

    let v = f.direction_from_caustics(&x, &c.alpha, &[1.0, -1.0, 1.0])?;
    let again = f.caustics_of_line(&DirectedLine::new(&x, &v)?.line())?;
    println!("direction rebuilt from caustics, caustics {:?}", again.alpha);
    Ok(())
}
