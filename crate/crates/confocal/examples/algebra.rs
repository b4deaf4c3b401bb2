//! Group law on lines touching two fixed caustics.
//!
//! ```bash
//! cargo run --example algebra
//! ```

use confocal::algebra3d::AlgebraContext;
use confocal::{ConfocalFamily, DirectedLine};

fn main() -> confocal::Result<()> {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0])?;
    let x = f.point_from_elliptic(&[0.2, 1.2, 2.5], &[1.0, 1.0, -1.0])?;
    let v = f.direction_from_caustics(&x, &[0.5, 1.5], &[1.0, -1.0, 1.0])?;
    let ctx = AlgebraContext::new(&f, 0.5, 1.5, &DirectedLine::new(&x, &v)?)?;
    println!("neutral line meets its own quadric at parameter {:.6}", ctx.q_o);

    let p = ctx.element(ctx.tag_on_o(-0.8, 0)?)?;
    let q = ctx.element(ctx.tag_on_o(0.3, 1)?)?;
    let s = ctx.element(ctx.tag_on_o(1.1, 2)?)?;

    let pq = ctx.add(&p, &q)?;
    let qp = ctx.add(&q, &p)?;
    println!("p+q vs q+p          {:.1e}", pq.line.distance(&qp.line));
    let left = ctx.add(&pq, &s)?;
    let right = ctx.add(&p, &ctx.add(&q, &s)?)?;
    println!("associativity       {:.1e}  ({:?}, {:?})", left.line.distance(&right.line), left.path, right.path);
    let zero = ctx.add(&pq, &ctx.negate(&pq)?)?;
    println!("x + (-x) vs O       {:.1e}", zero.line.distance(&ctx.o));

    let chain = ctx.billiard_b(&left.divisor)?;
    let back = ctx.divisor_d(&chain.lines, &chain.points, &chain.params)?;
    println!("divisor {:?}", left.divisor);
    println!("round trip {:?}", back);
    Ok(())
}
