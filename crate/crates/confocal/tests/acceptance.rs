use std::process::Command;

use confocal::algebra3d::{cancel, AlgebraContext, Element, Path, Tag};
use confocal::cayley::{
    caustic_search, cayley_periodic, cayley_weak, central_meet_gap, central_meet_search, CayleyReport,
};
use confocal::grid::{
    classify_grid, collect_grid, grid_skew_profile, half_branch_check, pair_relation, GridMode, GridRelation,
};
use confocal::reflection::{build_drc, build_drc_at, drc_symmetry_gap, mirror, LawVariant};
use confocal::trajectory::{closure_gap, detect_closure, simulate, ConicType, Trajectory};
use confocal::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    println!("[{}] criterion {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_interior(f: &ConfocalFamily, r: &mut ChaCha8Rng) -> Vector {
    let d = f.dim();
    loop {
        let u: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        if u.iter().map(|x| x * x).sum::<f64>() < 0.8 {
            return Vector::from_iterator(d, (0..d).map(|i| u[i] * f.a()[i].sqrt()));
        }
    }
}

fn random_unit(d: usize, r: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = Vector::from_iterator(d, (0..d).map(|_| r.gen_range(-1.0..1.0)));
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

fn c1_caustic_conservation() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for d in 2..=4 {
        let f = ConfocalFamily::new((1..=d).map(|i| i as f64).collect()).unwrap();
        for _ in 0..10 {
            let x = random_interior(&f, &mut r);
            let v = random_unit(d, &mut r);
            let t = simulate(&f, 0.0, &x, &v, 100).unwrap();
            worst = worst.max(t.caustic_drift().unwrap());
        }
    }
    Outcome { pass: worst < 1e-8, detail: format!("max relative drift {worst:.2e} (< 1e-8)") }
}

fn c2_jacobi() -> Outcome {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0]).unwrap();
    let mut r = rng(2);
    let (mut res, mut orth) = (0.0f64, 0.0f64);
    let mut interlaced = true;
    for _ in 0..1000 {
        let x = Vector::from_iterator(3, (0..3).map(|_| r.gen_range(-2.0..2.0)));
        let lam = f.elliptic_coordinates(&x).unwrap().lambda;
        let a = f.a();
        interlaced &= lam[0] <= a[0] && a[0] <= lam[1] && lam[1] <= a[1] && a[1] <= lam[2] && lam[2] <= a[2];
        let signs: Vec<f64> = x.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect();
        let y = f.point_from_elliptic(&lam, &signs).unwrap();
        res = res.max((&y - &x).amax() / x.amax().max(1.0));
        let g: Vec<Vector> = lam
            .iter()
            .map(|l| {
                let v = Vector::from_iterator(3, (0..3).map(|i| x[i] / (a[i] - l)));
                &v / v.norm()
            })
            .collect();
        for i in 0..3 {
            for j in (i + 1)..3 {
                orth = orth.max(g[i].dot(&g[j]).abs());
            }
        }
    }
    Outcome {
        pass: res < 1e-9 && orth < 1e-9 && interlaced,
        detail: format!("reconstruction {res:.2e}, gradient orthogonality {orth:.2e} (< 1e-9), interlacing {interlaced}"),
    }
}

struct PeriodicInstance {
    f: ConfocalFamily,
    n: usize,
    alpha: Vec<f64>,
    report: CayleyReport,
}

fn periodic_instances() -> (Vec<PeriodicInstance>, Outcome) {
    let f = ConfocalFamily::new(vec![1.0, 2.0]).unwrap();
    let mut out = vec![];
    let mut pass = true;
    let mut parts = vec![];
    for n in 3..=7 {
        let s = caustic_search(&f, 0.0, n, (1e-6, 1.0 - 1e-6), None).unwrap();
        let rep = cayley_periodic(&f, &CausticSet::new(s.alpha.clone(), &f), n).unwrap();
        let margin = [-1e-2, 1e-2]
            .iter()
            .map(|d| cayley_periodic(&f, &CausticSet::new(vec![s.alpha[0] + d], &f), n).unwrap())
            .map(|r| if r.satisfied { 0.0 } else { r.deficiency })
            .fold(f64::INFINITY, f64::min);
        let ok = s.closure_gap < 1e-7 && rep.satisfied && rep.deficiency < 1e-6 && margin >= 1e-5;
        pass &= ok;
        parts.push(format!("n={n} a*={:.6} gap {:.1e} det {:.1e} off {:.1e}", s.alpha[0], s.closure_gap, rep.deficiency, margin));
        out.push(PeriodicInstance { f: f.clone(), n, alpha: s.alpha.clone(), report: rep });
    }
    let f3 = ConfocalFamily::new(vec![1.0, 3.0, 4.0]).unwrap();
    let s = caustic_search(&f3, 0.0, 3, (1.05, 1.5), Some(5.0 / 6.0)).unwrap();
    let rep = cayley_periodic(&f3, &CausticSet::new(s.alpha.clone(), &f3), 3).unwrap();
    let off = cayley_periodic(&f3, &CausticSet::new(vec![s.alpha[0], s.alpha[1] + 1e-2], &f3), 3).unwrap();
    let lg = s.lambda_gap.unwrap();
    let ok3 = lg < 1e-7 && s.geometric_gap_2n.unwrap() < 1e-7 && rep.satisfied && !off.satisfied && off.deficiency >= 1e-5;
    pass &= ok3;
    parts.push(format!("d=3 a*={:.6?} gap {lg:.1e} det {:.1e} off {:.1e}", s.alpha, rep.deficiency, off.deficiency));
    out.push(PeriodicInstance { f: f3, n: 3, alpha: s.alpha, report: rep });
    (out, Outcome { pass, detail: parts.join("; ") })
}

fn c4_porism(inst: &[PeriodicInstance]) -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut same_n = true;
    for p in inst.iter().filter(|p| p.f.dim() == 2) {
        for _ in 0..20 {
            let th: f64 = r.gen_range(0.0..std::f64::consts::TAU);
            let x = vector(&[th.cos(), 2f64.sqrt() * th.sin()]);
            let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            let v = p.f.direction_from_caustics(&x, &p.alpha, &[1.0, sign]).unwrap();
            let v = if v.dot(&x) > 0.0 { -v } else { v };
            let t = simulate(&p.f, 0.0, &x, &v, p.n).unwrap();
            worst = worst.max(closure_gap(&t, p.n));
            same_n &= detect_closure(&t, 1e-6) == Some(p.n);
        }
    }
    Outcome { pass: worst < 1e-6 && same_n, detail: format!("100 starts, worst gap {worst:.2e} (< 1e-6), same period {same_n}") }
}

fn c5_drc() -> Outcome {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0]).unwrap();
    let mut r = rng(5);
    let (mut pencil, mut sym) = (0.0f64, 0.0f64);
    let mut laws = true;
    let mut built = 0;
    while built < 50 {
        let x = random_interior(&f, &mut r);
        let v = random_unit(3, &mut r);
        let l = DirectedLine::new(&x, &v).unwrap();
        let lam1 = r.gen_range(-0.5..0.95);
        let lam2 = if r.gen_bool(0.5) { r.gen_range(1.05..1.95) } else { r.gen_range(2.05..2.95) };
        let Ok(q) = build_drc(&f, lam1, lam2, &l, r.gen_range(0..2), r.gen_range(0..2)) else { continue };
        built += 1;
        pencil = pencil.max(q.pencil().ratio);
        laws &= q.law_checks(&f, LawVariant::Metric).unwrap().iter().all(|b| *b);
        sym = sym.max(drc_symmetry_gap(&f, &q).unwrap());
    }
    Outcome {
        pass: pencil < 1e-9 && laws && sym < 1e-8,
        detail: format!("50 configurations, pencil ratio {pencil:.2e} (< 1e-9), laws {laws}, symmetry {sym:.2e}"),
    }
}

fn random_context(r: &mut ChaCha8Rng) -> AlgebraContext {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0]).unwrap();
    loop {
        let a1 = r.gen_range(0.2..0.9);
        let a2 = r.gen_range(1.1..1.9);
        let lam = [r.gen_range(0.02..a1 - 0.02), r.gen_range(1.02..a2 - 0.02), r.gen_range(2.05..2.95)];
        let oct: Vec<f64> = (0..3).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let sg: Vec<f64> = (0..3).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let Ok(x) = f.point_from_elliptic(&lam, &oct) else { continue };
        let Ok(v) = f.direction_from_caustics(&x, &[a1, a2], &sg) else { continue };
        let o = DirectedLine::new(&x, &v).unwrap();
        if let Ok(ctx) = AlgebraContext::new(&f, a1, a2, &o) {
            return ctx;
        }
    }
}

fn random_tag(ctx: &AlgebraContext, r: &mut ChaCha8Rng) -> Tag {
    loop {
        let t = r.gen_range(-2.5..2.5);
        if let Ok(tag) = ctx.tag_on_o(t, r.gen_range(0..3)) {
            if ctx.co_line(tag).is_ok() {
                return tag;
            }
        }
    }
}

/// Billiard trajectory from `O` with `n` reflections at random points on
/// confocal quadrics through points of the current line.
fn random_chain(ctx: &AlgebraContext, n: usize, r: &mut ChaCha8Rng) -> (Vec<DirectedLine>, Vec<Vector>, Vec<f64>) {
    'retry: loop {
        let f = &ctx.family;
        let mut lines = vec![ctx.o.clone()];
        let mut pts = vec![];
        let mut lams = vec![];
        for _ in 0..n {
            let cur = lines.last().unwrap().clone();
            let x = cur.point_at(r.gen_range(-2.0..2.0));
            let Ok(ec) = f.elliptic_coordinates(&x) else { continue 'retry };
            let lam = ec.lambda[r.gen_range(0..3)];
            if lams.iter().any(|l: &f64| (l - lam).abs() < 1e-3) {
                continue 'retry;
            }
            let Ok(nrm) = f.unit_normal(lam, &x) else { continue 'retry };
            if nrm.dot(&cur.v).abs() < 0.05 {
                continue 'retry;
            }
            lines.push(DirectedLine::new(&x, &mirror(&cur.v, &nrm)).unwrap());
            pts.push(x);
            lams.push(lam);
        }
        return (lines, pts, lams);
    }
}

fn signed_sum(ctx: &AlgebraContext, tags: &[Tag]) -> Result<Element> {
    let els: Vec<Element> = tags.iter().map(|t| ctx.element(*t)).collect::<Result<_>>()?;
    let s = ctx.sum(&els)?;
    if tags.len() % 2 == 1 {
        Ok(s)
    } else {
        ctx.negate(&s)
    }
}

fn c6_algebra() -> Outcome {
    let mut r = rng(6);
    let mut worst = [0.0f64; 4];
    let mut paths = [0usize; 3];
    for _ in 0..20 {
        let ctx = random_context(&mut r);
        let e: Vec<Element> = (0..3).map(|_| ctx.element(random_tag(&ctx, &mut r)).unwrap()).collect();
        let x = ctx.add(&e[0], &e[1]).unwrap();
        let y = ctx.add(&x, &e[2]).unwrap();
        worst[0] = worst[0].max(ctx.add(&y, &ctx.neutral()).unwrap().line.distance(&y.line));
        worst[1] = worst[1].max(ctx.add(&x, &ctx.negate(&x).unwrap()).unwrap().line.distance(&ctx.o));
        worst[2] = worst[2].max(ctx.add(&e[1], &e[0]).unwrap().line.distance(&x.line));
        let z = ctx.add(&e[0], &ctx.add(&e[1], &e[2]).unwrap()).unwrap();
        worst[3] = worst[3].max(z.line.distance(&y.line));
        for p in [y.path, z.path] {
            paths[p as usize] += 1;
        }
    }
    let group_ok = worst.iter().all(|w| *w < 1e-6);

    // sum of the four lines of a configuration tangent to the caustics
    let mut drc_zero = 0.0f64;
    let mut built = 0;
    while built < 20 {
        let ctx = random_context(&mut r);
        let (lines, pts, lams) = random_chain(&ctx, 1, &mut r);
        let l1 = &lines[1];
        let f = &ctx.family;
        let x1 = l1.point_at(r.gen_range(-2.0..2.0));
        let y1 = l1.point_at(r.gen_range(-2.0..2.0));
        let (Ok(c1), Ok(c2)) = (f.elliptic_coordinates(&x1), f.elliptic_coordinates(&y1)) else { continue };
        let (m1, m2) = (c1.lambda[r.gen_range(0..3)], c2.lambda[r.gen_range(0..3)]);
        if (m1 - m2).abs() < 1e-3 || (m1 - lams[0]).abs() < 1e-3 || (m2 - lams[0]).abs() < 1e-3 {
            continue;
        }
        let Ok(q) = build_drc_at(f, m1, &x1, m2, &y1, &l1.v) else { continue };
        // chains from O: (O, l1), (O, l1, l2), (O, l1, l1'), (O, l1, l2, l2')
        let chains: [(Vec<DirectedLine>, Vec<Vector>, Vec<f64>); 4] = [
            (vec![ctx.o.clone(), l1.clone()], vec![pts[0].clone()], vec![lams[0]]),
            (vec![ctx.o.clone(), l1.clone(), q.directed[1].clone()], vec![pts[0].clone(), x1.clone()], vec![lams[0], m1]),
            (vec![ctx.o.clone(), l1.clone(), q.directed[2].clone()], vec![pts[0].clone(), y1.clone()], vec![lams[0], m2]),
            (
                vec![ctx.o.clone(), l1.clone(), q.directed[1].clone(), q.directed[3].clone()],
                vec![pts[0].clone(), x1.clone(), q.points[2].clone()],
                vec![lams[0], m1, m2],
            ),
        ];
        let mut all = vec![];
        let mut ok = true;
        for (ls, ps, lm) in &chains {
            match ctx.divisor_d(ls, ps, lm) {
                Ok(d) => {
                    let signed: Vec<Tag> = if d.len() % 2 == 1 { d } else { d.iter().map(|t| t.tau()).collect() };
                    all.extend(signed);
                }
                Err(_) => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let Ok(line) = ctx.line_of(&cancel(&all)) else { continue };
        built += 1;
        drc_zero = drc_zero.max(line.distance(&ctx.o));
    }

    // final segment from the pulled back first reflections
    let mut elln = [0.0f64; 3];
    let mut elln_paths = vec![];
    for (k, n) in [2usize, 3, 4].into_iter().enumerate() {
        let mut done = 0;
        while done < 5 {
            let ctx = random_context(&mut r);
            let (lines, pts, lams) = random_chain(&ctx, n, &mut r);
            let Ok(d) = ctx.divisor_d(&lines, &pts, &lams) else { continue };
            let Ok(s) = signed_sum(&ctx, &d) else { continue };
            done += 1;
            elln[k] = elln[k].max(s.line.distance(&lines[n]));
            elln_paths.push(s.path);
        }
    }

    // -(p+q+s) = (-p)+(-q)+(-s)
    let mut lemma = 0.0f64;
    for _ in 0..10 {
        let ctx = random_context(&mut r);
        let t: Vec<Element> = (0..3).map(|_| ctx.element(random_tag(&ctx, &mut r)).unwrap()).collect();
        let lhs = ctx.negate(&ctx.sum(&t).unwrap()).unwrap();
        let neg: Vec<Element> = t.iter().map(|x| ctx.negate(x).unwrap()).collect();
        let rhs = ctx.sum(&neg).unwrap();
        lemma = lemma.max(lhs.line.distance(&rhs.line));
    }
    let fallback = elln_paths.iter().filter(|p| **p == Path::BilliardMap).count();
    let pass = group_ok && drc_zero < 1e-6 && elln.iter().all(|e| *e < 1e-6) && lemma < 1e-6;
    Outcome {
        pass,
        detail: format!(
            "neutral {:.1e} inverse {:.1e} commutative {:.1e} associative {:.1e}; drc sum {drc_zero:.1e}; \
             final segment n=2,3,4 {:.1e} {:.1e} {:.1e} ({fallback}/15 via billiard map); negation lemma {lemma:.1e}; \
             paths construction/decomposition/map {paths:?} (all < 1e-6)",
            worst[0], worst[1], worst[2], worst[3], elln[0], elln[1], elln[2]
        ),
    }
}

fn same_multiset(a: &[Tag], b: &[Tag]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|t| {
        match (0..b.len()).find(|&j| !used[j] && (b[j].lam - t.lam).abs() < 1e-9 && b[j].idx == t.idx) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

fn c7_divisor_maps() -> Outcome {
    let mut r = rng(7);
    let mut bd = 0.0f64;
    let mut db = true;
    for i in 0..20 {
        let ctx = random_context(&mut r);
        let n = 1 + i % 4;
        let (lines, pts, lams) = random_chain(&ctx, n, &mut r);
        let d = ctx.divisor_d(&lines, &pts, &lams).unwrap();
        let b = ctx.billiard_b(&d).unwrap();
        bd = bd.max(b.lines.last().unwrap().distance(&lines[n]));
        let s: Vec<Tag> = (0..n).map(|_| random_tag(&ctx, &mut r)).collect();
        let chain = ctx.billiard_b(&s).unwrap();
        let back = ctx.divisor_d(&chain.lines, &chain.points, &chain.params).unwrap();
        db &= same_multiset(&back, &s);
    }
    Outcome { pass: bd < 1e-6 && db, detail: format!("B(D(t)) final segment {bd:.2e} (< 1e-6), D(B(S)) = S {db}") }
}

fn c8_weak(inst: &[PeriodicInstance]) -> Outcome {
    let mut literal = true;
    let mut reordered = true;
    for p in inst {
        let c = CausticSet::new(p.alpha.clone(), &p.f);
        let w = cayley_weak(&p.f, &c, 2 * p.n, -1, 0.0).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        literal &= bits(&w.matrix) == bits(&p.report.matrix);
        let sv = w.singular_values.iter().zip(&p.report.singular_values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        reordered &= bits(&w.columns_reversed()) == bits(&p.report.matrix)
            && w.satisfied == p.report.satisfied
            && w.numerical_rank == p.report.numerical_rank
            && sv <= 1e-12 * p.report.singular_values[0];
    }
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0]).unwrap();
    let m = central_meet_search(&f, 0.0, 6, (1.1, 1.5), 0.9).unwrap();
    let on = cayley_weak(&f, &CausticSet::new(m.alpha.clone(), &f), 6, 0, 0.0).unwrap();
    let off: Vec<CayleyReport> = [1e-2, -1e-2]
        .iter()
        .map(|d| cayley_weak(&f, &CausticSet::new(vec![m.alpha[0], m.alpha[1] + d], &f), 6, 0, 0.0).unwrap())
        .collect();
    let mut porism = 0.0f64;
    for (l2, l3, s) in [(1.05, 2.1, 1.0), (1.15, 2.4, -1.0), (1.25, 2.7, 1.0)] {
        let x = f.point_from_elliptic(&[0.0, l2, l3], &[1.0, -1.0, s]).unwrap();
        let v = f.direction_from_caustics(&x, &m.alpha, &[1.0, 1.0, -1.0]).unwrap();
        let v = if v.dot(&f.unit_normal(0.0, &x).unwrap()) > 0.0 { -v } else { v };
        porism = porism.max(central_meet_gap(&f, 0.0, &x, &v, 6).unwrap().abs());
    }
    let s0 = on.satisfied && off.iter().all(|o| !o.satisfied) && m.gap.abs() < 1e-9 && porism < 1e-9;
    Outcome {
        pass: reordered && s0,
        detail: format!(
            "s=-1 (r=2n) matrices bit-identical as built {literal}, after column reversal {reordered} with equal verdicts; \
             s=0: segment 6 meets the reflected initial segment at a2={:.10} (gap {:.1e}, other starts {porism:.1e}), \
             weak det {:.1e} satisfied {}, at +-1e-2 {:.1e}/{:.1e}",
            m.alpha[1], m.gap, on.deficiency, on.satisfied, off[0].deficiency, off[1].deficiency
        ),
    }
}

fn orbit(f: &ConfocalFamily, alpha: f64, lam2: f64, signs: [f64; 2], n: usize) -> Trajectory {
    let x = f.point_from_elliptic(&[0.0, lam2], &[1.0, 1.0]).unwrap();
    let v = f.direction_from_caustics(&x, &[alpha], &signs).unwrap();
    let v = if v.dot(&x) > 0.0 { -v } else { v };
    simulate(f, 0.0, &x, &v, n).unwrap()
}

fn c9_grids() -> Outcome {
    let f = ConfocalFamily::new(vec![1.0, 2.0]).unwrap();
    let mut residual = 0.0f64;
    // (caustic type, case) -> (matches, total)
    let mut table = [[0usize; 2]; 4];
    let mut mismatches = vec![];
    let mut conventions_agree = true;
    let mut kdep = 0.0f64;
    for (alpha, l2a, l2b) in [(0.4, 1.6, 1.1), (1.5, 1.8, 1.95)] {
        let t = orbit(&f, alpha, l2a, [1.0, 1.0], 30);
        let t2 = orbit(&f, alpha, l2b, [1.0, -1.0], 30);
        for mode in [GridMode::Difference, GridMode::Sum] {
            for k in 1..=8i64 {
                let mut types = vec![];
                for origin in [15usize, 16] {
                    let mut g = collect_grid(&t, None, k, mode, origin).unwrap();
                    g.fit(&f).unwrap();
                    residual = residual.max(g.residual.unwrap());
                    let c = classify_grid(&f, alpha, GridRelation::Single { mode, k }, g.fitted_lambda.unwrap()).unwrap();
                    types.push(c.observed);
                    if origin == 15 {
                        let case = match (c.caustic_type, mode) {
                            (ConicType::Ellipse, GridMode::Difference) => 0,
                            (ConicType::Ellipse, _) => 1,
                            (ConicType::Hyperbola, _) if k % 2 == 0 => 2,
                            _ => 3,
                        };
                        table[case][1] += 1;
                        if c.consistent {
                            table[case][0] += 1;
                        } else {
                            mismatches.push(format!("{}{k}", if mode == GridMode::Difference { "P" } else { "Q" }));
                        }
                    }
                }
                conventions_agree &= types[0] == types[1];
                if mode == GridMode::Difference {
                    let mut g2 = collect_grid(&t2, None, k, mode, 15).unwrap();
                    g2.fit(&f).unwrap();
                    let mut g1 = collect_grid(&t, None, k, mode, 15).unwrap();
                    g1.fit(&f).unwrap();
                    kdep = kdep.max((g1.fitted_lambda.unwrap() - g2.fitted_lambda.unwrap()).abs());
                }
            }
        }
    }
    let a = orbit(&f, 0.4, 1.6, [1.0, 1.0], 30);
    let b = orbit(&f, 0.4, 1.1, [-1.0, 1.0], 30);
    let same = pair_relation(&a, &b, 0).unwrap();
    let mut g = collect_grid(&a, Some(&b), 0, GridMode::Pairs, 0).unwrap();
    g.fit(&f).unwrap();
    residual = residual.max(g.residual.unwrap());
    let half = same == Some(false) && g.conic_type == Some(ConicType::Hyperbola) && half_branch_check(&g.points);
    let table_ok = table.iter().all(|c| c[0] == c[1]);
    Outcome {
        pass: residual < 1e-8 && table_ok && kdep < 1e-6 && half,
        detail: format!(
            "residual {residual:.2e} (< 1e-8); table matches elliptic-P {}/{}, elliptic-Q {}/{}, hyperbolic-even {}/{}, \
             hyperbolic-odd {}/{} (mismatched under hyperbolic caustic: {}); index conventions agree {conventions_agree}; \
             k-dependence {kdep:.2e} (< 1e-6); half-branches {half}",
            table[0][0], table[0][1], table[1][0], table[1][1], table[2][0], table[2][1], table[3][0], table[3][1],
            mismatches.join(" ")
        ),
    }
}

fn c10_skew() -> Outcome {
    let f = ConfocalFamily::new(vec![1.0, 2.0, 3.0]).unwrap();
    let x = f.point_from_elliptic(&[0.2, 1.2, 2.5], &[1.0, 1.0, -1.0]).unwrap();
    let v = f.direction_from_caustics(&x, &[0.5, 1.5], &[1.0, -1.0, 1.0]).unwrap();
    let a = simulate(&f, 0.0, &x, &v, 12).unwrap();
    let xp = a.directed(0).point_at(0.1);
    let mu = f.elliptic_coordinates(&xp).unwrap().lambda[1];
    let w = mirror(&a.directions[0], &f.unit_normal(mu, &xp).unwrap());
    let b0 = simulate(&f, 0.0, &xp, &w, 12).unwrap();
    let y = f.point_from_elliptic(&[0.35, 1.1, 2.2], &[-1.0, 1.0, 1.0]).unwrap();
    let u = f.direction_from_caustics(&y, &[0.5, 1.5], &[-1.0, 1.0, 1.0]).unwrap();
    let b1 = simulate(&f, 0.0, &y, &u, 12).unwrap();
    let mut pass = true;
    let mut parts = vec![];
    for (want, b) in [(-1i64, &a), (0, &b0), (1, &b1)] {
        let p = grid_skew_profile(&a, b, 0..11).unwrap();
        let ok = p.s_constant && p.classes[0].s == want && p.quadric_spread < 1e-6;
        pass &= ok;
        parts.push(format!("s={want}: constant {} spread {:.1e} quadrics {:.6?}", p.s_constant, p.quadric_spread, p.classes[0].connecting_quadrics));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c11_star() -> Outcome {
    let mut r = rng(11);
    let (mut tr, mut qu) = (0.0f64, 0.0f64);
    let mut inc = true;
    let mut done = 0;
    while done < 5 {
        let ctx = random_context(&mut r);
        let t = [random_tag(&ctx, &mut r), random_tag(&ctx, &mut r), random_tag(&ctx, &mut r)];
        let Ok(st) = ctx.star_configuration(t[0], t[1], t[2]) else { continue };
        done += 1;
        tr = tr.max(st.triplet_collinearity.iter().copied().fold(0.0, f64::max));
        qu = qu.max(st.quadruplet_pencils.iter().map(|p| p.ratio).fold(0.0, f64::max));
        let count = st.triplet_incidence.iter().sum::<usize>() + st.quadruplet_incidence.iter().sum::<usize>();
        inc &= st.triplets.len() == 8 && st.quadruplets.len() == 6 && count == 48
            && st.triplet_incidence.iter().chain(&st.quadruplet_incidence).all(|c| *c == 2);
    }
    Outcome {
        pass: tr < 1e-9 && qu < 1e-9 && inc,
        detail: format!("triplet collinearity {tr:.2e}, quadruplet pencil {qu:.2e} (< 1e-9), incidences 24/24 {inc}"),
    }
}

fn run_cli(args: &[&str], out: &std::path::Path) -> std::io::Result<std::process::ExitStatus> {
    Command::new(env!("CARGO_BIN_EXE_confocal")).args(args).arg("--out").arg(out).output().map(|o| o.status)
}

fn untimed(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"wall_time_ms\"")).collect::<Vec<_>>().join("\n") + "\n"
}

fn c12_golden() -> Outcome {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let golden = root.join("tests/golden");
    let bless = std::env::var_os("CONFOCAL_BLESS").is_some();
    let tmp = std::env::temp_dir().join(format!("confocal-acceptance-{}", std::process::id()));
    let cases = [
        ("render", "render_period3.json", "scene.svg", "period3.svg"),
        ("grid", "grid_elliptic.json", "scene.svg", "grid_elliptic.svg"),
        ("cayley-check", "cayley_check_n3.json", "report.json", "cayley_check_n3.json"),
    ];
    let mut pass = true;
    let mut parts = vec![];
    for (cmd, cfg, file, gold) in cases {
        let cfg = root.join("configs").join(cfg);
        let mut runs = vec![];
        for k in 0..2 {
            let dir = tmp.join(format!("{gold}-{k}"));
            let status = run_cli(&[cmd, "--config", cfg.to_str().unwrap(), "--seed", "0", "--svg"], &dir);
            let text = std::fs::read_to_string(dir.join(file)).unwrap_or_default();
            runs.push((status.map(|s| s.code()).ok().flatten(), untimed(&text)));
        }
        let gpath = golden.join(gold);
        if bless {
            std::fs::create_dir_all(&golden).unwrap();
            std::fs::write(&gpath, &runs[0].1).unwrap();
        }
        let g = std::fs::read_to_string(&gpath).unwrap_or_default();
        let ok = runs[0].0 == Some(0) && runs[0].1 == runs[1].1 && runs[0].1 == g && !g.is_empty();
        pass &= ok;
        parts.push(format!("{gold} {}", if ok { "identical" } else { "differs" }));
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Outcome { pass, detail: parts.join(", ") }
}

fn main() {
    let start = std::time::Instant::now();
    let mut all = vec![];
    let mut run = |id: usize, name: &str, o: Outcome| {
        report(id, name, &o);
        all.push(o.pass);
    };
    run(1, "caustic conservation", c1_caustic_conservation());
    run(2, "elliptic coordinates", c2_jacobi());
    let (inst, o3) = periodic_instances();
    run(3, "periodicity condition and closure", o3);
    run(4, "porism", c4_porism(&inst));
    run(5, "double reflection configurations", c5_drc());
    run(6, "billiard algebra", c6_algebra());
    run(7, "divisor and billiard maps", c7_divisor_maps());
    run(8, "weak periodicity", c8_weak(&inst));
    run(9, "planar grids", c9_grids());
    run(10, "grid skewness in space", c10_skew());
    run(11, "star configuration", c11_star());
    run(12, "command line determinism", c12_golden());
    let passed = all.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria pass in {:.1}s", all.len(), start.elapsed().as_secs_f64());
}
