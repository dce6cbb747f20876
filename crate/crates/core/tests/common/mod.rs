use std::collections::HashMap;

/// Length of a union of intervals on a grid of `cells` cells over their
/// bounding interval, with the cell width.
///
/// Cells lying inside one interval count fully; every other cell counts
/// the length of its own clipped pieces.
pub fn raster_length(raw: &[(f64, f64)], cells: usize) -> (f64, f64) {
    let lo = raw.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
    let hi = raw.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max);
    let w = (hi - lo) / cells as f64;
    if !(w > 0.0) {
        return (0.0, 0.0);
    }
    let cell_of = |x: f64| (((x - lo) / w).floor().max(0.0) as usize).min(cells - 1);
    let mut diff = vec![0i64; cells + 1];
    let mut partial: HashMap<usize, Vec<(f64, f64)>> = HashMap::new();
    for &(a, b) in raw {
        let (ca, cb) = (cell_of(a), cell_of(b));
        for c in [ca, cb] {
            let (l, h) = (lo + c as f64 * w, lo + (c + 1) as f64 * w);
            partial.entry(c).or_default().push((a.max(l), b.min(h)));
        }
        if cb > ca + 1 {
            diff[ca + 1] += 1;
            diff[cb] -= 1;
        }
    }
    let mut depth = 0;
    let mut total = 0.0;
    for (c, d) in diff[..cells].iter().enumerate() {
        depth += d;
        if depth > 0 {
            total += w;
        } else if let Some(pieces) = partial.get_mut(&c) {
            pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut end = f64::NEG_INFINITY;
            for &(a, b) in pieces.iter() {
                let start = a.max(end);
                if b > start {
                    total += b - start;
                    end = b;
                }
            }
        }
    }
    (total, w)
}

/// Masses of the survivor sets of the removal rounds, found by following
/// every infinite word one symbol at a time. A branch stops once it is
/// removed or has survived every round.
#[allow(dead_code)]
pub fn pathwise_removal_masses(
    ifs: &favlab_core::Ifs,
    target: &favlab_core::Word,
    phi: f64,
    eps: f64,
    a: &favlab_core::Word,
    steps: usize,
) -> Vec<f64> {
    use favlab_core::rotation::steering_suffix;
    use favlab_core::{Ifs, Word};

    struct Ctx<'a> {
        ifs: &'a Ifs,
        target: &'a Word,
        phi: f64,
        eps: f64,
        a: &'a Word,
        steps: usize,
    }

    fn walk(ctx: &Ctx, prefix: &mut Vec<u8>, v_len: usize, x: &Word, step: usize, masses: &mut [f64]) {
        let tail_len = prefix.len() - v_len;
        if tail_len > 0 && prefix[prefix.len() - 1] != x.indices()[tail_len - 1] {
            let w = Word::from_indices(prefix.clone());
            masses[step + 1] += ctx.ifs.mu_mass(&w).unwrap();
            if step + 1 == ctx.steps {
                return;
            }
            let nx = steering_suffix(ctx.ifs, &w, ctx.phi, ctx.eps, ctx.a).unwrap().concat(ctx.target);
            let len = prefix.len();
            for y in 0..ctx.ifs.len() as u8 {
                prefix.push(y);
                walk(ctx, prefix, len, &nx, step + 1, masses);
                prefix.pop();
            }
            return;
        }
        if tail_len == x.len() {
            return;
        }
        for y in 0..ctx.ifs.len() as u8 {
            prefix.push(y);
            walk(ctx, prefix, v_len, x, step, masses);
            prefix.pop();
        }
    }

    let mut masses = vec![0.0; steps + 1];
    masses[0] = 1.0;
    if steps == 0 {
        return masses;
    }
    let ctx = Ctx { ifs, target, phi, eps, a, steps };
    let x = steering_suffix(ifs, &Word::empty(), phi, eps, a).unwrap().concat(target);
    walk(&ctx, &mut Vec::new(), 0, &x, 0, &mut masses);
    masses
}
