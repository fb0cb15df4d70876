//! Douglas-Peucker simplification of closed rings.

pub type Point = (f64, f64);

/// Distance from `p` to the segment `a`-`b`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Simplifies a closed ring (first vertex not repeated at the end). Every
/// dropped vertex lies within `epsilon` of the kept chain; kept vertices keep
/// their original order. `epsilon <= 0` returns the ring unchanged.
pub fn simplify_ring(ring: &[Point], epsilon: f64) -> Vec<Point> {
    let n = ring.len();
    if epsilon <= 0.0 || n <= 3 {
        return ring.to_vec();
    }
    // Split the ring at vertex 0 and the vertex farthest from it.
    let far = (1..n)
        .max_by(|&i, &j| {
            let d = |k: usize| (ring[k].0 - ring[0].0).powi(2) + (ring[k].1 - ring[0].1).powi(2);
            d(i).total_cmp(&d(j)).then(j.cmp(&i))
        })
        .expect("ring has more than three vertices");

    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let at = |i: usize| ring[i % n];
    let mut stack = vec![(0usize, far), (far, n)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (pa, pb) = (at(a), at(b));
        let (mut worst, mut worst_d) = (a, -1.0);
        for (i, &p) in ring.iter().enumerate().take(b).skip(a + 1) {
            let d = segment_distance(p, pa, pb);
            if d > worst_d {
                worst = i;
                worst_d = d;
            }
        }
        if worst_d > epsilon {
            keep[worst] = true;
            stack.push((a, worst));
            stack.push((worst, b));
        }
    }
    ring.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()
}
