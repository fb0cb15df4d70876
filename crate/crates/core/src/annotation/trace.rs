//! Outer-boundary tracing of labeled components on the pixel-corner lattice.
//!
//! Pixel `(x, y)` covers `[x, x+1) x [y, y+1)`, so boundary vertices have
//! integer coordinates. The walk keeps the component on its left, which is
//! counter-clockwise as displayed (y pointing down). At a vertex where two
//! pixels of the component touch only diagonally, the walk turns so that it
//! stays with the current pixel, consistent with 4-connectivity.

pub type Vertex = (i64, i64);

/// Headings in screen coordinates.
const SOUTH: (i64, i64) = (0, 1);

fn turn_left((dx, dy): (i64, i64)) -> (i64, i64) {
    (dy, -dx)
}

fn turn_right((dx, dy): (i64, i64)) -> (i64, i64) {
    (-dy, dx)
}

/// Pixels ahead-left and ahead-right of vertex `v` when facing `dir`.
fn ahead(v: Vertex, dir: (i64, i64)) -> (Vertex, Vertex) {
    let (x, y) = v;
    match dir {
        (0, 1) => ((x, y), (x - 1, y)),
        (1, 0) => ((x, y - 1), (x, y)),
        (0, -1) => ((x - 1, y - 1), (x, y - 1)),
        (-1, 0) => ((x - 1, y), (x - 1, y - 1)),
        _ => unreachable!("axis-aligned heading"),
    }
}

/// Traces the outer boundary of component `id` in `labels` (row-major,
/// `width` columns). `start` must be the component's first pixel in raster
/// order. Returns the corner vertices where the boundary changes direction,
/// beginning at the top-left corner of `start`.
pub fn trace_outer(labels: &[u32], width: usize, height: usize, id: u32, start: (u32, u32)) -> Vec<Vertex> {
    let inside = |(x, y): Vertex| -> bool {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height && labels[y as usize * width + x as usize] == id
    };

    let origin: Vertex = (start.0 as i64, start.1 as i64);
    let mut vertices = vec![origin];
    let mut dir = SOUTH;
    let mut v = (origin.0 + dir.0, origin.1 + dir.1);
    while v != origin {
        let (left, right) = ahead(v, dir);
        let next = match (inside(left), inside(right)) {
            (true, false) => dir,
            (true, true) => turn_right(dir),
            (false, false) => turn_left(dir),
            // Diagonal contact only: hug the current pixel.
            (false, true) => turn_left(dir),
        };
        if next != dir {
            vertices.push(v);
            dir = next;
        }
        v = (v.0 + dir.0, v.1 + dir.1);
    }
    vertices
}

/// Even-odd test of a point against a closed polygon.
pub fn contains(polygon: &[(f64, f64)], px: f64, py: f64) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let (x1, y1) = polygon[i];
        let (x2, y2) = polygon[(i + 1) % n];
        if (y1 <= py) != (y2 <= py) {
            let x = x1 + (py - y1) * (x2 - x1) / (y2 - y1);
            if px < x {
                inside = !inside;
            }
        }
    }
    inside
}
