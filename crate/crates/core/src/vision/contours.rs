use super::edges::EdgeMap;

/// A traced border with its enclosed area.
///
/// `boundary` lists pixel coordinates `(x, y)` in tracing order; the last
/// point is an 8-neighbour of the first, closing the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub boundary: Vec<(u32, u32)>,
    /// Shoelace area of the boundary polygon through pixel centres, px².
    pub area: f64,
}

/// Absolute shoelace area of a closed polygon.
pub fn shoelace_area(points: &[(u32, u32)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut twice = 0i64;
    for (i, &(x0, y0)) in points.iter().enumerate() {
        let (x1, y1) = points[(i + 1) % points.len()];
        twice += i64::from(x0) * i64::from(y1) - i64::from(x1) * i64::from(y0);
    }
    twice.unsigned_abs() as f64 / 2.0
}

// Clockwise neighbour offsets (row, col) starting east, in image coordinates
// where rows grow downward.
const DIRS: [(i32, i32); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

fn dir_index(from: (i32, i32), to: (i32, i32)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|x| *x == d).expect("neighbour")
}

/// Regions enclosed by edge pixels, found by Suzuki–Abe border following.
///
/// Edge pixels are the 8-connected foreground. Only hole borders are
/// returned: each is the ring of edge pixels around a background region that
/// does not reach the image border. An outline drawn around an object
/// therefore yields one contour whose area approximates the object's.
pub fn trace_contours(edges: &EdgeMap) -> Vec<Contour> {
    let (w, h) = (edges.width() as i32 + 2, edges.height() as i32 + 2);
    let idx = |r: i32, c: i32| (r * w + c) as usize;
    // Padded label image: 0 background, 1 unvisited foreground, ±n border n.
    let mut f = vec![0i32; (w * h) as usize];
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if edges.get(x, y) {
                f[idx(y as i32 + 1, x as i32 + 1)] = 1;
            }
        }
    }

    let mut nbd = 1;
    let mut out = Vec::new();
    for i in 1..h - 1 {
        for j in 1..w - 1 {
            let v = f[idx(i, j)];
            if v == 0 {
                continue;
            }
            let start = if v == 1 && f[idx(i, j - 1)] == 0 {
                Some(((i, j - 1), false))
            } else if v >= 1 && f[idx(i, j + 1)] == 0 {
                Some(((i, j + 1), true))
            } else {
                None
            };
            let Some((from, is_hole)) = start else {
                continue;
            };
            nbd += 1;
            let points = follow(&mut f, w, (i, j), from, nbd);
            if is_hole {
                let boundary: Vec<(u32, u32)> = points
                    .iter()
                    .map(|&(r, c)| ((c - 1) as u32, (r - 1) as u32))
                    .collect();
                let area = shoelace_area(&boundary);
                out.push(Contour { boundary, area });
            }
        }
    }
    out
}

/// Border following from `start`, entered from background pixel `from`.
/// Relabels the border in `f` and returns its pixels in order.
fn follow(f: &mut [i32], w: i32, start: (i32, i32), from: (i32, i32), nbd: i32) -> Vec<(i32, i32)> {
    let at = |f: &[i32], p: (i32, i32)| f[(p.0 * w + p.1) as usize];
    let step = |p: (i32, i32), k: usize| (p.0 + DIRS[k].0, p.1 + DIRS[k].1);

    // Clockwise from `from` around `start` for the first foreground pixel.
    let d0 = dir_index(start, from);
    let first = (0..8)
        .map(|k| (d0 + k) % 8)
        .find(|&k| at(f, step(start, k)) != 0);
    let Some(k1) = first else {
        f[(start.0 * w + start.1) as usize] = -nbd;
        return vec![start];
    };
    let p1 = step(start, k1);
    let (mut p2, mut p3) = (p1, start);
    let mut points = Vec::new();
    loop {
        // Counter-clockwise around p3, starting just after p2.
        let d = dir_index(p3, p2);
        let mut east_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let kk = (d + 8 - k) % 8;
            let q = step(p3, kk);
            if at(f, q) != 0 {
                p4 = q;
                break;
            }
            if kk == 0 {
                east_zero = true;
            }
        }
        let cell = &mut f[(p3.0 * w + p3.1) as usize];
        if east_zero {
            *cell = -nbd;
        } else if *cell == 1 {
            *cell = nbd;
        }
        points.push(p3);
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    points
}
