//! Outer-boundary tracing of 8-connected components.

use std::collections::VecDeque;

use super::BitMask;

/// Closed outer boundary of one component, clockwise in image coordinates
/// (x right, y down). The start point is the component's first pixel in
/// raster order and is not repeated at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(u32, u32)>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Clockwise ring starting west: W, NW, N, NE, E, SE, S, SW.
const RING: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

fn ring_index(dx: i64, dy: i64) -> usize {
    RING.iter().position(|&d| d == (dx, dy)).expect("neighbor offset")
}

/// Labels 8-connected components; returns per-pixel labels (0 = background)
/// and the raster-order start pixel of each component.
fn label_components(mask: &BitMask) -> (Vec<u32>, Vec<(u32, u32)>) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w as usize * h as usize];
    let mut starts = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !mask.get(x, y) || labels[idx] != 0 {
                continue;
            }
            starts.push((x, y));
            let label = starts.len() as u32;
            labels[idx] = label;
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for (dx, dy) in RING {
                    let (nx, ny) = (i64::from(cx) + dx, i64::from(cy) + dy);
                    if mask.get_signed(nx, ny) {
                        let nidx = (ny as u32 * w + nx as u32) as usize;
                        if labels[nidx] == 0 {
                            labels[nidx] = label;
                            queue.push_back((nx as u32, ny as u32));
                        }
                    }
                }
            }
        }
    }
    (labels, starts)
}

fn trace(mask: &BitMask, start: (u32, u32)) -> Contour {
    let mut points = vec![start];
    let (sx, sy) = (i64::from(start.0), i64::from(start.1));
    // the west neighbor of the first raster-order pixel is always background
    let (mut px, mut py) = (sx, sy);
    let (mut bx, mut by) = (sx - 1, sy);
    let limit = 4 * (mask.width() as usize * mask.height() as usize) + 8;

    loop {
        let from = ring_index(bx - px, by - py);
        let mut next = None;
        let (mut prev_x, mut prev_y) = (bx, by);
        for step in 1..=8 {
            let (dx, dy) = RING[(from + step) % 8];
            let (cx, cy) = (px + dx, py + dy);
            if mask.get_signed(cx, cy) {
                next = Some((cx, cy, prev_x, prev_y));
                break;
            }
            prev_x = cx;
            prev_y = cy;
        }
        let Some((cx, cy, nbx, nby)) = next else {
            // isolated pixel
            break;
        };
        // back at the start and about to repeat the first move: done
        if (px, py) == (sx, sy) && points.len() > 1 && (cx as u32, cy as u32) == points[1] {
            break;
        }
        points.push((cx as u32, cy as u32));
        if points.len() > limit {
            break;
        }
        (px, py, bx, by) = (cx, cy, nbx, nby);
    }

    // the final move returns to the start, which is already the first point
    if points.len() > 1 && points.last() == Some(&start) {
        points.pop();
    }
    Contour { points }
}

/// One outer contour per 8-connected component, in raster order of the
/// components' first pixels. Traced by Moore-neighbor border following.
pub fn contours(mask: &BitMask) -> Vec<Contour> {
    let (_, starts) = label_components(mask);
    starts.into_iter().map(|s| trace(mask, s)).collect()
}
