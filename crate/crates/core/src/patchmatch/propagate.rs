use alloc::vec::Vec;

use super::refine::{random_refinement, RefineSchedule};
use super::rng::{pixel_rng, refine_pass};
use super::{DepthRange, GroupMatcher, PatchMatchParams, PlaneMap};
use crate::fastmath::dot3;
use crate::geometry::PlaneHypothesis;
use crate::par::map_range;

/// Checkerboard class of pixel `(x, y)`: red when `x + y` is even.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Red,
    Black,
}

impl Parity {
    pub fn of(x: u32, y: u32) -> Parity {
        if (x + y).is_multiple_of(2) {
            Parity::Red
        } else {
            Parity::Black
        }
    }

    fn index(self) -> u32 {
        match self {
            Parity::Red => 0,
            Parity::Black => 1,
        }
    }
}

/// Offsets `(dx, dy)` of the eight neighbors read by a pixel. All have odd
/// `|dx| + |dy|`, so they belong to the opposite checkerboard class: the four
/// adjacent pixels plus four at distance three along the axes.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 8] = [
    (0, -1),
    (-1, 0),
    (1, 0),
    (0, 1),
    (0, -3),
    (-3, 0),
    (3, 0),
    (0, 3),
];

struct Refinement<'a> {
    iteration: u32,
    schedule: &'a RefineSchedule,
    seed: u64,
}

/// One propagation pass over the pixels of `parity`: each adopts the
/// cheapest of its neighbors' planes if it beats its own. Reads only the
/// input map, so the result does not depend on processing order. Columns
/// wrap around the seam.
pub fn red_black_iteration(
    map: &PlaneMap,
    matcher: &GroupMatcher,
    range: &DepthRange,
    parity: Parity,
) -> PlaneMap {
    let mut map = map.clone();
    evaluate_missing(&mut map, matcher);
    sweep_impl(&map, matcher, range, parity, None, None).0
}

/// Pixels whose neighborhood changed since they were last processed.
/// Propagation at a clean pixel would retry exactly the candidates that lost
/// before against a cost that has only decreased since, so it is skipped.
#[derive(Debug, Clone)]
pub(crate) struct DirtySet {
    width: u32,
    height: u32,
    flags: Vec<bool>,
}

impl DirtySet {
    pub fn all(map: &PlaneMap) -> Self {
        DirtySet {
            width: map.camera().width(),
            height: map.camera().height(),
            flags: alloc::vec![true; map.len()],
        }
    }

    fn is_dirty(&self, i: usize) -> bool {
        self.flags[i]
    }

    /// Clears the processed pixels and marks every pixel that reads a
    /// changed one.
    fn update(&mut self, parity: Parity, changed: &[usize]) {
        let (w, h) = (self.width, self.height);
        for y in 0..h {
            let start = (y + parity.index()) % 2;
            for x in (start..w).step_by(2) {
                self.flags[(y * w + x) as usize] = false;
            }
        }
        for &i in changed {
            let (x, y) = ((i as u32 % w) as i64, (i as u32 / w) as i64);
            for (dx, dy) in NEIGHBOR_OFFSETS {
                let ny = y - dy as i64;
                if ny < 0 || ny >= h as i64 {
                    continue;
                }
                let nx = (x - dx as i64).rem_euclid(w as i64);
                self.flags[(ny * w as i64 + nx) as usize] = true;
            }
        }
    }
}

/// Propagation at dirty pixels and, when `iteration` is given, random
/// refinement everywhere.
pub(crate) fn sweep(
    map: &PlaneMap,
    matcher: &GroupMatcher,
    params: &PatchMatchParams,
    parity: Parity,
    iteration: Option<u32>,
    dirty: &mut DirtySet,
) -> PlaneMap {
    let refinement = iteration.map(|iteration| Refinement {
        iteration,
        schedule: &params.refine,
        seed: params.seed,
    });
    let (out, changed) = sweep_impl(map, matcher, &params.depth, parity, refinement, Some(dirty));
    dirty.update(parity, &changed);
    out
}

fn sweep_impl(
    map: &PlaneMap,
    matcher: &GroupMatcher,
    range: &DepthRange,
    parity: Parity,
    refinement: Option<Refinement<'_>>,
    dirty: Option<&DirtySet>,
) -> (PlaneMap, Vec<usize>) {
    let (w, h) = (map.camera().width(), map.camera().height());
    let rows: Vec<Vec<(usize, PlaneHypothesis, f32)>> = map_range(h as usize, |y| {
        let y = y as u32;
        let start = (y + parity.index()) % 2;
        (start..w)
            .step_by(2)
            .filter_map(|x| {
                let i = map.index(x, y);
                let propagate = dirty.is_none_or(|d| d.is_dirty(i));
                let (old, _) = map.get_index(i)?;
                let (plane, cost) =
                    update_pixel(map, matcher, range, x, y, propagate, refinement.as_ref())?;
                (!plane.bit_eq(&old)).then_some((i, plane, cost))
            })
            .collect()
    });
    let mut out = map.clone();
    let mut changed = Vec::new();
    for (i, plane, cost) in rows.into_iter().flatten() {
        out.set_index(i, plane, cost);
        changed.push(i);
    }
    (out, changed)
}

fn update_pixel(
    map: &PlaneMap,
    matcher: &GroupMatcher,
    range: &DepthRange,
    x: u32,
    y: u32,
    propagate: bool,
    refinement: Option<&Refinement<'_>>,
) -> Option<(PlaneHypothesis, f32)> {
    let (mut best, mut best_cost) = map.get(x, y)?;
    let grid = matcher.grid();
    let ray = *grid.ray(x, y);
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let mut tried: [Option<PlaneHypothesis>; 8] = [None; 8];
    let offsets: &[(i32, i32)] = if propagate { &NEIGHBOR_OFFSETS } else { &[] };
    for (slot, &(dx, dy)) in offsets.iter().enumerate() {
        let ny = y as i64 + dy as i64;
        if ny < 0 || ny >= h {
            continue;
        }
        let nx = (x as i64 + dx as i64).rem_euclid(w) as u32;
        let Some((nb, _)) = map.get(nx, ny as u32) else {
            continue;
        };
        // the neighbor's plane, re-expressed along this pixel's ray
        let facing = dot3(&nb.normal, &ray);
        if !(facing < 0.0) {
            continue;
        }
        let depth = nb.depth * dot3(&nb.normal, grid.ray(nx, ny as u32)) / facing;
        if !range.contains(depth) {
            continue;
        }
        let candidate = PlaneHypothesis::new(depth, nb.normal);
        if candidate.bit_eq(&best) || tried.iter().flatten().any(|t| t.bit_eq(&candidate)) {
            continue;
        }
        tried[slot] = Some(candidate);
        let c = matcher.cost_below(x, y, &candidate, best_cost);
        if c < best_cost {
            best = candidate;
            best_cost = c;
        }
    }
    if let Some(r) = refinement {
        let (east, north) = grid.tangents(x, y);
        let pass = refine_pass(r.iteration, Parity::of(x, y).index());
        let mut rng = pixel_rng(r.seed, pass, x, y, grid.quarter());
        (best, best_cost) = random_refinement(
            best,
            best_cost,
            (&ray, &east, &north),
            r.schedule,
            range,
            &mut rng,
            |p, bound| matcher.cost_below(x, y, p, bound),
        );
    }
    Some((best, best_cost))
}

/// Recomputes the cost of every valid pixel against `matcher`.
pub(crate) fn evaluate_all(map: &mut PlaneMap, matcher: &GroupMatcher) {
    evaluate_where(map, matcher, |_| true);
}

fn evaluate_missing(map: &mut PlaneMap, matcher: &GroupMatcher) {
    evaluate_where(map, matcher, |c| c == f32::INFINITY);
}

fn evaluate_where(map: &mut PlaneMap, matcher: &GroupMatcher, pred: impl Fn(f32) -> bool + Sync) {
    let w = map.camera().width() as usize;
    let view: &PlaneMap = map;
    let costs = map_range(view.len(), |i| {
        let (plane, cost) = view.get_index(i)?;
        pred(cost).then(|| matcher.cost((i % w) as u32, (i / w) as u32, &plane))
    });
    for (i, c) in costs.into_iter().enumerate() {
        if let Some(c) = c {
            let plane = map.planes()[i];
            map.set_index(i, plane, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_have_opposite_parity() {
        for (dx, dy) in NEIGHBOR_OFFSETS {
            assert_eq!((dx.abs() + dy.abs()) % 2, 1);
        }
        assert_eq!(Parity::of(0, 0), Parity::Red);
        assert_eq!(Parity::of(1, 0), Parity::Black);
    }
}
