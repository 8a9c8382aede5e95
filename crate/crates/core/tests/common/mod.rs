#![allow(dead_code)]

use rand::Rng;
use thompson_approx::{Dyadic, PLMap, Point, Space};

/// Random standard dyadic partition of [0, 1] into `pieces` intervals,
/// obtained by halving random intervals; no interval gets shorter than
/// `2^-max_depth`.
pub fn random_partition<R: Rng>(rng: &mut R, pieces: usize, max_depth: u64) -> Vec<Dyadic> {
    // (left endpoint, depth)
    let mut cells: Vec<(Dyadic, u64)> = vec![(Dyadic::zero(), 0)];
    while cells.len() < pieces {
        let i = rng.gen_range(0..cells.len());
        let (left, depth) = cells[i].clone();
        if depth >= max_depth {
            if cells.iter().all(|c| c.1 >= max_depth) {
                break;
            }
            continue;
        }
        let mid = &left + &Dyadic::new(1, depth + 1);
        cells[i].1 = depth + 1;
        cells.insert(i + 1, (mid, depth + 1));
    }
    let mut xs: Vec<Dyadic> = cells.into_iter().map(|c| c.0).collect();
    xs.push(Dyadic::one());
    xs
}

/// Random element of F built from two dyadic partitions with the same
/// number of pieces. Keep `max_depth` large enough (`2^max_depth >= 12`) for
/// both partitions to reach that count.
pub fn random_interval_element<R: Rng>(rng: &mut R, max_depth: u64) -> PLMap {
    let pieces = rng.gen_range(1..=12);
    let xs = random_partition(rng, pieces, max_depth);
    let ys = random_partition(rng, xs.len() - 1, max_depth);
    assert_eq!(xs.len(), ys.len());
    let points = xs.into_iter().zip(ys).map(|(x, y)| Point::new(x, y)).collect();
    PLMap::new(Space::Interval, points).unwrap()
}

/// Random element of T: the cells of one partition are sent to the cells of
/// another, cyclically shifted.
pub fn random_circle_element<R: Rng>(rng: &mut R, max_depth: u64) -> PLMap {
    let pieces = rng.gen_range(1..=12);
    let xs = random_partition(rng, pieces, max_depth);
    let ys = random_partition(rng, xs.len() - 1, max_depth);
    assert_eq!(xs.len(), ys.len());
    let cells = xs.len() - 1;
    let shift = rng.gen_range(0..cells);
    let points = (0..=cells)
        .map(|j| {
            let k = shift + j;
            let y = if k <= cells {
                ys[k].clone()
            } else {
                &ys[k - cells] + &Dyadic::one()
            };
            Point::new(xs[j].clone(), y)
        })
        .collect();
    PLMap::new(Space::CircleLift, points).unwrap()
}

pub fn random_element<R: Rng>(rng: &mut R, space: Space, max_depth: u64) -> PLMap {
    match space {
        Space::Interval => random_interval_element(rng, max_depth),
        Space::CircleLift => random_circle_element(rng, max_depth),
    }
}
