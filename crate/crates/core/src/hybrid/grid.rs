//! Equidistant diffusion grid merged with reference-process arrivals.

/// A stepping point. `jump` carries the arrival that lands here, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<P> {
    pub t: f64,
    pub jump: Option<P>,
}

impl<P> GridPoint<P> {
    pub fn is_jump(&self) -> bool {
        self.jump.is_some()
    }
}

/// Streams the union of `{t0, t0+h, ..., t1}` and the arrival times in
/// `(t0, t1]`, in order. Arrivals must be sorted.
///
/// Grid times are computed as `t0 + k h`, so grids whose steps differ by a
/// power of two share their points bit for bit. An arrival within
/// `1e-12 * t1` of a grid point is merged into it: the point keeps the grid
/// time and takes on the jump.
pub struct MergedGrid<P, I> {
    jumps: I,
    pending: Option<(f64, P)>,
    t0: f64,
    t1: f64,
    h: f64,
    cells: usize,
    /// Index and time of the next grid point.
    k: usize,
    g: f64,
    tol: f64,
    done: bool,
}

impl<P, I: Iterator<Item = (f64, P)>> MergedGrid<P, I> {
    pub fn new(t0: f64, t1: f64, h: f64, mut jumps: I) -> Self {
        assert!(t1 > t0 && h > 0.0, "need t0 < t1 and h > 0");
        let cells = (((t1 - t0) / h) - 1e-9).ceil().max(1.0) as usize;
        let tol = 1e-12 * t1.abs().max(f64::MIN_POSITIVE);
        // Arrivals before the start are outside the grid's domain.
        let pending = jumps
            .by_ref()
            .find(|&(t, _)| t >= t0 - tol)
            .filter(|&(t, _)| t <= t1 + tol);
        MergedGrid {
            jumps,
            pending,
            t0,
            t1,
            h,
            cells,
            k: 0,
            g: t0,
            tol,
            done: false,
        }
    }

    #[inline]
    fn advance(&mut self) {
        if self.k >= self.cells {
            self.done = true;
        } else {
            self.k += 1;
            self.g = if self.k == self.cells {
                self.t1
            } else {
                self.t0 + self.k as f64 * self.h
            };
        }
    }

    #[inline]
    fn take_jump(&mut self) -> P {
        let (_, p) = self.pending.take().expect("pending arrival");
        let limit = self.t1 + self.tol;
        self.pending = self.jumps.next().filter(|&(t, _)| t <= limit);
        p
    }
}

impl<P, I: Iterator<Item = (f64, P)>> Iterator for MergedGrid<P, I> {
    type Item = GridPoint<P>;

    #[inline]
    fn next(&mut self) -> Option<GridPoint<P>> {
        if self.done {
            return None;
        }
        let g = self.g;
        match self.pending {
            Some((tj, _)) if tj < g - self.tol => {
                let p = self.take_jump();
                Some(GridPoint { t: tj, jump: Some(p) })
            }
            Some((tj, _)) if tj <= g + self.tol => {
                let p = self.take_jump();
                self.advance();
                Some(GridPoint { t: g, jump: Some(p) })
            }
            _ => {
                self.advance();
                Some(GridPoint { t: g, jump: None })
            }
        }
    }
}

/// Collects the merged grid for a known list of sorted jump times.
pub fn merged_grid(t0: f64, t1: f64, h: f64, jump_times: &[f64]) -> Vec<GridPoint<()>> {
    MergedGrid::new(t0, t1, h, jump_times.iter().map(|&t| (t, ()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(pts: &[GridPoint<()>]) -> Vec<f64> {
        pts.iter().map(|p| p.t).collect()
    }

    #[test]
    fn union_of_grid_and_jumps() {
        let pts = merged_grid(0.0, 1.0, 0.5, &[0.3, 0.7]);
        assert_eq!(times(&pts), vec![0.0, 0.3, 0.5, 0.7, 1.0]);
        let jumps: Vec<bool> = pts.iter().map(GridPoint::is_jump).collect();
        assert_eq!(jumps, vec![false, true, false, true, false]);
    }

    #[test]
    fn no_jumps_is_equidistant() {
        let pts = merged_grid(0.0, 1.0, 0.25, &[]);
        assert_eq!(times(&pts), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(pts.iter().all(|p| !p.is_jump()));
    }

    #[test]
    fn coincident_jump_merges() {
        let pts = merged_grid(0.0, 1.0, 0.5, &[0.5]);
        assert_eq!(times(&pts), vec![0.0, 0.5, 1.0]);
        assert!(pts[1].is_jump());
        let pts = merged_grid(0.0, 1.0, 0.5, &[0.5 + 1e-14]);
        assert_eq!(times(&pts), vec![0.0, 0.5, 1.0]);
        assert!(pts[1].is_jump());
    }

    #[test]
    fn ragged_last_cell_and_horizon() {
        let pts = merged_grid(0.0, 1.0, 0.3, &[0.95, 1.0, 1.2]);
        assert_eq!(times(&pts), vec![0.0, 0.3, 2.0 * 0.3, 3.0 * 0.3, 0.95, 1.0]);
        assert!(pts[5].is_jump());
    }

    #[test]
    fn dyadic_grids_share_points() {
        let fine = times(&merged_grid(0.0, 1.0, 1.0 / 64.0, &[]));
        let coarse = times(&merged_grid(0.0, 1.0, 1.0 / 8.0, &[]));
        for t in coarse {
            assert!(fine.contains(&t), "{t}");
        }
        let fine = times(&merged_grid(0.0, 2000.0, 0.05, &[]));
        let coarse = times(&merged_grid(0.0, 2000.0, 0.1, &[]));
        for t in coarse {
            assert!(fine.binary_search_by(|x| x.total_cmp(&t)).is_ok(), "{t}");
        }
    }
}
