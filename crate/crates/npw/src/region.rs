//! Axis-aligned boxes used for sampling, sup norms and L¹ integrals.

use rand::Rng;

/// A compact box, one `(lo, hi)` interval per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        for &(lo, hi) in &bounds {
            assert!(lo <= hi, "degenerate region bound ({lo}, {hi})");
        }
        Region { bounds }
    }

    /// The cube [-r, r]^dim.
    pub fn centered_cube(dim: usize, r: f64) -> Self {
        Region::new(vec![(-r, r); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                }
            })
            .collect()
    }

    /// Uniform tensor grid with `pts` nodes per axis (endpoints included).
    pub fn grid(&self, pts: usize) -> Vec<Vec<f64>> {
        assert!(pts >= 2);
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                (0..pts)
                    .map(|i| lo + (hi - lo) * i as f64 / (pts - 1) as f64)
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &v in axis {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_covers_endpoints() {
        let r = Region::new(vec![(0.0, 1.0), (-1.0, 1.0)]);
        let g = r.grid(3);
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![0.0, -1.0]));
        assert!(g.contains(&vec![1.0, 1.0]));
    }

    #[test]
    fn samples_stay_inside() {
        let r = Region::centered_cube(3, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = r.sample(&mut rng);
            assert!(p.iter().all(|v| v.abs() <= 2.0));
        }
    }
}
