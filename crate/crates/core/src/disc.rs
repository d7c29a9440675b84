//! Smallest enclosing disc of a planar point set (randomised incremental construction).

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center: C64,
    pub radius: f64,
}

impl Disc {
    fn contains(&self, p: C64) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-300
    }

    fn from_two(a: C64, b: C64) -> Self {
        Disc {
            center: (a + b) / 2.0,
            radius: (a - b).norm() / 2.0,
        }
    }

    fn from_three(a: C64, b: C64, c: C64) -> Self {
        let (bx, cx) = (b - a, c - a);
        let d = 2.0 * (bx.re * cx.im - bx.im * cx.re);
        if d.abs() < 1e-300 {
            // Collinear: the farthest pair spans the disc.
            let pairs = [(a, b), (a, c), (b, c)];
            let (p, q) = pairs
                .into_iter()
                .max_by(|x, y| (x.0 - x.1).norm().total_cmp(&(y.0 - y.1).norm()))
                .expect("three pairs");
            return Self::from_two(p, q);
        }
        let (b2, c2) = (bx.norm_sqr(), cx.norm_sqr());
        let ux = (cx.im * b2 - bx.im * c2) / d;
        let uy = (bx.re * c2 - cx.re * b2) / d;
        let u = C64::new(ux, uy);
        Disc {
            center: a + u,
            radius: u.norm(),
        }
    }
}

/// Exact minimal enclosing disc; the shuffle is seeded so the result is reproducible.
pub fn enclosing_disc(points: &[C64]) -> Disc {
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut d = match pts.first() {
        None => return Disc { center: C64::new(0.0, 0.0), radius: 0.0 },
        Some(&p) => Disc { center: p, radius: 0.0 },
    };
    for i in 1..pts.len() {
        if d.contains(pts[i]) {
            continue;
        }
        d = Disc { center: pts[i], radius: 0.0 };
        for j in 0..i {
            if d.contains(pts[j]) {
                continue;
            }
            d = Disc::from_two(pts[i], pts[j]);
            for k in 0..j {
                if !d.contains(pts[k]) {
                    d = Disc::from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    d
}
