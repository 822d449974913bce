//! Exact sampling of the Poisson Boolean reference model and the Poisson
//! hit-count parameters that go with it.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{steiner_coefficients, Aabb, MarkedBall, Point};
use crate::model::config::Configuration;
use crate::model::law::RadiusLaw;
use crate::model::params::ModelParams;

/// Poisson draw with mean `mean` (zero mean gives zero).
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

pub fn uniform_point<R: Rng + ?Sized>(region: &Aabb, rng: &mut R) -> Point {
    let mut p = *region.lo();
    for (i, c) in p.coords_mut().iter_mut().enumerate() {
        *c += rng.random::<f64>() * region.side(i);
    }
    p
}

/// Appends a Poisson(`z |region|`) number of i.i.d. balls centred uniformly
/// in `region` to `config`.
pub fn add_poisson_balls<R: Rng + ?Sized>(
    config: &mut Configuration,
    region: &Aabb,
    z: f64,
    law: &RadiusLaw,
    rng: &mut R,
) {
    let n = poisson_count(z * region.volume(), rng);
    for _ in 0..n {
        let center = uniform_point(region, rng);
        let radius = law.sample(rng);
        config.push_unchecked(MarkedBall { center, radius });
    }
}

/// One draw of the Poisson Boolean model `π^{z,Q}` restricted to the window.
pub fn sample_poisson_boolean<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Configuration {
    let mut c = Configuration::for_law(params.window, &params.law);
    add_poisson_balls(&mut c, &params.window, params.z, &params.law, rng);
    c
}

/// Mean number of balls of the stationary Boolean model (centres anywhere)
/// hitting `target`: `z ∫ |target ⊕ B(0,R)| Q(dR)`. Infinite iff the
/// d-moment of the law is infinite.
pub fn expected_hits(target: &Aabb, z: f64, law: &RadiusLaw) -> f64 {
    let d = target.dim();
    if !law.finite_d_moment(d) {
        return f64::INFINITY;
    }
    let coeffs = steiner_coefficients(target);
    z * coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if *c == 0.0 { 0.0 } else { c * law.moment(k) })
        .sum::<f64>()
}

/// Upper bound on the mean number of balls with radius > `h` hitting
/// `target`; balls centred outside `target ⊕ h` are among them.
pub fn omitted_hits_bound(target: &Aabb, z: f64, law: &RadiusLaw, h: f64) -> f64 {
    let coeffs = steiner_coefficients(target);
    z * coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if *c == 0.0 { 0.0 } else { c * law.tail_moment(k, h) })
        .sum::<f64>()
}

/// Trace of the stationary Boolean model simulated on a dilated window.
#[derive(Clone, Debug)]
pub struct HaloSample {
    pub config: Configuration,
    pub observe: Aabb,
    pub halo: f64,
    /// Upper bound on the mean number of omitted balls hitting `observe`;
    /// infinite for a truncated heavy-tailed simulation.
    pub omitted_bound: f64,
    /// Set when the law was truncated, i.e. the output is not an exact
    /// trace of the stationary model.
    pub biased: bool,
}

/// Simulates on `observe ⊕ h` with `h` chosen so the expected number of
/// omitted balls hitting `observe` is below `eps`. Laws without a finite
/// d-moment require `truncation`, which is then used as `h` and the output
/// is tagged biased.
pub fn sample_boolean_with_halo<R: Rng + ?Sized>(
    observe: &Aabb,
    params: &ModelParams,
    eps: f64,
    truncation: Option<f64>,
    rng: &mut R,
) -> Result<HaloSample> {
    let law = &params.law;
    let d = observe.dim();
    let (halo, omitted_bound, biased) = if !law.finite_d_moment(d) {
        let h = truncation.ok_or(Error::NonIntegrableWithoutTruncation)?;
        if !(h >= 0.0) {
            return Err(Error::InvalidParameter("truncation radius must be >= 0".into()));
        }
        (h, f64::INFINITY, true)
    } else if let Some(rmax) = law.max_radius() {
        (rmax, 0.0, false)
    } else {
        // unbounded support with a finite moment: grow then bisect
        let f = |h: f64| omitted_hits_bound(observe, params.z, law, h);
        let mut hi = law.median().max(1.0);
        while f(hi) >= eps {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (hi, f(hi), false)
    };
    let region = observe.dilate(halo);
    let mut config = Configuration::for_law(region, law);
    add_poisson_balls(&mut config, &region, params.z, law, rng);
    Ok(HaloSample {
        config,
        observe: *observe,
        halo,
        omitted_bound,
        biased,
    })
}

/// Conservative grid probe of the set covered by a union of balls.
///
/// `region` is split into `per_axis^d` cells; a cell centre `x` counts as
/// covered when some ball contains `B(x, slack)`, slack being half the cell
/// diagonal when `conservative` is set.
pub struct CoverageProbe {
    pub per_axis: usize,
    pub conservative: bool,
}

impl CoverageProbe {
    /// 512 points per axis in the plane, fewer in higher dimension so the
    /// grid stays around 2.6e5 points.
    pub fn default_for(dim: usize) -> Self {
        let per_axis = (262_144f64.powf(1.0 / dim as f64).floor() as usize).clamp(4, 512);
        CoverageProbe {
            per_axis,
            conservative: true,
        }
    }

    /// Covered mask over the grid, row-major with axis 0 fastest.
    pub fn mask<'a, I>(&self, balls: I, region: &Aabb) -> Vec<bool>
    where
        I: IntoIterator<Item = &'a MarkedBall>,
    {
        let d = region.dim();
        let n = self.per_axis;
        let h: Vec<f64> = (0..d).map(|i| region.side(i) / n as f64).collect();
        let slack = if self.conservative {
            0.5 * h.iter().map(|x| x * x).sum::<f64>().sqrt()
        } else {
            0.0
        };
        let total = n.pow(d as u32);
        let mut mask = vec![false; total];
        let lo = region.lo().coords();
        for b in balls {
            let r = b.radius - slack;
            if r < 0.0 {
                continue;
            }
            let r2 = r * r;
            let mut first = [0usize; crate::geometry::MAX_DIM];
            let mut last = [0usize; crate::geometry::MAX_DIM];
            let mut empty = false;
            for i in 0..d {
                let c = b.center.coords()[i];
                // cell centres lo + (k + 1/2) h within [c - r, c + r]
                let a = ((c - r - lo[i]) / h[i] - 0.5).ceil().max(0.0);
                let z = ((c + r - lo[i]) / h[i] - 0.5).floor().min(n as f64 - 1.0);
                if a > z {
                    empty = true;
                    break;
                }
                first[i] = a as usize;
                last[i] = z as usize;
            }
            if empty {
                continue;
            }
            let mut k = first;
            'outer: loop {
                let mut dist2 = 0.0;
                let mut flat = 0usize;
                let mut stride = 1usize;
                for i in 0..d {
                    let x = lo[i] + (k[i] as f64 + 0.5) * h[i];
                    let dx = x - b.center.coords()[i];
                    dist2 += dx * dx;
                    flat += k[i] * stride;
                    stride *= n;
                }
                if dist2 <= r2 {
                    mask[flat] = true;
                }
                for i in 0..d {
                    if k[i] < last[i] {
                        k[i] += 1;
                        continue 'outer;
                    }
                    k[i] = first[i];
                }
                break;
            }
        }
        mask
    }

    pub fn covered_fraction<'a, I>(&self, balls: I, region: &Aabb) -> f64
    where
        I: IntoIterator<Item = &'a MarkedBall>,
    {
        let m = self.mask(balls, region);
        m.iter().filter(|x| **x).count() as f64 / m.len() as f64
    }

    pub fn fully_covered<'a, I>(&self, balls: I, region: &Aabb) -> bool
    where
        I: IntoIterator<Item = &'a MarkedBall>,
    {
        self.mask(balls, region).iter().all(|x| *x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn unit() -> Aabb {
        Aabb::cube(2, 0.0, 1.0).unwrap()
    }

    #[test]
    fn expected_hits_examples() {
        assert!((expected_hits(&unit(), 1.0, &RadiusLaw::Dirac(0.0)) - 1.0).abs() < 1e-15);
        assert!(expected_hits(&unit(), 1.0, &RadiusLaw::ParetoTail { dim: 2 }).is_infinite());
        let v = expected_hits(&unit(), 1.0, &RadiusLaw::Dirac(1.0));
        assert!((v - (5.0 + std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn expected_hits_matches_monte_carlo_volume() {
        // Monte Carlo estimate of |[0,1]^2 ⊕ B(0,1)| inside [-1,2]^2
        let mut rng = stream(3, Purpose::Misc, 0);
        let n = 400_000;
        let big = Aabb::cube(2, -1.0, 2.0).unwrap();
        let mut hit = 0usize;
        for _ in 0..n {
            let p = uniform_point(&big, &mut rng);
            if unit().dist_to_point(&p) <= 1.0 {
                hit += 1;
            }
        }
        let mc = 9.0 * hit as f64 / n as f64;
        let se = 9.0 * ((hit as f64 / n as f64) * (1.0 - hit as f64 / n as f64) / n as f64).sqrt();
        let exact = expected_hits(&unit(), 1.0, &RadiusLaw::Dirac(1.0));
        assert!((mc - exact).abs() < 4.0 * se, "{mc} vs {exact}");
        assert!((exact - 8.1416).abs() < 1e-4);
    }

    #[test]
    fn zero_mean_gives_empty() {
        let mut rng = stream(3, Purpose::Misc, 1);
        assert_eq!(poisson_count(0.0, &mut rng), 0);
    }

    #[test]
    fn halo_rules() {
        let mut rng = stream(5, Purpose::Misc, 0);
        let p = ModelParams::new(2.0, 1.0, RadiusLaw::Dirac(0.7), unit()).unwrap();
        let s = sample_boolean_with_halo(&unit(), &p, 1e-3, None, &mut rng).unwrap();
        assert_eq!(s.halo, 0.7);
        assert_eq!(s.omitted_bound, 0.0);
        assert!(!s.biased);

        let p = ModelParams::new(2.0, 1.0, RadiusLaw::UniformInterval(0.0, 1.0), unit()).unwrap();
        let s = sample_boolean_with_halo(&unit(), &p, 1e-3, None, &mut rng).unwrap();
        // tail-integral oracle: no mass beyond the chosen halo
        let tail = p.law.expectation(|r| if r > s.halo { 1.0 } else { 0.0 });
        assert!(tail.abs() < 1e-12);
        assert!(s.omitted_bound < 1e-3);

        let p = ModelParams::new(2.0, 1.0, RadiusLaw::ParetoTail { dim: 2 }, unit()).unwrap();
        assert_eq!(
            sample_boolean_with_halo(&unit(), &p, 1e-3, None, &mut rng).unwrap_err(),
            Error::NonIntegrableWithoutTruncation
        );
        let s = sample_boolean_with_halo(&unit(), &p, 1e-3, Some(5.0), &mut rng).unwrap();
        assert!(s.biased);
        assert_eq!(s.config.window(), &unit().dilate(5.0));
    }

    #[test]
    fn probe_covers_disc_correctly() {
        let probe = CoverageProbe {
            per_axis: 200,
            conservative: false,
        };
        let b = MarkedBall::at(&[0.5, 0.5], 0.3);
        let f = probe.covered_fraction([&b], &unit());
        let area = std::f64::consts::PI * 0.09;
        assert!((f - area).abs() < 0.01);
        let big = MarkedBall::at(&[0.5, 0.5], 0.8);
        assert!(CoverageProbe::default_for(2).fully_covered([&big], &unit()));
        assert!(!CoverageProbe::default_for(2).fully_covered([&b], &unit()));
    }
}
