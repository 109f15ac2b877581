//! Brute-force time averaging: Dyson terms from RK4 on the explicit `H(t)`, then a
//! trapezoid convolution with a Gaussian-windowed sinc low-pass kernel at `t = 0`.

use catqutrit::linalg::{c, r, CMat, Space, C64};
use catqutrit::physmodel::{average_hamiltonian, AveragingOrder, HarmonicSeries};
use rand::Rng;

pub struct Quadrature {
    /// Gaussian window width.
    pub window: f64,
    pub step: f64,
    /// Integration range in units of `window`.
    pub span: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { window: 40.0, step: 0.004, span: 8.0 }
    }
}

pub struct Averages {
    pub second: CMat,
    pub third: CMat,
}

fn hamiltonian(terms: &[(CMat, f64)], t: f64) -> CMat {
    let d = terms[0].0.nrows();
    terms.iter().fold(CMat::zeros(d, d), |acc, (a, w)| acc + a * C64::from_polar(1.0, w * t))
}

fn kernel(omega0: f64, window: f64, t: f64) -> f64 {
    let sinc = if t == 0.0 { omega0 / std::f64::consts::PI } else { (omega0 * t).sin() / (std::f64::consts::PI * t) };
    sinc * (-t * t / (2.0 * window * window)).exp()
}

struct Sums {
    hu1: CMat,
    u1h: CMat,
    u1: CMat,
    hu2: CMat,
}

impl Sums {
    fn add(&mut self, h: &CMat, u1: &CMat, u2: &CMat, w: f64) {
        let w = r(w);
        self.hu1 += h * u1 * w;
        self.u1h += u1 * h * w;
        self.u1 += u1 * w;
        self.hu2 += h * u2 * w;
    }
}

impl Quadrature {
    /// `½ avg[H U₁ − U₁ H]` and `½ avg[H U₂] + h.c. − ½(avg[H U₁] avg[U₁] + avg[U₁] avg[U₁ H])`
    /// at `t = 0`, with `U₁ = −i∫₀ᵗ H` and `U₂ = −i∫₀ᵗ H U₁`.
    pub fn average(&self, terms: &[(CMat, f64)], omega0: f64) -> Averages {
        let d = terms[0].0.nrows();
        let z = CMat::zeros(d, d);
        let mut sums = Sums { hu1: z.clone(), u1h: z.clone(), u1: z.clone(), hu2: z.clone() };
        let n = (self.span * self.window / self.step).round() as usize;
        let mi = c(0.0, -1.0);
        let h0 = hamiltonian(terms, 0.0);
        sums.add(&h0, &z, &z, self.step * kernel(omega0, self.window, 0.0));
        for dir in [1.0, -1.0] {
            let h = dir * self.step;
            let (mut u1, mut u2) = (z.clone(), z.clone());
            let mut t = 0.0;
            for k in 1..=n {
                let ha = hamiltonian(terms, t);
                let hm = hamiltonian(terms, t + 0.5 * h);
                let hb = hamiltonian(terms, t + h);
                let f = |hh: &CMat, v1: &CMat| (hh * mi, hh * v1 * mi);
                let (k1a, k1b) = f(&ha, &u1);
                let (k2a, k2b) = f(&hm, &(&u1 + &k1a * r(0.5 * h)));
                let (k3a, k3b) = f(&hm, &(&u1 + &k2a * r(0.5 * h)));
                let (k4a, k4b) = f(&hb, &(&u1 + &k3a * r(h)));
                u1 += (k1a + k2a * r(2.0) + k3a * r(2.0) + k4a) * r(h / 6.0);
                u2 += (k1b + k2b * r(2.0) + k3b * r(2.0) + k4b) * r(h / 6.0);
                t = k as f64 * h;
                let weight = if k == n { 0.5 } else { 1.0 } * self.step * kernel(omega0, self.window, t);
                sums.add(&hb, &u1, &u2, weight);
            }
        }
        let half = r(0.5);
        let second = (&sums.hu1 - &sums.u1h) * half;
        let third = (&sums.hu2 + sums.hu2.adjoint()) * half - (&sums.hu1 * &sums.u1 + &sums.u1 * &sums.u1h) * half;
        Averages { second, third }
    }
}

pub const OMEGA0: f64 = 1.0;

/// Rejected if a nonzero pair sum passes the filter or any
/// sum of one to three frequencies lands within 0.25 of the cutoff.
pub fn admissible(freqs: &[f64]) -> bool {
    let n = freqs.len();
    for i in 0..n {
        for j in 0..n {
            let s = freqs[i] + freqs[j];
            if s.abs() > 1e-12 && s.abs() < OMEGA0 {
                return false;
            }
            if (s.abs() - OMEGA0).abs() < 0.25 {
                return false;
            }
            for k in 0..n {
                if ((s + freqs[k]).abs() - OMEGA0).abs() < 0.25 {
                    return false;
                }
            }
        }
        if (freqs[i].abs() - OMEGA0).abs() < 0.25 {
            return false;
        }
    }
    true
}

fn random_op(g: &mut impl Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| c(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0)))
}

fn random_frequency(g: &mut impl Rng) -> f64 {
    g.gen_range(2.0..6.0) * if g.gen_bool(0.5) { 1.0 } else { -1.0 }
}

/// Up to three terms: a Hermitian pair plus a spectator, a triple whose frequencies
/// sum to zero (nonzero third order), or three unrelated harmonics.
pub fn random_series(g: &mut impl Rng) -> Vec<(CMat, f64)> {
    loop {
        let d = g.gen_range(2..=6);
        let terms = match g.gen_range(0..3) {
            0 => {
                let a = random_op(g, d);
                let w = random_frequency(g);
                vec![(a.adjoint(), -w), (a, w), (random_op(g, d), random_frequency(g))]
            }
            1 => {
                let (w1, w2) = (g.gen_range(2.0..4.0), g.gen_range(2.0..4.0));
                vec![(random_op(g, d), w1), (random_op(g, d), w2), (random_op(g, d), -(w1 + w2))]
            }
            _ => (0..3).map(|_| (random_op(g, d), random_frequency(g))).collect(),
        };
        let freqs: Vec<f64> = terms.iter().map(|t| t.1).collect();
        if admissible(&freqs) {
            return terms;
        }
    }
}

/// Largest deviation (Frobenius) between the harmonic algebra and the quadrature
/// oracle over `samples` random series, second and third order.
pub fn max_oracle_deviation(g: &mut impl Rng, samples: usize) -> (f64, f64) {
    let quad = Quadrature::default();
    let (mut e2, mut e3) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let terms = random_series(g);
        let d = terms[0].0.nrows();
        let mut series = HarmonicSeries::new(Space::generic(d));
        for (a, w) in &terms {
            series.push(a.clone(), *w).expect("matching dimensions");
        }
        let algebra = average_hamiltonian(&series, AveragingOrder::Third, OMEGA0).expect("admissible series");
        let oracle = quad.average(&terms, OMEGA0);
        e2 = e2.max((&algebra.second - &oracle.second).norm());
        e3 = e3.max((&algebra.third - &oracle.third).norm());
    }
    (e2, e3)
}
