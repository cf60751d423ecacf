use std::f64::consts::TAU;

use rand::Rng;

/// A point in the primary sample space `[0, 1)^N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PssVector<const N: usize>([f64; N]);

impl<const N: usize> PssVector<N> {
    /// Returns `None` unless every component lies in `[0, 1)`.
    pub fn new(u: [f64; N]) -> Option<Self> {
        u.iter().all(|v| (0.0..1.0).contains(v)).then_some(PssVector(u))
    }

    /// Wraps each component into `[0, 1)`.
    pub fn wrapped(u: [f64; N]) -> Self {
        PssVector(u.map(wrap))
    }

    pub fn get(&self) -> [f64; N] {
        self.0
    }
}

#[inline]
fn wrap(v: f64) -> f64 {
    let w = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Perturbation scale `s = s2 * exp(-ln(s2 / s1) * U)`, log-uniform on `(s1, s2]`.
#[inline]
pub fn step_scale(s1: f64, s2: f64, uniform: f64) -> f64 {
    if s1 == s2 {
        return s2;
    }
    s2 * (-(s2 / s1).ln() * uniform).exp()
}

/// Gaussian perturbation on the unit torus.
///
/// Each component receives a zero-mean Gaussian step whose scale is drawn
/// afresh from [`step_scale`]. The kernel is symmetric because the step
/// distribution is symmetric and wrapping is an isometry of the torus.
/// Consumes exactly `N + 2 * ceil(N / 2)` uniforms.
pub fn perturb<const N: usize, R: Rng + ?Sized>(u: &PssVector<N>, s1: f64, s2: f64, rng: &mut R) -> PssVector<N> {
    let mut out = u.0;
    let mut normals = [0.0; N];
    let mut i = 0;
    while i < N {
        let (a, b) = box_muller(rng);
        normals[i] = a;
        if i + 1 < N {
            normals[i + 1] = b;
        }
        i += 2;
    }
    for (v, z) in out.iter_mut().zip(normals) {
        let s = step_scale(s1, s2, rng.random());
        *v = wrap(*v + s * z);
    }
    PssVector(out)
}

/// Two independent standard normals from two uniforms.
fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}
