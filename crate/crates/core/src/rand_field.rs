//! The random diffusion coefficient: a four-mode trigonometric expansion
//! with uniformly distributed amplitudes, pushed through an exponential so
//! the field stays positive, plus Gauss–Legendre grids for averaging over
//! the parameter box.

use rand::Rng;

/// Scale applied to the fluctuating part of the log-coefficient.
pub fn field_variance() -> f64 {
    (-1.125f64).exp()
}

/// One realization of the four uniform parameters, each in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleVector {
    pub xi: [f64; 4],
}

impl SampleVector {
    pub const ZERO: SampleVector = SampleVector { xi: [0.0; 4] };

    pub fn new(xi: [f64; 4]) -> Self {
        SampleVector { xi }
    }
}

/// Diffusion coefficient at a point for one parameter realization.
pub fn eval_coeff(x: f64, y: f64, s: &SampleVector) -> f64 {
    let var = field_variance();
    let modes = s.xi[0] * (1.1 * std::f64::consts::PI * x).cos()
        + s.xi[1] * (1.2 * std::f64::consts::PI * x).cos()
        + s.xi[2] * (1.3 * std::f64::consts::PI * y).sin()
        + s.xi[3] * (1.4 * std::f64::consts::PI * y).sin();
    1.0 + (var * modes).exp()
}

/// Draws the four parameters independently and uniformly from `[-1, 1]`.
pub fn sample_xi<R: Rng>(rng: &mut R) -> SampleVector {
    let mut xi = [0.0; 4];
    for slot in &mut xi {
        *slot = rng.gen_range(-1.0..=1.0);
    }
    SampleVector { xi }
}

/// Tensor Gauss–Legendre rule on the parameter box `[-1, 1]^4`, with the
/// weights normalized so they sum to one (quadrature for an expectation
/// under the uniform distribution).
pub struct QuadratureGrid {
    pub nodes: Vec<SampleVector>,
    pub weights: Vec<f64>,
}

pub fn gl_grid(q: usize) -> QuadratureGrid {
    assert!(q >= 1, "quadrature order must be positive");
    let (x1, w1) = gauss_legendre_1d(q);
    let mut nodes = Vec::with_capacity(q * q * q * q);
    let mut weights = Vec::with_capacity(q * q * q * q);
    for i0 in 0..q {
        for i1 in 0..q {
            for i2 in 0..q {
                for i3 in 0..q {
                    nodes.push(SampleVector::new([x1[i0], x1[i1], x1[i2], x1[i3]]));
                    weights.push(w1[i0] * w1[i1] * w1[i2] * w1[i3]);
                }
            }
        }
    }
    QuadratureGrid { nodes, weights }
}

/// Gauss–Legendre nodes on `[-1, 1]` (ascending) and weights normalized to
/// the uniform probability measure (sum 1, i.e. classical weights over 2).
pub fn gauss_legendre_1d(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        // Chebyshev-flavored initial guess, then Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-14 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(q, x);
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
