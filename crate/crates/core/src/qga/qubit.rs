use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{QgaError, Result};

/// Real amplitudes `(a, b)` of |0⟩ and |1⟩, both nonnegative, a² + b² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qubit {
    pub a: f64,
    pub b: f64,
}

impl Qubit {
    pub const SUPERPOSITION: Qubit = Qubit { a: FRAC_1_SQRT_2, b: FRAC_1_SQRT_2 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        let q = Qubit { a, b };
        if q.is_valid(1e-9) {
            Ok(q)
        } else {
            Err(QgaError::InvalidQubit { a, b })
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.a >= 0.0 && self.b >= 0.0 && (self.a * self.a + self.b * self.b - 1.0).abs() <= tol
    }

    /// Probability that measurement yields 1.
    pub fn prob_one(&self) -> f64 {
        self.b * self.b
    }

    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.prob_one()
    }

    /// The plain rotation, before any quadrant clamping.
    pub fn rotate_raw(&self, delta: f64) -> (f64, f64) {
        let (s, c) = delta.sin_cos();
        (self.a * c - self.b * s, self.a * s + self.b * c)
    }

    /// Rotates by `delta` radians, then clamps into the first quadrant and
    /// renormalizes. A zero angle is an exact identity.
    pub fn rotate(&self, delta: f64) -> Qubit {
        if delta == 0.0 {
            return *self;
        }
        let (a, b) = self.rotate_raw(delta);
        let (ca, cb) = (a.max(0.0), b.max(0.0));
        let norm = ca.hypot(cb);
        if norm == 0.0 {
            // Both components rotated out of the quadrant; snap to the nearer axis.
            return if a.abs() >= b.abs() {
                Qubit { a: 1.0, b: 0.0 }
            } else {
                Qubit { a: 0.0, b: 1.0 }
            };
        }
        Qubit { a: ca / norm, b: cb / norm }
    }
}

/// Rotation angle for one qubit: toward the best solution's bit, and only
/// when the current solution is strictly worse than the best.
pub fn delta_theta(bit: bool, best_bit: bool, worse_than_best: bool, magnitude: f64) -> f64 {
    if bit == best_bit || !worse_than_best {
        0.0
    } else if best_bit {
        magnitude
    } else {
        -magnitude
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub qubits: Vec<Qubit>,
}

impl Chromosome {
    pub fn uniform(n_q: usize) -> Self {
        Chromosome { qubits: vec![Qubit::SUPERPOSITION; n_q] }
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Samples one bitstring; the amplitudes are left untouched.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        self.qubits.iter().map(|q| q.measure(rng)).collect()
    }

    pub fn prob_one(&self) -> Vec<f64> {
        self.qubits.iter().map(Qubit::prob_one).collect()
    }

    /// Rotates every qubit by the lookup-policy angle.
    pub fn rotate_toward(&mut self, bits: &[bool], best: &[bool], worse: bool, magnitude: f64) {
        for ((q, &bit), &best_bit) in self.qubits.iter_mut().zip(bits).zip(best) {
            *q = q.rotate(delta_theta(bit, best_bit, worse, magnitude));
        }
    }
}

pub fn init_population(population: usize, n_q: usize) -> Vec<Chromosome> {
    vec![Chromosome::uniform(n_q); population]
}
