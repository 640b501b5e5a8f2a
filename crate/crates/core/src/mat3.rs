//! Minimal complex 3x3 matrix arithmetic for single-atom density matrices
//! and Hamiltonians over the basis {g, s, r}.

use num_complex::Complex64 as C64;

pub const G: usize = 0;
pub const S: usize = 1;
pub const R: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[C64; 3]; 3]);

impl Mat3 {
    pub fn zeros() -> Self {
        Mat3([[C64::new(0.0, 0.0); 3]; 3])
    }

    /// |a><a| projector.
    pub fn projector(a: usize) -> Self {
        let mut m = Self::zeros();
        m.0[a][a] = C64::new(1.0, 0.0);
        m
    }

    /// Pure-state density matrix |a><a|.
    pub fn pure(a: usize) -> Self {
        Self::projector(a)
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += self.0[i][k] * other.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += other.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] -= other.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, c: C64) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] *= c;
            }
        }
        m
    }

    pub fn scale_re(&self, c: f64) -> Mat3 {
        self.scale(C64::new(c, 0.0))
    }

    /// [A, B] = AB - BA.
    pub fn commutator(&self, other: &Mat3) -> Mat3 {
        self.mul(other).sub(&other.mul(self))
    }

    /// {A, B} = AB + BA.
    pub fn anticommutator(&self, other: &Mat3) -> Mat3 {
        self.mul(other).add(&other.mul(self))
    }

    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 3] {
        let h = self.add(&self.adjoint()).scale_re(0.5);
        let m = nalgebra::Matrix3::from_fn(|i, j| h.0[i][j]);
        let eig = m.symmetric_eigen();
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}
